//! Special functions: integer-order Bessel functions of the first kind,
//! generalized Laguerre polynomials and log-factorials.

/// Bessel function of the first kind `J_n(x)` for integer order.
///
/// Small arguments use the power series. Otherwise Miller's backward
/// recurrence is normalized with `J_0 + 2 Σ J_2k = 1`.
pub fn bessel_j(n: i32, x: f64) -> f64 {
    if n < 0 {
        let v = bessel_j(-n, x);
        return if n % 2 == 0 { v } else { -v };
    }
    if x < 0.0 {
        let v = bessel_j(n, -x);
        return if n % 2 == 0 { v } else { -v };
    }
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let n = n as usize;
    if x < 0.25 {
        return series(n, x);
    }
    miller(n, x)
}

fn series(n: usize, x: f64) -> f64 {
    let h = 0.5 * x;
    let mut term = (n as f64 * h.ln() - ln_factorial(n)).exp();
    let mut sum = term;
    let q = -h * h;
    for k in 1..200 {
        term *= q / (k as f64 * (k + n) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn miller(n: usize, x: f64) -> f64 {
    let top = n.max(x as usize);
    let mut m = top + 20 + (40.0 * (top as f64 + 1.0)).sqrt() as usize;
    if m % 2 == 1 {
        m += 1;
    }
    let two_over_x = 2.0 / x;
    let (mut jp1, mut j) = (0.0_f64, 1e-300_f64);
    let mut result = 0.0;
    let mut norm = 0.0;
    for k in (1..=m).rev() {
        // j holds J_k, jp1 holds J_{k+1}
        let jm1 = k as f64 * two_over_x * j - jp1;
        jp1 = j;
        j = jm1;
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp1 *= 1e-250;
            result *= 1e-250;
            norm *= 1e-250;
        }
        let idx = k - 1;
        if idx == n {
            result = j;
        }
        if idx % 2 == 0 && idx > 0 {
            norm += 2.0 * j;
        }
    }
    norm += j;
    if n == 0 {
        result = j;
    }
    result / norm
}

/// Generalized Laguerre polynomial `L_n^{(a)}(x)` by three-term recurrence.
pub fn laguerre(n: usize, a: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 1.0 + a - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - x) * cur - (kf + a) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `ln(n!)`, exact summation up to 256 and Stirling beyond.
pub fn ln_factorial(n: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    if n <= 256 {
        return (2..=n).map(|k| (k as f64).ln()).sum();
    }
    let x = n as f64 + 1.0;
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x)
        - 1.0 / (360.0 * x.powi(3))
        + 1.0 / (1260.0 * x.powi(5))
}

/// Greatest common divisor.
pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}
