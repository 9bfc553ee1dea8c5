use nlre::dynamics::NLREConfig;
use nlre::fock::wigner::linspace;
use nlre::fock::{FockSpace, SidebandDrive};
use nlre::nlre::{stabilize, StabilizeOptions, STABILIZATION_SETS};
use nlre::readout::class_purity;
use nlre::tomography::record::sdd_probabilities;
use nlre::tomography::*;
use nlre::{CMatrix, Complex64, OperatorMatrix};

fn steady(cfg: &NLREConfig) -> OperatorMatrix {
    stabilize(cfg, &StabilizeOptions::default()).unwrap().rho_osc
}

/// `|ψ(t)⟩` under `H` by fixed-step RK4 on the state vector.
fn rk4(h: &CMatrix, psi: &[Complex64], t: f64, steps: usize) -> Vec<Complex64> {
    let i = Complex64::new(0.0, 1.0);
    let dt = t / steps as f64;
    let n = psi.len();
    let deriv = |v: &[Complex64]| -> Vec<Complex64> {
        (0..n)
            .map(|r| -i * (0..n).map(|c| h[(r, c)] * v[c]).sum::<Complex64>())
            .collect()
    };
    let axpy = |v: &[Complex64], k: &[Complex64], a: f64| -> Vec<Complex64> {
        v.iter().zip(k).map(|(x, y)| x + y * a).collect()
    };
    let mut v = psi.to_vec();
    for _ in 0..steps {
        let k1 = deriv(&v);
        let k2 = deriv(&axpy(&v, &k1, dt / 2.0));
        let k3 = deriv(&axpy(&v, &k2, dt / 2.0));
        let k4 = deriv(&axpy(&v, &k3, dt));
        for r in 0..n {
            v[r] += (k1[r] + 2.0 * k2[r] + 2.0 * k3[r] + k4[r]) * (dt / 6.0);
        }
    }
    v
}

#[test]
fn vacuum_overlap_matches_bichromatic_drive() {
    let (dim, eta, s) = (40, 0.5, 1.0);
    let space = FockSpace::new(dim, eta).unwrap();
    // red and blue first-order sidebands with spin phase π give
    // H = −(s/2)σx⊗G, so a pulse of length t has area α = s·t/2
    let mut h = CMatrix::zeros(2 * dim, 2 * dim);
    for order in [1, -1] {
        let drive = SidebandDrive {
            spin_phase: std::f64::consts::PI,
            ..SidebandDrive::new(order, s)
        };
        h += nlre::fock::sideband_hamiltonian(&space, &drive).unwrap().matrix();
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut plus = vec![Complex64::new(0.0, 0.0); 2 * dim];
    plus[0] = Complex64::new(r, 0.0);
    plus[dim] = Complex64::new(r, 0.0);
    for alpha in [0.3, 1.0, 2.2, 3.5] {
        // two SDD pulses of area α/2 each
        let t_half = alpha / s;
        let mid = rk4(&h, &plus, t_half, 4000);
        let psi = rk4(&h, &mid, t_half, 4000);
        let xi_oracle: Complex64 = plus.iter().zip(&psi).map(|(a, b)| a.conj() * b).sum();
        let xi = overlap_matrix(&space, Complex64::new(alpha, 0.0))[(0, 0)];
        assert!((xi - xi_oracle).norm() < 1e-8, "α={alpha}: {xi} vs {xi_oracle}");
    }
}

#[test]
fn flop_fit_recovers_class_weights_of_steady_state() {
    let set = STABILIZATION_SETS[1];
    let rho = steady(&set.config());
    let truth = rho.diagonal_real();
    let settings = FlopSettings {
        order: 4,
        eta: set.eta,
        times: linspace(0.0, 600.0, 200),
        shots: 300,
        g0: 1.0,
        gamma_decay: 1e-3,
    };
    for seed in 0..3 {
        let data = simulate_flops(&rho, &settings, seed);
        let fit = fock_fit(&data, &FockFitOptions::default()).unwrap();
        for class in 0..3 {
            let got = class_purity(&fit.populations, 3, class);
            let want = class_purity(&truth, 3, class);
            assert!((got - want).abs() < 0.05, "seed {seed} class {class}: {got} vs {want}");
        }
    }
}

/// Second difference of the NLL along `dir`.
fn curvature(lik: &Likelihood, rho: &OperatorMatrix, dir: &OperatorMatrix, h: f64) -> f64 {
    let plus = rho + &dir.scale(h);
    let minus = rho + &dir.scale(-h);
    (lik.nll(&plus) - 2.0 * lik.nll(rho) + lik.nll(&minus)) / (h * h)
}

#[test]
fn flop_data_never_reduces_curvature() {
    let cfg = STABILIZATION_SETS[1].config();
    let rho = steady(&cfg);
    let dim = 12;
    let sdd = simulate_sdd(&rho, cfg.eta, &SddGrid::square(3.0, 9, 300), 1).unwrap();
    let flops = simulate_flops(
        &rho,
        &FlopSettings {
            order: 4,
            eta: cfg.eta,
            times: linspace(0.0, 600.0, 100),
            shots: 300,
            g0: 1.0,
            gamma_decay: 1e-3,
        },
        2,
    );
    let sdd_only = MeasurementRecord {
        seed: None,
        sdd: Some(sdd.clone()),
        flops: None,
    };
    let both = MeasurementRecord {
        flops: Some(flops),
        ..sdd_only.clone()
    };
    let opts = MleOptions {
        dim,
        iterations: 4000,
        ..MleOptions::default()
    };
    let at = mle_reconstruct(&sdd_only, &opts).unwrap().rho;
    let (l1, l2) = (Likelihood::new(&sdd_only, dim).unwrap(), Likelihood::new(&both, dim).unwrap());
    // traceless Hermitian directions: population moves and a coherence
    let mut dirs = Vec::new();
    for n in 1..6 {
        let mut d = vec![0.0; dim];
        d[0] = -1.0;
        d[n] = 1.0;
        dirs.push(OperatorMatrix::from_diagonal(&d));
    }
    let mut c = CMatrix::zeros(dim, dim);
    c[(0, 3)] = Complex64::new(1.0, 0.0);
    c[(3, 0)] = Complex64::new(1.0, 0.0);
    dirs.push(OperatorMatrix::new(c));
    for dir in &dirs {
        let (a, b) = (curvature(&l1, &at, dir, 1e-4), curvature(&l2, &at, dir, 1e-4));
        assert!(b >= a - 1e-3 * a.abs().max(1.0), "curvature {b} < {a}");
    }
}

#[test]
fn measured_sdd_map_has_fourfold_symmetry() {
    let cfg = STABILIZATION_SETS[2].config();
    let rho = steady(&cfg);
    let m = 15;
    let grid = SddGrid::square(3.0, m, 4000);
    let exact = sdd_probabilities(&rho, cfg.eta, &grid.alphas).unwrap();
    let data = simulate_sdd(&rho, cfg.eta, &grid, 9).unwrap();
    let re_xi: Vec<f64> = data
        .points
        .iter()
        .map(|p| 2.0 * p.up as f64 / p.shots as f64 - 1.0)
        .collect();
    // α → iα maps grid index (row p, column x) to (x, m−1−p)
    let rot = |k: usize| {
        let (p, x) = (k / m, k % m);
        x * m + (m - 1 - p)
    };
    let mut dev = 0.0;
    for k in 0..m * m {
        assert!((exact[k] - exact[rot(k)]).abs() < 1e-10);
        dev += (re_xi[k] - re_xi[rot(k)]).abs();
    }
    let mean_dev = dev / (m * m) as f64;
    // shot noise on a difference of two estimates with N = 4000
    assert!(mean_dev < 0.03, "mean deviation {mean_dev}");
    // and a π/4 rotation is not a symmetry
    let turn = Complex64::from_polar(1.0, 0.25 * std::f64::consts::PI);
    let alphas45: Vec<Complex64> = grid.alphas.iter().map(|a| a * turn).collect();
    let p45 = sdd_probabilities(&rho, cfg.eta, &alphas45).unwrap();
    let gap = exact.iter().zip(&p45).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(gap > 0.05, "{gap}");
}

#[test]
fn record_text_survives_round_trip() {
    let rho = nlre::fock::thermal_state(10, 0.5);
    let rec = MeasurementRecord {
        seed: Some(3),
        sdd: Some(simulate_sdd(&rho, 0.4, &SddGrid::line(2.0, 11, 50), 3).unwrap()),
        flops: Some(simulate_flops(
            &rho,
            &FlopSettings {
                order: 1,
                eta: 0.4,
                times: linspace(0.0, 20.0, 15),
                shots: 50,
                g0: 1.1,
                gamma_decay: 2e-3,
            },
            4,
        )),
    };
    let back = MeasurementRecord::from_text(&rec.to_text()).unwrap();
    assert_eq!(back, rec);
}
