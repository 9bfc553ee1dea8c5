//! The six pipelines behind the subcommands.

use std::path::{Path, PathBuf};

use nlre::dynamics::{dark_states, DarkStateBasis, NLREConfig, SteadyCriteria, TruncationGuard};
use nlre::fock::wigner::linspace;
use nlre::fock::{fock_distribution, Spin};
use nlre::linalg::{fidelity, trace_distance};
use nlre::nlre::{class_weights, fock_moments, parameter_sweep, stabilize, StabilizeOptions, Stabilized};
use nlre::readout::{
    class_purity, default_window, fock_fidelity, optimize_discrimination, postselect, postselect_branches,
    readout_input, revival_time, spin_return_probability, Couplings, Discrimination, LinearCouplingModel,
    RevivalPlan,
};
use nlre::tomography::{
    bootstrap, fock_fit, mle_reconstruct, simulate_flops, simulate_sdd, BootstrapOptions, FlopSettings,
    FockFitOptions, MeasurementRecord, Resampling, SddGrid,
};
use nlre::{NlreError, OperatorMatrix};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::{Branch, GridKind, ReadoutSection, RunConfig, StabilizeSection, SystemConfig};
use crate::error::CliError;
use crate::output::{Artifact, Emitter};

/// Independent sub-seed for a named stochastic step.
pub fn fork_seed(seed: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("digest has 32 bytes"))
}

fn seconds(cfg: &RunConfig, tau: f64) -> Option<f64> {
    cfg.unit_hz.map(|hz| tau / (2.0 * std::f64::consts::PI * hz))
}

fn stabilize_options(s: &StabilizeSection) -> StabilizeOptions {
    let mut criteria = SteadyCriteria {
        rel_tol: s.rel_tol,
        max_time: s.max_time,
        fixed_time: s.fixed_time,
        ..SteadyCriteria::default()
    };
    if !s.truncation_guard {
        criteria.control.guard = TruncationGuard::disabled();
    }
    StabilizeOptions {
        model: s.model,
        initial_nbar: s.initial_nbar,
        criteria,
        wigner: (s.wigner_points > 0).then_some((s.wigner_extent, s.wigner_points)),
    }
}

fn run_stabilization(cfg: &RunConfig, wigner: bool) -> Result<Stabilized, CliError> {
    let sys = cfg.system.resolve()?;
    let mut opts = stabilize_options(&cfg.stabilize);
    if !wigner {
        opts.wigner = None;
    }
    stabilize(&sys, &opts).map_err(CliError::numeric("stabilize"))
}

fn class_rows(dist: &[f64], d: usize) -> Vec<Vec<String>> {
    dist.iter()
        .enumerate()
        .map(|(n, p)| vec![n.to_string(), p.to_string(), (n % d).to_string()])
        .collect()
}

fn basis_summary(basis: &DarkStateBasis) -> serde_json::Value {
    json!({
        "d": basis.d,
        "window": basis.window,
        "protected_classes": basis.protected_classes(),
        "max_residual": basis.max_residual(),
        "recursion_mismatch": basis.recursion_mismatch(),
    })
}

fn stabilize_cmd(cfg: &RunConfig, em: &mut Emitter) -> Result<(), CliError> {
    let st = run_stabilization(cfg, true)?;
    let d = st.config.d();
    let mut report = st.report.clone();
    let wigner = report.wigner.take();
    em.json(
        "report.json",
        "stabilize-report",
        &json!({
            "system": st.config,
            "crossing": st.crossing,
            "report": report,
            "class_weights": class_weights(&report.fock_dist, d),
            "dark_states": basis_summary(&st.basis),
            "steady": {
                "time": st.steady.time,
                "time_seconds": seconds(cfg, st.steady.time),
                "residual": st.steady.residual,
                "backend": st.steady.backend,
                "diagnostics": st.steady.diagnostics,
            },
        }),
    )?;
    em.csv("fock.csv", "fock-distribution", &["n", "population", "class"], class_rows(&report.fock_dist, d))?;
    if let Some(w) = wigner {
        let rows = w.points.iter().zip(&w.values).map(|(&(x, p), v)| vec![x, p, *v]);
        em.csv("wigner.csv", "wigner", &["x", "p", "w"], rows)?;
    }
    em.json("state.json", "state", &st.rho_osc)?;
    Ok(())
}

/// Resolved configuration of each `[[sweep.points]]` entry.
pub fn sweep_configs(cfg: &RunConfig) -> Result<Vec<NLREConfig>, CliError> {
    cfg.sweep
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut sys: SystemConfig = cfg.system.clone();
            sys.r = p.r.unwrap_or(sys.r);
            sys.l = p.l.unwrap_or(sys.l);
            sys.eta = p.eta.unwrap_or(sys.eta);
            if p.g_l.is_some() {
                sys.g_l = p.g_l;
                sys.n_star = None;
            }
            if p.n_star.is_some() {
                sys.n_star = p.n_star;
                sys.g_l = None;
            }
            sys.resolve()
                .map_err(|e| CliError::Config(format!("sweep.points[{i}]: {e}")))
        })
        .collect()
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn sweep_cmd(cfg: &RunConfig, em: &mut Emitter) -> Result<(), CliError> {
    let configs = sweep_configs(cfg)?;
    let mut opts = stabilize_options(&cfg.stabilize);
    opts.wigner = None;
    let points = parameter_sweep(&configs, &opts);
    let rows = points.iter().enumerate().map(|(i, p)| {
        let rep = p.report.as_ref();
        vec![
            i.to_string(),
            p.config.r.to_string(),
            p.config.l.to_string(),
            p.config.eta.to_string(),
            (p.config.g_l / p.config.g_r).to_string(),
            opt(p.crossing.map(|c| c.n_star)),
            opt(rep.map(|r| r.nbar)),
            opt(rep.map(|r| r.var_n)),
            opt(rep.map(|r| r.mandel_q)),
            opt(rep.and_then(|r| r.manifold_total)),
            opt(p.time),
            p.error.clone().unwrap_or_default(),
        ]
    });
    em.csv(
        "sweep.csv",
        "sweep",
        &[
            "index", "r", "l", "eta", "g_l_over_g_r", "n_star", "nbar", "var_n", "mandel_q", "manifold_total", "time",
            "error",
        ],
        rows.collect::<Vec<_>>(),
    )?;
    em.json("sweep.json", "sweep", &points)?;
    Ok(())
}

/// Oscillator state stored by `stabilize` or `tomo-simulate`.
pub fn load_state(path: &Path) -> Result<OperatorMatrix, CliError> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    let doc: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let body = doc.get("result").cloned().unwrap_or(doc);
    serde_json::from_value(body).map_err(|e| CliError::Config(format!("{}: not a state: {e}", path.display())))
}

fn tomo_simulate_cmd(cfg: &RunConfig, em: &mut Emitter) -> Result<(), CliError> {
    let seed = cfg.seed()?;
    let t = &cfg.tomography;
    let sys = cfg.system.resolve()?;
    let rho = match &t.reference {
        Some(p) => load_state(p)?,
        None => run_stabilization(cfg, false)?.rho_osc,
    };
    if t.points == 0 || t.shots == 0 {
        return Err(CliError::Config("tomography.points and tomography.shots must be positive".into()));
    }
    let grid = match t.grid {
        GridKind::Line => SddGrid::line(t.extent, t.points, t.shots),
        GridKind::Square => SddGrid::square(t.extent, t.points, t.shots),
    };
    let sdd = simulate_sdd(&rho, sys.eta, &grid, fork_seed(seed, "sdd")).map_err(CliError::numeric("tomo-simulate"))?;
    let flops = if t.flops {
        if t.flop_points < 2 || t.flop_shots == 0 || !(t.flop_t_max > 0.0) {
            return Err(CliError::Config("tomography flop settings need >= 2 points, shots and t_max > 0".into()));
        }
        let settings = FlopSettings {
            order: t.flop_order,
            eta: sys.eta,
            times: linspace(0.0, t.flop_t_max, t.flop_points),
            shots: t.flop_shots,
            g0: t.g0,
            gamma_decay: t.gamma_decay,
        };
        Some(simulate_flops(&rho, &settings, fork_seed(seed, "flops")))
    } else {
        None
    };
    let record = MeasurementRecord {
        seed: Some(seed),
        sdd: Some(sdd),
        flops,
    };
    em.text("record.txt", "record", &record.to_text())?;
    em.json("state.json", "state", &rho)?;
    let sdd = record.sdd.as_ref().expect("just simulated");
    em.csv(
        "sdd.csv",
        "sdd",
        &["alpha_re", "alpha_im", "up", "shots"],
        sdd.points
            .iter()
            .map(|p| vec![p.alpha_re.to_string(), p.alpha_im.to_string(), p.up.to_string(), p.shots.to_string()]),
    )?;
    if let Some(f) = &record.flops {
        em.csv(
            "flops.csv",
            "flops",
            &["time", "up", "shots"],
            f.points
                .iter()
                .map(|p| vec![p.time.to_string(), p.up.to_string(), p.shots.to_string()]),
        )?;
    }
    Ok(())
}

fn reference_path(cfg: &RunConfig, out: &Path, record: &Path) -> Option<PathBuf> {
    if let Some(p) = &cfg.tomography.reference {
        return Some(p.clone());
    }
    [record.with_file_name("state.json"), out.join("state.json")]
        .into_iter()
        .find(|p| p.exists())
}

fn tomo_reconstruct_cmd(cfg: &RunConfig, em: &mut Emitter) -> Result<(), CliError> {
    let t = &cfg.tomography;
    let sys = cfg.system.resolve()?;
    let d = sys.d();
    let record_path = t.record.clone().unwrap_or_else(|| em.dir().join("record.txt"));
    let record = MeasurementRecord::load(&record_path).map_err(|e| match e {
        NlreError::Io(source) => CliError::Io {
            path: record_path.display().to_string(),
            source,
        },
        other => CliError::Config(format!("{}: {other}", record_path.display())),
    })?;
    let reference = reference_path(cfg, em.dir(), &record_path)
        .map(|p| load_state(&p))
        .transpose()?;

    let mut mle = t.mle.clone();
    if t.auto_constraints {
        mle.rotation_d.get_or_insert(d);
        if d % 2 == 1 {
            mle.symmetry_d.get_or_insert(d);
        }
    }
    let outcome = mle_reconstruct(&record, &mle).map_err(CliError::numeric("tomo-reconstruct"))?;
    let truncated = reference.as_ref().map(|r| nlre::tomography::bootstrap::truncated_reference(r, mle.dim));
    let fid = truncated
        .as_ref()
        .map(|r| fidelity(&outcome.rho, r))
        .transpose()
        .map_err(CliError::numeric("fidelity"))?;
    let pops = fock_distribution(&outcome.rho);

    let flop_fit = record.flops.as_ref().map(|f| {
        let opts = FockFitOptions {
            n_max: mle.dim.min(f.points.len() / 2),
            ..FockFitOptions::default()
        };
        match fock_fit(f, &opts) {
            Ok(fit) => {
                let weights: Vec<f64> = (0..d).map(|c| class_purity(&fit.populations, d, c)).collect();
                json!({ "fit": fit, "class_weights": weights })
            }
            Err(e) => json!({ "error": e.to_string() }),
        }
    });

    let boot = if t.bootstrap > 0 {
        let opts = BootstrapOptions {
            samples: t.bootstrap,
            seed: fork_seed(cfg.seed()?, "bootstrap"),
            resampling: Resampling::Pooled,
            mle: mle.clone(),
        };
        let res = bootstrap(&record, &opts, reference.as_ref()).map_err(CliError::numeric("bootstrap"))?;
        Some(json!({
            "samples": t.bootstrap,
            "failed_samples": res.failed_samples,
            "fidelity": res.fidelity_vs_reference,
            "population_std": (0..mle.dim)
                .map(|n| res.covariance.get(n * mle.dim + n, n * mle.dim + n).re.max(0.0).sqrt())
                .collect::<Vec<_>>(),
        }))
    } else {
        None
    };

    em.json(
        "reconstruction.json",
        "reconstruction",
        &json!({
            "mle": mle,
            "nll": outcome.nll,
            "iterations": outcome.iterations,
            "converged": outcome.converged,
            "fidelity": fid,
            "trace_distance": truncated.as_ref().map(|r| trace_distance(&outcome.rho, r)),
            "populations": pops,
            "nbar": fock_moments(&pops).0,
            "class_weights": (0..d).map(|c| class_purity(&pops, d, c)).collect::<Vec<_>>(),
            "flop_fit": flop_fit,
            "bootstrap": boot,
        }),
    )?;
    let n = outcome.rho.dim();
    let rows = (0..n * n).map(|k| {
        let z = outcome.rho.get(k / n, k % n);
        vec![(k / n).to_string(), (k % n).to_string(), z.re.to_string(), z.im.to_string()]
    });
    em.csv("rho.csv", "density-matrix", &["i", "j", "re", "im"], rows)?;
    let ref_pops = truncated.as_ref().map(fock_distribution);
    let rows = pops.iter().enumerate().map(|(k, p)| {
        vec![
            k.to_string(),
            p.to_string(),
            opt(ref_pops.as_ref().map(|r| r[k])),
        ]
    });
    em.csv("fock.csv", "fock-distribution", &["n", "population", "reference"], rows)?;
    em.json("reconstructed_state.json", "state", &outcome.rho).map(|_| ())
}

struct ReadoutSetup {
    basis: DarkStateBasis,
    classes: Vec<usize>,
    dists: Vec<Vec<f64>>,
    linear: LinearCouplingModel,
    couplings: Couplings,
    window: (f64, f64),
}

fn readout_setup(sys: &NLREConfig, r: &ReadoutSection) -> Result<ReadoutSetup, CliError> {
    if !(r.g > 0.0) {
        return Err(CliError::Config(format!("readout.g must be positive (got {})", r.g)));
    }
    let basis = dark_states(sys).map_err(CliError::numeric("dark states"))?;
    let classes = basis.protected_classes();
    if classes.len() < 2 {
        return Err(CliError::Numeric {
            context: "readout",
            source: NlreError::InvalidInput(format!("only {} protected dark states", classes.len())),
        });
    }
    let dists: Vec<Vec<f64>> = classes
        .iter()
        .map(|&m| basis.states[m].iter().map(|c| c * c).collect())
        .collect();
    let range = match r.fit_range {
        Some(rg) => rg,
        None => {
            let occupied: Vec<usize> = (0..sys.dim)
                .filter(|&n| dists.iter().any(|p| p[n] > 1e-3))
                .collect();
            (*occupied.first().unwrap_or(&0), *occupied.last().unwrap_or(&1))
        }
    };
    let linear = LinearCouplingModel::fit(r.order, sys.eta, range).map_err(CliError::numeric("coupling fit"))?;
    let window = r.window.unwrap_or_else(|| default_window(linear.slope, r.g));
    Ok(ReadoutSetup {
        basis,
        classes,
        dists,
        linear,
        couplings: Couplings::Exact {
            order: r.order,
            eta: sys.eta,
        },
        window,
    })
}

fn discriminate(s: &ReadoutSetup, r: &ReadoutSection) -> Result<Discrimination, CliError> {
    optimize_discrimination(&s.dists, &s.couplings, r.g, s.window).map_err(CliError::numeric("discrimination"))
}

/// Revival plan under the fitted line; the offset is dropped when it is not
/// commensurate with the slope.
fn plan(s: &ReadoutSetup, r: &ReadoutSection, d: usize) -> (Option<RevivalPlan>, Option<String>) {
    let (a, b) = s.linear.range;
    let (k_a, k_b) = ((a / d) as u64, (b / d) as u64);
    match revival_time(r.m, d as u64, k_a, k_b, s.linear.slope, s.linear.offset, r.g) {
        Ok(p) => (Some(p), None),
        Err(NlreError::Incommensurable(msg)) => {
            let p = revival_time(r.m, d as u64, k_a, k_b, s.linear.slope, 0.0, r.g).ok();
            (p, Some(format!("offset dropped: {msg}")))
        }
        Err(e) => (None, Some(e.to_string())),
    }
}

fn readout_revival_cmd(cfg: &RunConfig, em: &mut Emitter) -> Result<(), CliError> {
    let sys = cfg.system.resolve()?;
    let r = &cfg.readout;
    let d = sys.d();
    if r.m as usize >= d {
        return Err(CliError::Config(format!("readout.m = {} must be below d = {d}", r.m)));
    }
    let s = readout_setup(&sys, r)?;
    let disc = discriminate(&s, r)?;
    let (revival, note) = plan(&s, r, d);
    let contrast = disc.probabilities.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - disc.probabilities.iter().cloned().fold(f64::INFINITY, f64::min);
    em.json(
        "revival.json",
        "readout-revival",
        &json!({
            "system": sys,
            "classes": s.classes,
            "dark_states": basis_summary(&s.basis),
            "nbar": s.dists.iter().map(|p| fock_moments(p).0).collect::<Vec<_>>(),
            "linear_model": s.linear,
            "revival": revival,
            "revival_note": note,
            "revival_seconds": revival.as_ref().and_then(|p| seconds(cfg, p.t_star)),
            "window": s.window,
            "discrimination": disc,
            "contrast": contrast,
            "t_rev_seconds": seconds(cfg, disc.t_rev),
        }),
    )?;
    let n = r.time_points.max(2);
    let mut header = vec!["t".to_string()];
    header.extend(s.classes.iter().map(|m| format!("p_return_{m}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = linspace(s.window.0, s.window.1, n).into_iter().map(|t| {
        let mut row = vec![t];
        row.extend(s.dists.iter().map(|p| spin_return_probability(p, &s.couplings, r.g, t)));
        row
    });
    em.csv("revival.csv", "readout-signal", &header, rows.collect::<Vec<_>>())?;
    Ok(())
}

#[derive(Serialize)]
struct BranchSummary {
    probability: f64,
    class_weights: Vec<f64>,
    nbar: f64,
}

fn readout_postselect_cmd(cfg: &RunConfig, em: &mut Emitter) -> Result<(), CliError> {
    let sys = cfg.system.resolve()?;
    let r = &cfg.readout;
    let d = sys.d();
    let s = readout_setup(&sys, r)?;
    let disc = discriminate(&s, r)?;
    let w = 1.0 / s.classes.len() as f64;
    let mut mix = s.basis.projector(s.classes[0]).scale(w);
    for &m in &s.classes[1..] {
        mix = &mix + &s.basis.projector(m).scale(w);
    }
    let joint = readout_input(&mix);
    let branches = postselect_branches(&joint, sys.eta, r.order, r.g, disc.t_rev, r.flip)
        .map_err(CliError::numeric("postselect"))?;
    let summaries: Vec<BranchSummary> = branches
        .iter()
        .map(|b| {
            let prob = b.trace().re;
            let p: Vec<f64> = fock_distribution(b).into_iter().map(|x| x / prob).collect();
            BranchSummary {
                probability: prob,
                class_weights: (0..d).map(|c| class_purity(&p, d, c)).collect(),
                nbar: fock_moments(&p).0,
            }
        })
        .collect();
    let spin = match r.branch {
        Branch::Down => Spin::G,
        Branch::Up => Spin::E,
    };
    let sel = postselect(&joint, sys.eta, r.order, r.g, disc.t_rev, spin, r.flip)
        .map_err(CliError::numeric("postselect"))?;
    let p_sel = fock_distribution(&sel.rho);
    let fidelities = s
        .dists
        .iter()
        .map(|p| fock_fidelity(p, &p_sel))
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::numeric("postselect"))?;
    em.json(
        "postselect.json",
        "readout-postselect",
        &json!({
            "system": sys,
            "classes": s.classes,
            "t_rev": disc.t_rev,
            "t_rev_seconds": seconds(cfg, disc.t_rev),
            "discrimination": disc,
            "flip": r.flip,
            "branch": r.branch,
            "branches": { "down": summaries[0], "up": summaries[1] },
            "probability_sum": summaries[0].probability + summaries[1].probability,
            "selected": {
                "probability": sel.probability,
                "class_weights": (0..d).map(|c| class_purity(&p_sel, d, c)).collect::<Vec<_>>(),
                "fock_fidelity_to_dark_states": fidelities,
            },
        }),
    )?;
    let p_in = fock_distribution(&mix);
    let rows = p_in
        .iter()
        .zip(&p_sel)
        .enumerate()
        .map(|(n, (a, b))| vec![n.to_string(), a.to_string(), b.to_string(), (n % d).to_string()]);
    em.csv("postselect.csv", "fock-distribution", &["n", "input", "selected", "class"], rows)?;
    em.json("selected_state.json", "state", &sel.rho)?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::Subcommand)]
pub enum Command {
    /// Drive the reservoir to its steady state and report Fock statistics.
    Stabilize,
    /// Stabilize every `[[sweep.points]]` entry.
    Sweep,
    /// Simulate an SDD scan and sideband flops of a stabilized state.
    TomoSimulate,
    /// Maximum-likelihood reconstruction of a measurement record.
    TomoReconstruct,
    /// Revival time and optimal discrimination of the dark states.
    ReadoutRevival,
    /// Sideband readout and post-selection of the dark-state mixture.
    ReadoutPostselect,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Stabilize => "stabilize",
            Command::Sweep => "sweep",
            Command::TomoSimulate => "tomo-simulate",
            Command::TomoReconstruct => "tomo-reconstruct",
            Command::ReadoutRevival => "readout-revival",
            Command::ReadoutPostselect => "readout-postselect",
        }
    }
}

/// Run one pipeline and write its artifacts plus the manifest into `out`.
pub fn execute(command: Command, cfg: &RunConfig, out: &Path) -> Result<Vec<Artifact>, CliError> {
    let mut em = Emitter::new(out, command.name(), cfg)?;
    match command {
        Command::Stabilize => stabilize_cmd(cfg, &mut em)?,
        Command::Sweep => sweep_cmd(cfg, &mut em)?,
        Command::TomoSimulate => tomo_simulate_cmd(cfg, &mut em)?,
        Command::TomoReconstruct => tomo_reconstruct_cmd(cfg, &mut em)?,
        Command::ReadoutRevival => readout_revival_cmd(cfg, &mut em)?,
        Command::ReadoutPostselect => readout_postselect_cmd(cfg, &mut em)?,
    }
    em.finish()
}
