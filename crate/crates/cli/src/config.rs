//! Run configuration: a TOML file with one section per pipeline, plus
//! `--set key.path=value` overrides applied before deserialization.

use std::path::{Path, PathBuf};

use nlre::dynamics::NLREConfig;
use nlre::nlre::ModelKind;
use nlre::tomography::MleOptions;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub r: usize,
    pub l: usize,
    pub eta: f64,
    pub g_r: f64,
    /// Lowering strength; mutually exclusive with `n_star`.
    pub g_l: Option<f64>,
    /// Place the crossing point here by choosing `g_l`.
    pub n_star: Option<f64>,
    pub gamma: f64,
    pub dim: usize,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            r: 1,
            l: 2,
            eta: 0.5,
            g_r: 1.0,
            g_l: None,
            n_star: Some(6.0),
            gamma: 10.0,
            dim: 60,
        }
    }
}

impl SystemConfig {
    pub fn resolve(&self) -> Result<NLREConfig, CliError> {
        let base = NLREConfig {
            r: self.r,
            l: self.l,
            g_r: self.g_r,
            g_l: self.g_l.unwrap_or(self.g_r),
            gamma: self.gamma,
            eta: self.eta,
            dim: self.dim,
        };
        base.validate().map_err(|e| CliError::Config(format!("system: {e}")))?;
        let cfg = match (self.g_l, self.n_star) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config("system: set either g_l or n_star, not both".into()))
            }
            (None, Some(n)) => {
                if !(n.is_finite() && n > 0.0) {
                    return Err(CliError::Config(format!("system.n_star must be positive (got {n})")));
                }
                base.with_crossing_at(n)
            }
            _ => base,
        };
        cfg.validate().map_err(|e| CliError::Config(format!("system: {e}")))?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilizeSection {
    pub model: ModelKind,
    pub initial_nbar: f64,
    pub rel_tol: f64,
    pub max_time: f64,
    pub fixed_time: Option<f64>,
    /// Abort when the top Fock levels hold too much population.
    pub truncation_guard: bool,
    pub wigner_extent: f64,
    /// Points per axis of the Wigner grid; `0` skips it.
    pub wigner_points: usize,
}

impl Default for StabilizeSection {
    fn default() -> Self {
        let crit = nlre::dynamics::SteadyCriteria::default();
        Self {
            model: ModelKind::JumpOnly,
            initial_nbar: nlre::dynamics::INITIAL_NBAR,
            rel_tol: crit.rel_tol,
            max_time: crit.max_time,
            fixed_time: None,
            truncation_guard: true,
            wigner_extent: 4.0,
            wigner_points: 41,
        }
    }
}

/// Per-point overrides of `[system]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepOverride {
    pub r: Option<usize>,
    pub l: Option<usize>,
    pub eta: Option<f64>,
    pub g_l: Option<f64>,
    pub n_star: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub points: Vec<SweepOverride>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridKind {
    Line,
    Square,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TomographySection {
    pub grid: GridKind,
    pub extent: f64,
    /// `M`: points per axis.
    pub points: usize,
    pub shots: u32,
    pub flops: bool,
    pub flop_order: i32,
    pub flop_points: usize,
    pub flop_t_max: f64,
    pub flop_shots: u32,
    pub g0: f64,
    pub gamma_decay: f64,
    /// Input record for `tomo-reconstruct`; defaults to `<out>/record.txt`.
    pub record: Option<PathBuf>,
    /// Reference state JSON for fidelities; defaults to the simulated one
    /// next to the record when present.
    pub reference: Option<PathBuf>,
    /// Derive the rotation and coherence-sign constraints from `d`.
    pub auto_constraints: bool,
    pub bootstrap: usize,
    pub mle: MleOptions,
}

impl Default for TomographySection {
    fn default() -> Self {
        Self {
            grid: GridKind::Square,
            extent: 4.0,
            points: 40,
            shots: 300,
            flops: true,
            flop_order: 4,
            flop_points: 200,
            flop_t_max: 600.0,
            flop_shots: 300,
            g0: 1.0,
            gamma_decay: 1e-3,
            record: None,
            reference: None,
            auto_constraints: true,
            bootstrap: 0,
            mle: MleOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Down,
    Up,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReadoutSection {
    pub order: i32,
    pub g: f64,
    /// Fock range of the linear coupling fit; defaults to the occupied band.
    pub fit_range: Option<(usize, usize)>,
    /// Class whose revival time is reported.
    pub m: u64,
    pub window: Option<(f64, f64)>,
    pub time_points: usize,
    pub branch: Branch,
    pub flip: bool,
}

impl Default for ReadoutSection {
    fn default() -> Self {
        Self {
            order: nlre::nlre::READOUT_ORDER,
            g: 1.0,
            fit_range: None,
            m: 0,
            window: None,
            time_points: 400,
            branch: Branch::Down,
            flip: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: Option<u64>,
    /// Reference coupling `g` in Hz, used only to print physical times.
    pub unit_hz: Option<f64>,
    pub system: SystemConfig,
    pub stabilize: StabilizeSection,
    pub sweep: SweepSection,
    pub tomography: TomographySection,
    pub readout: ReadoutSection,
}

impl RunConfig {
    pub fn seed(&self) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Config("seed is required for stochastic runs (--seed or `seed =`)".into()))
    }
}

/// Parse a value the way TOML would, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

/// Set `a.b.c = value` inside `table`, creating tables on the way.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set expects key=value, got `{assignment}`")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("bad key `{key}`")));
    }
    let mut cur = table;
    for part in &path[..path.len() - 1] {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("`{part}` in `{key}` is not a section")))?;
    }
    cur.insert(path[path.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

pub fn load(path: Option<&Path>, overrides: &[String], seed: Option<u64>) -> Result<RunConfig, CliError> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            text.parse::<toml::Table>()
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let mut cfg: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    if seed.is_some() {
        cfg.seed = seed;
    }
    cfg.system.resolve()?;
    Ok(cfg)
}
