//! Run configuration: a JSON file, command-line overrides, or both.
//!
//! ```json
//! {
//!   "mode": "sweep",
//!   "epsilons": [0.35, 0.3, 0.25, 0.2, 0.15],
//!   "grid": { "h": 0.01 },
//!   "tol": 1e-10,
//!   "statistics": "boltzmann",
//!   "truncation": { "xi_max": 40.0, "auto": true },
//!   "output_dir": "out"
//! }
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use qwell_sp_core::lab::SweepConfig;
use qwell_sp_core::scf::Statistics;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DEFAULT_H: f64 = 0.01;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_TRUNCATION: f64 = 40.0;
pub const DEFAULT_ALPHAS: [f64; 4] = [0.25, 0.5, 2.0, 4.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    SolveFull,
    SolveFirst,
    SolveLimit,
    Sweep,
    FermiDirac,
    ScalingCheck,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::SolveFull => "solve-full",
            Mode::SolveFirst => "solve-first",
            Mode::SolveLimit => "solve-limit",
            Mode::Sweep => "sweep",
            Mode::FermiDirac => "fermi-dirac",
            Mode::ScalingCheck => "scaling-check",
        }
    }
}

/// Exactly one of `h` and `n` may be given; neither means `h = 0.01`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSpec {
    #[serde(default = "default_truncation")]
    pub xi_max: f64,
    /// Double the truncation until the limit energy settles.
    #[serde(default = "default_true")]
    pub auto: bool,
}

impl Default for TruncationSpec {
    fn default() -> Self {
        TruncationSpec {
            xi_max: DEFAULT_TRUNCATION,
            auto: true,
        }
    }
}

fn default_truncation() -> f64 {
    DEFAULT_TRUNCATION
}

fn default_true() -> bool {
    true
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statistics: Option<Statistics>,
    #[serde(default)]
    pub truncation: TruncationSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    /// Sweeps also run the Fermi–Dirac solver; defaults to true.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fermi_dirac: Option<bool>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn new(mode: Mode) -> Self {
        RunConfig {
            schema_version: None,
            mode,
            epsilon: None,
            epsilons: None,
            grid: GridSpec::default(),
            tol: DEFAULT_TOL,
            statistics: None,
            truncation: TruncationSpec::default(),
            alphas: None,
            fermi_dirac: None,
            output_dir: default_output(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(v) = self.schema_version {
            if v != crate::output::SCHEMA_VERSION {
                return Err(CliError::config(format!("unsupported schema_version {v}")));
            }
        }
        if !(self.tol > 0.0 && self.tol <= 1e-2) {
            return Err(CliError::config("tolerance must lie in (0, 1e-2]"));
        }
        match (self.grid.h, self.grid.n) {
            (Some(_), Some(_)) => return Err(CliError::config("give either grid.h or grid.n, not both")),
            (Some(h), None) if !(h > 0.0 && h.is_finite()) => {
                return Err(CliError::config("grid.h must be positive"))
            }
            _ => {}
        }
        for &e in self.epsilon.iter().chain(self.epsilons.iter().flatten()) {
            check_epsilon(e)?;
        }
        if let Some(list) = &self.epsilons {
            if list.is_empty() {
                return Err(CliError::config("epsilons must not be empty"));
            }
            if list.windows(2).any(|w| w[1] >= w[0]) {
                return Err(CliError::config("epsilons must be strictly descending"));
            }
        }
        if !(self.truncation.xi_max > 0.0 && self.truncation.xi_max.is_finite()) {
            return Err(CliError::config("truncation.xi_max must be positive"));
        }
        match self.mode {
            Mode::SolveFull | Mode::SolveFirst => {
                if self.epsilon.is_none() {
                    return Err(CliError::config(format!("{} needs an epsilon", self.mode.name())));
                }
            }
            Mode::FermiDirac => {
                if self.epsilon.is_none() && self.epsilons.is_none() {
                    return Err(CliError::config("fermi-dirac needs an epsilon or a list of epsilons"));
                }
            }
            Mode::Sweep => {
                if self.grid.n.is_some() {
                    return Err(CliError::config("a sweep uses a fixed spacing; give grid.h, not grid.n"));
                }
            }
            Mode::ScalingCheck => {
                if let Some(a) = self.alphas.iter().flatten().find(|a| !(**a > 0.0 && a.is_finite())) {
                    return Err(CliError::config(format!("alphas must be positive, got {a}")));
                }
                if self.alphas.as_ref().is_some_and(|a| a.is_empty()) {
                    return Err(CliError::config("alphas must not be empty"));
                }
            }
            Mode::SolveLimit => {}
        }
        if self.mode == Mode::SolveFirst && self.statistics == Some(Statistics::FermiDirac) {
            return Err(CliError::config("the first-level problem has no statistics"));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        self.grid.h.unwrap_or(DEFAULT_H)
    }

    /// Intervals on `[0, length]`: `grid.n` if given, else `length / h` rounded.
    pub fn intervals(&self, length: f64) -> usize {
        self.grid
            .n
            .unwrap_or_else(|| (length / self.spacing()).round().max(1.0) as usize)
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics.unwrap_or(Statistics::Boltzmann)
    }

    /// Epsilon list for multi-ε modes: `epsilons`, else `[epsilon]`, else the
    /// default sweep.
    pub fn epsilon_list(&self) -> Vec<f64> {
        match (&self.epsilons, self.epsilon) {
            (Some(list), _) => list.clone(),
            (None, Some(e)) => vec![e],
            (None, None) => qwell_sp_core::lab::sweep::DEFAULT_EPSILONS.to_vec(),
        }
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.alphas.clone().unwrap_or_else(|| DEFAULT_ALPHAS.to_vec())
    }

    pub fn sweep_config(&self) -> SweepConfig {
        SweepConfig {
            epsilons: self.epsilon_list(),
            h: self.spacing(),
            tol: self.tol,
            limit_truncation: self.truncation.xi_max,
            fermi_dirac: self.fermi_dirac.unwrap_or(true),
        }
    }
}

pub fn check_epsilon(e: f64) -> Result<()> {
    if e > 0.0 && e < 1.0 {
        Ok(())
    } else {
        Err(CliError::config("epsilon must lie in (0,1)"))
    }
}

pub fn read_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
