//! Physical parameters and the dimensionless `ε` they define.
//!
//! `N = N_s / L`, `λ_D = √(k_B T ε₀ ε_r / (q² N))`, `ε = (λ_D / L)^{2/3}`. The
//! reduced model also assumes `ħ² / (2 m L²) = k_B T`; the ratio of the two
//! sides is reported as the thermal consistency.

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const HBAR: f64 = 1.054_571_817e-34;
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    /// J·s
    pub hbar: f64,
    /// kg
    pub mass: f64,
    /// m
    pub length: f64,
    /// K
    pub temperature: f64,
    /// m⁻²
    pub surface_density: f64,
    /// F/m
    pub eps0: f64,
    pub eps_r: f64,
    /// C
    pub charge: f64,
    /// J/K
    pub kb: f64,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("hbar", self.hbar),
            ("mass", self.mass),
            ("length", self.length),
            ("temperature", self.temperature),
            ("surface_density", self.surface_density),
            ("eps0", self.eps0),
            ("eps_r", self.eps_r),
            ("charge", self.charge),
            ("kb", self.kb),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Volume density `N_s / L`.
    pub fn volume_density(&self) -> f64 {
        self.surface_density / self.length
    }

    pub fn debye_length(&self) -> f64 {
        (self.kb * self.temperature * self.eps0 * self.eps_r
            / (self.charge * self.charge * self.volume_density()))
        .sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalScaling {
    pub debye_length: f64,
    pub epsilon: f64,
    /// `ħ² / (2 m L² k_B T)`.
    pub thermal_consistency: f64,
}

/// `(ε, thermal consistency)`; logs a warning when the consistency ratio is
/// outside `[0.1, 10]`.
pub fn epsilon_from_physical(p: &PhysicalParams) -> Result<PhysicalScaling> {
    p.validate()?;
    let debye_length = p.debye_length();
    let epsilon = (debye_length / p.length).powf(2.0 / 3.0);
    let thermal_consistency =
        p.hbar * p.hbar / (2.0 * p.mass * p.length * p.length * p.kb * p.temperature);
    if !(0.1..=10.0).contains(&thermal_consistency) {
        log::warn!(
            "thermal consistency ħ²/(2mL²k_BT) = {thermal_consistency:.3e} is far from 1; \
             the reduced model's energy normalization does not hold for these parameters"
        );
    }
    Ok(PhysicalScaling {
        debye_length,
        epsilon,
        thermal_consistency,
    })
}
