//! Occupation weights and charge densities for Boltzmann and Fermi–Dirac statistics.

use alloc::vec::Vec;

use super::fermi::{fermi_dirac, fermi_level_for};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::math;
use crate::spectrum::Spectrum;

/// Relative weight below which a level is dropped from every series.
pub const LEVEL_CUTOFF: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Statistics {
    Boltzmann,
    FermiDirac,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OccupationSet {
    statistics: Statistics,
    epsilon: f64,
    weights: Vec<f64>,
    /// `ln Σ_p e^{−E_p/ε²}` (Boltzmann); the partition function itself underflows.
    log_partition: Option<f64>,
    fermi_level: Option<f64>,
}

impl OccupationSet {
    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn levels_used(&self) -> usize {
        self.weights.len()
    }

    pub fn log_partition(&self) -> Option<f64> {
        self.log_partition
    }

    pub fn fermi_level(&self) -> Option<f64> {
        self.fermi_level
    }
}

/// Occupation of every level in `spectrum`; no truncation is applied.
pub fn occupation_weights(spectrum: &Spectrum, eps: f64, statistics: Statistics) -> Result<OccupationSet> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid("epsilon must be positive"));
    }
    occupation_of(spectrum.energies(), eps, statistics)
}

pub(crate) fn check_epsilon(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid("epsilon must lie in (0,1)"));
    }
    Ok(())
}

fn occupation_of(energies: &[f64], eps: f64, statistics: Statistics) -> Result<OccupationSet> {
    let e2 = eps * eps;
    match statistics {
        Statistics::Boltzmann => {
            let e1 = energies[0];
            let raw: Vec<f64> = energies.iter().map(|&e| math::exp(-(e - e1) / e2)).collect();
            let total: f64 = raw.iter().sum();
            Ok(OccupationSet {
                statistics,
                epsilon: eps,
                weights: raw.iter().map(|w| w / total).collect(),
                log_partition: Some(-e1 / e2 + math::ln(total)),
                fermi_level: None,
            })
        }
        Statistics::FermiDirac => {
            let eps3 = e2 * eps;
            let mu = fermi_level_for(energies, eps, 1.0 / eps3)?;
            Ok(OccupationSet {
                statistics,
                epsilon: eps,
                weights: energies.iter().map(|&e| eps3 * fermi_dirac((e - mu) / e2)).collect(),
                log_partition: None,
                fermi_level: Some(mu),
            })
        }
    }
}

/// Occupation truncated at [`LEVEL_CUTOFF`], or `None` when the last level of
/// `energies` is still above the cutoff (the series is not yet resolved).
pub(crate) fn truncated_occupation(
    energies: &[f64],
    eps: f64,
    statistics: Statistics,
) -> Result<Option<OccupationSet>> {
    let e2 = eps * eps;
    let ratios: Vec<f64> = match statistics {
        Statistics::Boltzmann => energies.iter().map(|&e| math::exp(-(e - energies[0]) / e2)).collect(),
        Statistics::FermiDirac => {
            let target = 1.0 / (e2 * eps);
            let mu = fermi_level_for(energies, eps, target)?;
            energies.iter().map(|&e| fermi_dirac((e - mu) / e2) / target).collect()
        }
    };
    if energies.len() < 2 || ratios[ratios.len() - 1] >= LEVEL_CUTOFF {
        return Ok(None);
    }
    let used = ratios.iter().take_while(|&&r| r >= LEVEL_CUTOFF).count().max(1);
    occupation_of(&energies[..used], eps, statistics).map(Some)
}

/// `ρ = Σ_p w_p |ψ_p|²` over the occupied levels.
pub fn charge_density(spectrum: &Spectrum, occ: &OccupationSet) -> Result<GridFunction> {
    if occ.levels_used() > spectrum.count() {
        return Err(Error::invalid(alloc::format!(
            "{} weights but only {} levels",
            occ.levels_used(),
            spectrum.count()
        )));
    }
    let grid = *spectrum.grid();
    let mut rho = alloc::vec![0.0; grid.node_count()];
    for (w, psi) in occ.weights().iter().zip(spectrum.states()) {
        for (r, v) in rho.iter_mut().zip(psi.values()) {
            *r += w * v * v;
        }
    }
    Ok(GridFunction::from_vec(grid, rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{integrate, Grid};
    use crate::spectrum::{solve_spectrum, Potential};

    #[test]
    fn two_level_boltzmann_weights() {
        let occ = occupation_of(&[1.0, 2.0], 1.0, Statistics::Boltzmann).unwrap();
        let z = libm::exp(-1.0) + libm::exp(-2.0);
        assert!((occ.weights()[0] - libm::exp(-1.0) / z).abs() < 1e-10);
        assert!((occ.weights()[1] - libm::exp(-2.0) / z).abs() < 1e-10);
        assert!((occ.weights()[0] - 0.731_058_578_630_004_9).abs() < 1e-10);
        assert!((occ.log_partition().unwrap() - libm::log(z)).abs() < 1e-10);
    }

    #[test]
    fn epsilon_is_checked() {
        let g = Grid::new(1.0, 64).unwrap();
        let s = solve_spectrum(&Potential::zero(g), 2).unwrap();
        assert!(occupation_weights(&s, 1.0, Statistics::Boltzmann).is_ok());
        assert!(occupation_weights(&s, 0.0, Statistics::Boltzmann).is_err());
        assert!(check_epsilon(1.0).is_err());
        assert!(check_epsilon(0.5).is_ok());
    }

    #[test]
    fn weights_normalized_and_nonincreasing() {
        let g = Grid::new(5.0, 500).unwrap();
        let s = solve_spectrum(&Potential::from_fn(g, |x| x), 8).unwrap();
        for stats in [Statistics::Boltzmann, Statistics::FermiDirac] {
            let occ = occupation_weights(&s, 0.6, stats).unwrap();
            let total: f64 = occ.weights().iter().sum();
            assert!((total - 1.0).abs() < 1e-10, "{stats:?}");
            assert!(occ.weights().windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn large_gap_needs_one_level() {
        let eps = 0.1;
        let gap = 40.0 * eps * eps;
        let e = [1.0, 1.0 + gap, 1.0 + 4.0 * gap];
        let occ = truncated_occupation(&e, eps, Statistics::Boltzmann).unwrap().unwrap();
        assert_eq!(occ.levels_used(), 1);
        let all = occupation_of(&e, eps, Statistics::Boltzmann).unwrap();
        assert!(all.weights()[1] / all.weights()[0] < 1e-17);
    }

    #[test]
    fn unresolved_series_is_reported() {
        let e = [1.0, 1.01, 1.02];
        assert!(truncated_occupation(&e, 0.5, Statistics::Boltzmann).unwrap().is_none());
        assert!(truncated_occupation(&e[..1], 0.5, Statistics::Boltzmann).unwrap().is_none());
    }

    #[test]
    fn density_of_box_states() {
        let g = Grid::new(2.0, 400).unwrap();
        let s = solve_spectrum(&Potential::zero(g), 2).unwrap();
        let occ = OccupationSet {
            statistics: Statistics::Boltzmann,
            epsilon: 0.5,
            weights: alloc::vec![0.5, 0.5],
            log_partition: None,
            fermi_level: None,
        };
        let rho = charge_density(&s, &occ).unwrap();
        assert!((integrate(&rho) - 1.0).abs() < 1e-8);
        // at the midpoint ψ₂ vanishes and ψ₁² = 2/L
        assert!((rho.values()[200] - 0.5 * 2.0 / 2.0).abs() < 1e-8);
        assert!(rho.values().iter().all(|&r| r >= 0.0));
        let single = OccupationSet { weights: alloc::vec![1.0], ..occ.clone() };
        let rho1 = charge_density(&s, &single).unwrap();
        assert!((integrate(&rho1) - 1.0).abs() < 1e-8);
        let too_many = OccupationSet { weights: alloc::vec![0.2; 5], ..occ };
        assert!(charge_density(&s, &too_many).is_err());
    }
}
