//! Posterior summary table: HPDs, modes, means, ESS and R̂ per parameter.

use serde::{Deserialize, Serialize};

use super::diagnostics::{effective_sample_size, gelman_rubin};
use super::hpd::{hpd_sorted, MIN_SAMPLES};
use super::mode::mode_sorted;
use crate::error::{Error, Result};
use crate::inference::Sample;
use crate::model::{DensityVector, EnergyGrid, PotentialProfile, RadialGrid, UnitSystem};
use crate::projection::{ProjectionConfig, Projector};

/// Warn when `R̂` exceeds this.
pub const RHAT_WARN: f64 = 1.1;

/// One stored state as written to `chain_<k>.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub iteration: usize,
    pub rho: Vec<f64>,
    pub f: Vec<f64>,
    pub log_post: f64,
}

impl From<&Sample> for ChainRecord {
    fn from(s: &Sample) -> Self {
        Self { iteration: s.iteration, rho: s.rho.clone(), f: s.f.clone(), log_post: s.log_post }
    }
}

/// What a summary needs beyond the samples themselves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryContext {
    pub radial: RadialGrid<f64>,
    pub energy: EnergyGrid<f64>,
    pub g: f64,
    pub units: UnitSystem,
    pub projection: ProjectionConfig,
    pub hpd_mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterSummary {
    pub name: String,
    pub hpd_lower: f64,
    pub hpd_upper: f64,
    pub mode: f64,
    pub mean: f64,
    pub ess: f64,
    pub rhat: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnclosedMassSummary {
    /// Outer edge of the innermost radial bin.
    pub radius: f64,
    pub unit: String,
    pub hpd_lower: f64,
    pub hpd_upper: f64,
    pub mode: f64,
    pub mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapSummary {
    pub chain: usize,
    pub iteration: usize,
    pub log_post: f64,
    pub rho: Vec<f64>,
    pub f: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub hpd_mass: f64,
    pub n_chains: usize,
    pub n_samples: usize,
    pub rho: Vec<ParameterSummary>,
    pub f: Vec<ParameterSummary>,
    /// `f_j / N(ρ, f)` per sample, i.e. `f` as a proper phase-space pdf.
    pub f_normalised: Vec<ParameterSummary>,
    pub enclosed_mass: EnclosedMassSummary,
    pub map: MapSummary,
    pub warnings: Vec<String>,
}

impl SummaryTable {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

fn summarise(name: String, per_chain: &[Vec<f64>], mass: f64, warnings: &mut Vec<String>) -> ParameterSummary {
    let mut all: Vec<f64> = per_chain.iter().flatten().copied().collect();
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    all.sort_by(f64::total_cmp);
    let (lo, hi) = hpd_sorted(&all, mass);
    let mode = mode_sorted(&all);
    let ess = per_chain.iter().map(|c| effective_sample_size(c)).sum();
    let views: Vec<&[f64]> = per_chain.iter().map(Vec::as_slice).collect();
    let rhat = gelman_rubin(&views);
    if !(lo <= mode && mode <= hi) {
        warnings.push(format!("{name}: mode {mode} outside its HPD [{lo}, {hi}] (multimodal marginal?)"));
    }
    if let Some(r) = rhat {
        if r > RHAT_WARN {
            warnings.push(format!("{name}: R-hat {r:.4} exceeds {RHAT_WARN}"));
        }
    }
    ParameterSummary { name, hpd_lower: lo, hpd_upper: hi, mode, mean, ess, rhat }
}

/// `4π ρ_1 r_1³ / 3`.
pub fn innermost_mass(rho1: f64, r1: f64) -> f64 {
    4.0 * std::f64::consts::PI * rho1 * r1 * r1 * r1 / 3.0
}

/// HPD, mode and mean of the innermost-bin mass, transformed sample by sample.
pub fn enclosed_mass_summary(
    rho1_samples: &[f64],
    grid: &RadialGrid<f64>,
    hpd_mass: f64,
    units: UnitSystem,
) -> Result<EnclosedMassSummary> {
    if rho1_samples.len() < MIN_SAMPLES {
        return Err(Error::Usage(format!("need at least {MIN_SAMPLES} samples")));
    }
    let r1 = grid.edges()[1];
    let mut m: Vec<f64> = rho1_samples.iter().map(|&r| innermost_mass(r, r1)).collect();
    let mean = m.iter().sum::<f64>() / m.len() as f64;
    m.sort_by(f64::total_cmp);
    let (lo, hi) = hpd_sorted(&m, hpd_mass);
    Ok(EnclosedMassSummary {
        radius: r1,
        unit: units.mass_unit().to_string(),
        hpd_lower: lo,
        hpd_upper: hi,
        mode: mode_sorted(&m),
        mean,
    })
}

/// Builds the summary table from one or more chains.
pub fn summarise_chains(chains: &[Vec<ChainRecord>], ctx: &SummaryContext) -> Result<SummaryTable> {
    let n_x = ctx.radial.n_bins();
    let n_e = ctx.energy.n_bins();
    let total: usize = chains.iter().map(Vec::len).sum();
    if chains.is_empty() || total < MIN_SAMPLES {
        return Err(Error::Usage(format!("summaries need at least {MIN_SAMPLES} stored samples")));
    }
    for rec in chains.iter().flatten() {
        if rec.rho.len() != n_x || rec.f.len() != n_e {
            return Err(Error::LengthMismatch { expected: n_x + n_e, actual: rec.rho.len() + rec.f.len() });
        }
    }
    let projector = Projector::new(ctx.projection.clone())?;
    let mut warnings = Vec::new();
    let column = |pick: &dyn Fn(&ChainRecord) -> f64| -> Vec<Vec<f64>> {
        chains.iter().map(|c| c.iter().map(pick).collect()).collect()
    };
    let rho = (0..n_x)
        .map(|i| summarise(format!("rho_{}", i + 1), &column(&|r| r.rho[i]), ctx.hpd_mass, &mut warnings))
        .collect();
    let f = (0..n_e)
        .map(|j| summarise(format!("f_{}", j + 1), &column(&|r| r.f[j]), ctx.hpd_mass, &mut warnings))
        .collect();

    let mut normalised: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); chains.len()]; n_e];
    for (k, chain) in chains.iter().enumerate() {
        for rec in chain {
            let profile = PotentialProfile::new(&ctx.radial, &DensityVector::new(rec.rho.clone())?, ctx.g)?;
            let w = projector.dos_weights(&profile, &ctx.energy);
            let norm: f64 = rec.f.iter().zip(&w).map(|(a, b)| a * b).sum();
            for j in 0..n_e {
                normalised[j][k].push(if norm > 0.0 { rec.f[j] / norm } else { 0.0 });
            }
        }
    }
    let mut norm_warnings = Vec::new();
    let f_normalised = normalised
        .iter()
        .enumerate()
        .map(|(j, cols)| summarise(format!("f_norm_{}", j + 1), cols, ctx.hpd_mass, &mut norm_warnings))
        .collect();
    warnings.extend(norm_warnings.into_iter().filter(|w| w.contains("R-hat")));

    let rho1: Vec<f64> = chains.iter().flatten().map(|r| r.rho[0]).collect();
    let enclosed_mass = enclosed_mass_summary(&rho1, &ctx.radial, ctx.hpd_mass, ctx.units)?;

    let (map_chain, map_rec) = chains
        .iter()
        .enumerate()
        .flat_map(|(k, c)| c.iter().map(move |r| (k, r)))
        .fold(None::<(usize, &ChainRecord)>, |best, cur| match best {
            Some(b) if b.1.log_post >= cur.1.log_post => Some(b),
            _ => Some(cur),
        })
        .expect("non-empty chains");
    Ok(SummaryTable {
        hpd_mass: ctx.hpd_mass,
        n_chains: chains.len(),
        n_samples: total,
        rho,
        f,
        f_normalised,
        enclosed_mass,
        map: MapSummary {
            chain: map_chain,
            iteration: map_rec.iteration,
            log_post: map_rec.log_post,
            rho: map_rec.rho.clone(),
            f: map_rec.f.clone(),
        },
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn innermost_mass_arithmetic() {
        let m = innermost_mass(1.4e8, 1.6);
        let expected = 4.0 * std::f64::consts::PI / 3.0 * 1.4e8 * 4.096;
        assert!((m - expected).abs() <= 1e-12 * expected);
        assert!((m / 1e9 - 2.4).abs() < 0.05);
        assert_eq!(innermost_mass(0.0, 1.6), 0.0);
    }

    #[test]
    fn transforms_samples_not_endpoints() {
        let grid = RadialGrid::new(vec![0.0, 2.0, 3.0]).unwrap();
        // right-skewed rho_1 draws
        let rho1: Vec<f64> = (0..400).map(|i| ((i as f64 + 0.5) / 400.0).powi(4) * 10.0).collect();
        let s = enclosed_mass_summary(&rho1, &grid, 0.95, UnitSystem::Code).unwrap();
        let mut sorted = rho1.clone();
        sorted.sort_by(f64::total_cmp);
        let (lo, hi) = hpd_sorted(&sorted, 0.95);
        // a positive linear map commutes with the HPD; the mode must come
        // from the transformed histogram, not from mapping rho_1's mode
        assert!((s.hpd_lower - innermost_mass(lo, 2.0)).abs() < 1e-9);
        assert!((s.hpd_upper - innermost_mass(hi, 2.0)).abs() < 1e-9);
        let mean_rho: f64 = rho1.iter().sum::<f64>() / 400.0;
        assert!((s.mean - innermost_mass(mean_rho, 2.0)).abs() < 1e-9);
        assert_eq!(s.unit, "code mass");
    }
}
