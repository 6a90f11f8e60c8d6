//! Data likelihood `Σ_k ln ν(y_k; ρ, f)`.
//!
//! For fixed `ρ`, `ν` is a ratio of two linear forms in `f`: the per-datum
//! design row `A_k` over the phase-space normalisation `w`. The sampler
//! therefore rebuilds `(A, w)` only when the `ρ` block changes.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{DensityVector, EnergyGrid, PotentialProfile, RadialGrid};
use crate::projection::{ObservationSet, ProjectionConfig, Projector};

/// A likelihood split into a `ρ`-dependent precomputation and a cheap
/// evaluation in `f`.
pub trait Likelihood: Sync {
    type Cache: Clone + Send;

    fn prepare(&self, rho: &[f64]) -> Result<Self::Cache>;

    fn log_likelihood(&self, cache: &Self::Cache, f: &[f64]) -> f64;
}

/// `ν ≡ 1`; leaves the posterior equal to the prior.
#[derive(Clone, Copy, Debug, Default)]
pub struct FlatLikelihood;

impl Likelihood for FlatLikelihood {
    type Cache = ();

    fn prepare(&self, _rho: &[f64]) -> Result<()> {
        Ok(())
    }

    fn log_likelihood(&self, _cache: &(), _f: &[f64]) -> f64 {
        0.0
    }
}

/// Projected-pdf likelihood of a tracer catalog.
#[derive(Clone, Debug)]
pub struct ProjectedLikelihood {
    radial: RadialGrid<f64>,
    energy: EnergyGrid<f64>,
    data: ObservationSet<f64>,
    projector: Projector<f64>,
    g: f64,
}

/// Per-`ρ` precomputation.
#[derive(Clone, Debug)]
pub struct ProjectedCache {
    pub profile: PotentialProfile<f64>,
    /// Row-major `N_data × N_E` design matrix.
    pub design: Vec<f64>,
    pub dos_weights: Vec<f64>,
}

impl ProjectedLikelihood {
    pub fn new(
        radial: RadialGrid<f64>,
        energy: EnergyGrid<f64>,
        data: ObservationSet<f64>,
        cfg: ProjectionConfig,
        g: f64,
    ) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Usage("likelihood needs at least one datum".into()));
        }
        Ok(Self { radial, energy, data, projector: Projector::new(cfg)?, g })
    }

    pub fn radial(&self) -> &RadialGrid<f64> {
        &self.radial
    }

    pub fn energy(&self) -> &EnergyGrid<f64> {
        &self.energy
    }

    pub fn data(&self) -> &ObservationSet<f64> {
        &self.data
    }

    pub fn projector(&self) -> &Projector<f64> {
        &self.projector
    }

    pub fn gravitational_constant(&self) -> f64 {
        self.g
    }

    pub fn profile(&self, rho: &[f64]) -> Result<PotentialProfile<f64>> {
        PotentialProfile::new(&self.radial, &DensityVector::new(rho.to_vec())?, self.g)
    }

    /// Per-datum `ln ν(y_k)` in catalog order.
    pub fn pointwise(&self, cache: &ProjectedCache, f: &[f64]) -> Vec<f64> {
        let n_e = self.energy.n_bins();
        let norm: f64 = f.iter().zip(&cache.dos_weights).map(|(a, b)| a * b).sum();
        let ln_norm = if norm > 0.0 { norm.ln() } else { f64::INFINITY };
        cache
            .design
            .chunks_exact(n_e)
            .map(|row| {
                let s: f64 = row.iter().zip(f).map(|(a, b)| a * b).sum();
                if s > 0.0 {
                    s.ln() - ln_norm
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect()
    }
}

impl Likelihood for ProjectedLikelihood {
    type Cache = ProjectedCache;

    fn prepare(&self, rho: &[f64]) -> Result<ProjectedCache> {
        let profile = self.profile(rho)?;
        let rows: Vec<Vec<f64>> = if self.projector.config().parallel {
            self.data
                .as_slice()
                .par_iter()
                .map(|o| self.projector.design_row(&profile, &self.energy, o))
                .collect()
        } else {
            self.data
                .iter()
                .map(|o| self.projector.design_row(&profile, &self.energy, o))
                .collect()
        };
        let design = rows.concat();
        let dos_weights = self.projector.dos_weights(&profile, &self.energy);
        Ok(ProjectedCache { profile, design, dos_weights })
    }

    fn log_likelihood(&self, cache: &ProjectedCache, f: &[f64]) -> f64 {
        let n_e = self.energy.n_bins();
        let norm: f64 = f.iter().zip(&cache.dos_weights).map(|(a, b)| a * b).sum();
        if !(norm > 0.0) {
            return f64::NEG_INFINITY;
        }
        let mut total = 0.0;
        for row in cache.design.chunks_exact(n_e) {
            let s: f64 = row.iter().zip(f).map(|(a, b)| a * b).sum();
            if !(s > 0.0) {
                return f64::NEG_INFINITY;
            }
            total += s.ln();
        }
        total - self.data.len() as f64 * norm.ln()
    }
}

/// `Σ_k ln ν(y_k; ρ, f)`; `−∞` when any datum has zero density or the model
/// has no bound states.
pub fn log_likelihood(
    rho: &DensityVector<f64>,
    f: &[f64],
    radial: &RadialGrid<f64>,
    energy: &EnergyGrid<f64>,
    data: &ObservationSet<f64>,
    cfg: &ProjectionConfig,
    g: f64,
) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Usage("likelihood needs at least one datum".into()));
    }
    if f.len() != energy.n_bins() {
        return Err(Error::LengthMismatch { expected: energy.n_bins(), actual: f.len() });
    }
    let like = ProjectedLikelihood::new(radial.clone(), energy.clone(), data.clone(), cfg.clone(), g)?;
    let cache = like.prepare(rho.values())?;
    Ok(like.log_likelihood(&cache, f))
}

/// Sum of per-datum log-densities.
pub fn sum_log_densities(values: &[f64]) -> f64 {
    values.iter().map(|v| v.ln()).sum()
}
