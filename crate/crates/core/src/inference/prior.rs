use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Independent Gaussian priors restricted to the constraint set
/// `ρ_1 ≥ … ≥ ρ_N ≥ 0`, `f_j ≥ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub rho_seeds: Vec<f64>,
    /// Per-bin prior standard deviations.
    pub rho_prior_sd: Vec<f64>,
    /// Shared prior mean of every `f_j`.
    pub f_seed: f64,
    pub f_prior_sd: f64,
}

impl PriorSpec {
    /// Prior sds are `sd_factor ×` the seed, floored at `sd_floor`;
    /// `f_seed = 1 / (N_E |E_0|)`.
    pub fn with_defaults(
        rho_seeds: Vec<f64>,
        n_energy_bins: usize,
        lowest_energy: f64,
        sd_factor: f64,
        sd_floor: f64,
    ) -> Self {
        let rho_prior_sd = rho_seeds.iter().map(|s| (sd_factor * s.abs()).max(sd_floor)).collect();
        let f_seed = 1.0 / (n_energy_bins as f64 * lowest_energy.abs());
        Self { rho_seeds, rho_prior_sd, f_seed, f_prior_sd: sd_factor * f_seed }
    }

    pub fn validate(&self, n_rho: usize, n_f: usize) -> Result<()> {
        if self.rho_seeds.len() != n_rho {
            return Err(Error::LengthMismatch { expected: n_rho, actual: self.rho_seeds.len() });
        }
        if self.rho_prior_sd.len() != n_rho {
            return Err(Error::LengthMismatch { expected: n_rho, actual: self.rho_prior_sd.len() });
        }
        if n_f == 0 {
            return Err(Error::Usage("prior needs at least one f parameter".into()));
        }
        if self.rho_prior_sd.iter().chain([&self.f_prior_sd]).any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::Usage("prior sds must be positive and finite".into()));
        }
        if !constraints_hold(&self.rho_seeds, &[self.f_seed]) {
            return Err(Error::Usage("prior seeds violate non-negativity or monotonicity".into()));
        }
        Ok(())
    }

    pub fn log_prior(&self, rho: &[f64], f: &[f64]) -> f64 {
        log_prior(rho, f, self)
    }
}

/// `ρ_i ≥ ρ_{i+1} ≥ 0` and `f_j ≥ 0`.
pub fn constraints_hold(rho: &[f64], f: &[f64]) -> bool {
    rho.iter().chain(f).all(|&v| v >= 0.0) && rho.windows(2).all(|w| w[0] >= w[1])
}

fn log_normal(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - LN_SQRT_2PI
}

/// Sum of Gaussian log-densities, or `−∞` outside the constraint set.
pub fn log_prior(rho: &[f64], f: &[f64], spec: &PriorSpec) -> f64 {
    if !constraints_hold(rho, f) {
        return f64::NEG_INFINITY;
    }
    let lr: f64 = rho
        .iter()
        .zip(&spec.rho_seeds)
        .zip(&spec.rho_prior_sd)
        .map(|((&x, &m), &s)| log_normal(x, m, s))
        .sum();
    let lf: f64 = f.iter().map(|&x| log_normal(x, spec.f_seed, spec.f_prior_sd)).sum();
    lr + lf
}
