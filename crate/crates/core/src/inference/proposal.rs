use rand::Rng;
use serde::{Deserialize, Serialize};

use super::truncnorm::{truncnorm_logpdf, truncnorm_sample};
use crate::error::{Error, Result};

/// Random-walk truncated-normal proposal scales and burn-in adaptation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProposalSpec {
    /// One scale per radial bin.
    pub rho_step_sd: Vec<f64>,
    pub f_step_sd: f64,
    pub adapt: bool,
    /// Acceptance fraction the burn-in adaptation steers toward.
    pub adapt_target: f64,
}

impl ProposalSpec {
    pub fn validate(&self, n_rho: usize) -> Result<()> {
        if self.rho_step_sd.len() != n_rho {
            return Err(Error::LengthMismatch { expected: n_rho, actual: self.rho_step_sd.len() });
        }
        if self.rho_step_sd.iter().chain([&self.f_step_sd]).any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::Usage("proposal scales must be positive and finite".into()));
        }
        if !(self.adapt_target > 0.0 && self.adapt_target < 1.0) {
            return Err(Error::Usage("adapt_target must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// A proposed block with forward `ln q(new | old)` and reverse `ln q(old | new)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockProposal {
    pub values: Vec<f64>,
    pub log_q_forward: f64,
    pub log_q_reverse: f64,
}

impl BlockProposal {
    /// `ln q(old | new) − ln q(new | old)`.
    pub fn hastings_log_ratio(&self) -> f64 {
        self.log_q_reverse - self.log_q_forward
    }
}

/// Proposes `ρ'` from the outermost bin inward: `ρ'_N ~ TN(ρ_N, left = 0)`,
/// then `ρ'_i ~ TN(ρ_i, left = ρ'_{i+1})`. The reverse density applies the
/// same construction to the move back, so its truncation points are the old
/// neighbours `ρ_{i+1}`.
pub fn propose_rho_block<R: Rng + ?Sized>(rng: &mut R, current: &[f64], step_sd: &[f64]) -> BlockProposal {
    let n = current.len();
    let mut values = vec![0.0; n];
    let mut fwd = 0.0;
    let mut rev = 0.0;
    for i in (0..n).rev() {
        let new_lower = if i + 1 == n { 0.0 } else { values[i + 1] };
        let old_lower = if i + 1 == n { 0.0 } else { current[i + 1] };
        let sd = step_sd[i];
        values[i] = truncnorm_sample(rng, current[i], sd, new_lower);
        fwd += truncnorm_logpdf(values[i], current[i], sd, new_lower);
        rev += truncnorm_logpdf(current[i], values[i], sd, old_lower);
    }
    BlockProposal { values, log_q_forward: fwd, log_q_reverse: rev }
}

/// Proposes every `f'_j ~ TN(f_j, left = 0)` independently.
pub fn propose_f_block<R: Rng + ?Sized>(rng: &mut R, current: &[f64], step_sd: f64) -> BlockProposal {
    let mut fwd = 0.0;
    let mut rev = 0.0;
    let values = current
        .iter()
        .map(|&c| {
            let x = truncnorm_sample(rng, c, step_sd, 0.0);
            fwd += truncnorm_logpdf(x, c, step_sd, 0.0);
            rev += truncnorm_logpdf(c, x, step_sd, 0.0);
            x
        })
        .collect();
    BlockProposal { values, log_q_forward: fwd, log_q_reverse: rev }
}
