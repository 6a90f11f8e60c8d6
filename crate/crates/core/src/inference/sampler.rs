//! Two-block Metropolis-within-Gibbs: the `ρ` block first, then the `f` block
//! at the updated `ρ`. Each block is a single joint Metropolis–Hastings
//! decision.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::likelihood::Likelihood;
use super::prior::{constraints_hold, PriorSpec};
use super::proposal::{propose_f_block, propose_rho_block, BlockProposal, ProposalSpec};
use crate::error::{Error, Result};

/// Iterations between burn-in adaptation steps.
pub const ADAPT_WINDOW: usize = 100;
/// Multiplicative step-size change per adaptation step is `exp(±ADAPT_LOG_STEP)`.
pub const ADAPT_LOG_STEP: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainSettings {
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
}

impl ChainSettings {
    pub fn validate(&self) -> Result<()> {
        if self.n_iter <= self.burn_in {
            return Err(Error::Usage(format!(
                "n_iter ({}) must exceed burn_in ({})",
                self.n_iter, self.burn_in
            )));
        }
        if self.thin == 0 {
            return Err(Error::Usage("thin must be >= 1".into()));
        }
        Ok(())
    }
}

/// Current position of a chain together with the likelihood cache for its `ρ`.
#[derive(Clone, Debug)]
pub struct ChainState<C> {
    pub rho: Vec<f64>,
    pub f: Vec<f64>,
    pub log_like: f64,
    pub log_prior: f64,
    pub cache: C,
}

impl<C> ChainState<C> {
    pub fn log_post(&self) -> f64 {
        self.log_like + self.log_prior
    }
}

/// A stored (post burn-in, thinned) state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub iteration: usize,
    pub rho: Vec<f64>,
    pub f: Vec<f64>,
    pub log_like: f64,
    pub log_post: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adaptation {
    pub iteration: usize,
    pub rho_scale: f64,
    pub f_scale: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptanceCounts {
    pub rho: usize,
    pub f: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub seed: u64,
    pub iterations: usize,
    pub settings: ChainSettings,
    pub samples: Vec<Sample>,
    pub accepted: AcceptanceCounts,
    /// Step sds in force after burn-in.
    pub rho_step_sd: Vec<f64>,
    pub f_step_sd: f64,
    pub adaptations: Vec<Adaptation>,
}

impl Chain {
    pub fn rho_acceptance(&self) -> f64 {
        self.accepted.rho as f64 / self.iterations.max(1) as f64
    }

    pub fn f_acceptance(&self) -> f64 {
        self.accepted.f as f64 / self.iterations.max(1) as f64
    }

    /// The stored sample with the largest log-posterior.
    pub fn map_sample(&self) -> Option<&Sample> {
        self.samples
            .iter()
            .max_by(|a, b| a.log_post.partial_cmp(&b.log_post).unwrap_or(std::cmp::Ordering::Less))
    }
}

/// Metropolis–Hastings acceptance test on a log ratio; `NaN` is rejected.
pub fn mh_accept<R: Rng + ?Sized>(rng: &mut R, log_alpha: f64) -> bool {
    if log_alpha.is_nan() {
        return false;
    }
    if log_alpha >= 0.0 {
        return true;
    }
    let u: f64 = rng.random();
    u.ln() < log_alpha
}

/// Log acceptance ratio of a block move.
pub fn block_log_alpha(current_log_post: f64, proposed_log_post: f64, proposal: &BlockProposal, hastings: bool) -> f64 {
    if proposed_log_post == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let delta = proposed_log_post - current_log_post;
    if hastings {
        delta + proposal.hastings_log_ratio()
    } else {
        delta
    }
}

pub struct Sampler<'a, L: Likelihood> {
    likelihood: &'a L,
    prior: &'a PriorSpec,
    proposal: ProposalSpec,
    /// Applies the `q` correction in the acceptance ratio. Disabling it gives
    /// a deliberately biased sampler for regression tests.
    pub hastings_correction: bool,
}

impl<'a, L: Likelihood> Sampler<'a, L> {
    pub fn new(likelihood: &'a L, prior: &'a PriorSpec, proposal: ProposalSpec) -> Self {
        Self { likelihood, prior, proposal, hastings_correction: true }
    }

    pub fn proposal(&self) -> &ProposalSpec {
        &self.proposal
    }

    pub fn init_state(&self, rho: Vec<f64>, f: Vec<f64>) -> Result<ChainState<L::Cache>> {
        self.prior.validate(rho.len(), f.len())?;
        self.proposal.validate(rho.len())?;
        if !constraints_hold(&rho, &f) {
            return Err(Error::Usage("initial state violates the parameter constraints".into()));
        }
        let cache = self.likelihood.prepare(&rho)?;
        let log_like = self.likelihood.log_likelihood(&cache, &f);
        let log_prior = self.prior.log_prior(&rho, &f);
        if !(log_like + log_prior).is_finite() {
            return Err(Error::Usage(
                "initial state has zero posterior density (some datum is unbound)".into(),
            ));
        }
        Ok(ChainState { rho, f, log_like, log_prior, cache })
    }

    /// One sweep: `ρ` block, then `f` block at the updated `ρ`.
    pub fn gibbs_iteration<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        state: &mut ChainState<L::Cache>,
        rho_step_sd: &[f64],
        f_step_sd: f64,
    ) -> Result<AcceptanceCounts> {
        let mut acc = AcceptanceCounts::default();

        let prop = propose_rho_block(rng, &state.rho, rho_step_sd);
        let log_prior = self.prior.log_prior(&prop.values, &state.f);
        let (cache, log_like) = if log_prior == f64::NEG_INFINITY {
            (None, f64::NEG_INFINITY)
        } else {
            let cache = self.likelihood.prepare(&prop.values)?;
            let ll = self.likelihood.log_likelihood(&cache, &state.f);
            (Some(cache), ll)
        };
        let alpha = block_log_alpha(state.log_post(), log_like + log_prior, &prop, self.hastings_correction);
        if mh_accept(rng, alpha) {
            state.rho = prop.values;
            state.cache = cache.expect("accepted proposals have a cache");
            state.log_like = log_like;
            state.log_prior = log_prior;
            acc.rho = 1;
        }

        let prop = propose_f_block(rng, &state.f, f_step_sd);
        let log_prior = self.prior.log_prior(&state.rho, &prop.values);
        let log_like = if log_prior == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.likelihood.log_likelihood(&state.cache, &prop.values)
        };
        let alpha = block_log_alpha(state.log_post(), log_like + log_prior, &prop, self.hastings_correction);
        if mh_accept(rng, alpha) {
            state.f = prop.values;
            state.log_like = log_like;
            state.log_prior = log_prior;
            acc.f = 1;
        }
        Ok(acc)
    }

    /// Runs `settings.n_iter` sweeps from `init`, adapting step sizes during
    /// burn-in (when enabled) and storing every `thin`-th later state.
    pub fn run(&self, seed: u64, init_rho: Vec<f64>, init_f: Vec<f64>, settings: ChainSettings) -> Result<Chain> {
        settings.validate()?;
        let mut state = self.init_state(init_rho, init_f)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base_rho = self.proposal.rho_step_sd.clone();
        let base_f = self.proposal.f_step_sd;
        let mut rho_scale = 1.0;
        let mut f_scale = 1.0;
        let mut rho_sd = base_rho.clone();
        let mut f_sd = base_f;
        let mut window = AcceptanceCounts::default();
        let mut total = AcceptanceCounts::default();
        let mut adaptations = Vec::new();
        let kept = (settings.n_iter - settings.burn_in).div_ceil(settings.thin);
        let mut samples = Vec::with_capacity(kept);
        let target = self.proposal.adapt_target;

        for it in 0..settings.n_iter {
            let acc = self.gibbs_iteration(&mut rng, &mut state, &rho_sd, f_sd)?;
            total.rho += acc.rho;
            total.f += acc.f;
            window.rho += acc.rho;
            window.f += acc.f;
            if (it + 1) % ADAPT_WINDOW == 0 {
                if self.proposal.adapt && it < settings.burn_in {
                    let w = ADAPT_WINDOW as f64;
                    rho_scale *= step_factor(window.rho as f64 / w, target);
                    f_scale *= step_factor(window.f as f64 / w, target);
                    rho_sd = base_rho.iter().map(|s| s * rho_scale).collect();
                    f_sd = base_f * f_scale;
                    adaptations.push(Adaptation { iteration: it + 1, rho_scale, f_scale });
                }
                window = AcceptanceCounts::default();
            }
            if it >= settings.burn_in && (it - settings.burn_in).is_multiple_of(settings.thin) {
                samples.push(Sample {
                    iteration: it,
                    rho: state.rho.clone(),
                    f: state.f.clone(),
                    log_like: state.log_like,
                    log_post: state.log_post(),
                });
            }
        }
        Ok(Chain {
            seed,
            iterations: settings.n_iter,
            settings,
            samples,
            accepted: total,
            rho_step_sd: rho_sd,
            f_step_sd: f_sd,
            adaptations,
        })
    }
}

fn step_factor(rate: f64, target: f64) -> f64 {
    if rate > target {
        ADAPT_LOG_STEP.exp()
    } else {
        (-ADAPT_LOG_STEP).exp()
    }
}

/// Convenience wrapper around [`Sampler::run`].
pub fn run_chain<L: Likelihood>(
    seed: u64,
    init_rho: Vec<f64>,
    init_f: Vec<f64>,
    likelihood: &L,
    prior: &PriorSpec,
    proposal: &ProposalSpec,
    settings: ChainSettings,
) -> Result<Chain> {
    Sampler::new(likelihood, prior, proposal.clone()).run(seed, init_rho, init_f, settings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::likelihood::FlatLikelihood;

    fn prior() -> PriorSpec {
        PriorSpec { rho_seeds: vec![1.0, 0.5], rho_prior_sd: vec![1.0, 1.0], f_seed: 0.5, f_prior_sd: 1.0 }
    }

    fn proposal() -> ProposalSpec {
        ProposalSpec { rho_step_sd: vec![0.5, 0.5], f_step_sd: 0.5, adapt: true, adapt_target: 0.234 }
    }

    #[test]
    fn identical_proposal_is_always_accepted() {
        let p = BlockProposal { values: vec![1.0], log_q_forward: -0.3, log_q_reverse: -0.3 };
        let alpha = block_log_alpha(-5.0, -5.0, &p, true);
        assert_eq!(alpha, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!((0..1000).all(|_| mh_accept(&mut rng, alpha)));
    }

    #[test]
    fn impossible_proposal_is_rejected() {
        let p = BlockProposal { values: vec![1.0], log_q_forward: -0.3, log_q_reverse: 5.0 };
        let alpha = block_log_alpha(-5.0, f64::NEG_INFINITY, &p, true);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(!mh_accept(&mut rng, alpha));
        assert!(!mh_accept(&mut rng, f64::NAN));
    }

    #[test]
    fn same_seed_same_chain() {
        let like = FlatLikelihood;
        let pr = prior();
        let settings = ChainSettings { n_iter: 3000, burn_in: 1000, thin: 3 };
        let a = run_chain(42, vec![1.0, 0.5], vec![0.5], &like, &pr, &proposal(), settings).unwrap();
        let b = run_chain(42, vec![1.0, 0.5], vec![0.5], &like, &pr, &proposal(), settings).unwrap();
        assert_eq!(a, b);
        let c = run_chain(43, vec![1.0, 0.5], vec![0.5], &like, &pr, &proposal(), settings).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn adaptation_stops_after_burn_in() {
        let like = FlatLikelihood;
        let pr = prior();
        let settings = ChainSettings { n_iter: 5000, burn_in: 2000, thin: 1 };
        let chain = run_chain(7, vec![1.0, 0.5], vec![0.5], &like, &pr, &proposal(), settings).unwrap();
        assert_eq!(chain.adaptations.len(), 20);
        assert!(chain.adaptations.iter().all(|a| a.iteration <= settings.burn_in));
        let last = chain.adaptations.last().unwrap();
        for (sd, base) in chain.rho_step_sd.iter().zip(&proposal().rho_step_sd) {
            assert!((sd - base * last.rho_scale).abs() < 1e-15);
        }
        assert_eq!(chain.samples.len(), 3000);
        assert!(chain.rho_acceptance() > 0.0 && chain.rho_acceptance() < 1.0);
        assert!(chain.f_acceptance() > 0.0 && chain.f_acceptance() < 1.0);
    }

    #[test]
    fn invalid_settings_and_init() {
        let like = FlatLikelihood;
        let pr = prior();
        let bad = ChainSettings { n_iter: 10, burn_in: 10, thin: 1 };
        assert!(run_chain(1, vec![1.0, 0.5], vec![0.5], &like, &pr, &proposal(), bad).is_err());
        let ok = ChainSettings { n_iter: 10, burn_in: 0, thin: 1 };
        assert!(matches!(
            run_chain(1, vec![0.5, 1.0], vec![0.5], &like, &pr, &proposal(), ok),
            Err(Error::Usage(_))
        ));
        assert!(run_chain(1, vec![1.0, 0.5], vec![0.5], &like, &pr, &proposal(), ChainSettings { thin: 0, ..ok }).is_err());
    }
}
