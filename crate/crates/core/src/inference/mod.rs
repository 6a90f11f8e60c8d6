//! Posterior sampling over `(ρ, f)`.

pub mod likelihood;
pub mod prior;
pub mod proposal;
pub mod sampler;
pub mod truncnorm;

pub use likelihood::{log_likelihood, FlatLikelihood, Likelihood, ProjectedCache, ProjectedLikelihood};
pub use prior::{constraints_hold, log_prior, PriorSpec};
pub use proposal::{propose_f_block, propose_rho_block, BlockProposal, ProposalSpec};
pub use sampler::{run_chain, Chain, ChainSettings, ChainState, Sample, Sampler};
pub use truncnorm::{truncnorm_logpdf, truncnorm_sample};
