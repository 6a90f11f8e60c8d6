//! Posterior summaries and figures.

pub mod diagnostics;
pub mod hpd;
pub mod mode;
pub mod summary;
pub mod svg;

pub use diagnostics::{effective_sample_size, gelman_rubin, ks_critical_1pct, ks_statistic, ks_statistic_cdf};
pub use hpd::hpd_interval;
pub use mode::marginal_mode;
pub use summary::{
    enclosed_mass_summary, innermost_mass, summarise_chains, ChainRecord, EnclosedMassSummary, ParameterSummary,
    SummaryContext, SummaryTable,
};
