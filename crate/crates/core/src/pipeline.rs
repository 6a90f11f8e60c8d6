//! End-to-end run: ingest, binning, sampling, summaries and artifacts.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binning::{bin_catalog, BinningResult};
use crate::catalog::{load_catalog, read_chain_csv, write_chain_csv};
use crate::config::{thread_cap, RunConfig};
use crate::error::{Error, Result};
use crate::inference::{Chain, PriorSpec, ProjectedLikelihood, ProposalSpec, Sampler};
use crate::model::RadialGrid;
use crate::report::svg::{hpd_plot, trace_plot};
use crate::report::{summarise_chains, ChainRecord, SummaryContext, SummaryTable};

pub const FAILED_MARKER: &str = "FAILED";
pub const CONTEXT_FILE: &str = "summary_context.json";
pub const BINNING_FILE: &str = "binning.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Config,
    Ingest,
    Binning,
    Setup,
    Sampling,
    Summary,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Binning => "binning",
            Stage::Setup => "setup",
            Stage::Sampling => "sampling",
            Stage::Summary => "summary",
            Stage::Output => "output",
        };
        f.write_str(s)
    }
}

#[derive(Debug)]
pub struct PipelineError {
    pub stage: Stage,
    pub source: Error,
}

impl PipelineError {
    /// 2 for configuration problems (nothing computed), 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.stage == Stage::Config {
            2
        } else {
            1
        }
    }
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.stage, self.source)
    }
}

impl std::error::Error for PipelineError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, PipelineError>;
}

impl<T, E: Into<Error>> AtStage<T> for std::result::Result<T, E> {
    fn at(self, stage: Stage) -> std::result::Result<T, PipelineError> {
        self.map_err(|e| PipelineError { stage, source: e.into() })
    }
}

/// Per-chain bookkeeping written to `run_info.json`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainInfo {
    pub chain: usize,
    pub seed: u64,
    pub rho_acceptance: f64,
    pub f_acceptance: f64,
    pub final_rho_step_sd: Vec<f64>,
    pub final_f_step_sd: f64,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub output_dir: PathBuf,
    pub binning: BinningResult<f64>,
    pub context: SummaryContext,
    pub chains: Vec<Chain>,
    pub summary: SummaryTable,
}

/// Everything sampling needs, derived from a catalog and a config.
pub struct RunSetup {
    pub binning: BinningResult<f64>,
    pub radial: RadialGrid<f64>,
    pub likelihood: ProjectedLikelihood,
    pub prior: PriorSpec,
    pub proposal: ProposalSpec,
    pub init_rho: Vec<f64>,
    pub init_f: Vec<f64>,
}

/// Bins the catalog, extends the outer radial edge by `outer_margin`, and
/// derives seeds, priors and proposal scales from the empirical density.
pub fn prepare_run(
    cfg: &RunConfig,
    data: crate::projection::ObservationSet<f64>,
) -> std::result::Result<RunSetup, PipelineError> {
    let g = cfg.units.gravitational_constant::<f64>();
    let binning = bin_catalog(&data, g, cfg.raw_counts).at(Stage::Binning)?;
    let radial = binning
        .radial
        .with_outer_edge(binning.radial.outer() * (1.0 + cfg.outer_margin))
        .at(Stage::Setup)?;
    let seeds = binning.empirical_density.clone();
    let n_e = binning.energy.n_bins();
    let prior =
        PriorSpec::with_defaults(seeds.clone(), n_e, binning.energy.lowest(), cfg.prior_sd_factor, cfg.prior_sd_floor);
    prior.validate(seeds.len(), n_e).at(Stage::Setup)?;
    let proposal = ProposalSpec {
        rho_step_sd: seeds.iter().map(|s| (cfg.rho_step_fraction * s).max(f64::MIN_POSITIVE)).collect(),
        f_step_sd: cfg.f_step_fraction * prior.f_seed,
        adapt: cfg.adapt,
        adapt_target: cfg.adapt_target,
    };
    proposal.validate(seeds.len()).at(Stage::Setup)?;
    let likelihood =
        ProjectedLikelihood::new(radial.clone(), binning.energy.clone(), data, cfg.projection.clone(), g)
            .at(Stage::Setup)?;
    let init_f = vec![prior.f_seed; n_e];
    Ok(RunSetup { binning, radial, likelihood, prior, proposal, init_rho: seeds, init_f })
}

/// Runs `cfg.chains` chains (seeds `seed, seed+1, …`) on a pool capped by
/// `DARKMASS_THREADS`.
pub fn run_chains(
    setup: &RunSetup,
    cfg: &RunConfig,
    threads: Option<usize>,
) -> std::result::Result<Vec<Chain>, PipelineError> {
    let workers = threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .clamp(1, cfg.chains);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Unsupported(format!("thread pool: {e}")))
        .at(Stage::Sampling)?;
    let sampler = Sampler::new(&setup.likelihood, &setup.prior, setup.proposal.clone());
    let settings = cfg.chain_settings();
    pool.install(|| {
        (0..cfg.chains)
            .into_par_iter()
            .map(|k| {
                sampler.run(
                    cfg.seed.wrapping_add(k as u64),
                    setup.init_rho.clone(),
                    setup.init_f.clone(),
                    settings,
                )
            })
            .collect::<Result<Vec<_>>>()
    })
    .at(Stage::Sampling)
}

/// Runs the whole pipeline. A `FAILED` marker is left in the output
/// directory when any stage after config validation fails.
pub fn run_pipeline(cfg: &RunConfig) -> std::result::Result<RunOutcome, PipelineError> {
    cfg.validate().at(Stage::Config)?;
    let threads = thread_cap().at(Stage::Config)?;
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir).at(Stage::Output)?;
    let marker = dir.join(FAILED_MARKER);
    if marker.exists() {
        fs::remove_file(&marker).at(Stage::Output)?;
    }
    let result = run_stages(cfg, threads, &dir);
    if let Err(e) = &result {
        let _ = fs::write(&marker, format!("{e}\n"));
    }
    result
}

fn run_stages(
    cfg: &RunConfig,
    threads: Option<usize>,
    dir: &Path,
) -> std::result::Result<RunOutcome, PipelineError> {
    fs::write(dir.join("config_resolved.json"), cfg.to_json().at(Stage::Output)?).at(Stage::Output)?;
    let data = load_catalog(&cfg.catalog).at(Stage::Ingest)?;
    let setup = prepare_run(cfg, data)?;
    write_json(&dir.join(BINNING_FILE), &setup.binning).at(Stage::Output)?;
    let context = SummaryContext {
        radial: setup.radial.clone(),
        energy: setup.binning.energy.clone(),
        g: cfg.units.gravitational_constant(),
        units: cfg.units,
        projection: cfg.projection.clone(),
        hpd_mass: cfg.hpd_mass,
    };
    write_json(&dir.join(CONTEXT_FILE), &context).at(Stage::Output)?;

    let chains = run_chains(&setup, cfg, threads)?;
    let n_rho = setup.radial.n_bins();
    let n_f = setup.binning.energy.n_bins();
    let mut records = Vec::with_capacity(chains.len());
    let mut info = Vec::with_capacity(chains.len());
    for (k, chain) in chains.iter().enumerate() {
        let recs: Vec<ChainRecord> = chain.samples.iter().map(ChainRecord::from).collect();
        write_chain_csv(&dir.join(chain_file_name(k + 1)), &recs, n_rho, n_f).at(Stage::Output)?;
        records.push(recs);
        info.push(ChainInfo {
            chain: k + 1,
            seed: chain.seed,
            rho_acceptance: chain.rho_acceptance(),
            f_acceptance: chain.f_acceptance(),
            final_rho_step_sd: chain.rho_step_sd.clone(),
            final_f_step_sd: chain.f_step_sd,
        });
    }
    write_json(&dir.join("run_info.json"), &info).at(Stage::Output)?;
    let summary = write_summary_artifacts(dir, &records, &context)?;
    Ok(RunOutcome { output_dir: dir.to_path_buf(), binning: setup.binning, context, chains, summary })
}

pub fn chain_file_name(k: usize) -> String {
    format!("chain_{k}.csv")
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

/// Summarises stored chains and writes `summary.json`, `hpd_plot.svg` and the
/// trace plots.
pub fn write_summary_artifacts(
    dir: &Path,
    chains: &[Vec<ChainRecord>],
    ctx: &SummaryContext,
) -> std::result::Result<SummaryTable, PipelineError> {
    let summary = summarise_chains(chains, ctx).at(Stage::Summary)?;
    fs::write(dir.join("summary.json"), summary.to_json().at(Stage::Summary)?).at(Stage::Output)?;
    let radial_centres: Vec<f64> = ctx.radial.edges().windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let plot = hpd_plot(&summary, &radial_centres, &ctx.energy.midpoints());
    fs::write(dir.join("hpd_plot.svg"), plot).at(Stage::Output)?;

    let trace = |name: String, pick: &dyn Fn(&ChainRecord) -> f64| -> std::result::Result<(), PipelineError> {
        let series: Vec<Vec<f64>> = chains.iter().map(|c| c.iter().map(pick).collect()).collect();
        fs::write(dir.join(format!("trace_{name}.svg")), trace_plot(&name, &series)).at(Stage::Output)
    };
    for i in 0..ctx.radial.n_bins() {
        trace(format!("rho_{}", i + 1), &|r| r.rho[i])?;
    }
    for j in 0..ctx.energy.n_bins() {
        trace(format!("f_{}", j + 1), &|r| r.f[j])?;
    }
    trace("log_post".into(), &|r| r.log_post)?;
    Ok(summary)
}

/// Chain files in `dir`, ordered by their numeric index.
pub fn chain_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if let Some(k) = name.strip_prefix("chain_").and_then(|s| s.strip_suffix(".csv")) {
            if let Ok(k) = k.parse::<usize>() {
                found.push((k, path));
            }
        }
    }
    found.sort();
    Ok(found.into_iter().map(|(_, p)| p).collect())
}

/// Recomputes the summary artifacts of a finished run from its chain files.
pub fn summarize_dir(dir: &Path) -> std::result::Result<SummaryTable, PipelineError> {
    let ctx_text = fs::read_to_string(dir.join(CONTEXT_FILE)).at(Stage::Ingest)?;
    let ctx: SummaryContext = serde_json::from_str(&ctx_text).at(Stage::Ingest)?;
    let files = chain_files(dir).at(Stage::Ingest)?;
    if files.is_empty() {
        return Err(PipelineError {
            stage: Stage::Ingest,
            source: Error::Usage(format!("no chain_<k>.csv files in {}", dir.display())),
        });
    }
    let chains = files.iter().map(|p| read_chain_csv(p)).collect::<Result<Vec<_>>>().at(Stage::Ingest)?;
    write_summary_artifacts(dir, &chains, &ctx)
}
