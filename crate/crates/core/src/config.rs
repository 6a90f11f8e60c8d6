//! Flat `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Relative paths resolve against
//! the directory holding the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::ChainSettings;
use crate::model::UnitSystem;
use crate::projection::ProjectionConfig;

/// Every recognised key, in the order `config_resolved.json` lists them.
pub const KEYS: &[&str] = &[
    "catalog",
    "output_dir",
    "code_units",
    "n_iter",
    "burn_in",
    "thin",
    "seed",
    "chains",
    "gl_order",
    "gh_nodes",
    "error_convolution",
    "parallel_likelihood",
    "adapt",
    "adapt_target",
    "raw_counts",
    "outer_margin",
    "prior_sd_factor",
    "prior_sd_floor",
    "rho_step_fraction",
    "f_step_fraction",
    "hpd_mass",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub catalog: PathBuf,
    pub output_dir: PathBuf,
    pub units: UnitSystem,
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub chains: usize,
    pub projection: ProjectionConfig,
    pub adapt: bool,
    pub adapt_target: f64,
    pub raw_counts: bool,
    /// Fractional extension of the outermost radial edge beyond `max R_p`.
    pub outer_margin: f64,
    pub prior_sd_factor: f64,
    pub prior_sd_floor: f64,
    /// Initial ρ step sd as a fraction of each bin's seed.
    pub rho_step_fraction: f64,
    /// Initial f step sd as a fraction of the f seed.
    pub f_step_fraction: f64,
    pub hpd_mass: f64,
}

impl RunConfig {
    /// Defaults for everything except the two paths.
    pub fn new(catalog: PathBuf, output_dir: PathBuf) -> Self {
        Self {
            catalog,
            output_dir,
            units: UnitSystem::Physical,
            n_iter: 20_000,
            burn_in: 5_000,
            thin: 10,
            seed: 1,
            chains: 2,
            projection: ProjectionConfig::default(),
            adapt: true,
            adapt_target: 0.234,
            raw_counts: false,
            outer_margin: 0.1,
            prior_sd_factor: 10.0,
            prior_sd_floor: 1.0,
            rho_step_fraction: 0.05,
            f_step_fraction: 0.1,
            hpd_mass: 0.95,
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses and validates. Any error here is a configuration error.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut catalog = None;
        let mut output_dir = None;
        let mut cfg = RunConfig::new(PathBuf::new(), PathBuf::new());
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = i + 1;
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {lineno}: expected key = value")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::Config(format!("line {lineno}: unknown key '{key}'")));
            }
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {lineno}: duplicate key '{key}'")));
            }
            let bad = |what: &str| Error::Config(format!("line {lineno}: {key} expects {what}, got '{value}'"));
            let int = || value.parse::<usize>().map_err(|_| bad("a non-negative integer"));
            let real = || value.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| bad("a finite number"));
            let flag = || value.parse::<bool>().map_err(|_| bad("true or false"));
            let path = || {
                if value.is_empty() {
                    Err(bad("a path"))
                } else {
                    Ok(base_dir.join(value))
                }
            };
            match key {
                "catalog" => catalog = Some(path()?),
                "output_dir" => output_dir = Some(path()?),
                "code_units" => {
                    cfg.units = if flag()? { UnitSystem::Code } else { UnitSystem::Physical }
                }
                "n_iter" => cfg.n_iter = int()?,
                "burn_in" => cfg.burn_in = int()?,
                "thin" => cfg.thin = int()?,
                "seed" => cfg.seed = value.parse().map_err(|_| bad("a non-negative integer"))?,
                "chains" => cfg.chains = int()?,
                "gl_order" => cfg.projection.gl_order = int()?,
                "gh_nodes" => cfg.projection.gh_nodes = int()?,
                "error_convolution" => cfg.projection.convolve_errors = flag()?,
                "parallel_likelihood" => cfg.projection.parallel = flag()?,
                "adapt" => cfg.adapt = flag()?,
                "adapt_target" => cfg.adapt_target = real()?,
                "raw_counts" => cfg.raw_counts = flag()?,
                "outer_margin" => cfg.outer_margin = real()?,
                "prior_sd_factor" => cfg.prior_sd_factor = real()?,
                "prior_sd_floor" => cfg.prior_sd_floor = real()?,
                "rho_step_fraction" => cfg.rho_step_fraction = real()?,
                "f_step_fraction" => cfg.f_step_fraction = real()?,
                "hpd_mass" => cfg.hpd_mass = real()?,
                _ => unreachable!(),
            }
        }
        cfg.catalog = catalog.ok_or_else(|| Error::Config("missing required key 'catalog'".into()))?;
        cfg.output_dir = output_dir.ok_or_else(|| Error::Config("missing required key 'output_dir'".into()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn chain_settings(&self) -> ChainSettings {
        ChainSettings { n_iter: self.n_iter, burn_in: self.burn_in, thin: self.thin }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if let Err(e) = self.chain_settings().validate() {
            return fail(e.to_string());
        }
        if self.chains == 0 {
            return fail("chains must be >= 1".into());
        }
        if let Err(e) = self.projection.validate() {
            return fail(e.to_string());
        }
        if !(self.adapt_target > 0.0 && self.adapt_target < 1.0) {
            return fail("adapt_target must lie in (0, 1)".into());
        }
        if !(self.hpd_mass > 0.0 && self.hpd_mass < 1.0) {
            return fail("hpd_mass must lie in (0, 1)".into());
        }
        if !(self.outer_margin > 0.0) {
            return fail("outer_margin must be > 0 so the outermost datum has support".into());
        }
        for (name, v) in [
            ("prior_sd_factor", self.prior_sd_factor),
            ("prior_sd_floor", self.prior_sd_floor),
            ("rho_step_fraction", self.rho_step_fraction),
            ("f_step_fraction", self.f_step_fraction),
        ] {
            if !(v > 0.0) {
                return fail(format!("{name} must be > 0"));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Worker cap from `DARKMASS_THREADS`; `None` when unset.
pub fn thread_cap() -> Result<Option<usize>> {
    match std::env::var("DARKMASS_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("DARKMASS_THREADS must be a positive integer, got '{v}'"))),
        },
    }
}
