use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::fail::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Table,
}

/// Settings shared by every subcommand. Each may come from a flag or from
/// the `--config` file; a value in the file replaces the flag.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Total privacy budget.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub epsilon: Option<f64>,
    /// Split threshold [default: 0].
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Children per split node. Spatial: a power of two up to 2^d
    /// [default: 2^d]. Sequences: must equal the alphabet size plus one.
    #[arg(long, global = true)]
    pub fanout: Option<u32>,
    /// No node deeper than this is split [default: 40].
    #[arg(long, global = true)]
    pub depth_cap: Option<u32>,
    /// Share of epsilon spent on the structure [default: 0.5 spatial,
    /// 1/fanout sequences].
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub budget_split: Option<f64>,
    /// Maximum sequence length kept (longer ones are truncated).
    #[arg(long, global = true)]
    pub lmax: Option<usize>,
    /// Master seed [default: 0].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Skip all noise. For testing only: the output is NOT private.
    #[arg(long, global = true)]
    #[serde(default)]
    pub noiseless: bool,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for parallel sections (0 = one per core).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Input data file.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Output file [default: standard output].
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Spatial domain as lo1,...,lod,hi1,...,hid [default: unit cube].
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub domain: Option<Vec<f64>>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f; } )*
    };
}

impl RunConfig {
    /// Fields set in `top` replace those of `self`.
    pub fn overlay(mut self, top: RunConfig) -> RunConfig {
        overlay!(self, top; epsilon, theta, fanout, depth_cap, budget_split, lmax, seed, format, jobs, input, output, domain);
        self.noiseless |= top.noiseless;
        self
    }

    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("config {}: {e}", path.display())))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }

    pub fn theta(&self) -> Result<f64, CliError> {
        let theta = self.theta.unwrap_or(0.0);
        if theta.is_finite() {
            Ok(theta)
        } else {
            Err(CliError::config(format!("--theta must be finite, got {theta}")))
        }
    }

    pub fn epsilon(&self) -> Result<f64, CliError> {
        let eps = self.epsilon.ok_or_else(|| CliError::config("--epsilon is required"))?;
        if eps.is_finite() && eps > 0.0 {
            Ok(eps)
        } else {
            Err(CliError::config(format!("--epsilon must be positive and finite, got {eps}")))
        }
    }

    pub fn budget_split(&self) -> Result<Option<f64>, CliError> {
        match self.budget_split {
            Some(r) if !(r > 0.0 && r < 1.0) => {
                Err(CliError::config(format!("--budget-split must lie strictly between 0 and 1, got {r}")))
            }
            r => Ok(r),
        }
    }

    pub fn depth_cap(&self) -> u32 {
        self.depth_cap.unwrap_or(privtree::spatial::DEFAULT_DEPTH_CAP)
    }

    pub fn lmax(&self) -> Result<usize, CliError> {
        match self.lmax {
            None => Err(CliError::config("--lmax is required")),
            Some(0) => Err(CliError::config("--lmax must be at least 1")),
            Some(l) => Ok(l),
        }
    }

    pub fn input(&self) -> Result<&Path, CliError> {
        self.input.as_deref().ok_or_else(|| CliError::config("--input is required"))
    }

    /// Parsed `--domain`, if given.
    pub fn domain(&self) -> Result<Option<privtree::spatial::SpatialDomain>, CliError> {
        let Some(flat) = &self.domain else { return Ok(None) };
        if flat.is_empty() || flat.len() % 2 != 0 {
            return Err(CliError::config("--domain needs lo1,...,lod,hi1,...,hid"));
        }
        let (lo, hi) = flat.split_at(flat.len() / 2);
        privtree::spatial::SpatialDomain::new(lo.to_vec(), hi.to_vec())
            .map(Some)
            .map_err(|e| CliError::config(format!("--domain: {e}")))
    }

    /// Spatial fanout, checked as far as possible without the data.
    pub fn spatial_fanout(&self, dims: Option<usize>) -> Result<Option<u32>, CliError> {
        let Some(f) = self.fanout else { return Ok(None) };
        if f < 2 || !f.is_power_of_two() {
            return Err(CliError::config(format!("--fanout must be a power of two >= 2, got {f}")));
        }
        if let Some(d) = dims {
            if f.trailing_zeros() as usize > d {
                return Err(CliError::config(format!("--fanout {f} exceeds 2^{d} for a {d}-dimensional domain")));
            }
        }
        Ok(Some(f))
    }
}
