//! Experiment parameters, loadable from a TOML file.
//!
//! Every field is optional; anything left out takes the experiment's default.
//!
//! ```toml
//! experiment = "table2"
//! seed = 7
//! runs = 100
//! n = [10000]
//! l = [8, 10, 16]
//! p = 0.25
//! n_a = [1, 2, 3]
//! format = "csv"
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentId {
    Table1,
    Table2,
    Fig2,
    Fig3,
    Attack,
    Session,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum VariantArg {
    Original,
    Improved,
    Generic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SourceArg {
    /// Single-photon source.
    Ideal,
    /// Weak coherent source, Alice reports honestly.
    Wcs,
    /// Weak coherent source, Alice only reports multi-photon detections.
    Leaky,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<ExperimentId>,
    pub seed: Option<u64>,
    pub runs: Option<usize>,
    pub n: Option<Vec<usize>>,
    pub l: Option<Vec<usize>>,
    pub mu: Option<f64>,
    pub p: Option<f64>,
    pub n_a: Option<Vec<usize>>,
    pub k_max: Option<usize>,
    pub full_scale: Option<bool>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    // session only
    pub variant: Option<VariantArg>,
    pub source: Option<SourceArg>,
    pub k: Option<usize>,
    pub address: Option<usize>,
}

pub const DEFAULT_SEED: u64 = 20_240_601;

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Fields set in `over` replace the ones here.
    pub fn overlay(mut self, over: ExperimentConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if over.$f.is_some() { self.$f = over.$f; } )* };
        }
        take!(
            experiment, seed, runs, n, l, mu, p, n_a, k_max, full_scale, out, format, variant,
            source, k, address
        );
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn runs_or(&self, default: usize) -> usize {
        self.runs.unwrap_or(default)
    }

    pub fn n_or(&self, default: &[usize]) -> Vec<usize> {
        self.n.clone().unwrap_or_else(|| default.to_vec())
    }

    pub fn l_or(&self, default: &[usize]) -> Vec<usize> {
        self.l.clone().unwrap_or_else(|| default.to_vec())
    }

    pub fn full_scale(&self) -> bool {
        self.full_scale.unwrap_or(false)
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.runs == Some(0) {
            bail!("runs must be at least 1");
        }
        for (name, grid) in [("n", &self.n), ("l", &self.l), ("n_a", &self.n_a)] {
            if let Some(g) = grid {
                if g.is_empty() {
                    bail!("grid `{name}` must not be empty");
                }
                if g.contains(&0) {
                    bail!("grid `{name}` must be positive");
                }
            }
        }
        if let Some(mu) = self.mu {
            if !(mu > 0.0 && mu.is_finite()) {
                bail!("mu must be positive");
            }
        }
        if let Some(p) = self.p {
            if !(p > 0.0 && p < 1.0) {
                bail!("p must lie in (0, 1)");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_overlays() {
        let base: ExperimentConfig =
            toml::from_str("experiment = \"table2\"\nseed = 3\nl = [8, 10]\nformat = \"json\"")
                .unwrap();
        assert_eq!(base.experiment, Some(ExperimentId::Table2));
        let merged = base.overlay(ExperimentConfig {
            seed: Some(9),
            ..Default::default()
        });
        assert_eq!(merged.seed(), 9);
        assert_eq!(merged.l_or(&[16]), vec![8, 10]);
        assert_eq!(merged.format(), Format::Json);
    }

    #[test]
    fn rejects_bad_grids() {
        let c = ExperimentConfig {
            n: Some(vec![]),
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = ExperimentConfig {
            runs: Some(0),
            ..Default::default()
        };
        assert!(c.validate().is_err());
        assert!(toml::from_str::<ExperimentConfig>("bogus = 1").is_err());
    }
}
