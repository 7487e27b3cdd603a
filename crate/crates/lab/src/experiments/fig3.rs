//! Mean known final-key bits against `k` for low and full-range shifts.

use std::iter;

use qpq_core::lsa::{self, GreedyConfig, ShiftChoice, ShiftRange};
use qpq_core::sources::gen_generic_raw_key;
use serde::Serialize;

use super::{padded, par_runs};
use crate::config::ExperimentConfig;
use crate::seeds;
use crate::stats::RunStats;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Series {
    /// Sifted keys, optimal shifts within `-(l-1) ..= l-1`.
    LowShift,
    /// Unsifted keys, Alice picks the best of all `N` cyclic shifts.
    FullRange,
    /// Unsifted keys, uniformly random cyclic shifts.
    FullUniform,
}

#[derive(Clone, Debug)]
pub struct Params {
    pub n: usize,
    pub l: Vec<usize>,
    pub p: f64,
    pub k_max: usize,
    pub runs: usize,
    pub seed: u64,
}

impl Params {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        Self {
            n: cfg.n_or(&[10_000])[0],
            l: cfg.l_or(&[8, 10, 16]),
            p: cfg.p.unwrap_or(0.25),
            k_max: cfg.k_max.unwrap_or(24),
            runs: cfg.runs_or(100),
            seed: cfg.seed(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub series: Series,
    /// Block length of the low-shift series; 0 for full-range series.
    pub l: usize,
    pub k: usize,
    pub runs: usize,
    pub mean_n_a: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

/// Known-bit count after each of `k_max` additions. A run that reaches zero
/// early stays at zero.
fn curve(trace: &lsa::LsaTrace, k_max: usize) -> Vec<usize> {
    let mut c: Vec<usize> = trace.steps.iter().map(|s| s.known).collect();
    let last = c.last().copied().unwrap_or(0);
    c.resize(k_max, last);
    c
}

pub fn single_curve(
    params: &Params,
    series: Series,
    l: usize,
    run: u64,
) -> anyhow::Result<Vec<usize>> {
    let label = format!("fig3/{series:?}/l{l}");
    let mut rng = seeds::rng(params.seed, &label, params.n as u64, run);
    match series {
        Series::LowShift => {
            let len = padded(params.n, l);
            let source =
                iter::from_fn(|| Some(lsa::sifted_generic_key(len, l, params.p, &mut rng).ok()?.0));
            let cfg = GreedyConfig {
                l,
                stop: 0,
                max_k: params.k_max,
            };
            let out = lsa::lsa_malicious_greedy(source, cfg, |_, _| {})?;
            Ok(curve(&out.trace, params.k_max))
        }
        Series::FullRange | Series::FullUniform => {
            let choice = if series == Series::FullRange {
                ShiftChoice::Optimal
            } else {
                ShiftChoice::Uniform
            };
            let mut key_rng =
                seeds::rng(params.seed, &format!("{label}/keys"), params.n as u64, run);
            let source =
                iter::from_fn(|| gen_generic_raw_key(params.n, params.p, &mut key_rng).ok());
            let out = lsa::shift_add(source, ShiftRange::Full, choice, 0, params.k_max, &mut rng)?;
            Ok(curve(&out.trace, params.k_max))
        }
    }
}

/// Per-`k` stats of one series.
pub fn series_stats(params: &Params, series: Series, l: usize) -> anyhow::Result<Vec<RunStats>> {
    let curves = par_runs(params.runs, |run| single_curve(params, series, l, run))?;
    Ok((0..params.k_max)
        .map(|k| RunStats::from_values(curves.iter().map(|c| c[k] as f64).collect(), 0))
        .collect())
}

pub fn run(params: &Params) -> anyhow::Result<Vec<Row>> {
    let mut jobs: Vec<(Series, usize)> = params.l.iter().map(|&l| (Series::LowShift, l)).collect();
    jobs.push((Series::FullRange, 0));
    jobs.push((Series::FullUniform, 0));
    let mut rows = Vec::new();
    for (series, l) in jobs {
        for (k, s) in series_stats(params, series, l)?.into_iter().enumerate() {
            rows.push(Row {
                series,
                l,
                k: k + 1,
                runs: s.runs,
                mean_n_a: s.mean,
                std: s.std,
                min: s.min,
                max: s.max,
            });
        }
    }
    Ok(rows)
}
