//! Additions needed in the generic block-sifted model before an optimally
//! shifting client knows at most `n_A` final-key bits.

use std::iter;

use qpq_core::lsa::{self, GreedyConfig};
use serde::Serialize;

use super::{padded, par_runs};
use crate::config::ExperimentConfig;
use crate::seeds;
use crate::stats::RunStats;

#[derive(Clone, Debug)]
pub struct Params {
    pub n: Vec<usize>,
    pub l: Vec<usize>,
    pub n_a: Vec<usize>,
    pub p: f64,
    pub runs: usize,
    pub seed: u64,
}

impl Params {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        Self {
            n: cfg.n_or(&[10_000, 100_000]),
            l: cfg.l_or(&[8, 10, 16]),
            n_a: cfg.n_a.clone().unwrap_or_else(|| vec![3, 2, 1]),
            p: cfg.p.unwrap_or(0.25),
            runs: cfg.runs_or(100),
            seed: cfg.seed(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub n: usize,
    pub l: usize,
    pub n_a: usize,
    pub p: f64,
    pub runs: usize,
    pub nonconverged: usize,
    pub max: f64,
    pub min: f64,
    pub mean: f64,
    pub std: f64,
    pub p_discard: f64,
    pub discarded_fraction: f64,
    pub values: String,
}

/// One greedy run: the first `k` reaching each target, plus the fraction of
/// raw blocks sifted away.
pub struct RunResult {
    pub first_k: Vec<Option<usize>>,
    pub discarded: usize,
    pub total: usize,
}

pub fn single_run(
    n: usize,
    l: usize,
    p: f64,
    targets: &[usize],
    master: u64,
    run: u64,
) -> anyhow::Result<RunResult> {
    let mut rng = seeds::rng(master, &format!("table2/l{l}"), n as u64, run);
    let len = padded(n, l);
    let (mut discarded, mut total) = (0, 0);
    let source = iter::from_fn(|| {
        let (key, report) = lsa::sifted_generic_key(len, l, p, &mut rng).ok()?;
        discarded += report.discarded_blocks.len();
        total += report.total_blocks;
        Some(key)
    });
    let stop = targets.iter().copied().min().unwrap_or(1);
    let out = lsa::lsa_malicious_greedy(source, GreedyConfig::new(l, stop), |_, _| {})?;
    let first_k = targets
        .iter()
        .map(|&t| out.trace.first_k_at_most(t))
        .collect();
    Ok(RunResult {
        first_k,
        discarded,
        total,
    })
}

/// Stats per target for one `(n, l)` cell, in the order of `params.n_a`.
pub fn cell(params: &Params, n: usize, l: usize) -> anyhow::Result<(Vec<RunStats>, f64)> {
    let results = par_runs(params.runs, |run| {
        single_run(n, l, params.p, &params.n_a, params.seed, run)
    })?;
    let stats = (0..params.n_a.len())
        .map(|t| RunStats::from_options(results.iter().map(|r| r.first_k[t].map(|k| k as f64))))
        .collect();
    let (d, t) = results
        .iter()
        .fold((0, 0), |(d, t), r| (d + r.discarded, t + r.total));
    let frac = if t == 0 { 0.0 } else { d as f64 / t as f64 };
    Ok((stats, frac))
}

pub fn run(params: &Params) -> anyhow::Result<Vec<Row>> {
    let mut rows = Vec::new();
    for &n in &params.n {
        for &l in &params.l {
            let (stats, frac) = cell(params, n, l)?;
            for (&n_a, s) in params.n_a.iter().zip(stats) {
                rows.push(Row {
                    n,
                    l,
                    n_a,
                    p: params.p,
                    runs: s.runs,
                    nonconverged: s.nonconverged,
                    max: s.max,
                    min: s.min,
                    mean: s.mean,
                    std: s.std,
                    p_discard: lsa::p_discard(params.p, l),
                    discarded_fraction: frac,
                    values: s.values_text(),
                });
            }
        }
    }
    Ok(rows)
}
