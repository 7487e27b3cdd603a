//! Security parameter `k` needed before an honest or a malicious client is
//! left with a single known final-key bit, for the improved protocol.

use std::iter;

use qpq_core::lsa::{self, GreedyConfig, MAX_ADDITIONS};
use qpq_core::sources::{Placement, Reporting, SourceParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{padded, par_runs};
use crate::config::ExperimentConfig;
use crate::seeds;
use crate::stats::RunStats;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Alice {
    Honest,
    Malicious,
}

#[derive(Clone, Debug)]
pub struct Params {
    pub n: Vec<usize>,
    pub l: usize,
    pub mu: f64,
    pub runs: usize,
    pub seed: u64,
}

impl Params {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        let mut n = vec![900, 2500, 10_000];
        if cfg.full_scale() {
            n.push(90_000);
        }
        Self {
            n: cfg.n.clone().unwrap_or(n),
            l: cfg.l_or(&[8])[0],
            mu: cfg.mu.unwrap_or(0.1),
            runs: cfg.runs_or(100),
            seed: cfg.seed(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub n: usize,
    pub padded_n: usize,
    pub alice: Alice,
    pub l: usize,
    pub mu: f64,
    pub runs: usize,
    pub nonconverged: usize,
    pub max: f64,
    pub min: f64,
    pub mean: f64,
    pub std: f64,
    pub values: String,
}

/// Additions until an honest client, targeting a random address with
/// single-known-bit blocks, knows one bit. `None` if it never gets there.
pub fn honest_k(n: usize, l: usize, master: u64, run: u64) -> anyhow::Result<Option<usize>> {
    let mut rng = seeds::rng(master, "table1/honest", n as u64, run);
    let mut key_rng = ChaCha8Rng::seed_from_u64(rng.random());
    let len = padded(n, l);
    let ideal = SourceParams::ideal();
    let source = iter::from_fn(|| {
        lsa::rrdps_substring(len, l, &ideal, Placement::Physical, &mut key_rng).ok()
    });
    let index = rng.random_range(0..n);
    let out = lsa::lsa_honest_stream(source, index, l, 1, MAX_ADDITIONS, &mut rng)?;
    Ok(out.converged.then(|| out.k()))
}

/// Additions until an optimally shifting client with multi-photon leaks
/// knows one bit.
pub fn malicious_k(
    n: usize,
    l: usize,
    mu: f64,
    master: u64,
    run: u64,
) -> anyhow::Result<Option<usize>> {
    let mut rng = seeds::rng(master, "table1/malicious", n as u64, run);
    let len = padded(n, l);
    let leaky = SourceParams::weak_coherent(mu, Reporting::MaliciousMultiphoton)?;
    let source = iter::from_fn(|| {
        lsa::rrdps_substring(len, l, &leaky, Placement::SingleKnown, &mut rng).ok()
    });
    let out = lsa::lsa_malicious_greedy(source, GreedyConfig::new(l, 1), |_, _| {})?;
    Ok(out.converged.then(|| out.k()))
}

pub fn cell(params: &Params, n: usize, alice: Alice) -> anyhow::Result<RunStats> {
    let ks = par_runs(params.runs, |run| match alice {
        Alice::Honest => honest_k(n, params.l, params.seed, run),
        Alice::Malicious => malicious_k(n, params.l, params.mu, params.seed, run),
    })?;
    Ok(RunStats::from_options(
        ks.into_iter().map(|k| k.map(|k| k as f64)),
    ))
}

pub fn run(params: &Params) -> anyhow::Result<Vec<Row>> {
    let mut rows = Vec::new();
    for &n in &params.n {
        for alice in [Alice::Honest, Alice::Malicious] {
            let s = cell(params, n, alice)?;
            rows.push(Row {
                n,
                padded_n: padded(n, params.l),
                alice,
                l: params.l,
                mu: params.mu,
                runs: s.runs,
                nonconverged: s.nonconverged,
                max: s.max,
                min: s.min,
                mean: s.mean,
                std: s.std,
                values: s.values_text(),
            });
        }
    }
    Ok(rows)
}
