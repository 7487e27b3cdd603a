//! Queries a leaking client needs to read a whole database through the
//! original protocol.

use qpq_core::attack::{self, AddressStrategy};
use qpq_core::protocol::Database;
use qpq_core::sources::{Reporting, SourceParams};
use serde::Serialize;

use super::par_runs;
use crate::config::ExperimentConfig;
use crate::seeds;
use crate::stats::RunStats;

#[derive(Clone, Debug)]
pub struct Params {
    pub n: Vec<usize>,
    pub mu: f64,
    pub runs: usize,
    pub seed: u64,
    pub strategies: Vec<AddressStrategy>,
}

impl Params {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        let n = if cfg.full_scale() {
            vec![10_000]
        } else {
            vec![900]
        };
        Self {
            n: cfg.n.clone().unwrap_or(n),
            mu: cfg.mu.unwrap_or(0.1),
            runs: cfg.runs_or(25),
            seed: cfg.seed(),
            strategies: vec![AddressStrategy::Optimal, AddressStrategy::Random],
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub n: usize,
    pub strategy: AddressStrategy,
    pub run: u64,
    pub queries: usize,
    pub exact: bool,
    /// Items determined after each query, space separated.
    pub growth: String,
}

/// One recovery. Both strategies see the same database and photon stream
/// for a given `(n, run)`.
pub fn single_run(
    n: usize,
    mu: f64,
    strategy: AddressStrategy,
    master: u64,
    run: u64,
) -> anyhow::Result<attack::RecoveryReport> {
    let mut rng = seeds::rng(master, "attack", n as u64, run);
    let leaky = SourceParams::weak_coherent(mu, Reporting::MaliciousMultiphoton)?;
    let db = Database::random(n, &mut rng)?;
    Ok(attack::run_recovery_on(&db, &leaky, strategy, &mut rng)?)
}

pub fn cell(
    params: &Params,
    n: usize,
    strategy: AddressStrategy,
) -> anyhow::Result<Vec<attack::RecoveryReport>> {
    par_runs(params.runs, |run| {
        single_run(n, params.mu, strategy, params.seed, run)
    })
}

pub fn query_stats(reports: &[attack::RecoveryReport]) -> RunStats {
    RunStats::from_values(reports.iter().map(|r| r.queries as f64).collect(), 0)
}

pub fn run(params: &Params) -> anyhow::Result<Vec<Row>> {
    let mut rows = Vec::new();
    for &n in &params.n {
        for &strategy in &params.strategies {
            for (run, r) in cell(params, n, strategy)?.into_iter().enumerate() {
                rows.push(Row {
                    n,
                    strategy,
                    run: run as u64,
                    queries: r.queries,
                    exact: r.exact,
                    growth: r
                        .growth
                        .iter()
                        .map(|g| g.to_string())
                        .collect::<Vec<_>>()
                        .join(" "),
                });
            }
        }
    }
    Ok(rows)
}
