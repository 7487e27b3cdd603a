//! Per-index picture of a malicious client's knowledge after each addition.

use std::io::Write;
use std::iter;

use qpq_core::lsa::{self, GreedyConfig};
use qpq_core::sources::{Placement, Reporting, SourceParams};
use qpq_core::{BitState, ObliviousKey};
use serde::Serialize;

use super::padded;
use crate::config::{ExperimentConfig, Format};
use crate::seeds;

pub const UNKNOWN: u8 = 0;
pub const KNOWN: u8 = 1;
pub const CORRELATED: u8 = 2;

#[derive(Clone, Debug)]
pub struct Params {
    pub n: usize,
    pub l: usize,
    pub mu: f64,
    pub seed: u64,
}

impl Params {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        Self {
            n: cfg.n_or(&[2500])[0],
            l: cfg.l_or(&[8])[0],
            mu: cfg.mu.unwrap_or(0.1),
            seed: cfg.seed(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Snapshot {
    pub k: usize,
    pub known: usize,
    pub correlated: usize,
    /// 0 unknown, 1 known, 2 parity-correlated.
    pub classes: Vec<u8>,
}

fn classify(key: &ObliviousKey) -> Vec<u8> {
    key.knowledge()
        .states()
        .iter()
        .map(|s| match s {
            BitState::Unknown => UNKNOWN,
            BitState::Known(_) => KNOWN,
            BitState::Linked { .. } => CORRELATED,
        })
        .collect()
}

pub fn run(params: &Params) -> anyhow::Result<Vec<Snapshot>> {
    let mut rng = seeds::rng(params.seed, "fig2", params.n as u64, 0);
    let len = padded(params.n, params.l);
    let leaky = SourceParams::weak_coherent(params.mu, Reporting::MaliciousMultiphoton)?;
    let source = iter::from_fn(|| {
        lsa::rrdps_substring(len, params.l, &leaky, Placement::SingleKnown, &mut rng).ok()
    });
    let mut snaps = Vec::new();
    lsa::lsa_malicious_greedy(source, GreedyConfig::new(params.l, 1), |step, key| {
        snaps.push(Snapshot {
            k: step.k,
            known: step.known,
            correlated: step.correlated,
            classes: classify(key),
        })
    })?;
    Ok(snaps)
}

/// CSV matrix: one row per `k`, one column per index.
pub fn write(snaps: &[Snapshot], format: Format, out: &mut dyn Write) -> anyhow::Result<()> {
    match format {
        Format::Json => crate::output::write_rows(snaps, format, out),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut *out);
            let width = snaps.first().map_or(0, |s| s.classes.len());
            let mut header = vec!["k".to_string(), "known".into(), "correlated".into()];
            header.extend((0..width).map(|i| format!("i{i}")));
            w.write_record(&header)?;
            for s in snaps {
                let mut rec = vec![
                    s.k.to_string(),
                    s.known.to_string(),
                    s.correlated.to_string(),
                ];
                rec.extend(s.classes.iter().map(|c| c.to_string()));
                w.write_record(&rec)?;
            }
            w.flush()?;
            Ok(())
        }
    }
}
