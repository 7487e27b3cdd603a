//! Single protocol sessions, recorded as JSON lines.

use anyhow::Context;
use qpq_core::protocol::{self, ProtocolTranscript, SessionConfig, Variant};
use qpq_core::sources::{Reporting, SourceParams};
use serde::{Deserialize, Serialize};

use super::par_runs;
use crate::config::{ExperimentConfig, SourceArg, VariantArg};
use crate::seeds;

/// One line of session output.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Record {
    pub run: u64,
    pub seed: u64,
    pub n: usize,
    pub l: usize,
    pub k: usize,
    pub source: SourceParams,
    /// Retrieved value equals the database item.
    pub correct: bool,
    pub transcript: ProtocolTranscript,
}

pub fn session_config(cfg: &ExperimentConfig) -> anyhow::Result<SessionConfig> {
    let mu = cfg.mu.unwrap_or(0.1);
    let source = match cfg.source.unwrap_or(SourceArg::Ideal) {
        SourceArg::Ideal => SourceParams::ideal(),
        SourceArg::Wcs => SourceParams::weak_coherent(mu, Reporting::Honest)?,
        SourceArg::Leaky => SourceParams::weak_coherent(mu, Reporting::MaliciousMultiphoton)?,
    };
    let variant = match cfg.variant.unwrap_or(VariantArg::Improved) {
        VariantArg::Original => Variant::Original,
        VariantArg::Improved => Variant::Improved,
        VariantArg::Generic => Variant::Generic,
    };
    let s = SessionConfig {
        variant,
        n: cfg.n_or(&[64])[0],
        l: cfg.l_or(&[8])[0],
        k: cfg.k.unwrap_or(8),
        address: cfg.address.unwrap_or(1),
        source,
        p: cfg.p.unwrap_or(0.25),
        seed: cfg.seed(),
    };
    s.validate().context("invalid session parameters")?;
    Ok(s)
}

pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<Vec<Record>> {
    let base = session_config(cfg)?;
    par_runs(cfg.runs_or(1), |run| {
        let seed = seeds::derive(base.seed, "session", 0, run);
        let sc = SessionConfig { seed, ..base };
        let out = protocol::run_session(&sc)?;
        Ok(Record {
            run,
            seed,
            n: sc.n,
            l: sc.l,
            k: sc.k,
            source: sc.source,
            correct: out.database.get(sc.address) == Some(out.transcript.retrieved),
            transcript: out.transcript,
        })
    })
}
