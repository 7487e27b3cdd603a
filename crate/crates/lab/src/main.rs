use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use qpq_lab::config::{ExperimentConfig, ExperimentId, Format, SourceArg, VariantArg};
use qpq_lab::experiments::{attack, fig2, fig3, session, table1, table2};
use qpq_lab::{output, verify};

/// Monte Carlo experiments for private query protocols built on oblivious
/// key transfer.
#[derive(Parser)]
#[command(name = "qpq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// k needed by honest and malicious clients (l = 8, mu = 0.1).
    Table1(Common),
    /// k needed in the generic block-sifted model.
    Table2(Common),
    /// Knowledge map after each addition of one malicious run.
    Fig2(Common),
    /// Mean known bits against k for low and full-range shifts.
    Fig3(Common),
    /// Database recovery attack on the original protocol.
    Attack(Common),
    /// Protocol sessions as JSON lines.
    Session(SessionArgs),
    /// Run every reference check; exits nonzero on failure.
    Verify(VerifyArgs),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    /// Database sizes (comma separated).
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Block lengths (comma separated).
    #[arg(long, value_delimiter = ',')]
    l: Option<Vec<usize>>,
    /// Mean photon number of the weak coherent source.
    #[arg(long)]
    mu: Option<f64>,
    /// Per-bit known probability of the generic raw key.
    #[arg(long)]
    p: Option<f64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Include the large cells (hours of CPU time).
    #[arg(long)]
    full_scale: bool,
    /// TOML file with experiment parameters; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SessionArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    #[arg(long, value_enum)]
    source: Option<SourceArg>,
    /// Substrings folded by LSA.
    #[arg(long)]
    k: Option<usize>,
    /// 1-based address to retrieve.
    #[arg(long)]
    address: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Criteria to run (comma separated); all by default.
    #[arg(long, value_delimiter = ',')]
    criteria: Option<Vec<u8>>,
}

impl Common {
    fn resolve(&self, id: ExperimentId) -> anyhow::Result<ExperimentConfig> {
        let base = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(other) = base.experiment.filter(|&e| e != id) {
            anyhow::bail!("config file is for `{other:?}`, not `{id:?}`");
        }
        let cfg = base.overlay(ExperimentConfig {
            experiment: Some(id),
            seed: self.seed,
            runs: self.runs,
            n: self.n.clone(),
            l: self.l.clone(),
            mu: self.mu,
            p: self.p,
            full_scale: self.full_scale.then_some(true),
            out: self.out.clone(),
            format: self.format,
            ..Default::default()
        });
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_rows<T: serde::Serialize>(cfg: &ExperimentConfig, rows: &[T]) -> anyhow::Result<()> {
    let mut out = output::open(cfg.out.as_deref()).context("opening output")?;
    output::write_rows(rows, cfg.format(), &mut out)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Table1(c) => {
            let cfg = c.resolve(ExperimentId::Table1)?;
            write_rows(&cfg, &table1::run(&table1::Params::from_config(&cfg))?)?;
        }
        Command::Table2(c) => {
            let cfg = c.resolve(ExperimentId::Table2)?;
            write_rows(&cfg, &table2::run(&table2::Params::from_config(&cfg))?)?;
        }
        Command::Fig2(c) => {
            let cfg = c.resolve(ExperimentId::Fig2)?;
            let snaps = fig2::run(&fig2::Params::from_config(&cfg))?;
            let mut out = output::open(cfg.out.as_deref())?;
            fig2::write(&snaps, cfg.format(), &mut out)?;
        }
        Command::Fig3(c) => {
            let cfg = c.resolve(ExperimentId::Fig3)?;
            write_rows(&cfg, &fig3::run(&fig3::Params::from_config(&cfg))?)?;
        }
        Command::Attack(c) => {
            let cfg = c.resolve(ExperimentId::Attack)?;
            let rows = attack::run(&attack::Params::from_config(&cfg))?;
            for strategy in [true, false] {
                let qs: Vec<usize> = rows
                    .iter()
                    .filter(|r| {
                        (r.strategy == qpq_core::attack::AddressStrategy::Optimal) == strategy
                    })
                    .map(|r| r.queries)
                    .collect();
                if !qs.is_empty() {
                    let mean = qs.iter().sum::<usize>() as f64 / qs.len() as f64;
                    let label = if strategy { "optimal" } else { "random" };
                    eprintln!("{label}: mean {mean:.1} queries over {} runs", qs.len());
                }
            }
            write_rows(&cfg, &rows)?;
        }
        Command::Session(s) => {
            let mut cfg = s.common.resolve(ExperimentId::Session)?;
            cfg = cfg.overlay(ExperimentConfig {
                variant: s.variant,
                source: s.source,
                k: s.k,
                address: s.address,
                ..Default::default()
            });
            let records = session::run(&cfg)?;
            let mut out = output::open(cfg.out.as_deref())?;
            output::write_lines(&records, &mut out)?;
        }
        Command::Verify(v) => {
            let c = &v.common;
            let cfg = match &c.config {
                Some(path) => ExperimentConfig::load(path)?,
                None => ExperimentConfig::default(),
            }
            .overlay(ExperimentConfig {
                seed: c.seed,
                runs: c.runs,
                full_scale: c.full_scale.then_some(true),
                out: c.out.clone(),
                format: c.format,
                ..Default::default()
            });
            cfg.validate()?;
            let opts = verify::Options {
                seed: cfg.seed(),
                full_scale: cfg.full_scale(),
                runs: cfg.runs,
            };
            let ids = v.criteria.unwrap_or_else(|| verify::CRITERIA.to_vec());
            let checks = verify::run(&ids, &verify::expectations(), &opts)?;
            write_rows(&cfg, &checks)?;
            let summary = verify::summary(&checks);
            for (id, pass) in &summary {
                eprintln!("criterion {id}: {}", if *pass { "PASS" } else { "FAIL" });
            }
            if summary.values().any(|p| !p) {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
