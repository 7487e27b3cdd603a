//! Reference checks with tolerances from the embedded `expectations.toml`.
//!
//! Each numbered criterion yields one or more [`Check`]s. `qpq verify` runs
//! them all and exits nonzero if any fails; the acceptance tests call the
//! same functions one criterion at a time.

use std::collections::BTreeMap;

use anyhow::Context;
use qpq_core::gf2::knowledge_matches_span;
use qpq_core::lsa::{self, GreedyConfig};
use qpq_core::protocol::{self, Database, SessionConfig, Variant};
use qpq_core::sources::{gen_generic_raw_key, Placement, Reporting, SourceParams};
use qpq_core::{knowledge_from_constraints, Constraint, LinearSpanOracle};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::Format;
use crate::experiments::{self, attack, fig3, table1, table2};
use crate::seeds;

pub const EXPECTATIONS: &str = include_str!("expectations.toml");

pub const CRITERIA: [u8; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

#[derive(Clone, Debug, Deserialize)]
pub struct Expectations {
    pub jprotocol: JProtocol,
    pub sifting: Sifting,
    pub table1: Table1,
    pub table2: Table2,
    pub zero_failure: ZeroFailure,
    pub strict_decrease: StrictDecrease,
    pub fig3: Fig3,
    pub attack: Attack,
    pub oracle: Oracle,
}

#[derive(Clone, Debug, Deserialize)]
pub struct JProtocol {
    pub double_run: DoubleRun,
    pub cases: Vec<JCase>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct DoubleRun {
    pub f1: f64,
    pub f2: f64,
    pub value: f64,
    pub tol: f64,
}

#[derive(Clone, Debug, Deserialize)]
pub struct JCase {
    pub n: usize,
    pub p: f64,
    pub k: u32,
    pub known: f64,
    pub known_tol: f64,
    pub failure: f64,
    pub failure_tol: f64,
}

#[derive(Clone, Debug, Deserialize)]
pub struct Sifting {
    pub p: f64,
    pub raw_bits: usize,
    pub analytic_tol: f64,
    pub empirical_tol: f64,
    pub cells: Vec<SiftCell>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct SiftCell {
    pub l: usize,
    pub p_discard: f64,
}

#[derive(Clone, Debug, Deserialize)]
pub struct Table1 {
    pub l: usize,
    pub mu: f64,
    pub runs: usize,
    pub mean_tol: f64,
    pub max_slack: f64,
    pub cells: Vec<Table1Cell>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct Table1Cell {
    pub n: usize,
    pub honest_mean: f64,
    pub malicious_mean: f64,
    pub malicious_max: f64,
    #[serde(default)]
    pub full_scale: bool,
}

#[derive(Clone, Debug, Deserialize)]
pub struct Table2 {
    pub n: usize,
    pub p: f64,
    pub runs: usize,
    pub cells: Vec<Table2Cell>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct Table2Cell {
    pub l: usize,
    pub n_a: usize,
    pub mean: f64,
    pub tol: f64,
}

#[derive(Clone, Debug, Deserialize)]
pub struct ZeroFailure {
    pub sessions: usize,
    pub n: Vec<usize>,
    pub l: Vec<usize>,
    pub mu: Vec<f64>,
    pub k_max: usize,
}

#[derive(Clone, Debug, Deserialize)]
pub struct StrictDecrease {
    pub n: usize,
    pub l: usize,
    pub mu: f64,
    pub runs: usize,
    pub min_transitions: usize,
    pub bound: f64,
    pub slack: f64,
}

#[derive(Clone, Debug, Deserialize)]
pub struct Fig3 {
    pub n: usize,
    pub p: f64,
    pub runs: usize,
    pub full_k: usize,
    pub full_min_mean: f64,
    pub low_l: usize,
    pub low_k: usize,
    pub low_max_mean: f64,
}

#[derive(Clone, Debug, Deserialize)]
pub struct Attack {
    pub n: usize,
    pub mu: f64,
    pub runs: usize,
    pub full_n: usize,
    pub full_mean: f64,
    pub full_rel_tol: f64,
}

#[derive(Clone, Debug, Deserialize)]
pub struct Oracle {
    pub random_instances: usize,
    pub max_len: usize,
    pub max_constraints: usize,
    pub exhaustive_len: usize,
}

pub fn expectations() -> Expectations {
    toml::from_str(EXPECTATIONS).expect("embedded expectations parse")
}

#[derive(Clone, Debug, Default)]
pub struct Options {
    pub seed: u64,
    pub full_scale: bool,
    /// Replaces every run count, for quick smoke runs.
    pub runs: Option<usize>,
}

impl Options {
    fn runs(&self, default: usize) -> usize {
        self.runs.unwrap_or(default)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub criterion: u8,
    pub name: String,
    pub measured: f64,
    pub expected: String,
    pub pass: bool,
}

fn within(criterion: u8, name: impl Into<String>, measured: f64, target: f64, tol: f64) -> Check {
    Check {
        criterion,
        name: name.into(),
        measured,
        expected: format!("{target} +- {tol}"),
        pass: (measured - target).abs() <= tol,
    }
}

fn at_most(criterion: u8, name: impl Into<String>, measured: f64, bound: f64) -> Check {
    Check {
        criterion,
        name: name.into(),
        measured,
        expected: format!("<= {bound}"),
        pass: measured <= bound,
    }
}

fn at_least(criterion: u8, name: impl Into<String>, measured: f64, bound: f64) -> Check {
    Check {
        criterion,
        name: name.into(),
        measured,
        expected: format!(">= {bound}"),
        pass: measured >= bound,
    }
}

fn below(criterion: u8, name: impl Into<String>, measured: f64, bound: f64) -> Check {
    Check {
        criterion,
        name: name.into(),
        measured,
        expected: format!("< {bound}"),
        pass: measured < bound,
    }
}

pub fn criterion(id: u8, exp: &Expectations, opts: &Options) -> anyhow::Result<Vec<Check>> {
    match id {
        1 => Ok(jprotocol(exp)),
        2 => sifting(exp, opts),
        3 => table1_checks(exp, opts),
        4 => table2_checks(exp, opts),
        5 => zero_failure(exp, opts),
        6 => strict_decrease(exp, opts),
        7 => fig3_checks(exp, opts),
        8 => attack_checks(exp, opts),
        9 => oracle(exp, opts),
        10 => determinism(opts),
        _ => anyhow::bail!("no criterion {id}"),
    }
}

pub fn run(ids: &[u8], exp: &Expectations, opts: &Options) -> anyhow::Result<Vec<Check>> {
    let mut all = Vec::new();
    for &id in ids {
        all.extend(criterion(id, exp, opts).with_context(|| format!("criterion {id}"))?);
    }
    Ok(all)
}

/// Pass/fail per criterion, in criterion order.
pub fn summary(checks: &[Check]) -> BTreeMap<u8, bool> {
    let mut out = BTreeMap::new();
    for c in checks {
        *out.entry(c.criterion).or_insert(true) &= c.pass;
    }
    out
}

fn jprotocol(exp: &Expectations) -> Vec<Check> {
    let j = &exp.jprotocol;
    let mut checks = Vec::new();
    for c in &j.cases {
        let (known, failure) = lsa::jprotocol_stats(c.n, c.p, c.k);
        checks.push(within(
            1,
            format!("expected known N={} k={}", c.n, c.k),
            known,
            c.known,
            c.known_tol,
        ));
        checks.push(within(
            1,
            format!("failure N={} k={}", c.n, c.k),
            failure,
            c.failure,
            c.failure_tol,
        ));
    }
    let d = &j.double_run;
    checks.push(within(
        1,
        "double-run failure",
        lsa::double_run_failure(d.f1, d.f2),
        d.value,
        d.tol,
    ));
    checks
}

fn sifting(exp: &Expectations, opts: &Options) -> anyhow::Result<Vec<Check>> {
    let s = &exp.sifting;
    let mut checks = Vec::new();
    for c in &s.cells {
        checks.push(within(
            2,
            format!("analytic p_discard l={}", c.l),
            lsa::p_discard(s.p, c.l),
            c.p_discard,
            s.analytic_tol,
        ));
        let mut rng = seeds::rng(opts.seed, "verify/sifting", c.l as u64, 0);
        let bits = s.raw_bits / c.l * c.l;
        let raw = gen_generic_raw_key(bits, s.p, &mut rng)?;
        let (_, report) = lsa::block_sift(&raw, c.l)?;
        checks.push(within(
            2,
            format!("sifted fraction l={}", c.l),
            report.discarded_fraction(),
            c.p_discard,
            s.empirical_tol,
        ));
    }
    Ok(checks)
}

fn table1_checks(exp: &Expectations, opts: &Options) -> anyhow::Result<Vec<Check>> {
    let t = &exp.table1;
    let mut checks = Vec::new();
    for c in t.cells.iter().filter(|c| opts.full_scale || !c.full_scale) {
        let params = table1::Params {
            n: vec![c.n],
            l: t.l,
            mu: t.mu,
            runs: opts.runs(t.runs),
            seed: opts.seed,
        };
        let h = table1::cell(&params, c.n, table1::Alice::Honest)?;
        let m = table1::cell(&params, c.n, table1::Alice::Malicious)?;
        checks.push(within(
            3,
            format!("honest mean k N={}", c.n),
            h.mean,
            c.honest_mean,
            t.mean_tol,
        ));
        checks.push(within(
            3,
            format!("malicious mean k N={}", c.n),
            m.mean,
            c.malicious_mean,
            t.mean_tol,
        ));
        checks.push(at_most(
            3,
            format!("malicious max k N={}", c.n),
            m.max,
            c.malicious_max + t.max_slack,
        ));
        checks.push(at_most(
            3,
            format!("non-converged runs N={}", c.n),
            (h.nonconverged + m.nonconverged) as f64,
            0.0,
        ));
    }
    Ok(checks)
}

fn table2_checks(exp: &Expectations, opts: &Options) -> anyhow::Result<Vec<Check>> {
    let t = &exp.table2;
    let mut checks = Vec::new();
    let mut ls: Vec<usize> = t.cells.iter().map(|c| c.l).collect();
    ls.dedup();
    ls.sort_unstable();
    ls.dedup();
    for l in ls {
        let cells: Vec<&Table2Cell> = t.cells.iter().filter(|c| c.l == l).collect();
        let params = table2::Params {
            n: vec![t.n],
            l: vec![l],
            n_a: cells.iter().map(|c| c.n_a).collect(),
            p: t.p,
            runs: opts.runs(t.runs),
            seed: opts.seed,
        };
        let (stats, _) = table2::cell(&params, t.n, l)?;
        for (c, s) in cells.iter().zip(stats) {
            checks.push(within(
                4,
                format!("mean k l={} n_A={}", l, c.n_a),
                s.mean,
                c.mean,
                c.tol,
            ));
            if s.nonconverged > 0 {
                checks.push(at_most(
                    4,
                    format!("non-converged l={} n_A={}", l, c.n_a),
                    s.nonconverged as f64,
                    0.0,
                ));
            }
        }
    }
    Ok(checks)
}

fn zero_failure(exp: &Expectations, opts: &Options) -> anyhow::Result<Vec<Check>> {
    let z = &exp.zero_failure;
    let mut sources = vec![SourceParams::ideal()];
    for &mu in &z.mu {
        sources.push(SourceParams::weak_coherent(mu, Reporting::Honest)?);
    }
    let mut grid = Vec::new();
    for &n in &z.n {
        for &l in &z.l {
            for s in &sources {
                grid.push((n, l, *s));
            }
        }
    }
    let sessions = opts.runs.map_or(z.sessions, |r| r * grid.len());
    let outcomes = experiments::par_runs(sessions, |i| {
        let cell = i as usize % grid.len();
        let (n, l, source) = grid[cell];
        let mut rng = seeds::rng(opts.seed, "verify/zero-failure", cell as u64, i);
        let db = Database::random(n, &mut rng)?;
        let cfg = SessionConfig {
            variant: Variant::Improved,
            n,
            l,
            k: 1 + (i as usize / grid.len()) % z.k_max,
            address: rng.random_range(1..=n),
            source,
            p: 0.25,
            seed: 0,
        };
        let t = protocol::run_improved_on(&db, &cfg, &mut rng)?;
        let known = t.known_final_bits >= 1;
        let has_target = t.recovered.iter().any(|r| r.address == cfg.address);
        let correct = db.get(cfg.address) == Some(t.retrieved);
        Ok((known, has_target, correct))
    })?;
    let frac = |f: fn(&(bool, bool, bool)) -> bool| {
        outcomes.iter().filter(|o| f(o)).count() as f64 / outcomes.len().max(1) as f64
    };
    Ok(vec![
        at_least(
            5,
            format!("sessions with a known final bit ({sessions})"),
            frac(|o| o.0),
            1.0,
        ),
        at_least(
            5,
            "sessions knowing the queried address",
            frac(|o| o.1),
            1.0,
        ),
        at_least(5, "sessions retrieving correctly", frac(|o| o.2), 1.0),
    ])
}

/// Transitions `(n_k, n_{k+1})` with `n_k >= 2` from malicious greedy runs.
pub fn greedy_transitions(
    n: usize,
    l: usize,
    mu: f64,
    runs: usize,
    master: u64,
) -> anyhow::Result<Vec<(usize, usize)>> {
    let per_run = experiments::par_runs(runs, |run| {
        let mut rng = seeds::rng(master, "verify/strict-decrease", n as u64, run);
        let leaky = SourceParams::weak_coherent(mu, Reporting::MaliciousMultiphoton)?;
        let len = experiments::padded(n, l);
        let source = std::iter::from_fn(|| {
            lsa::rrdps_substring(len, l, &leaky, Placement::SingleKnown, &mut rng).ok()
        });
        let out = lsa::lsa_malicious_greedy(source, GreedyConfig::new(l, 1), |_, _| {})?;
        Ok(out
            .trace
            .steps
            .windows(2)
            .map(|w| (w[0].known, w[1].known))
            .filter(|&(a, _)| a >= 2)
            .collect::<Vec<_>>())
    })?;
    Ok(per_run.into_iter().flatten().collect())
}

fn strict_decrease(exp: &Expectations, opts: &Options) -> anyhow::Result<Vec<Check>> {
    let s = &exp.strict_decrease;
    let tr = greedy_transitions(s.n, s.l, s.mu, opts.runs(s.runs), opts.seed)?;
    let down = tr.iter().filter(|(a, b)| b < a).count();
    let frac = down as f64 / tr.len().max(1) as f64;
    Ok(vec![
        at_least(
            6,
            "transitions observed",
            tr.len() as f64,
            s.min_transitions as f64,
        ),
        at_least(6, "P(n_k+1 < n_k | n_k >= 2)", frac, s.bound - s.slack),
    ])
}

fn fig3_checks(exp: &Expectations, opts: &Options) -> anyhow::Result<Vec<Check>> {
    let f = &exp.fig3;
    let full = fig3::Params {
        n: f.n,
        l: vec![],
        p: f.p,
        k_max: f.full_k,
        runs: opts.runs(f.runs),
        seed: opts.seed,
    };
    let full_stats = fig3::series_stats(&full, fig3::Series::FullRange, 0)?;
    let low = fig3::Params {
        l: vec![f.low_l],
        k_max: f.low_k,
        ..full.clone()
    };
    let low_stats = fig3::series_stats(&low, fig3::Series::LowShift, f.low_l)?;
    Ok(vec![
        at_least(
            7,
            format!("full-range mean n_A at k={}", f.full_k),
            full_stats[f.full_k - 1].mean,
            f.full_min_mean,
        ),
        below(
            7,
            format!("low-shift l={} mean n_A at k={}", f.low_l, f.low_k),
            low_stats[f.low_k - 1].mean,
            f.low_max_mean,
        ),
    ])
}

fn attack_checks(exp: &Expectations, opts: &Options) -> anyhow::Result<Vec<Check>> {
    use qpq_core::attack::AddressStrategy;
    let a = &exp.attack;
    let params = attack::Params {
        n: vec![a.n],
        mu: a.mu,
        runs: opts.runs(a.runs),
        seed: opts.seed,
        strategies: vec![],
    };
    let opt = attack::cell(&params, a.n, AddressStrategy::Optimal)?;
    let rnd = attack::cell(&params, a.n, AddressStrategy::Random)?;
    let exact =
        opt.iter().chain(&rnd).filter(|r| r.exact).count() as f64 / (opt.len() + rnd.len()) as f64;
    let mo = attack::query_stats(&opt).mean;
    let mr = attack::query_stats(&rnd).mean;
    let mut checks = vec![
        below(8, format!("optimal mean queries N={}", a.n), mo, a.n as f64),
        at_least(8, "exact reconstructions", exact, 1.0),
        below(
            8,
            "optimal minus random mean queries (paired)",
            mo - mr,
            0.0,
        ),
    ];
    if opts.full_scale {
        let full = attack::Params {
            n: vec![a.full_n],
            ..params
        };
        let reports = attack::cell(&full, a.full_n, AddressStrategy::Optimal)?;
        let m = attack::query_stats(&reports).mean;
        checks.push(within(
            8,
            format!("optimal mean queries N={}", a.full_n),
            m,
            a.full_mean,
            a.full_mean * a.full_rel_tol,
        ));
    }
    Ok(checks)
}

fn oracle_agrees(len: usize, cons: &[Constraint]) -> bool {
    match (
        knowledge_from_constraints(len, cons),
        LinearSpanOracle::from_constraints(len, cons),
    ) {
        (Ok(k), Ok(o)) => knowledge_matches_span(&k, &o),
        (Err(_), Err(_)) => true,
        _ => false,
    }
}

/// Every instance of length `len`: sets of unit and pair functionals (all of
/// them up to length 4, at most three beyond), valued by every truth.
pub fn exhaustive_instances(len: usize, mut visit: impl FnMut(&[Constraint])) {
    let mut functionals: Vec<Vec<usize>> = (0..len).map(|i| vec![i]).collect();
    for a in 0..len {
        for b in a + 1..len {
            functionals.push(vec![a, b]);
        }
    }
    let f = functionals.len();
    let max_size = if len <= 4 { f } else { 3 };
    let mut cons = Vec::new();
    for mask in 0u64..(1 << f) {
        if mask.count_ones() as usize > max_size {
            continue;
        }
        for truth in 0u64..(1 << len) {
            cons.clear();
            for (j, idx) in functionals.iter().enumerate() {
                if mask >> j & 1 == 1 {
                    let parity = idx
                        .iter()
                        .fold(false, |acc, &i| acc ^ (truth >> i & 1 == 1));
                    cons.push(Constraint::new(idx.iter().copied(), parity));
                }
            }
            visit(&cons);
        }
    }
}

fn oracle(exp: &Expectations, opts: &Options) -> anyhow::Result<Vec<Check>> {
    let o = &exp.oracle;
    let instances = opts.runs.map_or(o.random_instances, |r| r * 100);
    let agree = experiments::par_runs(instances, |i| {
        let mut rng = seeds::rng(opts.seed, "verify/oracle", 0, i);
        let len = rng.random_range(1..=o.max_len);
        let count = rng.random_range(0..=o.max_constraints);
        let truth: Vec<bool> = (0..len).map(|_| rng.random()).collect();
        let consistent = rng.random_bool(0.5);
        let cons: Vec<Constraint> = (0..count)
            .map(|_| {
                let a = rng.random_range(0..len);
                let idx = if rng.random_bool(0.5) {
                    vec![a]
                } else {
                    vec![a, rng.random_range(0..len)]
                };
                let parity = if consistent {
                    idx.iter().fold(false, |acc, &i| acc ^ truth[i])
                } else {
                    rng.random()
                };
                Constraint::new(idx, parity)
            })
            .collect();
        Ok(oracle_agrees(len, &cons))
    })?;
    let random_ok = agree.iter().filter(|&&a| a).count();
    let (mut total, mut ok) = (0usize, 0usize);
    for len in 1..=o.exhaustive_len {
        exhaustive_instances(len, |cons| {
            total += 1;
            ok += oracle_agrees(len, cons) as usize;
        });
    }
    Ok(vec![
        at_least(
            9,
            format!("random instances agreeing ({instances})"),
            random_ok as f64 / instances.max(1) as f64,
            1.0,
        ),
        at_least(
            9,
            format!("exhaustive instances agreeing ({total})"),
            ok as f64 / total.max(1) as f64,
            1.0,
        ),
    ])
}

/// Serialised output of a small verification pass, for byte comparison.
pub fn probe_bytes(opts: &Options) -> anyhow::Result<Vec<u8>> {
    let exp = expectations();
    let probe = Options {
        runs: Some(opts.runs.unwrap_or(3).min(3)),
        ..opts.clone()
    };
    let checks = run(&[1, 2, 3, 8], &exp, &probe)?;
    let mut buf = Vec::new();
    crate::output::write_rows(&checks, Format::Csv, &mut buf)?;
    Ok(buf)
}

fn determinism(opts: &Options) -> anyhow::Result<Vec<Check>> {
    let a = probe_bytes(opts)?;
    let b = probe_bytes(opts)?;
    Ok(vec![at_least(
        10,
        "identical probe outputs",
        (a == b) as u8 as f64,
        1.0,
    )])
}
