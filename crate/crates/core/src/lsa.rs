//! Classical postprocessing: block-sifting, low-shift-and-addition (LSA) for
//! honest and adversarial Alice, the unrestricted shift-addition baseline and
//! closed-form statistics of the original shift-free postprocessing.

use alloc::vec::Vec;

use rand::Rng;

use crate::gf2::{combine_xor, cyclic_shift, ObliviousKey};
use crate::sources::{self, gen_generic_raw_key, Placement, SourceParams};
use crate::{Error, Result};

/// Additions after which a greedy run is declared non-convergent.
pub const MAX_ADDITIONS: usize = 64;

/// Shifts Alice claimed, one per substring, in substring order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ShiftPlan {
    pub shifts: Vec<isize>,
    /// 0-based index every shift was chosen to make known, if any.
    pub target_index: Option<usize>,
}

impl ShiftPlan {
    /// Whether every shift lies in `-(l-1) ..= l-1`.
    pub fn is_low(&self, l: usize) -> bool {
        self.shifts.iter().all(|s| s.unsigned_abs() < l)
    }
}

/// Alice's knowledge after `k` substrings have been added.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceStep {
    pub k: usize,
    /// Individually known bits.
    pub known: usize,
    /// Bits belonging to some parity group.
    pub correlated: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LsaTrace {
    pub steps: Vec<TraceStep>,
}

impl LsaTrace {
    fn record(&mut self, key: &ObliviousKey) -> TraceStep {
        let step = TraceStep {
            k: self.steps.len() + 1,
            known: key.known_count(),
            correlated: key.correlated_count(),
        };
        self.steps.push(step);
        step
    }

    pub fn last(&self) -> Option<&TraceStep> {
        self.steps.last()
    }

    /// Number of substrings added so far.
    pub fn k(&self) -> usize {
        self.steps.len()
    }

    /// First `k` at which at most `target` bits are known.
    pub fn first_k_at_most(&self, target: usize) -> Option<usize> {
        self.steps.iter().find(|s| s.known <= target).map(|s| s.k)
    }

    /// Neither the known count nor the number of bits Alice can say anything
    /// about grows from one step to the next.
    ///
    /// The correlated count alone may grow: two bits known in the running sum
    /// and linked in the next substring end up linked, not forgotten.
    pub fn is_monotone(&self) -> bool {
        self.steps.windows(2).all(|w| {
            w[1].known <= w[0].known && w[1].known + w[1].correlated <= w[0].known + w[0].correlated
        })
    }
}

/// Expected fraction of `l`-bit blocks with no known bit, `(1 - p)^l`.
pub fn p_discard(p: f64, l: usize) -> f64 {
    libm::pow(1.0 - p, l as f64)
}

/// Per-bit known probability after block-sifting, `p / (1 - (1 - p)^l)`.
pub fn sifted_known_probability(p: f64, l: usize) -> f64 {
    p / (1.0 - p_discard(p, l))
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SiftReport {
    pub total_blocks: usize,
    /// Block indices (in the raw key) Alice declared totally unknown.
    pub discarded_blocks: Vec<usize>,
}

impl SiftReport {
    pub fn discarded_fraction(&self) -> f64 {
        if self.total_blocks == 0 {
            0.0
        } else {
            self.discarded_blocks.len() as f64 / self.total_blocks as f64
        }
    }
}

/// Drop every `l`-bit block in which Alice knows no bit.
pub fn block_sift(raw: &ObliviousKey, l: usize) -> Result<(ObliviousKey, SiftReport)> {
    if l == 0 || !raw.len().is_multiple_of(l) {
        return Err(Error::InvalidParameter(
            "raw key length must be a multiple of the block length",
        ));
    }
    let total_blocks = raw.len() / l;
    let mut keep = Vec::with_capacity(raw.len());
    let mut discarded_blocks = Vec::new();
    for b in 0..total_blocks {
        let block = b * l..(b + 1) * l;
        if block.clone().any(|i| raw.is_known(i)) {
            keep.extend(block);
        } else {
            discarded_blocks.push(b);
        }
    }
    let report = SiftReport {
        total_blocks,
        discarded_blocks,
    };
    Ok((raw.select(&keep), report))
}

/// Low shifts ordered by preference: smallest magnitude first, negative
/// before positive.
pub fn low_shifts(l: usize) -> impl Iterator<Item = isize> + Clone {
    let max = l.saturating_sub(1) as isize;
    core::iter::once(0).chain((1..=max).flat_map(|m| [-m, m]))
}

/// Every low shift `s` for which the shifted substring has `index` known.
pub fn honest_shift_candidates(sub: &ObliviousKey, index: usize, l: usize) -> Vec<isize> {
    let n = sub.len() as isize;
    let mut out: Vec<isize> = low_shifts(l)
        .filter(|&s| sub.is_known((index as isize - s).rem_euclid(n) as usize))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// A uniformly chosen low shift that makes `index` known.
pub fn honest_shift_for<R: Rng + ?Sized>(
    sub: &ObliviousKey,
    index: usize,
    l: usize,
    rng: &mut R,
) -> Result<isize> {
    if index >= sub.len() {
        return Err(Error::IndexOutOfRange {
            index,
            length: sub.len(),
        });
    }
    let candidates = honest_shift_candidates(sub, index, l);
    if candidates.is_empty() {
        return Err(Error::NoQualifyingShift { index });
    }
    Ok(candidates[rng.random_range(0..candidates.len())])
}

#[derive(Clone, Debug)]
pub struct LsaOutcome {
    pub final_key: ObliviousKey,
    pub plan: ShiftPlan,
    pub trace: LsaTrace,
}

/// Honest LSA: shift every substring so `index` is known, then XOR them all.
pub fn lsa_honest<R: Rng + ?Sized>(
    substrings: &[ObliviousKey],
    index: usize,
    l: usize,
    rng: &mut R,
) -> Result<LsaOutcome> {
    let (first, rest) = substrings.split_first().ok_or(Error::InvalidParameter(
        "at least one substring is required",
    ))?;
    let mut trace = LsaTrace::default();
    let mut plan = ShiftPlan {
        shifts: Vec::with_capacity(substrings.len()),
        target_index: Some(index),
    };
    let s = honest_shift_for(first, index, l, rng)?;
    plan.shifts.push(s);
    let mut acc = cyclic_shift(first, s);
    trace.record(&acc);
    for sub in rest {
        let s = honest_shift_for(sub, index, l, rng)?;
        plan.shifts.push(s);
        acc = combine_xor(&acc, &cyclic_shift(sub, s))?;
        trace.record(&acc);
    }
    Ok(LsaOutcome {
        final_key: acc,
        plan,
        trace,
    })
}

/// Honest LSA over a stream of substrings, stopping once at most `stop` bits
/// are known or after `max_k` substrings.
pub fn lsa_honest_stream<I, R>(
    source: I,
    index: usize,
    l: usize,
    stop: usize,
    max_k: usize,
    rng: &mut R,
) -> Result<GreedyOutcome>
where
    I: IntoIterator<Item = ObliviousKey>,
    R: Rng + ?Sized,
{
    let mut source = source.into_iter();
    let mut produced = 0;
    let mut trace = LsaTrace::default();
    let mut plan = ShiftPlan {
        shifts: Vec::new(),
        target_index: Some(index),
    };
    let first = next_substring(&mut source, &mut produced)?;
    let s = honest_shift_for(&first, index, l, rng)?;
    plan.shifts.push(s);
    let mut acc = cyclic_shift(&first, s);
    let mut converged = trace.record(&acc).known <= stop;
    while !converged && trace.k() < max_k {
        let sub = next_substring(&mut source, &mut produced)?;
        let s = honest_shift_for(&sub, index, l, rng)?;
        plan.shifts.push(s);
        acc = combine_xor(&acc, &cyclic_shift(&sub, s))?;
        converged = trace.record(&acc).known <= stop;
    }
    Ok(GreedyOutcome {
        final_key: acc,
        plan,
        trace,
        converged,
    })
}

/// Known-bit masks for fast overlap counting under cyclic shifts.
struct KnownMask {
    len: usize,
    words: Vec<u64>,
}

impl KnownMask {
    fn of(key: &ObliviousKey) -> Self {
        let len = key.len();
        let mut words = alloc::vec![0u64; len.div_ceil(64)];
        for i in key.knowledge().known_indices() {
            words[i / 64] |= 1 << (i % 64);
        }
        Self { len, words }
    }
}

/// The known mask written twice in a row, so any cyclic window is contiguous.
struct DoubledMask {
    words: Vec<u64>,
}

impl DoubledMask {
    fn of(key: &ObliviousKey) -> Self {
        let len = key.len();
        let mut words = alloc::vec![0u64; (2 * len).div_ceil(64) + 1];
        for i in key.knowledge().known_indices() {
            for j in [i, i + len] {
                words[j / 64] |= 1 << (j % 64);
            }
        }
        Self { words }
    }

    fn window(&self, start: usize) -> u64 {
        let (w, b) = (start / 64, start % 64);
        if b == 0 {
            self.words[w]
        } else {
            self.words[w] >> b | self.words[w + 1] << (64 - b)
        }
    }
}

/// Known bits of `acc XOR shift(new, s)`, without building the sum.
fn overlap(acc: &KnownMask, new: &DoubledMask, s: isize) -> usize {
    let n = acc.len;
    if n == 0 {
        return 0;
    }
    // shifted[i] = new[(i - s) mod n]
    let start = (-s).rem_euclid(n as isize) as usize;
    acc.words
        .iter()
        .enumerate()
        .map(|(w, &a)| (a & new.window(start + 64 * w)).count_ones() as usize)
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GreedyConfig {
    /// Block length; shifts range over `-(l-1) ..= l-1`.
    pub l: usize,
    /// Stop once at most this many bits are known.
    pub stop: usize,
    /// Give up after this many substrings.
    pub max_k: usize,
}

impl GreedyConfig {
    pub fn new(l: usize, stop: usize) -> Self {
        Self {
            l,
            stop,
            max_k: MAX_ADDITIONS,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GreedyOutcome {
    pub final_key: ObliviousKey,
    pub plan: ShiftPlan,
    pub trace: LsaTrace,
    /// Whether the known count reached the stop target within `max_k`.
    pub converged: bool,
}

impl GreedyOutcome {
    pub fn k(&self) -> usize {
        self.trace.k()
    }
}

fn next_substring<I: Iterator<Item = ObliviousKey>>(
    source: &mut I,
    produced: &mut usize,
) -> Result<ObliviousKey> {
    let sub = source.next().ok_or(Error::SourceExhausted {
        produced: *produced,
    })?;
    *produced += 1;
    Ok(sub)
}

/// Adversarial LSA: every shift is chosen to keep as many bits known as
/// possible.
///
/// The first two substrings are shifted jointly over all `(2l-1)^2` pairs,
/// each later one over `2l-1` shifts against the running sum. Ties go to the
/// smallest `|shift|`, then the negative shift, then (for pairs) the first
/// component. `observer` sees the running sum after every addition.
pub fn lsa_malicious_greedy<I, F>(
    source: I,
    config: GreedyConfig,
    mut observer: F,
) -> Result<GreedyOutcome>
where
    I: IntoIterator<Item = ObliviousKey>,
    F: FnMut(&TraceStep, &ObliviousKey),
{
    if config.l == 0 {
        return Err(Error::InvalidParameter("block length must be positive"));
    }
    let mut source = source.into_iter();
    let mut produced = 0;
    let mut trace = LsaTrace::default();
    let mut plan = ShiftPlan::default();

    let first = next_substring(&mut source, &mut produced)?;
    plan.shifts.push(0);
    let step = trace.record(&first);
    observer(&step, &first);
    let mut acc = first;
    if step.known <= config.stop {
        return Ok(GreedyOutcome {
            final_key: acc,
            plan,
            trace,
            converged: true,
        });
    }

    let shifts: Vec<isize> = low_shifts(config.l).collect();
    while trace.k() < config.max_k {
        let new = next_substring(&mut source, &mut produced)?;
        if new.len() != acc.len() {
            return Err(Error::LengthMismatch {
                left: acc.len(),
                right: new.len(),
            });
        }
        let acc_mask = KnownMask::of(&acc);
        let new_mask = DoubledMask::of(&new);
        if trace.k() == 1 {
            // The count only depends on the relative shift b - a.
            let span = 2 * (config.l as isize - 1);
            let by_delta: Vec<usize> = (-span..=span)
                .map(|d| overlap(&acc_mask, &new_mask, d))
                .collect();
            let mut best = (0, 0, None::<usize>);
            for &a in &shifts {
                for &b in &shifts {
                    let count = by_delta[(b - a + span) as usize];
                    if best.2.is_none_or(|c| count > c) {
                        best = (a, b, Some(count));
                    }
                }
            }
            let (a, b, _) = best;
            plan.shifts[0] = a;
            plan.shifts.push(b);
            acc = combine_xor(&cyclic_shift(&acc, a), &cyclic_shift(&new, b))?;
        } else {
            let mut best = (0, None::<usize>);
            for &s in &shifts {
                let count = overlap(&acc_mask, &new_mask, s);
                if best.1.is_none_or(|c| count > c) {
                    best = (s, Some(count));
                }
            }
            plan.shifts.push(best.0);
            acc = combine_xor(&acc, &cyclic_shift(&new, best.0))?;
        }
        let step = trace.record(&acc);
        observer(&step, &acc);
        if step.known <= config.stop {
            return Ok(GreedyOutcome {
                final_key: acc,
                plan,
                trace,
                converged: true,
            });
        }
    }
    Ok(GreedyOutcome {
        final_key: acc,
        plan,
        trace,
        converged: false,
    })
}

/// Where shift-addition shifts may come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShiftRange {
    /// Any cyclic shift `0 .. N`.
    Full,
    /// `-(l-1) ..= l-1`.
    Low(usize),
}

/// How Alice picks a shift from the range.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShiftChoice {
    Uniform,
    /// Maximise known bits after the addition; ties to the first shift in
    /// range order (ascending for `Full`, preference order for `Low`).
    Optimal,
}

/// Shift-addition with a configurable shift range and choice rule. The first
/// substring is used unshifted. Runs until at most `stop` bits are known or
/// `max_k` substrings have been added.
pub fn shift_add<I, R>(
    source: I,
    range: ShiftRange,
    choice: ShiftChoice,
    stop: usize,
    max_k: usize,
    rng: &mut R,
) -> Result<GreedyOutcome>
where
    I: IntoIterator<Item = ObliviousKey>,
    R: Rng + ?Sized,
{
    let mut source = source.into_iter();
    let mut produced = 0;
    let mut trace = LsaTrace::default();
    let mut plan = ShiftPlan::default();
    let mut acc = next_substring(&mut source, &mut produced)?;
    plan.shifts.push(0);
    let mut converged = trace.record(&acc).known <= stop;
    while !converged && trace.k() < max_k {
        let new = next_substring(&mut source, &mut produced)?;
        if new.len() != acc.len() {
            return Err(Error::LengthMismatch {
                left: acc.len(),
                right: new.len(),
            });
        }
        let n = new.len() as isize;
        let candidates: Vec<isize> = match range {
            ShiftRange::Full => (0..n).collect(),
            ShiftRange::Low(l) => low_shifts(l).collect(),
        };
        let s = match choice {
            ShiftChoice::Uniform => candidates[rng.random_range(0..candidates.len())],
            ShiftChoice::Optimal => {
                let acc_mask = KnownMask::of(&acc);
                let new_mask = DoubledMask::of(&new);
                let mut best = (0, None::<usize>);
                for &s in &candidates {
                    let count = overlap(&acc_mask, &new_mask, s);
                    if best.1.is_none_or(|c| count > c) {
                        best = (s, Some(count));
                    }
                }
                best.0
            }
        };
        plan.shifts.push(s);
        acc = combine_xor(&acc, &cyclic_shift(&new, s))?;
        converged = trace.record(&acc).known <= stop;
    }
    Ok(GreedyOutcome {
        final_key: acc,
        plan,
        trace,
        converged,
    })
}

/// Number of known bits Alice would have after XOR-ing `acc` with `new`
/// shifted by `s`, computed from the known masks only.
pub fn known_after_shift(acc: &ObliviousKey, new: &ObliviousKey, s: isize) -> usize {
    overlap(&KnownMask::of(acc), &DoubledMask::of(new), s)
}

/// `N`-bit substring built from `N / l` single-train block keys.
pub fn rrdps_substring<R: Rng + ?Sized>(
    n: usize,
    l: usize,
    params: &SourceParams,
    placement: Placement,
    rng: &mut R,
) -> Result<ObliviousKey> {
    if l == 0 || !n.is_multiple_of(l) {
        return Err(Error::InvalidParameter(
            "substring length must be a multiple of the block length",
        ));
    }
    let mut blocks = Vec::with_capacity(n / l);
    for _ in 0..n / l {
        let (train, out, _) = sources::measure_until_accepted(l, params, placement, rng)?;
        blocks.push(sources::block_key_from_measurement(&train, &out)?);
    }
    Ok(ObliviousKey::concat(&blocks))
}

/// Block-sifted generic raw key of exactly `n` bits (`n / l` surviving
/// blocks), plus the sifting record of all raw blocks consumed.
pub fn sifted_generic_key<R: Rng + ?Sized>(
    n: usize,
    l: usize,
    p: f64,
    rng: &mut R,
) -> Result<(ObliviousKey, SiftReport)> {
    if l == 0 || !n.is_multiple_of(l) {
        return Err(Error::InvalidParameter(
            "key length must be a multiple of the block length",
        ));
    }
    let blocks_needed = n / l;
    // expected raw blocks, over-provisioned by 10%
    let survive = 1.0 - p_discard(p, l);
    let first_batch = ((blocks_needed as f64 / survive) * 1.1) as usize + 1;
    let mut parts = Vec::new();
    let mut report = SiftReport::default();
    let mut have = 0;
    let mut batch = first_batch;
    while have < blocks_needed {
        let raw = gen_generic_raw_key(batch * l, p, rng)?;
        let (sifted, r) = block_sift(&raw, l)?;
        report
            .discarded_blocks
            .extend(r.discarded_blocks.iter().map(|b| b + report.total_blocks));
        report.total_blocks += r.total_blocks;
        have += sifted.len() / l;
        parts.push(sifted);
        batch = blocks_needed.saturating_sub(have).max(1) * 2;
    }
    let joined = ObliviousKey::concat(&parts);
    let idx: Vec<usize> = (0..n).collect();
    // Blocks past the ones used are not part of the report either.
    let used_blocks = blocks_needed;
    let mut surviving = 0;
    let mut cutoff = report.total_blocks;
    for b in 0..report.total_blocks {
        if report.discarded_blocks.binary_search(&b).is_err() {
            surviving += 1;
            if surviving == used_blocks {
                cutoff = b + 1;
                break;
            }
        }
    }
    report.discarded_blocks.retain(|&b| b < cutoff);
    report.total_blocks = cutoff;
    Ok((joined.select(&idx), report))
}

/// Closed-form statistics of shift-free XOR folding of `k` substrings with
/// per-bit known probability `p`: expected known bits `N p^k` and failure
/// probability `(1 - p^k)^N`.
pub fn jprotocol_stats(n: usize, p: f64, k: u32) -> (f64, f64) {
    let pk = libm::pow(p, k as f64);
    (n as f64 * pk, libm::pow(1.0 - pk, n as f64))
}

/// Failure probability when two independent runs must both succeed.
pub fn double_run_failure(f1: f64, f2: f64) -> f64 {
    1.0 - (1.0 - f1) * (1.0 - f2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::Constraint;
    use alloc::vec;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn known_at(n: usize, known: &[usize]) -> ObliviousKey {
        let bits = vec![false; n];
        let cons: Vec<Constraint> = known.iter().map(|&i| Constraint::value(i, false)).collect();
        ObliviousKey::from_constraints(bits, &cons).unwrap()
    }

    #[test]
    fn low_shift_order() {
        assert_eq!(low_shifts(3).collect::<Vec<_>>(), vec![0, -1, 1, -2, 2]);
        assert_eq!(low_shifts(1).collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn sift_drops_unknown_blocks() {
        let raw = known_at(8, &[1, 6]);
        let (s, r) = block_sift(&raw, 2).unwrap();
        assert_eq!(r.discarded_blocks, vec![1, 2]);
        assert_eq!(s.len(), 4);
        assert_eq!(
            s.knowledge().known_indices().collect::<Vec<_>>(),
            vec![1, 2]
        );
        assert!(block_sift(&raw, 3).is_err());
        let full = known_at(4, &[0, 1, 2, 3]);
        assert_eq!(block_sift(&full, 2).unwrap().1.discarded_fraction(), 0.0);
    }

    #[test]
    fn honest_shift_unique_within_block_but_wraps_cyclically() {
        // l = 4, a single block with bit 0 known, target 3: 3 - s = 0 (mod 4)
        let sub = known_at(4, &[0]);
        assert_eq!(honest_shift_candidates(&sub, 3, 4), vec![-1, 3]);
        let sub8 = known_at(8, &[0, 4]);
        assert_eq!(honest_shift_candidates(&sub8, 3, 4), vec![-1, 3]);
    }

    #[test]
    fn zero_is_a_candidate_when_target_already_known() {
        let sub = known_at(8, &[2, 5]);
        assert!(honest_shift_candidates(&sub, 5, 4).contains(&0));
    }

    #[test]
    fn walkthrough_shifts_are_valid() {
        // N = 8, l = 4, target x_6 (index 5); known bits at 4, 6, 5 respectively
        let subs = [
            known_at(8, &[0, 4]),
            known_at(8, &[2, 6]),
            known_at(8, &[1, 5]),
        ];
        for (sub, s) in subs.iter().zip([1isize, -1, 0]) {
            assert!(honest_shift_candidates(sub, 5, 4).contains(&s));
        }
        let mut rng = StdRng::seed_from_u64(3);
        let out = lsa_honest(&subs, 5, 4, &mut rng).unwrap();
        assert_eq!(out.plan.shifts, vec![1, -1, 0]);
        assert!(out.final_key.is_known(5));
    }

    #[test]
    fn single_substring_fold_is_its_shift() {
        let sub = known_at(8, &[1, 6]);
        let mut rng = StdRng::seed_from_u64(3);
        let out = lsa_honest(core::slice::from_ref(&sub), 1, 4, &mut rng).unwrap();
        assert_eq!(out.trace.steps.len(), 1);
        assert_eq!(out.trace.steps[0].known, 2);
        assert_eq!(out.final_key, cyclic_shift(&sub, out.plan.shifts[0]));
    }

    #[test]
    fn overlap_matches_combine() {
        let mut rng = StdRng::seed_from_u64(11);
        for n in [5usize, 63, 64, 65, 130] {
            let a = gen_generic_raw_key(n, 0.4, &mut rng).unwrap();
            let b = gen_generic_raw_key(n, 0.4, &mut rng).unwrap();
            for s in -(n as isize)..(n as isize) {
                let expect = combine_xor(&a, &cyclic_shift(&b, s)).unwrap().known_count();
                assert_eq!(known_after_shift(&a, &b, s), expect, "n={n} s={s}");
            }
        }
    }

    #[test]
    fn greedy_reports_non_convergence_on_all_known_input() {
        let all = known_at(16, &(0..16).collect::<Vec<_>>());
        let out = lsa_malicious_greedy(core::iter::repeat(all), GreedyConfig::new(4, 1), |_, _| {})
            .unwrap();
        assert!(!out.converged);
        assert_eq!(out.k(), MAX_ADDITIONS);
        assert!(out.trace.steps.iter().all(|s| s.known == 16));
    }

    #[test]
    fn greedy_errors_when_source_runs_dry() {
        let sub = known_at(8, &[0, 1, 4, 5]);
        let err = lsa_malicious_greedy(vec![sub.clone(), sub], GreedyConfig::new(4, 1), |_, _| {})
            .unwrap_err();
        assert_eq!(err, Error::SourceExhausted { produced: 2 });
    }

    #[test]
    fn greedy_pair_tie_break_prefers_small_shifts() {
        // identical substrings: every pair with a == b keeps all bits; (0, 0) wins
        let sub = known_at(8, &[0, 5]);
        let out = lsa_malicious_greedy(
            vec![sub.clone(), sub.clone(), known_at(8, &[1, 4])],
            GreedyConfig {
                l: 4,
                stop: 1,
                max_k: 3,
            },
            |_, _| {},
        )
        .unwrap();
        assert_eq!(&out.plan.shifts[..2], &[0, 0]);
        // third substring: shift -1 maps 1 -> 0 and 4 -> 3 (one kept); shift 1
        // maps 4 -> 5 and 1 -> 2 (one kept); smaller magnitude and negative win
        assert_eq!(out.plan.shifts[2], -1);
        assert_eq!(out.trace.last().unwrap().known, 1);
        assert!(out.converged);
    }

    #[test]
    fn shift_add_first_step_is_binomial_sample() {
        let mut rng = StdRng::seed_from_u64(5);
        let sub = gen_generic_raw_key(100, 0.25, &mut rng).unwrap();
        let kc = sub.known_count();
        let out = shift_add(
            vec![sub],
            ShiftRange::Full,
            ShiftChoice::Uniform,
            0,
            1,
            &mut rng,
        )
        .unwrap();
        assert_eq!(out.trace.steps[0].known, kc);
    }

    #[test]
    fn closed_forms() {
        let (e, f) = jprotocol_stats(100_000, 0.25, 7);
        assert!((e - 6.1035).abs() < 1e-3);
        assert!((f - 0.0022346).abs() < 1e-6);
        let (e, f) = jprotocol_stats(100_000, 0.25, 8);
        assert!((e - 1.5259).abs() < 1e-3);
        assert!((f - 0.217427).abs() < 1e-5);
        let (e, f) = jprotocol_stats(40, 0.3, 1);
        assert!((e - 12.0).abs() < 1e-12);
        assert!((f - libm::pow(0.7, 40.0)).abs() < 1e-15);
        assert!((double_run_failure(0.087, 0.087) - 0.166431).abs() < 1e-9);
        assert_eq!(double_run_failure(0.0, 0.0), 0.0);
        assert_eq!(double_run_failure(1.0, 0.3), 1.0);
        assert!((p_discard(0.25, 10) - 0.0563135).abs() < 1e-6);
        assert!((sifted_known_probability(0.25, 10) - 0.264918).abs() < 1e-6);
    }
}
