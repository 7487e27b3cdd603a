//! Sampling checks against closed forms. Every test uses a fixed seed, so a
//! failure is reproducible; bounds are three standard errors unless noted.

use qpq_core::lsa::{self, block_sift, lsa_honest, rrdps_substring, LsaTrace};
use qpq_core::sources::{
    self, conditional_photon_probability, gen_train, measure, Placement, Reporting, SourceParams,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn wcs(mu: f64) -> SourceParams {
    SourceParams::weak_coherent(mu, Reporting::Honest).unwrap()
}

fn within(measured: f64, expected: f64, se: f64) -> bool {
    (measured - expected).abs() <= 3.0 * se
}

fn honest_traces(
    source: &SourceParams,
    n: usize,
    l: usize,
    k: usize,
    runs: usize,
    seed: u64,
) -> Vec<LsaTrace> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..runs)
        .map(|_| {
            let subs: Vec<_> = (0..k)
                .map(|_| rrdps_substring(n, l, source, Placement::Physical, &mut rng).unwrap())
                .collect();
            let index = rng.random_range(0..n);
            let out = lsa_honest(&subs, index, l, &mut rng).unwrap();
            assert!(out.final_key.is_known(index));
            assert!(out.final_key.is_consistent());
            out.trace
        })
        .collect()
}

#[test]
fn ideal_blocks_know_one_bit_and_no_parities() {
    let mut rng = StdRng::seed_from_u64(1);
    let ideal = SourceParams::ideal();
    for l in [2, 5, 8, 16] {
        for _ in 0..2_000 {
            let (train, out, rejected) =
                sources::measure_until_detection(l, &ideal, &mut rng).unwrap();
            assert_eq!(rejected, 0);
            let key = sources::block_key_from_measurement(&train, &out).unwrap();
            assert_eq!(key.len(), l);
            assert_eq!(key.known_count(), 1);
            assert_eq!(key.knowledge().group_count(), 0);
            assert!(key.is_consistent());
        }
    }
}

#[test]
fn announced_pulse_is_uniform() {
    let mut rng = StdRng::seed_from_u64(2);
    let l = 8;
    let samples = 100_000;
    let mut counts = [0usize; 9];
    for _ in 0..samples {
        let (_, out, _) =
            sources::measure_until_detection(l, &SourceParams::ideal(), &mut rng).unwrap();
        counts[out.announced_t.unwrap()] += 1;
    }
    let expected = samples as f64 / 9.0;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    // 0.999 quantile of chi-squared with 8 degrees of freedom
    assert!(chi2 < 26.12, "chi2 = {chi2}, counts {counts:?}");
}

#[test]
fn acceptance_rates_follow_poisson() {
    let mut rng = StdRng::seed_from_u64(3);
    let trials = 100_000;
    for mu in [0.1, 0.5] {
        for reporting in [Reporting::Honest, Reporting::MaliciousMultiphoton] {
            let params = SourceParams::weak_coherent(mu, reporting).unwrap();
            let train = gen_train(8, &mut rng).unwrap();
            let accepted = (0..trials)
                .filter(|_| measure(&train, &params, &mut rng).is_some())
                .count();
            let rate = accepted as f64 / trials as f64;
            let p = params.acceptance_probability();
            let se = (p * (1.0 - p) / trials as f64).sqrt();
            let e = (-mu).exp();
            let closed = match reporting {
                Reporting::Honest => 1.0 - e,
                Reporting::MaliciousMultiphoton => 1.0 - e - mu * e,
            };
            assert!((p - closed).abs() < 1e-12);
            assert!(within(rate, p, se), "mu {mu} {reporting:?}: {rate} vs {p}");
        }
    }
}

#[test]
fn accepted_photon_numbers_are_conditionally_poisson() {
    let mut rng = StdRng::seed_from_u64(4);
    let mu = 0.5;
    let samples = 50_000;
    let params = wcs(mu);
    let mut counts = [0usize; 4];
    for _ in 0..samples {
        let (train, out, _) = sources::measure_until_detection(8, &params, &mut rng).unwrap();
        assert!(sources::block_key_from_measurement(&train, &out)
            .unwrap()
            .is_consistent());
        counts[out.photons().min(3)] += 1;
    }
    for m in [1u64, 2] {
        let p = conditional_photon_probability(mu, m, 1);
        let rate = counts[m as usize] as f64 / samples as f64;
        let se = (p * (1.0 - p) / samples as f64).sqrt();
        assert!(within(rate, p, se), "p{m}': {rate} vs {p}");
    }
}

#[test]
fn discard_rate_matches_closed_form() {
    let mut rng = StdRng::seed_from_u64(5);
    for (l, expect) in [(8, 0.1001), (10, 0.0563), (16, 0.0100)] {
        let p_d = lsa::p_discard(0.25, l);
        assert!((p_d - expect).abs() < 1e-4);
        let blocks = 40_000;
        let raw = sources::gen_generic_raw_key(blocks * l, 0.25, &mut rng).unwrap();
        let (_, report) = block_sift(&raw, l).unwrap();
        let se = (p_d * (1.0 - p_d) / blocks as f64).sqrt();
        assert!(within(report.discarded_fraction(), p_d, se));
    }
}

#[test]
fn sifted_keys_know_p_prime_of_their_bits() {
    let mut rng = StdRng::seed_from_u64(6);
    let (l, p) = (10, 0.25);
    let expect = lsa::sifted_known_probability(p, l);
    assert!((expect - 0.2649).abs() < 1e-4);
    let (key, _) = lsa::sifted_generic_key(200_000, l, p, &mut rng).unwrap();
    let frac = key.known_count() as f64 / key.len() as f64;
    assert!((frac - expect).abs() < 0.01, "{frac}");
}

#[test]
fn honest_lsa_never_fails() {
    let mut rng = StdRng::seed_from_u64(7);
    for run in 0..10_000 {
        let l = 2 + run % 15;
        let n = l * (1 + run % 7);
        let k = 1 + run % 9;
        let p = [0.05, 0.25, 0.5][run % 3];
        let (raw, _) = lsa::sifted_generic_key(k * n, l, p, &mut rng).unwrap();
        let index = rng.random_range(0..n);
        let out = lsa_honest(&raw.chunks(n), index, l, &mut rng).unwrap();
        assert!(out.final_key.is_known(index));
        assert!(out.trace.steps.iter().all(|s| s.known >= 1));
        assert!(out.trace.is_monotone(), "run {run}: {:?}", out.trace);
    }
}

#[test]
fn honest_traces_are_monotone() {
    for (seed, source) in [(8, SourceParams::ideal()), (9, wcs(0.1)), (10, wcs(0.5))] {
        for trace in honest_traces(&source, 240, 8, 8, 300, seed) {
            assert!(trace.is_monotone(), "{trace:?}");
        }
    }
}

#[test]
fn ideal_known_count_follows_one_plus_survivors() {
    let l = 8;
    let traces = honest_traces(&SourceParams::ideal(), 800, l, 6, 400, 11);
    // n_k -> (sum of n_{k+1}, sum of squares, count)
    let mut by_n = std::collections::BTreeMap::<usize, (f64, f64, usize)>::new();
    for t in &traces {
        for w in t.steps.windows(2) {
            let e = by_n.entry(w[0].known).or_default();
            let x = w[1].known as f64;
            e.0 += x;
            e.1 += x * x;
            e.2 += 1;
        }
    }
    let mut checked = 0;
    for (&n, &(sum, sq, count)) in &by_n {
        if count < 100 {
            continue;
        }
        let mean = sum / count as f64;
        let var = (sq / count as f64 - mean * mean).max(1e-9);
        let expect = 1.0 + (n as f64 - 1.0) / l as f64;
        assert!(
            within(mean, expect, (var / count as f64).sqrt()),
            "n_k = {n}: mean {mean} vs {expect} over {count}"
        );
        checked += 1;
    }
    assert!(checked >= 3);
}

#[test]
fn wcs_parity_groups_shrink_at_least_as_fast_as_bound() {
    let (l, mu) = (8, 0.5);
    let p1 = conditional_photon_probability(mu, 1, 1);
    let factor = 1.0 - (l as f64 - 1.0) / l as f64 * p1;
    let traces = honest_traces(&wcs(mu), 400, l, 5, 400, 12);
    let mut excess = Vec::new();
    for t in &traces {
        for w in t.steps.windows(2) {
            excess.push(w[1].correlated as f64 - factor * w[0].correlated as f64);
        }
    }
    let count = excess.len() as f64;
    let mean = excess.iter().sum::<f64>() / count;
    let var = excess.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / count;
    assert!(mean <= 3.0 * (var / count).sqrt(), "mean excess {mean}");
}
