use qpq_lab::experiments::{attack, table1};
use qpq_lab::stats::RunStats;

#[test]
fn run_order_does_not_change_statistics() {
    let forward: Vec<_> = (0..20)
        .map(|run| table1::malicious_k(160, 8, 0.1, 99, run).unwrap())
        .collect();
    let mut backward: Vec<_> = (0..20)
        .rev()
        .map(|run| table1::malicious_k(160, 8, 0.1, 99, run).unwrap())
        .collect();
    backward.reverse();
    assert_eq!(forward, backward);
    let params = table1::Params {
        n: vec![160],
        l: 8,
        mu: 0.1,
        runs: 20,
        seed: 99,
    };
    let cell = table1::cell(&params, 160, table1::Alice::Malicious).unwrap();
    let direct = RunStats::from_options(forward.into_iter().map(|k| k.map(|k| k as f64)));
    assert_eq!(cell, direct);
    assert!(cell.min <= cell.mean && cell.mean <= cell.max);
}

#[test]
fn paired_attack_runs_share_their_database() {
    let params = attack::Params {
        n: vec![60],
        mu: 0.1,
        runs: 4,
        seed: 5,
        strategies: vec![
            qpq_core::attack::AddressStrategy::Optimal,
            qpq_core::attack::AddressStrategy::Random,
        ],
    };
    let a = attack::run(&params).unwrap();
    let b = attack::run(&params).unwrap();
    assert_eq!(a.len(), 8);
    assert_eq!(
        a.iter().map(|r| r.queries).collect::<Vec<_>>(),
        b.iter().map(|r| r.queries).collect::<Vec<_>>()
    );
    assert!(a.iter().all(|r| r.exact && r.queries <= 60));
}
