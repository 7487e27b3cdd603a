//! Monte Carlo campaigns. Each run draws from its own seeded stream (see
//! [`crate::seeds`]); runs execute on the rayon pool and are collected in
//! run order.

pub mod attack;
pub mod fig2;
pub mod fig3;
pub mod session;
pub mod table1;
pub mod table2;

use rayon::prelude::*;

/// Smallest multiple of `l` that holds `n` items.
pub fn padded(n: usize, l: usize) -> usize {
    n.div_ceil(l) * l
}

/// `f(run)` for every run, in run order.
pub fn par_runs<T, F>(runs: usize, f: F) -> anyhow::Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> anyhow::Result<T> + Sync + Send,
{
    (0..runs as u64).into_par_iter().map(f).collect()
}
