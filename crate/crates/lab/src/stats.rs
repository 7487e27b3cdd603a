use serde::{Deserialize, Serialize};

/// Summary of one grid cell over many runs.
///
/// `std` is the population standard deviation (divisor `n`). Runs that did
/// not converge are counted in `nonconverged` and left out of `values`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub runs: usize,
    pub nonconverged: usize,
    pub max: f64,
    pub min: f64,
    pub mean: f64,
    pub std: f64,
    pub values: Vec<f64>,
}

impl RunStats {
    pub fn from_values(values: Vec<f64>, nonconverged: usize) -> Self {
        let n = values.len();
        let (mut max, mut min, mut mean, mut std) = (f64::NAN, f64::NAN, f64::NAN, f64::NAN);
        if n > 0 {
            max = values.iter().copied().fold(f64::MIN, f64::max);
            min = values.iter().copied().fold(f64::MAX, f64::min);
            mean = values.iter().sum::<f64>() / n as f64;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            std = var.sqrt();
            // keep min <= mean <= max exact despite rounding
            mean = mean.clamp(min, max);
        }
        Self {
            runs: n + nonconverged,
            nonconverged,
            max,
            min,
            mean,
            std,
            values,
        }
    }

    /// Stats over `Some` values; `None` counts as a non-converged run.
    pub fn from_options(values: impl IntoIterator<Item = Option<f64>>) -> Self {
        let mut ok = Vec::new();
        let mut failed = 0;
        for v in values {
            match v {
                Some(v) => ok.push(v),
                None => failed += 1,
            }
        }
        Self::from_values(ok, failed)
    }

    /// Raw values as a space-separated list, for flat output formats.
    pub fn values_text(&self) -> String {
        self.values
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }
}
