use serde::{Deserialize, Serialize};

/// Aggregate of one metric over the successful replications of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellStat {
    pub mean: f64,
    /// Sample standard deviation across replications; the spread reported
    /// alongside table averages.
    pub sd: f64,
    /// Standard error of `mean`, `sd / sqrt(count)`.
    pub se: f64,
    /// Mean squared deviation from the true value, when one is known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mse: Option<f64>,
    pub count: usize,
}

impl CellStat {
    pub fn from_values(values: &[f64], truth: Option<f64>) -> Self {
        let count = values.len();
        let n = count as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if count > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let mse = truth.map(|b| values.iter().map(|v| (v - b).powi(2)).sum::<f64>() / n);
        Self {
            mean,
            sd,
            se: sd / n.sqrt(),
            mse,
            count,
        }
    }
}

/// True when `ys` decreases except for at most `max_inversions` steps, each
/// rising by no more than `tol` relative to the previous value.
pub fn monotone_decreasing(ys: &[f64], max_inversions: usize, tol: f64) -> bool {
    let mut inversions = 0;
    for w in ys.windows(2) {
        if !(w[0].is_finite() && w[1].is_finite()) {
            return false;
        }
        if w[1] >= w[0] {
            if w[1] > w[0] * (1.0 + tol) {
                return false;
            }
            inversions += 1;
        }
    }
    inversions <= max_inversions
}
