//! Crossings of `I(t)` curves for consecutive system sizes.
//!
//! For each pair `(N₁ < N₂)` the difference `d(t) = I_{N₂}(t) - I_{N₁}(t)` is
//! evaluated on the smaller size's time grid (the larger curve is
//! interpolated) together with `σ(t) = √(sem₁² + sem₂²)`. Points with
//! `|d| > k·σ` are significant; a crossing is recorded between two
//! consecutive significant points of opposite sign.

use super::{interpolate, ScalingDataset, ScalingError};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairCrossings {
    pub n_small: f64,
    pub n_large: f64,
    /// Estimated crossing times, in increasing order.
    pub crossings: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingScan {
    pub pairs: Vec<PairCrossings>,
}

impl CrossingScan {
    /// All crossing times across pairs.
    pub fn all(&self) -> Vec<f64> {
        self.pairs.iter().flat_map(|p| p.crossings.iter().copied()).collect()
    }

    /// True when no pair shows a significant crossing.
    pub fn is_none(&self) -> bool {
        self.pairs.iter().all(|p| p.crossings.is_empty())
    }

    /// Mean crossing time of the largest pair that crosses.
    pub fn largest_pair_estimate(&self) -> Option<f64> {
        self.pairs.iter().rev().find(|p| !p.crossings.is_empty()).map(|p| {
            p.crossings.iter().sum::<f64>() / p.crossings.len() as f64
        })
    }
}

fn pair(data: &ScalingDataset, n1: f64, n2: f64, threshold: f64) -> PairCrossings {
    let small = data.curve(n1);
    let large = data.curve(n2);
    let lt: Vec<f64> = large.iter().map(|p| p.t).collect();
    let lm: Vec<f64> = large.iter().map(|p| p.mean).collect();
    let ls: Vec<f64> = large.iter().map(|p| p.sem).collect();

    // (t, d, significant)
    let mut diffs: Vec<(f64, f64, bool)> = Vec::new();
    for p in &small {
        let (Some(m2), Some(s2)) = (interpolate(&lt, &lm, p.t), interpolate(&lt, &ls, p.t)) else {
            continue;
        };
        let d = m2 - p.mean;
        let sigma = (p.sem * p.sem + s2 * s2).sqrt();
        diffs.push((p.t, d, d.abs() > threshold * sigma));
    }

    let mut crossings = Vec::new();
    let mut last: Option<usize> = None;
    for (k, &(_, d, sig)) in diffs.iter().enumerate() {
        if !sig {
            continue;
        }
        if let Some(j) = last {
            if diffs[j].1.signum() != d.signum() {
                // mean of the zero crossings of the interpolated difference
                let roots: Vec<f64> = (j..k)
                    .filter_map(|m| {
                        let (t0, d0, _) = diffs[m];
                        let (t1, d1, _) = diffs[m + 1];
                        if d0 == 0.0 {
                            Some(t0)
                        } else if d0.signum() != d1.signum() && d1 != 0.0 {
                            Some(t0 + (t1 - t0) * d0 / (d0 - d1))
                        } else {
                            None
                        }
                    })
                    .collect();
                if !roots.is_empty() {
                    crossings.push(roots.iter().sum::<f64>() / roots.len() as f64);
                }
            }
        }
        last = Some(k);
    }
    PairCrossings {
        n_small: n1,
        n_large: n2,
        crossings,
    }
}

/// Scans consecutive size pairs for crossings significant at `threshold`
/// combined standard errors.
pub fn crossing_scan(data: &ScalingDataset, threshold: f64) -> Result<CrossingScan, ScalingError> {
    let sizes = data.require_sizes(2)?;
    Ok(CrossingScan {
        pairs: sizes.windows(2).map(|w| pair(data, w[0], w[1], threshold)).collect(),
    })
}
