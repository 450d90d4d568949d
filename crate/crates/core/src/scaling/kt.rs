//! Fits of `I(N) = a·exp[1/(ln N + b)]` at fixed time.
//!
//! At fixed `b` the model is linear in `a`, so `a` is eliminated in closed
//! form and only `b` is searched: a coarse grid locates the basin and a
//! golden-section search refines it. The goodness of fit is the residual
//! sum of squares divided by the total sum of squares about the mean.

use super::{ScalingDataset, ScalingError};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KtFit {
    pub a: f64,
    pub b: f64,
    pub lse_over_var: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KtRecord {
    pub t: f64,
    pub a: f64,
    pub b: f64,
    pub lse_over_var: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KtScan {
    pub records: Vec<KtRecord>,
    /// Time with the smallest LSE/variance.
    pub t_c: f64,
    /// Smallest and largest time whose ratio is within twice the minimum.
    pub window: (f64, f64),
    /// Half-width of `window`.
    pub error: f64,
}

const B_SPAN: f64 = 60.0;
const GRID: usize = 600;

fn g(n: f64, b: f64) -> f64 {
    (1.0 / (n.ln() + b)).exp()
}

/// Optimal `a` and the residual sum of squares for a fixed `b`.
fn profile(points: &[(f64, f64)], b: f64) -> (f64, f64) {
    let (mut sgy, mut sgg) = (0.0, 0.0);
    for &(n, y) in points {
        let gv = g(n, b);
        sgy += gv * y;
        sgg += gv * gv;
    }
    let a = sgy / sgg;
    let sse = points.iter().map(|&(n, y)| (y - a * g(n, b)).powi(2)).sum();
    (a, sse)
}

/// Fit at one time slice from `(N, mean I)` pairs; needs three distinct
/// sizes, and fails with [`ScalingError::UndefinedRatio`] when all means
/// coincide.
pub fn kt_fit_at_time(points: &[(f64, f64)]) -> Result<KtFit, ScalingError> {
    let mut sizes: Vec<f64> = points.iter().map(|p| p.0).collect();
    sizes.sort_by(f64::total_cmp);
    sizes.dedup();
    if sizes.len() < 3 {
        return Err(ScalingError::TooFewSizes { need: 3, got: sizes.len() });
    }
    if sizes[0] <= 1.0 {
        return Err(ScalingError::InvalidParams(format!("sizes must exceed 1, got {}", sizes[0])));
    }
    let mean = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
    let sst: f64 = points.iter().map(|p| (p.1 - mean).powi(2)).sum();
    if !(sst > 0.0) {
        return Err(ScalingError::UndefinedRatio);
    }

    // ln N + b must stay positive for every size
    let lo = -sizes[0].ln() + 0.1;
    let hi = lo + B_SPAN;
    let sse = |b: f64| profile(points, b).1;
    let step = (hi - lo) / GRID as f64;
    let mut best = 0;
    let mut best_val = f64::INFINITY;
    for k in 0..=GRID {
        let v = sse(lo + step * k as f64);
        if v < best_val {
            best_val = v;
            best = k;
        }
    }
    let mut x0 = lo + step * best.saturating_sub(1) as f64;
    let mut x3 = (lo + step * (best + 1) as f64).min(hi);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = x3 - phi * (x3 - x0);
    let mut x2 = x0 + phi * (x3 - x0);
    let (mut f1, mut f2) = (sse(x1), sse(x2));
    for _ in 0..200 {
        if (x3 - x0).abs() < 1e-12 * (1.0 + x0.abs()) {
            break;
        }
        if f1 < f2 {
            x3 = x2;
            x2 = x1;
            f2 = f1;
            x1 = x3 - phi * (x3 - x0);
            f1 = sse(x1);
        } else {
            x0 = x1;
            x1 = x2;
            f1 = f2;
            x2 = x0 + phi * (x3 - x0);
            f2 = sse(x2);
        }
    }
    let mut b = 0.5 * (x0 + x3);
    if best_val < sse(b) {
        b = lo + step * best as f64;
    }
    let (a, sse_b) = profile(points, b);
    Ok(KtFit {
        a,
        b,
        lse_over_var: sse_b / sst,
    })
}

/// Fits every time slice with at least three sizes and reports the time
/// of best fit. Slices that cannot be fitted are skipped.
pub fn kt_scan(data: &ScalingDataset) -> Result<KtScan, ScalingError> {
    data.require_sizes(3)?;
    let mut times: Vec<f64> = data.points.iter().map(|p| p.t).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut records = Vec::new();
    for &t in &times {
        let slice: Vec<(f64, f64)> = data
            .points
            .iter()
            .filter(|p| p.t == t)
            .map(|p| (p.size, p.mean))
            .collect();
        if let Ok(fit) = kt_fit_at_time(&slice) {
            records.push(KtRecord {
                t,
                a: fit.a,
                b: fit.b,
                lse_over_var: fit.lse_over_var,
            });
        }
    }
    let best = records
        .iter()
        .min_by(|x, y| x.lse_over_var.total_cmp(&y.lse_over_var))
        .ok_or(ScalingError::NoValidTimes(3))?;
    let cut = 2.0 * best.lse_over_var;
    let within: Vec<f64> = records.iter().filter(|r| r.lse_over_var <= cut).map(|r| r.t).collect();
    let window = (within[0], within[within.len() - 1]);
    Ok(KtScan {
        t_c: best.t,
        window,
        error: 0.5 * (window.1 - window.0),
        records: records.clone(),
    })
}
