//! Critical-point extraction from ensemble data.
//!
//! * [`collapse`]: finite-size-scaling collapse `I = N^{-2β/ν} F((t-t_c) N^{1/ν})`.
//! * [`bootstrap`]: trajectory-level resampling of the collapse fit.
//! * [`kt`]: fits of `I(t, N) = a·exp[1/(ln N + b)]` at fixed `t`, and the
//!   scan over `t` that locates the Kosterlitz-Thouless-like point.
//! * [`crossing`]: statistically significant crossings of curves of
//!   consecutive system sizes.

pub mod bootstrap;
pub mod collapse;
pub mod crossing;
pub mod kt;
pub mod simplex;

pub use bootstrap::{bootstrap_collapse, BootstrapOptions, BootstrapResult};
pub use collapse::{collapse_points, collapse_residual, fit_collapse, CollapseFit, CollapseOptions, CollapseParams, Residual};
pub use crossing::{crossing_scan, CrossingScan, PairCrossings};
pub use kt::{kt_fit_at_time, kt_scan, KtFit, KtRecord, KtScan};

use crate::experiment::{aggregate, EnsembleRow, ExperimentError, RawSample};
use std::collections::BTreeMap;

#[derive(Debug, thiserror::Error)]
pub enum ScalingError {
    #[error("need at least {need} distinct system sizes, got {got}")]
    TooFewSizes { need: usize, got: usize },
    #[error("trajectory-level samples are required for bootstrap resampling")]
    MissingSamples,
    #[error("data have zero variance across sizes; LSE/variance is undefined")]
    UndefinedRatio,
    #[error("no time slice has at least {0} sizes with non-degenerate data")]
    NoValidTimes(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingPoint {
    /// Linear system size entering the scaling form.
    pub size: f64,
    pub t: f64,
    pub mean: f64,
    pub sem: f64,
}

/// Trajectory-level samples for one `(size, t)` cell.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleGroup {
    pub size: f64,
    pub t: f64,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScalingDataset {
    pub points: Vec<ScalingPoint>,
    pub samples: Option<Vec<SampleGroup>>,
}

/// Linear size of a CSV row: `N` except on the lattice, where `L = √N`.
fn linear_size(family: &str, n: usize) -> f64 {
    if family == "lattice_2d" {
        (n as f64).sqrt().round()
    } else {
        n as f64
    }
}

impl ScalingDataset {
    pub fn from_points(points: Vec<ScalingPoint>) -> Self {
        Self { points, samples: None }
    }

    pub fn from_rows(rows: &[EnsembleRow]) -> Self {
        Self::from_points(
            rows.iter()
                .map(|r| ScalingPoint {
                    size: linear_size(&r.family, r.n),
                    t: r.t,
                    mean: r.mean_i,
                    sem: r.sem,
                })
                .collect(),
        )
    }

    /// Aggregates raw samples and keeps them for resampling.
    pub fn from_raw(raw: &[RawSample]) -> Result<Self, ScalingError> {
        let rows = aggregate(raw)?;
        let mut ds = Self::from_rows(&rows);
        let mut groups: BTreeMap<(u64, u64), SampleGroup> = BTreeMap::new();
        let mut sorted: Vec<&RawSample> = raw.iter().collect();
        sorted.sort_by_key(|s| (s.n, s.trajectory));
        for s in sorted {
            let size = linear_size(&s.family, s.n);
            groups
                .entry((size.to_bits(), s.t.to_bits()))
                .or_insert_with(|| SampleGroup {
                    size,
                    t: s.t,
                    values: Vec::new(),
                })
                .values
                .push(s.i as f64);
        }
        let mut groups: Vec<SampleGroup> = groups.into_values().collect();
        groups.sort_by(|a, b| a.size.total_cmp(&b.size).then(a.t.total_cmp(&b.t)));
        ds.samples = Some(groups);
        Ok(ds)
    }

    /// Distinct sizes in increasing order.
    pub fn sizes(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.points.iter().map(|p| p.size).collect();
        s.sort_by(f64::total_cmp);
        s.dedup();
        s
    }

    /// Points of one size, sorted by time.
    pub fn curve(&self, size: f64) -> Vec<ScalingPoint> {
        let mut c: Vec<ScalingPoint> = self.points.iter().filter(|p| p.size == size).copied().collect();
        c.sort_by(|a, b| a.t.total_cmp(&b.t));
        c
    }

    /// Keeps only points with `t` inside `[lo, hi]`.
    pub fn window(&self, lo: f64, hi: f64) -> Self {
        let keep = |t: f64| t >= lo - 1e-12 && t <= hi + 1e-12;
        Self {
            points: self.points.iter().filter(|p| keep(p.t)).copied().collect(),
            samples: self
                .samples
                .as_ref()
                .map(|g| g.iter().filter(|s| keep(s.t)).cloned().collect()),
        }
    }

    pub fn require_sizes(&self, need: usize) -> Result<Vec<f64>, ScalingError> {
        let sizes = self.sizes();
        if sizes.len() < need {
            return Err(ScalingError::TooFewSizes { need, got: sizes.len() });
        }
        Ok(sizes)
    }
}

/// Linear interpolation of `(x, y)` samples sorted by `x`; `None` outside
/// the sampled range.
pub(crate) fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    let n = xs.len();
    if n == 0 || x < xs[0] || x > xs[n - 1] {
        return None;
    }
    let hi = xs.partition_point(|&v| v < x);
    if hi < n && xs[hi] == x {
        // average over ties at exactly x
        let end = xs[hi..].partition_point(|&v| v == x) + hi;
        return Some(ys[hi..end].iter().sum::<f64>() / (end - hi) as f64);
    }
    let lo = hi - 1;
    let frac = (x - xs[lo]) / (xs[hi] - xs[lo]);
    Some(ys[lo] + frac * (ys[hi] - ys[lo]))
}
