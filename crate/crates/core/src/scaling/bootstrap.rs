//! Bootstrap error bars for the collapse parameters.
//!
//! Each replicate draws, independently for every `(size, t)` cell,
//! `⌊fraction·n⌋` trajectory values with replacement, re-averages them and
//! refits the collapse from the full-data optimum.

use super::collapse::{fit_collapse, CollapseFit, CollapseOptions, CollapseParams};
use super::{ScalingDataset, ScalingError, ScalingPoint};
use crate::seed;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BootstrapOptions {
    pub n_boot: usize,
    pub fraction: f64,
    pub seed: u64,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self {
            n_boot: 1000,
            fraction: 0.5,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub replicates: Vec<CollapseFit>,
    /// Mean of `(t_c, ν, β)` over replicates.
    pub mean: CollapseParams,
    /// Sample standard deviation of `(t_c, ν, β)` over replicates.
    pub std: CollapseParams,
}

fn resample(data: &ScalingDataset, fraction: f64, seed: u64, rep: usize) -> Result<ScalingDataset, ScalingError> {
    let groups = data.samples.as_ref().ok_or(ScalingError::MissingSamples)?;
    let mut points = Vec::with_capacity(groups.len());
    for (g, group) in groups.iter().enumerate() {
        let n = group.values.len();
        let m = ((fraction * n as f64).floor() as usize).max(1);
        let mut rng = seed::stream(seed, &[rep as u64, g as u64]);
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..m {
            let v = group.values[rng.gen_range(0..n)];
            sum += v;
            sq += v * v;
        }
        let mean = sum / m as f64;
        let var = if m > 1 { ((sq - sum * mean) / (m - 1) as f64).max(0.0) } else { 0.0 };
        points.push(ScalingPoint {
            size: group.size,
            t: group.t,
            mean,
            sem: (var / m as f64).sqrt(),
        });
    }
    Ok(ScalingDataset::from_points(points))
}

/// Mean and sample std of a set of values, summed in sorted order so the
/// result does not depend on replicate order.
fn mean_std(values: &mut [f64]) -> (f64, f64) {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Bootstrap the collapse fit. Replicates run in parallel; each uses its
/// own derived RNG stream, so the output depends only on `opts.seed`.
pub fn bootstrap_collapse(
    data: &ScalingDataset,
    start: CollapseParams,
    collapse: &CollapseOptions,
    opts: &BootstrapOptions,
) -> Result<BootstrapResult, ScalingError> {
    if data.samples.is_none() {
        return Err(ScalingError::MissingSamples);
    }
    if opts.n_boot == 0 || !(opts.fraction > 0.0 && opts.fraction <= 1.0) {
        return Err(ScalingError::InvalidParams(format!(
            "n_boot = {}, fraction = {}",
            opts.n_boot, opts.fraction
        )));
    }
    data.require_sizes(3)?;
    // replicates refit from the full-data optimum; restarts would dominate the cost
    let local = CollapseOptions {
        restarts: false,
        ..*collapse
    };
    let replicates: Vec<CollapseFit> = (0..opts.n_boot)
        .into_par_iter()
        .map(|rep| {
            let ds = resample(data, opts.fraction, opts.seed, rep)?;
            fit_collapse(&ds, start, &local)
        })
        .collect::<Result<_, _>>()?;
    let column = |f: fn(&CollapseFit) -> f64| {
        let mut v: Vec<f64> = replicates.iter().map(f).collect();
        mean_std(&mut v)
    };
    let (t_m, t_s) = column(|r| r.t_c);
    let (n_m, n_s) = column(|r| r.nu);
    let (b_m, b_s) = column(|r| r.beta);
    Ok(BootstrapResult {
        replicates,
        mean: CollapseParams::new(t_m, n_m, b_m),
        std: CollapseParams::new(t_s, n_s, b_s),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaling::SampleGroup;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn master(x: f64) -> f64 {
        0.8 / (1.0 + (-0.8 * x).exp())
    }

    fn dataset(per_cell: usize, noise: f64, seed: u64) -> ScalingDataset {
        let truth = CollapseParams::new(2.0, 2.0, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut groups = Vec::new();
        for &n in &[32.0, 64.0, 128.0f64] {
            for k in 0..=20 {
                let t = 1.0 + 0.1 * k as f64;
                let x = (t - truth.t_c) * n.powf(1.0 / truth.nu);
                let clean = n.powf(-2.0 * truth.beta / truth.nu) * master(x);
                let values = (0..per_cell)
                    .map(|_| {
                        if noise > 0.0 {
                            clean + Normal::new(0.0, noise).unwrap().sample(&mut rng)
                        } else {
                            clean
                        }
                    })
                    .collect();
                groups.push(SampleGroup { size: n, t, values });
            }
        }
        let points = groups
            .iter()
            .map(|g| ScalingPoint {
                size: g.size,
                t: g.t,
                mean: g.values.iter().sum::<f64>() / g.values.len() as f64,
                sem: 0.0,
            })
            .collect();
        ScalingDataset {
            points,
            samples: Some(groups),
        }
    }

    fn opts(n_boot: usize, seed: u64) -> BootstrapOptions {
        BootstrapOptions {
            n_boot,
            fraction: 0.5,
            seed,
        }
    }

    #[test]
    fn requires_samples() {
        let mut ds = dataset(4, 0.0, 0);
        ds.samples = None;
        let start = CollapseParams::new(2.0, 2.0, 0.3);
        assert!(matches!(
            bootstrap_collapse(&ds, start, &CollapseOptions::default(), &opts(4, 0)),
            Err(ScalingError::MissingSamples)
        ));
    }

    #[test]
    fn noiseless_data_has_no_spread() {
        let ds = dataset(8, 0.0, 0);
        let start = CollapseParams::new(2.0, 2.0, 0.3);
        let r = bootstrap_collapse(&ds, start, &CollapseOptions::default(), &opts(6, 1)).unwrap();
        assert!(r.std.t_c < 1e-3 && r.std.nu < 1e-2 && r.std.beta < 1e-3, "{:?}", r.std);
    }

    #[test]
    fn deterministic_and_order_invariant() {
        let ds = dataset(10, 0.02, 3);
        let start = CollapseParams::new(2.0, 2.0, 0.3);
        let c = CollapseOptions::default();
        let a = bootstrap_collapse(&ds, start, &c, &opts(6, 7)).unwrap();
        let b = bootstrap_collapse(&ds, start, &c, &opts(6, 7)).unwrap();
        assert_eq!(a, b);
        let mut reps = a.replicates.clone();
        reps.reverse();
        let mut t: Vec<f64> = reps.iter().map(|r| r.t_c).collect();
        assert_eq!(mean_std(&mut t), (a.mean.t_c, a.std.t_c));
        let other = bootstrap_collapse(&ds, start, &c, &opts(6, 8)).unwrap();
        assert_ne!(a.replicates, other.replicates);
    }

    #[test]
    fn resample_spread_shrinks_with_more_trajectories() {
        // the resampled cell mean has std σ/√(n/2), so 4× the data halves it
        // averaged over all cells to suppress the noise of each cell's own σ̂
        let spread = |per_cell: usize| {
            let ds = dataset(per_cell, 0.05, 11);
            let reps: Vec<ScalingDataset> = (0..400).map(|rep| resample(&ds, 0.5, 5, rep).unwrap()).collect();
            let cells = ds.points.len();
            (0..cells)
                .map(|c| {
                    let mut m: Vec<f64> = reps.iter().map(|r| r.points[c].mean).collect();
                    mean_std(&mut m).1
                })
                .sum::<f64>()
                / cells as f64
        };
        let ratio = spread(16) / spread(64);
        assert!((ratio - 2.0).abs() < 0.2, "ratio {ratio}");
    }
}
