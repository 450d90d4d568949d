//! Finite-size-scaling collapse.
//!
//! Each point is mapped to `x = (t - t_c)·N^{1/ν}`, `y = I·N^{2β/ν}`. The
//! master curve is not parametrized: every point is compared with the
//! linear interpolation through the x-sorted points of all *other* sizes,
//! and squared mismatches are weighted by `exp(-x²/2w²)`.

use super::simplex::{minimize, SimplexOptions};
use super::{interpolate, ScalingDataset, ScalingError};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseParams {
    pub t_c: f64,
    pub nu: f64,
    pub beta: f64,
}

impl CollapseParams {
    pub fn new(t_c: f64, nu: f64, beta: f64) -> Self {
        Self { t_c, nu, beta }
    }

    fn to_vec(self) -> Vec<f64> {
        vec![self.t_c, self.nu, self.beta]
    }

    fn from_slice(v: &[f64]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

/// How squared collapse mismatches are normalized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Residual {
    /// `Σ w (y - ŷ)² / Σ w y²`, invariant under rescaling of `y`.
    Relative,
    /// `Σ w (y - ŷ)² / (σ² + σ̂²) / Σ w`, with standard errors carried
    /// through the scaling; points whose combined error vanishes are skipped.
    ErrorWeighted,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollapseOptions {
    pub residual: Residual,
    /// Width of the Gaussian weight in scaled units.
    pub weight_width: f64,
    /// Upper bound on ν during optimization.
    pub nu_max: f64,
    /// Minimum Gaussian weight, as a fraction of the number of points, that
    /// must be carried by points with an interpolated partner; below it the
    /// residual is `+∞` so the fit cannot win by pulling the sizes apart or
    /// by stretching all points out of the weight window.
    pub min_overlap: f64,
    /// Extra simplex starts on a 2×2×2 grid around the initial guess.
    pub restarts: bool,
    pub simplex: SimplexOptions,
}

impl Default for CollapseOptions {
    fn default() -> Self {
        Self {
            residual: Residual::Relative,
            weight_width: 40.0,
            nu_max: 50.0,
            min_overlap: 0.25,
            restarts: true,
            simplex: SimplexOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseFit {
    pub t_c: f64,
    pub nu: f64,
    pub beta: f64,
    /// Collapse mismatch at the optimum.
    pub lse: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl CollapseFit {
    pub fn params(&self) -> CollapseParams {
        CollapseParams::new(self.t_c, self.nu, self.beta)
    }
}

/// Scaled coordinates `(x, y, size)` of every point.
pub fn collapse_points(data: &ScalingDataset, p: CollapseParams) -> Vec<(f64, f64, f64)> {
    data.points
        .iter()
        .map(|pt| {
            let x = (pt.t - p.t_c) * pt.size.powf(1.0 / p.nu);
            let y = pt.mean * pt.size.powf(2.0 * p.beta / p.nu);
            (x, y, pt.size)
        })
        .collect()
}

/// Weighted collapse mismatch over points that have an interpolated
/// prediction from the other sizes, normalized per [`Residual`].
pub fn collapse_residual(
    data: &ScalingDataset,
    params: CollapseParams,
    opts: &CollapseOptions,
) -> Result<f64, ScalingError> {
    let sizes = data.require_sizes(2)?;
    if !(params.nu > 0.0) || !params.nu.is_finite() || !params.t_c.is_finite() || !params.beta.is_finite() {
        return Err(ScalingError::InvalidParams(format!("{params:?}")));
    }
    Ok(residual_unchecked(data, &sizes, params, opts))
}

fn residual_unchecked(data: &ScalingDataset, sizes: &[f64], params: CollapseParams, opts: &CollapseOptions) -> f64 {
    // (x, y, σ_y, size)
    let pts: Vec<(f64, f64, f64, f64)> = data
        .points
        .iter()
        .map(|pt| {
            let scale = pt.size.powf(2.0 * params.beta / params.nu);
            let x = (pt.t - params.t_c) * pt.size.powf(1.0 / params.nu);
            (x, pt.mean * scale, pt.sem * scale, pt.size)
        })
        .collect();
    let two_w2 = 2.0 * opts.weight_width * opts.weight_width;
    let mut num = 0.0;
    let mut den = 0.0;
    let mut used = 0.0;
    for &size in sizes {
        let mut others: Vec<(f64, f64, f64)> = pts.iter().filter(|p| p.3 != size).map(|p| (p.0, p.1, p.2)).collect();
        others.sort_by(|a, b| a.0.total_cmp(&b.0));
        let xs: Vec<f64> = others.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = others.iter().map(|p| p.1).collect();
        let es: Vec<f64> = others.iter().map(|p| p.2 * p.2).collect();
        for &(x, y, sy, _) in pts.iter().filter(|p| p.3 == size) {
            let Some(pred) = interpolate(&xs, &ys, x) else { continue };
            let w = (-x * x / two_w2).exp();
            match opts.residual {
                Residual::Relative => {
                    num += w * (y - pred).powi(2);
                    den += w * y * y;
                }
                Residual::ErrorWeighted => {
                    let var = sy * sy + interpolate(&xs, &es, x).unwrap_or(0.0);
                    if var <= 0.0 {
                        continue;
                    }
                    num += w * (y - pred).powi(2) / var;
                    den += w;
                }
            }
            used += w;
        }
    }
    let need = (opts.min_overlap * pts.len() as f64).max(3.0);
    if used < need || den <= 0.0 {
        return f64::INFINITY;
    }
    num / den
}

fn start_points(guess: CollapseParams, restarts: bool) -> Vec<CollapseParams> {
    let mut starts = vec![guess];
    if restarts {
        let dt = 0.15 * guess.t_c.abs().max(1.0);
        for &t_c in &[guess.t_c - dt, guess.t_c + dt] {
            for &nu in &[guess.nu * 0.7, guess.nu * 1.4] {
                for &beta in &[(guess.beta - 0.15).max(0.02), guess.beta + 0.15] {
                    starts.push(CollapseParams::new(t_c, nu, beta));
                }
            }
        }
    }
    starts
}

/// Minimizes [`collapse_residual`] over `(t_c, ν, β)` with `0 < ν ≤ ν_max`
/// and `β ≥ 0`, keeping the best of the initial guess and the restarts.
pub fn fit_collapse(
    data: &ScalingDataset,
    guess: CollapseParams,
    opts: &CollapseOptions,
) -> Result<CollapseFit, ScalingError> {
    let sizes = data.require_sizes(3)?;
    if !(guess.nu > 0.0) {
        return Err(ScalingError::InvalidParams(format!("initial ν must be positive, got {}", guess.nu)));
    }
    let objective = |v: &[f64]| {
        let p = CollapseParams::from_slice(v);
        if !(p.nu > 0.0 && p.nu <= opts.nu_max && p.beta >= 0.0) {
            return f64::INFINITY;
        }
        residual_unchecked(data, &sizes, p, opts)
    };
    let mut best: Option<CollapseFit> = None;
    for start in start_points(guess, opts.restarts) {
        let step = [
            0.1 * start.t_c.abs().max(1.0),
            0.2 * start.nu,
            0.1 * start.beta.max(0.5),
        ];
        let r = minimize(objective, &start.to_vec(), &step, &opts.simplex);
        let p = CollapseParams::from_slice(&r.x);
        let fit = CollapseFit {
            t_c: p.t_c,
            nu: p.nu,
            beta: p.beta,
            lse: r.value,
            converged: r.converged,
            iterations: r.iterations,
        };
        if best.as_ref().map_or(true, |b| fit.lse < b.lse) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one start"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaling::ScalingPoint;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn master(x: f64) -> f64 {
        0.8 / (1.0 + (-0.8 * x).exp())
    }

    pub(crate) fn synthetic(truth: CollapseParams, noise: f64, seed: u64) -> ScalingDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = Vec::new();
        for &n in &[32.0, 64.0, 128.0, 256.0f64] {
            for k in 0..=30 {
                let t = 0.5 + 0.1 * k as f64;
                let x = (t - truth.t_c) * n.powf(1.0 / truth.nu);
                let clean = n.powf(-2.0 * truth.beta / truth.nu) * master(x);
                let eps = if noise > 0.0 {
                    Normal::new(0.0, noise).unwrap().sample(&mut rng)
                } else {
                    0.0
                };
                pts.push(ScalingPoint {
                    size: n,
                    t,
                    mean: clean * (1.0 + eps),
                    sem: clean * noise,
                });
            }
        }
        ScalingDataset::from_points(pts)
    }

    #[test]
    fn single_size_rejected() {
        let ds = ScalingDataset::from_points(vec![ScalingPoint {
            size: 8.0,
            t: 1.0,
            mean: 0.1,
            sem: 0.0,
        }]);
        assert!(matches!(
            collapse_residual(&ds, CollapseParams::new(1.0, 1.0, 0.1), &CollapseOptions::default()),
            Err(ScalingError::TooFewSizes { need: 2, got: 1 })
        ));
    }

    #[test]
    fn true_parameters_beat_perturbations() {
        let truth = CollapseParams::new(2.0, 2.0, 0.3);
        let ds = synthetic(truth, 0.0, 0);
        let opts = CollapseOptions::default();
        let at_truth = collapse_residual(&ds, truth, &opts).unwrap();
        let scale = |i: usize| [0.8, 0.9, 1.0, 1.1, 1.2][i];
        for k in 0..125 {
            let (a, b, c) = (k % 5, (k / 5) % 5, k / 25);
            let p = CollapseParams::new(truth.t_c * scale(a), truth.nu * scale(b), truth.beta * scale(c));
            if (a, b, c) == (2, 2, 2) {
                continue;
            }
            let r = collapse_residual(&ds, p, &opts).unwrap();
            assert!(r > at_truth, "{p:?}: {r} <= {at_truth}");
        }
    }

    #[test]
    fn unscaled_limit_measures_raw_mismatch() {
        let ds = synthetic(CollapseParams::new(2.0, 2.0, 0.3), 0.0, 0);
        let opts = CollapseOptions::default();
        let pts = collapse_points(&ds, CollapseParams::new(0.0, 1e12, 0.0));
        for (p, (x, y, _)) in ds.points.iter().zip(&pts) {
            assert!((x - p.t).abs() < 1e-9);
            assert_eq!(*y, p.mean);
        }
        // identical curves for every size collapse perfectly without scaling
        let mut flat = ds.clone();
        for p in &mut flat.points {
            p.mean = master(p.t - 2.0);
        }
        let r = collapse_residual(&flat, CollapseParams::new(0.0, 1e12, 0.0), &opts).unwrap();
        assert!(r < 1e-20);
    }

    #[test]
    fn recovers_synthetic_parameters_with_noise() {
        let truth = CollapseParams::new(2.0, 2.0, 0.3);
        let ds = synthetic(truth, 0.01, 5);
        let fit = fit_collapse(&ds, CollapseParams::new(1.8, 1.6, 0.4), &CollapseOptions::default()).unwrap();
        assert!((fit.t_c / truth.t_c - 1.0).abs() < 0.05, "{fit:?}");
        assert!((fit.nu / truth.nu - 1.0).abs() < 0.05, "{fit:?}");
        assert!((fit.beta / truth.beta - 1.0).abs() < 0.05, "{fit:?}");
    }

    #[test]
    fn fit_ignores_point_order_and_global_scale() {
        let truth = CollapseParams::new(2.0, 2.0, 0.3);
        let ds = synthetic(truth, 0.005, 9);
        let opts = CollapseOptions::default();
        let guess = CollapseParams::new(1.9, 1.8, 0.35);
        let a = fit_collapse(&ds, guess, &opts).unwrap();
        let mut shuffled = ds.clone();
        shuffled.points.reverse();
        let b = fit_collapse(&shuffled, guess, &opts).unwrap();
        assert!((a.t_c - b.t_c).abs() < 1e-3 && (a.nu - b.nu).abs() < 1e-3 && (a.beta - b.beta).abs() < 1e-3);
        let mut scaled = ds.clone();
        for p in &mut scaled.points {
            p.mean *= 3.0;
        }
        let c = fit_collapse(&scaled, guess, &opts).unwrap();
        assert!((a.t_c - c.t_c).abs() < 1e-3, "{a:?} {c:?}");
        assert!((a.nu - c.nu).abs() < 1e-2, "{a:?} {c:?}");
    }
}
