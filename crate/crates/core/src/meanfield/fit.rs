//! Critical time and exponents from the mean-field solver.

use super::{linear_stability_eigenvalue, solve_self_consistency, MagnetizationProfile, MeanFieldError, MfParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Order-parameter threshold separating the phases on the scan grid.
pub const ONSET_EPSILON: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: f64,
    pub psi: f64,
    pub converged: bool,
    pub iters: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalScan {
    pub curve: Vec<CurvePoint>,
    pub t_c: f64,
    /// Final bisection bracket.
    pub bracket: (f64, f64),
}

fn curve_point(params: &MfParams) -> Result<CurvePoint, MeanFieldError> {
    let prof = solve_self_consistency(params)?;
    Ok(CurvePoint {
        t: params.t,
        psi: prof.global(),
        converged: prof.converged,
        iters: prof.iterations,
    })
}

/// Solves on every grid time, in parallel.
pub fn psi_curve(template: &MfParams, grid: &[f64]) -> Result<Vec<CurvePoint>, MeanFieldError> {
    grid.par_iter().map(|&t| curve_point(&template.at(t))).collect()
}

/// Scans `grid` for the first time with `Ψ > ε` and refines the onset by
/// bisection to `resolution`.
///
/// At zero field the refinement classifies a time as ordered when the
/// linearized map about `Ψ = 0` has an eigenvalue above one. This is the
/// exact onset of the nonzero branch; the damped iteration itself slows
/// down critically there and cannot resolve it within `max_iter`. With a
/// field the solver's `Ψ > ε` is used directly.
pub fn scan_critical_time(template: &MfParams, grid: &[f64], resolution: f64) -> Result<CriticalScan, MeanFieldError> {
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(MeanFieldError::InvalidParams("t grid must be increasing with at least two points".into()));
    }
    let curve = psi_curve(template, grid)?;
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    let first = curve.iter().position(|p| p.psi > ONSET_EPSILON);
    let k = match first {
        Some(k) if k > 0 => k,
        _ => return Err(MeanFieldError::NoTransition { lo, hi }),
    };

    let ordered = |t: f64| -> Result<bool, MeanFieldError> {
        if template.h_z == 0.0 {
            Ok(linear_stability_eigenvalue(&template.at(t))? > 1.0)
        } else {
            Ok(solve_self_consistency(&template.at(t))?.global() > ONSET_EPSILON)
        }
    };
    let (mut a, mut b) = (k - 1, k);
    while a > 0 && ordered(grid[a])? {
        a -= 1;
    }
    while b + 1 < grid.len() && !ordered(grid[b])? {
        b += 1;
    }
    let (mut t_lo, mut t_hi) = (grid[a], grid[b]);
    if ordered(t_lo)? || !ordered(t_hi)? {
        return Err(MeanFieldError::NoTransition { lo, hi });
    }
    while t_hi - t_lo > resolution {
        let mid = 0.5 * (t_lo + t_hi);
        if ordered(mid)? {
            t_hi = mid;
        } else {
            t_lo = mid;
        }
    }
    Ok(CriticalScan {
        curve,
        t_c: 0.5 * (t_lo + t_hi),
        bracket: (t_lo, t_hi),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaFit {
    pub beta: f64,
    pub prefactor: f64,
    /// Largest change of β when the window is shrunk toward `t_c`.
    pub sensitivity: f64,
    pub n_points: usize,
}

/// Least-squares slope and intercept of `y` against `x`.
fn line_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

const MIN_BETA_POINTS: usize = 6;

fn beta_in_window(curve: &[(f64, f64)], t_c: f64, window: f64) -> Option<(f64, f64, usize)> {
    let pts: Vec<(f64, f64)> = curve
        .iter()
        .filter(|(t, psi)| *t - t_c > 0.0 && *t - t_c <= window + 1e-12 && *psi > 0.0)
        .map(|(t, psi)| ((t - t_c).ln(), psi.ln()))
        .collect();
    if pts.len() < MIN_BETA_POINTS {
        return None;
    }
    let (slope, icpt) = line_fit(&pts);
    Some((slope, icpt.exp(), pts.len()))
}

/// Fits `Ψ = c (t - t_c)^β` to `(t, Ψ)` points with `0 < t - t_c ≤ window`.
/// The sensitivity is the largest shift of β over windows shrunk to 80%
/// and 60% that still hold six points.
pub fn fit_beta(curve: &[(f64, f64)], t_c: f64, window: f64) -> Result<BetaFit, MeanFieldError> {
    let got = curve.iter().filter(|(t, p)| *t > t_c && *t - t_c <= window + 1e-12 && *p > 0.0).count();
    let (beta, prefactor, n_points) =
        beta_in_window(curve, t_c, window).ok_or(MeanFieldError::TooFewPoints { need: MIN_BETA_POINTS, got })?;
    let sensitivity = [0.8, 0.6]
        .iter()
        .filter_map(|f| beta_in_window(curve, t_c, window * f))
        .map(|(b, _, _)| (b - beta).abs())
        .fold(0.0, f64::max);
    Ok(BetaFit {
        beta,
        prefactor,
        sensitivity,
        n_points,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaFit {
    pub delta: f64,
    /// `(h_z, Ψ)` pairs entering the fit.
    pub points: Vec<(f64, f64)>,
}

/// `δ` as the inverse slope of `ln Ψ` against `ln h_z`.
pub fn delta_from_points(points: &[(f64, f64)]) -> Result<DeltaFit, MeanFieldError> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(h, p)| *h > 0.0 && *p > 0.0)
        .map(|(h, p)| (h.ln(), p.ln()))
        .collect();
    if logs.len() < 3 {
        return Err(MeanFieldError::TooFewPoints { need: 3, got: logs.len() });
    }
    let (slope, _) = line_fit(&logs);
    Ok(DeltaFit {
        delta: 1.0 / slope,
        points: points.to_vec(),
    })
}

/// Solves at `template.t` for every field in `h_grid` and fits `δ`.
pub fn fit_delta(template: &MfParams, h_grid: &[f64]) -> Result<DeltaFit, MeanFieldError> {
    let points: Vec<(f64, f64)> = h_grid
        .par_iter()
        .map(|&h| {
            let p = template.with_field(h);
            let prof = solve_self_consistency(&p)?;
            if !prof.converged {
                return Err(MeanFieldError::NotConverged { t: p.t, h_z: h });
            }
            Ok((h, prof.global()))
        })
        .collect::<Result<_, _>>()?;
    delta_from_points(&points)
}

/// `Ψ_1 · Ψ_{N_t}`, the factorized proxy for the boundary correlation.
pub fn order_parameter_correlation(profile: &MagnetizationProfile) -> f64 {
    match (profile.psi.first(), profile.psi.last()) {
        (Some(a), Some(b)) => a * b,
        _ => 0.0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineOptions {
    /// Coarse grid for the onset scan.
    pub grid: Vec<f64>,
    pub resolution: f64,
    /// Window above `t_c` for the β fit, sampled at `beta_points` times.
    pub beta_window: f64,
    pub beta_points: usize,
    /// Fields for the δ fit at `t_c`.
    pub h_grid: Vec<f64>,
    /// Repeat the onset search at `dt/2`.
    pub halved_dt_check: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            grid: (0..=40).map(|k| 1.0 + 0.05 * k as f64).collect(),
            resolution: 1e-4,
            beta_window: 0.1,
            beta_points: 12,
            h_grid: (0..7).map(|k| 10f64.powf(-4.0 + 0.5 * k as f64)).collect(),
            halved_dt_check: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldReport {
    pub t_c: f64,
    pub t_c_resolution: f64,
    /// Onset recomputed with `dt/2`, when requested.
    pub t_c_halved_dt: Option<f64>,
    pub beta: f64,
    pub beta_sensitivity: f64,
    pub delta: f64,
    pub nu: f64,
    pub params: MfParams,
    pub scan: Vec<CurvePoint>,
    pub beta_curve: Vec<CurvePoint>,
    pub delta_points: Vec<(f64, f64)>,
    /// Solves that hit `max_iter` across the scan and β curve.
    pub unconverged: usize,
}

/// Onset scan, β and δ fits, and `ν = β(δ + 1)`.
pub fn run_pipeline(template: &MfParams, opts: &PipelineOptions) -> Result<MeanFieldReport, MeanFieldError> {
    let zero_field = template.with_field(0.0);
    let scan = scan_critical_time(&zero_field, &opts.grid, opts.resolution)?;
    let t_c = scan.t_c;
    let t_c_halved_dt = if opts.halved_dt_check {
        let half = MfParams {
            dt: template.dt / 2.0,
            ..zero_field
        };
        Some(scan_critical_time(&half, &opts.grid, opts.resolution)?.t_c)
    } else {
        None
    };
    let times: Vec<f64> = (1..=opts.beta_points)
        .map(|k| t_c + opts.beta_window * k as f64 / opts.beta_points as f64)
        .collect();
    let beta_curve = psi_curve(&zero_field, &times)?;
    let pairs: Vec<(f64, f64)> = beta_curve.iter().map(|p| (p.t, p.psi)).collect();
    let beta = fit_beta(&pairs, t_c, opts.beta_window)?;
    let delta = fit_delta(&zero_field.at(t_c), &opts.h_grid)?;
    let unconverged = scan.curve.iter().chain(&beta_curve).filter(|p| !p.converged).count();
    Ok(MeanFieldReport {
        t_c,
        t_c_resolution: opts.resolution,
        t_c_halved_dt,
        beta: beta.beta,
        beta_sensitivity: beta.sensitivity,
        delta: delta.delta,
        nu: beta.beta * (delta.delta + 1.0),
        params: *template,
        scan: scan.curve,
        beta_curve,
        delta_points: delta.points,
        unconverged,
    })
}

/// Writes `t,psi,converged,iters`.
pub fn write_curve_csv(path: &Path, curve: &[CurvePoint]) -> Result<(), MeanFieldError> {
    let io = |e: std::io::Error| MeanFieldError::Io {
        path: path.display().to_string(),
        source: e,
    };
    let mut w = csv::Writer::from_path(path).map_err(|e| io(e.into()))?;
    for p in curve {
        w.serialize(p).map_err(|e| io(e.into()))?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> MfParams {
        MfParams {
            n: 40,
            dt: 0.05,
            ..Default::default()
        }
    }

    #[test]
    fn synthetic_beta_is_exact() {
        let curve: Vec<(f64, f64)> = (1..=10).map(|k| 2.0 + 0.05 * k as f64).map(|t| (t, (t - 2.0f64).sqrt())).collect();
        let fit = fit_beta(&curve, 2.0, 0.5).unwrap();
        assert!((fit.beta - 0.5).abs() < 1e-12);
        assert!((fit.prefactor - 1.0).abs() < 1e-12);
        assert!(fit.sensitivity < 1e-12);
    }

    #[test]
    fn beta_needs_six_points() {
        let curve: Vec<(f64, f64)> = (1..=5).map(|k| (2.0 + 0.1 * k as f64, 0.1 * k as f64)).collect();
        assert!(matches!(
            fit_beta(&curve, 2.0, 0.5),
            Err(MeanFieldError::TooFewPoints { need: 6, got: 5 })
        ));
    }

    #[test]
    fn synthetic_delta_is_exact() {
        let pts: Vec<(f64, f64)> = (0..6).map(|k| 10f64.powi(-k)).map(|h| (h, h.powf(1.0 / 3.0))).collect();
        assert!((delta_from_points(&pts).unwrap().delta - 3.0).abs() < 1e-12);
    }

    #[test]
    fn strong_field_has_no_transition() {
        let grid: Vec<f64> = (0..=6).map(|k| 1.0 + 0.5 * k as f64).collect();
        assert!(matches!(
            scan_critical_time(&quick().with_field(0.1), &grid, 1e-3),
            Err(MeanFieldError::NoTransition { .. })
        ));
    }

    #[test]
    fn grid_without_onset_reports_no_transition() {
        let grid = [0.5, 1.0, 1.5];
        assert!(matches!(
            scan_critical_time(&quick(), &grid, 1e-3),
            Err(MeanFieldError::NoTransition { .. })
        ));
    }

    #[test]
    fn onset_agrees_with_solver() {
        let grid: Vec<f64> = (0..=12).map(|k| 1.4 + 0.1 * k as f64).collect();
        let scan = scan_critical_time(&quick(), &grid, 1e-3).unwrap();
        assert!(scan.bracket.1 - scan.bracket.0 <= 1e-3);
        let below = solve_self_consistency(&quick().at(scan.t_c - 0.1)).unwrap();
        let above = solve_self_consistency(&quick().at(scan.t_c + 0.1)).unwrap();
        assert!(below.converged && below.global() < ONSET_EPSILON);
        assert!(above.converged && above.global() > 10.0 * ONSET_EPSILON);
    }

    #[test]
    fn correlation_tracks_order() {
        let p = quick();
        let low = solve_self_consistency(&p.at(1.0)).unwrap();
        assert!(order_parameter_correlation(&low).abs() < 1e-12);
        let mut last = 0.0;
        for t in [2.6, 3.0, 3.5] {
            let c = order_parameter_correlation(&solve_self_consistency(&p.at(t)).unwrap());
            assert!(c > last, "t={t}: {c} <= {last}");
            last = c;
        }
        let fielded = solve_self_consistency(&p.at(1.0).with_field(0.01)).unwrap();
        assert!(order_parameter_correlation(&fielded) > 0.0);
    }

    #[test]
    fn curve_csv_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("psi.csv");
        let pts = [CurvePoint { t: 1.0, psi: 0.0, converged: true, iters: 3 }];
        write_curve_csv(&path, &pts).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert_eq!(text.lines().next().unwrap(), "t,psi,converged,iters");
    }
}
