//! Mean-field theory of the effective Ising model.
//!
//! At leading order in `1/N` the replicated circuit maps onto a classical
//! chain in imaginary time: `N_t = t/dt` Trotter steps, each holding
//! `N - 1` spins, with nearest-neighbour bond `J̃ = -ln(h)/2`,
//! `h = 2dt/(5(N-1))`, and a field `J_zz Ψ_τ` on every spin of step `τ`
//! where `J_zz = 4dt/(5(N-1))`. The order parameter `Ψ_τ` is the mean
//! magnetization of step `τ` and is solved self-consistently. The phase
//! `Φ` of the full theory is set to one.
//!
//! `t` is continuous: the chain uses `N_t = round(t/dt)` steps of length
//! `t/N_t`, so the effective step differs from `dt` by at most `dt/(2N_t)`.

pub mod chain;
pub mod fit;
pub mod haar;

pub use chain::chain_magnetization;
pub use fit::{
    fit_beta, fit_delta, delta_from_points, order_parameter_correlation, run_pipeline, scan_critical_time,
    write_curve_csv, BetaFit, CurvePoint, CriticalScan, DeltaFit, MeanFieldReport, PipelineOptions,
};
pub use haar::{analytic_projector, haar_projector_check};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum MeanFieldError {
    #[error("invalid mean-field parameters: {0}")]
    InvalidParams(String),
    #[error("need at least {need} points for the fit, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("no transition in window [{lo}, {hi}]")]
    NoTransition { lo: f64, hi: f64 },
    #[error("self-consistency did not converge at t = {t}, h_z = {h_z}")]
    NotConverged { t: f64, h_z: f64 },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Coefficients of the effective Hamiltonian per unit `J_ij`, and the
/// boundary field entering the mutual-information formula.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveCouplings {
    pub zz: f64,
    pub yy: f64,
    pub transverse: f64,
    pub boundary_field: f64,
}

impl EffectiveCouplings {
    pub const fn new() -> Self {
        Self {
            zz: 2.0 / 5.0,
            yy: 1.0 / 10.0,
            transverse: 1.0 / 5.0,
            // ln(√(3/2) − √(1/2)) = −0.6585…
            boundary_field: -0.658_478_948_462_408_4,
        }
    }

    /// `J_ij` for qubit count `n`; uniform all-to-all coupling `2/(N-1)`.
    pub fn pair_coupling(n: usize) -> f64 {
        2.0 / (n as f64 - 1.0)
    }
}

impl Default for EffectiveCouplings {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MfParams {
    /// Qubit number in the coupling `J_ij = 2/(N-1)`.
    pub n: usize,
    /// Nominal Trotter step.
    pub dt: f64,
    /// Total time (inverse temperature of the chain).
    pub t: f64,
    pub tol: f64,
    pub damping: f64,
    pub max_iter: usize,
    /// External field along z.
    pub h_z: f64,
}

impl Default for MfParams {
    fn default() -> Self {
        Self {
            n: 200,
            dt: 0.02,
            t: 2.0,
            tol: 1e-8,
            damping: 0.5,
            max_iter: 10_000,
            h_z: 0.0,
        }
    }
}

impl MfParams {
    pub fn at(&self, t: f64) -> Self {
        Self { t, ..*self }
    }

    pub fn with_field(&self, h_z: f64) -> Self {
        Self { h_z, ..*self }
    }

    pub fn steps(&self) -> usize {
        ((self.t / self.dt).round() as usize).max(1)
    }

    pub fn effective_dt(&self) -> f64 {
        self.t / self.steps() as f64
    }

    pub fn spins_per_step(&self) -> usize {
        self.n - 1
    }

    /// Transverse weight `h = 2dt/(5(N-1))`.
    pub fn h(&self) -> f64 {
        2.0 * self.effective_dt() / (5.0 * (self.n as f64 - 1.0))
    }

    /// Chain bond `J̃ = -ln(h)/2`.
    pub fn bond(&self) -> f64 {
        -self.h().ln() / 2.0
    }

    pub fn j_zz(&self) -> f64 {
        4.0 * self.effective_dt() / (5.0 * (self.n as f64 - 1.0))
    }

    /// Field per spin from `h_z`.
    pub fn spin_field(&self) -> f64 {
        self.h_z * self.effective_dt() / (self.n as f64 - 1.0)
    }

    pub fn validate(&self) -> Result<(), MeanFieldError> {
        let bad = |m: String| Err(MeanFieldError::InvalidParams(m));
        if self.n < 2 {
            return bad(format!("N must be at least 2, got {}", self.n));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return bad(format!("t must be positive, got {}", self.t));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad(format!("damping must lie in (0, 1], got {}", self.damping));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return bad("tol and max_iter must be positive".into());
        }
        if !self.h_z.is_finite() {
            return bad(format!("h_z must be finite, got {}", self.h_z));
        }
        if !(self.h() < 0.5) {
            return bad(format!("h = {} must be below 1/2; reduce dt or increase N", self.h()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MagnetizationProfile {
    /// `Ψ_τ` for `τ = 1..N_t`.
    pub psi: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl MagnetizationProfile {
    /// Global order parameter, the mean of `Ψ_τ`.
    pub fn global(&self) -> f64 {
        self.psi.iter().sum::<f64>() / self.psi.len() as f64
    }
}

/// Per-step mean magnetization for a given profile.
fn step_means(params: &MfParams, psi: &[f64]) -> Vec<f64> {
    let m = params.spins_per_step();
    let j_zz = params.j_zz();
    let f0 = params.spin_field();
    let factors: Vec<(f64, f64)> = psi
        .iter()
        .map(|&p| {
            let f = j_zz * p + f0;
            if f >= 0.0 {
                (1.0, (-2.0 * f).exp())
            } else {
                ((2.0 * f).exp(), 1.0)
            }
        })
        .collect();
    let mags = chain::magnetization_unchecked(params.bond(), psi.len() * m, |k| factors[k / m]);
    mags.chunks(m).map(|c| c.iter().sum::<f64>() / m as f64).collect()
}

/// Damped fixed-point iteration from the ordered seed `Ψ_τ ≡ 0.5`.
pub fn solve_self_consistency(params: &MfParams) -> Result<MagnetizationProfile, MeanFieldError> {
    solve_from(params, 0.5)
}

/// Damped fixed-point iteration from a uniform initial `Ψ_τ ≡ init`.
/// Convergence means `max_τ |Ψ_τ^{new} - Ψ_τ| < tol`; on failure the last
/// iterate is returned with `converged = false`.
pub fn solve_from(params: &MfParams, init: f64) -> Result<MagnetizationProfile, MeanFieldError> {
    params.validate()?;
    let lambda = params.damping;
    let mut psi = vec![init; params.steps()];
    for iter in 1..=params.max_iter {
        let new = step_means(params, &psi);
        let mut delta: f64 = 0.0;
        for (p, n) in psi.iter_mut().zip(&new) {
            delta = delta.max((n - *p).abs());
            *p = (1.0 - lambda) * *p + lambda * n;
        }
        if delta < params.tol {
            return Ok(MagnetizationProfile {
                psi,
                iterations: iter,
                converged: true,
            });
        }
    }
    Ok(MagnetizationProfile {
        psi,
        iterations: params.max_iter,
        converged: false,
    })
}

/// Largest eigenvalue of the self-consistency map linearized about `Ψ = 0`
/// at zero field. The ordered solution appears when it exceeds one.
///
/// The zero-field chain has `∂⟨s_a⟩/∂f_b = r^{|a-b|}` with `r = tanh J̃`,
/// so the map is `M_ττ' = (J_zz/m) Σ_{a∈τ, b∈τ'} r^{|a-b|}`, summed in
/// closed form.
pub fn linear_stability_eigenvalue(params: &MfParams) -> Result<f64, MeanFieldError> {
    params.validate()?;
    let h = params.h();
    let m = params.spins_per_step();
    let mf = m as f64;
    let nt = params.steps();
    // r = (1-h)/(1+h); use logs for r^m with r close to one
    let ln_r = (-h).ln_1p() - h.ln_1p();
    let r = ln_r.exp();
    let one_minus_r = 2.0 * h / (1.0 + h);
    let r_m = (mf * ln_r).exp();
    let g = -(mf * ln_r).exp_m1() / one_minus_r;
    let diag = {
        // m + 2 Σ_{d=1}^{m-1} (m-d) r^d
        let mut s = mf;
        let mut rd = 1.0;
        for d in 1..m {
            rd *= r;
            s += 2.0 * (mf - d as f64) * rd;
        }
        s
    };
    let scale = params.j_zz() / mf;
    let entry = |tau: usize, tau2: usize| -> f64 {
        if tau == tau2 {
            scale * diag
        } else {
            let gap = tau.abs_diff(tau2) - 1;
            scale * r_m.powi(gap as i32) * r * g * g
        }
    };
    let matrix: Vec<Vec<f64>> = (0..nt).map(|a| (0..nt).map(|b| entry(a, b)).collect()).collect();
    // power iteration; the matrix is symmetric with positive entries
    let mut v = vec![1.0 / (nt as f64).sqrt(); nt];
    let mut lambda = 0.0;
    for _ in 0..100_000 {
        let w: Vec<f64> = matrix.iter().map(|row| row.iter().zip(&v).map(|(a, b)| a * b).sum()).collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let next: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        v = w.into_iter().map(|x| x / norm).collect();
        if (next - lambda).abs() < 1e-14 * next.abs() {
            return Ok(next);
        }
        lambda = next;
    }
    Ok(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(t: f64) -> MfParams {
        MfParams {
            n: 40,
            dt: 0.05,
            t,
            ..Default::default()
        }
    }

    #[test]
    fn coupling_constants() {
        let c = EffectiveCouplings::new();
        let h = ((1.5f64).sqrt() - (0.5f64).sqrt()).ln();
        assert!((c.boundary_field - h).abs() < 1e-15);
        assert_eq!((c.zz, c.yy, c.transverse), (0.4, 0.1, 0.2));
        assert_eq!(EffectiveCouplings::pair_coupling(201), 0.01);
    }

    #[test]
    fn derived_couplings() {
        let p = MfParams::default();
        assert_eq!(p.steps(), 100);
        assert!((p.h() - 0.04 / 995.0).abs() < 1e-18);
        assert!((p.j_zz() - 2.0 * p.h()).abs() < 1e-18);
        assert!((p.bond() + p.h().ln() / 2.0).abs() < 1e-15);
        let odd = p.at(1.97);
        assert_eq!(odd.steps(), 99);
        assert!((odd.effective_dt() * 99.0 - 1.97).abs() < 1e-12);
    }

    #[test]
    fn invalid_params() {
        let p = MfParams::default();
        assert!(MfParams { n: 1, ..p }.validate().is_err());
        assert!(MfParams { dt: 0.0, ..p }.validate().is_err());
        assert!(MfParams { damping: 0.0, ..p }.validate().is_err());
        assert!(MfParams { damping: 1.5, ..p }.validate().is_err());
        // h = 2·dt/(5·1) must stay below 1/2
        assert!(MfParams { n: 2, dt: 1.5, t: 3.0, ..p }.validate().is_err());
        assert!(MfParams { n: 2, dt: 0.5, t: 1.0, ..p }.validate().is_ok());
    }

    #[test]
    fn disordered_below_transition() {
        // a residual below tol bounds Ψ by tol / (1 - μ) for a contraction μ
        let p = quick(1.0);
        let mu = linear_stability_eigenvalue(&p).unwrap();
        let prof = solve_self_consistency(&p).unwrap();
        assert!(prof.converged);
        assert!(prof.global().abs() < p.tol / (1.0 - mu), "{} (μ = {mu})", prof.global());
    }

    #[test]
    fn zero_seed_stays_disordered() {
        for t in [1.0, 2.5, 4.0] {
            let prof = solve_from(&quick(t), 0.0).unwrap();
            assert!(prof.converged && prof.psi.iter().all(|&p| p == 0.0));
        }
    }

    #[test]
    fn field_orders_at_any_time() {
        for t in [0.5, 1.0, 3.0] {
            let prof = solve_self_consistency(&quick(t).with_field(0.05)).unwrap();
            assert!(prof.converged && prof.global() > 0.0);
        }
    }

    #[test]
    fn ordered_profile_is_reflection_symmetric() {
        let prof = solve_self_consistency(&quick(3.0)).unwrap();
        assert!(prof.converged && prof.global() > 0.1);
        let n = prof.psi.len();
        for k in 0..n {
            assert!((prof.psi[k] - prof.psi[n - 1 - k]).abs() < 1e-7);
        }
        assert!(prof.psi.iter().all(|p| p.abs() <= 1.0));
    }

    #[test]
    fn stability_matches_brute_force_response() {
        // finite-difference response of the step means to a small uniform Ψ
        let p = MfParams { n: 6, dt: 0.2, t: 1.0, ..Default::default() };
        let nt = p.steps();
        let eps = 1e-7;
        let mut matrix = vec![vec![0.0; nt]; nt];
        for b in 0..nt {
            let mut psi = vec![0.0; nt];
            psi[b] = eps;
            let out = step_means(&p, &psi);
            for a in 0..nt {
                matrix[a][b] = out[a] / eps;
            }
        }
        let mut v = vec![1.0; nt];
        let mut lam = 0.0;
        for _ in 0..2000 {
            let w: Vec<f64> = matrix.iter().map(|r| r.iter().zip(&v).map(|(a, b)| a * b).sum()).collect();
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            lam = w.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() / v.iter().map(|x| x * x).sum::<f64>();
            v = w.iter().map(|x| x / norm).collect();
        }
        let closed = linear_stability_eigenvalue(&p).unwrap();
        assert!((lam - closed).abs() < 1e-5 * closed, "{lam} vs {closed}");
    }

    #[test]
    fn stability_crosses_one_where_order_appears() {
        let below = linear_stability_eigenvalue(&quick(1.5)).unwrap();
        let above = linear_stability_eigenvalue(&quick(2.5)).unwrap();
        assert!(below < 1.0 && above > 1.0, "{below} {above}");
    }
}
