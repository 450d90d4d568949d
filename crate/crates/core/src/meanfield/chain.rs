//! Exact magnetizations of an open 1-D Ising chain by transfer matrices.

use super::MeanFieldError;

/// Boltzmann factors `(e^{f}, e^{-f})` scaled so the larger one is 1.
fn field_factors(f: f64) -> (f64, f64) {
    if f >= 0.0 {
        (1.0, (-2.0 * f).exp())
    } else {
        ((2.0 * f).exp(), 1.0)
    }
}

fn normalize(v: (f64, f64)) -> (f64, f64) {
    let m = v.0.max(v.1);
    (v.0 / m, v.1 / m)
}

/// `⟨s_k⟩` for `H = Σ_k [-J s_k s_{k+1} - f_k s_k]` with open ends.
///
/// Left environments include the field of their own site, right
/// environments do not; both are rescaled to unit max-norm at every step,
/// so arbitrarily long chains and strong couplings stay finite.
pub fn chain_magnetization(coupling: f64, fields: &[f64]) -> Result<Vec<f64>, MeanFieldError> {
    if fields.is_empty() {
        return Err(MeanFieldError::InvalidParams("chain must have at least one spin".into()));
    }
    if !coupling.is_finite() || fields.iter().any(|f| !f.is_finite()) {
        return Err(MeanFieldError::InvalidParams("couplings and fields must be finite".into()));
    }
    Ok(magnetization_unchecked(coupling, fields.len(), |k| field_factors(fields[k])))
}

/// Core sweep; `factor(k)` returns the scaled field factors of site `k`.
pub(crate) fn magnetization_unchecked(coupling: f64, len: usize, factor: impl Fn(usize) -> (f64, f64)) -> Vec<f64> {
    // transfer matrix [[1, q], [q, 1]] up to the factor e^{J}
    let (same, flip) = if coupling >= 0.0 {
        (1.0, (-2.0 * coupling).exp())
    } else {
        ((2.0 * coupling).exp(), 1.0)
    };
    let mut left = Vec::with_capacity(len);
    let mut env = normalize(factor(0));
    left.push(env);
    for k in 1..len {
        let (up, down) = factor(k);
        env = normalize((
            up * (same * env.0 + flip * env.1),
            down * (flip * env.0 + same * env.1),
        ));
        left.push(env);
    }
    let mut out = vec![0.0; len];
    let mut right = (1.0, 1.0);
    for k in (0..len).rev() {
        let l = left[k];
        let plus = l.0 * right.0;
        let minus = l.1 * right.1;
        out[k] = (plus - minus) / (plus + minus);
        let (up, down) = factor(k);
        let w = (up * right.0, down * right.1);
        right = normalize((same * w.0 + flip * w.1, flip * w.0 + same * w.1));
    }
    out
}
