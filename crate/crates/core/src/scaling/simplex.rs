//! Derivative-free Nelder-Mead simplex minimizer.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimplexOptions {
    pub max_iter: usize,
    /// Convergence when every vertex lies within this relative distance of
    /// the best vertex in every coordinate.
    pub xtol_rel: f64,
    /// Floor on the coordinate scale used for the relative test.
    pub xtol_floor: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            xtol_rel: 1e-4,
            xtol_floor: 1e-2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn relative_diameter(simplex: &[(Vec<f64>, f64)], floor: f64) -> f64 {
    let best = &simplex[0].0;
    simplex[1..]
        .iter()
        .flat_map(|(v, _)| {
            v.iter()
                .zip(best)
                .map(move |(a, b)| (a - b).abs() / b.abs().max(floor))
        })
        .fold(0.0, f64::max)
}

/// Minimizes `f` starting from `x0` with an initial simplex spanned by `step`.
/// Non-finite objective values are treated as `+∞`.
pub fn minimize<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], step: &[f64], opts: &SimplexOptions) -> SimplexResult {
    let dim = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for d in 0..dim {
        let mut v = x0.to_vec();
        v[d] += step[d];
        let fv = eval(&v);
        simplex.push((v, fv));
    }
    let order = |s: &mut Vec<(Vec<f64>, f64)>| s.sort_by(|a, b| a.1.total_cmp(&b.1));
    order(&mut simplex);

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        if relative_diameter(&simplex, opts.xtol_floor) < opts.xtol_rel {
            converged = true;
            break;
        }
        iterations += 1;
        let centroid: Vec<f64> = (0..dim)
            .map(|d| simplex[..dim].iter().map(|(v, _)| v[d]).sum::<f64>() / dim as f64)
            .collect();
        let worst = simplex[dim].clone();
        let along = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };
        let xr = along(alpha);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(gamma);
            let fe = eval(&xe);
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let xc = along(rho);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = along(-rho);
                let fc = eval(&xc);
                (xc, fc)
            };
            if fc < worst.1.min(fr) {
                simplex[dim] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    for (v, b) in vertex.0.iter_mut().zip(&best) {
                        *v = b + sigma * (*v - b);
                    }
                    vertex.1 = eval(&vertex.0);
                }
            }
        }
        order(&mut simplex);
    }
    let (x, value) = simplex.swap_remove(0);
    SimplexResult {
        x,
        value,
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let opts = SimplexOptions {
            xtol_rel: 1e-8,
            ..Default::default()
        };
        let r = minimize(f, &[-1.2, 1.0], &[0.1, 0.1], &opts);
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5, "{:?}", r.x);
    }

    #[test]
    fn respects_infinite_walls() {
        let f = |x: &[f64]| if x[0] < 0.5 { f64::INFINITY } else { (x[0] - 0.2).powi(2) };
        let r = minimize(f, &[2.0], &[0.3], &SimplexOptions::default());
        assert!((r.x[0] - 0.5).abs() < 1e-3, "{:?}", r.x);
    }

    #[test]
    fn reports_non_convergence() {
        let f = |x: &[f64]| x[0];
        let opts = SimplexOptions {
            max_iter: 10,
            ..Default::default()
        };
        let r = minimize(f, &[0.0], &[1.0], &opts);
        assert!(!r.converged);
        assert_eq!(r.iterations, 10);
    }
}
