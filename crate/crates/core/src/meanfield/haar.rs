//! Monte-Carlo check of the single-qubit second-moment Haar projector.
//!
//! The average of `(U ⊗ U*)^{⊗2}` over Haar-random `U ∈ U(2)` equals
//! `1/3 (|I⟩⟨I| + |C⟩⟨C|) - 1/6 (|I⟩⟨C| + |C⟩⟨I|)` with
//! `|I⟩ = Σ_ab |aabb⟩` and `|C⟩ = Σ_ab |abba⟩`. Slot order is
//! `(U, U*, U, U*)` and the first slot is the most significant index bit.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type Mat16 = Vec<[C64; 16]>;

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-random 2×2 unitary: Gram-Schmidt on complex Gaussian columns,
/// which is QR with a positive diagonal in `R`.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R) -> [[C64; 2]; 2] {
    let a = [gaussian(rng), gaussian(rng)];
    let b = [gaussian(rng), gaussian(rng)];
    let na = (a[0].norm_sqr() + a[1].norm_sqr()).sqrt();
    let u0 = [a[0] / na, a[1] / na];
    let proj = u0[0].conj() * b[0] + u0[1].conj() * b[1];
    let w = [b[0] - proj * u0[0], b[1] - proj * u0[1]];
    let nw = (w[0].norm_sqr() + w[1].norm_sqr()).sqrt();
    let u1 = [w[0] / nw, w[1] / nw];
    [[u0[0], u1[0]], [u0[1], u1[1]]]
}

fn digits(idx: usize) -> [usize; 4] {
    [(idx >> 3) & 1, (idx >> 2) & 1, (idx >> 1) & 1, idx & 1]
}

/// `(U ⊗ U*)^{⊗2}` as a 16×16 matrix.
pub fn replicated(u: &[[C64; 2]; 2]) -> Mat16 {
    let mut m = vec![[C64::new(0.0, 0.0); 16]; 16];
    for (r, row) in m.iter_mut().enumerate() {
        let i = digits(r);
        for (c, entry) in row.iter_mut().enumerate() {
            let j = digits(c);
            *entry = u[i[0]][j[0]] * u[i[1]][j[1]].conj() * u[i[2]][j[2]] * u[i[3]][j[3]].conj();
        }
    }
    m
}

fn basis_i() -> [f64; 16] {
    let mut v = [0.0; 16];
    for a in 0..2 {
        for b in 0..2 {
            v[(a << 3) | (a << 2) | (b << 1) | b] = 1.0;
        }
    }
    v
}

fn basis_c() -> [f64; 16] {
    let mut v = [0.0; 16];
    for a in 0..2 {
        for b in 0..2 {
            v[(a << 3) | (b << 2) | (b << 1) | a] = 1.0;
        }
    }
    v
}

/// The analytic average.
pub fn analytic_projector() -> Mat16 {
    let (i, c) = (basis_i(), basis_c());
    let mut m = vec![[C64::new(0.0, 0.0); 16]; 16];
    for r in 0..16 {
        for s in 0..16 {
            let v = (i[r] * i[s] + c[r] * c[s]) / 3.0 - (i[r] * c[s] + c[r] * i[s]) / 6.0;
            m[r][s] = C64::new(v, 0.0);
        }
    }
    m
}

/// Monte-Carlo average over `n_samples` Haar unitaries.
pub fn monte_carlo_average<R: Rng + ?Sized>(n_samples: usize, rng: &mut R) -> Mat16 {
    let mut acc = vec![[C64::new(0.0, 0.0); 16]; 16];
    for _ in 0..n_samples {
        let m = replicated(&haar_unitary(rng));
        for (a, b) in acc.iter_mut().zip(&m) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
    let scale = 1.0 / n_samples as f64;
    for row in acc.iter_mut() {
        for x in row.iter_mut() {
            *x *= scale;
        }
    }
    acc
}

pub fn max_abs_diff(a: &Mat16, b: &Mat16) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).norm()))
        .fold(0.0, f64::max)
}

pub fn matmul16(a: &Mat16, b: &Mat16) -> Mat16 {
    let mut m = vec![[C64::new(0.0, 0.0); 16]; 16];
    for r in 0..16 {
        for k in 0..16 {
            let ark = a[r][k];
            for c in 0..16 {
                m[r][c] += ark * b[k][c];
            }
        }
    }
    m
}

/// Max elementwise deviation of the Monte-Carlo average from the analytic
/// projector.
pub fn haar_projector_check<R: Rng + ?Sized>(n_samples: usize, rng: &mut R) -> f64 {
    max_abs_diff(&monte_carlo_average(n_samples, rng), &analytic_projector())
}
