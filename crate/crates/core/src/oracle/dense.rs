//! Dense `2^n`-amplitude state-vector simulator.
//!
//! Basis index bit `q` is the computational value of qubit `q`. Used only as
//! an independent reference for the tableau simulator, so `n` stays small.

use num_complex::Complex64 as C64;

pub type Mat2 = [[C64; 2]; 2];
/// Two-qubit operator with local index `b_first + 2·b_second`.
pub type Mat4 = [[C64; 4]; 4];

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

pub fn hadamard_matrix() -> Mat2 {
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[s, s], [s, -s]]
}

pub fn phase_matrix() -> Mat2 {
    [[ONE, ZERO], [ZERO, I]]
}

/// Hermitian single-qubit Pauli `i^{xz} X^x Z^z`.
pub fn pauli_matrix(x: bool, z: bool) -> Mat2 {
    match (x, z) {
        (false, false) => [[ONE, ZERO], [ZERO, ONE]],
        (true, false) => [[ZERO, ONE], [ONE, ZERO]],
        (false, true) => [[ONE, ZERO], [ZERO, -ONE]],
        (true, true) => [[ZERO, -I], [I, ZERO]],
    }
}

/// `first ⊗ second` in the local two-qubit index convention.
pub fn kron(first: &Mat2, second: &Mat2) -> Mat4 {
    let mut out = [[ZERO; 4]; 4];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = second[r >> 1][c >> 1] * first[r & 1][c & 1];
        }
    }
    out
}

/// Two-qubit Pauli from a 4-bit label (see the Clifford bit layout).
pub fn pauli2_matrix(bits: u8) -> Mat4 {
    kron(
        &pauli_matrix(bits & 1 != 0, bits & 2 != 0),
        &pauli_matrix(bits & 4 != 0, bits & 8 != 0),
    )
}

pub fn identity4() -> Mat4 {
    let mut m = [[ZERO; 4]; 4];
    for (k, row) in m.iter_mut().enumerate() {
        row[k] = ONE;
    }
    m
}

pub fn cnot_matrix() -> Mat4 {
    // control = first qubit (bit 0), target = second (bit 1)
    let mut m = [[ZERO; 4]; 4];
    for c in 0..4 {
        let r = if c & 1 == 1 { c ^ 2 } else { c };
        m[r][c] = ONE;
    }
    m
}

pub fn matmul4(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[ZERO; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            out[r][c] = (0..4).map(|k| a[r][k] * b[k][c]).sum();
        }
    }
    out
}

pub fn dagger4(a: &Mat4) -> Mat4 {
    let mut out = [[ZERO; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            out[r][c] = a[c][r].conj();
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(n: usize) -> Self {
        assert!(n <= 20, "dense oracle limited to small n");
        let mut amps = vec![ZERO; 1 << n];
        amps[0] = ONE;
        Self { n, amps }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn apply_1q(&mut self, q: usize, m: &Mat2) {
        let bit = 1usize << q;
        for idx in 0..self.amps.len() {
            if idx & bit == 0 {
                let (a0, a1) = (self.amps[idx], self.amps[idx | bit]);
                self.amps[idx] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[idx | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    pub fn apply_2q(&mut self, first: usize, second: usize, m: &Mat4) {
        assert_ne!(first, second);
        let (b1, b2) = (1usize << first, 1usize << second);
        for base in 0..self.amps.len() {
            if base & (b1 | b2) != 0 {
                continue;
            }
            let idx = [base, base | b1, base | b2, base | b1 | b2];
            let old = idx.map(|k| self.amps[k]);
            for r in 0..4 {
                self.amps[idx[r]] = (0..4).map(|c| m[r][c] * old[c]).sum();
            }
        }
    }

    pub fn hadamard(&mut self, q: usize) {
        self.apply_1q(q, &hadamard_matrix());
    }

    pub fn phase(&mut self, q: usize) {
        self.apply_1q(q, &phase_matrix());
    }

    pub fn cnot(&mut self, control: usize, target: usize) {
        self.apply_2q(control, target, &cnot_matrix());
    }

    /// Probability that a Z measurement of `q` yields 1.
    pub fn prob_one(&self, q: usize) -> f64 {
        let bit = 1usize << q;
        self.amps
            .iter()
            .enumerate()
            .filter(|(k, _)| k & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Projects onto outcome `one` for qubit `q` and renormalizes. Returns
    /// the probability of that outcome.
    pub fn project(&mut self, q: usize, one: bool) -> f64 {
        let bit = 1usize << q;
        let mut p = 0.0;
        for (k, a) in self.amps.iter_mut().enumerate() {
            if (k & bit != 0) != one {
                *a = ZERO;
            } else {
                p += a.norm_sqr();
            }
        }
        if p > 0.0 {
            let s = 1.0 / p.sqrt();
            for a in &mut self.amps {
                *a *= s;
            }
        }
        p
    }

    /// Probability of each computational basis string.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Purity `tr ρ_A²` of the reduced state on `subset`.
    pub fn purity(&self, subset: &[usize]) -> f64 {
        let k = subset.len();
        let rest: Vec<usize> = (0..self.n).filter(|q| !subset.contains(q)).collect();
        let dim_a = 1usize << k;
        let dim_b = 1usize << rest.len();
        // psi as a dim_a × dim_b matrix
        let mut m = vec![ZERO; dim_a * dim_b];
        for (idx, &amp) in self.amps.iter().enumerate() {
            let a = subset
                .iter()
                .enumerate()
                .fold(0, |acc, (p, &q)| acc | (((idx >> q) & 1) << p));
            let b = rest
                .iter()
                .enumerate()
                .fold(0, |acc, (p, &q)| acc | (((idx >> q) & 1) << p));
            m[a * dim_b + b] = amp;
        }
        let mut rho = vec![ZERO; dim_a * dim_a];
        for a1 in 0..dim_a {
            for a2 in 0..dim_a {
                rho[a1 * dim_a + a2] = (0..dim_b)
                    .map(|b| m[a1 * dim_b + b] * m[a2 * dim_b + b].conj())
                    .sum();
            }
        }
        rho.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Second Rényi entropy in bits; equals the von Neumann entropy for
    /// stabilizer states, whose reduced spectra are flat.
    pub fn entropy_bits(&self, subset: &[usize]) -> f64 {
        -self.purity(subset).log2()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ghz_entropy_is_one_bit() {
        let mut s = StateVector::new(3);
        s.hadamard(0);
        s.cnot(0, 1);
        s.cnot(1, 2);
        for q in 0..3 {
            assert!((s.entropy_bits(&[q]) - 1.0).abs() < 1e-12);
        }
        assert!(s.entropy_bits(&[0, 1, 2]).abs() < 1e-12);
    }

    #[test]
    fn pauli_matrices_are_hermitian_involutions() {
        for bits in 0..16u8 {
            let p = pauli2_matrix(bits);
            let sq = matmul4(&p, &p);
            let d = dagger4(&p);
            for r in 0..4 {
                for c in 0..4 {
                    assert!((sq[r][c] - identity4()[r][c]).norm() < 1e-12);
                    assert!((d[r][c] - p[r][c]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn projection_probability() {
        let mut s = StateVector::new(2);
        s.hadamard(0);
        assert!((s.prob_one(0) - 0.5).abs() < 1e-12);
        let p = s.project(0, true);
        assert!((p - 0.5).abs() < 1e-12);
        assert!((s.prob_one(0) - 1.0).abs() < 1e-12);
    }
}
