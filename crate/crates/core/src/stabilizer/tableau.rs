//! Bit-packed stabilizer tableau for pure `n`-qubit states.
//!
//! Rows `0..n` are destabilizers and rows `n..2n` stabilizers. Each row is
//! stored as `words` x-words followed by `words` z-words, with one sign bit
//! per row. Measurement follows the Aaronson-Gottesman update.

use super::clifford::TwoQubitClifford;
use super::StabilizerError;
use rand::Rng;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilizerTableau {
    n: usize,
    words: usize,
    data: Vec<u64>,
    signs: Vec<bool>,
    validate: bool,
}

#[inline]
fn word_bit(q: usize) -> (usize, u64) {
    (q / 64, 1u64 << (q % 64))
}

/// Sum of per-qubit `g` phases for the product `row1 · row2`, word-parallel.
#[inline]
fn phase_sum(x1: &[u64], z1: &[u64], x2: &[u64], z2: &[u64]) -> i64 {
    let mut total = 0i64;
    for w in 0..x1.len() {
        let (a, b, c, d) = (x1[w], z1[w], x2[w], z2[w]);
        let plus = (a & b & d & !c) | (a & !b & d & c) | (!a & b & c & !d);
        let minus = (a & b & c & !d) | (a & !b & d & !c) | (!a & b & c & d);
        total += plus.count_ones() as i64 - minus.count_ones() as i64;
    }
    total
}

/// Rank over GF(2) of packed bit rows (destroys its input).
pub(crate) fn gf2_rank(rows: &mut [Vec<u64>], n_bits: usize) -> usize {
    let mut rank = 0;
    for col in 0..n_bits {
        let (w, m) = word_bit(col);
        let Some(pivot) = (rank..rows.len()).find(|&r| rows[r][w] & m != 0) else {
            continue;
        };
        rows.swap(rank, pivot);
        let (head, tail) = rows.split_at_mut(rank + 1);
        let pivot_row = &head[rank];
        for row in tail.iter_mut() {
            if row[w] & m != 0 {
                for (dst, src) in row.iter_mut().zip(pivot_row).skip(w) {
                    *dst ^= *src;
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

impl StabilizerTableau {
    /// The all-zeros state `|0…0⟩`: stabilizers `Z_i`, destabilizers `X_i`.
    pub fn new(n: usize) -> Result<Self, StabilizerError> {
        if n == 0 {
            return Err(StabilizerError::NoQubits);
        }
        let words = n.div_ceil(64);
        let mut t = Self {
            n,
            words,
            data: vec![0; 2 * n * 2 * words],
            signs: vec![false; 2 * n],
            validate: false,
        };
        for q in 0..n {
            let (w, m) = word_bit(q);
            t.x_mut(q)[w] |= m;
            t.z_mut(n + q)[w] |= m;
        }
        Ok(t)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    /// Enables invariant validation after every mutating operation.
    pub fn set_validation(&mut self, on: bool) {
        self.validate = on;
    }

    #[inline]
    fn row_range(&self, r: usize) -> std::ops::Range<usize> {
        let start = r * 2 * self.words;
        start..start + 2 * self.words
    }

    #[inline]
    fn x(&self, r: usize) -> &[u64] {
        let s = r * 2 * self.words;
        &self.data[s..s + self.words]
    }

    #[inline]
    fn z(&self, r: usize) -> &[u64] {
        let s = r * 2 * self.words + self.words;
        &self.data[s..s + self.words]
    }

    #[inline]
    fn x_mut(&mut self, r: usize) -> &mut [u64] {
        let s = r * 2 * self.words;
        &mut self.data[s..s + self.words]
    }

    #[inline]
    fn z_mut(&mut self, r: usize) -> &mut [u64] {
        let s = r * 2 * self.words + self.words;
        &mut self.data[s..s + self.words]
    }

    #[inline]
    fn get_x(&self, r: usize, q: usize) -> bool {
        let (w, m) = word_bit(q);
        self.x(r)[w] & m != 0
    }

    #[inline]
    fn get_z(&self, r: usize, q: usize) -> bool {
        let (w, m) = word_bit(q);
        self.z(r)[w] & m != 0
    }

    fn check_qubit(&self, q: usize) -> Result<(), StabilizerError> {
        if q >= self.n {
            Err(StabilizerError::QubitOutOfRange { qubit: q, n: self.n })
        } else {
            Ok(())
        }
    }

    fn after_op(&self) -> Result<(), StabilizerError> {
        if self.validate {
            self.validate()
        } else {
            Ok(())
        }
    }

    /// Stabilizer generator `i` as `(sign, x bits, z bits)` (one bool per qubit).
    pub fn stabilizer(&self, i: usize) -> (bool, Vec<bool>, Vec<bool>) {
        self.row_bools(self.n + i)
    }

    /// Destabilizer generator `i` in the same format as [`Self::stabilizer`].
    pub fn destabilizer(&self, i: usize) -> (bool, Vec<bool>, Vec<bool>) {
        self.row_bools(i)
    }

    fn row_bools(&self, r: usize) -> (bool, Vec<bool>, Vec<bool>) {
        (
            self.signs[r],
            (0..self.n).map(|q| self.get_x(r, q)).collect(),
            (0..self.n).map(|q| self.get_z(r, q)).collect(),
        )
    }

    pub fn hadamard(&mut self, q: usize) -> Result<(), StabilizerError> {
        self.check_qubit(q)?;
        let (w, m) = word_bit(q);
        for r in 0..2 * self.n {
            let range = self.row_range(r);
            let row = &mut self.data[range];
            let (xs, zs) = row.split_at_mut(self.words);
            let xb = xs[w] & m;
            let zb = zs[w] & m;
            if xb != 0 && zb != 0 {
                self.signs[r] ^= true;
            }
            xs[w] = (xs[w] & !m) | zb;
            zs[w] = (zs[w] & !m) | xb;
        }
        self.after_op()
    }

    pub fn phase(&mut self, q: usize) -> Result<(), StabilizerError> {
        self.check_qubit(q)?;
        let (w, m) = word_bit(q);
        for r in 0..2 * self.n {
            let range = self.row_range(r);
            let row = &mut self.data[range];
            let (xs, zs) = row.split_at_mut(self.words);
            let xb = xs[w] & m;
            if xb != 0 && zs[w] & m != 0 {
                self.signs[r] ^= true;
            }
            zs[w] ^= xb;
        }
        self.after_op()
    }

    pub fn cnot(&mut self, control: usize, target: usize) -> Result<(), StabilizerError> {
        self.check_pair(control, target)?;
        self.apply_clifford2_unchecked(&TwoQubitClifford::cnot(), control, target);
        self.after_op()
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<(), StabilizerError> {
        self.check_qubit(i)?;
        self.check_qubit(j)?;
        if i == j {
            return Err(StabilizerError::SameQubit(i));
        }
        Ok(())
    }

    /// Prepares a Bell pair `(|00⟩+|11⟩)/√2` on two fresh qubits.
    pub fn entangle_reference(&mut self, ref_q: usize, sys_q: usize) -> Result<(), StabilizerError> {
        self.check_pair(ref_q, sys_q)?;
        self.hadamard(ref_q)?;
        self.cnot(ref_q, sys_q)
    }

    /// Conjugates every row by `gate` acting on qubits `(i, j)`, with `i`
    /// playing the role of gate qubit 1.
    pub fn apply_clifford2(
        &mut self,
        gate: &TwoQubitClifford,
        i: usize,
        j: usize,
    ) -> Result<(), StabilizerError> {
        self.check_pair(i, j)?;
        self.apply_clifford2_unchecked(gate, i, j);
        self.after_op()
    }

    fn apply_clifford2_unchecked(&mut self, gate: &TwoQubitClifford, i: usize, j: usize) {
        let table = gate.action_table();
        self.apply_table(&table, i, j);
    }

    /// Applies a precomputed [`TwoQubitClifford::action_table`].
    pub(crate) fn apply_table(
        &mut self,
        table: &[super::clifford::SignedPauli2; 16],
        i: usize,
        j: usize,
    ) {
        let (wi, mi) = word_bit(i);
        let (wj, mj) = word_bit(j);
        let words = self.words;
        for (r, row) in self.data.chunks_exact_mut(2 * words).enumerate() {
            let (xs, zs) = row.split_at_mut(words);
            let idx = ((xs[wi] & mi != 0) as usize)
                | (((zs[wi] & mi != 0) as usize) << 1)
                | (((xs[wj] & mj != 0) as usize) << 2)
                | (((zs[wj] & mj != 0) as usize) << 3);
            if idx == 0 {
                continue;
            }
            let img = table[idx];
            let set = |word: &mut u64, m: u64, on: bool| {
                if on {
                    *word |= m
                } else {
                    *word &= !m
                }
            };
            set(&mut xs[wi], mi, img.bits & 1 != 0);
            set(&mut zs[wi], mi, img.bits & 2 != 0);
            set(&mut xs[wj], mj, img.bits & 4 != 0);
            set(&mut zs[wj], mj, img.bits & 8 != 0);
            self.signs[r] ^= img.negative;
        }
    }

    /// Replaces row `h` by `row_h · row_i`.
    fn rowsum(&mut self, h: usize, i: usize) {
        let w = self.words;
        let g = {
            let (xh, zh, xi, zi) = (self.x(h), self.z(h), self.x(i), self.z(i));
            phase_sum(xi, zi, xh, zh)
        };
        let total = 2 * self.signs[h] as i64 + 2 * self.signs[i] as i64 + g;
        self.signs[h] = total.rem_euclid(4) == 2;
        let (src_start, dst_start) = (i * 2 * w, h * 2 * w);
        for k in 0..2 * w {
            let v = self.data[src_start + k];
            self.data[dst_start + k] ^= v;
        }
    }

    /// Outcome of a Z measurement on `q` if it is deterministic.
    pub fn peek_z(&self, q: usize) -> Result<Option<bool>, StabilizerError> {
        self.check_qubit(q)?;
        if (self.n..2 * self.n).any(|r| self.get_x(r, q)) {
            return Ok(None);
        }
        Ok(Some(self.deterministic_outcome(q)))
    }

    fn deterministic_outcome(&self, q: usize) -> bool {
        let w = self.words;
        let mut sx = vec![0u64; w];
        let mut sz = vec![0u64; w];
        let mut sign = 0i64;
        for d in 0..self.n {
            if self.get_x(d, q) {
                let r = d + self.n;
                let g = phase_sum(self.x(r), self.z(r), &sx, &sz);
                sign = (sign + 2 * self.signs[r] as i64 + g).rem_euclid(4);
                for k in 0..w {
                    sx[k] ^= self.x(r)[k];
                    sz[k] ^= self.z(r)[k];
                }
            }
        }
        sign == 2
    }

    /// Projective Z measurement; returns the outcome bit (true = |1⟩).
    pub fn measure_z<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) -> Result<bool, StabilizerError> {
        self.check_qubit(q)?;
        let n = self.n;
        let Some(p) = (n..2 * n).find(|&r| self.get_x(r, q)) else {
            return Ok(self.deterministic_outcome(q));
        };
        for r in 0..2 * n {
            if r != p && self.get_x(r, q) {
                self.rowsum(r, p);
            }
        }
        let (src, dst) = (self.row_range(p), self.row_range(p - n));
        self.data.copy_within(src.clone(), dst.start);
        self.signs[p - n] = self.signs[p];
        for v in &mut self.data[src] {
            *v = 0;
        }
        let (w, m) = word_bit(q);
        self.z_mut(p)[w] |= m;
        let outcome: bool = rng.gen();
        self.signs[p] = outcome;
        self.after_op()?;
        Ok(outcome)
    }

    /// Von Neumann entropy (in bits) of the reduced state on `subset`.
    pub fn entropy_bits(&self, subset: &[usize]) -> Result<usize, StabilizerError> {
        if subset.is_empty() {
            return Err(StabilizerError::EmptySubset);
        }
        let mut seen = vec![false; self.n];
        for &q in subset {
            self.check_qubit(q)?;
            if std::mem::replace(&mut seen[q], true) {
                return Err(StabilizerError::DuplicateQubit(q));
            }
        }
        let k = subset.len();
        if k == 1 {
            return Ok(self.single_qubit_rank(subset[0]) - 1);
        }
        let bits = 2 * k;
        let row_words = bits.div_ceil(64);
        let mut rows: Vec<Vec<u64>> = (self.n..2 * self.n)
            .map(|r| {
                let mut packed = vec![0u64; row_words];
                for (c, &q) in subset.iter().enumerate() {
                    if self.get_x(r, q) {
                        let (w, m) = word_bit(2 * c);
                        packed[w] |= m;
                    }
                    if self.get_z(r, q) {
                        let (w, m) = word_bit(2 * c + 1);
                        packed[w] |= m;
                    }
                }
                packed
            })
            .collect();
        Ok(gf2_rank(&mut rows, bits) - k)
    }

    fn single_qubit_rank(&self, q: usize) -> usize {
        let mut first = 0u8;
        for r in self.n..2 * self.n {
            let v = self.get_x(r, q) as u8 | ((self.get_z(r, q) as u8) << 1);
            if v == 0 {
                continue;
            }
            if first == 0 {
                first = v;
            } else if v != first {
                return 2;
            }
        }
        (first != 0) as usize
    }

    fn symplectic(&self, a: usize, b: usize) -> bool {
        let mut acc = 0u32;
        for w in 0..self.words {
            acc ^= ((self.x(a)[w] & self.z(b)[w]) ^ (self.z(a)[w] & self.x(b)[w])).count_ones();
        }
        acc & 1 == 1
    }

    /// Checks commutation, independence and destabilizer pairing.
    pub fn validate(&self) -> Result<(), StabilizerError> {
        let n = self.n;
        for a in 0..n {
            for b in 0..n {
                let stab_stab = self.symplectic(n + a, n + b);
                if stab_stab {
                    return Err(StabilizerError::Invalid(format!(
                        "stabilizers {a} and {b} anticommute"
                    )));
                }
                let destab_stab = self.symplectic(a, n + b);
                if destab_stab != (a == b) {
                    return Err(StabilizerError::Invalid(format!(
                        "destabilizer {a} / stabilizer {b} pairing broken"
                    )));
                }
            }
        }
        let mut rows: Vec<Vec<u64>> = (n..2 * n).map(|r| self.data[self.row_range(r)].to_vec()).collect();
        let rank = gf2_rank(&mut rows, 2 * self.words * 64);
        if rank != n {
            return Err(StabilizerError::Invalid(format!(
                "stabilizers have rank {rank}, expected {n}"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(17)
    }

    #[test]
    fn zero_qubits_rejected() {
        assert!(matches!(StabilizerTableau::new(0), Err(StabilizerError::NoQubits)));
    }

    #[test]
    fn fresh_state_measures_zero() {
        let mut t = StabilizerTableau::new(1).unwrap();
        let mut r = rng();
        for _ in 0..5 {
            assert!(!t.measure_z(0, &mut r).unwrap());
        }
    }

    #[test]
    fn product_state_has_no_entropy() {
        let t = StabilizerTableau::new(3).unwrap();
        for q in 0..3 {
            assert_eq!(t.entropy_bits(&[q]).unwrap(), 0);
        }
        t.validate().unwrap();
    }

    #[test]
    fn bell_pair_properties() {
        let mut t = StabilizerTableau::new(3).unwrap();
        t.set_validation(true);
        t.entangle_reference(2, 0).unwrap();
        assert_eq!(t.entropy_bits(&[2]).unwrap(), 1);
        assert_eq!(t.entropy_bits(&[0]).unwrap(), 1);
        assert_eq!(t.entropy_bits(&[0, 2]).unwrap(), 0);
        assert_eq!(t.entropy_bits(&[1]).unwrap(), 0);
        let mut r = rng();
        let mut ones = 0;
        for _ in 0..400 {
            let mut c = t.clone();
            let a = c.measure_z(2, &mut r).unwrap();
            let b = c.measure_z(0, &mut r).unwrap();
            assert_eq!(a, b);
            ones += a as usize;
        }
        assert!((140..260).contains(&ones), "{ones}");
    }

    #[test]
    fn entangle_same_qubit_rejected() {
        let mut t = StabilizerTableau::new(2).unwrap();
        assert!(matches!(t.entangle_reference(1, 1), Err(StabilizerError::SameQubit(1))));
    }

    #[test]
    fn plus_state_is_fair() {
        let mut t = StabilizerTableau::new(1).unwrap();
        t.hadamard(0).unwrap();
        assert_eq!(t.peek_z(0).unwrap(), None);
        let mut r = rng();
        let shots = 10_000;
        let ones: usize = (0..shots)
            .map(|_| t.clone().measure_z(0, &mut r).unwrap() as usize)
            .sum();
        let sigma = (shots as f64 * 0.25).sqrt();
        assert!((ones as f64 - shots as f64 / 2.0).abs() < 3.0 * sigma);
    }

    #[test]
    fn measurement_is_idempotent() {
        let mut r = rng();
        let mut t = StabilizerTableau::new(4).unwrap();
        for q in 0..4 {
            t.hadamard(q).unwrap();
        }
        t.cnot(0, 1).unwrap();
        t.cnot(2, 3).unwrap();
        for q in 0..4 {
            let first = t.measure_z(q, &mut r).unwrap();
            let snapshot = t.clone();
            assert_eq!(t.measure_z(q, &mut r).unwrap(), first);
            assert_eq!(t, snapshot);
        }
    }

    #[test]
    fn ghz_single_qubit_entropy() {
        let mut t = StabilizerTableau::new(3).unwrap();
        t.hadamard(0).unwrap();
        t.cnot(0, 1).unwrap();
        t.cnot(1, 2).unwrap();
        for q in 0..3 {
            assert_eq!(t.entropy_bits(&[q]).unwrap(), 1);
        }
        assert_eq!(t.entropy_bits(&[0, 1]).unwrap(), 1);
    }

    #[test]
    fn identity_and_inverse_gates() {
        let mut r = rng();
        let mut t = StabilizerTableau::new(5).unwrap();
        t.entangle_reference(4, 0).unwrap();
        for _ in 0..10 {
            let g = TwoQubitClifford::random(&mut r);
            t.apply_clifford2(&g, 0, 3).unwrap();
        }
        let before = t.clone();
        t.apply_clifford2(&TwoQubitClifford::identity(), 1, 2).unwrap();
        assert_eq!(t, before);
        let g = TwoQubitClifford::random(&mut r);
        t.apply_clifford2(&g, 2, 4).unwrap();
        t.apply_clifford2(&g.inverse(), 2, 4).unwrap();
        // Conjugation acts row-wise, so the tableau is restored exactly.
        assert_eq!(t, before);
    }

    #[test]
    fn bad_indices_rejected() {
        let mut t = StabilizerTableau::new(3).unwrap();
        let g = TwoQubitClifford::identity();
        assert!(matches!(t.apply_clifford2(&g, 1, 1), Err(StabilizerError::SameQubit(1))));
        assert!(matches!(
            t.apply_clifford2(&g, 0, 3),
            Err(StabilizerError::QubitOutOfRange { qubit: 3, n: 3 })
        ));
        assert!(matches!(t.entropy_bits(&[]), Err(StabilizerError::EmptySubset)));
        assert!(t.entropy_bits(&[5]).is_err());
    }

    #[test]
    fn wide_tableau_crosses_word_boundary() {
        let mut r = rng();
        let n = 130;
        let mut t = StabilizerTableau::new(n).unwrap();
        t.entangle_reference(129, 0).unwrap();
        for _ in 0..600 {
            let i = r.gen_range(0..n - 1);
            let mut j = r.gen_range(0..n - 1);
            if j == i {
                j = (i + 1) % (n - 1);
            }
            t.apply_clifford2(&TwoQubitClifford::random(&mut r), i, j).unwrap();
        }
        t.validate().unwrap();
        for q in (0..n).step_by(7) {
            t.measure_z(q, &mut r).unwrap();
        }
        t.validate().unwrap();
        let a: Vec<usize> = (0..40).collect();
        let b: Vec<usize> = (40..n).collect();
        assert_eq!(t.entropy_bits(&a).unwrap(), t.entropy_bits(&b).unwrap());
    }
}
