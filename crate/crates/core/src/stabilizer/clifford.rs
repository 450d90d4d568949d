//! Two-qubit Clifford gates in Heisenberg (tableau) form.
//!
//! A gate is stored as the images of the four generators `X1, Z1, X2, Z2`
//! under conjugation. Each image is a Hermitian two-qubit Pauli encoded in
//! four bits plus a sign bit:
//!
//! ```text
//! bit 0: x on qubit 1    bit 1: z on qubit 1
//! bit 2: x on qubit 2    bit 3: z on qubit 2
//! ```
//!
//! The Hermitian convention is `P = i^{x·z} X^x Z^z` per qubit, so `Y = iXZ`.

use rand::Rng;
use std::fmt;

/// A signed Hermitian Pauli on two qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignedPauli2 {
    pub bits: u8,
    pub negative: bool,
}

impl SignedPauli2 {
    pub const fn new(bits: u8, negative: bool) -> Self {
        Self {
            bits: bits & 0xF,
            negative,
        }
    }

    pub fn is_identity(self) -> bool {
        self.bits == 0
    }
}

impl fmt::Display for SignedPauli2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letter = |x: u8, z: u8| match (x, z) {
            (0, 0) => 'I',
            (1, 0) => 'X',
            (0, 1) => 'Z',
            _ => 'Y',
        };
        let b = self.bits;
        write!(
            f,
            "{}{}{}",
            if self.negative { '-' } else { '+' },
            letter(b & 1, (b >> 1) & 1),
            letter((b >> 2) & 1, (b >> 3) & 1)
        )
    }
}

/// Symplectic inner product of two 4-bit Pauli labels (1 = anticommute).
#[inline]
pub fn anticommutes(a: u8, b: u8) -> bool {
    let swapped = ((b & 0b0101) << 1) | ((b & 0b1010) >> 1);
    (a & swapped).count_ones() % 2 == 1
}

/// Power of `i` picked up per qubit when multiplying Hermitian Paulis
/// `(x1,z1)·(x2,z2)`; the product equals `i^g` times the Hermitian Pauli on
/// the XOR of the labels.
#[inline]
fn g_phase(x1: bool, z1: bool, x2: bool, z2: bool) -> i32 {
    match (x1, z1) {
        (false, false) => 0,
        (true, true) => z2 as i32 - x2 as i32,
        (true, false) => z2 as i32 * (2 * x2 as i32 - 1),
        (false, true) => x2 as i32 * (1 - 2 * z2 as i32),
    }
}

/// `i^phase · P_bits` with `P` Hermitian.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct PhasedPauli2 {
    phase: u8,
    bits: u8,
}

impl PhasedPauli2 {
    const IDENTITY: Self = Self { phase: 0, bits: 0 };

    fn from_signed(p: SignedPauli2) -> Self {
        Self {
            phase: if p.negative { 2 } else { 0 },
            bits: p.bits,
        }
    }

    fn mul(self, rhs: Self) -> Self {
        let mut g = 0;
        for q in 0..2 {
            let bit = |v: u8, k: u8| (v >> (2 * q + k)) & 1 == 1;
            g += g_phase(
                bit(self.bits, 0),
                bit(self.bits, 1),
                bit(rhs.bits, 0),
                bit(rhs.bits, 1),
            );
        }
        Self {
            phase: (self.phase as i32 + rhs.phase as i32 + g).rem_euclid(4) as u8,
            bits: self.bits ^ rhs.bits,
        }
    }
}

/// Element of the two-qubit Clifford group modulo global phase.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TwoQubitClifford {
    images: [SignedPauli2; 4],
}

/// Order of the two-qubit Clifford group modulo phase.
pub const CLIFFORD2_ORDER: usize = 11520;

const GENERATORS: [u8; 4] = [0b0001, 0b0010, 0b0100, 0b1000];

impl fmt::Debug for TwoQubitClifford {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Clifford2[X1->{}, Z1->{}, X2->{}, Z2->{}]",
            self.images[0], self.images[1], self.images[2], self.images[3]
        )
    }
}

impl TwoQubitClifford {
    /// Builds a gate from the images of `X1, Z1, X2, Z2`. Returns `None` if
    /// the images do not preserve the commutation relations.
    pub fn from_images(images: [SignedPauli2; 4]) -> Option<Self> {
        let gate = Self { images };
        gate.is_symplectic().then_some(gate)
    }

    pub fn identity() -> Self {
        Self {
            images: GENERATORS.map(|b| SignedPauli2::new(b, false)),
        }
    }

    pub fn images(&self) -> [SignedPauli2; 4] {
        self.images
    }

    /// Hadamard on qubit `q` (0 or 1).
    pub fn hadamard(q: usize) -> Self {
        let mut g = Self::identity();
        g.images[2 * q] = SignedPauli2::new(GENERATORS[2 * q + 1], false);
        g.images[2 * q + 1] = SignedPauli2::new(GENERATORS[2 * q], false);
        g
    }

    /// Phase gate `S` on qubit `q`: X -> Y, Z -> Z.
    pub fn phase(q: usize) -> Self {
        let mut g = Self::identity();
        g.images[2 * q] = SignedPauli2::new(GENERATORS[2 * q] | GENERATORS[2 * q + 1], false);
        g
    }

    /// CNOT with control qubit 1 and target qubit 2.
    pub fn cnot() -> Self {
        Self {
            images: [
                SignedPauli2::new(0b0101, false), // X1 -> X1 X2
                SignedPauli2::new(0b0010, false), // Z1 -> Z1
                SignedPauli2::new(0b0100, false), // X2 -> X2
                SignedPauli2::new(0b1010, false), // Z2 -> Z1 Z2
            ],
        }
    }

    /// Exchange of the two qubits.
    pub fn swap() -> Self {
        Self {
            images: [
                SignedPauli2::new(0b0100, false),
                SignedPauli2::new(0b1000, false),
                SignedPauli2::new(0b0001, false),
                SignedPauli2::new(0b0010, false),
            ],
        }
    }

    /// Checks that `X_k, Z_k` images anticommute pairwise and all other
    /// pairs commute.
    pub fn is_symplectic(&self) -> bool {
        for a in 0..4 {
            if self.images[a].is_identity() {
                return false;
            }
            for b in (a + 1)..4 {
                let expect = a / 2 == b / 2;
                if anticommutes(self.images[a].bits, self.images[b].bits) != expect {
                    return false;
                }
            }
        }
        true
    }

    /// Image of an arbitrary Hermitian two-qubit Pauli `bits`.
    pub fn conjugate(&self, bits: u8) -> SignedPauli2 {
        let mut acc = PhasedPauli2::IDENTITY;
        let mut own_phase = 0;
        for q in 0..2 {
            let x = (bits >> (2 * q)) & 1;
            let z = (bits >> (2 * q + 1)) & 1;
            own_phase += x & z;
            if x == 1 {
                acc = acc.mul(PhasedPauli2::from_signed(self.images[2 * q]));
            }
            if z == 1 {
                acc = acc.mul(PhasedPauli2::from_signed(self.images[2 * q + 1]));
            }
        }
        let phase = (acc.phase + own_phase) % 4;
        debug_assert!(phase % 2 == 0, "conjugated Pauli must be Hermitian");
        SignedPauli2::new(acc.bits, phase == 2)
    }

    /// Lookup table mapping each of the 16 local Pauli labels to its image.
    pub fn action_table(&self) -> [SignedPauli2; 16] {
        let mut table = [SignedPauli2::new(0, false); 16];
        for (bits, slot) in table.iter_mut().enumerate() {
            *slot = self.conjugate(bits as u8);
        }
        table
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn after(&self, first: &Self) -> Self {
        let mut images = [SignedPauli2::new(0, false); 4];
        for (k, img) in images.iter_mut().enumerate() {
            // first maps P -> ±Q, then self maps Q -> ±R.
            let q = first.images[k];
            let r = self.conjugate(q.bits);
            *img = SignedPauli2::new(r.bits, r.negative ^ q.negative);
        }
        Self { images }
    }

    pub fn inverse(&self) -> Self {
        let table = self.action_table();
        let mut images = [SignedPauli2::new(0, false); 4];
        for (bits, img) in table.iter().enumerate() {
            if let Some(k) = GENERATORS.iter().position(|&g| g == img.bits) {
                images[k] = SignedPauli2::new(bits as u8, img.negative);
            }
        }
        Self { images }
    }

    /// Packs the gate into a 20-bit integer key (distinct for distinct gates).
    pub fn key(&self) -> u32 {
        self.images.iter().enumerate().fold(0u32, |acc, (k, p)| {
            acc | (((p.bits as u32) | ((p.negative as u32) << 4)) << (5 * k))
        })
    }

    /// Draws a gate uniformly from the two-qubit Clifford group.
    ///
    /// The image of `X1` is uniform over the 15 non-identity Paulis, `Z1`
    /// over the 8 that anticommute with it, `X2` over the 3 non-identity
    /// elements of their symplectic complement, `Z2` over the 2 remaining
    /// complement elements, and the four signs are independent fair bits.
    /// `15·8·3·2·16 = 11520`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let x1 = rng.gen_range(1u8..16);
        let z1_candidates: arrayvec_lite::Candidates =
            (1u8..16).filter(|&p| anticommutes(p, x1)).collect();
        let z1 = z1_candidates.pick(rng);
        let complement: arrayvec_lite::Candidates = (1u8..16)
            .filter(|&p| !anticommutes(p, x1) && !anticommutes(p, z1))
            .collect();
        let x2 = complement.pick(rng);
        let z2_candidates: arrayvec_lite::Candidates = complement
            .iter()
            .filter(|&p| p != x2 && anticommutes(p, x2))
            .collect();
        let z2 = z2_candidates.pick(rng);
        let signs: u8 = rng.gen_range(0..16);
        let images = [x1, z1, x2, z2];
        let mut out = [SignedPauli2::new(0, false); 4];
        for k in 0..4 {
            out[k] = SignedPauli2::new(images[k], (signs >> k) & 1 == 1);
        }
        Self { images: out }
    }
}

mod arrayvec_lite {
    use rand::Rng;

    /// Small fixed-capacity list of Pauli labels.
    pub struct Candidates {
        items: [u8; 15],
        len: usize,
    }

    impl Candidates {
        pub fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> u8 {
            self.items[rng.gen_range(0..self.len)]
        }

        pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
            self.items[..self.len].iter().copied()
        }
    }

    impl FromIterator<u8> for Candidates {
        fn from_iter<I: IntoIterator<Item = u8>>(iter: I) -> Self {
            let mut out = Candidates {
                items: [0; 15],
                len: 0,
            };
            for v in iter {
                out.items[out.len] = v;
                out.len += 1;
            }
            out
        }
    }
}
