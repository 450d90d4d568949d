//! Brute-force enumeration of the two-qubit Clifford group from dense
//! unitaries.
//!
//! Elements are generated by breadth-first search over words in
//! `H⊗I, I⊗H, S⊗I, I⊗S, CNOT`. Each unitary is converted to Heisenberg form
//! by computing `U P U†` densely and matching it against the 16 Paulis, so
//! the resulting tableaux do not depend on the tableau composition code.

use super::dense::{
    dagger4, hadamard_matrix, identity4, kron, matmul4, pauli2_matrix, phase_matrix, Mat4,
    StateVector,
};
use crate::stabilizer::{SignedPauli2, TwoQubitClifford};
use num_complex::Complex64 as C64;
use std::collections::{HashMap, VecDeque};

/// Heisenberg images of `X1, Z1, X2, Z2` under `u`, computed densely.
pub fn tableau_of_unitary(u: &Mat4) -> TwoQubitClifford {
    let ud = dagger4(u);
    let images = [0b0001u8, 0b0010, 0b0100, 0b1000].map(|g| {
        let q = matmul4(&matmul4(u, &pauli2_matrix(g)), &ud);
        for bits in 1..16u8 {
            let p = pauli2_matrix(bits);
            let tr: C64 = (0..4)
                .map(|r| (0..4).map(|k| p[r][k] * q[k][r]).sum::<C64>())
                .sum::<C64>()
                / 4.0;
            if (tr - 1.0).norm() < 1e-9 {
                return SignedPauli2::new(bits, false);
            }
            if (tr + 1.0).norm() < 1e-9 {
                return SignedPauli2::new(bits, true);
            }
        }
        panic!("unitary is not Clifford");
    });
    TwoQubitClifford::from_images(images).expect("dense images must be symplectic")
}

pub struct CliffordGroup {
    elements: Vec<(TwoQubitClifford, Mat4)>,
    index: HashMap<TwoQubitClifford, usize>,
}

impl CliffordGroup {
    pub fn enumerate() -> Self {
        let id2 = [
            [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        ];
        let cnot = super::dense::cnot_matrix();
        let gens = [
            kron(&hadamard_matrix(), &id2),
            kron(&id2, &hadamard_matrix()),
            kron(&phase_matrix(), &id2),
            kron(&id2, &phase_matrix()),
            cnot,
        ];
        let mut elements = Vec::new();
        let mut index = HashMap::new();
        let mut queue = VecDeque::new();
        let e = identity4();
        index.insert(tableau_of_unitary(&e), 0);
        elements.push((tableau_of_unitary(&e), e));
        queue.push_back(e);
        while let Some(u) = queue.pop_front() {
            for g in &gens {
                let next = matmul4(g, &u);
                let key = tableau_of_unitary(&next);
                if !index.contains_key(&key) {
                    index.insert(key, elements.len());
                    elements.push((key, next));
                    queue.push_back(next);
                }
            }
        }
        Self { elements, index }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[(TwoQubitClifford, Mat4)] {
        &self.elements
    }

    pub fn index_of(&self, gate: &TwoQubitClifford) -> Option<usize> {
        self.index.get(gate).copied()
    }

    pub fn unitary(&self, gate: &TwoQubitClifford) -> Option<&Mat4> {
        self.index_of(gate).map(|k| &self.elements[k].1)
    }
}

/// Distinct two-qubit stabilizer states (up to global phase) obtained as
/// `U|00⟩` over the group, with a flag for entanglement.
pub fn two_qubit_stabilizer_states(group: &CliffordGroup) -> Vec<(Vec<C64>, bool)> {
    let mut seen: HashMap<Vec<(i64, i64)>, bool> = HashMap::new();
    let mut out = Vec::new();
    for (_, u) in group.elements() {
        let mut psi: Vec<C64> = (0..4).map(|r| u[r][0]).collect();
        let lead = psi.iter().copied().find(|a| a.norm() > 1e-9).unwrap();
        let rot = lead.conj() / lead.norm();
        for a in &mut psi {
            *a *= rot;
        }
        let key: Vec<(i64, i64)> = psi
            .iter()
            .map(|a| ((a.re * 1e6).round() as i64, (a.im * 1e6).round() as i64))
            .collect();
        if seen.contains_key(&key) {
            continue;
        }
        let mut sv = StateVector::new(2);
        sv.apply_2q(0, 1, u);
        let entangled = sv.purity(&[0]) < 1.0 - 1e-9;
        seen.insert(key, entangled);
        out.push((psi, entangled));
    }
    out
}

/// Exact ensemble average of `I = 2 S_ref` for the two-qubit all-to-all
/// protocol after at least one gate: reference Bell-paired with qubit 0,
/// uniform Clifford on `(0, 1)`, qubit 0 measured.
pub fn two_qubit_teleport_average(group: &CliffordGroup) -> f64 {
    let total: f64 = group
        .elements()
        .iter()
        .map(|(_, u)| {
            // qubits: 0 = input, 1 = output, 2 = reference
            let mut sv = StateVector::new(3);
            sv.hadamard(2);
            sv.cnot(2, 0);
            sv.apply_2q(0, 1, u);
            let one = sv.prob_one(0) > 0.5 - 1e-9;
            sv.project(0, one);
            2.0 * sv.entropy_bits(&[2])
        })
        .sum();
    total / group.len() as f64
}
