//! Exact pure-state stabilizer simulation.

mod clifford;
mod tableau;

pub use clifford::{anticommutes, SignedPauli2, TwoQubitClifford, CLIFFORD2_ORDER};
pub use tableau::StabilizerTableau;


#[derive(Debug, thiserror::Error)]
pub enum StabilizerError {
    #[error("a stabilizer state needs at least one qubit")]
    NoQubits,
    #[error("qubit {qubit} out of range for {n} qubits")]
    QubitOutOfRange { qubit: usize, n: usize },
    #[error("two-qubit operation needs distinct qubits, got {0} twice")]
    SameQubit(usize),
    #[error("subset must be nonempty")]
    EmptySubset,
    #[error("qubit {0} listed twice in subset")]
    DuplicateQubit(usize),
    #[error("tableau invariant violated: {0}")]
    Invalid(String),
}
