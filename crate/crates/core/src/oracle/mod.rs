//! Independent reference implementations used to cross-check the simulator
//! and solvers.

pub mod chain;
pub mod clifford_group;
pub mod dense;
pub mod verify;
