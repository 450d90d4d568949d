//! Simulation and analysis toolkit for the finite-time teleportation
//! transition in continuous-time random Clifford circuits.
//!
//! * [`stabilizer`]: bit-packed stabilizer tableaux and two-qubit Cliffords.
//! * [`geometry`]: gate-pair distributions and input/output placement.
//! * [`experiment`]: the teleportation protocol over circuit ensembles.
//! * [`scaling`]: finite-size-scaling collapse, KT fits and crossings.
//! * [`meanfield`]: transfer-matrix mean-field theory of the effective Ising model.
//! * [`oracle`]: independent brute-force references used by `verify` and tests.

pub mod cli;
pub mod experiment;
pub mod geometry;
pub mod meanfield;
pub mod oracle;
pub mod scaling;
pub mod seed;
pub mod stabilizer;
