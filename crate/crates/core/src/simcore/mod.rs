//! Dense state-vector machinery: amplitude vectors, Hermitian operators and
//! their eigendecompositions, and gate application on contiguous registers.
//!
//! Qubit 0 is the most significant bit of the computational index, so
//! `tensor_product(a, b)` places the qubits of `a` first.

mod gates;
mod operator;
mod state;

pub use gates::{
    apply_controlled_unitary, apply_hadamard, apply_matrix, apply_unitary, evolve, evolve_with, inverse_qft, qft,
    Sign,
};
pub use operator::{
    eig_hermitian, hermiticity_deviation, unitarity_deviation, EigenDecomposition, HermitianOperator,
    HERMITICITY_TOLERANCE,
};
pub use state::{register_distribution, tensor_product, Register, RegisterLayout, StateVector, NORM_TOLERANCE, QUBIT_CAP};
pub(crate) use state::check_cap;
