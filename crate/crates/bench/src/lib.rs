//! Benchmark fixtures shared by the criterion targets.

use qpe_spectra::models::{tilted_ising_spec, total_magnetization};
use qpe_spectra::purify::operator_state_on;
use qpe_spectra::{build_operator, BaseState, EigenDecomposition, EnsembleSpec, HermitianOperator, StateVector};

pub fn ising(n: usize) -> HermitianOperator {
    build_operator(&tilted_ising_spec(n, 1.0, 1.05, 0.5)).expect("preset is valid")
}

/// Infinite-temperature |O⟩ for total σ^z on the Ising chain, with the
/// decomposition of H.
pub fn prepared(n: usize) -> (StateVector, EigenDecomposition) {
    let h = ising(n);
    let eig = qpe_spectra::eig_hermitian(&h).expect("hermitian");
    let base = BaseState::from_eigen(&eig, EnsembleSpec::InfiniteTemperature).expect("valid ensemble");
    let o = total_magnetization(n).expect("valid size");
    (operator_state_on(&o, &base).expect("nonzero"), eig)
}
