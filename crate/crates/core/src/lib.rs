//! State-vector simulation of a quantum generative model for spectral
//! functions, together with an exact-diagonalization reference.
//!
//! The pipeline: purify an observable against an ensemble of a Hamiltonian,
//! prepare it with a controlled-rotation circuit, run phase estimation on
//! the doubled system and read out energy differences. [`oracle`] computes
//! the same outcome distribution and the Lorentzian spectrum directly.

pub mod error;
pub mod io;
pub mod models;
pub mod oracle;
pub mod purify;
pub mod qpe;
pub mod seed;
pub mod simcore;
pub mod stateprep;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use models::{build_operator, DistributionKind, EigenvalueDistribution, ModelSpec, Pauli, PauliTerm};
pub use oracle::{
    correlation_function, distribution_distance, exact_outcome_distribution, golden_rule_weights, qpe_kernel,
    spectral_function, DistanceMetric, GoldenRuleWeights, SpectrumTable, TransitionData,
};
pub use purify::{BaseState, EnsembleSpec};
pub use qpe::{plan_resolution, run_qpe, sample_outcomes, OutcomeKind, PhaseDistribution, ResolutionPlan};
pub use simcore::{eig_hermitian, EigenDecomposition, HermitianOperator, RegisterLayout, StateVector, QUBIT_CAP};
pub use stateprep::{choose_phi, run_prep_circuit, MomentSet, PhiChoice, PrepOutcome, SpectralMeasure};
