use thiserror::Error;

/// Errors raised by the simulator, model builders and reference computations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("operator is not Hermitian: max |M - M^dagger| = {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not unitary: max |U^dagger U - 1| = {deviation:e}")]
    NotUnitary { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("{requested} qubits exceed the cap of {cap}")]
    QubitCapExceeded { requested: usize, cap: usize },

    #[error("invalid register: {0}")]
    InvalidRegister(String),

    #[error("control qubit {control} lies inside the target register {start}..{end}")]
    ControlOverlapsTarget {
        control: usize,
        start: usize,
        end: usize,
    },

    #[error("state is not normalized: norm^2 = {norm_sqr}")]
    NotNormalized { norm_sqr: f64 },

    #[error("operator has zero norm, normalization undefined")]
    ZeroOperator,

    #[error("operator annihilates the base state (norm {norm:e})")]
    ZeroNormState { norm: f64 },

    #[error("accepted branch has zero norm at phi = {phi}")]
    DegenerateAngle { phi: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("outcome {f} out of range for {l} phase bits")]
    OutcomeOutOfRange { f: usize, l: u32 },

    #[error("nothing to resolve: gamma {gamma} >= omega_max {omega_max}")]
    NothingToResolve { gamma: f64, omega_max: f64 },

    #[error("export failed: {0}")]
    Export(String),
}

pub type Result<T> = std::result::Result<T, Error>;
