//! Purified states on the doubled Hilbert space (copy_a ⊗ copy_b).
//!
//! Every construction here pairs an eigenvector with its complex conjugate on
//! the copy, |E_n⟩ ⊗ |E_n*⟩. For real eigenvectors this is the plain
//! |E_n⟩|E_n⟩ pairing, and in general it makes the states independent of the
//! phase and degenerate-subspace choices of the eigensolver.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simcore::{apply_matrix, check_cap, eig_hermitian, EigenDecomposition, HermitianOperator, StateVector};

/// Smallest Tr O² accepted as a nonzero operator.
pub const MIN_TRACE_SQUARE: f64 = 1e-24;

/// Smallest norm of (O ⊗ 1)|base⟩ accepted before normalization.
pub const MIN_STATE_NORM: f64 = 1e-12;

/// Which state the observable is purified against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnsembleSpec {
    #[default]
    InfiniteTemperature,
    GroundState,
    Gibbs {
        beta: f64,
    },
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if let EnsembleSpec::Gibbs { beta } = self {
            if !(beta.is_finite() && *beta >= 0.0) {
                return Err(Error::InvalidParameter(format!("beta must be finite and >= 0, got {beta}")));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            EnsembleSpec::InfiniteTemperature => "infinite_temperature",
            EnsembleSpec::GroundState => "ground_state",
            EnsembleSpec::Gibbs { .. } => "gibbs",
        }
    }

    /// Occupation p_n of each energy eigenstate (ascending energies).
    ///
    /// The ground-state ensemble puts all weight on index 0, the lowest-index
    /// vector of a possibly degenerate ground space.
    pub fn occupations(&self, energies: &[f64]) -> Result<Vec<f64>> {
        self.validate()?;
        let d = energies.len();
        Ok(match *self {
            EnsembleSpec::InfiniteTemperature => vec![1.0 / d as f64; d],
            EnsembleSpec::GroundState => {
                let mut p = vec![0.0; d];
                p[0] = 1.0;
                p
            }
            EnsembleSpec::Gibbs { beta } => {
                let e0 = energies[0];
                let w: Vec<f64> = energies.iter().map(|e| (-beta * (e - e0)).exp()).collect();
                let z: f64 = w.iter().sum();
                w.into_iter().map(|x| x / z).collect()
            }
        })
    }
}

/// Base state |ψ_base⟩ of an ensemble on the doubled space, with the
/// diagonalization it came from.
#[derive(Clone, Debug)]
pub struct BaseState {
    pub ensemble: EnsembleSpec,
    pub state: StateVector,
    pub num_sites: usize,
    /// Number of states in the lowest energy level, when H was diagonalized.
    pub ground_degeneracy: Option<usize>,
}

impl BaseState {
    /// Builds the base state of `ensemble` for Hamiltonian `h`. The infinite
    /// temperature state only uses the dimension of `h`.
    pub fn new(h: &HermitianOperator, ensemble: EnsembleSpec) -> Result<Self> {
        ensemble.validate()?;
        let n = h.num_sites();
        match ensemble {
            EnsembleSpec::InfiniteTemperature => Ok(Self {
                ensemble,
                state: entangled_pair_state(n)?,
                num_sites: n,
                ground_degeneracy: None,
            }),
            _ => {
                let eig = eig_hermitian(h)?;
                Self::from_eigen(&eig, ensemble)
            }
        }
    }

    pub fn from_eigen(eig: &EigenDecomposition, ensemble: EnsembleSpec) -> Result<Self> {
        let n = eig.dim().trailing_zeros() as usize;
        let occupations = ensemble.occupations(&eig.eigenvalues)?;
        Ok(Self {
            ensemble,
            state: paired_eigenstates(eig, &occupations)?,
            num_sites: n,
            ground_degeneracy: Some(eig.ground_degeneracy(degeneracy_tolerance(&eig.eigenvalues))),
        })
    }
}

pub(crate) fn degeneracy_tolerance(energies: &[f64]) -> f64 {
    let width = energies.last().copied().unwrap_or(0.0) - energies.first().copied().unwrap_or(0.0);
    1e-9 * width.abs().max(1.0)
}

/// Σ_n √p_n |E_n⟩ ⊗ |E_n*⟩.
fn paired_eigenstates(eig: &EigenDecomposition, occupations: &[f64]) -> Result<StateVector> {
    let d = eig.dim();
    check_cap(2 * d.trailing_zeros() as usize)?;
    let v = &eig.eigenvectors;
    let mut amps = vec![Complex64::new(0.0, 0.0); d * d];
    for (n, &p) in occupations.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let w = p.sqrt();
        let col = v.column(n);
        for a in 0..d {
            let va = col[a] * w;
            if va == Complex64::new(0.0, 0.0) {
                continue;
            }
            for b in 0..d {
                amps[a * d + b] += va * col[b].conj();
            }
        }
    }
    StateVector::from_amplitudes(amps)?.normalize()
}

/// 2^{-N/2} Σ_z |z⟩|z⟩: a product of Bell pairs between the copies.
pub fn entangled_pair_state(n: usize) -> Result<StateVector> {
    if n == 0 {
        return Err(Error::InvalidParameter("entangled pair state needs N >= 1".into()));
    }
    check_cap(2 * n)?;
    let d = 1usize << n;
    let amp = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
    let mut amps = vec![Complex64::new(0.0, 0.0); d * d];
    for z in 0..d {
        amps[z * d + z] = amp;
    }
    StateVector::from_amplitudes(amps)
}

fn apply_to_copy(o: &HermitianOperator, base: &StateVector) -> Result<StateVector> {
    let n = o.num_sites();
    if base.num_qubits() != 2 * n {
        return Err(Error::DimensionMismatch {
            expected: 2 * n,
            actual: base.num_qubits(),
        });
    }
    let raw = apply_matrix(base, o.matrix(), &(0..n))?;
    let norm = raw.norm();
    if norm <= MIN_STATE_NORM {
        return Err(Error::ZeroNormState { norm });
    }
    raw.normalize()
}

/// |O⟩ = (O ⊗ 1)|ψ_EP⟩ / ‖·‖, which equals Σ_i O_i |i⟩|i⟩ / √Tr O² when O
/// has a real eigenbasis.
pub fn purify_operator(o: &HermitianOperator) -> Result<StateVector> {
    if o.trace_square() <= MIN_TRACE_SQUARE {
        return Err(Error::ZeroOperator);
    }
    apply_to_copy(o, &entangled_pair_state(o.num_sites())?)
}

/// Z^{-1/2} Σ_n e^{-βε_n/2} |E_n⟩|E_n*⟩ (thermofield double). Energies are
/// shifted by ε_0 before exponentiation.
pub fn purify_gibbs(h: &HermitianOperator, beta: f64) -> Result<StateVector> {
    let ensemble = EnsembleSpec::Gibbs { beta };
    ensemble.validate()?;
    let eig = eig_hermitian(h)?;
    paired_eigenstates(&eig, &ensemble.occupations(&eig.eigenvalues)?)
}

/// Normalized (O ⊗ 1)|ψ_base⟩ for the given ensemble.
pub fn thermal_operator_state(o: &HermitianOperator, h: &HermitianOperator, ensemble: EnsembleSpec) -> Result<StateVector> {
    if o.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            actual: o.dim(),
        });
    }
    if o.trace_square() <= MIN_TRACE_SQUARE {
        return Err(Error::ZeroOperator);
    }
    let base = BaseState::new(h, ensemble)?;
    operator_state_on(o, &base)
}

/// Normalized (O ⊗ 1)|ψ_base⟩ for a prebuilt base state.
pub fn operator_state_on(o: &HermitianOperator, base: &BaseState) -> Result<StateVector> {
    apply_to_copy(o, &base.state)
}
