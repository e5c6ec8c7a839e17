use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use super::operator::{eig_hermitian, unitarity_deviation, EigenDecomposition, HermitianOperator, HERMITICITY_TOLERANCE};
use super::state::{Fibers, Register, StateVector};
use crate::error::{Error, Result};

/// Sign of the exponent in exp(±iHt).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

fn check_square(m: &DMatrix<Complex64>, dim: usize) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: m.nrows(),
        });
    }
    Ok(())
}

/// Applies an arbitrary (not necessarily unitary) matrix to `register`.
/// The output carries no normalization guarantee.
pub fn apply_matrix(state: &StateVector, m: &DMatrix<Complex64>, register: &Register) -> Result<StateVector> {
    state.check_register(register)?;
    let fibers = Fibers::new(state.num_qubits(), register);
    check_square(m, fibers.reg_dim)?;
    let amps = transform_fibers(state.amplitudes(), fibers, |_| true, m);
    Ok(StateVector::from_parts(state.num_qubits(), amps, false))
}

fn transform_fibers(
    input: &[Complex64],
    fibers: Fibers,
    select: impl Fn(usize) -> bool,
    m: &DMatrix<Complex64>,
) -> Vec<Complex64> {
    let mut out = input.to_vec();
    let mut buf = vec![Complex64::new(0.0, 0.0); fibers.reg_dim];
    for base in fibers.bases() {
        if !select(base) {
            continue;
        }
        for (r, slot) in buf.iter_mut().enumerate() {
            *slot = input[base + r * fibers.stride];
        }
        for r in 0..fibers.reg_dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for (c, x) in buf.iter().enumerate() {
                acc += m[(r, c)] * x;
            }
            out[base + r * fibers.stride] = acc;
        }
    }
    out
}

/// Applies a unitary to `register`; rejects matrices that are not unitary
/// within 1e-10.
pub fn apply_unitary(state: &StateVector, u: &DMatrix<Complex64>, register: &Register) -> Result<StateVector> {
    state.check_register(register)?;
    let fibers = Fibers::new(state.num_qubits(), register);
    check_square(u, fibers.reg_dim)?;
    check_unitary(u)?;
    let amps = transform_fibers(state.amplitudes(), fibers, |_| true, u);
    Ok(StateVector::from_parts(state.num_qubits(), amps, state.is_normalized()))
}

fn check_unitary(u: &DMatrix<Complex64>) -> Result<()> {
    let deviation = unitarity_deviation(u);
    if deviation > HERMITICITY_TOLERANCE {
        return Err(Error::NotUnitary { deviation });
    }
    Ok(())
}

/// Applies `u` to `register` on the branch where `control` is |1⟩.
pub fn apply_controlled_unitary(
    state: &StateVector,
    control: usize,
    u: &DMatrix<Complex64>,
    register: &Register,
) -> Result<StateVector> {
    state.check_register(register)?;
    if control >= state.num_qubits() {
        return Err(Error::InvalidRegister(format!(
            "control qubit {control} outside a {}-qubit state",
            state.num_qubits()
        )));
    }
    if register.contains(&control) {
        return Err(Error::ControlOverlapsTarget {
            control,
            start: register.start,
            end: register.end,
        });
    }
    let fibers = Fibers::new(state.num_qubits(), register);
    check_square(u, fibers.reg_dim)?;
    check_unitary(u)?;
    let mask = 1usize << (state.num_qubits() - 1 - control);
    let amps = transform_fibers(state.amplitudes(), fibers, |base| base & mask != 0, u);
    Ok(StateVector::from_parts(state.num_qubits(), amps, state.is_normalized()))
}

/// exp(i·sign·H·t) on `register`, computed exactly in the eigenbasis of H.
pub fn evolve(
    state: &StateVector,
    h: &HermitianOperator,
    t: f64,
    sign: Sign,
    register: &Register,
) -> Result<StateVector> {
    let eig = eig_hermitian(h)?;
    evolve_with(state, &eig, t, sign, register)
}

/// [`evolve`] with a precomputed decomposition.
pub fn evolve_with(
    state: &StateVector,
    eig: &EigenDecomposition,
    t: f64,
    sign: Sign,
    register: &Register,
) -> Result<StateVector> {
    state.check_register(register)?;
    let dim = 1usize << register.len();
    if eig.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: eig.dim(),
        });
    }
    let u = eig.phase_propagator(sign.factor() * t);
    let amps = transform_fibers(state.amplitudes(), Fibers::new(state.num_qubits(), register), |_| true, &u);
    Ok(StateVector::from_parts(state.num_qubits(), amps, state.is_normalized()))
}

/// Hadamard on a single qubit.
pub fn apply_hadamard(state: &StateVector, qubit: usize) -> Result<StateVector> {
    let h = DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(FRAC_1_SQRT_2, 0.0),
            Complex64::new(FRAC_1_SQRT_2, 0.0),
            Complex64::new(FRAC_1_SQRT_2, 0.0),
            Complex64::new(-FRAC_1_SQRT_2, 0.0),
        ],
    );
    apply_unitary(state, &h, &(qubit..qubit + 1))
}

fn fourier(state: &StateVector, register: &Register, direction: FftDirection) -> Result<StateVector> {
    if register.is_empty() {
        return Err(Error::InvalidRegister("empty Fourier register".into()));
    }
    state.check_register(register)?;
    let fibers = Fibers::new(state.num_qubits(), register);
    let fft = FftPlanner::<f64>::new().plan_fft(fibers.reg_dim, direction);
    let scale = 1.0 / (fibers.reg_dim as f64).sqrt();
    let mut amps = state.amplitudes().to_vec();
    let mut buf = vec![Complex64::new(0.0, 0.0); fibers.reg_dim];
    for base in fibers.bases() {
        for (r, slot) in buf.iter_mut().enumerate() {
            *slot = amps[base + r * fibers.stride];
        }
        fft.process(&mut buf);
        for (r, x) in buf.iter().enumerate() {
            amps[base + r * fibers.stride] = x * scale;
        }
    }
    Ok(StateVector::from_parts(state.num_qubits(), amps, state.is_normalized()))
}

/// Inverse QFT on `register`: |x⟩ → 2^{-l/2} Σ_k e^{-2πi·xk/2^l} |k⟩.
///
/// A phase gradient e^{+2πi·k₀x/2^l} over the register maps to |k₀⟩.
pub fn inverse_qft(state: &StateVector, register: &Register) -> Result<StateVector> {
    fourier(state, register, FftDirection::Forward)
}

/// Forward QFT, the adjoint of [`inverse_qft`].
pub fn qft(state: &StateVector, register: &Register) -> Result<StateVector> {
    fourier(state, register, FftDirection::Inverse)
}
