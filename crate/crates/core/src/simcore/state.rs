use std::ops::Range;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest register the dense simulator will allocate (2^22 amplitudes).
pub const QUBIT_CAP: usize = 22;

/// Tolerance on the 2-norm for a state to count as normalized.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Contiguous range of qubit indices. Qubit 0 is the most significant bit
/// of the computational index.
pub type Register = Range<usize>;

/// Dense amplitude vector over `num_qubits` qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
    normalized: bool,
}

impl StateVector {
    /// The computational state |0...0⟩.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        Self::basis(num_qubits, 0)
    }

    /// The computational basis state |index⟩.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        check_cap(num_qubits)?;
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(Error::InvalidParameter(format!(
                "basis index {index} out of range for {num_qubits} qubits"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self {
            num_qubits,
            amplitudes,
            normalized: true,
        })
    }

    /// Wraps raw amplitudes. The normalized flag is set when the norm is 1
    /// within [`NORM_TOLERANCE`].
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = amplitudes.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(dim));
        }
        let num_qubits = dim.trailing_zeros() as usize;
        check_cap(num_qubits)?;
        let mut state = Self {
            num_qubits,
            amplitudes,
            normalized: false,
        };
        state.normalized = (state.norm_sqr().sqrt() - 1.0).abs() <= NORM_TOLERANCE;
        Ok(state)
    }

    /// Real amplitudes, convenience for tests and small literals.
    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::from_amplitudes(amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Rescales to unit norm. Fails on a zero vector.
    pub fn normalize(mut self) -> Result<Self> {
        let norm = self.norm();
        if norm <= 1e-300 {
            return Err(Error::ZeroNormState { norm });
        }
        let inv = 1.0 / norm;
        for a in &mut self.amplitudes {
            *a *= inv;
        }
        self.normalized = true;
        Ok(self)
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// |⟨self|other⟩|².
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub(crate) fn from_parts(num_qubits: usize, amplitudes: Vec<Complex64>, normalized: bool) -> Self {
        debug_assert_eq!(amplitudes.len(), 1 << num_qubits);
        Self {
            num_qubits,
            amplitudes,
            normalized,
        }
    }

    pub(crate) fn check_register(&self, register: &Register) -> Result<()> {
        if register.start >= register.end {
            return Err(Error::InvalidRegister(format!(
                "empty register {}..{}",
                register.start, register.end
            )));
        }
        if register.end > self.num_qubits {
            return Err(Error::InvalidRegister(format!(
                "register {}..{} exceeds {} qubits",
                register.start, register.end, self.num_qubits
            )));
        }
        Ok(())
    }
}

pub(crate) fn check_cap(num_qubits: usize) -> Result<()> {
    if num_qubits > QUBIT_CAP {
        return Err(Error::QubitCapExceeded {
            requested: num_qubits,
            cap: QUBIT_CAP,
        });
    }
    Ok(())
}

/// Strided view of a contiguous register inside a larger index space.
///
/// An index splits as `hi | register | lo`; each fiber fixes `hi` and `lo`
/// and walks the `2^len` register values.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Fibers {
    pub stride: usize,
    pub reg_dim: usize,
    pub block: usize,
    pub num_blocks: usize,
}

impl Fibers {
    pub fn new(num_qubits: usize, register: &Register) -> Self {
        let len = register.end - register.start;
        let lo_bits = num_qubits - register.end;
        let stride = 1usize << lo_bits;
        let reg_dim = 1usize << len;
        let block = stride * reg_dim;
        Self {
            stride,
            reg_dim,
            block,
            num_blocks: (1usize << num_qubits) / block,
        }
    }

    /// Base index of every fiber, in increasing order.
    pub fn bases(self) -> impl Iterator<Item = usize> {
        (0..self.num_blocks)
            .flat_map(move |hi| (0..self.stride).map(move |lo| hi * self.block + lo))
    }

    /// Register value encoded in a full index.
    pub fn value_of(self, index: usize) -> usize {
        (index / self.stride) % self.reg_dim
    }
}

/// a ⊗ b with the qubits of `a` more significant.
pub fn tensor_product(a: &StateVector, b: &StateVector) -> Result<StateVector> {
    let num_qubits = a.num_qubits + b.num_qubits;
    check_cap(num_qubits)?;
    let mut amplitudes = Vec::with_capacity(a.dim() * b.dim());
    for x in &a.amplitudes {
        amplitudes.extend(b.amplitudes.iter().map(|y| x * y));
    }
    Ok(StateVector::from_parts(
        num_qubits,
        amplitudes,
        a.normalized && b.normalized,
    ))
}

/// Marginal probabilities of the computational outcomes of `register`.
pub fn register_distribution(state: &StateVector, register: &Register) -> Result<Vec<f64>> {
    state.check_register(register)?;
    let norm_sqr = state.norm_sqr();
    if (norm_sqr.sqrt() - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::NotNormalized { norm_sqr });
    }
    let fibers = Fibers::new(state.num_qubits, register);
    let mut probs = vec![0.0; fibers.reg_dim];
    for (index, amp) in state.amplitudes.iter().enumerate() {
        probs[fibers.value_of(index)] += amp.norm_sqr();
    }
    Ok(probs)
}

/// Assignment of the qubits of one run to its registers.
///
/// Copies come first, then the phase register, then the preparation ancilla.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterLayout {
    pub copy_a: Register,
    pub copy_b: Register,
    pub phase: Register,
    pub prep_ancilla: Option<usize>,
}

impl RegisterLayout {
    pub fn new(num_sites: usize, phase_bits: usize, with_ancilla: bool) -> Self {
        let n = num_sites;
        let phase = 2 * n..2 * n + phase_bits;
        Self {
            copy_a: 0..n,
            copy_b: n..2 * n,
            prep_ancilla: with_ancilla.then_some(phase.end),
            phase,
        }
    }

    pub fn total_qubits(&self) -> usize {
        let ranges = [&self.copy_a, &self.copy_b, &self.phase];
        ranges.iter().map(|r| r.len()).sum::<usize>() + usize::from(self.prep_ancilla.is_some())
    }

    /// Checks that the registers are disjoint and cover `0..num_qubits`.
    pub fn validate(&self, num_qubits: usize) -> Result<()> {
        let mut owner = vec![0u8; num_qubits];
        let ancilla = self.prep_ancilla.map(|q| q..q + 1);
        let ranges = [
            Some(&self.copy_a),
            Some(&self.copy_b),
            Some(&self.phase),
            ancilla.as_ref(),
        ];
        for range in ranges.into_iter().flatten() {
            for q in range.clone() {
                if q >= num_qubits {
                    return Err(Error::InvalidRegister(format!(
                        "qubit {q} outside a {num_qubits}-qubit state"
                    )));
                }
                owner[q] += 1;
            }
        }
        if let Some(q) = owner.iter().position(|&c| c != 1) {
            return Err(Error::InvalidRegister(format!(
                "qubit {q} is claimed by {} registers",
                owner[q]
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_tensor_one() {
        let s = tensor_product(&StateVector::basis(1, 0).unwrap(), &StateVector::basis(1, 1).unwrap())
            .unwrap();
        assert_eq!(s.amplitudes(), &[c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)]);
    }

    #[test]
    fn plus_tensor_zero() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = StateVector::from_real(&[h, h]).unwrap();
        let s = tensor_product(&plus, &StateVector::zero(1).unwrap()).unwrap();
        let expect = StateVector::from_real(&[h, 0.0, h, 0.0]).unwrap();
        assert!(s.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn tensor_norm_is_product_of_norms() {
        let a = StateVector::from_amplitudes(vec![c(0.3, -1.2), c(0.7, 0.1), c(-0.4, 0.9), c(2.0, 0.0)])
            .unwrap();
        let b = StateVector::from_amplitudes(vec![c(1.1, 0.2), c(-0.5, 0.5), c(0.0, 0.3), c(0.8, -0.6)])
            .unwrap();
        let ab = tensor_product(&a, &b).unwrap();
        let mut naive = 0.0;
        for x in a.amplitudes() {
            for y in b.amplitudes() {
                naive += (x * y).norm_sqr();
            }
        }
        assert_abs_diff_eq!(ab.norm_sqr(), naive, epsilon = 1e-12);
        assert_abs_diff_eq!(ab.norm(), a.norm() * b.norm(), epsilon = 1e-12);
    }

    #[test]
    fn bell_marginal() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = StateVector::from_real(&[h, 0.0, 0.0, h]).unwrap();
        let p = register_distribution(&bell, &(0..1)).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn product_marginal() {
        let s = StateVector::basis(2, 0b01).unwrap();
        assert_eq!(register_distribution(&s, &(1..2)).unwrap(), vec![0.0, 1.0]);
        assert_eq!(register_distribution(&s, &(0..1)).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn marginal_matches_bit_extraction() {
        let amps: Vec<Complex64> = (0..8)
            .map(|k| c((k as f64 * 0.7).sin(), (k as f64 * 1.3).cos()))
            .collect();
        let s = StateVector::from_amplitudes(amps).unwrap().normalize().unwrap();
        for reg in [0..1, 1..2, 2..3, 0..2, 1..3, 0..3] {
            let p = register_distribution(&s, &reg).unwrap();
            let mut naive = vec![0.0; 1 << reg.len()];
            for (idx, a) in s.amplitudes().iter().enumerate() {
                let bits: Vec<usize> = (0..3).map(|q| (idx >> (2 - q)) & 1).collect();
                let v = reg.clone().fold(0, |acc, q| (acc << 1) | bits[q]);
                naive[v] += a.norm_sqr();
            }
            for (x, y) in p.iter().zip(&naive) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn unnormalized_marginal_rejected() {
        let s = StateVector::from_real(&[1.0, 1.0]).unwrap();
        assert!(matches!(
            register_distribution(&s, &(0..1)),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn cap_enforced() {
        assert!(matches!(
            StateVector::zero(QUBIT_CAP + 1),
            Err(Error::QubitCapExceeded { .. })
        ));
    }

    #[test]
    fn layout_covers_all_qubits() {
        let layout = RegisterLayout::new(3, 4, true);
        assert_eq!(layout.total_qubits(), 11);
        layout.validate(11).unwrap();
        assert!(layout.validate(12).is_err());
        let overlapping = RegisterLayout {
            copy_a: 0..2,
            copy_b: 1..3,
            phase: 3..4,
            prep_ancilla: None,
        };
        assert!(overlapping.validate(4).is_err());
    }
}
