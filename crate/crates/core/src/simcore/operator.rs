use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance for accepting a matrix as Hermitian or unitary.
pub const HERMITICITY_TOLERANCE: f64 = 1e-10;

/// Dense Hermitian matrix on `2^N` dimensions (a Hamiltonian or an observable).
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    matrix: DMatrix<Complex64>,
}

impl HermitianOperator {
    /// Validates and wraps `matrix`. The stored matrix is symmetrized so that
    /// it is exactly Hermitian.
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        let (rows, cols) = matrix.shape();
        if rows != cols {
            return Err(Error::DimensionMismatch {
                expected: rows,
                actual: cols,
            });
        }
        if rows == 0 || !rows.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(rows));
        }
        let deviation = hermiticity_deviation(&matrix);
        if deviation > HERMITICITY_TOLERANCE {
            return Err(Error::NotHermitian { deviation });
        }
        let adjoint = matrix.adjoint();
        let matrix = (matrix + adjoint).scale(0.5);
        Ok(Self { matrix })
    }

    pub fn from_real(matrix: &DMatrix<f64>) -> Result<Self> {
        Self::new(matrix.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            values.len(),
            values.iter().map(|&v| Complex64::new(v, 0.0)),
        ));
        Self::new(d)
    }

    pub fn zeros(num_sites: usize) -> Self {
        let dim = 1usize << num_sites;
        Self {
            matrix: DMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Number of qubits the operator acts on.
    pub fn num_sites(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn is_real(&self) -> bool {
        self.matrix.iter().all(|z| z.im == 0.0)
    }

    /// Tr M.
    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    /// Tr M² (the squared Frobenius norm for Hermitian M).
    pub fn trace_square(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            matrix: self.matrix.scale(factor),
        }
    }
}

/// max |M - M†| over all entries.
pub fn hermiticity_deviation(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// max |U†U - 1| over all entries.
pub fn unitarity_deviation(u: &DMatrix<Complex64>) -> f64 {
    let prod = u.adjoint() * u;
    let mut worst = 0.0f64;
    for ((i, j), z) in prod.iter().enumerate().map(|(k, z)| ((k % u.ncols(), k / u.ncols()), z)) {
        let target = if i == j { 1.0 } else { 0.0 };
        worst = worst.max((z - Complex64::new(target, 0.0)).norm());
    }
    worst
}

/// Spectral decomposition with eigenvalues in ascending order; column `n` of
/// `eigenvectors` belongs to `eigenvalues[n]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<Complex64>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// V f(Λ) V†.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> Complex64) -> DMatrix<Complex64> {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (mut col, &lambda) in scaled.column_iter_mut().zip(&self.eigenvalues) {
            col *= f(lambda);
        }
        scaled * v.adjoint()
    }

    /// V Λ V†.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        self.map_spectrum(|x| Complex64::new(x, 0.0))
    }

    /// exp(i·phase_per_energy·H), exact in the eigenbasis.
    pub fn phase_propagator(&self, phase_per_energy: f64) -> DMatrix<Complex64> {
        self.map_spectrum(|e| Complex64::from_polar(1.0, phase_per_energy * e))
    }

    /// ⟨E_n|M|E_m⟩ for every pair.
    pub fn to_eigenbasis(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        self.eigenvectors.adjoint() * m * &self.eigenvectors
    }

    /// Number of eigenvalues within `tol` of the lowest one.
    pub fn ground_degeneracy(&self, tol: f64) -> usize {
        let e0 = self.eigenvalues[0];
        self.eigenvalues.iter().take_while(|&&e| e - e0 <= tol).count()
    }
}

/// Diagonalizes a Hermitian operator.
///
/// Real-valued input is routed through the real symmetric solver so that the
/// eigenvectors come out real.
pub fn eig_hermitian(op: &HermitianOperator) -> Result<EigenDecomposition> {
    let m = op.matrix();
    let deviation = hermiticity_deviation(m);
    if deviation > HERMITICITY_TOLERANCE {
        return Err(Error::NotHermitian { deviation });
    }
    let n = m.nrows();
    let (values, vectors): (Vec<f64>, DMatrix<Complex64>) = if op.is_real() {
        let real = m.map(|z| z.re);
        let eig = SymmetricEigen::new(real);
        (
            eig.eigenvalues.iter().copied().collect(),
            eig.eigenvectors.map(|x| Complex64::new(x, 0.0)),
        )
    } else {
        let eig = SymmetricEigen::new(m.clone());
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let eigenvalues = order.iter().map(|&k| values[k]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |i, j| vectors[(i, order[j])]);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn max_abs(m: &DMatrix<Complex64>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn pauli_z_spectrum() {
        let z = HermitianOperator::diagonal(&[1.0, -1.0]).unwrap();
        let eig = eig_hermitian(&z).unwrap();
        assert_eq!(eig.eigenvalues, vec![-1.0, 1.0]);
        // |1⟩ then |0⟩, up to sign
        assert_abs_diff_eq!(eig.eigenvectors[(1, 0)].norm(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.eigenvectors[(0, 1)].norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn pauli_x_spectrum() {
        let x = HermitianOperator::from_real(&DMatrix::from_row_slice(2, 2, &[0., 1., 1., 0.])).unwrap();
        let eig = eig_hermitian(&x).unwrap();
        assert_abs_diff_eq!(eig.eigenvalues[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.eigenvalues[1], 1.0, epsilon = 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = eig.eigenvectors.column(0);
        let v1 = eig.eigenvectors.column(1);
        // (|0⟩ - |1⟩)/√2 and (|0⟩ + |1⟩)/√2 up to global phase
        assert_abs_diff_eq!((v0[0] * h - v0[1] * h).norm(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!((v1[0] * h + v1[1] * h).norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn real_symmetric_reconstruction() {
        let m = DMatrix::from_fn(8, 8, |i, j| {
            let (a, b) = (i.min(j) as f64, i.max(j) as f64);
            (1.7 * a + 0.3 * b * b).sin() + if i == j { 0.5 * a } else { 0.0 }
        });
        let op = HermitianOperator::from_real(&m).unwrap();
        let eig = eig_hermitian(&op).unwrap();
        assert!(max_abs(&(eig.reconstruct() - op.matrix())) <= 1e-9);
        let gram = eig.eigenvectors.adjoint() * &eig.eigenvectors;
        assert!(max_abs(&(gram - DMatrix::identity(8, 8))) <= 1e-10);
        assert!(eig.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        assert!(eig.eigenvectors.iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn complex_hermitian_reconstruction() {
        let m = DMatrix::from_fn(4, 4, |i, j| {
            if i == j {
                c(i as f64 - 1.5, 0.0)
            } else if i < j {
                c(0.3 * (i + j) as f64, 0.7 - 0.2 * j as f64)
            } else {
                c(0.3 * (i + j) as f64, -(0.7 - 0.2 * i as f64))
            }
        });
        let op = HermitianOperator::new(m).unwrap();
        let eig = eig_hermitian(&op).unwrap();
        assert!(max_abs(&(eig.reconstruct() - op.matrix())) <= 1e-9);
        let gram = eig.eigenvectors.adjoint() * &eig.eigenvectors;
        assert!(max_abs(&(gram - DMatrix::identity(4, 4))) <= 1e-10);
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)]);
        assert!(matches!(HermitianOperator::new(m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn non_power_of_two_rejected() {
        let m = DMatrix::<f64>::identity(3, 3);
        assert!(matches!(HermitianOperator::from_real(&m), Err(Error::NotPowerOfTwo(3))));
    }

    #[test]
    fn deterministic() {
        let m = DMatrix::from_fn(16, 16, |i, j| ((i * j) as f64 * 0.37).cos() + ((i + j) as f64).sin());
        let op = HermitianOperator::from_real(&(m.clone() + m.transpose())).unwrap();
        let a = eig_hermitian(&op).unwrap();
        let b = eig_hermitian(&op).unwrap();
        assert_eq!(a, b);
    }
}
