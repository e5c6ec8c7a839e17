//! Probabilistic preparation of |O⟩ from the base state: Hadamard on an
//! ancilla, controlled exp(iφO) on copy_a, Hadamard, postselect on |1⟩.
//!
//! The closed forms work on the spectral measure of O in the base state:
//! eigenvalues O_i with weights q_i = ⟨i|ρ_a|i⟩, where ρ_a is the reduced
//! state of copy_a. Every expectation ⟨f(O)⟩ is then Σ_i q_i f(O_i). At
//! infinite temperature q_i = 2^{-N} and ⟨O^k⟩ = Tr O^k / 2^N.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{DistributionKind, EigenvalueDistribution};
use crate::purify::{operator_state_on, BaseState, MIN_TRACE_SQUARE};
use crate::simcore::{apply_controlled_unitary, apply_hadamard, eig_hermitian, tensor_product, HermitianOperator, StateVector};

/// Tr O / 2^N above which a non-traceless warning is attached.
pub const TRACELESS_TOLERANCE: f64 = 1e-12;

/// ⟨O²⟩, ⟨O³⟩, ⟨O⁴⟩ in the base state (plus the mean, for diagnostics).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
}

impl MomentSet {
    pub fn validate(&self) -> Result<()> {
        if !(self.m2 > 0.0) {
            return Err(Error::ZeroOperator);
        }
        if self.m4 < self.m2 * self.m2 * (1.0 - 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "moments violate m4 >= m2^2: m2 = {}, m4 = {}",
                self.m2, self.m4
            )));
        }
        Ok(())
    }

    /// Coefficient κ in F ≈ 1 - κ φ²/4, namely m4/m2 - m3²/m2².
    pub fn infidelity_coefficient(&self) -> f64 {
        self.m4 / self.m2 - self.m3 * self.m3 / (self.m2 * self.m2)
    }

    /// Small-angle ratio P₁/(1 - F) = m2 / κ.
    pub fn small_angle_ratio(&self) -> f64 {
        self.m2 / self.infidelity_coefficient()
    }
}

/// Eigenvalues of O with their base-state weights.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralMeasure {
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SpectralMeasure {
    /// Measure of `o` in the reduced state of copy_a of `base`.
    pub fn new(o: &HermitianOperator, base: &BaseState) -> Result<Self> {
        let d = o.dim();
        if base.state.dim() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                actual: base.state.dim(),
            });
        }
        let eig = eig_hermitian(o)?;
        // row index = copy_a, column index = copy_b
        let psi = DMatrix::from_row_slice(d, d, base.state.amplitudes());
        let projected = eig.eigenvectors.adjoint() * psi;
        let weights = projected.row_iter().map(|row| row.iter().map(|z| z.norm_sqr()).sum()).collect();
        Ok(Self {
            values: eig.eigenvalues,
            weights,
        })
    }

    /// Uniform weights over the given eigenvalues (infinite temperature).
    pub fn uniform(values: Vec<f64>) -> Self {
        let w = 1.0 / values.len() as f64;
        let weights = vec![w; values.len()];
        Self { values, weights }
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.values.iter().zip(&self.weights).map(|(&x, &q)| q * f(x)).sum()
    }

    pub fn expect_complex(&self, f: impl Fn(f64) -> Complex64) -> Complex64 {
        self.values.iter().zip(&self.weights).map(|(&x, &q)| f(x) * q).sum()
    }

    pub fn moments(&self) -> MomentSet {
        MomentSet {
            m1: self.expect(|x| x),
            m2: self.expect(|x| x * x),
            m3: self.expect(|x| x * x * x),
            m4: self.expect(|x| x.powi(4)),
        }
    }

    /// ⟨sin²(φO/2)⟩.
    pub fn acceptance_probability(&self, phi: f64) -> f64 {
        self.expect(|x| (0.5 * phi * x).sin().powi(2))
    }

    /// |⟨O(1 - U)⟩|² / (⟨O²⟩ ⟨4 sin²(φO/2)⟩), the overlap of the postselected
    /// state with the target. Reduces to |⟨OU⟩|²/(...) for ⟨O⟩ = 0.
    pub fn fidelity(&self, phi: f64) -> Result<f64> {
        let m2 = self.expect(|x| x * x);
        let denom = m2 * self.expect(|x| 4.0 * (0.5 * phi * x).sin().powi(2));
        if phi == 0.0 || !(denom > 0.0) {
            return Err(Error::DegenerateAngle { phi });
        }
        // 1 - e^{ix} = -2i sin(x/2) e^{ix/2}, no cancellation at small x
        let overlap = self.expect_complex(|x| {
            let half = 0.5 * phi * x;
            Complex64::new(0.0, -2.0 * x * half.sin()) * Complex64::from_polar(1.0, half)
        });
        Ok(overlap.norm_sqr() / denom)
    }
}

/// Exact moments of `o` in the base state.
pub fn moments(o: &HermitianOperator, base: &BaseState) -> Result<MomentSet> {
    let m = SpectralMeasure::new(o, base)?.moments();
    m.validate()?;
    Ok(m)
}

/// P₁(φ) = ⟨sin²(φO/2)⟩ in the base state.
pub fn acceptance_probability(o: &HermitianOperator, phi: f64, base: &BaseState) -> Result<f64> {
    Ok(SpectralMeasure::new(o, base)?.acceptance_probability(phi))
}

/// F(φ) = |⟨O|ψ₁⟩|².
pub fn preparation_fidelity(o: &HermitianOperator, phi: f64, base: &BaseState) -> Result<f64> {
    if phi == 0.0 {
        return Err(Error::DegenerateAngle { phi });
    }
    SpectralMeasure::new(o, base)?.fidelity(phi)
}

/// Result of one simulated run of the preparation circuit.
#[derive(Clone, Debug)]
pub struct PrepOutcome {
    pub accepted: bool,
    /// Normalized accepted branch on copy_a ⊗ copy_b, present when accepted.
    pub post_state: Option<StateVector>,
    pub acceptance_probability: f64,
    pub rejection_probability: f64,
    pub fidelity_with_target: f64,
    pub warnings: Vec<String>,
}

fn traceless_warning(o: &HermitianOperator) -> Option<String> {
    let mean = o.trace() / o.dim() as f64;
    (mean.abs() > TRACELESS_TOLERANCE).then(|| format!("observable is not traceless: Tr O / 2^N = {mean:e}"))
}

/// Simulates Hadamard, controlled exp(iφO) ⊗ 1, Hadamard on a fresh ancilla
/// appended after the two copies, then measures the ancilla with a seeded
/// draw. Probabilities and fidelity come from the exact branch norms.
pub fn run_prep_circuit(o: &HermitianOperator, phi: f64, base: &BaseState, seed: u64) -> Result<PrepOutcome> {
    let n = o.num_sites();
    if base.state.num_qubits() != 2 * n {
        return Err(Error::DimensionMismatch {
            expected: 2 * n,
            actual: base.state.num_qubits(),
        });
    }
    if o.trace_square() <= MIN_TRACE_SQUARE {
        return Err(Error::ZeroOperator);
    }
    let ancilla = 2 * n;
    let u = eig_hermitian(o)?.phase_propagator(phi);

    let state = tensor_product(&base.state, &StateVector::zero(1)?)?;
    let state = apply_hadamard(&state, ancilla)?;
    let state = apply_controlled_unitary(&state, ancilla, &u, &(0..n))?;
    let state = apply_hadamard(&state, ancilla)?;

    // ancilla is the least significant bit
    let amps = state.into_amplitudes();
    let branch1: Vec<Complex64> = amps.iter().skip(1).step_by(2).copied().collect();
    let p1: f64 = branch1.iter().map(|a| a.norm_sqr()).sum();
    let p0: f64 = amps.iter().step_by(2).map(|a| a.norm_sqr()).sum();
    if phi == 0.0 || p1 <= 1e-300 {
        return Err(Error::DegenerateAngle { phi });
    }

    let post = StateVector::from_amplitudes(branch1)?.normalize()?;
    let target = operator_state_on(o, base)?;
    let fidelity = target.fidelity(&post)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let accepted = rng.random::<f64>() < p1;

    Ok(PrepOutcome {
        accepted,
        post_state: accepted.then_some(post),
        acceptance_probability: p1,
        rejection_probability: p0,
        fidelity_with_target: fidelity,
        warnings: traceless_warning(o).into_iter().collect(),
    })
}

/// Angle chosen for a target infidelity ε, with the predicted acceptance and
/// its lower bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiChoice {
    pub epsilon: f64,
    pub phi: f64,
    pub moments: MomentSet,
    /// ε m2² / m4.
    pub predicted_acceptance: f64,
    /// ε m2 / O_max².
    pub bound_max_singular: f64,
    /// ε rk(O)/2^N (O_min / O_max)², the infinite-temperature rank bound.
    pub bound_rank: f64,
    pub o_max: f64,
    pub o_min: f64,
    pub rank: usize,
}

/// φ = √(ε m2 / m4).
pub fn choose_phi_from_moments(m: &MomentSet, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if !(m.m4 > 0.0) {
        return Err(Error::ZeroOperator);
    }
    Ok((epsilon * m.m2 / m.m4).sqrt())
}

pub fn choose_phi(o: &HermitianOperator, epsilon: f64, base: &BaseState) -> Result<PhiChoice> {
    let measure = SpectralMeasure::new(o, base)?;
    let m = measure.moments();
    let phi = choose_phi_from_moments(&m, epsilon)?;
    let o_max = measure.values.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let cutoff = 1e-10 * o_max;
    let nonzero: Vec<f64> = measure.values.iter().map(|x| x.abs()).filter(|&x| x > cutoff).collect();
    let o_min = nonzero.iter().copied().fold(f64::INFINITY, f64::min);
    let rank = nonzero.len();
    let dim = measure.values.len() as f64;
    Ok(PhiChoice {
        epsilon,
        phi,
        moments: m,
        predicted_acceptance: epsilon * m.m2 * m.m2 / m.m4,
        bound_max_singular: epsilon * m.m2 / (o_max * o_max),
        bound_rank: epsilon * rank as f64 / dim * (o_min / o_max).powi(2),
        o_max,
        o_min,
        rank,
    })
}

/// c = m2²/m4 from the analytic moments of the law, so that P₁ ≈ c(1 - F)
/// at small φ.
pub fn moment_ratio_constant(dist: &EigenvalueDistribution) -> Result<f64> {
    dist.validate()?;
    let (m2, m4) = dist.analytic_moments();
    Ok(m2 * m2 / m4)
}

/// Quadrature rule for expectations over a continuous eigenvalue law.
///
/// Arcsine and semicircle use the substitution x = a cos θ, whose integrands
/// are smooth and periodic so the trapezoid rule converges geometrically;
/// the Gaussian uses the trapezoid rule on ±12σ, the uniform law composite
/// Simpson.
pub fn law_measure(dist: &EigenvalueDistribution, points: usize) -> Result<SpectralMeasure> {
    dist.validate()?;
    let a = dist.parameter;
    let n = points.max(16);
    let (values, weights): (Vec<f64>, Vec<f64>) = match dist.kind {
        DistributionKind::Arcsine => (0..n)
            .map(|k| {
                let theta = PI * (k as f64 + 0.5) / n as f64;
                (a * theta.cos(), 1.0 / n as f64)
            })
            .unzip(),
        DistributionKind::Semicircle => (0..n)
            .map(|k| {
                let theta = PI * (k as f64 + 0.5) / n as f64;
                (a * theta.cos(), 2.0 / n as f64 * theta.sin().powi(2))
            })
            .unzip(),
        DistributionKind::Gaussian => {
            let half = 12.0 * a;
            let h = 2.0 * half / n as f64;
            let norm = 1.0 / (a * (2.0 * PI).sqrt());
            (0..=n)
                .map(|k| {
                    let x = -half + h * k as f64;
                    (x, h * norm * (-0.5 * (x / a).powi(2)).exp())
                })
                .unzip()
        }
        DistributionKind::Uniform => {
            let n = n + n % 2;
            let h = 2.0 * a / n as f64;
            (0..=n)
                .map(|k| {
                    let simpson = if k == 0 || k == n {
                        1.0
                    } else if k % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    (-a + h * k as f64, simpson * h / 3.0 / (2.0 * a))
                })
                .unzip()
        }
    };
    Ok(SpectralMeasure { values, weights })
}

/// Quadrature resolution used by [`law_curve`].
pub const LAW_POINTS: usize = 4096;

/// (P₁(φ), F(φ)) for a continuous eigenvalue law.
pub fn law_curve(dist: &EigenvalueDistribution, phi: f64) -> Result<(f64, f64)> {
    let measure = law_measure(dist, LAW_POINTS)?;
    Ok((measure.acceptance_probability(phi), measure.fidelity(phi)?))
}

/// One row of a preparation study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrepStudyRow {
    pub phi: f64,
    #[serde(rename = "P1")]
    pub p1: f64,
    pub fidelity: f64,
    pub distribution: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
}

/// Writes rows as CSV with columns phi, P1, fidelity, distribution, N, seed.
/// Floats are printed with 17 significant digits.
pub fn write_prep_study_csv<W: Write>(rows: &[PrepStudyRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let export = |e: csv::Error| Error::Export(e.to_string());
    w.write_record(["phi", "P1", "fidelity", "distribution", "N", "seed"]).map_err(export)?;
    for r in rows {
        w.write_record([
            crate::io::fmt_f64(r.phi),
            crate::io::fmt_f64(r.p1),
            crate::io::fmt_f64(r.fidelity),
            r.distribution.clone(),
            r.n.to_string(),
            r.seed.to_string(),
        ])
        .map_err(export)?;
    }
    w.flush().map_err(|e| Error::Export(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_operator, synthetic_diagonal_observable, tilted_ising_spec};
    use crate::purify::EnsembleSpec;
    use approx::assert_abs_diff_eq;

    fn sigma_z() -> HermitianOperator {
        HermitianOperator::diagonal(&[1.0, -1.0]).unwrap()
    }

    fn infinite(o: &HermitianOperator) -> BaseState {
        BaseState::new(o, EnsembleSpec::InfiniteTemperature).unwrap()
    }

    fn random_symmetric(n: usize, salt: f64) -> HermitianOperator {
        let d = 1 << n;
        let m = DMatrix::from_fn(d, d, |i, j| ((i * 5 + j * 11) as f64 * salt).sin() - ((i * j) as f64 * salt).cos());
        HermitianOperator::from_real(&(m.clone() + m.transpose())).unwrap()
    }

    #[test]
    fn two_level_closed_forms() {
        let o = sigma_z();
        let base = infinite(&o);
        for phi in [0.1, 0.7, std::f64::consts::FRAC_PI_2, 2.5] {
            let p1 = acceptance_probability(&o, phi, &base).unwrap();
            let f = preparation_fidelity(&o, phi, &base).unwrap();
            assert_abs_diff_eq!(p1, (phi / 2.0).sin().powi(2), epsilon = 1e-14);
            assert_abs_diff_eq!(f, (phi / 2.0).cos().powi(2), epsilon = 1e-14);
            let out = run_prep_circuit(&o, phi, &base, 1).unwrap();
            assert_abs_diff_eq!(out.acceptance_probability, p1, epsilon = 1e-12);
            assert_abs_diff_eq!(out.fidelity_with_target, f, epsilon = 1e-12);
        }
        let half = preparation_fidelity(&o, std::f64::consts::FRAC_PI_2, &base).unwrap();
        assert_abs_diff_eq!(half, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn zero_angle() {
        let o = sigma_z();
        let base = infinite(&o);
        assert_eq!(acceptance_probability(&o, 0.0, &base).unwrap(), 0.0);
        assert!(matches!(run_prep_circuit(&o, 0.0, &base, 0), Err(Error::DegenerateAngle { .. })));
        assert!(matches!(preparation_fidelity(&o, 0.0, &base), Err(Error::DegenerateAngle { .. })));
    }

    #[test]
    fn branch_probabilities_sum_to_one() {
        let o = random_symmetric(3, 0.37);
        let base = infinite(&o);
        for phi in [0.05, 0.4, 1.3, -0.9] {
            let out = run_prep_circuit(&o, phi, &base, 9).unwrap();
            assert_abs_diff_eq!(out.acceptance_probability + out.rejection_probability, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_site_z_on_larger_chain() {
        let spec = crate::models::single_site_z_spec(3, 1).unwrap();
        let o = build_operator(&spec).unwrap();
        let base = infinite(&o);
        let phi = 0.9;
        assert_abs_diff_eq!(
            acceptance_probability(&o, phi, &base).unwrap(),
            (phi / 2.0).sin().powi(2),
            epsilon = 1e-14
        );
    }

    #[test]
    fn small_angle_series_remainder() {
        let o = random_symmetric(3, 0.52);
        let base = infinite(&o);
        let m = moments(&o, &base).unwrap();
        for phi in [1e-3, 1e-2, 0.05] {
            let p1 = acceptance_probability(&o, phi, &base).unwrap();
            assert!((p1 - phi * phi * m.m2 / 4.0).abs() <= phi.powi(4) * m.m4 / 48.0);
        }
    }

    #[test]
    fn small_angle_fidelity_coefficient() {
        // non-symmetric spectrum so that the m3 term matters
        let o = HermitianOperator::diagonal(&[2.0, -0.5, -0.5, -1.0, 0.3, 0.9, -0.7, -0.5]).unwrap();
        let base = infinite(&o);
        let m = moments(&o, &base).unwrap();
        let phi = 1e-3;
        let f = preparation_fidelity(&o, phi, &base).unwrap();
        let series = 1.0 - phi * phi / 4.0 * m.infidelity_coefficient();
        assert_abs_diff_eq!(f, series, epsilon = 1e-8);
    }

    #[test]
    fn circuit_and_closed_form_agree_for_ensembles() {
        let h = build_operator(&tilted_ising_spec(2, 1.0, 1.05, 0.5)).unwrap();
        let o = random_symmetric(2, 0.8);
        for ensemble in [
            EnsembleSpec::InfiniteTemperature,
            EnsembleSpec::GroundState,
            EnsembleSpec::Gibbs { beta: 0.7 },
        ] {
            let base = BaseState::new(&h, ensemble).unwrap();
            for phi in [0.2, 1.1] {
                let out = run_prep_circuit(&o, phi, &base, 3).unwrap();
                let p1 = acceptance_probability(&o, phi, &base).unwrap();
                let f = preparation_fidelity(&o, phi, &base).unwrap();
                assert_abs_diff_eq!(out.acceptance_probability, p1, epsilon = 1e-12);
                assert_abs_diff_eq!(out.fidelity_with_target, f, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn acceptance_is_even_and_bounded() {
        let o = random_symmetric(2, 1.7);
        let base = infinite(&o);
        for k in 0..40 {
            let phi = 0.2 * k as f64;
            let a = acceptance_probability(&o, phi, &base).unwrap();
            let b = acceptance_probability(&o, -phi, &base).unwrap();
            assert!((0.0..=1.0).contains(&a));
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn choose_phi_uniform_moments() {
        let m = MomentSet {
            m1: 0.0,
            m2: 1.0 / 3.0,
            m3: 0.0,
            m4: 0.2,
        };
        let phi = choose_phi_from_moments(&m, 0.01).unwrap();
        assert_abs_diff_eq!(phi, (0.01f64 * 5.0 / 3.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(phi, 0.1291, epsilon = 1e-4);
        let quad = choose_phi_from_moments(&m, 0.04).unwrap();
        assert_eq!(quad / phi, 2.0);
        assert!(choose_phi_from_moments(&m, 0.0).is_err());
        assert!(choose_phi_from_moments(&m, 1.0).is_err());
    }

    #[test]
    fn chosen_phi_meets_fidelity_gaussian() {
        let dist = EigenvalueDistribution::new(DistributionKind::Gaussian, 1.0).unwrap();
        let o = synthetic_diagonal_observable(&dist, 8, 5).unwrap();
        let base = infinite(&o);
        let choice = choose_phi(&o, 0.01, &base).unwrap();
        let f = preparation_fidelity(&o, choice.phi, &base).unwrap();
        assert!(f >= 1.0 - 1.1 * 0.01);
        assert!(choice.predicted_acceptance >= choice.bound_max_singular);
        assert!(choice.bound_max_singular >= choice.bound_rank * (1.0 - 1e-12));
    }

    #[test]
    fn choose_phi_rejects_zero_operator() {
        let o = HermitianOperator::zeros(1);
        let base = infinite(&o);
        assert!(choose_phi(&o, 0.1, &base).is_err());
    }

    #[test]
    fn analytic_constants() {
        let c = |kind| moment_ratio_constant(&EigenvalueDistribution::new(kind, 1.7).unwrap()).unwrap();
        assert_abs_diff_eq!(c(DistributionKind::Semicircle), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(c(DistributionKind::Uniform), 5.0 / 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c(DistributionKind::Arcsine), 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c(DistributionKind::Gaussian), 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn law_quadrature_reproduces_moments() {
        for kind in DistributionKind::ALL {
            let dist = EigenvalueDistribution::new(kind, 0.8).unwrap();
            let m = law_measure(&dist, LAW_POINTS).unwrap().moments();
            let (m2, m4) = dist.analytic_moments();
            assert_abs_diff_eq!(m.m2, m2, epsilon = 1e-12);
            assert_abs_diff_eq!(m.m4, m4, epsilon = 1e-12);
            assert_abs_diff_eq!(m.m3, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn law_small_angle_ratio_matches_constant() {
        for kind in DistributionKind::ALL {
            let dist = EigenvalueDistribution::new(kind, 1.0).unwrap();
            let (p1, f) = law_curve(&dist, 1e-2).unwrap();
            let c = moment_ratio_constant(&dist).unwrap();
            assert!((p1 / (1.0 - f) - c).abs() <= 1e-3, "{kind:?}: {}", p1 / (1.0 - f));
        }
    }

    #[test]
    fn law_acceptance_closed_forms() {
        // uniform: ½(1 - sin(φa)/(φa)); gaussian: ½(1 - e^{-φ²σ²/2})
        let phi = 1.3;
        let u = EigenvalueDistribution::new(DistributionKind::Uniform, 1.0).unwrap();
        let g = EigenvalueDistribution::new(DistributionKind::Gaussian, 0.6).unwrap();
        assert_abs_diff_eq!(law_curve(&u, phi).unwrap().0, 0.5 * (1.0 - phi.sin() / phi), epsilon = 1e-12);
        assert_abs_diff_eq!(
            law_curve(&g, phi).unwrap().0,
            0.5 * (1.0 - (-0.5f64 * (phi * 0.6).powi(2)).exp()),
            epsilon = 1e-12
        );
    }

    #[test]
    fn non_traceless_warns() {
        let o = HermitianOperator::diagonal(&[2.0, -1.0]).unwrap();
        let base = infinite(&o);
        let out = run_prep_circuit(&o, 0.3, &base, 0).unwrap();
        assert_eq!(out.warnings.len(), 1);
        assert_abs_diff_eq!(
            out.fidelity_with_target,
            preparation_fidelity(&o, 0.3, &base).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn seeded_draw_is_reproducible() {
        let o = sigma_z();
        let base = infinite(&o);
        let draws = |seed: u64| -> Vec<bool> { (0..50u64).map(|k| run_prep_circuit(&o, 1.0, &base, seed + k).unwrap().accepted).collect() };
        assert_eq!(draws(100), draws(100));
        let hits = draws(0).iter().filter(|&&a| a).count();
        assert!(hits > 5 && hits < 45);
    }

    #[test]
    fn csv_columns() {
        let rows = vec![PrepStudyRow {
            phi: 0.1,
            p1: 0.0025,
            fidelity: 0.99,
            distribution: "uniform".into(),
            n: 8,
            seed: 3,
        }];
        let mut buf = Vec::new();
        write_prep_study_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("phi,P1,fidelity,distribution,N,seed\n"));
        assert!(text.contains(",uniform,8,3"));
    }
}
