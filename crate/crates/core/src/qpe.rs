//! Phase estimation with counter-propagating copies.
//!
//! Phase bit j (bit 0 least significant in the outcome f) controls
//! (e^{iHΔ} ⊗ e^{-iHΔ})^{2^j}: copy_a runs forward with +H, copy_b with -H, so
//! a component |E_n⟩|E_m⟩ picks up e^{iΔ(ε_n - ε_m)x}. After the inverse QFT
//! the outcome concentrates at f ≈ Δ2^l(ε_n - ε_m)/2π (mod 2^l).

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simcore::{
    apply_controlled_unitary, eig_hermitian, inverse_qft, register_distribution, tensor_product, EigenDecomposition,
    HermitianOperator, RegisterLayout, StateVector, QUBIT_CAP,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    Exact,
    Empirical,
}

/// Probabilities of the 2^l phase-register outcomes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseDistribution {
    pub l: u32,
    pub delta: f64,
    pub probabilities: Vec<f64>,
    pub kind: OutcomeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
}

impl PhaseDistribution {
    pub fn exact(l: u32, delta: f64, probabilities: Vec<f64>) -> Self {
        Self {
            l,
            delta,
            probabilities,
            kind: OutcomeKind::Exact,
            shots: None,
        }
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    /// Angular frequency of every outcome, see [`outcome_frequency`].
    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.len())
            .map(|f| outcome_frequency(f, self.l, self.delta).expect("index in range"))
            .collect()
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// CSV with columns f, omega, probability.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let export = |e: csv::Error| Error::Export(e.to_string());
        w.write_record(["f", "omega", "probability"]).map_err(export)?;
        for (f, (omega, p)) in self.frequencies().into_iter().zip(&self.probabilities).enumerate() {
            w.write_record([f.to_string(), crate::io::fmt_f64(omega), crate::io::fmt_f64(*p)])
                .map_err(export)?;
        }
        w.flush().map_err(|e| Error::Export(e.to_string()))
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("delta must be positive and finite, got {delta}")));
    }
    Ok(())
}

/// Applies one controlled step e^{iHt} on copy_a and e^{-iHt} on copy_b,
/// conditioned on `control`.
pub fn apply_controlled_evolution(
    state: &StateVector,
    eig: &EigenDecomposition,
    layout: &RegisterLayout,
    control: usize,
    t: f64,
) -> Result<StateVector> {
    let forward = eig.phase_propagator(t);
    let backward = eig.phase_propagator(-t);
    let state = apply_controlled_unitary(state, control, &forward, &layout.copy_a)?;
    apply_controlled_unitary(&state, control, &backward, &layout.copy_b)
}

/// Qubit index of phase bit `j` (bit 0 is the least significant of f).
pub fn phase_qubit(layout: &RegisterLayout, j: usize) -> usize {
    layout.phase.end - 1 - j
}

/// Full circuit: |prepared⟩|+⟩^l, controlled counter-propagation for each
/// phase bit, inverse QFT, and the exact outcome distribution of the phase
/// register.
pub fn run_qpe(prepared: &StateVector, h: &HermitianOperator, l: u32, delta: f64) -> Result<PhaseDistribution> {
    let eig = eig_hermitian(h)?;
    run_qpe_with(prepared, &eig, l, delta)
}

/// [`run_qpe`] with a precomputed decomposition of H.
pub fn run_qpe_with(prepared: &StateVector, eig: &EigenDecomposition, l: u32, delta: f64) -> Result<PhaseDistribution> {
    check_delta(delta)?;
    if l == 0 {
        return Err(Error::InvalidParameter("phase register needs at least one bit".into()));
    }
    let n = eig.dim().trailing_zeros() as usize;
    if prepared.num_qubits() != 2 * n {
        return Err(Error::DimensionMismatch {
            expected: 2 * n,
            actual: prepared.num_qubits(),
        });
    }
    let bits = l as usize;
    if 2 * n + bits > QUBIT_CAP {
        return Err(Error::QubitCapExceeded {
            requested: 2 * n + bits,
            cap: QUBIT_CAP,
        });
    }
    let layout = RegisterLayout::new(n, bits, false);
    let amp = Complex64::new(1.0 / ((1u64 << bits) as f64).sqrt(), 0.0);
    let plus = StateVector::from_amplitudes(vec![amp; 1 << bits])?;
    let mut state = tensor_product(prepared, &plus)?;
    for j in 0..bits {
        let t = delta * (1u64 << j) as f64;
        state = apply_controlled_evolution(&state, eig, &layout, phase_qubit(&layout, j), t)?;
    }
    let state = inverse_qft(&state, &layout.phase)?;
    let probabilities = register_distribution(&state, &layout.phase)?;
    Ok(PhaseDistribution::exact(l, delta, probabilities))
}

/// Multinomial draw of `shots` outcomes via sequential conditional binomials.
/// Returns normalized counts; identical seed and shots give identical counts.
pub fn sample_outcomes(dist: &PhaseDistribution, shots: u64, seed: u64) -> Result<PhaseDistribution> {
    Ok(empirical_from_counts(dist, &sample_counts(dist, shots, seed)?, shots))
}

/// Raw outcome counts behind [`sample_outcomes`].
pub fn sample_counts(dist: &PhaseDistribution, shots: u64, seed: u64) -> Result<Vec<u64>> {
    if dist.kind != OutcomeKind::Exact {
        return Err(Error::InvalidParameter("sampling requires an exact distribution".into()));
    }
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; dist.len()];
    let mut remaining = shots;
    let mut mass: f64 = dist.probabilities.iter().map(|p| p.max(0.0)).sum();
    let last = dist.len() - 1;
    for (k, &p) in dist.probabilities.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let p = p.max(0.0);
        if k == last {
            counts[k] = remaining;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let draw = if q >= 1.0 {
            remaining
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(remaining, q)
                .map_err(|e| Error::InvalidParameter(e.to_string()))?
                .sample(&mut rng)
        };
        counts[k] = draw;
        remaining -= draw;
        mass -= p;
    }
    Ok(counts)
}

fn empirical_from_counts(dist: &PhaseDistribution, counts: &[u64], shots: u64) -> PhaseDistribution {
    PhaseDistribution {
        l: dist.l,
        delta: dist.delta,
        probabilities: counts.iter().map(|&c| c as f64 / shots as f64).collect(),
        kind: OutcomeKind::Empirical,
        shots: Some(shots),
    }
}

/// ω = 2π f′/(Δ2^l), with f′ = f for f < 2^{l-1} and f - 2^l otherwise.
pub fn outcome_frequency(f: usize, l: u32, delta: f64) -> Result<f64> {
    let size = 1usize << l;
    if f >= size {
        return Err(Error::OutcomeOutOfRange { f, l });
    }
    let wrapped = if f < size / 2 { f as f64 } else { f as f64 - size as f64 };
    Ok(2.0 * PI * wrapped / (delta * size as f64))
}

/// Fractional outcome position Δ2^l·gap/2π (not wrapped).
pub fn gap_position(gap: f64, l: u32, delta: f64) -> f64 {
    delta * (1u64 << l) as f64 * gap / (2.0 * PI)
}

/// Nearest outcome bin of an energy gap, wrapped into 0..2^l.
pub fn gap_bin(gap: f64, l: u32, delta: f64) -> usize {
    let size = 1i64 << l;
    (gap_position(gap, l, delta).round() as i64).rem_euclid(size) as usize
}

/// Phase-register size and coupling time for a bandwidth and linewidth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolutionPlan {
    pub l: u32,
    pub delta: f64,
    pub omega_max: f64,
    pub gamma: f64,
}

impl ResolutionPlan {
    /// Δ2^l/2π, the resolved time scale.
    pub fn time_scale(&self) -> f64 {
        gap_position(1.0, self.l, self.delta)
    }

    /// 1/γ ≤ Δ2^l/2π ≤ (2^l - 1)/ω_max. The lower bound is saturated by
    /// construction, so it is compared with a relative slack of 1e-12.
    pub fn satisfies_bounds(&self) -> bool {
        let scale = self.time_scale();
        let lower = 1.0 / self.gamma;
        let upper = ((1u64 << self.l) - 1) as f64 / self.omega_max;
        lower <= scale * (1.0 + 1e-12) && scale <= upper * (1.0 + 1e-12)
    }
}

/// Largest register the planner will propose.
pub const MAX_PLAN_BITS: u32 = 40;

/// Smallest l with 2^l ≥ 1 + ω_max/γ, then Δ = 2π/(γ 2^l).
pub fn plan_resolution(omega_max: f64, gamma: f64) -> Result<ResolutionPlan> {
    if !(omega_max > 0.0 && omega_max.is_finite()) || !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "omega_max and gamma must be positive and finite, got {omega_max}, {gamma}"
        )));
    }
    if gamma >= omega_max {
        return Err(Error::NothingToResolve { gamma, omega_max });
    }
    let needed = 1.0 + omega_max / gamma;
    let l = (1..=MAX_PLAN_BITS)
        .find(|&l| (1u64 << l) as f64 >= needed)
        .ok_or_else(|| Error::InvalidParameter(format!("omega_max/gamma = {} needs more than {MAX_PLAN_BITS} bits", omega_max / gamma)))?;
    let delta = 2.0 * PI / (gamma * (1u64 << l) as f64);
    Ok(ResolutionPlan {
        l,
        delta,
        omega_max,
        gamma,
    })
}
