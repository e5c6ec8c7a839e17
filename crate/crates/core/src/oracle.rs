//! Exact-diagonalization reference for everything the circuits produce.
//!
//! With H = Σ ε_n |E_n⟩⟨E_n|, the matrix elements Ō_nm = ⟨E_n|O|E_m⟩ and
//! the ensemble occupations p_n determine the correlation function, the
//! Lorentzian spectrum and the phase-estimation outcome distribution.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::purify::{EnsembleSpec, MIN_TRACE_SQUARE};
use crate::qpe::{gap_position, PhaseDistribution};
use crate::simcore::{eig_hermitian, EigenDecomposition, HermitianOperator};

/// Eigen-data of (H, O) shared by the reference computations.
#[derive(Clone, Debug)]
pub struct TransitionData {
    pub eig: EigenDecomposition,
    /// ⟨E_n|O|E_m⟩.
    pub matrix_elements: DMatrix<Complex64>,
    pub occupations: Vec<f64>,
    pub ensemble: EnsembleSpec,
}

impl TransitionData {
    pub fn new(h: &HermitianOperator, o: &HermitianOperator, ensemble: EnsembleSpec) -> Result<Self> {
        check_same_dim(h, o)?;
        let eig = eig_hermitian(h)?;
        Self::from_eigen(eig, o, ensemble)
    }

    pub fn from_eigen(eig: EigenDecomposition, o: &HermitianOperator, ensemble: EnsembleSpec) -> Result<Self> {
        if eig.dim() != o.dim() {
            return Err(Error::DimensionMismatch {
                expected: eig.dim(),
                actual: o.dim(),
            });
        }
        let occupations = ensemble.occupations(&eig.eigenvalues)?;
        let matrix_elements = eig.to_eigenbasis(o.matrix());
        Ok(Self {
            eig,
            matrix_elements,
            occupations,
            ensemble,
        })
    }

    pub fn energies(&self) -> &[f64] {
        &self.eig.eigenvalues
    }

    /// p_n |Ō_nm|²: the weight of e^{i(ε_n - ε_m)t} in S(t).
    pub fn correlation_weights(&self) -> DMatrix<f64> {
        let d = self.eig.dim();
        DMatrix::from_fn(d, d, |n, m| self.occupations[n] * self.matrix_elements[(n, m)].norm_sqr())
    }

    /// Normalized c_nm = (⟨E_n| ⊗ ⟨E_m|)(O ⊗ 1)|ψ_base⟩, with the base state
    /// Σ_k √p_k |E_k⟩|E_k*⟩. Outcome weights of phase estimation are |c_nm|²
    /// at gap ε_n - ε_m.
    pub fn transition_amplitudes(&self) -> Result<DMatrix<Complex64>> {
        let v = &self.eig.eigenvectors;
        // ⟨E_m|E_k*⟩ = conj((V^T V)_mk)
        let overlap = (v.transpose() * v).map(|z| z.conj());
        let d = self.eig.dim();
        let mut weighted = self.matrix_elements.clone();
        for (k, mut col) in weighted.column_iter_mut().enumerate() {
            col *= Complex64::new(self.occupations[k].sqrt(), 0.0);
        }
        let c = weighted * overlap.transpose();
        let norm_sqr: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        if norm_sqr <= MIN_TRACE_SQUARE {
            return Err(Error::ZeroNormState { norm: norm_sqr.sqrt() });
        }
        debug_assert_eq!(c.nrows(), d);
        Ok(c / Complex64::new(norm_sqr.sqrt(), 0.0))
    }
}

fn check_same_dim(h: &HermitianOperator, o: &HermitianOperator) -> Result<()> {
    if h.dim() != o.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            actual: o.dim(),
        });
    }
    Ok(())
}

/// S(t) = Σ_nm p_n e^{i(ε_n - ε_m)t} |⟨E_n|O|E_m⟩|². At infinite temperature
/// this is Tr[e^{iHt} O e^{-iHt} O]/2^N.
pub fn correlation_function(h: &HermitianOperator, o: &HermitianOperator, t: f64, ensemble: EnsembleSpec) -> Result<Complex64> {
    let data = TransitionData::new(h, o, ensemble)?;
    Ok(correlation_from(&data, t))
}

pub fn correlation_from(data: &TransitionData, t: f64) -> Complex64 {
    let e = data.energies();
    let w = data.correlation_weights();
    let mut acc = Complex64::new(0.0, 0.0);
    for n in 0..e.len() {
        for m in 0..e.len() {
            acc += Complex64::from_polar(w[(n, m)], (e[n] - e[m]) * t);
        }
    }
    acc
}

/// Σ_γ(ω) sampled on a frequency grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub frequencies: Vec<f64>,
    pub values: Vec<f64>,
    pub gamma: f64,
    pub ensemble: EnsembleSpec,
}

impl SpectrumTable {
    /// CSV with columns omega, sigma.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let export = |e: csv::Error| Error::Export(e.to_string());
        w.write_record(["omega", "sigma"]).map_err(export)?;
        for (omega, sigma) in self.frequencies.iter().zip(&self.values) {
            w.write_record([crate::io::fmt_f64(*omega), crate::io::fmt_f64(*sigma)])
                .map_err(export)?;
        }
        w.flush().map_err(|e| Error::Export(e.to_string()))
    }
}

/// Re ∫₀^∞ e^{iωt - γt} S(t) dt in closed form:
/// Σ_nm p_n |Ō_nm|² γ / (γ² + (ω + ε_n - ε_m)²). Line (n, m) peaks at
/// ω = ε_m - ε_n.
pub fn spectral_function(
    h: &HermitianOperator,
    o: &HermitianOperator,
    omega_grid: &[f64],
    gamma: f64,
    ensemble: EnsembleSpec,
) -> Result<SpectrumTable> {
    let data = TransitionData::new(h, o, ensemble)?;
    spectral_from(&data, omega_grid, gamma)
}

pub fn spectral_from(data: &TransitionData, omega_grid: &[f64], gamma: f64) -> Result<SpectrumTable> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    let e = data.energies();
    let w = data.correlation_weights();
    let mut lines = Vec::new();
    for n in 0..e.len() {
        for m in 0..e.len() {
            if w[(n, m)] > 0.0 {
                lines.push((e[n] - e[m], w[(n, m)]));
            }
        }
    }
    let values = omega_grid
        .iter()
        .map(|&omega| {
            lines
                .iter()
                .map(|&(gap, weight)| weight * gamma / (gamma * gamma + (omega + gap).powi(2)))
                .sum()
        })
        .collect();
    Ok(SpectrumTable {
        frequencies: omega_grid.to_vec(),
        values,
        gamma,
        ensemble: data.ensemble,
    })
}

/// Normalized squared matrix elements |⟨E_n|O|E_m⟩|² / Tr O².
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldenRuleWeights {
    pub energies: Vec<f64>,
    /// Row n, column m.
    pub weights: Vec<Vec<f64>>,
    /// |c_nm|² of the operational purification (O ⊗ 1)|ψ_EP⟩, reported only
    /// when it differs from `weights` by more than 1e-10 (complex inputs
    /// without time-reversal symmetry).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purified: Option<Vec<Vec<f64>>>,
}

impl GoldenRuleWeights {
    pub fn total(&self) -> f64 {
        self.weights.iter().flatten().sum()
    }
}

/// Purification weights |Σ_i ⟨E_n|i⟩⟨E_m|i*⟩ O_i|² / Tr O², computed from
/// the eigendecomposition of O.
pub fn purified_weights(h_eig: &EigenDecomposition, o: &HermitianOperator) -> Result<DMatrix<f64>> {
    let tr = o.trace_square();
    if tr <= MIN_TRACE_SQUARE {
        return Err(Error::ZeroOperator);
    }
    let o_eig = eig_hermitian(o)?;
    let v_adj = h_eig.eigenvectors.adjoint();
    let a = &v_adj * &o_eig.eigenvectors;
    let b = &v_adj * o_eig.eigenvectors.map(|z| z.conj());
    let mut scaled = a;
    for (i, mut col) in scaled.column_iter_mut().enumerate() {
        col *= Complex64::new(o_eig.eigenvalues[i], 0.0);
    }
    let c = scaled * b.transpose();
    Ok(c.map(|z| z.norm_sqr() / tr))
}

pub fn golden_rule_weights(h: &HermitianOperator, o: &HermitianOperator) -> Result<GoldenRuleWeights> {
    check_same_dim(h, o)?;
    let tr = o.trace_square();
    if tr <= MIN_TRACE_SQUARE {
        return Err(Error::ZeroOperator);
    }
    let eig = eig_hermitian(h)?;
    let elements = eig.to_eigenbasis(o.matrix());
    let d = eig.dim();
    let weights: Vec<Vec<f64>> = (0..d)
        .map(|n| (0..d).map(|m| elements[(n, m)].norm_sqr() / tr).collect())
        .collect();
    let purified = purified_weights(&eig, o)?;
    let differs = (0..d).any(|n| (0..d).any(|m| (purified[(n, m)] - weights[n][m]).abs() > 1e-10));
    Ok(GoldenRuleWeights {
        energies: eig.eigenvalues,
        weights,
        purified: differs.then(|| (0..d).map(|n| (0..d).map(|m| purified[(n, m)]).collect()).collect()),
    })
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// |A|² = 4^{-l} sin²(πδ) / sin²(πδ/2^l) with δ = Δ2^l·ΔE/2π - f.
///
/// Near δ ≡ 0 (mod 2^l) the removable singularity is evaluated as
/// (sinc(r)/sinc(r/2^l))² with r the offset from the nearest multiple.
pub fn qpe_kernel(delta_energy: f64, f: usize, l: u32, delta: f64) -> f64 {
    kernel_at(gap_position(delta_energy, l, delta) - f as f64, l)
}

/// The kernel as a function of the offset δ directly.
pub fn kernel_at(offset: f64, l: u32) -> f64 {
    let size = (1u64 << l) as f64;
    let denom = (PI * offset / size).sin();
    if denom.abs() < 1e-8 {
        let r = offset - size * (offset / size).round();
        (sinc(r) / sinc(r / size)).powi(2)
    } else {
        ((PI * offset).sin() / (size * denom)).powi(2)
    }
}

/// P(f) = Σ_nm |c_nm|² |A^f_nm|².
pub fn exact_outcome_distribution(
    h: &HermitianOperator,
    o: &HermitianOperator,
    l: u32,
    delta: f64,
    ensemble: EnsembleSpec,
) -> Result<PhaseDistribution> {
    let data = TransitionData::new(h, o, ensemble)?;
    outcome_distribution_from(&data, l, delta)
}

pub fn outcome_distribution_from(data: &TransitionData, l: u32, delta: f64) -> Result<PhaseDistribution> {
    if l == 0 || l > 30 {
        return Err(Error::InvalidParameter(format!("phase bits must lie in 1..=30, got {l}")));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    let c = data.transition_amplitudes()?;
    let e = data.energies();
    let size = 1usize << l;
    let mut probs = vec![0.0; size];
    for n in 0..e.len() {
        for m in 0..e.len() {
            let w = c[(n, m)].norm_sqr();
            if w == 0.0 {
                continue;
            }
            let x = gap_position(e[n] - e[m], l, delta);
            for (f, p) in probs.iter_mut().enumerate() {
                *p += w * kernel_at(x - f as f64, l);
            }
        }
    }
    Ok(PhaseDistribution::exact(l, delta, probs))
}

pub const LINE_FLOOR: f64 = 1e-20;

/// One spectral line: an energy gap ε_n - ε_m with its total outcome weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralLine {
    pub gap: f64,
    pub weight: f64,
}

/// Distinct gaps of the phase-estimation outcome weights |c_nm|², merged
/// when closer than `tol`, sorted by gap. Entries below [`LINE_FLOOR`]
/// (rounding noise of the eigenvector overlaps) are dropped, so weights sum
/// to 1 up to that floor.
pub fn spectral_lines(data: &TransitionData, tol: f64) -> Result<Vec<SpectralLine>> {
    let c = data.transition_amplitudes()?;
    let e = data.energies();
    let mut raw: Vec<(f64, f64)> = Vec::new();
    for n in 0..e.len() {
        for m in 0..e.len() {
            let w = c[(n, m)].norm_sqr();
            if w > LINE_FLOOR {
                raw.push((e[n] - e[m], w));
            }
        }
    }
    raw.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut lines: Vec<SpectralLine> = Vec::new();
    for (gap, w) in raw {
        match lines.last_mut() {
            Some(last) if (gap - last.gap).abs() <= tol => {
                last.gap = (last.gap * last.weight + gap * w) / (last.weight + w);
                last.weight += w;
            }
            _ => lines.push(SpectralLine { gap, weight: w }),
        }
    }
    Ok(lines)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMetric {
    TotalVariation,
    MaxAbs,
}

/// Tolerance on Σp = 1 for inputs of [`distribution_distance`].
pub const DISTANCE_NORM_TOLERANCE: f64 = 1e-9;

/// Total variation (½Σ|p - q|) or max |p - q|.
pub fn distribution_distance(p: &[f64], q: &[f64], metric: DistanceMetric) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            actual: q.len(),
        });
    }
    for v in [p, q] {
        let total: f64 = v.iter().sum();
        if (total - 1.0).abs() > DISTANCE_NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm_sqr: total });
        }
    }
    let diffs = p.iter().zip(q).map(|(a, b)| (a - b).abs());
    Ok(match metric {
        DistanceMetric::TotalVariation => 0.5 * diffs.sum::<f64>(),
        DistanceMetric::MaxAbs => diffs.fold(0.0, f64::max),
    })
}
