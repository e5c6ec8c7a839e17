//! Spin-1/2 chain models as Pauli sums, compiled to dense matrices, and
//! synthetic diagonal observables with prescribed eigenvalue laws.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simcore::HermitianOperator;

/// Largest chain length accepted by the dense compiler. Two copies of an
/// 11-site chain already use 22 qubits.
pub const MAX_SITES: usize = 11;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// coefficient · P_0 ⊗ P_1 ⊗ ... ⊗ P_{N-1}, site 0 most significant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTerm", into = "RawTerm")]
pub struct PauliTerm {
    pub coefficient: f64,
    pub factors: Vec<Pauli>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTerm {
    coefficient: f64,
    paulis: String,
}

impl TryFrom<RawTerm> for PauliTerm {
    type Error = String;

    fn try_from(raw: RawTerm) -> std::result::Result<Self, Self::Error> {
        let factors = raw
            .paulis
            .chars()
            .map(|c| Pauli::from_char(c).ok_or_else(|| format!("invalid Pauli label {c:?}")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if !raw.coefficient.is_finite() {
            return Err("coefficient must be finite".into());
        }
        Ok(PauliTerm {
            coefficient: raw.coefficient,
            factors,
        })
    }
}

impl From<PauliTerm> for RawTerm {
    fn from(term: PauliTerm) -> Self {
        RawTerm {
            coefficient: term.coefficient,
            paulis: term.factors.iter().map(|p| p.as_char()).collect(),
        }
    }
}

impl PauliTerm {
    pub fn new(coefficient: f64, factors: Vec<Pauli>) -> Self {
        Self { coefficient, factors }
    }

    /// Term with `pauli` on each listed site and identity elsewhere.
    pub fn on_sites(coefficient: f64, num_sites: usize, sites: &[(usize, Pauli)]) -> Self {
        let mut factors = vec![Pauli::I; num_sites];
        for &(site, p) in sites {
            factors[site] = p;
        }
        Self { coefficient, factors }
    }

    /// Parses a label such as `"ZZI"`.
    pub fn parse(coefficient: f64, label: &str) -> Result<Self> {
        RawTerm {
            coefficient,
            paulis: label.to_string(),
        }
        .try_into()
        .map_err(Error::InvalidParameter)
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*", self.coefficient)?;
        for p in &self.factors {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

/// Symbolic Hamiltonian or observable on an N-site chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default)]
    pub name: String,
    pub n: usize,
    pub terms: Vec<PauliTerm>,
}

impl ModelSpec {
    pub fn new(name: impl Into<String>, n: usize, terms: Vec<PauliTerm>) -> Self {
        Self {
            name: name.into(),
            n,
            terms,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("model needs at least one site".into()));
        }
        if self.n > MAX_SITES {
            return Err(Error::QubitCapExceeded {
                requested: 2 * self.n,
                cap: 2 * MAX_SITES,
            });
        }
        if self.terms.is_empty() {
            return Err(Error::InvalidParameter(format!("model {:?} has no terms", self.name)));
        }
        for term in &self.terms {
            if term.factors.len() != self.n {
                return Err(Error::InvalidParameter(format!(
                    "term {term} has {} factors, expected {}",
                    term.factors.len(),
                    self.n
                )));
            }
            if !term.coefficient.is_finite() {
                return Err(Error::InvalidParameter(format!("term {term} has a non-finite coefficient")));
            }
        }
        Ok(())
    }
}

/// Dense matrix of a bare Pauli string.
///
/// Uses the permutation-with-phase structure: column c maps to row c ^ xmask
/// with phase i^{#Y} (-1)^{popcount(c & (zmask | ymask))}.
pub fn pauli_string_matrix(factors: &[Pauli]) -> DMatrix<Complex64> {
    let n = factors.len();
    let dim = 1usize << n;
    let (mut xmask, mut zmask, mut num_y) = (0usize, 0usize, 0u32);
    for (site, p) in factors.iter().enumerate() {
        let bit = 1usize << (n - 1 - site);
        match p {
            Pauli::I => {}
            Pauli::X => xmask |= bit,
            Pauli::Y => {
                xmask |= bit;
                zmask |= bit;
                num_y += 1;
            }
            Pauli::Z => zmask |= bit,
        }
    }
    let y_phase = Complex64::i().powu(num_y);
    let mut m = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let sign = if (col & zmask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        m[(col ^ xmask, col)] = y_phase * sign;
    }
    m
}

/// Sum of the compiled terms.
pub fn build_operator(spec: &ModelSpec) -> Result<HermitianOperator> {
    spec.validate()?;
    let dim = 1usize << spec.n;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for term in &spec.terms {
        m += pauli_string_matrix(&term.factors) * Complex64::new(term.coefficient, 0.0);
    }
    HermitianOperator::new(m)
}

fn check_sites(n: usize) -> Result<()> {
    if n == 0 || n > MAX_SITES {
        return Err(Error::InvalidParameter(format!("site count {n} outside 1..={MAX_SITES}")));
    }
    Ok(())
}

/// Σ_i σ^z_i: diagonal with entry N - 2·popcount(b) for bitstring b.
pub fn total_magnetization(n: usize) -> Result<HermitianOperator> {
    check_sites(n)?;
    let values: Vec<f64> = (0..1usize << n)
        .map(|b| n as f64 - 2.0 * b.count_ones() as f64)
        .collect();
    HermitianOperator::diagonal(&values)
}

pub fn total_magnetization_spec(n: usize) -> ModelSpec {
    let terms = (0..n).map(|i| PauliTerm::on_sites(1.0, n, &[(i, Pauli::Z)])).collect();
    ModelSpec::new("total_sz", n, terms)
}

/// σ^z on one site.
pub fn single_site_z_spec(n: usize, site: usize) -> Result<ModelSpec> {
    if site >= n {
        return Err(Error::InvalidParameter(format!("site {site} outside a {n}-site chain")));
    }
    Ok(ModelSpec::new(
        format!("single_sz:{site}"),
        n,
        vec![PauliTerm::on_sites(1.0, n, &[(site, Pauli::Z)])],
    ))
}

/// Σ_i (-1)^i σ^z_i.
pub fn staggered_z_spec(n: usize) -> ModelSpec {
    let terms = (0..n)
        .map(|i| PauliTerm::on_sites(if i % 2 == 0 { 1.0 } else { -1.0 }, n, &[(i, Pauli::Z)]))
        .collect();
    ModelSpec::new("staggered_sz", n, terms)
}

/// Open-chain Ising model with transverse and longitudinal fields:
/// J Σ Z_i Z_{i+1} + g Σ X_i + h Σ Z_i. Nonintegrable for g, h ≠ 0.
pub fn tilted_ising_spec(n: usize, j: f64, g: f64, h: f64) -> ModelSpec {
    let mut terms = Vec::new();
    for i in 0..n.saturating_sub(1) {
        terms.push(PauliTerm::on_sites(j, n, &[(i, Pauli::Z), (i + 1, Pauli::Z)]));
    }
    for i in 0..n {
        terms.push(PauliTerm::on_sites(g, n, &[(i, Pauli::X)]));
    }
    if h != 0.0 {
        for i in 0..n {
            terms.push(PauliTerm::on_sites(h, n, &[(i, Pauli::Z)]));
        }
    }
    ModelSpec::new(format!("tilted_ising(J={j},g={g},h={h})"), n, terms)
}

/// Isotropic open Heisenberg chain J Σ (XX + YY + ZZ).
pub fn heisenberg_spec(n: usize, j: f64) -> ModelSpec {
    let mut terms = Vec::new();
    for i in 0..n.saturating_sub(1) {
        for p in [Pauli::X, Pauli::Y, Pauli::Z] {
            terms.push(PauliTerm::on_sites(j, n, &[(i, p), (i + 1, p)]));
        }
    }
    ModelSpec::new(format!("heisenberg(J={j})"), n, terms)
}

/// Eigenvalue law for synthetic observables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionKind {
    /// Wigner semicircle of radius R.
    Semicircle,
    /// Uniform on [-a, a].
    Uniform,
    /// Arcsine law on [-a, a].
    Arcsine,
    /// Centered normal with standard deviation σ.
    Gaussian,
}

impl DistributionKind {
    pub const ALL: [DistributionKind; 4] = [
        DistributionKind::Semicircle,
        DistributionKind::Uniform,
        DistributionKind::Arcsine,
        DistributionKind::Gaussian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DistributionKind::Semicircle => "semicircle",
            DistributionKind::Uniform => "uniform",
            DistributionKind::Arcsine => "arcsine",
            DistributionKind::Gaussian => "gaussian",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenvalueDistribution {
    pub kind: DistributionKind,
    pub parameter: f64,
}

impl EigenvalueDistribution {
    pub fn new(kind: DistributionKind, parameter: f64) -> Result<Self> {
        let dist = Self { kind, parameter };
        dist.validate()?;
        Ok(dist)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.parameter > 0.0 && self.parameter.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "{} parameter must be positive, got {}",
                self.kind.name(),
                self.parameter
            )));
        }
        Ok(())
    }

    /// Analytic second and fourth moments (all odd moments vanish).
    pub fn analytic_moments(&self) -> (f64, f64) {
        let p2 = self.parameter * self.parameter;
        match self.kind {
            DistributionKind::Semicircle => (p2 / 4.0, p2 * p2 / 8.0),
            DistributionKind::Uniform => (p2 / 3.0, p2 * p2 / 5.0),
            DistributionKind::Arcsine => (p2 / 2.0, 3.0 * p2 * p2 / 8.0),
            DistributionKind::Gaussian => (p2, 3.0 * p2 * p2),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let a = self.parameter;
        match self.kind {
            DistributionKind::Semicircle => loop {
                let x: f64 = rng.random_range(-1.0..1.0);
                let y: f64 = rng.random_range(-1.0..1.0);
                if x * x + y * y <= 1.0 {
                    break a * x;
                }
            },
            DistributionKind::Uniform => a * rng.random_range(-1.0..1.0),
            DistributionKind::Arcsine => a * (std::f64::consts::PI * rng.random::<f64>()).cos(),
            DistributionKind::Gaussian => Normal::new(0.0, a).expect("validated sigma").sample(rng),
        }
    }
}

/// 2^N i.i.d. draws from `dist`, shifted to zero mean.
pub fn synthetic_eigenvalues(dist: &EigenvalueDistribution, n: usize, seed: u64) -> Result<Vec<f64>> {
    dist.validate()?;
    check_sites(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values: Vec<f64> = (0..1usize << n).map(|_| dist.sample(&mut rng)).collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    for v in &mut values {
        *v -= mean;
    }
    Ok(values)
}

/// Diagonal traceless observable with the eigenvalues of [`synthetic_eigenvalues`].
pub fn synthetic_diagonal_observable(dist: &EigenvalueDistribution, n: usize, seed: u64) -> Result<HermitianOperator> {
    HermitianOperator::diagonal(&synthetic_eigenvalues(dist, n, seed)?)
}
