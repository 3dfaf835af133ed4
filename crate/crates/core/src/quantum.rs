//! Dense complex linear algebra over small labeled tensor-product registers.
//!
//! A [`StateVector`] is a list of amplitudes over the product basis of one or
//! more named [`Subsystem`]s. The first subsystem is the most significant
//! digit of the flat index, so basis order is lexicographic in the subsystem
//! labels: `00;EE, 00;EL, ..., 11;LL`. Composite labels join the per-subsystem
//! labels with `;`.
//!
//! Registers are tiny (at most [`MAX_REGISTER_DIM`] amplitudes) and every
//! value is immutable after construction.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Complex amplitude of a basis state or matrix entry.
pub type Amplitude = Complex64;

/// Global tolerance for exact-algebra checks.
pub const TOLERANCE: f64 = 1e-12;

/// Largest number of amplitudes a register may hold.
pub const MAX_REGISTER_DIM: usize = 16;

/// Below this probability a projection is treated as having no overlap.
pub const NULL_PROBABILITY: f64 = 1e-24;

const LABEL_SEPARATOR: &str = ";";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("register dimension {dim} exceeds the maximum of {max}")]
    DimensionOverflow { dim: usize, max: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("states are expressed in different bases")]
    BasisMismatch,
    #[error("unknown subsystem `{0}`")]
    UnknownSubsystem(String),
    #[error("subsystem `{0}` appears twice in one register")]
    DuplicateSubsystem(String),
    #[error("basis label `{0}` is not unique")]
    DuplicateLabel(String),
    #[error("subsystem `{0}` has no basis labels")]
    EmptySubsystem(String),
    #[error("state is not normalized (norm squared = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("non-finite amplitude")]
    NonFinite,
    #[error("matrix is not unitary (max |U^dag U - I| = {defect:e})")]
    NotUnitary { defect: f64 },
    #[error("basis index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
}

/// A named tensor factor with its ordered local basis labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Subsystem {
    name: String,
    labels: Vec<String>,
}

impl Subsystem {
    pub fn new<N, L, S>(name: N, labels: L) -> Result<Self, QuantumError>
    where
        N: Into<String>,
        L: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let name = name.into();
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(QuantumError::EmptySubsystem(name));
        }
        if labels.len() > MAX_REGISTER_DIM {
            return Err(QuantumError::DimensionOverflow {
                dim: labels.len(),
                max: MAX_REGISTER_DIM,
            });
        }
        for (i, label) in labels.iter().enumerate() {
            if labels[..i].contains(label) {
                return Err(QuantumError::DuplicateLabel(label.clone()));
            }
        }
        Ok(Self { name, labels })
    }

    /// A qubit with basis `0, 1`.
    pub fn qubit(name: &str) -> Self {
        Self::new(name, ["0", "1"]).expect("static labels")
    }

    /// A single photon in an early or late time bin.
    pub fn time_bin(name: &str) -> Self {
        Self::new(name, ["E", "L"]).expect("static labels")
    }

    /// The two stationary qubits held by the photon sources.
    pub fn atom_pair() -> Self {
        Self::new("atoms", ["00", "01", "10", "11"]).expect("static labels")
    }

    /// The two emitted time-bin photons.
    pub fn photon_pair() -> Self {
        Self::new("photons", ["EE", "EL", "LE", "LL"]).expect("static labels")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }
}

/// Amplitudes over the product basis of one or more subsystems.
///
/// Normalization is not enforced at construction; operations that need a
/// normalized input check it themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    subsystems: Vec<Subsystem>,
    labels: Vec<String>,
    amplitudes: Vec<Amplitude>,
}

impl StateVector {
    /// State on a single subsystem.
    pub fn new(subsystem: Subsystem, amplitudes: Vec<Amplitude>) -> Result<Self, QuantumError> {
        Self::from_parts(vec![subsystem], amplitudes)
    }

    /// State on an ordered list of subsystems; `amplitudes` follows the
    /// lexicographic product order.
    pub fn from_parts(
        subsystems: Vec<Subsystem>,
        amplitudes: Vec<Amplitude>,
    ) -> Result<Self, QuantumError> {
        for (i, s) in subsystems.iter().enumerate() {
            if subsystems[..i].iter().any(|t| t.name == s.name) {
                return Err(QuantumError::DuplicateSubsystem(s.name.clone()));
            }
        }
        let dim = subsystems.iter().map(Subsystem::dim).product::<usize>();
        if dim > MAX_REGISTER_DIM {
            return Err(QuantumError::DimensionOverflow {
                dim,
                max: MAX_REGISTER_DIM,
            });
        }
        if amplitudes.len() != dim {
            return Err(QuantumError::DimensionMismatch {
                expected: dim,
                found: amplitudes.len(),
            });
        }
        if amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(QuantumError::NonFinite);
        }
        let labels = product_labels(&subsystems);
        Ok(Self {
            subsystems,
            labels,
            amplitudes,
        })
    }

    /// Computational basis state `index` of a single subsystem.
    pub fn basis_state(subsystem: Subsystem, index: usize) -> Result<Self, QuantumError> {
        let dim = subsystem.dim();
        if index >= dim {
            return Err(QuantumError::IndexOutOfRange { index, dim });
        }
        let mut amplitudes = vec![Amplitude::new(0.0, 0.0); dim];
        amplitudes[index] = Amplitude::new(1.0, 0.0);
        Self::new(subsystem, amplitudes)
    }

    /// Haar-distributed state drawn as a normalized vector of complex
    /// standard Gaussians.
    pub fn random<R: Rng + ?Sized>(subsystem: Subsystem, rng: &mut R) -> Self {
        loop {
            let amplitudes: Vec<Amplitude> = (0..subsystem.dim())
                .map(|_| Amplitude::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            let state = Self::new(subsystem.clone(), amplitudes).expect("dimension checked");
            if let Ok(normalized) = state.normalized() {
                return normalized;
            }
        }
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn subsystem(&self, name: &str) -> Option<&Subsystem> {
        self.subsystems.iter().find(|s| s.name == name)
    }

    pub fn basis_labels(&self) -> &[String] {
        &self.labels
    }

    pub fn amplitudes(&self) -> &[Amplitude] {
        &self.amplitudes
    }

    pub fn amplitude(&self, label: &str) -> Option<Amplitude> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.amplitudes[i])
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= TOLERANCE
    }

    pub(crate) fn require_normalized(&self) -> Result<(), QuantumError> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(QuantumError::NotNormalized {
                norm_sqr: self.norm_sqr(),
            })
        }
    }

    pub fn normalized(&self) -> Result<Self, QuantumError> {
        let norm = self.norm_sqr().sqrt();
        if norm <= NULL_PROBABILITY.sqrt() {
            return Err(QuantumError::ZeroNorm);
        }
        Ok(self.scaled(Amplitude::new(1.0 / norm, 0.0)))
    }

    pub fn scaled(&self, factor: Amplitude) -> Self {
        Self {
            subsystems: self.subsystems.clone(),
            labels: self.labels.clone(),
            amplitudes: self.amplitudes.iter().map(|a| a * factor).collect(),
        }
    }

    /// Componentwise sum of two states over the same basis.
    pub fn add(&self, other: &Self) -> Result<Self, QuantumError> {
        self.require_same_basis(other)?;
        Ok(Self {
            subsystems: self.subsystems.clone(),
            labels: self.labels.clone(),
            amplitudes: self
                .amplitudes
                .iter()
                .zip(&other.amplitudes)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Largest componentwise modulus of `self - other`.
    pub fn max_deviation(&self, other: &Self) -> Result<f64, QuantumError> {
        self.require_same_basis(other)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Same ray, with the first non-negligible amplitude made real and
    /// positive.
    pub fn phase_canonical(&self) -> Self {
        match self.amplitudes.iter().find(|a| a.norm() > 1e-9) {
            Some(lead) => self.scaled(lead.conj() / lead.norm()),
            None => self.clone(),
        }
    }

    fn require_same_basis(&self, other: &Self) -> Result<(), QuantumError> {
        if self.subsystems == other.subsystems {
            Ok(())
        } else {
            Err(QuantumError::BasisMismatch)
        }
    }
}

impl fmt::Display for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (label, a) in self.labels.iter().zip(&self.amplitudes) {
            if a.norm() <= TOLERANCE {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            write!(f, "({:.6}{:+.6}i)|{}>", a.re, a.im, label)?;
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

fn product_labels(subsystems: &[Subsystem]) -> Vec<String> {
    subsystems.iter().fold(vec![String::new()], |acc, s| {
        acc.iter()
            .flat_map(|prefix| {
                s.labels.iter().map(move |l| {
                    if prefix.is_empty() {
                        l.clone()
                    } else {
                        format!("{prefix}{LABEL_SEPARATOR}{l}")
                    }
                })
            })
            .collect()
    })
}

/// Square matrix satisfying `U^dag U = I` within [`TOLERANCE`]. Row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    dim: usize,
    entries: Vec<Amplitude>,
}

impl UnitaryMatrix {
    pub fn new(dim: usize, entries: Vec<Amplitude>) -> Result<Self, QuantumError> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(QuantumError::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        if entries.iter().any(|a| !a.is_finite()) {
            return Err(QuantumError::NonFinite);
        }
        let m = Self { dim, entries };
        let defect = m.unitarity_defect();
        if defect > TOLERANCE {
            return Err(QuantumError::NotUnitary { defect });
        }
        Ok(m)
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![Amplitude::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = Amplitude::new(1.0, 0.0);
        }
        Self { dim, entries }
    }

    pub fn diagonal(diag: &[Amplitude]) -> Result<Self, QuantumError> {
        let dim = diag.len();
        let mut entries = vec![Amplitude::new(0.0, 0.0); dim * dim];
        for (i, d) in diag.iter().enumerate() {
            entries[i * dim + i] = *d;
        }
        Self::new(dim, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> Amplitude {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[Amplitude] {
        &self.entries
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let entries = (0..n * n)
            .map(|k| self.entries[(k % n) * n + k / n].conj())
            .collect();
        Self { dim: n, entries }
    }

    /// Matrix product `self * rhs`.
    pub fn compose(&self, rhs: &Self) -> Result<Self, QuantumError> {
        if self.dim != rhs.dim {
            return Err(QuantumError::DimensionMismatch {
                expected: self.dim,
                found: rhs.dim,
            });
        }
        Ok(Self {
            dim: self.dim,
            entries: matmul(self.dim, &self.entries, &rhs.entries),
        })
    }

    /// Kronecker product; `self` acts on the more significant factor.
    pub fn kron(&self, rhs: &Self) -> Result<Self, QuantumError> {
        let dim = self.dim * rhs.dim;
        if dim > MAX_REGISTER_DIM {
            return Err(QuantumError::DimensionOverflow {
                dim,
                max: MAX_REGISTER_DIM,
            });
        }
        let mut entries = Vec::with_capacity(dim * dim);
        for row in 0..dim {
            for col in 0..dim {
                entries.push(
                    self.entry(row / rhs.dim, col / rhs.dim)
                        * rhs.entry(row % rhs.dim, col % rhs.dim),
                );
            }
        }
        Ok(Self { dim, entries })
    }

    /// `max |U^dag U - I|` over all entries.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim;
        let product = matmul(n, &self.adjoint().entries, &self.entries);
        product
            .iter()
            .enumerate()
            .map(|(k, z)| {
                let target = if k / n == k % n { 1.0 } else { 0.0 };
                (z - target).norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim;
        self.entries
            .iter()
            .enumerate()
            .all(|(k, z)| k / n == k % n || z.norm() <= TOLERANCE)
    }

    pub fn diagonal_entries(&self) -> Vec<Amplitude> {
        (0..self.dim).map(|i| self.entry(i, i)).collect()
    }
}

fn matmul(n: usize, a: &[Amplitude], b: &[Amplitude]) -> Vec<Amplitude> {
    let mut out = vec![Amplitude::new(0.0, 0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

/// `a ⊗ b`: subsystems concatenated, amplitudes multiplied.
pub fn tensor(a: &StateVector, b: &StateVector) -> Result<StateVector, QuantumError> {
    let mut subsystems = a.subsystems.clone();
    subsystems.extend(b.subsystems.iter().cloned());
    let dim = a.dim() * b.dim();
    if dim > MAX_REGISTER_DIM {
        return Err(QuantumError::DimensionOverflow {
            dim,
            max: MAX_REGISTER_DIM,
        });
    }
    let amplitudes = a
        .amplitudes
        .iter()
        .flat_map(|x| b.amplitudes.iter().map(move |y| x * y))
        .collect();
    StateVector::from_parts(subsystems, amplitudes)
}

pub fn apply(u: &UnitaryMatrix, s: &StateVector) -> Result<StateVector, QuantumError> {
    if u.dim != s.dim() {
        return Err(QuantumError::DimensionMismatch {
            expected: u.dim,
            found: s.dim(),
        });
    }
    let n = u.dim;
    let amplitudes = (0..n)
        .map(|row| {
            (0..n)
                .map(|col| u.entries[row * n + col] * s.amplitudes[col])
                .sum()
        })
        .collect();
    Ok(StateVector {
        subsystems: s.subsystems.clone(),
        labels: s.labels.clone(),
        amplitudes,
    })
}

/// `<a|b>`, conjugate-linear in `a`.
pub fn inner(a: &StateVector, b: &StateVector) -> Result<Amplitude, QuantumError> {
    a.require_same_basis(b)?;
    Ok(a.amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// Unnormalized `(<measured| ⊗ I)|joint>` over the named subsystem.
///
/// `measured` must live on exactly that subsystem; the result lives on the
/// remaining subsystems of `joint`, in their original order.
pub fn partial_inner(
    measured: &StateVector,
    joint: &StateVector,
    subsystem: &str,
) -> Result<StateVector, QuantumError> {
    let position = joint
        .subsystems
        .iter()
        .position(|s| s.name == subsystem)
        .ok_or_else(|| QuantumError::UnknownSubsystem(subsystem.to_owned()))?;
    if measured.subsystems.len() != 1 || measured.subsystems[0] != joint.subsystems[position] {
        return Err(QuantumError::BasisMismatch);
    }
    let rest: Vec<Subsystem> = joint
        .subsystems
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != position)
        .map(|(_, s)| s.clone())
        .collect();
    if rest.is_empty() {
        return Err(QuantumError::UnknownSubsystem(format!(
            "{subsystem} (no remaining subsystem)"
        )));
    }

    let dims: Vec<usize> = joint.subsystems.iter().map(Subsystem::dim).collect();
    let rest_dim: usize = rest.iter().map(Subsystem::dim).product();
    let mut residual = vec![Amplitude::new(0.0, 0.0); rest_dim];
    for (flat, amp) in joint.amplitudes.iter().enumerate() {
        let mut digits = vec![0usize; dims.len()];
        let mut rem = flat;
        for k in (0..dims.len()).rev() {
            digits[k] = rem % dims[k];
            rem /= dims[k];
        }
        let measured_index = digits[position];
        let rest_index = digits
            .iter()
            .zip(&dims)
            .enumerate()
            .filter(|(k, _)| *k != position)
            .fold(0, |acc, (_, (d, n))| acc * n + d);
        residual[rest_index] += measured.amplitudes[measured_index].conj() * amp;
    }
    StateVector::from_parts(rest, residual)
}

/// Outcome of projecting one subsystem onto a measured vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub probability: f64,
    /// Normalized post-measurement state of the remaining subsystems, or
    /// `None` when the overlap vanishes.
    pub residual: Option<StateVector>,
}

pub fn project_partial(
    measured: &StateVector,
    joint: &StateVector,
    subsystem: &str,
) -> Result<Projection, QuantumError> {
    measured.require_normalized()?;
    let unnormalized = partial_inner(measured, joint, subsystem)?;
    let probability = unnormalized.norm_sqr();
    if probability <= NULL_PROBABILITY {
        return Ok(Projection {
            probability: 0.0,
            residual: None,
        });
    }
    Ok(Projection {
        probability,
        residual: Some(unnormalized.scaled(Amplitude::new(1.0 / probability.sqrt(), 0.0))),
    })
}

/// `|<a|b>|^2`, insensitive to a global phase on either argument.
pub fn fidelity_up_to_global_phase(a: &StateVector, b: &StateVector) -> Result<f64, QuantumError> {
    a.require_normalized()?;
    b.require_normalized()?;
    Ok(inner(a, b)?.norm_sqr().clamp(0.0, 1.0))
}
