//! Time-bin encoding, the mutually unbiased measurement family and the
//! partial Bell measurement that drives the repeat-until-success gate.
//!
//! Each source qubit `a|0> + b|1>` is copied onto an emitted photon as
//! `a|0;E> + b|1;L>`. Measuring the photon pair in a basis that is mutually
//! unbiased with respect to `{EE, EL, LE, LL}` applies a diagonal phase gate
//! to the atoms without revealing their amplitudes. The partial Bell basis
//! used here has two maximally entangled members, which herald a CZ up to
//! local phases, and two product members, which herald a local phase flip
//! that is undone before retrying.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quantum::{
    partial_inner, Amplitude, QuantumError, StateVector, Subsystem, UnitaryMatrix, TOLERANCE,
};

/// Tolerance for comparing phase angles that may come from decimal input.
pub const ANGLE_TOLERANCE: f64 = 1e-9;

/// Name of the photon-pair subsystem in encoded registers.
pub const PHOTONS: &str = "photons";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error("phase {0} is not finite")]
    NonFinitePhase(f64),
    #[error("outcome index {0} is outside 1..=4")]
    OutcomeOutOfRange(u8),
    #[error(
        "phase triple with phi3 - phi1 - phi2 = {0} rad is neither product nor maximally entangled"
    )]
    PhaseTripleNotInProtocolFamily(f64),
    #[error("expected a normalized {expected}-dimensional single-register state")]
    MalformedInput { expected: usize },
    #[error("state is not an output of the pair encoding")]
    NotEncoded,
}

fn canonical_angle(phi: f64) -> Result<f64, ProtocolError> {
    if !phi.is_finite() {
        return Err(ProtocolError::NonFinitePhase(phi));
    }
    let r = phi.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    Ok(if r >= TAU { 0.0 } else { r })
}

/// Relative phases `(phi1, phi2, phi3)` of a mutually unbiased vector
/// `(|EE> + e^{i phi1}|EL> + e^{i phi2}|LE> + e^{i phi3}|LL>)/2`, each kept
/// in `[0, 2pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseTriple {
    phi1: f64,
    phi2: f64,
    phi3: f64,
}

impl PhaseTriple {
    pub fn new(phi1: f64, phi2: f64, phi3: f64) -> Result<Self, ProtocolError> {
        Ok(Self {
            phi1: canonical_angle(phi1)?,
            phi2: canonical_angle(phi2)?,
            phi3: canonical_angle(phi3)?,
        })
    }

    /// Reads the relative phases off a vector whose four components have
    /// equal, non-zero modulus.
    pub fn from_vector(v: &StateVector) -> Result<Self, ProtocolError> {
        let a = v.amplitudes();
        if a.len() != 4 || a[0].norm() <= TOLERANCE {
            return Err(ProtocolError::MalformedInput { expected: 4 });
        }
        let rel = |k: usize| (a[k] / a[0]).arg();
        Self::new(rel(1), rel(2), rel(3))
    }

    pub fn phi1(&self) -> f64 {
        self.phi1
    }

    pub fn phi2(&self) -> f64 {
        self.phi2
    }

    pub fn phi3(&self) -> f64 {
        self.phi3
    }

    /// `phi3 - phi1 - phi2` in `[0, 2pi)`.
    pub fn entangling_phase(&self) -> f64 {
        canonical_angle(self.phi3 - self.phi1 - self.phi2).expect("finite by construction")
    }
}

/// Index `1..=4` of a partial Bell outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct OutcomeLabel(u8);

impl OutcomeLabel {
    pub const PHI1: Self = Self(1);
    pub const PHI2: Self = Self(2);
    pub const PHI3: Self = Self(3);
    pub const PHI4: Self = Self(4);
    pub const ALL: [Self; 4] = [Self::PHI1, Self::PHI2, Self::PHI3, Self::PHI4];

    pub fn new(index: u8) -> Result<Self, ProtocolError> {
        if (1..=4).contains(&index) {
            Ok(Self(index))
        } else {
            Err(ProtocolError::OutcomeOutOfRange(index))
        }
    }

    pub fn index(self) -> u8 {
        self.0
    }

    /// Zero-based position in [`OutcomeLabel::ALL`].
    pub fn position(self) -> usize {
        usize::from(self.0 - 1)
    }

    /// Outcomes 1 and 2 herald the entangling gate.
    pub fn heralds_gate(self) -> bool {
        self.0 <= 2
    }
}

impl TryFrom<u8> for OutcomeLabel {
    type Error = ProtocolError;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<OutcomeLabel> for u8 {
    fn from(o: OutcomeLabel) -> u8 {
        o.0
    }
}

impl fmt::Display for OutcomeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Phi{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VectorKind {
    Entangled,
    Product,
}

/// The orthogonal single-photon states `x_i`, `y_i` of each source that the
/// partial Bell basis is assembled from.
#[derive(Debug, Clone, PartialEq)]
pub struct SinglePhotonStates {
    pub x1: StateVector,
    pub y1: StateVector,
    pub x2: StateVector,
    pub y2: StateVector,
}

/// Four orthonormal, mutually unbiased vectors over `{EE, EL, LE, LL}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBasis {
    vectors: [StateVector; 4],
    kinds: [VectorKind; 4],
    single_photon: SinglePhotonStates,
}

impl MeasurementBasis {
    pub fn vectors(&self) -> &[StateVector; 4] {
        &self.vectors
    }

    pub fn vector(&self, o: OutcomeLabel) -> &StateVector {
        &self.vectors[o.position()]
    }

    pub fn kind(&self, o: OutcomeLabel) -> VectorKind {
        self.kinds[o.position()]
    }

    pub fn single_photon_states(&self) -> &SinglePhotonStates {
        &self.single_photon
    }
}

fn c(re: f64, im: f64) -> Amplitude {
    Amplitude::new(re, im)
}

fn require_single_register(s: &StateVector, dim: usize) -> Result<(), ProtocolError> {
    if s.subsystems().len() != 1 || s.dim() != dim || !s.is_normalized() {
        return Err(ProtocolError::MalformedInput { expected: dim });
    }
    Ok(())
}

/// `a|0> + b|1>  ->  a|0;E> + b|1;L>` for one source and its photon.
pub fn encode_single(s: &StateVector) -> Result<StateVector, ProtocolError> {
    require_single_register(s, 2)?;
    let a = s.amplitudes();
    let zero = c(0.0, 0.0);
    Ok(StateVector::from_parts(
        vec![s.subsystems()[0].clone(), Subsystem::time_bin("photon")],
        vec![a[0], zero, zero, a[1]],
    )?)
}

/// Copies each two-qubit amplitude `c_xy` onto `|xy; B(x)B(y)>` with
/// `B(0) = E`, `B(1) = L`. The atom register keeps the input's subsystem.
pub fn encode_pair(s: &StateVector) -> Result<StateVector, ProtocolError> {
    require_single_register(s, 4)?;
    let zero = c(0.0, 0.0);
    let mut amplitudes = vec![zero; 16];
    for (k, a) in s.amplitudes().iter().enumerate() {
        amplitudes[k * 4 + k] = *a;
    }
    Ok(StateVector::from_parts(
        vec![s.subsystems()[0].clone(), Subsystem::photon_pair()],
        amplitudes,
    )?)
}

/// `(|EE> + e^{i phi1}|EL> + e^{i phi2}|LE> + e^{i phi3}|LL>)/2`.
pub fn mub_vector(p: &PhaseTriple) -> StateVector {
    let amplitudes = vec![
        c(0.5, 0.0),
        Amplitude::from_polar(0.5, p.phi1),
        Amplitude::from_polar(0.5, p.phi2),
        Amplitude::from_polar(0.5, p.phi3),
    ];
    StateVector::new(Subsystem::photon_pair(), amplitudes).expect("four amplitudes")
}

/// The atomic phase gate `diag(1, e^{-i phi1}, e^{-i phi2}, e^{-i phi3})`
/// enacted by detecting [`mub_vector`]`(p)`.
pub fn u_phase(p: &PhaseTriple) -> UnitaryMatrix {
    UnitaryMatrix::diagonal(&[
        c(1.0, 0.0),
        Amplitude::from_polar(1.0, -p.phi1),
        Amplitude::from_polar(1.0, -p.phi2),
        Amplitude::from_polar(1.0, -p.phi3),
    ])
    .expect("unit-modulus diagonal")
}

/// `true` for the maximally entangled family (`phi3 = phi1 + phi2 + pi`),
/// `false` for the product family (`phi3 = phi1 + phi2`).
pub fn is_entangling(p: &PhaseTriple) -> Result<bool, ProtocolError> {
    let delta = p.entangling_phase();
    if (delta - PI).abs() <= ANGLE_TOLERANCE {
        Ok(true)
    } else if delta <= ANGLE_TOLERANCE || TAU - delta <= ANGLE_TOLERANCE {
        Ok(false)
    } else {
        Err(ProtocolError::PhaseTripleNotInProtocolFamily(delta))
    }
}

/// `Z(phi) = diag(1, e^{-i phi})` on one qubit.
pub fn z_rotation(phi: f64) -> UnitaryMatrix {
    UnitaryMatrix::diagonal(&[c(1.0, 0.0), Amplitude::from_polar(1.0, -phi)])
        .expect("unit-modulus diagonal")
}

/// `Z_1(phi1) ⊗ Z_2(phi2)` on the atom pair.
pub fn local_z(phi1: f64, phi2: f64) -> UnitaryMatrix {
    z_rotation(phi1)
        .kron(&z_rotation(phi2))
        .expect("4x4 fits in a register")
}

/// The target gate `diag(1, 1, 1, -1)`.
pub fn controlled_z() -> UnitaryMatrix {
    UnitaryMatrix::diagonal(&[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)])
        .expect("unit-modulus diagonal")
}

/// Partial Bell basis built from
/// `x1 = x2 = (E + L)/sqrt2`, `y1 = (E - L)/sqrt2`, `y2 = i(E - L)/sqrt2` as
/// `Phi_{1,2} = (x1 y2 ± y1 x2)/sqrt2`, `Phi_3 = x1 x2`, `Phi_4 = y1 y2`.
pub fn partial_bell_basis() -> MeasurementBasis {
    let h = FRAC_1_SQRT_2;
    let photon = |name: &str, e: Amplitude, l: Amplitude| {
        StateVector::new(Subsystem::time_bin(name), vec![e, l]).expect("two amplitudes")
    };
    let single_photon = SinglePhotonStates {
        x1: photon("photon1", c(h, 0.0), c(h, 0.0)),
        y1: photon("photon1", c(h, 0.0), c(-h, 0.0)),
        x2: photon("photon2", c(h, 0.0), c(h, 0.0)),
        y2: photon("photon2", c(0.0, h), c(0.0, -h)),
    };

    // Two-photon product in the EE, EL, LE, LL order.
    let pair = |a: &StateVector, b: &StateVector| -> Vec<Amplitude> {
        a.amplitudes()
            .iter()
            .flat_map(|x| b.amplitudes().iter().map(move |y| x * y))
            .collect()
    };
    let combine = |u: Vec<Amplitude>, v: Vec<Amplitude>, sign: f64| -> Vec<Amplitude> {
        u.iter().zip(&v).map(|(p, q)| (p + q * sign) * h).collect()
    };
    let s = &single_photon;
    let amps = [
        combine(pair(&s.x1, &s.y2), pair(&s.y1, &s.x2), 1.0),
        combine(pair(&s.x1, &s.y2), pair(&s.y1, &s.x2), -1.0),
        pair(&s.x1, &s.x2),
        pair(&s.y1, &s.y2),
    ];
    let vectors = amps.map(|a| StateVector::new(Subsystem::photon_pair(), a).expect("4 amps"));
    MeasurementBasis {
        vectors,
        kinds: [
            VectorKind::Entangled,
            VectorKind::Entangled,
            VectorKind::Product,
            VectorKind::Product,
        ],
        single_photon,
    }
}

/// One term of the encoded state's expansion in the partial Bell basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DecomposedOutcome {
    pub outcome: OutcomeLabel,
    pub probability: f64,
    /// Normalized atomic state after detecting `outcome`, global phase
    /// removed with [`StateVector::phase_canonical`].
    pub residual: StateVector,
    /// `2 <Phi_i|psi_enc>`, carrying the physical global phase. The encoded
    /// state equals `(1/2) Σ weighted_i ⊗ Phi_i`.
    pub weighted: StateVector,
}

/// Splits an [`encode_pair`] output into its four measurement branches.
pub fn decompose(enc: &StateVector) -> Result<Vec<DecomposedOutcome>, ProtocolError> {
    decompose_in(&partial_bell_basis(), enc)
}

pub fn decompose_in(
    basis: &MeasurementBasis,
    enc: &StateVector,
) -> Result<Vec<DecomposedOutcome>, ProtocolError> {
    require_encoded(enc)?;
    OutcomeLabel::ALL
        .iter()
        .map(|&outcome| {
            let projected = partial_inner(basis.vector(outcome), enc, PHOTONS)?;
            let probability = projected.norm_sqr();
            let residual = projected.normalized()?.phase_canonical();
            Ok(DecomposedOutcome {
                outcome,
                probability,
                residual,
                weighted: projected.scaled(c(2.0, 0.0)),
            })
        })
        .collect()
}

fn require_encoded(enc: &StateVector) -> Result<(), ProtocolError> {
    let subsystems = enc.subsystems();
    if subsystems.len() != 2
        || subsystems[0].dim() != 4
        || subsystems[1] != Subsystem::photon_pair()
        || !enc.is_normalized()
    {
        return Err(ProtocolError::NotEncoded);
    }
    let off_diagonal = enc
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(k, _)| k / 4 != k % 4)
        .any(|(_, a)| a.norm() > TOLERANCE);
    if off_diagonal {
        return Err(ProtocolError::NotEncoded);
    }
    Ok(())
}

/// Local correction for a heralded outcome and whether the gate completed.
///
/// Outcome 1 leaves `Z_1(pi/2) Z_2(-pi/2) CZ psi`, outcome 2 leaves
/// `Z_1(-pi/2) Z_2(pi/2) CZ psi`; the correction inverts the local phases.
/// Outcome 3 leaves `psi` untouched and outcome 4 leaves `Z_1(pi) Z_2(pi) psi`.
pub fn correction_unitary(o: OutcomeLabel) -> (UnitaryMatrix, bool) {
    match o.index() {
        1 => (local_z(-PI / 2.0, PI / 2.0), true),
        2 => (local_z(PI / 2.0, -PI / 2.0), true),
        3 => (UnitaryMatrix::identity(4), false),
        _ => (local_z(PI, PI), false),
    }
}

/// `d0 d3 / (d1 d2)` of a diagonal two-qubit gate: `1` for a product of
/// local phase gates, `-1` when the gate is CZ up to local phases.
pub fn nonlocal_phase_invariant(u: &UnitaryMatrix) -> Option<Amplitude> {
    if u.dim() != 4 || !u.is_diagonal() {
        return None;
    }
    let d = u.diagonal_entries();
    Some(d[0] * d[3] / (d[1] * d[2]))
}
