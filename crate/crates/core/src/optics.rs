//! Two-photon linear optics: Fock states, mode unitaries and the two
//! detector layouts that realize the partial Bell measurement.
//!
//! A mode unitary acts on creation operators as `a_n^† -> Σ_m U[m][n] b_m^†`.
//! For two photons the amplitude of an output configuration is the permanent
//! of the 2x2 submatrix picked out by the output rows and input columns,
//! divided by `sqrt(Π n_in! Π n_out!)`.
//!
//! Detector ids are zero-based mode indices. For the multiport they are the
//! output ports `1..=4` shifted down by one; for the beam-splitter layout they
//! are `[A_h, A_v, B_h, B_v]` (port A/B, horizontal/vertical polarization).

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use thiserror::Error;

use crate::protocol::{partial_bell_basis, OutcomeLabel};
use crate::quantum::{
    inner, Amplitude, QuantumError, StateVector, Subsystem, UnitaryMatrix, NULL_PROBABILITY,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpticsError {
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error("expected exactly 2 photons, found {0}")]
    PhotonNumber(u32),
    #[error("state has {found} modes but the network has {expected}")]
    ModeCountMismatch { expected: usize, found: usize },
    #[error("only the 4x4 Bell multiport is supported (requested {0})")]
    UnsupportedSize(usize),
    #[error("click pattern accounts for fewer than two photons")]
    LossyPattern,
    #[error("click pattern {0} has zero amplitude for every measurement outcome")]
    UnreachablePattern(ClickPattern),
    #[error("click pattern has {found} detectors, expected {expected}")]
    DetectorCount { expected: usize, found: usize },
    #[error("input must be a normalized state of the photon pair")]
    NotPhotonPair,
}

/// Occupation numbers of each optical mode.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockState {
    occupations: Vec<u8>,
}

impl FockState {
    pub fn new(occupations: Vec<u8>) -> Self {
        Self { occupations }
    }

    /// `Π_k a_{modes[k]}^† |vac>` over `mode_count` modes, up to Fock
    /// normalization.
    pub fn from_modes(mode_count: usize, modes: &[usize]) -> Self {
        let mut occupations = vec![0u8; mode_count];
        for &m in modes {
            occupations[m] += 1;
        }
        Self { occupations }
    }

    pub fn occupations(&self) -> &[u8] {
        &self.occupations
    }

    pub fn mode_count(&self) -> usize {
        self.occupations.len()
    }

    pub fn photon_number(&self) -> u32 {
        self.occupations.iter().map(|&n| u32::from(n)).sum()
    }

    /// Occupied modes with multiplicity, ascending.
    pub fn modes(&self) -> Vec<usize> {
        self.occupations
            .iter()
            .enumerate()
            .flat_map(|(m, &n)| std::iter::repeat_n(m, usize::from(n)))
            .collect()
    }

    /// `sqrt(Π n_k!)`: the norm of the raw creation-operator string
    /// `Π a^†|vac>` relative to the normalized Fock state.
    pub fn factorial_norm(&self) -> f64 {
        self.occupations
            .iter()
            .map(|&n| (1..=u32::from(n)).product::<u32>() as f64)
            .product::<f64>()
            .sqrt()
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (k, n) in self.occupations.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, ">")
    }
}

/// Superposition of Fock states.
pub type FockAmplitudes = BTreeMap<FockState, Amplitude>;

/// Unitary on optical modes. `entry(out, input)` is the amplitude for a
/// photon entering `input` to leave through `out`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeUnitary {
    matrix: UnitaryMatrix,
}

impl ModeUnitary {
    pub fn new(modes: usize, entries: Vec<Amplitude>) -> Result<Self, OpticsError> {
        Ok(Self {
            matrix: UnitaryMatrix::new(modes, entries)?,
        })
    }

    pub fn modes(&self) -> usize {
        self.matrix.dim()
    }

    pub fn entry(&self, out: usize, input: usize) -> Amplitude {
        self.matrix.entry(out, input)
    }

    pub fn matrix(&self) -> &UnitaryMatrix {
        &self.matrix
    }

    /// Apply `self` first, then `next`.
    pub fn then(&self, next: &Self) -> Result<Self, OpticsError> {
        Ok(Self {
            matrix: next.matrix.compose(&self.matrix)?,
        })
    }

    /// Block-diagonal `self ⊕ other` on disjoint modes.
    pub fn direct_sum(&self, other: &Self) -> Result<Self, OpticsError> {
        let (a, b) = (self.modes(), other.modes());
        let n = a + b;
        let mut entries = vec![Amplitude::new(0.0, 0.0); n * n];
        for r in 0..a {
            for c in 0..a {
                entries[r * n + c] = self.entry(r, c);
            }
        }
        for r in 0..b {
            for c in 0..b {
                entries[(a + r) * n + a + c] = other.entry(r, c);
            }
        }
        Self::new(n, entries)
    }
}

/// Symmetric 50:50 beam splitter with transmission `1/sqrt2` and reflection
/// `i/sqrt2`.
pub fn beam_splitter() -> ModeUnitary {
    let t = Amplitude::new(FRAC_1_SQRT_2, 0.0);
    let r = Amplitude::new(0.0, FRAC_1_SQRT_2);
    ModeUnitary::new(2, vec![t, r, r, t]).expect("unitary")
}

/// The 4x4 Bell multiport, `U[n][m] = i^{nm} / 2` for zero-based `n, m`.
pub fn bell_multiport(n: usize) -> Result<ModeUnitary, OpticsError> {
    if n != 4 {
        return Err(OpticsError::UnsupportedSize(n));
    }
    let powers = [
        Amplitude::new(1.0, 0.0),
        Amplitude::new(0.0, 1.0),
        Amplitude::new(-1.0, 0.0),
        Amplitude::new(0.0, -1.0),
    ];
    let entries = (0..16)
        .map(|k| powers[(k / 4) * (k % 4) % 4] * 0.5)
        .collect();
    ModeUnitary::new(4, entries)
}

/// Output amplitudes of a two-photon input state through `u`.
///
/// Every two-photon output configuration is present in the result, including
/// those with (numerically) zero amplitude.
pub fn scatter_two_photons(
    u: &ModeUnitary,
    input: &FockState,
) -> Result<FockAmplitudes, OpticsError> {
    let m = u.modes();
    if input.mode_count() != m {
        return Err(OpticsError::ModeCountMismatch {
            expected: m,
            found: input.mode_count(),
        });
    }
    if input.photon_number() != 2 {
        return Err(OpticsError::PhotonNumber(input.photon_number()));
    }
    let ins = input.modes();
    let (n1, n2) = (ins[0], ins[1]);
    let mut out = FockAmplitudes::new();
    for m1 in 0..m {
        for m2 in m1..m {
            let permanent = u.entry(m1, n1) * u.entry(m2, n2) + u.entry(m2, n1) * u.entry(m1, n2);
            let target = FockState::from_modes(m, &[m1, m2]);
            let norm = input.factorial_norm() * target.factorial_norm();
            out.insert(target, permanent / norm);
        }
    }
    Ok(out)
}

/// Linear extension of [`scatter_two_photons`] to superpositions.
pub fn scatter_superposition(
    u: &ModeUnitary,
    input: &FockAmplitudes,
) -> Result<FockAmplitudes, OpticsError> {
    let mut out = FockAmplitudes::new();
    for (fock, amp) in input {
        for (target, a) in scatter_two_photons(u, fock)? {
            *out.entry(target).or_insert(Amplitude::new(0.0, 0.0)) += amp * a;
        }
    }
    Ok(out)
}

fn require_photon_pair(photonic: &StateVector) -> Result<(), OpticsError> {
    if photonic.subsystems() != [Subsystem::photon_pair()] || !photonic.is_normalized() {
        return Err(OpticsError::NotPhotonPair);
    }
    Ok(())
}

fn to_modes(photonic: &StateVector, layout: [[usize; 2]; 4]) -> FockAmplitudes {
    photonic
        .amplitudes()
        .iter()
        .zip(layout)
        .map(|(a, modes)| (FockState::from_modes(4, &modes), *a))
        .collect()
}

/// Routes the time-bin photons onto the multiport inputs: source 1 early/late
/// to ports 1/3, source 2 early/late to ports 2/4.
pub fn embed_timebin_to_modes(photonic: &StateVector) -> Result<FockAmplitudes, OpticsError> {
    require_photon_pair(photonic)?;
    // EE -> a1 a2, EL -> a1 a4, LE -> a2 a3, LL -> a3 a4
    Ok(to_modes(photonic, [[0, 1], [0, 3], [1, 2], [2, 3]]))
}

/// Detector record for one run: the inferred photon count per detector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClickPattern {
    counts: Vec<u8>,
}

impl ClickPattern {
    /// Pattern with explicitly known photon counts.
    pub fn from_counts(counts: Vec<u8>) -> Self {
        Self { counts }
    }

    /// Pattern seen by non-number-resolving detectors. When the total photon
    /// number is known and a single detector fired, it is credited with all
    /// of them; otherwise each fired detector counts one photon.
    pub fn from_clicks(detectors: usize, fired: &[usize], known_total: Option<u8>) -> Self {
        let mut counts = vec![0u8; detectors];
        for &d in fired {
            counts[d] = 1;
        }
        if let (Some(total), [single]) = (known_total, fired) {
            counts[*single] = total;
        }
        Self { counts }
    }

    /// What click detectors report for a lossless Fock outcome.
    pub fn from_fock(fock: &FockState) -> Self {
        let fired: Vec<usize> = (0..fock.mode_count())
            .filter(|&m| fock.occupations()[m] > 0)
            .collect();
        let total = u8::try_from(fock.photon_number()).ok();
        Self::from_clicks(fock.mode_count(), &fired, total)
    }

    pub fn counts(&self) -> &[u8] {
        &self.counts
    }

    pub fn fired(&self) -> Vec<usize> {
        (0..self.counts.len())
            .filter(|&d| self.counts[d] > 0)
            .collect()
    }

    pub fn photon_count(&self) -> u32 {
        self.counts.iter().map(|&n| u32::from(n)).sum()
    }

    fn require_two_photons(&self, detectors: usize) -> Result<(), OpticsError> {
        if self.counts.len() != detectors {
            return Err(OpticsError::DetectorCount {
                expected: detectors,
                found: self.counts.len(),
            });
        }
        if self.photon_count() < 2 {
            return Err(OpticsError::LossyPattern);
        }
        Ok(())
    }
}

impl fmt::Display for ClickPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .fired()
            .into_iter()
            .map(|d| format!("d{}x{}", d, self.counts[d]))
            .collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Maps a multiport click pattern to the measured basis vector.
pub fn classify_multiport(c: &ClickPattern) -> Result<OutcomeLabel, OpticsError> {
    c.require_two_photons(4)?;
    let counts = c.counts();
    let fired = c.fired();
    match fired.as_slice() {
        [0, 3] | [1, 2] => Ok(OutcomeLabel::PHI1),
        [0, 1] | [2, 3] => Ok(OutcomeLabel::PHI2),
        [p] if counts[*p] == 2 && (*p == 0 || *p == 2) => Ok(OutcomeLabel::PHI3),
        [p] if counts[*p] == 2 => Ok(OutcomeLabel::PHI4),
        _ => Err(OpticsError::UnreachablePattern(c.clone())),
    }
}

/// Polarization rotations `U_i = |h><x_i| + |v><y_i|` for each source,
/// derived from the partial Bell single-photon states with `E -> h`,
/// `L -> v`. Mode order within each is `[h, v]`.
pub fn polarization_rotations() -> (ModeUnitary, ModeUnitary) {
    let basis = partial_bell_basis();
    let s = basis.single_photon_states();
    let rotation = |x: &StateVector, y: &StateVector| {
        let entries = x
            .amplitudes()
            .iter()
            .chain(y.amplitudes())
            .map(|a| a.conj())
            .collect();
        ModeUnitary::new(2, entries).expect("orthonormal rows")
    };
    (rotation(&s.x1, &s.y1), rotation(&s.x2, &s.y2))
}

/// Full four-mode network of the polarization layout: `U_1 ⊕ U_2` on
/// `[A_h, A_v, B_h, B_v]`, followed by the beam splitter mixing ports A and B
/// for each polarization.
pub fn fig2a_network() -> ModeUnitary {
    let (u1, u2) = polarization_rotations();
    let rotations = u1.direct_sum(&u2).expect("4 modes");
    let bs = beam_splitter();
    let mut entries = vec![Amplitude::new(0.0, 0.0); 16];
    for out_port in 0..2 {
        for in_port in 0..2 {
            for pol in 0..2 {
                entries[(2 * out_port + pol) * 4 + 2 * in_port + pol] = bs.entry(out_port, in_port);
            }
        }
    }
    let mixer = ModeUnitary::new(4, entries).expect("unitary");
    rotations.then(&mixer).expect("4 modes")
}

fn click_distribution(out: &FockAmplitudes) -> BTreeMap<ClickPattern, f64> {
    let mut dist = BTreeMap::new();
    for (fock, amp) in out {
        let p = amp.norm_sqr();
        if p <= NULL_PROBABILITY {
            continue;
        }
        *dist.entry(ClickPattern::from_fock(fock)).or_insert(0.0) += p;
    }
    dist
}

/// Click statistics of the polarization + beam-splitter realization.
///
/// Photon 1 enters port A, photon 2 port B, with early mapped to `h` and late
/// to `v`. Patterns with vanishing probability are omitted.
pub fn simulate_fig2a(photonic: &StateVector) -> Result<BTreeMap<ClickPattern, f64>, OpticsError> {
    require_photon_pair(photonic)?;
    // EE -> A_h B_h, EL -> A_h B_v, LE -> A_v B_h, LL -> A_v B_v
    let input = to_modes(photonic, [[0, 2], [0, 3], [1, 2], [1, 3]]);
    let out = scatter_superposition(&fig2a_network(), &input)?;
    Ok(click_distribution(&out))
}

/// Click statistics of the Bell multiport realization. Patterns with
/// vanishing probability are omitted.
pub fn simulate_multiport(
    photonic: &StateVector,
) -> Result<BTreeMap<ClickPattern, f64>, OpticsError> {
    let input = embed_timebin_to_modes(photonic)?;
    let out = scatter_superposition(&bell_multiport(4)?, &input)?;
    Ok(click_distribution(&out))
}

/// Maps a polarization-layout click pattern (`[A_h, A_v, B_h, B_v]`) to the
/// measured basis vector.
pub fn classify_fig2a(c: &ClickPattern) -> Result<OutcomeLabel, OpticsError> {
    c.require_two_photons(4)?;
    let n = c.counts();
    let horizontal = n[0] + n[2];
    let vertical = n[1] + n[3];
    Ok(match (horizontal, vertical) {
        (2, 0) => OutcomeLabel::PHI3,
        (0, 2) => OutcomeLabel::PHI4,
        _ if (n[0] == 1 && n[1] == 1) || (n[2] == 1 && n[3] == 1) => OutcomeLabel::PHI1,
        _ => OutcomeLabel::PHI2,
    })
}

fn outcome_distribution(
    clicks: BTreeMap<ClickPattern, f64>,
    classify: fn(&ClickPattern) -> Result<OutcomeLabel, OpticsError>,
) -> Result<[f64; 4], OpticsError> {
    let mut probs = [0.0; 4];
    for (pattern, p) in clicks {
        probs[classify(&pattern)?.position()] += p;
    }
    Ok(probs)
}

/// Outcome probabilities inferred from the beam-splitter clicks.
pub fn fig2a_outcome_distribution(photonic: &StateVector) -> Result<[f64; 4], OpticsError> {
    outcome_distribution(simulate_fig2a(photonic)?, classify_fig2a)
}

/// Outcome probabilities inferred from the multiport clicks.
pub fn multiport_outcome_distribution(photonic: &StateVector) -> Result<[f64; 4], OpticsError> {
    outcome_distribution(simulate_multiport(photonic)?, classify_multiport)
}

/// `|<Phi_i|photonic>|^2` for the abstract partial Bell measurement.
pub fn ideal_outcome_distribution(photonic: &StateVector) -> Result<[f64; 4], OpticsError> {
    require_photon_pair(photonic)?;
    let basis = partial_bell_basis();
    let mut probs = [0.0; 4];
    for o in OutcomeLabel::ALL {
        probs[o.position()] = inner(basis.vector(o), photonic)?.norm_sqr();
    }
    Ok(probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{apply, TOLERANCE};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Amplitude {
        Amplitude::new(re, im)
    }

    fn close(a: Amplitude, b: Amplitude) -> bool {
        (a - b).norm() < TOLERANCE
    }

    fn fock(occ: &[u8]) -> FockState {
        FockState::new(occ.to_vec())
    }

    fn amp(out: &FockAmplitudes, occ: &[u8]) -> Amplitude {
        out.get(&fock(occ)).copied().unwrap_or(c(0.0, 0.0))
    }

    fn phi(o: OutcomeLabel) -> StateVector {
        partial_bell_basis().vector(o).clone()
    }

    #[test]
    fn fock_normalization() {
        assert_eq!(fock(&[2, 0, 0, 0]).factorial_norm(), 2f64.sqrt());
        assert_eq!(fock(&[1, 0, 0, 1]).factorial_norm(), 1.0);
        assert_eq!(FockState::from_modes(4, &[2, 2]), fock(&[0, 0, 2, 0]));
        assert_eq!(fock(&[0, 1, 0, 1]).modes(), vec![1, 3]);
    }

    #[test]
    fn multiport_entries() {
        let u = bell_multiport(4).unwrap();
        assert_eq!(u.entry(0, 0), c(0.5, 0.0));
        assert_eq!(u.entry(1, 1), c(0.0, 0.5));
        assert_eq!(u.entry(3, 2), c(-0.5, 0.0));
        assert_eq!(u.entry(3, 3), c(0.0, 0.5));
        assert!(u.matrix().unitarity_defect() < TOLERANCE);
        assert_eq!(bell_multiport(3), Err(OpticsError::UnsupportedSize(3)));
    }

    #[test]
    fn hong_ou_mandel_dip() {
        let out = scatter_two_photons(&beam_splitter(), &fock(&[1, 1])).unwrap();
        assert!(amp(&out, &[1, 1]).norm() < TOLERANCE);
        assert!(close(amp(&out, &[2, 0]), c(0.0, FRAC_1_SQRT_2)));
        assert!(close(amp(&out, &[0, 2]), c(0.0, FRAC_1_SQRT_2)));
    }

    #[test]
    fn scatter_requires_two_photons() {
        let u = bell_multiport(4).unwrap();
        assert_eq!(
            scatter_two_photons(&u, &fock(&[1, 0, 0, 0])),
            Err(OpticsError::PhotonNumber(1))
        );
        assert_eq!(
            scatter_two_photons(&u, &fock(&[1, 1, 1, 0])),
            Err(OpticsError::PhotonNumber(3))
        );
        assert!(matches!(
            scatter_two_photons(&u, &fock(&[1, 1])),
            Err(OpticsError::ModeCountMismatch { .. })
        ));
    }

    #[test]
    fn embedding_routes_time_bins() {
        let el = StateVector::basis_state(Subsystem::photon_pair(), 1).unwrap();
        let out = embed_timebin_to_modes(&el).unwrap();
        assert_eq!(out.get(&fock(&[1, 0, 0, 1])), Some(&c(1.0, 0.0)));
        let ll = StateVector::basis_state(Subsystem::photon_pair(), 3).unwrap();
        let out = embed_timebin_to_modes(&ll).unwrap();
        assert_eq!(out.get(&fock(&[0, 0, 1, 1])), Some(&c(1.0, 0.0)));

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = StateVector::random(Subsystem::photon_pair(), &mut rng);
        let norm: f64 = embed_timebin_to_modes(&s)
            .unwrap()
            .values()
            .map(|a| a.norm_sqr())
            .sum();
        assert!((norm - 1.0).abs() < TOLERANCE);
    }

    #[test]
    fn multiport_phi3_bunches_into_ports_one_and_three() {
        let u = bell_multiport(4).unwrap();
        let out = scatter_superposition(
            &u,
            &embed_timebin_to_modes(&phi(OutcomeLabel::PHI3)).unwrap(),
        )
        .unwrap();
        assert!(close(amp(&out, &[2, 0, 0, 0]), c(FRAC_1_SQRT_2, 0.0)));
        assert!(close(amp(&out, &[0, 0, 2, 0]), c(-FRAC_1_SQRT_2, 0.0)));
        let rest: f64 = out
            .iter()
            .filter(|(f, _)| **f != fock(&[2, 0, 0, 0]) && **f != fock(&[0, 0, 2, 0]))
            .map(|(_, a)| a.norm_sqr())
            .sum();
        assert!(rest < TOLERANCE);
    }

    #[test]
    fn classify_multiport_rules() {
        let clicks = |fired: &[usize]| ClickPattern::from_clicks(4, fired, Some(2));
        assert_eq!(classify_multiport(&clicks(&[1, 2])), Ok(OutcomeLabel::PHI1));
        assert_eq!(classify_multiport(&clicks(&[0, 3])), Ok(OutcomeLabel::PHI1));
        assert_eq!(classify_multiport(&clicks(&[0, 1])), Ok(OutcomeLabel::PHI2));
        assert_eq!(classify_multiport(&clicks(&[2, 3])), Ok(OutcomeLabel::PHI2));
        assert_eq!(classify_multiport(&clicks(&[2])), Ok(OutcomeLabel::PHI3));
        assert_eq!(classify_multiport(&clicks(&[0])), Ok(OutcomeLabel::PHI3));
        assert_eq!(classify_multiport(&clicks(&[1])), Ok(OutcomeLabel::PHI4));
        assert_eq!(classify_multiport(&clicks(&[3])), Ok(OutcomeLabel::PHI4));
        assert!(matches!(
            classify_multiport(&clicks(&[0, 2])),
            Err(OpticsError::UnreachablePattern(_))
        ));
        assert!(matches!(
            classify_multiport(&clicks(&[1, 3])),
            Err(OpticsError::UnreachablePattern(_))
        ));
        let lossy = ClickPattern::from_clicks(4, &[2], None);
        assert_eq!(classify_multiport(&lossy), Err(OpticsError::LossyPattern));
    }

    #[test]
    fn ports_one_and_three_never_fire_together() {
        let u = bell_multiport(4).unwrap();
        for o in OutcomeLabel::ALL {
            let out = scatter_superposition(&u, &embed_timebin_to_modes(&phi(o)).unwrap()).unwrap();
            assert!(amp(&out, &[1, 0, 1, 0]).norm() < TOLERANCE);
            assert!(amp(&out, &[0, 1, 0, 1]).norm() < TOLERANCE);
        }
    }

    #[test]
    fn polarization_rotation_matrices() {
        let (u1, u2) = polarization_rotations();
        let h = FRAC_1_SQRT_2;
        let expected1 = [c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)];
        let expected2 = [c(h, 0.0), c(h, 0.0), c(0.0, -h), c(0.0, h)];
        assert!(u1
            .matrix()
            .entries()
            .iter()
            .zip(expected1)
            .all(|(a, e)| close(*a, e)));
        assert!(u2
            .matrix()
            .entries()
            .iter()
            .zip(expected2)
            .all(|(a, e)| close(*a, e)));
        assert!(u1.matrix().unitarity_defect() < TOLERANCE);
        assert!(u2.matrix().unitarity_defect() < TOLERANCE);

        let pol = Subsystem::new("pol", ["h", "v"]).unwrap();
        let diag = StateVector::new(pol.clone(), vec![c(h, 0.0), c(h, 0.0)]).unwrap();
        let rotated = apply(u1.matrix(), &diag).unwrap();
        assert!(close(rotated.amplitudes()[0], c(1.0, 0.0)));
        let anti = StateVector::new(pol, vec![c(h, 0.0), c(-h, 0.0)]).unwrap();
        let rotated = apply(u2.matrix(), &anti).unwrap();
        assert!((rotated.amplitudes()[1].norm() - 1.0).abs() < TOLERANCE);
    }

    #[test]
    fn beam_splitter_convention() {
        let bs = beam_splitter();
        assert_eq!(bs.entry(0, 0), c(FRAC_1_SQRT_2, 0.0));
        assert_eq!(bs.entry(0, 1), c(0.0, FRAC_1_SQRT_2));
        assert_eq!(bs.entry(1, 0), c(0.0, FRAC_1_SQRT_2));
        assert_eq!(bs.entry(1, 1), c(FRAC_1_SQRT_2, 0.0));
    }

    #[test]
    fn fig2a_phi3_bunches_h_photons() {
        let dist = simulate_fig2a(&phi(OutcomeLabel::PHI3)).unwrap();
        assert_eq!(dist.len(), 2);
        let a = dist[&ClickPattern::from_counts(vec![2, 0, 0, 0])];
        let b = dist[&ClickPattern::from_counts(vec![0, 0, 2, 0])];
        assert!((a - 0.5).abs() < TOLERANCE && (b - 0.5).abs() < TOLERANCE);
    }

    #[test]
    fn fig2a_phi1_mixed_polarization_same_port() {
        let dist = simulate_fig2a(&phi(OutcomeLabel::PHI1)).unwrap();
        let same_port: f64 = dist
            .iter()
            .filter(|(p, _)| p.counts() == [1, 1, 0, 0] || p.counts() == [0, 0, 1, 1])
            .map(|(_, p)| p)
            .sum();
        assert!((same_port - 1.0).abs() < TOLERANCE);
    }

    #[test]
    fn classify_fig2a_rules() {
        let p = |n: [u8; 4]| ClickPattern::from_counts(n.to_vec());
        assert_eq!(classify_fig2a(&p([1, 1, 0, 0])), Ok(OutcomeLabel::PHI1));
        assert_eq!(classify_fig2a(&p([0, 0, 1, 1])), Ok(OutcomeLabel::PHI1));
        assert_eq!(classify_fig2a(&p([1, 0, 0, 1])), Ok(OutcomeLabel::PHI2));
        assert_eq!(classify_fig2a(&p([0, 1, 1, 0])), Ok(OutcomeLabel::PHI2));
        assert_eq!(classify_fig2a(&p([1, 0, 1, 0])), Ok(OutcomeLabel::PHI3));
        assert_eq!(classify_fig2a(&p([2, 0, 0, 0])), Ok(OutcomeLabel::PHI3));
        assert_eq!(classify_fig2a(&p([0, 0, 0, 2])), Ok(OutcomeLabel::PHI4));
        assert_eq!(
            classify_fig2a(&p([0, 1, 0, 0])),
            Err(OpticsError::LossyPattern)
        );
    }

    #[test]
    fn distributions_sum_to_one_and_match_ideal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let s = StateVector::random(Subsystem::photon_pair(), &mut rng);
            let ideal = ideal_outcome_distribution(&s).unwrap();
            assert!((ideal.iter().sum::<f64>() - 1.0).abs() < TOLERANCE);
            for dist in [
                fig2a_outcome_distribution(&s).unwrap(),
                multiport_outcome_distribution(&s).unwrap(),
            ] {
                for (a, b) in dist.iter().zip(ideal) {
                    assert!((a - b).abs() < TOLERANCE);
                }
            }
        }
    }

    #[test]
    fn non_photon_pair_input_rejected() {
        let s = StateVector::basis_state(Subsystem::atom_pair(), 0).unwrap();
        assert_eq!(simulate_fig2a(&s), Err(OpticsError::NotPhotonPair));
        assert_eq!(embed_timebin_to_modes(&s), Err(OpticsError::NotPhotonPair));
    }
}
