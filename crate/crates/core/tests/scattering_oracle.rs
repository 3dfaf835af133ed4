//! Fock-space scattering checked against a direct expansion of the
//! creation-operator product, independent of the permanent formula.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rus_core::optics::{
    beam_splitter, bell_multiport, classify_multiport, embed_timebin_to_modes, fig2a_network,
    scatter_superposition, scatter_two_photons, simulate_fig2a, ClickPattern, FockAmplitudes,
    FockState, ModeUnitary,
};
use rus_core::protocol::{partial_bell_basis, OutcomeLabel};
use rus_core::quantum::{Amplitude, TOLERANCE};

fn c(re: f64, im: f64) -> Amplitude {
    Amplitude::new(re, im)
}

/// Expands `(Σ_m U[m][n1] b_m^†)(Σ_m U[m][n2] b_m^†)|vac>` term by term
/// (`modes^2` products), collects equal operator monomials, then converts
/// `b_p^† b_q^† |vac>` to normalized Fock amplitudes (`sqrt2` for `p = q`).
fn brute_force(u: &ModeUnitary, n1: usize, n2: usize) -> BTreeMap<Vec<u8>, Amplitude> {
    let m = u.modes();
    let mut monomials: BTreeMap<(usize, usize), Amplitude> = BTreeMap::new();
    for p in 0..m {
        for q in 0..m {
            let key = (p.min(q), p.max(q));
            *monomials.entry(key).or_insert(c(0.0, 0.0)) += u.entry(p, n1) * u.entry(q, n2);
        }
    }
    let input_norm = if n1 == n2 { 2f64.sqrt() } else { 1.0 };
    monomials
        .into_iter()
        .map(|((p, q), coeff)| {
            let mut occ = vec![0u8; m];
            occ[p] += 1;
            occ[q] += 1;
            let output_norm = if p == q { 2f64.sqrt() } else { 1.0 };
            (occ, coeff * output_norm / input_norm)
        })
        .collect()
}

fn random_unitary(rng: &mut ChaCha8Rng) -> ModeUnitary {
    // Product of the multiport with random diagonal phases on each side.
    let phases = |rng: &mut ChaCha8Rng| -> Vec<Amplitude> {
        (0..4)
            .map(|_| Amplitude::from_polar(1.0, rng.random_range(0.0..6.3)))
            .collect()
    };
    let (left, right) = (phases(rng), phases(rng));
    let f = bell_multiport(4).unwrap();
    let entries = (0..16)
        .map(|k| left[k / 4] * f.entry(k / 4, k % 4) * right[k % 4])
        .collect();
    ModeUnitary::new(4, entries).unwrap()
}

#[test]
fn permanent_agrees_with_operator_expansion() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut unitaries = vec![bell_multiport(4).unwrap(), fig2a_network()];
    unitaries.extend((0..5).map(|_| random_unitary(&mut rng)));
    for u in &unitaries {
        for n1 in 0..4 {
            for n2 in n1..4 {
                let input = FockState::from_modes(4, &[n1, n2]);
                let fast = scatter_two_photons(u, &input).unwrap();
                let slow = brute_force(u, n1, n2);
                assert_eq!(fast.len(), slow.len());
                for (fock, a) in &fast {
                    let b = slow[fock.occupations()];
                    assert!((a - b).norm() < TOLERANCE, "{fock}: {a} vs {b}");
                }
                let total: f64 = fast.values().map(|a| a.norm_sqr()).sum();
                assert!((total - 1.0).abs() < TOLERANCE);
            }
        }
    }
}

#[test]
fn beam_splitter_two_mode_expansion() {
    let bs = beam_splitter();
    for (n1, n2) in [(0, 0), (0, 1), (1, 1)] {
        let fast = scatter_two_photons(&bs, &FockState::from_modes(2, &[n1, n2])).unwrap();
        let slow = brute_force(&bs, n1, n2);
        for (fock, a) in &fast {
            assert!((a - slow[fock.occupations()]).norm() < TOLERANCE);
        }
    }
}

/// The multiport outputs for each partial Bell vector, as normalized Fock
/// amplitudes: `(b1†b4† - b2†b3†)/sqrt2`, `-(b1†b2† - b3†b4†)/sqrt2`,
/// `(b1†² - b3†²)/2`, `-(b2†² - b4†²)/2`.
fn golden_outputs() -> [Vec<([u8; 4], Amplitude)>; 4] {
    let h = FRAC_1_SQRT_2;
    [
        vec![([1, 0, 0, 1], c(h, 0.0)), ([0, 1, 1, 0], c(-h, 0.0))],
        vec![([1, 1, 0, 0], c(-h, 0.0)), ([0, 0, 1, 1], c(h, 0.0))],
        vec![([2, 0, 0, 0], c(h, 0.0)), ([0, 0, 2, 0], c(-h, 0.0))],
        vec![([0, 2, 0, 0], c(-h, 0.0)), ([0, 0, 0, 2], c(h, 0.0))],
    ]
}

fn as_vector(out: &FockAmplitudes, keys: &[FockState]) -> Vec<Amplitude> {
    keys.iter()
        .map(|k| out.get(k).copied().unwrap_or(c(0.0, 0.0)))
        .collect()
}

#[test]
fn multiport_reproduces_output_table() {
    let basis = partial_bell_basis();
    let u = bell_multiport(4).unwrap();
    let keys: Vec<FockState> = (0..4)
        .flat_map(|a| (a..4).map(move |b| FockState::from_modes(4, &[a, b])))
        .collect();
    for (o, golden) in OutcomeLabel::ALL.into_iter().zip(golden_outputs()) {
        let out =
            scatter_superposition(&u, &embed_timebin_to_modes(basis.vector(o)).unwrap()).unwrap();
        let mut expected: FockAmplitudes = BTreeMap::new();
        for (occ, a) in golden {
            expected.insert(FockState::new(occ.to_vec()), a);
        }
        let got = as_vector(&out, &keys);
        let want = as_vector(&expected, &keys);
        // align the global phase through the overlap
        let overlap: Amplitude = got.iter().zip(&want).map(|(g, w)| w.conj() * g).sum();
        assert!((overlap.norm() - 1.0).abs() < TOLERANCE, "{o}");
        let phase = overlap / overlap.norm();
        for (g, w) in got.iter().zip(&want) {
            assert!(
                (g - w * phase).norm() < TOLERANCE,
                "{o}: {g} vs {}",
                w * phase
            );
        }
    }
}

#[test]
fn multiport_click_table_matches_classifier() {
    let basis = partial_bell_basis();
    let u = bell_multiport(4).unwrap();
    for o in OutcomeLabel::ALL {
        let out =
            scatter_superposition(&u, &embed_timebin_to_modes(basis.vector(o)).unwrap()).unwrap();
        for (fock, a) in out {
            if a.norm_sqr() > TOLERANCE {
                assert_eq!(classify_multiport(&ClickPattern::from_fock(&fock)), Ok(o));
            }
        }
    }
}

#[test]
fn fig2a_entangled_and_vv_outputs() {
    assert!(fig2a_network().matrix().unitarity_defect() < TOLERANCE);
    let basis = partial_bell_basis();
    let phi2 = simulate_fig2a(basis.vector(OutcomeLabel::PHI2)).unwrap();
    let split: f64 = phi2
        .iter()
        .filter(|(p, _)| p.counts() == [1, 0, 0, 1] || p.counts() == [0, 1, 1, 0])
        .map(|(_, p)| p)
        .sum();
    assert!((split - 1.0).abs() < TOLERANCE);
    let phi4 = simulate_fig2a(basis.vector(OutcomeLabel::PHI4)).unwrap();
    assert_eq!(phi4.len(), 2);
    for (pattern, p) in phi4 {
        assert!(pattern.counts() == [0, 2, 0, 0] || pattern.counts() == [0, 0, 0, 2]);
        assert!((p - 0.5).abs() < TOLERANCE);
    }
}
