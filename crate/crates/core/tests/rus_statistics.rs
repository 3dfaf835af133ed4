//! Monte Carlo properties of the repeat-until-success loop, each checked
//! against a 3-sigma band of the exact distribution.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rus_core::engine::{
    attempt_stop_probability, outcome_frequencies, run_trials, sample_outcome, DetectorModel,
};
use rus_core::protocol::encode_pair;
use rus_core::quantum::{StateVector, Subsystem, TOLERANCE};
use rus_core::stats::{binomial_sigma, geometric_mean, geometric_variance, BandCheck};

#[test]
fn sampled_outcomes_are_uniform() {
    let psi = StateVector::random(Subsystem::atom_pair(), &mut ChaCha8Rng::seed_from_u64(1));
    let n = 100_000u64;
    let counts = outcome_frequencies(&psi, n, 2024).unwrap();
    assert_eq!(counts.iter().sum::<u64>(), n);
    let sigma = binomial_sigma(0.25, n);
    assert!((sigma - 0.00137).abs() < 1e-5);
    for k in counts {
        let band = BandCheck::new(k as f64 / n as f64, 0.25, sigma);
        assert!(band.passed, "{band:?}");
    }
}

#[test]
fn sample_outcome_single_draws_cover_all_outcomes() {
    let psi = StateVector::basis_state(Subsystem::atom_pair(), 2).unwrap();
    let enc = encode_pair(&psi).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut seen = [0u32; 4];
    for _ in 0..4000 {
        let (o, residual) = sample_outcome(&enc, &mut rng).unwrap();
        assert!(residual.is_normalized());
        seen[o.position()] += 1;
    }
    let sigma = binomial_sigma(0.25, 4000);
    for k in seen {
        assert!(BandCheck::new(f64::from(k) / 4000.0, 0.25, sigma).passed);
    }
}

#[test]
fn product_input_mean_attempts() {
    let zero = StateVector::basis_state(Subsystem::atom_pair(), 0).unwrap();
    let trials = 50_000;
    let d = DetectorModel::ideal();
    let stats = run_trials(&zero, &d, 10_000, trials, 5).unwrap();
    assert_eq!(stats.successes, trials);
    let p = attempt_stop_probability(&d);
    let band = BandCheck::new(
        stats.mean_attempts,
        geometric_mean(p),
        (geometric_variance(p) / trials as f64).sqrt(),
    );
    assert!(band.passed, "{band:?}");
    assert!((stats.min_fidelity_vs_target.unwrap() - 1.0).abs() < TOLERANCE);
}

#[test]
fn lossy_runs_stop_geometrically() {
    let psi = StateVector::random(Subsystem::atom_pair(), &mut ChaCha8Rng::seed_from_u64(3));
    let d = DetectorModel::new(0.8).unwrap();
    let trials = 50_000;
    let stats = run_trials(&psi, &d, 10_000, trials, 6).unwrap();
    let p = attempt_stop_probability(&d);
    let band = BandCheck::new(
        stats.mean_attempts,
        geometric_mean(p),
        (geometric_variance(p) / trials as f64).sqrt(),
    );
    assert!(band.passed, "{band:?}");
    // success given a stop: (eta^2/2) / (1 - eta^2/2)
    let q = 0.32 / p;
    let frac = stats.successes as f64 / trials as f64;
    assert!(BandCheck::new(frac, q, binomial_sigma(q, trials)).passed);
    assert!((stats.min_recovery_fidelity.unwrap() - 1.0).abs() < TOLERANCE);
}
