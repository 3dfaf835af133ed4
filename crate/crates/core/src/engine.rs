//! Monte Carlo execution of the repeat-until-success loop.
//!
//! One attempt encodes the atoms onto a fresh photon pair, detects both
//! photons (each with efficiency `eta`), samples a partial Bell outcome and
//! applies its local correction. Outcomes 1 and 2 complete the CZ gate;
//! outcomes 3 and 4 restore the input, so the attempt is simply repeated.
//! A lost photon leaves the atoms entangled with an untracked mode, which we
//! treat as destroying the run.
//!
//! # Random streams
//!
//! Every experiment takes one master seed. Trial `t` draws from
//! `ChaCha8Rng::seed_from_u64(master)` with its stream id set to `t`
//! ([`trial_rng`]), so results do not depend on thread scheduling. Bulk
//! single-attempt sampling uses one stream per block of
//! [`DRAWS_PER_STREAM`] draws.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::{
    controlled_z, correction_unitary, decompose, encode_pair, DecomposedOutcome, OutcomeLabel,
    ProtocolError,
};
use crate::quantum::{
    apply, fidelity_up_to_global_phase, Amplitude, QuantumError, StateVector, Subsystem,
};

/// Draws handled by one random stream in bulk sampling.
pub const DRAWS_PER_STREAM: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error("detector efficiency {0} is outside [0, 1]")]
    InvalidEta(f64),
    #[error("detector efficiency must be positive for this experiment")]
    ZeroEta,
    #[error("max_attempts must be at least 1")]
    ZeroAttempts,
    #[error("a cluster needs at least 2 qubits, got {0}")]
    TooFewQubits(usize),
}

/// Per-photon detection efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    eta: f64,
}

impl DetectorModel {
    pub fn new(eta: f64) -> Result<Self, EngineError> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(EngineError::InvalidEta(eta));
        }
        Ok(Self { eta })
    }

    pub fn ideal() -> Self {
        Self { eta: 1.0 }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Both photons of an attempt reach a detector.
    pub fn pair_detection_probability(&self) -> f64 {
        self.eta * self.eta
    }
}

/// Per-attempt probability that an entangling outcome is heralded: both
/// photons detected (`eta^2`) and one of the two entangling outcomes out of
/// four equiprobable ones.
pub fn attempt_success_probability(d: &DetectorModel) -> f64 {
    d.pair_detection_probability() * 0.5
}

/// Probability that a run stops at a given attempt, by success or by loss.
pub fn attempt_stop_probability(d: &DetectorModel) -> f64 {
    1.0 - d.pair_detection_probability() * 0.5
}

/// Independent generator for trial `trial` under `master_seed`.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

/// Precomputed outcome law and post-measurement states of one encoded state.
#[derive(Debug, Clone)]
pub struct OutcomeSampler {
    branches: Vec<DecomposedOutcome>,
    cumulative: [f64; 4],
}

impl OutcomeSampler {
    pub fn new(enc: &StateVector) -> Result<Self, EngineError> {
        let branches = decompose(enc)?;
        let mut cumulative = [0.0; 4];
        let mut acc = 0.0;
        for (slot, b) in cumulative.iter_mut().zip(&branches) {
            acc += b.probability;
            *slot = acc;
        }
        Ok(Self {
            branches,
            cumulative,
        })
    }

    pub fn probabilities(&self) -> [f64; 4] {
        let mut p = [0.0; 4];
        for (slot, b) in p.iter_mut().zip(&self.branches) {
            *slot = b.probability;
        }
        p
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (OutcomeLabel, &StateVector) {
        let u: f64 = rng.random::<f64>() * self.cumulative[3];
        let k = self.cumulative.iter().position(|&c| u < c).unwrap_or(3);
        let b = &self.branches[k];
        (b.outcome, &b.residual)
    }
}

/// Draws one partial Bell outcome for an encoded state along with the
/// (phase-canonical) atomic state it leaves behind.
pub fn sample_outcome<R: Rng + ?Sized>(
    enc: &StateVector,
    rng: &mut R,
) -> Result<(OutcomeLabel, StateVector), EngineError> {
    let sampler = OutcomeSampler::new(enc)?;
    let (o, residual) = sampler.sample(rng);
    Ok((o, residual.clone()))
}

/// Result of detecting one photon pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttemptOutcome {
    Heralded(OutcomeLabel),
    Loss,
}

/// Draws one attempt: two detection trials, then (always, so that every
/// attempt consumes the same number of draws) an outcome.
fn draw_attempt<'a, R: Rng + ?Sized>(
    sampler: &'a OutcomeSampler,
    d: &DetectorModel,
    rng: &mut R,
) -> (AttemptOutcome, &'a StateVector) {
    let first = rng.random::<f64>() < d.eta;
    let second = rng.random::<f64>() < d.eta;
    let (o, residual) = sampler.sample(rng);
    if first && second {
        (AttemptOutcome::Heralded(o), residual)
    } else {
        (AttemptOutcome::Loss, residual)
    }
}

/// Which local correction an attempt applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionId {
    /// `Z_1(-pi/2) Z_2(pi/2)` after outcome 1.
    UndoPhi1Phases,
    /// `Z_1(pi/2) Z_2(-pi/2)` after outcome 2.
    UndoPhi2Phases,
    Identity,
    /// `Z_1(pi) Z_2(pi)` after outcome 4.
    DoubleSignFlip,
}

impl CorrectionId {
    pub fn for_outcome(o: OutcomeLabel) -> Self {
        match o.index() {
            1 => Self::UndoPhi1Phases,
            2 => Self::UndoPhi2Phases,
            3 => Self::Identity,
            _ => Self::DoubleSignFlip,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttemptRecord {
    /// 1-based.
    pub attempt_index: u32,
    pub outcome: AttemptOutcome,
    pub correction: Option<CorrectionId>,
    /// Corrected atomic state; `None` after a loss.
    pub post_state: Option<StateVector>,
    pub succeeded: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Succeeded,
    LossAborted,
    Exhausted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RusRun {
    pub status: RunStatus,
    /// `CZ psi_in` (up to global phase) on success, the restored input when
    /// exhausted, `None` once a photon was lost.
    pub final_state: Option<StateVector>,
    pub records: Vec<AttemptRecord>,
}

impl RusRun {
    pub fn attempts(&self) -> u32 {
        self.records.len() as u32
    }
}

fn require_two_qubit(psi_in: &StateVector) -> Result<(), EngineError> {
    if psi_in.dim() != 4 || psi_in.subsystems().len() != 1 {
        return Err(ProtocolError::MalformedInput { expected: 4 }.into());
    }
    if !psi_in.is_normalized() {
        return Err(QuantumError::NotNormalized {
            norm_sqr: psi_in.norm_sqr(),
        }
        .into());
    }
    Ok(())
}

/// Runs the repeat-until-success loop on `psi_in` for at most
/// `max_attempts` photon pairs.
pub fn rus_gate<R: Rng + ?Sized>(
    psi_in: &StateVector,
    d: &DetectorModel,
    max_attempts: u32,
    rng: &mut R,
) -> Result<RusRun, EngineError> {
    if max_attempts == 0 {
        return Err(EngineError::ZeroAttempts);
    }
    require_two_qubit(psi_in)?;
    let mut records = Vec::new();
    let mut current = psi_in.clone();
    for attempt_index in 1..=max_attempts {
        let sampler = OutcomeSampler::new(&encode_pair(&current)?)?;
        match draw_attempt(&sampler, d, rng) {
            (AttemptOutcome::Loss, _) => {
                records.push(AttemptRecord {
                    attempt_index,
                    outcome: AttemptOutcome::Loss,
                    correction: None,
                    post_state: None,
                    succeeded: false,
                });
                return Ok(RusRun {
                    status: RunStatus::LossAborted,
                    final_state: None,
                    records,
                });
            }
            (AttemptOutcome::Heralded(o), residual) => {
                let (u, succeeded) = correction_unitary(o);
                let post = apply(&u, residual)?;
                records.push(AttemptRecord {
                    attempt_index,
                    outcome: AttemptOutcome::Heralded(o),
                    correction: Some(CorrectionId::for_outcome(o)),
                    post_state: Some(post.clone()),
                    succeeded,
                });
                if succeeded {
                    return Ok(RusRun {
                        status: RunStatus::Succeeded,
                        final_state: Some(post),
                        records,
                    });
                }
                current = post;
            }
        }
    }
    Ok(RusRun {
        status: RunStatus::Exhausted,
        final_state: Some(current),
        records,
    })
}

/// Aggregate of many independent [`rus_gate`] runs on the same input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStatistics {
    pub trials: u64,
    pub mean_attempts: f64,
    /// Attempts used per run, including runs that ended in a loss.
    pub attempt_histogram: BTreeMap<u32, u64>,
    pub successes: u64,
    pub loss_failures: u64,
    pub exhausted: u64,
    /// Mean over successful runs of `|<CZ psi_in|final>|^2`.
    pub mean_fidelity_vs_target: Option<f64>,
    pub min_fidelity_vs_target: Option<f64>,
    /// Smallest `|<psi_in|post>|^2` over every heralded outcome 3 or 4.
    pub min_recovery_fidelity: Option<f64>,
    /// Outcome counts over all heralded attempts, indexed by outcome - 1.
    pub outcome_counts: [u64; 4],
}

struct TrialSummary {
    attempts: u32,
    status: RunStatus,
    target_fidelity: Option<f64>,
    min_recovery: Option<f64>,
    outcomes: [u64; 4],
}

fn min_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Runs `trials` independent gates on trial streams `0..trials`, in parallel
/// on the current rayon pool. The result is independent of thread count.
pub fn run_trials(
    psi_in: &StateVector,
    d: &DetectorModel,
    max_attempts: u32,
    trials: u64,
    master_seed: u64,
) -> Result<RunStatistics, EngineError> {
    require_two_qubit(psi_in)?;
    if max_attempts == 0 {
        return Err(EngineError::ZeroAttempts);
    }
    let target = apply(&controlled_z(), psi_in)?;
    let summaries: Vec<TrialSummary> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(master_seed, t);
            let run = rus_gate(psi_in, d, max_attempts, &mut rng)?;
            let mut outcomes = [0u64; 4];
            let mut min_recovery = None;
            for r in &run.records {
                if let AttemptOutcome::Heralded(o) = r.outcome {
                    outcomes[o.position()] += 1;
                    if !o.heralds_gate() {
                        let post = r.post_state.as_ref().expect("heralded attempts keep state");
                        let f = fidelity_up_to_global_phase(post, psi_in)?;
                        min_recovery = min_opt(min_recovery, Some(f));
                    }
                }
            }
            let target_fidelity = match (&run.status, &run.final_state) {
                (RunStatus::Succeeded, Some(f)) => Some(fidelity_up_to_global_phase(f, &target)?),
                _ => None,
            };
            Ok(TrialSummary {
                attempts: run.attempts(),
                status: run.status,
                target_fidelity,
                min_recovery,
                outcomes,
            })
        })
        .collect::<Result<_, EngineError>>()?;

    // Sequential fold in trial order keeps floating-point sums reproducible.
    let mut stats = RunStatistics {
        trials,
        mean_attempts: 0.0,
        attempt_histogram: BTreeMap::new(),
        successes: 0,
        loss_failures: 0,
        exhausted: 0,
        mean_fidelity_vs_target: None,
        min_fidelity_vs_target: None,
        min_recovery_fidelity: None,
        outcome_counts: [0; 4],
    };
    let mut attempt_sum = 0u64;
    let mut fidelity_sum = 0.0;
    for s in &summaries {
        attempt_sum += u64::from(s.attempts);
        *stats.attempt_histogram.entry(s.attempts).or_insert(0) += 1;
        match s.status {
            RunStatus::Succeeded => stats.successes += 1,
            RunStatus::LossAborted => stats.loss_failures += 1,
            RunStatus::Exhausted => stats.exhausted += 1,
        }
        if let Some(f) = s.target_fidelity {
            fidelity_sum += f;
            stats.min_fidelity_vs_target = min_opt(stats.min_fidelity_vs_target, Some(f));
        }
        stats.min_recovery_fidelity = min_opt(stats.min_recovery_fidelity, s.min_recovery);
        for (total, n) in stats.outcome_counts.iter_mut().zip(s.outcomes) {
            *total += n;
        }
    }
    if trials > 0 {
        stats.mean_attempts = attempt_sum as f64 / trials as f64;
    }
    if stats.successes > 0 {
        stats.mean_fidelity_vs_target = Some(fidelity_sum / stats.successes as f64);
    }
    Ok(stats)
}

/// Counts from many independent single attempts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptTally {
    pub attempts: u64,
    pub heralded_successes: u64,
    pub losses: u64,
    /// Heralded outcomes, indexed by outcome - 1.
    pub outcome_counts: [u64; 4],
}

impl AttemptTally {
    pub fn success_rate(&self) -> f64 {
        self.heralded_successes as f64 / self.attempts as f64
    }
}

/// Runs `attempts` independent single attempts on `psi_in`.
pub fn tally_attempts(
    psi_in: &StateVector,
    d: &DetectorModel,
    attempts: u64,
    master_seed: u64,
) -> Result<AttemptTally, EngineError> {
    require_two_qubit(psi_in)?;
    let sampler = OutcomeSampler::new(&encode_pair(psi_in)?)?;
    let blocks = attempts.div_ceil(DRAWS_PER_STREAM);
    let partial: Vec<AttemptTally> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = trial_rng(master_seed, b);
            let n = DRAWS_PER_STREAM.min(attempts - b * DRAWS_PER_STREAM);
            let mut t = AttemptTally {
                attempts: n,
                heralded_successes: 0,
                losses: 0,
                outcome_counts: [0; 4],
            };
            for _ in 0..n {
                match draw_attempt(&sampler, d, &mut rng).0 {
                    AttemptOutcome::Loss => t.losses += 1,
                    AttemptOutcome::Heralded(o) => {
                        t.outcome_counts[o.position()] += 1;
                        if o.heralds_gate() {
                            t.heralded_successes += 1;
                        }
                    }
                }
            }
            t
        })
        .collect();
    Ok(partial.into_iter().fold(
        AttemptTally {
            attempts: 0,
            heralded_successes: 0,
            losses: 0,
            outcome_counts: [0; 4],
        },
        |mut acc, t| {
            acc.attempts += t.attempts;
            acc.heralded_successes += t.heralded_successes;
            acc.losses += t.losses;
            for (a, n) in acc.outcome_counts.iter_mut().zip(t.outcome_counts) {
                *a += n;
            }
            acc
        },
    ))
}

/// Outcome counts of `samples` ideal (lossless) measurements of
/// `encode_pair(psi_in)`.
pub fn outcome_frequencies(
    psi_in: &StateVector,
    samples: u64,
    master_seed: u64,
) -> Result<[u64; 4], EngineError> {
    Ok(tally_attempts(psi_in, &DetectorModel::ideal(), samples, master_seed)?.outcome_counts)
}

/// Mean cost of growing an `N`-qubit chain, one point per `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthPoint {
    pub qubits: usize,
    pub mean_attempts: f64,
    pub standard_error: f64,
}

/// Product state `|+>|+>`, the input of every cluster edge.
pub fn plus_plus() -> StateVector {
    StateVector::new(Subsystem::atom_pair(), vec![Amplitude::new(0.5, 0.0); 4])
        .expect("four amplitudes")
}

/// Grows a linear cluster edge by edge, `trials` times, and reports the mean
/// cumulative attempt count for every chain length `2..=n_qubits`.
///
/// Each edge is a CZ between the newest qubit and a fresh `|+>` source,
/// retried until heralded. Heralded failures (outcomes 3, 4) leave the chain
/// intact. A lost photon destroys only the qubit being attached, which is
/// re-prepared, so the attempt is charged and the edge retried.
pub fn cluster_growth_experiment(
    n_qubits: usize,
    d: &DetectorModel,
    trials: u64,
    master_seed: u64,
) -> Result<Vec<GrowthPoint>, EngineError> {
    if n_qubits < 2 {
        return Err(EngineError::TooFewQubits(n_qubits));
    }
    if d.eta() <= 0.0 {
        return Err(EngineError::ZeroEta);
    }
    let sampler = OutcomeSampler::new(&encode_pair(&plus_plus())?)?;
    let edges = n_qubits - 1;
    let costs: Vec<Vec<u64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(master_seed, t);
            let mut cumulative = Vec::with_capacity(edges);
            let mut total = 0u64;
            for _ in 0..edges {
                loop {
                    total += 1;
                    if let (AttemptOutcome::Heralded(o), _) = draw_attempt(&sampler, d, &mut rng) {
                        if o.heralds_gate() {
                            break;
                        }
                    }
                }
                cumulative.push(total);
            }
            cumulative
        })
        .collect();

    let n = trials as f64;
    Ok((0..edges)
        .map(|e| {
            let mean = costs.iter().map(|c| c[e] as f64).sum::<f64>() / n;
            let var = costs
                .iter()
                .map(|c| (c[e] as f64 - mean).powi(2))
                .sum::<f64>()
                / (n - 1.0).max(1.0);
            GrowthPoint {
                qubits: e + 2,
                mean_attempts: mean,
                standard_error: (var / n).sqrt(),
            }
        })
        .collect())
}
