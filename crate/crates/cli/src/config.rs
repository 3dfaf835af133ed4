//! Experiment configuration from command-line flags and an optional config
//! file (TOML, or JSON when the file name ends in `.json`). Flags win over
//! file values; anything left unset takes the documented default.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rus_core::quantum::{Amplitude, StateVector, Subsystem};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_TRIALS: u64 = 10_000;
pub const DEFAULT_ETA: f64 = 1.0;

/// Allowed deviation of a user-supplied input state from unit norm.
pub const INPUT_NORM_TOLERANCE: f64 = 1e-9;

/// Stream id reserved for drawing the `random` input preset, disjoint from
/// the per-trial streams `0, 1, 2, ...`.
pub const INPUT_STATE_STREAM: u64 = u64::MAX;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("no experiment selected (use --experiment or set `experiment` in the config file)")]
    MissingExperiment,
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error("trials must be at least 1")]
    ZeroTrials,
    #[error("eta must lie in [0, 1], got {0}")]
    EtaOutOfRange(f64),
    #[error("the {0} experiment needs eta > 0")]
    EtaMustBePositive(ExperimentKind),
    #[error("input state is not normalized: |a|^2+|b|^2+|c|^2+|d|^2 = {0}")]
    NotNormalized(f64),
    #[error("cannot parse input state `{0}`: expected bell, product, random or four re,im pairs")]
    BadInputState(String),
    #[error("cannot read config file {path}: {source}")]
    ReadFile {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config file {path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("invalid RUS_SIM_THREADS value `{0}`")]
    BadThreads(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    DecomposeCheck,
    MubCheck,
    Fig2aEquivalence,
    MultiportEquivalence,
    RusStatistics,
    EtaSweep,
    ClusterGrowth,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::DecomposeCheck => "decompose-check",
            Self::MubCheck => "mub-check",
            Self::Fig2aEquivalence => "fig2a-equivalence",
            Self::MultiportEquivalence => "multiport-equivalence",
            Self::RusStatistics => "rus-statistics",
            Self::EtaSweep => "eta-sweep",
            Self::ClusterGrowth => "cluster-growth",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Self as ValueEnum>::from_str(s, false)
            .map_err(|_| ConfigError::UnknownExperiment(s.into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// `(|00> + |11>)/sqrt2`
    Bell,
    /// `|00>`
    Product,
    /// Haar-random, drawn from the seeded input stream.
    Random,
}

/// Two-qubit input: a named preset or explicit `(re, im)` amplitudes for
/// `|00>, |01>, |10>, |11>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InputState {
    Preset(Preset),
    Amplitudes([[f64; 2]; 4]),
}

impl Default for InputState {
    fn default() -> Self {
        Self::Preset(Preset::Random)
    }
}

impl FromStr for InputState {
    type Err = ConfigError;

    /// Accepts `bell`, `product`, `random`, `re,im;re,im;re,im;re,im` or a
    /// JSON array `[[re,im],...]`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ConfigError::BadInputState(s.to_owned());
        let trimmed = s.trim();
        match trimmed.to_ascii_lowercase().as_str() {
            "bell" => return Ok(Self::Preset(Preset::Bell)),
            "product" => return Ok(Self::Preset(Preset::Product)),
            "random" => return Ok(Self::Preset(Preset::Random)),
            _ => {}
        }
        if trimmed.starts_with('[') {
            return serde_json::from_str::<[[f64; 2]; 4]>(trimmed)
                .map(Self::Amplitudes)
                .map_err(|_| bad());
        }
        let pairs: Vec<&str> = trimmed.split(';').collect();
        if pairs.len() != 4 {
            return Err(bad());
        }
        let mut amps = [[0.0; 2]; 4];
        for (slot, pair) in amps.iter_mut().zip(pairs) {
            let parts: Vec<&str> = pair.split(',').collect();
            if parts.len() != 2 {
                return Err(bad());
            }
            for (v, p) in slot.iter_mut().zip(parts) {
                *v = p.trim().parse().map_err(|_| bad())?;
            }
        }
        Ok(Self::Amplitudes(amps))
    }
}

impl InputState {
    fn validate(&self) -> Result<(), ConfigError> {
        if let Self::Amplitudes(a) = self {
            if a.iter().flatten().any(|x| !x.is_finite()) {
                return Err(ConfigError::NotNormalized(f64::NAN));
            }
            let norm: f64 = a.iter().map(|[re, im]| re * re + im * im).sum();
            if (norm - 1.0).abs() > INPUT_NORM_TOLERANCE {
                return Err(ConfigError::NotNormalized(norm));
            }
        }
        Ok(())
    }

    pub fn is_random(&self) -> bool {
        matches!(self, Self::Preset(Preset::Random))
    }

    /// The two-qubit state this input denotes, renormalized to unit norm.
    pub fn resolve(&self, seed: u64) -> StateVector {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let c = Amplitude::new;
        let amps = match self {
            Self::Preset(Preset::Bell) => vec![c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)],
            Self::Preset(Preset::Product) => {
                vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]
            }
            Self::Preset(Preset::Random) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(INPUT_STATE_STREAM);
                return StateVector::random(Subsystem::atom_pair(), &mut rng);
            }
            Self::Amplitudes(a) => a.iter().map(|[re, im]| c(*re, *im)).collect(),
        };
        StateVector::new(Subsystem::atom_pair(), amps)
            .and_then(|s| s.normalized())
            .expect("validated input state")
    }
}

/// A fully resolved, validated experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub trials: u64,
    pub eta: f64,
    pub input_state: InputState,
    pub output_path: Option<PathBuf>,
    pub format: OutputFormat,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            seed: DEFAULT_SEED,
            trials: DEFAULT_TRIALS,
            eta: DEFAULT_ETA,
            input_state: InputState::default(),
            output_path: None,
            format: OutputFormat::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.trials == 0 {
            return Err(ConfigError::ZeroTrials);
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(ConfigError::EtaOutOfRange(self.eta));
        }
        if self.experiment == ExperimentKind::ClusterGrowth && self.eta <= 0.0 {
            return Err(ConfigError::EtaMustBePositive(self.experiment));
        }
        self.input_state.validate()
    }
}

/// Command-line flags. Every field is optional so that unset flags fall back
/// to the config file.
#[derive(Debug, Clone, Default, Parser)]
#[command(
    name = "rus-sim",
    version,
    about = "Repeat-until-success CZ gate experiments"
)]
pub struct CliArgs {
    /// Experiment to run.
    #[arg(long, value_enum)]
    pub experiment: Option<ExperimentKind>,
    /// Master random seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Trials, samples or random states, depending on the experiment [default: 10000].
    #[arg(long)]
    pub trials: Option<u64>,
    /// Per-photon detector efficiency in [0, 1] [default: 1].
    #[arg(long)]
    pub eta: Option<f64>,
    /// bell | product | random | "re,im;re,im;re,im;re,im" [default: random].
    #[arg(long = "input-state")]
    pub input_state: Option<String>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Output format [default: json].
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// TOML or JSON file with any of the settings above.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Settings read from a config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub experiment: Option<String>,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub eta: Option<f64>,
    pub input_state: Option<InputState>,
    pub output_path: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::ReadFile {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let malformed = |message: String| ConfigError::Malformed {
            path: path.to_owned(),
            message,
        };
        if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(text).map_err(|e| malformed(e.to_string()))
        } else {
            toml::from_str(text).map_err(|e| malformed(e.to_string()))
        }
    }
}

/// Merges flags over file values over defaults and validates the result.
pub fn parse_config(
    args: &CliArgs,
    file: Option<&FileConfig>,
) -> Result<ExperimentConfig, ConfigError> {
    let file = file.cloned().unwrap_or_default();
    let experiment = match (args.experiment, &file.experiment) {
        (Some(e), _) => e,
        (None, Some(name)) => name.parse()?,
        (None, None) => return Err(ConfigError::MissingExperiment),
    };
    let input_state = match &args.input_state {
        Some(s) => s.parse()?,
        None => file.input_state.unwrap_or_default(),
    };
    let cfg = ExperimentConfig {
        experiment,
        seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        trials: args.trials.or(file.trials).unwrap_or(DEFAULT_TRIALS),
        eta: args.eta.or(file.eta).unwrap_or(DEFAULT_ETA),
        input_state,
        output_path: args.output.clone().or(file.output_path),
        format: args.format.or(file.format).unwrap_or_default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Worker cap from `RUS_SIM_THREADS`; `0` or unset means automatic.
pub fn thread_cap(value: Option<&str>) -> Result<usize, ConfigError> {
    match value {
        None => Ok(0),
        Some(v) if v.trim().is_empty() => Ok(0),
        Some(v) => v
            .trim()
            .parse()
            .map_err(|_| ConfigError::BadThreads(v.to_owned())),
    }
}
