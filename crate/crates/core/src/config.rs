//! Run configuration, read from TOML with dotted sections such as
//! `noise.loss_prob = 0.1` or `[adversary]` tables.

use crate::adversary::{self, AdversaryStrategy, BasisPolicy, NoiseParams};
use crate::postproc::PostprocConfig;
use crate::protocol::{round_robin, Line, Schedule};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed configuration: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("no seed given; set `seed` in the configuration or pass --seed")]
    MissingSeed,
}

fn random_policy() -> BasisPolicy {
    BasisPolicy::Random
}

/// Adversary selection. Hops are numbered from 0 (Alice's outgoing hop).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case", deny_unknown_fields)]
pub enum AdversarySpec {
    #[default]
    Passive,
    InterceptResend {
        hop: usize,
        #[serde(default = "random_policy")]
        basis: BasisPolicy,
    },
    Lossy {
        #[serde(default)]
        loss_prob: f64,
        #[serde(default)]
        dark_count_prob: f64,
        #[serde(default)]
        hop: usize,
    },
    /// `levers = { "0" = [1, 0] }` pulls the lever of hop 0 in epoch 0.
    ScriptedLevers {
        #[serde(default)]
        levers: BTreeMap<String, Vec<u8>>,
    },
}

impl AdversarySpec {
    pub fn build(&self) -> Result<Box<dyn AdversaryStrategy>, ConfigError> {
        Ok(match self {
            AdversarySpec::Passive => Box::new(adversary::passive()),
            AdversarySpec::InterceptResend { hop, basis } => Box::new(adversary::intercept_resend(*hop, *basis)),
            AdversarySpec::Lossy { loss_prob, dark_count_prob, hop } => {
                let params =
                    NoiseParams::new(*loss_prob, *dark_count_prob).map_err(|e| ConfigError::Invalid(e.to_string()))?;
                Box::new(adversary::Lossy { params, hop: *hop })
            }
            AdversarySpec::ScriptedLevers { levers } => {
                let mut script = BTreeMap::new();
                for (k, v) in levers {
                    let epoch: u64 = k.parse().map_err(|_| ConfigError::Invalid(format!("lever epoch `{k}`")))?;
                    script.insert(epoch, v.iter().map(|&b| b != 0).collect());
                }
                Box::new(adversary::scripted_levers(script))
            }
        })
    }
}

/// Parameters of the distinguisher experiments, which use short runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistinguishConfig {
    pub rounds: usize,
    pub key_len: usize,
    pub verify_tag_bits: usize,
    pub pa_output_ratio: f64,
}

impl Default for DistinguishConfig {
    fn default() -> Self {
        DistinguishConfig { rounds: 48, key_len: 4, verify_tag_bits: 4, pa_output_ratio: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Bound the complementarity constant must stay below.
    pub c_bar: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { c_bar: 0.75 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    /// Keeper pairs by label (`AC`, `CB`, `AB`, `C1C2`, …); all pairs if absent.
    pub pairs: Option<Vec<String>>,
    /// Weight per pair label; unlisted pairs weigh 1.
    pub weights: Option<BTreeMap<String, u32>>,
}

fn one() -> u64 {
    1
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    parties: usize,
    rounds: usize,
    #[serde(default = "one")]
    epochs: u64,
    seed: Option<u64>,
    #[serde(default)]
    parallel: bool,
    #[serde(default)]
    schedule: ScheduleConfig,
    #[serde(default)]
    noise: NoiseParams,
    #[serde(default)]
    adversary: AdversarySpec,
    #[serde(default)]
    postproc: PostprocConfig,
    #[serde(default)]
    distinguish: DistinguishConfig,
    #[serde(default)]
    verify: VerifyConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LineConfig {
    pub parties: usize,
    pub rounds: usize,
    pub epochs: u64,
    pub seed: u64,
    /// Evaluate rounds on the thread pool. Results are identical either way.
    pub parallel: bool,
    pub schedule: ScheduleConfig,
    /// Bob's detector.
    pub noise: NoiseParams,
    pub adversary: AdversarySpec,
    pub postproc: PostprocConfig,
    pub distinguish: DistinguishConfig,
    pub verify: VerifyConfig,
}

impl LineConfig {
    /// A noiseless, passive configuration with defaults elsewhere.
    pub fn new(parties: usize, rounds: usize, seed: u64) -> Self {
        LineConfig {
            parties,
            rounds,
            epochs: 1,
            seed,
            parallel: false,
            schedule: ScheduleConfig::default(),
            noise: NoiseParams::NONE,
            adversary: AdversarySpec::Passive,
            postproc: PostprocConfig::default(),
            distinguish: DistinguishConfig::default(),
            verify: VerifyConfig::default(),
        }
    }

    pub fn from_toml_str(text: &str, seed_override: Option<u64>) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let seed = seed_override.or(raw.seed).ok_or(ConfigError::MissingSeed)?;
        let cfg = LineConfig {
            parties: raw.parties,
            rounds: raw.rounds,
            epochs: raw.epochs,
            seed,
            parallel: raw.parallel,
            schedule: raw.schedule,
            noise: raw.noise,
            adversary: raw.adversary,
            postproc: raw.postproc,
            distinguish: raw.distinguish,
            verify: raw.verify,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path, seed_override: Option<u64>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text, seed_override)
    }

    pub fn line(&self) -> Result<Line, ConfigError> {
        Line::new(self.parties).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        let line = self.line()?;
        if self.rounds == 0 {
            return invalid("rounds must be at least 1".into());
        }
        if self.epochs == 0 {
            return invalid("epochs must be at least 1".into());
        }
        self.noise.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.postproc.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.adversary.build()?.validate(line.hops()).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.distinguish.rounds == 0 || self.distinguish.key_len == 0 {
            return invalid("distinguish.rounds and distinguish.key_len must be positive".into());
        }
        if !(self.verify.c_bar > 0.0 && self.verify.c_bar < 1.0) {
            return invalid("verify.c_bar must lie in (0, 1)".into());
        }
        self.schedule()?;
        Ok(())
    }

    /// Pairs to schedule and their weights, resolved from labels.
    pub fn schedule(&self) -> Result<Schedule, ConfigError> {
        let line = self.line()?;
        let pairs = match &self.schedule.pairs {
            None => line.pairs(),
            Some(labels) => labels
                .iter()
                .map(|l| line.pair_by_label(l).ok_or_else(|| ConfigError::Invalid(format!("unknown pair `{l}`"))))
                .collect::<Result<Vec<_>, _>>()?,
        };
        let weights = match &self.schedule.weights {
            None => None,
            Some(map) => {
                if let Some(k) = map.keys().find(|k| !pairs.iter().any(|p| &line.pair_label(*p) == *k)) {
                    return Err(ConfigError::Invalid(format!("weight for unscheduled pair `{k}`")));
                }
                Some(pairs.iter().map(|p| map.get(&line.pair_label(*p)).copied().unwrap_or(1)).collect::<Vec<u32>>())
            }
        };
        round_robin(line, &pairs, self.epochs, weights.as_deref()).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Post-processing settings for the short distinguisher runs.
    pub fn distinguish_postproc(&self) -> PostprocConfig {
        PostprocConfig {
            final_key_len: Some(self.distinguish.key_len),
            verify_tag_bits: self.distinguish.verify_tag_bits,
            pa_output_ratio: self.distinguish.pa_output_ratio,
            ..self.postproc
        }
    }
}
