//! Command implementations behind the `qline` binary.
//!
//! Every command returns its records as JSON lines plus an exit status, so
//! the binary only parses flags and writes output. Record schemas:
//!
//! * `qline.run/1`: one per epoch with `epoch`, `pair`, `sift_count`,
//!   `qber_estimate`, `final_key_len`, `aborted`, `abort_reason` (a stable
//!   code) and `abort_detail`.
//! * `qline.verify/1`: one per check (`suite`, `check`, `passed`,
//!   `residual`, `detail`), then one `summary` per suite and an overall one
//!   with `suite = "all"`.
//! * `qline.advantage/1`: one per variant and distinguisher with
//!   `simulator`, `n_samples`, `advantage`, `ci_low`, `ci_high`,
//!   `ci_contains_zero` and the raw `guessed_real` counts.
//!
//! Keys appear in the order listed and floats use the shortest round-trip
//! form, so identical inputs produce byte-identical output.

use qline_core::analysis::{
    estimate_advantages, verify_lemmas, verify_resources, AnalysisError, Distinguisher, Mutation, Report,
};
use qline_core::config::{AdversarySpec, ConfigError};
use qline_core::protocol::ProtocolError;
use qline_core::resources::{ideal_system, qline_system, QlineSpec, SigmaVariant};
use qline_core::{run_line, LineConfig};
use serde::Serialize;
use std::path::Path;
use thiserror::Error;

pub const RUN_SCHEMA: &str = "qline.run/1";
pub const VERIFY_SCHEMA: &str = "qline.verify/1";
pub const ADVANTAGE_SCHEMA: &str = "qline.advantage/1";

/// Seeds of the behavioural resource checks run by `verify`.
const VERIFY_SEEDS: [u64; 2] = [0, 1];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    VerificationFailed = 1,
    ConfigError = 2,
    AllAborted = 3,
}

impl Exit {
    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("protocol error: {0}")]
    Protocol(#[from] ProtocolError),
    #[error("analysis error: {0}")]
    Analysis(#[from] AnalysisError),
}

impl CliError {
    pub fn exit(&self) -> Exit {
        match self {
            CliError::Config(_) | CliError::Usage(_) => Exit::ConfigError,
            _ => Exit::VerificationFailed,
        }
    }
}

/// Records of one command and how the process should exit.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub records: Vec<String>,
    pub exit: Exit,
}

impl Outcome {
    pub fn render(&self) -> String {
        self.records.iter().map(|r| format!("{r}\n")).collect()
    }
}

fn line<T: Serialize>(record: &T) -> String {
    serde_json::to_string(record).expect("records serialize")
}

pub fn load_config(path: &Path, seed: Option<u64>) -> Result<LineConfig, CliError> {
    Ok(LineConfig::from_path(path, seed)?)
}

#[derive(Serialize)]
struct RunRecord<'a> {
    schema: &'static str,
    epoch: u64,
    pair: &'a str,
    sift_count: usize,
    qber_estimate: Option<f64>,
    final_key_len: usize,
    aborted: bool,
    abort_reason: Option<&'static str>,
    abort_detail: Option<String>,
}

/// Runs every scheduled epoch. Exits with [`Exit::AllAborted`] when no epoch
/// produced a key.
pub fn cmd_run(cfg: &LineConfig) -> Result<Outcome, CliError> {
    let adversary = cfg.adversary.build()?;
    let t = run_line(cfg, adversary.as_ref())?;
    let records = t
        .epochs
        .iter()
        .map(|e| {
            line(&RunRecord {
                schema: RUN_SCHEMA,
                epoch: e.epoch,
                pair: &e.pair_label,
                sift_count: e.sift_count(),
                qber_estimate: e.qber_estimate,
                final_key_len: e.final_key_len(),
                aborted: e.aborted(),
                abort_reason: e.abort.as_ref().map(|a| a.code()),
                abort_detail: e.abort.as_ref().map(|a| a.to_string()),
            })
        })
        .collect();
    let exit = if t.all_aborted() { Exit::AllAborted } else { Exit::Ok };
    Ok(Outcome { records, exit })
}

#[derive(Serialize)]
struct CheckRecord<'a> {
    schema: &'static str,
    suite: &'a str,
    check: &'a str,
    passed: bool,
    residual: f64,
    detail: &'a str,
}

#[derive(Serialize)]
struct SummaryRecord<'a> {
    schema: &'static str,
    suite: &'a str,
    check: &'static str,
    passed: bool,
    max_residual: f64,
    mutation: Option<&'static str>,
}

fn simulator_for(mutation: Option<Mutation>) -> SigmaVariant {
    if mutation == Some(Mutation::BrokenSimulator) {
        SigmaVariant::IgnoresMismatch
    } else {
        SigmaVariant::Faithful
    }
}

/// All reports `verify` produces for `cfg`, lemmas first.
pub fn verify_reports(cfg: &LineConfig, mutation: Option<Mutation>) -> Result<Vec<Report>, CliError> {
    let mut reports = verify_lemmas(&cfg.noise, cfg.verify.c_bar, mutation);
    reports.push(verify_resources(simulator_for(mutation), cfg.distinguish.rounds, &VERIFY_SEEDS)?);
    Ok(reports)
}

/// Runs the lemma verifications and the resource invariants. Exits with
/// [`Exit::VerificationFailed`] if any check fails.
pub fn cmd_verify(cfg: &LineConfig, mutation: Option<Mutation>) -> Result<Outcome, CliError> {
    let reports = verify_reports(cfg, mutation)?;
    let mut records = Vec::new();
    for r in &reports {
        for c in &r.checks {
            records.push(line(&CheckRecord {
                schema: VERIFY_SCHEMA,
                suite: &r.name,
                check: &c.name,
                passed: c.passed,
                residual: c.residual,
                detail: &c.detail,
            }));
        }
        records.push(line(&SummaryRecord {
            schema: VERIFY_SCHEMA,
            suite: &r.name,
            check: "summary",
            passed: r.passed(),
            max_residual: r.max_residual(),
            mutation: mutation.map(Mutation::name),
        }));
    }
    let passed = reports.iter().all(Report::passed);
    records.push(line(&SummaryRecord {
        schema: VERIFY_SCHEMA,
        suite: "all",
        check: "summary",
        passed,
        max_residual: reports.iter().map(Report::max_residual).fold(0.0, f64::max),
        mutation: mutation.map(Mutation::name),
    }));
    Ok(Outcome { records, exit: if passed { Exit::Ok } else { Exit::VerificationFailed } })
}

#[derive(Serialize)]
struct AdvantageRecord<'a> {
    schema: &'static str,
    variant: &'a str,
    distinguisher: &'a str,
    simulator: &'static str,
    n_samples: usize,
    advantage: f64,
    ci_low: f64,
    ci_high: f64,
    ci_contains_zero: bool,
    guessed_real: [u64; 2],
}

/// Per-variant specification of the short distinguisher runs.
pub fn distinguish_specs(cfg: &LineConfig) -> Result<Vec<QlineSpec>, CliError> {
    let line = cfg.line()?;
    let postproc = cfg.distinguish_postproc();
    line.pairs()
        .into_iter()
        .map(|p| {
            let mut spec = QlineSpec::variant(line, &line.pair_label(p), cfg.distinguish.rounds, postproc)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            spec.noise = cfg.noise;
            Ok(spec)
        })
        .collect()
}

/// Estimates every shipped distinguisher's advantage on every keeper pair.
/// Only `broken-simulator` is a meaningful mutation here.
pub fn cmd_distinguish(
    cfg: &LineConfig,
    n_samples: usize,
    mutation: Option<Mutation>,
    parallel: bool,
) -> Result<Outcome, CliError> {
    if let Some(m) = mutation.filter(|m| *m != Mutation::BrokenSimulator) {
        return Err(CliError::Usage(format!("mutation `{m}` does not apply to distinguish")));
    }
    if cfg.adversary != AdversarySpec::Passive {
        return Err(CliError::Usage("distinguish runs against the passive adversary only".into()));
    }
    let variant = simulator_for(mutation);
    let simulator = match variant {
        SigmaVariant::Faithful => "faithful",
        SigmaVariant::IgnoresMismatch => "ignores-mismatch",
    };
    let mut records = Vec::new();
    for spec in distinguish_specs(cfg)? {
        let real = |s: u64| qline_system(&spec, s);
        let ideal = |s: u64| ideal_system(&spec, s, variant);
        for est in estimate_advantages(&real, &ideal, &spec, &Distinguisher::ALL, n_samples, cfg.seed, parallel)? {
            records.push(line(&AdvantageRecord {
                schema: ADVANTAGE_SCHEMA,
                variant: &est.variant,
                distinguisher: &est.distinguisher,
                simulator,
                n_samples: est.n_samples,
                advantage: est.point,
                ci_low: est.ci_95.0,
                ci_high: est.ci_95.1,
                ci_contains_zero: est.ci_contains_zero(),
                guessed_real: [est.guessed_real.0, est.guessed_real.1],
            }));
        }
    }
    Ok(Outcome { records, exit: Exit::Ok })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> LineConfig {
        let mut c = LineConfig::new(3, 1000, 7);
        c.epochs = 3;
        c
    }

    #[test]
    fn noiseless_run_gives_one_success_per_epoch() {
        let out = cmd_run(&cfg()).unwrap();
        assert_eq!(out.exit, Exit::Ok);
        assert_eq!(out.records.len(), 3);
        for (i, r) in out.records.iter().enumerate() {
            let v: serde_json::Value = serde_json::from_str(r).unwrap();
            assert_eq!(v["schema"], RUN_SCHEMA);
            assert_eq!(v["epoch"], i as u64);
            assert_eq!(v["aborted"], false);
            assert_eq!(v["qber_estimate"], 0.0);
            assert!(v["abort_reason"].is_null());
        }
    }

    #[test]
    fn intercept_resend_aborts_every_epoch() {
        let mut c = cfg();
        c.rounds = 4000;
        c.adversary = AdversarySpec::InterceptResend { hop: 0, basis: qline_core::adversary::BasisPolicy::Random };
        let out = cmd_run(&c).unwrap();
        assert_eq!(out.exit, Exit::AllAborted);
        for r in &out.records {
            let v: serde_json::Value = serde_json::from_str(r).unwrap();
            assert!((v["qber_estimate"].as_f64().unwrap() - 0.25).abs() < 0.05);
            assert_eq!(v["aborted"], true);
        }
    }

    #[test]
    fn verify_passes_and_every_mutation_fails() {
        let c = cfg();
        assert_eq!(cmd_verify(&c, None).unwrap().exit, Exit::Ok);
        for m in Mutation::ALL {
            assert_eq!(cmd_verify(&c, Some(m)).unwrap().exit, Exit::VerificationFailed, "{m}");
        }
    }

    #[test]
    fn distinguish_rejects_other_mutations_and_few_samples() {
        let c = cfg();
        assert_eq!(cmd_distinguish(&c, 100, Some(Mutation::BiasedPrep), false).unwrap_err().exit(), Exit::ConfigError);
        assert!(matches!(
            cmd_distinguish(&c, 10, None, false),
            Err(CliError::Analysis(AnalysisError::TooFewSamples { .. }))
        ));
    }
}
