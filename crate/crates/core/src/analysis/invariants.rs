use super::abort::abort_equivalence;
use super::distinguish::{run_interaction, signature, Interaction};
use super::verify::Check;
use super::{AnalysisError, Report};
use crate::postproc::PostprocConfig;
use crate::protocol::Line;
use crate::resources::{
    ideal_system, qline_system, Dest, Direction, InterfaceLabel, LineMessage, MsgBody, Payload, PortKind, Psk,
    QlineSpec, ResourceError, SigmaVariant, System, View,
};

/// Rounds of the exhaustive lattice runs.
pub const LATTICE_ROUNDS: usize = 16;

fn lattice_postproc() -> PostprocConfig {
    PostprocConfig { final_key_len: Some(1), verify_tag_bits: 0, pa_output_ratio: 1.0, ..PostprocConfig::default() }
}

fn outer(v: &View) -> Vec<String> {
    v.outputs
        .iter()
        .filter(|o| o.port != "key")
        .map(|o| format!("{} {}.{}={}", o.step, o.iface, o.port, o.payload))
        .collect()
}

fn ratio_check(name: &str, bad: usize, total: usize, what: &str) -> Check {
    Check {
        name: name.into(),
        passed: bad == 0 && total > 0,
        residual: if total == 0 { 1.0 } else { bad as f64 / total as f64 },
        detail: format!("{bad}/{total} {what}"),
    }
}

fn rejects_non_qubits(sys: &mut System) -> (usize, usize) {
    let bad = [
        Payload::Psk(Psk(0)),
        Payload::Lever(true),
        Payload::Key(Some(vec![false, true])),
        Payload::Size(2),
        Payload::Classical(LineMessage { from: 0, to: Dest::All, body: MsgBody::Abort { reason: String::new() } }),
    ];
    let ports: Vec<(String, String)> = sys
        .interfaces()
        .iter()
        .flat_map(|i| {
            i.ports
                .iter()
                .filter(|p| p.kind == PortKind::Qubit && p.direction == Direction::In)
                .map(move |p| (i.name.clone(), p.name.clone()))
        })
        .collect();
    let mut accepted = 0;
    for (i, p) in &ports {
        for payload in &bad {
            if !matches!(sys.input_named(i, p, payload.clone()), Err(ResourceError::PayloadViolation { .. })) {
                accepted += 1;
            }
        }
    }
    (accepted, ports.len() * bad.len())
}

fn outer_writes(sys: &System) -> Vec<String> {
    sys.interfaces()
        .iter()
        .filter(|i| i.label == InterfaceLabel::Outer)
        .flat_map(|i| {
            i.ports
                .iter()
                .filter(|p| p.direction == Direction::In && !matches!(p.kind, PortKind::Qubit | PortKind::Lever))
                .map(move |p| format!("{}.{}", i.name, p.name))
        })
        .collect()
}

/// Structural and behavioural checks of the real line against the ideal key
/// with simulator `variant`, for every keeper pair of a three-party line.
pub fn verify_resources(variant: SigmaVariant, rounds: usize, seeds: &[u64]) -> Result<Report, AnalysisError> {
    let line = Line::new(3).expect("three parties");
    let mut interfaces = (0, 0);
    let mut transcripts = (0, 0);
    let mut aborts = (0, 0);
    let mut qubit_ports = (0, 0);
    let mut writes = Vec::new();
    for pair in ["AC", "CB", "AB"] {
        let spec = QlineSpec::variant(
            line,
            pair,
            rounds,
            PostprocConfig {
                final_key_len: Some(4),
                verify_tag_bits: 4,
                pa_output_ratio: 1.0,
                ..PostprocConfig::default()
            },
        )?;
        let real = |s: u64| qline_system(&spec, s);
        let ideal = |s: u64| ideal_system(&spec, s, variant);
        interfaces.1 += 1;
        if signature(&real(0)?) != signature(&ideal(0)?) {
            interfaces.0 += 1;
        }
        for &seed in seeds {
            for interaction in [Interaction::Honest, Interaction::MismatchedPsks, Interaction::Lever(1)] {
                let rv = run_interaction(&mut real(seed)?, &spec, interaction, seed)?;
                let iv = run_interaction(&mut ideal(seed)?, &spec, interaction, seed)?;
                transcripts.1 += 1;
                if outer(&rv) != outer(&iv) {
                    transcripts.0 += 1;
                }
            }
        }
        let lattice = QlineSpec::variant(line, pair, LATTICE_ROUNDS, lattice_postproc())?;
        let real = |s: u64| qline_system(&lattice, s);
        let ideal = |s: u64| ideal_system(&lattice, s, variant);
        for c in abort_equivalence(&real, &ideal, &lattice, seeds)? {
            aborts.1 += 1;
            if c.real_aborted != c.ideal_aborted {
                aborts.0 += 1;
            }
        }
        for mut sys in [real(0)?, ideal(0)?] {
            let (a, t) = rejects_non_qubits(&mut sys);
            qubit_ports.0 += a;
            qubit_ports.1 += t;
            writes.extend(outer_writes(&sys));
        }
    }
    let checks = vec![
        ratio_check("interfaces_match", interfaces.0, interfaces.1, "variants differ"),
        ratio_check("outer_transcript_simulated", transcripts.0, transcripts.1, "runs differ"),
        ratio_check("abort_equivalence", aborts.0, aborts.1, "lattice points differ"),
        ratio_check("single_qubit_ports", qubit_ports.0, qubit_ports.1, "non-qubit inputs accepted"),
        Check {
            name: "no_authenticated_writes".into(),
            passed: writes.is_empty(),
            residual: writes.len() as f64,
            detail: if writes.is_empty() { "outer inputs are qubits and levers".into() } else { writes.join(", ") },
        },
    ];
    Ok(Report { name: "resources".into(), checks })
}
