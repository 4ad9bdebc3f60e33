use super::nodes::{alice_prepare, charlie_transform, Detector};
use super::sifting::{build_sifted_keys, reveal_and_combine, sift, RoundRecord};
use super::{Line, ProtocolError, ScheduleEntry};
use crate::adversary::{AdversaryStrategy, Observation, Qubit, QubitContext};
use crate::config::LineConfig;
use crate::postproc::{bit_string, run_pair, Side};
use crate::qmath::MeasureOutcome;
use crate::rng::{derive_rng, stream, SeededRng};
use crate::transcript::{AbortReason, EpochOutcome, Event, EventKind, Interface, Transcript};
use crate::Bits;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Generator of node `position` in `round`. The event-driven nodes use the
/// same derivation, so both executors make identical choices.
pub(crate) fn node_rng(seed: u64, epoch: u64, position: usize, round: usize) -> SeededRng {
    derive_rng(seed, &[stream::NODE, epoch, position as u64, round as u64])
}

pub(crate) fn adversary_rng(seed: u64, epoch: u64, hop: usize, round: usize) -> SeededRng {
    derive_rng(seed, &[stream::ADVERSARY, epoch, hop as u64, round as u64])
}

pub(crate) fn postproc_rng(seed: u64, epoch: u64, position: usize) -> SeededRng {
    derive_rng(seed, &[stream::POSTPROC, epoch, position as u64])
}

struct RoundOut {
    record: RoundRecord,
    /// Whether a qubit entered / left each hop.
    sent: Vec<bool>,
    received: Vec<bool>,
    observations: Vec<Observation>,
}

fn simulate_round(
    seed: u64,
    epoch: u64,
    line: Line,
    detector: &Detector,
    adversary: &dyn AdversaryStrategy,
    round: usize,
) -> RoundOut {
    let n = line.parties();
    let mut bases = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n - 1);
    let mut sent = Vec::with_capacity(n - 1);
    let mut received = Vec::with_capacity(n - 1);
    let mut observations = Vec::new();
    let mut outcome = MeasureOutcome::Inconclusive;

    let mut rng = node_rng(seed, epoch, 0, round);
    let (b, r) = (rng.random::<bool>(), rng.random::<bool>());
    bases.push(b);
    values.push(r);
    let mut qubit = Some(Qubit::from_state(alice_prepare(b, r)));
    let mut idle = SeededRng::seed_from_u64(0);

    for hop in 0..n - 1 {
        sent.push(qubit.is_some());
        if let Some(q) = qubit.take() {
            let ctx = QubitContext { epoch, hop, round };
            let step = if adversary.uses_randomness(hop) {
                adversary.on_qubit(ctx, q, &mut adversary_rng(seed, epoch, hop, round))
            } else {
                adversary.on_qubit(ctx, q, &mut idle)
            };
            qubit = step.qubit;
            observations.extend(step.observation);
        }
        received.push(qubit.is_some());
        let pos = hop + 1;
        let mut rng = node_rng(seed, epoch, pos, round);
        let b = rng.random::<bool>();
        bases.push(b);
        if pos + 1 < n {
            let r = rng.random::<bool>();
            values.push(r);
            qubit = qubit.map(|q| Qubit::from_state(charlie_transform(q.state(), b, r)));
        } else if let Some(q) = qubit.take() {
            outcome = detector.measure(q.state(), b, &mut rng);
        }
    }
    RoundOut { record: RoundRecord { round, bases, values, outcome }, sent, received, observations }
}

/// Events, outcome and adversary memory of one epoch. Event times are
/// assigned when epochs are concatenated.
pub struct EpochRun {
    pub events: Vec<Event>,
    pub outcome: EpochOutcome,
    pub observations: Vec<Observation>,
}

fn copy(epoch: u64, hop: usize, text: String) -> Event {
    Event { time: 0, epoch, interface: Interface::Classical(hop), kind: EventKind::Copy(text) }
}

/// One full protocol run for the keepers in `entry`.
pub fn run_epoch(
    cfg: &LineConfig,
    line: Line,
    detector: &Detector,
    adversary: &dyn AdversaryStrategy,
    entry: &ScheduleEntry,
) -> Result<EpochRun, ProtocolError> {
    let (seed, epoch, hops) = (cfg.seed, entry.epoch, line.hops());
    let keepers = entry.keepers;
    line.check_keepers(keepers)?;
    let rounds: Vec<RoundOut> = if cfg.parallel {
        (0..cfg.rounds).into_par_iter().map(|i| simulate_round(seed, epoch, line, detector, adversary, i)).collect()
    } else {
        (0..cfg.rounds).map(|i| simulate_round(seed, epoch, line, detector, adversary, i)).collect()
    };

    let mut events = Vec::with_capacity(cfg.rounds * hops * 2 + 16);
    let mut observations = Vec::new();
    let mut records = Vec::with_capacity(cfg.rounds);
    for r in rounds {
        for h in 0..hops {
            let round = r.record.round;
            events.push(Event {
                time: 0,
                epoch,
                interface: Interface::Quantum(h),
                kind: EventKind::Leak { round, present: r.sent[h] },
            });
            events.push(Event {
                time: 0,
                epoch,
                interface: Interface::Quantum(h),
                kind: EventKind::Inject { round, present: r.received[h] },
            });
        }
        observations.extend(r.observations);
        records.push(r.record);
    }
    let conclusive: Vec<bool> = records.iter().map(|r| r.outcome.is_conclusive()).collect();
    let mut outcome = EpochOutcome {
        epoch,
        keepers,
        pair_label: line.pair_label(keepers),
        rounds: cfg.rounds,
        conclusive: conclusive.iter().filter(|&&c| c).count(),
        sifted: BTreeMap::new(),
        combined: None,
        qber_estimate: None,
        final_keys: None,
        abort: None,
    };

    let levers: Vec<bool> = (0..hops).map(|h| adversary.lever(epoch, h)).collect();
    for (h, &pulled) in levers.iter().enumerate() {
        events.push(Event { time: 0, epoch, interface: Interface::Classical(h), kind: EventKind::Lever { pulled } });
    }

    // Bob announces first, towards Alice.
    let announcements: Vec<Bits> = (0..line.parties()).map(|p| records.iter().map(|r| r.bases[p]).collect()).collect();
    let bob_msg =
        format!("announce B bases={} conclusive={}", bit_string(&announcements[hops]), bit_string(&conclusive));
    if let Some(blocked) = (0..hops).rev().find(|&h| levers[h]) {
        for h in (blocked..hops).rev() {
            events.push(copy(epoch, h, bob_msg.clone()));
        }
        outcome.abort = Some(AbortReason::Blocked { hop: blocked });
        return Ok(EpochRun { events, outcome, observations });
    }
    for h in (0..hops).rev() {
        events.push(copy(epoch, h, bob_msg.clone()));
    }
    for role in line.roles().filter(|r| *r != line.bob()) {
        let msg = format!("announce {} bases={}", line.label(role), bit_string(&announcements[role.position()]));
        for h in 0..hops {
            events.push(copy(epoch, h, msg.clone()));
        }
    }

    let kept = sift(&announcements, &conclusive)?;
    let sifted = build_sifted_keys(line, &records, &kept)?;
    let reveal = reveal_and_combine(line, &sifted, keepers, epoch)?;
    for (role, bits) in &reveal.disclosed {
        let msg = format!("reveal {} key={}", line.label(*role), bit_string(bits));
        for h in 0..hops {
            events.push(copy(epoch, h, msg.clone()));
        }
    }
    outcome.sifted = sifted;
    let [lo_key, hi_key] = reveal.key.bits.clone();
    outcome.combined = Some(reveal.key);

    let (lo, hi) = (keepers.0.position(), keepers.1.position());
    let run =
        run_pair(lo_key, hi_key, &cfg.postproc, epoch, postproc_rng(seed, epoch, lo), postproc_rng(seed, epoch, hi));
    for (side, msg) in &run.messages {
        let from = if *side == Side::Initiator { line.label(keepers.0) } else { line.label(keepers.1) };
        let text = format!("pp {from} {msg}");
        for h in lo..hi {
            events.push(copy(epoch, h, text.clone()));
        }
    }
    outcome.qber_estimate = run.qber;
    match (run.initiator, run.responder) {
        (Ok(a), Ok(b)) => outcome.final_keys = Some([a, b]),
        (Err(e), _) | (_, Err(e)) => outcome.abort = Some(AbortReason::Postproc(e)),
    }
    Ok(EpochRun { events, outcome, observations })
}

/// Runs every scheduled epoch of `cfg` against `adversary`. Epoch aborts are
/// recorded in the transcript; errors are returned only for invalid setups.
pub fn run_line(cfg: &LineConfig, adversary: &dyn AdversaryStrategy) -> Result<Transcript, ProtocolError> {
    cfg.validate().map_err(|e| ProtocolError::Config(e.to_string()))?;
    let line = Line::new(cfg.parties)?;
    adversary.validate(line.hops())?;
    let detector = Detector::new(&cfg.noise)?;
    let schedule = cfg.schedule().map_err(|e| ProtocolError::Config(e.to_string()))?;
    let mut transcript = Transcript::default();
    for entry in &schedule.entries {
        let run = run_epoch(cfg, line, &detector, adversary, entry)?;
        transcript.events.extend(run.events);
        transcript.adversary_memory.extend(run.observations);
        transcript.epochs.push(run.outcome);
    }
    for (t, e) in transcript.events.iter_mut().enumerate() {
        e.time = t as u64;
    }
    Ok(transcript)
}
