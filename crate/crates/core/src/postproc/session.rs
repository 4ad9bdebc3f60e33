use super::reconcile::{parities, permutation, Bisection, DriverStep};
use super::sampling::{remove_positions, sample_positions};
use super::toeplitz::privacy_amplify;
use super::{FinalKey, PostprocConfig, PostprocError};
use crate::rng::SeededRng;
use crate::Bits;
use rand::Rng;
use std::collections::VecDeque;
use std::fmt;

/// Public post-processing messages exchanged by the two keepers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PublicMsg {
    SampleRequest { positions: Vec<usize>, bits: Bits },
    SampleReply { bits: Bits },
    ParityQuery { pass: u32, ranges: Vec<(usize, usize)> },
    ParityReply { parities: Bits },
    ReconcileDone { disclosed: usize },
    VerifyTag { seed: Bits, tag: Bits },
    VerifyResult { ok: bool },
    PaSeed { seed: Bits, out_len: usize },
}

pub(crate) fn bit_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

impl fmt::Display for PublicMsg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PublicMsg::SampleRequest { positions, bits } => {
                write!(f, "sample n={} bits={}", positions.len(), bit_string(bits))
            }
            PublicMsg::SampleReply { bits } => write!(f, "sample-reply bits={}", bit_string(bits)),
            PublicMsg::ParityQuery { pass, ranges } => write!(f, "parity-query pass={pass} n={}", ranges.len()),
            PublicMsg::ParityReply { parities } => write!(f, "parity-reply bits={}", bit_string(parities)),
            PublicMsg::ReconcileDone { disclosed } => write!(f, "reconciled disclosed={disclosed}"),
            PublicMsg::VerifyTag { seed, tag } => write!(f, "verify seed={} tag={}", seed.len(), bit_string(tag)),
            PublicMsg::VerifyResult { ok } => write!(f, "verify-result ok={}", *ok as u8),
            PublicMsg::PaSeed { seed, out_len } => write!(f, "pa-seed len={} out={out_len}", seed.len()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Initiator,
    Responder,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Initiator => Side::Responder,
            Side::Responder => Side::Initiator,
        }
    }
}

#[derive(Debug)]
pub enum Step {
    Send(Vec<PublicMsg>),
    Finished { send: Vec<PublicMsg>, result: Result<FinalKey, PostprocError> },
}

#[derive(Debug)]
enum State {
    Idle,
    AwaitSampleReply { positions: Vec<usize> },
    AwaitSampleRequest,
    Answering { perm: Option<(u32, Vec<usize>)> },
    Correcting(Bisection),
    AwaitVerifyTag,
    AwaitVerifyResult { out_len: usize },
    AwaitPaSeed,
    Done,
}

/// One keeper's post-processing state machine. The initiator samples,
/// answers parity queries and chooses the hash seeds; the responder bisects
/// towards the initiator's key.
#[derive(Debug)]
pub struct Endpoint {
    side: Side,
    cfg: PostprocConfig,
    epoch: u64,
    rng: SeededRng,
    key: Bits,
    state: State,
    qber: Option<f64>,
    disclosed: usize,
}

impl Endpoint {
    pub fn new(side: Side, key: Bits, cfg: PostprocConfig, epoch: u64, rng: SeededRng) -> Self {
        let state = match side {
            Side::Initiator => State::Idle,
            Side::Responder => State::AwaitSampleRequest,
        };
        Endpoint { side, cfg, epoch, rng, key, state, qber: None, disclosed: 0 }
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn qber(&self) -> Option<f64> {
        self.qber
    }

    pub fn disclosed(&self) -> usize {
        self.disclosed
    }

    fn fail(&mut self, send: Vec<PublicMsg>, e: PostprocError) -> Step {
        self.state = State::Done;
        Step::Finished { send, result: Err(e) }
    }

    fn finish(&mut self, send: Vec<PublicMsg>, bits: Bits) -> Step {
        self.state = State::Done;
        let qber_estimate = self.qber.unwrap_or(0.0);
        Step::Finished { send, result: Ok(FinalKey { bits, epoch: self.epoch, qber_estimate }) }
    }

    /// Initiator's opening move. The responder has none.
    pub fn start(&mut self) -> Step {
        if self.side == Side::Responder || !matches!(self.state, State::Idle) {
            return Step::Send(Vec::new());
        }
        match sample_positions(self.key.len(), self.cfg.sample_fraction, &mut self.rng) {
            Ok(positions) => {
                let bits = positions.iter().map(|&i| self.key[i]).collect();
                self.state = State::AwaitSampleReply { positions: positions.clone() };
                Step::Send(vec![PublicMsg::SampleRequest { positions, bits }])
            }
            Err(e) => self.fail(Vec::new(), e),
        }
    }

    fn record_sample(&mut self, positions: &[usize], theirs: &[bool]) -> Result<f64, PostprocError> {
        if theirs.len() != positions.len() || positions.iter().any(|&i| i >= self.key.len()) {
            return Err(PostprocError::Protocol("malformed sample".into()));
        }
        if positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PostprocError::Protocol("sample positions not ascending".into()));
        }
        let errs = positions.iter().zip(theirs).filter(|(&i, &b)| self.key[i] != b).count();
        let qber = if positions.is_empty() { 0.0 } else { errs as f64 / positions.len() as f64 };
        self.qber = Some(qber);
        self.key = remove_positions(&self.key, positions);
        Ok(qber)
    }

    fn qber_ok(&self, qber: f64) -> Result<(), PostprocError> {
        if qber > self.cfg.qber_abort_threshold {
            Err(PostprocError::QberAboveThreshold { qber, threshold: self.cfg.qber_abort_threshold })
        } else {
            Ok(())
        }
    }

    fn output_len(&self) -> Result<usize, PostprocError> {
        let raw = (self.cfg.pa_output_ratio * self.key.len() as f64).floor() as i64;
        let budget = raw - self.disclosed as i64 - self.cfg.verify_tag_bits as i64;
        match self.cfg.final_key_len {
            Some(s) if budget >= s as i64 => Ok(s),
            None if budget >= 1 => Ok(budget as usize),
            needed => {
                Err(PostprocError::InsufficientKey { available: budget.max(0) as usize, needed: needed.unwrap_or(1) })
            }
        }
    }

    fn random_bits(&mut self, n: usize) -> Bits {
        (0..n).map(|_| self.rng.random()).collect()
    }

    fn amplify(&mut self, out_len: usize) -> Step {
        let need = self.key.len() + out_len - 1;
        let len = self.cfg.pa_seed_length.unwrap_or(need);
        let seed = self.random_bits(len);
        match privacy_amplify(&self.key, &seed, out_len) {
            Ok(bits) => self.finish(vec![PublicMsg::PaSeed { seed, out_len }], bits),
            Err(e) => self.fail(Vec::new(), e),
        }
    }

    pub fn receive(&mut self, msg: PublicMsg) -> Step {
        match self.handle(msg) {
            Ok(step) => step,
            Err(e) => self.fail(Vec::new(), e),
        }
    }

    fn handle(&mut self, msg: PublicMsg) -> Result<Step, PostprocError> {
        let state = std::mem::replace(&mut self.state, State::Done);
        let step = match (state, msg) {
            (State::AwaitSampleReply { positions }, PublicMsg::SampleReply { bits }) => {
                let qber = self.record_sample(&positions, &bits)?;
                self.qber_ok(qber)?;
                self.state = State::Answering { perm: None };
                Step::Send(Vec::new())
            }
            (State::AwaitSampleRequest, PublicMsg::SampleRequest { positions, bits }) => {
                let mine: Bits = positions.iter().map(|&i| self.key.get(i).copied().unwrap_or(false)).collect();
                let qber = self.record_sample(&positions, &bits)?;
                let reply = PublicMsg::SampleReply { bits: mine };
                if let Err(e) = self.qber_ok(qber) {
                    return Ok(self.fail(vec![reply], e));
                }
                let mut driver = Bisection::new(std::mem::take(&mut self.key));
                let first = driver.start();
                self.drive(driver, first, vec![reply])?
            }
            (State::Answering { perm }, PublicMsg::ParityQuery { pass, ranges }) => {
                if ranges.iter().any(|&(s, e)| s >= e || e > self.key.len()) {
                    return Err(PostprocError::Protocol("parity range out of bounds".into()));
                }
                let p = match perm {
                    Some((p, v)) if p == pass => v,
                    _ => permutation(pass, self.key.len()),
                };
                self.disclosed += ranges.len();
                let reply = PublicMsg::ParityReply { parities: parities(&self.key, &p, &ranges) };
                self.state = State::Answering { perm: Some((pass, p)) };
                Step::Send(vec![reply])
            }
            (State::Answering { .. }, PublicMsg::ReconcileDone { disclosed }) => {
                if disclosed != self.disclosed {
                    return Err(PostprocError::Protocol("disclosure counts disagree".into()));
                }
                let out_len = self.output_len()?;
                if self.cfg.verify_tag_bits == 0 {
                    return Ok(self.amplify(out_len));
                }
                let t = self.cfg.verify_tag_bits;
                let seed = self.random_bits(self.key.len() + t - 1);
                let tag = privacy_amplify(&self.key, &seed, t)?;
                self.state = State::AwaitVerifyResult { out_len };
                Step::Send(vec![PublicMsg::VerifyTag { seed, tag }])
            }
            (State::Correcting(mut driver), PublicMsg::ParityReply { parities }) => {
                let next = driver.on_reply(&parities)?;
                self.drive(driver, next, Vec::new())?
            }
            (State::AwaitVerifyTag, PublicMsg::VerifyTag { seed, tag }) => {
                let mine = privacy_amplify(&self.key, &seed, tag.len())?;
                let ok = mine == tag;
                let reply = PublicMsg::VerifyResult { ok };
                if !ok {
                    return Ok(self.fail(vec![reply], PostprocError::VerificationFailed));
                }
                self.state = State::AwaitPaSeed;
                Step::Send(vec![reply])
            }
            (State::AwaitVerifyResult { out_len }, PublicMsg::VerifyResult { ok }) => {
                if !ok {
                    return Err(PostprocError::VerificationFailed);
                }
                self.amplify(out_len)
            }
            (State::AwaitPaSeed, PublicMsg::PaSeed { seed, out_len }) => {
                let bits = privacy_amplify(&self.key, &seed, out_len)?;
                self.finish(Vec::new(), bits)
            }
            (_, m) => return Err(PostprocError::Protocol(format!("unexpected message: {m}"))),
        };
        Ok(step)
    }

    fn drive(&mut self, driver: Bisection, step: DriverStep, mut send: Vec<PublicMsg>) -> Result<Step, PostprocError> {
        match step {
            DriverStep::Query { pass, ranges } => {
                send.push(PublicMsg::ParityQuery { pass, ranges });
                self.state = State::Correcting(driver);
                Ok(Step::Send(send))
            }
            DriverStep::Done => {
                self.disclosed = driver.disclosed();
                self.key = driver.into_key();
                send.push(PublicMsg::ReconcileDone { disclosed: self.disclosed });
                self.state = if self.cfg.verify_tag_bits == 0 { State::AwaitPaSeed } else { State::AwaitVerifyTag };
                Ok(Step::Send(send))
            }
            DriverStep::Failed => Ok(self.fail(send, PostprocError::ReconcileFailed { passes: driver.passes() })),
        }
    }
}

/// Both keepers' results after an in-process exchange.
#[derive(Debug)]
pub struct PairRun {
    pub initiator: Result<FinalKey, PostprocError>,
    pub responder: Result<FinalKey, PostprocError>,
    /// Every public message in order, tagged with its sender.
    pub messages: Vec<(Side, PublicMsg)>,
    pub qber: Option<f64>,
    pub disclosed: usize,
}

impl PairRun {
    pub fn error(&self) -> Option<&PostprocError> {
        self.initiator.as_ref().err().or(self.responder.as_ref().err())
    }
}

/// Runs post-processing between two in-process endpoints. If either side
/// fails, both results carry that error.
pub fn run_pair(
    initiator_key: Bits,
    responder_key: Bits,
    cfg: &PostprocConfig,
    epoch: u64,
    rng_i: SeededRng,
    rng_r: SeededRng,
) -> PairRun {
    let mut ends = [
        Endpoint::new(Side::Initiator, initiator_key, *cfg, epoch, rng_i),
        Endpoint::new(Side::Responder, responder_key, *cfg, epoch, rng_r),
    ];
    let mut results: [Option<Result<FinalKey, PostprocError>>; 2] = [None, None];
    let mut messages = Vec::new();
    let mut queue: VecDeque<(Side, PublicMsg)> = VecDeque::new();
    let handle =
        |from: Side, step: Step, queue: &mut VecDeque<(Side, PublicMsg)>, messages: &mut Vec<(Side, PublicMsg)>| {
            let (send, result) = match step {
                Step::Send(s) => (s, None),
                Step::Finished { send, result } => (send, Some(result)),
            };
            for m in send {
                messages.push((from, m.clone()));
                queue.push_back((from.other(), m));
            }
            result
        };
    let first = ends[0].start();
    let mut failure = None;
    if let Some(r) = handle(Side::Initiator, first, &mut queue, &mut messages) {
        match r {
            Err(e) => failure = Some(e),
            ok => results[0] = Some(ok),
        }
    }
    while failure.is_none() {
        let Some((to, msg)) = queue.pop_front() else { break };
        let idx = (to == Side::Responder) as usize;
        let step = ends[idx].receive(msg);
        if let Some(r) = handle(to, step, &mut queue, &mut messages) {
            match r {
                Err(e) => failure = Some(e),
                ok => results[idx] = Some(ok),
            }
        }
    }
    let qber = ends[0].qber().or(ends[1].qber());
    let disclosed = ends[0].disclosed().max(ends[1].disclosed());
    let [ri, rr] = results;
    let stalled = || Err(PostprocError::Protocol("exchange stalled".into()));
    match failure {
        Some(e) => PairRun { initiator: Err(e.clone()), responder: Err(e), messages, qber, disclosed },
        None => PairRun {
            initiator: ri.unwrap_or_else(stalled),
            responder: rr.unwrap_or_else(stalled),
            messages,
            qber,
            disclosed,
        },
    }
}
