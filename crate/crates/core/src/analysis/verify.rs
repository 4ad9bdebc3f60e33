use crate::adversary::NoiseParams;
use crate::qmath::{
    apply, complementarity_c, ry, trace_distance, Mat2, MeasureOutcome, Povm, QmathError, QuarterTurn, QubitState,
    WeightedState,
};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// Tolerance of the exact identities.
pub const EXACT_TOL: f64 = 1e-12;

/// One named check with its worst residual.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
    pub detail: String,
}

impl Check {
    fn within(name: &str, residual: f64, tol: f64, detail: String) -> Self {
        Check { name: name.into(), passed: residual < tol, residual, detail }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub name: String,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.residual).fold(0.0, f64::max)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}: {}", self.name, if self.passed() { "pass" } else { "FAIL" })?;
        for c in &self.checks {
            writeln!(
                f,
                "  {:<32} {} residual={:.3e} {}",
                c.name,
                if c.passed { "pass" } else { "FAIL" },
                c.residual,
                c.detail
            )?;
        }
        Ok(())
    }
}

/// Deliberate defects used to show that each verification can fail.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mutation {
    /// Alice picks r = 0 with probability 0.7.
    BiasedPrep,
    /// Charlie picks r = 0 with probability 0.7.
    SkewedCharlie,
    /// Bob's inconclusive element depends on the measured state.
    BasisDependentLoss,
    /// σ ignores a zero key size from K.
    BrokenSimulator,
}

impl Mutation {
    pub const ALL: [Mutation; 4] =
        [Mutation::BiasedPrep, Mutation::SkewedCharlie, Mutation::BasisDependentLoss, Mutation::BrokenSimulator];

    pub fn name(self) -> &'static str {
        match self {
            Mutation::BiasedPrep => "biased-prep",
            Mutation::SkewedCharlie => "skewed-charlie",
            Mutation::BasisDependentLoss => "basis-dependent-loss",
            Mutation::BrokenSimulator => "broken-simulator",
        }
    }
}

impl FromStr for Mutation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mutation::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            let names: Vec<_> = Mutation::ALL.iter().map(|m| m.name()).collect();
            format!("unknown mutation `{s}` (expected one of {})", names.join(", "))
        })
    }
}

impl fmt::Display for Mutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How a node picks its quarter turn: basis uniform, value `r` with
/// probability `p_value[b][r]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Preparation {
    pub p_value: [[f64; 2]; 2],
}

impl Preparation {
    pub fn uniform() -> Self {
        Preparation { p_value: [[0.5; 2]; 2] }
    }

    pub fn biased(p_zero: f64) -> Self {
        Preparation { p_value: [[p_zero, 1.0 - p_zero]; 2] }
    }

    /// Probability of quarter turn `b + 2r`.
    pub fn weight(&self, q: QuarterTurn) -> f64 {
        let (b, r) = (q.k() % 2, q.k() / 2);
        0.5 * self.p_value[b as usize][r as usize]
    }

    /// `{ p(r|b) · R(b + 2r) ρ R(b + 2r)† }_r` for basis `b`.
    pub fn ensemble(&self, rho: &QubitState, b: bool) -> Vec<WeightedState> {
        [false, true]
            .into_iter()
            .map(|r| {
                WeightedState::new(self.p_value[b as usize][r as usize], apply(&ry(QuarterTurn::from_bits(b, r)), rho))
            })
            .collect()
    }
}

fn bb84_states() -> Vec<(&'static str, QubitState)> {
    QuarterTurn::ALL
        .into_iter()
        .zip(["|0>", "|+>", "|1>", "|->"])
        .map(|(q, n)| (n, apply(&ry(q), &QubitState::zero())))
        .collect()
}

fn weighted_sum(ens: &[WeightedState]) -> Mat2 {
    ens.iter().map(WeightedState::operator).sum()
}

/// Basis-independence and complementarity of Alice's preparation.
pub fn verify_alice_assumption(prep: &Preparation, c_bar: f64) -> Report {
    let zero = QubitState::zero();
    let (e0, e1) = (prep.ensemble(&zero, false), prep.ensemble(&zero, true));
    let (s0, s1) = (weighted_sum(&e0), weighted_sum(&e1));
    let mut checks = vec![Check::within(
        "basis_sums_equal",
        s0.max_abs_diff(&s1),
        EXACT_TOL,
        "sum over r of rho^{0,r} vs rho^{1,r}".into(),
    )];
    let y = ry(QuarterTurn::wrapping(2));
    let lemma_form = (zero.density() + zero.density().conjugate_by(y.matrix())).scale_re(0.5);
    checks.push(Check::within(
        "sum_is_rho_plus_y_rho_y",
        s0.max_abs_diff(&lemma_form).max(s1.max_abs_diff(&lemma_form)),
        EXACT_TOL,
        "(rho + Y rho Y)/2".into(),
    ));
    checks.push(complementarity_check("complementarity", &e0, &e1, c_bar));
    Report { name: "alice_assumption".into(), checks }
}

fn complementarity_check(name: &str, e0: &[WeightedState], e1: &[WeightedState], c_bar: f64) -> Check {
    match complementarity_c(e0, e1) {
        Ok(c) => Check {
            name: name.into(),
            passed: c <= c_bar,
            residual: (c - c_bar).max(0.0),
            detail: format!("c={c:.12} bound={c_bar}"),
        },
        Err(e) => {
            // c is undefined when the basis sums differ; report that gap
            let residual = match &e {
                QmathError::EnsembleMismatch { residual } => *residual,
                _ => 1.0,
            };
            Check { name: name.into(), passed: false, residual, detail: e.to_string() }
        }
    }
}

/// Charlie's output looks like a QKD Alice's: uniform combined angle, the
/// same average state, and basis-independent rotated ensembles.
pub fn verify_charlie_is_alice(charlie: &Preparation, c_bar: f64) -> Report {
    let alice = Preparation::uniform();
    let mut dist: BTreeMap<u8, (usize, f64)> = BTreeMap::new();
    let mut avg = Mat2::ZERO;
    for qa in QuarterTurn::ALL {
        for qc in QuarterTurn::ALL {
            let w = alice.weight(qa) * charlie.weight(qc);
            let q = qa + qc;
            let e = dist.entry(q.k()).or_default();
            e.0 += 1;
            e.1 += w;
            avg = avg + apply(&ry(q), &QubitState::zero()).density().scale_re(w);
        }
    }
    let count_dev = QuarterTurn::ALL.iter().map(|q| dist.get(&q.k()).map_or(4, |e| e.0.abs_diff(4))).max().unwrap_or(0);
    let prob_dev =
        QuarterTurn::ALL.iter().map(|q| (dist.get(&q.k()).map_or(0.0, |e| e.1) - 0.25).abs()).fold(0.0, f64::max);
    let mut checks = vec![Check::within(
        "combined_angle_uniform",
        prob_dev.max(count_dev as f64),
        EXACT_TOL,
        format!("counts {:?}", dist.values().map(|e| e.0).collect::<Vec<_>>()),
    )];
    let qkd_avg: Mat2 = QuarterTurn::ALL
        .into_iter()
        .map(|q| apply(&ry(q), &QubitState::zero()).density().scale_re(alice.weight(q)))
        .sum();
    let td = match (QubitState::mixed(avg), QubitState::mixed(qkd_avg)) {
        (Ok(a), Ok(b)) => trace_distance(&a, &b),
        _ => 1.0,
    };
    checks.push(Check::within("average_output_state", td, EXACT_TOL, "trace distance to QKD Alice average".into()));
    let y = ry(QuarterTurn::wrapping(2));
    let mut ens_res: f64 = 0.0;
    let mut worst_c: Option<Check> = None;
    for (_, rho) in bb84_states() {
        let (e0, e1) = (charlie.ensemble(&rho, false), charlie.ensemble(&rho, true));
        let target = rho.density() + rho.density().conjugate_by(y.matrix());
        let (s0, s1) = (weighted_sum(&e0).scale_re(2.0), weighted_sum(&e1).scale_re(2.0));
        ens_res = ens_res.max(s0.max_abs_diff(&target)).max(s1.max_abs_diff(&target));
        let c = complementarity_check("charlie_complementarity", &e0, &e1, c_bar);
        if worst_c.as_ref().is_none_or(|w| c.residual > w.residual || (!c.passed && w.passed)) {
            worst_c = Some(c);
        }
    }
    checks.push(Check::within("rotated_ensembles", ens_res, EXACT_TOL, "both basis sums equal rho + Y rho Y".into()));
    checks.extend(worst_c);
    Report { name: "charlie_is_alice".into(), checks }
}

/// Classical outcome of the effective receiver: a bit or ∅.
pub type Outcome = Option<bool>;

/// Joint law of (Alice basis, Alice value, effective basis, effective outcome).
pub type JointDistribution = BTreeMap<(bool, bool, bool, Outcome), f64>;

fn outcome_probs(povm: &Povm, state: &QubitState) -> Vec<(Outcome, f64)> {
    povm.probabilities(state).into_iter().map(|(o, p)| (o.bit(), p)).collect()
}

/// Exhaustive law of the line with Alice, Charlie and Bob, viewed as Alice
/// facing a receiver made of Charlie and Bob. The effective basis is
/// `bC ⊕ bB`; the effective outcome is Bob's outcome flipped when the total
/// rotation differs from the canonical `R(3β)` by a half turn.
pub fn line_joint_distribution(povm: &Povm) -> JointDistribution {
    let mut dist = JointDistribution::new();
    for bits in 0u8..32 {
        let b = |i: u8| bits >> i & 1 == 1;
        let (ba, ra, bc, rc, bb) = (b(0), b(1), b(2), b(3), b(4));
        let beta = bc ^ bb;
        let k_cb = QuarterTurn::from_bits(bc, rc) + QuarterTurn::from_bits(bb, false);
        let m = ((k_cb.k() + 4 - QuarterTurn::from_bits(beta, beta).k()) % 4) / 2 == 1;
        let state = apply(&ry(QuarterTurn::from_bits(ba, ra)), &QubitState::zero());
        let state = apply(&ry(k_cb), &state);
        for (o, p) in outcome_probs(povm, &state) {
            *dist.entry((ba, ra, beta, o.map(|x| x ^ m))).or_default() += p / 32.0;
        }
    }
    dist
}

/// Exhaustive law of prepare-and-measure QKD where Bob measures basis β
/// by rotating with `R(3β)`.
pub fn qkd_joint_distribution(povm: &Povm) -> JointDistribution {
    let mut dist = JointDistribution::new();
    for bits in 0u8..8 {
        let b = |i: u8| bits >> i & 1 == 1;
        let (ba, ra, beta) = (b(0), b(1), b(2));
        let state = apply(&ry(QuarterTurn::from_bits(ba, ra)), &QubitState::zero());
        let state = apply(&ry(QuarterTurn::from_bits(beta, beta)), &state);
        for (o, p) in outcome_probs(povm, &state) {
            *dist.entry((ba, ra, beta, o)).or_default() += p / 8.0;
        }
    }
    dist
}

pub fn total_variation(a: &JointDistribution, b: &JointDistribution) -> f64 {
    let keys: std::collections::BTreeSet<_> = a.keys().chain(b.keys()).collect();
    0.5 * keys.into_iter().map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs()).sum::<f64>()
}

/// Largest deviation of the rotated inconclusive element `R(k)† M∅ R(k)`
/// from its unrotated value over all quarter turns.
pub fn inconclusive_condition_residual(povm: &Povm) -> f64 {
    let Some(e) = povm.element(MeasureOutcome::Inconclusive) else { return 0.0 };
    QuarterTurn::ALL.into_iter().map(|q| e.conjugate_by(ry(q).adjoint().matrix()).max_abs_diff(e)).fold(0.0, f64::max)
}

/// Detector whose inconclusive element is `diag(0.3, 0.1)`: loss depends
/// on the measured state.
pub fn state_dependent_loss_povm() -> Povm {
    Povm::new(vec![
        (MeasureOutcome::Zero, Mat2::diag(0.7, 0.0)),
        (MeasureOutcome::One, Mat2::diag(0.0, 0.9)),
        (MeasureOutcome::Inconclusive, Mat2::diag(0.3, 0.1)),
    ])
    .expect("valid POVM")
}

/// Charlie and Bob together act like a QKD Bob: identical classical joint
/// law, noiseless and with `detector`, and a basis-independent ∅ element.
pub fn verify_charlie_is_bob(detector: &Povm) -> Report {
    let exact = Povm::computational();
    let tv0 = total_variation(&line_joint_distribution(&exact), &qkd_joint_distribution(&exact));
    let tv1 = total_variation(&line_joint_distribution(detector), &qkd_joint_distribution(detector));
    let cond = inconclusive_condition_residual(detector);
    Report {
        name: "charlie_is_bob".into(),
        checks: vec![
            Check::within("noiseless_joint_distribution", tv0, EXACT_TOL, "total variation, N=1".into()),
            Check::within("detector_joint_distribution", tv1, EXACT_TOL, "total variation, N=1".into()),
            Check::within("inconclusive_operator", cond, EXACT_TOL, "max_k |R(k)^† M_inc R(k) - M_inc|".into()),
        ],
    }
}

/// The three verifications with the shipped settings, or with `mutation`
/// applied where it has an effect.
pub fn verify_lemmas(noise: &NoiseParams, c_bar: f64, mutation: Option<Mutation>) -> Vec<Report> {
    let alice = if mutation == Some(Mutation::BiasedPrep) { Preparation::biased(0.7) } else { Preparation::uniform() };
    let charlie =
        if mutation == Some(Mutation::SkewedCharlie) { Preparation::biased(0.7) } else { Preparation::uniform() };
    let detector = if mutation == Some(Mutation::BasisDependentLoss) {
        state_dependent_loss_povm()
    } else {
        noise.povm().unwrap_or_else(|_| Povm::computational())
    };
    vec![
        verify_alice_assumption(&alice, c_bar),
        verify_charlie_is_alice(&charlie, c_bar),
        verify_charlie_is_bob(&detector),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_settings_pass() {
        let noise = NoiseParams::new(0.2, 0.05).unwrap();
        for r in verify_lemmas(&noise, 0.75, None) {
            assert!(r.passed(), "{r}");
        }
    }

    #[test]
    fn bb84_complementarity_is_one_half() {
        let r = verify_alice_assumption(&Preparation::uniform(), 0.75);
        let c = &r.checks[2];
        assert!(c.detail.starts_with("c=0.5000000000"), "{}", c.detail);
    }

    #[test]
    fn each_mutation_breaks_its_check() {
        let noise = NoiseParams::NONE;
        let reports = verify_lemmas(&noise, 0.75, Some(Mutation::BiasedPrep));
        assert!(!reports[0].passed());
        let reports = verify_lemmas(&noise, 0.75, Some(Mutation::SkewedCharlie));
        assert!(reports[0].passed());
        assert!(!reports[1].passed());
        let reports = verify_lemmas(&noise, 0.75, Some(Mutation::BasisDependentLoss));
        assert!(!reports[2].passed());
        assert!(!reports[2].checks[2].passed);
    }

    #[test]
    fn combined_angle_counts_are_four_each() {
        let r = verify_charlie_is_alice(&Preparation::uniform(), 0.75);
        assert_eq!(r.checks[0].detail, "counts [4, 4, 4, 4]");
    }

    #[test]
    fn noiseless_law_is_correct_on_matching_bases() {
        let d = qkd_joint_distribution(&Povm::computational());
        for ((ba, ra, beta, o), p) in d {
            if ba == beta && p > 0.0 {
                assert_eq!(o, Some(ra));
            }
        }
    }

    #[test]
    fn mutation_names_round_trip() {
        for m in Mutation::ALL {
            assert_eq!(m.name().parse::<Mutation>().unwrap(), m);
        }
        assert!("nope".parse::<Mutation>().is_err());
    }
}
