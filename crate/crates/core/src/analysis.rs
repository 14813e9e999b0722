//! Numerical verification of the structural properties the greedy policy
//! rests on.
//!
//! Every verifier returns a [`VerificationReport`] holding the worst
//! violation found and where it occurred, so a failure is actionable without
//! rerunning anything.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::belief::BeliefState;
use crate::channel::{RewardVector, State, TransitionMatrix, Vector3};
use crate::policy::{threshold_l, ThresholdL};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalysisError {
    #[error("condition (A) does not hold: margin p23 - p2 P e3 = {margin:e}")]
    ConditionAFailed { margin: OrderedMargin },
    #[error("the equal-middle-column and cross-product conditions do not both hold")]
    Prop12ConditionsFailed,
}

/// An `f64` wrapper so the error type can derive `Eq`; compares bitwise.
#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct OrderedMargin(pub f64);

impl PartialEq for OrderedMargin {
    fn eq(&self, other: &Self) -> bool {
        self.0.to_bits() == other.0.to_bits()
    }
}

impl Eq for OrderedMargin {}

impl core::fmt::LowerExp for OrderedMargin {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        core::fmt::LowerExp::fmt(&self.0, f)
    }
}

/// Outcome of one numerical check.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VerificationReport {
    pub check: String,
    /// `max_violation <= tolerance`.
    pub pass: bool,
    /// Largest amount by which the checked inequality failed; 0 when it
    /// held everywhere.
    pub max_violation: f64,
    pub tolerance: f64,
    /// Where the worst violation occurred.
    pub witness: Option<String>,
    /// Informational checks are reported but never fail a suite.
    pub informational: bool,
}

/// Accumulates the worst violation of a family of inequalities.
#[derive(Debug)]
struct Worst {
    check: String,
    tolerance: f64,
    max_violation: f64,
    witness: Option<String>,
}

impl Worst {
    fn new(check: impl Into<String>, tolerance: f64) -> Self {
        Worst { check: check.into(), tolerance, max_violation: 0.0, witness: None }
    }

    /// Records `violation` (positive means the inequality failed).
    fn record(&mut self, violation: f64, witness: impl FnOnce() -> String) {
        if violation > self.max_violation || violation.is_nan() {
            self.max_violation = if violation.is_nan() { f64::INFINITY } else { violation };
            self.witness = Some(witness());
        }
    }

    fn finish(self) -> VerificationReport {
        VerificationReport {
            pass: self.max_violation <= self.tolerance,
            check: self.check,
            max_violation: self.max_violation,
            tolerance: self.tolerance,
            witness: self.witness,
            informational: false,
        }
    }
}

const E2: Vector3 = [0.0, 1.0, 0.0];
const E3: Vector3 = [0.0, 0.0, 1.0];

fn dot(a: &Vector3, b: &Vector3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `p_i P^k e`, for `k = 0..=k_max`.
fn row_curve(p: &TransitionMatrix, origin: State, e: &Vector3, k_max: usize) -> Vec<f64> {
    (0..=k_max).map(|k| dot(&p.n_step_row(origin, k + 1), e)).collect()
}

/// `r_1(k) <= r_2(k) <= r_3(k)` for `k = 0..=k_max`.
pub fn verify_reward_ordering(p: &TransitionMatrix, alpha: &RewardVector, k_max: usize) -> VerificationReport {
    let [r1, r2, r3] = State::ALL.map(|s| p.reward_curve(alpha, s, k_max));
    let mut worst = Worst::new("reward-ordering", p.tolerances().algebraic);
    for k in 0..=k_max {
        worst.record(r1[k] - r2[k], || format!("k={k}: r1 > r2"));
        worst.record(r2[k] - r3[k], || format!("k={k}: r2 > r3"));
    }
    worst.finish()
}

/// Monotonicity of the extreme reward curves and convergence of all three.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MonotoneCurvesReport {
    /// `r_3` nonincreasing and `r_1` nondecreasing.
    pub monotone: VerificationReport,
    /// `|r_i(k_max) - p_ss alpha|` within the limit tolerance.
    pub limits: VerificationReport,
}

impl MonotoneCurvesReport {
    pub fn pass(&self) -> bool {
        self.monotone.pass && self.limits.pass
    }
}

/// `r_3` decreases and `r_1` increases toward `p_ss alpha`, and every curve
/// has reached it (within the limit tolerance) by `k_max`.
pub fn verify_monotone_curves(p: &TransitionMatrix, alpha: &RewardVector, k_max: usize) -> MonotoneCurvesReport {
    let tol = p.tolerances();
    let curves = State::ALL.map(|s| p.reward_curve(alpha, s, k_max));
    let mut mono = Worst::new("monotone-curves", tol.algebraic);
    for k in 0..k_max {
        mono.record(curves[2][k + 1] - curves[2][k], || format!("k={k}: r3 increases"));
        mono.record(curves[0][k] - curves[0][k + 1], || format!("k={k}: r1 decreases"));
    }
    let target = p.steady_reward(alpha);
    let mut limits = Worst::new("curve-limits", tol.limit);
    for s in State::ALL {
        let gap = (curves[s.index()][k_max] - target).abs();
        limits.record(gap, || format!("r{s}({k_max}) vs p_ss alpha"));
    }
    MonotoneCurvesReport { monotone: mono.finish(), limits: limits.finish() }
}

/// Condition (A): `p_2 P e3 <= p23`, and the behavior of `p_2 P^k e3`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConditionA {
    /// `p23 - p_2 P e3`; the condition holds iff this is nonnegative.
    pub margin: f64,
    pub holds: bool,
    /// `p_2 P^k e3` never increases (within tolerance) for `k <= k_max`.
    pub nonincreasing: bool,
    /// `p_2 P^k e3` never decreases (within tolerance) for `k <= k_max`.
    pub nondecreasing: bool,
    /// `p_ss(3) <= p23`.
    pub limit_below_p23: bool,
    pub k_max: usize,
}

impl ConditionA {
    /// The sign of the margin matches the direction of the sequence:
    /// nonincreasing exactly when the margin is nonnegative.
    pub fn direction_predicted(&self) -> bool {
        self.holds == self.nonincreasing
    }

    /// Under the condition, the sequence decreases to a limit below `p23`.
    pub fn sufficiency_holds(&self) -> bool {
        !self.holds || (self.nonincreasing && self.limit_below_p23)
    }

    /// The stronger converse: a violated condition makes the sequence
    /// nondecreasing. Not true in general; reported for information.
    pub fn reverse_claim_holds(&self) -> bool {
        self.holds || self.nondecreasing
    }
}

/// Evaluates condition (A) and the induced sequence up to the lag cap.
pub fn check_condition_a(p: &TransitionMatrix) -> ConditionA {
    let tol = p.tolerances().algebraic;
    let m = p.matrix();
    let p23 = m[1][2];
    let margin = p23 - (m[1][0] * m[0][2] + m[1][1] * m[1][2] + m[1][2] * m[2][2]);
    let k_max = p.lag_cap();
    let seq = row_curve(p, State::S2, &E3, k_max);
    let nonincreasing = seq.windows(2).all(|w| w[1] <= w[0] + tol);
    let nondecreasing = seq.windows(2).all(|w| w[1] >= w[0] - tol);
    ConditionA {
        margin,
        holds: margin >= -tol,
        nonincreasing,
        nondecreasing,
        limit_below_p23: p.steady_state()[2] <= p23 + tol,
        k_max,
    }
}

/// The margin sign predicts the direction of `p_2 P^k e3`, and the
/// condition implies decrease to a limit at most `p23`.
pub fn verify_condition_a_direction(p: &TransitionMatrix) -> VerificationReport {
    let a = check_condition_a(p);
    let mut worst = Worst::new("condition-a-direction", 0.0);
    if !a.direction_predicted() || !a.sufficiency_holds() {
        worst.record(a.margin.abs().max(f64::MIN_POSITIVE), || {
            format!("margin={:e} nonincreasing={} limit_below_p23={}", a.margin, a.nonincreasing, a.limit_below_p23)
        });
    }
    worst.finish()
}

/// Under condition (A), `p_1 P^k e3` increases to `p_ss(3) <= p23`.
pub fn verify_lemma11(p: &TransitionMatrix, k_max: usize) -> Result<VerificationReport, AnalysisError> {
    let a = check_condition_a(p);
    if !a.holds {
        return Err(AnalysisError::ConditionAFailed { margin: OrderedMargin(a.margin) });
    }
    let tol = p.tolerances();
    let seq = row_curve(p, State::S1, &E3, k_max);
    let mut worst = Worst::new("state-1-reachability", tol.algebraic);
    for k in 0..k_max {
        worst.record(seq[k] - seq[k + 1], || format!("k={k}: p1 P^k e3 decreases"));
    }
    let s3 = p.steady_state()[2];
    worst.record(s3 - p.matrix()[1][2], || String::from("p_ss(3) > p23"));
    Ok(worst.finish())
}

/// Premises of restricted-class optimality and their consequences.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Prop12Conditions {
    /// `p12 = p22 = p32`.
    pub equal_middle_column: bool,
    /// `p23 p31 >= p21 p13`.
    pub cross_product: bool,
    /// `p23 >= p_ss(3)`, which makes the system type I for every reward.
    pub type_one_for_all_rewards: bool,
    /// `p_ss(2) = p22`.
    pub steady_middle_is_p22: bool,
}

impl Prop12Conditions {
    pub fn holds(&self) -> bool {
        self.equal_middle_column && self.cross_product
    }

    pub fn consequences_hold(&self) -> bool {
        self.type_one_for_all_rewards && self.steady_middle_is_p22
    }
}

pub fn check_prop12_conditions(p: &TransitionMatrix) -> Prop12Conditions {
    let tol = p.tolerances().algebraic;
    let m = p.matrix();
    let ss = p.steady_state();
    Prop12Conditions {
        equal_middle_column: (m[0][1] - m[1][1]).abs() <= tol && (m[2][1] - m[1][1]).abs() <= tol,
        cross_product: m[1][2] * m[2][0] >= m[1][0] * m[0][2] - tol,
        type_one_for_all_rewards: m[1][2] >= ss[2] - tol,
        steady_middle_is_p22: (ss[1] - m[1][1]).abs() <= tol,
    }
}

/// Condition (S) over the six belief-pair families, plus the identities it
/// relies on.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ConditionSReport {
    /// One report per family, in order.
    pub cases: Vec<VerificationReport>,
    /// `p_i P^k e2 = p22` for every origin and `k >= 1`.
    pub symmetry: VerificationReport,
    /// `p33 p22 - p23 p32 >= 0`.
    pub contraction: VerificationReport,
    pub contraction_factor: f64,
    pub threshold: ThresholdL,
}

impl ConditionSReport {
    pub fn pass(&self) -> bool {
        self.cases.iter().all(|c| c.pass) && self.symmetry.pass && self.contraction.pass
    }
}

/// `pi_hat(3) pi_tilde(2) >= pi_hat(2) pi_tilde(3)` for the greedy user
/// `hat` and the other user `tilde`.
fn record_condition_s(worst: &mut Worst, p: &TransitionMatrix, hat: BeliefState, tilde: BeliefState) {
    let (a, b) = (hat.materialize(p), tilde.materialize(p));
    let margin = a[2] * b[1] - a[1] * b[2];
    worst.record(-margin, || format!("greedy={hat} other={tilde} margin={margin:e}"));
}

/// Checks condition (S) on every belief pair the ARQ scheduler can meet
/// under the equal-middle-column premises, for lags `1..=k_max`. The two
/// families involving an old state-3 observation are split at the crossover
/// lag `L`.
pub fn verify_condition_s(
    p: &TransitionMatrix,
    alpha: &RewardVector,
    k_max: usize,
) -> Result<ConditionSReport, AnalysisError> {
    if !check_prop12_conditions(p).holds() {
        return Err(AnalysisError::Prop12ConditionsFailed);
    }
    let tol = p.tolerances().algebraic;
    let obs = |origin, lag| BeliefState::Observed { origin, lag };
    let fresh = |origin| obs(origin, 0);
    // `p_i P^k` for all origins and k >= 1, plus the steady state.
    let aged_any: Vec<BeliefState> = State::ALL
        .into_iter()
        .flat_map(|s| (1..=k_max).map(move |k| BeliefState::Observed { origin: s, lag: k }))
        .chain(core::iter::once(BeliefState::Steady))
        .collect();
    // Type I is implied by the premises; a numerically borderline system
    // that classifies otherwise has no crossover, so every lag is "< L".
    let threshold = threshold_l(p, alpha).unwrap_or(ThresholdL::Infinite);
    let (long_lags, short_lags) = match threshold {
        ThresholdL::Finite(l) => (l.max(1)..=k_max.max(l), 1..l.min(k_max + 1)),
        ThresholdL::Infinite => (k_max + 1..=k_max, 1..k_max + 1),
    };

    let mut cases = Vec::with_capacity(6);
    let mut case = |n: usize, pairs: &mut dyn Iterator<Item = (BeliefState, BeliefState)>| {
        let mut worst = Worst::new(format!("condition-s-case-{n}"), tol);
        for (hat, tilde) in pairs {
            record_condition_s(&mut worst, p, hat, tilde);
        }
        cases.push(worst.finish());
    };
    case(1, &mut aged_any.iter().map(|&t| (fresh(State::S3), t)));
    case(2, &mut aged_any.iter().map(|&h| (h, fresh(State::S1))));
    case(
        3,
        &mut (1..=k_max)
            .map(|k| obs(State::S1, k))
            .chain(core::iter::once(BeliefState::Steady))
            .map(|t| (fresh(State::S2), t)),
    );
    case(4, &mut (1..=k_max).map(|k| (fresh(State::S2), obs(State::S2, k))));
    case(5, &mut long_lags.map(|k| (fresh(State::S2), obs(State::S3, k))));
    case(6, &mut short_lags.map(|k| (obs(State::S3, k), fresh(State::S2))));

    let p22 = p.matrix()[1][1];
    let mut symmetry = Worst::new("middle-column-symmetry", tol);
    for s in State::ALL {
        let curve = row_curve(p, s, &E2, k_max);
        for (k, v) in curve.iter().enumerate().skip(1) {
            symmetry.record((v - p22).abs(), || format!("p{s} P^{k} e2 = {v}"));
        }
    }

    let m = p.matrix();
    let factor = m[2][2] * m[1][1] - m[1][2] * m[2][1];
    let mut contraction = Worst::new("contraction-factor", tol);
    contraction.record(-factor, || format!("p33 p22 - p23 p32 = {factor:e}"));

    Ok(ConditionSReport {
        cases,
        symmetry: symmetry.finish(),
        contraction: contraction.finish(),
        contraction_factor: factor,
        threshold,
    })
}

/// Situations in which ARQ feedback is as good as full channel knowledge.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum EquivalenceMode {
    /// `alpha2 = alpha3` and `p21 = p31`: states 2 and 3 lump into one good
    /// state; the reduced chain is over (bad, good).
    MergeStates23 {
        reduced: [[f64; 2]; 2],
    },
    /// `alpha2 = alpha3` and `p11 = p21`.
    Synonymous12,
    None,
}

pub fn detect_equivalence_mode(p: &TransitionMatrix, alpha: &RewardVector) -> EquivalenceMode {
    let tol = p.tolerances().algebraic;
    let m = p.matrix();
    let a = alpha.values();
    if (a[1] - a[2]).abs() > tol {
        return EquivalenceMode::None;
    }
    if (m[1][0] - m[2][0]).abs() <= tol {
        EquivalenceMode::MergeStates23 { reduced: [[m[0][0], m[0][1] + m[0][2]], [m[1][0], m[1][1] + m[1][2]]] }
    } else if (m[0][0] - m[1][0]).abs() <= tol {
        EquivalenceMode::Synonymous12
    } else {
        EquivalenceMode::None
    }
}
