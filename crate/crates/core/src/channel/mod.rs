//! Three-state Markov channel: validated transition matrix, steady state,
//! cached matrix powers and expected-reward curves.

use alloc::vec::Vec;
use core::fmt;

use crate::tolerance::{Tolerances, DEFAULT_LAG_CAP};

pub mod sample;

pub type Matrix3 = [[f64; 3]; 3];
pub type Vector3 = [f64; 3];

pub const IDENTITY: Matrix3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Quantized channel state. `S1` is the weakest channel, `S3` the strongest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum State {
    S1,
    S2,
    S3,
}

impl State {
    pub const ALL: [State; 3] = [State::S1, State::S2, State::S3];

    /// Zero-based index into rows and columns of `P`.
    #[inline]
    pub const fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub const fn from_index(i: usize) -> Option<State> {
        match i {
            0 => Some(State::S1),
            1 => Some(State::S2),
            2 => Some(State::S3),
            _ => None,
        }
    }

    /// One-based state number as written in `p_ij`.
    #[inline]
    pub const fn number(self) -> u8 {
        self as u8 + 1
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChannelError {
    #[error("row {row} is not a probability vector: {reason} (value {value})")]
    NotStochastic {
        /// One-based row number.
        row: usize,
        reason: &'static str,
        value: f64,
    },
    #[error("ordering constraint {constraint} violated ({lhs} < {rhs})")]
    OrderingViolation { constraint: &'static str, lhs: f64, rhs: f64 },
    #[error("degenerate chain: {entry} {reason}")]
    DegenerateChain { entry: &'static str, reason: &'static str },
}

impl ChannelError {
    /// Stable machine-readable name of the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            ChannelError::NotStochastic { .. } => "NotStochastic",
            ChannelError::OrderingViolation { .. } => "OrderingViolation",
            ChannelError::DegenerateChain { .. } => "DegenerateChain",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RewardError {
    #[error("reward entries must be finite")]
    NonFinite,
    #[error("reward entries must be nonnegative")]
    Negative,
    #[error("rewards must satisfy alpha1 <= alpha2 <= alpha3")]
    NotMonotone,
}

/// Per-state reward `alpha`, nondecreasing in the state.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RewardVector {
    alpha: Vector3,
}

impl RewardVector {
    pub fn new(alpha: Vector3) -> Result<Self, RewardError> {
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(RewardError::NonFinite);
        }
        if alpha.iter().any(|&a| a < 0.0) {
            return Err(RewardError::Negative);
        }
        if !(alpha[0] <= alpha[1] && alpha[1] <= alpha[2]) {
            return Err(RewardError::NotMonotone);
        }
        Ok(RewardVector { alpha })
    }

    /// The usual normalization `(0, alpha2, 1)`.
    pub fn normalized(alpha2: f64) -> Result<Self, RewardError> {
        Self::new([0.0, alpha2, 1.0])
    }

    #[inline]
    pub fn values(&self) -> Vector3 {
        self.alpha
    }

    #[inline]
    pub fn get(&self, state: State) -> f64 {
        self.alpha[state.index()]
    }

    pub fn min(&self) -> f64 {
        self.alpha[0]
    }

    pub fn max(&self) -> f64 {
        self.alpha[2]
    }

    /// Expected reward `pi . alpha` of a distribution over states.
    #[inline]
    pub fn dot(&self, pi: &Vector3) -> f64 {
        pi[0] * self.alpha[0] + pi[1] * self.alpha[1] + pi[2] * self.alpha[2]
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for RewardVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let alpha = <Vector3 as serde::Deserialize>::deserialize(d)?;
        RewardVector::new(alpha).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn mat_mul(a: &Matrix3, b: &Matrix3) -> Matrix3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

pub(crate) fn vec_mat(v: &Vector3, m: &Matrix3) -> Vector3 {
    let mut out = [0.0; 3];
    for j in 0..3 {
        out[j] = v[0] * m[0][j] + v[1] * m[1][j] + v[2] * m[2][j];
    }
    out
}

/// Validated transition matrix of a positively correlated three-state chain.
///
/// Admission requires row-stochastic entries, the column orderings
///
/// ```text
/// p11 >= p21 >= p31
/// p22 >= p12 >= p32
/// p33 >= p23 >= p13
/// ```
///
/// and a non-degenerate chain: `p11, p22, p33, p12, p21, p23 > 0` and not
/// both `p31` and `p32` zero. Under these constraints `P^2` is positive, so
/// the chain is regular and has a unique positive steady state.
///
/// Powers `P^0 ..= P^(lag_cap + 1)` are computed once at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    p: Matrix3,
    steady: Vector3,
    powers: Vec<Matrix3>,
    lag_cap: usize,
    mixing_lag: usize,
    mixed: bool,
    tol: Tolerances,
}

/// Validate a raw matrix with the default lag cap and tolerances.
pub fn validate_matrix(raw: Matrix3) -> Result<TransitionMatrix, ChannelError> {
    TransitionMatrix::new(raw)
}

impl TransitionMatrix {
    pub fn new(raw: Matrix3) -> Result<Self, ChannelError> {
        Self::with_options(raw, DEFAULT_LAG_CAP, Tolerances::DEFAULT)
    }

    pub fn with_options(raw: Matrix3, lag_cap: usize, tol: Tolerances) -> Result<Self, ChannelError> {
        check_stochastic(&raw, tol.algebraic)?;
        check_ordering(&raw)?;
        check_nondegenerate(&raw)?;

        let p2 = mat_mul(&raw, &raw);
        if p2.iter().flatten().any(|&x| x <= 0.0) {
            return Err(ChannelError::DegenerateChain { entry: "P^2", reason: "is not entrywise positive" });
        }

        let steady = stationary(&raw);
        let image = vec_mat(&steady, &raw);
        if steady.iter().any(|&x| x <= 0.0) || (0..3).any(|j| (image[j] - steady[j]).abs() > tol.algebraic) {
            return Err(ChannelError::DegenerateChain { entry: "p_ss", reason: "has no positive stationary solution" });
        }

        let lag_cap = lag_cap.max(1);
        let mut powers = Vec::with_capacity(lag_cap + 2);
        powers.push(IDENTITY);
        for k in 1..=lag_cap + 1 {
            let next = mat_mul(&powers[k - 1], &raw);
            powers.push(next);
        }

        let converged = |m: &Matrix3| m.iter().all(|row| (0..3).all(|j| (row[j] - steady[j]).abs() <= tol.convergence));
        let first_converged = (1..=lag_cap).find(|&k| converged(&powers[k]));

        Ok(TransitionMatrix {
            p: raw,
            steady,
            powers,
            lag_cap,
            mixing_lag: first_converged.unwrap_or(lag_cap),
            mixed: first_converged.is_some(),
            tol,
        })
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix3 {
        &self.p
    }

    #[inline]
    pub fn get(&self, from: State, to: State) -> f64 {
        self.p[from.index()][to.index()]
    }

    /// Row `p_i` of `P`: the next-slot distribution after observing `i`.
    #[inline]
    pub fn row(&self, from: State) -> Vector3 {
        self.p[from.index()]
    }

    #[inline]
    pub fn steady_state(&self) -> Vector3 {
        self.steady
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    /// Number of lags for which powers are cached.
    pub fn lag_cap(&self) -> usize {
        self.lag_cap
    }

    /// Smallest `k <= lag_cap` with every row of `P^k` within the convergence
    /// tolerance of `p_ss` (or `lag_cap` if none). Beliefs older than this are
    /// clamped to the steady state.
    pub fn mixing_lag(&self) -> usize {
        self.mixing_lag
    }

    /// Whether `P^k` reaches the steady state within the lag cap.
    pub fn mixes_within_cap(&self) -> bool {
        self.mixed
    }

    /// `P^k`, from the cache when `k <= lag_cap + 1`.
    pub fn n_step(&self, k: usize) -> Matrix3 {
        if let Some(m) = self.powers.get(k) {
            return *m;
        }
        let mut m = *self.powers.last().expect("cache holds P^0");
        for _ in self.powers.len()..=k {
            m = mat_mul(&m, &self.p);
        }
        m
    }

    /// Row `i` of `P^k`.
    pub fn n_step_row(&self, from: State, k: usize) -> Vector3 {
        match self.powers.get(k) {
            Some(m) => m[from.index()],
            None => self.n_step(k)[from.index()],
        }
    }

    /// Smallest `r` in `{1, 2}` with `P^r` entrywise positive.
    pub fn regularity_exponent(&self) -> u8 {
        if self.p.iter().flatten().all(|&x| x > 0.0) {
            1
        } else {
            2
        }
    }

    /// `r_i(k) = p_i P^k alpha` for `k = 0..=k_max`.
    pub fn reward_curve(&self, alpha: &RewardVector, origin: State, k_max: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(k_max + 1);
        let cached = (k_max + 1).min(self.powers.len() - 1);
        for k in 0..cached {
            out.push(alpha.dot(&self.powers[k + 1][origin.index()]));
        }
        if out.len() <= k_max {
            let mut m = mat_mul(self.powers.last().expect("cache holds P^0"), &self.p);
            while out.len() <= k_max {
                out.push(alpha.dot(&m[origin.index()]));
                m = mat_mul(&m, &self.p);
            }
        }
        out
    }

    /// `p_i alpha`, the expected reward one slot after observing state `i`.
    #[inline]
    pub fn row_reward(&self, from: State, alpha: &RewardVector) -> f64 {
        alpha.dot(&self.p[from.index()])
    }

    /// `p_ss alpha`.
    #[inline]
    pub fn steady_reward(&self, alpha: &RewardVector) -> f64 {
        alpha.dot(&self.steady)
    }

    /// `P` with rows all bitwise identical (a memoryless channel).
    pub fn is_memoryless(&self) -> bool {
        self.p[0] == self.p[1] && self.p[1] == self.p[2]
    }
}

/// Steady state of `P`.
pub fn steady_state(p: &TransitionMatrix) -> Vector3 {
    p.steady_state()
}

/// Reward curve `p_i P^k alpha`, `k = 0..=k_max`.
pub fn reward_curve(p: &TransitionMatrix, alpha: &RewardVector, origin: State, k_max: usize) -> Vec<f64> {
    p.reward_curve(alpha, origin, k_max)
}

/// Solves `pi P = pi`, `sum(pi) = 1` for a three-state chain in closed form.
///
/// Each component is the sum over spanning trees directed into that state of
/// the product of their edge probabilities (the cofactor solution of the
/// stationary system), so the result only involves off-diagonal entries and
/// no pivoting. Identical rows short-circuit to the row itself.
fn stationary(p: &Matrix3) -> Vector3 {
    if p[0] == p[1] && p[1] == p[2] {
        return p[0];
    }
    let w1 = p[1][0] * p[2][0] + p[1][2] * p[2][0] + p[2][1] * p[1][0];
    let w2 = p[0][1] * p[2][1] + p[0][2] * p[2][1] + p[2][0] * p[0][1];
    let w3 = p[0][2] * p[1][2] + p[0][1] * p[1][2] + p[1][0] * p[0][2];
    let total = w1 + w2 + w3;
    [w1 / total, w2 / total, w3 / total]
}

fn check_stochastic(p: &Matrix3, tol: f64) -> Result<(), ChannelError> {
    for (i, row) in p.iter().enumerate() {
        for &x in row {
            if !x.is_finite() {
                return Err(ChannelError::NotStochastic { row: i + 1, reason: "non-finite entry", value: x });
            }
            if !(0.0..=1.0).contains(&x) {
                return Err(ChannelError::NotStochastic { row: i + 1, reason: "entry outside [0, 1]", value: x });
            }
        }
        let sum = row[0] + row[1] + row[2];
        if (sum - 1.0).abs() > tol {
            return Err(ChannelError::NotStochastic { row: i + 1, reason: "row does not sum to 1", value: sum });
        }
    }
    Ok(())
}

fn check_ordering(p: &Matrix3) -> Result<(), ChannelError> {
    let constraints: [(&'static str, f64, f64); 6] = [
        ("p11 >= p21", p[0][0], p[1][0]),
        ("p21 >= p31", p[1][0], p[2][0]),
        ("p22 >= p12", p[1][1], p[0][1]),
        ("p12 >= p32", p[0][1], p[2][1]),
        ("p33 >= p23", p[2][2], p[1][2]),
        ("p23 >= p13", p[1][2], p[0][2]),
    ];
    for (constraint, lhs, rhs) in constraints {
        if lhs < rhs {
            return Err(ChannelError::OrderingViolation { constraint, lhs, rhs });
        }
    }
    Ok(())
}

fn check_nondegenerate(p: &Matrix3) -> Result<(), ChannelError> {
    let positive: [(&'static str, f64); 6] =
        [("p11", p[0][0]), ("p22", p[1][1]), ("p33", p[2][2]), ("p12", p[0][1]), ("p21", p[1][0]), ("p23", p[1][2])];
    for (entry, x) in positive {
        if x <= 0.0 {
            return Err(ChannelError::DegenerateChain { entry, reason: "must be positive" });
        }
    }
    if p[2][0] == 0.0 && p[2][1] == 0.0 {
        return Err(ChannelError::DegenerateChain {
            entry: "p31,p32",
            reason: "cannot both be zero (state 3 would be absorbing)",
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub(crate) const P_IID: Matrix3 = [[1.0 / 3.0; 3]; 3];
    pub(crate) const P_A: Matrix3 = [[0.8, 0.15, 0.05], [0.1, 0.7, 0.2], [0.05, 0.15, 0.8]];
    pub(crate) const P_S: Matrix3 = [[0.6, 0.3, 0.1], [0.3, 0.4, 0.3], [0.1, 0.3, 0.6]];

    /// Power-iteration oracle for the steady state.
    fn power_iteration(p: &Matrix3) -> Vector3 {
        let mut v = [1.0 / 3.0; 3];
        for _ in 0..10_000 {
            v = vec_mat(&v, p);
        }
        v
    }

    #[test]
    fn iid_is_valid_and_uniform() {
        let p = TransitionMatrix::new(P_IID).unwrap();
        assert_eq!(p.steady_state(), [1.0 / 3.0; 3]);
        assert_eq!(p.regularity_exponent(), 1);
        assert_eq!(p.n_step(5), p.n_step(1));
    }

    #[test]
    fn ordering_violation_names_the_inequality() {
        let raw = [[0.3, 0.4, 0.3], [0.6, 0.2, 0.2], [0.1, 0.4, 0.5]];
        match TransitionMatrix::new(raw) {
            Err(ChannelError::OrderingViolation { constraint, .. }) => assert_eq!(constraint, "p11 >= p21"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn not_stochastic_rejections() {
        let bad_sum = [[0.8, 0.15, 0.06], [0.1, 0.7, 0.2], [0.05, 0.15, 0.8]];
        assert!(matches!(TransitionMatrix::new(bad_sum), Err(ChannelError::NotStochastic { row: 1, .. })));
        let negative = [[1.1, -0.05, -0.05], [0.1, 0.7, 0.2], [0.05, 0.15, 0.8]];
        assert!(matches!(TransitionMatrix::new(negative), Err(ChannelError::NotStochastic { .. })));
        let nan = [[f64::NAN, 0.15, 0.05], [0.1, 0.7, 0.2], [0.05, 0.15, 0.8]];
        assert!(matches!(TransitionMatrix::new(nan), Err(ChannelError::NotStochastic { .. })));
    }

    #[test]
    fn degenerate_chains_are_rejected() {
        // p12 = 0 forces p32 = 0: state 2 unreachable from 1 and 3.
        let raw = [[0.9, 0.0, 0.1], [0.2, 0.5, 0.3], [0.1, 0.0, 0.9]];
        assert_eq!(
            TransitionMatrix::new(raw).unwrap_err(),
            ChannelError::DegenerateChain { entry: "p12", reason: "must be positive" }
        );
        // p31 = p32 = 0 makes state 3 absorbing.
        let absorbing = [[0.6, 0.3, 0.1], [0.2, 0.5, 0.3], [0.0, 0.0, 1.0]];
        assert!(matches!(
            TransitionMatrix::new(absorbing),
            Err(ChannelError::DegenerateChain { entry: "p31,p32", .. })
        ));
    }

    #[test]
    fn p_a_is_valid_with_known_steady_state() {
        let p = TransitionMatrix::new(P_A).unwrap();
        let oracle = power_iteration(&P_A);
        let expected = [4.0 / 15.0, 1.0 / 3.0, 2.0 / 5.0];
        for j in 0..3 {
            assert_abs_diff_eq!(oracle[j], expected[j], epsilon = 1e-12);
            assert_abs_diff_eq!(p.steady_state()[j], expected[j], epsilon = 1e-12);
        }
        assert_eq!(p.regularity_exponent(), 1);
    }

    #[test]
    fn doubly_stochastic_has_uniform_steady_state() {
        let p = TransitionMatrix::new(P_S).unwrap();
        for j in 0..3 {
            assert_abs_diff_eq!(p.steady_state()[j], 1.0 / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_zero_needs_squaring() {
        let raw = [[0.7, 0.3, 0.0], [0.2, 0.5, 0.3], [0.1, 0.2, 0.7]];
        let p = TransitionMatrix::new(raw).unwrap();
        assert_eq!(p.regularity_exponent(), 2);
    }

    #[test]
    fn powers_converge_to_steady_rows() {
        let p = TransitionMatrix::new(P_A).unwrap();
        assert_eq!(p.n_step(0), IDENTITY);
        // The second eigenvalue of P_A is 0.75, so the distance to the
        // steady rows is about 0.75^k: 6.6e-9 at k = 64, below 1e-9 from k = 71.
        let expected = [4.0 / 15.0, 1.0 / 3.0, 2.0 / 5.0];
        let distance =
            |m: Matrix3| m.iter().flat_map(|row| (0..3).map(move |j| (row[j] - expected[j]).abs())).fold(0.0, f64::max);
        assert!(distance(p.n_step(64)) < 1e-8);
        assert!(distance(p.n_step(64)) > 1e-9);
        assert!(distance(p.n_step(72)) < 1e-9);
        // beyond the cache
        let far = p.n_step(200);
        for row in far {
            assert_abs_diff_eq!(row.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
        assert!(!p.mixes_within_cap());
        assert_eq!(p.mixing_lag(), 64);
        assert!(TransitionMatrix::new(P_S).unwrap().mixes_within_cap());
    }

    #[test]
    fn reward_curves_match_direct_arithmetic() {
        let alpha = RewardVector::normalized(0.5).unwrap();
        let s = TransitionMatrix::new(P_S).unwrap();
        let r3 = s.reward_curve(&alpha, State::S3, 80);
        assert_abs_diff_eq!(r3[0], 0.75, epsilon = 1e-15);
        // p_3 P = (0.21, 0.33, 0.46) -> 0.165 + 0.46
        assert_abs_diff_eq!(r3[1], 0.625, epsilon = 1e-15);
        assert!(r3.windows(2).take(40).all(|w| w[1] < w[0]));
        assert_abs_diff_eq!(r3[80], 0.5, epsilon = 1e-12);

        let a = TransitionMatrix::new(P_A).unwrap();
        let r1 = a.reward_curve(&alpha, State::S1, 64);
        assert!(r1.windows(2).all(|w| w[1] >= w[0]));
        assert_abs_diff_eq!(r1[64], 0.5 / 3.0 + 0.4, epsilon = 1e-8);

        let iid = TransitionMatrix::new(P_IID).unwrap();
        let flat = iid.reward_curve(&alpha, State::S3, 10);
        assert!(flat.iter().all(|&r| r == flat[0]));
        assert_eq!(flat[0], iid.steady_reward(&alpha));
    }

    #[test]
    fn curve_past_the_cache_continues_the_same_products() {
        let a = TransitionMatrix::with_options(P_A, 4, Tolerances::DEFAULT).unwrap();
        let full = TransitionMatrix::new(P_A).unwrap();
        let alpha = RewardVector::normalized(0.3).unwrap();
        assert_eq!(a.reward_curve(&alpha, State::S2, 30), full.reward_curve(&alpha, State::S2, 30));
        assert_eq!(a.n_step(20), full.n_step(20));
    }

    #[test]
    fn reward_vector_validation() {
        assert_eq!(RewardVector::new([0.0, 0.9, 0.5]), Err(RewardError::NotMonotone));
        assert_eq!(RewardVector::new([-0.1, 0.5, 1.0]), Err(RewardError::Negative));
        assert_eq!(RewardVector::new([0.0, f64::INFINITY, 1.0]), Err(RewardError::NonFinite));
        let a = RewardVector::new([0.2, 0.2, 0.7]).unwrap();
        assert_eq!(a.dot(&[0.5, 0.25, 0.25]), 0.1 + 0.05 + 0.175);
    }
}
