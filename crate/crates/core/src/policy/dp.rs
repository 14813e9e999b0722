//! Exact finite-horizon dynamic programming over the belief lattice.
//!
//! With `k` intervals remaining, the value of a joint state is
//!
//! ```text
//! V_k(s) = max_u [ r(b_u) + sum_j pi_u(j) V_{k-1}(s after serving u and hearing F_j) ]
//! ```
//!
//! where `pi_u` is the materialized belief of user `u`. Beliefs are symbolic
//! `(origin, lag)` pairs, so the states reachable from `(S, S)` form a finite
//! lattice and the recursion is exact as long as no lag is clamped, which
//! `horizon <= lag_cap` guarantees.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{GreedyPolicy, JointInfoState, PolicyError, User};
use crate::belief::Feedback;
use crate::channel::{RewardVector, State, TransitionMatrix};
use crate::tolerance::DEFAULT_DP_LAG_CAP;

/// Solution at one `(remaining intervals, state)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DpEntry {
    /// Optimal expected total reward `V_k`.
    pub value: f64,
    /// Optimizing action; the greedy action whenever it is optimal within
    /// the algebraic tolerance.
    pub action: User,
    /// Action values per user; `None` for actions excluded by the
    /// restricted class.
    pub q: [Option<f64>; 2],
    pub greedy_action: User,
    /// Expected total reward of following greedy from here.
    pub greedy_value: f64,
}

impl DpEntry {
    /// `V_optimal - V_greedy`.
    pub fn gap(&self) -> f64 {
        self.value - self.greedy_value
    }
}

/// Optimal values and actions for every reachable state and every number
/// of remaining intervals it can be met with.
#[derive(Debug, Clone)]
pub struct ValueTable {
    horizon: usize,
    lag_cap: usize,
    restricted: bool,
    entries: BTreeMap<(usize, JointInfoState), DpEntry>,
}

impl ValueTable {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn lag_cap(&self) -> usize {
        self.lag_cap
    }

    /// Whether actions dropping a user that just reported `F3` were excluded.
    pub fn restricted(&self) -> bool {
        self.restricted
    }

    /// Entry for the initial state with the full horizon remaining.
    pub fn root(&self) -> &DpEntry {
        &self.entries[&(self.horizon, JointInfoState::INITIAL)]
    }

    pub fn get(&self, remaining: usize, state: &JointInfoState) -> Option<&DpEntry> {
        self.entries.get(&(remaining, *state))
    }

    pub fn value(&self, remaining: usize, state: &JointInfoState) -> Option<f64> {
        self.get(remaining, state).map(|e| e.value)
    }

    pub fn action(&self, remaining: usize, state: &JointInfoState) -> Option<User> {
        self.get(remaining, state).map(|e| e.action)
    }

    /// Entries in `(remaining, state)` order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &JointInfoState, &DpEntry)> {
        self.entries.iter().map(|((k, s), e)| (*k, s, e))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest `V_optimal - V_greedy` over all entries.
    pub fn max_gap(&self) -> f64 {
        self.entries.values().map(DpEntry::gap).fold(0.0, f64::max)
    }

    /// Fraction of entries where the optimizing action is the greedy one.
    pub fn agreement(&self) -> f64 {
        let agree = self.entries.values().filter(|e| e.action == e.greedy_action).count();
        agree as f64 / self.entries.len() as f64
    }

    /// First entry (in `(remaining, state)` order) where optimal and greedy
    /// actions differ.
    pub fn first_disagreement(&self) -> Option<(usize, &JointInfoState, &DpEntry)> {
        self.iter().find(|(_, _, e)| e.action != e.greedy_action)
    }
}

struct Solver<'a> {
    p: &'a TransitionMatrix,
    greedy: GreedyPolicy,
    lag_cap: usize,
    restricted: bool,
    tol: f64,
    memo: BTreeMap<(usize, JointInfoState), DpEntry>,
}

impl Solver<'_> {
    fn admissible(&self, s: &JointInfoState) -> &'static [User] {
        match s.scheduled_last {
            Some(User::One) if self.restricted && s.last_heard_f3() => &[User::One],
            Some(User::Two) if self.restricted && s.last_heard_f3() => &[User::Two],
            _ => &User::BOTH,
        }
    }

    /// Feedback outcomes of serving `u` in `s` with positive probability.
    fn outcomes(&self, s: &JointInfoState, u: User) -> impl Iterator<Item = (f64, JointInfoState)> + '_ {
        let pi = s.belief(u).materialize(self.p);
        let s = *s;
        State::ALL
            .into_iter()
            .filter(move |j| pi[j.index()] > 0.0)
            .map(move |j| (pi[j.index()], s.after(u, Feedback::from(j), self.lag_cap)))
    }

    /// Expected reward of serving `u` now, then following `tail` for the
    /// remaining `k - 1` intervals.
    fn q_value(&mut self, s: &JointInfoState, u: User, k: usize, tail: fn(&DpEntry) -> f64) -> f64 {
        let immediate = self.greedy.reward(s.belief(u));
        if k == 1 {
            return immediate;
        }
        let next: Vec<_> = self.outcomes(s, u).collect();
        let future: f64 = next.iter().map(|&(prob, ns)| prob * tail(&self.solve(&ns, k - 1))).sum();
        immediate + future
    }

    fn solve(&mut self, s: &JointInfoState, k: usize) -> DpEntry {
        if let Some(e) = self.memo.get(&(k, *s)) {
            return *e;
        }
        let greedy_action = self.greedy.argmax(s).action;
        let mut q = [None; 2];
        for &u in self.admissible(s) {
            q[u.index()] = Some(self.q_value(s, u, k, |e| e.value));
        }
        let best = q.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
        let action = match q[greedy_action.index()] {
            Some(qg) if qg >= best - self.tol => greedy_action,
            _ => greedy_action.other(),
        };
        let greedy_value = self.q_value(s, greedy_action, k, |e| e.greedy_value);
        let entry = DpEntry {
            value: q[action.index()].expect("chosen action is admissible"),
            action,
            q,
            greedy_action,
            greedy_value,
        };
        self.memo.insert((k, *s), entry);
        entry
    }
}

/// Solves the `horizon`-interval problem from `(Steady, Steady)`.
///
/// Every state reachable (with positive probability, under any admissible
/// actions) within `horizon - 1` slots gets an entry for each number of
/// remaining intervals `k` with `depth + k <= horizon`. Greedy's own value is
/// evaluated on the same lattice, so gaps are exact up to rounding.
pub fn optimal_dp(
    p: &TransitionMatrix,
    alpha: &RewardVector,
    horizon: usize,
    lag_cap: usize,
    restricted: bool,
) -> Result<ValueTable, PolicyError> {
    if horizon == 0 {
        return Err(PolicyError::EmptyHorizon);
    }
    if horizon > lag_cap {
        return Err(PolicyError::CapTooSmall { horizon, lag_cap });
    }
    let mut solver = Solver {
        p,
        greedy: GreedyPolicy::new(p, alpha, lag_cap),
        lag_cap,
        restricted,
        tol: p.tolerances().algebraic,
        memo: BTreeMap::new(),
    };

    // Breadth-first layers; a state's first layer is its minimum depth.
    let mut seen = BTreeSet::from([JointInfoState::INITIAL]);
    let mut layer = alloc::vec![JointInfoState::INITIAL];
    let mut by_depth = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let mut next = Vec::new();
        for s in &layer {
            for &u in solver.admissible(s) {
                for (_, ns) in solver.outcomes(s, u) {
                    if seen.insert(ns) {
                        next.push(ns);
                    }
                }
            }
        }
        by_depth.push(core::mem::replace(&mut layer, next));
    }

    let mut entries = BTreeMap::new();
    for (depth, states) in by_depth.iter().enumerate() {
        for s in states {
            for k in 1..=horizon - depth {
                entries.insert((k, *s), solver.solve(s, k));
            }
        }
    }
    Ok(ValueTable { horizon, lag_cap, restricted, entries })
}

/// Greedy against the exact optimum, with and without the retain-on-`F3`
/// restriction.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComparisonReport {
    pub horizon: usize,
    pub lag_cap: usize,
    /// Largest `V_optimal - V_greedy` within the retain-on-`F3` class.
    pub restricted_gap: f64,
    /// Largest `V_optimal - V_greedy` over all policies.
    pub unrestricted_gap: f64,
    /// Fraction of unrestricted entries whose optimal action is greedy's.
    pub agreement: f64,
    pub restricted_agreement: f64,
    /// First unrestricted entry where greedy is strictly suboptimal.
    pub counterexample: Option<String>,
    /// First entry of the restricted problem where greedy is strictly
    /// suboptimal.
    pub restricted_counterexample: Option<String>,
}

fn describe(k: usize, s: &JointInfoState, e: &DpEntry) -> String {
    format!("k={k} state={s} greedy={} optimal={} gap={:e}", e.greedy_action, e.action, e.gap())
}

/// Runs [`optimal_dp`] in both modes with lag cap `max(horizon, 16)`.
pub fn compare_greedy_vs_optimal(
    p: &TransitionMatrix,
    alpha: &RewardVector,
    horizon: usize,
) -> Result<ComparisonReport, PolicyError> {
    compare_with_lag_cap(p, alpha, horizon, horizon.max(DEFAULT_DP_LAG_CAP))
}

/// Runs [`optimal_dp`] in both modes with an explicit lag cap.
pub fn compare_with_lag_cap(
    p: &TransitionMatrix,
    alpha: &RewardVector,
    horizon: usize,
    lag_cap: usize,
) -> Result<ComparisonReport, PolicyError> {
    let unrestricted = optimal_dp(p, alpha, horizon, lag_cap, false)?;
    let restricted = optimal_dp(p, alpha, horizon, lag_cap, true)?;
    Ok(ComparisonReport {
        horizon,
        lag_cap,
        restricted_gap: restricted.max_gap(),
        unrestricted_gap: unrestricted.max_gap(),
        agreement: unrestricted.agreement(),
        restricted_agreement: restricted.agreement(),
        counterexample: unrestricted.first_disagreement().map(|(k, s, e)| describe(k, s, e)),
        restricted_counterexample: restricted.first_disagreement().map(|(k, s, e)| describe(k, s, e)),
    })
}
