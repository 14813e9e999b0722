//! The full verification suite: every structural check on one instance,
//! plus the universal ones over a batch of random instances.

use arqsched_core::analysis::{
    check_condition_a, check_prop12_conditions, verify_condition_a_direction, verify_condition_s, verify_lemma11,
    verify_monotone_curves, verify_reward_ordering, VerificationReport,
};
use arqsched_core::channel::sample::{random_reward, random_valid_matrix};
use arqsched_core::policy::compare_with_lag_cap;
use arqsched_core::tolerance::{DEFAULT_DP_LAG_CAP, DEFAULT_LAG_CAP};
use arqsched_core::{RewardVector, TransitionMatrix};
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteOptions {
    /// Largest lag checked. Limits are always checked at `max(k_max, 64)`.
    pub k_max: usize,
    /// Number of random instances for the universal checks.
    pub random_instances: usize,
    pub seed: u64,
    /// Largest horizon for the greedy-versus-optimal comparisons.
    pub dp_horizon: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { k_max: DEFAULT_LAG_CAP, random_instances: 100, seed: 0, dp_horizon: 6 }
    }
}

fn report(
    check: &str,
    pass: bool,
    max_violation: f64,
    witness: Option<String>,
    informational: bool,
) -> VerificationReport {
    VerificationReport { check: check.into(), pass, max_violation, tolerance: 0.0, witness, informational }
}

/// `n`-th random instance of a suite seeded with `seed`.
pub fn random_instance(seed: u64, n: u64) -> (TransitionMatrix, RewardVector) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(n);
    (random_valid_matrix(&mut rng), random_reward(&mut rng))
}

/// Checks on a single instance.
pub fn instance_checks(p: &TransitionMatrix, alpha: &RewardVector, opts: &SuiteOptions) -> Vec<VerificationReport> {
    let mut out = vec![verify_reward_ordering(p, alpha, opts.k_max)];
    let curves = verify_monotone_curves(p, alpha, opts.k_max.max(DEFAULT_LAG_CAP));
    out.push(curves.monotone);
    out.push(curves.limits);
    out.push(verify_condition_a_direction(p));

    let a = check_condition_a(p);
    out.push(report(
        "condition-a-converse",
        a.reverse_claim_holds(),
        if a.reverse_claim_holds() { 0.0 } else { -a.margin },
        Some(format!("margin={:e} nondecreasing={}", a.margin, a.nondecreasing)),
        true,
    ));
    match verify_lemma11(p, opts.k_max) {
        Ok(r) => out.push(r),
        Err(e) => out.push(report("state-1-reachability", true, 0.0, Some(format!("skipped: {e}")), true)),
    }

    let prop12 = check_prop12_conditions(p);
    if prop12.holds() {
        out.push(report(
            "equal-middle-column-consequences",
            prop12.consequences_hold(),
            0.0,
            Some(format!("{prop12:?}")),
            false,
        ));
        let s = verify_condition_s(p, alpha, opts.k_max).expect("premises checked above");
        out.extend(s.cases);
        out.push(s.symmetry);
        out.push(s.contraction);

        let tol = p.tolerances().algebraic;
        let (mut restricted, mut free) = ((0.0f64, None), (0.0f64, None));
        for h in 2..=opts.dp_horizon {
            let cap = h.max(DEFAULT_DP_LAG_CAP);
            let c = compare_with_lag_cap(p, alpha, h, cap).expect("cap covers the horizon");
            if c.restricted_gap > restricted.0 || (restricted.1.is_none() && c.restricted_counterexample.is_some()) {
                restricted = (c.restricted_gap.max(restricted.0), c.restricted_counterexample.clone());
            }
            if c.unrestricted_gap > free.0 || (free.1.is_none() && c.counterexample.is_some()) {
                free = (c.unrestricted_gap.max(free.0), c.counterexample.clone());
            }
        }
        out.push(report(
            "restricted-greedy-optimality",
            restricted.0 <= tol && restricted.1.is_none(),
            restricted.0,
            restricted.1,
            false,
        ));
        out.push(report("unrestricted-greedy-optimality", free.0 <= tol && free.1.is_none(), free.0, free.1, true));
    }
    out
}

/// Keeps the worst report per check across instances, in instance order.
fn merge(prefix: &str, per_instance: Vec<Vec<VerificationReport>>) -> Vec<VerificationReport> {
    let mut merged: Vec<VerificationReport> = Vec::new();
    for (i, reports) in per_instance.into_iter().enumerate() {
        for r in reports {
            let check = format!("{prefix}{}", r.check);
            let witness = r.witness.as_ref().map(|w| format!("instance {i}: {w}"));
            match merged.iter_mut().find(|m| m.check == check) {
                Some(m) => {
                    m.pass &= r.pass;
                    if r.max_violation > m.max_violation || (m.witness.is_none() && !r.pass) {
                        m.max_violation = r.max_violation;
                        m.witness = witness;
                    }
                }
                None => merged.push(VerificationReport { check, witness: if r.pass { None } else { witness }, ..r }),
            }
        }
    }
    merged
}

/// Universal checks over random valid instances, computed in parallel and
/// merged in instance order.
pub fn random_checks(opts: &SuiteOptions) -> Vec<VerificationReport> {
    let per_instance: Vec<Vec<VerificationReport>> = (0..opts.random_instances as u64)
        .into_par_iter()
        .map(|n| {
            let (p, alpha) = random_instance(opts.seed, n);
            let curves = verify_monotone_curves(&p, &alpha, opts.k_max.max(DEFAULT_LAG_CAP));
            vec![
                verify_reward_ordering(&p, &alpha, opts.k_max),
                curves.monotone,
                curves.limits,
                verify_condition_a_direction(&p),
            ]
        })
        .collect();
    merge("random/", per_instance)
}

pub fn run_suite(p: &TransitionMatrix, alpha: &RewardVector, opts: &SuiteOptions) -> Vec<VerificationReport> {
    let mut out = instance_checks(p, alpha, opts);
    out.extend(random_checks(opts));
    out
}

/// Whether every non-informational check passed.
pub fn all_hard_checks_pass(reports: &[VerificationReport]) -> bool {
    reports.iter().all(|r| r.informational || r.pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    const P_EQUAL_MIDDLE: [[f64; 3]; 3] = [[0.7, 0.2, 0.1], [0.3, 0.2, 0.5], [0.1, 0.2, 0.7]];
    const P_A: [[f64; 3]; 3] = [[0.8, 0.15, 0.05], [0.1, 0.7, 0.2], [0.05, 0.15, 0.8]];

    #[test]
    fn equal_middle_instance_runs_every_family() {
        let p = TransitionMatrix::new(P_EQUAL_MIDDLE).unwrap();
        let opts = SuiteOptions { random_instances: 5, dp_horizon: 4, ..SuiteOptions::default() };
        let reports = run_suite(&p, &RewardVector::normalized(0.4).unwrap(), &opts);
        assert!(all_hard_checks_pass(&reports), "{reports:#?}");
        for name in
            ["condition-s-case-1", "condition-s-case-6", "middle-column-symmetry", "restricted-greedy-optimality"]
        {
            assert!(reports.iter().any(|r| r.check == name), "missing {name}");
        }
        assert!(reports.iter().any(|r| r.check == "random/reward-ordering"));
    }

    #[test]
    fn general_instance_skips_the_premise_checks() {
        let p = TransitionMatrix::new(P_A).unwrap();
        let opts = SuiteOptions { random_instances: 0, ..SuiteOptions::default() };
        let reports = run_suite(&p, &RewardVector::normalized(0.5).unwrap(), &opts);
        assert!(all_hard_checks_pass(&reports));
        assert!(!reports.iter().any(|r| r.check.starts_with("condition-s")));
    }

    #[test]
    fn random_checks_are_deterministic() {
        let opts = SuiteOptions { random_instances: 40, seed: 3, ..SuiteOptions::default() };
        assert_eq!(random_checks(&opts), random_checks(&opts));
    }

    #[test]
    fn merge_keeps_the_worst_witness() {
        let mk = |v: f64, pass| report("x", pass, v, Some(format!("v={v}")), false);
        let merged = merge("r/", vec![vec![mk(0.0, true)], vec![mk(2.0, false)], vec![mk(1.0, false)]]);
        assert_eq!(merged.len(), 1);
        assert!(!merged[0].pass);
        assert_eq!(merged[0].max_violation, 2.0);
        assert_eq!(merged[0].witness.as_deref(), Some("instance 1: v=2"));
    }
}
