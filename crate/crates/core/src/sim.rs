//! Seeded Monte Carlo estimation of the per-slot sum reward.
//!
//! Each episode draws both users' initial states from `p_ss`, then per slot:
//! the policy picks a user, the reward `alpha` at that user's true state
//! accrues, the scheduler's beliefs are updated with the feedback, and both
//! channels make one Markov transition.
//!
//! Randomness is counter-based: episode `i` of a run with master seed `s`
//! draws its channel transitions from ChaCha8 stream `2i` and any policy
//! randomness from stream `2i + 1`, both keyed by `s`. Episodes are therefore
//! independent of each other and of execution order, and different policies
//! run with the same seed see identical channel realizations.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::belief::{BeliefState, Feedback};
use crate::bounds::BoundsReport;
use crate::channel::sample::uniform;
use crate::channel::{RewardVector, State, TransitionMatrix, Vector3};
use crate::policy::{genie_decide, GreedyPolicy, JointInfoState, Rationale, SystemType, User};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum SimPolicy {
    /// Round-robin form of the greedy policy, driven by the last feedback.
    GreedyStructured,
    /// Greedy by direct comparison of expected rewards.
    GreedyArgmax,
    /// Serves the user whose previous state was better (full information).
    Genie,
    /// Alternates users every slot, ignoring feedback.
    RoundRobin,
    /// Serves a uniformly random user.
    Random,
}

impl SimPolicy {
    pub const ALL: [SimPolicy; 5] = [
        SimPolicy::GreedyStructured,
        SimPolicy::GreedyArgmax,
        SimPolicy::Genie,
        SimPolicy::RoundRobin,
        SimPolicy::Random,
    ];

    pub const fn name(self) -> &'static str {
        match self {
            SimPolicy::GreedyStructured => "greedy-structured",
            SimPolicy::GreedyArgmax => "greedy-argmax",
            SimPolicy::Genie => "genie",
            SimPolicy::RoundRobin => "round-robin",
            SimPolicy::Random => "random",
        }
    }
}

impl fmt::Display for SimPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown policy {0:?}")]
pub struct ParsePolicyError(pub alloc::string::String);

impl FromStr for SimPolicy {
    type Err = ParsePolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SimPolicy::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| ParsePolicyError(s.into()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("episodes must be at least 1")]
    ZeroEpisodes,
    #[error("burn-in {burn_in} must be shorter than the horizon {horizon}")]
    BurnInTooLong { burn_in: usize, horizon: usize },
}

pub const DEFAULT_HORIZON: usize = 10_000;
pub const DEFAULT_EPISODES: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub p: TransitionMatrix,
    pub alpha: RewardVector,
    pub policy: SimPolicy,
    /// Slots per episode.
    pub horizon: usize,
    pub episodes: usize,
    pub seed: u64,
    /// Slots discarded at the start of each episode; `None` means
    /// `horizon / 10`.
    pub burn_in: Option<usize>,
}

impl SimConfig {
    /// 100 episodes of 10^4 slots, seed 0, default burn-in.
    pub fn new(p: TransitionMatrix, alpha: RewardVector, policy: SimPolicy) -> Self {
        SimConfig { p, alpha, policy, horizon: DEFAULT_HORIZON, episodes: DEFAULT_EPISODES, seed: 0, burn_in: None }
    }

    pub fn with_policy(mut self, policy: SimPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_episodes(mut self, episodes: usize) -> Self {
        self.episodes = episodes;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = Some(burn_in);
        self
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in.unwrap_or(self.horizon / 10)
    }

    /// Slots per episode that count toward the estimate.
    pub fn accounted_slots(&self) -> usize {
        self.horizon - self.burn_in()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.horizon == 0 {
            return Err(SimError::ZeroHorizon);
        }
        if self.episodes == 0 {
            return Err(SimError::ZeroEpisodes);
        }
        if self.burn_in() >= self.horizon {
            return Err(SimError::BurnInTooLong { burn_in: self.burn_in(), horizon: self.horizon });
        }
        Ok(())
    }
}

/// One slot of an episode.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SlotRecord {
    pub slot: usize,
    /// True channel states of both users in this slot.
    pub states: [State; 2],
    pub action: User,
    /// The scheduled user's true state, as reported back.
    pub feedback: Feedback,
    pub reward: f64,
    /// Scheduler beliefs when the decision was made.
    pub beliefs: [BeliefState; 2],
    /// Set for the greedy policies.
    pub rationale: Option<Rationale>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub episode: u64,
    pub records: Vec<SlotRecord>,
}

impl EpisodeTrace {
    /// Mean reward over the slots after `burn_in`.
    pub fn mean_reward(&self, burn_in: usize) -> f64 {
        let tail = &self.records[burn_in..];
        tail.iter().map(|r| r.reward).sum::<f64>() / tail.len() as f64
    }
}

/// Estimated per-slot sum reward.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimResult {
    pub policy: SimPolicy,
    pub eta_hat: f64,
    /// Standard error of `eta_hat` from the spread of per-episode means;
    /// 0 for a single episode.
    pub std_err: f64,
    pub episodes: usize,
    /// Total slots counted across all episodes.
    pub slots: u64,
    pub seed: u64,
}

impl SimResult {
    /// Aggregates per-episode means, given in episode-index order.
    pub fn from_episode_means(config: &SimConfig, means: &[f64]) -> Self {
        let n = means.len() as f64;
        let eta_hat = means.iter().sum::<f64>() / n;
        let std_err = if means.len() > 1 {
            let ss: f64 = means.iter().map(|m| (m - eta_hat) * (m - eta_hat)).sum();
            libm::sqrt(ss / (n - 1.0) / n)
        } else {
            0.0
        };
        SimResult {
            policy: config.policy,
            eta_hat,
            std_err,
            episodes: means.len(),
            slots: (config.accounted_slots() * means.len()) as u64,
            seed: config.seed,
        }
    }
}

#[inline]
fn draw_state(dist: &Vector3, u: f64) -> State {
    if u < dist[0] {
        State::S1
    } else if u < dist[0] + dist[1] {
        State::S2
    } else {
        State::S3
    }
}

/// Runs episodes of one configuration.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: SimConfig,
    greedy: GreedyPolicy,
    lag_cap: usize,
}

impl Simulator {
    /// Beliefs are clamped to the steady state once `P^k` has converged.
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let lag_cap = config.p.mixing_lag().max(1);
        let greedy = GreedyPolicy::new(&config.p, &config.alpha, lag_cap);
        Ok(Simulator { config, greedy, lag_cap })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn system(&self) -> SystemType {
        self.greedy.system()
    }

    fn rngs(&self, episode: u64) -> (ChaCha8Rng, ChaCha8Rng) {
        let mut channel = ChaCha8Rng::seed_from_u64(self.config.seed);
        channel.set_stream(2 * episode);
        let mut policy = ChaCha8Rng::seed_from_u64(self.config.seed);
        policy.set_stream(2 * episode + 1);
        (channel, policy)
    }

    /// Runs one episode, handing every slot to `sink`; returns the summed
    /// reward after burn-in.
    fn run(&self, episode: u64, mut sink: impl FnMut(SlotRecord)) -> f64 {
        let cfg = &self.config;
        let p = cfg.p.matrix();
        let (mut rng, mut policy_rng) = self.rngs(episode);
        let steady = cfg.p.steady_state();
        let mut states = [draw_state(&steady, uniform(&mut rng)), draw_state(&steady, uniform(&mut rng))];
        let mut info = JointInfoState::INITIAL;
        let mut prev_states: Option<[State; 2]> = None;
        let mut last_feedback: Option<Feedback> = None;
        let burn_in = cfg.burn_in();
        let mut total = 0.0;

        for slot in 0..cfg.horizon {
            let (action, rationale) = match cfg.policy {
                SimPolicy::GreedyArgmax => {
                    let d = self.greedy.argmax(&info);
                    (d.action, Some(d.rationale))
                }
                SimPolicy::GreedyStructured => {
                    let d = match last_feedback {
                        Some(f) => self.greedy.structured(f, &info),
                        None => self.greedy.argmax(&info),
                    };
                    (d.action, Some(d.rationale))
                }
                SimPolicy::Genie => (genie_decide(prev_states, info.scheduled_last), None),
                SimPolicy::RoundRobin => (info.scheduled_last.map_or(User::One, User::other), None),
                SimPolicy::Random => {
                    let u = if policy_rng.next_u32() & 1 == 0 { User::One } else { User::Two };
                    (u, None)
                }
            };
            let observed = states[action.index()];
            let feedback = Feedback::from(observed);
            let reward = cfg.alpha.get(observed);
            if slot >= burn_in {
                total += reward;
            }
            sink(SlotRecord { slot, states, action, feedback, reward, beliefs: info.beliefs, rationale });

            info = info.after(action, feedback, self.lag_cap);
            last_feedback = Some(feedback);
            prev_states = Some(states);
            let (u1, u2) = (uniform(&mut rng), uniform(&mut rng));
            states = [draw_state(&p[states[0].index()], u1), draw_state(&p[states[1].index()], u2)];
        }
        total
    }

    /// Full per-slot trace of one episode.
    pub fn run_episode(&self, episode: u64) -> EpisodeTrace {
        let mut records = Vec::with_capacity(self.config.horizon);
        self.run(episode, |r| records.push(r));
        EpisodeTrace { episode, records }
    }

    /// Mean reward per accounted slot of one episode.
    pub fn episode_mean(&self, episode: u64) -> f64 {
        self.run(episode, |_| {}) / self.config.accounted_slots() as f64
    }

    /// Runs every episode in order and aggregates.
    pub fn estimate(&self) -> SimResult {
        let means: Vec<f64> = (0..self.config.episodes as u64).map(|e| self.episode_mean(e)).collect();
        SimResult::from_episode_means(&self.config, &means)
    }
}

/// Runs `config` to completion on the current thread.
pub fn estimate_sum_reward(config: SimConfig) -> Result<SimResult, SimError> {
    Ok(Simulator::new(config)?.estimate())
}

/// Two-state (bad, good) chain obtained by lumping states 2 and 3.
///
/// The greedy scheduler on such a chain keeps a user while it reports good
/// and switches on bad.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedChain {
    pub p: [[f64; 2]; 2],
    pub rewards: [f64; 2],
}

impl ReducedChain {
    fn steady_bad(&self) -> f64 {
        let (to_bad_from_good, to_good_from_bad) = (self.p[1][0], self.p[0][1]);
        to_bad_from_good / (to_bad_from_good + to_good_from_bad)
    }

    /// Mean reward per accounted slot of one episode, with the horizon,
    /// seed and burn-in of `config`.
    pub fn episode_mean(&self, config: &SimConfig, episode: u64) -> f64 {
        let (horizon, burn_in) = (config.horizon, config.burn_in());
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(2 * episode);
        let bad = self.steady_bad();
        let mut good = [uniform(&mut rng) >= bad, uniform(&mut rng) >= bad];
        let mut served = 0;
        let mut total = 0.0;
        for slot in 0..horizon {
            if slot >= burn_in {
                total += self.rewards[good[served] as usize];
            }
            if !good[served] {
                served = 1 - served;
            }
            for g in &mut good {
                *g = uniform(&mut rng) >= self.p[*g as usize][0];
            }
        }
        total / (horizon - burn_in) as f64
    }

    /// Estimates the greedy sum reward with the horizon, episodes, seed and
    /// burn-in of `config` (its matrix and policy are ignored).
    pub fn estimate(&self, config: &SimConfig) -> Result<SimResult, SimError> {
        config.validate()?;
        let means: Vec<f64> = (0..config.episodes as u64).map(|e| self.episode_mean(config, e)).collect();
        Ok(SimResult::from_episode_means(&config.clone().with_policy(SimPolicy::GreedyStructured), &means))
    }
}

/// Bounds compared against simulated greedy and genie sum rewards.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SandwichReport {
    pub bounds: BoundsReport,
    pub greedy: SimResult,
    pub genie: SimResult,
    /// `lower <= eta_greedy + 3 se_greedy`.
    pub lower_ok: bool,
    /// `eta_greedy <= upper + 3 se_greedy`.
    pub upper_ok: bool,
    /// `|eta_genie - upper| <= 3 se_genie`.
    pub genie_matches_upper: bool,
    /// `(eta_greedy - lower) / se_greedy`; `None` when the error is 0.
    pub lower_margin_se: Option<f64>,
    /// `(upper - eta_greedy) / se_greedy`.
    pub upper_margin_se: Option<f64>,
    /// `(eta_genie - upper) / se_genie`.
    pub genie_margin_se: Option<f64>,
}

/// Number of standard errors a statistical check may be off by.
pub const SIGMA_BAND: f64 = 3.0;

impl SandwichReport {
    pub fn assemble(bounds: BoundsReport, greedy: SimResult, genie: SimResult) -> Self {
        let units = |x: f64, se: f64| (se > 0.0).then(|| x / se);
        let (g, gs) = (greedy.eta_hat, greedy.std_err);
        let (n, ns) = (genie.eta_hat, genie.std_err);
        SandwichReport {
            lower_ok: bounds.lower <= g + SIGMA_BAND * gs,
            upper_ok: g <= bounds.upper + SIGMA_BAND * gs,
            genie_matches_upper: (n - bounds.upper).abs() <= SIGMA_BAND * ns,
            lower_margin_se: units(g - bounds.lower, gs),
            upper_margin_se: units(bounds.upper - g, gs),
            genie_margin_se: units(n - bounds.upper, ns),
            bounds,
            greedy,
            genie,
        }
    }

    pub fn pass(&self) -> bool {
        self.lower_ok && self.upper_ok && self.genie_matches_upper
    }
}

/// Simulates greedy (round-robin form) and genie with the settings of
/// `config` and compares both with the bounds.
pub fn sandwich_check(config: &SimConfig) -> Result<SandwichReport, SimError> {
    let greedy = estimate_sum_reward(config.clone().with_policy(SimPolicy::GreedyStructured))?;
    let genie = estimate_sum_reward(config.clone().with_policy(SimPolicy::Genie))?;
    Ok(SandwichReport::assemble(BoundsReport::new(&config.p, &config.alpha), greedy, genie))
}
