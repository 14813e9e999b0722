//! Episode-parallel Monte Carlo.
//!
//! Episodes are seeded by index, so running them on a thread pool changes
//! nothing but wall time: the per-episode means are collected in index
//! order and reduced exactly as the sequential engine does.

use arqsched_core::bounds::BoundsReport;
use arqsched_core::sim::{ReducedChain, SandwichReport, SimError};
use arqsched_core::{SimConfig, SimPolicy, SimResult, Simulator};
use rayon::prelude::*;

/// Same result as [`arqsched_core::sim::estimate_sum_reward`], bit for bit.
pub fn estimate(config: SimConfig) -> Result<SimResult, SimError> {
    let sim = Simulator::new(config)?;
    let means: Vec<f64> = (0..sim.config().episodes as u64).into_par_iter().map(|e| sim.episode_mean(e)).collect();
    Ok(SimResult::from_episode_means(sim.config(), &means))
}

/// Same result as [`ReducedChain::estimate`], computed in parallel.
pub fn estimate_reduced(chain: &ReducedChain, config: &SimConfig) -> Result<SimResult, SimError> {
    config.validate()?;
    let means: Vec<f64> = (0..config.episodes as u64).into_par_iter().map(|e| chain.episode_mean(config, e)).collect();
    Ok(SimResult::from_episode_means(&config.clone().with_policy(SimPolicy::GreedyStructured), &means))
}

/// Greedy and genie simulations compared with the bounds.
pub fn sandwich(config: &SimConfig) -> Result<SandwichReport, SimError> {
    let greedy = estimate(config.clone().with_policy(SimPolicy::GreedyStructured))?;
    let genie = estimate(config.clone().with_policy(SimPolicy::Genie))?;
    Ok(SandwichReport::assemble(BoundsReport::new(&config.p, &config.alpha), greedy, genie))
}

#[cfg(test)]
mod tests {
    use super::*;
    use arqsched_core::sim::estimate_sum_reward;
    use arqsched_core::{RewardVector, TransitionMatrix};

    #[test]
    fn parallel_matches_sequential_bitwise() {
        let p = TransitionMatrix::new([[0.8, 0.15, 0.05], [0.1, 0.7, 0.2], [0.05, 0.15, 0.8]]).unwrap();
        let c = SimConfig::new(p, RewardVector::normalized(0.5).unwrap(), SimPolicy::Random)
            .with_horizon(3000)
            .with_episodes(17)
            .with_seed(9);
        let par = estimate(c.clone()).unwrap();
        let seq = estimate_sum_reward(c).unwrap();
        assert_eq!(par.eta_hat.to_bits(), seq.eta_hat.to_bits());
        assert_eq!(par.std_err.to_bits(), seq.std_err.to_bits());
        assert_eq!(par, seq);
    }

    #[test]
    fn reduced_parallel_matches_sequential() {
        let p = TransitionMatrix::new([[0.6, 0.3, 0.1], [0.2, 0.5, 0.3], [0.2, 0.3, 0.5]]).unwrap();
        let c = SimConfig::new(p, RewardVector::normalized(1.0).unwrap(), SimPolicy::GreedyStructured)
            .with_horizon(2000)
            .with_episodes(9);
        let chain = ReducedChain { p: [[0.6, 0.4], [0.2, 0.8]], rewards: [0.0, 1.0] };
        assert_eq!(estimate_reduced(&chain, &c).unwrap(), chain.estimate(&c).unwrap());
    }
}
