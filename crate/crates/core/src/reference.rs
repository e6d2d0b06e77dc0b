//! Fixed instances used by the experiments, the acceptance checks and the
//! shipped configs.

use crate::error::Result;
use crate::model::{RewardModel, TargetPolicy, TransitionModel};
use crate::policy::{make_vanishing, ActionSchedule, ActionTable, LoggingPolicy};

/// Reference chain: `d = 3`, `k = 2`, every kernel entry at least 0.1.
pub fn reference_model() -> TransitionModel {
    TransitionModel::new(
        3,
        2,
        vec![
            vec![vec![0.5, 0.4, 0.1], vec![0.1, 0.8, 0.1], vec![0.1, 0.1, 0.8]],
            vec![vec![0.1, 0.1, 0.8], vec![0.8, 0.1, 0.1], vec![0.1, 0.8, 0.1]],
        ],
    )
    .expect("reference kernel is valid")
}

pub fn reference_table() -> ActionTable {
    ActionTable::new(vec![vec![0.5, 0.5], vec![0.4, 0.6], vec![0.7, 0.3]]).expect("reference table is valid")
}

/// Stationary logging policy with every action probability at least 0.3.
pub fn reference_policy() -> LoggingPolicy {
    LoggingPolicy::StationaryMarkov(reference_table())
}

pub fn reference_target() -> TargetPolicy {
    TargetPolicy::new(vec![vec![0.6, 0.4], vec![0.5, 0.5], vec![0.2, 0.8]]).expect("target is valid")
}

pub fn reference_rewards() -> RewardModel {
    RewardModel::state_action(vec![vec![1.0, 0.0], vec![0.0, 0.5], vec![0.2, 1.0]], 0.8).expect("rewards are valid")
}

/// Two states; action 1 stays, action 2 swaps.
pub fn stay_swap_model() -> TransitionModel {
    TransitionModel::new(
        2,
        2,
        vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![vec![0.0, 1.0], vec![1.0, 0.0]]],
    )
    .expect("stay/swap kernel is valid")
}

/// Stay/swap with each move succeeding with probability `1 − noise`.
pub fn noisy_stay_swap_model(noise: f64) -> Result<TransitionModel> {
    let (a, b) = (1.0 - noise, noise);
    TransitionModel::new(2, 2, vec![vec![vec![a, b], vec![b, a]], vec![vec![b, a], vec![a, b]]])
}

/// Reward 1 for staying in state 1, 0 elsewhere.
pub fn stay_swap_rewards(discount: f64) -> Result<RewardModel> {
    RewardModel::state_action(vec![vec![1.0, 0.0], vec![0.0, 0.0]], discount)
}

/// Two-state, two-action chain with entries at least 0.3, driven by the
/// deterministic cycle `1, 2, 1, 2, …`.
pub fn inhomogeneous_model() -> TransitionModel {
    TransitionModel::new(2, 2, vec![vec![vec![0.7, 0.3], vec![0.4, 0.6]], vec![vec![0.3, 0.7], vec![0.6, 0.4]]])
        .expect("inhomogeneous kernel is valid")
}

pub fn inhomogeneous_policy() -> LoggingPolicy {
    LoggingPolicy::DeterministicSequence(ActionSchedule::Cycle { k: 2 })
}

/// Reference chain with `P(a_i = 2 | X_i = 1) = 1/(i+1)^2`.
pub fn starved_policy() -> LoggingPolicy {
    make_vanishing(reference_table(), (0, 1), 2.0).expect("vanishing policy is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_margins() {
        assert!(reference_model().min_entry() >= 0.1);
        assert!(reference_table().rows().iter().flatten().all(|&p| p >= 0.3));
        assert!(inhomogeneous_model().min_entry() >= 0.3);
    }
}
