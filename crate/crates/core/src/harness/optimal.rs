//! Recovery of the optimal policy and coverage of its value interval.

use serde::Serialize;

use super::{replicate, require_kind, Experiment, ExperimentKind};
use crate::error::{CmcError, Result};
use crate::estimate::count;
use crate::rl::{optimal_value_interval, policy_iteration, Separation};
use crate::simulate::simulate_replication;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OptimalReport {
    pub kind: &'static str,
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    pub level: f64,
    /// 1-based optimal actions of the true model.
    pub pi_opt: Vec<usize>,
    pub v_opt: Vec<f64>,
    pub separation: Option<Separation>,
    pub included: usize,
    pub excluded: usize,
    /// Fraction of replications with `π̂_opt = π_opt`.
    pub recovery_rate: f64,
    /// Coverage of `V_{π_opt}(s)` per state.
    pub coverage: Vec<f64>,
    /// Coverage pooled over states.
    pub pooled_coverage: f64,
}

pub fn run_optimal_experiment(exp: &Experiment) -> Result<OptimalReport> {
    require_kind(exp, ExperimentKind::Optimal)?;
    let model = &exp.model;
    let rewards = exp.rewards.as_ref().ok_or_else(|| CmcError::Config("optimal experiment needs rewards".into()))?;
    let (d, k) = (model.d(), model.k());
    let truth = policy_iteration(model, rewards, rewards.discount())?;
    let pi_opt: Vec<usize> = truth.actions.iter().map(|a| a + 1).collect();
    let v_opt: Vec<f64> = truth.v_opt.iter().copied().collect();
    let outcomes = replicate(0, exp.replications, |r| {
        let traj = simulate_replication(model, &exp.policy, exp.horizon, &exp.initial, exp.seed, r)?;
        match optimal_value_interval(&count(&traj, d, k)?, rewards, 1.0 - exp.level) {
            Ok(rep) => {
                let hits: Vec<bool> =
                    rep.intervals.iter().zip(&v_opt).map(|(iv, &v)| iv.lower <= v && v <= iv.upper).collect();
                Ok(Some((rep.pi_hat_opt == pi_opt, hits)))
            }
            Err(CmcError::InferenceImpossible(_)) => Ok(None),
            Err(e) => Err(e),
        }
    })?;
    let ok: Vec<_> = outcomes.iter().flatten().collect();
    let m = ok.len().max(1) as f64;
    let coverage: Vec<f64> = (0..d).map(|s| ok.iter().filter(|o| o.1[s]).count() as f64 / m).collect();
    Ok(OptimalReport {
        kind: "optimal",
        horizon: exp.horizon,
        replications: exp.replications,
        seed: exp.seed,
        level: exp.level,
        pi_opt,
        v_opt,
        separation: truth.separation,
        included: ok.len(),
        excluded: outcomes.len() - ok.len(),
        recovery_rate: ok.iter().filter(|o| o.0).count() as f64 / m,
        pooled_coverage: coverage.iter().sum::<f64>() / d as f64,
        coverage,
    })
}
