//! Growth of visit counts under windowed inhomogeneous schedules.

use serde::Serialize;

use super::noclt::nested_counts;
use super::{replicate, require_kind, Experiment, ExperimentKind};
use crate::error::{CmcError, Result};
use crate::mixing::{visitation_growth, VisitationGrowth};
use crate::policy::{ActionSchedule, LoggingPolicy};
use crate::simulate::simulate_replication;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VisitationReport {
    pub kind: &'static str,
    pub replications: usize,
    pub seed: u64,
    pub growth: VisitationGrowth,
    /// `1/(1+α_r)` for a growing-window schedule.
    pub predicted_exponent: Option<f64>,
}

pub fn run_visitation_experiment(exp: &Experiment) -> Result<VisitationReport> {
    require_kind(exp, ExperimentKind::Visitation)?;
    let model = &exp.model;
    let (d, k) = (model.d(), model.k());
    let mut grid = exp.horizons.clone();
    grid.sort_unstable();
    grid.dedup();
    let Some(&n_max) = grid.last() else {
        return Err(CmcError::Config("visitation experiment needs a horizons grid".into()));
    };
    let reps = replicate(0, exp.replications, |r| {
        let traj = simulate_replication(model, &exp.policy, n_max, &exp.initial, exp.seed, r)?;
        nested_counts(&traj.states, &traj.actions, d, k, &grid)
    })?;
    let by_grid: Vec<_> =
        grid.iter().enumerate().map(|(g, &n)| (n, reps.iter().map(|r| r[g].clone()).collect())).collect();
    let predicted_exponent = match &exp.policy {
        LoggingPolicy::DeterministicSequence(ActionSchedule::GrowingWindow { window, .. }) => {
            Some(1.0 / (1.0 + window.window_exponent))
        }
        _ => None,
    };
    Ok(VisitationReport {
        kind: "visitation",
        replications: exp.replications,
        seed: exp.seed,
        growth: visitation_growth(&by_grid)?,
        predicted_exponent,
    })
}
