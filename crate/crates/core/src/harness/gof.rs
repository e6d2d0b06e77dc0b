//! Size and power of the pooled goodness-of-fit test.

use serde::Serialize;

use super::{replicate, require_kind, Experiment, ExperimentKind, Perturbation};
use crate::error::{CmcError, Result};
use crate::estimate::count;
use crate::inference::gof_test;
use crate::model::TransitionModel;
use crate::simulate::simulate_replication;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PowerPoint {
    pub epsilon: f64,
    pub rejection_rate: f64,
    pub mean_statistic: f64,
    /// Replications where no pair was visited.
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GofStudy {
    pub kind: &'static str,
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    pub level: f64,
    pub perturbation: Perturbation,
    /// Rejection rate at `ε = 0`, when requested.
    pub size_estimate: Option<f64>,
    pub power_curve: Vec<PowerPoint>,
    /// `Σ d_(s,l) − dk` for the null model.
    pub expected_df: usize,
    /// Distinct pooled df values seen across replications.
    pub pooled_df_values: Vec<usize>,
}

/// The null model with `+ε` and `−ε` applied to one row. An entry leaving
/// `[0, 1]` is a config error.
pub fn perturb(model: &TransitionModel, p: Perturbation, eps: f64) -> Result<TransitionModel> {
    let (d, k) = (model.d(), model.k());
    let coords = [p.state, p.action, p.increase, p.decrease];
    if coords.contains(&0) || p.state > d || p.increase > d || p.decrease > d || p.action > k {
        return Err(CmcError::Config(format!("perturbation {p:?} outside the model")));
    }
    if p.increase == p.decrease {
        return Err(CmcError::Config("perturbation must move mass between two different entries".into()));
    }
    let mut kernel = model.kernel_nested();
    let row = &mut kernel[p.action - 1][p.state - 1];
    row[p.increase - 1] += eps;
    row[p.decrease - 1] -= eps;
    if row.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(CmcError::Config(format!("perturbation ε={eps} leaves the simplex: {row:?}")));
    }
    TransitionModel::new(d, k, kernel).map_err(|e| CmcError::Config(e.to_string()))
}

pub fn run_gof_study(exp: &Experiment) -> Result<GofStudy> {
    require_kind(exp, ExperimentKind::Gof)?;
    let null = &exp.model;
    let (d, k) = (null.d(), null.k());
    let models: Vec<TransitionModel> =
        exp.perturbations.iter().map(|&eps| perturb(null, exp.perturbation, eps)).collect::<Result<_>>()?;
    let expected_df = (0..d).flat_map(|s| (0..k).map(move |l| (s, l))).map(|(s, l)| null.support_size(l, s)).sum::<usize>()
        - d * k;
    let mut power_curve = Vec::new();
    let mut dfs = std::collections::BTreeSet::new();
    for (e, (model, &eps)) in models.iter().zip(&exp.perturbations).enumerate() {
        let offset = (e as u64) << 32;
        let outcomes = replicate(offset, exp.replications, |r| {
            let traj = simulate_replication(model, &exp.policy, exp.horizon, &exp.initial, exp.seed, r)?;
            match gof_test(&count(&traj, d, k)?, null, exp.level) {
                Ok(g) => Ok(Some((g.reject, g.pooled.stat, g.pooled.df))),
                Err(CmcError::InferenceImpossible(_)) => Ok(None),
                Err(other) => Err(other),
            }
        })?;
        let ok: Vec<_> = outcomes.iter().flatten().collect();
        dfs.extend(ok.iter().map(|o| o.2));
        let m = ok.len().max(1) as f64;
        power_curve.push(PowerPoint {
            epsilon: eps,
            rejection_rate: ok.iter().filter(|o| o.0).count() as f64 / m,
            mean_statistic: ok.iter().map(|o| o.1).sum::<f64>() / m,
            failed: outcomes.len() - ok.len(),
        });
    }
    Ok(GofStudy {
        kind: "gof",
        horizon: exp.horizon,
        replications: exp.replications,
        seed: exp.seed,
        level: exp.level,
        perturbation: exp.perturbation,
        size_estimate: power_curve.iter().find(|p| p.epsilon == 0.0).map(|p| p.rejection_rate),
        power_curve,
        expected_df,
        pooled_df_values: dfs.into_iter().collect(),
    })
}
