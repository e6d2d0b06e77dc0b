//! CLTs for the plug-in value, Q and advantage estimators.

use nalgebra::DVector;
use serde::Serialize;

use super::stats::MomentAccumulator;
use super::{low_replication_warning, replicate, require_kind, CovarianceComparison, Experiment, ExperimentKind};
use crate::error::{CmcError, Result};
use crate::estimate::{count, covariance_improper, estimate_kernel, stationary_occupation};
use crate::io::{matrix_rows, ser_vector};
use crate::model::expansion_matrix;
use crate::policy::LoggingPolicy;
use crate::rl::{covariance_bundle, evaluate, evaluate_from_counts, expected_rewards, q_function, value_function};
use crate::simulate::simulate_replication;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TrueValues {
    #[serde(rename = "V", serialize_with = "ser_vector")]
    pub v: DVector<f64>,
    #[serde(rename = "Q", serialize_with = "ser_vector")]
    pub q: DVector<f64>,
    #[serde(rename = "A", serialize_with = "ser_vector")]
    pub a: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RlCoverage {
    #[serde(rename = "V")]
    pub v: Vec<f64>,
    #[serde(rename = "Q")]
    pub q: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RlReport {
    pub kind: &'static str,
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    pub level: f64,
    pub discount: f64,
    pub included: usize,
    pub excluded: usize,
    pub truth: TrueValues,
    pub occupation: Vec<f64>,
    /// `√n(V̂ − V)` against `Σ_V`.
    #[serde(rename = "V")]
    pub v: CovarianceComparison,
    #[serde(rename = "Q")]
    pub q: CovarianceComparison,
    #[serde(rename = "A")]
    pub a: CovarianceComparison,
    /// Coverage of the plug-in `1 − level` intervals.
    pub coverage: RlCoverage,
    pub warnings: Vec<String>,
}

struct Replication {
    errors: Option<(Vec<f64>, Vec<f64>, Vec<f64>)>,
    covered: Option<(Vec<bool>, Vec<bool>, Vec<bool>)>,
}

/// Monte Carlo errors use the true expected reward `r`, so only the
/// kernel is estimated; the interval coverage uses the plug-in reports.
pub fn run_rl_experiment(exp: &Experiment) -> Result<RlReport> {
    require_kind(exp, ExperimentKind::Rl)?;
    let model = &exp.model;
    let target = exp.target.as_ref().ok_or_else(|| CmcError::Config("rl experiment needs a target policy".into()))?;
    let rewards = exp.rewards.as_ref().ok_or_else(|| CmcError::Config("rl experiment needs rewards".into()))?;
    let LoggingPolicy::StationaryMarkov(table) = &exp.policy else {
        return Err(CmcError::Config("rl experiment needs a stationary logging policy".into()));
    };
    let (d, k, n) = (model.d(), model.k(), exp.horizon);
    let alpha = rewards.discount();
    let truth = evaluate(model, target, rewards)?;
    let (g, r_true) = expected_rewards(rewards, target, model)?;
    let occupation = stationary_occupation(model, table)?;
    let lambda_bar = covariance_improper(model, &occupation)?;
    let cov = covariance_bundle(model, target, &truth.v, &truth.q, &lambda_bar, &occupation, alpha)?;
    let expand = expansion_matrix(d, k);
    let sqrt_n = (n as f64).sqrt();
    let confidence = 1.0 - exp.level;

    let reps = replicate(0, exp.replications, |rep| {
        let traj = simulate_replication(model, &exp.policy, n, &exp.initial, exp.seed, rep)?;
        let counts = count(&traj, d, k)?;
        let est = estimate_kernel(&counts);
        if !est.all_defined() {
            return Ok(Replication { errors: None, covered: None });
        }
        let m_hat = est.to_model()?;
        let v_hat = value_function(&m_hat, target, &g, alpha)?;
        let q_hat = q_function(&m_hat, target, &r_true, alpha)?;
        let a_hat = &q_hat - &expand * &v_hat;
        let scale = |x: &DVector<f64>, y: &DVector<f64>| (x - y).iter().map(|e| sqrt_n * e).collect::<Vec<f64>>();
        let errors = (scale(&v_hat, &truth.v), scale(&q_hat, &truth.q), scale(&a_hat, &truth.a));
        let plug = evaluate_from_counts(&counts, target, rewards, confidence)?;
        let hits = |ivs: &[crate::rl::ScalarInterval], truth: &DVector<f64>| {
            ivs.iter().zip(truth.iter()).map(|(iv, &t)| iv.lower <= t && t <= iv.upper).collect::<Vec<bool>>()
        };
        let covered = (
            hits(&plug.intervals.v, &truth.v),
            hits(&plug.intervals.q, &truth.q),
            hits(&plug.intervals.a, &truth.a),
        );
        Ok(Replication { errors: Some(errors), covered: Some(covered) })
    })?;

    let mut acc = (MomentAccumulator::new(d), MomentAccumulator::new(d * k), MomentAccumulator::new(d * k));
    let mut hits = (vec![0usize; d], vec![0usize; d * k], vec![0usize; d * k]);
    for rep in &reps {
        if let (Some(e), Some(c)) = (&rep.errors, &rep.covered) {
            acc.0.push(&e.0);
            acc.1.push(&e.1);
            acc.2.push(&e.2);
            for (h, &x) in hits.0.iter_mut().zip(&c.0) {
                *h += x as usize;
            }
            for (h, &x) in hits.1.iter_mut().zip(&c.1) {
                *h += x as usize;
            }
            for (h, &x) in hits.2.iter_mut().zip(&c.2) {
                *h += x as usize;
            }
        }
    }
    let included = acc.0.count();
    let rate = |h: &[usize]| h.iter().map(|&x| x as f64 / included.max(1) as f64).collect::<Vec<f64>>();
    let mut warnings: Vec<String> = low_replication_warning(included).into_iter().collect();
    let excluded = reps.len() - included;
    if excluded > 0 {
        warnings.push(format!("{excluded} replications had an undefined row and were excluded"));
    }
    Ok(RlReport {
        kind: "rl",
        horizon: n,
        replications: exp.replications,
        seed: exp.seed,
        level: exp.level,
        discount: alpha,
        included,
        excluded,
        truth: TrueValues { v: truth.v.clone(), q: truth.q.clone(), a: truth.a.clone() },
        occupation,
        v: CovarianceComparison::new(&acc.0, matrix_rows(&cov.sigma_v)),
        q: CovarianceComparison::new(&acc.1, matrix_rows(&cov.sigma_q)),
        a: CovarianceComparison::new(&acc.2, matrix_rows(&cov.sigma_a)),
        coverage: RlCoverage { v: rate(&hits.0), q: rate(&hits.1), a: rate(&hits.2) },
        warnings,
    })
}
