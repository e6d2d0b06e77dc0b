//! Bellman solves under a stationary target policy, the asymptotic
//! covariances of the plug-in value, Q and advantage estimators, and
//! policy iteration.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{CmcError, Result};
use crate::estimate::{covariance_improper, estimate_kernel, Counts};
use crate::model::{block_diagonal, expansion_matrix, stack_kernel, RewardModel, TargetPolicy, TransitionModel};
use crate::special::normal_quantile;

/// Relative residual allowed for every linear solve.
pub const SOLVE_TOL: f64 = 1e-10;

fn check_shapes(model: &TransitionModel, policy: &TargetPolicy) -> Result<()> {
    if model.d() != policy.d() || model.k() != policy.k() {
        return Err(CmcError::Contract(format!(
            "target policy is {}x{}, model is {}x{}",
            policy.d(),
            policy.k(),
            model.d(),
            model.k()
        )));
    }
    Ok(())
}

fn check_discount(discount: f64) -> Result<()> {
    if !(discount > 0.0 && discount < 1.0) {
        return Err(CmcError::Domain(format!("discount {discount} outside (0,1)")));
    }
    Ok(())
}

/// Solves `(I − αP) x = b` by LU and checks the residual.
fn solve_resolvent(p: &DMatrix<f64>, discount: f64, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = p.nrows();
    let a = DMatrix::identity(n, n) - p * discount;
    let x = a
        .clone()
        .lu()
        .solve(b)
        .ok_or_else(|| CmcError::Domain("Bellman operator is singular".into()))?;
    let residual = (&a * &x - b).amax();
    let scale = b.amax().max(1.0);
    if residual > SOLVE_TOL * scale {
        return Err(CmcError::Domain(format!("Bellman solve residual {residual:e} above tolerance")));
    }
    Ok(x)
}

/// `g(x) = Σ_a π(x,a) g̃(x,a)` and `r(x,a) = Σ_y M_{x,y}^(a) r̃(x,a,y)`.
pub fn expected_rewards(
    rewards: &RewardModel,
    policy: &TargetPolicy,
    model: &TransitionModel,
) -> Result<(DVector<f64>, DVector<f64>)> {
    check_shapes(model, policy)?;
    if rewards.d() != model.d() || rewards.k() != model.k() {
        return Err(CmcError::Contract("reward shape differs from the model".into()));
    }
    let (d, k) = (model.d(), model.k());
    let g = DVector::from_fn(d, |s, _| (0..k).map(|l| policy.prob(s, l) * rewards.g_tilde(s, l)).sum());
    let r = DVector::from_fn(d * k, |p, _| {
        let (s, l) = (p / k, p % k);
        (0..d).map(|t| model.prob(l, s, t) * rewards.r_tilde(s, l, t)).sum()
    });
    Ok((g, r))
}

/// `V = (I − αΠ𝐌)⁻¹ g`.
pub fn value_function(model: &TransitionModel, policy: &TargetPolicy, g: &DVector<f64>, discount: f64) -> Result<DVector<f64>> {
    check_shapes(model, policy)?;
    check_discount(discount)?;
    if g.len() != model.d() {
        return Err(CmcError::Contract(format!("g has length {}, expected {}", g.len(), model.d())));
    }
    let pm = block_diagonal(policy) * stack_kernel(model);
    let b = DMatrix::from_column_slice(g.len(), 1, g.as_slice());
    Ok(solve_resolvent(&pm, discount, &b)?.column(0).into_owned())
}

/// `Q = (I − α𝐌Π)⁻¹ r`.
pub fn q_function(model: &TransitionModel, policy: &TargetPolicy, r: &DVector<f64>, discount: f64) -> Result<DVector<f64>> {
    check_shapes(model, policy)?;
    check_discount(discount)?;
    let dk = model.d() * model.k();
    if r.len() != dk {
        return Err(CmcError::Contract(format!("r has length {}, expected {dk}", r.len())));
    }
    let mp = stack_kernel(model) * block_diagonal(policy);
    let b = DMatrix::from_column_slice(dk, 1, r.as_slice());
    Ok(solve_resolvent(&mp, discount, &b)?.column(0).into_owned())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueBundle {
    #[serde(rename = "V")]
    #[serde(serialize_with = "crate::io::ser_vector")]
    pub v: DVector<f64>,
    #[serde(rename = "Q")]
    #[serde(serialize_with = "crate::io::ser_vector")]
    pub q: DVector<f64>,
    #[serde(rename = "A")]
    #[serde(serialize_with = "crate::io::ser_vector")]
    pub a: DVector<f64>,
    pub discount: f64,
}

/// `V`, `Q` and `A = Q − K V` for the given model and rewards.
pub fn evaluate(model: &TransitionModel, policy: &TargetPolicy, rewards: &RewardModel) -> Result<ValueBundle> {
    let (g, r) = expected_rewards(rewards, policy, model)?;
    let discount = rewards.discount();
    let v = value_function(model, policy, &g, discount)?;
    let q = q_function(model, policy, &r, discount)?;
    let a = &q - expansion_matrix(model.d(), model.k()) * &v;
    Ok(ValueBundle { v, q, a, discount })
}

/// Linearisations of `V̂ − V` and `Q̂ − Q` in `Vec(𝐌̂ᵀ − 𝐌ᵀ)`:
/// `B_V = α[(I−αΠ𝐌)⁻¹Π ⊗ Vᵀ]`, `B_Q = α[(I−α𝐌Π)⁻¹ ⊗ (ΠQ)ᵀ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sensitivities {
    pub b_v: DMatrix<f64>,
    pub b_q: DMatrix<f64>,
}

pub fn sensitivities(
    model: &TransitionModel,
    policy: &TargetPolicy,
    v: &DVector<f64>,
    q: &DVector<f64>,
    discount: f64,
) -> Result<Sensitivities> {
    check_shapes(model, policy)?;
    check_discount(discount)?;
    let (d, k) = (model.d(), model.k());
    if v.len() != d || q.len() != d * k {
        return Err(CmcError::Contract("V or Q has the wrong length".into()));
    }
    let pi = block_diagonal(policy);
    let m = stack_kernel(model);
    let left_v = solve_resolvent(&(&pi * &m), discount, &pi)?;
    let left_q = solve_resolvent(&(&m * &pi), discount, &DMatrix::identity(d * k, d * k))?;
    let pq = &pi * q;
    let b_v = left_v.kronecker(&v.transpose()) * discount;
    let b_q = left_q.kronecker(&pq.transpose()) * discount;
    Ok(Sensitivities { b_v, b_q })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CovarianceBundle {
    #[serde(serialize_with = "crate::io::ser_matrix")]
    pub sigma_v: DMatrix<f64>,
    #[serde(serialize_with = "crate::io::ser_matrix")]
    pub sigma_q: DMatrix<f64>,
    #[serde(serialize_with = "crate::io::ser_matrix")]
    pub sigma_a: DMatrix<f64>,
    #[serde(serialize_with = "crate::io::ser_matrix")]
    pub lambda_q: DMatrix<f64>,
}

fn sandwich(b: &DMatrix<f64>, lambda_bar: &DMatrix<f64>) -> DMatrix<f64> {
    let s = b * lambda_bar * b.transpose();
    (&s + s.transpose()) * 0.5
}

/// `Σ_V = B_V Λ̄ B_Vᵀ`, `Σ_Q = B_Q Λ̄ B_Qᵀ`, `Σ_A = (B_Q − K B_V) Λ̄ (·)ᵀ` and
/// `Λ_Q = sqrt(p pᵀ) ⊙ Σ_Q`, with `p` the occupation measure in pair order.
pub fn covariance_bundle(
    model: &TransitionModel,
    policy: &TargetPolicy,
    v: &DVector<f64>,
    q: &DVector<f64>,
    lambda_bar: &DMatrix<f64>,
    p: &[f64],
    discount: f64,
) -> Result<CovarianceBundle> {
    let map = model.index_map();
    let size = map.triple_count();
    if lambda_bar.nrows() != size || lambda_bar.ncols() != size {
        return Err(CmcError::Contract(format!(
            "Λ̄ is {}x{}, expected {size}x{size}",
            lambda_bar.nrows(),
            lambda_bar.ncols()
        )));
    }
    if p.len() != map.pair_count() {
        return Err(CmcError::Contract(format!("occupation has {} entries, expected {}", p.len(), map.pair_count())));
    }
    let ops = sensitivities(model, policy, v, q, discount)?;
    let k_mat = expansion_matrix(map.d, map.k);
    let b_a = &ops.b_q - &k_mat * &ops.b_v;
    let sigma_v = sandwich(&ops.b_v, lambda_bar);
    let sigma_q = sandwich(&ops.b_q, lambda_bar);
    let sigma_a = sandwich(&b_a, lambda_bar);
    let lambda_q = properly_scaled_q(&sigma_q, p);
    Ok(CovarianceBundle { sigma_v, sigma_q, sigma_a, lambda_q })
}

/// `Λ_Q[sl, s'l'] = sqrt(p_s^(l) p_{s'}^(l')) Σ_Q[sl, s'l']`.
pub fn properly_scaled_q(sigma_q: &DMatrix<f64>, p: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(sigma_q.nrows(), sigma_q.ncols(), |a, b| (p[a] * p[b]).sqrt() * sigma_q[(a, b)])
}

/// One-step lookahead `g̃(s,a) + α Σ_t M_{s,t}^(a) V(t)` in pair order.
pub fn lookahead(model: &TransitionModel, rewards: &RewardModel, v: &DVector<f64>, discount: f64) -> DVector<f64> {
    let (d, k) = (model.d(), model.k());
    DVector::from_fn(d * k, |p, _| {
        let (s, l) = (p / k, p % k);
        rewards.g_tilde(s, l) + discount * (0..d).map(|t| model.prob(l, s, t) * v[t]).sum::<f64>()
    })
}

/// Tolerance under which two lookahead values count as tied.
pub const TIE_TOL: f64 = 1e-12;

fn greedy(values: &DVector<f64>, d: usize, k: usize) -> Vec<usize> {
    (0..d)
        .map(|s| {
            let row = &values.as_slice()[s * k..(s + 1) * k];
            let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let tol = TIE_TOL * best.abs().max(1.0);
            row.iter().position(|&x| x >= best - tol).unwrap_or(0)
        })
        .collect()
}

/// Value of a deterministic policy given as 0-based actions, using `g̃` as
/// the per-state reward.
pub fn deterministic_value(model: &TransitionModel, rewards: &RewardModel, actions: &[usize], discount: f64) -> Result<DVector<f64>> {
    let policy = TargetPolicy::deterministic(model.k(), actions)?;
    let (g, _) = expected_rewards(rewards, &policy, model)?;
    value_function(model, &policy, &g, discount)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Separation {
    /// `min_s (V_opt(s) − V_π'(s))` for the closest single-state deviation.
    pub margin: f64,
    /// The challenger's actions, 1-based.
    pub challenger: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PolicyIterationResult {
    /// Optimal actions per state, 0-based.
    #[serde(skip)]
    pub actions: Vec<usize>,
    pub pi_opt: TargetPolicy,
    #[serde(serialize_with = "crate::io::ser_vector")]
    pub v_opt: DVector<f64>,
    pub iterations: usize,
    pub bellman_residual: f64,
    pub separation: Option<Separation>,
}

/// Howard policy iteration from the all-action-1 policy. The greedy step
/// picks the lowest action index within [`TIE_TOL`] of the best lookahead.
pub fn policy_iteration(model: &TransitionModel, rewards: &RewardModel, discount: f64) -> Result<PolicyIterationResult> {
    check_discount(discount)?;
    if rewards.d() != model.d() || rewards.k() != model.k() {
        return Err(CmcError::Contract("reward shape differs from the model".into()));
    }
    let (d, k) = (model.d(), model.k());
    let cap = (k as f64).powi(d as i32).min(1e6) as usize + 1;
    let mut actions = vec![0usize; d];
    let mut iterations = 0;
    let v = loop {
        iterations += 1;
        let v = deterministic_value(model, rewards, &actions, discount)?;
        let q = lookahead(model, rewards, &v, discount);
        // keep the incumbent where it is tied with the greedy choice
        let next: Vec<usize> = greedy(&q, d, k)
            .iter()
            .enumerate()
            .map(|(s, &a)| {
                let tol = TIE_TOL * q[s * k + a].abs().max(1.0);
                if q[s * k + actions[s]] >= q[s * k + a] - tol { actions[s] } else { a }
            })
            .collect();
        if next == actions || iterations >= cap {
            break v;
        }
        actions = next;
    };
    // lowest-index representative among tied optimal actions
    let q = lookahead(model, rewards, &v, discount);
    let canonical = greedy(&q, d, k);
    let v = if canonical != actions {
        actions = canonical;
        deterministic_value(model, rewards, &actions, discount)?
    } else {
        v
    };
    let q = lookahead(model, rewards, &v, discount);
    let bellman_residual = (0..d)
        .map(|s| {
            let best = (0..k).map(|l| q[s * k + l]).fold(f64::NEG_INFINITY, f64::max);
            (best - v[s]).abs()
        })
        .fold(0.0, f64::max);
    let separation = separation(model, rewards, &actions, &v, discount)?;
    Ok(PolicyIterationResult {
        pi_opt: TargetPolicy::deterministic(k, &actions)?,
        actions,
        v_opt: v,
        iterations,
        bellman_residual,
        separation,
    })
}

fn separation(
    model: &TransitionModel,
    rewards: &RewardModel,
    actions: &[usize],
    v_opt: &DVector<f64>,
    discount: f64,
) -> Result<Option<Separation>> {
    let mut best: Option<Separation> = None;
    for s in 0..model.d() {
        for l in 0..model.k() {
            if l == actions[s] {
                continue;
            }
            let mut challenger = actions.to_vec();
            challenger[s] = l;
            let v = deterministic_value(model, rewards, &challenger, discount)?;
            let margin = (v_opt - v).min();
            if best.as_ref().is_none_or(|b| margin < b.margin) {
                best = Some(Separation { margin, challenger: challenger.iter().map(|a| a + 1).collect() });
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ScalarInterval {
    pub estimate: f64,
    pub half_width: f64,
    pub lower: f64,
    pub upper: f64,
}

fn intervals(est: &DVector<f64>, cov: &DMatrix<f64>, z: f64, n: usize) -> Vec<ScalarInterval> {
    est.iter()
        .enumerate()
        .map(|(i, &e)| {
            let half_width = z * (cov[(i, i)].max(0.0) / n as f64).sqrt();
            ScalarInterval { estimate: e, half_width, lower: e - half_width, upper: e + half_width }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OptimalValueReport {
    /// 1-based actions of the plug-in optimal policy.
    pub pi_hat_opt: Vec<usize>,
    #[serde(serialize_with = "crate::io::ser_vector")]
    pub v_hat: DVector<f64>,
    pub intervals: Vec<ScalarInterval>,
    #[serde(serialize_with = "crate::io::ser_matrix")]
    pub sigma_v: DMatrix<f64>,
    pub confidence: f64,
    pub horizon: usize,
    pub separation: Option<Separation>,
    pub bellman_residual: f64,
}

/// Plug-in optimal policy on `M̂` and per-state intervals from the plug-in
/// `Σ_V` of that policy, `V̂ ± z sqrt(Σ_V(s,s)/n)`.
pub fn optimal_value_interval(counts: &Counts, rewards: &RewardModel, confidence: f64) -> Result<OptimalValueReport> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(CmcError::Domain(format!("confidence {confidence} outside (0,1)")));
    }
    let est = estimate_kernel(counts);
    let m_hat = est.to_model()?;
    let discount = rewards.discount();
    let pi = policy_iteration(&m_hat, rewards, discount)?;
    let (_, r) = expected_rewards(rewards, &pi.pi_opt, &m_hat)?;
    let q = q_function(&m_hat, &pi.pi_opt, &r, discount)?;
    let lambda_bar = covariance_improper(&m_hat, est.occupation())?;
    let cov = covariance_bundle(&m_hat, &pi.pi_opt, &pi.v_opt, &q, &lambda_bar, est.occupation(), discount)?;
    let z = normal_quantile(0.5 + confidence / 2.0)?;
    Ok(OptimalValueReport {
        pi_hat_opt: pi.actions.iter().map(|a| a + 1).collect(),
        intervals: intervals(&pi.v_opt, &cov.sigma_v, z, counts.horizon()),
        v_hat: pi.v_opt,
        sigma_v: cov.sigma_v,
        confidence,
        horizon: counts.horizon(),
        separation: pi.separation,
        bellman_residual: pi.bellman_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EvaluationIntervals {
    #[serde(rename = "V")]
    pub v: Vec<ScalarInterval>,
    #[serde(rename = "Q")]
    pub q: Vec<ScalarInterval>,
    #[serde(rename = "A")]
    pub a: Vec<ScalarInterval>,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EvaluationReport {
    #[serde(rename = "V")]
    #[serde(serialize_with = "crate::io::ser_vector")]
    pub v: DVector<f64>,
    #[serde(rename = "Q")]
    #[serde(serialize_with = "crate::io::ser_vector")]
    pub q: DVector<f64>,
    #[serde(rename = "A")]
    #[serde(serialize_with = "crate::io::ser_vector")]
    pub a: DVector<f64>,
    #[serde(serialize_with = "crate::io::ser_matrix")]
    pub sigma_v: DMatrix<f64>,
    #[serde(serialize_with = "crate::io::ser_matrix")]
    pub sigma_q: DMatrix<f64>,
    #[serde(serialize_with = "crate::io::ser_matrix")]
    pub sigma_a: DMatrix<f64>,
    #[serde(serialize_with = "crate::io::ser_matrix")]
    pub lambda_q: DMatrix<f64>,
    pub intervals: EvaluationIntervals,
    /// Plug-in optimal policy as a `[s][l]` table.
    pub pi_opt: Vec<Vec<f64>>,
    pub horizon: usize,
}

/// Plug-in evaluation of a target policy from logged counts. The expected
/// transition reward `r` is formed with `M̂`.
pub fn evaluate_from_counts(
    counts: &Counts,
    target: &TargetPolicy,
    rewards: &RewardModel,
    confidence: f64,
) -> Result<EvaluationReport> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(CmcError::Domain(format!("confidence {confidence} outside (0,1)")));
    }
    let est = estimate_kernel(counts);
    let m_hat = est.to_model()?;
    let values = evaluate(&m_hat, target, rewards)?;
    let lambda_bar = covariance_improper(&m_hat, est.occupation())?;
    let cov = covariance_bundle(&m_hat, target, &values.v, &values.q, &lambda_bar, est.occupation(), values.discount)?;
    let pi = policy_iteration(&m_hat, rewards, values.discount)?;
    let z = normal_quantile(0.5 + confidence / 2.0)?;
    let n = counts.horizon();
    Ok(EvaluationReport {
        intervals: EvaluationIntervals {
            v: intervals(&values.v, &cov.sigma_v, z, n),
            q: intervals(&values.q, &cov.sigma_q, z, n),
            a: intervals(&values.a, &cov.sigma_a, z, n),
            confidence,
        },
        v: values.v,
        q: values.q,
        a: values.a,
        sigma_v: cov.sigma_v,
        sigma_q: cov.sigma_q,
        sigma_a: cov.sigma_a,
        lambda_q: cov.lambda_q,
        pi_opt: pi.pi_opt.rows(),
        horizon: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn swap_model() -> TransitionModel {
        TransitionModel::single_action(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn swap_chain_value() {
        let pi = TargetPolicy::new(vec![vec![1.0], vec![1.0]]).unwrap();
        let v = value_function(&swap_model(), &pi, &DVector::from_vec(vec![1.0, 0.0]), 0.5).unwrap();
        assert!((v[0] - 4.0 / 3.0).abs() < 1e-12 && (v[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_state_geometric_series() {
        let m = TransitionModel::single_action(vec![vec![1.0]]).unwrap();
        let pi = TargetPolicy::new(vec![vec![1.0]]).unwrap();
        let v = value_function(&m, &pi, &DVector::from_vec(vec![2.0]), 0.75).unwrap();
        assert!((v[0] - 8.0).abs() < 1e-12);
        let q = q_function(&m, &pi, &DVector::from_vec(vec![2.0]), 0.75).unwrap();
        assert!((q[0] - 8.0).abs() < 1e-12);
        let tiny = value_function(&m, &pi, &DVector::from_vec(vec![2.0]), 1e-9).unwrap();
        assert!((tiny[0] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn stay_swap_policy_iteration() {
        let m = TransitionModel::new(
            2,
            2,
            vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![vec![0.0, 1.0], vec![1.0, 0.0]]],
        )
        .unwrap();
        let rewards = RewardModel::state_action(vec![vec![1.0, 0.0], vec![0.0, 0.0]], 0.9).unwrap();
        let res = policy_iteration(&m, &rewards, 0.9).unwrap();
        assert_eq!(res.actions, vec![0, 1]);
        assert!((res.v_opt[0] - 10.0).abs() < 1e-9 && (res.v_opt[1] - 9.0).abs() < 1e-9);
        assert!(res.bellman_residual < 1e-9);
    }

    #[test]
    fn zero_lambda_gives_zero_covariance() {
        let m = TransitionModel::single_action(vec![vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        let pi = TargetPolicy::new(vec![vec![1.0], vec![1.0]]).unwrap();
        let rewards = RewardModel::state_action(vec![vec![1.0], vec![0.0]], 0.9).unwrap();
        let vals = evaluate(&m, &pi, &rewards).unwrap();
        let cov = covariance_bundle(&m, &pi, &vals.v, &vals.q, &DMatrix::zeros(4, 4), &[0.5, 0.5], 0.9).unwrap();
        assert_eq!(cov.sigma_v.amax(), 0.0);
        assert_eq!(cov.sigma_a.amax(), 0.0);
        assert!(covariance_bundle(&m, &pi, &vals.v, &vals.q, &DMatrix::zeros(3, 3), &[0.5, 0.5], 0.9).is_err());
    }
}
