//! Trajectory generation, by direct simulation and by the auxiliary
//! column scheme, and return-time statistics.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, CmcError, Result};
use crate::model::{check_simplex, TransitionModel, ROW_SUM_TOL};
use crate::policy::{History, LoggingPolicy};
use crate::rng::{role, sample_index, stream, StreamRng};

/// A logged path `(X_0, a_0), …, (X_n, a_n)` with 0-based states and actions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
    pub seed: u64,
}

impl Trajectory {
    pub fn new(states: Vec<usize>, actions: Vec<usize>, seed: u64) -> Result<Self> {
        if states.len() != actions.len() {
            return Err(invalid(format!(
                "trajectory has {} states and {} actions",
                states.len(),
                actions.len()
            )));
        }
        if states.is_empty() {
            return Err(invalid("trajectory is empty"));
        }
        Ok(Trajectory { states, actions, seed })
    }

    /// Horizon `n`; the path has `n + 1` entries.
    pub fn horizon(&self) -> usize {
        self.states.len() - 1
    }

    /// Checks states against `0..d` and actions against `0..k`.
    pub fn check_range(&self, d: usize, k: usize) -> Result<()> {
        if let Some((i, s)) = self.states.iter().enumerate().find(|(_, &s)| s >= d) {
            return Err(CmcError::Range(format!("state {} at step {i} outside 1..={d}", s + 1)));
        }
        if let Some((i, a)) = self.actions.iter().enumerate().find(|(_, &a)| a >= k) {
            return Err(CmcError::Range(format!("action {} at step {i} outside 1..={k}", a + 1)));
        }
        Ok(())
    }

    /// Prefix trajectory up to horizon `n`.
    pub fn prefix(&self, n: usize) -> Trajectory {
        let m = (n + 1).min(self.states.len());
        Trajectory { states: self.states[..m].to_vec(), actions: self.actions[..m].to_vec(), seed: self.seed }
    }
}

pub fn uniform_initial(d: usize) -> Vec<f64> {
    vec![1.0 / d as f64; d]
}

fn check_inputs(model: &TransitionModel, policy: &LoggingPolicy, n: usize, initial: &[f64]) -> Result<()> {
    if n < 1 {
        return Err(invalid("horizon must be at least 1"));
    }
    if initial.len() != model.d() {
        return Err(invalid(format!("initial law has {} entries, model has d={}", initial.len(), model.d())));
    }
    check_simplex(initial, ROW_SUM_TOL).map_err(|e| invalid(format!("initial law: {e}")))?;
    policy.check_dimensions(model.d(), model.k())
}

/// Direct simulation with replication index 0.
pub fn simulate(model: &TransitionModel, policy: &LoggingPolicy, n: usize, initial: &[f64], seed: u64) -> Result<Trajectory> {
    simulate_replication(model, policy, n, initial, seed, 0)
}

/// Direct simulation: every draw comes from the control stream of
/// `(seed, replication)`.
pub fn simulate_replication(
    model: &TransitionModel,
    policy: &LoggingPolicy,
    n: usize,
    initial: &[f64],
    seed: u64,
    replication: u64,
) -> Result<Trajectory> {
    check_inputs(model, policy, n, initial)?;
    let mut rng = stream(seed, replication, role::CONTROL);
    let mut states = Vec::with_capacity(n + 1);
    let mut actions = Vec::with_capacity(n + 1);
    let mut dist = vec![0.0; model.k()];
    let mut x = sample_index(&mut rng, initial);
    for i in 0..=n {
        policy.fill_distribution(i, x, History::new(&states, &actions), &mut dist)?;
        let a = sample_index(&mut rng, &dist);
        states.push(x);
        actions.push(a);
        if i < n {
            x = sample_index(&mut rng, model.row(a, x));
        }
    }
    Trajectory::new(states, actions, seed)
}

/// Output of the auxiliary scheme with the number of column entries read
/// from each row, indexed `[l][s]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuxiliaryRun {
    pub trajectory: Trajectory,
    pub consumed: Vec<Vec<usize>>,
}

/// Column arrays `X^(l)_{s,τ}`, drawn on demand. Row `(l, s)` owns its
/// own stream, so entry `τ` is fixed by the key regardless of when it is read.
struct AuxiliaryColumns<'a> {
    model: &'a TransitionModel,
    rows: Vec<Option<StreamRng>>,
    consumed: Vec<usize>,
    seed: u64,
    replication: u64,
}

impl<'a> AuxiliaryColumns<'a> {
    fn new(model: &'a TransitionModel, seed: u64, replication: u64) -> Self {
        let count = model.d() * model.k();
        AuxiliaryColumns { model, rows: (0..count).map(|_| None).collect(), consumed: vec![0; count], seed, replication }
    }

    fn next(&mut self, l: usize, s: usize) -> usize {
        let idx = l * self.model.d() + s;
        let (seed, rep) = (self.seed, self.replication);
        let rng = self.rows[idx].get_or_insert_with(|| stream(seed, rep, role::AUX_BASE + idx as u64));
        self.consumed[idx] += 1;
        sample_index(rng, self.model.row(l, s))
    }
}

pub fn simulate_auxiliary(
    model: &TransitionModel,
    policy: &LoggingPolicy,
    n: usize,
    initial: &[f64],
    seed: u64,
) -> Result<Trajectory> {
    Ok(simulate_auxiliary_replication(model, policy, n, initial, seed, 0)?.trajectory)
}

/// Auxiliary scheme: the next state out of `(X̃_i, ã_i)` is the next unread
/// entry of column row `(ã_i, X̃_i)`. Initial state and actions use the
/// control stream.
pub fn simulate_auxiliary_replication(
    model: &TransitionModel,
    policy: &LoggingPolicy,
    n: usize,
    initial: &[f64],
    seed: u64,
    replication: u64,
) -> Result<AuxiliaryRun> {
    check_inputs(model, policy, n, initial)?;
    let mut control = stream(seed, replication, role::CONTROL);
    let mut columns = AuxiliaryColumns::new(model, seed, replication);
    let mut states = Vec::with_capacity(n + 1);
    let mut actions = Vec::with_capacity(n + 1);
    let mut dist = vec![0.0; model.k()];
    let mut x = sample_index(&mut control, initial);
    for i in 0..=n {
        policy.fill_distribution(i, x, History::new(&states, &actions), &mut dist)?;
        let a = sample_index(&mut control, &dist);
        states.push(x);
        actions.push(a);
        if i < n {
            x = columns.next(a, x);
        }
    }
    let d = model.d();
    let consumed = (0..model.k()).map(|l| columns.consumed[l * d..(l + 1) * d].to_vec()).collect();
    Ok(AuxiliaryRun { trajectory: Trajectory::new(states, actions, seed)?, consumed })
}

/// Return times of pair `(state, action)` (0-based) in one trajectory.
/// `times[0]` is the first hitting index after time 0; later entries are
/// gaps between successive hits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReturnTimes {
    pub state: usize,
    pub action: usize,
    pub times: Vec<usize>,
    pub horizon: usize,
}

impl ReturnTimes {
    /// Index of the last hit (0 if none after time 0).
    pub fn last_hit(&self) -> usize {
        self.times.iter().sum()
    }
}

pub fn return_times(traj: &Trajectory, s: usize, l: usize) -> ReturnTimes {
    let mut times = Vec::new();
    let mut prev = 0;
    for i in 1..traj.states.len() {
        if traj.states[i] == s && traj.actions[i] == l {
            times.push(i - prev);
            prev = i;
        }
    }
    ReturnTimes { state: s, action: l, times, horizon: traj.horizon() }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ReturnGrowthReport {
    pub violation_rate: f64,
    pub fitted_exponent: f64,
    /// Pooled mean of `τ^(i)` for `i = 1..=means.len()`.
    pub means: Vec<f64>,
    pub censored: Vec<usize>,
    pub replications: usize,
}

/// Pools `τ^(i)` across replications and fits `log E[τ^(i)]` against `log i`.
///
/// A replication with fewer than `i` returns contributes the censored gap
/// `horizon − last hit` to index `count + 1` and nothing beyond. Indices run
/// up to the larger of 2 and the 10th percentile of the return counts.
pub fn check_return_growth(samples: &[ReturnTimes], c: f64, alpha_r: f64) -> Result<ReturnGrowthReport> {
    if samples.len() < 50 {
        return Err(CmcError::Diagnostic(format!("return-growth check needs at least 50 replications, got {}", samples.len())));
    }
    let mut counts: Vec<usize> = samples.iter().map(|r| r.times.len()).collect();
    counts.sort_unstable();
    let i_max = counts[counts.len() / 10].max(2);
    let mut sums = vec![0.0; i_max];
    let mut cnt = vec![0usize; i_max];
    let mut censored = vec![0usize; i_max];
    for r in samples {
        for (idx, &t) in r.times.iter().take(i_max).enumerate() {
            sums[idx] += t as f64;
            cnt[idx] += 1;
        }
        let next = r.times.len();
        if next < i_max {
            let gap = (r.horizon - r.last_hit()).max(1);
            sums[next] += gap as f64;
            cnt[next] += 1;
            censored[next] += 1;
        }
    }
    let means: Vec<f64> = sums.iter().zip(&cnt).map(|(s, &c)| if c > 0 { s / c as f64 } else { f64::NAN }).collect();
    let points: Vec<(f64, f64)> = means
        .iter()
        .enumerate()
        .filter(|(_, m)| m.is_finite() && **m > 0.0)
        .map(|(i, m)| (((i + 1) as f64).ln(), m.ln()))
        .collect();
    let fitted_exponent = least_squares_slope(&points)
        .ok_or_else(|| CmcError::Diagnostic("not enough return indices to fit an exponent".into()))?;
    let violations = means
        .iter()
        .enumerate()
        .filter(|(i, m)| **m > c * ((i + 1) as f64).powf(alpha_r))
        .count();
    Ok(ReturnGrowthReport {
        violation_rate: violations as f64 / means.len() as f64,
        fitted_exponent,
        means,
        censored,
        replications: samples.len(),
    })
}

/// Ordinary least-squares slope; `None` with fewer than two distinct abscissae.
pub fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn swap() -> TransitionModel {
        TransitionModel::single_action(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn permutation_kernel_alternates() {
        let p = LoggingPolicy::constant(2, 1, 0).unwrap();
        let t = simulate(&swap(), &p, 5, &[1.0, 0.0], 9).unwrap();
        assert_eq!(t.states, vec![0, 1, 0, 1, 0, 1]);
        let aux = simulate_auxiliary(&swap(), &p, 5, &[1.0, 0.0], 123).unwrap();
        assert_eq!(aux.states, t.states);
    }

    #[test]
    fn same_seed_same_path() {
        let m = TransitionModel::single_action(vec![vec![0.7, 0.3], vec![0.4, 0.6]]).unwrap();
        let p = LoggingPolicy::uniform(2, 1).unwrap();
        let a = simulate(&m, &p, 500, &uniform_initial(2), 42).unwrap();
        let b = simulate(&m, &p, 500, &uniform_initial(2), 42).unwrap();
        let c = simulate(&m, &p, 500, &uniform_initial(2), 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.states, c.states);
    }

    #[test]
    fn consumed_entries_match_visits() {
        let m = TransitionModel::new(
            2,
            2,
            vec![vec![vec![0.7, 0.3], vec![0.4, 0.6]], vec![vec![0.2, 0.8], vec![0.5, 0.5]]],
        )
        .unwrap();
        let p = LoggingPolicy::uniform(2, 2).unwrap();
        let run = simulate_auxiliary_replication(&m, &p, 1000, &uniform_initial(2), 5, 0).unwrap();
        let t = &run.trajectory;
        for l in 0..2 {
            for s in 0..2 {
                let visits = (0..t.horizon()).filter(|&i| t.states[i] == s && t.actions[i] == l).count();
                assert_eq!(run.consumed[l][s], visits);
            }
        }
    }

    #[test]
    fn return_times_example() {
        let t = Trajectory::new(vec![0, 1, 0, 1, 0], vec![0; 5], 0).unwrap();
        assert_eq!(return_times(&t, 0, 0).times, vec![2, 2]);
        assert!(return_times(&t, 0, 1).times.is_empty());
        assert_eq!(return_times(&t, 0, 0).last_hit(), 4);
    }

    #[test]
    fn return_growth_needs_replications() {
        let r = ReturnTimes { state: 0, action: 0, times: vec![1, 2], horizon: 10 };
        assert!(matches!(check_return_growth(&[r], 1.0, 0.5), Err(CmcError::Diagnostic(_))));
    }

    #[test]
    fn bad_initial_law_rejected() {
        let p = LoggingPolicy::uniform(2, 1).unwrap();
        assert!(simulate(&swap(), &p, 5, &[0.5, 0.6], 0).is_err());
        assert!(simulate(&swap(), &p, 0, &[0.5, 0.5], 0).is_err());
    }
}
