//! Path-law equality of direct simulation and the auxiliary column scheme.

use serde::Serialize;

use super::{replicate, require_kind, Experiment, ExperimentKind};
use crate::error::{CmcError, Result};
use crate::mixing::{path_index, path_law, Instance};
use crate::simulate::{simulate_auxiliary_replication, simulate_replication};
use crate::special::chi_square_survival;

pub const MAX_STATES: usize = 2;
pub const MAX_ACTIONS: usize = 2;
pub const MAX_HORIZON: usize = 4;
/// Cells with expected count below this are pooled in the exact test.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ChiSquare {
    pub stat: f64,
    pub df: usize,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SamplingReport {
    pub kind: &'static str,
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    /// Path cells, base `dk` with time 0 most significant.
    pub cells: usize,
    pub exact: Vec<f64>,
    pub direct: Vec<u64>,
    pub auxiliary: Vec<u64>,
    /// Auxiliary frequencies against the exact law.
    pub exact_vs_auxiliary: ChiSquare,
    /// Direct against auxiliary frequencies.
    pub direct_vs_auxiliary: ChiSquare,
    pub warnings: Vec<String>,
}

fn tail(stat: f64, df: usize) -> Result<f64> {
    if df == 0 {
        return Ok(1.0);
    }
    chi_square_survival(stat, df as f64)
}

/// Goodness of fit of `observed` to `probs`, pooling small-expectation
/// cells into one.
pub fn exact_chi_square(observed: &[u64], probs: &[f64]) -> Result<ChiSquare> {
    let total: u64 = observed.iter().sum();
    let r = total as f64;
    let (mut stat, mut cells) = (0.0, 0usize);
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        let e = r * p;
        if p == 0.0 {
            if o > 0 {
                return Ok(ChiSquare { stat: f64::INFINITY, df: cells, p: 0.0 });
            }
            continue;
        }
        if e < MIN_EXPECTED {
            pooled_obs += o as f64;
            pooled_exp += e;
            continue;
        }
        stat += (o as f64 - e).powi(2) / e;
        cells += 1;
    }
    if pooled_exp > 0.0 {
        stat += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        cells += 1;
    }
    let df = cells.saturating_sub(1);
    Ok(ChiSquare { stat, df, p: tail(stat, df)? })
}

/// Two-sample homogeneity statistic for equal sample sizes,
/// `Σ (a − b)² / (a + b)` over cells with `a + b > 0`.
pub fn two_sample_chi_square(a: &[u64], b: &[u64]) -> Result<ChiSquare> {
    if a.iter().sum::<u64>() != b.iter().sum::<u64>() {
        return Err(CmcError::Contract("two-sample test needs equal sample sizes".into()));
    }
    let (mut stat, mut cells) = (0.0, 0usize);
    for (&x, &y) in a.iter().zip(b) {
        if x + y > 0 {
            stat += (x as f64 - y as f64).powi(2) / (x + y) as f64;
            cells += 1;
        }
    }
    let df = cells.saturating_sub(1);
    Ok(ChiSquare { stat, df, p: tail(stat, df)? })
}

pub fn run_sampling_equivalence(exp: &Experiment) -> Result<SamplingReport> {
    require_kind(exp, ExperimentKind::SamplingEquivalence)?;
    let model = &exp.model;
    let (d, k, n) = (model.d(), model.k(), exp.horizon);
    if d > MAX_STATES || k > MAX_ACTIONS || n > MAX_HORIZON {
        return Err(CmcError::Capacity(format!(
            "sampling equivalence supports d ≤ {MAX_STATES}, k ≤ {MAX_ACTIONS}, n ≤ {MAX_HORIZON} (got d={d}, k={k}, n={n})"
        )));
    }
    let inst = Instance::new(model, &exp.policy, exp.initial.clone(), n)?;
    let exact = path_law(&inst)?;
    let cells = exact.len();
    let r = exp.replications;
    // disjoint replication ranges keep the two samples independent
    let direct_paths = replicate(0, r, |rep| {
        let t = simulate_replication(model, &exp.policy, n, &exp.initial, exp.seed, rep)?;
        Ok(path_index(&t.states, &t.actions, d, k))
    })?;
    let aux_paths = replicate(r as u64, r, |rep| {
        let t = simulate_auxiliary_replication(model, &exp.policy, n, &exp.initial, exp.seed, rep)?.trajectory;
        Ok(path_index(&t.states, &t.actions, d, k))
    })?;
    let tally = |paths: &[usize]| {
        let mut f = vec![0u64; cells];
        for &p in paths {
            f[p] += 1;
        }
        f
    };
    let direct = tally(&direct_paths);
    let auxiliary = tally(&aux_paths);
    let mut warnings = Vec::new();
    if r < 100_000 {
        warnings.push(format!("{r} replications; at least 100000 are recommended"));
    }
    Ok(SamplingReport {
        kind: "sampling-equivalence",
        horizon: n,
        replications: r,
        seed: exp.seed,
        cells,
        exact_vs_auxiliary: exact_chi_square(&auxiliary, &exact)?,
        direct_vs_auxiliary: two_sample_chi_square(&direct, &auxiliary)?,
        exact,
        direct,
        auxiliary,
        warnings,
    })
}
