//! Starved-pair demonstration: under a vanishing action the error at the
//! starved pair stops shrinking while covered pairs keep the `n^{-1/2}` rate.

use serde::Serialize;

use super::stats::quantile;
use super::{replicate, require_kind, Experiment, ExperimentKind};
use crate::error::{CmcError, Result};
use crate::estimate::{estimate_kernel, Counts};
use crate::model::TransitionModel;
use crate::policy::LoggingPolicy;
use crate::simulate::simulate_replication;

/// Starved quantiles may drop to this fraction of their first value and
/// still count as flat.
pub const FLAT_TOLERANCE: f64 = 0.8;
/// Covered-pair decade ratios must lie within this relative distance of `10^{-1/2}`.
pub const RATIO_TOLERANCE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Quantiles {
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
}

impl Quantiles {
    fn of(xs: &[f64]) -> Self {
        Quantiles { q25: quantile(xs, 0.25), q50: quantile(xs, 0.5), q75: quantile(xs, 0.75) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NoCltLevel {
    pub horizon: usize,
    /// Replications where the starved row is defined.
    pub starved_included: usize,
    pub starved_excluded: usize,
    pub starved_mean_visits: f64,
    /// `sup_t |M̂ − M|` at the starved pair.
    pub starved_error: Quantiles,
    /// `max` over the other pairs of `sup_t |M̂ − M|`.
    pub covered_error: Quantiles,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NoCltReport {
    pub kind: &'static str,
    pub replications: usize,
    pub seed: u64,
    /// 1-based starved pair `[s, l]`.
    pub starved_pair: [usize; 2],
    pub beta: f64,
    pub levels: Vec<NoCltLevel>,
    /// Starved 0.25-quantile never falls below `FLAT_TOLERANCE` times its first value.
    pub starved_flat: bool,
    /// Covered median ratio between successive grid points.
    pub covered_ratios: Vec<f64>,
    /// `(n_{m}/n_{m+1})^{1/2}` for each step of the grid.
    pub covered_ratio_targets: Vec<f64>,
    pub covered_scaling: bool,
}

/// Counts at every grid horizon along one path; `grid` must be increasing.
pub fn nested_counts(states: &[usize], actions: &[usize], d: usize, k: usize, grid: &[usize]) -> Result<Vec<Counts>> {
    let mut c = Counts::zeros(d, k)?;
    let mut out = Vec::with_capacity(grid.len());
    let mut i = 0;
    for &n in grid {
        while i < n {
            c.add(states[i], actions[i], states[i + 1]);
            i += 1;
        }
        out.push(c.clone());
    }
    Ok(out)
}

fn sup_error(row: &[f64], truth: &[f64]) -> f64 {
    row.iter().zip(truth).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

pub fn run_no_clt_demo(exp: &Experiment) -> Result<NoCltReport> {
    require_kind(exp, ExperimentKind::NoClt)?;
    let LoggingPolicy::VanishingAction { target, beta, .. } = &exp.policy else {
        return Err(CmcError::Config("no-clt demo needs a vanishing-action policy".into()));
    };
    let (ts, tl) = *target;
    let model: &TransitionModel = &exp.model;
    let (d, k) = (model.d(), model.k());
    let mut grid = if exp.horizons.is_empty() { vec![exp.horizon] } else { exp.horizons.clone() };
    grid.sort_unstable();
    grid.dedup();
    let n_max = *grid.last().expect("grid is non-empty");

    // per replication and grid point: (starved visits, starved error, covered error)
    let reps = replicate(0, exp.replications, |r| {
        let traj = simulate_replication(model, &exp.policy, n_max, &exp.initial, exp.seed, r)?;
        let counts = nested_counts(&traj.states, &traj.actions, d, k, &grid)?;
        Ok(counts
            .iter()
            .map(|c| {
                let est = estimate_kernel(c);
                let starved = est.row(tl, ts).map(|row| sup_error(row, model.row(tl, ts)));
                let covered = (0..d)
                    .flat_map(|s| (0..k).map(move |l| (s, l)))
                    .filter(|&p| p != (ts, tl))
                    .filter_map(|(s, l)| est.row(l, s).map(|row| sup_error(row, model.row(l, s))))
                    .fold(0.0, f64::max);
                (c.visits(ts, tl), starved, covered)
            })
            .collect::<Vec<_>>())
    })?;

    let levels: Vec<NoCltLevel> = grid
        .iter()
        .enumerate()
        .map(|(g, &n)| {
            let starved: Vec<f64> = reps.iter().filter_map(|r| r[g].1).collect();
            let covered: Vec<f64> = reps.iter().map(|r| r[g].2).collect();
            NoCltLevel {
                horizon: n,
                starved_included: starved.len(),
                starved_excluded: reps.len() - starved.len(),
                starved_mean_visits: reps.iter().map(|r| r[g].0 as f64).sum::<f64>() / reps.len() as f64,
                starved_error: Quantiles::of(&starved),
                covered_error: Quantiles::of(&covered),
            }
        })
        .collect();
    let first_q25 = levels[0].starved_error.q25;
    let starved_flat = levels.iter().all(|l| l.starved_error.q25 >= FLAT_TOLERANCE * first_q25);
    let covered_ratios: Vec<f64> =
        levels.windows(2).map(|w| w[1].covered_error.q50 / w[0].covered_error.q50).collect();
    let covered_ratio_targets: Vec<f64> =
        grid.windows(2).map(|w| (w[0] as f64 / w[1] as f64).sqrt()).collect();
    let covered_scaling = covered_ratios
        .iter()
        .zip(&covered_ratio_targets)
        .all(|(r, t)| (r / t - 1.0).abs() <= RATIO_TOLERANCE);
    Ok(NoCltReport {
        kind: "no-clt",
        replications: exp.replications,
        seed: exp.seed,
        starved_pair: [ts + 1, tl + 1],
        beta: *beta,
        levels,
        starved_flat,
        covered_ratios,
        covered_ratio_targets,
        covered_scaling,
    })
}
