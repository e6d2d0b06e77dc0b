//! Properly and improperly scaled CLT for the count estimator.

use serde::Serialize;

use super::stats::{ks_normal, MomentAccumulator};
use super::{low_replication_warning, replicate, require_kind, CovarianceComparison, Experiment, ExperimentKind};
use crate::error::Result;
use crate::estimate::{
    count, covariance_improper, covariance_proper, estimate_kernel, scaled_error_improper, scaled_error_proper,
    stationary_occupation,
};
use crate::inference::transition_intervals;
use crate::io::matrix_rows;
use crate::policy::LoggingPolicy;
use crate::simulate::simulate_replication;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PairExclusions {
    pub state: usize,
    pub action: usize,
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CltReport {
    pub kind: &'static str,
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    pub level: f64,
    pub included: usize,
    pub excluded: usize,
    pub excluded_pairs: Vec<PairExclusions>,
    /// Occupation measure used for the improper scaling, in pair order.
    pub occupation: Vec<f64>,
    /// `stationary` when solved from the chain, `empirical` when averaged.
    pub occupation_source: &'static str,
    pub proper: CovarianceComparison,
    /// Largest `|emp|` between coordinates of different `(s,l)` blocks.
    pub cross_block_max: f64,
    pub improper: CovarianceComparison,
    /// KS distance of `ξ / sd` against the standard normal per coordinate.
    pub ks: Vec<Option<f64>>,
    pub max_ks: f64,
    /// Fraction of replications whose `1 − level` interval covers `M`.
    pub coverage: Vec<f64>,
    pub warnings: Vec<String>,
}

struct Replication {
    proper: Option<Vec<f64>>,
    improper: Option<Vec<f64>>,
    covered: Option<Vec<bool>>,
    undefined: Vec<(usize, usize)>,
    occupation: Vec<f64>,
}

pub fn run_clt_experiment(exp: &Experiment) -> Result<CltReport> {
    require_kind(exp, ExperimentKind::Clt)?;
    let model = &exp.model;
    let (d, k, n) = (model.d(), model.k(), exp.horizon);
    let map = model.index_map();
    let reps = replicate(0, exp.replications, |r| {
        let traj = simulate_replication(model, &exp.policy, n, &exp.initial, exp.seed, r)?;
        let counts = count(&traj, d, k)?;
        let est = estimate_kernel(&counts);
        let undefined = est.undefined_pairs();
        let occupation = est.occupation().to_vec();
        if !undefined.is_empty() {
            return Ok(Replication { proper: None, improper: None, covered: None, undefined, occupation });
        }
        let proper = scaled_error_proper(&est, model)?.dense();
        let improper = scaled_error_improper(&est, model, n)?.dense();
        let table = transition_intervals(&counts, 1.0 - exp.level, false)?;
        let covered = (0..map.triple_count())
            .map(|c| {
                let (s, l, t) = map.triple0_inverse(c);
                let iv = table.get(s, l, t).expect("defined row has intervals");
                iv.lower <= model.prob(l, s, t) && model.prob(l, s, t) <= iv.upper
            })
            .collect();
        Ok(Replication { proper: Some(proper), improper: Some(improper), covered: Some(covered), undefined, occupation })
    })?;

    let size = map.triple_count();
    let mut proper_acc = MomentAccumulator::new(size);
    let mut improper_acc = MomentAccumulator::new(size);
    let mut covered = vec![0usize; size];
    let mut undefined_counts = vec![0usize; d * k];
    let mut proper_samples: Vec<Vec<f64>> = Vec::new();
    let mut occupation_sum = vec![0.0; d * k];
    let mut excluded = 0;
    for rep in &reps {
        for (o, p) in occupation_sum.iter_mut().zip(&rep.occupation) {
            *o += p;
        }
        for &(s, l) in &rep.undefined {
            undefined_counts[map.pair0(s, l)] += 1;
        }
        match (&rep.proper, &rep.improper, &rep.covered) {
            (Some(p), Some(q), Some(c)) => {
                proper_acc.push(p);
                improper_acc.push(q);
                proper_samples.push(p.clone());
                for (acc, &hit) in covered.iter_mut().zip(c) {
                    *acc += hit as usize;
                }
            }
            _ => excluded += 1,
        }
    }
    let included = proper_acc.count();

    let (occupation, occupation_source) = match &exp.policy {
        LoggingPolicy::StationaryMarkov(table) => (stationary_occupation(model, table)?, "stationary"),
        _ => (occupation_sum.iter().map(|o| o / reps.len() as f64).collect(), "empirical"),
    };
    let lambda = matrix_rows(&covariance_proper(model));
    let lambda_bar = matrix_rows(&covariance_improper(model, &occupation)?);
    let proper = CovarianceComparison::new(&proper_acc, lambda.clone());
    let cross_block_max = (0..size)
        .flat_map(|i| (0..size).map(move |j| (i, j)))
        .filter(|&(i, j)| i / d != j / d)
        .map(|(i, j)| proper.empirical[i][j].abs())
        .fold(0.0, f64::max);
    let improper = CovarianceComparison::new(&improper_acc, lambda_bar);

    let ks: Vec<Option<f64>> = (0..size)
        .map(|c| {
            let sd = lambda[c][c].sqrt();
            (sd > 0.0 && included > 0).then(|| {
                let z: Vec<f64> = proper_samples.iter().map(|x| x[c] / sd).collect();
                ks_normal(&z)
            })
        })
        .collect();
    let max_ks = ks.iter().flatten().copied().fold(0.0, f64::max);
    let coverage = covered.iter().map(|&c| if included > 0 { c as f64 / included as f64 } else { f64::NAN }).collect();

    let mut warnings: Vec<String> = low_replication_warning(included).into_iter().collect();
    if excluded > 0 {
        warnings.push(format!("{excluded} replications had an undefined row and were excluded"));
    }
    let excluded_pairs = undefined_counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(u, &c)| {
            let (s, l) = map.pair0_inverse(u);
            PairExclusions { state: s + 1, action: l + 1, replications: c }
        })
        .collect();

    Ok(CltReport {
        kind: "clt",
        horizon: n,
        replications: exp.replications,
        seed: exp.seed,
        level: exp.level,
        included,
        excluded,
        excluded_pairs,
        occupation,
        occupation_source,
        proper,
        cross_block_max,
        improper,
        ks,
        max_ks,
        coverage,
        warnings,
    })
}
