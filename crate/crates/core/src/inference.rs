//! Goodness-of-fit test against a simple null kernel and marginal
//! confidence intervals for transition probabilities.

use serde::Serialize;

use crate::error::{CmcError, Result};
use crate::estimate::{estimate_kernel, Counts};
use crate::model::TransitionModel;
use crate::special::{chi_square_survival, normal_quantile};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairStatistic {
    /// 1-based state.
    pub state: usize,
    /// 1-based action.
    pub action: usize,
    pub stat: f64,
    pub df: usize,
    pub p: f64,
    #[serde(rename = "nVisits")]
    pub n_visits: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PooledStatistic {
    pub stat: f64,
    pub df: usize,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GofResult {
    pub pooled: PooledStatistic,
    pub per_pair: Vec<PairStatistic>,
    pub level: f64,
    pub reject: bool,
    /// Zero-visit pairs, 1-based `[s, l]`.
    pub excluded: Vec<[usize; 2]>,
}

fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(CmcError::Domain(format!("level {level} outside (0,1)")));
    }
    Ok(())
}

/// Upper tail that also covers `df = 0` (a point-mass null row) and an
/// infinite statistic.
fn tail(stat: f64, df: usize) -> Result<f64> {
    if stat.is_infinite() {
        return Ok(0.0);
    }
    if df == 0 {
        return Ok(if stat == 0.0 { 1.0 } else { 0.0 });
    }
    chi_square_survival(stat, df as f64)
}

/// Pearson statistic per visited pair and pooled over pairs, with
/// `df = Σ d_(s,l) − (#included pairs)`, `d_(s,l)` the number of positive
/// null entries in the row. A transition seen where the null puts zero
/// mass makes that pair's statistic infinite.
pub fn gof_test(counts: &Counts, null: &TransitionModel, level: f64) -> Result<GofResult> {
    check_level(level)?;
    if counts.index_map() != null.index_map() {
        return Err(CmcError::Contract(format!(
            "counts are {}x{}, null model is {}x{}",
            counts.d(),
            counts.k(),
            null.d(),
            null.k()
        )));
    }
    let (d, k) = (counts.d(), counts.k());
    let mut per_pair = Vec::new();
    let mut excluded = Vec::new();
    let (mut pooled_stat, mut pooled_df) = (0.0, 0usize);
    for s in 0..d {
        for l in 0..k {
            let n = counts.visits(s, l);
            if n == 0 {
                excluded.push([s + 1, l + 1]);
                continue;
            }
            let row = null.row(l, s);
            let nf = n as f64;
            let mut stat = 0.0;
            let mut support = 0;
            for t in 0..d {
                let observed = counts.transitions(s, l, t) as f64;
                if row[t] > 0.0 {
                    support += 1;
                    let expected = nf * row[t];
                    stat += (observed - expected).powi(2) / expected;
                } else if observed > 0.0 {
                    stat = f64::INFINITY;
                }
            }
            let df = support - 1;
            pooled_stat += stat;
            pooled_df += df;
            per_pair.push(PairStatistic { state: s + 1, action: l + 1, stat, df, p: tail(stat, df)?, n_visits: n });
        }
    }
    if per_pair.is_empty() {
        return Err(CmcError::InferenceImpossible("no state-action pair was visited".into()));
    }
    let p = tail(pooled_stat, pooled_df)?;
    Ok(GofResult {
        pooled: PooledStatistic { stat: pooled_stat, df: pooled_df, p },
        per_pair,
        level,
        reject: p < level,
        excluded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TransitionInterval {
    /// 1-based `(s, l, t)`.
    pub state: usize,
    pub action: usize,
    pub next: usize,
    pub estimate: f64,
    pub half_width: f64,
    pub lower: f64,
    pub upper: f64,
    pub n_visits: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct IntervalTable {
    pub intervals: Vec<TransitionInterval>,
    pub confidence: f64,
    pub bonferroni: bool,
    pub z: f64,
    /// Zero-visit pairs, 1-based `[s, l]`.
    pub omitted: Vec<[usize; 2]>,
}

impl IntervalTable {
    /// Interval for 0-based `(s, l, t)`, if the row was visited.
    pub fn get(&self, s: usize, l: usize, t: usize) -> Option<&TransitionInterval> {
        self.intervals.iter().find(|iv| iv.state == s + 1 && iv.action == l + 1 && iv.next == t + 1)
    }
}

/// Expected-count threshold below which an interval carries a warning.
pub const SMALL_COUNT: f64 = 5.0;

/// Marginal Wald intervals `M̂ ± z sqrt(M̂(1−M̂)/N)`, clipped to `[0, 1]`.
/// With `bonferroni` the miss rate `1 − confidence` is split over `d²k`
/// coordinates.
pub fn transition_intervals(counts: &Counts, confidence: f64, bonferroni: bool) -> Result<IntervalTable> {
    check_level(confidence)?;
    let map = counts.index_map();
    let miss = if bonferroni { (1.0 - confidence) / map.triple_count() as f64 } else { 1.0 - confidence };
    let z = normal_quantile(1.0 - miss / 2.0)?;
    let est = estimate_kernel(counts);
    let mut intervals = Vec::new();
    let mut omitted = Vec::new();
    for s in 0..map.d {
        for l in 0..map.k {
            let Some(row) = est.row(l, s) else {
                omitted.push([s + 1, l + 1]);
                continue;
            };
            let n = counts.visits(s, l);
            for (t, &m) in row.iter().enumerate() {
                let half_width = z * (m * (1.0 - m) / n as f64).max(0.0).sqrt();
                let warning = (n as f64 * m.min(1.0 - m) < SMALL_COUNT)
                    .then(|| format!("small count: N={n}, estimate {m}; normal approximation unreliable"));
                intervals.push(TransitionInterval {
                    state: s + 1,
                    action: l + 1,
                    next: t + 1,
                    estimate: m,
                    half_width,
                    lower: (m - half_width).max(0.0),
                    upper: (m + half_width).min(1.0),
                    n_visits: n,
                    warning,
                });
            }
        }
    }
    Ok(IntervalTable { intervals, confidence, bonferroni, z, omitted })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_example() {
        let counts = Counts::from_transitions(1, 1, &[vec![vec![30]]]).unwrap();
        assert!(counts.visits(0, 0) == 30);
        let counts = Counts::from_transitions(2, 1, &[vec![vec![30, 70]], vec![vec![50, 50]]]).unwrap();
        let null = TransitionModel::single_action(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let r = gof_test(&counts, &null, 0.05).unwrap();
        assert!((r.per_pair[0].stat - 16.0).abs() < 1e-12);
        assert_eq!(r.per_pair[0].df, 1);
        assert!((r.per_pair[0].p - 6.334e-5).abs() < 1e-7);
        assert_eq!(r.per_pair[1].stat, 0.0);
        assert_eq!(r.pooled.df, 2);
        assert!(r.reject);
    }

    #[test]
    fn impossible_transition_rejects() {
        let counts = Counts::from_transitions(2, 1, &[vec![vec![3, 1]], vec![vec![2, 2]]]).unwrap();
        let null = TransitionModel::single_action(vec![vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        let r = gof_test(&counts, &null, 0.05).unwrap();
        assert!(r.per_pair[0].stat.is_infinite());
        assert_eq!(r.per_pair[0].df, 0);
        assert_eq!(r.pooled.p, 0.0);
        assert!(r.reject);
    }

    #[test]
    fn unvisited_everywhere_is_impossible() {
        let counts = Counts::zeros(2, 1).unwrap();
        let null = TransitionModel::single_action(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!(matches!(gof_test(&counts, &null, 0.05), Err(CmcError::InferenceImpossible(_))));
        assert!(matches!(gof_test(&counts, &null, 1.5), Err(CmcError::Domain(_))));
    }

    #[test]
    fn wald_interval_example() {
        let counts = Counts::from_transitions(1, 1, &[vec![vec![100]]]).unwrap();
        let t = transition_intervals(&counts, 0.95, false).unwrap();
        assert_eq!(t.intervals[0].half_width, 0.0);
        assert!(t.intervals[0].warning.is_some());

        let counts = Counts::from_transitions(2, 1, &[vec![vec![70, 30]], vec![vec![0, 0]]]).unwrap();
        let t = transition_intervals(&counts, 0.95, false).unwrap();
        let iv = t.get(0, 0, 0).unwrap();
        assert!((iv.lower - 0.6102).abs() < 1e-4 && (iv.upper - 0.7898).abs() < 1e-4);
        assert_eq!(t.omitted, vec![[2, 1]]);
    }
}
