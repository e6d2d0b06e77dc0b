//! Logging (behaviour) policies behind one interface.
//!
//! Time, states and actions are 0-based here. A history passed to
//! [`LoggingPolicy::fill_distribution`] at time `i` holds the pairs
//! `(X_0, a_0), …, (X_{i-1}, a_{i-1})`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{CmcError, Result};
use crate::model::{check_simplex, ROW_SUM_TOL};

/// Prefix of the logged path seen by a policy at time `i`.
#[derive(Debug, Clone, Copy)]
pub struct History<'a> {
    pub states: &'a [usize],
    pub actions: &'a [usize],
}

impl<'a> History<'a> {
    pub fn new(states: &'a [usize], actions: &'a [usize]) -> Self {
        History { states, actions }
    }

    pub fn empty() -> History<'static> {
        History { states: &[], actions: &[] }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// A user-supplied non-Markov rule. Implementations must be pure functions
/// of their arguments; randomness belongs to the caller.
pub trait HistoryRule: Send + Sync + fmt::Debug {
    fn k(&self) -> usize;

    /// Writes the action law at time `i` in state `s` into `out` (length `k`).
    fn fill(&self, i: usize, s: usize, history: History<'_>, out: &mut [f64]);

    /// Wire form, if the rule is one of the built-ins.
    fn spec(&self) -> Option<PolicySpec> {
        None
    }
}

/// Repeats the previous action with probability `q`, otherwise uniform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepeatPrevious {
    pub k: usize,
    pub q: f64,
}

impl HistoryRule for RepeatPrevious {
    fn k(&self) -> usize {
        self.k
    }

    fn fill(&self, _i: usize, _s: usize, history: History<'_>, out: &mut [f64]) {
        let base = if history.is_empty() { 1.0 } else { 1.0 - self.q };
        out.fill(base / self.k as f64);
        if let Some(&prev) = history.actions.last() {
            out[prev] += self.q;
        }
    }

    fn spec(&self) -> Option<PolicySpec> {
        Some(PolicySpec::RepeatPrevious { k: self.k, q: self.q })
    }
}

/// Repeats the very first action with probability `q`, otherwise uniform.
/// Unlike [`RepeatPrevious`] the dependence on the past never fades.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepeatFirst {
    pub k: usize,
    pub q: f64,
}

impl HistoryRule for RepeatFirst {
    fn k(&self) -> usize {
        self.k
    }

    fn fill(&self, _i: usize, _s: usize, history: History<'_>, out: &mut [f64]) {
        let base = if history.is_empty() { 1.0 } else { 1.0 - self.q };
        out.fill(base / self.k as f64);
        if let Some(&first) = history.actions.first() {
            out[first] += self.q;
        }
    }

    fn spec(&self) -> Option<PolicySpec> {
        Some(PolicySpec::RepeatFirst { k: self.k, q: self.q })
    }
}

/// Action table `P[s][l]`, each row a simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionTable {
    d: usize,
    k: usize,
    probs: Vec<f64>,
}

impl ActionTable {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = rows.len();
        let k = rows.first().map(|r| r.len()).unwrap_or(0);
        if d == 0 || k == 0 {
            return Err(CmcError::Config("action table must be non-empty".into()));
        }
        for (s, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(CmcError::Config(format!("action table row {} has {} entries, expected {k}", s + 1, row.len())));
            }
            check_simplex(row, ROW_SUM_TOL).map_err(|e| CmcError::Config(format!("action table row {}: {e}", s + 1)))?;
        }
        Ok(ActionTable { d, k, probs: rows.into_iter().flatten().collect() })
    }

    pub fn uniform(d: usize, k: usize) -> Result<Self> {
        Self::new(vec![vec![1.0 / k as f64; k]; d])
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.k..(s + 1) * self.k]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.d).map(|s| self.row(s).to_vec()).collect()
    }
}

/// `T_i = ceil(c · i^α_r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PolicyWindowSpec {
    pub window_constant: f64,
    pub window_exponent: f64,
}

impl PolicyWindowSpec {
    pub fn new(window_constant: f64, window_exponent: f64) -> Result<Self> {
        if !(window_constant > 0.0 && window_constant.is_finite()) {
            return Err(CmcError::Config(format!("window constant {window_constant} must be positive")));
        }
        if !(window_exponent > 0.0 && window_exponent < 1.0) {
            return Err(CmcError::Config(format!("window exponent {window_exponent} outside (0,1)")));
        }
        Ok(PolicyWindowSpec { window_constant, window_exponent })
    }

    /// Window length for `i ≥ 1`.
    pub fn window(&self, i: usize) -> usize {
        (self.window_constant * (i as f64).powf(self.window_exponent)).ceil() as usize
    }
}

/// How a deterministic sequence picks `l_i`.
#[derive(Debug, Clone, PartialEq)]
pub enum ActionSchedule {
    /// `l_i = i mod k`.
    Cycle { k: usize },
    /// Finite list; querying past its end is a configuration error.
    Explicit { k: usize, actions: Vec<usize> },
    /// Blocks of length `max(k, ceil(c·m^α))`, `m = 1, 2, …`; each block
    /// plays actions `0..k` once, then action 0 for the remainder.
    GrowingWindow { k: usize, window: PolicyWindowSpec, horizon: usize, block_starts: Vec<usize> },
}

impl ActionSchedule {
    fn k(&self) -> usize {
        match self {
            ActionSchedule::Cycle { k } | ActionSchedule::Explicit { k, .. } | ActionSchedule::GrowingWindow { k, .. } => *k,
        }
    }

    pub fn action_at(&self, i: usize) -> Result<usize> {
        match self {
            ActionSchedule::Cycle { k } => Ok(i % k),
            ActionSchedule::Explicit { actions, .. } => actions
                .get(i)
                .copied()
                .ok_or_else(|| CmcError::Config(format!("deterministic schedule undefined at time {i} (length {})", actions.len()))),
            ActionSchedule::GrowingWindow { horizon, block_starts, .. } => {
                if i > *horizon {
                    return Err(CmcError::Config(format!("growing-window schedule built up to time {horizon}, queried at {i}")));
                }
                let block = block_starts.partition_point(|&start| start <= i) - 1;
                let offset = i - block_starts[block];
                Ok(if offset < self.k() { offset } else { 0 })
            }
        }
    }
}

/// Wire form of a logging policy. Actions and states in JSON are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicySpec {
    StationaryMarkov {
        table: Vec<Vec<f64>>,
    },
    NonstationaryMarkov {
        tables: Vec<Vec<Vec<f64>>>,
        /// Number of consecutive steps each table is used for.
        #[serde(default = "one")]
        period: usize,
    },
    DeterministicCycle {
        k: usize,
    },
    DeterministicSequence {
        k: usize,
        actions: Vec<usize>,
    },
    GrowingWindow {
        k: usize,
        #[serde(rename = "windowConstant")]
        window_constant: f64,
        #[serde(rename = "windowExponent")]
        window_exponent: f64,
        horizon: usize,
    },
    Vanishing {
        beta: f64,
        target: [usize; 2],
        base: Vec<Vec<f64>>,
    },
    RepeatPrevious {
        k: usize,
        q: f64,
    },
    RepeatFirst {
        k: usize,
        q: f64,
    },
}

fn one() -> usize {
    1
}

/// A behaviour policy: maps `(i, X_i, history)` to a law over actions.
#[derive(Debug, Clone)]
pub enum LoggingPolicy {
    StationaryMarkov(ActionTable),
    /// `P^(i) = tables[(i / period) mod tables.len()]`.
    NonStationaryMarkov { tables: Vec<ActionTable>, period: usize },
    DeterministicSequence(ActionSchedule),
    HistoryDependent(Arc<dyn HistoryRule>),
    /// `P(a_i = l* | X_i = s*) = 1/(i+1)^β`; the remaining mass follows `base`.
    VanishingAction { base: ActionTable, target: (usize, usize), beta: f64 },
}

impl TryFrom<PolicySpec> for LoggingPolicy {
    type Error = CmcError;

    fn try_from(spec: PolicySpec) -> Result<Self> {
        let one_based = |a: usize, k: usize| {
            if a == 0 || a > k {
                Err(CmcError::Config(format!("action {a} outside 1..={k}")))
            } else {
                Ok(a - 1)
            }
        };
        match spec {
            PolicySpec::StationaryMarkov { table } => Ok(LoggingPolicy::StationaryMarkov(ActionTable::new(table)?)),
            PolicySpec::NonstationaryMarkov { tables, period } => {
                let tables = tables.into_iter().map(ActionTable::new).collect::<Result<Vec<_>>>()?;
                make_non_stationary_markov(tables, period)
            }
            PolicySpec::DeterministicCycle { k } => {
                if k == 0 {
                    return Err(CmcError::Config("k must be positive".into()));
                }
                Ok(LoggingPolicy::DeterministicSequence(ActionSchedule::Cycle { k }))
            }
            PolicySpec::DeterministicSequence { k, actions } => {
                let actions = actions.into_iter().map(|a| one_based(a, k)).collect::<Result<Vec<_>>>()?;
                Ok(LoggingPolicy::DeterministicSequence(ActionSchedule::Explicit { k, actions }))
            }
            PolicySpec::GrowingWindow { k, window_constant, window_exponent, horizon } => {
                make_growing_window(k, PolicyWindowSpec::new(window_constant, window_exponent)?, horizon)
            }
            PolicySpec::Vanishing { beta, target, base } => {
                let base = ActionTable::new(base)?;
                if target[0] == 0 || target[0] > base.d() {
                    return Err(CmcError::Config(format!("target state {} outside 1..={}", target[0], base.d())));
                }
                let l = one_based(target[1], base.k())?;
                make_vanishing(base, (target[0] - 1, l), beta)
            }
            PolicySpec::RepeatPrevious { k, q } => {
                check_rule(k, q)?;
                Ok(LoggingPolicy::HistoryDependent(Arc::new(RepeatPrevious { k, q })))
            }
            PolicySpec::RepeatFirst { k, q } => {
                check_rule(k, q)?;
                Ok(LoggingPolicy::HistoryDependent(Arc::new(RepeatFirst { k, q })))
            }
        }
    }
}

fn check_rule(k: usize, q: f64) -> Result<()> {
    if k == 0 {
        return Err(CmcError::Config("k must be positive".into()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(CmcError::Config(format!("repeat probability {q} outside [0,1]")));
    }
    Ok(())
}

impl Serialize for LoggingPolicy {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.spec()
            .ok_or_else(|| serde::ser::Error::custom("custom history rule has no wire form"))?
            .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LoggingPolicy {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let spec = PolicySpec::deserialize(deserializer)?;
        LoggingPolicy::try_from(spec).map_err(serde::de::Error::custom)
    }
}

impl LoggingPolicy {
    pub fn stationary(rows: Vec<Vec<f64>>) -> Result<Self> {
        Ok(LoggingPolicy::StationaryMarkov(ActionTable::new(rows)?))
    }

    pub fn uniform(d: usize, k: usize) -> Result<Self> {
        Ok(LoggingPolicy::StationaryMarkov(ActionTable::uniform(d, k)?))
    }

    /// Always plays action `l` (0-based).
    pub fn constant(d: usize, k: usize, l: usize) -> Result<Self> {
        if l >= k {
            return Err(CmcError::Config(format!("action {} outside 1..={k}", l + 1)));
        }
        let mut row = vec![0.0; k];
        row[l] = 1.0;
        Self::stationary(vec![row; d])
    }

    pub fn k(&self) -> usize {
        match self {
            LoggingPolicy::StationaryMarkov(t) => t.k(),
            LoggingPolicy::NonStationaryMarkov { tables, .. } => tables[0].k(),
            LoggingPolicy::DeterministicSequence(s) => s.k(),
            LoggingPolicy::HistoryDependent(rule) => rule.k(),
            LoggingPolicy::VanishingAction { base, .. } => base.k(),
        }
    }

    /// State count the policy was built for, when it fixes one.
    pub fn d(&self) -> Option<usize> {
        match self {
            LoggingPolicy::StationaryMarkov(t) => Some(t.d()),
            LoggingPolicy::NonStationaryMarkov { tables, .. } => Some(tables[0].d()),
            LoggingPolicy::VanishingAction { base, .. } => Some(base.d()),
            _ => None,
        }
    }

    /// True when the action law depends only on `(i, X_i)`.
    pub fn is_markov(&self) -> bool {
        !matches!(self, LoggingPolicy::HistoryDependent(_))
    }

    pub fn spec(&self) -> Option<PolicySpec> {
        Some(match self {
            LoggingPolicy::StationaryMarkov(t) => PolicySpec::StationaryMarkov { table: t.rows() },
            LoggingPolicy::NonStationaryMarkov { tables, period } => {
                PolicySpec::NonstationaryMarkov { tables: tables.iter().map(|t| t.rows()).collect(), period: *period }
            }
            LoggingPolicy::DeterministicSequence(ActionSchedule::Cycle { k }) => PolicySpec::DeterministicCycle { k: *k },
            LoggingPolicy::DeterministicSequence(ActionSchedule::Explicit { k, actions }) => {
                PolicySpec::DeterministicSequence { k: *k, actions: actions.iter().map(|a| a + 1).collect() }
            }
            LoggingPolicy::DeterministicSequence(ActionSchedule::GrowingWindow { k, window, horizon, .. }) => {
                PolicySpec::GrowingWindow {
                    k: *k,
                    window_constant: window.window_constant,
                    window_exponent: window.window_exponent,
                    horizon: *horizon,
                }
            }
            LoggingPolicy::HistoryDependent(rule) => return rule.spec(),
            LoggingPolicy::VanishingAction { base, target, beta } => {
                PolicySpec::Vanishing { beta: *beta, target: [target.0 + 1, target.1 + 1], base: base.rows() }
            }
        })
    }

    /// Checks that the policy can be paired with a `d`-state, `k`-action model.
    pub fn check_dimensions(&self, d: usize, k: usize) -> Result<()> {
        if self.k() != k {
            return Err(CmcError::Config(format!("policy has {} actions, model has {k}", self.k())));
        }
        if let Some(pd) = self.d() {
            if pd != d {
                return Err(CmcError::Config(format!("policy table has {pd} states, model has {d}")));
            }
        }
        Ok(())
    }

    /// Writes the action law for time `i`, state `s` into `out` (length `k`).
    pub fn fill_distribution(&self, i: usize, s: usize, history: History<'_>, out: &mut [f64]) -> Result<()> {
        match self {
            LoggingPolicy::StationaryMarkov(t) => out.copy_from_slice(t.row(s)),
            LoggingPolicy::NonStationaryMarkov { tables, period } => {
                out.copy_from_slice(tables[(i / period) % tables.len()].row(s));
            }
            LoggingPolicy::DeterministicSequence(schedule) => {
                let a = schedule.action_at(i)?;
                out.fill(0.0);
                out[a] = 1.0;
            }
            LoggingPolicy::HistoryDependent(rule) => rule.fill(i, s, history, out),
            LoggingPolicy::VanishingAction { base, target, beta } => {
                let row = base.row(s);
                if s != target.0 {
                    out.copy_from_slice(row);
                } else {
                    vanishing_row(row, target.1, *beta, i, out);
                }
            }
        }
        Ok(())
    }

    pub fn action_distribution(&self, i: usize, s: usize, history: History<'_>) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.k()];
        self.fill_distribution(i, s, history, &mut out)?;
        Ok(out)
    }
}

fn vanishing_row(base: &[f64], target: usize, beta: f64, i: usize, out: &mut [f64]) {
    let v = (i as f64 + 1.0).powf(-beta);
    let rest: f64 = base.iter().enumerate().filter(|&(l, _)| l != target).map(|(_, p)| p).sum();
    let others = (base.len() - 1) as f64;
    for (l, o) in out.iter_mut().enumerate() {
        *o = if l == target {
            v
        } else if rest > 0.0 {
            (1.0 - v) * base[l] / rest
        } else {
            (1.0 - v) / others
        };
    }
}

/// Deterministic `k`-cycle. Every window of length at least `k` holds all
/// actions, and the windows `T_i` reach `k` eventually, so cycling is used
/// for small `i` as well.
pub fn make_cyclic_inhomogeneous(_d: usize, k: usize, _spec: PolicyWindowSpec) -> Result<LoggingPolicy> {
    if k == 0 {
        return Err(CmcError::Config("k must be positive".into()));
    }
    Ok(LoggingPolicy::DeterministicSequence(ActionSchedule::Cycle { k }))
}

/// Deterministic sequence whose exploration windows grow like `c·m^α`,
/// defined for times `0..=horizon`.
pub fn make_growing_window(k: usize, window: PolicyWindowSpec, horizon: usize) -> Result<LoggingPolicy> {
    if k == 0 {
        return Err(CmcError::Config("k must be positive".into()));
    }
    let mut block_starts = vec![0usize];
    let mut end = 0usize;
    let mut m = 1usize;
    while end <= horizon {
        end += window.window(m).max(k);
        block_starts.push(end);
        m += 1;
    }
    Ok(LoggingPolicy::DeterministicSequence(ActionSchedule::GrowingWindow { k, window, horizon, block_starts }))
}

/// Periodic schedule of action tables, each held for `period` steps.
pub fn make_non_stationary_markov(tables: Vec<ActionTable>, period: usize) -> Result<LoggingPolicy> {
    let first = tables.first().ok_or_else(|| CmcError::Config("schedule needs at least one table".into()))?;
    if period == 0 {
        return Err(CmcError::Config("period must be positive".into()));
    }
    let (d, k) = (first.d(), first.k());
    if tables.iter().any(|t| t.d() != d || t.k() != k) {
        return Err(CmcError::Config("all scheduled tables must share a shape".into()));
    }
    Ok(LoggingPolicy::NonStationaryMarkov { tables, period })
}

pub fn make_vanishing(base: ActionTable, target: (usize, usize), beta: f64) -> Result<LoggingPolicy> {
    if base.k() < 2 {
        return Err(CmcError::Config("a vanishing action needs k ≥ 2".into()));
    }
    if target.0 >= base.d() || target.1 >= base.k() {
        return Err(CmcError::Config("vanishing target outside the table".into()));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(CmcError::Config(format!("decay exponent {beta} must be positive")));
    }
    Ok(LoggingPolicy::VanishingAction { base, target, beta })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stationary_lookup() {
        let p = LoggingPolicy::stationary(vec![vec![0.3, 0.7]]).unwrap();
        for i in [0, 5, 100] {
            assert_eq!(p.action_distribution(i, 0, History::empty()).unwrap(), vec![0.3, 0.7]);
        }
    }

    #[test]
    fn cycle_point_mass() {
        let p: LoggingPolicy = serde_json::from_str(r#"{"kind":"deterministic_cycle","k":2}"#).unwrap();
        assert_eq!(p.action_distribution(3, 0, History::empty()).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn vanishing_at_time_four() {
        let p: LoggingPolicy =
            serde_json::from_str(r#"{"kind":"vanishing","beta":2,"target":[1,2],"base":[[0.2,0.3,0.5],[0.3,0.3,0.4]]}"#).unwrap();
        let dist = p.action_distribution(4, 0, History::empty()).unwrap();
        assert!((dist[1] - 1.0 / 25.0).abs() < 1e-15);
        let rest = 1.0 - 1.0 / 25.0;
        assert!((dist[0] - rest * 0.2 / 0.7).abs() < 1e-15);
        assert!((dist[2] - rest * 0.5 / 0.7).abs() < 1e-15);
        assert_eq!(p.action_distribution(4, 1, History::empty()).unwrap(), vec![0.3, 0.3, 0.4]);
    }

    #[test]
    fn cyclic_windows_contain_every_action() {
        let p = make_cyclic_inhomogeneous(2, 3, PolicyWindowSpec::new(4.0, 0.5).unwrap()).unwrap();
        let seq: Vec<usize> = (0..10_000)
            .map(|i| {
                let dist = p.action_distribution(i, 0, History::empty()).unwrap();
                dist.iter().position(|&x| x == 1.0).unwrap()
            })
            .collect();
        for w in seq.windows(3) {
            let mut seen = [false; 3];
            w.iter().for_each(|&a| seen[a] = true);
            assert!(seen.iter().all(|&x| x));
        }
        let k1 = make_cyclic_inhomogeneous(1, 1, PolicyWindowSpec::new(4.0, 0.5).unwrap()).unwrap();
        assert_eq!(k1.action_distribution(7, 0, History::empty()).unwrap(), vec![1.0]);
    }

    #[test]
    fn growing_window_blocks() {
        let p = make_growing_window(2, PolicyWindowSpec::new(2.0, 0.5).unwrap(), 100).unwrap();
        let LoggingPolicy::DeterministicSequence(schedule) = &p else { panic!() };
        // block lengths max(2, ceil(2 sqrt(m))): 2, 3, 4, 4, 5
        let seq: Vec<usize> = (0..18).map(|i| schedule.action_at(i).unwrap()).collect();
        assert_eq!(seq, vec![0, 1, 0, 1, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0]);
        assert!(matches!(schedule.action_at(101), Err(CmcError::Config(_))));
    }

    #[test]
    fn explicit_schedule_past_end_is_config_error() {
        let p: LoggingPolicy = serde_json::from_str(r#"{"kind":"deterministic_sequence","k":2,"actions":[1,2]}"#).unwrap();
        assert!(p.action_distribution(1, 0, History::empty()).is_ok());
        assert!(matches!(p.action_distribution(2, 0, History::empty()), Err(CmcError::Config(_))));
    }

    #[test]
    fn non_stationary_alternates() {
        let p: LoggingPolicy = serde_json::from_str(
            r#"{"kind":"nonstationary_markov","tables":[[[1,0],[0,1]],[[0,1],[1,0]]],"period":1}"#,
        )
        .unwrap();
        assert_eq!(p.action_distribution(0, 0, History::empty()).unwrap(), vec![1.0, 0.0]);
        assert_eq!(p.action_distribution(1, 0, History::empty()).unwrap(), vec![0.0, 1.0]);
        assert_eq!(p.action_distribution(2, 1, History::empty()).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn repeat_rules() {
        let states = [0, 1, 0];
        let actions = [1, 0, 0];
        let h = History::new(&states, &actions);
        let prev = RepeatPrevious { k: 2, q: 0.6 };
        let first = RepeatFirst { k: 2, q: 0.6 };
        let mut out = [0.0; 2];
        prev.fill(3, 0, h, &mut out);
        assert!((out[0] - 0.8).abs() < 1e-15 && (out[1] - 0.2).abs() < 1e-15);
        first.fill(3, 0, h, &mut out);
        assert!((out[1] - 0.8).abs() < 1e-15);
        prev.fill(0, 0, History::empty(), &mut out);
        assert_eq!(out, [0.5, 0.5]);
    }

    #[test]
    fn invalid_specs_are_config_errors() {
        let bad = [
            r#"{"kind":"stationary_markov","table":[[0.3,0.6]]}"#,
            r#"{"kind":"vanishing","beta":2,"target":[3,1],"base":[[0.5,0.5]]}"#,
            r#"{"kind":"nonstationary_markov","tables":[],"period":1}"#,
            r#"{"kind":"repeat_previous","k":2,"q":1.5}"#,
        ];
        for json in bad {
            assert!(serde_json::from_str::<LoggingPolicy>(json).is_err(), "{json}");
        }
    }

    #[test]
    fn spec_round_trip() {
        let json = r#"{"kind":"vanishing","beta":2.0,"target":[1,2],"base":[[0.5,0.5]]}"#;
        let p: LoggingPolicy = serde_json::from_str(json).unwrap();
        assert_eq!(serde_json::to_string(&p).unwrap(), json);
    }
}
