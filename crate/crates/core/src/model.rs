//! Model objects shared by every other module: the controlled kernel
//! family, the flat index conventions, target policies and rewards.
//!
//! Indices exposed through [`IndexMap::triple`] and [`IndexMap::pair`] are
//! 1-based (states `1..=d`, actions `1..=k`). Everything stored inside the
//! crate is 0-based; the `*0` helpers do the arithmetic without range checks.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, CmcError, Result};

/// Row-sum tolerance applied when a model is constructed.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Row-sum tolerance applied to matrices produced by arithmetic.
pub const ARITH_TOL: f64 = 1e-10;

/// Flattening conventions for `(s, l, t)` triples and `(s, l)` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexMap {
    pub d: usize,
    pub k: usize,
}

impl IndexMap {
    pub fn new(d: usize, k: usize) -> Result<Self> {
        if d == 0 || k == 0 {
            return Err(invalid(format!("d and k must be positive (d={d}, k={k})")));
        }
        Ok(IndexMap { d, k })
    }

    pub fn pair_count(&self) -> usize {
        self.d * self.k
    }

    pub fn triple_count(&self) -> usize {
        self.d * self.d * self.k
    }

    fn check(&self, what: &str, v: usize, hi: usize) -> Result<()> {
        if v == 0 || v > hi {
            return Err(CmcError::Range(format!("{what}={v} outside 1..={hi}")));
        }
        Ok(())
    }

    /// `(s-1)·d·k + (l-1)·d + t`, all 1-based.
    pub fn triple(&self, s: usize, l: usize, t: usize) -> Result<usize> {
        self.check("s", s, self.d)?;
        self.check("l", l, self.k)?;
        self.check("t", t, self.d)?;
        Ok(self.triple0(s - 1, l - 1, t - 1) + 1)
    }

    pub fn triple_inverse(&self, index: usize) -> Result<(usize, usize, usize)> {
        self.check("index", index, self.triple_count())?;
        let (s, l, t) = self.triple0_inverse(index - 1);
        Ok((s + 1, l + 1, t + 1))
    }

    /// `(s-1)·k + l`, 1-based.
    pub fn pair(&self, s: usize, l: usize) -> Result<usize> {
        self.check("s", s, self.d)?;
        self.check("l", l, self.k)?;
        Ok(self.pair0(s - 1, l - 1) + 1)
    }

    pub fn pair_inverse(&self, index: usize) -> Result<(usize, usize)> {
        self.check("index", index, self.pair_count())?;
        let (s, l) = self.pair0_inverse(index - 1);
        Ok((s + 1, l + 1))
    }

    #[inline]
    pub fn triple0(&self, s: usize, l: usize, t: usize) -> usize {
        (s * self.k + l) * self.d + t
    }

    #[inline]
    pub fn triple0_inverse(&self, index: usize) -> (usize, usize, usize) {
        let t = index % self.d;
        let pair = index / self.d;
        (pair / self.k, pair % self.k, t)
    }

    #[inline]
    pub fn pair0(&self, s: usize, l: usize) -> usize {
        s * self.k + l
    }

    #[inline]
    pub fn pair0_inverse(&self, index: usize) -> (usize, usize) {
        (index / self.k, index % self.k)
    }
}

/// Wire form of a transition model: `{"d":..,"k":..,"kernel":[l][s][t]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub d: usize,
    pub k: usize,
    pub kernel: Vec<Vec<Vec<f64>>>,
}

/// A single invariant violation found by [`validate_model`]. Indices are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    EmptyDimension { d: usize, k: usize },
    Shape { message: String },
    NonFinite { l: usize, s: usize, t: usize },
    NegativeEntry { l: usize, s: usize, t: usize, value: f64 },
    EntryAboveOne { l: usize, s: usize, t: usize, value: f64 },
    RowSum { l: usize, s: usize, sum: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyDimension { d, k } => write!(f, "empty dimension (d={d}, k={k})"),
            Violation::Shape { message } => write!(f, "shape mismatch: {message}"),
            Violation::NonFinite { l, s, t } => {
                write!(f, "non-finite entry at (l={l},s={s},t={t})")
            }
            Violation::NegativeEntry { l, s, t, value } => {
                write!(f, "negative entry {value} at (l={l},s={s},t={t})")
            }
            Violation::EntryAboveOne { l, s, t, value } => {
                write!(f, "entry {value} above one at (l={l},s={s},t={t})")
            }
            Violation::RowSum { l, s, sum } => write!(f, "row sum {sum} at (l={l},s={s})"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msgs: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", msgs.join("; "))
    }
}

/// Checks every `TransitionModel` invariant on a raw spec.
pub fn validate_model(spec: &ModelSpec) -> ValidationReport {
    let mut violations = Vec::new();
    if spec.d == 0 || spec.k == 0 {
        violations.push(Violation::EmptyDimension { d: spec.d, k: spec.k });
        return ValidationReport { violations };
    }
    if spec.kernel.len() != spec.k {
        violations.push(Violation::Shape {
            message: format!("kernel has {} action blocks, expected k={}", spec.kernel.len(), spec.k),
        });
        return ValidationReport { violations };
    }
    for (l, block) in spec.kernel.iter().enumerate() {
        if block.len() != spec.d {
            violations.push(Violation::Shape {
                message: format!("action {} has {} rows, expected d={}", l + 1, block.len(), spec.d),
            });
            continue;
        }
        for (s, row) in block.iter().enumerate() {
            if row.len() != spec.d {
                violations.push(Violation::Shape {
                    message: format!(
                        "row (l={},s={}) has {} entries, expected d={}",
                        l + 1,
                        s + 1,
                        row.len(),
                        spec.d
                    ),
                });
                continue;
            }
            let (l1, s1) = (l + 1, s + 1);
            let mut finite = true;
            for (t, &value) in row.iter().enumerate() {
                let t1 = t + 1;
                if !value.is_finite() {
                    finite = false;
                    violations.push(Violation::NonFinite { l: l1, s: s1, t: t1 });
                } else if value < 0.0 {
                    violations.push(Violation::NegativeEntry { l: l1, s: s1, t: t1, value });
                } else if value > 1.0 {
                    violations.push(Violation::EntryAboveOne { l: l1, s: s1, t: t1, value });
                }
            }
            if finite {
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    violations.push(Violation::RowSum { l: l1, s: s1, sum });
                }
            }
        }
    }
    ValidationReport { violations }
}

/// The kernel family `{M^(l)}`: `d` states, `k` actions, each `M^(l)`
/// row-stochastic. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelSpec", into = "ModelSpec")]
pub struct TransitionModel {
    map: IndexMap,
    // flat [l][s][t]
    kernel: Vec<f64>,
}

impl TryFrom<ModelSpec> for TransitionModel {
    type Error = CmcError;

    fn try_from(spec: ModelSpec) -> Result<Self> {
        let report = validate_model(&spec);
        if !report.is_valid() {
            return Err(invalid(format!("transition model: {report}")));
        }
        let map = IndexMap::new(spec.d, spec.k)?;
        let kernel = spec.kernel.into_iter().flatten().flatten().collect();
        Ok(TransitionModel { map, kernel })
    }
}

impl From<TransitionModel> for ModelSpec {
    fn from(model: TransitionModel) -> Self {
        ModelSpec { d: model.d(), k: model.k(), kernel: model.kernel_nested() }
    }
}

impl TransitionModel {
    /// Builds a model from a nested `[l][s][t]` array, validating it.
    pub fn new(d: usize, k: usize, kernel: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        ModelSpec { d, k, kernel }.try_into()
    }

    /// Model with a single action.
    pub fn single_action(rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = rows.len();
        Self::new(d, 1, vec![rows])
    }

    pub fn d(&self) -> usize {
        self.map.d
    }

    pub fn k(&self) -> usize {
        self.map.k
    }

    pub fn index_map(&self) -> IndexMap {
        self.map
    }

    /// `M_{s,t}^(l)` with 0-based indices.
    #[inline]
    pub fn prob(&self, l: usize, s: usize, t: usize) -> f64 {
        let d = self.map.d;
        self.kernel[(l * d + s) * d + t]
    }

    /// Row `M_{s,·}^(l)` with 0-based indices.
    #[inline]
    pub fn row(&self, l: usize, s: usize) -> &[f64] {
        let d = self.map.d;
        let start = (l * d + s) * d;
        &self.kernel[start..start + d]
    }

    pub fn kernel_nested(&self) -> Vec<Vec<Vec<f64>>> {
        let d = self.d();
        (0..self.k())
            .map(|l| (0..d).map(|s| self.row(l, s).to_vec()).collect())
            .collect()
    }

    pub fn min_entry(&self) -> f64 {
        self.kernel.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_entry(&self) -> f64 {
        self.kernel.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Number of strictly positive entries in row `(s, l)`, 0-based.
    pub fn support_size(&self, l: usize, s: usize) -> usize {
        self.row(l, s).iter().filter(|&&p| p > 0.0).count()
    }
}

/// Stationary target policy `π(s, l)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TargetPolicySpec", into = "TargetPolicySpec")]
pub struct TargetPolicy {
    d: usize,
    k: usize,
    // flat [s][l]
    pi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetPolicySpec {
    pub pi: Vec<Vec<f64>>,
}

impl TryFrom<TargetPolicySpec> for TargetPolicy {
    type Error = CmcError;

    fn try_from(spec: TargetPolicySpec) -> Result<Self> {
        TargetPolicy::new(spec.pi)
    }
}

impl From<TargetPolicy> for TargetPolicySpec {
    fn from(p: TargetPolicy) -> Self {
        TargetPolicySpec { pi: p.rows() }
    }
}

/// Checks that `row` is a probability vector within `tol`.
pub(crate) fn check_simplex(row: &[f64], tol: f64) -> std::result::Result<(), String> {
    if row.is_empty() {
        return Err("empty distribution".into());
    }
    for &p in row {
        if !p.is_finite() || !(0.0..=1.0).contains(&p) {
            return Err(format!("entry {p} outside [0,1]"));
        }
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(format!("sum {sum} differs from 1"));
    }
    Ok(())
}

impl TargetPolicy {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = rows.len();
        let k = rows.first().map(|r| r.len()).unwrap_or(0);
        IndexMap::new(d, k)?;
        for (s, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(invalid(format!("target policy row {} has {} entries, expected {k}", s + 1, row.len())));
            }
            check_simplex(row, ROW_SUM_TOL).map_err(|e| invalid(format!("target policy row {}: {e}", s + 1)))?;
        }
        Ok(TargetPolicy { d, k, pi: rows.into_iter().flatten().collect() })
    }

    /// Point-mass policy choosing `actions[s]` (0-based) in state `s`.
    pub fn deterministic(k: usize, actions: &[usize]) -> Result<Self> {
        let rows = actions
            .iter()
            .map(|&a| {
                if a >= k {
                    return Err(CmcError::Range(format!("action {} outside 1..={k}", a + 1)));
                }
                let mut row = vec![0.0; k];
                row[a] = 1.0;
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
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
    pub fn prob(&self, s: usize, l: usize) -> f64 {
        self.pi[s * self.k + l]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.pi[s * self.k..(s + 1) * self.k]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.d).map(|s| self.row(s).to_vec()).collect()
    }

    /// 0-based actions when every row is a point mass.
    pub fn deterministic_actions(&self) -> Option<Vec<usize>> {
        (0..self.d)
            .map(|s| self.row(s).iter().position(|&p| p == 1.0))
            .collect()
    }
}

/// `Π = diag(π_1, …, π_d)`, shape `d × dk`.
pub fn block_diagonal(policy: &TargetPolicy) -> DMatrix<f64> {
    let (d, k) = (policy.d(), policy.k());
    let mut m = DMatrix::zeros(d, d * k);
    for s in 0..d {
        for l in 0..k {
            m[(s, s * k + l)] = policy.prob(s, l);
        }
    }
    m
}

/// Stacked kernel `𝐌`, shape `dk × d`, row `(s-1)k + l` holding `M_{s,·}^(l)`.
pub fn stack_kernel(model: &TransitionModel) -> DMatrix<f64> {
    let (d, k) = (model.d(), model.k());
    let map = model.index_map();
    let mut m = DMatrix::zeros(d * k, d);
    for s in 0..d {
        for l in 0..k {
            for (t, &p) in model.row(l, s).iter().enumerate() {
                m[(map.pair0(s, l), t)] = p;
            }
        }
    }
    m
}

/// `K = diag(1_k, …, 1_k)`, shape `dk × d`.
pub fn expansion_matrix(d: usize, k: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(d * k, d);
    for s in 0..d {
        for l in 0..k {
            m[(s * k + l, s)] = 1.0;
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct RewardSpec {
    g_tilde: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r_tilde: Option<Vec<Vec<Vec<f64>>>>,
    discount: f64,
}

/// Per-state-action rewards `g̃(x,a)`, transition rewards `r̃(x,a,y)` and
/// the discount factor. A missing `rTilde` in JSON is read as all zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RewardSpec", into = "RewardSpec")]
pub struct RewardModel {
    d: usize,
    k: usize,
    g_tilde: Vec<f64>,
    r_tilde: Vec<f64>,
    discount: f64,
}

impl TryFrom<RewardSpec> for RewardModel {
    type Error = CmcError;

    fn try_from(spec: RewardSpec) -> Result<Self> {
        let d = spec.g_tilde.len();
        let k = spec.g_tilde.first().map(|r| r.len()).unwrap_or(0);
        let r_tilde = spec.r_tilde.unwrap_or_else(|| vec![vec![vec![0.0; d]; k]; d]);
        RewardModel::new(spec.g_tilde, r_tilde, spec.discount)
    }
}

impl From<RewardModel> for RewardSpec {
    fn from(r: RewardModel) -> Self {
        let (d, k) = (r.d, r.k);
        RewardSpec {
            g_tilde: (0..d).map(|s| (0..k).map(|l| r.g_tilde(s, l)).collect()).collect(),
            r_tilde: Some(
                (0..d)
                    .map(|s| (0..k).map(|l| (0..d).map(|t| r.r_tilde(s, l, t)).collect()).collect())
                    .collect(),
            ),
            discount: r.discount,
        }
    }
}

impl RewardModel {
    pub fn new(g_tilde: Vec<Vec<f64>>, r_tilde: Vec<Vec<Vec<f64>>>, discount: f64) -> Result<Self> {
        let d = g_tilde.len();
        let k = g_tilde.first().map(|r| r.len()).unwrap_or(0);
        IndexMap::new(d, k)?;
        if !(discount > 0.0 && discount < 1.0) {
            return Err(CmcError::Domain(format!("discount {discount} outside (0,1)")));
        }
        if g_tilde.iter().any(|r| r.len() != k) {
            return Err(invalid("gTilde rows must all have k entries"));
        }
        if r_tilde.len() != d || r_tilde.iter().any(|b| b.len() != k || b.iter().any(|r| r.len() != d)) {
            return Err(invalid(format!("rTilde must have shape [{d}][{k}][{d}]")));
        }
        let g: Vec<f64> = g_tilde.into_iter().flatten().collect();
        let r: Vec<f64> = r_tilde.into_iter().flatten().flatten().collect();
        if g.iter().chain(r.iter()).any(|x| !x.is_finite()) {
            return Err(invalid("rewards must be finite"));
        }
        Ok(RewardModel { d, k, g_tilde: g, r_tilde: r, discount })
    }

    /// Rewards depending only on `(x, a)`; `r̃(x,a,y) = g̃(x,a)` for all `y`.
    pub fn state_action(g_tilde: Vec<Vec<f64>>, discount: f64) -> Result<Self> {
        let d = g_tilde.len();
        let r = g_tilde.iter().map(|row| row.iter().map(|&g| vec![g; d]).collect()).collect();
        Self::new(g_tilde, r, discount)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    #[inline]
    pub fn g_tilde(&self, s: usize, l: usize) -> f64 {
        self.g_tilde[s * self.k + l]
    }

    #[inline]
    pub fn r_tilde(&self, s: usize, l: usize, t: usize) -> f64 {
        self.r_tilde[(s * self.k + l) * self.d + t]
    }

    /// Same rewards under a different discount.
    pub fn with_discount(&self, discount: f64) -> Result<Self> {
        if !(discount > 0.0 && discount < 1.0) {
            return Err(CmcError::Domain(format!("discount {discount} outside (0,1)")));
        }
        Ok(RewardModel { discount, ..self.clone() })
    }

    /// `a·reward + b` applied to both `g̃` and `r̃`.
    pub fn affine(&self, a: f64, b: f64) -> Self {
        RewardModel {
            g_tilde: self.g_tilde.iter().map(|x| a * x + b).collect(),
            r_tilde: self.r_tilde.iter().map(|x| a * x + b).collect(),
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_two_state_model_has_empty_report() {
        let spec = ModelSpec { d: 2, k: 1, kernel: vec![vec![vec![0.5, 0.5], vec![0.3, 0.7]]] };
        assert!(validate_model(&spec).is_valid());
    }

    #[test]
    fn row_sum_violation_names_the_row() {
        let spec = ModelSpec { d: 2, k: 1, kernel: vec![vec![vec![0.5, 0.6], vec![0.3, 0.7]]] };
        let report = validate_model(&spec);
        assert_eq!(report.violations.len(), 1);
        let msg = report.violations[0].to_string();
        assert!(msg.contains("row sum 1.1 at (l=1,s=1)"), "{msg}");
    }

    #[test]
    fn negative_entry_is_reported() {
        let spec = ModelSpec { d: 2, k: 1, kernel: vec![vec![vec![-0.1, 1.1], vec![0.3, 0.7]]] };
        let report = validate_model(&spec);
        assert!(report.violations.iter().any(|v| v.to_string().starts_with("negative entry")));
    }

    #[test]
    fn shape_and_dimension_violations() {
        let spec = ModelSpec { d: 0, k: 1, kernel: vec![] };
        assert!(matches!(validate_model(&spec).violations[0], Violation::EmptyDimension { .. }));
        let spec = ModelSpec { d: 2, k: 2, kernel: vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]]] };
        assert!(matches!(validate_model(&spec).violations[0], Violation::Shape { .. }));
        assert!(TransitionModel::try_from(spec).is_err());
    }

    #[test]
    fn triple_index_examples() {
        let map = IndexMap::new(2, 2).unwrap();
        assert_eq!(map.triple(1, 1, 1).unwrap(), 1);
        assert_eq!(map.triple(2, 2, 2).unwrap(), 8);
        assert_eq!(map.triple(1, 2, 1).unwrap(), 3);
        assert!(matches!(map.triple(3, 1, 1), Err(CmcError::Range(_))));
        assert!(matches!(map.triple(1, 0, 1), Err(CmcError::Range(_))));
    }

    #[test]
    fn triple_and_pair_round_trip_exhaustively() {
        for d in 1..=6 {
            for k in 1..=6 {
                let map = IndexMap::new(d, k).unwrap();
                let mut seen = vec![false; map.triple_count()];
                for s in 1..=d {
                    for l in 1..=k {
                        for t in 1..=d {
                            let idx = map.triple(s, l, t).unwrap();
                            assert_eq!(idx, (s - 1) * d * k + (l - 1) * d + t);
                            assert_eq!(map.triple_inverse(idx).unwrap(), (s, l, t));
                            assert!(!seen[idx - 1]);
                            seen[idx - 1] = true;
                        }
                        let p = map.pair(s, l).unwrap();
                        assert_eq!(p, (s - 1) * k + l);
                        assert_eq!(map.pair_inverse(p).unwrap(), (s, l));
                    }
                }
                assert!(seen.into_iter().all(|x| x));
            }
        }
    }

    #[test]
    fn block_diagonal_examples() {
        let p = TargetPolicy::new(vec![vec![0.4, 0.6]]).unwrap();
        assert_eq!(block_diagonal(&p), DMatrix::from_row_slice(1, 2, &[0.4, 0.6]));

        let p = TargetPolicy::new(vec![vec![1.0], vec![1.0]]).unwrap();
        assert_eq!(block_diagonal(&p), DMatrix::identity(2, 2));

        let p = TargetPolicy::new(vec![vec![0.5, 0.5], vec![0.2, 0.8]]).unwrap();
        let expected = DMatrix::from_row_slice(2, 4, &[0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.2, 0.8]);
        assert_eq!(block_diagonal(&p), expected);
    }

    #[test]
    fn stack_kernel_orders_rows_by_pair_index() {
        let m = TransitionModel::single_action(vec![vec![1.0]]).unwrap();
        assert_eq!(stack_kernel(&m), DMatrix::from_element(1, 1, 1.0));

        let m = TransitionModel::single_action(vec![vec![0.3, 0.7], vec![0.9, 0.1]]).unwrap();
        assert_eq!(stack_kernel(&m), DMatrix::from_row_slice(2, 2, &[0.3, 0.7, 0.9, 0.1]));

        let (a, b, c, e) = ([0.1, 0.9], [0.2, 0.8], [0.3, 0.7], [0.4, 0.6]);
        let m = TransitionModel::new(2, 2, vec![vec![a.to_vec(), b.to_vec()], vec![c.to_vec(), e.to_vec()]]).unwrap();
        let stacked = stack_kernel(&m);
        let rows: Vec<Vec<f64>> = (0..4).map(|r| stacked.row(r).iter().copied().collect()).collect();
        assert_eq!(rows, vec![a.to_vec(), c.to_vec(), b.to_vec(), e.to_vec()]);
    }

    #[test]
    fn model_json_round_trip_and_rejects_invalid() {
        let json = r#"{"d":2,"k":1,"kernel":[[[0.5,0.5],[0.3,0.7]]]}"#;
        let m: TransitionModel = serde_json::from_str(json).unwrap();
        assert_eq!(m.prob(0, 1, 1), 0.7);
        let back = serde_json::to_string(&m).unwrap();
        assert_eq!(back, json);
        assert!(serde_json::from_str::<TransitionModel>(r#"{"d":2,"k":1,"kernel":[[[0.5,0.6],[0.3,0.7]]]}"#).is_err());
    }

    #[test]
    fn reward_json_defaults_and_domain() {
        let r: RewardModel = serde_json::from_str(r#"{"gTilde":[[1,0]],"discount":0.9}"#).unwrap();
        assert_eq!(r.r_tilde(0, 1, 0), 0.0);
        assert!(serde_json::from_str::<RewardModel>(r#"{"gTilde":[[1,0]],"discount":1.0}"#).is_err());
        assert!(serde_json::from_str::<RewardModel>(r#"{"gTilde":[[1,0]],"discount":0.0}"#).is_err());
    }

    #[test]
    fn target_policy_json_and_validation() {
        let p: TargetPolicy = serde_json::from_str(r#"{"pi":[[0.25,0.75]]}"#).unwrap();
        assert_eq!(p.prob(0, 1), 0.75);
        assert!(serde_json::from_str::<TargetPolicy>(r#"{"pi":[[0.25,0.7]]}"#).is_err());
        assert_eq!(TargetPolicy::deterministic(2, &[1, 0]).unwrap().deterministic_actions(), Some(vec![1, 0]));
    }
}
