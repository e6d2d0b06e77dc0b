//! Sufficient statistics, the count estimator of the kernel and the CLT
//! covariance matrices.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{CmcError, Result};
use crate::model::{IndexMap, TransitionModel};
use crate::policy::ActionTable;
use crate::simulate::Trajectory;

/// `N_s^(l)` and `N_{s,t}^(l)` over times `0..n-1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counts {
    map: IndexMap,
    // flat [s][l]
    n_visits: Vec<u64>,
    // flat [s][l][t]
    n_transitions: Vec<u64>,
    horizon: usize,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CountsWire {
    n_visits: Vec<Vec<u64>>,
    n_transitions: Vec<Vec<Vec<u64>>>,
    horizon: usize,
}

impl Serialize for Counts {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        CountsWire { n_visits: self.visits_table(), n_transitions: self.transitions_table(), horizon: self.horizon }
            .serialize(serializer)
    }
}

impl Counts {
    pub fn zeros(d: usize, k: usize) -> Result<Self> {
        let map = IndexMap::new(d, k)?;
        Ok(Counts { map, n_visits: vec![0; d * k], n_transitions: vec![0; d * d * k], horizon: 0 })
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

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `N_s^(l)`, 0-based.
    #[inline]
    pub fn visits(&self, s: usize, l: usize) -> u64 {
        self.n_visits[self.map.pair0(s, l)]
    }

    /// `N_{s,t}^(l)`, 0-based.
    #[inline]
    pub fn transitions(&self, s: usize, l: usize, t: usize) -> u64 {
        self.n_transitions[self.map.triple0(s, l, t)]
    }

    pub fn transition_row(&self, s: usize, l: usize) -> &[u64] {
        let start = self.map.triple0(s, l, 0);
        &self.n_transitions[start..start + self.map.d]
    }

    pub fn add(&mut self, s: usize, l: usize, t: usize) {
        self.n_visits[self.map.pair0(s, l)] += 1;
        self.n_transitions[self.map.triple0(s, l, t)] += 1;
        self.horizon += 1;
    }

    /// Builds counts from raw tables, checking both invariants.
    pub fn from_transitions(d: usize, k: usize, rows: &[Vec<Vec<u64>>]) -> Result<Self> {
        let mut counts = Counts::zeros(d, k)?;
        if rows.len() != d || rows.iter().any(|b| b.len() != k || b.iter().any(|r| r.len() != d)) {
            return Err(CmcError::InvalidInput(format!("transition counts must have shape [{d}][{k}][{d}]")));
        }
        for s in 0..d {
            for l in 0..k {
                for t in 0..d {
                    let c = rows[s][l][t];
                    counts.n_transitions[counts.map.triple0(s, l, t)] = c;
                    counts.n_visits[counts.map.pair0(s, l)] += c;
                    counts.horizon += c as usize;
                }
            }
        }
        Ok(counts)
    }

    /// Counts restricted to pairs; `[s][l]`.
    pub fn visits_table(&self) -> Vec<Vec<u64>> {
        (0..self.d()).map(|s| (0..self.k()).map(|l| self.visits(s, l)).collect()).collect()
    }

    pub fn transitions_table(&self) -> Vec<Vec<Vec<u64>>> {
        (0..self.d())
            .map(|s| (0..self.k()).map(|l| self.transition_row(s, l).to_vec()).collect())
            .collect()
    }
}

/// Counts visits over `i = 0..n-1`; the final state is not a visit.
pub fn count(traj: &Trajectory, d: usize, k: usize) -> Result<Counts> {
    if traj.states.len() < 2 {
        return Err(CmcError::InvalidInput("counting needs a trajectory of length at least 2".into()));
    }
    traj.check_range(d, k)?;
    let mut counts = Counts::zeros(d, k)?;
    for i in 0..traj.horizon() {
        counts.add(traj.states[i], traj.actions[i], traj.states[i + 1]);
    }
    Ok(counts)
}

/// `M̂`, the defined flags and `p̂ = N/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedModel {
    map: IndexMap,
    // flat [l][s][t]; NaN in undefined rows
    m_hat: Vec<f64>,
    // flat [s][l]
    defined: Vec<bool>,
    p_hat: Vec<f64>,
    n_visits: Vec<u64>,
    horizon: usize,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct EstimatedModelWire {
    d: usize,
    k: usize,
    kernel: Vec<Vec<Option<Vec<f64>>>>,
    defined: Vec<Vec<bool>>,
    p_hat: Vec<Vec<f64>>,
    n_visits: Vec<Vec<u64>>,
    horizon: usize,
}

impl Serialize for EstimatedModel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let (d, k) = (self.d(), self.k());
        EstimatedModelWire {
            d,
            k,
            kernel: (0..k).map(|l| (0..d).map(|s| self.row(l, s).map(<[f64]>::to_vec)).collect()).collect(),
            defined: (0..d).map(|s| (0..k).map(|l| self.is_defined(s, l)).collect()).collect(),
            p_hat: (0..d).map(|s| (0..k).map(|l| self.p_hat(s, l)).collect()).collect(),
            n_visits: (0..d).map(|s| (0..k).map(|l| self.n_visits[self.map.pair0(s, l)]).collect()).collect(),
            horizon: self.horizon,
        }
        .serialize(serializer)
    }
}

/// `M̂_{s,t}^(l) = N_{s,t}^(l) / N_s^(l)`; zero-visit rows are flagged undefined.
pub fn estimate_kernel(counts: &Counts) -> EstimatedModel {
    let map = counts.index_map();
    let (d, k) = (map.d, map.k);
    let n = counts.horizon().max(1) as f64;
    let mut m_hat = vec![f64::NAN; d * d * k];
    let mut defined = vec![false; d * k];
    let mut p_hat = vec![0.0; d * k];
    for s in 0..d {
        for l in 0..k {
            let nv = counts.visits(s, l);
            p_hat[map.pair0(s, l)] = nv as f64 / n;
            if nv > 0 {
                defined[map.pair0(s, l)] = true;
                for t in 0..d {
                    m_hat[(l * d + s) * d + t] = counts.transitions(s, l, t) as f64 / nv as f64;
                }
            }
        }
    }
    EstimatedModel { map, m_hat, defined, p_hat, n_visits: counts.n_visits.clone(), horizon: counts.horizon() }
}

impl EstimatedModel {
    pub fn d(&self) -> usize {
        self.map.d
    }

    pub fn k(&self) -> usize {
        self.map.k
    }

    pub fn index_map(&self) -> IndexMap {
        self.map
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn is_defined(&self, s: usize, l: usize) -> bool {
        self.defined[self.map.pair0(s, l)]
    }

    pub fn all_defined(&self) -> bool {
        self.defined.iter().all(|&x| x)
    }

    /// Undefined pairs `(s, l)`, 0-based.
    pub fn undefined_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.map.pair_count())
            .filter(|&p| !self.defined[p])
            .map(|p| self.map.pair0_inverse(p))
            .collect()
    }

    /// Row `M̂_{s,·}^(l)`, `None` if undefined.
    pub fn row(&self, l: usize, s: usize) -> Option<&[f64]> {
        if !self.is_defined(s, l) {
            return None;
        }
        let d = self.map.d;
        let start = (l * d + s) * d;
        Some(&self.m_hat[start..start + d])
    }

    pub fn p_hat(&self, s: usize, l: usize) -> f64 {
        self.p_hat[self.map.pair0(s, l)]
    }

    /// `p̂` flat in pair order.
    pub fn occupation(&self) -> &[f64] {
        &self.p_hat
    }

    pub fn visits(&self, s: usize, l: usize) -> u64 {
        self.n_visits[self.map.pair0(s, l)]
    }

    /// Plug-in model; fails naming the unvisited pairs (1-based).
    pub fn to_model(&self) -> Result<TransitionModel> {
        let missing = self.undefined_pairs();
        if !missing.is_empty() {
            let names: Vec<String> = missing.iter().map(|(s, l)| format!("({},{})", s + 1, l + 1)).collect();
            return Err(CmcError::InferenceImpossible(format!("unvisited state-action pairs {}", names.join(", "))));
        }
        let (d, k) = (self.d(), self.k());
        let kernel = (0..k)
            .map(|l| {
                (0..d)
                    .map(|s| {
                        let row = self.row(l, s).expect("defined");
                        // exact ratios can miss 1 by an ulp or two; renormalise
                        let sum: f64 = row.iter().sum();
                        row.iter().map(|x| x / sum).collect()
                    })
                    .collect()
            })
            .collect();
        TransitionModel::new(d, k, kernel)
    }
}

/// `Λ`: block-diagonal over `(s, l)`, each block `diag(row) − row rowᵀ`,
/// laid out by the triple index.
pub fn covariance_proper(model: &TransitionModel) -> DMatrix<f64> {
    let map = model.index_map();
    let (d, k) = (map.d, map.k);
    let size = map.triple_count();
    let mut lambda = DMatrix::zeros(size, size);
    for s in 0..d {
        for l in 0..k {
            let row = model.row(l, s);
            let base = map.triple0(s, l, 0);
            for t in 0..d {
                for u in 0..d {
                    let diag = if t == u { row[t] } else { 0.0 };
                    lambda[(base + t, base + u)] = diag - row[t] * row[u];
                }
            }
        }
    }
    lambda
}

/// `Λ̄ = Λ / sqrt(p_s^(l) p_{s'}^(l'))`; `p` is flat in pair order.
pub fn covariance_improper(model: &TransitionModel, p: &[f64]) -> Result<DMatrix<f64>> {
    let map = model.index_map();
    if p.len() != map.pair_count() {
        return Err(CmcError::Contract(format!("occupation measure has {} entries, expected {}", p.len(), map.pair_count())));
    }
    if let Some(idx) = p.iter().position(|&x| !(x > 0.0)) {
        let (s, l) = map.pair0_inverse(idx);
        return Err(CmcError::Domain(format!("occupation p_{}^({}) = {} is not positive", s + 1, l + 1, p[idx])));
    }
    let mut lambda = covariance_proper(model);
    let size = map.triple_count();
    for a in 0..size {
        let pa = p[a / map.d];
        for b in 0..size {
            let pb = p[b / map.d];
            lambda[(a, b)] /= (pa * pb).sqrt();
        }
    }
    Ok(lambda)
}

/// Scaled error vector in triple order; `None` marks entries of undefined rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaledError {
    pub values: Vec<Option<f64>>,
    pub excluded_pairs: usize,
}

impl ScaledError {
    pub fn is_complete(&self) -> bool {
        self.excluded_pairs == 0
    }

    /// Values with missing entries replaced by NaN.
    pub fn dense(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.unwrap_or(f64::NAN)).collect()
    }
}

fn scaled_error(est: &EstimatedModel, truth: &TransitionModel, scale: impl Fn(usize, usize) -> f64) -> Result<ScaledError> {
    let map = est.index_map();
    if truth.index_map() != map {
        return Err(CmcError::Contract("estimate and true model differ in shape".into()));
    }
    let mut values = vec![None; map.triple_count()];
    let mut excluded = 0;
    for s in 0..map.d {
        for l in 0..map.k {
            match est.row(l, s) {
                None => excluded += 1,
                Some(row) => {
                    let f = scale(s, l);
                    for t in 0..map.d {
                        values[map.triple0(s, l, t)] = Some(f * (row[t] - truth.prob(l, s, t)));
                    }
                }
            }
        }
    }
    Ok(ScaledError { values, excluded_pairs: excluded })
}

/// `ξ[(s,l,t)] = sqrt(N_s^(l)) (M̂ − M)`.
pub fn scaled_error_proper(est: &EstimatedModel, truth: &TransitionModel) -> Result<ScaledError> {
    scaled_error(est, truth, |s, l| (est.visits(s, l) as f64).sqrt())
}

/// `ξ^is = sqrt(n) (M̂ − M)`.
pub fn scaled_error_improper(est: &EstimatedModel, truth: &TransitionModel, n: usize) -> Result<ScaledError> {
    let root = (n as f64).sqrt();
    scaled_error(est, truth, |_, _| root)
}

/// Stationary pair law `p_s^(l) = μ(s) P(l|s)` of the chain driven by a
/// stationary table; `μ` solves `μᵀ(ΠM) = μᵀ`, `Σμ = 1`.
pub fn stationary_occupation(model: &TransitionModel, table: &ActionTable) -> Result<Vec<f64>> {
    let (d, k) = (model.d(), model.k());
    if table.d() != d || table.k() != k {
        return Err(CmcError::Contract("logging table shape differs from the model".into()));
    }
    let mut chain = DMatrix::zeros(d, d);
    for s in 0..d {
        for l in 0..k {
            let w = table.row(s)[l];
            for t in 0..d {
                chain[(s, t)] += w * model.prob(l, s, t);
            }
        }
    }
    let mu = stationary_distribution(&chain)?;
    let mut p = vec![0.0; d * k];
    for s in 0..d {
        for l in 0..k {
            p[s * k + l] = mu[s] * table.row(s)[l];
        }
    }
    Ok(p)
}

/// Stationary law of a row-stochastic matrix with a unique recurrent class.
pub fn stationary_distribution(chain: &DMatrix<f64>) -> Result<Vec<f64>> {
    let d = chain.nrows();
    let mut a = chain.transpose() - DMatrix::identity(d, d);
    for j in 0..d {
        a[(d - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(d);
    b[d - 1] = 1.0;
    let mu = a
        .lu()
        .solve(&b)
        .ok_or_else(|| CmcError::Domain("state chain has no unique stationary law".into()))?;
    Ok(mu.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn count_example() {
        let t = Trajectory::new(vec![0, 1, 0, 1], vec![0, 0, 0, 0], 0).unwrap();
        let c = count(&t, 2, 1).unwrap();
        assert_eq!(c.visits(0, 0), 2);
        assert_eq!(c.visits(1, 0), 1);
        assert_eq!(c.transitions(0, 0, 1), 2);
        assert_eq!(c.transitions(1, 0, 0), 1);
        assert_eq!(c.horizon(), 3);
    }

    #[test]
    fn absorbing_count() {
        let t = Trajectory::new(vec![1; 8], vec![0; 8], 0).unwrap();
        let c = count(&t, 2, 2).unwrap();
        assert_eq!(c.visits(1, 0), 7);
        assert_eq!(c.transitions(1, 0, 1), 7);
    }

    #[test]
    fn kernel_ratio_and_undefined_rows() {
        let c = Counts::from_transitions(2, 1, &[vec![vec![30, 70]], vec![vec![0, 0]]]).unwrap();
        let e = estimate_kernel(&c);
        assert_eq!(e.row(0, 0).unwrap(), &[0.3, 0.7]);
        assert!(e.row(0, 1).is_none());
        assert_eq!(e.undefined_pairs(), vec![(1, 0)]);
        assert!(matches!(e.to_model(), Err(CmcError::InferenceImpossible(_))));
        let json = serde_json::to_value(&e).unwrap();
        assert!(json["kernel"][0][1].is_null());
        assert_eq!(json["defined"], serde_json::json!([[true], [false]]));
    }

    #[test]
    fn lambda_blocks() {
        let m = TransitionModel::single_action(vec![vec![0.5, 0.5], vec![0.7, 0.3]]).unwrap();
        let l = covariance_proper(&m);
        assert_eq!(l[(0, 0)], 0.25);
        assert_eq!(l[(0, 1)], -0.25);
        assert!((l[(2, 2)] - 0.21).abs() < 1e-15);
        assert!((l[(2, 3)] + 0.21).abs() < 1e-15);
        assert_eq!(l[(0, 2)], 0.0);
    }

    #[test]
    fn lambda_bar_scaling_and_domain() {
        let m = TransitionModel::new(
            2,
            2,
            vec![vec![vec![0.5, 0.5], vec![0.7, 0.3]], vec![vec![0.1, 0.9], vec![0.6, 0.4]]],
        )
        .unwrap();
        let lam = covariance_proper(&m);
        let bar = covariance_improper(&m, &[0.25; 4]).unwrap();
        assert!((bar - lam * 4.0).amax() < 1e-14);
        assert!(matches!(covariance_improper(&m, &[0.0, 0.5, 0.25, 0.25]), Err(CmcError::Domain(_))));

        let single = TransitionModel::single_action(vec![vec![1.0]]).unwrap();
        assert_eq!(covariance_improper(&single, &[1.0]).unwrap(), covariance_proper(&single));
    }

    #[test]
    fn scaled_error_arithmetic() {
        let truth = TransitionModel::single_action(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let c = Counts::from_transitions(2, 1, &[vec![vec![55, 45]], vec![vec![50, 50]]]).unwrap();
        let e = estimate_kernel(&c);
        let xi = scaled_error_proper(&e, &truth).unwrap();
        assert!((xi.values[0].unwrap() - 0.5).abs() < 1e-12);
        assert!((xi.values[0].unwrap() + xi.values[1].unwrap()).abs() < 1e-12);
        assert_eq!(xi.values[2], Some(0.0));
        let xis = scaled_error_improper(&e, &truth, 200).unwrap();
        assert!((xis.values[0].unwrap() - 0.05 * 200f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn stationary_occupation_sums_to_one() {
        let m = TransitionModel::single_action(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let p = stationary_occupation(&m, &ActionTable::uniform(2, 1).unwrap()).unwrap();
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-12);
    }
}
