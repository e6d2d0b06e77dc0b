//! Brute-force mixing coefficients on tiny instances.
//!
//! A path is the sequence of pairs `(X_0,a_0), …, (X_n,a_n)`; a pair is
//! encoded as `s·k + l`. Distances between laws are half-L1 (total
//! variation), so every coefficient lies in `[0, 1]`. Conditioning events
//! with probability below [`PRUNE`] are ignored.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CmcError, Result};
use crate::model::{check_simplex, TransitionModel, ROW_SUM_TOL};
use crate::policy::{History, LoggingPolicy};

pub const PRUNE: f64 = 1e-300;
pub const MAX_HORIZON: usize = 8;
pub const MAX_PAIRS: usize = 6;

/// Model, logging policy, initial law and horizon of a brute-forced chain.
#[derive(Debug, Clone)]
pub struct Instance<'a> {
    pub model: &'a TransitionModel,
    pub policy: &'a LoggingPolicy,
    pub initial: Vec<f64>,
    pub horizon: usize,
}

impl<'a> Instance<'a> {
    pub fn new(model: &'a TransitionModel, policy: &'a LoggingPolicy, initial: Vec<f64>, horizon: usize) -> Result<Self> {
        check_capacity(model, horizon)?;
        if horizon < 2 {
            return Err(CmcError::InvalidInput("mixing diagnostics need a horizon of at least 2".into()));
        }
        if initial.len() != model.d() {
            return Err(CmcError::InvalidInput("initial law has the wrong length".into()));
        }
        check_simplex(&initial, ROW_SUM_TOL).map_err(|e| CmcError::InvalidInput(format!("initial law: {e}")))?;
        policy.check_dimensions(model.d(), model.k())?;
        Ok(Instance { model, policy, initial, horizon })
    }

    fn d(&self) -> usize {
        self.model.d()
    }

    fn k(&self) -> usize {
        self.model.k()
    }

    fn dk(&self) -> usize {
        self.d() * self.k()
    }

    fn next_state_law(&self, states: &[usize], actions: &[usize]) -> Vec<f64> {
        match (states.last(), actions.last()) {
            (Some(&s), Some(&l)) => self.model.row(l, s).to_vec(),
            _ => self.initial.clone(),
        }
    }

    fn action_law(&self, t: usize, s: usize, states: &[usize], actions: &[usize], out: &mut [f64]) -> Result<()> {
        self.policy.fill_distribution(t, s, History::new(states, actions), out)
    }
}

fn check_capacity(model: &TransitionModel, horizon: usize) -> Result<()> {
    let dk = model.d() * model.k();
    if horizon > MAX_HORIZON || dk > MAX_PAIRS {
        return Err(CmcError::Capacity(format!(
            "exhaustive enumeration supports n ≤ {MAX_HORIZON} and d·k ≤ {MAX_PAIRS} (got n={horizon}, d·k={dk})"
        )));
    }
    Ok(())
}

fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// A history `(X_0,a_0),…,(X_{t-1},a_{t-1})` with its probability.
#[derive(Debug, Clone)]
struct Prefix {
    prob: f64,
    states: Vec<usize>,
    actions: Vec<usize>,
}

/// All positive-probability histories of length `t`.
fn prefixes(inst: &Instance<'_>, t: usize) -> Result<Vec<Prefix>> {
    let mut out = Vec::new();
    let mut states = Vec::with_capacity(t);
    let mut actions = Vec::with_capacity(t);
    let mut law = vec![0.0; inst.k()];
    fn rec(
        inst: &Instance<'_>,
        t: usize,
        prob: f64,
        states: &mut Vec<usize>,
        actions: &mut Vec<usize>,
        law: &mut Vec<f64>,
        out: &mut Vec<Prefix>,
    ) -> Result<()> {
        let i = states.len();
        if i == t {
            out.push(Prefix { prob, states: states.clone(), actions: actions.clone() });
            return Ok(());
        }
        let next = inst.next_state_law(states, actions);
        for (s, &ps) in next.iter().enumerate() {
            let w = prob * ps;
            if w < PRUNE {
                continue;
            }
            inst.action_law(i, s, states, actions, law)?;
            let probs = law.clone();
            for (l, &pl) in probs.iter().enumerate() {
                let w2 = w * pl;
                if w2 < PRUNE {
                    continue;
                }
                states.push(s);
                actions.push(l);
                rec(inst, t, w2, states, actions, law, out)?;
                states.pop();
                actions.pop();
            }
        }
        Ok(())
    }
    rec(inst, t, 1.0, &mut states, &mut actions, &mut law, &mut out)?;
    Ok(out)
}

/// Law of the pairs at times `i+1..=n` given the history through time `i`,
/// indexed base `dk` with time `i+1` most significant.
fn continuation(inst: &Instance<'_>, states: &mut Vec<usize>, actions: &mut Vec<usize>) -> Result<Vec<f64>> {
    let n = inst.horizon;
    let dk = inst.dk();
    let remaining = n + 1 - states.len();
    let mut out = vec![0.0; dk.pow(remaining as u32)];
    let mut law = vec![0.0; inst.k()];
    fn rec(
        inst: &Instance<'_>,
        prob: f64,
        idx: usize,
        states: &mut Vec<usize>,
        actions: &mut Vec<usize>,
        law: &mut Vec<f64>,
        out: &mut [f64],
    ) -> Result<()> {
        let t = states.len();
        if t > inst.horizon {
            out[idx] += prob;
            return Ok(());
        }
        let (k, dk) = (inst.k(), inst.dk());
        let next = inst.next_state_law(states, actions);
        for (s, &ps) in next.iter().enumerate() {
            if ps == 0.0 {
                continue;
            }
            inst.action_law(t, s, states, actions, law)?;
            let probs = law.clone();
            for (l, &pl) in probs.iter().enumerate() {
                if pl == 0.0 {
                    continue;
                }
                states.push(s);
                actions.push(l);
                rec(inst, prob * ps * pl, idx * dk + s * k + l, states, actions, law, out)?;
                states.pop();
                actions.pop();
            }
        }
        Ok(())
    }
    rec(inst, 1.0, 0, states, actions, &mut law, &mut out)?;
    Ok(out)
}

/// Per-prefix result of the brute-force pass at time `i`.
struct PassOutput {
    eta: Vec<f64>,
    // joint weights P(pair_i = u, X_j = t), [j][u][t]
    theta_joint: Vec<Vec<f64>>,
    pair_mass: Vec<f64>,
}

fn brute_force_pass(inst: &Instance<'_>, i: usize) -> Result<PassOutput> {
    let n = inst.horizon;
    let (d, k, dk) = (inst.d(), inst.k(), inst.dk());
    let roots = prefixes(inst, i)?;
    let results: Vec<Result<PassOutput>> = roots
        .par_iter()
        .map(|root| {
            let mut eta = vec![0.0; n + 1];
            let mut theta_joint = vec![vec![0.0; dk * d]; n + 1];
            let mut pair_mass = vec![0.0; dk];
            let mut states = root.states.clone();
            let mut actions = root.actions.clone();
            let next = inst.next_state_law(&states, &actions);
            let mut law = vec![0.0; k];
            // candidate pairs at time i with their continuation laws
            let mut candidates: Vec<(usize, Vec<f64>)> = Vec::new();
            for (s, &ps) in next.iter().enumerate() {
                if root.prob * ps < PRUNE {
                    continue;
                }
                inst.action_law(i, s, &states, &actions, &mut law)?;
                for (l, &pl) in law.clone().iter().enumerate() {
                    let w = root.prob * ps * pl;
                    if w < PRUNE {
                        continue;
                    }
                    states.push(s);
                    actions.push(l);
                    let cont = continuation(inst, &mut states, &mut actions)?;
                    states.pop();
                    actions.pop();
                    let u = s * k + l;
                    pair_mass[u] += w;
                    let digits = n - i;
                    for j in i + 1..=n {
                        let place = dk.pow((n - j) as u32);
                        let row = &mut theta_joint[j][u * d..(u + 1) * d];
                        for (idx, &p) in cont.iter().enumerate() {
                            if p != 0.0 {
                                row[(idx / place) % dk / k] += w * p;
                            }
                        }
                    }
                    debug_assert_eq!(cont.len(), dk.pow(digits as u32));
                    candidates.push((u, cont));
                }
            }
            for j in i + 1..=n {
                let size = dk.pow((n - j + 1) as u32);
                let suffix: Vec<Vec<f64>> = candidates
                    .iter()
                    .map(|(_, cont)| {
                        let mut m = vec![0.0; size];
                        for (idx, &p) in cont.iter().enumerate() {
                            m[idx % size] += p;
                        }
                        m
                    })
                    .collect();
                let mut best: f64 = 0.0;
                for a in 0..suffix.len() {
                    for b in a + 1..suffix.len() {
                        best = best.max(tv(&suffix[a], &suffix[b]));
                    }
                }
                eta[j] = best;
            }
            Ok(PassOutput { eta, theta_joint, pair_mass })
        })
        .collect();
    let mut total = PassOutput { eta: vec![0.0; n + 1], theta_joint: vec![vec![0.0; dk * d]; n + 1], pair_mass: vec![0.0; dk] };
    for r in results {
        let r = r?;
        for (t, v) in total.eta.iter_mut().zip(&r.eta) {
            *t = t.max(*v);
        }
        for (tj, rj) in total.theta_joint.iter_mut().zip(&r.theta_joint) {
            for (a, b) in tj.iter_mut().zip(rj) {
                *a += b;
            }
        }
        for (a, b) in total.pair_mass.iter_mut().zip(&r.pair_mass) {
            *a += b;
        }
    }
    Ok(total)
}

/// `θ̄_{i,j}` from the joint weights `P(pair_i = u, X_j = t)`.
fn theta_from_joint(joint: &[f64], mass: &[f64], d: usize) -> f64 {
    let laws: Vec<Vec<f64>> = mass
        .iter()
        .enumerate()
        .filter(|(_, &m)| m >= PRUNE)
        .map(|(u, &m)| joint[u * d..(u + 1) * d].iter().map(|x| x / m).collect())
        .collect();
    let mut best: f64 = 0.0;
    for a in 0..laws.len() {
        for b in a + 1..laws.len() {
            best = best.max(tv(&laws[a], &laws[b]));
        }
    }
    best
}

/// `η̄_{i,j}` and `θ̄_{i,j}` by exhaustive enumeration for `1 ≤ i < j ≤ n`;
/// tables are `(n+1) × (n+1)` with unused entries zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BruteForceTables {
    pub eta_bar: Vec<Vec<f64>>,
    pub theta_bar: Vec<Vec<f64>>,
}

pub fn brute_force_tables(inst: &Instance<'_>) -> Result<BruteForceTables> {
    let n = inst.horizon;
    let d = inst.d();
    let mut eta_bar = vec![vec![0.0; n + 1]; n + 1];
    let mut theta_bar = vec![vec![0.0; n + 1]; n + 1];
    for i in 1..n {
        let pass = brute_force_pass(inst, i)?;
        for j in i + 1..=n {
            eta_bar[i][j] = pass.eta[j];
            theta_bar[i][j] = theta_from_joint(&pass.theta_joint[j], &pass.pair_mass, d);
        }
    }
    Ok(BruteForceTables { eta_bar, theta_bar })
}

/// Single coefficient `η̄_{i,j}`.
pub fn eta_bar_brute_force(inst: &Instance<'_>, i: usize, j: usize) -> Result<f64> {
    if !(1 <= i && i < j && j <= inst.horizon) {
        return Err(CmcError::Range(format!("need 1 ≤ i < j ≤ n, got i={i}, j={j}, n={}", inst.horizon)));
    }
    Ok(brute_force_pass(inst, i)?.eta[j])
}

/// Both conditional laws of `(X_j,a_j,…,X_n,a_n)` for every valid pair of
/// conditioning events at time `i`; exposed for cross-checks.
pub fn conditional_suffix_laws(inst: &Instance<'_>, i: usize, j: usize) -> Result<Vec<Vec<Vec<f64>>>> {
    if !(1 <= i && i < j && j <= inst.horizon) {
        return Err(CmcError::Range(format!("need 1 ≤ i < j ≤ n, got i={i}, j={j}")));
    }
    let n = inst.horizon;
    let (k, dk) = (inst.k(), inst.dk());
    let size = dk.pow((n - j + 1) as u32);
    let mut groups = Vec::new();
    for root in prefixes(inst, i)? {
        let mut states = root.states.clone();
        let mut actions = root.actions.clone();
        let next = inst.next_state_law(&states, &actions);
        let mut law = vec![0.0; k];
        let mut group = Vec::new();
        for (s, &ps) in next.iter().enumerate() {
            if root.prob * ps < PRUNE {
                continue;
            }
            inst.action_law(i, s, &states, &actions, &mut law)?;
            for (l, &pl) in law.clone().iter().enumerate() {
                if root.prob * ps * pl < PRUNE {
                    continue;
                }
                states.push(s);
                actions.push(l);
                let cont = continuation(inst, &mut states, &mut actions)?;
                states.pop();
                actions.pop();
                let mut m = vec![0.0; size];
                for (idx, &p) in cont.iter().enumerate() {
                    m[idx % size] += p;
                }
                group.push(m);
            }
        }
        groups.push(group);
    }
    Ok(groups)
}

/// Pair-chain transition at time `t ≥ 1`: `(s,l) → (t',l')` with
/// probability `M_{s,t'}^(l) P^(t)(l'|t')`. Markov policies only.
fn pair_transition(inst: &Instance<'_>, t: usize) -> Result<DMatrix<f64>> {
    let (d, k, dk) = (inst.d(), inst.k(), inst.dk());
    let mut p = DMatrix::zeros(dk, dk);
    let mut law = vec![0.0; k];
    for y in 0..d {
        inst.action_law(t, y, &[], &[], &mut law)?;
        for u in 0..dk {
            let (s, l) = (u / k, u % k);
            let m = inst.model.prob(l, s, y);
            for (l2, &pl) in law.iter().enumerate() {
                p[(u, y * k + l2)] = m * pl;
            }
        }
    }
    Ok(p)
}

/// Pair marginals at times `0..=n` for a Markov policy.
fn pair_marginals(inst: &Instance<'_>) -> Result<Vec<Vec<f64>>> {
    let (k, dk) = (inst.k(), inst.dk());
    let mut law = vec![0.0; k];
    let mut first = vec![0.0; dk];
    for (s, &ps) in inst.initial.iter().enumerate() {
        inst.action_law(0, s, &[], &[], &mut law)?;
        for l in 0..k {
            first[s * k + l] = ps * law[l];
        }
    }
    let mut out = vec![first];
    for t in 1..=inst.horizon {
        let p = pair_transition(inst, t)?;
        let prev = &out[t - 1];
        let next: Vec<f64> = (0..dk).map(|v| (0..dk).map(|u| prev[u] * p[(u, v)]).sum()).collect();
        out.push(next);
    }
    Ok(out)
}

fn require_markov(inst: &Instance<'_>) -> Result<()> {
    if !inst.policy.is_markov() {
        return Err(CmcError::InvalidInput("matrix-product route needs a Markov or deterministic policy".into()));
    }
    Ok(())
}

/// Laws at times `j > i` of the pair started from each pair `u` at time `i`.
fn forward_from(inst: &Instance<'_>, i: usize, transitions: &[DMatrix<f64>]) -> Vec<Vec<Vec<f64>>> {
    let dk = inst.dk();
    (0..dk)
        .map(|u| {
            let mut cur = vec![0.0; dk];
            cur[u] = 1.0;
            let mut laws = vec![Vec::new(); inst.horizon + 1];
            for j in i + 1..=inst.horizon {
                let p = &transitions[j];
                cur = (0..dk).map(|v| (0..dk).map(|w| cur[w] * p[(w, v)]).sum()).collect();
                laws[j] = cur.clone();
            }
            laws
        })
        .collect()
}

/// `η̄` table from pair-chain matrix products. For a Markov policy the
/// future after time `i` depends on the history only through the pair at
/// `i`, and two pairs are comparable when some common pair at `i−1` reaches
/// both.
pub fn eta_bar_markov(inst: &Instance<'_>) -> Result<Vec<Vec<f64>>> {
    require_markov(inst)?;
    let n = inst.horizon;
    let (k, dk) = (inst.k(), inst.dk());
    let marginals = pair_marginals(inst)?;
    let transitions: Vec<DMatrix<f64>> =
        (0..=n).map(|t| if t == 0 { Ok(DMatrix::zeros(dk, dk)) } else { pair_transition(inst, t) }).collect::<Result<_>>()?;
    let mut table = vec![vec![0.0; n + 1]; n + 1];
    for i in 1..n {
        let laws = forward_from(inst, i, &transitions);
        // groups of pairs reachable from a common predecessor
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for w in 0..dk {
            let mw = marginals[i - 1][w];
            if mw < PRUNE {
                continue;
            }
            let group: Vec<usize> = (0..dk).filter(|&u| mw * transitions[i][(w, u)] >= PRUNE).collect();
            groups.push(group);
        }
        for j in i + 1..=n {
            let mut best: f64 = 0.0;
            for g in &groups {
                for a in 0..g.len() {
                    for b in a + 1..g.len() {
                        best = best.max(tv(&laws[g[a]][j], &laws[g[b]][j]));
                    }
                }
            }
            table[i][j] = best;
        }
        let _ = k;
    }
    Ok(table)
}

/// `θ̄` table from matrix products (Markov policies).
pub fn theta_bar_matrix(inst: &Instance<'_>) -> Result<Vec<Vec<f64>>> {
    require_markov(inst)?;
    let n = inst.horizon;
    let (d, k, dk) = (inst.d(), inst.k(), inst.dk());
    let marginals = pair_marginals(inst)?;
    let transitions: Vec<DMatrix<f64>> =
        (0..=n).map(|t| if t == 0 { Ok(DMatrix::zeros(dk, dk)) } else { pair_transition(inst, t) }).collect::<Result<_>>()?;
    let mut table = vec![vec![0.0; n + 1]; n + 1];
    for i in 1..n {
        let laws = forward_from(inst, i, &transitions);
        let valid: Vec<usize> = (0..dk).filter(|&u| marginals[i][u] >= PRUNE).collect();
        for j in i + 1..=n {
            let state_laws: Vec<Vec<f64>> = valid
                .iter()
                .map(|&u| (0..d).map(|t| (0..k).map(|l| laws[u][j][t * k + l]).sum()).collect())
                .collect();
            let mut best: f64 = 0.0;
            for a in 0..state_laws.len() {
                for b in a + 1..state_laws.len() {
                    best = best.max(tv(&state_laws[a], &state_laws[b]));
                }
            }
            table[i][j] = best;
        }
    }
    Ok(table)
}

/// Caps on `(i, j, p)` for the action-mixing triple sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GammaCaps {
    pub i_max: usize,
    pub j_max: usize,
    pub p_max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GammaReport {
    pub caps: GammaCaps,
    /// `γ_{p,j,i}` as `[p][j][i]`.
    pub gamma: Vec<Vec<Vec<f64>>>,
    /// `Σ_j Σ_p γ_{p,j,i}` per `i` (index 0 unused).
    pub sums: Vec<f64>,
    /// Supremum of `sums` over `1 ≤ i ≤ iMax`.
    pub sup: f64,
}

/// Weighted mixture of action laws. If every component is bitwise equal
/// the mixture is that vector exactly, so identical laws give distance 0.
struct Mixtures {
    k: usize,
    weight: Vec<f64>,
    sum: Vec<f64>,
    first: Vec<f64>,
    // 0 empty, 1 identical so far, 2 mixed
    state: Vec<u8>,
}

impl Mixtures {
    fn new(len: usize, k: usize) -> Self {
        Mixtures { k, weight: vec![0.0; len], sum: vec![0.0; len * k], first: vec![0.0; len * k], state: vec![0; len] }
    }

    fn add(&mut self, key: usize, w: f64, law: &[f64]) {
        let k = self.k;
        let slot = key * k..(key + 1) * k;
        match self.state[key] {
            0 => {
                self.first[slot.clone()].copy_from_slice(law);
                self.state[key] = 1;
            }
            1 if self.first[slot.clone()].iter().zip(law).any(|(a, b)| a.to_bits() != b.to_bits()) => self.state[key] = 2,
            _ => {}
        }
        self.weight[key] += w;
        for (s, x) in self.sum[slot].iter_mut().zip(law) {
            *s += w * x;
        }
    }

    fn law(&self, key: usize) -> Vec<f64> {
        let slot = key * self.k..(key + 1) * self.k;
        if self.state[key] == 1 {
            self.first[slot].to_vec()
        } else {
            self.sum[slot].iter().map(|x| x / self.weight[key]).collect()
        }
    }
}

/// Exact `γ_{p,j,i}` for `1 ≤ i ≤ iMax`, `1 ≤ j ≤ jMax`, `i+j+1 ≤ p ≤ pMax`.
/// The early block is `H_0^i`, the recent block `H_{i+j}^{p-1}`.
pub fn gamma_triple_sum(
    model: &TransitionModel,
    policy: &LoggingPolicy,
    initial: &[f64],
    caps: GammaCaps,
) -> Result<GammaReport> {
    check_capacity(model, caps.p_max)?;
    let inst = Instance::new(model, policy, initial.to_vec(), caps.p_max.max(2))?;
    let (d, k, dk) = (inst.d(), inst.k(), inst.dk());
    let p_max = caps.p_max;
    let mut gamma = vec![vec![vec![0.0; caps.i_max + 1]; caps.j_max + 1]; p_max + 1];
    for p in 3..=p_max {
        let combos: Vec<(usize, usize)> = (1..=caps.i_max)
            .flat_map(|i| (1..=caps.j_max).map(move |j| (i, j)))
            .filter(|&(i, j)| i + j < p)
            .collect();
        if combos.is_empty() {
            continue;
        }
        let mut early_recent: Vec<Mixtures> = Vec::new();
        let mut recent_only: Vec<Mixtures> = Vec::new();
        for &(i, j) in &combos {
            let recent = dk.pow((p - i - j) as u32);
            early_recent.push(Mixtures::new(dk.pow((i + 1) as u32) * recent * d, k));
            recent_only.push(Mixtures::new(recent * d, k));
        }
        let roots = prefixes(&inst, p)?;
        let mut law = vec![0.0; k];
        for root in &roots {
            let digits: Vec<usize> = root.states.iter().zip(&root.actions).map(|(s, l)| s * k + l).collect();
            let encode = |range: std::ops::Range<usize>| range.fold(0usize, |acc, t| acc * dk + digits[t]);
            let next = inst.next_state_law(&root.states, &root.actions);
            for (s, &ps) in next.iter().enumerate() {
                let w = root.prob * ps;
                if w < PRUNE {
                    continue;
                }
                inst.action_law(p, s, &root.states, &root.actions, &mut law)?;
                for (c, &(i, j)) in combos.iter().enumerate() {
                    let recent = encode(i + j..p);
                    let early = encode(0..i + 1);
                    let recent_size = dk.pow((p - i - j) as u32);
                    early_recent[c].add((early * recent_size + recent) * d + s, w, &law);
                    recent_only[c].add(recent * d + s, w, &law);
                }
            }
        }
        for (c, &(i, j)) in combos.iter().enumerate() {
            let recent_size = dk.pow((p - i - j) as u32);
            let er = &early_recent[c];
            let ro = &recent_only[c];
            let mut best: f64 = 0.0;
            for key in 0..er.weight.len() {
                if er.weight[key] < PRUNE {
                    continue;
                }
                let s = key % d;
                let recent = (key / d) % recent_size;
                best = best.max(tv(&er.law(key), &ro.law(recent * d + s)));
            }
            gamma[p][j][i] = best;
        }
    }
    let mut sums = vec![0.0; caps.i_max + 1];
    for (i, sum) in sums.iter_mut().enumerate().skip(1) {
        for j in 1..=caps.j_max {
            for row in gamma.iter().take(p_max + 1).skip(i + j + 1) {
                *sum += row[j][i];
            }
        }
    }
    let sup = sums.iter().copied().fold(0.0, f64::max);
    Ok(GammaReport { caps, gamma, sums, sup })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MixingReport {
    pub horizon: usize,
    /// `η̄_{i,j}`, `(n+1) × (n+1)`, nonzero only for `1 ≤ i < j ≤ n`.
    pub eta_bar: Vec<Vec<f64>>,
    /// `max_i (1 + Σ_{j>i} η̄_{i,j})`.
    pub delta_norm: f64,
    pub gamma: GammaReport,
    /// The capped triple sum of the action coefficients (supremum over `i`).
    pub gamma_sum: f64,
    pub theta_bar: Vec<Vec<f64>>,
    /// `Σ_{j>i} θ̄_{i,j}` per `i` (index 0 unused).
    pub theta_sum: Vec<f64>,
    /// Geometric bound on `Σ_{j>n} θ̄_{i,j}` when every kernel entry is positive
    /// and the policy is Markov.
    pub theta_tail: Option<Vec<f64>>,
    pub theta_conclusive: bool,
    /// Smallest time-averaged pair probability over `0..n-1`.
    pub min_occupation: f64,
}

impl MixingReport {
    /// `sup_i Σ_{j>i} θ̄_{i,j}`, with the tail bound added when available.
    pub fn theta_sup(&self) -> f64 {
        let tail = self.theta_tail.as_deref();
        (1..self.horizon)
            .map(|i| self.theta_sum[i] + tail.map_or(0.0, |t| t[i]))
            .fold(0.0, f64::max)
    }
}

pub fn delta_norm(eta_bar: &[Vec<f64>]) -> f64 {
    let n = eta_bar.len() - 1;
    (1..=n).map(|i| 1.0 + eta_bar[i][i + 1..].iter().sum::<f64>()).fold(1.0, f64::max)
}

/// Full report: brute-force `η̄`, `γ` with caps equal to the horizon, and
/// `θ̄` by matrix products for Markov policies or enumeration otherwise.
pub fn mixing_report(model: &TransitionModel, policy: &LoggingPolicy, initial: &[f64], horizon: usize) -> Result<MixingReport> {
    let inst = Instance::new(model, policy, initial.to_vec(), horizon)?;
    let n = horizon;
    let tables = brute_force_tables(&inst)?;
    let theta_bar = if policy.is_markov() { theta_bar_matrix(&inst)? } else { tables.theta_bar.clone() };
    let gamma = gamma_triple_sum(model, policy, initial, GammaCaps { i_max: n, j_max: n, p_max: n })?;
    let theta_sum: Vec<f64> = (0..=n).map(|i| if i == 0 { 0.0 } else { theta_bar[i][i + 1..].iter().fold(0.0, |a, b| a + b) }).collect();
    let m_min = model.min_entry();
    let rho = 1.0 - model.d() as f64 * m_min;
    let theta_conclusive = m_min > 0.0 && policy.is_markov() && rho < 1.0;
    let theta_tail = theta_conclusive.then(|| {
        (0..=n)
            .map(|i| if i == 0 || i >= n { 0.0 } else { theta_bar[i][n] * rho.max(0.0) / (1.0 - rho.max(0.0)) })
            .collect()
    });
    let occupation = occupation_average(&inst)?;
    Ok(MixingReport {
        horizon: n,
        delta_norm: delta_norm(&tables.eta_bar),
        eta_bar: tables.eta_bar,
        gamma_sum: gamma.sup,
        gamma,
        theta_bar,
        theta_sum,
        theta_tail,
        theta_conclusive,
        min_occupation: occupation.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

fn occupation_average(inst: &Instance<'_>) -> Result<Vec<f64>> {
    let n = inst.horizon;
    let dk = inst.dk();
    let mut avg = vec![0.0; dk];
    for t in 0..n {
        for root in prefixes(inst, t + 1)? {
            let u = root.states[t] * inst.k() + root.actions[t];
            avg[u] += root.prob / n as f64;
        }
    }
    Ok(avg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DeltaCheck {
    pub bound: f64,
    pub delta_norm: f64,
    pub margin: f64,
    pub holds: bool,
}

/// Compares `‖Δ_n‖` with `C + C_θ + 1`.
pub fn delta_norm_bound(report: &MixingReport, c: f64, c_theta: f64) -> DeltaCheck {
    let bound = c + c_theta + 1.0;
    let margin = bound - report.delta_norm;
    DeltaCheck { bound, delta_norm: report.delta_norm, margin, holds: margin >= -1e-9 }
}

/// Exact law of the whole path `(X_0,a_0),…,(X_n,a_n)`, indexed base `dk`
/// with time 0 most significant.
pub fn path_law(inst: &Instance<'_>) -> Result<Vec<f64>> {
    let dk = inst.dk();
    let mut law = vec![0.0; dk.pow((inst.horizon + 1) as u32)];
    for root in prefixes(inst, inst.horizon + 1)? {
        let idx = root.states.iter().zip(&root.actions).fold(0, |acc, (s, l)| acc * dk + s * inst.k() + l);
        law[idx] += root.prob;
    }
    Ok(law)
}

/// Encodes a path with the same indexing as [`path_law`].
pub fn path_index(states: &[usize], actions: &[usize], d: usize, k: usize) -> usize {
    states.iter().zip(actions).fold(0, |acc, (s, l)| acc * d * k + s * k + l)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VisitationGrowth {
    pub horizons: Vec<usize>,
    pub replications: Vec<usize>,
    /// Mean visit count per horizon, `[grid][s][l]`.
    pub mean_visits: Vec<Vec<Vec<f64>>>,
    /// Log-log slope per pair `[s][l]`; `None` when a mean is zero.
    pub exponents: Vec<Vec<Option<f64>>>,
    /// Smallest fitted slope over pairs with a slope.
    pub min_exponent: Option<f64>,
}

/// Least-squares slope of `log E[N_s^(l)(n)]` against `log n`.
pub fn visitation_growth(grid: &[(usize, Vec<crate::estimate::Counts>)]) -> Result<VisitationGrowth> {
    if grid.len() < 3 {
        return Err(CmcError::Diagnostic(format!("visitation growth needs at least 3 grid points, got {}", grid.len())));
    }
    if let Some((n, reps)) = grid.iter().find(|(_, reps)| reps.len() < 50) {
        return Err(CmcError::Diagnostic(format!("horizon {n} has {} replications, need at least 50", reps.len())));
    }
    let first = &grid[0].1[0];
    let (d, k) = (first.d(), first.k());
    if grid.iter().flat_map(|(_, r)| r).any(|c| c.d() != d || c.k() != k) {
        return Err(CmcError::Contract("counts in the grid have different shapes".into()));
    }
    let mean_visits: Vec<Vec<Vec<f64>>> = grid
        .iter()
        .map(|(_, reps)| {
            (0..d)
                .map(|s| (0..k).map(|l| reps.iter().map(|c| c.visits(s, l) as f64).sum::<f64>() / reps.len() as f64).collect())
                .collect()
        })
        .collect();
    let exponents: Vec<Vec<Option<f64>>> = (0..d)
        .map(|s| {
            (0..k)
                .map(|l| {
                    let pts: Vec<(f64, f64)> =
                        grid.iter().zip(&mean_visits).map(|((n, _), m)| ((*n as f64).ln(), m[s][l].ln())).collect();
                    if pts.iter().any(|p| !p.1.is_finite()) {
                        None
                    } else {
                        crate::simulate::least_squares_slope(&pts)
                    }
                })
                .collect()
        })
        .collect();
    let min_exponent = exponents.iter().flatten().flatten().copied().reduce(f64::min);
    Ok(VisitationGrowth {
        horizons: grid.iter().map(|(n, _)| *n).collect(),
        replications: grid.iter().map(|(_, r)| r.len()).collect(),
        mean_visits,
        exponents,
        min_exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacity_is_enforced() {
        let m = TransitionModel::single_action(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let p = LoggingPolicy::uniform(2, 1).unwrap();
        assert!(matches!(Instance::new(&m, &p, vec![0.5, 0.5], 9), Err(CmcError::Capacity(_))));
        let big = TransitionModel::new(
            7,
            1,
            vec![(0..7).map(|_| vec![1.0 / 7.0; 7]).collect()],
        )
        .unwrap();
        let p7 = LoggingPolicy::uniform(7, 1).unwrap();
        assert!(matches!(Instance::new(&big, &p7, vec![1.0 / 7.0; 7], 3), Err(CmcError::Capacity(_))));
    }

    #[test]
    fn identical_rows_give_zero() {
        let row = vec![0.2, 0.8];
        let m = TransitionModel::new(2, 2, vec![vec![row.clone(), row.clone()], vec![row.clone(), row]]).unwrap();
        let p = LoggingPolicy::stationary(vec![vec![0.5, 0.5], vec![0.3, 0.7]]).unwrap();
        let r = mixing_report(&m, &p, &[0.5, 0.5], 4).unwrap();
        assert!(r.eta_bar.iter().flatten().all(|&x| x.abs() < 1e-15));
        assert!(r.theta_bar.iter().flatten().all(|&x| x.abs() < 1e-15));
        assert_eq!(r.delta_norm, 1.0);
        assert_eq!(r.gamma_sum, 0.0);
    }

    #[test]
    fn disjoint_absorbing_states_give_one() {
        let m = TransitionModel::single_action(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let p = LoggingPolicy::uniform(2, 1).unwrap();
        let inst = Instance::new(&m, &p, vec![0.5, 0.5], 4).unwrap();
        // both states at time i need one common history, so start the
        // comparison from i = 1 with a mixing first step
        let m2 = TransitionModel::new(
            3,
            1,
            vec![vec![vec![0.0, 0.5, 0.5], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]],
        )
        .unwrap();
        let p2 = LoggingPolicy::uniform(3, 1).unwrap();
        let inst2 = Instance::new(&m2, &p2, vec![1.0, 0.0, 0.0], 4).unwrap();
        for j in 2..=4 {
            assert!((eta_bar_brute_force(&inst2, 1, j).unwrap() - 1.0).abs() < 1e-15);
        }
        // with a point-mass history every pair at time i has a distinct past
        assert_eq!(eta_bar_brute_force(&inst, 1, 2).unwrap(), 0.0);
    }
}
