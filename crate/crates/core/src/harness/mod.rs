//! Seeded Monte Carlo experiments. Every report is a pure function of its
//! config: replication `r` draws from the streams keyed by `(seed, r)`,
//! replications run in parallel, and reductions run in replication order.

pub mod clt;
pub mod gof;
pub mod noclt;
pub mod optimal;
pub mod rl;
pub mod sampling;
pub mod stats;
pub mod visitation;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CmcError, Result};
use crate::io::JsonRef;
use crate::model::{RewardModel, TargetPolicy, TransitionModel};
use crate::policy::LoggingPolicy;
use crate::simulate::uniform_initial;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Clt,
    Gof,
    Rl,
    SamplingEquivalence,
    NoClt,
    Optimal,
    Visitation,
}

/// Row perturbation for power studies: `+ε` at `(state, action, increase)`
/// and `−ε` at `(state, action, decrease)`, all 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub state: usize,
    pub action: usize,
    pub increase: usize,
    pub decrease: usize,
}

impl Default for Perturbation {
    fn default() -> Self {
        Perturbation { state: 1, action: 1, increase: 1, decrease: 2 }
    }
}

fn default_level() -> f64 {
    0.05
}

/// Experiment description. `model`, `policy`, `target` and `rewards` are
/// inline JSON objects or paths relative to the config file.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub model: JsonRef<TransitionModel>,
    pub policy: JsonRef<LoggingPolicy>,
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default)]
    pub initial: Option<Vec<f64>>,
    #[serde(default)]
    pub target: Option<JsonRef<TargetPolicy>>,
    #[serde(default)]
    pub rewards: Option<JsonRef<RewardModel>>,
    /// Perturbation sizes for `gof`; 0 estimates the size.
    #[serde(default)]
    pub perturbations: Option<Vec<f64>>,
    #[serde(default)]
    pub perturbation: Option<Perturbation>,
    /// Horizon grid for `no-clt` and `visitation`.
    #[serde(default)]
    pub horizons: Option<Vec<usize>>,
}

/// A config with every reference loaded and checked.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub kind: ExperimentKind,
    pub model: TransitionModel,
    pub policy: LoggingPolicy,
    pub initial: Vec<f64>,
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    pub level: f64,
    pub target: Option<TargetPolicy>,
    pub rewards: Option<RewardModel>,
    pub perturbations: Vec<f64>,
    pub perturbation: Perturbation,
    pub horizons: Vec<usize>,
}

fn config_err(e: CmcError) -> CmcError {
    match e {
        CmcError::Config(_) | CmcError::Io(_) => e,
        other => CmcError::Config(other.to_string()),
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CmcError::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn resolve(&self, base: &Path) -> Result<Experiment> {
        if self.replications < 1 {
            return Err(CmcError::Config("replications must be at least 1".into()));
        }
        if self.horizon < 2 {
            return Err(CmcError::Config("horizon must be at least 2".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(CmcError::Config(format!("level {} outside (0,1)", self.level)));
        }
        let model = self.model.resolve(base).map_err(config_err)?;
        let policy = self.policy.resolve(base).map_err(config_err)?;
        policy.check_dimensions(model.d(), model.k()).map_err(config_err)?;
        let initial = self.initial.clone().unwrap_or_else(|| uniform_initial(model.d()));
        if initial.len() != model.d() {
            return Err(CmcError::Config("initial law has the wrong length".into()));
        }
        let target = self.target.as_ref().map(|t| t.resolve(base)).transpose().map_err(config_err)?;
        let rewards = self.rewards.as_ref().map(|r| r.resolve(base)).transpose().map_err(config_err)?;
        if let Some(t) = &target {
            if t.d() != model.d() || t.k() != model.k() {
                return Err(CmcError::Config("target policy does not match the model shape".into()));
            }
        }
        if let Some(r) = &rewards {
            if r.d() != model.d() || r.k() != model.k() {
                return Err(CmcError::Config("rewards do not match the model shape".into()));
            }
        }
        let horizons = self.horizons.clone().unwrap_or_default();
        if horizons.iter().any(|&n| n < 2) {
            return Err(CmcError::Config("grid horizons must be at least 2".into()));
        }
        Ok(Experiment {
            kind: self.kind,
            model,
            policy,
            initial,
            horizon: self.horizon,
            replications: self.replications,
            seed: self.seed,
            level: self.level,
            target,
            rewards,
            perturbations: self.perturbations.clone().unwrap_or_else(|| vec![0.0]),
            perturbation: self.perturbation.unwrap_or_default(),
            horizons,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ExperimentReport {
    Clt(clt::CltReport),
    Gof(gof::GofStudy),
    Rl(rl::RlReport),
    SamplingEquivalence(sampling::SamplingReport),
    NoClt(noclt::NoCltReport),
    Optimal(optimal::OptimalReport),
    Visitation(visitation::VisitationReport),
}

pub fn run(exp: &Experiment) -> Result<ExperimentReport> {
    Ok(match exp.kind {
        ExperimentKind::Clt => ExperimentReport::Clt(clt::run_clt_experiment(exp)?),
        ExperimentKind::Gof => ExperimentReport::Gof(gof::run_gof_study(exp)?),
        ExperimentKind::Rl => ExperimentReport::Rl(rl::run_rl_experiment(exp)?),
        ExperimentKind::SamplingEquivalence => {
            ExperimentReport::SamplingEquivalence(sampling::run_sampling_equivalence(exp)?)
        }
        ExperimentKind::NoClt => ExperimentReport::NoClt(noclt::run_no_clt_demo(exp)?),
        ExperimentKind::Optimal => ExperimentReport::Optimal(optimal::run_optimal_experiment(exp)?),
        ExperimentKind::Visitation => ExperimentReport::Visitation(visitation::run_visitation_experiment(exp)?),
    })
}

/// Loads a config file, resolving references against its directory.
pub fn run_config_file(path: &Path) -> Result<ExperimentReport> {
    let config = ExperimentConfig::from_file(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    run(&config.resolve(base)?)
}

pub(crate) fn require_kind(exp: &Experiment, kind: ExperimentKind) -> Result<()> {
    if exp.kind != kind {
        return Err(CmcError::Config(format!("experiment kind is {:?}, expected {kind:?}", exp.kind)));
    }
    Ok(())
}

/// Runs `f` for replications `offset..offset+count` in parallel and
/// returns results in replication order.
pub(crate) fn replicate<T: Send>(offset: u64, count: usize, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (offset..offset + count as u64).into_par_iter().map(&f).collect()
}

/// Empirical against theoretical covariance.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CovarianceComparison {
    pub empirical: Vec<Vec<f64>>,
    pub theoretical: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    /// `max |emp − Σ|`.
    pub max_deviation: f64,
    pub max_diagonal: f64,
    /// `max |emp − Σ| / sqrt(Σ_ii Σ_jj)` over entries with positive variances.
    pub max_scaled_deviation: f64,
}

impl CovarianceComparison {
    pub fn new(acc: &stats::MomentAccumulator, theoretical: Vec<Vec<f64>>) -> Self {
        let empirical = acc.second_moment();
        let max_deviation = stats::max_abs_diff(&empirical, &theoretical);
        let max_diagonal = (0..theoretical.len()).map(|i| theoretical[i][i]).fold(0.0, f64::max);
        let mut max_scaled_deviation: f64 = 0.0;
        for i in 0..theoretical.len() {
            for j in 0..theoretical.len() {
                let scale = (theoretical[i][i] * theoretical[j][j]).sqrt();
                if scale > 0.0 {
                    max_scaled_deviation = max_scaled_deviation.max((empirical[i][j] - theoretical[i][j]).abs() / scale);
                }
            }
        }
        CovarianceComparison { mean: acc.mean(), empirical, theoretical, max_deviation, max_diagonal, max_scaled_deviation }
    }
}

pub(crate) fn low_replication_warning(r: usize) -> Option<String> {
    (r < 30).then(|| format!("only {r} replications; moment estimates are unreliable and the covariance is degenerate"))
}
