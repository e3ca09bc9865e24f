use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::agent::{ActionSpaceKind, EnvConfig, PpoConfig, RewardWeights, TrainConfig};
use crate::kpm::AutoencoderConfig;
use crate::sim::Scenario;

/// A built-in scenario by name, or a full inline definition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioRef {
    Named(String),
    Inline(Scenario),
}

impl Default for ScenarioRef {
    fn default() -> Self {
        ScenarioRef::Named("default".into())
    }
}

impl ScenarioRef {
    pub fn resolve(&self) -> Result<Scenario, BenchError> {
        let s = match self {
            ScenarioRef::Named(n) => Scenario::by_name(n)
                .ok_or_else(|| BenchError::InvalidConfig(format!("unknown scenario `{n}`")))?,
            ScenarioRef::Inline(s) => s.clone(),
        };
        s.validate().map_err(|e| BenchError::InvalidConfig(e.to_string()))?;
        Ok(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedWeights {
    Default,
    Alternative,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightSpec {
    Named(NamedWeights),
    Custom(RewardWeights),
}

impl WeightSpec {
    pub fn resolve(&self) -> Result<RewardWeights, BenchError> {
        let w = match self {
            WeightSpec::Named(NamedWeights::Default) => RewardWeights::DEFAULT,
            WeightSpec::Named(NamedWeights::Alternative) => RewardWeights::ALTERNATIVE,
            WeightSpec::Custom(w) => *w,
        };
        w.validate().map_err(|e| BenchError::InvalidConfig(e.to_string()))?;
        Ok(w)
    }

    pub fn label(&self) -> &'static str {
        match self {
            WeightSpec::Named(NamedWeights::Default) => "default",
            WeightSpec::Named(NamedWeights::Alternative) => "alternative",
            WeightSpec::Custom(_) => "custom",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Train,
    Evaluate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSpec {
    pub iterations: usize,
    pub horizon: usize,
    pub episode_steps: usize,
    pub seed: u64,
    pub lambda: f64,
    pub clip_eps: f64,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub lr: f64,
    pub scale_rewards: bool,
}

impl Default for TrainSpec {
    fn default() -> Self {
        let p = PpoConfig::default();
        let t = TrainConfig::default();
        TrainSpec {
            iterations: t.iterations,
            horizon: t.horizon,
            episode_steps: 200,
            seed: t.seed,
            lambda: p.lambda,
            clip_eps: p.clip_eps,
            epochs: p.epochs,
            minibatch_size: p.minibatch_size,
            value_coef: p.value_coef,
            entropy_coef: p.entropy_coef,
            lr: p.lr,
            scale_rewards: t.scale_rewards,
        }
    }
}

impl TrainSpec {
    pub fn to_train_config(&self, gamma: f64) -> TrainConfig {
        TrainConfig {
            iterations: self.iterations,
            horizon: self.horizon,
            seed: self.seed,
            scale_rewards: self.scale_rewards,
            ppo: PpoConfig {
                gamma,
                lambda: self.lambda,
                clip_eps: self.clip_eps,
                epochs: self.epochs,
                minibatch_size: self.minibatch_size,
                value_coef: self.value_coef,
                entropy_coef: self.entropy_coef,
                lr: self.lr,
            },
        }
    }
}

/// How to obtain the state encoder: an existing file, or a fit on simulated
/// windows from the experiment's scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderSpec {
    pub path: Option<PathBuf>,
    pub windows_per_slice: usize,
    pub sample_interval: u64,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for EncoderSpec {
    fn default() -> Self {
        let a = AutoencoderConfig::default();
        EncoderSpec {
            path: None,
            windows_per_slice: 400,
            sample_interval: 100,
            epochs: 20,
            lr: a.lr,
            batch_size: a.batch_size,
            seed: a.seed,
        }
    }
}

impl EncoderSpec {
    pub fn autoencoder_config(&self) -> AutoencoderConfig {
        AutoencoderConfig {
            epochs: self.epochs,
            lr: self.lr,
            batch_size: self.batch_size,
            seed: self.seed,
        }
    }
}

/// Two trained single-parameter policies run side by side at the periods
/// of a hierarchical setup.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HierarchicalSpec {
    pub setup: u8,
    pub slicing_checkpoint: PathBuf,
    pub scheduling_checkpoint: PathBuf,
}

fn default_duration() -> u64 {
    600
}

fn default_period() -> u64 {
    1000
}

fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub scenario: ScenarioRef,
    pub action_space: ActionSpaceKind,
    pub gamma: f64,
    pub weights: WeightSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hierarchical: Option<HierarchicalSpec>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Simulated evaluation time per seed.
    #[serde(default = "default_duration")]
    pub duration_s: u64,
    /// Reporting and control period of the xApp.
    #[serde(default = "default_period")]
    pub period_ms: u64,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub train: TrainSpec,
    #[serde(default)]
    pub encoder: EncoderSpec,
    /// Policy to evaluate; defaults to the run directory's `policy.json`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = fs::read_to_string(path).map_err(|e| BenchError::Io(path.display().to_string(), e.to_string()))?;
        let c: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| BenchError::InvalidConfig(format!("{}: {e}", path.display())))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::InvalidConfig(m));
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad(format!("`{}` is not a usable run name", self.name));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma {} outside [0, 1]", self.gamma));
        }
        if self.seeds.is_empty() {
            return bad("at least one evaluation seed is required".into());
        }
        if self.duration_s == 0 {
            return bad("duration_s must be positive".into());
        }
        if self.period_ms == 0 || !self.period_ms.is_multiple_of(10) {
            return bad(format!("period {} ms must be a positive multiple of 10", self.period_ms));
        }
        if let Some(h) = &self.hierarchical {
            if self.action_space == ActionSpaceKind::Joint {
                return bad("hierarchical control composes single-parameter agents; joint is not allowed".into());
            }
            if self.mode == Mode::Train {
                return bad("hierarchical runs compose trained checkpoints and only evaluate".into());
            }
            crate::ric::HierarchicalSetup::from_id(h.setup).map_err(|e| BenchError::InvalidConfig(e.to_string()))?;
        }
        self.scenario.resolve()?;
        self.weights.resolve()?;
        self.train
            .to_train_config(self.gamma)
            .ppo
            .validate()
            .map_err(|e| BenchError::InvalidConfig(e.to_string()))?;
        Ok(())
    }

    pub fn env_config(&self) -> Result<EnvConfig, BenchError> {
        Ok(EnvConfig {
            scenario: self.scenario.resolve()?,
            period_ms: self.period_ms,
            weights: self.weights.resolve()?,
            episode_steps: self.train.episode_steps,
        })
    }

    /// The same experiment with scenario and weights spelled out.
    pub fn resolved(&self) -> Result<Self, BenchError> {
        let mut c = self.clone();
        c.scenario = ScenarioRef::Inline(self.scenario.resolve()?);
        c.weights = WeightSpec::Custom(self.weights.resolve()?);
        Ok(c)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixHierarchical {
    pub setup: u8,
    /// Run names of the matrix entries to compose.
    pub slicing: String,
    pub scheduling: String,
}

/// The cartesian product of action spaces, discount factors and weight
/// configurations, plus optional hierarchical compositions of its entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixConfig {
    pub name: String,
    #[serde(default)]
    pub scenario: ScenarioRef,
    pub action_spaces: Vec<ActionSpaceKind>,
    pub gammas: Vec<f64>,
    pub weights: Vec<WeightSpec>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_duration")]
    pub duration_s: u64,
    #[serde(default = "default_period")]
    pub period_ms: u64,
    #[serde(default)]
    pub train: TrainSpec,
    #[serde(default)]
    pub encoder: EncoderSpec,
    #[serde(default)]
    pub hierarchical: Vec<MatrixHierarchical>,
    /// Run names reported side by side in `design_options.csv`.
    #[serde(default)]
    pub design_options: Vec<String>,
}

pub fn run_name(space: ActionSpaceKind, gamma: f64, weights: &WeightSpec) -> String {
    format!("{}-{}-{}", space.as_str(), gamma, weights.label())
}

pub fn hierarchical_name(setup: u8) -> String {
    format!("hierarchical-{setup}")
}

impl MatrixConfig {
    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = fs::read_to_string(path).map_err(|e| BenchError::Io(path.display().to_string(), e.to_string()))?;
        let m: MatrixConfig =
            serde_json::from_str(&text).map_err(|e| BenchError::InvalidConfig(format!("{}: {e}", path.display())))?;
        m.validate()?;
        Ok(m)
    }

    pub fn experiments(&self) -> Vec<ExperimentConfig> {
        let mut out = Vec::new();
        for &space in &self.action_spaces {
            for &gamma in &self.gammas {
                for w in &self.weights {
                    out.push(ExperimentConfig {
                        name: run_name(space, gamma, w),
                        scenario: self.scenario.clone(),
                        action_space: space,
                        gamma,
                        weights: *w,
                        hierarchical: None,
                        seeds: self.seeds.clone(),
                        duration_s: self.duration_s,
                        period_ms: self.period_ms,
                        mode: Mode::Train,
                        train: self.train,
                        encoder: self.encoder.clone(),
                        checkpoint: None,
                    });
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let exps = self.experiments();
        if exps.is_empty() {
            return Err(BenchError::InvalidConfig("the matrix is empty".into()));
        }
        let mut names: Vec<&str> = exps.iter().map(|e| e.name.as_str()).collect();
        names.sort();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(BenchError::InvalidConfig("matrix run names collide".into()));
        }
        for e in &exps {
            e.validate()?;
        }
        for h in &self.hierarchical {
            crate::ric::HierarchicalSetup::from_id(h.setup).map_err(|e| BenchError::InvalidConfig(e.to_string()))?;
            for (name, want) in [(&h.slicing, ActionSpaceKind::SlicingOnly), (&h.scheduling, ActionSpaceKind::SchedulingOnly)] {
                match exps.iter().find(|e| &e.name == name) {
                    Some(e) if e.action_space == want => {}
                    Some(_) => {
                        return Err(BenchError::InvalidConfig(format!(
                            "hierarchical setup {} needs a {} run, `{name}` is not",
                            h.setup,
                            want.as_str()
                        )))
                    }
                    None => return Err(BenchError::InvalidConfig(format!("unknown run `{name}`"))),
                }
            }
        }
        for o in &self.design_options {
            let known = names.contains(&o.as_str())
                || self.hierarchical.iter().any(|h| &hierarchical_name(h.setup) == o);
            if !known {
                return Err(BenchError::InvalidConfig(format!("design option `{o}` is not a run")));
            }
        }
        Ok(())
    }
}
