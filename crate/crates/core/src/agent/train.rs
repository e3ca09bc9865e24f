use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::action::ActionSpace;
use super::env::SlicingEnv;
use super::policy::{actor_forward, critic_forward, PolicyParams};
use super::ppo::{ppo_update, LossParts, PpoConfig, PpoOptimizer, Step, Trajectory};
use super::AgentError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub iterations: usize,
    /// Control steps collected per iteration.
    pub horizon: usize,
    pub ppo: PpoConfig,
    pub seed: u64,
    /// Divide rewards by a running standard deviation of the discounted
    /// return before they reach the critic.
    pub scale_rewards: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 100,
            horizon: 40,
            ppo: PpoConfig::default(),
            seed: 0,
            scale_rewards: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub iteration: usize,
    pub mean_step_reward: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutput {
    pub params: PolicyParams,
    pub curve: Vec<CurvePoint>,
}

/// Welford variance of the running discounted return.
#[derive(Clone, Debug)]
struct ReturnScale {
    gamma: f64,
    ret: f64,
    count: f64,
    mean: f64,
    m2: f64,
}

impl ReturnScale {
    fn new(gamma: f64) -> Self {
        ReturnScale {
            gamma,
            ret: 0.0,
            count: 0.0,
            mean: 0.0,
            m2: 0.0,
        }
    }

    fn scale(&mut self, r: f64) -> f64 {
        self.ret = self.ret * self.gamma + r;
        self.count += 1.0;
        let d = self.ret - self.mean;
        self.mean += d / self.count;
        self.m2 += d * (self.ret - self.mean);
        let std = if self.count > 1.0 {
            (self.m2 / self.count).sqrt()
        } else {
            0.0
        };
        if std > 1e-8 {
            r / std
        } else {
            r
        }
    }

    fn end_episode(&mut self) {
        self.ret = 0.0;
    }
}

/// Alternates fixed-horizon rollouts with PPO updates.
pub fn train(env: &mut SlicingEnv, params: PolicyParams, cfg: &TrainConfig) -> Result<TrainOutput, AgentError> {
    cfg.ppo.validate()?;
    if cfg.iterations == 0 || cfg.horizon == 0 {
        return Err(AgentError::InvalidConfig("iterations and horizon must be positive".into()));
    }
    let space = ActionSpace::new(params.action_space);
    if space.len() != params.n_actions() {
        return Err(AgentError::InvalidConfig("policy head does not match its action space".into()));
    }
    let mut params = params;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut opt = PpoOptimizer::new(&params, cfg.ppo.lr);
    let mut scale = ReturnScale::new(cfg.ppo.gamma);
    let mut curve = Vec::with_capacity(cfg.iterations);
    let mut obs = env.reset()?;

    for iteration in 0..cfg.iterations {
        let mut trajs = Vec::new();
        let mut steps = Vec::with_capacity(cfg.horizon);
        let mut raw_sum = 0.0;
        for t in 0..cfg.horizon {
            let dist = actor_forward(&params, &obs.state);
            let (action, log_prob) = dist.sample(&mut rng);
            let value = critic_forward(&params, &obs.state);
            let out = env.step(&space.decode(action).expect("sampled index is in the catalog"))?;
            raw_sum += out.reward;
            let reward = if cfg.scale_rewards { scale.scale(out.reward) } else { out.reward };
            steps.push(Step {
                state: obs.state,
                action,
                reward,
                value,
                log_prob,
            });
            obs = out.observation;
            let cut = out.truncated || t + 1 == cfg.horizon;
            if cut {
                trajs.push(Trajectory {
                    steps: std::mem::take(&mut steps),
                    terminal: false,
                    bootstrap_value: critic_forward(&params, &obs.state),
                });
            }
            if out.truncated {
                scale.end_episode();
                obs = env.reset()?;
            }
        }
        let losses = ppo_update(&mut params, &mut opt, &trajs, &cfg.ppo, &mut rng)?;
        let last: LossParts = *losses.last().expect("at least one epoch");
        curve.push(CurvePoint {
            iteration,
            mean_step_reward: raw_sum / cfg.horizon as f64,
            policy_loss: last.policy,
            value_loss: last.value,
            entropy: last.entropy,
        });
    }
    Ok(TrainOutput { params, curve })
}

pub fn write_training_curve(path: &Path, curve: &[CurvePoint]) -> Result<(), AgentError> {
    let io = |e: csv::Error| AgentError::Io(path.display().to_string(), e.to_string());
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for p in curve {
        w.serialize(p).map_err(io)?;
    }
    w.flush()
        .map_err(|e| AgentError::Io(path.display().to_string(), e.to_string()))
}
