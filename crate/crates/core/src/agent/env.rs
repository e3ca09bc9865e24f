use super::action::ControlAction;
use super::reward::{step_reward, RewardWeights};
use super::AgentError;
use crate::kpm::{encode_state, EncoderParams, KpmCollector, KpmSample, KpmWindow};
use crate::sim::{BsState, Scenario};

#[derive(Clone, Debug, PartialEq)]
pub struct EnvConfig {
    pub scenario: Scenario,
    /// Control interval, equal to the KPM reporting period.
    pub period_ms: u64,
    pub weights: RewardWeights,
    /// Control steps before the cell is restarted with a fresh seed.
    pub episode_steps: usize,
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        if self.period_ms == 0 || !self.period_ms.is_multiple_of(10) {
            return Err(AgentError::InvalidConfig(format!(
                "period {} ms must be a positive multiple of 10",
                self.period_ms
            )));
        }
        if self.episode_steps == 0 {
            return Err(AgentError::InvalidConfig("episode_steps must be positive".into()));
        }
        self.weights.validate()?;
        self.scenario.validate()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub windows: [KpmWindow; 3],
    pub state: [f64; 9],
    /// Window-mean KPMs, the quantities the reward is computed from.
    pub kpms: [KpmSample; 3],
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    /// The episode ran out; call [`SlicingEnv::reset`] before stepping again.
    pub truncated: bool,
}

/// Closed loop of simulator, KPM windows and state encoder, one control
/// step per reporting period.
#[derive(Clone, Debug)]
pub struct SlicingEnv {
    cfg: EnvConfig,
    encoder: EncoderParams,
    seed: u64,
    episode: u64,
    steps: usize,
    bs: BsState,
    collector: KpmCollector,
}

impl SlicingEnv {
    pub fn new(cfg: EnvConfig, encoder: EncoderParams, seed: u64) -> Result<Self, AgentError> {
        cfg.validate()?;
        let bs = BsState::new(&cfg.scenario, seed)?;
        let collector = KpmCollector::new(&bs, cfg.period_ms / 10);
        Ok(SlicingEnv {
            cfg,
            encoder,
            seed,
            episode: 0,
            steps: 0,
            bs,
            collector,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn bs(&self) -> &BsState {
        &self.bs
    }

    pub fn episode(&self) -> u64 {
        self.episode
    }

    /// Restarts the cell with the next episode seed and observes one period
    /// under the scenario's initial controls.
    pub fn reset(&mut self) -> Result<Observation, AgentError> {
        let seed = self
            .seed
            .wrapping_add(self.episode.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        self.episode += 1;
        self.steps = 0;
        self.bs = BsState::new(&self.cfg.scenario, seed)?;
        self.collector = KpmCollector::new(&self.bs, self.cfg.period_ms / 10);
        self.advance()
    }

    pub fn step(&mut self, action: &ControlAction) -> Result<StepResult, AgentError> {
        self.bs.apply_control(action.partition, action.assignment)?;
        let observation = self.advance()?;
        self.steps += 1;
        let reward = step_reward(&observation.kpms, &self.cfg.weights);
        Ok(StepResult {
            observation,
            reward,
            truncated: self.steps >= self.cfg.episode_steps,
        })
    }

    fn advance(&mut self) -> Result<Observation, AgentError> {
        loop {
            self.bs.serve_tti();
            if let Some(windows) = self.collector.on_tti(&self.bs)? {
                let tti = self.bs.tti_counter;
                let state = encode_state(&windows, &self.encoder)?;
                let kpms = [0, 1, 2].map(|i| windows[i].mean_sample(tti));
                return Ok(Observation {
                    windows,
                    state,
                    kpms,
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::PrbPartition;

    fn env(seed: u64) -> SlicingEnv {
        let cfg = EnvConfig {
            scenario: Scenario::paper_default(),
            period_ms: 1000,
            weights: RewardWeights::DEFAULT,
            episode_steps: 3,
        };
        SlicingEnv::new(cfg, EncoderParams::random(1), seed).unwrap()
    }

    #[test]
    fn one_step_is_one_period() {
        let mut e = env(4);
        e.reset().unwrap();
        assert_eq!(e.bs().tti_counter, 1000);
        let a = ControlAction {
            partition: Some(PrbPartition::new(30, 15, 5).unwrap()),
            assignment: None,
        };
        let r = e.step(&a).unwrap();
        assert_eq!(e.bs().tti_counter, 2000);
        assert_eq!(e.bs().partition().shares(), [30, 15, 5]);
        assert!(r.reward.is_finite());
        assert!(!r.truncated);
        e.step(&a).unwrap();
        assert!(e.step(&a).unwrap().truncated);
    }

    #[test]
    fn identical_seeds_identical_observations() {
        let mut a = env(9);
        let mut b = env(9);
        assert_eq!(a.reset().unwrap(), b.reset().unwrap());
        let act = ControlAction {
            partition: None,
            assignment: Some(crate::sim::SchedulerAssignment::catalog()[5]),
        };
        assert_eq!(a.step(&act).unwrap(), b.step(&act).unwrap());
    }

    #[test]
    fn invalid_period_is_rejected() {
        let cfg = EnvConfig {
            scenario: Scenario::paper_default(),
            period_ms: 15,
            weights: RewardWeights::DEFAULT,
            episode_steps: 3,
        };
        assert!(SlicingEnv::new(cfg, EncoderParams::random(1), 0).is_err());
    }
}
