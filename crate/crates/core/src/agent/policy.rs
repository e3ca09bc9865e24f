use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::action::{ActionSpace, ActionSpaceKind};
use crate::nn::{Activation, Mlp};

pub const STATE_DIM: usize = 9;
pub const HIDDEN: [usize; 3] = [30, 30, 30];
pub const LEARNING_RATE: f64 = 1e-3;

fn sizes(out: usize) -> [usize; 5] {
    [STATE_DIM, HIDDEN[0], HIDDEN[1], HIDDEN[2], out]
}

/// Actor and critic networks sharing a trunk shape but not weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub action_space: ActionSpaceKind,
    pub actor: Mlp,
    pub critic: Mlp,
}

impl PolicyParams {
    /// Hidden layers use the default uniform init. The actor head starts
    /// near-uniform and the critic head at zero.
    pub fn new(kind: ActionSpaceKind, seed: u64) -> Self {
        let n = ActionSpace::new(kind).len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut actor = Mlp::new(&sizes(n), Activation::Tanh, Activation::Identity, &mut rng);
        let mut critic = Mlp::new(&sizes(1), Activation::Tanh, Activation::Identity, &mut rng);
        if let Some(head) = actor.layers_mut().last_mut() {
            head.weight.mapv_inplace(|w| w * 0.01);
            head.bias.fill(0.0);
        }
        if let Some(head) = critic.layers_mut().last_mut() {
            head.weight.fill(0.0);
            head.bias.fill(0.0);
        }
        PolicyParams {
            action_space: kind,
            actor,
            critic,
        }
    }

    pub fn zeros(kind: ActionSpaceKind) -> Self {
        let n = ActionSpace::new(kind).len();
        PolicyParams {
            action_space: kind,
            actor: Mlp::zeros(&sizes(n), Activation::Tanh, Activation::Identity),
            critic: Mlp::zeros(&sizes(1), Activation::Tanh, Activation::Identity),
        }
    }

    pub fn n_actions(&self) -> usize {
        self.actor.output_width()
    }

    /// Shape and finiteness check, used after loading from disk.
    pub fn check(&self) -> Result<(), String> {
        let n = ActionSpace::new(self.action_space).len();
        if self.actor.sizes() != sizes(n) {
            return Err(format!(
                "actor widths {:?}, expected {:?}",
                self.actor.sizes(),
                sizes(n)
            ));
        }
        if self.critic.sizes() != sizes(1) {
            return Err(format!(
                "critic widths {:?}, expected {:?}",
                self.critic.sizes(),
                sizes(1)
            ));
        }
        if !self.actor.is_finite() || !self.critic.is_finite() {
            return Err("non-finite policy parameters".into());
        }
        Ok(())
    }
}

/// Softmax distribution over catalog indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Categorical {
    log_probs: Vec<f64>,
}

impl Categorical {
    pub fn from_logits(logits: &[f64]) -> Self {
        assert!(!logits.is_empty());
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
        Categorical {
            log_probs: logits.iter().map(|z| z - lse).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.log_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_probs.is_empty()
    }

    pub fn probs(&self) -> Vec<f64> {
        self.log_probs.iter().map(|l| l.exp()).collect()
    }

    pub fn log_prob(&self, index: usize) -> f64 {
        self.log_probs[index]
    }

    pub fn entropy(&self) -> f64 {
        -self
            .log_probs
            .iter()
            .map(|&l| if l == f64::NEG_INFINITY { 0.0 } else { l.exp() * l })
            .sum::<f64>()
    }

    /// Inverse-CDF draw; returns the index and its log-probability.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, f64) {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (i, &l) in self.log_probs.iter().enumerate() {
            let p = l.exp();
            if p > 0.0 {
                last_positive = i;
            }
            acc += p;
            if u < acc {
                return (i, l);
            }
        }
        (last_positive, self.log_probs[last_positive])
    }

    /// Most likely index, lowest index on ties.
    pub fn argmax(&self) -> (usize, f64) {
        let mut best = 0;
        for (i, &l) in self.log_probs.iter().enumerate() {
            if l > self.log_probs[best] {
                best = i;
            }
        }
        (best, self.log_probs[best])
    }
}

pub fn actor_forward(params: &PolicyParams, state: &[f64]) -> Categorical {
    Categorical::from_logits(&params.actor.forward_one(state))
}

pub fn critic_forward(params: &PolicyParams, state: &[f64]) -> f64 {
    params.critic.forward_one(state)[0]
}

pub fn sample_action<R: Rng + ?Sized>(dist: &Categorical, rng: &mut R) -> (usize, f64) {
    dist.sample(rng)
}

pub(crate) fn states_matrix(states: &[[f64; STATE_DIM]]) -> Array2<f64> {
    Array2::from_shape_fn((states.len(), STATE_DIM), |(i, j)| states[i][j])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_params_give_a_simplex() {
        for kind in ActionSpaceKind::ALL {
            let p = PolicyParams::new(kind, 3);
            p.check().unwrap();
            let d = actor_forward(&p, &[0.3, -1.0, 2.0, 0.0, 0.5, 0.1, -0.2, 0.7, 1.1]);
            assert_eq!(d.len(), ActionSpace::new(kind).len());
            let probs = d.probs();
            assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(probs.iter().all(|&x| x > 0.0));
            assert!(critic_forward(&p, &[0.0; 9]).is_finite());
        }
    }

    #[test]
    fn zero_params_are_uniform() {
        let p = PolicyParams::zeros(ActionSpaceKind::SchedulingOnly);
        let d = actor_forward(&p, &[1.0; 9]);
        assert_eq!(d.len(), 27);
        for x in d.probs() {
            assert!((x - 1.0 / 27.0).abs() < 1e-12);
        }
        assert!((d.entropy() - 27f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn one_hot_sampling() {
        let d = Categorical::from_logits(&[f64::NEG_INFINITY, 0.0, f64::NEG_INFINITY]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(d.sample(&mut rng), (1, 0.0));
        }
        assert_eq!(d.argmax(), (1, 0.0));
        assert_eq!(d.entropy(), 0.0);
    }

    #[test]
    fn uniform_sampling_frequencies() {
        let d = Categorical::from_logits(&[0.0; 27]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let mut counts = [0usize; 27];
        for _ in 0..n {
            let (i, lp) = d.sample(&mut rng);
            assert!((lp + 27f64.ln()).abs() < 1e-12);
            counts[i] += 1;
        }
        let p = 1.0 / 27.0;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * p).abs() <= 3.0 * sigma + 1.0, "count {c}");
        }
    }

    #[test]
    fn argmax_ignores_rng_and_prefers_lowest_index() {
        let d = Categorical::from_logits(&[0.5, 2.0, 2.0, -1.0]);
        assert_eq!(d.argmax().0, 1);
    }
}
