//! Small fully-connected networks with hand-written backpropagation and Adam.
//!
//! Batches are row-major: one sample per row.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation.
    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = pre.tanh();
                1.0 - t * t
            }
        }
    }
}

/// Affine layer, `y = x W + b` with `W` shaped (inputs, outputs).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<Dense>,
    hidden: Activation,
    output: Activation,
}

/// Intermediate values kept by [`Mlp::forward_trace`] for the backward pass.
#[derive(Clone, Debug)]
pub struct Trace {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grads {
    pub layers: Vec<(Array2<f64>, Array1<f64>)>,
}

impl Mlp {
    /// Weights and biases uniform in `±sqrt(1/fan_in)`.
    pub fn new<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut R,
    ) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs at least input and output widths");
        let layers = sizes
            .windows(2)
            .map(|w| {
                let bound = (1.0 / w[0] as f64).sqrt();
                Dense {
                    weight: Array2::from_shape_simple_fn((w[0], w[1]), || {
                        rng.random_range(-bound..=bound)
                    }),
                    bias: Array1::from_shape_simple_fn(w[1], || rng.random_range(-bound..=bound)),
                }
            })
            .collect();
        Mlp {
            layers,
            hidden,
            output,
        }
    }

    pub fn zeros(sizes: &[usize], hidden: Activation, output: Activation) -> Self {
        let layers = sizes
            .windows(2)
            .map(|w| Dense {
                weight: Array2::zeros((w[0], w[1])),
                bias: Array1::zeros(w[1]),
            })
            .collect();
        Mlp {
            layers,
            hidden,
            output,
        }
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].weight.nrows()];
        s.extend(self.layers.iter().map(|l| l.weight.ncols()));
        s
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].weight.nrows()
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map(|l| l.weight.ncols()).unwrap_or(0)
    }

    pub fn activations(&self) -> (Activation, Activation) {
        (self.hidden, self.output)
    }

    fn activation_of(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers.len() {
            self.output
        } else {
            self.hidden
        }
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut h = x.to_owned();
        for (l, layer) in self.layers.iter().enumerate() {
            let act = self.activation_of(l);
            let mut z = h.dot(&layer.weight) + &layer.bias;
            z.mapv_inplace(|v| act.apply(v));
            h = z;
        }
        h
    }

    pub fn forward_one(&self, x: &[f64]) -> Vec<f64> {
        let input = ArrayView2::from_shape((1, x.len()), x).expect("contiguous input");
        self.forward(input).into_raw_vec_and_offset().0
    }

    pub fn forward_trace(&self, x: ArrayView2<f64>) -> (Array2<f64>, Trace) {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut h = x.to_owned();
        for (l, layer) in self.layers.iter().enumerate() {
            let act = self.activation_of(l);
            let z = h.dot(&layer.weight) + &layer.bias;
            let out = z.mapv(|v| act.apply(v));
            inputs.push(h);
            pre.push(z);
            h = out;
        }
        (h, Trace { inputs, pre })
    }

    /// Parameter gradients given dLoss/dOutput for the traced batch.
    pub fn backward(&self, trace: &Trace, grad_out: ArrayView2<f64>) -> Grads {
        self.backward_full(trace, grad_out).0
    }

    /// Parameter gradients plus dLoss/dInput.
    pub fn backward_full(&self, trace: &Trace, grad_out: ArrayView2<f64>) -> (Grads, Array2<f64>) {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut g = grad_out.to_owned();
        for l in (0..self.layers.len()).rev() {
            let act = self.activation_of(l);
            Zip::from(&mut g)
                .and(&trace.pre[l])
                .for_each(|gi, &z| *gi *= act.derivative(z));
            let dw = trace.inputs[l].t().dot(&g);
            let db = g.sum_axis(Axis(0));
            g = g.dot(&self.layers[l].weight.t());
            grads.push((dw, db));
        }
        grads.reverse();
        (Grads { layers: grads }, g)
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend(l.weight.iter().copied());
            out.extend(l.bias.iter().copied());
        }
        out
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count());
        let mut it = flat.iter().copied();
        for l in &mut self.layers {
            for w in l.weight.iter_mut() {
                *w = it.next().unwrap();
            }
            for b in l.bias.iter_mut() {
                *b = it.next().unwrap();
            }
        }
    }

    /// The parameter at `index` in [`params_flat`](Self::params_flat) order.
    pub fn param_mut(&mut self, mut index: usize) -> &mut f64 {
        for l in &mut self.layers {
            let nw = l.weight.len();
            if index < nw {
                let cols = l.weight.ncols();
                return &mut l.weight[[index / cols, index % cols]];
            }
            index -= nw;
            if index < l.bias.len() {
                return &mut l.bias[index];
            }
            index -= l.bias.len();
        }
        panic!("parameter index out of range");
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }
}

impl Grads {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        Grads {
            layers: mlp
                .layers
                .iter()
                .map(|l| (Array2::zeros(l.weight.raw_dim()), Array1::zeros(l.bias.len())))
                .collect(),
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in &self.layers {
            out.extend(w.iter().copied());
            out.extend(b.iter().copied());
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.layers
            .iter()
            .map(|(w, b)| w.iter().chain(b.iter()).map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, k: f64) {
        for (w, b) in &mut self.layers {
            w.mapv_inplace(|v| v * k);
            b.mapv_inplace(|v| v * k);
        }
    }
}

/// Adam with the usual bias correction.
#[derive(Clone, Debug)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    m: Grads,
    v: Grads,
}

impl Adam {
    pub fn new(mlp: &Mlp, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: Grads::zeros_like(mlp),
            v: Grads::zeros_like(mlp),
        }
    }

    /// One descent step along `grads`.
    pub fn step(&mut self, mlp: &mut Mlp, grads: &Grads) {
        self.t += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        let (lr, eps) = (self.lr, self.eps);
        let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        };
        for (l, layer) in mlp.layers.iter_mut().enumerate() {
            let (gw, gb) = &grads.layers[l];
            let (mw, mb) = &mut self.m.layers[l];
            let (vw, vb) = &mut self.v.layers[l];
            Zip::from(&mut layer.weight)
                .and(mw)
                .and(vw)
                .and(gw)
                .for_each(|p, m, v, &g| update(p, m, v, g));
            Zip::from(&mut layer.bias)
                .and(mb)
                .and(vb)
                .and(gb)
                .for_each(|p, m, v, &g| update(p, m, v, g));
        }
    }
}

/// Largest per-parameter relative error between `analytic` and central
/// differences of `loss` around `params`. Magnitudes below `1e-6` are
/// compared absolutely.
pub fn finite_difference_error(
    params: &[f64],
    analytic: &[f64],
    h: f64,
    loss: impl FnMut(&[f64]) -> f64,
) -> f64 {
    let all: Vec<usize> = (0..params.len()).collect();
    finite_difference_error_at(params, analytic, &all, h, loss)
}

/// [`finite_difference_error`] restricted to the parameters at `indices`.
pub fn finite_difference_error_at(
    params: &[f64],
    analytic: &[f64],
    indices: &[usize],
    h: f64,
    mut loss: impl FnMut(&[f64]) -> f64,
) -> f64 {
    assert_eq!(params.len(), analytic.len());
    let mut p = params.to_vec();
    finite_difference_error_by(analytic, indices.iter().copied(), h, |i, delta| {
        let orig = p[i];
        p[i] = orig + delta;
        let l = loss(&p);
        p[i] = orig;
        l
    })
}

/// Central-difference check driven by `shifted_loss(i, delta)`, the loss with
/// parameter `i` moved by `delta` and everything else untouched.
pub fn finite_difference_error_by(
    analytic: &[f64],
    indices: impl IntoIterator<Item = usize>,
    h: f64,
    mut shifted_loss: impl FnMut(usize, f64) -> f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    for i in indices {
        let fd = (shifted_loss(i, h) - shifted_loss(i, -h)) / (2.0 * h);
        let denom = fd.abs().max(analytic[i].abs()).max(1e-6);
        worst = worst.max((fd - analytic[i]).abs() / denom);
    }
    worst
}

/// Loss of `mlp` with parameter `index` moved by `delta`, restored afterwards.
pub fn shifted(mlp: &mut Mlp, index: usize, delta: f64, loss: impl FnOnce(&Mlp) -> f64) -> f64 {
    let orig = *mlp.param_mut(index);
    *mlp.param_mut(index) = orig + delta;
    let l = loss(mlp);
    *mlp.param_mut(index) = orig;
    l
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Sum of squares of the output, so dL/dy = 2y.
    fn loss(mlp: &Mlp, x: ArrayView2<f64>) -> f64 {
        mlp.forward(x).iter().map(|v| v * v).sum()
    }

    #[test]
    fn backward_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (hidden, output) in [
            (Activation::Tanh, Activation::Identity),
            (Activation::Relu, Activation::Identity),
            (Activation::Tanh, Activation::Tanh),
        ] {
            let mlp = Mlp::new(&[4, 6, 5, 2], hidden, output, &mut rng);
            let x = Array2::from_shape_simple_fn((3, 4), || rng.random_range(-1.0..1.0));
            let (y, trace) = mlp.forward_trace(x.view());
            let g = mlp.backward(&trace, (2.0 * &y).view()).flat();
            let err = finite_difference_error(&mlp.params_flat(), &g, 1e-6, |p| {
                let mut m = mlp.clone();
                m.set_params_flat(p);
                loss(&m, x.view())
            });
            assert!(err < 1e-4, "relative error {err}");
        }
    }

    #[test]
    fn zero_network_outputs_zero() {
        let mlp = Mlp::zeros(&[3, 4, 2], Activation::Relu, Activation::Identity);
        assert_eq!(mlp.forward(array![[1.0, 2.0, 3.0]].view()), array![[0.0, 0.0]]);
    }

    #[test]
    fn adam_with_zero_lr_is_a_no_op() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut mlp = Mlp::new(&[2, 3, 1], Activation::Tanh, Activation::Identity, &mut rng);
        let before = mlp.clone();
        let mut opt = Adam::new(&mlp, 0.0);
        let (y, trace) = mlp.forward_trace(array![[0.3, -0.2]].view());
        let g = mlp.backward(&trace, y.view());
        opt.step(&mut mlp, &g);
        assert_eq!(mlp, before);
    }

    #[test]
    fn param_mut_follows_flat_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut mlp = Mlp::new(&[3, 4, 2], Activation::Tanh, Activation::Identity, &mut rng);
        let flat = mlp.params_flat();
        for (i, v) in flat.iter().enumerate() {
            assert_eq!(*mlp.param_mut(i), *v);
        }
    }

    #[test]
    fn flat_params_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut mlp = Mlp::new(&[3, 5, 2], Activation::Tanh, Activation::Identity, &mut rng);
        let p = mlp.params_flat();
        assert_eq!(p.len(), mlp.param_count());
        let doubled: Vec<f64> = p.iter().map(|v| v * 2.0).collect();
        mlp.set_params_flat(&doubled);
        assert_eq!(mlp.params_flat(), doubled);
        assert_eq!(mlp.sizes(), vec![3, 5, 2]);
    }
}
