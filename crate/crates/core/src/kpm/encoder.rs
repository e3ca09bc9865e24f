//! Autoencoder that compresses a 10x3 KPM window into a 3-vector.
//!
//! Only the encoder half and the min/max normalization survive training; the
//! mirrored decoder exists just to define the reconstruction loss.

use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sample::{METRICS, WINDOW_LEN};
use super::window::KpmWindow;
use super::KpmError;
use crate::nn::{finite_difference_error_by, shifted, Activation, Adam, Grads, Mlp};

pub const INPUT_WIDTH: usize = WINDOW_LEN * METRICS;
pub const CODE_WIDTH: usize = METRICS;
pub const ENCODER_SIZES: [usize; 5] = [INPUT_WIDTH, 256, 128, 32, CODE_WIDTH];
pub const DECODER_SIZES: [usize; 5] = [CODE_WIDTH, 32, 128, 256, INPUT_WIDTH];

pub const ENCODER_FORMAT: &str = "slicelab-encoder";
pub const ENCODER_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinMax {
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    pub format: String,
    pub version: u32,
    /// Per metric column: throughput, buffer, packets.
    pub normalization: [MinMax; METRICS],
    pub net: Mlp,
}

impl EncoderParams {
    pub fn new(net: Mlp, normalization: [MinMax; METRICS]) -> Result<Self, KpmError> {
        let sizes = net.sizes();
        if sizes.first() != Some(&INPUT_WIDTH) || sizes.last() != Some(&CODE_WIDTH) {
            return Err(KpmError::Format(format!(
                "encoder must map {INPUT_WIDTH} inputs to {CODE_WIDTH} outputs, got {sizes:?}"
            )));
        }
        Ok(EncoderParams {
            format: ENCODER_FORMAT.into(),
            version: ENCODER_VERSION,
            normalization,
            net,
        })
    }

    /// Randomly initialised encoder with unit ranges; mostly for tests.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = Mlp::new(&ENCODER_SIZES, Activation::Relu, Activation::Identity, &mut rng);
        Self::new(net, [MinMax { min: 0.0, max: 1.0 }; METRICS]).unwrap()
    }

    pub fn load(path: &Path) -> Result<Self, KpmError> {
        let text = fs::read_to_string(path).map_err(|e| KpmError::Io(path.display().to_string(), e))?;
        let p: EncoderParams = serde_json::from_str(&text)
            .map_err(|e| KpmError::Format(format!("{}: {e}", path.display())))?;
        p.check()?;
        Ok(p)
    }

    pub fn save(&self, path: &Path) -> Result<(), KpmError> {
        let text = serde_json::to_string_pretty(self).expect("encoder serializes");
        fs::write(path, text).map_err(|e| KpmError::Io(path.display().to_string(), e))
    }

    fn check(&self) -> Result<(), KpmError> {
        if self.format != ENCODER_FORMAT || self.version != ENCODER_VERSION {
            return Err(KpmError::Format(format!(
                "unsupported encoder file {} v{}",
                self.format, self.version
            )));
        }
        if self.net.sizes() != ENCODER_SIZES {
            return Err(KpmError::Format(format!(
                "encoder layer widths {:?}, expected {:?}",
                self.net.sizes(),
                ENCODER_SIZES
            )));
        }
        if !self.net.is_finite() {
            return Err(KpmError::Format("non-finite encoder parameters".into()));
        }
        Ok(())
    }
}

/// Min-max scales each column into [0, 1], clamping values outside the
/// training range.
pub fn normalize(
    window: &KpmWindow,
    params: &EncoderParams,
) -> Result<[[f64; METRICS]; WINDOW_LEN], KpmError> {
    normalize_rows(&window.rows, &params.normalization)
}

fn normalize_rows(
    rows: &[[f64; METRICS]; WINDOW_LEN],
    norm: &[MinMax; METRICS],
) -> Result<[[f64; METRICS]; WINDOW_LEN], KpmError> {
    for (col, mm) in norm.iter().enumerate() {
        if mm.max.is_nan() || mm.min.is_nan() || mm.max <= mm.min {
            return Err(KpmError::DegenerateRange { column: col });
        }
    }
    let mut out = [[0.0; METRICS]; WINDOW_LEN];
    for (o, r) in out.iter_mut().zip(rows) {
        for c in 0..METRICS {
            let mm = norm[c];
            o[c] = ((r[c] - mm.min) / (mm.max - mm.min)).clamp(0.0, 1.0);
        }
    }
    Ok(out)
}

fn flat_row(rows: &[[f64; METRICS]; WINDOW_LEN]) -> [f64; INPUT_WIDTH] {
    let mut out = [0.0; INPUT_WIDTH];
    for (i, r) in rows.iter().enumerate() {
        out[i * METRICS..(i + 1) * METRICS].copy_from_slice(r);
    }
    out
}

/// The 3-dimensional code of one window.
pub fn encode(window: &KpmWindow, params: &EncoderParams) -> Result<[f64; CODE_WIDTH], KpmError> {
    let x = flat_row(&normalize(window, params)?);
    let y = params.net.forward_one(&x);
    Ok([y[0], y[1], y[2]])
}

/// Concatenated codes of the eMBB, mMTC and URLLC windows.
pub fn encode_state(
    windows: &[KpmWindow; 3],
    params: &EncoderParams,
) -> Result<[f64; 3 * CODE_WIDTH], KpmError> {
    let mut out = [0.0; 3 * CODE_WIDTH];
    for (i, w) in windows.iter().enumerate() {
        out[i * CODE_WIDTH..(i + 1) * CODE_WIDTH].copy_from_slice(&encode(w, params)?);
    }
    Ok(out)
}

fn decoder_loss(encoder: &Mlp, decoder: &Mlp, x: ArrayView2<f64>) -> f64 {
    let y = decoder.forward(encoder.forward(x).view());
    (&y - &x).mapv(|d| d * d).mean().unwrap_or(0.0)
}

/// Encoder plus mirrored decoder.
#[derive(Clone, Debug, PartialEq)]
pub struct Autoencoder {
    pub encoder: Mlp,
    pub decoder: Mlp,
}

impl Autoencoder {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Autoencoder {
            encoder: Mlp::new(&ENCODER_SIZES, Activation::Relu, Activation::Identity, &mut rng),
            decoder: Mlp::new(&DECODER_SIZES, Activation::Relu, Activation::Identity, &mut rng),
        }
    }

    pub fn reconstruct(&self, x: ArrayView2<f64>) -> Array2<f64> {
        self.decoder.forward(self.encoder.forward(x).view())
    }

    /// Mean squared reconstruction error over every element of the batch.
    pub fn loss(&self, x: ArrayView2<f64>) -> f64 {
        decoder_loss(&self.encoder, &self.decoder, x)
    }

    pub fn loss_and_grads(&self, x: ArrayView2<f64>) -> (f64, Grads, Grads) {
        let (code, enc_trace) = self.encoder.forward_trace(x);
        let (y, dec_trace) = self.decoder.forward_trace(code.view());
        let diff = &y - &x;
        let n = diff.len() as f64;
        let loss = diff.mapv(|d| d * d).sum() / n;
        let grad_y = diff.mapv(|d| 2.0 * d / n);
        let (dec_grads, grad_code) = self.decoder.backward_full(&dec_trace, grad_y.view());
        let enc_grads = self.encoder.backward(&enc_trace, grad_code.view());
        (loss, enc_grads, dec_grads)
    }

    /// Worst relative error between the analytic gradient of [`loss`](Self::loss)
    /// and central differences, over the flat parameter positions in
    /// `indices` (encoder first, then decoder).
    pub fn gradient_error(&self, x: ArrayView2<f64>, indices: &[usize], h: f64) -> f64 {
        let (_, ge, gd) = self.loss_and_grads(x);
        let mut analytic = ge.flat();
        analytic.extend(gd.flat());
        let split = self.encoder.param_count();
        let mut probe = self.clone();
        finite_difference_error_by(&analytic, indices.iter().copied(), h, |i, d| {
            let Autoencoder { encoder, decoder } = &mut probe;
            if i < split {
                shifted(encoder, i, d, |e| decoder_loss(e, decoder, x))
            } else {
                shifted(decoder, i - split, d, |dc| decoder_loss(encoder, dc, x))
            }
        })
    }

    pub fn param_count(&self) -> usize {
        self.encoder.param_count() + self.decoder.param_count()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for AutoencoderConfig {
    fn default() -> Self {
        AutoencoderConfig {
            epochs: 30,
            lr: 1e-3,
            batch_size: 32,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AutoencoderFit {
    pub encoder: EncoderParams,
    pub autoencoder: Autoencoder,
    pub initial_mse: f64,
    pub final_mse: f64,
    pub epoch_mse: Vec<f64>,
}

/// Column min/max over every row of every window. A column that never
/// varies gets the range `[min, min + 1]`.
pub fn fit_normalization(dataset: &[KpmWindow]) -> [MinMax; METRICS] {
    let mut norm = [MinMax {
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
    }; METRICS];
    for w in dataset {
        for r in &w.rows {
            for c in 0..METRICS {
                norm[c].min = norm[c].min.min(r[c]);
                norm[c].max = norm[c].max.max(r[c]);
            }
        }
    }
    for mm in &mut norm {
        if mm.max.is_nan() || mm.min.is_nan() || mm.max <= mm.min {
            mm.max = mm.min + 1.0;
        }
    }
    norm
}

pub fn train_autoencoder(
    dataset: &[KpmWindow],
    config: &AutoencoderConfig,
) -> Result<AutoencoderFit, KpmError> {
    if dataset.is_empty() {
        return Err(KpmError::EmptyDataset);
    }
    let norm = fit_normalization(dataset);
    let mut data = Array2::zeros((dataset.len(), INPUT_WIDTH));
    for (i, w) in dataset.iter().enumerate() {
        let row = flat_row(&normalize_rows(&w.rows, &norm)?);
        data.row_mut(i).assign(&ndarray::ArrayView1::from(&row[..]));
    }

    let mut ae = Autoencoder::new(config.seed);
    let mut enc_opt = Adam::new(&ae.encoder, config.lr);
    let mut dec_opt = Adam::new(&ae.decoder, config.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed);
    let initial_mse = ae.loss(data.view());
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let batch = config.batch_size.max(1);
    let mut epoch_mse = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            let x = data.select(ndarray::Axis(0), chunk);
            let (_, ge, gd) = ae.loss_and_grads(x.view());
            enc_opt.step(&mut ae.encoder, &ge);
            dec_opt.step(&mut ae.decoder, &gd);
        }
        epoch_mse.push(ae.loss(data.view()));
    }
    let final_mse = epoch_mse.last().copied().unwrap_or(initial_mse);
    let encoder = EncoderParams::new(ae.encoder.clone(), norm)?;
    Ok(AutoencoderFit {
        encoder,
        autoencoder: ae,
        initial_mse,
        final_mse,
        epoch_mse,
    })
}
