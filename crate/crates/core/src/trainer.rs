//! End-to-end training of the codebook.
//!
//! With one-hot inputs each sub-encoder is a lookup table of `M` vectors, so
//! the raw table `W` (`V×M×D`) is optimized directly. The transmitted
//! codewords are the row-normalized view `sqrt(D/V)·w/‖w‖`, the decoder is
//! the per-layer softmax of `2·y·c/N0`, and the objective is the summed
//! per-layer cross-entropy averaged over the batch.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{domain, ebn0_to_n0, EbConvention, NoiseStream};
use crate::codebook::{dot, CodeParams, Codebook};
use crate::codec::log_softmax_in_place;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub params: CodeParams,
    pub train_snr_db: f64,
    pub batch_size: usize,
    pub steps: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// Steps between [`LogEntry`] records.
    pub log_every: usize,
    pub eb_convention: EbConvention,
}

impl TrainConfig {
    pub fn new(params: CodeParams) -> Self {
        Self {
            params,
            train_snr_db: -1.5,
            batch_size: 1024,
            steps: 1000,
            lr_start: 2e-4,
            lr_end: 2e-6,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            log_every: 100,
            eb_convention: EbConvention::AllBits,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(self.lr_end > 0.0 && self.lr_start >= self.lr_end) {
            return bad("learning rates must satisfy lr_start >= lr_end > 0");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam betas must lie in [0, 1)");
        }
        if self.epsilon <= 0.0 {
            return bad("Adam epsilon must be positive");
        }
        if self.log_every == 0 {
            return bad("log_every must be at least 1");
        }
        Ok(())
    }

    /// Learning rate at `step`, linear from `lr_start` (first step) to
    /// `lr_end` (last step).
    pub fn learning_rate(&self, step: usize) -> f64 {
        if self.steps <= 1 {
            return self.lr_start;
        }
        let frac = step as f64 / (self.steps - 1) as f64;
        self.lr_start + (self.lr_end - self.lr_start) * frac
    }

    pub fn noise_power(&self) -> f64 {
        ebn0_to_n0(self.train_snr_db, &self.params, self.eb_convention)
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    first: Vec<f64>,
    second: Vec<f64>,
    steps: i32,
}

impl Adam {
    pub fn new(len: usize, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Self {
            beta1,
            beta2,
            epsilon,
            first: vec![0.0; len],
            second: vec![0.0; len],
            steps: 0,
        }
    }

    pub fn steps(&self) -> i32 {
        self.steps
    }

    pub fn step(&mut self, weights: &mut [f64], grad: &[f64], lr: f64) {
        assert_eq!(weights.len(), grad.len());
        assert_eq!(weights.len(), self.first.len());
        self.steps += 1;
        let c1 = 1.0 - self.beta1.powi(self.steps);
        let c2 = 1.0 - self.beta2.powi(self.steps);
        for (((w, &g), m), v) in weights
            .iter_mut()
            .zip(grad)
            .zip(&mut self.first)
            .zip(&mut self.second)
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *w -= lr * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

/// Raw weights and optimizer state.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub params: CodeParams,
    /// Unconstrained `V×M×D` table.
    pub weights: Vec<f64>,
    pub adam: Adam,
}

impl TrainState {
    /// I.i.d. standard normal weights.
    pub fn new(config: &TrainConfig) -> Self {
        let params = config.params;
        let mut stream = NoiseStream::new(config.seed, domain::TRAIN, 0);
        let weights = (0..params.rows() * params.dim)
            .map(|_| stream.gaussian())
            .collect();
        Self::from_weights(params, weights, config)
    }

    pub fn from_weights(params: CodeParams, weights: Vec<f64>, config: &TrainConfig) -> Self {
        assert_eq!(weights.len(), params.rows() * params.dim);
        let adam = Adam::new(weights.len(), config.beta1, config.beta2, config.epsilon);
        Self {
            params,
            weights,
            adam,
        }
    }

    /// Row-normalized view of the weights.
    pub fn codebook(&self) -> Result<Codebook> {
        let mut cb = Codebook::from_entries(self.params, self.weights.clone())?;
        cb.normalize()?;
        Ok(cb)
    }
}

/// Messages and noise for one optimizer step.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    /// `B·V` layer indices, sample-major.
    pub indices: Vec<usize>,
    /// `B·D` standard normal draws; scaled by `sqrt(N0/2)` when applied.
    pub noise: Vec<f64>,
}

impl Batch {
    pub fn draw(params: &CodeParams, size: usize, stream: &mut NoiseStream) -> Self {
        let indices = (0..size * params.layers)
            .map(|_| stream.below(params.alphabet))
            .collect();
        let noise = (0..size * params.dim).map(|_| stream.gaussian()).collect();
        Self { indices, noise }
    }

    pub fn len(&self, params: &CodeParams) -> usize {
        self.indices.len() / params.layers
    }

    fn check(&self, params: &CodeParams) -> Result<usize> {
        let size = self.indices.len() / params.layers;
        if self.indices.len() != size * params.layers || self.noise.len() != size * params.dim {
            return Err(Error::InvalidConfig(format!(
                "batch has {} indices and {} noise draws for V={} D={}",
                self.indices.len(),
                self.noise.len(),
                params.layers,
                params.dim
            )));
        }
        if size == 0 {
            return Err(Error::InvalidConfig("empty batch".into()));
        }
        if let Some(&index) = self.indices.iter().find(|&&i| i >= params.alphabet) {
            return Err(Error::IndexOutOfRange {
                index,
                alphabet: params.alphabet,
            });
        }
        Ok(size)
    }
}

struct SampleOut {
    loss: f64,
    /// softmax − one-hot, `V·M`
    dlogits: Vec<f64>,
    y: Vec<f64>,
    /// dL/dy
    dy: Vec<f64>,
}

fn sample_pass(
    cb: &Codebook,
    targets: &[usize],
    noise: &[f64],
    n0: f64,
    want_grad: bool,
) -> SampleOut {
    let p = cb.params();
    let sigma = (n0 / 2.0).sqrt();
    let mut y: Vec<f64> = noise.iter().map(|n| sigma * n).collect();
    for (v, &t) in targets.iter().enumerate() {
        y.iter_mut().zip(cb.row(v, t)).for_each(|(a, c)| *a += c);
    }
    let scale = 2.0 / n0;
    let mut logits: Vec<f64> = cb
        .entries()
        .chunks_exact(p.dim)
        .map(|c| scale * dot(&y, c))
        .collect();
    logits
        .chunks_exact_mut(p.alphabet)
        .for_each(log_softmax_in_place);
    let loss = -targets
        .iter()
        .enumerate()
        .map(|(v, &t)| logits[v * p.alphabet + t])
        .sum::<f64>();

    if !want_grad {
        return SampleOut {
            loss,
            dlogits: Vec::new(),
            y,
            dy: Vec::new(),
        };
    }

    let mut dlogits: Vec<f64> = logits.iter().map(|l| l.exp()).collect();
    for (v, &t) in targets.iter().enumerate() {
        dlogits[v * p.alphabet + t] -= 1.0;
    }
    let mut dy = vec![0.0; p.dim];
    for (g, c) in dlogits.iter().zip(cb.entries().chunks_exact(p.dim)) {
        let coef = scale * g;
        dy.iter_mut().zip(c).for_each(|(d, x)| *d += coef * x);
    }
    SampleOut {
        loss,
        dlogits,
        y,
        dy,
    }
}

fn run_batch(
    state: &TrainState,
    batch: &Batch,
    n0: f64,
    want_grad: bool,
) -> Result<(Codebook, Vec<SampleOut>)> {
    if n0.is_nan() || n0 <= 0.0 {
        return Err(Error::NonPositiveNoise(n0));
    }
    let p = state.params;
    batch.check(&p)?;
    let cb = state.codebook()?;
    let outs = batch
        .indices
        .par_chunks_exact(p.layers)
        .zip(batch.noise.par_chunks_exact(p.dim))
        .map(|(t, n)| sample_pass(&cb, t, n, n0, want_grad))
        .collect();
    Ok((cb, outs))
}

/// Mean cross-entropy of the batch under noise power `n0`.
pub fn forward_loss(state: &TrainState, batch: &Batch, n0: f64) -> Result<f64> {
    let (_, outs) = run_batch(state, batch, n0, false)?;
    Ok(outs.iter().map(|o| o.loss).sum::<f64>() / outs.len() as f64)
}

/// Mean loss and its exact gradient with respect to the raw weights.
pub fn backward(state: &TrainState, batch: &Batch, n0: f64) -> Result<(f64, Vec<f64>)> {
    let p = state.params;
    let (cb, outs) = run_batch(state, batch, n0, true)?;
    let size = outs.len() as f64;
    let loss = outs.iter().map(|o| o.loss).sum::<f64>() / size;

    // template path: dC[r] = (2/N0) Σ_b g_b[r] y_b
    let scale = 2.0 / n0;
    let mut dcode = vec![0.0; p.rows() * p.dim];
    dcode
        .par_chunks_exact_mut(p.dim)
        .enumerate()
        .for_each(|(r, row)| {
            for o in &outs {
                let coef = scale * o.dlogits[r];
                row.iter_mut().zip(&o.y).for_each(|(d, y)| *d += coef * y);
            }
        });
    // transmit path: every selected codeword receives dL/dy
    for (targets, o) in batch.indices.chunks_exact(p.layers).zip(&outs) {
        for (v, &t) in targets.iter().enumerate() {
            let r = v * p.alphabet + t;
            dcode[r * p.dim..(r + 1) * p.dim]
                .iter_mut()
                .zip(&o.dy)
                .for_each(|(d, g)| *d += g);
        }
    }

    // normalization Jacobian: sqrt(D/V)/‖w‖ · (I − ŵŵᵀ)
    let gain = p.row_energy().sqrt();
    let mut grad = dcode;
    grad.par_chunks_exact_mut(p.dim)
        .zip(state.weights.par_chunks_exact(p.dim))
        .zip(cb.entries().par_chunks_exact(p.dim))
        .for_each(|((g, w), c)| {
            let norm = dot(w, w).sqrt();
            // ŵ = c / gain
            let along = dot(g, c) / (gain * gain);
            g.iter_mut()
                .zip(c)
                .for_each(|(gi, ci)| *gi = gain / norm * (*gi - along * ci) / size);
        });
    Ok((loss, grad))
}

pub fn adam_step(state: &mut TrainState, grad: &[f64], lr: f64) {
    state.adam.step(&mut state.weights, grad, lr);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    /// Last step (1-based) covered by the interval.
    pub step: usize,
    /// Mean batch loss over the interval.
    pub loss: f64,
    pub corr_mean: f64,
    pub corr_max: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub entries: Vec<LogEntry>,
    /// Batch loss of every step.
    pub losses: Vec<f64>,
}

impl TrainingLog {
    /// Mean of the first `window` step losses.
    pub fn leading_mean(&self, window: usize) -> f64 {
        let w = window.min(self.losses.len()).max(1);
        self.losses[..w].iter().sum::<f64>() / w as f64
    }

    /// Mean of the last `window` step losses.
    pub fn trailing_mean(&self, window: usize) -> f64 {
        let w = window.min(self.losses.len()).max(1);
        self.losses[self.losses.len() - w..].iter().sum::<f64>() / w as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,loss,corr_mean,corr_max,lr\n");
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                e.step, e.loss, e.corr_mean, e.corr_max, e.lr
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}

/// Trains from scratch. See [`train_with`].
pub fn train(config: &TrainConfig) -> Result<(Codebook, TrainingLog)> {
    train_with(config, |_| {})
}

/// Runs `config.steps` Adam updates with fresh messages and noise each step
/// and calls `on_log` after every log interval.
pub fn train_with(
    config: &TrainConfig,
    mut on_log: impl FnMut(&LogEntry),
) -> Result<(Codebook, TrainingLog)> {
    config.validate()?;
    let p = config.params;
    let n0 = config.noise_power();
    let mut state = TrainState::new(config);
    let mut log = TrainingLog::default();
    let mut interval_sum = 0.0;
    let mut interval_len = 0usize;

    for step in 0..config.steps {
        let lr = config.learning_rate(step);
        let mut stream = NoiseStream::new(config.seed, domain::TRAIN, step as u64 + 1);
        let batch = Batch::draw(&p, config.batch_size, &mut stream);
        let (loss, grad) = backward(&state, &batch, n0)?;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteLoss { step, lr, loss });
        }
        adam_step(&mut state, &grad, lr);
        log.losses.push(loss);
        interval_sum += loss;
        interval_len += 1;

        if (step + 1) % config.log_every == 0 || step + 1 == config.steps {
            let corr = state.codebook()?.cross_correlation();
            let entry = LogEntry {
                step: step + 1,
                loss: interval_sum / interval_len as f64,
                corr_mean: corr.mean_abs,
                corr_max: corr.max_abs,
                lr,
            };
            on_log(&entry);
            log.entries.push(entry);
            interval_sum = 0.0;
            interval_len = 0;
        }
    }
    Ok((state.codebook()?, log))
}
