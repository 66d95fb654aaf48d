use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::arch::Architecture;
use super::loss::{lambda, loss_total, PhysicsContext};
use super::network::Pcnn;
use crate::error::{Error, Result};
use crate::optics::Band;
use crate::scalar::Real;
use crate::signal::{default_transform_len, forward_transform, PulseTrace};

/// Samples per unit of parallel work. Fixed so the gradient sum is
/// reduced in the same order however many threads run.
const CHUNK: usize = 4;

// gradient and the three loss sums of one chunk of a batch
type ChunkPart<T> = (Vec<T>, T, T, T);

/// Optimizer, schedule and loss settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub clip_max_norm: f64,
    /// `S` in `L_data + lambda(t)/S * (L_re + L_ab)`.
    pub physics_scale: f64,
    /// Last epoch at which `lambda` is still zero.
    pub lambda_start: usize,
    /// Training input SNR in dB relative to the RMS of the normalized set.
    pub noise_level_db: f64,
    /// When false the physics terms are logged but never weighted in.
    pub physics: bool,
    pub thickness_mm: f64,
    pub band_min_thz: f64,
    pub band_max_thz: f64,
    pub floor: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            epochs: 50,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            clip_max_norm: 5.0,
            physics_scale: 1000.0,
            lambda_start: 10,
            noise_level_db: 25.0,
            physics: true,
            thickness_mm: 0.5,
            band_min_thz: 0.2,
            band_max_thz: 2.0,
            floor: 1e-3,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("learning_rate", self.learning_rate >= 0.0),
            ("beta1", (0.0..1.0).contains(&self.beta1)),
            ("beta2", (0.0..1.0).contains(&self.beta2)),
            ("adam_eps", self.adam_eps > 0.0),
            ("clip_max_norm", self.clip_max_norm > 0.0),
            ("physics_scale", self.physics_scale > 0.0),
            ("thickness_mm", self.thickness_mm > 0.0),
            ("floor", self.floor >= 0.0),
            ("band", self.band_min_thz > 0.0 && self.band_max_thz > self.band_min_thz),
            ("noise_level_db", !self.noise_level_db.is_nan()),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, ok)| !ok) {
            return Err(Error::InvalidInput(format!("training setting `{name}` out of range")));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::InvalidInput("batch_size and epochs must be positive".into()));
        }
        Ok(())
    }

    pub fn band<T: Real>(&self) -> Band<T> {
        Band::new(T::of(self.band_min_thz), T::of(self.band_max_thz), T::of(self.floor))
    }

    pub fn lambda<T: Real>(&self, epoch: usize) -> T {
        lambda(epoch, self.lambda_start, self.epochs)
    }

    /// Weight `lambda(t)/S` applied to each physics term.
    pub fn physics_weight<T: Real>(&self, epoch: usize) -> T {
        if self.physics {
            self.lambda::<T>(epoch) / T::of(self.physics_scale)
        } else {
            T::zero()
        }
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// One row of the training log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub lambda: f64,
    pub loss_data: f64,
    pub loss_re: f64,
    pub loss_ab: f64,
    pub loss_total: f64,
}

pub fn write_log_csv<W: std::io::Write>(log: &[EpochLog], mut out: W) -> Result<()> {
    writeln!(out, "epoch,lambda,loss_data,loss_re,loss_ab,loss_total")?;
    for r in log {
        writeln!(
            out,
            "{},{},{:.12e},{:.12e},{:.12e},{:.12e}",
            r.epoch, r.lambda, r.loss_data, r.loss_re, r.loss_ab, r.loss_total
        )?;
    }
    Ok(())
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    m: Vec<T>,
    v: Vec<T>,
    t: i32,
    beta1: T,
    beta2: T,
    eps: T,
}

impl<T: Real> Adam<T> {
    pub fn new(len: usize, beta1: T, beta2: T, eps: T) -> Self {
        Self { m: vec![T::zero(); len], v: vec![T::zero(); len], t: 0, beta1, beta2, eps }
    }

    /// Applies one update in place and returns the norm of the change.
    pub fn step(&mut self, params: &mut [T], grad: &[T], lr: T) -> T {
        self.t += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = T::one() - b1.powi(self.t);
        let c2 = T::one() - b2.powi(self.t);
        let mut change = T::zero();
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = b1 * self.m[i] + (T::one() - b1) * g;
            self.v[i] = b2 * self.v[i] + (T::one() - b2) * g * g;
            let step = lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
            let before = params[i];
            params[i] = before - step;
            let d = params[i] - before;
            change += d * d;
        }
        change.sqrt()
    }
}

/// Scales `grad` down to `max_norm` when it is longer; returns the norm
/// before clipping.
pub fn clip_grad_norm<T: Real>(grad: &mut [T], max_norm: T) -> T {
    let norm = grad.iter().map(|&g| g * g).sum::<T>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

/// Losses and gradient of one batch.
#[derive(Debug, Clone)]
pub struct BatchGradient<T> {
    pub loss_data: T,
    pub loss_re: T,
    pub loss_ab: T,
    pub grad: Vec<T>,
}

/// Gradient of `L_data + w (L_re + L_ab)` over a batch of `(input, target)`
/// pairs, all normalized. Physics terms compare the target with the
/// reconstruction.
pub fn batch_gradient<T: Real>(
    model: &Pcnn<T>,
    ctx: &PhysicsContext<T>,
    inputs: &[Vec<T>],
    targets: &[&[T]],
    weight: T,
) -> Result<BatchGradient<T>> {
    let n = inputs.len();
    let inv_n = T::one() / T::of_usize(n);
    let total = model.layout.total;
    let parts: Vec<Result<ChunkPart<T>>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut grad = vec![T::zero(); total];
            let (mut ld, mut lr, mut la) = (T::zero(), T::zero(), T::zero());
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let tape = model.forward(&inputs[i])?;
                let target = targets[i];
                let mut g: Vec<T> = tape
                    .output
                    .iter()
                    .zip(target)
                    .map(|(&y, &x)| T::of(2.0) * (y - x) * inv_n)
                    .collect();
                ld += tape.output.iter().zip(target).map(|(&y, &x)| (y - x) * (y - x)).sum::<T>();
                let want = weight != T::zero();
                let terms = ctx.terms(target, &tape.output, want)?;
                lr += terms.l_re;
                la += terms.l_ab;
                if let (Some(gr), Some(ga)) = (&terms.grad_re, &terms.grad_ab) {
                    let w = weight * inv_n;
                    g.iter_mut().zip(gr.iter().zip(ga)).for_each(|(gv, (&a, &b))| *gv += w * (a + b));
                }
                model.backward(&tape, &g, &mut grad);
            }
            Ok((grad, ld, lr, la))
        })
        .collect();
    let mut out = BatchGradient { loss_data: T::zero(), loss_re: T::zero(), loss_ab: T::zero(), grad: vec![T::zero(); total] };
    for part in parts {
        let (g, ld, lr, la) = part?;
        out.grad.iter_mut().zip(&g).for_each(|(a, &b)| *a += b);
        out.loss_data += ld;
        out.loss_re += lr;
        out.loss_ab += la;
    }
    out.loss_data *= inv_n;
    out.loss_re *= inv_n;
    out.loss_ab *= inv_n;
    Ok(out)
}

/// What one optimizer step did.
#[derive(Debug, Clone, Copy)]
pub struct StepReport<T> {
    pub loss_data: T,
    pub loss_re: T,
    pub loss_ab: T,
    pub grad_norm: T,
    pub update_norm: T,
}

/// Stateful training loop over a fixed normalized data set.
#[derive(Debug)]
pub struct Trainer<T: Real> {
    pub model: Pcnn<T>,
    pub config: TrainConfig,
    ctx: PhysicsContext<T>,
    adam: Adam<T>,
    data: Vec<Vec<T>>,
    noise: Option<Normal<f64>>,
    shuffle_rng: ChaCha8Rng,
    noise_rng: ChaCha8Rng,
}

impl<T: Real> Trainer<T> {
    /// `traces` are raw; they are normalized by the model's scale.
    pub fn new(model: Pcnn<T>, traces: &[Vec<T>], config: TrainConfig) -> Result<Self> {
        config.validate()?;
        if traces.is_empty() {
            return Err(Error::InvalidInput("training set is empty".into()));
        }
        let data: Vec<Vec<T>> = traces.iter().map(|t| model.normalize(t)).collect::<Result<_>>()?;
        if data.iter().any(|t| t.len() != model.input_len()) {
            return Err(Error::Dimension(format!("training traces must have {} samples", model.input_len())));
        }
        let ctx = PhysicsContext::new(&model.reference, model.fft_len, model.thickness_mm, model.band)?;
        let count = data.iter().map(|t| t.len()).sum::<usize>();
        let rms = (data.iter().flatten().map(|v| v.to_f64_lossy().powi(2)).sum::<f64>() / count as f64).sqrt();
        let std = rms * 10f64.powf(-config.noise_level_db / 20.0);
        let noise = if std > 0.0 && std.is_finite() {
            Some(Normal::new(0.0, std).map_err(|e| Error::InvalidInput(e.to_string()))?)
        } else {
            None
        };
        let adam = Adam::new(model.layout.total, T::of(config.beta1), T::of(config.beta2), T::of(config.adam_eps));
        Ok(Self {
            shuffle_rng: config.rng(1),
            noise_rng: config.rng(2),
            model,
            ctx,
            adam,
            data,
            noise,
            config,
        })
    }

    pub fn physics(&self) -> &PhysicsContext<T> {
        &self.ctx
    }

    /// Standard deviation of the input noise in normalized units.
    pub fn noise_std(&self) -> f64 {
        self.noise.map_or(0.0, |n| n.std_dev())
    }

    /// One optimizer step on the samples `batch` at `epoch`.
    pub fn step(&mut self, batch: &[usize], epoch: usize) -> Result<StepReport<T>> {
        let targets: Vec<&[T]> = batch.iter().map(|&i| self.data[i].as_slice()).collect();
        let inputs: Vec<Vec<T>> = targets
            .iter()
            .map(|t| match &self.noise {
                Some(n) => t.iter().map(|&v| v + T::of(n.sample(&mut self.noise_rng))).collect(),
                None => t.to_vec(),
            })
            .collect();
        let weight = self.config.physics_weight::<T>(epoch);
        let diverged = |detail: String| Error::Divergence { epoch, detail };
        let mut bg = batch_gradient(&self.model, &self.ctx, &inputs, &targets, weight).map_err(|e| match e {
            Error::NumericOverflow(d) => diverged(d),
            other => other,
        })?;
        let total = loss_total(bg.loss_data, bg.loss_re, bg.loss_ab, weight, T::one());
        if !total.is_finite() {
            return Err(diverged(format!("non-finite loss {total}")));
        }
        let grad_norm = clip_grad_norm(&mut bg.grad, T::of(self.config.clip_max_norm));
        if !grad_norm.is_finite() {
            return Err(diverged("non-finite gradient".into()));
        }
        let update_norm = self.adam.step(&mut self.model.params, &bg.grad, T::of(self.config.learning_rate));
        Ok(StepReport { loss_data: bg.loss_data, loss_re: bg.loss_re, loss_ab: bg.loss_ab, grad_norm, update_norm })
    }

    /// A shuffled pass over the data set.
    pub fn epoch(&mut self, epoch: usize) -> Result<EpochLog> {
        let mut order: Vec<usize> = (0..self.data.len()).collect();
        order.shuffle(&mut self.shuffle_rng);
        let (mut ld, mut lr, mut la) = (0.0, 0.0, 0.0);
        for batch in order.chunks(self.config.batch_size) {
            let r = self.step(batch, epoch)?;
            let w = batch.len() as f64;
            ld += r.loss_data.to_f64_lossy() * w;
            lr += r.loss_re.to_f64_lossy() * w;
            la += r.loss_ab.to_f64_lossy() * w;
        }
        let m = self.data.len() as f64;
        let (ld, lr, la) = (ld / m, lr / m, la / m);
        let lam = self.config.lambda::<f64>(epoch);
        let weight = if self.config.physics { lam } else { 0.0 };
        Ok(EpochLog {
            epoch,
            lambda: lam,
            loss_data: ld,
            loss_re: lr,
            loss_ab: la,
            loss_total: loss_total(ld, lr, la, weight, self.config.physics_scale),
        })
    }

    pub fn run(mut self) -> Result<(Pcnn<T>, Vec<EpochLog>)> {
        let mut log = Vec::with_capacity(self.config.epochs);
        for epoch in 1..=self.config.epochs {
            log.push(self.epoch(epoch)?);
        }
        Ok((self.model, log))
    }
}

/// Freshly initialized model for `traces`: scale from their global max-abs,
/// reference spectrum normalized by the same factor.
pub fn init_model<T: Real>(
    traces: &[Vec<T>],
    reference: &PulseTrace<T>,
    arch: Architecture,
    config: &TrainConfig,
) -> Result<Pcnn<T>> {
    config.validate()?;
    let scale = traces.iter().flatten().fold(T::zero(), |m, v| m.max(v.abs()));
    if !(scale > T::zero()) {
        return Err(Error::InvalidInput("training set is identically zero".into()));
    }
    if reference.len() != arch.input_len {
        return Err(Error::Dimension(format!(
            "reference has {} samples, traces {}",
            reference.len(),
            arch.input_len
        )));
    }
    let fft_len = default_transform_len(arch.input_len);
    let spectrum = forward_transform(&reference.scaled(T::one() / scale)?, Some(fft_len))?;
    let mut model = Pcnn::zeros(arch, scale, T::of(config.thickness_mm), config.band(), spectrum, fft_len)?;
    model.init_uniform(&mut config.rng(0));
    Ok(model)
}

/// Trains from scratch on raw `traces`.
pub fn train<T: Real>(
    traces: &[Vec<T>],
    reference: &PulseTrace<T>,
    arch: Architecture,
    config: &TrainConfig,
) -> Result<(Pcnn<T>, Vec<EpochLog>)> {
    let model = init_model(traces, reference, arch, config)?;
    Trainer::new(model, traces, config.clone())?.run()
}
