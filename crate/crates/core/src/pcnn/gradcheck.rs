use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::arch::Architecture;
use super::dd::{self, Dd};
use super::loss::PhysicsContext;
use super::network::Pcnn;
use super::train::{batch_gradient, TrainConfig};
use crate::error::{Error, Result};
use crate::optics::{apply_forward_model, MaterialModel, SampleGeometry};
use crate::phantom::{pulse_samples, PulseParams};
use crate::signal::{FftPlan, Spectrum};

/// Finite-difference step on the normalized scale.
pub const FD_STEP: f64 = 1e-6;

/// Largest relative disagreement between analytic and central-difference
/// gradients, overall and per loss term.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub lambda: f64,
    pub max_rel_error: f64,
    pub worst_param: usize,
    pub data: f64,
    pub refractive: f64,
    pub absorption: f64,
    pub params: usize,
}

impl GradCheckReport {
    /// Threshold for the active loss: `1e-6` with the data term alone,
    /// `1e-4` once the physics terms are weighted in.
    pub fn threshold(&self) -> f64 {
        if self.lambda == 0.0 {
            1e-6
        } else {
            1e-4
        }
    }

    pub fn passed(&self) -> bool {
        self.max_rel_error < self.threshold()
    }
}

fn rel_error(a: f64, n: f64) -> f64 {
    rel_error_floor(a, n, 1e-8)
}

fn rel_error_floor(a: f64, n: f64, floor: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(floor)
}

/// Smallest derivative an f64 central difference of a loss of size `loss`
/// can resolve at step `h`.
fn resolution(loss: f64, h: f64) -> f64 {
    16.0 * f64::EPSILON * loss.abs() / h
}

/// Compares analytic and numeric gradients of the total loss at `epoch` on
/// `batch` (normalized traces, used as both input and target).
///
/// `corrupt` perturbs the analytic gradient of the most sensitive parameter
/// by 1% so the harness can be seen to fail.
pub fn gradient_check(
    model: &Pcnn<f64>,
    batch: &[Vec<f64>],
    config: &TrainConfig,
    epoch: usize,
    corrupt: bool,
) -> Result<GradCheckReport> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("gradient check needs a non-empty batch".into()));
    }
    let ctx = PhysicsContext::new(&model.reference, model.fft_len, model.thickness_mm, model.band)?;
    let targets: Vec<&[f64]> = batch.iter().map(|t| t.as_slice()).collect();
    let lam = config.lambda::<f64>(epoch);
    let weight = config.physics_weight::<f64>(epoch);

    let data = batch_gradient(model, &ctx, batch, &targets, 0.0)?;
    let (re, ab) = split_physics(model, &ctx, batch, &targets)?;
    let mut total: Vec<f64> = (0..re.len()).map(|i| data.grad[i] + weight * (re[i] + ab[i])).collect();
    if corrupt {
        let i = argmax_abs(&total);
        total[i] *= 1.01;
    }

    let losses = |p: &[f64]| -> Result<(f64, f64, f64)> {
        let mut probe = model.clone();
        probe.params.copy_from_slice(p);
        let outs: Vec<Vec<f64>> = batch.iter().map(|x| probe.forward(x).map(|t| t.output)).collect::<Result<_>>()?;
        let (lr, la) = ctx.loss_physics(batch, &outs)?;
        Ok((0.0, lr, la))
    };
    let mut report = GradCheckReport {
        lambda: lam,
        max_rel_error: 0.0,
        worst_param: 0,
        data: 0.0,
        refractive: 0.0,
        absorption: 0.0,
        params: model.params.len(),
    };
    // Per-term diagnostics for the f64-differenced physics terms are floored
    // at their rounding resolution, so a parameter whose true gradient is
    // zero is not reported as a 100% error. The gated total keeps 1e-8.
    let (_, base_re, base_ab) = losses(&model.params)?;
    let floor_re = resolution(base_re, FD_STEP).max(1e-8);
    let floor_ab = resolution(base_ab, FD_STEP).max(1e-8);
    let mut p = model.params.clone();
    let mut pdd: Vec<Dd> = p.iter().map(|&v| Dd::from(v)).collect();
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + FD_STEP;
        let plus = losses(&p)?;
        p[i] = orig - FD_STEP;
        let minus = losses(&p)?;
        p[i] = orig;
        let h2 = 2.0 * FD_STEP;
        // The data term is differenced in double-double: at this step size
        // the rounding of an f64 loss would swamp small gradients.
        pdd[i] = Dd::from(orig) + Dd::from(FD_STEP);
        let dplus = dd::data_loss(model, &pdd, batch);
        pdd[i] = Dd::from(orig) - Dd::from(FD_STEP);
        let dminus = dd::data_loss(model, &pdd, batch);
        pdd[i] = Dd::from(orig);
        let nd = (dplus - dminus).to_f64() / h2;
        let nr = (plus.1 - minus.1) / h2;
        let na = (plus.2 - minus.2) / h2;
        let nt = nd + weight * (nr + na);
        report.data = report.data.max(rel_error(data.grad[i], nd));
        report.refractive = report.refractive.max(rel_error_floor(re[i], nr, floor_re));
        report.absorption = report.absorption.max(rel_error_floor(ab[i], na, floor_ab));
        let e = rel_error(total[i], nt);
        if e > report.max_rel_error {
            report.max_rel_error = e;
            report.worst_param = i;
        }
    }
    Ok(report)
}

fn argmax_abs(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |b, i| if v[i].abs() > v[b].abs() { i } else { b })
}

/// Analytic gradients of `L_re` and `L_ab` separately.
fn split_physics(
    model: &Pcnn<f64>,
    ctx: &PhysicsContext<f64>,
    batch: &[Vec<f64>],
    targets: &[&[f64]],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let inv_n = 1.0 / batch.len() as f64;
    let mut re = vec![0.0; model.params.len()];
    let mut ab = vec![0.0; model.params.len()];
    for (x, t) in batch.iter().zip(targets) {
        let tape = model.forward(x)?;
        let terms = ctx.terms(t, &tape.output, true)?;
        let scale = |g: Vec<f64>| g.into_iter().map(|v| v * inv_n).collect::<Vec<_>>();
        model.backward(&tape, &scale(terms.grad_re.expect("requested")), &mut re);
        model.backward(&tape, &scale(terms.grad_ab.expect("requested")), &mut ab);
    }
    Ok((re, ab))
}

/// Reduced model and batch for gradient checking: 64-sample pulses through
/// slabs of a few materials, normalized, with a seeded random model.
pub fn reduced_setup(seed: u64, config: &TrainConfig) -> Result<(Pcnn<f64>, Vec<Vec<f64>>)> {
    let arch = Architecture::reduced();
    let nt = arch.input_len;
    let dt = crate::phantom::DEFAULT_DT_PS;
    let pulse = PulseParams { center_ps: 1.6, width_ps: 0.2, amplitude: 1.0 };
    let reference = pulse_samples(&pulse, nt, dt, 0.0);
    let plan = FftPlan::new(nt);
    let r = Spectrum::new(1.0 / (nt as f64 * dt), 0.0, plan.forward_real(&reference))?;
    let geom = SampleGeometry::new(config.thickness_mm)?;
    let batch_raw: Vec<Vec<f64>> = [(1.2, 10.0), (1.5, 25.0), (1.8, 40.0)]
        .iter()
        .map(|&(n, a)| {
            let s = apply_forward_model(&r, &MaterialModel::constant(n, a)?, &geom);
            Ok(plan.inverse_real(s.bins()))
        })
        .collect::<Result<_>>()?;
    let scale = reference.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let norm_ref: Vec<Complex<f64>> = r.bins().iter().map(|z| z / scale).collect();
    let mut model = Pcnn::zeros(
        arch,
        scale,
        config.thickness_mm,
        config.band(),
        Spectrum::new(r.df(), 0.0, norm_ref)?,
        nt,
    )?;
    model.init_uniform(&mut ChaCha8Rng::seed_from_u64(seed));
    let batch = batch_raw.iter().map(|t| model.normalize(t)).collect::<Result<_>>()?;
    Ok((model, batch))
}
