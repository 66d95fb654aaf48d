use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::trace::{PulseTrace, Spectrum};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Forward and inverse complex FFTs of one length, reused across many traces.
#[derive(Clone)]
pub struct FftPlan<T: Real> {
    len: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> fmt::Debug for FftPlan<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FftPlan").field("len", &self.len).finish()
    }
}

impl<T: Real> FftPlan<T> {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "transform length must be positive");
        let mut planner = FftPlanner::new();
        Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of non-negative frequency bins, `len / 2 + 1`.
    pub fn bins(&self) -> usize {
        self.len / 2 + 1
    }

    /// Unnormalized DFT `X_k = sum_t x_t exp(-2 pi i k t / N)` of `x` zero-padded
    /// to the plan length, non-negative bins only.
    pub fn forward_real(&self, x: &[T]) -> Vec<Complex<T>> {
        assert!(x.len() <= self.len, "input longer than the transform");
        let mut buf: Vec<Complex<T>> = Vec::with_capacity(self.len);
        buf.extend(x.iter().map(|&v| Complex::new(v, T::zero())));
        buf.resize(self.len, Complex::new(T::zero(), T::zero()));
        self.forward.process(&mut buf);
        buf.truncate(self.bins());
        buf
    }

    /// Inverse of [`forward_real`](Self::forward_real): Hermitian completion,
    /// inverse DFT, `1/N` normalization, real part.
    pub fn inverse_real(&self, bins: &[Complex<T>]) -> Vec<T> {
        assert_eq!(bins.len(), self.bins(), "bin count does not match plan");
        let n = self.len;
        let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
        buf[..bins.len()].copy_from_slice(bins);
        for k in 1..n.div_ceil(2) {
            buf[n - k] = bins[k].conj();
        }
        if n.is_multiple_of(2) {
            // Nyquist bin of a real signal is real.
            buf[n / 2] = Complex::new(bins[n / 2].re, T::zero());
        }
        buf[0] = Complex::new(bins[0].re, T::zero());
        self.inverse.process(&mut buf);
        let scale = T::one() / T::of_usize(n);
        buf.iter().map(|z| z.re * scale).collect()
    }

    /// Adjoint of `forward_real` viewed as a real-linear map from `out_len`
    /// samples to the real and imaginary parts of the bins.
    ///
    /// Given `g_k = dL/dRe X_k + i dL/dIm X_k` this returns `dL/dx_t`
    /// `= Re(sum_k g_k exp(+2 pi i k t / N))` for `t < out_len`.
    pub fn adjoint_real(&self, grad: &[Complex<T>], out_len: usize) -> Vec<T> {
        assert_eq!(grad.len(), self.bins(), "bin count does not match plan");
        assert!(out_len <= self.len);
        let mut buf = vec![Complex::new(T::zero(), T::zero()); self.len];
        buf[..grad.len()].copy_from_slice(grad);
        self.inverse.process(&mut buf);
        buf[..out_len].iter().map(|z| z.re).collect()
    }
}

/// Transform length used when none is requested: the next power of two.
pub fn default_transform_len(nt: usize) -> usize {
    nt.next_power_of_two()
}

/// Discrete Fourier transform of a (zero-padded) real trace.
///
/// `pad_to = None` pads to the next power of two; `Some(nt)` gives an
/// exact-length transform.
pub fn forward_transform<T: Real>(trace: &PulseTrace<T>, pad_to: Option<usize>) -> Result<Spectrum<T>> {
    let nt = trace.len();
    let len = match pad_to {
        Some(n) if n < nt => {
            return Err(Error::Dimension(format!("pad_to {n} shorter than trace length {nt}")))
        }
        Some(n) => n,
        None => default_transform_len(nt),
    };
    if let Some(k) = trace.samples().iter().position(|s| !s.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite sample at index {k}")));
    }
    let plan = FftPlan::new(len);
    let df = T::one() / (T::of_usize(len) * trace.dt());
    Spectrum::new(df, trace.t0(), plan.forward_real(trace.samples()))
}

/// Real trace of length `nt` whose transform is `spec`.
pub fn inverse_transform<T: Real>(spec: &Spectrum<T>, nt: usize) -> Result<PulseTrace<T>> {
    if nt < 2 || nt / 2 + 1 != spec.len() {
        return Err(Error::Dimension(format!(
            "{} bins cannot come from a {nt}-sample trace",
            spec.len()
        )));
    }
    let plan = FftPlan::new(nt);
    let dt = T::one() / (T::of_usize(nt) * spec.df());
    PulseTrace::new(dt, spec.t0(), plan.inverse_real(spec.bins()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive_dft(x: &[f64], n: usize) -> Vec<Complex<f64>> {
        (0..n / 2 + 1)
            .map(|k| {
                x.iter().enumerate().fold(Complex::new(0.0, 0.0), |acc, (t, &v)| {
                    let th = -2.0 * std::f64::consts::PI * (k * t) as f64 / n as f64;
                    acc + Complex::new(th.cos(), th.sin()) * v
                })
            })
            .collect()
    }

    #[test]
    fn zero_trace_has_zero_spectrum() {
        let t = PulseTrace::zeros(1.0, 0.0, 8).unwrap();
        let s = forward_transform(&t, None).unwrap();
        assert!(s.bins().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        let mut x = vec![0.0f64; 8];
        x[0] = 1.0;
        let t = PulseTrace::new(1.0, 0.0, x).unwrap();
        let s = forward_transform(&t, None).unwrap();
        assert_eq!(s.len(), 5);
        for z in s.bins() {
            assert_eq!(*z, Complex::new(1.0, 0.0));
        }
        let back = inverse_transform(&s, 8).unwrap();
        for (a, b) in back.samples().iter().zip(t.samples()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn cosine_matches_direct_dft() {
        let dt = 0.125;
        let x: Vec<f64> = (0..64)
            .map(|k| (2.0 * std::f64::consts::PI * 1.0 * k as f64 * dt).cos())
            .collect();
        let t = PulseTrace::new(dt, 0.0, x.clone()).unwrap();
        let s = forward_transform(&t, None).unwrap();
        let oracle = naive_dft(&x, 64);
        let peak = s
            .amplitude()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(peak, 8);
        assert!((s.frequency(peak) - 1.0).abs() < 1e-12);
        assert!((s.bins()[8].norm() - 32.0).abs() < 1e-9);
        for (a, b) in s.bins().iter().zip(&oracle) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn padding_policy() {
        let t = PulseTrace::new(0.1, 0.0, vec![1.0; 3000]).unwrap();
        assert_eq!(forward_transform(&t, None).unwrap().len(), 4096 / 2 + 1);
        assert_eq!(forward_transform(&t, Some(3000)).unwrap().len(), 1501);
        assert!(forward_transform(&t, Some(10)).is_err());
    }

    #[test]
    fn exact_length_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for nt in [2usize, 3, 17, 100, 3072] {
            let x: Vec<f64> = (0..nt).map(|_| rng.random_range(-1.0..1.0)).collect();
            let t = PulseTrace::new(0.05, 1.0, x).unwrap();
            let s = forward_transform(&t, Some(nt)).unwrap();
            let back = inverse_transform(&s, nt).unwrap();
            assert!((back.dt() - 0.05).abs() < 1e-15);
            for (a, b) in back.samples().iter().zip(t.samples()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn inverse_rejects_inconsistent_length() {
        let s = Spectrum::new(1.0, 0.0, vec![Complex::new(0.0, 0.0); 5]).unwrap();
        assert!(matches!(inverse_transform(&s, 16), Err(Error::Dimension(_))));
        let z = inverse_transform(&s, 9).unwrap();
        assert!(z.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn adjoint_matches_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let plan = FftPlan::<f64>::new(16);
        let x: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g: Vec<Complex<f64>> = (0..9)
            .map(|_| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        // <g, F x> in the real inner product equals <F^T g, x>.
        let fx = plan.forward_real(&x);
        let lhs: f64 = fx.iter().zip(&g).map(|(a, b)| a.re * b.re + a.im * b.im).sum();
        let ftg = plan.adjoint_real(&g, 12);
        let rhs: f64 = ftg.iter().zip(&x).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn single_precision_transform() {
        let mut x = vec![0.0f32; 8];
        x[0] = 1.0;
        let t = PulseTrace::new(1.0f32, 0.0, x).unwrap();
        let s = forward_transform(&t, None).unwrap();
        assert!(s.bins().iter().all(|z| (z.re - 1.0).abs() < 1e-6));
    }
}
