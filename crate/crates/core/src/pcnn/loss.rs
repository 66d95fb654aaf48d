use num_complex::Complex;

use crate::error::{Error, Result};
use crate::optics::{delay_phase, extract_constants, reference_mask, Band, SampleGeometry};
use crate::scalar::{Real, SPEED_OF_LIGHT_MM_PER_PS};
use crate::signal::{FftPlan, Spectrum};

/// `(1/N) sum_i |x_i - y_i|^2` over a batch.
pub fn loss_data<T: Real, A: AsRef<[T]>, B: AsRef<[T]>>(x: &[A], y: &[B]) -> Result<T> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::Dimension(format!("batch sizes {} and {} must match and be non-zero", x.len(), y.len())));
    }
    let mut total = T::zero();
    for (a, b) in x.iter().zip(y) {
        let (a, b) = (a.as_ref(), b.as_ref());
        if a.len() != b.len() {
            return Err(Error::Dimension(format!("trace lengths {} and {} differ", a.len(), b.len())));
        }
        total += a.iter().zip(b).map(|(&u, &v)| (u - v) * (u - v)).sum::<T>();
    }
    Ok(total / T::of_usize(x.len()))
}

/// Physics weight `lambda(t)`: zero through `start`, then linear to 1 at
/// `epochs`. Epochs are 1-based.
pub fn lambda<T: Real>(epoch: usize, start: usize, epochs: usize) -> T {
    if epoch <= start || epochs <= start {
        return T::zero();
    }
    let t = T::of_usize(epoch - start) / T::of_usize(epochs - start);
    t.min(T::one())
}

/// `L_data + lambda(t)/S * (L_re + L_ab)`.
pub fn loss_total<T: Real>(l_data: T, l_re: T, l_ab: T, lam: T, physics_scale: T) -> T {
    if lam == T::zero() {
        return l_data;
    }
    l_data + lam / physics_scale * (l_re + l_ab)
}

/// Per-trace physics terms and, on request, their gradients with respect to
/// the reconstruction.
#[derive(Debug, Clone)]
pub struct PhysicsTerms<T> {
    pub l_re: T,
    pub l_ab: T,
    /// Bins that entered the means.
    pub bins: usize,
    /// Mean `|n0 - n1|` over those bins (NaN when there are none).
    pub mean_abs_dn: T,
    pub grad_re: Option<Vec<T>>,
    pub grad_ab: Option<Vec<T>>,
}

/// Fixed part of the physics loss: reference spectrum, band mask, geometry.
#[derive(Debug, Clone)]
pub struct PhysicsContext<T: Real> {
    plan: FftPlan<T>,
    reference: Spectrum<T>,
    mask: Vec<bool>,
    geom: SampleGeometry<T>,
    band: Band<T>,
}

impl<T: Real> PhysicsContext<T> {
    /// `reference` is the spectrum of the reference pulse at FFT length `fft_len`.
    pub fn new(reference: &Spectrum<T>, fft_len: usize, thickness_mm: T, band: Band<T>) -> Result<Self> {
        let mask = reference_mask(reference, &band)?;
        if !mask.iter().any(|m| *m) {
            return Err(Error::NoBand(format!(
                "reference has no bin in [{}, {}] THz above floor {}",
                band.f_min, band.f_max, band.floor
            )));
        }
        Ok(Self {
            plan: FftPlan::new(fft_len),
            reference: reference.clone(),
            mask,
            geom: SampleGeometry::new(thickness_mm)?,
            band,
        })
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    fn spectrum(&self, x: &[T]) -> Result<Spectrum<T>> {
        Spectrum::new(self.reference.df(), T::zero(), self.plan.forward_real(x))
    }

    /// `L_re` and `L_ab` of one trace pair: mean over the bins where the
    /// input's constants are valid and the reconstruction's are defined.
    pub fn terms(&self, x: &[T], xh: &[T], want_grad: bool) -> Result<PhysicsTerms<T>> {
        if x.len() != xh.len() {
            return Err(Error::Dimension(format!("trace lengths {} and {} differ", x.len(), xh.len())));
        }
        let empty = |nt: usize| PhysicsTerms {
            l_re: T::zero(),
            l_ab: T::zero(),
            bins: 0,
            mean_abs_dn: T::nan(),
            grad_re: want_grad.then(|| vec![T::zero(); nt]),
            grad_ab: want_grad.then(|| vec![T::zero(); nt]),
        };
        let sx = self.spectrum(x)?;
        let input = match extract_constants(&sx, &self.reference, &self.geom, &self.band) {
            Ok(c) => c,
            Err(Error::NoBand(_)) => return Ok(empty(x.len())),
            Err(e) => return Err(e),
        };
        // Both sides go through the same arithmetic so that identical traces
        // cost exactly nothing; the input's own validity comes from the
        // extraction above.
        let s0 = sx.bins();
        let s = self.plan.forward_real(xh);
        let r = self.reference.bins();
        let df = self.reference.df();
        let phase0 = delay_phase(s0, r, df, &self.mask)?;
        let phase = delay_phase(&s, r, df, &self.mask)?;

        let c = T::of(SPEED_OF_LIGHT_MM_PER_PS);
        let d_mm = self.geom.thickness_mm();
        let two_over_d = T::of(2.0) / self.geom.thickness_cm();
        let four = T::of(4.0);
        let constants = |k: usize, z: Complex<T>, phi: T| -> Option<(T, T, T, T)> {
            let f = T::of_usize(k) * df;
            let n_gain = c / (T::TAU() * f * d_mm);
            let n = T::one() + n_gain * phi;
            let mag = z.norm();
            let arg = mag / r[k].norm() * (n + T::one()).powi(2) / (four * n);
            if !(n > T::zero()) || !(mag > T::zero()) || !(arg > T::zero()) || !arg.is_finite() {
                return None;
            }
            Some((n, -two_over_d * arg.ln(), n_gain, mag))
        };
        struct Bin<T> {
            k: usize,
            n_gain: T,
            n1: T,
            en: T,
            ea: T,
            mag: T,
        }
        let mut used = Vec::new();
        for k in 0..s.len() {
            if !(self.mask[k] && input.valid[k]) {
                continue;
            }
            let (Some((n0, a0, _, _)), Some((n1, a1, n_gain, mag))) =
                (constants(k, s0[k], phase0[k]), constants(k, s[k], phase[k]))
            else {
                continue;
            };
            used.push(Bin { k, n_gain, n1, en: n0 - n1, ea: a0 - a1, mag });
        }
        if used.is_empty() {
            return Ok(empty(x.len()));
        }
        let m = T::of_usize(used.len());
        let l_re = used.iter().map(|b| b.en * b.en).sum::<T>() / m;
        let l_ab = used.iter().map(|b| b.ea * b.ea).sum::<T>() / m;
        let mean_abs_dn = used.iter().map(|b| b.en.abs()).sum::<T>() / m;

        let (grad_re, grad_ab) = if want_grad {
            let zero = Complex::new(T::zero(), T::zero());
            let mut g_re = vec![zero; s.len()];
            let mut g_ab = vec![zero; s.len()];
            let two = T::of(2.0);
            for b in &used {
                let z = s[b.k];
                let m2 = b.mag * b.mag;
                // d(phase delay)/d(Re, Im) of the reconstruction bin.
                let dphi = Complex::new(z.im / m2, -z.re / m2);
                // d|S|/d(Re, Im).
                let dmag = Complex::new(z.re / b.mag, z.im / b.mag);
                let dl_dn = -two * b.en / m;
                g_re[b.k] = dphi * (dl_dn * b.n_gain);
                let dl_da = -two * b.ea / m;
                let da_dmag = -two_over_d / b.mag;
                let da_dn = -two_over_d * (two / (b.n1 + T::one()) - T::one() / b.n1);
                g_ab[b.k] = dmag * (dl_da * da_dmag) + dphi * (dl_da * da_dn * b.n_gain);
            }
            (Some(self.plan.adjoint_real(&g_re, x.len())), Some(self.plan.adjoint_real(&g_ab, x.len())))
        } else {
            (None, None)
        };
        Ok(PhysicsTerms { l_re, l_ab, bins: used.len(), mean_abs_dn, grad_re, grad_ab })
    }

    /// Batch means of `L_re` and `L_ab`.
    pub fn loss_physics<A: AsRef<[T]>, B: AsRef<[T]>>(&self, x: &[A], xh: &[B]) -> Result<(T, T)> {
        if x.len() != xh.len() || x.is_empty() {
            return Err(Error::Dimension("batch sizes must match and be non-zero".into()));
        }
        let (mut re, mut ab) = (T::zero(), T::zero());
        for (a, b) in x.iter().zip(xh) {
            let t = self.terms(a.as_ref(), b.as_ref(), false)?;
            re += t.l_re;
            ab += t.l_ab;
        }
        let n = T::of_usize(x.len());
        Ok((re / n, ab / n))
    }
}
