use std::io::Write;

use num_complex::Complex;

use super::material::MaterialModel;
use crate::error::{Error, Result};
use crate::scalar::{Real, SPEED_OF_LIGHT_MM_PER_PS};
use crate::signal::{unwrap_phase, Anchor, Spectrum};

/// Slab thickness in millimetres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleGeometry<T> {
    thickness_mm: T,
}

impl<T: Real> SampleGeometry<T> {
    pub fn new(thickness_mm: T) -> Result<Self> {
        if !(thickness_mm > T::zero()) || !thickness_mm.is_finite() {
            return Err(Error::Geometry(format!("thickness must be positive and finite, got {thickness_mm}")));
        }
        Ok(Self { thickness_mm })
    }

    pub fn thickness_mm(&self) -> T {
        self.thickness_mm
    }

    pub fn thickness_cm(&self) -> T {
        self.thickness_mm / T::of(10.0)
    }
}

/// Frequency band and dynamic-range floor over which constants are reported.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band<T> {
    pub f_min: T,
    pub f_max: T,
    /// Minimum reference magnitude as a fraction of the reference peak.
    pub floor: T,
}

impl<T: Real> Default for Band<T> {
    fn default() -> Self {
        Self { f_min: T::of(0.2), f_max: T::of(2.0), floor: T::of(1e-3) }
    }
}

impl<T: Real> Band<T> {
    pub fn new(f_min: T, f_max: T, floor: T) -> Self {
        Self { f_min, f_max, floor }
    }
}

/// Per-frequency refractive index and absorption coefficient (1/cm).
///
/// Entries whose `valid` flag is false hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct OpticalConstants<T> {
    pub frequencies: Vec<T>,
    pub n: Vec<T>,
    pub alpha: Vec<T>,
    pub valid: Vec<bool>,
}

impl<T: Real> OpticalConstants<T> {
    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    /// Valid `(f, n, alpha)` triples.
    pub fn iter_valid(&self) -> impl Iterator<Item = (T, T, T)> + '_ {
        (0..self.frequencies.len())
            .filter(|&k| self.valid[k])
            .map(|k| (self.frequencies[k], self.n[k], self.alpha[k]))
    }

    /// Index of the bin nearest `f`.
    pub fn nearest(&self, f: T) -> usize {
        let mut best = 0;
        for (k, &fk) in self.frequencies.iter().enumerate() {
            if (fk - f).abs() < (self.frequencies[best] - f).abs() {
                best = k;
            }
        }
        best
    }
}

/// Bins inside the band whose reference magnitude clears the floor.
pub fn reference_mask<T: Real>(reference: &Spectrum<T>, band: &Band<T>) -> Result<Vec<bool>> {
    if !(band.f_min > T::zero()) || !(band.f_max > band.f_min) {
        return Err(Error::InvalidInput(format!(
            "band [{}, {}] must satisfy 0 < f_min < f_max",
            band.f_min, band.f_max
        )));
    }
    if band.f_max > reference.max_frequency() * (T::one() + T::of(1e-12)) {
        return Err(Error::InvalidInput(format!(
            "band edge {} THz beyond Nyquist {} THz",
            band.f_max,
            reference.max_frequency()
        )));
    }
    if !(band.floor >= T::zero()) {
        return Err(Error::InvalidInput(format!("floor {} must be non-negative", band.floor)));
    }
    let amp = reference.amplitude();
    let peak = amp.iter().fold(T::zero(), |m, &a| m.max(a));
    let threshold = band.floor * peak;
    Ok(amp
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            let f = reference.frequency(k);
            f >= band.f_min && f <= band.f_max && a > T::zero() && a >= threshold
        })
        .collect())
}

/// Unwrapped, zero-DC anchored phase delay `arg(E_ref) - arg(E_sam)` in radians.
///
/// Unwrapping runs upward from the lowest masked bin to the highest; bins
/// outside that span are NaN. A pulse delayed by the sample has positive
/// phase delay.
pub fn delay_phase<T: Real>(
    sample: &[Complex<T>],
    reference: &[Complex<T>],
    df: T,
    mask: &[bool],
) -> Result<Vec<T>> {
    let mut out = vec![T::nan(); sample.len()];
    let (Some(first), Some(last)) = (mask.iter().position(|m| *m), mask.iter().rposition(|m| *m)) else {
        return Ok(out);
    };
    let wrapped: Vec<T> = (first..=last).map(|k| (reference[k] * sample[k].conj()).arg()).collect();
    let freqs: Vec<T> = (first..=last).map(|k| T::of_usize(k) * df).collect();
    let unwrapped = unwrap_phase(
        &wrapped,
        Anchor::ZeroDcExtrapolation { frequencies: &freqs, fit_mask: &mask[first..=last] },
    )?;
    out[first..=last].copy_from_slice(&unwrapped);
    Ok(out)
}

/// Refractive index and absorption coefficient from a transmission measurement.
///
/// `n = 1 + c * dphi / (2 pi f d)` and
/// `alpha = -(2/d) ln(r (n+1)^2 / (4 n))` with `r = |E_sam| / |E_ref|`.
pub fn extract_constants<T: Real>(
    sample: &Spectrum<T>,
    reference: &Spectrum<T>,
    geom: &SampleGeometry<T>,
    band: &Band<T>,
) -> Result<OpticalConstants<T>> {
    if !sample.same_grid(reference) {
        return Err(Error::Dimension(format!(
            "sample ({} bins, df {}) and reference ({} bins, df {}) differ",
            sample.len(),
            sample.df(),
            reference.len(),
            reference.df()
        )));
    }
    let mask = reference_mask(reference, band)?;
    let phase = delay_phase(sample.bins(), reference.bins(), reference.df(), &mask)?;
    let c = T::of(SPEED_OF_LIGHT_MM_PER_PS);
    let d_mm = geom.thickness_mm();
    let d_cm = geom.thickness_cm();
    let nf = sample.len();
    let mut out = OpticalConstants {
        frequencies: reference.frequencies(),
        n: vec![T::nan(); nf],
        alpha: vec![T::nan(); nf],
        valid: vec![false; nf],
    };
    for k in (0..nf).filter(|&k| mask[k]) {
        let f = out.frequencies[k];
        let n = T::one() + c * phase[k] / (T::TAU() * f * d_mm);
        let r = sample.bins()[k].norm() / reference.bins()[k].norm();
        let arg = r * (n + T::one()).powi(2) / (T::of(4.0) * n);
        if !(n >= T::one()) || !(arg > T::zero()) || !arg.is_finite() {
            continue;
        }
        out.n[k] = n;
        out.alpha[k] = -(T::of(2.0) / d_cm) * arg.ln();
        out.valid[k] = true;
    }
    if out.valid_count() == 0 {
        return Err(Error::NoBand(format!(
            "no valid bins in [{}, {}] THz above floor {}",
            band.f_min, band.f_max, band.floor
        )));
    }
    Ok(out)
}

/// Sample spectrum for a slab of `material` in the beam path:
/// `E_sam = E_ref * 4n/(n+1)^2 * exp(-alpha d / 2) * exp(-i 2 pi f (n-1) d / c)`.
pub fn apply_forward_model<T: Real>(
    reference: &Spectrum<T>,
    material: &MaterialModel<T>,
    geom: &SampleGeometry<T>,
) -> Spectrum<T> {
    let c = T::of(SPEED_OF_LIGHT_MM_PER_PS);
    let d_mm = geom.thickness_mm();
    let d_cm = geom.thickness_cm();
    reference.map_bins(|k, e| {
        let f = reference.frequency(k);
        let (n, alpha) = material.at(f);
        let fresnel = T::of(4.0) * n / (n + T::one()).powi(2);
        let attenuation = (-alpha * d_cm / T::of(2.0)).exp();
        let delay = -T::TAU() * f * (n - T::one()) * d_mm / c;
        e * Complex::from_polar(fresnel * attenuation, delay)
    })
}

/// Writes `freq_thz,n,alpha_cm,valid`; invalid rows carry `nan,nan,0`.
pub fn write_constants_csv<T: Real, W: Write>(c: &OpticalConstants<T>, mut out: W) -> Result<()> {
    writeln!(out, "freq_thz,n,alpha_cm,valid")?;
    for k in 0..c.frequencies.len() {
        let f = c.frequencies[k].to_f64_lossy();
        if c.valid[k] {
            // adding zero folds -0 into 0 so lossless samples print cleanly
            let (n, a) = (c.n[k].to_f64_lossy() + 0.0, c.alpha[k].to_f64_lossy() + 0.0);
            writeln!(out, "{f:.12e},{n:.12e},{a:.12e},1")?;
        } else {
            writeln!(out, "{f:.12e},nan,nan,0")?;
        }
    }
    Ok(())
}
