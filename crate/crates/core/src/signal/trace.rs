use std::io::{BufRead, Write};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// One time-domain THz waveform sampled on a uniform grid.
///
/// Times are in picoseconds. Sample `k` sits at `t0 + k * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseTrace<T> {
    dt: T,
    t0: T,
    samples: Vec<T>,
}

impl<T: Real> PulseTrace<T> {
    pub fn new(dt: T, t0: T, samples: Vec<T>) -> Result<Self> {
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
        }
        if !t0.is_finite() {
            return Err(Error::InvalidInput("t0 must be finite".into()));
        }
        if samples.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "trace needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if let Some(k) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite sample at index {k}")));
        }
        Ok(Self { dt, t0, samples })
    }

    pub fn zeros(dt: T, t0: T, nt: usize) -> Result<Self> {
        Self::new(dt, t0, vec![T::zero(); nt])
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn t0(&self) -> T {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn time(&self, k: usize) -> T {
        self.t0 + T::of_usize(k) * self.dt
    }

    /// Same time axis, new samples. Length and finiteness are re-validated.
    pub fn with_samples(&self, samples: Vec<T>) -> Result<Self> {
        if samples.len() != self.samples.len() {
            return Err(Error::Dimension(format!(
                "expected {} samples, got {}",
                self.samples.len(),
                samples.len()
            )));
        }
        Self::new(self.dt, self.t0, samples)
    }

    /// Keeps the first `n` samples.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n > self.len() {
            return Err(Error::Dimension(format!("cannot truncate {} samples to {n}", self.len())));
        }
        Self::new(self.dt, self.t0, self.samples[..n].to_vec())
    }

    pub fn scaled(&self, k: T) -> Result<Self> {
        Self::new(self.dt, self.t0, self.samples.iter().map(|&s| s * k).collect())
    }

    pub fn max_abs(&self) -> T {
        self.samples.iter().fold(T::zero(), |m, s| m.max(s.abs()))
    }
}

/// Complex spectrum of a real trace over the non-negative frequencies `k * df`.
///
/// Frequencies are in THz when the generating trace used picoseconds.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    df: T,
    t0: T,
    bins: Vec<Complex<T>>,
}

impl<T: Real> Spectrum<T> {
    pub fn new(df: T, t0: T, bins: Vec<Complex<T>>) -> Result<Self> {
        if !(df > T::zero()) || !df.is_finite() {
            return Err(Error::InvalidInput(format!("frequency step must be positive, got {df}")));
        }
        if bins.is_empty() {
            return Err(Error::InvalidInput("spectrum has no bins".into()));
        }
        Ok(Self { df, t0, bins })
    }

    pub fn df(&self) -> T {
        self.df
    }

    /// Time of the first sample of the generating trace.
    pub fn t0(&self) -> T {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn bins(&self) -> &[Complex<T>] {
        &self.bins
    }

    pub fn frequency(&self, k: usize) -> T {
        T::of_usize(k) * self.df
    }

    pub fn frequencies(&self) -> Vec<T> {
        (0..self.bins.len()).map(|k| self.frequency(k)).collect()
    }

    pub fn amplitude(&self) -> Vec<T> {
        self.bins.iter().map(|z| z.norm()).collect()
    }

    /// Principal-value phase `atan2(im, re)` per bin.
    pub fn phase(&self) -> Vec<T> {
        self.bins.iter().map(|z| z.arg()).collect()
    }

    /// Index of the bin whose frequency is closest to `f`.
    pub fn nearest_bin(&self, f: T) -> usize {
        let k = (f / self.df).round();
        let last = self.bins.len() - 1;
        k.to_usize().map_or(if k > T::zero() { last } else { 0 }, |k| k.min(last))
    }

    /// Largest representable frequency (the last bin).
    pub fn max_frequency(&self) -> T {
        self.frequency(self.bins.len() - 1)
    }

    /// `true` if both spectra share bin count and spacing.
    pub fn same_grid(&self, other: &Self) -> bool {
        self.bins.len() == other.bins.len()
            && (self.df - other.df).abs() <= T::epsilon() * T::of(16.0) * self.df
    }

    pub fn map_bins(&self, f: impl FnMut(usize, Complex<T>) -> Complex<T>) -> Self {
        let mut f = f;
        Self {
            df: self.df,
            t0: self.t0,
            bins: self.bins.iter().enumerate().map(|(k, &z)| f(k, z)).collect(),
        }
    }
}

/// Writes `time_ps,amplitude` rows with 17 significant digits.
pub fn write_trace_csv<T: Real, W: Write>(trace: &PulseTrace<T>, mut out: W) -> Result<()> {
    writeln!(out, "time_ps,amplitude")?;
    for (k, s) in trace.samples().iter().enumerate() {
        writeln!(out, "{:.16e},{:.16e}", trace.time(k).to_f64_lossy(), s.to_f64_lossy())?;
    }
    Ok(())
}

/// Reads a trace CSV. The time axis must be uniform to within 1e-6 of `dt`.
pub fn read_trace_csv<R: BufRead>(input: R) -> Result<PulseTrace<f64>> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty trace file".into()))??;
    if header.trim() != "time_ps,amplitude" {
        return Err(Error::Format(format!("unexpected trace header `{}`", header.trim())));
    }
    let mut times = Vec::new();
    let mut samples = Vec::new();
    for (row, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (t, a) = line
            .split_once(',')
            .ok_or_else(|| Error::Format(format!("row {}: expected two columns", row + 2)))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Format(format!("row {}: {e}", row + 2)))
        };
        times.push(parse(t)?);
        samples.push(parse(a)?);
    }
    if times.len() < 2 {
        return Err(Error::Format("trace needs at least 2 rows".into()));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    for (k, t) in times.iter().enumerate() {
        let expected = times[0] + k as f64 * dt;
        if (t - expected).abs() > 1e-6 * dt.abs().max(1e-12) {
            return Err(Error::Format(format!("non-uniform time axis at row {}", k + 2)));
        }
    }
    PulseTrace::new(dt, times[0], samples).map_err(|e| match e {
        Error::InvalidInput(m) => Error::Format(m),
        other => other,
    })
}
