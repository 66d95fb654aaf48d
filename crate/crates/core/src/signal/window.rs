use std::ops::Range;

use super::trace::PulseTrace;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Taper shape of a [`Window`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowKind<T> {
    Rectangular,
    /// Symmetric Hann: `0.5 - 0.5 cos(2 pi j / (M - 1))`.
    Hann,
    /// Tukey window with the given taper fraction in `[0, 1]`.
    Tukey(T),
}

/// Time-domain window over the half-open sample range `range`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window<T> {
    pub kind: WindowKind<T>,
    pub range: Range<usize>,
}

impl<T: Real> Window<T> {
    pub fn new(kind: WindowKind<T>, range: Range<usize>) -> Self {
        Self { kind, range }
    }

    pub fn full(kind: WindowKind<T>, nt: usize) -> Self {
        Self { kind, range: 0..nt }
    }

    /// Weights for the samples inside the range.
    pub fn weights(&self) -> Result<Vec<T>> {
        let m = self.range.len();
        let half = T::of(0.5);
        let w = match self.kind {
            WindowKind::Rectangular => vec![T::one(); m],
            WindowKind::Hann => hann(m),
            WindowKind::Tukey(r) => {
                if !(r >= T::zero() && r <= T::one()) {
                    return Err(Error::InvalidInput(format!("tukey taper fraction {r} outside [0, 1]")));
                }
                if r == T::zero() || m <= 1 {
                    vec![T::one(); m]
                } else if r == T::one() {
                    hann(m)
                } else {
                    let span = T::of_usize(m - 1);
                    let width = (r * span / T::of(2.0)).floor().to_usize().unwrap_or(0);
                    let pi = T::PI();
                    (0..m)
                        .map(|j| {
                            let n = T::of_usize(j);
                            if j <= width {
                                half * (T::one() + (pi * (-T::one() + T::of(2.0) * n / (r * span))).cos())
                            } else if j >= m - width - 1 {
                                half * (T::one()
                                    + (pi * (-T::of(2.0) / r + T::one() + T::of(2.0) * n / (r * span)))
                                        .cos())
                            } else {
                                T::one()
                            }
                        })
                        .collect()
                }
            }
        };
        Ok(w)
    }
}

fn hann<T: Real>(m: usize) -> Vec<T> {
    if m == 1 {
        return vec![T::one()];
    }
    let span = T::of_usize(m - 1);
    (0..m)
        .map(|j| T::of(0.5) - T::of(0.5) * (T::TAU() * T::of_usize(j) / span).cos())
        .collect()
}

/// Pointwise product with the window; samples outside the range become zero.
pub fn apply_window<T: Real>(trace: &PulseTrace<T>, window: &Window<T>) -> Result<PulseTrace<T>> {
    let Range { start, end } = window.range;
    if start >= end || end > trace.len() {
        return Err(Error::InvalidInput(format!(
            "window range {start}..{end} not inside a {}-sample trace",
            trace.len()
        )));
    }
    let w = window.weights()?;
    let mut out = vec![T::zero(); trace.len()];
    for (k, wk) in (start..end).zip(w) {
        out[k] = trace.samples()[k] * wk;
    }
    trace.with_samples(out)
}
