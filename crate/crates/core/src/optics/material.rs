use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// One `(frequency, n, alpha)` knot of a [`MaterialModel`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlPoint<T> {
    pub freq_thz: T,
    pub n: T,
    pub alpha_cm: T,
}

/// Piecewise-linear optical constants with constant extrapolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMaterial<T>", bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct MaterialModel<T> {
    points: Vec<ControlPoint<T>>,
}

#[derive(Deserialize)]
struct RawMaterial<T> {
    points: Vec<ControlPoint<T>>,
}

impl<T: Real> TryFrom<RawMaterial<T>> for MaterialModel<T> {
    type Error = Error;

    fn try_from(raw: RawMaterial<T>) -> Result<Self> {
        Self::new(raw.points)
    }
}

impl<T: Real> MaterialModel<T> {
    pub fn new(points: Vec<ControlPoint<T>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Model("material needs at least one control point".into()));
        }
        for p in &points {
            if !p.freq_thz.is_finite() || !p.n.is_finite() || !p.alpha_cm.is_finite() {
                return Err(Error::Model("control point values must be finite".into()));
            }
            if p.n < T::one() {
                return Err(Error::Model(format!("refractive index {} below 1", p.n)));
            }
            if p.alpha_cm < T::zero() {
                return Err(Error::Model(format!("negative absorption {}", p.alpha_cm)));
            }
        }
        if points.windows(2).any(|w| w[1].freq_thz <= w[0].freq_thz) {
            return Err(Error::Model("control frequencies must be strictly increasing".into()));
        }
        Ok(Self { points })
    }

    /// Frequency-independent material.
    pub fn constant(n: T, alpha_cm: T) -> Result<Self> {
        Self::new(vec![ControlPoint { freq_thz: T::one(), n, alpha_cm }])
    }

    pub fn vacuum() -> Self {
        Self::constant(T::one(), T::zero()).expect("vacuum is a valid material")
    }

    pub fn points(&self) -> &[ControlPoint<T>] {
        &self.points
    }

    /// `(n, alpha)` at frequency `f`.
    pub fn at(&self, f: T) -> (T, T) {
        let pts = &self.points;
        let first = pts[0];
        let last = pts[pts.len() - 1];
        if f <= first.freq_thz {
            return (first.n, first.alpha_cm);
        }
        if f >= last.freq_thz {
            return (last.n, last.alpha_cm);
        }
        let hi = pts.partition_point(|p| p.freq_thz <= f);
        let (a, b) = (pts[hi - 1], pts[hi]);
        let w = (f - a.freq_thz) / (b.freq_thz - a.freq_thz);
        (a.n + w * (b.n - a.n), a.alpha_cm + w * (b.alpha_cm - a.alpha_cm))
    }
}

/// Evaluates the material at each frequency.
pub fn sample_material<T: Real>(material: &MaterialModel<T>, frequencies: &[T]) -> Result<(Vec<T>, Vec<T>)> {
    if let Some(f) = frequencies.iter().find(|f| !f.is_finite() || **f <= T::zero()) {
        return Err(Error::InvalidInput(format!("query frequency {f} must be finite and positive")));
    }
    Ok(frequencies.iter().map(|&f| material.at(f)).unzip())
}
