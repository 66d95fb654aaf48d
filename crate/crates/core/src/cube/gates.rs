use std::ops::Range;

use super::map::ScalarMap;
use super::scan::ScanCube;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signal::PulseTrace;

/// Four ordered time gates around the main pulse.
///
/// `A1` precedes the first extremum, `A2` spans the first extremum to the
/// zero crossing, `A3` runs from the crossing past the second extremum,
/// `A4` covers the remaining tail.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateRegions {
    pub a1: Range<usize>,
    pub a2: Range<usize>,
    pub a3: Range<usize>,
    pub a4: Range<usize>,
}

impl GateRegions {
    pub fn regions(&self) -> [Range<usize>; 4] {
        [self.a1.clone(), self.a2.clone(), self.a3.clone(), self.a4.clone()]
    }

    /// Region by 1-based name index (`A1` = 1).
    pub fn region(&self, index: usize) -> Result<Range<usize>> {
        match index {
            1..=4 => Ok(self.regions()[index - 1].clone()),
            _ => Err(Error::Index(format!("gate A{index} does not exist (A1-A4)"))),
        }
    }

    pub fn shifted(&self, offset: usize) -> Self {
        let s = |r: &Range<usize>| r.start + offset..r.end + offset;
        Self { a1: s(&self.a1), a2: s(&self.a2), a3: s(&self.a3), a4: s(&self.a4) }
    }
}

/// Per-region statistic for [`gate_image`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GateStatistic {
    #[default]
    PeakToPeak,
    MeanAbs,
    Energy,
}

impl GateStatistic {
    pub fn evaluate<T: Real>(self, x: &[T]) -> T {
        match self {
            GateStatistic::PeakToPeak => {
                let (lo, hi) = x
                    .iter()
                    .fold((T::infinity(), T::neg_infinity()), |(l, h), &v| (l.min(v), h.max(v)));
                hi - lo
            }
            GateStatistic::MeanAbs => x.iter().map(|v| v.abs()).sum::<T>() / T::of_usize(x.len()),
            GateStatistic::Energy => x.iter().map(|&v| v * v).sum(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateStatistic::PeakToPeak => "peak_to_peak",
            GateStatistic::MeanAbs => "mean_abs",
            GateStatistic::Energy => "energy",
        }
    }
}

/// Segments a trace at its peak, zero crossing and trough.
pub fn derive_gates<T: Real>(trace: &PulseTrace<T>) -> Result<GateRegions> {
    let x = trace.samples();
    let nt = x.len();
    let argext = |better: fn(T, T) -> bool| {
        (1..nt).fold(0, |best, k| if better(x[k], x[best]) { k } else { best })
    };
    let p = argext(|a, b| a > b);
    let q = argext(|a, b| a < b);
    let peak_abs = x[p].abs().max(x[q].abs());
    let tail = &x[3 * nt / 4..];
    let tail_rms = (tail.iter().map(|&v| v * v).sum::<T>() / T::of_usize(tail.len().max(1))).sqrt();
    if !(peak_abs > T::of(10.0) * tail_rms) {
        return Err(Error::Gating(format!(
            "no dominant pulse: |max| {peak_abs} vs trailing RMS {tail_rms}"
        )));
    }
    let (lo, hi) = (p.min(q), p.max(q));
    let mid = (lo + 1..=hi)
        .find(|&k| x[k] * x[lo] <= T::zero())
        .unwrap_or((lo + hi).div_ceil(2))
        .max(lo + 1);
    let half = x[q].abs() / T::of(2.0);
    let mut left = q;
    while left > 0 && x[left - 1].abs() >= half {
        left -= 1;
    }
    let mut right = q;
    while right + 1 < nt && x[right + 1].abs() >= half {
        right += 1;
    }
    let width = right - left + 1;
    let tail_start = hi + width;
    if lo == 0 || tail_start >= nt {
        return Err(Error::Gating(format!(
            "pulse too close to the window edge (extrema at {lo} and {hi}, {nt} samples)"
        )));
    }
    Ok(GateRegions { a1: 0..lo, a2: lo..mid, a3: mid..tail_start, a4: tail_start..nt })
}

/// Per-pixel statistic over a sample-index region.
pub fn gate_image<T: Real>(cube: &ScanCube<T>, region: Range<usize>, statistic: GateStatistic) -> Result<ScalarMap<T>> {
    if region.start >= region.end || region.end > cube.nt() {
        return Err(Error::InvalidInput(format!(
            "region {}..{} not inside {} samples",
            region.start,
            region.end,
            cube.nt()
        )));
    }
    let values = cube.map_pixels(|_, tr| Some(statistic.evaluate(&tr[region.clone()])));
    ScalarMap::from_options(
        cube.nx(),
        cube.ny(),
        values,
        format!("gate {}..{} {}", region.start, region.end, statistic.name()),
        "a.u.",
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Peak at 100, trough at 110, exact zero at 105.
    fn ideal_pulse(nt: usize, offset: usize) -> PulseTrace<f64> {
        let x = (0..nt)
            .map(|k| {
                let t = k as f64 - offset as f64;
                (-(t - 100.0).powi(2) / 8.0).exp() - (-(t - 110.0).powi(2) / 8.0).exp()
            })
            .collect();
        PulseTrace::new(0.1, 0.0, x).unwrap()
    }

    #[test]
    fn ideal_pulse_boundaries() {
        let g = derive_gates(&ideal_pulse(256, 0)).unwrap();
        assert_eq!(g.a1, 0..100);
        assert_eq!(g.a2.start, 100);
        assert_eq!(g.a2.end, 105);
        assert_eq!(g.a4.end, 256);
        // Half-magnitude width of the trough lobe.
        let x = ideal_pulse(256, 0);
        let half = x.samples()[110].abs() / 2.0;
        let w = (0..256).filter(|&k| k > 104 && x.samples()[k].abs() >= half).count();
        assert_eq!(g.a3, 105..110 + w);
        assert_eq!(g.a4.start, 110 + w);
    }

    #[test]
    fn shift_equivariance() {
        let g0 = derive_gates(&ideal_pulse(300, 0)).unwrap();
        let g1 = derive_gates(&ideal_pulse(300, 17)).unwrap();
        assert_eq!(g1.a2, g0.shifted(17).a2);
        assert_eq!(g1.a3, g0.shifted(17).a3);
        assert_eq!(g1.a1.end, g0.a1.end + 17);
        assert_eq!(g1.a4.start, g0.a4.start + 17);
    }

    #[test]
    fn ramp_is_rejected() {
        let ramp = PulseTrace::new(0.1, 0.0, (0..256).map(|k| k as f64).collect()).unwrap();
        assert!(matches!(derive_gates(&ramp), Err(Error::Gating(_))));
    }

    #[test]
    fn statistics_by_hand() {
        let x = [1.0, -1.0];
        assert_eq!(GateStatistic::PeakToPeak.evaluate(&x), 2.0);
        assert_eq!(GateStatistic::MeanAbs.evaluate(&x), 1.0);
        assert_eq!(GateStatistic::Energy.evaluate(&x), 2.0);
    }

    #[test]
    fn gate_image_on_cubes() {
        let zero = ScanCube::new(2, 2, 4, 0.5, 0.1, 0.0, vec![0.0; 16]).unwrap();
        for s in [GateStatistic::PeakToPeak, GateStatistic::MeanAbs, GateStatistic::Energy] {
            let m = gate_image(&zero, 0..4, s).unwrap();
            assert!(m.values.iter().all(|&v| v == 0.0));
        }
        let mut data = vec![0.0; 16];
        data[1] = 1.0;
        data[2] = -1.0;
        let c = ScanCube::new(2, 2, 4, 0.5, 0.1, 0.0, data).unwrap();
        assert_eq!(gate_image(&c, 1..3, GateStatistic::PeakToPeak).unwrap().get(0, 0), Some(2.0));
        assert_eq!(gate_image(&c, 1..3, GateStatistic::MeanAbs).unwrap().get(0, 0), Some(1.0));
        assert_eq!(gate_image(&c, 1..3, GateStatistic::Energy).unwrap().get(0, 0), Some(2.0));
        assert!(gate_image(&c, 3..5, GateStatistic::Energy).is_err());
    }
}
