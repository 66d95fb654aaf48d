use super::map::ScalarMap;
use super::scan::ScanCube;
use crate::error::{Error, Result};
use crate::optics::{extract_constants, Band, SampleGeometry};
use crate::scalar::Real;
use crate::signal::{default_transform_len, unwrap_phase, Anchor, FftPlan, PulseTrace, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceKind {
    Amplitude,
    /// Unwrapped phase delay `-arg E(f)`, unwrapped upward from DC.
    Phase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constant {
    RefractiveIndex,
    Absorption,
}

/// Sample thickness, either one value or one per pixel (mm).
#[derive(Debug, Clone, PartialEq)]
pub enum Thickness<T> {
    Uniform(T),
    PerPixel(Vec<T>),
}

impl<T: Real> Thickness<T> {
    fn at(&self, p: usize) -> T {
        match self {
            Thickness::Uniform(d) => *d,
            Thickness::PerPixel(d) => d[p],
        }
    }
}

fn slice_bin<T: Real>(cube: &ScanCube<T>, f: T) -> Result<(FftPlan<T>, usize, T)> {
    let len = default_transform_len(cube.nt());
    let df = T::one() / (T::of_usize(len) * cube.dt());
    let nyquist = T::of_usize(len / 2) * df;
    if !(f > T::zero()) || f > nyquist {
        return Err(Error::InvalidInput(format!("frequency {f} THz outside (0, {nyquist}]")));
    }
    let k = (f / df).round().to_usize().unwrap_or(0).min(len / 2);
    Ok((FftPlan::new(len), k, df))
}

/// Amplitude or phase of every pixel at the bin nearest `f` (THz).
pub fn frequency_slice<T: Real>(cube: &ScanCube<T>, f: T, kind: SliceKind) -> Result<ScalarMap<T>> {
    let (plan, k, df) = slice_bin(cube, f)?;
    let realized = T::of_usize(k) * df;
    let values = cube.map_pixels(|_, tr| {
        let bins = plan.forward_real(tr);
        match kind {
            SliceKind::Amplitude => Some(bins[k].norm()),
            SliceKind::Phase => {
                let peak = bins.iter().fold(T::zero(), |m, z| m.max(z.norm()));
                if !(peak > T::zero()) || bins[k].norm() <= peak * T::of(1e-12) {
                    return None;
                }
                let wrapped: Vec<T> = bins[..=k].iter().map(|z| -z.arg()).collect();
                unwrap_phase(&wrapped, Anchor::None).ok().map(|u| u[k])
            }
        }
    });
    let (name, units) = match kind {
        SliceKind::Amplitude => ("amplitude", "a.u."),
        SliceKind::Phase => ("phase", "rad"),
    };
    ScalarMap::from_options(
        cube.nx(),
        cube.ny(),
        values,
        format!("{name} @ {:.6} THz (df {:.6} THz)", realized, df),
        units,
    )
}

/// Refractive index or absorption map at the bin nearest `f`.
///
/// Each pixel is extracted against `reference`; pixels whose bin is masked
/// (or whose extraction has no valid band) are invalid.
pub fn constants_map<T: Real>(
    cube: &ScanCube<T>,
    reference: &PulseTrace<T>,
    thickness: &Thickness<T>,
    f: T,
    which: Constant,
    band: &Band<T>,
) -> Result<ScalarMap<T>> {
    if reference.len() != cube.nt() || (reference.dt() - cube.dt()).abs() > cube.dt() * T::of(1e-9) {
        return Err(Error::Dimension(format!(
            "reference ({} samples, dt {}) does not match cube ({} samples, dt {})",
            reference.len(),
            reference.dt(),
            cube.nt(),
            cube.dt()
        )));
    }
    let geoms = match thickness {
        Thickness::Uniform(d) => vec![SampleGeometry::new(*d)?],
        Thickness::PerPixel(ds) => {
            if ds.len() != cube.pixels() {
                return Err(Error::Dimension(format!(
                    "{} thickness values for {} pixels",
                    ds.len(),
                    cube.pixels()
                )));
            }
            ds.iter().map(|&d| SampleGeometry::new(d)).collect::<Result<Vec<_>>>()?
        }
    };
    let (plan, k, df) = slice_bin(cube, f)?;
    let ref_spec = Spectrum::new(df, reference.t0(), plan.forward_real(reference.samples()))?;
    // Surface configuration errors (band, floor) before the per-pixel loop.
    crate::optics::reference_mask(&ref_spec, band)?;
    let values = cube.map_pixels(|p, tr| {
        let geom = match thickness {
            Thickness::Uniform(_) => geoms[0],
            Thickness::PerPixel(_) => geoms[p],
        };
        debug_assert_eq!(geom.thickness_mm(), thickness.at(p));
        let sample = Spectrum::new(df, cube.t0(), plan.forward_real(tr)).ok()?;
        let c = extract_constants(&sample, &ref_spec, &geom, band).ok()?;
        c.valid[k].then(|| match which {
            Constant::RefractiveIndex => c.n[k],
            Constant::Absorption => c.alpha[k],
        })
    });
    let (name, units) = match which {
        Constant::RefractiveIndex => ("refractive index", ""),
        Constant::Absorption => ("absorption", "1/cm"),
    };
    ScalarMap::from_options(
        cube.nx(),
        cube.ny(),
        values,
        format!("{name} @ {:.6} THz (df {:.6} THz)", T::of_usize(k) * df, df),
        units,
    )
}
