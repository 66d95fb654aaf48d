//! Synthetic two-class scan cubes with known optical ground truth.
//!
//! Each pixel is the forward-model transmission of a reference pulse through
//! the material of the region it belongs to, plus seeded Gaussian noise.
//! Noise is drawn from a ChaCha stream selected by the pixel index, so the
//! cube does not depend on the order in which pixels are generated.

mod layout;

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use layout::{Class, RegionKind, Shape};

use crate::cube::ScanCube;
use crate::error::{Error, Result};
use crate::optics::{apply_forward_model, MaterialModel, SampleGeometry};
use crate::signal::{forward_transform, inverse_transform, PulseTrace};

/// Differentiated-Gaussian reference pulse: peak `amplitude` at
/// `center_ps - width_ps / sqrt(2)`, trough mirrored after the centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseParams {
    pub center_ps: f64,
    pub width_ps: f64,
    pub amplitude: f64,
}

impl Default for PulseParams {
    fn default() -> Self {
        Self { center_ps: 15.0, width_ps: 0.2, amplitude: 1.0 }
    }
}

/// One region of the phantom: where it is, what class it belongs to, and
/// what it is made of.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layout {
    pub region: RegionKind,
    pub class: Class,
    pub shape: Shape,
    pub material: MaterialModel<f64>,
    pub thickness_mm: f64,
}

/// Full description of a synthetic scan. Serialized as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomSpec {
    #[serde(default)]
    pub name: String,
    pub nx: usize,
    pub ny: usize,
    pub nt: usize,
    pub dt_ps: f64,
    #[serde(default = "default_dx")]
    pub dx_mm: f64,
    #[serde(default)]
    pub t0_ps: f64,
    #[serde(default)]
    pub reference: PulseParams,
    /// Painted in order; a pixel belongs to the last layout whose shape covers it.
    pub layouts: Vec<Layout>,
    pub noise_std: f64,
    pub seed: u64,
}

fn default_dx() -> f64 {
    0.5
}

/// Default time step: 1700 ps over 20480 samples.
pub const DEFAULT_DT_PS: f64 = 1700.0 / 20480.0;
pub const DEFAULT_NT: usize = 3072;

pub const PRESET_NAMES: [&str; 4] = ["leaf-healthy", "leaf-infected", "root-healthy", "root-infected"];

/// Shipped preset by name.
pub fn preset(name: &str) -> Result<PhantomSpec> {
    let text = match name {
        "leaf-healthy" => include_str!("../../presets/leaf-healthy.json"),
        "leaf-infected" => include_str!("../../presets/leaf-infected.json"),
        "root-healthy" => include_str!("../../presets/root-healthy.json"),
        "root-infected" => include_str!("../../presets/root-infected.json"),
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown preset `{other}` (expected one of {})",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    PhantomSpec::from_json(text)
}

impl PhantomSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::InvalidInput("phantom grid must be non-empty".into()));
        }
        if self.nt < 256 {
            return Err(Error::InvalidInput(format!("phantom needs nt >= 256, got {}", self.nt)));
        }
        if !(self.dt_ps > 0.0) || !(self.dx_mm > 0.0) || !self.t0_ps.is_finite() {
            return Err(Error::InvalidInput("phantom steps must be positive".into()));
        }
        if !(self.noise_std >= 0.0) || !self.noise_std.is_finite() {
            return Err(Error::InvalidInput(format!("noise_std {} must be >= 0", self.noise_std)));
        }
        let p = self.reference;
        if !(p.width_ps > 0.0) || !p.center_ps.is_finite() || !p.amplitude.is_finite() {
            return Err(Error::InvalidInput("reference pulse needs a positive width".into()));
        }
        if self.layouts.is_empty() {
            return Err(Error::InvalidInput("phantom needs at least one layout".into()));
        }
        for l in &self.layouts {
            SampleGeometry::new(l.thickness_mm)?;
            l.shape.validate()?;
        }
        self.region_map().map(|_| ())
    }

    /// Layout index per pixel (y-major).
    pub fn region_map(&self) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for y in 0..self.ny {
            for x in 0..self.nx {
                let idx = self
                    .layouts
                    .iter()
                    .rposition(|l| l.shape.contains(x as f64, y as f64))
                    .ok_or_else(|| {
                        Error::InvalidInput(format!("pixel ({x}, {y}) is not covered by any layout"))
                    })?;
                out.push(idx);
            }
        }
        Ok(out)
    }
}

/// Synthetic cube with per-pixel class labels and the materials that made it.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCube {
    pub cube: ScanCube<f64>,
    pub labels: Vec<Class>,
    pub regions: Vec<RegionKind>,
    pub reference: PulseTrace<f64>,
    pub truth: Truth,
}

impl LabeledCube {
    /// Pixel indices carrying `class`.
    pub fn pixels_of(&self, class: Class) -> Vec<usize> {
        (0..self.labels.len()).filter(|&p| self.labels[p] == class).collect()
    }
}

/// Per-layout ground truth, written as the truth JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub layouts: Vec<TruthEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthEntry {
    pub region: RegionKind,
    pub class: Class,
    pub thickness_mm: f64,
    pub pixels: usize,
    pub material: MaterialModel<f64>,
}

/// Reference pulse of the phantom.
pub fn make_reference(spec: &PhantomSpec) -> Result<PulseTrace<f64>> {
    if spec.nt < 256 {
        return Err(Error::InvalidInput(format!("reference needs nt >= 256, got {}", spec.nt)));
    }
    PulseTrace::new(spec.dt_ps, spec.t0_ps, pulse_samples(&spec.reference, spec.nt, spec.dt_ps, spec.t0_ps))
}

/// `nt` samples of the differentiated-Gaussian pulse starting at `t0_ps`.
pub fn pulse_samples(p: &PulseParams, nt: usize, dt_ps: f64, t0_ps: f64) -> Vec<f64> {
    let norm = (2.0 * std::f64::consts::E).sqrt();
    (0..nt)
        .map(|k| {
            let u = (t0_ps + k as f64 * dt_ps - p.center_ps) / p.width_ps;
            -p.amplitude * norm * u * (-u * u).exp()
        })
        .collect()
}

/// Generator for the additive noise of pixel `p`.
pub fn pixel_rng(seed: u64, p: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(p as u64);
    rng
}

/// Renders the phantom.
pub fn synthesize(spec: &PhantomSpec) -> Result<LabeledCube> {
    spec.validate()?;
    let reference = make_reference(spec)?;
    let regions = spec.region_map()?;
    let ref_spec = forward_transform(&reference, Some(spec.nt))?;
    let clean: Vec<Vec<f64>> = spec
        .layouts
        .iter()
        .map(|l| {
            let geom = SampleGeometry::new(l.thickness_mm)?;
            let s = apply_forward_model(&ref_spec, &l.material, &geom);
            Ok(inverse_transform(&s, spec.nt)?.into_samples())
        })
        .collect::<Result<_>>()?;
    let noise = Normal::new(0.0, spec.noise_std).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut data = Vec::with_capacity(regions.len() * spec.nt);
    for (p, &r) in regions.iter().enumerate() {
        if spec.noise_std > 0.0 {
            let mut rng = pixel_rng(spec.seed, p);
            data.extend(clean[r].iter().map(|&v| v + noise.sample(&mut rng)));
        } else {
            data.extend_from_slice(&clean[r]);
        }
    }
    let cube = ScanCube::new(spec.nx, spec.ny, spec.nt, spec.dx_mm, spec.dt_ps, spec.t0_ps, data)?;
    let mut counts = vec![0usize; spec.layouts.len()];
    regions.iter().for_each(|&r| counts[r] += 1);
    let truth = Truth {
        layouts: spec
            .layouts
            .iter()
            .zip(counts)
            .map(|(l, pixels)| TruthEntry {
                region: l.region,
                class: l.class,
                thickness_mm: l.thickness_mm,
                pixels,
                material: l.material.clone(),
            })
            .collect(),
    };
    Ok(LabeledCube {
        labels: regions.iter().map(|&r| spec.layouts[r].class).collect(),
        regions: regions.iter().map(|&r| spec.layouts[r].region).collect(),
        cube,
        reference,
        truth,
    })
}

/// Writes `x,y,class` rows (class ids: 0 background, 1 healthy, 2 infected).
pub fn write_labels_csv<W: Write>(nx: usize, labels: &[Class], mut out: W) -> Result<()> {
    writeln!(out, "x,y,class")?;
    for (p, c) in labels.iter().enumerate() {
        writeln!(out, "{},{},{}", p % nx, p / nx, c.id())?;
    }
    Ok(())
}

/// Reads a labels CSV back into a y-major class grid of `nx * ny` pixels.
pub fn read_labels_csv<R: BufRead>(input: R, nx: usize, ny: usize) -> Result<Vec<Class>> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty labels file".into()))??;
    if header.trim() != "x,y,class" {
        return Err(Error::Format(format!("unexpected labels header `{}`", header.trim())));
    }
    let mut seen: BTreeMap<usize, Class> = BTreeMap::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.trim().split(',').collect();
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| Error::Format(format!("labels row {}: {e}", i + 2)))
        };
        if cols.len() != 3 {
            return Err(Error::Format(format!("labels row {}: expected 3 columns", i + 2)));
        }
        let (x, y, c) = (parse(cols[0])?, parse(cols[1])?, parse(cols[2])?);
        if x >= nx || y >= ny {
            return Err(Error::Format(format!("labels row {}: pixel ({x}, {y}) outside grid", i + 2)));
        }
        seen.insert(y * nx + x, Class::from_id(c)?);
    }
    if seen.len() != nx * ny {
        return Err(Error::Format(format!("labels cover {} of {} pixels", seen.len(), nx * ny)));
    }
    Ok(seen.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::forward_transform;

    fn vacuum_spec(noise_std: f64) -> PhantomSpec {
        PhantomSpec {
            name: "vacuum".into(),
            nx: 3,
            ny: 2,
            nt: 512,
            dt_ps: DEFAULT_DT_PS,
            dx_mm: 0.5,
            t0_ps: 0.0,
            reference: PulseParams::default(),
            layouts: vec![Layout {
                region: RegionKind::Background,
                class: Class::Background,
                shape: Shape::Full,
                material: MaterialModel::vacuum(),
                thickness_mm: 1.0,
            }],
            noise_std,
            seed: 1,
        }
    }

    #[test]
    fn default_reference_covers_band() {
        let spec = preset("leaf-healthy").unwrap();
        let r = make_reference(&spec).unwrap();
        let s = forward_transform(&r, None).unwrap();
        let amp = s.amplitude();
        let peak = amp.iter().cloned().fold(0.0, f64::max);
        for f in [0.2, 1.0, 2.0] {
            assert!(amp[s.nearest_bin(f)] >= 1e-3 * peak, "weak at {f} THz");
        }
        assert!((r.max_abs() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn zero_amplitude_reference() {
        let mut spec = vacuum_spec(0.0);
        spec.reference.amplitude = 0.0;
        assert!(make_reference(&spec).unwrap().samples().iter().all(|&v| v == 0.0));
        spec.nt = 100;
        assert!(make_reference(&spec).is_err());
    }

    #[test]
    fn vacuum_without_noise_reproduces_reference() {
        let lc = synthesize(&vacuum_spec(0.0)).unwrap();
        for p in 0..lc.cube.pixels() {
            for (a, b) in lc.cube.trace_at(p).iter().zip(lc.reference.samples()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn deterministic_and_pixel_keyed() {
        let a = synthesize(&vacuum_spec(0.01)).unwrap();
        let b = synthesize(&vacuum_spec(0.01)).unwrap();
        assert_eq!(a.cube, b.cube);
        let mut other = vacuum_spec(0.01);
        other.seed = 2;
        assert_ne!(synthesize(&other).unwrap().cube, a.cube);
    }

    #[test]
    fn uncovered_pixels_rejected() {
        let mut spec = vacuum_spec(0.0);
        spec.layouts[0].shape = Shape::Rect { x0: 0.0, y0: 0.0, x1: 1.0, y1: 1.0 };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn bad_material_in_json_is_a_model_error() {
        let mut json: serde_json::Value = serde_json::from_str(&vacuum_spec(0.0).to_json()).unwrap();
        json["layouts"][0]["material"]["points"][0]["n"] = 0.5.into();
        assert!(PhantomSpec::from_json(&json.to_string()).is_err());
        let mut json: serde_json::Value = serde_json::from_str(&vacuum_spec(0.0).to_json()).unwrap();
        json["bogus"] = 1.into();
        assert!(PhantomSpec::from_json(&json.to_string()).is_err());
    }

    #[test]
    fn labels_round_trip() {
        let labels = vec![Class::Background, Class::Healthy, Class::Infected, Class::Healthy];
        let mut buf = Vec::new();
        write_labels_csv(2, &labels, &mut buf).unwrap();
        assert_eq!(read_labels_csv(buf.as_slice(), 2, 2).unwrap(), labels);
        assert!(read_labels_csv(buf.as_slice(), 3, 2).is_err());
    }

    #[test]
    fn presets_parse_and_cover() {
        for name in PRESET_NAMES {
            let spec = preset(name).unwrap();
            assert_eq!(spec.name, name);
            let regions = spec.region_map().unwrap();
            assert_eq!(regions.len(), spec.nx * spec.ny);
        }
        assert!(preset("stem").is_err());
    }
}
