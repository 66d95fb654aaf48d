use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cube::ScalarMap;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MAX_LEVEL: u16 = u16::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Colormap {
    #[default]
    Grayscale,
    Hot,
    Jet,
}

impl Colormap {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "grayscale" | "gray" => Ok(Colormap::Grayscale),
            "hot" => Ok(Colormap::Hot),
            "jet" => Ok(Colormap::Jet),
            other => Err(Error::InvalidInput(format!("unknown colormap `{other}` (grayscale, hot, jet)"))),
        }
    }

    /// 256-entry RGB table.
    pub fn table(self) -> [[u8; 3]; 256] {
        let unit = |x: f64| (x.clamp(0.0, 1.0) * 255.0).round() as u8;
        let mut table = [[0u8; 3]; 256];
        for (i, rgb) in table.iter_mut().enumerate() {
            let x = i as f64 / 255.0;
            *rgb = match self {
                Colormap::Grayscale => [unit(x); 3],
                Colormap::Hot => [unit(x / 0.365), unit((x - 0.365) / 0.381), unit((x - 0.746) / 0.254)],
                Colormap::Jet => [
                    unit(1.5 - (4.0 * x - 3.0).abs()),
                    unit(1.5 - (4.0 * x - 2.0).abs()),
                    unit(1.5 - (4.0 * x - 1.0).abs()),
                ],
            };
        }
        table
    }
}

/// A map quantized to 16-bit levels. Invalid pixels sit at level 0 and are
/// flagged in `valid`.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub levels: Vec<u16>,
    pub valid: Vec<bool>,
    pub meta: RasterMeta,
}

/// Sidecar metadata written next to every raster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterMeta {
    pub label: String,
    pub units: String,
    pub shared_min: f64,
    pub shared_max: f64,
    pub colormap: Colormap,
    pub width: usize,
    pub height: usize,
    pub invalid_pixels: usize,
}

/// Maps rendered on one joint scale.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderGroup {
    pub shared_min: f64,
    pub shared_max: f64,
    pub colormap: Colormap,
    pub rasters: Vec<Raster>,
}

/// Joint value range over the valid pixels of all maps.
pub fn group_scale<T: Real>(maps: &[&ScalarMap<T>]) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for map in maps {
        for v in map.valid_values() {
            let v = v.to_f64_lossy();
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() {
        return Err(Error::DegenerateRange("no valid pixel to render".into()));
    }
    if !(hi > lo) {
        return Err(Error::DegenerateRange(format!("all valid pixels equal {lo}")));
    }
    Ok((lo, hi))
}

/// 16-bit level of `v` on the scale `[min, max]`.
pub fn level(v: f64, min: f64, max: f64) -> u16 {
    let x = (65535.0 * (v - min) / (max - min)).round();
    x.clamp(0.0, 65535.0) as u16
}

/// Renders one map on an explicit scale.
pub fn render_with_scale<T: Real>(map: &ScalarMap<T>, min: f64, max: f64, colormap: Colormap) -> Result<Raster> {
    if !(min.is_finite() && max.is_finite() && max > min) {
        return Err(Error::DegenerateRange(format!("scale [{min}, {max}] is empty")));
    }
    let levels = map
        .values
        .iter()
        .zip(&map.valid)
        .map(|(&v, &ok)| if ok { level(v.to_f64_lossy(), min, max) } else { 0 })
        .collect();
    let invalid_pixels = map.valid.iter().filter(|v| !**v).count();
    Ok(Raster {
        width: map.nx,
        height: map.ny,
        levels,
        valid: map.valid.clone(),
        meta: RasterMeta {
            label: map.label.clone(),
            units: map.units.clone(),
            shared_min: min,
            shared_max: max,
            colormap,
            width: map.nx,
            height: map.ny,
            invalid_pixels,
        },
    })
}

/// Renders every map on the joint scale of the group.
pub fn render_group<T: Real>(maps: &[&ScalarMap<T>], colormap: Colormap) -> Result<RenderGroup> {
    let (shared_min, shared_max) = group_scale(maps)?;
    let rasters = maps
        .iter()
        .map(|m| render_with_scale(m, shared_min, shared_max, colormap))
        .collect::<Result<_>>()?;
    Ok(RenderGroup { shared_min, shared_max, colormap, rasters })
}

impl Raster {
    /// Mean level over valid pixels.
    pub fn mean_level(&self) -> Option<f64> {
        let (sum, n) = self
            .levels
            .iter()
            .zip(&self.valid)
            .filter(|(_, ok)| **ok)
            .fold((0.0, 0usize), |(s, n), (&l, _)| (s + l as f64, n + 1));
        (n > 0).then(|| sum / n as f64)
    }

    /// Binary PGM, 16-bit big-endian samples.
    pub fn write_pgm<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "P5\n{} {}\n{}\n", self.width, self.height, MAX_LEVEL)?;
        let bytes: Vec<u8> = self.levels.iter().flat_map(|l| l.to_be_bytes()).collect();
        out.write_all(&bytes)?;
        Ok(())
    }

    /// Binary PPM through the colormap table, 8 bits per channel.
    pub fn write_ppm<W: Write>(&self, mut out: W) -> Result<()> {
        let table = self.meta.colormap.table();
        write!(out, "P6\n{} {}\n255\n", self.width, self.height)?;
        let bytes: Vec<u8> = self
            .levels
            .iter()
            .flat_map(|&l| table[((l as u32 * 255 + 32767) / 65535) as usize])
            .collect();
        out.write_all(&bytes)?;
        Ok(())
    }

    /// 8-bit PGM validity mask: 255 valid, 0 invalid.
    pub fn write_mask<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "P5\n{} {}\n255\n", self.width, self.height)?;
        let bytes: Vec<u8> = self.valid.iter().map(|&v| if v { 255 } else { 0 }).collect();
        out.write_all(&bytes)?;
        Ok(())
    }

    pub fn write_meta<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, &self.meta)?;
        Ok(())
    }
}

/// Reads a 16-bit binary PGM written by [`Raster::write_pgm`].
pub fn read_pgm16(bytes: &[u8]) -> Result<(usize, usize, Vec<u16>)> {
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated PGM header".into()));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    let num = |s: &str| s.parse::<usize>().map_err(|_| Error::Format(format!("bad PGM header field `{s}`")));
    if fields[0] != "P5" || num(&fields[3])? != MAX_LEVEL as usize {
        return Err(Error::Format("not a 16-bit P5 image".into()));
    }
    let (w, h) = (num(&fields[1])?, num(&fields[2])?);
    let body = bytes.get(pos..).unwrap_or_default();
    if body.len() != 2 * w * h {
        return Err(Error::Format(format!("PGM body has {} bytes, expected {}", body.len(), 2 * w * h)));
    }
    Ok((w, h, body.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()))
}
