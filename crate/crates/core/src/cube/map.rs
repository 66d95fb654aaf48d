use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// One real value per pixel with a validity flag.
///
/// Invalid pixels hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarMap<T> {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<T>,
    pub valid: Vec<bool>,
    pub label: String,
    pub units: String,
}

impl<T: Real> ScalarMap<T> {
    /// Builds a map from optional per-pixel values (`None` = invalid).
    pub fn from_options(
        nx: usize,
        ny: usize,
        values: impl IntoIterator<Item = Option<T>>,
        label: impl Into<String>,
        units: impl Into<String>,
    ) -> Result<Self> {
        let (values, valid): (Vec<T>, Vec<bool>) = values
            .into_iter()
            .map(|v| match v {
                Some(x) if x.is_finite() => (x, true),
                _ => (T::nan(), false),
            })
            .unzip();
        if values.len() != nx * ny {
            return Err(Error::Dimension(format!("{} values for a {nx}x{ny} map", values.len())));
        }
        Ok(Self { nx, ny, values, valid, label: label.into(), units: units.into() })
    }

    pub fn get(&self, x: usize, y: usize) -> Option<T> {
        let p = y * self.nx + x;
        self.valid[p].then_some(self.values[p])
    }

    pub fn valid_values(&self) -> impl Iterator<Item = T> + '_ {
        self.values.iter().zip(&self.valid).filter(|(_, v)| **v).map(|(x, _)| *x)
    }

    /// Mean over valid pixels selected by `select(pixel)`.
    pub fn mean_where(&self, select: impl Fn(usize) -> bool) -> Option<T> {
        let (sum, count) = (0..self.values.len())
            .filter(|&p| self.valid[p] && select(p))
            .fold((T::zero(), 0usize), |(s, c), p| (s + self.values[p], c + 1));
        (count > 0).then(|| sum / T::of_usize(count))
    }

    pub fn mean(&self) -> Option<T> {
        self.mean_where(|_| true)
    }
}

/// Writes `x,y,value` rows in y-major order; invalid pixels are `nan`.
pub fn write_map_csv<T: Real, W: Write>(map: &ScalarMap<T>, mut out: W) -> Result<()> {
    writeln!(out, "x,y,value")?;
    for y in 0..map.ny {
        for x in 0..map.nx {
            match map.get(x, y) {
                Some(v) => writeln!(out, "{x},{y},{:.16e}", v.to_f64_lossy())?,
                None => writeln!(out, "{x},{y},nan")?,
            }
        }
    }
    Ok(())
}

/// Reads a map CSV; the grid size is inferred from the largest coordinates.
pub fn read_map_csv<R: BufRead>(input: R, label: &str) -> Result<ScalarMap<f64>> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty map file".into()))??;
    if header.trim() != "x,y,value" {
        return Err(Error::Format(format!("unexpected map header `{}`", header.trim())));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.trim().split(',').collect();
        if cols.len() != 3 {
            return Err(Error::Format(format!("row {}: expected 3 columns", i + 2)));
        }
        let bad = |e: String| Error::Format(format!("row {}: {e}", i + 2));
        let x: usize = cols[0].parse().map_err(|e| bad(format!("{e}")))?;
        let y: usize = cols[1].parse().map_err(|e| bad(format!("{e}")))?;
        let v: f64 = cols[2].parse().map_err(|e| bad(format!("{e}")))?;
        rows.push((x, y, v));
    }
    let nx = rows.iter().map(|r| r.0).max().map_or(0, |m| m + 1);
    let ny = rows.iter().map(|r| r.1).max().map_or(0, |m| m + 1);
    if rows.is_empty() || rows.len() != nx * ny {
        return Err(Error::Format("map rows do not cover a full grid".into()));
    }
    let mut values = vec![None; nx * ny];
    for (x, y, v) in rows {
        values[y * nx + x] = Some(v);
    }
    ScalarMap::from_options(nx, ny, values.into_iter().map(|v| v.filter(|x| x.is_finite())), label, "")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_keeps_invalid() {
        let m = ScalarMap::from_options(2, 2, [Some(1.0), None, Some(-2.5), Some(0.0)], "m", "u").unwrap();
        let mut buf = Vec::new();
        write_map_csv(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("1,0,nan"));
        let back = read_map_csv(buf.as_slice(), "m").unwrap();
        assert_eq!(back.valid, m.valid);
        assert_eq!(back.get(0, 1), Some(-2.5));
    }

    #[test]
    fn means_skip_invalid() {
        let m = ScalarMap::from_options(3, 1, [Some(1.0), None, Some(3.0)], "m", "").unwrap();
        assert_eq!(m.mean(), Some(2.0));
        assert_eq!(m.mean_where(|p| p == 1), None);
    }
}
