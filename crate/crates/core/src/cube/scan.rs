use std::io::{Read, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signal::PulseTrace;

pub const CUBE_MAGIC: &[u8; 4] = b"THZC";
pub const CUBE_VERSION: u32 = 1;

/// Raster-scanned grid of time-domain traces.
///
/// Samples are stored y-major, then x, then time.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanCube<T> {
    nx: usize,
    ny: usize,
    nt: usize,
    dx: T,
    dt: T,
    t0: T,
    data: Vec<T>,
}

impl<T: Real> ScanCube<T> {
    pub fn new(nx: usize, ny: usize, nt: usize, dx: T, dt: T, t0: T, data: Vec<T>) -> Result<Self> {
        if nx == 0 || ny == 0 || nt < 2 {
            return Err(Error::InvalidInput(format!("cube dimensions {nx}x{ny}x{nt} invalid")));
        }
        if data.len() != nx * ny * nt {
            return Err(Error::Dimension(format!(
                "cube {nx}x{ny}x{nt} needs {} samples, got {}",
                nx * ny * nt,
                data.len()
            )));
        }
        if !(dx > T::zero()) || !(dt > T::zero()) || !dx.is_finite() || !dt.is_finite() || !t0.is_finite() {
            return Err(Error::InvalidInput("cube steps must be positive and finite".into()));
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite sample at offset {k}")));
        }
        Ok(Self { nx, ny, nt, dx, dt, t0, data })
    }

    /// Cube whose every pixel holds `trace`.
    pub fn uniform(nx: usize, ny: usize, dx: T, trace: &PulseTrace<T>) -> Result<Self> {
        let data = trace.samples().repeat(nx * ny);
        Self::new(nx, ny, trace.len(), dx, trace.dt(), trace.t0(), data)
    }

    /// Assembles a cube from per-pixel traces in y-major order.
    pub fn from_traces(nx: usize, ny: usize, dx: T, traces: &[PulseTrace<T>]) -> Result<Self> {
        let first = traces
            .first()
            .ok_or_else(|| Error::InvalidInput("no traces".into()))?;
        if traces.len() != nx * ny {
            return Err(Error::Dimension(format!("{} traces for a {nx}x{ny} grid", traces.len())));
        }
        let mut data = Vec::with_capacity(nx * ny * first.len());
        for t in traces {
            if t.len() != first.len() || t.dt() != first.dt() {
                return Err(Error::Dimension("traces disagree on time axis".into()));
            }
            data.extend_from_slice(t.samples());
        }
        Self::new(nx, ny, first.len(), dx, first.dt(), first.t0(), data)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn dx(&self) -> T {
        self.dx
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn t0(&self) -> T {
        self.t0
    }

    pub fn pixels(&self) -> usize {
        self.nx * self.ny
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    /// Samples of pixel number `p` (`p = y * nx + x`).
    pub fn trace_at(&self, p: usize) -> &[T] {
        &self.data[p * self.nt..(p + 1) * self.nt]
    }

    pub fn trace(&self, x: usize, y: usize) -> &[T] {
        self.trace_at(y * self.nx + x)
    }

    pub fn pulse(&self, p: usize) -> PulseTrace<T> {
        PulseTrace::new(self.dt, self.t0, self.trace_at(p).to_vec()).expect("cube samples are validated")
    }

    /// Pixel-wise mean trace.
    pub fn mean_trace(&self) -> PulseTrace<T> {
        self.mean_trace_of(0..self.pixels()).expect("cube has pixels")
    }

    /// Mean trace over the given pixel indices.
    pub fn mean_trace_of(&self, pixels: impl IntoIterator<Item = usize>) -> Result<PulseTrace<T>> {
        let mut acc = vec![T::zero(); self.nt];
        let mut count = 0usize;
        for p in pixels {
            if p >= self.pixels() {
                return Err(Error::Index(format!("pixel {p} outside cube of {} pixels", self.pixels())));
            }
            for (a, &v) in acc.iter_mut().zip(self.trace_at(p)) {
                *a += v;
            }
            count += 1;
        }
        if count == 0 {
            return Err(Error::InvalidInput("mean over an empty pixel set".into()));
        }
        let inv = T::one() / T::of_usize(count);
        acc.iter_mut().for_each(|a| *a *= inv);
        PulseTrace::new(self.dt, self.t0, acc)
    }

    /// Places `other` to the right of `self`. Time axes must agree.
    pub fn hconcat(&self, other: &Self) -> Result<Self> {
        if self.ny != other.ny || self.nt != other.nt || self.dt != other.dt || self.t0 != other.t0 {
            return Err(Error::Dimension("cubes differ in height or time axis".into()));
        }
        let nx = self.nx + other.nx;
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        for y in 0..self.ny {
            for x in 0..self.nx {
                data.extend_from_slice(self.trace(x, y));
            }
            for x in 0..other.nx {
                data.extend_from_slice(other.trace(x, y));
            }
        }
        Self::new(nx, self.ny, self.nt, self.dx, self.dt, self.t0, data)
    }

    /// Reorders pixels: output pixel `i` is input pixel `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.pixels() {
            return Err(Error::Dimension("permutation length differs from pixel count".into()));
        }
        let mut data = Vec::with_capacity(self.data.len());
        for &p in order {
            data.extend_from_slice(self.trace_at(p));
        }
        Self::new(self.nx, self.ny, self.nt, self.dx, self.dt, self.t0, data)
    }

    /// Evaluates `f` on every pixel (in parallel) and returns results in pixel order.
    pub fn map_pixels<R, F>(&self, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize, &[T]) -> R + Sync + Send,
    {
        (0..self.pixels()).into_par_iter().map(|p| f(p, self.trace_at(p))).collect()
    }
}

/// Little-endian cube file: magic, version, `nx ny nt` (u32), `dx dt t0` (f64), samples (f64).
pub fn write_cube<T: Real, W: Write>(cube: &ScanCube<T>, mut out: W) -> Result<()> {
    let dim = |n: usize| -> Result<[u8; 4]> {
        u32::try_from(n)
            .map(|v| v.to_le_bytes())
            .map_err(|_| Error::InvalidInput(format!("dimension {n} exceeds u32")))
    };
    out.write_all(CUBE_MAGIC)?;
    out.write_all(&CUBE_VERSION.to_le_bytes())?;
    out.write_all(&dim(cube.nx)?)?;
    out.write_all(&dim(cube.ny)?)?;
    out.write_all(&dim(cube.nt)?)?;
    for v in [cube.dx, cube.dt, cube.t0] {
        out.write_all(&v.to_f64_lossy().to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(cube.data.len() * 8);
    for v in &cube.data {
        buf.extend_from_slice(&v.to_f64_lossy().to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_cube<T: Real, R: Read>(mut input: R) -> Result<ScanCube<T>> {
    let mut header = [0u8; 4 + 4 + 12 + 24];
    input
        .read_exact(&mut header)
        .map_err(|e| truncated_or_io(e, "cube header"))?;
    if &header[..4] != CUBE_MAGIC {
        return Err(Error::Format("not a cube file (bad magic)".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(header[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != CUBE_VERSION {
        return Err(Error::Format(format!("unsupported cube version {version}")));
    }
    let (nx, ny, nt) = (u32_at(8) as usize, u32_at(12) as usize, u32_at(16) as usize);
    let (dx, dt, t0) = (f64_at(20), f64_at(28), f64_at(36));
    let count = nx
        .checked_mul(ny)
        .and_then(|v| v.checked_mul(nt))
        .ok_or_else(|| Error::Format("cube dimensions overflow".into()))?;
    let mut raw = vec![0u8; count * 8];
    input
        .read_exact(&mut raw)
        .map_err(|e| truncated_or_io(e, "cube samples"))?;
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after cube samples".into()));
    }
    let data = raw
        .chunks_exact(8)
        .map(|c| T::of(f64::from_le_bytes(c.try_into().unwrap())))
        .collect();
    ScanCube::new(nx, ny, nt, T::of(dx), T::of(dt), T::of(t0), data).map_err(|e| match e {
        Error::InvalidInput(m) | Error::Dimension(m) => Error::Format(m),
        other => other,
    })
}

fn truncated_or_io(e: std::io::Error, what: &str) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format(format!("truncated {what}"))
    } else {
        Error::Io(e)
    }
}
