//! Model file: little-endian, `PCNN` magic, version, architecture,
//! normalization and physics settings, reference spectrum, then every
//! tensor in declaration order with its shape.

use std::io::{Read, Write};

use num_complex::Complex;

use super::arch::Architecture;
use super::network::Pcnn;
use crate::error::{Error, Result};
use crate::optics::Band;
use crate::scalar::Real;
use crate::signal::Spectrum;

pub const MODEL_MAGIC: [u8; 4] = *b"PCNN";
pub const MODEL_VERSION: u32 = 1;

fn put_u32<W: Write>(out: &mut W, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Format(format!("{v} does not fit in u32")))?;
    out.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_f64<W: Write>(out: &mut W, v: f64) -> Result<()> {
    out.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub fn write_model<T: Real, W: Write>(model: &Pcnn<T>, mut out: W) -> Result<()> {
    let a = &model.arch;
    out.write_all(&MODEL_MAGIC)?;
    put_u32(&mut out, MODEL_VERSION as usize)?;
    put_u32(&mut out, a.input_len)?;
    put_u32(&mut out, a.channels.len())?;
    for &c in &a.channels {
        put_u32(&mut out, c)?;
    }
    for v in [a.kernel, a.stride, a.padding, a.pool_len, a.latent] {
        put_u32(&mut out, v)?;
    }
    for v in [model.scale, model.thickness_mm, model.band.f_min, model.band.f_max, model.band.floor] {
        put_f64(&mut out, v.to_f64_lossy())?;
    }
    put_u32(&mut out, model.fft_len)?;
    put_u32(&mut out, model.reference.len())?;
    put_f64(&mut out, model.reference.df().to_f64_lossy())?;
    for z in model.reference.bins() {
        put_f64(&mut out, z.re.to_f64_lossy())?;
        put_f64(&mut out, z.im.to_f64_lossy())?;
    }
    let tensors = model.layout.tensors();
    put_u32(&mut out, tensors.len())?;
    for t in tensors {
        put_u32(&mut out, t.shape.len())?;
        for &d in &t.shape {
            put_u32(&mut out, d)?;
        }
        let bytes: Vec<u8> = model.params[t.range()].iter().flat_map(|v| v.to_f64_lossy().to_le_bytes()).collect();
        out.write_all(&bytes)?;
    }
    Ok(())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.inner.read_exact(&mut b).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::Format(format!("model file truncated in {what}")),
            _ => Error::Io(e),
        })?;
        Ok(b)
    }

    fn u32(&mut self, what: &str) -> Result<usize> {
        Ok(u32::from_le_bytes(self.bytes(what)?) as usize)
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes(what)?))
    }
}

/// Reads a model written by [`write_model`].
pub fn read_model<T: Real, R: Read>(input: R) -> Result<Pcnn<T>> {
    let mut r = Reader { inner: input };
    if r.bytes::<4>("magic")? != MODEL_MAGIC {
        return Err(Error::Format("not a model file (bad magic)".into()));
    }
    let version = r.u32("version")?;
    if version != MODEL_VERSION as usize {
        return Err(Error::Format(format!("unsupported model version {version}")));
    }
    let input_len = r.u32("architecture")?;
    let n_ch = r.u32("architecture")?;
    if n_ch > 64 {
        return Err(Error::Format(format!("implausible stage count {n_ch}")));
    }
    let channels = (0..n_ch).map(|_| r.u32("architecture")).collect::<Result<Vec<_>>>()?;
    let mut next = || r.u32("architecture");
    let arch = Architecture {
        input_len,
        channels,
        kernel: next()?,
        stride: next()?,
        padding: next()?,
        pool_len: next()?,
        latent: next()?,
    };
    arch.validate().map_err(|e| Error::Format(format!("bad architecture: {e}")))?;
    let scale = r.f64("settings")?;
    let thickness = r.f64("settings")?;
    let band = Band::new(T::of(r.f64("settings")?), T::of(r.f64("settings")?), T::of(r.f64("settings")?));
    let fft_len = r.u32("reference")?;
    let nbins = r.u32("reference")?;
    if nbins != fft_len / 2 + 1 || fft_len < arch.input_len {
        return Err(Error::Format(format!("reference block of {nbins} bins at FFT length {fft_len}")));
    }
    let df = r.f64("reference")?;
    let bins = (0..nbins)
        .map(|_| Ok(Complex::new(T::of(r.f64("reference")?), T::of(r.f64("reference")?))))
        .collect::<Result<Vec<_>>>()?;
    let reference = Spectrum::new(T::of(df), T::zero(), bins).map_err(|e| Error::Format(e.to_string()))?;
    let mut model = Pcnn::zeros(arch, T::of(scale), T::of(thickness), band, reference, fft_len)
        .map_err(|e| Error::Format(format!("bad model settings: {e}")))?;
    let tensors: Vec<_> = model.layout.tensors().into_iter().cloned().collect();
    let count = r.u32("tensor table")?;
    if count != tensors.len() {
        return Err(Error::Format(format!("{count} tensors, architecture needs {}", tensors.len())));
    }
    for (i, t) in tensors.iter().enumerate() {
        let rank = r.u32("tensor header")?;
        let shape = (0..rank.min(8)).map(|_| r.u32("tensor header")).collect::<Result<Vec<_>>>()?;
        if shape != t.shape {
            return Err(Error::Format(format!("tensor {i} has shape {shape:?}, expected {:?}", t.shape)));
        }
        for v in &mut model.params[t.range()] {
            *v = T::of(r.f64("tensor data")?);
        }
    }
    let mut rest = [0u8; 1];
    if r.inner.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after the last tensor".into()));
    }
    Ok(model)
}
