use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::arch::{Architecture, ParamLayout};
use super::layers::*;
use crate::error::{Error, Result};
use crate::optics::Band;
use crate::scalar::Real;
use crate::signal::Spectrum;

/// Autoencoder weights plus everything needed to apply them: the input
/// normalization, the (normalized) reference spectrum and the thickness the
/// physics loss uses.
#[derive(Debug, Clone, PartialEq)]
pub struct Pcnn<T> {
    pub arch: Architecture,
    pub layout: ParamLayout,
    pub params: Vec<T>,
    /// Traces are divided by this before entering the network.
    pub scale: T,
    pub thickness_mm: T,
    pub band: Band<T>,
    /// Spectrum of the reference pulse divided by `scale`, at FFT length
    /// `fft_len`.
    pub reference: Spectrum<T>,
    pub fft_len: usize,
}

/// Activations of one forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Tape<T> {
    enc: Vec<Vec<T>>,
    enc_lens: Vec<usize>,
    pooled: Vec<T>,
    pub latent: Vec<T>,
    dec: Vec<Vec<T>>,
    /// Normalized reconstruction at the input length.
    pub output: Vec<T>,
}

impl<T: Real> Pcnn<T> {
    /// All-zero weights.
    pub fn zeros(
        arch: Architecture,
        scale: T,
        thickness_mm: T,
        band: Band<T>,
        reference: Spectrum<T>,
        fft_len: usize,
    ) -> Result<Self> {
        arch.validate()?;
        if !(scale > T::zero()) || !scale.is_finite() {
            return Err(Error::Model(format!("normalization scale {scale} must be positive")));
        }
        if !(thickness_mm > T::zero()) {
            return Err(Error::Geometry(format!("thickness {thickness_mm} mm must be positive")));
        }
        if reference.len() != fft_len / 2 + 1 {
            return Err(Error::Dimension(format!(
                "reference has {} bins, FFT length {fft_len} needs {}",
                reference.len(),
                fft_len / 2 + 1
            )));
        }
        let layout = arch.layout();
        Ok(Self { params: vec![T::zero(); layout.total], arch, layout, scale, thickness_mm, band, reference, fft_len })
    }

    /// Fan-in uniform initialization: every tensor of a layer with fan-in
    /// `k` draws from `U(-1/sqrt(k), 1/sqrt(k))`.
    pub fn init_uniform(&mut self, rng: &mut ChaCha8Rng) {
        let fans = self.layout.fan_in(&self.arch);
        for (t, fan) in self.layout.tensors().into_iter().zip(fans) {
            let bound = 1.0 / (fan as f64).sqrt();
            for v in &mut self.params[t.range()] {
                *v = T::of(rng.random_range(-bound..bound));
            }
        }
    }

    pub fn latent_dim(&self) -> usize {
        self.arch.latent
    }

    pub fn input_len(&self) -> usize {
        self.arch.input_len
    }

    fn conv_shape(&self, stage: usize, l_in: usize, l_out: usize, transposed: bool) -> ConvShape {
        let ch = &self.arch.channels;
        let (c_in, c_out) = if transposed { (ch[stage + 1], ch[stage]) } else { (ch[stage], ch[stage + 1]) };
        ConvShape {
            c_in,
            c_out,
            kernel: self.arch.kernel,
            stride: self.arch.stride,
            padding: self.arch.padding,
            l_in,
            l_out,
        }
    }

    /// Forward pass on a normalized trace of any admissible length; the
    /// output has the same length as the input.
    pub fn forward(&self, x: &[T]) -> Result<Tape<T>> {
        self.forward_with(&self.params, x)
    }

    pub fn forward_with(&self, p: &[T], x: &[T]) -> Result<Tape<T>> {
        let lens = self.arch.encoder_lens(x.len())?;
        let stages = self.arch.stages();
        let mut enc = Vec::with_capacity(stages + 1);
        enc.push(x.to_vec());
        for (i, (w, b)) in self.layout.enc_conv.iter().enumerate() {
            let s = self.conv_shape(i, lens[i], lens[i + 1], false);
            let mut a = conv_forward(&s, &enc[i], &p[w.range()], &p[b.range()]);
            relu_in_place(&mut a);
            enc.push(a);
        }
        let cb = self.arch.bottleneck_channels();
        let pooled = pool_forward(&enc[stages], cb, lens[stages], self.arch.pool_len);
        let (w, b) = &self.layout.enc_fc;
        let latent = linear_forward(&pooled, &p[w.range()], &p[b.range()]);
        let (w, b) = &self.layout.dec_fc;
        let mut u = linear_forward(&latent, &p[w.range()], &p[b.range()]);
        relu_in_place(&mut u);
        let dlens = self.arch.decoder_lens();
        let mut dec = Vec::with_capacity(stages + 1);
        dec.push(u);
        for (j, (w, b)) in self.layout.dec_conv.iter().enumerate() {
            let s = self.conv_shape(stages - 1 - j, dlens[j], dlens[j + 1], true);
            let mut a = deconv_forward(&s, &dec[j], &p[w.range()], &p[b.range()]);
            if j + 1 < stages {
                relu_in_place(&mut a);
            }
            dec.push(a);
        }
        let output = interp_forward(&dec[stages], x.len());
        if output.iter().chain(&latent).any(|v| !v.is_finite()) {
            return Err(Error::NumericOverflow("non-finite activation in the forward pass".into()));
        }
        Ok(Tape { enc, enc_lens: lens, pooled, latent, dec, output })
    }

    /// Accumulates into `grad` the parameter gradient of a loss whose
    /// gradient with respect to `tape.output` is `g_out`.
    pub fn backward(&self, tape: &Tape<T>, g_out: &[T], grad: &mut [T]) {
        self.backward_with(&self.params, tape, g_out, grad)
    }

    pub fn backward_with(&self, p: &[T], tape: &Tape<T>, g_out: &[T], grad: &mut [T]) {
        let stages = self.arch.stages();
        let dlens = self.arch.decoder_lens();
        let mut g = interp_backward(g_out, dlens[stages]);
        for j in (0..stages).rev() {
            if j + 1 < stages {
                relu_backward_in_place(&tape.dec[j + 1], &mut g);
            }
            let (w, b) = &self.layout.dec_conv[j];
            let s = self.conv_shape(stages - 1 - j, dlens[j], dlens[j + 1], true);
            let (gw, gb) = split_pair(grad, w.range(), b.range());
            g = deconv_backward(&s, &tape.dec[j], &p[w.range()], &g, gw, gb);
        }
        relu_backward_in_place(&tape.dec[0], &mut g);
        let (w, b) = &self.layout.dec_fc;
        let (gw, gb) = split_pair(grad, w.range(), b.range());
        let g_latent = linear_backward(&tape.latent, &p[w.range()], &g, gw, gb);
        let (w, b) = &self.layout.enc_fc;
        let (gw, gb) = split_pair(grad, w.range(), b.range());
        let g_pool = linear_backward(&tape.pooled, &p[w.range()], &g_latent, gw, gb);
        let lens = &tape.enc_lens;
        let cb = self.arch.bottleneck_channels();
        let mut g = pool_backward(&g_pool, cb, lens[stages], self.arch.pool_len);
        for i in (0..stages).rev() {
            relu_backward_in_place(&tape.enc[i + 1], &mut g);
            let (w, b) = &self.layout.enc_conv[i];
            let s = self.conv_shape(i, lens[i], lens[i + 1], false);
            let (gw, gb) = split_pair(grad, w.range(), b.range());
            match conv_backward(&s, &tape.enc[i], &p[w.range()], &g, gw, gb, i > 0) {
                Some(gx) => g = gx,
                None => break,
            }
        }
    }

    /// Latent vector of a raw (unnormalized) trace.
    pub fn encode(&self, trace: &[T]) -> Result<Vec<T>> {
        let x = self.normalize(trace)?;
        Ok(self.forward(&x)?.latent)
    }

    /// Raw-scale reconstruction of length `len` from a latent vector.
    pub fn decode_to(&self, latent: &[T], len: usize) -> Result<Vec<T>> {
        if latent.len() != self.arch.latent {
            return Err(Error::Dimension(format!(
                "latent has {} coordinates, model {}",
                latent.len(),
                self.arch.latent
            )));
        }
        if len == 0 {
            return Err(Error::Dimension("output length must be positive".into()));
        }
        let p = &self.params;
        let (w, b) = &self.layout.dec_fc;
        let mut u = linear_forward(latent, &p[w.range()], &p[b.range()]);
        relu_in_place(&mut u);
        let stages = self.arch.stages();
        let dlens = self.arch.decoder_lens();
        for (j, (w, b)) in self.layout.dec_conv.iter().enumerate() {
            let s = self.conv_shape(stages - 1 - j, dlens[j], dlens[j + 1], true);
            u = deconv_forward(&s, &u, &p[w.range()], &p[b.range()]);
            if j + 1 < stages {
                relu_in_place(&mut u);
            }
        }
        let out: Vec<T> = interp_forward(&u, len).into_iter().map(|v| v * self.scale).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericOverflow("non-finite activation in the decoder".into()));
        }
        Ok(out)
    }

    /// Raw-scale reconstruction at the model's input length.
    pub fn decode(&self, latent: &[T]) -> Result<Vec<T>> {
        self.decode_to(latent, self.arch.input_len)
    }

    /// Raw-scale reconstruction of a raw trace.
    pub fn reconstruct(&self, trace: &[T]) -> Result<Vec<T>> {
        let x = self.normalize(trace)?;
        Ok(self.forward(&x)?.output.into_iter().map(|v| v * self.scale).collect())
    }

    pub fn normalize(&self, trace: &[T]) -> Result<Vec<T>> {
        if let Some(k) = trace.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite sample at index {k}")));
        }
        let inv = T::one() / self.scale;
        Ok(trace.iter().map(|&v| v * inv).collect())
    }
}

fn split_pair<T>(grad: &mut [T], w: std::ops::Range<usize>, b: std::ops::Range<usize>) -> (&mut [T], &mut [T]) {
    debug_assert_eq!(w.end, b.start);
    let (head, tail) = grad[w.start..b.end].split_at_mut(w.len());
    (head, tail)
}
