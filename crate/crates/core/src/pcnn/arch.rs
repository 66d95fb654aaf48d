use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the autoencoder.
///
/// The encoder runs `channels.len() - 1` strided convolutions
/// (`channels[i] -> channels[i + 1]`), adaptive average pooling to
/// `pool_len`, and a linear layer to `latent`. The decoder mirrors it: a
/// rectified linear layer back to `channels.last() x pool_len`, transposed
/// convolutions down to one channel (the last one linear), then linear
/// interpolation to `input_len`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    pub input_len: usize,
    pub channels: Vec<usize>,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub pool_len: usize,
    pub latent: usize,
}

impl Architecture {
    /// 1 -> 16 -> 32 -> 64 -> 128 channels, kernel 8, stride 4, padding 2,
    /// pooling to 12, 32 latent coordinates.
    pub fn standard(input_len: usize) -> Self {
        Self {
            input_len,
            channels: vec![1, 16, 32, 64, 128],
            kernel: 8,
            stride: 4,
            padding: 2,
            pool_len: 12,
            latent: 32,
        }
    }

    /// 1 -> 2 -> 2 channels, pooling to 4, 4 latent coordinates, 64 samples.
    pub fn reduced() -> Self {
        Self { input_len: 64, channels: vec![1, 2, 2], kernel: 8, stride: 4, padding: 2, pool_len: 4, latent: 4 }
    }

    pub fn stages(&self) -> usize {
        self.channels.len() - 1
    }

    pub fn bottleneck_channels(&self) -> usize {
        *self.channels.last().expect("validated")
    }

    pub fn bottleneck(&self) -> usize {
        self.bottleneck_channels() * self.pool_len
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels.len() < 2 || self.channels[0] != 1 || self.channels.contains(&0) {
            return Err(Error::Model(format!(
                "channel widths {:?} must start at 1 and have at least one stage",
                self.channels
            )));
        }
        if self.kernel == 0 || self.stride == 0 || self.pool_len == 0 || self.latent == 0 {
            return Err(Error::Model("kernel, stride, pool length and latent size must be positive".into()));
        }
        if 2 * self.padding >= self.kernel {
            return Err(Error::Model("padding must be less than half the kernel".into()));
        }
        let dec = self.decoder_len();
        if dec == 0 {
            return Err(Error::Model("decoder produces an empty trace".into()));
        }
        self.encoder_lens(self.input_len)?;
        Ok(())
    }

    /// Lengths entering and leaving each encoder stage, starting with `len`.
    pub fn encoder_lens(&self, len: usize) -> Result<Vec<usize>> {
        let mut lens = vec![len];
        for _ in 0..self.stages() {
            let l = *lens.last().unwrap();
            if l + 2 * self.padding < self.kernel {
                return Err(Error::Dimension(format!(
                    "input of {len} samples is too short for {} stride-{} stages",
                    self.stages(),
                    self.stride
                )));
            }
            lens.push((l + 2 * self.padding - self.kernel) / self.stride + 1);
        }
        Ok(lens)
    }

    /// Lengths through the decoder, starting at `pool_len`.
    pub fn decoder_lens(&self) -> Vec<usize> {
        let mut lens = vec![self.pool_len];
        for _ in 0..self.stages() {
            let l = *lens.last().unwrap();
            lens.push(((l - 1) * self.stride + self.kernel).saturating_sub(2 * self.padding));
        }
        lens
    }

    /// Length of the decoder output before interpolation.
    pub fn decoder_len(&self) -> usize {
        *self.decoder_lens().last().unwrap()
    }

    /// Smallest input the encoder accepts.
    pub fn min_input_len(&self) -> usize {
        let mut l = 1;
        for _ in 0..self.stages() {
            l = ((l - 1) * self.stride + self.kernel).saturating_sub(2 * self.padding);
        }
        l
    }

    pub fn layout(&self) -> ParamLayout {
        let mut off = 0;
        let mut take = |shape: Vec<usize>| {
            let t = Tensor { offset: off, shape };
            off += t.len();
            t
        };
        let k = self.kernel;
        let enc_conv = (0..self.stages())
            .map(|i| {
                let (ci, co) = (self.channels[i], self.channels[i + 1]);
                (take(vec![co, ci, k]), take(vec![co]))
            })
            .collect();
        let enc_fc = (take(vec![self.latent, self.bottleneck()]), take(vec![self.latent]));
        let dec_fc = (take(vec![self.bottleneck(), self.latent]), take(vec![self.bottleneck()]));
        let dec_conv = (0..self.stages())
            .rev()
            .map(|i| {
                let (ci, co) = (self.channels[i + 1], self.channels[i]);
                (take(vec![ci, co, k]), take(vec![co]))
            })
            .collect();
        ParamLayout { enc_conv, enc_fc, dec_fc, dec_conv, total: off }
    }
}

/// A weight or bias tensor inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tensor {
    pub offset: usize,
    pub shape: Vec<usize>,
}

impl Tensor {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Where each (weight, bias) pair lives, in declaration order: encoder
/// convolutions, encoder linear, decoder linear, decoder transposed
/// convolutions. Convolution weights are `[out][in][k]`, transposed
/// convolution weights `[in][out][k]`, linear weights `[out][in]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    pub enc_conv: Vec<(Tensor, Tensor)>,
    pub enc_fc: (Tensor, Tensor),
    pub dec_fc: (Tensor, Tensor),
    pub dec_conv: Vec<(Tensor, Tensor)>,
    pub total: usize,
}

impl ParamLayout {
    pub fn tensors(&self) -> Vec<&Tensor> {
        let mut out = Vec::new();
        for (w, b) in self.enc_conv.iter().chain([&self.enc_fc, &self.dec_fc]).chain(&self.dec_conv) {
            out.push(w);
            out.push(b);
        }
        out
    }

    /// Fan-in of the layer owning each tensor, used for initialization.
    pub fn fan_in(&self, arch: &Architecture) -> Vec<usize> {
        let k = arch.kernel;
        let mut out = Vec::new();
        for (w, _) in &self.enc_conv {
            out.extend([w.shape[1] * k; 2]);
        }
        out.extend([arch.bottleneck(); 2]);
        out.extend([arch.latent; 2]);
        // Transposed convolutions draw their bound from the output channels,
        // which sit in dimension 1 of the weight.
        for (w, _) in &self.dec_conv {
            out.extend([w.shape[1] * k; 2]);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_lengths_are_exact_at_3072() {
        let a = Architecture::standard(3072);
        a.validate().unwrap();
        assert_eq!(a.encoder_lens(3072).unwrap(), vec![3072, 768, 192, 48, 12]);
        assert_eq!(a.decoder_lens(), vec![12, 48, 192, 768, 3072]);
        assert_eq!(a.min_input_len(), 256);
        assert_eq!(a.encoder_lens(3000).unwrap(), vec![3000, 750, 187, 46, 11]);
        assert!(a.encoder_lens(255).is_err());
    }

    #[test]
    fn reduced_lengths() {
        let a = Architecture::reduced();
        a.validate().unwrap();
        assert_eq!(a.encoder_lens(64).unwrap(), vec![64, 16, 4]);
        assert_eq!(a.decoder_len(), 64);
        assert_eq!(a.min_input_len(), 16);
    }

    #[test]
    fn layout_is_contiguous_and_complete() {
        let a = Architecture::standard(3072);
        let l = a.layout();
        let mut next = 0;
        for t in l.tensors() {
            assert_eq!(t.offset, next);
            next += t.len();
        }
        assert_eq!(next, l.total);
        let expected = (16 * 8 + 16)
            + (32 * 16 * 8 + 32)
            + (64 * 32 * 8 + 64)
            + (128 * 64 * 8 + 128)
            + (32 * 1536 + 32)
            + (1536 * 32 + 1536)
            + (128 * 64 * 8 + 64)
            + (64 * 32 * 8 + 32)
            + (32 * 16 * 8 + 16)
            + (16 * 8 + 1);
        assert_eq!(l.total, expected);
        assert_eq!(l.dec_conv[0].0.shape, vec![128, 64, 8]);
        assert_eq!(l.dec_conv[3].1.shape, vec![1]);
    }
}
