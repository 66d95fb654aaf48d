//! Forward and backward passes of the individual layers. Activations are
//! stored channel-major: `x[c * len + t]`.

use crate::scalar::Real;

/// Geometry shared by the strided convolution and its transpose.
#[derive(Debug, Clone, Copy)]
pub struct ConvShape {
    pub c_in: usize,
    pub c_out: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub l_in: usize,
    pub l_out: usize,
}

/// Values of `t < count` for which `t * stride + j - padding` lands in `[0, limit)`.
fn taps(j: usize, stride: usize, padding: usize, limit: usize, count: usize) -> std::ops::Range<usize> {
    let lo = if j < padding { (padding - j).div_ceil(stride) } else { 0 };
    if limit + padding <= j {
        return 0..0;
    }
    let hi = ((limit - 1 + padding - j) / stride + 1).min(count);
    lo..hi.max(lo)
}

pub fn conv_forward<T: Real>(s: &ConvShape, x: &[T], w: &[T], b: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); s.c_out * s.l_out];
    for o in 0..s.c_out {
        let row = &mut out[o * s.l_out..(o + 1) * s.l_out];
        row.iter_mut().for_each(|v| *v = b[o]);
        for i in 0..s.c_in {
            let xi = &x[i * s.l_in..(i + 1) * s.l_in];
            for j in 0..s.kernel {
                let wv = w[(o * s.c_in + i) * s.kernel + j];
                for t in taps(j, s.stride, s.padding, s.l_in, s.l_out) {
                    row[t] += wv * xi[t * s.stride + j - s.padding];
                }
            }
        }
    }
    out
}

/// Accumulates weight and bias gradients; returns the input gradient when asked.
pub fn conv_backward<T: Real>(
    s: &ConvShape,
    x: &[T],
    w: &[T],
    g: &[T],
    gw: &mut [T],
    gb: &mut [T],
    want_input: bool,
) -> Option<Vec<T>> {
    let mut gx = want_input.then(|| vec![T::zero(); s.c_in * s.l_in]);
    for o in 0..s.c_out {
        let go = &g[o * s.l_out..(o + 1) * s.l_out];
        gb[o] += go.iter().copied().sum::<T>();
        for i in 0..s.c_in {
            let xi = &x[i * s.l_in..(i + 1) * s.l_in];
            for j in 0..s.kernel {
                let widx = (o * s.c_in + i) * s.kernel + j;
                let range = taps(j, s.stride, s.padding, s.l_in, s.l_out);
                let mut acc = T::zero();
                for t in range.clone() {
                    acc += go[t] * xi[t * s.stride + j - s.padding];
                }
                gw[widx] += acc;
                if let Some(gx) = gx.as_mut() {
                    let wv = w[widx];
                    let gxi = &mut gx[i * s.l_in..(i + 1) * s.l_in];
                    for t in range {
                        gxi[t * s.stride + j - s.padding] += wv * go[t];
                    }
                }
            }
        }
    }
    gx
}

pub fn deconv_forward<T: Real>(s: &ConvShape, x: &[T], w: &[T], b: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); s.c_out * s.l_out];
    for o in 0..s.c_out {
        out[o * s.l_out..(o + 1) * s.l_out].iter_mut().for_each(|v| *v = b[o]);
    }
    for i in 0..s.c_in {
        let xi = &x[i * s.l_in..(i + 1) * s.l_in];
        for o in 0..s.c_out {
            let row = &mut out[o * s.l_out..(o + 1) * s.l_out];
            for j in 0..s.kernel {
                let wv = w[(i * s.c_out + o) * s.kernel + j];
                for t in taps(j, s.stride, s.padding, s.l_out, s.l_in) {
                    row[t * s.stride + j - s.padding] += wv * xi[t];
                }
            }
        }
    }
    out
}

pub fn deconv_backward<T: Real>(
    s: &ConvShape,
    x: &[T],
    w: &[T],
    g: &[T],
    gw: &mut [T],
    gb: &mut [T],
) -> Vec<T> {
    let mut gx = vec![T::zero(); s.c_in * s.l_in];
    for o in 0..s.c_out {
        gb[o] += g[o * s.l_out..(o + 1) * s.l_out].iter().copied().sum::<T>();
    }
    for i in 0..s.c_in {
        let xi = &x[i * s.l_in..(i + 1) * s.l_in];
        let gxi = &mut gx[i * s.l_in..(i + 1) * s.l_in];
        for o in 0..s.c_out {
            let go = &g[o * s.l_out..(o + 1) * s.l_out];
            for j in 0..s.kernel {
                let widx = (i * s.c_out + o) * s.kernel + j;
                let wv = w[widx];
                let mut acc = T::zero();
                for t in taps(j, s.stride, s.padding, s.l_out, s.l_in) {
                    let u = t * s.stride + j - s.padding;
                    acc += xi[t] * go[u];
                    gxi[t] += wv * go[u];
                }
                gw[widx] += acc;
            }
        }
    }
    gx
}

/// `y = W x + b` with `W` stored `[out][in]`.
pub fn linear_forward<T: Real>(x: &[T], w: &[T], b: &[T]) -> Vec<T> {
    let n_in = x.len();
    b.iter()
        .enumerate()
        .map(|(o, &bo)| bo + w[o * n_in..(o + 1) * n_in].iter().zip(x).map(|(&a, &v)| a * v).sum::<T>())
        .collect()
}

pub fn linear_backward<T: Real>(x: &[T], w: &[T], g: &[T], gw: &mut [T], gb: &mut [T]) -> Vec<T> {
    let n_in = x.len();
    let mut gx = vec![T::zero(); n_in];
    for (o, &go) in g.iter().enumerate() {
        gb[o] += go;
        let row = &w[o * n_in..(o + 1) * n_in];
        let grow = &mut gw[o * n_in..(o + 1) * n_in];
        for t in 0..n_in {
            grow[t] += go * x[t];
            gx[t] += go * row[t];
        }
    }
    gx
}

pub fn relu_in_place<T: Real>(x: &mut [T]) {
    x.iter_mut().for_each(|v| {
        if !(*v > T::zero()) {
            *v = T::zero();
        }
    });
}

/// Zeroes `g` wherever the rectified activation `a` is not positive.
pub fn relu_backward_in_place<T: Real>(a: &[T], g: &mut [T]) {
    g.iter_mut().zip(a).for_each(|(gv, &av)| {
        if !(av > T::zero()) {
            *gv = T::zero();
        }
    });
}

fn pool_window(i: usize, l_in: usize, l_out: usize) -> std::ops::Range<usize> {
    (i * l_in / l_out)..((i + 1) * l_in).div_ceil(l_out)
}

/// Adaptive average pooling of every channel to `l_out`.
pub fn pool_forward<T: Real>(x: &[T], channels: usize, l_in: usize, l_out: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(channels * l_out);
    for c in 0..channels {
        let xc = &x[c * l_in..(c + 1) * l_in];
        for i in 0..l_out {
            let win = pool_window(i, l_in, l_out);
            let n = T::of_usize(win.len());
            out.push(xc[win].iter().copied().sum::<T>() / n);
        }
    }
    out
}

pub fn pool_backward<T: Real>(g: &[T], channels: usize, l_in: usize, l_out: usize) -> Vec<T> {
    let mut gx = vec![T::zero(); channels * l_in];
    for c in 0..channels {
        for i in 0..l_out {
            let win = pool_window(i, l_in, l_out);
            let share = g[c * l_out + i] / T::of_usize(win.len());
            gx[c * l_in + win.start..c * l_in + win.end].iter_mut().for_each(|v| *v += share);
        }
    }
    gx
}

/// Source index pair and weight for output `i` of a linear resize
/// (half-pixel centres, clamped at the left edge).
fn interp_taps<T: Real>(i: usize, l_in: usize, l_out: usize) -> (usize, usize, T) {
    let scale = T::of_usize(l_in) / T::of_usize(l_out);
    let src = ((T::of_usize(i) + T::of(0.5)) * scale - T::of(0.5)).max(T::zero());
    let i0 = src.floor().to_usize().unwrap_or(0).min(l_in - 1);
    let i1 = (i0 + 1).min(l_in - 1);
    (i0, i1, src - T::of_usize(i0))
}

pub fn interp_forward<T: Real>(x: &[T], l_out: usize) -> Vec<T> {
    let l_in = x.len();
    if l_in == l_out {
        return x.to_vec();
    }
    (0..l_out)
        .map(|i| {
            let (i0, i1, w) = interp_taps::<T>(i, l_in, l_out);
            (T::one() - w) * x[i0] + w * x[i1]
        })
        .collect()
}

pub fn interp_backward<T: Real>(g: &[T], l_in: usize) -> Vec<T> {
    let l_out = g.len();
    if l_in == l_out {
        return g.to_vec();
    }
    let mut gx = vec![T::zero(); l_in];
    for (i, &gi) in g.iter().enumerate() {
        let (i0, i1, w) = interp_taps::<T>(i, l_in, l_out);
        gx[i0] += (T::one() - w) * gi;
        gx[i1] += w * gi;
    }
    gx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tap_ranges_cover_valid_indices() {
        for (s, p, limit, count) in [(4, 2, 16, 4), (4, 2, 64, 16), (2, 0, 5, 3), (1, 3, 4, 7)] {
            for j in 0..8 {
                let r = taps(j, s, p, limit, count);
                for t in 0..count {
                    let idx = (t * s + j) as isize - p as isize;
                    assert_eq!(r.contains(&t), idx >= 0 && (idx as usize) < limit, "s{s} p{p} j{j} t{t}");
                }
            }
        }
    }

    #[test]
    fn pool_windows_match_adaptive_definition() {
        assert_eq!(pool_window(0, 11, 12), 0..1);
        assert_eq!(pool_window(11, 11, 12), 10..11);
        assert_eq!(pool_window(5, 12, 12), 5..6);
        assert_eq!(pool_window(1, 10, 4), 2..5);
    }

    #[test]
    fn interp_is_identity_at_equal_length_and_linear_otherwise() {
        let x = [1.0, 3.0, 7.0];
        assert_eq!(interp_forward(&x, 3), x.to_vec());
        let up = interp_forward(&[0.0, 4.0], 4);
        assert_eq!(up, vec![0.0, 1.0, 3.0, 4.0]);
    }
}
