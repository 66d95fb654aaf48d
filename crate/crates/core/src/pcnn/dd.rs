//! Double-double forward pass used as the finite-difference oracle for the
//! data loss. Kept separate from the network code on purpose: it shares only
//! the parameter layout.

use std::ops::{Add, Mul, Neg, Sub};

use super::network::Pcnn;

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd { hi: s, lo: b - (s - a) }
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn is_positive(self) -> bool {
        self.hi > 0.0 || (self.hi == 0.0 && self.lo > 0.0)
    }

    pub fn div_f64(self, d: f64) -> Dd {
        let q1 = self.hi / d;
        let r = self - Dd::from(d) * Dd::from(q1);
        let q2 = r.hi / d;
        let r = r - Dd::from(d) * Dd::from(q2);
        let q3 = r.hi / d;
        quick_two_sum(q1, q2) + Dd::from(q3)
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let r = quick_two_sum(s, e + t);
        quick_two_sum(r.hi, r.lo + f)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        quick_two_sum(p, e + (self.hi * o.lo + self.lo * o.hi))
    }
}

fn relu(x: &mut [Dd]) {
    x.iter_mut().for_each(|v| {
        if !v.is_positive() {
            *v = Dd::ZERO;
        }
    });
}

/// Direct-definition convolution: `out[o][t] = b[o] + sum w[o][i][j] x[i][t s + j - p]`.
#[allow(clippy::too_many_arguments)]
fn conv(x: &[Dd], c_in: usize, l_in: usize, w: &[Dd], b: &[Dd], c_out: usize, k: usize, s: usize, p: usize) -> (Vec<Dd>, usize) {
    let l_out = (l_in + 2 * p - k) / s + 1;
    let mut out = vec![Dd::ZERO; c_out * l_out];
    for o in 0..c_out {
        for t in 0..l_out {
            let mut acc = b[o];
            for i in 0..c_in {
                for j in 0..k {
                    let idx = (t * s + j) as isize - p as isize;
                    if idx >= 0 && (idx as usize) < l_in {
                        acc = acc + w[(o * c_in + i) * k + j] * x[i * l_in + idx as usize];
                    }
                }
            }
            out[o * l_out + t] = acc;
        }
    }
    (out, l_out)
}

/// Scatter form of the transposed convolution.
#[allow(clippy::too_many_arguments)]
fn deconv(x: &[Dd], c_in: usize, l_in: usize, w: &[Dd], b: &[Dd], c_out: usize, k: usize, s: usize, p: usize) -> (Vec<Dd>, usize) {
    let l_out = (l_in - 1) * s + k - 2 * p;
    let mut out = vec![Dd::ZERO; c_out * l_out];
    for o in 0..c_out {
        for u in 0..l_out {
            out[o * l_out + u] = b[o];
        }
    }
    for i in 0..c_in {
        for t in 0..l_in {
            for o in 0..c_out {
                for j in 0..k {
                    let u = (t * s + j) as isize - p as isize;
                    if u >= 0 && (u as usize) < l_out {
                        let slot = o * l_out + u as usize;
                        out[slot] = out[slot] + w[(i * c_out + o) * k + j] * x[i * l_in + t];
                    }
                }
            }
        }
    }
    (out, l_out)
}

fn dense(x: &[Dd], w: &[Dd], b: &[Dd]) -> Vec<Dd> {
    b.iter()
        .enumerate()
        .map(|(o, &bo)| x.iter().enumerate().fold(bo, |acc, (i, &v)| acc + w[o * x.len() + i] * v))
        .collect()
}

/// Reconstruction of `x` with parameters `p`, both in double-double.
pub fn forward(model: &Pcnn<f64>, p: &[Dd], x: &[f64]) -> Vec<Dd> {
    let a = &model.arch;
    let lay = &model.layout;
    let (k, s, pad) = (a.kernel, a.stride, a.padding);
    let mut h: Vec<Dd> = x.iter().map(|&v| Dd::from(v)).collect();
    let mut len = x.len();
    for (i, (w, b)) in lay.enc_conv.iter().enumerate() {
        let (mut y, l) = conv(&h, a.channels[i], len, &p[w.range()], &p[b.range()], a.channels[i + 1], k, s, pad);
        relu(&mut y);
        h = y;
        len = l;
    }
    let cb = a.bottleneck_channels();
    let mut pooled = Vec::with_capacity(cb * a.pool_len);
    for c in 0..cb {
        for i in 0..a.pool_len {
            let (lo, hi) = (i * len / a.pool_len, ((i + 1) * len).div_ceil(a.pool_len));
            let sum = h[c * len + lo..c * len + hi].iter().fold(Dd::ZERO, |acc, &v| acc + v);
            pooled.push(sum.div_f64((hi - lo) as f64));
        }
    }
    let (w, b) = &lay.enc_fc;
    let z = dense(&pooled, &p[w.range()], &p[b.range()]);
    let (w, b) = &lay.dec_fc;
    let mut h = dense(&z, &p[w.range()], &p[b.range()]);
    relu(&mut h);
    let mut len = a.pool_len;
    let stages = a.stages();
    for (j, (w, b)) in lay.dec_conv.iter().enumerate() {
        let stage = stages - 1 - j;
        let (mut y, l) = deconv(&h, a.channels[stage + 1], len, &p[w.range()], &p[b.range()], a.channels[stage], k, s, pad);
        if j + 1 < stages {
            relu(&mut y);
        }
        h = y;
        len = l;
    }
    if len == x.len() {
        return h;
    }
    let scale = len as f64 / x.len() as f64;
    (0..x.len())
        .map(|i| {
            let src = ((i as f64 + 0.5) * scale - 0.5).max(0.0);
            let i0 = (src.floor() as usize).min(len - 1);
            let i1 = (i0 + 1).min(len - 1);
            let wt = src - i0 as f64;
            Dd::from(1.0 - wt) * h[i0] + Dd::from(wt) * h[i1]
        })
        .collect()
}

/// `(1/N) sum |x - y|^2` with the network evaluated in double-double.
pub fn data_loss(model: &Pcnn<f64>, p: &[Dd], batch: &[Vec<f64>]) -> Dd {
    let mut total = Dd::ZERO;
    for x in batch {
        let y = forward(model, p, x);
        for (&xv, yv) in x.iter().zip(y) {
            let r = yv - Dd::from(xv);
            total = total + r * r;
        }
    }
    total.div_f64(batch.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_keeps_the_low_word() {
        let a = Dd::from(1.0) + Dd::from(1e-20);
        assert_eq!(a.hi, 1.0);
        assert_eq!(a.lo, 1e-20);
        let b = a - Dd::from(1.0);
        assert_eq!(b.to_f64(), 1e-20);
        let third = Dd::from(1.0).div_f64(3.0);
        let back = third * Dd::from(3.0) - Dd::from(1.0);
        assert!(back.to_f64().abs() < 1e-31);
        let sq = Dd::from(1.0 + f64::EPSILON) * Dd::from(1.0 + f64::EPSILON);
        assert_eq!(sq.lo, f64::EPSILON * f64::EPSILON);
    }
}
