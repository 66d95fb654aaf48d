use crate::error::{Error, Result};
use crate::scalar::Real;

/// How the global `2 pi m` ambiguity of an unwrapped phase is resolved.
#[derive(Debug, Clone, Copy)]
pub enum Anchor<'a, T> {
    /// Keep the first sample on its principal value.
    None,
    /// Shift by a multiple of `2 pi` so that the least-squares line through the
    /// phase at the masked frequencies extrapolates into `(-pi, pi]` at `f = 0`.
    ZeroDcExtrapolation {
        frequencies: &'a [T],
        fit_mask: &'a [bool],
    },
}

/// Principal value in `(-pi, pi]`.
pub fn wrap_to_pi<T: Real>(x: T) -> T {
    x - T::TAU() * ((x - T::PI()) / T::TAU()).ceil()
}

/// One-dimensional phase unwrapping in increasing index order.
///
/// Each output differs from its input by an integer multiple of `2 pi`, and
/// successive outputs differ by at most `pi`.
pub fn unwrap_phase<T: Real>(wrapped: &[T], anchor: Anchor<'_, T>) -> Result<Vec<T>> {
    if let Some(k) = wrapped.iter().position(|p| !p.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite phase at index {k}")));
    }
    let tau = T::TAU();
    let pi = T::PI();
    let mut out = Vec::with_capacity(wrapped.len());
    // Integer number of turns added so far.
    let mut turns = T::zero();
    for (k, &w) in wrapped.iter().enumerate() {
        if k > 0 {
            let prev = out[k - 1];
            let d = w + tau * turns - prev;
            turns -= ((d - pi) / tau).ceil();
        }
        out.push(w + tau * turns);
    }
    if let Anchor::ZeroDcExtrapolation { frequencies, fit_mask } = anchor {
        if frequencies.len() != wrapped.len() || fit_mask.len() != wrapped.len() {
            return Err(Error::Dimension(format!(
                "anchor needs {} frequencies and mask entries",
                wrapped.len()
            )));
        }
        if let Some(offset) = zero_dc_offset(&out, frequencies, fit_mask) {
            for p in &mut out {
                *p -= offset;
            }
        }
    }
    Ok(out)
}

/// Multiple of `2 pi` to subtract so the masked least-squares line has its
/// `f = 0` intercept in `(-pi, pi]`. `None` when fewer than two points are masked.
pub fn zero_dc_offset<T: Real>(phase: &[T], frequencies: &[T], mask: &[bool]) -> Option<T> {
    let mut count = 0usize;
    let (mut sf, mut sp) = (T::zero(), T::zero());
    for ((&p, &f), &m) in phase.iter().zip(frequencies).zip(mask) {
        if m {
            count += 1;
            sf += f;
            sp += p;
        }
    }
    if count < 2 {
        return None;
    }
    let nf = T::of_usize(count);
    let (mf, mp) = (sf / nf, sp / nf);
    let (mut sff, mut sfp) = (T::zero(), T::zero());
    for ((&p, &f), &m) in phase.iter().zip(frequencies).zip(mask) {
        if m {
            sff += (f - mf) * (f - mf);
            sfp += (f - mf) * (p - mp);
        }
    }
    if sff == T::zero() {
        return None;
    }
    let intercept = mp - sfp / sff * mf;
    let turns = ((intercept - T::PI()) / T::TAU()).ceil();
    Some(T::TAU() * turns)
}
