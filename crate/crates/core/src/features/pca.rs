use super::eigen::symmetric_eigen;
use crate::cube::{ScalarMap, ScanCube};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Principal components of a set of traces.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel<T> {
    pub mean: Vec<T>,
    /// Unit-norm principal directions, strongest first.
    pub components: Vec<Vec<T>>,
    /// Variance along each component (squared singular value over `m - 1`).
    pub explained_variance: Vec<T>,
}

impl<T: Real> PcaModel<T> {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Projection of the centred `trace` onto component `index`.
    pub fn score(&self, trace: &[T], index: usize) -> Result<T> {
        let c = self
            .components
            .get(index)
            .ok_or_else(|| Error::Index(format!("component {index} of {}", self.components.len())))?;
        if trace.len() != self.dim() {
            return Err(Error::Dimension(format!("trace has {} samples, model {}", trace.len(), self.dim())));
        }
        Ok(trace.iter().zip(&self.mean).zip(c).map(|((&x, &m), &v)| (x - m) * v).sum())
    }

    /// Scores on every component.
    pub fn project(&self, trace: &[T]) -> Result<Vec<T>> {
        (0..self.components.len()).map(|i| self.score(trace, i)).collect()
    }

    /// Mean plus the score-weighted sum of components.
    pub fn reconstruct(&self, scores: &[T]) -> Result<Vec<T>> {
        if scores.len() > self.components.len() {
            return Err(Error::Dimension(format!(
                "{} scores for {} components",
                scores.len(),
                self.components.len()
            )));
        }
        let mut out = self.mean.clone();
        for (&s, c) in scores.iter().zip(&self.components) {
            out.iter_mut().zip(c).for_each(|(o, &v)| *o += s * v);
        }
        Ok(out)
    }

    /// Fraction of the total fitted variance carried by each component.
    pub fn explained_ratio(&self) -> Vec<T> {
        let total: T = self.explained_variance.iter().copied().sum();
        self.explained_variance
            .iter()
            .map(|&v| if total > T::zero() { v / total } else { T::zero() })
            .collect()
    }
}

/// Fits `k` principal components to `traces` (one row per trace).
///
/// Works on whichever of the trace-space covariance or the sample Gram
/// matrix is smaller. Each component's largest-magnitude entry is positive.
pub fn pca_fit<T: Real, R: AsRef<[T]>>(traces: &[R], k: usize) -> Result<PcaModel<T>> {
    let m = traces.len();
    if m < 2 {
        return Err(Error::Dimension(format!("PCA needs at least 2 traces, got {m}")));
    }
    let nt = traces[0].as_ref().len();
    if let Some(bad) = traces.iter().position(|t| t.as_ref().len() != nt) {
        return Err(Error::Dimension(format!("trace {bad} differs in length from trace 0 ({nt})")));
    }
    if k == 0 || k > m.min(nt) {
        return Err(Error::Dimension(format!("component count {k} outside 1..={}", m.min(nt))));
    }
    let inv_m = T::one() / T::of_usize(m);
    let mut mean = vec![T::zero(); nt];
    for t in traces {
        mean.iter_mut().zip(t.as_ref()).for_each(|(a, &x)| *a += x);
    }
    mean.iter_mut().for_each(|a| *a *= inv_m);
    let centered: Vec<Vec<T>> = traces
        .iter()
        .map(|t| t.as_ref().iter().zip(&mean).map(|(&x, &mu)| x - mu).collect())
        .collect();
    let dof = T::of_usize(m - 1);

    let (mut variance, mut components) = if nt <= m {
        let mut cov = vec![T::zero(); nt * nt];
        for row in &centered {
            for i in 0..nt {
                let ri = row[i];
                for j in i..nt {
                    cov[i * nt + j] += ri * row[j];
                }
            }
        }
        for i in 0..nt {
            for j in 0..i {
                cov[i * nt + j] = cov[j * nt + i];
            }
        }
        let (w, v) = symmetric_eigen(&cov, nt)?;
        let comps = (0..k).map(|c| (0..nt).map(|r| v[r * nt + c]).collect()).collect();
        (w[..k].iter().map(|&x| x.max(T::zero()) / dof).collect::<Vec<_>>(), comps)
    } else {
        gram_route(&centered, nt, k, dof)?
    };

    for c in &mut components {
        orient(c);
    }
    variance.iter_mut().for_each(|v| {
        if !(*v > T::zero()) {
            *v = T::zero();
        }
    });
    Ok(PcaModel { mean, components, explained_variance: variance })
}

fn gram_route<T: Real>(centered: &[Vec<T>], nt: usize, k: usize, dof: T) -> Result<(Vec<T>, Vec<Vec<T>>)> {
    let m = centered.len();
    let mut gram = vec![T::zero(); m * m];
    for i in 0..m {
        for j in i..m {
            let g: T = centered[i].iter().zip(&centered[j]).map(|(&a, &b)| a * b).sum();
            gram[i * m + j] = g;
            gram[j * m + i] = g;
        }
    }
    let (w, u) = symmetric_eigen(&gram, m)?;
    let cutoff = w[0].max(T::zero()) * T::epsilon() * T::of_usize(m.max(nt));
    let mut variance = Vec::with_capacity(k);
    let mut comps: Vec<Vec<T>> = Vec::with_capacity(k);
    for c in 0..k {
        if w[c] > cutoff && w[c] > T::zero() {
            let sigma = w[c].sqrt();
            let mut v = vec![T::zero(); nt];
            for (r, row) in centered.iter().enumerate() {
                let coef = u[r * m + c] / sigma;
                v.iter_mut().zip(row).for_each(|(a, &x)| *a += coef * x);
            }
            orthonormalize(&mut v, &comps);
            variance.push(w[c] / dof);
            comps.push(v);
        } else {
            variance.push(T::zero());
            comps.push(null_direction(&comps, nt)?);
        }
    }
    Ok((variance, comps))
}

fn orthonormalize<T: Real>(v: &mut [T], basis: &[Vec<T>]) {
    for b in basis {
        let dot: T = v.iter().zip(b).map(|(&x, &y)| x * y).sum();
        v.iter_mut().zip(b).for_each(|(x, &y)| *x -= dot * y);
    }
    let norm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
    if norm > T::zero() {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// A unit vector orthogonal to `basis`, built from the best-conditioned
/// coordinate axis.
fn null_direction<T: Real>(basis: &[Vec<T>], nt: usize) -> Result<Vec<T>> {
    let mut best: Option<(T, Vec<T>)> = None;
    for axis in 0..nt {
        let mut v = vec![T::zero(); nt];
        v[axis] = T::one();
        for b in basis {
            let dot = b[axis];
            v.iter_mut().zip(b).for_each(|(x, &y)| *x -= dot * y);
        }
        let norm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
        if best.as_ref().is_none_or(|(n, _)| norm > *n) {
            best = Some((norm, v));
        }
        if norm > T::of(0.5) {
            break;
        }
    }
    match best {
        Some((norm, mut v)) if norm > T::of(1e-6) => {
            orthonormalize(&mut v, basis);
            Ok(v)
        }
        _ => Err(Error::NumericOverflow("could not complete the component basis".into())),
    }
}

/// Flips `v` so its largest-magnitude entry (first on ties) is positive.
fn orient<T: Real>(v: &mut [T]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < T::zero()) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Fits on every pixel of `cubes` pooled together.
pub fn pca_fit_cubes<T: Real>(cubes: &[&ScanCube<T>], k: usize) -> Result<PcaModel<T>> {
    let rows: Vec<&[T]> = cubes.iter().flat_map(|c| (0..c.pixels()).map(move |p| c.trace_at(p))).collect();
    pca_fit(&rows, k)
}

/// Per-pixel score on component `index`.
pub fn pca_score_map<T: Real>(cube: &ScanCube<T>, model: &PcaModel<T>, index: usize) -> Result<ScalarMap<T>> {
    if index >= model.components.len() {
        return Err(Error::Index(format!("component {index} of {}", model.components.len())));
    }
    if cube.nt() != model.dim() {
        return Err(Error::Dimension(format!("cube has {} samples per trace, model {}", cube.nt(), model.dim())));
    }
    let values = cube.map_pixels(|_, tr| model.score(tr, index).ok());
    ScalarMap::from_options(cube.nx(), cube.ny(), values, format!("PC {}", index + 1), "a.u.")
}
