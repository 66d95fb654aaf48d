use super::network::Pcnn;
use crate::cube::{ScalarMap, ScanCube};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Presentation order of the latent coordinates over a set of pixels:
/// descending variance (ties by index), each signed so that it does not
/// grow with the pixel's trace energy.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentOrder {
    /// `order[i]` is the raw coordinate shown as latent `i`.
    pub order: Vec<usize>,
    pub sign: Vec<f64>,
    /// Variance of each presented coordinate.
    pub variance: Vec<f64>,
}

/// Raw latent vectors of every pixel.
pub fn encode_cube<T: Real>(model: &Pcnn<T>, cube: &ScanCube<T>) -> Result<Vec<Vec<T>>> {
    cube.map_pixels(|_, tr| model.encode(tr)).into_iter().collect()
}

/// Order computed over the pixels of all `cubes` together.
pub fn latent_order<T: Real>(model: &Pcnn<T>, cubes: &[&ScanCube<T>]) -> Result<LatentOrder> {
    let mut latents = Vec::new();
    let mut energy = Vec::new();
    for cube in cubes {
        latents.extend(encode_cube(model, cube)?);
        energy.extend(cube.map_pixels(|_, tr| tr.iter().map(|v| v.to_f64_lossy().powi(2)).sum::<f64>()));
    }
    Ok(order_from(&latents, &energy, model.latent_dim()))
}

fn order_from<T: Real>(latents: &[Vec<T>], energy: &[f64], dim: usize) -> LatentOrder {
    let m = latents.len().max(1) as f64;
    let mean_e = energy.iter().sum::<f64>() / m;
    let mut stats = Vec::with_capacity(dim);
    for j in 0..dim {
        // Shifted by the first pixel so identical values give exactly zero.
        let shift = latents.first().map_or(0.0, |z| z[j].to_f64_lossy());
        let mean = latents.iter().map(|z| z[j].to_f64_lossy() - shift).sum::<f64>() / m;
        let (mut var, mut cov) = (0.0, 0.0);
        for (z, &e) in latents.iter().zip(energy) {
            let d = z[j].to_f64_lossy() - shift - mean;
            var += d * d;
            cov += d * (e - mean_e);
        }
        stats.push((var / m, if cov > 0.0 { -1.0 } else { 1.0 }));
    }
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| stats[b].0.partial_cmp(&stats[a].0).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    LatentOrder {
        sign: order.iter().map(|&j| stats[j].1).collect(),
        variance: order.iter().map(|&j| stats[j].0).collect(),
        order,
    }
}

/// Latent coordinate `index` (0-based, in presentation order) of every pixel
/// of each cube, ordered over all the cubes together.
pub fn latent_maps<T: Real>(model: &Pcnn<T>, cubes: &[&ScanCube<T>], index: usize) -> Result<Vec<ScalarMap<T>>> {
    if index >= model.latent_dim() {
        return Err(Error::Index(format!("latent {index} of {}", model.latent_dim())));
    }
    let mut encoded = Vec::with_capacity(cubes.len());
    let mut energy = Vec::new();
    for cube in cubes {
        encoded.push(encode_cube(model, cube)?);
        energy.extend(cube.map_pixels(|_, tr| tr.iter().map(|v| v.to_f64_lossy().powi(2)).sum::<f64>()));
    }
    let all: Vec<Vec<T>> = encoded.iter().flatten().cloned().collect();
    let ord = order_from(&all, &energy, model.latent_dim());
    let (j, sign) = (ord.order[index], T::of(ord.sign[index]));
    cubes
        .iter()
        .zip(&encoded)
        .map(|(cube, z)| {
            ScalarMap::from_options(
                cube.nx(),
                cube.ny(),
                z.iter().map(|v| Some(sign * v[j])),
                format!("latent {}", index + 1),
                "a.u.",
            )
        })
        .collect()
}

/// Latent coordinate `index` of every pixel, ordered over this cube.
pub fn latent_map<T: Real>(cube: &ScanCube<T>, model: &Pcnn<T>, index: usize) -> Result<ScalarMap<T>> {
    Ok(latent_maps(model, &[cube], index)?.remove(0))
}
