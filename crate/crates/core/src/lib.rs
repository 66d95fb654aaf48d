//! Terahertz time-domain spectroscopy toolkit.
//!
//! Optical constant extraction from transmission pulses, per-pixel imaging of
//! raster scan cubes, a synthetic phantom generator, PCA and a
//! physics-constrained convolutional autoencoder whose loss keeps the
//! refractive index and absorption of its reconstructions consistent with
//! its inputs.
//!
//! Numeric types are generic over [`Real`] (`f32` or `f64`). The aliases at
//! the crate root fix the scalar to `f64`, which is what the file formats and
//! the command line use.

// negated comparisons are how NaN gets rejected along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cube;
pub mod error;
pub mod features;
pub mod optics;
pub mod pcnn;
pub mod phantom;
pub mod scalar;
pub mod signal;

pub use error::{Error, Result};
pub use optics::{Band, OpticalConstants as OpticalConstantsGeneric};
pub use scalar::{Real, SPEED_OF_LIGHT_MM_PER_PS};

pub type PulseTrace = signal::PulseTrace<f64>;
pub type Spectrum = signal::Spectrum<f64>;
pub type Window = signal::Window<f64>;
pub type OpticalConstants = optics::OpticalConstants<f64>;
pub type MaterialModel = optics::MaterialModel<f64>;
pub type SampleGeometry = optics::SampleGeometry<f64>;
pub type ScanCube = cube::ScanCube<f64>;
pub type ScalarMap = cube::ScalarMap<f64>;
pub type PcaModel = features::PcaModel<f64>;
pub type Pcnn = pcnn::Pcnn<f64>;
