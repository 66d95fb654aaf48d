//! Transmission-mode optical constants: refractive index and absorption
//! coefficient from a sample/reference pulse pair, and the forward model that
//! synthesizes a sample pulse from known constants.

mod extract;
mod material;

pub use extract::{
    apply_forward_model, delay_phase, extract_constants, reference_mask, write_constants_csv,
    Band, OpticalConstants, SampleGeometry,
};
pub use material::{sample_material, ControlPoint, MaterialModel};
