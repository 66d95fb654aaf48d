//! Raster scan cubes and the per-pixel image modalities built on them:
//! time-gated regions, amplitude and phase slices, and optical constant maps.

mod gates;
mod images;
mod map;
mod scan;

pub use gates::{derive_gates, gate_image, GateRegions, GateStatistic};
pub use images::{constants_map, frequency_slice, Constant, SliceKind, Thickness};
pub use map::{read_map_csv, write_map_csv, ScalarMap};
pub use scan::{read_cube, write_cube, ScanCube, CUBE_MAGIC, CUBE_VERSION};
