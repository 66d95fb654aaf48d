//! PCA feature extraction and joint-scale rendering of feature maps.

mod eigen;
mod pca;
mod render;

pub use eigen::symmetric_eigen;
pub use pca::{pca_fit, pca_fit_cubes, pca_score_map, PcaModel};
pub use render::{
    group_scale, level, read_pgm16, render_group, render_with_scale, Colormap, Raster, RasterMeta, RenderGroup,
    MAX_LEVEL,
};
