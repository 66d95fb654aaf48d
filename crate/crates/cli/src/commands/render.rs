use thzkit::cube::read_map_csv;
use thzkit::ScalarMap;

use super::{add_map, colormap, open, raster, rasters, stems, Ctx};
use crate::args::RenderArgs;
use crate::failure::Outcome;
use crate::outputs::Outputs;

pub fn run(ctx: &Ctx, a: RenderArgs) -> Outcome {
    let names = stems(&a.maps);
    let maps: Vec<ScalarMap> = a
        .maps
        .iter()
        .zip(&names)
        .map(|(p, s)| Ok(read_map_csv(open(p)?, s)?))
        .collect::<Outcome<_>>()?;
    let cmap = colormap(&a.colormap)?;
    let rendered = if a.shared {
        rasters(&maps.iter().collect::<Vec<_>>(), cmap)?
    } else {
        maps.iter().map(|m| raster(m, None, cmap)).collect::<Outcome<_>>()?
    };
    let mut out = Outputs::new(&ctx.cfg.output_dir(a.out.as_deref()));
    for ((s, m), r) in names.iter().zip(&maps).zip(&rendered) {
        add_map(&mut out, s, m, r, false)?;
    }
    out.commit("render", "render.manifest.json")
}
