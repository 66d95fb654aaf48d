use std::io::Write;

use thzkit::features::{pca_fit_cubes, pca_score_map};
use thzkit::{ScalarMap, ScanCube};

use super::{add_map, colormap, load_cube, rasters, stems, Ctx};
use crate::args::PcaArgs;
use crate::failure::{Failure, Outcome};
use crate::outputs::Outputs;

pub fn run(ctx: &Ctx, a: PcaArgs) -> Outcome {
    if a.components == 0 {
        return Err(Failure::usage("--components must be at least 1"));
    }
    let cubes: Vec<ScanCube> = a.cubes.iter().map(|p| load_cube(p)).collect::<Outcome<_>>()?;
    let refs: Vec<&ScanCube> = cubes.iter().collect();
    let model = pca_fit_cubes(&refs, a.components)?;
    let cmap = colormap(&a.colormap)?;
    let mut out = Outputs::new(&ctx.cfg.output_dir(a.out.as_deref()));

    let mut table = Vec::new();
    let header: Vec<String> = (1..=a.components).map(|i| format!("pc{i}")).collect();
    writeln!(table, "time_ps,mean,{}", header.join(",")).expect("in-memory write");
    let first = &cubes[0];
    for t in 0..model.dim() {
        let time = first.t0() + t as f64 * first.dt();
        let cols: Vec<String> = model.components.iter().map(|c| format!("{:.16e}", c[t])).collect();
        writeln!(table, "{time:.16e},{:.16e},{}", model.mean[t], cols.join(",")).expect("in-memory write");
    }
    out.add("pca.components.csv", table);

    let mut var = b"component,variance,ratio\n".to_vec();
    for (i, (v, r)) in model.explained_variance.iter().zip(model.explained_ratio()).enumerate() {
        writeln!(var, "{},{v:.16e},{r:.16e}", i + 1).expect("in-memory write");
    }
    out.add("pca.variance.csv", var);

    let names = stems(&a.cubes);
    for k in 0..a.components {
        let maps: Vec<ScalarMap> = cubes.iter().map(|c| pca_score_map(c, &model, k)).collect::<thzkit::Result<_>>()?;
        let map_refs: Vec<&ScalarMap> = maps.iter().collect();
        for ((s, m), r) in names.iter().zip(&maps).zip(rasters(&map_refs, cmap)?) {
            add_map(&mut out, &format!("{s}.pc{}", k + 1), m, &r, true)?;
        }
    }
    out.commit("pca", "pca.manifest.json")
}
