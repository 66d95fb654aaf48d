use std::io::Write;

use thzkit::pcnn::encode_cube;
use thzkit::ScanCube;

use super::{load_cube, load_model, stems, Ctx};
use crate::args::EncodeArgs;
use crate::failure::{Failure, Outcome};
use crate::outputs::Outputs;

pub fn run(ctx: &Ctx, a: EncodeArgs) -> Outcome {
    let path = a.model.clone().or_else(|| ctx.cfg.model()).ok_or_else(|| Failure::usage("--model required"))?;
    let model = load_model(&path)?;
    let mut out = Outputs::new(&ctx.cfg.output_dir(a.out.as_deref()));
    for (p, s) in a.cubes.iter().zip(stems(&a.cubes)) {
        let cube = load_cube(p)?;
        let latents = encode_cube(&model, &cube)?;
        let mut table = Vec::new();
        let header: Vec<String> = (1..=model.latent_dim()).map(|i| format!("z{i}")).collect();
        writeln!(table, "x,y,{}", header.join(",")).expect("in-memory write");
        for (i, z) in latents.iter().enumerate() {
            let cols: Vec<String> = z.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(table, "{},{},{}", i % cube.nx(), i / cube.nx(), cols.join(",")).expect("in-memory write");
        }
        out.add(format!("{s}.latent.csv"), table);
        if a.reconstruct {
            let rows = cube.map_pixels(|_, tr| model.reconstruct(tr));
            let mut data = Vec::with_capacity(cube.data().len());
            for r in rows {
                data.extend(r?);
            }
            let recon = ScanCube::new(cube.nx(), cube.ny(), cube.nt(), cube.dx(), cube.dt(), cube.t0(), data)?;
            out.add_with(format!("{s}.recon.thzc"), |w| thzkit::cube::write_cube(&recon, w))?;
        }
    }
    out.commit("encode", "encode.manifest.json")
}
