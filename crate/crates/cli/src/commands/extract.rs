use std::io::Read;

use thzkit::cube::CUBE_MAGIC;
use thzkit::optics::{extract_constants, reference_mask, write_constants_csv, SampleGeometry};
use thzkit::phantom::Class;
use thzkit::signal::forward_transform;
use thzkit::{PulseTrace, ScanCube};

use super::{band, load_cube, load_labels, load_trace, open, reference, stem, thickness, Ctx};
use crate::args::ExtractArgs;
use crate::failure::{Failure, Outcome};
use crate::outputs::Outputs;

fn is_cube(path: &std::path::Path) -> Outcome<bool> {
    let mut head = [0u8; 4];
    let n = open(path)?.read(&mut head).map_err(|e| Failure::io(path, e))?;
    Ok(n == 4 && &head == CUBE_MAGIC)
}

pub fn run(ctx: &Ctx, a: ExtractArgs) -> Outcome {
    let reference = reference(ctx, a.reference.as_deref())?;
    let geom = SampleGeometry::new(thickness(ctx, a.thickness)?)?;
    let band = band(ctx, &a.optics);
    let name = a.name.clone().unwrap_or_else(|| stem(&a.sample));
    let mut out = Outputs::new(&ctx.cfg.output_dir(a.out.as_deref()));
    let r = forward_transform(&reference, None)?;

    let single = |trace: &PulseTrace| -> Outcome<Vec<u8>> {
        let c = extract_constants(&forward_transform(trace, None)?, &r, &geom, &band)?;
        let mut bytes = Vec::new();
        write_constants_csv(&c, &mut bytes)?;
        Ok(bytes)
    };

    if !is_cube(&a.sample)? {
        if a.pixel.is_some() || a.mean {
            return Err(Failure::usage("--pixel and --mean need a cube sample"));
        }
        out.add(format!("{name}.constants.csv"), single(&load_trace(&a.sample)?)?);
        return out.commit("extract", &format!("{name}.extract.manifest.json"));
    }

    let cube = load_cube(&a.sample)?;
    if let Some((x, y)) = a.pixel {
        if x >= cube.nx() || y >= cube.ny() {
            return Err(Failure::usage(format!("pixel ({x}, {y}) outside {}x{}", cube.nx(), cube.ny())));
        }
        out.add(format!("{name}.x{x}y{y}.constants.csv"), single(&cube.pulse(y * cube.nx() + x))?);
    } else if a.mean {
        let mean = match &a.labels {
            Some(l) => {
                let labels = load_labels(l, &cube)?;
                cube.mean_trace_of((0..cube.pixels()).filter(|&p| labels[p] != Class::Background))?
            }
            None => cube.mean_trace(),
        };
        out.add(format!("{name}.mean.constants.csv"), single(&mean)?);
    } else {
        out.add(format!("{name}.constants.csv"), cube_table(&cube, &r, &geom, &band)?);
    }
    out.commit("extract", &format!("{name}.extract.manifest.json"))
}

/// `x,y,freq_thz,n,alpha_cm,valid` over the reference band of every pixel.
fn cube_table(
    cube: &ScanCube,
    r: &thzkit::Spectrum,
    geom: &thzkit::SampleGeometry,
    band: &thzkit::Band<f64>,
) -> Outcome<Vec<u8>> {
    use std::io::Write;
    let mask = reference_mask(r, band)?;
    let rows = cube.map_pixels(|p, tr| -> thzkit::Result<Vec<u8>> {
        let trace = PulseTrace::new(cube.dt(), cube.t0(), tr.to_vec())?;
        let c = match extract_constants(&forward_transform(&trace, None)?, r, geom, band) {
            Ok(c) => Some(c),
            Err(thzkit::Error::NoBand(_)) => None,
            Err(e) => return Err(e),
        };
        let (x, y) = (p % cube.nx(), p / cube.nx());
        let mut s = Vec::new();
        for k in (0..mask.len()).filter(|&k| mask[k]) {
            let f = r.frequency(k);
            match &c {
                Some(c) if c.valid[k] => writeln!(s, "{x},{y},{f:.12e},{:.12e},{:.12e},1", c.n[k] + 0.0, c.alpha[k] + 0.0)?,
                _ => writeln!(s, "{x},{y},{f:.12e},nan,nan,0")?,
            }
        }
        Ok(s)
    });
    let mut bytes = b"x,y,freq_thz,n,alpha_cm,valid\n".to_vec();
    for row in rows {
        bytes.extend(row?);
    }
    Ok(bytes)
}
