use thzkit::phantom::{preset, synthesize, write_labels_csv, PhantomSpec};

use super::{open, Ctx};
use crate::args::SynthArgs;
use crate::config::PhantomSource;
use crate::failure::{Failure, Outcome};
use crate::outputs::Outputs;

pub fn run(ctx: &Ctx, a: SynthArgs) -> Outcome {
    let source = match (a.preset, a.spec) {
        (Some(p), _) => PhantomSource::Preset(p),
        (None, Some(s)) => PhantomSource::Spec(s),
        (None, None) => ctx
            .cfg
            .phantom()
            .ok_or_else(|| Failure::usage("phantom required (--preset, --spec or phantom in the config)"))?,
    };
    let mut spec = match source {
        PhantomSource::Preset(name) => preset(&name)?,
        PhantomSource::Spec(path) => {
            let mut text = String::new();
            std::io::Read::read_to_string(&mut open(&path)?, &mut text).map_err(|e| Failure::io(&path, e))?;
            PhantomSpec::from_json(&text)?
        }
    };
    if let Some(s) = ctx.seed.or(ctx.cfg.seed) {
        spec.seed = s;
    }
    if let Some(n) = a.noise {
        spec.noise_std = n;
    }
    let name = a.name.unwrap_or_else(|| if spec.name.is_empty() { "phantom".into() } else { spec.name.clone() });
    let lc = synthesize(&spec)?;

    let mut out = Outputs::new(&ctx.cfg.output_dir(a.out.as_deref()));
    out.add_with(format!("{name}.thzc"), |w| thzkit::cube::write_cube(&lc.cube, w))?;
    out.add_with(format!("{name}.labels.csv"), |w| write_labels_csv(lc.cube.nx(), &lc.labels, w))?;
    out.add_with(format!("{name}.reference.csv"), |w| thzkit::signal::write_trace_csv(&lc.reference, w))?;
    let mut truth = serde_json::to_vec_pretty(&lc.truth)?;
    truth.push(b'\n');
    out.add(format!("{name}.truth.json"), truth);
    let mut spec_text = spec.to_json().into_bytes();
    spec_text.push(b'\n');
    out.add(format!("{name}.spec.json"), spec_text);
    out.commit("synth", &format!("{name}.manifest.json"))
}
