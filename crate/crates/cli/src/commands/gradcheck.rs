use thzkit::pcnn::{gradient_check, reduced_setup};

use super::{apply_optics, train_config, Ctx};
use crate::args::GradcheckArgs;
use crate::failure::{Failure, Outcome};

pub fn run(ctx: &Ctx, a: GradcheckArgs) -> Outcome {
    match a.dtype.as_str() {
        "double" | "f64" => {}
        "single" | "f32" => {
            return Err(Failure::usage(
                "--dtype single is unsupported: gradients are checked in double precision only",
            ))
        }
        other => return Err(Failure::usage(format!("unknown --dtype `{other}` (double)"))),
    }
    let mut cfg = train_config(ctx);
    apply_optics(&mut cfg, &a.optics);
    if let Some(d) = a.thickness {
        cfg.thickness_mm = d;
    }
    cfg.validate()?;
    let (model, batch) = reduced_setup(cfg.seed, &cfg)?;
    println!("reduced model: {} parameters, batch of {} traces", model.params.len(), batch.len());
    let mut ok = true;
    for epoch in [cfg.lambda_start.max(1), cfg.epochs] {
        let r = gradient_check(&model, &batch, &cfg, epoch, a.corrupt_gradient)?;
        let verdict = if r.passed() { "PASS" } else { "FAIL" };
        println!(
            "epoch {epoch} lambda {}: max relative error {:.3e} (threshold {:.0e}) {verdict}",
            r.lambda,
            r.max_rel_error,
            r.threshold()
        );
        println!(
            "  per term: data {:.3e}  refractive {:.3e}  absorption {:.3e}",
            r.data, r.refractive, r.absorption
        );
        ok &= r.passed();
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::numeric("gradient check failed"))
    }
}
