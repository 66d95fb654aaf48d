use thzkit::pcnn::{init_model, write_log_csv, write_model, Architecture, Trainer};
use thzkit::phantom::Class;

use super::{apply_optics, load_labeled, reference, train_config, Ctx};
use crate::args::TrainArgs;
use crate::failure::{Failure, Outcome};
use crate::outputs::Outputs;

pub fn run(ctx: &Ctx, a: TrainArgs) -> Outcome {
    let mut cfg = train_config(ctx);
    apply_optics(&mut cfg, &a.optics);
    if let Some(v) = a.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = a.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = a.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = a.clip_max_norm {
        cfg.clip_max_norm = v;
    }
    if let Some(v) = a.noise_db {
        cfg.noise_level_db = v;
    }
    if let Some(v) = a.thickness {
        cfg.thickness_mm = v;
    }
    if a.no_physics {
        cfg.physics = false;
    }
    cfg.validate()?;

    let inputs = load_labeled(&a.cubes, &a.labels)?;
    let mut traces = Vec::new();
    let (mut excluded, mut background) = (0usize, 0usize);
    for (cube, labels) in &inputs {
        for p in 0..cube.pixels() {
            let keep = match labels.as_ref().map(|l| l[p]) {
                None | Some(Class::Healthy) => true,
                Some(Class::Infected) if a.include_labels => true,
                Some(Class::Infected) => {
                    excluded += 1;
                    false
                }
                Some(Class::Background) => {
                    background += 1;
                    false
                }
            };
            if keep {
                traces.push(cube.trace_at(p).to_vec());
            }
        }
    }
    if !a.labels.is_empty() {
        if a.include_labels {
            eprintln!("labels present: training on healthy and infected pixels ({background} background skipped)");
        } else {
            eprintln!(
                "labels present: training on healthy pixels only; refusing {excluded} infected pixels \
                 ({background} background skipped); pass --include-labels to train on them"
            );
        }
    }
    if let Some(m) = a.max_traces {
        traces.truncate(m);
    }
    if traces.is_empty() {
        return Err(Failure::usage("no training traces left after filtering"));
    }

    let r = reference(ctx, a.reference.as_deref())?;
    let arch = Architecture::standard(r.len());
    let model = init_model(&traces, &r, arch, &cfg)?;
    eprintln!("training on {} traces of {} samples for {} epochs", traces.len(), r.len(), cfg.epochs);
    let mut trainer = Trainer::new(model, &traces, cfg.clone())?;
    let mut log = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let row = trainer.epoch(epoch)?;
        eprintln!(
            "epoch {epoch:>3}  lambda {:.3}  data {:.6e}  re {:.6e}  ab {:.6e}  total {:.6e}",
            row.lambda, row.loss_data, row.loss_re, row.loss_ab, row.loss_total
        );
        log.push(row);
    }
    if let Some(last) = log.last() {
        println!(
            "final losses: data {:.6e} refractive {:.6e} absorption {:.6e} total {:.6e}",
            last.loss_data, last.loss_re, last.loss_ab, last.loss_total
        );
    }

    let mut out = Outputs::new(&ctx.cfg.output_dir(a.out.as_deref()));
    out.add_with(format!("{}.pcnn", a.name), |w| write_model(&trainer.model, w))?;
    out.add_with(format!("{}.log.csv", a.name), |w| write_log_csv(&log, w))?;
    out.commit("train", &format!("{}.manifest.json", a.name))
}
