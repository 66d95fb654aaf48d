use thzkit::cube::{constants_map, derive_gates, frequency_slice, gate_image, Constant, GateStatistic, SliceKind, Thickness};
use thzkit::features::{pca_fit_cubes, pca_score_map};
use thzkit::pcnn::latent_maps;
use thzkit::phantom::Class;
use thzkit::{PulseTrace, ScalarMap, ScanCube};

use super::{add_map, band, colormap, load_labeled, load_model, raster, rasters, reference, stems, thickness, Ctx};
use crate::args::{ImageArgs, Modality, Statistic};
use crate::failure::{Failure, Outcome};
use crate::outputs::Outputs;

pub fn run(ctx: &Ctx, a: ImageArgs) -> Outcome {
    let grouped = !a.group.is_empty();
    let paths = if grouped { a.group.clone() } else { a.cubes.clone() };
    if paths.is_empty() {
        return Err(Failure::usage("no input cube (--cube or --group)"));
    }
    let inputs = load_labeled(&paths, &a.labels)?;
    let cubes: Vec<&ScanCube> = inputs.iter().map(|(c, _)| c).collect();
    let cmap = colormap(&a.colormap)?;
    let freq = || a.freq.ok_or_else(|| Failure::usage("--freq required for this modality"));
    let index = || match a.index {
        Some(i) if i >= 1 => Ok(i),
        Some(_) => Err(Failure::usage("--index is 1-based")),
        None => Err(Failure::usage("--index required for this modality")),
    };

    let (tag, maps): (String, Vec<ScalarMap>) = match a.modality {
        Modality::Gate => {
            let region = parse_region(a.region.as_deref())?;
            let stat = match a.statistic {
                Statistic::PeakToPeak => GateStatistic::PeakToPeak,
                Statistic::MeanAbs => GateStatistic::MeanAbs,
                Statistic::Energy => GateStatistic::Energy,
            };
            let gates = derive_gates(&gate_trace(&inputs)?)?;
            let range = gates.region(region)?;
            let maps = cubes.iter().map(|c| gate_image(c, range.clone(), stat)).collect::<thzkit::Result<_>>()?;
            (format!("gate-A{region}"), maps)
        }
        Modality::Amplitude | Modality::Phase => {
            let f = freq()?;
            let (kind, name) = match a.modality {
                Modality::Amplitude => (SliceKind::Amplitude, "amplitude"),
                _ => (SliceKind::Phase, "phase"),
            };
            let maps = cubes.iter().map(|c| frequency_slice(c, f, kind)).collect::<thzkit::Result<_>>()?;
            (format!("{name}-{f}THz"), maps)
        }
        Modality::N | Modality::Alpha => {
            let f = freq()?;
            let r = reference(ctx, a.reference.as_deref())?;
            let d = Thickness::Uniform(thickness(ctx, a.thickness)?);
            let b = band(ctx, &a.optics);
            let (which, name) = match a.modality {
                Modality::N => (Constant::RefractiveIndex, "n"),
                _ => (Constant::Absorption, "alpha"),
            };
            let maps = cubes.iter().map(|c| constants_map(c, &r, &d, f, which, &b)).collect::<thzkit::Result<_>>()?;
            (format!("{name}-{f}THz"), maps)
        }
        Modality::Pc => {
            let k = index()?;
            let model = pca_fit_cubes(&cubes, k)?;
            let maps = cubes.iter().map(|c| pca_score_map(c, &model, k - 1)).collect::<thzkit::Result<_>>()?;
            (format!("pc{k}"), maps)
        }
        Modality::Latent => {
            let k = index()?;
            let path = a.model.clone().or_else(|| ctx.cfg.model()).ok_or_else(|| Failure::usage("--model required"))?;
            let model = load_model(&path)?;
            (format!("latent{k}"), latent_maps(&model, &cubes, k - 1)?)
        }
    };

    let map_refs: Vec<&ScalarMap> = maps.iter().collect();
    let rendered = if grouped {
        rasters(&map_refs, cmap)?
    } else {
        maps.iter().map(|m| raster(m, None, cmap)).collect::<Outcome<_>>()?
    };
    let mut out = Outputs::new(&ctx.cfg.output_dir(a.out.as_deref()));
    for ((s, m), r) in stems(&paths).iter().zip(&maps).zip(&rendered) {
        add_map(&mut out, &format!("{s}.{tag}"), m, r, true)?;
    }
    out.commit("image", &format!("{tag}.image.manifest.json"))
}

fn parse_region(s: Option<&str>) -> Outcome<usize> {
    let s = s.ok_or_else(|| Failure::usage("--region required for gate images (A1-A4)"))?;
    let digit = s.trim().trim_start_matches(['A', 'a']);
    match digit.parse::<usize>() {
        Ok(i @ 1..=4) => Ok(i),
        _ => Err(Failure::usage(format!("unknown gate region `{s}` (A1-A4)"))),
    }
}

/// Mean trace the gates are cut from: tissue pixels when labels are
/// present, all pixels otherwise, pooled over the inputs.
fn gate_trace(inputs: &[(ScanCube, Option<Vec<Class>>)]) -> Outcome<PulseTrace> {
    let first = &inputs[0].0;
    let mut sum = vec![0.0; first.nt()];
    let mut count = 0usize;
    for (cube, labels) in inputs {
        if cube.nt() != first.nt() || cube.dt() != first.dt() || cube.t0() != first.t0() {
            return Err(thzkit::Error::Dimension("cubes differ in their time axis".into()).into());
        }
        let pixels: Vec<usize> = match labels {
            Some(l) => (0..cube.pixels()).filter(|&p| l[p] != Class::Background).collect(),
            None => (0..cube.pixels()).collect(),
        };
        for &p in &pixels {
            sum.iter_mut().zip(cube.trace_at(p)).for_each(|(s, v)| *s += v);
        }
        count += pixels.len();
    }
    if count == 0 {
        return Err(Failure::usage("no tissue pixel to derive gates from"));
    }
    Ok(PulseTrace::new(first.dt(), first.t0(), sum.into_iter().map(|s| s / count as f64).collect())?)
}
