//! One module per subcommand plus the loaders and writers they share.

mod encode;
mod extract;
mod gradcheck;
mod image;
mod pca;
mod render;
mod synth;
mod train;

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use thzkit::features::{group_scale, render_with_scale, Colormap, Raster};
use thzkit::pcnn::{read_model, TrainConfig};
use thzkit::phantom::{read_labels_csv, Class};
use thzkit::{Band, Pcnn, PulseTrace, ScalarMap, ScanCube};

use crate::args::{Cli, Command, OpticsArgs};
use crate::config::RunConfig;
use crate::failure::{Failure, Outcome};
use crate::outputs::Outputs;

pub struct Ctx {
    pub cfg: RunConfig,
    pub seed: Option<u64>,
}

pub fn run(cli: Cli) -> Outcome {
    let ctx = Ctx { cfg: RunConfig::load(cli.config.as_deref())?, seed: cli.seed };
    match cli.command {
        Command::Synth(a) => synth::run(&ctx, a),
        Command::Extract(a) => extract::run(&ctx, a),
        Command::Image(a) => image::run(&ctx, a),
        Command::Pca(a) => pca::run(&ctx, a),
        Command::Train(a) => train::run(&ctx, a),
        Command::Encode(a) => encode::run(&ctx, a),
        Command::Gradcheck(a) => gradcheck::run(&ctx, a),
        Command::Render(a) => render::run(&ctx, a),
    }
}

fn open(path: &Path) -> Outcome<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Failure::io(path, e))
}

fn with_path(path: &Path, e: thzkit::Error) -> Failure {
    let mut f = Failure::from(e);
    f.message = format!("{}: {}", path.display(), f.message);
    f
}

pub fn load_cube(path: &Path) -> Outcome<ScanCube> {
    thzkit::cube::read_cube(open(path)?).map_err(|e| with_path(path, e))
}

pub fn load_trace(path: &Path) -> Outcome<PulseTrace> {
    thzkit::signal::read_trace_csv(open(path)?).map_err(|e| with_path(path, e))
}

pub fn load_labels(path: &Path, cube: &ScanCube) -> Outcome<Vec<Class>> {
    read_labels_csv(open(path)?, cube.nx(), cube.ny()).map_err(|e| with_path(path, e))
}

pub fn load_model(path: &Path) -> Outcome<Pcnn> {
    read_model(open(path)?).map_err(|e| with_path(path, e))
}

/// Cubes and their labels, which must come one per cube when given.
fn load_labeled(cubes: &[std::path::PathBuf], labels: &[std::path::PathBuf]) -> Outcome<Vec<(ScanCube, Option<Vec<Class>>)>> {
    if !labels.is_empty() && labels.len() != cubes.len() {
        return Err(Failure::usage(format!("{} label files for {} cubes", labels.len(), cubes.len())));
    }
    cubes
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let cube = load_cube(p)?;
            let lab = labels.get(i).map(|l| load_labels(l, &cube)).transpose()?;
            Ok((cube, lab))
        })
        .collect()
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "out".into(), |s| s.to_string_lossy().into_owned())
}

/// File stems, made unique by suffixing repeats with their position.
fn stems(paths: &[std::path::PathBuf]) -> Vec<String> {
    let raw: Vec<String> = paths.iter().map(|p| stem(p)).collect();
    raw.iter()
        .enumerate()
        .map(|(i, s)| if raw.iter().filter(|t| *t == s).count() > 1 { format!("{s}-{}", i + 1) } else { s.clone() })
        .collect()
}

/// Settings for the autoencoder: defaults, then the config file, then the seed flag.
fn train_config(ctx: &Ctx) -> TrainConfig {
    let mut c = ctx.cfg.train.clone().unwrap_or_default();
    let o = &ctx.cfg.optics;
    if let Some(v) = o.band_min_thz {
        c.band_min_thz = v;
    }
    if let Some(v) = o.band_max_thz {
        c.band_max_thz = v;
    }
    if let Some(v) = o.floor {
        c.floor = v;
    }
    if let Some(v) = ctx.cfg.thickness_mm {
        c.thickness_mm = v;
    }
    if let Some(s) = ctx.seed.or(ctx.cfg.seed) {
        c.seed = s;
    }
    c
}

fn apply_optics(c: &mut TrainConfig, o: &OpticsArgs) {
    if let Some(v) = o.fmin {
        c.band_min_thz = v;
    }
    if let Some(v) = o.fmax {
        c.band_max_thz = v;
    }
    if let Some(v) = o.floor {
        c.floor = v;
    }
}

fn band(ctx: &Ctx, o: &OpticsArgs) -> Band<f64> {
    let mut c = train_config(ctx);
    apply_optics(&mut c, o);
    c.band()
}

fn thickness(ctx: &Ctx, flag: Option<f64>) -> Outcome<f64> {
    flag.or(ctx.cfg.thickness_mm)
        .or(ctx.cfg.train.as_ref().map(|t| t.thickness_mm))
        .ok_or_else(|| Failure::usage("sample thickness required (--thickness or thickness_mm in the config)"))
}

fn reference(ctx: &Ctx, flag: Option<&Path>) -> Outcome<PulseTrace> {
    let path = flag.map(Path::to_path_buf).or_else(|| ctx.cfg.reference()).ok_or_else(|| {
        Failure::usage("reference trace required (--reference or reference in the config)")
    })?;
    load_trace(&path)
}

fn colormap(name: &str) -> Outcome<Colormap> {
    Ok(Colormap::parse(name)?)
}

/// Renders on `[min, max]`; a map whose valid pixels are all equal renders
/// at mid level with that value recorded as both ends of the scale.
fn raster(map: &ScalarMap, scale: Option<(f64, f64)>, colormap: Colormap) -> Outcome<Raster> {
    let (min, max) = match scale {
        Some(s) => s,
        None => match group_scale(&[map]) {
            Ok(s) => s,
            Err(thzkit::Error::DegenerateRange(_)) if map.valid_values().next().is_some() => {
                let v = map.valid_values().next().unwrap_or(0.0);
                let mut r = render_with_scale(map, v - 1.0, v + 1.0, colormap)?;
                r.meta.shared_min = v;
                r.meta.shared_max = v;
                return Ok(r);
            }
            Err(e) => return Err(e.into()),
        },
    };
    Ok(render_with_scale(map, min, max, colormap)?)
}

/// Joint scale of several maps, with the same constant-map fallback.
fn rasters(maps: &[&ScalarMap], colormap: Colormap) -> Outcome<Vec<Raster>> {
    match group_scale(maps) {
        Ok(s) => maps.iter().map(|m| raster(m, Some(s), colormap)).collect(),
        Err(thzkit::Error::DegenerateRange(_)) if maps.iter().any(|m| m.valid_values().next().is_some()) => {
            let v = maps.iter().flat_map(|m| m.valid_values()).next().unwrap_or(0.0);
            maps.iter()
                .map(|m| {
                    let mut r = render_with_scale(m, v - 1.0, v + 1.0, colormap)?;
                    r.meta.shared_min = v;
                    r.meta.shared_max = v;
                    Ok(r)
                })
                .collect()
        }
        Err(e) => Err(e.into()),
    }
}

/// Map CSV, raster (PGM for grayscale, PPM otherwise), sidecar JSON and,
/// when some pixels are invalid, a validity mask.
fn add_map(out: &mut Outputs, stem: &str, map: &ScalarMap, r: &Raster, with_csv: bool) -> Outcome {
    if with_csv {
        out.add_with(format!("{stem}.csv"), |w| thzkit::cube::write_map_csv(map, w))?;
    }
    if r.meta.colormap == Colormap::Grayscale {
        out.add_with(format!("{stem}.pgm"), |w| r.write_pgm(w))?;
    } else {
        out.add_with(format!("{stem}.ppm"), |w| r.write_ppm(w))?;
    }
    out.add_with(format!("{stem}.json"), |w| r.write_meta(w))?;
    if r.meta.invalid_pixels > 0 {
        out.add_with(format!("{stem}.mask.pgm"), |w| r.write_mask(w))?;
    }
    Ok(())
}
