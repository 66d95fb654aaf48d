use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};
use tempfile::TempDir;
use thzkit::cube::write_cube;
use thzkit::phantom::{make_reference, preset};
use thzkit::{PulseTrace, ScanCube};

fn thzkit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thzkit"))
        .args(args)
        .current_dir(dir)
        .env_remove("THZ_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = thzkit(dir, args);
    assert!(
        out.status.success(),
        "thzkit {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn synth(dir: &Path, preset: &str, out: &str) {
    ok(dir, &["synth", "--preset", preset, "--out", out]);
}

fn read_map(path: &Path) -> Vec<(usize, usize, f64)> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect()
}

fn read_labels(path: &Path) -> Vec<usize> {
    fs::read_to_string(path).unwrap().lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn files_in(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

/// Trains a small model on four healthy traces of the leaf preset.
fn tiny_model(dir: &Path, epochs: &str) -> Output {
    synth(dir, "leaf-healthy", "data");
    ok(
        dir,
        &[
            "train",
            "--cube",
            "data/leaf-healthy.thzc",
            "--labels",
            "data/leaf-healthy.labels.csv",
            "--reference",
            "data/leaf-healthy.reference.csv",
            "--thickness",
            "0.3",
            "--max-traces",
            "4",
            "--epochs",
            epochs,
            "--out",
            "model",
        ],
    )
}

#[test]
fn synth_twice_gives_identical_files() {
    let t = TempDir::new().unwrap();
    ok(t.path(), &["synth", "--preset", "leaf-healthy", "--seed", "7", "--out", "a"]);
    ok(t.path(), &["synth", "--preset", "leaf-healthy", "--seed", "7", "--out", "b"]);
    let a = files_in(&t.path().join("a"));
    assert_eq!(a.len(), 6);
    for f in a {
        let g = t.path().join("b").join(f.file_name().unwrap());
        assert_eq!(fs::read(&f).unwrap(), fs::read(&g).unwrap(), "{f:?}");
    }
}

#[test]
fn root_infected_truth_has_absorption_point_at_0_4_thz() {
    let t = TempDir::new().unwrap();
    synth(t.path(), "root-infected", ".");
    let truth = json(&t.path().join("root-infected.truth.json"));
    let infected = truth["layouts"]
        .as_array()
        .unwrap()
        .iter()
        .find(|l| l["class"] == "infected")
        .expect("infected layout");
    let points = infected["material"]["points"].as_array().unwrap();
    assert!(points.iter().any(|p| p["freq_thz"].as_f64() == Some(0.4)));
}

#[test]
fn failed_write_leaves_no_manifest() {
    let t = TempDir::new().unwrap();
    let out = t.path().join("out");
    fs::create_dir_all(out.join("leaf-healthy.labels.csv")).unwrap();
    let r = thzkit(t.path(), &["synth", "--preset", "leaf-healthy", "--out", "out"]);
    assert_eq!(code(&r), 5);
    assert!(!out.join("leaf-healthy.manifest.json").exists());

    fs::write(t.path().join("file"), b"").unwrap();
    let r = thzkit(t.path(), &["synth", "--preset", "leaf-healthy", "--out", "file/sub"]);
    assert_eq!(code(&r), 5);
}

#[test]
fn manifest_hashes_match_files_on_disk() {
    let t = TempDir::new().unwrap();
    synth(t.path(), "leaf-infected", ".");
    let m = json(&t.path().join("leaf-infected.manifest.json"));
    assert_eq!(m["command"], "synth");
    let files = m["files"].as_array().unwrap();
    assert_eq!(files.len(), 5);
    for f in files {
        let bytes = fs::read(t.path().join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["bytes"].as_u64().unwrap() as usize, bytes.len());
        assert_eq!(f["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
    }
}

#[test]
fn extract_of_the_reference_itself_gives_unit_index() {
    let t = TempDir::new().unwrap();
    synth(t.path(), "leaf-healthy", ".");
    let r = "leaf-healthy.reference.csv";
    ok(t.path(), &["extract", "--sample", r, "--reference", r, "--thickness", "0.3", "--out", "x"]);
    let text = fs::read_to_string(t.path().join("x/leaf-healthy.reference.constants.csv")).unwrap();
    let mut valid = 0;
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f[3] == "1" {
            valid += 1;
            assert_eq!(f[1].parse::<f64>().unwrap(), 1.0);
            assert_eq!(f[2].parse::<f64>().unwrap(), 0.0);
        }
    }
    assert!(valid > 100);
}

#[test]
fn extract_of_a_noiseless_blade_pixel_matches_its_material() {
    let t = TempDir::new().unwrap();
    ok(t.path(), &["synth", "--preset", "leaf-healthy", "--noise", "0", "--out", "."]);
    ok(
        t.path(),
        &[
            "extract",
            "--sample",
            "leaf-healthy.thzc",
            "--reference",
            "leaf-healthy.reference.csv",
            "--thickness",
            "0.3",
            "--pixel",
            "16,20",
        ],
    );
    let truth = preset("leaf-healthy").unwrap();
    let blade = truth.layouts.iter().find(|l| l.region == thzkit::phantom::RegionKind::Blade).unwrap();
    let text = fs::read_to_string(t.path().join("leaf-healthy.x16y20.constants.csv")).unwrap();
    let mut checked = 0;
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        if v[3] == 1.0 && (0.3..=2.0).contains(&v[0]) {
            let (n, a) = blade.material.at(v[0]);
            assert!((v[1] - n).abs() < 1e-3, "n at {} THz: {} vs {n}", v[0], v[1]);
            assert!((v[2] - a).abs() < 0.01 * a, "alpha at {} THz: {} vs {a}", v[0], v[2]);
            checked += 1;
        }
    }
    assert!(checked > 300);
}

#[test]
fn extract_with_zero_thickness_is_a_numeric_error() {
    let t = TempDir::new().unwrap();
    synth(t.path(), "leaf-healthy", ".");
    let r = "leaf-healthy.reference.csv";
    let out = thzkit(t.path(), &["extract", "--sample", r, "--reference", r, "--thickness", "0"]);
    assert_eq!(code(&out), 4);
    let missing = thzkit(t.path(), &["extract", "--sample", "nope.csv", "--reference", r, "--thickness", "1"]);
    assert_eq!(code(&missing), 5);
}

#[test]
fn amplitude_image_of_a_constant_cube_is_constant() {
    let t = TempDir::new().unwrap();
    let spec = preset("leaf-healthy").unwrap();
    let pulse: PulseTrace = make_reference(&spec).unwrap();
    let cube = ScanCube::uniform(5, 4, 0.5, &pulse).unwrap();
    write_cube(&cube, fs::File::create(t.path().join("flat.thzc")).unwrap()).unwrap();
    ok(t.path(), &["image", "--cube", "flat.thzc", "--modality", "amplitude", "--freq", "0.76"]);
    let map = read_map(&t.path().join("flat.amplitude-0.76THz.csv"));
    assert_eq!(map.len(), 20);
    assert!(map.iter().all(|p| p.2 == map[0].2));
    let pgm = fs::read(t.path().join("flat.amplitude-0.76THz.pgm")).unwrap();
    let (_, _, levels) = thzkit::features::read_pgm16(&pgm).unwrap();
    assert!(levels.iter().all(|&l| l == levels[0]));
    let meta = json(&t.path().join("flat.amplitude-0.76THz.json"));
    assert_eq!(meta["shared_min"], meta["shared_max"]);
}

#[test]
fn healthy_tissue_is_brighter_than_infected_in_gate_a2() {
    let t = TempDir::new().unwrap();
    synth(t.path(), "leaf-healthy", ".");
    synth(t.path(), "leaf-infected", ".");
    ok(
        t.path(),
        &[
            "image",
            "--group",
            "leaf-healthy.thzc",
            "leaf-infected.thzc",
            "--labels",
            "leaf-healthy.labels.csv",
            "leaf-infected.labels.csv",
            "--modality",
            "gate",
            "--region",
            "A2",
        ],
    );
    let mean_of = |stem: &str, class: usize| {
        let labels = read_labels(&t.path().join(format!("{stem}.labels.csv")));
        let map = read_map(&t.path().join(format!("{stem}.gate-A2.csv")));
        let v: Vec<f64> = map.iter().zip(&labels).filter(|(_, &c)| c == class).map(|(p, _)| p.2).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let healthy = mean_of("leaf-healthy", 1);
    let infected = mean_of("leaf-infected", 2);
    assert!(healthy > infected, "healthy {healthy} vs infected {infected}");
    let a = json(&t.path().join("leaf-healthy.gate-A2.json"));
    let b = json(&t.path().join("leaf-infected.gate-A2.json"));
    assert_eq!(a["shared_min"], b["shared_min"]);
    assert_eq!(a["shared_max"], b["shared_max"]);
}

#[test]
fn grouped_latent_maps_share_one_recorded_scale() {
    let t = TempDir::new().unwrap();
    tiny_model(t.path(), "1");
    synth(t.path(), "leaf-infected", "data");
    ok(
        t.path(),
        &[
            "image",
            "--group",
            "data/leaf-healthy.thzc",
            "data/leaf-infected.thzc",
            "--modality",
            "latent",
            "--index",
            "1",
            "--model",
            "model/model.pcnn",
            "--out",
            "img",
        ],
    );
    let img = t.path().join("img");
    let a = json(&img.join("leaf-healthy.latent1.json"));
    let b = json(&img.join("leaf-infected.latent1.json"));
    assert_eq!(a["shared_min"], b["shared_min"]);
    assert_eq!(a["shared_max"], b["shared_max"]);
    let all: Vec<f64> = ["leaf-healthy", "leaf-infected"]
        .iter()
        .flat_map(|s| read_map(&img.join(format!("{s}.latent1.csv"))))
        .map(|p| p.2)
        .collect();
    let lo = all.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = all.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(a["shared_min"].as_f64().unwrap(), lo);
    assert_eq!(a["shared_max"].as_f64().unwrap(), hi);
}

#[test]
fn single_epoch_training_logs_one_row_and_states_the_label_filter() {
    let t = TempDir::new().unwrap();
    let out = tiny_model(t.path(), "1");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("healthy pixels only"), "{stderr}");
    assert!(stderr.contains("--include-labels"), "{stderr}");
    assert!(String::from_utf8_lossy(&out.stdout).contains("final losses"));
    let log = fs::read_to_string(t.path().join("model/model.log.csv")).unwrap();
    let rows: Vec<&str> = log.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("1,0,"));
    assert!(t.path().join("model/model.pcnn").exists());
}

#[test]
fn infected_cube_trains_only_with_include_labels() {
    let t = TempDir::new().unwrap();
    synth(t.path(), "leaf-infected", ".");
    let base = [
        "train",
        "--cube",
        "leaf-infected.thzc",
        "--labels",
        "leaf-infected.labels.csv",
        "--reference",
        "leaf-infected.reference.csv",
        "--thickness",
        "0.3",
        "--max-traces",
        "2",
        "--epochs",
        "1",
    ];
    // the infected preset has no healthy tissue, so the filter leaves nothing
    let healthy_only = thzkit(t.path(), &base);
    assert_ne!(code(&healthy_only), 0);
    let say = String::from_utf8_lossy(&healthy_only.stderr);
    assert!(say.contains("refusing 416 infected pixels"), "{say}");
    assert!(!t.path().join("model.pcnn").exists());
    let mut with = base.to_vec();
    with.push("--include-labels");
    let both = ok(t.path(), &with);
    assert!(!String::from_utf8_lossy(&both.stderr).contains("refusing"));
}

#[test]
fn full_schedule_log_matches_lambda_exactly() {
    let t = TempDir::new().unwrap();
    tiny_model(t.path(), "50");
    let log = fs::read_to_string(t.path().join("model/model.log.csv")).unwrap();
    let rows: Vec<Vec<f64>> =
        log.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 50);
    for (i, r) in rows.iter().enumerate() {
        let epoch = i + 1;
        assert_eq!(r[0], epoch as f64);
        assert_eq!(r[1], thzkit::pcnn::lambda::<f64>(epoch, 10, 50), "epoch {epoch}");
    }
    assert_eq!(rows[29][1], 0.5);
    assert_eq!(rows[49][1], 1.0);
}

#[test]
fn training_is_independent_of_thread_count() {
    let t = TempDir::new().unwrap();
    synth(t.path(), "leaf-healthy", ".");
    let run = |threads: &str, out: &str| {
        let r = Command::new(env!("CARGO_BIN_EXE_thzkit"))
            .args([
                "train",
                "--cube",
                "leaf-healthy.thzc",
                "--labels",
                "leaf-healthy.labels.csv",
                "--reference",
                "leaf-healthy.reference.csv",
                "--thickness",
                "0.3",
                "--max-traces",
                "9",
                "--batch-size",
                "9",
                "--epochs",
                "2",
                "--out",
                out,
            ])
            .env("THZ_THREADS", threads)
            .current_dir(t.path())
            .output()
            .unwrap();
        assert!(r.status.success());
        fs::read(t.path().join(out).join("model.pcnn")).unwrap()
    };
    assert_eq!(run("1", "one"), run("3", "three"));
    let bad = Command::new(env!("CARGO_BIN_EXE_thzkit"))
        .args(["gradcheck"])
        .env("THZ_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&bad), 2);
}

#[test]
fn encode_writes_latents_and_reconstruction() {
    let t = TempDir::new().unwrap();
    tiny_model(t.path(), "1");
    ok(
        t.path(),
        &["encode", "--cube", "data/leaf-healthy.thzc", "--model", "model/model.pcnn", "--reconstruct", "--out", "enc"],
    );
    let text = fs::read_to_string(t.path().join("enc/leaf-healthy.latent.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap().split(',').count(), 34);
    assert_eq!(lines.count(), 1024);
    let recon = thzkit::cube::read_cube::<f64, _>(fs::File::open(t.path().join("enc/leaf-healthy.recon.thzc")).unwrap())
        .unwrap();
    assert_eq!((recon.nx(), recon.ny(), recon.nt()), (32, 32, 3072));
}

#[test]
fn gradcheck_passes_by_default_and_reports_every_term() {
    let t = TempDir::new().unwrap();
    let out = ok(t.path(), &["gradcheck"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for term in ["data", "refractive", "absorption"] {
        assert!(text.contains(term), "{text}");
    }
    let errors: Vec<f64> = text
        .lines()
        .filter_map(|l| l.split("max relative error ").nth(1))
        .map(|s| s.split_whitespace().next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(errors.len(), 2);
    assert!(errors.iter().all(|&e| e < 1e-4), "{errors:?}");
}

#[test]
fn gradcheck_fails_on_a_corrupted_gradient_and_single_precision() {
    let t = TempDir::new().unwrap();
    let corrupted = thzkit(t.path(), &["gradcheck", "--corrupt-gradient"]);
    assert_ne!(code(&corrupted), 0);
    assert!(String::from_utf8_lossy(&corrupted.stdout).contains("FAIL"));
    let single = thzkit(t.path(), &["gradcheck", "--dtype", "single"]);
    assert_eq!(code(&single), 2);
    assert!(String::from_utf8_lossy(&single.stderr).contains("unsupported"));
}

#[test]
fn config_rejects_unknown_keys_and_flags_win() {
    let t = TempDir::new().unwrap();
    fs::write(t.path().join("bad.json"), r#"{"phantom": "leaf-healthy", "colour": 1}"#).unwrap();
    let bad = thzkit(t.path(), &["--config", "bad.json", "synth"]);
    assert_eq!(code(&bad), 3);

    fs::create_dir(t.path().join("cfg")).unwrap();
    fs::write(t.path().join("cfg/run.json"), r#"{"phantom": "root-healthy", "seed": 3, "output_dir": "out"}"#)
        .unwrap();
    ok(t.path(), &["synth", "--config", "cfg/run.json"]);
    let spec = json(&t.path().join("cfg/out/root-healthy.spec.json"));
    assert_eq!(spec["seed"], 3);
    ok(t.path(), &["synth", "--config", "cfg/run.json", "--seed", "11", "--out", "flag"]);
    let spec = json(&t.path().join("flag/root-healthy.spec.json"));
    assert_eq!(spec["seed"], 11);
}

#[test]
fn usage_errors_exit_with_two() {
    let t = TempDir::new().unwrap();
    assert_eq!(code(&thzkit(t.path(), &["synth", "--preset", "fern"])), 2);
    assert_eq!(code(&thzkit(t.path(), &["frobnicate"])), 2);
    assert_eq!(code(&thzkit(t.path(), &["image", "--modality", "gate"])), 2);
}

#[test]
fn malformed_cube_is_a_format_error() {
    let t = TempDir::new().unwrap();
    fs::write(t.path().join("junk.thzc"), b"THZC but not really").unwrap();
    let out = thzkit(t.path(), &["pca", "--cube", "junk.thzc"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn pca_and_render_write_shared_scale_outputs() {
    let t = TempDir::new().unwrap();
    synth(t.path(), "leaf-healthy", ".");
    synth(t.path(), "leaf-infected", ".");
    ok(t.path(), &["pca", "--cube", "leaf-healthy.thzc", "--cube", "leaf-infected.thzc", "--components", "2"]);
    let variance = fs::read_to_string(t.path().join("pca.variance.csv")).unwrap();
    assert_eq!(variance.lines().count(), 3);
    let a = json(&t.path().join("leaf-healthy.pc1.json"));
    let b = json(&t.path().join("leaf-infected.pc1.json"));
    assert_eq!(a["shared_min"], b["shared_min"]);

    ok(
        t.path(),
        &[
            "render",
            "--map",
            "leaf-healthy.pc2.csv",
            "--map",
            "leaf-infected.pc2.csv",
            "--shared",
            "--colormap",
            "hot",
            "--out",
            "r",
        ],
    );
    let a = json(&t.path().join("r/leaf-healthy.pc2.json"));
    let b = json(&t.path().join("r/leaf-infected.pc2.json"));
    assert_eq!(a["shared_max"], b["shared_max"]);
    assert!(fs::read(t.path().join("r/leaf-healthy.pc2.ppm")).unwrap().starts_with(b"P6"));
}
