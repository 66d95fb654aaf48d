//! Imaging modalities checked against phantoms with known ground truth.

use thzkit::cube::{
    constants_map, derive_gates, frequency_slice, gate_image, Constant, GateStatistic, ScanCube, SliceKind,
    Thickness,
};
use thzkit::optics::{apply_forward_model, extract_constants, Band, MaterialModel, SampleGeometry};
use thzkit::phantom::{
    make_reference, pixel_rng, preset, synthesize, Class, Layout, PhantomSpec, RegionKind, Shape,
};
use thzkit::signal::{forward_transform, PulseTrace};

fn noiseless(name: &str) -> PhantomSpec {
    let mut spec = preset(name).unwrap();
    spec.noise_std = 0.0;
    spec
}

fn small(spec: &mut PhantomSpec, n: usize) {
    spec.nx = n;
    spec.ny = n;
}

fn two_material_spec(dry: MaterialModel<f64>, wet: MaterialModel<f64>, noise: f64) -> PhantomSpec {
    let mut spec = preset("leaf-healthy").unwrap();
    spec.nx = 8;
    spec.ny = 4;
    spec.noise_std = noise;
    spec.layouts = vec![
        Layout {
            region: RegionKind::Blade,
            class: Class::Healthy,
            shape: Shape::Full,
            material: dry,
            thickness_mm: 0.5,
        },
        Layout {
            region: RegionKind::Root,
            class: Class::Infected,
            shape: Shape::Rect { x0: 4.0, y0: 0.0, x1: 7.0, y1: 3.0 },
            material: wet,
            thickness_mm: 0.5,
        },
    ];
    spec
}

fn extract_pixel(lc: &thzkit::phantom::LabeledCube, p: usize, d: f64) -> thzkit::OpticalConstants {
    let nt = Some(lc.cube.nt());
    let r = forward_transform(&lc.reference, nt).unwrap();
    let s = forward_transform(&lc.cube.pulse(p), nt).unwrap();
    extract_constants(&s, &r, &SampleGeometry::new(d).unwrap(), &Band::default()).unwrap()
}

#[test]
fn leaf_presets_cross_near_1_6_thz() {
    let mut h = noiseless("leaf-healthy");
    let mut i = noiseless("leaf-infected");
    small(&mut h, 32);
    small(&mut i, 32);
    let lh = synthesize(&h).unwrap();
    let li = synthesize(&i).unwrap();
    let ph = lh.regions.iter().position(|r| *r == RegionKind::Blade).unwrap();
    let pi = li.regions.iter().position(|r| *r == RegionKind::Blade).unwrap();
    let ch = extract_pixel(&lh, ph, 0.3);
    let ci = extract_pixel(&li, pi, 0.3);
    let mut crossing = None;
    let mut prev: Option<f64> = None;
    for k in 0..ch.frequencies.len() {
        if !(ch.valid[k] && ci.valid[k]) {
            continue;
        }
        let diff = ci.n[k] - ch.n[k];
        if let Some(p) = prev {
            if p < 0.0 && diff >= 0.0 {
                crossing = Some(ch.frequencies[k]);
            }
        }
        prev = Some(diff);
        if ch.frequencies[k] < 1.5 {
            assert!(diff < 0.0, "infected above healthy at {} THz", ch.frequencies[k]);
        }
        if ch.frequencies[k] > 1.7 {
            assert!(diff > 0.0);
        }
    }
    let f = crossing.expect("curves cross");
    assert!((f - 1.6).abs() <= 0.1, "crossing at {f}");
}

#[test]
fn root_infected_has_absorption_band_at_0_4_thz() {
    let spec = preset("root-infected").unwrap();
    let root = spec.layouts.iter().find(|l| l.region == RegionKind::Root).unwrap();
    let a = |f: f64| root.material.at(f).1;
    assert!(a(0.4) >= 1.2 * 0.5 * (a(0.3) + a(0.5)));
    let healthy = preset("root-healthy").unwrap();
    let hroot = healthy.layouts.iter().find(|l| l.region == RegionKind::Root).unwrap();
    for f in [0.2, 0.4, 0.8, 1.2, 1.6, 2.0, 2.5] {
        assert!(root.material.at(f).0 < hroot.material.at(f).0);
    }
}

#[test]
fn noiseless_pixels_recover_their_material() {
    let mut spec = noiseless("root-infected");
    small(&mut spec, 32);
    let lc = synthesize(&spec).unwrap();
    let regions = spec.region_map().unwrap();
    for p in [0, 16 * 32 + 10, 16 * 32 + 16, 16 * 32 + 21] {
        let layout = &spec.layouts[regions[p]];
        let c = extract_pixel(&lc, p, layout.thickness_mm);
        for (f, n, a) in c.iter_valid() {
            let (nt, at) = layout.material.at(f);
            assert!((n - nt).abs() < 1e-6, "pixel {p} f {f}: n {n} vs {nt}");
            assert!((a - at).abs() < 1e-4, "pixel {p} f {f}: alpha {a} vs {at}");
        }
    }
}

#[test]
fn noise_fields_are_independent() {
    use rand_distr::{Distribution, Normal};
    let normal = Normal::new(0.0, 1.0).unwrap();
    let n = 10_000;
    let draw = |p: usize| -> Vec<f64> {
        let mut rng = pixel_rng(7, p);
        (0..n).map(|_| normal.sample(&mut rng)).collect()
    };
    let a = draw(3);
    for q in [4, 35, 1023] {
        let b = draw(q);
        let corr = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>()
            / (a.iter().map(|x| x * x).sum::<f64>() * b.iter().map(|y| y * y).sum::<f64>()).sqrt();
        assert!(corr.abs() < 0.05, "corr {corr}");
    }
}

#[test]
fn gate_a2_healthy_brighter_than_infected() {
    let h = synthesize(&preset("leaf-healthy").unwrap()).unwrap();
    let i = synthesize(&preset("leaf-infected").unwrap()).unwrap();
    let pooled = h.cube.hconcat(&i.cube).unwrap();
    let nx = h.cube.nx();
    let tissue = (0..pooled.pixels()).filter(|&p| {
        let (x, y) = (p % pooled.nx(), p / pooled.nx());
        let class = if x < nx { h.labels[y * nx + x] } else { i.labels[y * nx + x - nx] };
        class != Class::Background
    });
    let gates = derive_gates(&pooled.mean_trace_of(tissue).unwrap()).unwrap();
    let hm = gate_image(&h.cube, gates.a2.clone(), GateStatistic::MeanAbs).unwrap();
    let im = gate_image(&i.cube, gates.a2.clone(), GateStatistic::MeanAbs).unwrap();
    let mh = hm.mean_where(|p| h.labels[p] == Class::Healthy).unwrap();
    let mi = im.mean_where(|p| i.labels[p] == Class::Infected).unwrap();
    assert!(mh > mi, "healthy {mh} vs infected {mi}");
    for m in [&hm, &im] {
        assert!(m.valid_values().all(|v| v >= 0.0));
    }
}

#[test]
fn amplitude_contrast_matches_closed_form_transmittance() {
    let dry = MaterialModel::constant(1.4, 10.0).unwrap();
    let wet = MaterialModel::constant(2.2, 40.0).unwrap();
    let spec = two_material_spec(dry.clone(), wet.clone(), 0.0);
    let lc = synthesize(&spec).unwrap();
    let map = frequency_slice(&lc.cube, 0.76, SliceKind::Amplitude).unwrap();
    let t = |m: &MaterialModel<f64>| {
        let (n, a) = m.at(0.76);
        4.0 * n / (n + 1.0f64).powi(2) * (-a * 0.05 / 2.0).exp()
    };
    let expected_sign = (t(&dry) - t(&wet)).signum();
    let (pd, pw) = (0usize, 4usize);
    let observed = (map.values[pd] - map.values[pw]).signum();
    assert_eq!(expected_sign, observed);
    let r = frequency_slice(&ScanCube::uniform(1, 1, 0.5, &lc.reference).unwrap(), 0.76, SliceKind::Amplitude)
        .unwrap();
    assert!((map.values[pd] / r.values[0] - t(&dry)).abs() < 1e-9);
    assert!((map.values[pw] / r.values[0] - t(&wet)).abs() < 1e-9);
    assert!(map.label.contains("THz"));
}

#[test]
fn slices_of_trivial_cubes() {
    let spec = preset("leaf-healthy").unwrap();
    let r = make_reference(&spec).unwrap();
    let same = ScanCube::uniform(3, 2, 0.5, &r).unwrap();
    for kind in [SliceKind::Amplitude, SliceKind::Phase] {
        let m = frequency_slice(&same, 0.76, kind).unwrap();
        assert!(m.values.iter().all(|v| *v == m.values[0]));
    }
    let zero = ScanCube::new(2, 2, 512, 0.5, 0.1, 0.0, vec![0.0; 4 * 512]).unwrap();
    let amp = frequency_slice(&zero, 0.76, SliceKind::Amplitude).unwrap();
    assert!(amp.values.iter().all(|v| *v == 0.0));
    let ph = frequency_slice(&zero, 0.76, SliceKind::Phase).unwrap();
    assert!(ph.valid.iter().all(|v| !v));
    assert!(frequency_slice(&zero, 0.0, SliceKind::Amplitude).is_err());
    assert!(frequency_slice(&zero, 100.0, SliceKind::Amplitude).is_err());
}

#[test]
fn phase_slice_follows_linear_shift_law() {
    let spec = preset("leaf-healthy").unwrap();
    let r = make_reference(&spec).unwrap();
    let shift = 7usize;
    let mut moved = vec![0.0; r.len()];
    moved[shift..].copy_from_slice(&r.samples()[..r.len() - shift]);
    let a = ScanCube::uniform(1, 1, 0.5, &r).unwrap();
    let b = ScanCube::uniform(1, 1, 0.5, &r.with_samples(moved).unwrap()).unwrap();
    let f = 0.76;
    let pa = frequency_slice(&a, f, SliceKind::Phase).unwrap();
    let pb = frequency_slice(&b, f, SliceKind::Phase).unwrap();
    let amp_a = frequency_slice(&a, f, SliceKind::Amplitude).unwrap();
    let amp_b = frequency_slice(&b, f, SliceKind::Amplitude).unwrap();
    let len = r.len().next_power_of_two();
    let df = 1.0 / (len as f64 * r.dt());
    let fk = (f / df).round() * df;
    let expected = std::f64::consts::TAU * fk * shift as f64 * r.dt();
    assert!((pb.values[0] - pa.values[0] - expected).abs() < 1e-9);
    assert!((amp_a.values[0] - amp_b.values[0]).abs() < 1e-9);
}

#[test]
fn constants_map_identity_and_plausibility_ranges() {
    let spec = preset("leaf-healthy").unwrap();
    let r = make_reference(&spec).unwrap();
    let same = ScanCube::uniform(2, 2, 0.5, &r).unwrap();
    let band = Band::default();
    let n = constants_map(&same, &r, &Thickness::Uniform(0.5), 1.0, Constant::RefractiveIndex, &band).unwrap();
    let a = constants_map(&same, &r, &Thickness::Uniform(0.5), 1.0, Constant::Absorption, &band).unwrap();
    assert!(n.values.iter().all(|v| *v == 1.0));
    assert!(a.values.iter().all(|v| *v == 0.0));

    let dry = MaterialModel::constant(1.4, 10.0).unwrap();
    let wet = MaterialModel::constant(2.2, 40.0).unwrap();
    let lc = synthesize(&two_material_spec(dry, wet, 2e-4)).unwrap();
    let n = constants_map(&lc.cube, &lc.reference, &Thickness::Uniform(0.5), 1.0, Constant::RefractiveIndex, &band)
        .unwrap();
    let md = n.mean_where(|p| lc.labels[p] == Class::Healthy).unwrap();
    let mw = n.mean_where(|p| lc.labels[p] == Class::Infected).unwrap();
    assert!((md - 1.4).abs() < 0.05 && (1.2..=1.6).contains(&md), "dry {md}");
    assert!((mw - 2.2).abs() < 0.05 && (2.1..=2.4).contains(&mw), "wet {mw}");

    let per_pixel = Thickness::PerPixel(vec![0.5; lc.cube.pixels()]);
    let n2 = constants_map(&lc.cube, &lc.reference, &per_pixel, 1.0, Constant::RefractiveIndex, &band).unwrap();
    assert_eq!(n2.values, n.values);
    assert!(constants_map(&lc.cube, &lc.reference, &Thickness::Uniform(0.0), 1.0, Constant::RefractiveIndex, &band)
        .is_err());
    let short = PulseTrace::new(r.dt(), 0.0, r.samples()[..100].to_vec()).unwrap();
    assert!(constants_map(&lc.cube, &short, &Thickness::Uniform(0.5), 1.0, Constant::RefractiveIndex, &band).is_err());
}

#[test]
fn root_infected_alpha_map_peaks_at_0_4_thz() {
    let lc = synthesize(&preset("root-infected").unwrap()).unwrap();
    let thickness: Vec<f64> = lc
        .regions
        .iter()
        .map(|r| if *r == RegionKind::Gall { 1.0 } else { 0.6 })
        .collect();
    let band = Band::default();
    let mean_alpha = |f: f64| {
        constants_map(&lc.cube, &lc.reference, &Thickness::PerPixel(thickness.clone()), f, Constant::Absorption, &band)
            .unwrap()
            .mean_where(|p| lc.labels[p] == Class::Infected)
            .unwrap()
    };
    let (lo, mid, hi) = (mean_alpha(0.35), mean_alpha(0.4), mean_alpha(0.45));
    assert!(mid > lo && mid > hi, "{lo} {mid} {hi}");
}

#[test]
fn maps_are_pixel_local() {
    let mut spec = preset("leaf-infected").unwrap();
    spec.nx = 6;
    spec.ny = 5;
    spec.layouts.iter_mut().for_each(|l| {
        if let Shape::Ellipse { cx, cy, rx, ry } = &mut l.shape {
            (*cx, *cy, *rx, *ry) = (2.5, 2.0, 2.5, 2.0);
        }
    });
    let lc = synthesize(&spec).unwrap();
    let order: Vec<usize> = (0..30).map(|i| (i * 7) % 30).collect();
    let permuted = lc.cube.permuted(&order).unwrap();
    let check = |f: &dyn Fn(&ScanCube<f64>) -> thzkit::ScalarMap| {
        let base = f(&lc.cube);
        let perm = f(&permuted);
        for (i, &p) in order.iter().enumerate() {
            assert_eq!(perm.values[i].to_bits(), base.values[p].to_bits());
        }
    };
    check(&|c| gate_image(c, 100..400, GateStatistic::Energy).unwrap());
    check(&|c| frequency_slice(c, 1.0, SliceKind::Phase).unwrap());
    check(&|c| {
        constants_map(c, &lc.reference, &Thickness::Uniform(0.3), 1.0, Constant::RefractiveIndex, &Band::default())
            .unwrap()
    });
}

#[test]
fn forward_model_matches_synthesized_pixels() {
    let spec = noiseless("leaf-healthy");
    let lc = synthesize(&spec).unwrap();
    let regions = spec.region_map().unwrap();
    let p = regions.iter().position(|&r| spec.layouts[r].region == RegionKind::Blade).unwrap();
    let layout = &spec.layouts[regions[p]];
    let r = forward_transform(&lc.reference, Some(spec.nt)).unwrap();
    let s = apply_forward_model(&r, &layout.material, &SampleGeometry::new(layout.thickness_mm).unwrap());
    let direct = thzkit::signal::inverse_transform(&s, spec.nt).unwrap();
    assert_eq!(direct.samples(), lc.cube.trace_at(p));
}
