use std::fs;
use std::path::Path;

use fmtrack::dataset::{
    associate, load_frame, load_sequence, subsample_pairs, write_tum_sequence, DatasetError, SynthScene, TumCamera,
    DEPTH_SCALE,
};
use fmtrack::features::FeatureProvider;
use fmtrack::geometry::{Pose, Twist};
use fmtrack::Frame64;
use image::{ImageBuffer, Luma, Rgb};
use nalgebra::Vector3;
use proptest::prelude::*;

fn write_index(dir: &Path, rgb: &[(f64, &str)], depth: &[(f64, &str)]) {
    let list = |v: &[(f64, &str)]| v.iter().map(|(t, p)| format!("{t:.6} {p}\n")).collect::<String>();
    fs::write(dir.join("rgb.txt"), list(rgb)).unwrap();
    fs::write(dir.join("depth.txt"), list(depth)).unwrap();
}

fn write_raw_frame(dir: &Path, name: &str, w: u32, h: u32, depth: impl Fn(u32, u32) -> u16) {
    fs::create_dir_all(dir.join("rgb")).unwrap();
    fs::create_dir_all(dir.join("depth")).unwrap();
    ImageBuffer::from_fn(w, h, |x, y| {
        let v = ((x * 7 + y * 3) % 256) as u8;
        Rgb([v, v, v])
    })
    .save(dir.join("rgb").join(name))
    .unwrap();
    ImageBuffer::from_fn(w, h, |x, y| Luma([depth(x, y)]))
        .save(dir.join("depth").join(name))
        .unwrap();
}

/// Sequence of `n` synthetic frames moving along x in 1 cm steps at 30 Hz.
fn synthetic_sequence(dir: &Path, n: usize) -> Vec<Pose<f64>> {
    let scene = SynthScene::textured_plane(TumCamera::Fr1.intrinsics());
    let step = Twist::new(Vector3::new(0.01, 0.0, 0.002), Vector3::new(0.0, 0.004, 0.0)).exp();
    let mut cams = vec![Pose::identity()];
    for i in 1..n {
        cams.push(cams[i - 1] * step);
    }
    let views = scene.render_sequence(&cams).unwrap();
    let t: Vec<f64> = (0..n).map(|i| 1000.0 + i as f64 / 30.0).collect();
    write_tum_sequence(dir, &views, &cams, &t).unwrap();
    cams
}

#[test]
fn raw_depth_scale_and_invalid_zero() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write_raw_frame(root, "0.png", 640, 480, |x, _| if x < 320 { 5000 } else { 0 });
    write_index(root, &[(1.0, "rgb/0.png")], &[(1.0, "depth/0.png")]);
    let seq = load_sequence(root, 0.02).unwrap();
    let k = TumCamera::Fr1.intrinsics();
    let full: Frame64 = load_frame(&seq.associated[0], &k, (640, 480), &FeatureProvider::Intensity, 1).unwrap();
    let d = full.depth().map(0);
    assert_eq!(d.value(0, 0), Some(5000.0 / DEPTH_SCALE));
    assert_eq!(d.value(319, 100), Some(1.0));
    assert_eq!(d.value(320, 100), None);
    assert_eq!(d.valid_count(), 320 * 480);
}

#[test]
fn resize_to_160_scales_intrinsics() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    // depth = 1 m + x mm so block means are known exactly
    write_raw_frame(root, "0.png", 640, 480, |x, _| 5000 + 5 * x as u16);
    write_index(root, &[(1.0, "rgb/0.png")], &[(1.0, "depth/0.png")]);
    let seq = load_sequence(root, 0.02).unwrap();
    let k = TumCamera::Fr1.intrinsics();
    let f: Frame64 = load_frame(&seq.associated[0], &k, (160, 120), &FeatureProvider::Intensity, 4).unwrap();
    let k0 = f.intrinsics(0);
    assert_eq!((k0.width, k0.height), (160, 120));
    assert!((k0.fx - 517.3 * 0.25).abs() < 1e-12);
    assert!((k0.fy - 516.5 * 0.25).abs() < 1e-12);
    // a reduced pixel centre backprojects onto the ray through the centre of its 4x4 block
    for (x, y) in [(0usize, 0usize), (159, 0), (0, 119), (159, 119)] {
        let (u, v) = (4.0 * x as f64 + 1.5, 4.0 * y as f64 + 1.5);
        let ray_full = ((u - k.cx) / k.fx, (v - k.cy) / k.fy);
        let ray_small = ((x as f64 - k0.cx) / k0.fx, (y as f64 - k0.cy) / k0.fy);
        assert!((ray_full.0 - ray_small.0).abs() < 1e-12 && (ray_full.1 - ray_small.1).abs() < 1e-12);
        let mean_mm = 1000.0 + (4 * x) as f64 + 1.5;
        assert!((f.depth().map(0).value(x, y).unwrap() - mean_mm / 1000.0).abs() < 1e-12);
    }
    assert!(matches!(
        load_frame::<f64>(&seq.associated[0], &k, (150, 120), &FeatureProvider::Intensity, 4),
        Err(DatasetError::Format(_))
    ));
}

#[test]
fn subsampled_pairs_compose_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let n = 12;
    let cams = synthetic_sequence(dir.path(), n);
    let seq = load_sequence(dir.path(), 0.02).unwrap();
    assert_eq!(seq.associated.len(), n);
    for kf in [1, 8] {
        let pairs = subsample_pairs(&seq, kf);
        assert_eq!(pairs.len(), n - kf);
        for p in &pairs {
            assert_eq!(p.b, p.a + kf);
            let oracle = cams[p.a].inverse() * cams[p.b];
            let e = (oracle.inverse() * p.gt_relative).log().to_vector().norm();
            // the written file keeps 9 significant decimals of the poses
            assert!(e < 1e-7, "kf {kf} pair {}: {e}", p.a);
        }
    }
    assert!(subsample_pairs(&seq, n).is_empty());
}

#[test]
fn synthetic_sequence_frames_load() {
    let dir = tempfile::tempdir().unwrap();
    synthetic_sequence(dir.path(), 2);
    let seq = load_sequence(dir.path(), 0.02).unwrap();
    let k = TumCamera::Fr1.intrinsics();
    for e in &seq.associated {
        let f: Frame64 = load_frame(e, &k, (160, 120), &FeatureProvider::IntensityGrad, 4).unwrap();
        assert_eq!(f.channels(), 3);
        assert_eq!(f.depth().map(0).valid_count(), 160 * 120);
        assert_eq!(f.depth().map(3).width(), 20);
    }
}

#[test]
fn offset_streams_do_not_associate() {
    let dir = tempfile::tempdir().unwrap();
    let rgb: Vec<(f64, &str)> = (0..5).map(|i| (i as f64, "rgb/x.png")).collect();
    let depth: Vec<(f64, &str)> = (0..5).map(|i| (i as f64 + 0.5, "depth/x.png")).collect();
    write_index(dir.path(), &rgb, &depth);
    assert!(matches!(
        load_sequence(dir.path(), 0.02),
        Err(DatasetError::EmptyAssociation { .. })
    ));
}

#[test]
fn missing_files_are_named() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_sequence(dir.path(), 0.02), Err(DatasetError::MissingFile(p)) if p.ends_with("rgb.txt")));
    write_raw_frame(dir.path(), "0.png", 640, 480, |_, _| 5000);
    write_index(dir.path(), &[(1.0, "rgb/0.png")], &[(1.0, "depth/gone.png")]);
    let seq = load_sequence(dir.path(), 0.02).unwrap();
    let err = load_frame::<f64>(
        &seq.associated[0],
        &TumCamera::Fr1.intrinsics(),
        (160, 120),
        &FeatureProvider::Intensity,
        4,
    )
    .unwrap_err();
    assert!(matches!(&err, DatasetError::MissingFile(p) if p.ends_with("depth/gone.png")));
    assert!(err.to_string().contains("gone.png"));
}

fn brute_force(a: &[f64], b: &[f64], max_dt: f64) -> Vec<(usize, usize)> {
    let mut ua = vec![false; a.len()];
    let mut ub = vec![false; b.len()];
    let mut out = Vec::new();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..a.len() {
            for j in 0..b.len() {
                let d = (a[i] - b[j]).abs();
                if ua[i] || ub[j] || d > max_dt {
                    continue;
                }
                if best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, i, j));
                }
            }
        }
        let Some((_, i, j)) = best else { break };
        ua[i] = true;
        ub[j] = true;
        out.push((i, j));
    }
    out.sort_unstable();
    out
}

fn sorted_times() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.001f64..0.05, 0..25).prop_map(|gaps| {
        let mut t = 0.0;
        gaps.into_iter()
            .map(|g| {
                t += g;
                t
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn association_matches_brute_force(a in sorted_times(), b in sorted_times(), max_dt in 0.001f64..0.04) {
        let got = associate(&a, &b, max_dt);
        prop_assert_eq!(&got, &brute_force(&a, &b, max_dt));
        for w in got.windows(2) {
            prop_assert!(w[0].0 < w[1].0);
        }
        let mut js: Vec<_> = got.iter().map(|p| p.1).collect();
        js.sort_unstable();
        js.dedup();
        prop_assert_eq!(js.len(), got.len());
    }

    #[test]
    fn association_is_a_fixed_point(a in sorted_times(), b in sorted_times(), max_dt in 0.001f64..0.04) {
        let got = associate(&a, &b, max_dt);
        let mut bj: Vec<_> = got.iter().map(|p| p.1).collect();
        bj.sort_unstable();
        // restricting both streams to the matched entries keeps exactly the matched pairs
        let a2: Vec<f64> = got.iter().map(|p| a[p.0]).collect();
        let b2: Vec<f64> = bj.iter().map(|&j| b[j]).collect();
        let again = associate(&a2, &b2, max_dt);
        let expect: Vec<(usize, usize)> = got
            .iter()
            .enumerate()
            .map(|(i, p)| (i, bj.binary_search(&p.1).unwrap()))
            .collect();
        prop_assert_eq!(again, expect);
    }
}
