#![allow(dead_code)]

use fmtrack::dataset::{default_intrinsics_160, make_pair, SynthPair, SynthScene};
use fmtrack::features::{FeatureProvider, Frame};
use fmtrack::geometry::{Pose, Twist};
use fmtrack::imagegrid::DenseMap;
use fmtrack::residuals::{precompute_template, IcpConfig, IcpCorrespondence, NormalEquations};
use nalgebra::{DMatrix, DVector, Vector3, Vector6};
use rand::Rng;

pub fn unit_vector(rng: &mut impl Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Random rotation of at most `max_deg` and translation of at most `max_t`.
pub fn random_motion(rng: &mut impl Rng, max_deg: f64, max_t: f64) -> Pose<f64> {
    let angle = rng.random_range(0.0..=max_deg).to_radians();
    let rot = Twist::new(Vector3::zeros(), unit_vector(rng) * angle).exp().rotation;
    Pose::new(rot, unit_vector(rng) * rng.random_range(0.0..=max_t))
}

pub fn plane_pair(motion: &Pose<f64>, provider: &FeatureProvider) -> SynthPair<f64> {
    let scene = SynthScene::textured_plane(default_intrinsics_160());
    make_pair(&scene, motion, provider, 4).expect("motion keeps the plane in view")
}

pub fn relief_pair(motion: &Pose<f64>) -> SynthPair<f64> {
    let scene = SynthScene::relief(default_intrinsics_160());
    make_pair(&scene, motion, &FeatureProvider::Intensity, 4).expect("motion keeps the surface in view")
}

/// Rebuilds `frame` with smooth non-constant uncertainty maps (parameterised by
/// `phase`) and, optionally, invalid depth on the one-pixel image border.
pub fn with_smooth_sigma(frame: &Frame<f64>, phase: f64, invalid_border: bool) -> Frame<f64> {
    let levels = frame.levels();
    let d0 = frame.depth().map(0);
    let (w, h) = (d0.width(), d0.height());
    let depth = DenseMap::from_fn(w, h, |x, y| {
        if invalid_border && (x == 0 || y == 0 || x == w - 1 || y == h - 1) {
            None
        } else {
            d0.value(x, y)
        }
    });
    let features: Vec<_> = (0..levels).map(|l| frame.features().map(l).clone()).collect();
    let sigma: Vec<_> = (0..levels)
        .map(|l| {
            let f = frame.features().map(l);
            let (lw, lh) = (f.width() as f64, f.height() as f64);
            DenseMap::from_fn(f.width(), f.height(), |x, y| {
                let (u, v) = (x as f64 / lw, y as f64 / lh);
                Some(0.6 + 0.25 * (5.0 * u + phase).sin() * (3.0 * v - 0.5 * phase).cos())
            })
        })
        .collect();
    Frame::from_maps(
        frame.timestamp,
        frame.intensity().clone(),
        depth,
        *frame.intrinsics(0),
        features,
        sigma,
    )
    .expect("same geometry")
}

/// Inverse-compositional cost `sum r^T r` with the template warp perturbed by `exp(delta)`
/// and frame A's samples held at `pose`.
pub fn ic_cost(frame_a: &Frame<f64>, frame_b: &Frame<f64>, pose: &Pose<f64>, level: usize, delta: &Vector6<f64>) -> f64 {
    let tpl = precompute_template(frame_b, level).unwrap();
    let k = frame_b.intrinsics(level);
    let (fa, sa) = (frame_a.features().map(level), frame_a.uncertainty().map(level));
    let (fb, sb) = (frame_b.features().map(level), frame_b.uncertainty().map(level));
    let perturb = Twist::from_vector(delta).exp();
    let mut cost = 0.0;
    for px in tpl.pixels() {
        let ua = k.project(&pose.transform_point(&px.point)).unwrap();
        let (Some(va), Some(siga)) = (fa.sample_bilinear(ua.x, ua.y), sa.sample_bilinear(ua.x, ua.y)) else {
            continue;
        };
        let ub = k.project(&perturb.transform_point(&px.point)).unwrap();
        let vb = fb.sample_bilinear(ub.x, ub.y).expect("interior template pixel");
        let sigb = sb.sample_bilinear(ub.x, ub.y).expect("interior template pixel");
        let sf = (siga[0] * siga[0] + sigb[0] * sigb[0]).sqrt();
        for c in 0..va.len() {
            let r = (va[c] - vb[c]) / sf;
            cost += r * r;
        }
    }
    cost
}

/// Central finite-difference gradient of [`ic_cost`] at `delta = 0`.
pub fn fd_gradient(frame_a: &Frame<f64>, frame_b: &Frame<f64>, pose: &Pose<f64>, level: usize, h: f64) -> Vector6<f64> {
    let mut g = Vector6::zeros();
    for k in 0..6 {
        let mut e = Vector6::zeros();
        e[k] = h;
        g[k] = (ic_cost(frame_a, frame_b, pose, level, &e) - ic_cost(frame_a, frame_b, pose, level, &-e)) / (2.0 * h);
    }
    g
}

fn bilinear(img: &[f64], w: usize, h: usize, u: f64, v: f64) -> Option<f64> {
    if !(u >= 0.0 && v >= 0.0 && u <= (w - 1) as f64 && v <= (h - 1) as f64) {
        return None;
    }
    let x0 = (u.floor() as usize).min(w - 2);
    let y0 = (v.floor() as usize).min(h - 2);
    let (ax, ay) = (u - x0 as f64, v - y0 as f64);
    let at = |x: usize, y: usize| img[y * w + x];
    Some(
        at(x0, y0) * (1.0 - ax) * (1.0 - ay)
            + at(x0 + 1, y0) * ax * (1.0 - ay)
            + at(x0, y0 + 1) * (1.0 - ax) * ay
            + at(x0 + 1, y0 + 1) * ax * ay,
    )
}

/// Textbook photometric inverse-compositional normal equations for unit
/// uncertainty on both images (so every residual is scaled by `1/sqrt(2)`).
pub fn naive_photometric_system(
    frame_a: &Frame<f64>,
    frame_b: &Frame<f64>,
    pose: &Pose<f64>,
    level: usize,
) -> NormalEquations<f64> {
    let ia = frame_a.features().map(level).data().to_vec();
    let ib = frame_b.features().map(level).data().to_vec();
    let depth = frame_b.depth().map(level);
    let k = frame_b.intrinsics(level);
    let (w, h) = (depth.width(), depth.height());
    let (fx, fy, cx, cy) = (k.fx, k.fy, k.cx, k.cy);
    let grad = |x: usize, y: usize| {
        let gx = if x == 0 {
            ib[y * w + 1] - ib[y * w]
        } else if x == w - 1 {
            ib[y * w + w - 1] - ib[y * w + w - 2]
        } else {
            0.5 * (ib[y * w + x + 1] - ib[y * w + x - 1])
        };
        let gy = if y == 0 {
            ib[w + x] - ib[x]
        } else if y == h - 1 {
            ib[(h - 1) * w + x] - ib[(h - 2) * w + x]
        } else {
            0.5 * (ib[(y + 1) * w + x] - ib[(y - 1) * w + x])
        };
        (gx, gy)
    };
    let s = 1.0 / 2f64.sqrt();
    let mut h_m = [[0.0f64; 6]; 6];
    let mut b = [0.0f64; 6];
    let mut cost = 0.0;
    let mut count = 0;
    for y in 0..h {
        for x in 0..w {
            let Some(d) = depth.value(x, y) else { continue };
            let (px, py, pz) = ((x as f64 - cx) / fx * d, (y as f64 - cy) / fy * d, d);
            let r = &pose.rotation;
            let t = &pose.translation;
            let qx = r[(0, 0)] * px + r[(0, 1)] * py + r[(0, 2)] * pz + t.x;
            let qy = r[(1, 0)] * px + r[(1, 1)] * py + r[(1, 2)] * pz + t.y;
            let qz = r[(2, 0)] * px + r[(2, 1)] * py + r[(2, 2)] * pz + t.z;
            if qz <= 1e-6 {
                continue;
            }
            let Some(va) = bilinear(&ia, w, h, fx * qx / qz + cx, fy * qy / qz + cy) else {
                continue;
            };
            let (gx, gy) = grad(x, y);
            let (iz, iz2) = (1.0 / pz, 1.0 / (pz * pz));
            let ju = [
                fx * iz,
                0.0,
                -fx * px * iz2,
                -fx * px * py * iz2,
                fx * (1.0 + px * px * iz2),
                -fx * py * iz,
            ];
            let jv = [
                0.0,
                fy * iz,
                -fy * py * iz2,
                -fy * (1.0 + py * py * iz2),
                fy * px * py * iz2,
                fy * px * iz,
            ];
            let res = (va - ib[y * w + x]) * s;
            let mut j = [0.0; 6];
            for i in 0..6 {
                j[i] = -(gx * ju[i] + gy * jv[i]) * s;
            }
            for i in 0..6 {
                for l in 0..6 {
                    h_m[i][l] += j[i] * j[l];
                }
                b[i] += j[i] * res;
            }
            cost += res * res;
            count += 1;
        }
    }
    let mut ne = NormalEquations::zero();
    for i in 0..6 {
        for l in 0..6 {
            ne.h[(i, l)] = h_m[i][l];
        }
        ne.b[i] = b[i];
    }
    ne.cost = cost;
    ne.valid_count = count;
    ne
}

/// Undamped Gauss-Newton step of the stacked weighted ICP rows, by SVD.
pub fn dense_icp_step(corr: &[IcpCorrespondence<f64>]) -> Vector6<f64> {
    let n = corr.len();
    let mut jm = DMatrix::zeros(n, 6);
    let mut rv = DVector::zeros(n);
    for (i, c) in corr.iter().enumerate() {
        let s = c.weight.sqrt();
        for k in 0..6 {
            jm[(i, k)] = s * c.jacobian[k];
        }
        rv[i] = s * c.residual;
    }
    let x = -jm.svd(true, true).solve(&rv, 1e-14).unwrap();
    Vector6::from_iterator(x.iter().copied())
}

pub fn default_icp() -> IcpConfig {
    IcpConfig::default()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
