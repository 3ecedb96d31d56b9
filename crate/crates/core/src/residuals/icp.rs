use nalgebra::{Vector2, Vector3, Vector6};

use super::{NormalEquations, ResidualError};
use crate::features::Frame;
use crate::geometry::{CameraIntrinsics, Pose};
use crate::imagegrid::DenseMap;
use crate::scalar::Real;

/// Per-point depth noise model used as the ICP weight `1 / sigma^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IcpNoise {
    /// `sigma_z = 0.0012 + 0.0019 (z - 0.4)^2` meters.
    #[default]
    StructuredLight,
    /// Unit weight.
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcpConfig {
    pub max_distance: f64,
    pub max_normal_angle_deg: f64,
    pub noise: IcpNoise,
}

impl Default for IcpConfig {
    fn default() -> Self {
        Self {
            max_distance: 0.2,
            max_normal_angle_deg: 45.0,
            noise: IcpNoise::StructuredLight,
        }
    }
}

pub fn structured_light_sigma<T: Real>(z: T) -> T {
    let d = z - T::lit(0.4);
    T::lit(0.0012) + T::lit(0.0019) * d * d
}

/// Backprojected points and unit normals of a depth map.
#[derive(Debug, Clone)]
pub struct VertexNormalMap<T: Real> {
    pub width: usize,
    pub height: usize,
    pub points: Vec<Option<Vector3<T>>>,
    pub normals: Vec<Option<Vector3<T>>>,
}

impl<T: Real> VertexNormalMap<T> {
    #[inline]
    fn at(&self, x: usize, y: usize) -> Option<(Vector3<T>, Vector3<T>)> {
        let i = y * self.width + x;
        Some((self.points[i]?, self.normals[i]?))
    }
}

/// Normals from the cross product of horizontal and vertical neighbor differences,
/// oriented towards the camera. Border pixels and pixels with an invalid
/// neighbor have no normal.
pub fn vertex_normal_map<T: Real>(depth: &DenseMap<T>, k: &CameraIntrinsics<T>) -> VertexNormalMap<T> {
    let (w, h) = (depth.width(), depth.height());
    let points: Vec<Option<Vector3<T>>> = (0..w * h)
        .map(|i| {
            let (x, y) = (i % w, i / w);
            let d = depth.value(x, y)?;
            k.backproject(&Vector2::new(T::lit(x as f64), T::lit(y as f64)), d).ok()
        })
        .collect();
    let mut normals = vec![None; w * h];
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            let p = |xx: usize, yy: usize| points[yy * w + xx];
            let (Some(c), Some(l), Some(r), Some(u), Some(d)) =
                (p(x, y), p(x - 1, y), p(x + 1, y), p(x, y - 1), p(x, y + 1))
            else {
                continue;
            };
            let n = (r - l).cross(&(d - u));
            let norm = n.norm();
            if !(norm > T::lit(1e-12)) {
                continue;
            }
            let mut n = n / norm;
            if n.dot(&c) > T::zero() {
                n = -n;
            }
            normals[y * w + x] = Some(n);
        }
    }
    VertexNormalMap {
        width: w,
        height: h,
        points,
        normals,
    }
}

/// One accepted point-to-plane correspondence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcpCorrespondence<T: Real> {
    /// Pixel in frame B.
    pub x: usize,
    pub y: usize,
    /// `n_A . (T p_B - p_A)`, meters.
    pub residual: T,
    /// Inverse variance.
    pub weight: T,
    pub jacobian: Vector6<T>,
}

/// Projective data association between B's points (moved by `pose = T_AB`) and A's pixels.
pub fn icp_correspondences<T: Real>(
    frame_a: &Frame<T>,
    frame_b: &Frame<T>,
    pose: &Pose<T>,
    level: usize,
    cfg: &IcpConfig,
) -> Result<Vec<IcpCorrespondence<T>>, ResidualError> {
    for f in [frame_a, frame_b] {
        if level >= f.levels() {
            return Err(ResidualError::LevelOutOfRange {
                level,
                levels: f.levels(),
            });
        }
    }
    let ka = frame_a.intrinsics(level);
    let kb = frame_b.intrinsics(level);
    if ka != kb {
        return Err(ResidualError::GeometryMismatch(format!(
            "level {level} intrinsics differ"
        )));
    }
    let va = vertex_normal_map(frame_a.depth().map(level), ka);
    let vb = vertex_normal_map(frame_b.depth().map(level), kb);
    let max_d2 = T::lit(cfg.max_distance * cfg.max_distance);
    let min_cos = T::lit(cfg.max_normal_angle_deg.to_radians().cos());
    let half = T::lit(0.5);
    let r = pose.rotation;

    let mut out = Vec::new();
    for y in 0..vb.height {
        for x in 0..vb.width {
            let Some((p_b, n_b)) = vb.at(x, y) else { continue };
            let q = pose.transform_point(&p_b);
            let Ok(u) = ka.project(&q) else { continue };
            let (ux, uy) = ((u.x + half).floor(), (u.y + half).floor());
            if ux < T::zero() || uy < T::zero() {
                continue;
            }
            let (ax, ay) = (
                ux.to_usize().unwrap_or(usize::MAX),
                uy.to_usize().unwrap_or(usize::MAX),
            );
            if ax >= va.width || ay >= va.height {
                continue;
            }
            let Some((p_a, n_a)) = va.at(ax, ay) else { continue };
            let diff = q - p_a;
            if diff.norm_squared() > max_d2 {
                continue;
            }
            if n_a.dot(&(r * n_b)).abs() < min_cos {
                continue;
            }
            let weight = match cfg.noise {
                IcpNoise::StructuredLight => {
                    let s = structured_light_sigma(p_a.z);
                    T::one() / (s * s)
                }
                IcpNoise::Constant => T::one(),
            };
            // d/d(delta) of n_A . (T exp(-delta) p_B - p_A)
            let m = r.transpose() * n_a;
            let jr = m.cross(&p_b);
            out.push(IcpCorrespondence {
                x,
                y,
                residual: n_a.dot(&diff),
                weight,
                jacobian: Vector6::new(-m.x, -m.y, -m.z, jr.x, jr.y, jr.z),
            });
        }
    }
    Ok(out)
}

/// Point-to-plane ICP normal equations, weighted by the noise model.
pub fn build_icp_system<T: Real>(
    frame_a: &Frame<T>,
    frame_b: &Frame<T>,
    pose: &Pose<T>,
    level: usize,
    cfg: &IcpConfig,
) -> Result<NormalEquations<T>, ResidualError> {
    let corr = icp_correspondences(frame_a, frame_b, pose, level, cfg)?;
    if corr.is_empty() {
        return Err(ResidualError::NoValidPixels(level));
    }
    let mut ne = NormalEquations::zero();
    for c in &corr {
        ne.add_row(&c.jacobian, c.residual, c.weight);
    }
    ne.valid_count = corr.len();
    Ok(ne)
}
