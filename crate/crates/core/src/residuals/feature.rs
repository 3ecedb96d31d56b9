use nalgebra::{SMatrix, Vector2, Vector3, Vector6};

use super::{NormalEquations, ResidualError};
use crate::features::Frame;
use crate::geometry::Pose;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FeatureOptions {
    /// Reject correspondences whose warped depth disagrees with frame A's depth
    /// by this much (meters). Off by default.
    pub depth_gate: Option<f64>,
}

/// Per-pixel constants of the template (frame B) at one level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemplatePixel<T: Real> {
    pub x: usize,
    pub y: usize,
    /// Backprojected point in B's camera.
    pub point: Vector3<T>,
    pub warp_jac: SMatrix<T, 2, 6>,
    pub sigma: T,
    pub grad_sigma: Vector2<T>,
    /// `sigma_B * grad(sigma_B) * warp_jac`.
    pub sigma_jac: Vector6<T>,
}

/// Everything about frame B that stays fixed while iterating on one level.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecomputedTemplate<T: Real> {
    level: usize,
    channels: usize,
    pixels: Vec<TemplatePixel<T>>,
    values: Vec<T>,
    grads: Vec<Vector2<T>>,
    /// `grad(F_B,c) * warp_jac` per pixel and channel.
    feat_jac: Vec<Vector6<T>>,
}

impl<T: Real> PrecomputedTemplate<T> {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn valid_count(&self) -> usize {
        self.pixels.len()
    }

    pub fn pixels(&self) -> &[TemplatePixel<T>] {
        &self.pixels
    }

    /// Feature vector `F_B` of the `i`-th valid pixel.
    pub fn values(&self, i: usize) -> &[T] {
        &self.values[i * self.channels..(i + 1) * self.channels]
    }

    /// Feature gradients (one `(d/dx, d/dy)` per channel) of the `i`-th valid pixel.
    pub fn gradients(&self, i: usize) -> &[Vector2<T>] {
        &self.grads[i * self.channels..(i + 1) * self.channels]
    }

    /// Drops pixels for which `keep` returns false.
    pub fn retain(&mut self, mut keep: impl FnMut(&TemplatePixel<T>) -> bool) {
        let c = self.channels;
        let mut out = Self {
            level: self.level,
            channels: c,
            pixels: Vec::with_capacity(self.pixels.len()),
            values: Vec::with_capacity(self.values.len()),
            grads: Vec::with_capacity(self.grads.len()),
            feat_jac: Vec::with_capacity(self.feat_jac.len()),
        };
        for (i, px) in self.pixels.iter().enumerate() {
            if keep(px) {
                out.pixels.push(*px);
                out.values.extend_from_slice(&self.values[i * c..(i + 1) * c]);
                out.grads.extend_from_slice(&self.grads[i * c..(i + 1) * c]);
                out.feat_jac.extend_from_slice(&self.feat_jac[i * c..(i + 1) * c]);
            }
        }
        *self = out;
    }
}

fn row_times<T: Real>(g: &Vector2<T>, j: &SMatrix<T, 2, 6>) -> Vector6<T> {
    (j.row(0) * g.x + j.row(1) * g.y).transpose()
}

/// Caches depth, warp Jacobians, features and their gradients for frame B.
pub fn precompute_template<T: Real>(
    frame_b: &Frame<T>,
    level: usize,
) -> Result<PrecomputedTemplate<T>, ResidualError> {
    if level >= frame_b.levels() {
        return Err(ResidualError::LevelOutOfRange {
            level,
            levels: frame_b.levels(),
        });
    }
    let k = frame_b.intrinsics(level);
    let depth = frame_b.depth().map(level);
    let feat = frame_b.features().map(level);
    let sigma = frame_b.uncertainty().map(level);
    let c = feat.channels();
    let (fdx, fdy) = match feat.gradient() {
        Ok(g) => g,
        Err(_) => {
            return Ok(PrecomputedTemplate {
                level,
                channels: c,
                pixels: Vec::new(),
                values: Vec::new(),
                grads: Vec::new(),
                feat_jac: Vec::new(),
            })
        }
    };
    let (sdx, sdy) = sigma.gradient().expect("same geometry as features");

    let mut tpl = PrecomputedTemplate {
        level,
        channels: c,
        pixels: Vec::new(),
        values: Vec::new(),
        grads: Vec::new(),
        feat_jac: Vec::new(),
    };
    for y in 0..depth.height() {
        for x in 0..depth.width() {
            let Some(d) = depth.value(x, y) else { continue };
            let ok = feat.is_valid(x, y)
                && sigma.is_valid(x, y)
                && fdx.is_valid(x, y)
                && fdy.is_valid(x, y)
                && sdx.is_valid(x, y)
                && sdy.is_valid(x, y);
            if !ok {
                continue;
            }
            let u = Vector2::new(T::lit(x as f64), T::lit(y as f64));
            let Ok(point) = k.backproject(&u, d) else { continue };
            let Ok(warp_jac) = k.warp_jacobian(&point) else { continue };
            let s = sigma.get(x, y, 0);
            let grad_sigma = Vector2::new(sdx.get(x, y, 0), sdy.get(x, y, 0));
            tpl.pixels.push(TemplatePixel {
                x,
                y,
                point,
                warp_jac,
                sigma: s,
                grad_sigma,
                sigma_jac: row_times(&grad_sigma, &warp_jac) * s,
            });
            for ch in 0..c {
                let g = Vector2::new(fdx.get(x, y, ch), fdy.get(x, y, ch));
                tpl.values.push(feat.get(x, y, ch));
                tpl.grads.push(g);
                tpl.feat_jac.push(row_times(&g, &warp_jac));
            }
        }
    }
    Ok(tpl)
}

/// Normal equations of the uncertainty-normalised feature residual
/// `(F_A[u_A] - F_B[u_B]) / sqrt(sigma_A[u_A]^2 + sigma_B[u_B]^2)` at `pose = T_AB`.
pub fn build_feature_system<T: Real>(
    frame_a: &Frame<T>,
    tpl: &PrecomputedTemplate<T>,
    pose: &Pose<T>,
    opts: &FeatureOptions,
) -> Result<NormalEquations<T>, ResidualError> {
    let level = tpl.level;
    if level >= frame_a.levels() {
        return Err(ResidualError::LevelOutOfRange {
            level,
            levels: frame_a.levels(),
        });
    }
    let f_a = frame_a.features().map(level);
    let s_a = frame_a.uncertainty().map(level);
    let d_a = frame_a.depth().map(level);
    let k = frame_a.intrinsics(level);
    let c = tpl.channels;
    if f_a.channels() != c {
        return Err(ResidualError::GeometryMismatch(format!(
            "frame A has {} channels, template {}",
            f_a.channels(),
            c
        )));
    }
    let gate = opts.depth_gate.map(T::lit);
    let one = T::one();

    let mut ne = NormalEquations::zero();
    let mut fa = vec![T::zero(); c];
    let mut sa = [T::zero()];
    let mut da = [T::zero()];
    for (i, px) in tpl.pixels.iter().enumerate() {
        let q = pose.transform_point(&px.point);
        let Ok(u) = k.project(&q) else { continue };
        if !f_a.sample_into(u.x, u.y, &mut fa) || !s_a.sample_into(u.x, u.y, &mut sa) {
            continue;
        }
        if let Some(gate) = gate {
            if !d_a.sample_into(u.x, u.y, &mut da) || (q.z - da[0]).abs() >= gate {
                continue;
            }
        }
        let sigma_f = (sa[0] * sa[0] + px.sigma * px.sigma).sqrt();
        let inv = one / sigma_f;
        let inv3 = inv * inv * inv;
        for ch in 0..c {
            let rbar = fa[ch] - tpl.values[i * c + ch];
            let jac = -(tpl.feat_jac[i * c + ch] * inv + px.sigma_jac * (rbar * inv3));
            ne.add_row(&jac, rbar * inv, one);
        }
        ne.valid_count += 1;
    }
    if ne.valid_count == 0 {
        return Err(ResidualError::NoValidPixels(level));
    }
    Ok(ne)
}
