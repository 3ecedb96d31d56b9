//! Ray-cast synthetic RGB-D views of a textured height field.
//!
//! The surface is `Z = h(X, Y)` in world coordinates, with the texture a
//! function of `(X, Y)` only, so every view sees exactly the same albedo.
//! Frame A of a pair sits at the world origin.

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::DatasetError;
use crate::features::{make_frame, FeatureProvider, Frame, MAX_DEPTH, MIN_DEPTH};
use crate::geometry::{CameraIntrinsics, Pose};
use crate::imagegrid::DenseMap;
use crate::scalar::Real;

/// `amplitude * sin(kx X + ky Y + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wave {
    pub amplitude: f64,
    pub kx: f64,
    pub ky: f64,
    pub phase: f64,
}

impl Wave {
    /// Wave with the given period (meters) travelling along `direction` (radians).
    pub fn with_period(amplitude: f64, period: f64, direction: f64, phase: f64) -> Self {
        let k = std::f64::consts::TAU / period;
        Self {
            amplitude,
            kx: k * direction.cos(),
            ky: k * direction.sin(),
            phase,
        }
    }

    #[inline]
    fn eval(&self, x: f64, y: f64) -> f64 {
        self.amplitude * (self.kx * x + self.ky * y + self.phase).sin()
    }

    #[inline]
    fn grad(&self, x: f64, y: f64) -> (f64, f64) {
        let c = self.amplitude * (self.kx * x + self.ky * y + self.phase).cos();
        (c * self.kx, c * self.ky)
    }
}

/// `Z = base_depth + slope_x X + slope_y Y + sum(bumps)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    pub base_depth: f64,
    pub slope_x: f64,
    pub slope_y: f64,
    pub bumps: Vec<Wave>,
}

impl Surface {
    pub fn height(&self, x: f64, y: f64) -> f64 {
        self.base_depth
            + self.slope_x * x
            + self.slope_y * y
            + self.bumps.iter().map(|w| w.eval(x, y)).sum::<f64>()
    }

    fn height_grad(&self, x: f64, y: f64) -> (f64, f64) {
        self.bumps.iter().fold((self.slope_x, self.slope_y), |(gx, gy), w| {
            let (a, b) = w.grad(x, y);
            (gx + a, gy + b)
        })
    }

    pub fn is_plane(&self) -> bool {
        self.bumps.iter().all(|w| w.amplitude == 0.0)
    }

    /// Ray parameter `s > 0` with `origin + s * dir` on the surface.
    pub fn intersect(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<f64> {
        let residual = |s: f64| origin.z + s * dir.z - self.height(origin.x + s * dir.x, origin.y + s * dir.y);
        // start from the tangent plane at the origin footprint
        let denom = dir.z - self.slope_x * dir.x - self.slope_y * dir.y;
        if denom.abs() < 1e-12 {
            return None;
        }
        let mut s = (self.base_depth + self.slope_x * origin.x + self.slope_y * origin.y - origin.z) / denom;
        if self.is_plane() {
            return (s > 0.0).then_some(s);
        }
        for _ in 0..100 {
            let p = origin + dir * s;
            let (gx, gy) = self.height_grad(p.x, p.y);
            let d = dir.z - gx * dir.x - gy * dir.y;
            if d.abs() < 1e-12 {
                return None;
            }
            let step = residual(s) / d;
            s -= step;
            if step.abs() < 1e-14 * s.abs().max(1.0) {
                return (s > 0.0).then_some(s);
            }
        }
        None
    }
}

/// `offset + sum(waves)`, clamped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Texture {
    pub offset: f64,
    pub waves: Vec<Wave>,
}

impl Texture {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        (self.offset + self.waves.iter().map(|w| w.eval(x, y)).sum::<f64>()).clamp(0.0, 1.0)
    }

    /// Three sinusoids with incommensurate periods.
    pub fn three_sinusoids() -> Self {
        Self::three_sinusoids_scaled(1.0)
    }

    /// [`Texture::three_sinusoids`] with every period multiplied by `scale`.
    pub fn three_sinusoids_scaled(scale: f64) -> Self {
        Self {
            offset: 0.5,
            waves: vec![
                Wave::with_period(0.2, 1.13 * scale, 0.3, 0.1),
                Wave::with_period(0.15, 0.61 * scale, 2.1, 1.3),
                Wave::with_period(0.08, 0.29 * scale, 4.0, 2.0),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthScene {
    pub surface: Surface,
    pub texture: Texture,
    pub intrinsics: CameraIntrinsics<f64>,
    /// Standard deviation of additive depth noise, meters.
    pub noise: f64,
    pub seed: u64,
}

/// One rendered view.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedView {
    pub intensity: DenseMap<f64>,
    pub depth: DenseMap<f64>,
}

/// TUM fr1 calibration scaled to 160x120.
pub fn default_intrinsics_160() -> CameraIntrinsics<f64> {
    super::TumCamera::Fr1
        .intrinsics()
        .downscaled(4)
        .expect("valid calibration")
}

impl SynthScene {
    /// Slightly tilted textured plane at 1.5 m.
    pub fn textured_plane(intrinsics: CameraIntrinsics<f64>) -> Self {
        Self {
            surface: Surface {
                base_depth: 1.5,
                slope_x: 0.08,
                slope_y: -0.05,
                bumps: Vec::new(),
            },
            texture: Texture::three_sinusoids(),
            intrinsics,
            noise: 0.0,
            seed: 0,
        }
    }

    /// Textured surface with relief, suitable for geometric (ICP) alignment.
    pub fn relief(intrinsics: CameraIntrinsics<f64>) -> Self {
        Self {
            surface: Surface {
                base_depth: 1.5,
                slope_x: 0.05,
                slope_y: 0.03,
                bumps: vec![
                    Wave::with_period(0.06, 0.71, 0.4, 0.0),
                    Wave::with_period(0.04, 0.53, 1.9, 0.7),
                    Wave::with_period(0.03, 0.41, 3.3, 1.1),
                ],
            },
            ..Self::textured_plane(intrinsics)
        }
    }

    /// Depth along the optical axis of pixel `(x, y)` for a camera at `camera` (world-from-camera).
    pub fn ray_depth(&self, camera: &Pose<f64>, x: f64, y: f64) -> Option<f64> {
        let k = &self.intrinsics;
        let dir_c = Vector3::new((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
        self.surface
            .intersect(&camera.translation, &(camera.rotation * dir_c))
    }

    /// Renders the view of a camera with world-from-camera pose `camera`.
    pub fn render(&self, camera: &Pose<f64>, view_index: u64) -> Result<RenderedView, DatasetError> {
        let k = self.intrinsics;
        let (w, h) = (k.width, k.height);
        let mut depth = vec![0.0; w * h];
        let mut intensity = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                let s = self.ray_depth(camera, x as f64, y as f64).ok_or_else(|| {
                    DatasetError::OutOfFrustum(format!("ray through pixel ({x}, {y}) misses the surface"))
                })?;
                if !(MIN_DEPTH..=MAX_DEPTH).contains(&s) {
                    return Err(DatasetError::OutOfFrustum(format!(
                        "depth {s:.3} m at pixel ({x}, {y}) outside [{MIN_DEPTH}, {MAX_DEPTH}]"
                    )));
                }
                let dir_c = Vector3::new((x as f64 - k.cx) / k.fx, (y as f64 - k.cy) / k.fy, 1.0);
                let world = camera.transform_point(&(dir_c * s));
                depth[y * w + x] = s;
                intensity[y * w + x] = self.texture.eval(world.x, world.y);
            }
        }
        if self.noise > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(view_index));
            let normal = Normal::new(0.0, self.noise)
                .map_err(|e| DatasetError::Format(format!("noise std: {e}")))?;
            for d in depth.iter_mut() {
                *d += normal.sample(&mut rng);
            }
        }
        let mk = |data: Vec<f64>| {
            DenseMap::new(w, h, 1, data, vec![true; w * h]).expect("finite render")
        };
        Ok(RenderedView {
            intensity: mk(intensity),
            depth: mk(depth),
        })
    }

    /// Renders the views of a sequence of world-from-camera poses.
    pub fn render_sequence(&self, cameras: &[Pose<f64>]) -> Result<Vec<RenderedView>, DatasetError> {
        cameras
            .iter()
            .enumerate()
            .map(|(i, c)| self.render(c, i as u64))
            .collect()
    }
}

/// Two frames of a synthetic pair and the true `T_AB`.
#[derive(Debug, Clone)]
pub struct SynthPair<T: Real> {
    pub frame_a: Frame<T>,
    pub frame_b: Frame<T>,
    pub motion: Pose<f64>,
}

pub fn view_to_frame<T: Real>(
    view: &RenderedView,
    intrinsics: &CameraIntrinsics<f64>,
    timestamp: f64,
    provider: &FeatureProvider,
    levels: usize,
) -> Result<Frame<T>, DatasetError> {
    let k = CameraIntrinsics::new(
        T::lit(intrinsics.fx),
        T::lit(intrinsics.fy),
        T::lit(intrinsics.cx),
        T::lit(intrinsics.cy),
        intrinsics.width,
        intrinsics.height,
    )?;
    let cast = |m: &DenseMap<f64>| {
        DenseMap::new(
            m.width(),
            m.height(),
            1,
            m.data().iter().map(|v| T::lit(*v)).collect(),
            m.mask().to_vec(),
        )
        .expect("same shape")
    };
    Ok(make_frame(timestamp, cast(&view.intensity), cast(&view.depth), k, provider, levels)?)
}

/// Renders frame A at the origin and frame B at `motion = T_AB`.
pub fn make_pair<T: Real>(
    scene: &SynthScene,
    motion: &Pose<f64>,
    provider: &FeatureProvider,
    levels: usize,
) -> Result<SynthPair<T>, DatasetError> {
    let a = scene.render(&Pose::identity(), 0)?;
    let b = scene.render(motion, 1)?;
    Ok(SynthPair {
        frame_a: view_to_frame(&a, &scene.intrinsics, 0.0, provider, levels)?,
        frame_b: view_to_frame(&b, &scene.intrinsics, 1.0, provider, levels)?,
        motion: *motion,
    })
}
