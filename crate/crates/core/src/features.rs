//! Per-frame feature and uncertainty pyramids.
//!
//! Built-in providers derive features from the intensity image of each
//! pyramid level. The external provider reads tensors produced elsewhere from
//! a small little-endian binary format:
//!
//! ```text
//! "DFMT" | u32 version = 1 | u32 levels
//! per level: u32 height | u32 width | u32 channels
//!            f32 features[height][width][channels]
//!            f32 uncertainty[height][width]
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::geometry::CameraIntrinsics;
use crate::imagegrid::{DenseMap, Downsample, GridError, Pyramid, PyramidLevel, SIGMA_FLOOR};
use crate::scalar::Real;

/// Depth range kept at ingestion, meters.
pub const MIN_DEPTH: f64 = 0.5;
pub const MAX_DEPTH: f64 = 5.0;

pub const DFMT_MAGIC: &[u8; 4] = b"DFMT";
pub const DFMT_VERSION: u32 = 1;

/// Default channel count of externally supplied feature maps.
pub const DEFAULT_EXTERNAL_CHANNELS: usize = 8;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("bad feature file: {0}")]
    ExternalFormat(String),
    #[error("non-positive uncertainty {value} at level {level} pixel ({x}, {y})")]
    NonPositiveUncertainty {
        level: usize,
        x: usize,
        y: usize,
        value: f64,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Source of the feature and uncertainty maps.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum FeatureProvider {
    /// Grayscale intensity, unit uncertainty.
    #[default]
    Intensity,
    /// Intensity and its x/y gradients, unit uncertainty.
    IntensityGrad,
    /// Tensors read from a DFMT file.
    External(PathBuf),
}

impl FeatureProvider {
    /// Channel count, or `None` when it is read from the file header.
    pub fn channels(&self) -> Option<usize> {
        match self {
            FeatureProvider::Intensity => Some(1),
            FeatureProvider::IntensityGrad => Some(3),
            FeatureProvider::External(_) => None,
        }
    }
}

/// One RGB-D view and the maps the residuals consume.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame<T: Real> {
    pub timestamp: f64,
    intensity: DenseMap<T>,
    depth: Pyramid<T>,
    features: Pyramid<T>,
    uncertainty: Pyramid<T>,
}

impl<T: Real> Frame<T> {
    /// Assembles a frame from explicit per-level feature and uncertainty maps.
    ///
    /// Depth outside `[MIN_DEPTH, MAX_DEPTH]` is masked; uncertainties must be
    /// positive and are clamped from below at [`SIGMA_FLOOR`].
    pub fn from_maps(
        timestamp: f64,
        intensity: DenseMap<T>,
        depth: DenseMap<T>,
        intrinsics: CameraIntrinsics<T>,
        features: Vec<DenseMap<T>>,
        uncertainty: Vec<DenseMap<T>>,
    ) -> Result<Self, FeatureError> {
        let levels = features.len();
        check_congruent(&intensity, &depth, &intrinsics)?;
        if uncertainty.len() != levels {
            return Err(FeatureError::SizeMismatch(format!(
                "{} feature levels but {} uncertainty levels",
                levels,
                uncertainty.len()
            )));
        }
        let depth = Pyramid::build(clamp_depth(&depth), intrinsics, levels, Downsample::Median)?;
        let floor = T::lit(SIGMA_FLOOR);
        let mut f_levels = Vec::with_capacity(levels);
        let mut s_levels = Vec::with_capacity(levels);
        for (level, (f, s)) in features.into_iter().zip(uncertainty).enumerate() {
            let want = depth.map(level);
            if f.width() != want.width() || f.height() != want.height() {
                return Err(FeatureError::SizeMismatch(format!(
                    "feature level {level} is {}x{}, expected {}x{}",
                    f.width(),
                    f.height(),
                    want.width(),
                    want.height()
                )));
            }
            if s.width() != f.width() || s.height() != f.height() || s.channels() != 1 {
                return Err(FeatureError::SizeMismatch(format!(
                    "uncertainty level {level} must be {}x{}x1",
                    f.width(),
                    f.height()
                )));
            }
            for y in 0..s.height() {
                for x in 0..s.width() {
                    if s.is_valid(x, y) && !(s.get(x, y, 0) > T::zero()) {
                        return Err(FeatureError::NonPositiveUncertainty {
                            level,
                            x,
                            y,
                            value: s.get(x, y, 0).as_f64(),
                        });
                    }
                }
            }
            let s = s.map_values(|v| if v < floor { floor } else { v });
            let intrinsics = *depth.intrinsics(level);
            f_levels.push(PyramidLevel { map: f, intrinsics });
            s_levels.push(PyramidLevel { map: s, intrinsics });
        }
        Ok(Self {
            timestamp,
            intensity,
            depth,
            features: Pyramid::from_levels(f_levels)?,
            uncertainty: Pyramid::from_levels(s_levels)?,
        })
    }

    pub fn intensity(&self) -> &DenseMap<T> {
        &self.intensity
    }

    pub fn depth(&self) -> &Pyramid<T> {
        &self.depth
    }

    pub fn features(&self) -> &Pyramid<T> {
        &self.features
    }

    pub fn uncertainty(&self) -> &Pyramid<T> {
        &self.uncertainty
    }

    pub fn levels(&self) -> usize {
        self.depth.len()
    }

    pub fn channels(&self) -> usize {
        self.features.map(0).channels()
    }

    pub fn intrinsics(&self, level: usize) -> &CameraIntrinsics<T> {
        self.depth.intrinsics(level)
    }

    /// True when both frames have identical pyramid geometry.
    pub fn same_geometry(&self, other: &Frame<T>) -> bool {
        self.depth.same_geometry(&other.depth) && self.channels() == other.channels()
    }

    /// Copy of this frame with every uncertainty map multiplied by `factor`.
    pub fn with_scaled_uncertainty(&self, factor: T) -> Self {
        let mut out = self.clone();
        let levels = out
            .uncertainty
            .levels()
            .iter()
            .map(|l| PyramidLevel {
                map: l.map.map_values(|v| v * factor),
                intrinsics: l.intrinsics,
            })
            .collect();
        out.uncertainty = Pyramid::from_levels(levels).expect("geometry unchanged");
        out
    }
}

fn check_congruent<T: Real>(
    intensity: &DenseMap<T>,
    depth: &DenseMap<T>,
    k: &CameraIntrinsics<T>,
) -> Result<(), FeatureError> {
    if intensity.width() != depth.width() || intensity.height() != depth.height() {
        return Err(FeatureError::SizeMismatch(format!(
            "intensity {}x{} vs depth {}x{}",
            intensity.width(),
            intensity.height(),
            depth.width(),
            depth.height()
        )));
    }
    if k.width != depth.width() || k.height != depth.height() {
        return Err(FeatureError::SizeMismatch(format!(
            "intrinsics {}x{} vs images {}x{}",
            k.width,
            k.height,
            depth.width(),
            depth.height()
        )));
    }
    if intensity.channels() != 1 || depth.channels() != 1 {
        return Err(FeatureError::SizeMismatch(
            "intensity and depth must be single-channel".into(),
        ));
    }
    Ok(())
}

/// Masks depth outside the accepted range.
pub fn clamp_depth<T: Real>(depth: &DenseMap<T>) -> DenseMap<T> {
    let (lo, hi) = (T::lit(MIN_DEPTH), T::lit(MAX_DEPTH));
    depth.masked_by(|d| d >= lo && d <= hi)
}

/// Grayscale `0.299 R + 0.587 G + 0.114 B` scaled to `[0, 1]`.
pub fn grayscale_from_rgb8<T: Real>(width: usize, height: usize, rgb: &[u8]) -> Result<DenseMap<T>, FeatureError> {
    if rgb.len() != width * height * 3 {
        return Err(FeatureError::SizeMismatch(format!(
            "rgb buffer has {} bytes, expected {}",
            rgb.len(),
            width * height * 3
        )));
    }
    Ok(DenseMap::from_fn(width, height, |x, y| {
        let i = (y * width + x) * 3;
        let g = 0.299 * rgb[i] as f64 + 0.587 * rgb[i + 1] as f64 + 0.114 * rgb[i + 2] as f64;
        Some(T::lit(g / 255.0))
    }))
}

/// Builds a frame from a grayscale image and a metric depth map.
pub fn make_frame<T: Real>(
    timestamp: f64,
    intensity: DenseMap<T>,
    depth: DenseMap<T>,
    intrinsics: CameraIntrinsics<T>,
    provider: &FeatureProvider,
    levels: usize,
) -> Result<Frame<T>, FeatureError> {
    check_congruent(&intensity, &depth, &intrinsics)?;
    let (features, uncertainty) = match provider {
        FeatureProvider::Intensity | FeatureProvider::IntensityGrad => {
            let pyr = Pyramid::build(intensity.clone(), intrinsics, levels, Downsample::Mean)?;
            let mut features = Vec::with_capacity(levels);
            let mut sigma = Vec::with_capacity(levels);
            for lvl in pyr.levels() {
                let f = if *provider == FeatureProvider::Intensity {
                    lvl.map.clone()
                } else {
                    let (dx, dy) = lvl.map.gradient()?;
                    DenseMap::stack(&[&lvl.map, &dx, &dy])?
                };
                sigma.push(DenseMap::filled(f.width(), f.height(), 1, T::one()));
                features.push(f);
            }
            (features, sigma)
        }
        FeatureProvider::External(path) => {
            let file = read_feature_file(path)?;
            if file.levels.len() != levels {
                return Err(FeatureError::ExternalFormat(format!(
                    "{} has {} levels, {} requested",
                    path.display(),
                    file.levels.len(),
                    levels
                )));
            }
            file.into_maps()?
        }
    };
    Frame::from_maps(timestamp, intensity, depth, intrinsics, features, uncertainty)
}

/// In-memory form of a DFMT file.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFile {
    pub levels: Vec<FeatureLevel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureLevel {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    /// `height * width * channels`, row-major, channel fastest.
    pub features: Vec<f32>,
    /// `height * width`.
    pub uncertainty: Vec<f32>,
}

impl FeatureLevel {
    fn validate(&self, level: usize) -> Result<(), FeatureError> {
        if self.channels == 0 || self.width == 0 || self.height == 0 {
            return Err(FeatureError::ExternalFormat(format!(
                "level {level} has a zero dimension"
            )));
        }
        let n = self.width * self.height;
        if self.features.len() != n * self.channels || self.uncertainty.len() != n {
            return Err(FeatureError::ExternalFormat(format!(
                "level {level} data length does not match {}x{}x{}",
                self.height, self.width, self.channels
            )));
        }
        if let Some(i) = self.features.iter().position(|v| !v.is_finite()) {
            return Err(FeatureError::ExternalFormat(format!(
                "level {level} feature value {i} is not finite"
            )));
        }
        for (i, s) in self.uncertainty.iter().enumerate() {
            if !s.is_finite() {
                return Err(FeatureError::ExternalFormat(format!(
                    "level {level} uncertainty value {i} is not finite"
                )));
            }
            if *s <= 0.0 {
                return Err(FeatureError::NonPositiveUncertainty {
                    level,
                    x: i % self.width,
                    y: i / self.width,
                    value: *s as f64,
                });
            }
        }
        Ok(())
    }
}

impl FeatureFile {
    /// Exports the feature and uncertainty pyramids of a frame.
    pub fn from_frame<T: Real>(frame: &Frame<T>) -> Self {
        let levels = (0..frame.levels())
            .map(|l| {
                let f = frame.features().map(l);
                let s = frame.uncertainty().map(l);
                FeatureLevel {
                    height: f.height(),
                    width: f.width(),
                    channels: f.channels(),
                    features: f.data().iter().map(|v| v.as_f64() as f32).collect(),
                    uncertainty: s.data().iter().map(|v| v.as_f64() as f32).collect(),
                }
            })
            .collect();
        Self { levels }
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.levels.is_empty() {
            return Err(FeatureError::ExternalFormat("no levels".into()));
        }
        self.levels
            .iter()
            .enumerate()
            .try_for_each(|(i, l)| l.validate(i))
    }

    pub fn encode(&self) -> Result<Vec<u8>, FeatureError> {
        self.validate()?;
        let mut out = Vec::new();
        out.extend_from_slice(DFMT_MAGIC);
        out.extend_from_slice(&DFMT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.levels.len() as u32).to_le_bytes());
        for l in &self.levels {
            for d in [l.height, l.width, l.channels] {
                let d = u32::try_from(d)
                    .map_err(|_| FeatureError::ExternalFormat(format!("dimension {d} too large")))?;
                out.extend_from_slice(&d.to_le_bytes());
            }
            for v in l.features.iter().chain(&l.uncertainty) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, FeatureError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != DFMT_MAGIC {
            return Err(FeatureError::ExternalFormat("bad magic".into()));
        }
        let version = r.u32()?;
        if version != DFMT_VERSION {
            return Err(FeatureError::ExternalFormat(format!(
                "unsupported version {version}"
            )));
        }
        let count = r.u32()? as usize;
        if count == 0 {
            return Err(FeatureError::ExternalFormat("no levels".into()));
        }
        let mut levels = Vec::with_capacity(count.min(64));
        for _ in 0..count {
            let height = r.u32()? as usize;
            let width = r.u32()? as usize;
            let channels = r.u32()? as usize;
            let n = height
                .checked_mul(width)
                .and_then(|n| n.checked_mul(channels))
                .ok_or_else(|| FeatureError::ExternalFormat("dimensions overflow".into()))?;
            let features = r.f32s(n)?;
            let uncertainty = r.f32s(height * width)?;
            levels.push(FeatureLevel {
                height,
                width,
                channels,
                features,
                uncertainty,
            });
        }
        if r.pos != bytes.len() {
            return Err(FeatureError::ExternalFormat(format!(
                "{} trailing bytes",
                bytes.len() - r.pos
            )));
        }
        let file = Self { levels };
        file.validate()?;
        Ok(file)
    }

    /// Converts to per-level maps (all pixels valid).
    pub fn into_maps<T: Real>(self) -> Result<(Vec<DenseMap<T>>, Vec<DenseMap<T>>), FeatureError> {
        let mut f = Vec::with_capacity(self.levels.len());
        let mut s = Vec::with_capacity(self.levels.len());
        for l in self.levels {
            let n = l.width * l.height;
            f.push(DenseMap::new(
                l.width,
                l.height,
                l.channels,
                l.features.iter().map(|v| T::lit(*v as f64)).collect(),
                vec![true; n],
            )?);
            s.push(DenseMap::new(
                l.width,
                l.height,
                1,
                l.uncertainty.iter().map(|v| T::lit(*v as f64)).collect(),
                vec![true; n],
            )?);
        }
        Ok((f, s))
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FeatureError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|e| *e <= self.bytes.len())
            .ok_or_else(|| FeatureError::ExternalFormat("truncated file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, FeatureError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>, FeatureError> {
        let len = n
            .checked_mul(4)
            .ok_or_else(|| FeatureError::ExternalFormat("dimensions overflow".into()))?;
        Ok(self
            .take(len)?
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect())
    }
}

pub fn write_feature_file(path: &Path, file: &FeatureFile) -> Result<(), FeatureError> {
    let bytes = file.encode()?;
    fs::write(path, bytes).map_err(|source| FeatureError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_feature_file(path: &Path) -> Result<FeatureFile, FeatureError> {
    let bytes = fs::read(path).map_err(|source| FeatureError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    FeatureFile::decode(&bytes)
}
