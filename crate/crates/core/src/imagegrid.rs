//! Dense multi-channel grids with validity masks.

use thiserror::Error;

use crate::geometry::{CameraIntrinsics, GeometryError};
use crate::scalar::Real;

/// Lower bound applied to every uncertainty map.
pub const SIGMA_FLOOR: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid {width}x{height} too small: {reason}")]
    TooSmall {
        width: usize,
        height: usize,
        reason: String,
    },
    #[error("data length {actual} does not match {width}x{height}x{channels}")]
    BadLength {
        width: usize,
        height: usize,
        channels: usize,
        actual: usize,
    },
    #[error("non-finite value at valid pixel ({x}, {y})")]
    NonFinite { x: usize, y: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Row-major `height x width x channels` field with a per-pixel mask.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMap<T: Real> {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<T>,
    valid: Vec<bool>,
}

impl<T: Real> DenseMap<T> {
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<T>,
        valid: Vec<bool>,
    ) -> Result<Self, GridError> {
        if channels == 0 || data.len() != width * height * channels || valid.len() != width * height
        {
            return Err(GridError::BadLength {
                width,
                height,
                channels,
                actual: data.len(),
            });
        }
        for (i, _) in valid.iter().enumerate().filter(|(_, v)| **v) {
            if data[i * channels..(i + 1) * channels]
                .iter()
                .any(|v| !v.is_finite())
            {
                return Err(GridError::NonFinite {
                    x: i % width,
                    y: i / width,
                });
            }
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
            valid,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: T) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
            valid: vec![true; width * height],
        }
    }

    /// Builds a single-channel map; `None` marks the pixel invalid.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Option<T>) -> Self {
        let mut data = Vec::with_capacity(width * height);
        let mut valid = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                match f(x, y) {
                    Some(v) if v.is_finite() => {
                        data.push(v);
                        valid.push(true);
                    }
                    _ => {
                        data.push(T::zero());
                        valid.push(false);
                    }
                }
            }
        }
        Self {
            width,
            height,
            channels: 1,
            data,
            valid,
        }
    }

    /// Stacks single-channel maps of identical geometry; validity is the intersection.
    pub fn stack(maps: &[&DenseMap<T>]) -> Result<Self, GridError> {
        let first = maps.first().ok_or(GridError::BadLength {
            width: 0,
            height: 0,
            channels: 0,
            actual: 0,
        })?;
        let (w, h) = (first.width, first.height);
        let channels: usize = maps.iter().map(|m| m.channels).sum();
        if maps.iter().any(|m| m.width != w || m.height != h) {
            return Err(GridError::BadLength {
                width: w,
                height: h,
                channels,
                actual: 0,
            });
        }
        let mut data = Vec::with_capacity(w * h * channels);
        let mut valid = vec![true; w * h];
        for i in 0..w * h {
            for m in maps {
                data.extend_from_slice(&m.data[i * m.channels..(i + 1) * m.channels]);
                valid[i] &= m.valid[i];
            }
        }
        Ok(Self {
            width: w,
            height: h,
            channels,
            data,
            valid,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn mask(&self) -> &[bool] {
        &self.valid
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid[y * self.width + x]
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> T {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[T] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    /// Value of a single-channel map at a valid pixel.
    #[inline]
    pub fn value(&self, x: usize, y: usize) -> Option<T> {
        self.is_valid(x, y).then(|| self.get(x, y, 0))
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    pub fn invalidate(&mut self, x: usize, y: usize) {
        self.valid[y * self.width + x] = false;
    }

    /// Applies `f` to every stored value; values that become non-finite are masked.
    pub fn map_values(&self, mut f: impl FnMut(T) -> T) -> Self {
        let mut out = self.clone();
        for v in out.data.iter_mut() {
            *v = f(*v);
        }
        for i in 0..out.valid.len() {
            if out.data[i * out.channels..(i + 1) * out.channels]
                .iter()
                .any(|v| !v.is_finite())
            {
                out.valid[i] = false;
            }
        }
        out
    }

    /// Keeps pixels for which `keep(value)` holds (single-channel semantics on channel 0).
    pub fn masked_by(&self, mut keep: impl FnMut(T) -> bool) -> Self {
        let mut out = self.clone();
        for i in 0..out.valid.len() {
            if out.valid[i] && !keep(out.data[i * out.channels]) {
                out.valid[i] = false;
            }
        }
        out
    }

    /// Extracts channel `c` as a single-channel map.
    pub fn channel(&self, c: usize) -> Self {
        let data = (0..self.width * self.height)
            .map(|i| self.data[i * self.channels + c])
            .collect();
        Self {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
            valid: self.valid.clone(),
        }
    }

    /// Bilinear lookup at continuous pixel coordinates, written into `out`.
    ///
    /// Returns false when `(u, v)` lies outside `[0, w-1] x [0, h-1]` or a texel
    /// carrying non-zero weight is invalid.
    pub fn sample_into(&self, u: T, v: T, out: &mut [T]) -> bool {
        let zero = T::zero();
        let max_u = T::lit((self.width - 1) as f64);
        let max_v = T::lit((self.height - 1) as f64);
        if !(u >= zero && v >= zero && u <= max_u && v <= max_v) {
            return false;
        }
        let fu = u.floor();
        let fv = v.floor();
        let mut x0 = fu.to_usize().unwrap_or(0);
        let mut y0 = fv.to_usize().unwrap_or(0);
        if x0 + 1 >= self.width {
            x0 = self.width.saturating_sub(2);
        }
        if y0 + 1 >= self.height {
            y0 = self.height.saturating_sub(2);
        }
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let ax = u - T::lit(x0 as f64);
        let ay = v - T::lit(y0 as f64);
        let one = T::one();
        let weights = [
            (x0, y0, (one - ax) * (one - ay)),
            (x1, y0, ax * (one - ay)),
            (x0, y1, (one - ax) * ay),
            (x1, y1, ax * ay),
        ];
        for o in out.iter_mut() {
            *o = zero;
        }
        for &(x, y, w) in &weights {
            if w == zero {
                continue;
            }
            if !self.is_valid(x, y) {
                return false;
            }
            for (o, val) in out.iter_mut().zip(self.pixel(x, y)) {
                *o += w * *val;
            }
        }
        true
    }

    pub fn sample_bilinear(&self, u: T, v: T) -> Option<Vec<T>> {
        let mut out = vec![T::zero(); self.channels];
        self.sample_into(u, v, &mut out).then_some(out)
    }

    /// Central-difference gradients along x and y, one-sided at the borders.
    pub fn gradient(&self) -> Result<(DenseMap<T>, DenseMap<T>), GridError> {
        if self.width < 3 || self.height < 3 {
            return Err(GridError::TooSmall {
                width: self.width,
                height: self.height,
                reason: "gradient needs at least 3x3".into(),
            });
        }
        let (w, h, c) = (self.width, self.height, self.channels);
        let mut dx = DenseMap::filled(w, h, c, T::zero());
        let mut dy = DenseMap::filled(w, h, c, T::zero());
        let half = T::lit(0.5);
        // (lo, hi, scale) stencil along one axis
        let stencil = |i: usize, n: usize| -> (usize, usize, T) {
            if i == 0 {
                (0, 1, T::one())
            } else if i == n - 1 {
                (n - 2, n - 1, T::one())
            } else {
                (i - 1, i + 1, half)
            }
        };
        for y in 0..h {
            for x in 0..w {
                let idx = y * w + x;
                let (xl, xh, sx) = stencil(x, w);
                let (yl, yh, sy) = stencil(y, h);
                let vx = self.is_valid(xl, y) && self.is_valid(xh, y) && self.is_valid(x, y);
                let vy = self.is_valid(x, yl) && self.is_valid(x, yh) && self.is_valid(x, y);
                dx.valid[idx] = vx;
                dy.valid[idx] = vy;
                for ch in 0..c {
                    if vx {
                        dx.data[idx * c + ch] = (self.get(xh, y, ch) - self.get(xl, y, ch)) * sx;
                    }
                    if vy {
                        dy.data[idx * c + ch] = (self.get(x, yh, ch) - self.get(x, yl, ch)) * sy;
                    }
                }
            }
        }
        Ok((dx, dy))
    }

    /// 2x2 block reduction; blocks without a valid pixel become invalid.
    pub fn downsample(&self, mode: Downsample) -> Self {
        self.downsample_by(2, mode)
    }

    /// `factor x factor` block reduction (odd trailing rows/columns are dropped).
    pub fn downsample_by(&self, factor: usize, mode: Downsample) -> Self {
        let (w, h, c) = (self.width / factor, self.height / factor, self.channels);
        let mut data = vec![T::zero(); w * h * c];
        let mut valid = vec![false; w * h];
        let mut scratch: Vec<T> = Vec::with_capacity(factor * factor);
        for y in 0..h {
            for x in 0..w {
                let idx = y * w + x;
                for ch in 0..c {
                    scratch.clear();
                    for by in 0..factor {
                        for bx in 0..factor {
                            let (fx, fy) = (x * factor + bx, y * factor + by);
                            if self.is_valid(fx, fy) {
                                scratch.push(self.get(fx, fy, ch));
                            }
                        }
                    }
                    if scratch.is_empty() {
                        continue;
                    }
                    valid[idx] = true;
                    data[idx * c + ch] = match mode {
                        Downsample::Mean => {
                            let sum = scratch.iter().fold(T::zero(), |a, b| a + *b);
                            sum / T::lit(scratch.len() as f64)
                        }
                        Downsample::Median => {
                            scratch.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
                            scratch[(scratch.len() - 1) / 2]
                        }
                    };
                }
            }
        }
        Self {
            width: w,
            height: h,
            channels: c,
            data,
            valid,
        }
    }
}

/// Block reduction rule used when building pyramids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Downsample {
    /// Mean of the valid pixels in the block.
    Mean,
    /// Lower median of the valid pixels; always one of the input values.
    Median,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PyramidLevel<T: Real> {
    pub map: DenseMap<T>,
    pub intrinsics: CameraIntrinsics<T>,
}

/// Resolution pyramid, level 0 being the finest.
#[derive(Debug, Clone, PartialEq)]
pub struct Pyramid<T: Real> {
    levels: Vec<PyramidLevel<T>>,
}

impl<T: Real> Pyramid<T> {
    pub fn build(
        map: DenseMap<T>,
        intrinsics: CameraIntrinsics<T>,
        levels: usize,
        mode: Downsample,
    ) -> Result<Self, GridError> {
        check_pyramid_size(map.width(), map.height(), levels)?;
        let mut out = Vec::with_capacity(levels);
        out.push(PyramidLevel { map, intrinsics });
        for _ in 1..levels {
            let prev = out.last().expect("non-empty");
            let map = prev.map.downsample(mode);
            let intrinsics = prev.intrinsics.downscaled(2)?;
            out.push(PyramidLevel { map, intrinsics });
        }
        Ok(Self { levels: out })
    }

    /// Assembles a pyramid from per-level maps; geometry must halve per level.
    pub fn from_levels(levels: Vec<PyramidLevel<T>>) -> Result<Self, GridError> {
        if levels.is_empty() {
            return Err(GridError::TooSmall {
                width: 0,
                height: 0,
                reason: "pyramid needs at least one level".into(),
            });
        }
        for pair in levels.windows(2) {
            let (a, b) = (&pair[0].map, &pair[1].map);
            if b.width() != a.width() / 2 || b.height() != a.height() / 2 {
                return Err(GridError::TooSmall {
                    width: b.width(),
                    height: b.height(),
                    reason: format!("level does not halve {}x{}", a.width(), a.height()),
                });
            }
        }
        Ok(Self { levels })
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn level(&self, i: usize) -> &PyramidLevel<T> {
        &self.levels[i]
    }

    pub fn map(&self, i: usize) -> &DenseMap<T> {
        &self.levels[i].map
    }

    pub fn intrinsics(&self, i: usize) -> &CameraIntrinsics<T> {
        &self.levels[i].intrinsics
    }

    pub fn levels(&self) -> &[PyramidLevel<T>] {
        &self.levels
    }

    /// Same level geometry (sizes and intrinsics).
    pub fn same_geometry(&self, other: &Pyramid<T>) -> bool {
        self.levels.len() == other.levels.len()
            && self.levels.iter().zip(&other.levels).all(|(a, b)| {
                a.map.width() == b.map.width()
                    && a.map.height() == b.map.height()
                    && a.intrinsics == b.intrinsics
            })
    }
}

pub fn check_pyramid_size(width: usize, height: usize, levels: usize) -> Result<(), GridError> {
    if levels == 0 {
        return Err(GridError::TooSmall {
            width,
            height,
            reason: "at least one level required".into(),
        });
    }
    let min = 1usize << (levels - 1);
    if width < min || height < min {
        return Err(GridError::TooSmall {
            width,
            height,
            reason: format!("{levels} levels need at least {min}x{min}"),
        });
    }
    Ok(())
}
