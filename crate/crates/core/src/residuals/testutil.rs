use crate::features::Frame;
use crate::geometry::CameraIntrinsics;
use crate::imagegrid::DenseMap;

/// Single-level frame from per-pixel closures (`None` marks an invalid pixel).
pub fn frame(
    w: usize,
    h: usize,
    feature: impl Fn(usize, usize) -> Option<f64>,
    depth: impl Fn(usize, usize) -> Option<f64>,
    sigma: impl Fn(usize, usize) -> f64,
) -> Frame<f64> {
    let k = CameraIntrinsics::new(w as f64, w as f64, (w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0, w, h).unwrap();
    let f = DenseMap::from_fn(w, h, &feature);
    let d = DenseMap::from_fn(w, h, &depth);
    let s = DenseMap::from_fn(w, h, |x, y| Some(sigma(x, y)));
    Frame::from_maps(0.0, f.clone(), d, k, vec![f], vec![s]).unwrap()
}

pub fn smooth(x: usize, y: usize) -> f64 {
    let (x, y) = (x as f64, y as f64);
    0.5 + 0.2 * (0.31 * x + 0.1 * y).sin() + 0.15 * (0.07 * x - 0.23 * y + 1.0).cos()
}
