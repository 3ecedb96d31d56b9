//! Pose accuracy metrics and trajectory bookkeeping.

use std::path::{Path, PathBuf};

use nalgebra::Vector3;

use crate::dataset::{parse_groundtruth, DatasetError};
use crate::features::Frame;
use crate::geometry::Pose;
use crate::scalar::Real;

pub const METRICS_HEADER: &str = "timestamp,epe_m,rpe_trans_m,rpe_rot_rad";

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("end-point error needs at least one point")]
    EmptyPointSet,
    #[error("trajectory timestamps must increase ({prev} then {next})")]
    NonMonotonic { prev: f64, next: f64 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMetrics {
    pub epe: f64,
    pub rpe_trans: f64,
    pub rpe_rot: f64,
}

/// Mean of `|T_gt v - T_est v|` over `points`.
pub fn epe(gt: &Pose<f64>, est: &Pose<f64>, points: &[Vector3<f64>]) -> Result<f64, EvalError> {
    if points.is_empty() {
        return Err(EvalError::EmptyPointSet);
    }
    let sum: f64 = points
        .iter()
        .map(|v| (gt.transform_point(v) - est.transform_point(v)).norm())
        .sum();
    Ok(sum / points.len() as f64)
}

/// `(|t(E)|, angle(E))` with `E = gt^-1 est`.
pub fn rpe(gt: &Pose<f64>, est: &Pose<f64>) -> (f64, f64) {
    let e = gt.inverse() * *est;
    let c = ((e.rotation.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    (e.translation.norm(), c.acos())
}

pub fn pair_metrics(gt: &Pose<f64>, est: &Pose<f64>, points: &[Vector3<f64>]) -> Result<PairMetrics, EvalError> {
    let (rpe_trans, rpe_rot) = rpe(gt, est);
    Ok(PairMetrics {
        epe: epe(gt, est, points)?,
        rpe_trans,
        rpe_rot,
    })
}

/// Backprojected valid depth pixels of a frame's finest level.
pub fn frame_points<T: Real>(frame: &Frame<T>) -> Vec<Vector3<f64>> {
    let depth = frame.depth().map(0);
    let k = frame.intrinsics(0);
    let (fx, fy, cx, cy) = (k.fx.as_f64(), k.fy.as_f64(), k.cx.as_f64(), k.cy.as_f64());
    let mut out = Vec::with_capacity(depth.valid_count());
    for y in 0..depth.height() {
        for x in 0..depth.width() {
            if let Some(d) = depth.value(x, y) {
                let d = d.as_f64();
                out.push(Vector3::new((x as f64 - cx) / fx * d, (y as f64 - cy) / fy * d, d));
            }
        }
    }
    out
}

/// Timestamped world-from-camera poses.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryRecord {
    entries: Vec<(f64, Pose<f64>)>,
}

impl TrajectoryRecord {
    pub fn new(entries: Vec<(f64, Pose<f64>)>) -> Result<Self, EvalError> {
        for w in entries.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(EvalError::NonMonotonic {
                    prev: w[0].0,
                    next: w[1].0,
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(f64, Pose<f64>)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_tum_string(&self) -> String {
        let mut s = String::from("# timestamp tx ty tz qx qy qz qw\n");
        for (t, p) in &self.entries {
            s += &format!("{t:.6} {}\n", p.to_tum());
        }
        s
    }

    pub fn parse(text: &str, source: &Path) -> Result<Self, EvalError> {
        let poses = parse_groundtruth(text, source)?;
        Self::new(poses.into_iter().map(|p| (p.timestamp, p.pose)).collect())
    }

    pub fn write(&self, path: &Path) -> Result<(), EvalError> {
        std::fs::write(path, self.to_tum_string()).map_err(|e| EvalError::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }

    pub fn read(path: &Path) -> Result<Self, EvalError> {
        let text = std::fs::read_to_string(path).map_err(|e| EvalError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse(&text, path)
    }
}

/// Chains relative poses `T_AB` into world poses, starting from identity at `start`.
pub fn accumulate(start: f64, pair_poses: &[(f64, Pose<f64>)]) -> Result<TrajectoryRecord, EvalError> {
    let mut world = Pose::identity();
    let mut entries = Vec::with_capacity(pair_poses.len() + 1);
    entries.push((start, world));
    for (t, rel) in pair_poses {
        world = world * *rel;
        entries.push((*t, world));
    }
    TrajectoryRecord::new(entries)
}

/// One CSV row; `None` marks a failed pair.
pub fn metrics_csv_row(timestamp: f64, m: Option<&PairMetrics>) -> String {
    match m {
        Some(m) => format!("{timestamp:.6},{:.9},{:.9},{:.9}", m.epe, m.rpe_trans, m.rpe_rot),
        None => format!("{timestamp:.6},NaN,NaN,NaN"),
    }
}

/// Parses a metrics CSV; NaN rows come back as `None`.
pub fn parse_metrics_csv(text: &str) -> Result<Vec<(f64, Option<PairMetrics>)>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == METRICS_HEADER => {}
        other => return Err(format!("unexpected header {other:?}")),
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let f: Vec<f64> = l
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| format!("line {}: {e}", i + 2))?;
            if f.len() != 4 {
                return Err(format!("line {}: expected 4 columns", i + 2));
            }
            let m = (!f[1].is_nan()).then_some(PairMetrics {
                epe: f[1],
                rpe_trans: f[2],
                rpe_rot: f[3],
            });
            Ok((f[0], m))
        })
        .collect()
}

pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}
