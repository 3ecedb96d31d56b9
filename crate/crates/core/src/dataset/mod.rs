//! TUM RGB-D ingestion and the synthetic scene generator.

mod synth;
mod tum;

use std::path::PathBuf;

use crate::features::FeatureError;
use crate::geometry::{CameraIntrinsics, GeometryError};

pub use synth::{
    default_intrinsics_160, make_pair, view_to_frame, RenderedView, Surface, SynthPair, SynthScene, Texture, Wave,
};
pub use tum::{
    associate, interpolate_pose, load_frame, load_sequence, parse_groundtruth, parse_timed_list, subsample_pairs,
    write_tum_sequence, AssociatedFrame, FramePair, SequenceIndex, TimedPath, TimedPose, DEFAULT_MAX_DT,
    DEPTH_SCALE, TARGET_HEIGHT, TARGET_WIDTH,
};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("no rgb/depth pairs within {max_dt} s")]
    EmptyAssociation { max_dt: f64 },
    #[error("{path}: {message}")]
    Image { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Format(String),
    #[error("surface leaves the view: {0}")]
    OutOfFrustum(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Published calibrations of the TUM cameras at 640x480.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TumCamera {
    Fr1,
    Fr2,
}

impl TumCamera {
    pub fn intrinsics(self) -> CameraIntrinsics<f64> {
        let (fx, fy, cx, cy) = match self {
            TumCamera::Fr1 => (517.3, 516.5, 318.6, 255.3),
            TumCamera::Fr2 => (520.9, 521.0, 325.1, 249.7),
        };
        CameraIntrinsics {
            fx,
            fy,
            cx,
            cy,
            width: 640,
            height: 480,
        }
    }
}

impl std::str::FromStr for TumCamera {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "fr1" | "freiburg1" => Ok(TumCamera::Fr1),
            "fr2" | "freiburg2" => Ok(TumCamera::Fr2),
            other => Err(format!("unknown camera {other:?} (expected fr1 or fr2)")),
        }
    }
}
