//! JSON report types.

use serde::Serialize;

use fmtrack::config::RunConfig;
use fmtrack::eval::PairMetrics;
use fmtrack::solver::TrackResult;
use fmtrack::Pose64;

#[derive(Serialize)]
pub struct PoseJson {
    /// `tx ty tz qx qy qz qw`
    pub tum: String,
    pub translation: [f64; 3],
    /// `[qx, qy, qz, qw]`
    pub quaternion: [f64; 4],
    /// Row-major 4x4 homogeneous matrix.
    pub matrix: [[f64; 4]; 4],
}

impl From<&Pose64> for PoseJson {
    fn from(p: &Pose64) -> Self {
        let q = p.quaternion();
        let t = p.translation;
        let mut m = [[0.0; 4]; 4];
        for r in 0..3 {
            for c in 0..3 {
                m[r][c] = p.rotation[(r, c)];
            }
            m[r][3] = t[r];
        }
        m[3][3] = 1.0;
        Self {
            tum: p.to_tum(),
            translation: [t.x, t.y, t.z],
            quaternion: [q.i, q.j, q.k, q.w],
            matrix: m,
        }
    }
}

#[derive(Serialize)]
pub struct LevelJson {
    pub level: usize,
    pub costs: Vec<f64>,
    pub valid_counts: Vec<usize>,
    pub step_norms: Vec<f64>,
    pub skipped: bool,
}

#[derive(Serialize)]
pub struct MetricsJson {
    pub epe_m: f64,
    pub rpe_trans_m: f64,
    pub rpe_rot_rad: f64,
}

impl From<&PairMetrics> for MetricsJson {
    fn from(m: &PairMetrics) -> Self {
        Self {
            epe_m: m.epe,
            rpe_trans_m: m.rpe_trans,
            rpe_rot_rad: m.rpe_rot,
        }
    }
}

#[derive(Serialize)]
pub struct ConfigJson {
    pub levels: usize,
    pub iterations_per_level: usize,
    pub damping: f64,
    pub w_g: f64,
    pub use_features: bool,
    pub use_icp: bool,
    pub initializer: String,
    pub early_stop_delta: Option<f64>,
    pub provider: String,
    pub features: Option<String>,
    pub camera: [f64; 4],
    pub image_size: [usize; 2],
    pub max_dt: f64,
}

impl From<&RunConfig> for ConfigJson {
    fn from(c: &RunConfig) -> Self {
        let s = &c.solver;
        Self {
            levels: s.levels,
            iterations_per_level: s.iterations_per_level,
            damping: s.damping,
            w_g: s.w_g,
            use_features: s.use_features,
            use_icp: s.use_icp,
            initializer: s.initializer.to_string(),
            early_stop_delta: s.early_stop_delta,
            provider: c.provider.to_string(),
            features: c.features.as_ref().map(|p| p.display().to_string()),
            camera: [c.camera.fx, c.camera.fy, c.camera.cx, c.camera.cy],
            image_size: [c.camera.width, c.camera.height],
            max_dt: c.max_dt,
        }
    }
}

#[derive(Serialize)]
pub struct TimingsJson {
    pub load_ms: f64,
    pub track_ms: f64,
}

#[derive(Serialize)]
pub struct TrackReport {
    /// Timestamps of frames A and B.
    pub timestamps: [f64; 2],
    pub pose: PoseJson,
    pub initial_pose: PoseJson,
    pub converged: bool,
    pub final_cost: Option<f64>,
    pub levels: Vec<LevelJson>,
    pub ground_truth: Option<PoseJson>,
    pub metrics: Option<MetricsJson>,
    pub config: ConfigJson,
    pub timings: TimingsJson,
}

pub fn level_traces(r: &TrackResult<f64>) -> Vec<LevelJson> {
    r.levels
        .iter()
        .map(|l| LevelJson {
            level: l.level,
            costs: l.costs.clone(),
            valid_counts: l.valid_counts.clone(),
            step_norms: l.step_norms.clone(),
            skipped: l.skipped,
        })
        .collect()
}
