//! Coarse-to-fine inverse-compositional Gauss-Newton tracking.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::features::Frame;
use crate::geometry::{Pose, Twist};
use crate::residuals::{
    build_feature_system, build_icp_system, precompute_template, FeatureOptions, IcpConfig,
    NormalEquations, PrecomputedTemplate, ResidualError,
};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrackError {
    #[error("singular system at level {level}, iteration {iteration}")]
    SingularSystem { level: usize, iteration: usize },
    #[error("no level had valid pixels")]
    NoValidPixels,
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("external initial pose required but not supplied")]
    MissingExternalPose,
    #[error("initial pose is not a valid rigid transform")]
    InvalidPose,
    #[error(transparent)]
    Residual(#[from] ResidualError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Initializer {
    #[default]
    Identity,
    /// Reuse the previous frame-to-frame motion.
    ConstantVelocity,
    /// Pose supplied by an external predictor.
    External,
}

impl FromStr for Initializer {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "identity" => Ok(Self::Identity),
            "constvel" | "constant_velocity" | "constantvelocity" => Ok(Self::ConstantVelocity),
            "external" => Ok(Self::External),
            other => Err(format!("unknown initializer {other:?}")),
        }
    }
}

impl fmt::Display for Initializer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Identity => "identity",
            Self::ConstantVelocity => "constvel",
            Self::External => "external",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub levels: usize,
    pub iterations_per_level: usize,
    /// Levenberg-style factor on `diag(H)`.
    pub damping: f64,
    /// Weight of the ICP system; zero disables it even when `use_icp` is set.
    pub w_g: f64,
    pub use_features: bool,
    pub use_icp: bool,
    pub initializer: Initializer,
    /// Stop a level once the step norm drops below this.
    pub early_stop_delta: Option<f64>,
    /// Final-step norm below which the result is flagged converged.
    pub convergence_tol: f64,
    pub feature: FeatureOptions,
    pub icp: IcpConfig,
}

/// Default ICP weight when the ICP residual is enabled.
pub const DEFAULT_ICP_WEIGHT: f64 = 0.01;

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            levels: 4,
            iterations_per_level: 3,
            damping: 1e-6,
            w_g: 0.0,
            use_features: true,
            use_icp: false,
            initializer: Initializer::Identity,
            early_stop_delta: None,
            convergence_tol: 1e-3,
            feature: FeatureOptions::default(),
            icp: IcpConfig::default(),
        }
    }
}

impl SolverConfig {
    /// Feature-metric plus ICP with the default ICP weight.
    pub fn joint() -> Self {
        Self {
            use_icp: true,
            w_g: DEFAULT_ICP_WEIGHT,
            ..Self::default()
        }
    }

    /// Geometry-only tracking.
    pub fn icp_only() -> Self {
        Self {
            use_features: false,
            use_icp: true,
            w_g: 1.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), TrackError> {
        let bad = |m: &str| Err(TrackError::InvalidConfig(m.into()));
        if self.levels == 0 {
            return bad("levels must be at least 1");
        }
        if self.iterations_per_level == 0 {
            return bad("iterations_per_level must be at least 1");
        }
        if !(self.damping >= 0.0 && self.damping.is_finite()) {
            return bad("damping must be a finite non-negative number");
        }
        if !(self.w_g >= 0.0 && self.w_g.is_finite()) {
            return bad("w_g must be a finite non-negative number");
        }
        if !self.use_features && !self.use_icp {
            return bad("at least one residual must be enabled");
        }
        if !self.use_features && self.w_g == 0.0 {
            return bad("ICP-only tracking needs w_g > 0");
        }
        Ok(())
    }

    fn icp_active(&self) -> bool {
        self.use_icp && self.w_g > 0.0
    }
}

/// Cost and pixel-count trace of one pyramid level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelTrace<T: Real> {
    pub level: usize,
    /// Cost before each iteration's update.
    pub costs: Vec<T>,
    pub valid_counts: Vec<usize>,
    pub step_norms: Vec<T>,
    /// No residual could be formed on this level.
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackResult<T: Real> {
    /// Estimated `T_AB` (frame B expressed in frame A).
    pub pose: Pose<T>,
    /// Traces in processing order, coarsest first.
    pub levels: Vec<LevelTrace<T>>,
    pub converged: bool,
    pub initializer_pose: Pose<T>,
}

impl<T: Real> TrackResult<T> {
    pub fn final_cost(&self) -> Option<T> {
        self.levels.iter().rev().find_map(|l| l.costs.last().copied())
    }

    pub fn any_skipped(&self) -> bool {
        self.levels.iter().any(|l| l.skipped)
    }
}

/// Picks the starting pose for a pair.
pub fn initialize<T: Real>(
    mode: Initializer,
    previous_motion: Option<&Pose<T>>,
    external: Option<&Pose<T>>,
) -> Result<Pose<T>, TrackError> {
    match mode {
        Initializer::Identity => Ok(Pose::identity()),
        Initializer::ConstantVelocity => Ok(previous_motion.copied().unwrap_or_else(Pose::identity)),
        Initializer::External => {
            let p = external.ok_or(TrackError::MissingExternalPose)?;
            if !p.is_valid(T::lit(1e-6)) {
                return Err(TrackError::InvalidPose);
            }
            Ok(*p)
        }
    }
}

struct Systems<'a, T: Real> {
    frame_a: &'a Frame<T>,
    frame_b: &'a Frame<T>,
    cfg: &'a SolverConfig,
    template: Option<PrecomputedTemplate<T>>,
    level: usize,
}

impl<T: Real> Systems<'_, T> {
    fn build(&self, pose: &Pose<T>) -> Result<NormalEquations<T>, ResidualError> {
        let feat = match &self.template {
            Some(tpl) => Some(build_feature_system(self.frame_a, tpl, pose, &self.cfg.feature)),
            None => None,
        };
        if !self.cfg.icp_active() {
            return feat.expect("features enabled when ICP is inactive");
        }
        let icp = build_icp_system(self.frame_a, self.frame_b, pose, self.level, &self.cfg.icp);
        let w = T::lit(self.cfg.w_g);
        match (feat, icp) {
            (None, icp) => icp.map(|g| NormalEquations::combine(&NormalEquations::zero(), &g, w)),
            (Some(Ok(f)), Ok(g)) => Ok(NormalEquations::combine(&f, &g, w)),
            (Some(Ok(f)), Err(ResidualError::NoValidPixels(_))) => Ok(f),
            (Some(Err(ResidualError::NoValidPixels(_))), Ok(g)) => {
                Ok(NormalEquations::combine(&NormalEquations::zero(), &g, w))
            }
            (Some(Err(e)), _) | (Some(Ok(_)), Err(e)) => Err(e),
        }
    }
}

/// Estimates `T_AB` starting from `init`.
pub fn track<T: Real>(
    frame_a: &Frame<T>,
    frame_b: &Frame<T>,
    cfg: &SolverConfig,
    init: &Pose<T>,
) -> Result<TrackResult<T>, TrackError> {
    cfg.validate()?;
    if !frame_a.same_geometry(frame_b) {
        return Err(ResidualError::GeometryMismatch("frame pyramids differ".into()).into());
    }
    if cfg.levels > frame_a.levels() {
        return Err(TrackError::InvalidConfig(format!(
            "{} levels requested, frames have {}",
            cfg.levels,
            frame_a.levels()
        )));
    }
    if !init.is_valid(T::lit(1e-6)) {
        return Err(TrackError::InvalidPose);
    }
    let damping = T::lit(cfg.damping);
    let mut pose = *init;
    let mut traces = Vec::with_capacity(cfg.levels);
    let mut last_step = None;

    for level in (0..cfg.levels).rev() {
        let template = if cfg.use_features {
            Some(precompute_template(frame_b, level)?)
        } else {
            None
        };
        let systems = Systems {
            frame_a,
            frame_b,
            cfg,
            template,
            level,
        };
        let mut trace = LevelTrace {
            level,
            costs: Vec::with_capacity(cfg.iterations_per_level),
            valid_counts: Vec::with_capacity(cfg.iterations_per_level),
            step_norms: Vec::with_capacity(cfg.iterations_per_level),
            skipped: false,
        };
        for iteration in 0..cfg.iterations_per_level {
            let ne = match systems.build(&pose) {
                Ok(ne) => ne,
                Err(ResidualError::NoValidPixels(_)) => {
                    trace.skipped = true;
                    break;
                }
                Err(e) => return Err(e.into()),
            };
            trace.costs.push(ne.cost);
            trace.valid_counts.push(ne.valid_count);
            let step = ne
                .solve_step(damping)
                .ok_or(TrackError::SingularSystem { level, iteration })?;
            pose = pose.compose(&Twist::from_vector(&step).exp().inverse());
            let norm = step.norm();
            trace.step_norms.push(norm);
            last_step = Some((level, norm));
            if let Some(delta) = cfg.early_stop_delta {
                if norm < T::lit(delta) {
                    break;
                }
            }
        }
        traces.push(trace);
    }

    if traces.iter().all(|t| t.costs.is_empty()) {
        return Err(TrackError::NoValidPixels);
    }
    let converged = !traces.iter().any(|t| t.skipped)
        && matches!(last_step, Some((0, n)) if n <= T::lit(cfg.convergence_tol));
    Ok(TrackResult {
        pose,
        levels: traces,
        converged,
        initializer_pose: *init,
    })
}

/// One sample of the translation cost landscape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandscapeSample {
    pub dx: f64,
    pub dy: f64,
    /// `None` when no pixel produced a residual.
    pub cost: Option<f64>,
}

/// Feature cost on an `(x, y)` translation grid centered at `reference`,
/// keeping rotation and z-translation fixed.
pub fn cost_landscape<T: Real>(
    frame_a: &Frame<T>,
    frame_b: &Frame<T>,
    reference: &Pose<T>,
    level: usize,
    range: f64,
    steps: usize,
    opts: &FeatureOptions,
) -> Result<Vec<LandscapeSample>, TrackError> {
    if steps == 0 {
        return Err(TrackError::InvalidConfig("grid steps must be at least 1".into()));
    }
    let tpl = precompute_template(frame_b, level)?;
    let offsets: Vec<f64> = if steps == 1 {
        vec![0.0]
    } else {
        (0..steps)
            .map(|i| -range + 2.0 * range * i as f64 / (steps - 1) as f64)
            .collect()
    };
    let mut out = Vec::with_capacity(steps * steps);
    for &dy in &offsets {
        for &dx in &offsets {
            let mut pose = *reference;
            pose.translation.x += T::lit(dx);
            pose.translation.y += T::lit(dy);
            let cost = match build_feature_system(frame_a, &tpl, &pose, opts) {
                Ok(ne) => Some(ne.cost.as_f64()),
                Err(ResidualError::NoValidPixels(_)) => None,
                Err(e) => return Err(e.into()),
            };
            out.push(LandscapeSample { dx, dy, cost });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    #[test]
    fn initializer_modes() {
        let prev = Twist::new(Vector3::new(0.1, 0.0, 0.0), Vector3::new(0.0, 0.02, 0.0)).exp();
        assert_eq!(initialize::<f64>(Initializer::Identity, Some(&prev), None).unwrap(), Pose::identity());
        assert_eq!(initialize(Initializer::ConstantVelocity, Some(&prev), None).unwrap(), prev);
        assert_eq!(initialize::<f64>(Initializer::ConstantVelocity, None, None).unwrap(), Pose::identity());
        assert_eq!(
            initialize::<f64>(Initializer::External, None, None),
            Err(TrackError::MissingExternalPose)
        );
        assert_eq!(initialize(Initializer::External, None, Some(&prev)).unwrap(), prev);
        let mut bad = prev;
        bad.rotation[(0, 0)] += 0.1;
        assert_eq!(initialize(Initializer::External, None, Some(&bad)), Err(TrackError::InvalidPose));
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        assert!(SolverConfig::joint().validate().is_ok());
        assert!(SolverConfig::icp_only().validate().is_ok());
        for cfg in [
            SolverConfig { levels: 0, ..Default::default() },
            SolverConfig { iterations_per_level: 0, ..Default::default() },
            SolverConfig { damping: -1.0, ..Default::default() },
            SolverConfig { w_g: f64::NAN, ..Default::default() },
            SolverConfig { use_features: false, ..Default::default() },
        ] {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
        assert_eq!("constvel".parse::<Initializer>().unwrap(), Initializer::ConstantVelocity);
        assert!("nope".parse::<Initializer>().is_err());
    }
}
