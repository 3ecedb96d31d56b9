//! `key = value` run configuration files.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dataset::{TumCamera, DEFAULT_MAX_DT};
use crate::features::FeatureProvider;
use crate::geometry::CameraIntrinsics;
use crate::residuals::IcpNoise;
use crate::solver::SolverConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

/// Feature provider by name; `external` needs a features path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProviderKind {
    #[default]
    Intensity,
    IntensityGrad,
    External,
}

impl FromStr for ProviderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "intensity" => Ok(Self::Intensity),
            "intensitygrad" | "intensity_grad" => Ok(Self::IntensityGrad),
            "external" => Ok(Self::External),
            other => Err(format!("unknown provider {other:?}")),
        }
    }
}

impl std::fmt::Display for ProviderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Intensity => "intensity",
            Self::IntensityGrad => "intensitygrad",
            Self::External => "external",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub solver: SolverConfig,
    pub provider: ProviderKind,
    pub features: Option<PathBuf>,
    /// Full-resolution camera calibration.
    pub camera: CameraIntrinsics<f64>,
    pub max_dt: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            provider: ProviderKind::Intensity,
            features: None,
            camera: TumCamera::Fr1.intrinsics(),
            max_dt: DEFAULT_MAX_DT,
        }
    }
}

fn parse_value<V: FromStr>(line: usize, key: &str, value: &str) -> Result<V, ConfigError> {
    value.parse().map_err(|_| ConfigError::Parse {
        line,
        message: format!("bad value {value:?} for {key}"),
    })
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(ConfigError::Parse {
            line,
            message: format!("bad boolean {value:?} for {key}"),
        }),
    }
}

fn optional_f64(line: usize, key: &str, value: &str) -> Result<Option<f64>, ConfigError> {
    match value.to_ascii_lowercase().as_str() {
        "none" | "off" | "" => Ok(None),
        _ => parse_value(line, key, value).map(Some),
    }
}

impl RunConfig {
    /// Applies `key = value` lines on top of `self`. Unknown keys are errors.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Parse {
                    line,
                    message: format!("expected key = value, found {content:?}"),
                });
            };
            self.set(line, key.trim(), value.trim())?;
        }
        Ok(())
    }

    fn set(&mut self, line: usize, key: &str, v: &str) -> Result<(), ConfigError> {
        let s = &mut self.solver;
        match key {
            "levels" => s.levels = parse_value(line, key, v)?,
            "iterations_per_level" | "iters" => s.iterations_per_level = parse_value(line, key, v)?,
            "damping" => s.damping = parse_value(line, key, v)?,
            "w_g" | "wg" => s.w_g = parse_value(line, key, v)?,
            "initializer" | "init" => {
                s.initializer = v.parse().map_err(|m| ConfigError::Parse { line, message: m })?
            }
            "early_stop_delta" => s.early_stop_delta = optional_f64(line, key, v)?,
            "convergence_tol" => s.convergence_tol = parse_value(line, key, v)?,
            "use_icp" | "icp" => s.use_icp = parse_bool(line, key, v)?,
            "use_features" => s.use_features = parse_bool(line, key, v)?,
            "depth_gate" => s.feature.depth_gate = optional_f64(line, key, v)?,
            "icp_max_distance" => s.icp.max_distance = parse_value(line, key, v)?,
            "icp_max_angle_deg" => s.icp.max_normal_angle_deg = parse_value(line, key, v)?,
            "icp_noise" => {
                s.icp.noise = match v.to_ascii_lowercase().as_str() {
                    "structured_light" | "structuredlight" => IcpNoise::StructuredLight,
                    "constant" => IcpNoise::Constant,
                    _ => {
                        return Err(ConfigError::Parse {
                            line,
                            message: format!("unknown icp_noise {v:?}"),
                        })
                    }
                }
            }
            "provider" => self.provider = v.parse().map_err(|m| ConfigError::Parse { line, message: m })?,
            "features" => self.features = Some(PathBuf::from(v)),
            "camera" => {
                let cam: TumCamera = v.parse().map_err(|m| ConfigError::Parse { line, message: m })?;
                self.camera = cam.intrinsics();
            }
            "fx" => self.camera.fx = parse_value(line, key, v)?,
            "fy" => self.camera.fy = parse_value(line, key, v)?,
            "cx" => self.camera.cx = parse_value(line, key, v)?,
            "cy" => self.camera.cy = parse_value(line, key, v)?,
            "width" => self.camera.width = parse_value(line, key, v)?,
            "height" => self.camera.height = parse_value(line, key, v)?,
            "max_dt" => self.max_dt = parse_value(line, key, v)?,
            other => {
                return Err(ConfigError::Parse {
                    line,
                    message: format!("unknown key {other:?}"),
                })
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse(&text)
    }

    pub fn feature_provider(&self) -> Result<FeatureProvider, ConfigError> {
        Ok(match self.provider {
            ProviderKind::Intensity => FeatureProvider::Intensity,
            ProviderKind::IntensityGrad => FeatureProvider::IntensityGrad,
            ProviderKind::External => FeatureProvider::External(
                self.features
                    .clone()
                    .ok_or_else(|| ConfigError::Invalid("provider external needs a features path".into()))?,
            ),
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.solver
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.camera
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(self.max_dt > 0.0) {
            return Err(ConfigError::Invalid(format!("max_dt must be positive, got {}", self.max_dt)));
        }
        self.feature_provider().map(|_| ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Initializer;

    #[test]
    fn parses_keys_and_comments() {
        let c = RunConfig::parse(
            "# run\nlevels = 3\niters=5 # trailing\nwg = 0.5\nuse_icp = true\ninit = constvel\n\
             provider = intensitygrad\ncamera = fr2\nearly_stop_delta = 1e-6\n",
        )
        .unwrap();
        assert_eq!(c.solver.levels, 3);
        assert_eq!(c.solver.iterations_per_level, 5);
        assert_eq!(c.solver.w_g, 0.5);
        assert!(c.solver.use_icp);
        assert_eq!(c.solver.initializer, Initializer::ConstantVelocity);
        assert_eq!(c.provider, ProviderKind::IntensityGrad);
        assert_eq!(c.camera.fx, 520.9);
        assert_eq!(c.solver.early_stop_delta, Some(1e-6));
        c.validate().unwrap();
    }

    #[test]
    fn unknown_key_and_bad_value() {
        assert!(matches!(
            RunConfig::parse("levels = 2\nfoo = 1\n"),
            Err(ConfigError::Parse { line: 2, .. })
        ));
        assert!(matches!(RunConfig::parse("levels = x"), Err(ConfigError::Parse { line: 1, .. })));
        assert!(matches!(RunConfig::parse("levels"), Err(ConfigError::Parse { line: 1, .. })));
    }

    #[test]
    fn external_provider_needs_path() {
        let c = RunConfig::parse("provider = external").unwrap();
        assert!(c.validate().is_err());
        let c = RunConfig::parse("provider = external\nfeatures = /tmp/f.dfmt").unwrap();
        assert_eq!(
            c.feature_provider().unwrap(),
            FeatureProvider::External(PathBuf::from("/tmp/f.dfmt"))
        );
    }
}
