//! Shared tracking flags and their merge with the config file.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use fmtrack::config::{ProviderKind, RunConfig};
use fmtrack::dataset::TumCamera;
use fmtrack::features::FeatureProvider;
use fmtrack::solver::{Initializer, DEFAULT_ICP_WEIGHT};

/// Flags override config-file values, which override built-in defaults.
#[derive(Args, Debug, Clone, Default)]
pub struct TrackFlags {
    /// `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub provider: Option<ProviderKind>,
    /// Directory of per-frame `<rgb stem>.dfmt` files for the external provider.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Add the ICP residual.
    #[arg(long)]
    pub icp: bool,
    /// ICP weight [default: 0.01 with --icp].
    #[arg(long)]
    pub wg: Option<f64>,
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub damping: Option<f64>,
    #[arg(long)]
    pub init: Option<Initializer>,
    /// Camera preset for the full-resolution images (fr1, fr2).
    #[arg(long)]
    pub camera: Option<TumCamera>,
    /// Stop a level when the step norm drops below this.
    #[arg(long)]
    pub early_stop: Option<f64>,
}

impl TrackFlags {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        cfg.solver.w_g = f64::NAN;
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            cfg.apply_text(&text).with_context(|| format!("in {}", path.display()))?;
        }
        let s = &mut cfg.solver;
        if let Some(v) = self.levels {
            s.levels = v;
        }
        if let Some(v) = self.iters {
            s.iterations_per_level = v;
        }
        if let Some(v) = self.damping {
            s.damping = v;
        }
        if let Some(v) = self.init {
            s.initializer = v;
        }
        if let Some(v) = self.early_stop {
            s.early_stop_delta = Some(v);
        }
        s.use_icp |= self.icp;
        if let Some(v) = self.wg {
            s.w_g = v;
        }
        if s.w_g.is_nan() {
            s.w_g = if s.use_icp { DEFAULT_ICP_WEIGHT } else { 0.0 };
        }
        if let Some(p) = self.provider {
            cfg.provider = p;
        }
        if let Some(f) = &self.features {
            cfg.features = Some(f.clone());
        }
        if let Some(c) = self.camera {
            cfg.camera = c.intrinsics();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Provider for one frame; external features are looked up by the RGB file stem.
pub fn provider_for(cfg: &RunConfig, rgb: &Path) -> Result<FeatureProvider> {
    Ok(match cfg.feature_provider()? {
        FeatureProvider::External(dir) => {
            let stem = rgb
                .file_stem()
                .with_context(|| format!("{} has no file name", rgb.display()))?;
            let mut name = stem.to_os_string();
            name.push(".dfmt");
            FeatureProvider::External(dir.join(name))
        }
        p => p,
    })
}
