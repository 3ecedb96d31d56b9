//! Frame pair selection shared by track-pair and landscape.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use fmtrack::config::RunConfig;
use fmtrack::dataset::{load_frame, load_sequence, AssociatedFrame, TARGET_HEIGHT, TARGET_WIDTH};
use fmtrack::{Frame64, Pose64};

use crate::options::provider_for;

/// Either four image paths or a TUM directory plus two frame indices.
#[derive(Args, Debug, Clone)]
pub struct PairInput {
    /// TUM-layout directory.
    #[arg(long, conflicts_with_all = ["rgb_a", "depth_a", "rgb_b", "depth_b"])]
    pub dataset: Option<PathBuf>,
    /// Index of frame A among the associated frames.
    #[arg(long, default_value_t = 0, requires = "dataset")]
    pub a: usize,
    /// Index of frame B among the associated frames.
    #[arg(long, default_value_t = 1, requires = "dataset")]
    pub b: usize,
    #[arg(long, requires_all = ["depth_a", "rgb_b", "depth_b"])]
    pub rgb_a: Option<PathBuf>,
    #[arg(long)]
    pub depth_a: Option<PathBuf>,
    #[arg(long)]
    pub rgb_b: Option<PathBuf>,
    #[arg(long)]
    pub depth_b: Option<PathBuf>,
}

pub struct LoadedPair {
    pub frame_a: Frame64,
    pub frame_b: Frame64,
    pub entry_a: AssociatedFrame,
    pub entry_b: AssociatedFrame,
    /// Ground-truth `T_AB` when the dataset has it for both frames.
    pub gt: Option<Pose64>,
}

fn raw_entry(timestamp: f64, rgb: &PathBuf, depth: &PathBuf) -> AssociatedFrame {
    AssociatedFrame {
        timestamp,
        rgb: rgb.clone(),
        depth: depth.clone(),
        depth_timestamp: timestamp,
        gt: None,
    }
}

pub fn load_entry(cfg: &RunConfig, entry: &AssociatedFrame) -> Result<Frame64> {
    let provider = provider_for(cfg, &entry.rgb)?;
    load_frame(entry, &cfg.camera, (TARGET_WIDTH, TARGET_HEIGHT), &provider, cfg.solver.levels)
        .with_context(|| format!("loading frame {}", entry.rgb.display()))
}

impl PairInput {
    pub fn load(&self, cfg: &RunConfig) -> Result<LoadedPair> {
        let (entry_a, entry_b) = match (&self.dataset, &self.rgb_a, &self.depth_a, &self.rgb_b, &self.depth_b) {
            (Some(dir), ..) => {
                let seq = load_sequence(dir, cfg.max_dt)?;
                let n = seq.associated.len();
                if self.a >= n || self.b >= n {
                    bail!("frame index out of range: {} associated frames", n);
                }
                (seq.associated[self.a].clone(), seq.associated[self.b].clone())
            }
            (None, Some(ra), Some(da), Some(rb), Some(db)) => (raw_entry(0.0, ra, da), raw_entry(1.0, rb, db)),
            _ => bail!("give either --dataset or all of --rgb-a, --depth-a, --rgb-b, --depth-b"),
        };
        let frame_a = load_entry(cfg, &entry_a)?;
        let frame_b = load_entry(cfg, &entry_b)?;
        let gt = match (entry_a.gt, entry_b.gt) {
            (Some(ga), Some(gb)) => Some(ga.inverse() * gb),
            _ => None,
        };
        Ok(LoadedPair {
            frame_a,
            frame_b,
            entry_a,
            entry_b,
            gt,
        })
    }
}

/// Parses `tx ty tz qx qy qz qw`, separated by spaces or commas.
pub fn parse_pose(text: &str) -> Result<Pose64> {
    let fields: Vec<&str> = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect();
    Pose64::parse_tum_fields(&fields).with_context(|| format!("bad pose {text:?}"))
}
