use std::path::PathBuf;

use anyhow::{bail, Result};
use fmtrack::solver::cost_landscape;

use super::write_output;
use crate::input::{parse_pose, PairInput};
use crate::options::TrackFlags;

pub const LANDSCAPE_HEADER: &str = "dx,dy,cost";

#[derive(clap::Args, Debug)]
pub struct Args {
    #[command(flatten)]
    pub input: PairInput,
    #[command(flatten)]
    pub flags: TrackFlags,
    /// Reference `T_AB` as `tx ty tz qx qy qz qw`; defaults to the dataset ground truth.
    #[arg(long)]
    pub reference: Option<String>,
    /// Half-width of the grid, meters.
    #[arg(long, default_value_t = 0.1)]
    pub grid_range: f64,
    /// Samples per axis.
    #[arg(long, default_value_t = 21)]
    pub grid_steps: usize,
    /// Pyramid level [default: coarsest].
    #[arg(long)]
    pub level: Option<usize>,
    /// CSV output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<()> {
    let cfg = args.flags.resolve()?;
    if !(args.grid_range >= 0.0) {
        bail!("--grid-range must be non-negative");
    }
    let pair = args.input.load(&cfg)?;
    let reference = match (&args.reference, pair.gt) {
        (Some(s), _) => parse_pose(s)?,
        (None, Some(gt)) => gt,
        (None, None) => bail!("no ground truth for this pair; give --reference"),
    };
    let level = args.level.unwrap_or(cfg.solver.levels - 1);
    let samples = cost_landscape(
        &pair.frame_a,
        &pair.frame_b,
        &reference,
        level,
        args.grid_range,
        args.grid_steps,
        &cfg.solver.feature,
    )?;
    let mut csv = format!("{LANDSCAPE_HEADER}\n");
    for s in &samples {
        match s.cost {
            Some(c) => csv += &format!("{:.9},{:.9},{:.12e}\n", s.dx, s.dy, c),
            None => csv += &format!("{:.9},{:.9},NaN\n", s.dx, s.dy),
        }
    }
    match &args.out {
        Some(p) => write_output(p, &csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}
