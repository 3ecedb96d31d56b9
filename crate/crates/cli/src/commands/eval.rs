use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use fmtrack::dataset::{interpolate_pose, parse_groundtruth};
use fmtrack::eval::{mean, median, parse_metrics_csv, rpe, TrajectoryRecord};

use super::write_output;

pub const RPE_HEADER: &str = "timestamp,rpe_trans_m,rpe_rot_rad";

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Metrics CSV written by track-seq.
    #[arg(long, conflicts_with_all = ["est", "gt"])]
    pub metrics: Option<PathBuf>,
    /// Estimated trajectory (TUM format).
    #[arg(long, requires = "gt")]
    pub est: Option<PathBuf>,
    /// Ground-truth trajectory (TUM format), interpolated at the estimate's timestamps.
    #[arg(long, requires = "est")]
    pub gt: Option<PathBuf>,
    /// Pose interval for trajectory RPE.
    #[arg(long, default_value_t = 1)]
    pub kf: usize,
    /// Per-pair RPE CSV output for trajectory comparison.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn summary(name: &str, v: &[f64]) {
    match (mean(v), median(v)) {
        (Some(a), Some(b)) => println!("{name}: mean {a:.6} median {b:.6} (n = {})", v.len()),
        _ => println!("{name}: no values"),
    }
}

pub fn run(args: Args) -> Result<()> {
    if let Some(path) = &args.metrics {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let rows = parse_metrics_csv(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        let ok: Vec<_> = rows.iter().filter_map(|(_, m)| m.as_ref()).collect();
        println!("{} rows, {} failed", rows.len(), rows.len() - ok.len());
        summary("epe_m", &ok.iter().map(|m| m.epe).collect::<Vec<_>>());
        summary("rpe_trans_m", &ok.iter().map(|m| m.rpe_trans).collect::<Vec<_>>());
        summary("rpe_rot_rad", &ok.iter().map(|m| m.rpe_rot).collect::<Vec<_>>());
        return Ok(());
    }
    let (Some(est_path), Some(gt_path)) = (&args.est, &args.gt) else {
        bail!("give --metrics or both --est and --gt");
    };
    if args.kf == 0 {
        bail!("--kf must be at least 1");
    }
    let est = TrajectoryRecord::read(est_path)?;
    let gt_text = std::fs::read_to_string(gt_path).with_context(|| format!("reading {}", gt_path.display()))?;
    let gt = parse_groundtruth(&gt_text, gt_path)?;
    let e = est.entries();
    let mut csv = format!("{RPE_HEADER}\n");
    let (mut tr, mut rot) = (Vec::new(), Vec::new());
    for i in 0..e.len().saturating_sub(args.kf) {
        let (ta, pa) = e[i];
        let (tb, pb) = e[i + args.kf];
        let (Some(ga), Some(gb)) = (interpolate_pose(&gt, ta), interpolate_pose(&gt, tb)) else {
            continue;
        };
        let (t, r) = rpe(&(ga.inverse() * gb), &(pa.inverse() * pb));
        csv += &format!("{ta:.6},{t:.9},{r:.9}\n");
        tr.push(t);
        rot.push(r);
    }
    if tr.is_empty() {
        bail!("no estimated pose pair is covered by the ground truth");
    }
    summary("rpe_trans_m", &tr);
    summary("rpe_rot_rad", &rot);
    if let Some(out) = &args.out {
        write_output(out, &csv)?;
    }
    Ok(())
}
