use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use fmtrack::dataset::{load_sequence, AssociatedFrame};
use fmtrack::eval::{
    accumulate, frame_points, mean, median, metrics_csv_row, pair_metrics, PairMetrics, TrajectoryRecord,
    METRICS_HEADER,
};
use fmtrack::solver::{initialize, track, Initializer, TrackError};
use fmtrack::{Frame64, Pose64};
use rayon::prelude::*;

use super::write_output;
use crate::input::load_entry;
use crate::options::TrackFlags;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// TUM-layout directory.
    pub dataset: PathBuf,
    #[command(flatten)]
    pub flags: TrackFlags,
    /// Frame interval between A and B.
    #[arg(long, default_value_t = 1)]
    pub kf: usize,
    /// Trajectory file of `T_AB` initial poses, keyed by the timestamp of frame A, for --init external.
    #[arg(long)]
    pub init_file: Option<PathBuf>,
    /// Output directory for metrics.csv and trajectory.txt.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

struct PairOutcome {
    a: usize,
    b: usize,
    pose: Result<Pose64, TrackError>,
    metrics: Option<PairMetrics>,
}

fn load_init_file(path: &Path) -> Result<Vec<(f64, Pose64)>> {
    let rec = TrajectoryRecord::read(path)?;
    Ok(rec.entries().to_vec())
}

fn lookup(inits: &[(f64, Pose64)], t: f64, max_dt: f64) -> Option<Pose64> {
    inits
        .iter()
        .filter(|(ti, _)| (ti - t).abs() <= max_dt)
        .min_by(|x, y| (x.0 - t).abs().total_cmp(&(y.0 - t).abs()))
        .map(|(_, p)| *p)
}

fn track_one(
    frames: &BTreeMap<usize, Frame64>,
    entries: &[AssociatedFrame],
    cfg: &fmtrack::config::RunConfig,
    (a, b): (usize, usize),
    init: Result<Pose64, TrackError>,
) -> PairOutcome {
    let pose = init.and_then(|init| track(&frames[&a], &frames[&b], &cfg.solver, &init).map(|r| r.pose));
    let metrics = match (&pose, entries[a].gt, entries[b].gt) {
        (Ok(est), Some(ga), Some(gb)) => pair_metrics(&(ga.inverse() * gb), est, &frame_points(&frames[&b])).ok(),
        _ => None,
    };
    PairOutcome { a, b, pose, metrics }
}

pub fn run(args: Args) -> Result<()> {
    let cfg = args.flags.resolve()?;
    if args.kf == 0 {
        bail!("--kf must be at least 1");
    }
    let seq = load_sequence(&args.dataset, cfg.max_dt)?;
    let entries = &seq.associated;
    let n = entries.len();
    if n <= args.kf {
        bail!("{} associated frames leave no pair at interval {}", n, args.kf);
    }
    let pairs: Vec<(usize, usize)> = (0..n - args.kf).map(|a| (a, a + args.kf)).collect();

    let t0 = Instant::now();
    let loaded: Vec<(usize, Frame64)> = (0..n)
        .into_par_iter()
        .map(|i| load_entry(&cfg, &entries[i]).map(|f| (i, f)))
        .collect::<Result<_>>()?;
    let frames: BTreeMap<usize, Frame64> = loaded.into_iter().collect();
    let load_s = t0.elapsed().as_secs_f64();

    let inits = match &args.init_file {
        Some(p) => Some(load_init_file(p).with_context(|| format!("reading {}", p.display()))?),
        None => None,
    };
    let external = |a: usize| inits.as_ref().and_then(|v| lookup(v, entries[a].timestamp, cfg.max_dt));

    let t1 = Instant::now();
    let outcomes: Vec<PairOutcome> = match cfg.solver.initializer {
        Initializer::ConstantVelocity => {
            let mut prev: Option<Pose64> = None;
            let mut out = Vec::with_capacity(pairs.len());
            for &p in &pairs {
                let init = initialize(Initializer::ConstantVelocity, prev.as_ref(), None);
                let o = track_one(&frames, entries, &cfg, p, init);
                prev = o.pose.as_ref().ok().copied();
                out.push(o);
            }
            out
        }
        mode => pairs
            .par_iter()
            .map(|&p| {
                let init = initialize(mode, None, external(p.0).as_ref());
                track_one(&frames, entries, &cfg, p, init)
            })
            .collect(),
    };
    let track_s = t1.elapsed().as_secs_f64();

    let mut csv = format!("{METRICS_HEADER}\n");
    let mut failures = 0;
    for o in &outcomes {
        if let Err(e) = &o.pose {
            failures += 1;
            eprintln!("pair ({}, {}) failed: {e}", o.a, o.b);
        }
        csv += &metrics_csv_row(entries[o.a].timestamp, o.metrics.as_ref());
        csv.push('\n');
    }
    write_output(&args.out.join("metrics.csv"), &csv)?;

    // chain the non-overlapping pairs (0, kf), (kf, 2 kf), ...; failed pairs contribute identity
    let chain: Vec<(f64, Pose64)> = outcomes
        .iter()
        .filter(|o| o.a % args.kf == 0)
        .map(|o| (entries[o.b].timestamp, *o.pose.as_ref().unwrap_or(&Pose64::identity())))
        .collect();
    let traj = accumulate(entries[0].timestamp, &chain)?;
    write_output(&args.out.join("trajectory.txt"), &traj.to_tum_string())?;

    let ok: Vec<&PairMetrics> = outcomes.iter().filter_map(|o| o.metrics.as_ref()).collect();
    println!(
        "{} pairs ({} failed, {} with ground truth), load {:.2} s, track {:.2} s",
        outcomes.len(),
        failures,
        ok.len(),
        load_s,
        track_s
    );
    for (name, values) in [
        ("epe_m", ok.iter().map(|m| m.epe).collect::<Vec<_>>()),
        ("rpe_trans_m", ok.iter().map(|m| m.rpe_trans).collect()),
        ("rpe_rot_rad", ok.iter().map(|m| m.rpe_rot).collect()),
    ] {
        if let (Some(mn), Some(md)) = (mean(&values), median(&values)) {
            println!("{name}: mean {mn:.6} median {md:.6}");
        }
    }
    Ok(())
}
