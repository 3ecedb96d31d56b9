use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use fmtrack::eval::{frame_points, pair_metrics};
use fmtrack::solver::{initialize, track, Initializer};
use fmtrack::Pose64;

use super::write_output;
use crate::input::{parse_pose, PairInput};
use crate::options::TrackFlags;
use crate::report::{level_traces, ConfigJson, MetricsJson, PoseJson, TimingsJson, TrackReport};

#[derive(clap::Args, Debug)]
pub struct Args {
    #[command(flatten)]
    pub input: PairInput,
    #[command(flatten)]
    pub flags: TrackFlags,
    /// Initial pose `tx ty tz qx qy qz qw` for --init external.
    #[arg(long, conflicts_with = "init_file")]
    pub init_pose: Option<String>,
    /// File whose first pose line is used for --init external.
    #[arg(long)]
    pub init_file: Option<PathBuf>,
    /// JSON report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn external_pose(args: &Args) -> Result<Option<Pose64>> {
    if let Some(s) = &args.init_pose {
        return parse_pose(s).map(Some);
    }
    let Some(path) = &args.init_file else {
        return Ok(None);
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let Some(line) = text.lines().map(str::trim).find(|l| !l.is_empty() && !l.starts_with('#')) else {
        bail!("{} holds no pose", path.display());
    };
    let fields: Vec<&str> = line.split_whitespace().collect();
    // accept both bare poses and timestamped trajectory lines
    let pose = if fields.len() == 8 { &fields[1..] } else { &fields[..] };
    Pose64::parse_tum_fields(pose)
        .map(Some)
        .with_context(|| format!("bad pose in {}", path.display()))
}

pub fn run(args: Args) -> Result<()> {
    let cfg = args.flags.resolve()?;
    if cfg.solver.initializer == Initializer::ConstantVelocity {
        bail!("--init constvel needs a sequence; use track-seq");
    }
    let t0 = Instant::now();
    let pair = args.input.load(&cfg)?;
    let load_ms = t0.elapsed().as_secs_f64() * 1e3;

    let external = external_pose(&args)?;
    let init = initialize(cfg.solver.initializer, None, external.as_ref())?;
    let t1 = Instant::now();
    let result = track(&pair.frame_a, &pair.frame_b, &cfg.solver, &init)?;
    let track_ms = t1.elapsed().as_secs_f64() * 1e3;

    let metrics = match &pair.gt {
        Some(gt) => Some(pair_metrics(gt, &result.pose, &frame_points(&pair.frame_b))?),
        None => None,
    };

    println!("{}", result.pose.to_tum());
    for l in &result.levels {
        let costs: Vec<String> = l.costs.iter().map(|c| format!("{c:.6e}")).collect();
        let counts: Vec<String> = l.valid_counts.iter().map(|c| c.to_string()).collect();
        println!(
            "level {}: cost [{}] valid [{}]{}",
            l.level,
            costs.join(", "),
            counts.join(", "),
            if l.skipped { " skipped" } else { "" }
        );
    }
    println!("converged: {}", result.converged);
    if let Some(m) = &metrics {
        println!("epe {:.6} m, rpe {:.6} m / {:.6} rad", m.epe, m.rpe_trans, m.rpe_rot);
    }

    if let Some(out) = &args.out {
        let report = TrackReport {
            timestamps: [pair.entry_a.timestamp, pair.entry_b.timestamp],
            pose: (&result.pose).into(),
            initial_pose: (&result.initializer_pose).into(),
            converged: result.converged,
            final_cost: result.final_cost(),
            levels: level_traces(&result),
            ground_truth: pair.gt.as_ref().map(PoseJson::from),
            metrics: metrics.as_ref().map(MetricsJson::from),
            config: ConfigJson::from(&cfg),
            timings: TimingsJson { load_ms, track_ms },
        };
        write_output(out, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    }
    Ok(())
}
