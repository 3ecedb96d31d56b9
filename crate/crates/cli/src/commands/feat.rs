use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use fmtrack::dataset::AssociatedFrame;
use fmtrack::features::{read_feature_file, write_feature_file, FeatureFile, FeatureProvider};

use crate::input::load_entry;
use crate::options::TrackFlags;

#[derive(clap::Args, Debug)]
pub struct Args {
    #[arg(long)]
    pub rgb: PathBuf,
    #[arg(long)]
    pub depth: PathBuf,
    #[command(flatten)]
    pub flags: TrackFlags,
    /// DFMT output path.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: Args) -> Result<()> {
    let cfg = args.flags.resolve()?;
    let entry = AssociatedFrame {
        timestamp: 0.0,
        rgb: args.rgb.clone(),
        depth: args.depth.clone(),
        depth_timestamp: 0.0,
        gt: None,
    };
    let frame = load_entry(&cfg, &entry)?;
    let file = FeatureFile::from_frame(&frame);
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    write_feature_file(&args.out, &file)?;

    let back = read_feature_file(&args.out)?;
    if back != file {
        bail!("{} does not decode to the written maps", args.out.display());
    }
    // reload through the external provider and compare the resulting maps
    let reloaded = fmtrack::dataset::load_frame::<f64>(
        &entry,
        &cfg.camera,
        (fmtrack::dataset::TARGET_WIDTH, fmtrack::dataset::TARGET_HEIGHT),
        &FeatureProvider::External(args.out.clone()),
        cfg.solver.levels,
    )
    .with_context(|| format!("loading {} through the external provider", args.out.display()))?;
    if FeatureFile::from_frame(&reloaded) != file {
        bail!("external provider maps differ from {}", args.out.display());
    }
    let channels = file.levels[0].channels;
    let shapes: Vec<String> = file.levels.iter().map(|l| format!("{}x{}", l.width, l.height)).collect();
    println!(
        "{}: {} levels ({}), {} channels, round trip exact",
        args.out.display(),
        file.levels.len(),
        shapes.join(", "),
        channels
    );
    Ok(())
}
