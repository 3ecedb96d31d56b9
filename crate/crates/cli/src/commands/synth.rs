use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use fmtrack::dataset::{write_tum_sequence, SynthScene, TumCamera};
use fmtrack::geometry::Twist;
use fmtrack::Pose64;
use nalgebra::Vector6;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Scene {
    Plane,
    Relief,
}

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Camera motion between consecutive frames as a twist `rho_x rho_y rho_z phi_x phi_y phi_z`.
    #[arg(long, default_value = "0 0 0 0 0 0", allow_hyphen_values = true)]
    pub motion: String,
    /// Depth noise standard deviation, meters.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, value_enum, default_value_t = Scene::Plane)]
    pub scene: Scene,
    /// Number of frames.
    #[arg(long, default_value_t = 2)]
    pub frames: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Scale of the texture wavelengths.
    #[arg(long, default_value_t = 1.0)]
    pub texture_scale: f64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn parse_twist(text: &str) -> Result<Twist<f64>> {
    let v: Vec<f64> = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("bad twist {text:?}"))?;
    if v.len() != 6 || v.iter().any(|x| !x.is_finite()) {
        bail!("twist needs six finite numbers, got {text:?}");
    }
    Ok(Twist::from_vector(&Vector6::from_column_slice(&v)))
}

pub fn run(args: Args) -> Result<()> {
    let step = parse_twist(&args.motion)?.exp();
    if args.frames < 2 {
        bail!("--frames must be at least 2");
    }
    if !(args.noise >= 0.0) {
        bail!("--noise must be non-negative");
    }
    let k = TumCamera::Fr1.intrinsics();
    let mut scene = match args.scene {
        Scene::Plane => SynthScene::textured_plane(k),
        Scene::Relief => SynthScene::relief(k),
    };
    if args.texture_scale != 1.0 {
        if !(args.texture_scale > 0.0) {
            bail!("--texture-scale must be positive");
        }
        scene.texture = fmtrack::dataset::Texture::three_sinusoids_scaled(args.texture_scale);
    }
    scene.noise = args.noise;
    scene.seed = args.seed;
    let mut cams = vec![Pose64::identity()];
    for i in 1..args.frames {
        cams.push(cams[i - 1] * step);
    }
    let views = scene.render_sequence(&cams)?;
    let t: Vec<f64> = (0..args.frames).map(|i| 1.0 + i as f64 / 30.0).collect();
    write_tum_sequence(&args.out, &views, &cams, &t)?;
    println!("wrote {} frames to {}", args.frames, args.out.display());
    println!("T_AB {}", step.to_tum());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twist_parsing() {
        let t = parse_twist("0.1, -0.2 0.3 0 0 0.5").unwrap();
        assert_eq!(t.to_vector(), Vector6::new(0.1, -0.2, 0.3, 0.0, 0.0, 0.5));
        assert!(parse_twist("1 2 3").is_err());
        assert!(parse_twist("1 2 3 4 5 x").is_err());
        assert!(parse_twist("1 2 3 4 5 inf").is_err());
    }
}
