//! `fmtrack` command-line interface.

mod commands;
mod input;
mod options;
mod report;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fmtrack::solver::TrackError;

use commands::{eval, feat, landscape, synth, track_pair, track_seq};

#[derive(Parser)]
#[command(name = "fmtrack", version, about = "Feature-metric RGB-D frame-to-frame tracking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Track one RGB-D pair and report T_AB.
    TrackPair(track_pair::Args),
    /// Track every (i, i + kf) pair of a TUM sequence.
    TrackSeq(track_seq::Args),
    /// Summarise a metrics CSV or compare an estimated trajectory with ground truth.
    Eval(eval::Args),
    /// Render a synthetic sequence in TUM layout.
    Synth(synth::Args),
    /// Sample the coarsest-level feature cost over x/y translations.
    Landscape(landscape::Args),
    /// Export a frame's feature maps to DFMT and check they load back unchanged.
    FeatRoundtrip(feat::Args),
}

/// 3 for solver failures, 2 for everything attributable to the inputs.
fn exit_code(err: &anyhow::Error) -> u8 {
    let solver_failure = err.chain().any(|e| {
        matches!(
            e.downcast_ref::<TrackError>(),
            Some(TrackError::SingularSystem { .. } | TrackError::NoValidPixels)
        )
    });
    if solver_failure {
        3
    } else {
        2
    }
}

/// Error chain on one line, dropping causes already quoted by their parent.
fn render(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out += ": ";
            }
            out += &text;
        }
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::TrackPair(a) => track_pair::run(a),
        Command::TrackSeq(a) => track_seq::run(a),
        Command::Eval(a) => eval::run(a),
        Command::Synth(a) => synth::run(a),
        Command::Landscape(a) => landscape::run(a),
        Command::FeatRoundtrip(a) => feat::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", render(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
