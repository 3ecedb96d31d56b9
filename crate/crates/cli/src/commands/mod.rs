pub mod eval;
pub mod feat;
pub mod landscape;
pub mod synth;
pub mod track_pair;
pub mod track_seq;

use std::path::Path;

use anyhow::{Context, Result};

pub fn write_output(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}
