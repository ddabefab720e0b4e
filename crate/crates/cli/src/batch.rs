//! Input discovery and order-preserving parallel processing.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use uvd::{load_trajectory, EmbeddingTrajectory, Format};

/// Trajectory files named by `input` (a file or a directory) or listed in a
/// manifest, in a stable order.
pub fn collect_inputs(input: Option<&Path>, manifest: Option<&Path>) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    if let Some(p) = input {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| format!("reading directory {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && is_trajectory(p))
                .collect();
            found.sort();
            paths.extend(found);
        } else {
            paths.push(p.to_path_buf());
        }
    }
    if let Some(m) = manifest {
        let text =
            fs::read_to_string(m).with_context(|| format!("reading manifest {}", m.display()))?;
        let base = m.parent().unwrap_or(Path::new(""));
        for line in text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
        {
            let p = Path::new(line);
            paths.push(if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            });
        }
    }
    if paths.is_empty() {
        bail!("no input trajectories found");
    }
    Ok(paths)
}

fn is_trajectory(p: &Path) -> bool {
    matches!(p.extension().and_then(|e| e.to_str()), Some("uvdt" | "csv"))
}

pub fn load(path: &Path, format: Option<Format>) -> Result<EmbeddingTrajectory> {
    let format = format.unwrap_or_else(|| Format::from_path(path));
    load_trajectory(path, format).with_context(|| format!("loading {}", path.display()))
}

/// Identifier written into output records: the file stem.
pub fn record_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Runs `job` on every path in parallel, writes successful lines in input
/// order, and reports each failure on stderr. Errors if any job failed.
pub fn run_jsonl<F>(paths: &[PathBuf], out: &mut dyn Write, job: F) -> Result<()>
where
    F: Fn(&Path) -> Result<String> + Sync,
{
    let results: Vec<Result<String>> = paths.par_iter().map(|p| job(p)).collect();
    let mut failed = 0;
    for (path, result) in paths.iter().zip(results) {
        match result {
            Ok(line) => writeln!(out, "{line}")?,
            Err(e) => {
                failed += 1;
                eprintln!("error: {}: {e:#}", path.display());
            }
        }
    }
    out.flush()?;
    if failed > 0 {
        bail!("{failed} of {} inputs failed", paths.len());
    }
    Ok(())
}
