//! CSV tables and the JSON run manifest.
//!
//! Floats are written with 17 significant digits so that every value
//! round-trips exactly.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{BifurcationPoint, BigEEstimate, BubblePoint, PhaseCell};
use crate::error::{Error, Result};

/// Lossless decimal rendering of a float.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn table<W: Write>(out: W, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub const PHASE_HEADER: [&str; 5] = ["q", "eps", "constant_global", "min_value", "eps_threshold_local"];

pub fn write_phase_csv<W: Write>(out: W, cells: &[PhaseCell]) -> Result<()> {
    table(
        out,
        &PHASE_HEADER,
        cells.iter().map(|c| {
            vec![
                fmt_f64(c.q),
                fmt_f64(c.eps),
                c.constant_global.to_string(),
                fmt_f64(c.min_value),
                fmt_f64(c.eps_threshold_local),
            ]
        }),
    )
}

pub fn write_bifurcation_csv<W: Write>(out: W, points: &[BifurcationPoint]) -> Result<()> {
    table(
        out,
        &["eps", "eps_ratio", "min_value", "constant_value", "is_constant", "amplitude", "local_verdict", "converged"],
        points.iter().map(|p| {
            vec![
                fmt_f64(p.eps),
                fmt_f64(p.eps_ratio),
                fmt_f64(p.min_value),
                fmt_f64(p.constant_value),
                p.is_constant.to_string(),
                fmt_f64(p.amplitude),
                serde_json::to_value(p.local_verdict)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_owned))
                    .unwrap_or_default(),
                p.converged.to_string(),
            ]
        }),
    )
}

pub fn write_big_e_csv<W: Write>(out: W, estimates: &[BigEEstimate]) -> Result<()> {
    table(
        out,
        &["q", "big_e", "bound", "eps_threshold_local", "probes", "all_probes_converged"],
        estimates.iter().map(|e| {
            vec![
                fmt_f64(e.q),
                fmt_f64(e.value),
                match e.bound {
                    crate::analysis::BoundKind::Estimate => "estimate".to_string(),
                    crate::analysis::BoundKind::AtLeast => "at_least".to_string(),
                },
                fmt_f64(e.eps_threshold_local),
                e.probes.len().to_string(),
                e.probes.iter().all(|p| p.converged).to_string(),
            ]
        }),
    )
}

pub fn write_bubble_csv<W: Write>(out: W, points: &[BubblePoint], constant_value: f64, limit_value: f64) -> Result<()> {
    table(
        out,
        &["a", "modes_per_axis", "nodes_per_axis", "value", "constant_value", "limit_value"],
        points.iter().map(|p| {
            vec![
                fmt_f64(p.a),
                p.modes_per_axis.to_string(),
                p.nodes_per_axis.to_string(),
                fmt_f64(p.value),
                fmt_f64(constant_value),
                fmt_f64(limit_value),
            ]
        }),
    )
}

/// Inputs and provenance of one run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// The fully merged configuration the run executed with.
    pub config: serde_json::Value,
    pub seed: u64,
    pub outputs: Vec<String>,
    pub wall_time_seconds: f64,
    /// Set when the run stopped early or some results are unreliable.
    pub partial: bool,
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, config: serde_json::Value, seed: u64) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.into(),
            config,
            seed,
            outputs: Vec::new(),
            wall_time_seconds: 0.0,
            partial: false,
            notes: Vec::new(),
        }
    }
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Creates `path`'s parent directories and writes `bytes`.
pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| io_error(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

/// Renders a table into memory, then writes it to `path`.
pub fn write_csv_file(path: &Path, render: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<PathBuf> {
    let mut buf = Vec::new();
    render(&mut buf)?;
    write_bytes(path, &buf)?;
    Ok(path.to_path_buf())
}
