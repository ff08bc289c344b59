//! Batch runs: resolve a configuration, compute its tables on a worker
//! pool, write CSV files and finally the manifest.

pub mod config;
pub mod output;
pub mod scenarios;

use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use crate::metrics::{sweep, MetricsError, Probe};
use crate::model::Terminal;
use config::{Job, Resolved};
use output::{Cell, Column, FileRecord, RunManifest, Table, UNIT_CURRENT, UNIT_CURRENT_DERIVATIVE, UNIT_NONE};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Config(#[from] config::ConfigError),
    #[error("computation failed: {0}")]
    Compute(#[from] MetricsError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("could not start the worker pool: {0}")]
    Pool(String),
}

impl RunError {
    /// Process exit status: 2 for a rejected configuration, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub manifest: RunManifest,
}

impl RunOutcome {
    /// 0 when every grid point succeeded, 1 when some were recorded as failed.
    pub fn exit_code(&self) -> i32 {
        if self.manifest.failed_points == 0 {
            0
        } else {
            1
        }
    }
}

/// Tables for a resolved job, computed on the calling thread's rayon pool.
pub fn compute(resolved: &Resolved) -> Result<(Vec<Table>, Vec<String>), MetricsError> {
    match &resolved.job {
        Job::Scenario(name) => {
            let ctx = scenarios::Context {
                model: resolved.model,
                boundary: resolved.boundary,
                blp: resolved.blp,
                blp_t_max: resolved.blp_t_max,
                resolution: resolved.resolution.clone(),
            };
            let out = scenarios::run(name, &ctx)?;
            Ok((out.tables, out.notes))
        }
        Job::Sweep { axis, grid, time, modulator } => {
            let probe = Probe::at(*time)
                .modulated_by(*modulator)
                .with_h(resolved.model.stencil_h)
                .with_boundary(resolved.boundary);
            let r = sweep(&resolved.model, *axis, grid, &probe)?;
            let terminals = resolved.model.system_terminals();
            let mut columns = vec![Column::new(axis.name(), axis.unit())];
            for t in &terminals {
                columns.push(Column::new(format!("J_{t}"), UNIT_CURRENT));
            }
            for t in &terminals {
                columns.push(Column::new(format!("dJ{t}_dT{modulator}"), UNIT_CURRENT_DERIVATIVE));
            }
            for t in &r.outputs {
                columns.push(Column::new(format!("alpha_{t}"), UNIT_NONE));
            }
            let mut table = Table::new(format!("sweep_{}", axis.name()), columns);
            for p in &r.points {
                let mut cells = vec![Cell::Num(p.x)];
                let s = p.stencil.as_ref();
                cells.extend(terminals.iter().map(|&t| Cell::from(s.and_then(|s| s.current(t)))));
                cells.extend(terminals.iter().map(|&t| Cell::from(s.and_then(|s| s.derivative(t)))));
                cells.extend(r.outputs.iter().map(|&t: &Terminal| Cell::from(p.alpha(t))));
                table.push(cells, p.error.clone());
            }
            Ok((vec![table], Vec::new()))
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

/// Runs a resolved configuration end to end. Tables are written first; the
/// manifest last, so its presence marks a finished run.
pub fn execute(resolved: &Resolved) -> Result<RunOutcome, RunError> {
    let started = Instant::now();
    let timestamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    let (tables, notes) = match resolved.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| RunError::Pool(e.to_string()))?
            .install(|| compute(resolved))?,
        None => compute(resolved)?,
    };
    let dir = resolved.out.clone();
    let files: Vec<FileRecord> = output::write_tables(&dir, &tables).map_err(io_err(&dir))?;
    let manifest = RunManifest {
        artifact: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp,
        duration_seconds: started.elapsed().as_secs_f64(),
        parameters: resolved.document.clone(),
        failed_points: files.iter().map(|f| f.failed_rows).sum(),
        files,
        notes,
    };
    let path = dir.join(RunManifest::FILE_NAME);
    output::write_manifest(&dir, &manifest).map_err(io_err(&path))?;
    Ok(RunOutcome { out_dir: dir, manifest })
}

/// Re-resolves the parameters recorded in a manifest, optionally redirecting
/// the output.
pub fn resolve_manifest(path: &Path, out: Option<PathBuf>) -> Result<Resolved, RunError> {
    let manifest = output::read_manifest(path).map_err(|m| config::ConfigError { line: None, key: None, message: m })?;
    let mut doc = manifest.parameters;
    if out.is_some() {
        doc.out = out;
    }
    Ok(config::resolve(&doc, None)?)
}
