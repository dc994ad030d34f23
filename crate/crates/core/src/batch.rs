//! Directory-level processing.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::pipeline::{detect_file, file_stem, write_artifacts};
use crate::report::DetectionReport;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchFailure {
    pub image: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub image_count: usize,
    pub succeeded: usize,
    pub failed: usize,
    pub total_contours: usize,
    pub reports: Vec<DetectionReport>,
    pub failures: Vec<BatchFailure>,
}

impl BatchSummary {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| Error::InvalidParameter(format!("summary serialization: {e}")))?;
        s.push('\n');
        Ok(s)
    }
}

/// PNG files directly inside `dir`, sorted by file name.
pub fn list_pngs(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(Error::FileNotFound(dir.to_path_buf()));
    }
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let is_png = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if is_png && path.is_file() {
            paths.push(path);
        }
    }
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(paths)
}

/// Runs the pipeline over every PNG in `dir`, writing artifacts and
/// `summary.json` into `out_dir`. Per-image failures are collected, not
/// propagated. `jobs` of 0 uses all cores.
pub fn run_batch(
    dir: &Path,
    cfg: &PipelineConfig,
    out_dir: &Path,
    jobs: usize,
) -> Result<BatchSummary> {
    cfg.validate()?;
    let paths = list_pngs(dir)?;
    if paths.is_empty() {
        return Err(Error::EmptyDirectory(dir.to_path_buf()));
    }
    std::fs::create_dir_all(out_dir)?;

    let process = |path: &PathBuf| -> Result<DetectionReport> {
        let stem = file_stem(path)?;
        let out = detect_file(path, cfg)?;
        write_artifacts(out_dir, &stem, &out, &cfg.output)?;
        Ok(out.report)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let results: Vec<Result<DetectionReport>> =
        pool.install(|| paths.par_iter().map(process).collect());

    let mut summary = BatchSummary {
        image_count: paths.len(),
        succeeded: 0,
        failed: 0,
        total_contours: 0,
        reports: Vec::new(),
        failures: Vec::new(),
    };
    for (path, result) in paths.iter().zip(results) {
        match result {
            Ok(report) => {
                summary.succeeded += 1;
                summary.total_contours += report.contours.len();
                summary.reports.push(report);
            }
            Err(e) => {
                summary.failed += 1;
                summary.failures.push(BatchFailure {
                    image: path.display().to_string(),
                    error: e.to_string(),
                });
            }
        }
    }
    std::fs::write(out_dir.join("summary.json"), summary.to_json()?)?;
    Ok(summary)
}
