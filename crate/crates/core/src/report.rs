//! CSV and JSON output for path runs.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reports
//! are byte-identical for identical runs.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::pipeline::{PathConstants, PathRun, PathSample, Stage};

pub const CSV_HEADER: &str = "stage,param,min_ricci_eig,max_II_eig,pass";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = GeomError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            o => Err(GeomError::Format(o.to_string())),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub stage: Stage,
    pub param: f64,
    pub min_ricci_eig: f64,
    #[serde(rename = "max_II_eig")]
    pub max_ii_eig: f64,
    pub tol: f64,
    pub pass: bool,
}

impl From<&PathSample> for SampleRow {
    fn from(s: &PathSample) -> Self {
        SampleRow {
            stage: s.stage,
            param: s.param,
            min_ricci_eig: s.verdict.min_ricci_eig,
            max_ii_eig: s.verdict.max_ii_eig,
            tol: s.verdict.tol,
            pass: s.verdict.pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub stage: Stage,
    pub samples: usize,
    pub passed: usize,
    pub min_ricci_eig: f64,
    #[serde(rename = "max_II_eig")]
    pub max_ii_eig: f64,
    pub max_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub profile: String,
    pub version: String,
    pub constants: PathConstants,
    pub samples: usize,
    pub all_pass: bool,
    pub stages: Vec<StageSummary>,
}

impl Manifest {
    pub fn new(profile: &str, run: &PathRun) -> Self {
        let mut stages: Vec<StageSummary> = Vec::new();
        for s in &run.samples {
            if stages.last().map(|l| l.stage) != Some(s.stage) {
                stages.push(StageSummary {
                    stage: s.stage,
                    samples: 0,
                    passed: 0,
                    min_ricci_eig: f64::INFINITY,
                    max_ii_eig: f64::NEG_INFINITY,
                    max_tol: 0.0,
                });
            }
            let l = stages.last_mut().expect("just pushed");
            l.samples += 1;
            l.passed += s.verdict.pass as usize;
            l.min_ricci_eig = l.min_ricci_eig.min(s.verdict.min_ricci_eig);
            l.max_ii_eig = l.max_ii_eig.max(s.verdict.max_ii_eig);
            l.max_tol = l.max_tol.max(s.verdict.tol);
        }
        Manifest {
            profile: profile.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            constants: run.constants,
            samples: run.samples.len(),
            all_pass: run.all_pass(),
            stages,
        }
    }
}

pub fn write_csv<W: Write>(samples: &[PathSample], mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for s in samples {
        let v = &s.verdict;
        writeln!(out, "{},{},{},{},{}", s.stage, s.param, v.min_ricci_eig, v.max_ii_eig, v.pass)?;
    }
    Ok(())
}

/// Write the sample table (`report.csv` or `report.json`) and `manifest.json`
/// into `dir`, returning the paths written.
pub fn emit_report(run: &PathRun, profile: &str, format: ReportFormat, dir: &Path) -> Result<Vec<PathBuf>> {
    if run.samples.is_empty() {
        return Err(GeomError::Parameter("no samples to report".into()));
    }
    fs::create_dir_all(dir)?;
    let table = dir.join(format!("report.{format}"));
    match format {
        ReportFormat::Csv => {
            let mut buf = Vec::new();
            write_csv(&run.samples, &mut buf)?;
            fs::write(&table, buf)?;
        }
        ReportFormat::Json => {
            let rows: Vec<SampleRow> = run.samples.iter().map(SampleRow::from).collect();
            fs::write(&table, serde_json::to_string_pretty(&rows)? + "\n")?;
        }
    }
    let manifest = dir.join("manifest.json");
    fs::write(&manifest, serde_json::to_string_pretty(&Manifest::new(profile, run))? + "\n")?;
    Ok(vec![table, manifest])
}
