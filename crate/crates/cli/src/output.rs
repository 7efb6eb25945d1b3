//! Artifact layout of one experiment directory.
//!
//! ```text
//! manifest.json   kind, studies, files, completion flag
//! runs.jsonl      one record per run, tagged with its study label
//! summary.csv     one row per study
//! boxplot.csv     five-number summary, whiskers and outliers per study
//! histogram.csv   binned error rates per arm (histogram experiments)
//! cost.csv        ensemble-averaged energetic costs (cost-compare)
//! timing.csv      wall time per run; the only non-reproducible file
//! traces/*.csv    t, P(t), F[P(t)], phi_ext(t) of the best pulse per study
//! ```

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use pbvqo::study::{histogram, RunRecord, StudyMetadata, StudyResult};
use pbvqo::workflows::CostComparison;

use crate::CliError;

pub const MANIFEST: &str = "manifest.json";
pub const RUNS: &str = "runs.jsonl";
pub const SUMMARY: &str = "summary.csv";
pub const BOXPLOT: &str = "boxplot.csv";
pub const HISTOGRAM: &str = "histogram.csv";
pub const COST: &str = "cost.csv";
pub const TIMING: &str = "timing.csv";
pub const TRACES: &str = "traces";

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

/// One line of `runs.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistedRun {
    pub study: String,
    #[serde(flatten)]
    pub record: RunRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub bins: usize,
    pub range: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: String,
    pub name: String,
    pub seed: u64,
    pub complete: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub studies: Vec<StudyMetadata>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histogram: Option<HistogramSpec>,
    pub files: Vec<String>,
    pub generator: String,
}

/// Single owner of an output directory; records are only ever appended.
pub struct ResultWriter {
    dir: PathBuf,
    manifest: Manifest,
    studies: Vec<StudyResult>,
}

impl ResultWriter {
    /// Creates the directory and truncates previous run and timing files.
    pub fn create(dir: &Path, kind: &str, name: &str, seed: u64) -> Result<Self, CliError> {
        fs::create_dir_all(dir.join(TRACES)).map_err(|e| io_err(dir, e))?;
        for f in [RUNS, TIMING] {
            File::create(dir.join(f)).map_err(|e| io_err(&dir.join(f), e))?;
        }
        let writer = Self {
            dir: dir.to_path_buf(),
            manifest: Manifest {
                kind: kind.to_owned(),
                name: name.to_owned(),
                seed,
                complete: false,
                error: None,
                studies: Vec::new(),
                histogram: None,
                files: vec![RUNS.to_owned(), TIMING.to_owned()],
                generator: format!("pbvqo {}", env!("CARGO_PKG_VERSION")),
            },
            studies: Vec::new(),
        };
        writer.write_manifest()?;
        Ok(writer)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn studies(&self) -> &[StudyResult] {
        &self.studies
    }

    fn add_file(&mut self, name: String) {
        if !self.manifest.files.contains(&name) {
            self.manifest.files.push(name);
        }
    }

    fn write_manifest(&self) -> Result<(), CliError> {
        let path = self.dir.join(MANIFEST);
        let text = serde_json::to_string_pretty(&self.manifest).map_err(|e| io_err(&path, e))?;
        fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))
    }

    /// Appends the study's runs and refreshes every summary table.
    pub fn push_study(&mut self, study: StudyResult) -> Result<(), CliError> {
        let runs_path = self.dir.join(RUNS);
        let timing_path = self.dir.join(TIMING);
        let mut runs = BufWriter::new(
            OpenOptions::new().append(true).open(&runs_path).map_err(|e| io_err(&runs_path, e))?,
        );
        let mut timing = BufWriter::new(
            OpenOptions::new().append(true).open(&timing_path).map_err(|e| io_err(&timing_path, e))?,
        );
        let label = &study.metadata.label;
        for r in &study.runs {
            let mut record = r.clone();
            if let Some(t) = record.wall_time_s.take() {
                writeln!(timing, "{label},{},{t}", record.run_id).map_err(|e| io_err(&timing_path, e))?;
            }
            let line = serde_json::to_string(&PersistedRun {
                study: label.clone(),
                record,
            })
            .map_err(|e| io_err(&runs_path, e))?;
            writeln!(runs, "{line}").map_err(|e| io_err(&runs_path, e))?;
        }
        runs.flush().map_err(|e| io_err(&runs_path, e))?;
        timing.flush().map_err(|e| io_err(&timing_path, e))?;
        self.manifest.studies.push(study.metadata.clone());
        self.studies.push(study);
        write_tables(&self.dir, &self.studies)?;
        self.add_file(SUMMARY.to_owned());
        self.add_file(BOXPLOT.to_owned());
        self.write_manifest()
    }

    pub fn write_histogram(&mut self, bins: usize, range: (f64, f64)) -> Result<(), CliError> {
        write_histogram(&self.dir, &self.studies, bins, range)?;
        self.manifest.histogram = Some(HistogramSpec { bins, range });
        self.add_file(HISTOGRAM.to_owned());
        self.write_manifest()
    }

    pub fn write_cost(&mut self, cost: &CostComparison) -> Result<(), CliError> {
        write_cost(&self.dir, cost)?;
        self.add_file(COST.to_owned());
        self.write_manifest()
    }

    pub fn write_trace(&mut self, stem: &str, rows: &[crate::trace::TraceRow]) -> Result<(), CliError> {
        let rel = format!("{TRACES}/{stem}.csv");
        crate::trace::write_trace(&self.dir.join(&rel), rows)?;
        self.add_file(rel);
        self.write_manifest()
    }

    pub fn finish(mut self) -> Result<PathBuf, CliError> {
        self.manifest.complete = true;
        self.write_manifest()?;
        Ok(self.dir)
    }

    /// Leaves everything written so far and marks the directory incomplete.
    pub fn abort(mut self, error: &CliError) -> Result<(), CliError> {
        self.manifest.error = Some(error.to_string());
        self.write_manifest()
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>, CliError> {
    csv::Writer::from_path(path).map_err(|e| io_err(path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// `summary.csv` and `boxplot.csv` from the studies alone.
pub fn write_tables(dir: &Path, studies: &[StudyResult]) -> Result<(), CliError> {
    let path = dir.join(SUMMARY);
    let mut w = csv_writer(&path)?;
    w.write_record([
        "study", "n_qubits", "duration", "depth", "optimizer", "n_runs", "n_failed", "min", "q1", "median", "q3",
        "max", "mean", "mean_energetic_cost",
    ])
    .map_err(|e| io_err(&path, e))?;
    for s in studies {
        let m = &s.metadata;
        let failed = s.runs.iter().filter(|r| !r.succeeded()).count();
        let stats = s.summary.as_ref();
        let f = |g: fn(&pbvqo::study::Summary) -> f64| opt(stats.map(g));
        w.write_record([
            m.label.clone(),
            m.n_qubits.to_string(),
            opt(m.duration),
            m.depth.map_or_else(String::new, |d| d.to_string()),
            m.optimizer.clone(),
            s.runs.len().to_string(),
            failed.to_string(),
            f(|s| s.min),
            f(|s| s.q1),
            f(|s| s.median),
            f(|s| s.q3),
            f(|s| s.max),
            f(|s| s.mean),
            opt(s.mean_energetic_cost()),
        ])
        .map_err(|e| io_err(&path, e))?;
    }
    w.flush().map_err(|e| io_err(&path, e))?;

    let path = dir.join(BOXPLOT);
    let mut w = csv_writer(&path)?;
    w.write_record([
        "study", "duration", "min", "q1", "median", "q3", "max", "whisker_low", "whisker_high", "best", "outliers",
    ])
    .map_err(|e| io_err(&path, e))?;
    for s in studies {
        let Some(b) = &s.summary else { continue };
        let outliers = b.outliers.iter().map(f64::to_string).collect::<Vec<_>>().join(";");
        w.write_record([
            s.metadata.label.clone(),
            opt(s.metadata.duration),
            b.min.to_string(),
            b.q1.to_string(),
            b.median.to_string(),
            b.q3.to_string(),
            b.max.to_string(),
            b.whisker_low.to_string(),
            b.whisker_high.to_string(),
            b.min.to_string(),
            outliers,
        ])
        .map_err(|e| io_err(&path, e))?;
    }
    w.flush().map_err(|e| io_err(&path, e))
}

/// Bins as rows, one count column per study.
pub fn write_histogram(dir: &Path, studies: &[StudyResult], bins: usize, range: (f64, f64)) -> Result<(), CliError> {
    let path = dir.join(HISTOGRAM);
    let mut w = csv_writer(&path)?;
    let mut header = vec!["bin_lo".to_owned(), "bin_hi".to_owned()];
    header.extend(studies.iter().map(|s| s.metadata.label.clone()));
    w.write_record(&header).map_err(|e| io_err(&path, e))?;
    let counts: Vec<Vec<usize>> = studies
        .iter()
        .map(|s| histogram(&s.error_rates(), bins, range.0, range.1))
        .collect();
    let width = (range.1 - range.0) / bins as f64;
    for k in 0..bins {
        let mut row = vec![
            (range.0 + k as f64 * width).to_string(),
            if k + 1 == bins { range.1 } else { range.0 + (k + 1) as f64 * width }.to_string(),
        ];
        row.extend(counts.iter().map(|c| c[k].to_string()));
        w.write_record(&row).map_err(|e| io_err(&path, e))?;
    }
    w.flush().map_err(|e| io_err(&path, e))
}

pub fn write_cost(dir: &Path, cost: &CostComparison) -> Result<(), CliError> {
    let path = dir.join(COST);
    let mut w = csv_writer(&path)?;
    w.write_record(["c_pbvqo", "c_qaoa", "ratio"]).map_err(|e| io_err(&path, e))?;
    w.write_record([cost.c_pbvqo.to_string(), cost.c_qaoa.to_string(), cost.ratio.to_string()])
        .map_err(|e| io_err(&path, e))?;
    w.flush().map_err(|e| io_err(&path, e))
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, CliError> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(&path, e))
}

pub fn read_runs(dir: &Path) -> Result<Vec<PersistedRun>, CliError> {
    let path = dir.join(RUNS);
    let file = File::open(&path).map_err(|e| io_err(&path, e))?;
    BufReader::new(file)
        .lines()
        .enumerate()
        .filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
        .map(|(i, line)| {
            let line = line.map_err(|e| io_err(&path, e))?;
            serde_json::from_str(&line).map_err(|e| io_err(&path, format!("line {}: {e}", i + 1)))
        })
        .collect()
}

/// Rebuilds every study of a directory from its manifest and run records.
pub fn load_studies(dir: &Path) -> Result<(Manifest, Vec<StudyResult>), CliError> {
    let manifest = read_manifest(dir)?;
    let mut runs = read_runs(dir)?;
    let studies = manifest
        .studies
        .iter()
        .map(|meta| {
            let mine: Vec<RunRecord> = runs
                .iter_mut()
                .filter(|r| r.study == meta.label)
                .map(|r| r.record.clone())
                .collect();
            StudyResult::new(meta.clone(), mine)
        })
        .collect();
    Ok((manifest, studies))
}
