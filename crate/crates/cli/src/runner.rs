//! Runs one configured experiment into its output directory.

use std::path::{Path, PathBuf};

use pbvqo::study::StudyResult;
use pbvqo::workflows::{
    compare_energetic_cost, histogram_study, meta_learn_ensemble, run_pbvqo, run_qaoa, sweep_duration, EasySolver,
    PbvqoProblem,
};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::output::{self, ResultWriter};
use crate::trace::export_pulse_trace;
use crate::CliError;

fn runtime(e: pbvqo::Error) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Writes the best run's pulse, and for transfers the easy optimum it started from.
fn write_best_traces(
    writer: &mut ResultWriter,
    study: &StudyResult,
    hard: &PbvqoProblem,
    easy: Option<&PbvqoProblem>,
    samples: usize,
) -> Result<(), CliError> {
    let Some(best) = study.best_run() else { return Ok(()) };
    let stem = study.metadata.label.replace(['/', '\\'], "_");
    let rows = export_pulse_trace(&best.final_params, hard, samples)?;
    writer.write_trace(&stem, &rows)?;
    if let (Some(easy), Some(t)) = (easy, &best.transfer) {
        let rows = export_pulse_trace(&t.easy_params, easy, samples)?;
        writer.write_trace(&format!("{stem}-easy"), &rows)?;
    }
    Ok(())
}

fn execute(config: &ExperimentConfig, writer: &mut ResultWriter) -> Result<(), CliError> {
    let seed = config.seed;
    let opts = config.run_options();
    let ens = &config.ensemble;
    let samples = config.output.trace_samples;
    match config.kind {
        ExperimentKind::PbvqoSweep => {
            let template = config.hard_problem()?;
            for t in config.durations() {
                let study = sweep_duration(&template, &[t], ens.n_restarts, seed, &opts)
                    .map_err(runtime)?
                    .remove(0);
                let problem = template.with_duration(t).map_err(runtime)?;
                write_best_traces(writer, &study, &problem, None, samples)?;
                writer.push_study(study)?;
            }
        }
        ExperimentKind::Meta => {
            let (easy, hard) = (config.easy_problem()?, config.hard_problem()?);
            let solver = EasySolver::Ga(config.ga_config());
            let study = meta_learn_ensemble(&easy, &hard, &solver, ens.n_runs, seed, &opts).map_err(runtime)?;
            write_best_traces(writer, &study, &hard, Some(&easy), samples)?;
            writer.push_study(study)?;
        }
        ExperimentKind::Histogram => {
            let (easy, hard) = (config.easy_problem()?, config.hard_problem()?);
            let result =
                histogram_study(&easy, &hard, &config.ga_config(), ens.n_runs, seed, &opts).map_err(runtime)?;
            for study in [result.baseline, result.meta_bfgs, result.meta_ga] {
                write_best_traces(writer, &study, &hard, Some(&easy), samples)?;
                writer.push_study(study)?;
            }
            writer.write_histogram(config.output.histogram_bins, config.output.histogram_range)?;
        }
        ExperimentKind::Qaoa => {
            let hard = config.hard_problem()?;
            let p = &config.problem;
            let study = run_qaoa(hard.graph(), p.depth, ens.n_restarts, seed, p.qaoa_total_time, &opts)
                .map_err(runtime)?;
            writer.push_study(study)?;
        }
        ExperimentKind::CostCompare => {
            let hard = config.hard_problem()?;
            let p = &config.problem;
            let pulse = run_pbvqo(&hard, ens.n_restarts, seed, &opts).map_err(runtime)?;
            write_best_traces(writer, &pulse, &hard, None, samples)?;
            writer.push_study(pulse)?;
            let qaoa = run_qaoa(hard.graph(), p.depth, ens.n_restarts, seed, p.qaoa_total_time, &opts)
                .map_err(runtime)?;
            writer.push_study(qaoa)?;
            let [pulse, qaoa] = [&writer.studies()[0], &writer.studies()[1]];
            let cost = compare_energetic_cost(pulse, qaoa).map_err(runtime)?;
            writer.write_cost(&cost)?;
        }
    }
    Ok(())
}

/// Validates, then runs the experiment. On failure the directory keeps every
/// completed study and the manifest records the error.
pub fn run_experiment(config: &ExperimentConfig) -> Result<PathBuf, CliError> {
    config.validate()?;
    let dir = config.resolved_out_dir();
    let mut writer = ResultWriter::create(&dir, config.kind.as_str(), &config.name(), config.seed)?;
    match execute(config, &mut writer) {
        Ok(()) => writer.finish(),
        Err(e) => {
            writer.abort(&e)?;
            Err(e)
        }
    }
}

/// Recomputes the summary tables of `dir` from its run records. With `check`
/// the existing tables are compared instead of overwritten.
pub fn report(dir: &Path, check: bool) -> Result<Vec<String>, CliError> {
    let (manifest, studies) = output::load_studies(dir)?;
    let scratch;
    let target = if check {
        scratch = tempdir_in(dir)?;
        scratch.as_path()
    } else {
        dir
    };
    output::write_tables(target, &studies)?;
    let mut tables = vec![output::SUMMARY, output::BOXPLOT];
    if let Some(h) = &manifest.histogram {
        output::write_histogram(target, &studies, h.bins, h.range)?;
        tables.push(output::HISTOGRAM);
    }
    if manifest.kind == ExperimentKind::CostCompare.as_str() && studies.len() == 2 {
        let cost = compare_energetic_cost(&studies[0], &studies[1]).map_err(runtime)?;
        output::write_cost(target, &cost)?;
        tables.push(output::COST);
    }
    let mut mismatched = Vec::new();
    if check {
        for t in &tables {
            let fresh = std::fs::read(target.join(t)).map_err(|e| CliError::Runtime(e.to_string()))?;
            if std::fs::read(dir.join(t)).ok().as_deref() != Some(fresh.as_slice()) {
                mismatched.push(t.to_string());
            }
        }
        std::fs::remove_dir_all(target).map_err(|e| CliError::Runtime(e.to_string()))?;
        if !mismatched.is_empty() {
            return Err(CliError::Runtime(format!("stale tables: {}", mismatched.join(", "))));
        }
    }
    Ok(tables.into_iter().map(str::to_owned).collect())
}

fn tempdir_in(dir: &Path) -> Result<PathBuf, CliError> {
    let path = dir.join(".report-check");
    std::fs::create_dir_all(&path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    Ok(path)
}
