//! Experiment configuration files (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use pbvqo::hamiltonians::{HardwareModel, ProblemGraph};
use pbvqo::optimizers::{BfgsOptions, GaConfig};
use pbvqo::parallel::Execution;
use pbvqo::simulator::{EvolutionConfig, StepSize};
use pbvqo::workflows::{PbvqoProblem, RunOptions, DEFAULT_QAOA_TOTAL_TIME};

use crate::CliError;

/// Root for output directories when a config names none.
pub const OUT_ROOT_ENV: &str = "PBVQO_OUT_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    PbvqoSweep,
    Meta,
    Histogram,
    Qaoa,
    CostCompare,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::PbvqoSweep => "pbvqo-sweep",
            ExperimentKind::Meta => "meta",
            ExperimentKind::Histogram => "histogram",
            ExperimentKind::Qaoa => "qaoa",
            ExperimentKind::CostCompare => "cost-compare",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub problem: ProblemSection,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub bfgs: BfgsOptions,
    #[serde(default)]
    pub ga: GaSection,
    #[serde(default)]
    pub sampling: SamplingSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemSection {
    pub n_qubits: usize,
    /// Single pulse duration, used unless `durations` is given.
    pub duration: f64,
    /// Duration sweep (pbvqo-sweep only).
    pub durations: Option<Vec<f64>>,
    pub ansatz_size: usize,
    pub omega: f64,
    pub coupling_bound: f64,
    /// Integration steps per pulse; ignored when `dt` is set.
    pub divisions: usize,
    pub dt: Option<f64>,
    /// Easy problem size for meta-learning.
    pub easy_n_qubits: usize,
    pub allow_any_easy_size: bool,
    /// QAOA depth p.
    pub depth: usize,
    /// Protocol time of the whole QAOA circuit in the cost model.
    pub qaoa_total_time: f64,
}

impl Default for ProblemSection {
    fn default() -> Self {
        Self {
            n_qubits: 8,
            duration: 5.0,
            durations: None,
            ansatz_size: 3,
            omega: 6.0,
            coupling_bound: 1.0,
            divisions: 1000,
            dt: None,
            easy_n_qubits: 2,
            allow_any_easy_size: false,
            depth: 3,
            qaoa_total_time: DEFAULT_QAOA_TOTAL_TIME,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSection {
    /// Random restarts per study (sweep, qaoa, cost-compare).
    pub n_restarts: usize,
    /// Transfers for meta, runs per arm for histogram.
    pub n_runs: usize,
    pub execution: Execution,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self {
            n_restarts: 50,
            n_runs: 30,
            execution: Execution::default(),
        }
    }
}

/// GA settings; bounds follow the sampling box and the seed comes from the
/// transfer seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaSection {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub mutation_scale: f64,
    pub elitism_count: usize,
}

impl Default for GaSection {
    fn default() -> Self {
        let d = GaConfig::for_pulse(1, 0);
        Self {
            population_size: d.population_size,
            generations: d.generations,
            crossover_rate: d.crossover_rate,
            mutation_rate: d.mutation_rate,
            mutation_scale: d.mutation_scale,
            elitism_count: d.elitism_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingSection {
    pub amplitude_range: (f64, f64),
    pub phase_range: (f64, f64),
    pub qaoa_angle_max: f64,
}

impl Default for SamplingSection {
    fn default() -> Self {
        let d = RunOptions::default();
        Self {
            amplitude_range: d.amplitude_range,
            phase_range: d.phase_range,
            qaoa_angle_max: d.qaoa_angle_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Points per exported pulse trace.
    pub trace_samples: usize,
    pub histogram_bins: usize,
    /// Error-rate range of the histogram; values outside land in the end bins.
    pub histogram_range: (f64, f64),
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            trace_samples: 501,
            histogram_bins: 20,
            histogram_range: (0.0, 1.0),
        }
    }
}

fn invalid(field: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{field}: {reason}"))
}

/// Turns a library error into a diagnostic under `section`.
fn scoped(section: &str) -> impl Fn(pbvqo::Error) -> CliError + '_ {
    move |e| match e {
        pbvqo::Error::InvalidArgument { field, reason } => invalid(&format!("{section}.{field}"), reason),
        other => invalid(section, other),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let config: Self = toml::from_str(text).map_err(|e| CliError::Validation(e.to_string().trim_end().to_owned()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Validation(msg) => CliError::Validation(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.kind.as_str().to_owned())
    }

    /// `out_dir`, else `$PBVQO_OUT_ROOT/<name>`, else `pbvqo-out/<name>`.
    pub fn resolved_out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| {
            let root = std::env::var_os(OUT_ROOT_ENV).map_or_else(|| PathBuf::from("pbvqo-out"), PathBuf::from);
            root.join(self.name())
        })
    }

    pub fn durations(&self) -> Vec<f64> {
        self.problem.durations.clone().unwrap_or_else(|| vec![self.problem.duration])
    }

    pub fn evolution(&self) -> EvolutionConfig {
        let mut e = EvolutionConfig::with_divisions(self.problem.divisions);
        if let Some(dt) = self.problem.dt {
            e.time_step = StepSize::Fixed(dt);
        }
        e
    }

    pub fn pbvqo_problem(&self, n_qubits: usize, duration: f64) -> Result<PbvqoProblem, CliError> {
        let p = &self.problem;
        let model = HardwareModel::uniform(n_qubits, p.omega, p.coupling_bound).map_err(scoped("problem"))?;
        let graph = ProblemGraph::ring(n_qubits).map_err(scoped("problem"))?;
        PbvqoProblem::new(model, graph, p.ansatz_size, duration, self.evolution()).map_err(scoped("problem"))
    }

    pub fn hard_problem(&self) -> Result<PbvqoProblem, CliError> {
        self.pbvqo_problem(self.problem.n_qubits, self.problem.duration)
    }

    pub fn easy_problem(&self) -> Result<PbvqoProblem, CliError> {
        self.pbvqo_problem(self.problem.easy_n_qubits, self.problem.duration)
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            bfgs: self.bfgs,
            amplitude_range: self.sampling.amplitude_range,
            phase_range: self.sampling.phase_range,
            qaoa_angle_max: self.sampling.qaoa_angle_max,
            execution: self.ensemble.execution,
            allow_any_easy_size: self.problem.allow_any_easy_size,
        }
    }

    pub fn ga_config(&self) -> GaConfig {
        let g = &self.ga;
        let n = self.problem.ansatz_size;
        let mut bounds = vec![self.sampling.amplitude_range; n];
        bounds.extend(std::iter::repeat_n(self.sampling.phase_range, n));
        GaConfig {
            population_size: g.population_size,
            generations: g.generations,
            crossover_rate: g.crossover_rate,
            mutation_rate: g.mutation_rate,
            mutation_scale: g.mutation_scale,
            elitism_count: g.elitism_count,
            bounds,
            seed: self.seed,
        }
    }

    /// Checks every field the selected workflow will touch.
    pub fn validate(&self) -> Result<(), CliError> {
        let p = &self.problem;
        if p.n_qubits < 2 {
            return Err(invalid("problem.n_qubits", format!("{} is below the 2-qubit minimum", p.n_qubits)));
        }
        if p.ansatz_size == 0 {
            return Err(invalid("problem.ansatz_size", "must be positive"));
        }
        if p.divisions == 0 {
            return Err(invalid("problem.divisions", "must be positive"));
        }
        if let Some(dt) = p.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(invalid("problem.dt", format!("{dt} is not a positive step")));
            }
        }
        if p.durations.is_some() && self.kind != ExperimentKind::PbvqoSweep {
            return Err(invalid("problem.durations", "only a pbvqo-sweep takes a duration list"));
        }
        if p.durations.as_ref().is_some_and(|d| d.is_empty()) {
            return Err(invalid("problem.durations", "must not be empty"));
        }
        for t in self.durations() {
            self.pbvqo_problem(p.n_qubits, t)?;
        }
        if matches!(self.kind, ExperimentKind::Meta | ExperimentKind::Histogram) {
            if p.easy_n_qubits < 2 {
                return Err(invalid("problem.easy_n_qubits", "must be at least 2"));
            }
            if p.easy_n_qubits != 2 && !p.allow_any_easy_size {
                return Err(invalid(
                    "problem.easy_n_qubits",
                    "only the 2-qubit easy problem is enabled; set allow_any_easy_size = true",
                ));
            }
            self.easy_problem()?;
            self.ga_config().validate().map_err(scoped("ga"))?;
        }
        if matches!(self.kind, ExperimentKind::Qaoa | ExperimentKind::CostCompare) {
            if p.depth == 0 {
                return Err(invalid("problem.depth", "must be at least 1"));
            }
            if !(p.qaoa_total_time > 0.0 && p.qaoa_total_time.is_finite()) {
                return Err(invalid("problem.qaoa_total_time", "must be positive"));
            }
        }
        let e = &self.ensemble;
        if e.n_restarts == 0 {
            return Err(invalid("ensemble.n_restarts", "must be at least 1"));
        }
        if e.n_runs == 0 {
            return Err(invalid("ensemble.n_runs", "must be at least 1"));
        }
        if self.kind == ExperimentKind::Histogram && e.n_runs < pbvqo::workflows::MIN_HISTOGRAM_RUNS {
            return Err(invalid(
                "ensemble.n_runs",
                format!("a histogram needs at least {} runs per arm", pbvqo::workflows::MIN_HISTOGRAM_RUNS),
            ));
        }
        self.run_options().validate().map_err(|err| match err {
            pbvqo::Error::InvalidArgument { field, reason } => {
                let section = if field.contains("range") || field == "qaoa_angle_max" { "sampling" } else { "bfgs" };
                invalid(&format!("{section}.{field}"), reason)
            }
            other => invalid("bfgs", other),
        })?;
        let o = &self.output;
        if o.trace_samples < 2 {
            return Err(invalid("output.trace_samples", "need at least 2 samples"));
        }
        if o.histogram_bins == 0 {
            return Err(invalid("output.histogram_bins", "must be positive"));
        }
        let (lo, hi) = o.histogram_range;
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(invalid("output.histogram_range", format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(())
    }
}
