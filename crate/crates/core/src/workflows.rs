//! End-to-end pipelines: single PBVQO ensembles, duration sweeps, GA
//! meta-learning transfer, the three-arm histogram study, the QAOA baseline
//! and the energetic-cost comparison.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{
    ground_energy, mixer_hamiltonian, problem_hamiltonian, qaoa_problem_hamiltonian, HardwareModel,
    HermitianOperator, ProblemGraph,
};
use crate::optimizers::{bfgs_minimize, ga_minimize, BfgsOptions, GaConfig, OptimizerReport, ParameterVector};
use crate::parallel::{derive_seed, map_indexed, Execution};
use crate::pulses::{PulseAnsatz, DEFAULT_ANSATZ_TERMS};
use crate::simulator::{
    energetic_cost, error_rate, initial_state, EvolutionConfig, HamiltonianSchedule, PbvqoPropagator,
    PbvqoSchedule, ReducedObservable, StateVector,
};
use crate::study::{RunRecord, StudyMetadata, StudyResult, TransferProvenance};

pub const DEFAULT_OMEGA: f64 = 6.0;
pub const DEFAULT_COUPLING_BOUND: f64 = 1.0;
pub const DEFAULT_DURATION: f64 = 5.0;

/// Easy-problem error rate below which a transfer counts as solved.
pub const EASY_SOLVED_THRESHOLD: f64 = 0.05;

/// MAX-CUT on a ring encoded in a driven hardware ring of the same size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PbvqoProblem {
    model: HardwareModel,
    graph: ProblemGraph,
    ansatz_size: usize,
    duration: f64,
    evolution: EvolutionConfig,
}

impl PbvqoProblem {
    pub fn new(
        model: HardwareModel,
        graph: ProblemGraph,
        ansatz_size: usize,
        duration: f64,
        evolution: EvolutionConfig,
    ) -> Result<Self> {
        if graph.n_nodes() != model.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: model.n_qubits(),
                actual: graph.n_nodes(),
            });
        }
        if ansatz_size == 0 {
            return Err(Error::invalid("ansatz_size", "must be positive"));
        }
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::invalid("duration", format!("{duration} is not a positive time")));
        }
        evolution.validate()?;
        Ok(Self {
            model,
            graph,
            ansatz_size,
            duration,
            evolution,
        })
    }

    /// Uniform ring with `omega = 6`, `G = 1`, three harmonics and `T = 5`.
    pub fn ring(n_qubits: usize) -> Result<Self> {
        Self::new(
            HardwareModel::uniform(n_qubits, DEFAULT_OMEGA, DEFAULT_COUPLING_BOUND)?,
            ProblemGraph::ring(n_qubits)?,
            DEFAULT_ANSATZ_TERMS,
            DEFAULT_DURATION,
            EvolutionConfig::default(),
        )
    }

    pub fn with_duration(&self, duration: f64) -> Result<Self> {
        Self::new(
            self.model.clone(),
            self.graph.clone(),
            self.ansatz_size,
            duration,
            self.evolution,
        )
    }

    pub fn with_evolution(&self, evolution: EvolutionConfig) -> Result<Self> {
        Self::new(self.model.clone(), self.graph.clone(), self.ansatz_size, self.duration, evolution)
    }

    pub fn with_ansatz_size(&self, ansatz_size: usize) -> Result<Self> {
        Self::new(self.model.clone(), self.graph.clone(), ansatz_size, self.duration, self.evolution)
    }

    pub fn model(&self) -> &HardwareModel {
        &self.model
    }

    pub fn graph(&self) -> &ProblemGraph {
        &self.graph
    }

    pub fn n_qubits(&self) -> usize {
        self.model.n_qubits()
    }

    pub fn ansatz_size(&self) -> usize {
        self.ansatz_size
    }

    pub fn n_params(&self) -> usize {
        2 * self.ansatz_size
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn evolution(&self) -> &EvolutionConfig {
        &self.evolution
    }

    pub fn problem_hamiltonian(&self) -> Result<HermitianOperator> {
        problem_hamiltonian(&self.graph)
    }

    pub fn ground_energy(&self) -> Result<f64> {
        Ok(ground_energy(&self.problem_hamiltonian()?))
    }

    pub fn ansatz(&self, params: &[f64]) -> Result<PulseAnsatz> {
        if params.len() != self.n_params() {
            return Err(Error::DimensionMismatch {
                expected: self.n_params(),
                actual: params.len(),
            });
        }
        PulseAnsatz::from_flat(params, self.duration)
    }

    pub fn evaluator(&self) -> Result<PbvqoEvaluator> {
        PbvqoEvaluator::new(self)
    }

    /// Time-averaged Frobenius norm of drift plus filtered coupling.
    pub fn energetic_cost(&self, params: &[f64]) -> Result<f64> {
        let schedule = PbvqoSchedule::new(&self.model, self.ansatz(params)?)?;
        energetic_cost(&schedule, self.duration, &self.evolution)
    }
}

/// Reusable energy evaluator for one problem; the dynamical subspace and the
/// projected observable are computed once.
#[derive(Debug, Clone)]
pub struct PbvqoEvaluator {
    problem: PbvqoProblem,
    propagator: PbvqoPropagator,
    observable: ReducedObservable,
    ground_energy: f64,
}

impl PbvqoEvaluator {
    pub fn new(problem: &PbvqoProblem) -> Result<Self> {
        let propagator = PbvqoPropagator::new(&problem.model, &initial_state(problem.n_qubits())?)?;
        let hp = problem.problem_hamiltonian()?;
        Ok(Self {
            observable: propagator.observable(&hp)?,
            ground_energy: ground_energy(&hp),
            propagator,
            problem: problem.clone(),
        })
    }

    pub fn problem(&self) -> &PbvqoProblem {
        &self.problem
    }

    pub fn ground_energy(&self) -> f64 {
        self.ground_energy
    }

    /// `<psi(T)| H_p |psi(T)>` for flat parameters `[A..., phi...]`.
    pub fn energy(&self, params: &[f64]) -> Result<f64> {
        let ansatz = self.problem.ansatz(params)?;
        self.propagator
            .expectation_after(&ansatz, &self.problem.evolution, &self.observable)
    }

    pub fn error_rate(&self, params: &[f64]) -> Result<f64> {
        error_rate(self.energy(params)?, self.ground_energy)
    }

    pub fn final_state(&self, params: &[f64]) -> Result<StateVector> {
        self.propagator.evolve(&self.problem.ansatz(params)?, &self.problem.evolution)
    }

    /// Optimizer-facing cost: NaN wherever the energy cannot be evaluated.
    pub fn cost(&self, params: &[f64]) -> f64 {
        self.energy(params).unwrap_or(f64::NAN)
    }
}

pub fn pbvqo_cost(problem: &PbvqoProblem, params: &ParameterVector) -> Result<f64> {
    problem.evaluator()?.energy(params.as_slice())
}

/// Shared knobs of every study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunOptions {
    pub bfgs: BfgsOptions,
    pub amplitude_range: (f64, f64),
    pub phase_range: (f64, f64),
    /// QAOA angles are drawn from `[0, angle_max)`.
    pub qaoa_angle_max: f64,
    pub execution: Execution,
    /// Permits easy problems other than the two-qubit ring in meta-learning.
    pub allow_any_easy_size: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            bfgs: BfgsOptions::default(),
            amplitude_range: (-5.0, 5.0),
            phase_range: (0.0, std::f64::consts::TAU),
            qaoa_angle_max: std::f64::consts::PI,
            execution: Execution::default(),
            allow_any_easy_size: false,
        }
    }
}

impl RunOptions {
    pub fn validate(&self) -> Result<()> {
        self.bfgs.validate()?;
        for (name, (lo, hi)) in [("amplitude_range", self.amplitude_range), ("phase_range", self.phase_range)] {
            if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                return Err(Error::invalid(name, format!("invalid interval [{lo}, {hi})")));
            }
        }
        if !(self.qaoa_angle_max > 0.0 && self.qaoa_angle_max.is_finite()) {
            return Err(Error::invalid("qaoa_angle_max", "must be positive"));
        }
        Ok(())
    }

    /// `[A..., phi...]` drawn uniformly from the sampling box.
    pub fn sample_pulse_params(&self, n_terms: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (alo, ahi) = self.amplitude_range;
        let (plo, phi) = self.phase_range;
        let mut x: Vec<f64> = (0..n_terms).map(|_| rng.random_range(alo..ahi)).collect();
        x.extend((0..n_terms).map(|_| rng.random_range(plo..phi)));
        x
    }
}

/// Phases wrapped into `[0, 2 pi)`; amplitudes untouched.
pub fn wrap_pulse_params(params: &[f64]) -> Vec<f64> {
    let n = params.len() / 2;
    params
        .iter()
        .enumerate()
        .map(|(i, &v)| if i >= n { v.rem_euclid(std::f64::consts::TAU) } else { v })
        .collect()
}

fn run_bfgs_from(evaluator: &PbvqoEvaluator, run_id: usize, seed: u64, x0: Vec<f64>, options: &RunOptions) -> RunRecord {
    let start = Instant::now();
    let outcome = ParameterVector::new(x0.clone())
        .and_then(|p| bfgs_minimize(|x| evaluator.cost(x), &p, &options.bfgs))
        .and_then(|report| pbvqo_record(evaluator, run_id, seed, &x0, report));
    let mut record = outcome.unwrap_or_else(|e| RunRecord::failed(run_id, seed, x0, evaluator.ground_energy, e.to_string()));
    record.wall_time_s = Some(start.elapsed().as_secs_f64());
    record
}

fn pbvqo_record(
    evaluator: &PbvqoEvaluator,
    run_id: usize,
    seed: u64,
    x0: &[f64],
    report: OptimizerReport,
) -> Result<RunRecord> {
    if !report.best_cost.is_finite() {
        return Err(Error::NonFinite(format!("final energy {}", report.best_cost)));
    }
    let params = report.best_params.into_inner();
    Ok(RunRecord {
        run_id,
        seed,
        initial_params: x0.to_vec(),
        energetic_cost: Some(evaluator.problem.energetic_cost(&params)?),
        final_params: wrap_pulse_params(&params),
        cost_history: report.cost_history,
        final_energy: report.best_cost,
        ground_energy: evaluator.ground_energy,
        final_error_rate: error_rate(report.best_cost, evaluator.ground_energy)?,
        evaluations: report.evaluations,
        converged: report.converged,
        transfer: None,
        failure: None,
        wall_time_s: None,
    })
}

fn pbvqo_metadata(problem: &PbvqoProblem, label: &str, optimizer: &str, seed: u64) -> StudyMetadata {
    StudyMetadata {
        label: label.to_owned(),
        n_qubits: problem.n_qubits(),
        duration: Some(problem.duration),
        depth: None,
        optimizer: optimizer.to_owned(),
        master_seed: seed,
    }
}

/// Random-restart BFGS ensemble. Run `k` uses seed `derive_seed(seed, k)`;
/// failed runs are recorded, not fatal.
pub fn run_pbvqo(problem: &PbvqoProblem, n_restarts: usize, seed: u64, options: &RunOptions) -> Result<StudyResult> {
    if n_restarts == 0 {
        return Err(Error::invalid("n_restarts", "must be at least 1"));
    }
    options.validate()?;
    let evaluator = problem.evaluator()?;
    let runs = map_indexed(n_restarts, options.execution, |k| {
        let run_seed = derive_seed(seed, k as u64);
        let x0 = options.sample_pulse_params(problem.ansatz_size, run_seed);
        run_bfgs_from(&evaluator, k, run_seed, x0, options)
    });
    Ok(StudyResult::new(pbvqo_metadata(problem, "baseline", "bfgs", seed), runs))
}

/// One ensemble per duration, all drawn from the same master seed.
pub fn sweep_duration(
    template: &PbvqoProblem,
    durations: &[f64],
    n_restarts: usize,
    seed: u64,
    options: &RunOptions,
) -> Result<Vec<StudyResult>> {
    if durations.is_empty() {
        return Err(Error::invalid("durations", "need at least one duration"));
    }
    durations
        .iter()
        .map(|&t| {
            let mut study = run_pbvqo(&template.with_duration(t)?, n_restarts, seed, options)?;
            study.metadata.label = format!("T={t}");
            Ok(study)
        })
        .collect()
}

/// Global (or local) solver used on the easy problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EasySolver {
    /// The config's seed is replaced by the transfer seed.
    Ga(GaConfig),
    /// Single random-start BFGS from the sampling box.
    Bfgs,
}

impl EasySolver {
    pub fn name(&self) -> &'static str {
        match self {
            EasySolver::Ga(_) => "ga",
            EasySolver::Bfgs => "bfgs",
        }
    }
}

fn check_transfer(easy: &PbvqoProblem, hard: &PbvqoProblem, options: &RunOptions) -> Result<()> {
    if easy.ansatz_size != hard.ansatz_size {
        return Err(Error::invalid(
            "ansatz_size",
            format!("easy uses {} terms, hard uses {}", easy.ansatz_size, hard.ansatz_size),
        ));
    }
    if easy.n_qubits() != 2 && !options.allow_any_easy_size {
        return Err(Error::invalid(
            "easy",
            format!("easy problem has {} qubits; only the 2-qubit ring is enabled", easy.n_qubits()),
        ));
    }
    Ok(())
}

fn solve_easy(easy: &PbvqoEvaluator, solver: &EasySolver, seed: u64, options: &RunOptions) -> Result<OptimizerReport> {
    match solver {
        EasySolver::Ga(config) => {
            let mut config = config.clone();
            config.seed = seed;
            if config.bounds.len() != easy.problem.n_params() {
                return Err(Error::DimensionMismatch {
                    expected: easy.problem.n_params(),
                    actual: config.bounds.len(),
                });
            }
            ga_minimize(|x| easy.cost(x), &config)
        }
        EasySolver::Bfgs => {
            let x0 = ParameterVector::new(options.sample_pulse_params(easy.problem.ansatz_size, seed))?;
            bfgs_minimize(|x| easy.cost(x), &x0, &options.bfgs)
        }
    }
}

fn transfer_run(
    easy: &PbvqoEvaluator,
    hard: &PbvqoEvaluator,
    solver: &EasySolver,
    run_id: usize,
    seed: u64,
    options: &RunOptions,
) -> RunRecord {
    let start = Instant::now();
    let easy_report = match solve_easy(easy, solver, seed, options) {
        Ok(r) => r,
        Err(e) => {
            let mut failed = RunRecord::failed(run_id, seed, Vec::new(), hard.ground_energy, format!("easy problem: {e}"));
            failed.wall_time_s = Some(start.elapsed().as_secs_f64());
            return failed;
        }
    };
    let easy_rate = error_rate(easy_report.best_cost, easy.ground_energy).unwrap_or(f64::NAN);
    let prior = easy_report.best_params.into_inner();
    let mut record = run_bfgs_from(hard, run_id, seed, prior.clone(), options);
    record.transfer = Some(TransferProvenance {
        easy_n_qubits: easy.problem.n_qubits(),
        easy_optimizer: solver.name().to_owned(),
        easy_seed: seed,
        easy_params: wrap_pulse_params(&prior),
        easy_error_rate: easy_rate,
        easy_unsolved: !(easy_rate < EASY_SOLVED_THRESHOLD),
    });
    record.wall_time_s = Some(start.elapsed().as_secs_f64());
    record
}

/// Solves `easy` with `solver`, then warm-starts BFGS on `hard` from the easy
/// optimum. An unsolved easy problem is flagged in the provenance and the
/// transfer still runs.
pub fn meta_learn(
    easy: &PbvqoProblem,
    hard: &PbvqoProblem,
    solver: &EasySolver,
    seed: u64,
    options: &RunOptions,
) -> Result<RunRecord> {
    check_transfer(easy, hard, options)?;
    options.validate()?;
    Ok(transfer_run(&easy.evaluator()?, &hard.evaluator()?, solver, 0, seed, options))
}

/// Ensemble of independent transfers; run `k` uses `derive_seed(seed, k)`.
pub fn meta_learn_ensemble(
    easy: &PbvqoProblem,
    hard: &PbvqoProblem,
    solver: &EasySolver,
    n_runs: usize,
    seed: u64,
    options: &RunOptions,
) -> Result<StudyResult> {
    if n_runs == 0 {
        return Err(Error::invalid("n_runs", "must be at least 1"));
    }
    check_transfer(easy, hard, options)?;
    options.validate()?;
    let (easy_eval, hard_eval) = (easy.evaluator()?, hard.evaluator()?);
    let runs = map_indexed(n_runs, options.execution, |k| {
        transfer_run(&easy_eval, &hard_eval, solver, k, derive_seed(seed, k as u64), options)
    });
    let label = format!("meta-{}", solver.name());
    Ok(StudyResult::new(pbvqo_metadata(hard, &label, &label, seed), runs))
}

/// Baseline, Meta-BFGS and Meta-GA ensembles on the same hard problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramStudy {
    pub baseline: StudyResult,
    pub meta_bfgs: StudyResult,
    pub meta_ga: StudyResult,
}

impl HistogramStudy {
    pub fn arms(&self) -> [&StudyResult; 3] {
        [&self.baseline, &self.meta_bfgs, &self.meta_ga]
    }
}

pub const MIN_HISTOGRAM_RUNS: usize = 10;

/// The three arms draw from independent master seeds derived from `seed`.
pub fn histogram_study(
    easy: &PbvqoProblem,
    hard: &PbvqoProblem,
    ga_config: &GaConfig,
    n_runs: usize,
    seed: u64,
    options: &RunOptions,
) -> Result<HistogramStudy> {
    if n_runs < MIN_HISTOGRAM_RUNS {
        return Err(Error::invalid("n_runs", format!("need at least {MIN_HISTOGRAM_RUNS} runs per arm")));
    }
    Ok(HistogramStudy {
        baseline: run_pbvqo(hard, n_runs, derive_seed(seed, 0), options)?,
        meta_bfgs: meta_learn_ensemble(easy, hard, &EasySolver::Bfgs, n_runs, derive_seed(seed, 1), options)?,
        meta_ga: meta_learn_ensemble(easy, hard, &EasySolver::Ga(ga_config.clone()), n_runs, derive_seed(seed, 2), options)?,
    })
}

/// QAOA angles; the flat layout is `[beta..., gamma...]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaoaParams {
    betas: Vec<f64>,
    gammas: Vec<f64>,
}

impl QaoaParams {
    pub fn new(betas: Vec<f64>, gammas: Vec<f64>) -> Result<Self> {
        if betas.len() != gammas.len() {
            return Err(Error::DimensionMismatch {
                expected: betas.len(),
                actual: gammas.len(),
            });
        }
        if let Some(v) = betas.iter().chain(&gammas).find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("QAOA angle {v}")));
        }
        Ok(Self { betas, gammas })
    }

    pub fn from_flat(params: &[f64]) -> Result<Self> {
        if !params.len().is_multiple_of(2) {
            return Err(Error::invalid("params", format!("odd length {}", params.len())));
        }
        let (b, g) = params.split_at(params.len() / 2);
        Self::new(b.to_vec(), g.to_vec())
    }

    pub fn depth(&self) -> usize {
        self.betas.len()
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.betas.iter().chain(&self.gammas).copied().collect()
    }
}

/// Digitized annealing schedule: `beta_i = B(i dt) dt`, `gamma_i = Gamma(i dt) dt`
/// for `i = 1..p`, `dt = total_time / p`.
pub fn qaoa_params_from_schedule<B, G>(b: B, gamma: G, p: usize, total_time: f64) -> Result<QaoaParams>
where
    B: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    if p == 0 {
        return Err(Error::invalid("p", "must be at least 1"));
    }
    if !(total_time > 0.0 && total_time.is_finite()) {
        return Err(Error::invalid("total_time", "must be positive"));
    }
    let dt = total_time / p as f64;
    let ts = (1..=p).map(|i| i as f64 * dt);
    QaoaParams::new(ts.clone().map(|t| b(t) * dt).collect(), ts.map(|t| gamma(t) * dt).collect())
}

/// Layered QAOA on a ring: diagonal `sum Z_i Z_j` phases followed by
/// single-qubit `X` rotations, starting from `|+>^N`.
#[derive(Debug, Clone)]
pub struct QaoaEvaluator {
    n_qubits: usize,
    diagonal: Vec<f64>,
    ground_energy: f64,
}

impl QaoaEvaluator {
    pub fn new(graph: &ProblemGraph) -> Result<Self> {
        let hp = qaoa_problem_hamiltonian(graph)?;
        let diagonal: Vec<f64> = hp.matrix().diagonal().iter().map(|z| z.re).collect();
        let ground_energy = diagonal.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Self {
            n_qubits: graph.n_nodes(),
            diagonal,
            ground_energy,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn ground_energy(&self) -> f64 {
        self.ground_energy
    }

    pub fn state(&self, params: &QaoaParams) -> StateVector {
        let mut amps = StateVector::uniform_superposition(self.n_qubits).amplitudes().to_vec();
        for (&beta, &gamma) in params.betas.iter().zip(&params.gammas) {
            for (a, &e) in amps.iter_mut().zip(&self.diagonal) {
                *a *= Complex64::from_polar(1.0, -gamma * e);
            }
            let (c, s) = (beta.cos(), beta.sin());
            let minus_is = Complex64::new(0.0, -s);
            for q in 0..self.n_qubits {
                let bit = 1usize << (self.n_qubits - 1 - q);
                for i in (0..amps.len()).filter(|i| i & bit == 0) {
                    let (a0, a1) = (amps[i], amps[i | bit]);
                    amps[i] = a0 * c + a1 * minus_is;
                    amps[i | bit] = a0 * minus_is + a1 * c;
                }
            }
        }
        StateVector::from_raw(self.n_qubits, amps)
    }

    pub fn energy(&self, params: &QaoaParams) -> f64 {
        self.state(params)
            .amplitudes()
            .iter()
            .zip(&self.diagonal)
            .map(|(a, e)| a.norm_sqr() * e)
            .sum()
    }

    fn cost(&self, flat: &[f64]) -> f64 {
        QaoaParams::from_flat(flat).map_or(f64::NAN, |p| self.energy(&p))
    }
}

/// `prod_j exp(-i beta_j H_mix) exp(-i gamma_j H_p) |+>^N`.
pub fn qaoa_state(graph: &ProblemGraph, params: &QaoaParams) -> Result<StateVector> {
    Ok(QaoaEvaluator::new(graph)?.state(params))
}

/// Gate sequence `gamma_1 H_p, beta_1 H_mix, ...`, each layer `exp(-i theta H)`
/// driven as `theta H / tau` for `tau = total_time / (2p)`, with `theta` wrapped
/// into `(-pi, pi]`.
#[derive(Debug, Clone)]
pub struct QaoaGateSchedule {
    problem: HermitianOperator,
    mixer: HermitianOperator,
    problem_norm: f64,
    mixer_norm: f64,
    angles: Vec<f64>,
    total_time: f64,
}

/// `theta` mapped into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let w = (theta + PI).rem_euclid(TAU) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

impl QaoaGateSchedule {
    pub fn new(graph: &ProblemGraph, params: &QaoaParams, total_time: f64) -> Result<Self> {
        if params.depth() == 0 {
            return Err(Error::invalid("depth", "must be at least 1"));
        }
        if !(total_time > 0.0 && total_time.is_finite()) {
            return Err(Error::invalid("total_time", "must be positive"));
        }
        let problem = qaoa_problem_hamiltonian(graph)?;
        let mixer = mixer_hamiltonian(graph.n_nodes())?;
        let angles = params
            .gammas
            .iter()
            .zip(&params.betas)
            .flat_map(|(&g, &b)| [wrap_angle(g), wrap_angle(b)])
            .collect();
        Ok(Self {
            problem_norm: problem.frobenius_norm(),
            mixer_norm: mixer.frobenius_norm(),
            problem,
            mixer,
            angles,
            total_time,
        })
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn gate_time(&self) -> f64 {
        self.total_time / self.angles.len() as f64
    }

    fn window(&self, t: f64) -> usize {
        ((t / self.gate_time()).floor().max(0.0) as usize).min(self.angles.len() - 1)
    }

    /// `(1/T) sum_k |theta_k| ||H_k||_F`, the exact time average of the
    /// piecewise-constant integrand.
    pub fn energetic_cost(&self) -> f64 {
        self.angles
            .iter()
            .enumerate()
            .map(|(k, th)| th.abs() * if k % 2 == 0 { self.problem_norm } else { self.mixer_norm })
            .sum::<f64>()
            / self.total_time
    }
}

impl HamiltonianSchedule for QaoaGateSchedule {
    fn hamiltonian_at(&self, t: f64) -> Result<HermitianOperator> {
        let k = self.window(t);
        let op = if k.is_multiple_of(2) { &self.problem } else { &self.mixer };
        Ok(op.scaled(self.angles[k] / self.gate_time()))
    }

    fn frobenius_norm_at(&self, t: f64) -> Result<f64> {
        let k = self.window(t);
        let norm = if k.is_multiple_of(2) { self.problem_norm } else { self.mixer_norm };
        Ok(self.angles[k].abs() * norm / self.gate_time())
    }
}

/// Default protocol time of a full QAOA circuit in the cost model.
pub const DEFAULT_QAOA_TOTAL_TIME: f64 = 1.0;

/// BFGS ensemble over `[beta..., gamma...]` with angles drawn from
/// `[0, qaoa_angle_max)`. Each record carries the gate-schedule cost under
/// `total_time`.
pub fn run_qaoa(
    graph: &ProblemGraph,
    depth: usize,
    n_restarts: usize,
    seed: u64,
    total_time: f64,
    options: &RunOptions,
) -> Result<StudyResult> {
    if depth == 0 {
        return Err(Error::invalid("depth", "must be at least 1"));
    }
    if n_restarts == 0 {
        return Err(Error::invalid("n_restarts", "must be at least 1"));
    }
    options.validate()?;
    let evaluator = QaoaEvaluator::new(graph)?;
    QaoaGateSchedule::new(graph, &QaoaParams::new(vec![0.0; depth], vec![0.0; depth])?, total_time)?;
    let runs = map_indexed(n_restarts, options.execution, |k| {
        let run_seed = derive_seed(seed, k as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
        let x0: Vec<f64> = (0..2 * depth).map(|_| rng.random_range(0.0..options.qaoa_angle_max)).collect();
        let start = Instant::now();
        let outcome = ParameterVector::new(x0.clone())
            .and_then(|p| bfgs_minimize(|x| evaluator.cost(x), &p, &options.bfgs))
            .and_then(|report| qaoa_record(graph, &evaluator, k, run_seed, &x0, report, total_time));
        let mut record = outcome
            .unwrap_or_else(|e| RunRecord::failed(k, run_seed, x0, evaluator.ground_energy, e.to_string()));
        record.wall_time_s = Some(start.elapsed().as_secs_f64());
        record
    });
    let metadata = StudyMetadata {
        label: "qaoa".to_owned(),
        n_qubits: graph.n_nodes(),
        duration: Some(total_time),
        depth: Some(depth),
        optimizer: "bfgs".to_owned(),
        master_seed: seed,
    };
    Ok(StudyResult::new(metadata, runs))
}

fn qaoa_record(
    graph: &ProblemGraph,
    evaluator: &QaoaEvaluator,
    run_id: usize,
    seed: u64,
    x0: &[f64],
    report: OptimizerReport,
    total_time: f64,
) -> Result<RunRecord> {
    if !report.best_cost.is_finite() {
        return Err(Error::NonFinite(format!("final energy {}", report.best_cost)));
    }
    let params = QaoaParams::from_flat(report.best_params.as_slice())?;
    Ok(RunRecord {
        run_id,
        seed,
        initial_params: x0.to_vec(),
        final_params: params.to_flat(),
        energetic_cost: Some(QaoaGateSchedule::new(graph, &params, total_time)?.energetic_cost()),
        cost_history: report.cost_history,
        final_energy: report.best_cost,
        ground_energy: evaluator.ground_energy,
        final_error_rate: error_rate(report.best_cost, evaluator.ground_energy)?,
        evaluations: report.evaluations,
        converged: report.converged,
        transfer: None,
        failure: None,
        wall_time_s: None,
    })
}

/// Ensemble-averaged energetic costs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostComparison {
    pub c_pbvqo: f64,
    pub c_qaoa: f64,
    pub ratio: f64,
}

pub fn compare_energetic_cost(pbvqo: &StudyResult, qaoa: &StudyResult) -> Result<CostComparison> {
    let c_pbvqo = pbvqo
        .mean_energetic_cost()
        .ok_or_else(|| Error::invalid("pbvqo_result", "no run carries an energetic cost"))?;
    let c_qaoa = qaoa
        .mean_energetic_cost()
        .ok_or_else(|| Error::invalid("qaoa_result", "no run carries an energetic cost"))?;
    Ok(CostComparison {
        c_pbvqo,
        c_qaoa,
        ratio: c_pbvqo / c_qaoa,
    })
}
