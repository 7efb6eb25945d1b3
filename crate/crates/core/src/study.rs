//! Per-run records and ensemble summaries.

use serde::{Deserialize, Serialize};

/// Where a warm start came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferProvenance {
    pub easy_n_qubits: usize,
    /// `"ga"` or `"bfgs"`.
    pub easy_optimizer: String,
    pub easy_seed: u64,
    pub easy_params: Vec<f64>,
    pub easy_error_rate: f64,
    /// Set when the easy problem was not solved to `R < 0.05`.
    pub easy_unsolved: bool,
}

/// One optimization trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: usize,
    pub seed: u64,
    pub initial_params: Vec<f64>,
    pub final_params: Vec<f64>,
    pub cost_history: Vec<f64>,
    pub final_energy: f64,
    pub ground_energy: f64,
    pub final_error_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energetic_cost: Option<f64>,
    pub evaluations: usize,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transfer: Option<TransferProvenance>,
    /// Error message when the run failed; the numeric fields are then NaN.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    /// Excluded from persisted records so reruns are byte-identical.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl RunRecord {
    pub fn failed(run_id: usize, seed: u64, initial_params: Vec<f64>, ground_energy: f64, message: String) -> Self {
        Self {
            run_id,
            seed,
            initial_params,
            final_params: Vec::new(),
            cost_history: Vec::new(),
            final_energy: f64::NAN,
            ground_energy,
            final_error_rate: f64::NAN,
            energetic_cost: None,
            evaluations: 0,
            converged: false,
            transfer: None,
            failure: Some(message),
            wall_time_s: None,
        }
    }

    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }
}

/// Five-number summary with Tukey outliers (1.5 IQR whiskers).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl Summary {
    /// `None` when there are no finite values.
    pub fn from_values(values: &[f64]) -> Option<Self> {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let q1 = quantile(&v, 0.25);
        let q3 = quantile(&v, 0.75);
        let iqr = q3 - q1;
        let (fence_lo, fence_hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
        let inside: Vec<f64> = v.iter().copied().filter(|x| (fence_lo..=fence_hi).contains(x)).collect();
        Some(Self {
            count: v.len(),
            min: v[0],
            q1,
            median: quantile(&v, 0.5),
            q3,
            max: v[v.len() - 1],
            mean: v.iter().sum::<f64>() / v.len() as f64,
            whisker_low: inside.first().copied().unwrap_or(q1),
            whisker_high: inside.last().copied().unwrap_or(q3),
            outliers: v.iter().copied().filter(|x| !(fence_lo..=fence_hi).contains(x)).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyMetadata {
    pub label: String,
    pub n_qubits: usize,
    /// Pulse duration for PBVQO studies, circuit depth-free for QAOA.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    pub optimizer: String,
    pub master_seed: u64,
}

/// An ensemble of runs on one problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub metadata: StudyMetadata,
    pub runs: Vec<RunRecord>,
    /// Summary of the final error rates of successful runs.
    pub summary: Option<Summary>,
}

impl StudyResult {
    pub fn new(metadata: StudyMetadata, runs: Vec<RunRecord>) -> Self {
        let summary = Summary::from_values(&error_rates(&runs));
        Self {
            metadata,
            runs,
            summary,
        }
    }

    pub fn error_rates(&self) -> Vec<f64> {
        error_rates(&self.runs)
    }

    pub fn best_error_rate(&self) -> Option<f64> {
        self.summary.as_ref().map(|s| s.min)
    }

    pub fn best_run(&self) -> Option<&RunRecord> {
        self.runs
            .iter()
            .filter(|r| r.final_error_rate.is_finite())
            .min_by(|a, b| a.final_error_rate.total_cmp(&b.final_error_rate))
    }

    /// Mean energetic cost over runs that carry one.
    pub fn mean_energetic_cost(&self) -> Option<f64> {
        let costs: Vec<f64> = self.runs.iter().filter_map(|r| r.energetic_cost).collect();
        (!costs.is_empty()).then(|| costs.iter().sum::<f64>() / costs.len() as f64)
    }
}

fn error_rates(runs: &[RunRecord]) -> Vec<f64> {
    runs.iter().filter(|r| r.succeeded()).map(|r| r.final_error_rate).collect()
}

/// Counts of `values` in `bins` equal-width bins over `[lo, hi]`; the last bin
/// is closed and values outside the range are clamped into the end bins.
pub fn histogram(values: &[f64], bins: usize, lo: f64, hi: f64) -> Vec<usize> {
    let mut counts = vec![0; bins];
    if bins == 0 || !(hi > lo) {
        return counts;
    }
    for &v in values.iter().filter(|v| v.is_finite()) {
        let k = (((v - lo) / (hi - lo)) * bins as f64).floor();
        let k = (k.max(0.0) as usize).min(bins - 1);
        counts[k] += 1;
    }
    counts
}
