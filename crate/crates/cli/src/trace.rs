//! Pulse traces on a uniform time grid.

use std::path::Path;

use pbvqo::pulses::{evaluate_pulse, filter_pulse, flux_for_coupling, CircuitParams};
use pbvqo::workflows::PbvqoProblem;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub p: f64,
    pub f: f64,
    pub phi_ext: f64,
}

/// Coupler whose floor `G` equals `bound`, with all other constants at 1.
fn unit_coupler(bound: f64) -> Result<CircuitParams, CliError> {
    CircuitParams::new(1.0, (1.0, 1.0), 1.0 / (32.0 * bound), (1.0, 1.0), 0.0)
        .map_err(|e| CliError::Validation(format!("coupling_bound: {e}")))
}

/// `samples` points from `t = 0` to `t = T` inclusive; both ends are exact.
pub fn export_pulse_trace(params: &[f64], problem: &PbvqoProblem, samples: usize) -> Result<Vec<TraceRow>, CliError> {
    if samples < 2 {
        return Err(CliError::Validation("samples: need at least 2".to_owned()));
    }
    let ansatz = problem
        .ansatz(params)
        .map_err(|e| CliError::Validation(format!("params: {e}")))?;
    let bound = problem.model().coupling_bound();
    let coupler = unit_coupler(bound)?;
    let duration = problem.duration();
    (0..samples)
        .map(|k| {
            let t = if k + 1 == samples { duration } else { duration * k as f64 / (samples - 1) as f64 };
            let p = evaluate_pulse(&ansatz, t).map_err(|e| CliError::Runtime(e.to_string()))?;
            let f = filter_pulse(p, bound);
            let phi_ext = flux_for_coupling(&coupler, f).map_err(|e| CliError::Runtime(e.to_string()))?;
            Ok(TraceRow { t, p, f, phi_ext })
        })
        .collect()
}

pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<(), CliError> {
    let err = |e: csv::Error| CliError::Runtime(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(["t", "P", "F", "phi_ext"]).map_err(err)?;
    for r in rows {
        w.write_record([r.t.to_string(), r.p.to_string(), r.f.to_string(), r.phi_ext.to_string()])
            .map_err(err)?;
    }
    w.flush().map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}
