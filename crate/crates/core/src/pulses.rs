//! Trigonometric pulse ansatz, the hardware filter and the SQUID coupler
//! formulas that translate a coupling value into an external flux.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of harmonics (six tunable parameters).
pub const DEFAULT_ANSATZ_TERMS: usize = 3;

/// Fluxes with `|cos(phi)|` at or below this are treated as divergent.
pub const FLUX_COS_GUARD: f64 = 1e-9;

/// `P(t) = sum_i A_i sin((2i - 1) pi t + phi_i)` on `t in [0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseAnsatz {
    amplitudes: Vec<f64>,
    phases: Vec<f64>,
    duration: f64,
}

impl PulseAnsatz {
    pub fn new(amplitudes: Vec<f64>, phases: Vec<f64>, duration: f64) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::invalid("n_terms", "must be positive"));
        }
        if amplitudes.len() != phases.len() {
            return Err(Error::invalid(
                "phases",
                format!("expected {} phases, got {}", amplitudes.len(), phases.len()),
            ));
        }
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::invalid("duration", format!("must be positive, got {duration}")));
        }
        Ok(Self {
            amplitudes,
            phases,
            duration,
        })
    }

    /// Splits a flat `[A_1..A_n, phi_1..phi_n]` vector.
    pub fn from_flat(params: &[f64], duration: f64) -> Result<Self> {
        if params.is_empty() || !params.len().is_multiple_of(2) {
            return Err(Error::invalid(
                "params",
                format!("expected an even, nonzero length, got {}", params.len()),
            ));
        }
        let n = params.len() / 2;
        Self::new(params[..n].to_vec(), params[n..].to_vec(), duration)
    }

    /// All amplitudes zero, so the filtered pulse sits at the coupling floor.
    pub fn zero(n_terms: usize, duration: f64) -> Result<Self> {
        Self::new(vec![0.0; n_terms], vec![0.0; n_terms], duration)
    }

    pub fn n_terms(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.amplitudes.iter().chain(&self.phases).copied().collect()
    }

    /// Pulse value without the range check; callers guarantee `t` is in the window.
    pub(crate) fn value_unchecked(&self, t: f64) -> f64 {
        self.amplitudes
            .iter()
            .zip(&self.phases)
            .enumerate()
            .map(|(i, (a, phi))| a * ((2 * i + 1) as f64 * PI * t + phi).sin())
            .sum()
    }
}

/// Raw pulse value `P(t)`.
pub fn evaluate_pulse(ansatz: &PulseAnsatz, t: f64) -> Result<f64> {
    if !(0.0..=ansatz.duration).contains(&t) {
        return Err(Error::TimeOutOfRange {
            t,
            duration: ansatz.duration,
        });
    }
    Ok(ansatz.value_unchecked(t))
}

/// Hardware filter: `G` inside `[-G, G)`, `|P|` otherwise, i.e. `max(G, |P|)`.
pub fn filter_pulse(p_value: f64, bound: f64) -> f64 {
    bound.max(p_value.abs())
}

/// Superconducting two-qubit coupler: two charge qubits joined by a grounded SQUID.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    pub coupler_capacitance: f64,
    pub qubit_josephson_energies: (f64, f64),
    pub squid_josephson_energy: f64,
    pub qubit_total_capacitances: (f64, f64),
    pub dc_flux: f64,
}

impl CircuitParams {
    pub fn new(
        coupler_capacitance: f64,
        qubit_josephson_energies: (f64, f64),
        squid_josephson_energy: f64,
        qubit_total_capacitances: (f64, f64),
        dc_flux: f64,
    ) -> Result<Self> {
        let positive = [
            ("coupler_capacitance", coupler_capacitance),
            ("qubit_josephson_energies", qubit_josephson_energies.0),
            ("qubit_josephson_energies", qubit_josephson_energies.1),
            ("squid_josephson_energy", squid_josephson_energy),
            ("qubit_total_capacitances", qubit_total_capacitances.0),
            ("qubit_total_capacitances", qubit_total_capacitances.1),
        ];
        for (field, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(field, format!("must be positive, got {v}")));
            }
        }
        if !dc_flux.is_finite() {
            return Err(Error::invalid("dc_flux", "must be finite"));
        }
        Ok(Self {
            coupler_capacitance,
            qubit_josephson_energies,
            squid_josephson_energy,
            qubit_total_capacitances,
            dc_flux,
        })
    }

    /// `C_c^2 E_J1 E_J2 / ((C_1 + C_c)(C_2 + C_c))`, shared by every coupling formula.
    fn numerator_over_capacitances(&self) -> f64 {
        let cc = self.coupler_capacitance;
        let (ej1, ej2) = self.qubit_josephson_energies;
        let (c1, c2) = self.qubit_total_capacitances;
        cc * cc * ej1 * ej2 / ((c1 + cc) * (c2 + cc))
    }
}

fn guarded_cos(phi: f64) -> Result<f64> {
    let c = phi.cos();
    if c.abs() <= FLUX_COS_GUARD || !c.is_finite() {
        Err(Error::DivergentCoupling { phi })
    } else {
        Ok(c)
    }
}

/// Always-on coupling floor `G = C_c^2 E_J1 E_J2 / (8 E_Js (C_1 + C_c)(C_2 + C_c))`.
pub fn coupling_bound(params: &CircuitParams) -> f64 {
    params.numerator_over_capacitances() / (8.0 * params.squid_josephson_energy)
}

/// Coupling `g[phi_ext]` with the SQUID energy `2 E_Js |cos(phi_ext)|`.
pub fn coupling_strength(params: &CircuitParams, phi_ext: f64) -> Result<f64> {
    let c = guarded_cos(phi_ext)?;
    let ejs_eff = 2.0 * params.squid_josephson_energy * c.abs();
    Ok(params.numerator_over_capacitances() / ejs_eff)
}

/// Principal-branch flux in `[0, pi/2)` whose coupling `g/4` equals `filtered_value`.
pub fn flux_for_coupling(params: &CircuitParams, filtered_value: f64) -> Result<f64> {
    let bound = coupling_bound(params);
    if !(filtered_value >= bound) {
        return Err(Error::UnreachableCoupling {
            value: filtered_value,
            bound,
        });
    }
    Ok((bound / filtered_value).clamp(-1.0, 1.0).acos())
}

/// Always-on and flux-tunable couplings `(g0, g1)` at the DC operating point.
pub fn coupling_split(params: &CircuitParams) -> Result<(f64, f64)> {
    let c = guarded_cos(params.dc_flux)?;
    let ejs_bar = 2.0 * params.squid_josephson_energy * c.abs();
    let g0 = params.numerator_over_capacitances() / (4.0 * ejs_bar);
    let g1 = g0 * params.dc_flux.sin() / c;
    Ok((g0, g1))
}

/// Two-tone AC flux `A_1 cos(nu_1 t + phi_1) + A_2 cos(nu_2 t + phi_2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RwaDrive {
    pub amplitudes: (f64, f64),
    pub phases: (f64, f64),
    pub frequencies: (f64, f64),
}

/// Coefficients of the rotating-frame interaction
/// `(g1/4)(M- XX + M+ YY - N+ XY + N- YX)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RwaCoefficients {
    pub m_plus: f64,
    pub m_minus: f64,
    pub n_plus: f64,
    pub n_minus: f64,
}

pub fn rwa_coefficients(drive: &RwaDrive) -> RwaCoefficients {
    let (a1, a2) = drive.amplitudes;
    let (p1, p2) = drive.phases;
    RwaCoefficients {
        m_plus: a1 * p1.cos() + a2 * p2.cos(),
        m_minus: a1 * p1.cos() - a2 * p2.cos(),
        n_plus: a1 * p1.sin() + a2 * p2.sin(),
        n_minus: a1 * p1.sin() - a2 * p2.sin(),
    }
}
