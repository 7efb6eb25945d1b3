//! State-vector dynamics under `H(t) = drift + F[P(t)] * coupling`.
//!
//! The propagator freezes the Hamiltonian at the midpoint of each step and
//! applies the exact exponential of the frozen operator. Propagation runs in
//! the smallest subspace that contains the initial state and is invariant
//! under both the drift and the coupling operator; for a uniform ring started
//! from `|0...0>` this is the translation- and reflection-symmetric,
//! even-parity sector, a few dozen states instead of `2^N`.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{
    coupling_operator, drift_hamiltonian, HardwareModel, HermitianOperator, ProblemGraph,
};
use crate::pulses::{filter_pulse, PulseAnsatz};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Norm tolerance of a valid state.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Default number of midpoint steps per pulse window.
pub const DEFAULT_DIVISIONS: usize = 1000;

/// Normalized amplitudes of an `n`-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::invalid("n_qubits", "must be positive"));
        }
        if amplitudes.len() != 1 << n_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << n_qubits,
                actual: amplitudes.len(),
            });
        }
        let norm = l2_norm(&amplitudes);
        if !((norm - 1.0).abs() <= NORM_TOLERANCE) {
            return Err(Error::invalid("amplitudes", format!("norm is {norm}, expected 1")));
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// `|+>^N`.
    pub fn uniform_superposition(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let a = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Self {
            n_qubits,
            amplitudes: vec![a; dim],
        }
    }

    pub(crate) fn from_raw(n_qubits: usize, amplitudes: Vec<Complex64>) -> Self {
        debug_assert_eq!(amplitudes.len(), 1 << n_qubits);
        Self {
            n_qubits,
            amplitudes,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.amplitudes)
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

fn l2_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `|0>^N`.
pub fn initial_state(n_qubits: usize) -> Result<StateVector> {
    if n_qubits == 0 {
        return Err(Error::invalid("n_qubits", "must be positive"));
    }
    let mut amplitudes = vec![ZERO; 1 << n_qubits];
    amplitudes[0] = Complex64::new(1.0, 0.0);
    Ok(StateVector::from_raw(n_qubits, amplitudes))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSize {
    /// Fixed `dt`; the final step is shortened to land on `T`.
    Fixed(f64),
    /// `T / divisions`.
    Divisions(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub time_step: StepSize,
    /// Acceptable change of an observable under step refinement.
    pub tolerance: f64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            time_step: StepSize::Divisions(DEFAULT_DIVISIONS),
            tolerance: 1e-3,
        }
    }
}

impl EvolutionConfig {
    pub fn with_divisions(divisions: usize) -> Self {
        Self {
            time_step: StepSize::Divisions(divisions),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.time_step {
            StepSize::Fixed(dt) if !(dt > 0.0 && dt.is_finite()) => {
                return Err(Error::invalid("time_step", format!("must be positive, got {dt}")))
            }
            StepSize::Divisions(0) => return Err(Error::invalid("time_step", "need at least one step")),
            _ => {}
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance", "must be positive"));
        }
        Ok(())
    }

    /// Step boundaries `0 = t_0 < ... < t_n = duration`.
    pub fn grid(&self, duration: f64) -> Vec<f64> {
        let n = self.step_count(duration);
        match self.time_step {
            StepSize::Divisions(_) => (0..=n).map(|k| duration * k as f64 / n as f64).collect(),
            StepSize::Fixed(dt) => {
                let mut g: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
                g.push(duration);
                g
            }
        }
    }

    pub fn step_count(&self, duration: f64) -> usize {
        match self.time_step {
            StepSize::Divisions(n) => n,
            // absorb round-off so T/dt = 1000.0000000001 does not add a sliver step
            StepSize::Fixed(dt) => ((duration / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize,
        }
    }
}

/// Dense Hermitian matrix stored row-major, used inside the reduced subspace.
#[derive(Debug, Clone)]
struct SmallHermitian {
    dim: usize,
    data: Vec<Complex64>,
    /// Real parts of `data` when every entry is real, which halves the matvec cost.
    real: Option<Vec<f64>>,
}

impl SmallHermitian {
    fn from_dmatrix(m: &DMatrix<Complex64>) -> Self {
        let dim = m.nrows();
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(m[(r, c)]);
            }
        }
        let scale = data.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let real = data
            .iter()
            .all(|z| z.im.abs() <= 1e-14 * scale)
            .then(|| data.iter().map(|z| z.re).collect());
        Self { dim, data, real }
    }

    /// `self <- a + f * b`, keeping the real fast path when both operands have it.
    fn assign_combination(&mut self, a: &Self, b: &Self, f: f64) {
        match (&mut self.real, &a.real, &b.real) {
            (Some(out), Some(ar), Some(br)) => {
                for ((o, x), y) in out.iter_mut().zip(ar).zip(br) {
                    *o = x + f * y;
                }
            }
            _ => {
                self.real = None;
                for ((o, x), y) in self.data.iter_mut().zip(&a.data).zip(&b.data) {
                    *o = x + y * f;
                }
            }
        }
    }

    fn one_norm(&self) -> f64 {
        (0..self.dim)
            .map(|c| (0..self.dim).map(|r| self.data[r * self.dim + c].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn mul_vec(&self, x: &[Complex64], out: &mut [Complex64]) {
        if let Some(real) = &self.real {
            for (r, o) in out.iter_mut().enumerate() {
                let row = &real[r * self.dim..(r + 1) * self.dim];
                let (mut re, mut im) = (0.0, 0.0);
                for (a, b) in row.iter().zip(x) {
                    re += a * b.re;
                    im += a * b.im;
                }
                *o = Complex64::new(re, im);
            }
            return;
        }
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.data[r * self.dim..(r + 1) * self.dim];
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    fn expectation(&self, x: &[Complex64]) -> Complex64 {
        let mut tmp = vec![ZERO; self.dim];
        self.mul_vec(x, &mut tmp);
        x.iter().zip(&tmp).map(|(a, b)| a.conj() * b).sum()
    }
}

/// `x <- exp(-i H tau) x` by a truncated Taylor series, split into substeps
/// with `||H tau_sub||_1 <= 0.5` so the series converges to rounding in a
/// handful of terms.
fn exp_action(h: &SmallHermitian, h_norm_bound: f64, tau: f64, x: &mut [Complex64], scratch: &mut [Vec<Complex64>; 2]) {
    let substeps = ((h_norm_bound * tau.abs()) / 0.5).ceil().max(1.0) as usize;
    let sub_tau = tau / substeps as f64;
    let [term, next] = scratch;
    for _ in 0..substeps {
        term.copy_from_slice(x);
        for k in 1..=40 {
            h.mul_vec(term, next);
            let factor = Complex64::new(0.0, -sub_tau / k as f64);
            let mut size = 0.0f64;
            for ((t, n), xi) in term.iter_mut().zip(next.iter()).zip(x.iter_mut()) {
                *t = factor * n;
                *xi += *t;
                size = size.max(t.norm_sqr());
            }
            if size <= 1e-34 {
                break;
            }
        }
    }
}

/// Orthonormal basis (columns) of the smallest subspace containing `seed`
/// and invariant under every operator in `ops`. Falls back to the full space
/// when the numerical closure fails its invariance check.
fn invariant_subspace(seed: &[Complex64], ops: &[&HermitianOperator]) -> DMatrix<Complex64> {
    let dim = seed.len();
    let mut basis: Vec<Vec<Complex64>> = vec![normalized(seed)];
    let mut next = 0;
    while next < basis.len() && basis.len() < dim {
        let v = basis[next].clone();
        for op in ops {
            let mut w = op.apply(&v).expect("dimension checked by caller");
            let scale = l2_norm(&w).max(1.0);
            for _ in 0..2 {
                for b in &basis {
                    let proj: Complex64 = b.iter().zip(&w).map(|(x, y)| x.conj() * y).sum();
                    for (wi, bi) in w.iter_mut().zip(b) {
                        *wi -= proj * bi;
                    }
                }
            }
            if l2_norm(&w) > 1e-8 * scale {
                basis.push(normalized(&w));
                if basis.len() == dim {
                    break;
                }
            }
        }
        next += 1;
    }
    let v = DMatrix::from_fn(dim, basis.len(), |r, c| basis[c][r]);
    let invariant = ops.iter().all(|op| {
        let av = op.matrix() * &v;
        let residual = &av - &v * (v.adjoint() * &av);
        residual.iter().all(|z| z.norm() < 1e-10 * (1.0 + op.frobenius_norm()))
    });
    if invariant {
        v
    } else {
        DMatrix::identity(dim, dim)
    }
}

fn normalized(v: &[Complex64]) -> Vec<Complex64> {
    let n = l2_norm(v);
    v.iter().map(|z| z / n).collect()
}

/// Time evolution of one fixed initial state under the driven ring.
///
/// Built once per (model, initial state); every subsequent pulse shares the
/// reduced operators.
#[derive(Debug, Clone)]
pub struct PbvqoPropagator {
    n_qubits: usize,
    coupling_bound: f64,
    basis: DMatrix<Complex64>,
    initial: Vec<Complex64>,
    drift: SmallHermitian,
    coupling: SmallHermitian,
    drift_norm: f64,
    coupling_norm: f64,
}

impl PbvqoPropagator {
    pub fn new(model: &HardwareModel, state: &StateVector) -> Result<Self> {
        if state.n_qubits() != model.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: model.n_qubits(),
                actual: state.n_qubits(),
            });
        }
        let drift = drift_hamiltonian(model)?;
        let coupling = coupling_operator(model)?;
        let basis = invariant_subspace(state.amplitudes(), &[&drift, &coupling]);
        let project = |op: &HermitianOperator| SmallHermitian::from_dmatrix(&(basis.adjoint() * op.matrix() * &basis));
        let drift_r = project(&drift);
        let coupling_r = project(&coupling);
        let initial = (basis.adjoint() * nalgebra::DVector::from_column_slice(state.amplitudes()))
            .iter()
            .copied()
            .collect();
        Ok(Self {
            n_qubits: model.n_qubits(),
            coupling_bound: model.coupling_bound(),
            drift_norm: drift_r.one_norm(),
            coupling_norm: coupling_r.one_norm(),
            drift: drift_r,
            coupling: coupling_r,
            basis,
            initial,
        })
    }

    /// Dimension of the subspace the dynamics is confined to.
    pub fn reduced_dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Reduced coefficients after the full pulse window.
    fn propagate_reduced(&self, ansatz: &PulseAnsatz, config: &EvolutionConfig) -> Result<Vec<Complex64>> {
        config.validate()?;
        let d = self.reduced_dim();
        let grid = config.grid(ansatz.duration());
        let mut x = self.initial.clone();
        let mut h = self.drift.clone();
        let mut scratch = [vec![ZERO; d], vec![ZERO; d]];
        for w in grid.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            let p = ansatz.value_unchecked(0.5 * (t0 + t1));
            if !p.is_finite() {
                return Err(Error::NonFinite(format!("pulse value at t = {}", 0.5 * (t0 + t1))));
            }
            let f = filter_pulse(p, self.coupling_bound);
            h.assign_combination(&self.drift, &self.coupling, f);
            exp_action(&h, self.drift_norm + f * self.coupling_norm, t1 - t0, &mut x, &mut scratch);
        }
        Ok(x)
    }

    /// Final state after the filtered pulse.
    pub fn evolve(&self, ansatz: &PulseAnsatz, config: &EvolutionConfig) -> Result<StateVector> {
        let x = self.propagate_reduced(ansatz, config)?;
        let full = &self.basis * nalgebra::DVector::from_vec(x);
        Ok(StateVector::from_raw(self.n_qubits, full.iter().copied().collect()))
    }

    /// Projects an observable onto the dynamical subspace.
    pub fn observable(&self, op: &HermitianOperator) -> Result<ReducedObservable> {
        if op.dim() != self.basis.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.basis.nrows(),
                actual: op.dim(),
            });
        }
        Ok(ReducedObservable {
            matrix: SmallHermitian::from_dmatrix(&(self.basis.adjoint() * op.matrix() * &self.basis)),
        })
    }

    /// `<psi(T)| O |psi(T)>` without leaving the subspace.
    pub fn expectation_after(
        &self,
        ansatz: &PulseAnsatz,
        config: &EvolutionConfig,
        observable: &ReducedObservable,
    ) -> Result<f64> {
        let x = self.propagate_reduced(ansatz, config)?;
        let e = observable.matrix.expectation(&x);
        Ok(e.re)
    }
}

/// Observable restricted to a propagator's subspace.
#[derive(Debug, Clone)]
pub struct ReducedObservable {
    matrix: SmallHermitian,
}

/// Propagates `state` from `0` to `T` under the filtered pulse.
pub fn evolve(
    state: &StateVector,
    model: &HardwareModel,
    ansatz: &PulseAnsatz,
    config: &EvolutionConfig,
) -> Result<StateVector> {
    PbvqoPropagator::new(model, state)?.evolve(ansatz, config)
}

/// `exp(-i H t) |psi>` through the eigendecomposition of `H`.
pub fn unitary_evolution(op: &HermitianOperator, t: f64, state: &StateVector) -> Result<StateVector> {
    if op.dim() != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            actual: state.dim(),
        });
    }
    let eig = op.matrix().clone().symmetric_eigen();
    let u = &eig.eigenvectors;
    let coeffs = u.adjoint() * nalgebra::DVector::from_column_slice(state.amplitudes());
    let phased = nalgebra::DVector::from_iterator(
        coeffs.len(),
        coeffs
            .iter()
            .zip(eig.eigenvalues.iter())
            .map(|(c, &l)| c * Complex64::from_polar(1.0, -l * t)),
    );
    let out = u * phased;
    Ok(StateVector::from_raw(state.n_qubits(), out.iter().copied().collect()))
}

/// Real part of `<psi|O|psi>`.
pub fn expectation(state: &StateVector, op: &HermitianOperator) -> Result<f64> {
    let applied = op.apply(state.amplitudes())?;
    let value: Complex64 = state
        .amplitudes()
        .iter()
        .zip(&applied)
        .map(|(a, b)| a.conj() * b)
        .sum();
    debug_assert!(value.im.abs() < 1e-10 * (1.0 + value.re.abs()), "imaginary residual {}", value.im);
    Ok(value.re)
}

/// `|(E - E_g) / E_g|`.
pub fn error_rate(energy: f64, ground_energy: f64) -> Result<f64> {
    if ground_energy == 0.0 {
        return Err(Error::ZeroGroundEnergy);
    }
    Ok(((energy - ground_energy) / ground_energy).abs())
}

/// Classical spin configuration; `bits[j] == false` is the +1 eigenstate of
/// the measured Pauli on qubit `j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bitstring(pub Vec<bool>);

impl Bitstring {
    pub fn from_index(index: usize, n_qubits: usize) -> Self {
        Self((0..n_qubits).map(|q| (index >> (n_qubits - 1 - q)) & 1 == 1).collect())
    }

    pub fn parse(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::invalid("bitstring", format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// In-place `H^{(x) N}` via the fast Walsh-Hadamard transform.
pub fn hadamard_all(amplitudes: &mut [Complex64]) {
    let n = amplitudes.len();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(2 * h) {
            for i in block..block + h {
                let (a, b) = (amplitudes[i], amplitudes[i + h]);
                amplitudes[i] = (a + b) * s;
                amplitudes[i + h] = (a - b) * s;
            }
        }
        h *= 2;
    }
}

/// Measures every qubit in the x basis `shots` times.
pub fn sample_x_basis(state: &StateVector, shots: usize, seed: u64) -> Result<Vec<Bitstring>> {
    if shots == 0 {
        return Err(Error::invalid("shots", "must be positive"));
    }
    let mut rotated = state.amplitudes().to_vec();
    hadamard_all(&mut rotated);
    let weights: Vec<f64> = rotated.iter().map(|z| z.norm_sqr()).collect();
    let dist = WeightedIndex::new(&weights).map_err(|e| Error::invalid("state", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..shots)
        .map(|_| Bitstring::from_index(dist.sample(&mut rng), state.n_qubits()))
        .collect())
}

/// Number of edges whose endpoints disagree.
pub fn cut_value(bitstring: &Bitstring, graph: &ProblemGraph) -> Result<usize> {
    if bitstring.len() != graph.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: graph.n_nodes(),
            actual: bitstring.len(),
        });
    }
    Ok(graph
        .edges()
        .iter()
        .filter(|&&(a, b)| bitstring.0[a] != bitstring.0[b])
        .count())
}

/// A Hamiltonian as a function of time, sampled for the energetic cost.
pub trait HamiltonianSchedule {
    fn hamiltonian_at(&self, t: f64) -> Result<HermitianOperator>;

    fn frobenius_norm_at(&self, t: f64) -> Result<f64> {
        Ok(self.hamiltonian_at(t)?.frobenius_norm())
    }
}

/// Drift plus filtered coupling for a given pulse.
#[derive(Debug, Clone)]
pub struct PbvqoSchedule {
    drift: HermitianOperator,
    coupling: HermitianOperator,
    ansatz: PulseAnsatz,
    coupling_bound: f64,
    gram: [f64; 3],
}

impl PbvqoSchedule {
    pub fn new(model: &HardwareModel, ansatz: PulseAnsatz) -> Result<Self> {
        let drift = drift_hamiltonian(model)?;
        let coupling = coupling_operator(model)?;
        let gram = [
            drift.frobenius_inner(&drift),
            drift.frobenius_inner(&coupling),
            coupling.frobenius_inner(&coupling),
        ];
        Ok(Self {
            drift,
            coupling,
            ansatz,
            coupling_bound: model.coupling_bound(),
            gram,
        })
    }

    fn coefficient(&self, t: f64) -> Result<f64> {
        let p = crate::pulses::evaluate_pulse(&self.ansatz, t.clamp(0.0, self.ansatz.duration()))?;
        Ok(filter_pulse(p, self.coupling_bound))
    }
}

impl HamiltonianSchedule for PbvqoSchedule {
    fn hamiltonian_at(&self, t: f64) -> Result<HermitianOperator> {
        let f = self.coefficient(t)?;
        self.drift.linear_combination(1.0, &self.coupling, f)
    }

    /// `||D + f C||_F^2 = <D,D> + 2 f <D,C> + f^2 <C,C>`.
    fn frobenius_norm_at(&self, t: f64) -> Result<f64> {
        let f = self.coefficient(t)?;
        let [dd, dc, cc] = self.gram;
        Ok((dd + 2.0 * f * dc + f * f * cc).max(0.0).sqrt())
    }
}

impl<F> HamiltonianSchedule for F
where
    F: Fn(f64) -> HermitianOperator,
{
    fn hamiltonian_at(&self, t: f64) -> Result<HermitianOperator> {
        Ok(self(t))
    }
}

/// Time-averaged Frobenius norm `(1/T) int_0^T ||H(t)|| dt` by the composite
/// trapezoidal rule on the evolution grid.
pub fn energetic_cost<S: HamiltonianSchedule + ?Sized>(
    schedule: &S,
    duration: f64,
    config: &EvolutionConfig,
) -> Result<f64> {
    if !(duration > 0.0) {
        return Err(Error::invalid("duration", "must be positive"));
    }
    config.validate()?;
    let grid = config.grid(duration);
    let values = grid
        .iter()
        .map(|&t| schedule.frobenius_norm_at(t))
        .collect::<Result<Vec<_>>>()?;
    let integral: f64 = grid
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum();
    Ok(integral / duration)
}
