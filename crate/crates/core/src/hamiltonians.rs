//! Dense operators on the qubit ring.
//!
//! Basis convention: qubit 0 is the most significant bit of the computational
//! basis index, so for `n` qubits qubit `q` lives at bit `n - 1 - q`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest register for which dense operators are built unless a model says otherwise.
pub const DEFAULT_MAX_QUBITS: usize = 14;

/// Absolute tolerance of the Hermiticity check.
pub const HERMITICITY_TOLERANCE: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// Interaction graph of the MAX-CUT instance.
///
/// Only rings are accepted: every node has degree two, except the two-node
/// case which is a single edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProblemGraph {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
}

impl ProblemGraph {
    /// The `n`-cycle `(j, j+1 mod n)`; for `n = 2` the single edge `(0, 1)`.
    pub fn ring(n_nodes: usize) -> Result<Self> {
        if n_nodes < 2 {
            return Err(Error::invalid("n_nodes", format!("a ring needs at least 2 nodes, got {n_nodes}")));
        }
        let edges = if n_nodes == 2 {
            vec![(0, 1)]
        } else {
            (0..n_nodes).map(|j| (j, (j + 1) % n_nodes)).collect()
        };
        Ok(Self { n_nodes, edges })
    }

    /// Builds a graph from an explicit edge list and validates it.
    pub fn new(n_nodes: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if n_nodes < 2 {
            return Err(Error::invalid("n_nodes", "need at least 2 nodes"));
        }
        let mut seen = std::collections::HashSet::new();
        let mut degree = vec![0usize; n_nodes];
        for &(a, b) in &edges {
            if a >= n_nodes || b >= n_nodes {
                return Err(Error::invalid("edges", format!("edge ({a}, {b}) out of range")));
            }
            if a == b {
                return Err(Error::invalid("edges", format!("self-loop on node {a}")));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::invalid("edges", format!("duplicate edge ({a}, {b})")));
            }
            degree[a] += 1;
            degree[b] += 1;
        }
        if n_nodes == 2 {
            if edges.len() != 1 {
                return Err(Error::invalid("edges", "two-node graph must be a single edge"));
            }
        } else if degree.iter().any(|&d| d != 2) {
            return Err(Error::invalid("edges", "graph is not 2-regular"));
        }
        Ok(Self { n_nodes, edges })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

/// Qubit count, local frequencies and coupling floor of the spin ring.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardwareModel {
    frequencies: Vec<f64>,
    coupling_bound: f64,
    topology: ProblemGraph,
    max_qubits: usize,
}

impl HardwareModel {
    pub fn new(frequencies: Vec<f64>, coupling_bound: f64) -> Result<Self> {
        if frequencies.is_empty() {
            return Err(Error::invalid("n_qubits", "must be positive"));
        }
        if frequencies.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("frequencies", "must be finite"));
        }
        if !(coupling_bound > 0.0 && coupling_bound.is_finite()) {
            return Err(Error::invalid("coupling_bound", format!("must be positive, got {coupling_bound}")));
        }
        let topology = if frequencies.len() == 1 {
            ProblemGraph {
                n_nodes: 1,
                edges: Vec::new(),
            }
        } else {
            ProblemGraph::ring(frequencies.len())?
        };
        Ok(Self {
            frequencies,
            coupling_bound,
            topology,
            max_qubits: DEFAULT_MAX_QUBITS,
        })
    }

    /// Every qubit at frequency `omega`.
    pub fn uniform(n_qubits: usize, omega: f64, coupling_bound: f64) -> Result<Self> {
        Self::new(vec![omega; n_qubits], coupling_bound)
    }

    pub fn with_max_qubits(mut self, max_qubits: usize) -> Self {
        self.max_qubits = max_qubits;
        self
    }

    pub fn n_qubits(&self) -> usize {
        self.frequencies.len()
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn coupling_bound(&self) -> f64 {
        self.coupling_bound
    }

    pub fn topology(&self) -> &ProblemGraph {
        &self.topology
    }

    fn check_cap(&self) -> Result<()> {
        check_cap(self.n_qubits(), self.max_qubits)
    }
}

fn check_cap(n_qubits: usize, cap: usize) -> Result<()> {
    if n_qubits > cap {
        Err(Error::DimensionOverflow { n_qubits, cap })
    } else {
        Ok(())
    }
}

/// Dense complex matrix that is Hermitian to within [`HERMITICITY_TOLERANCE`].
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: DMatrix<Complex64>,
}

impl HermitianOperator {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                actual: matrix.ncols(),
            });
        }
        let deviation = hermiticity_deviation(&matrix);
        if !(deviation <= HERMITICITY_TOLERANCE) {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self { matrix })
    }

    pub fn from_real(matrix: DMatrix<f64>) -> Result<Self> {
        Self::new(matrix.map(|x| Complex64::new(x, 0.0)))
    }

    /// `c` times the identity of dimension `dim`.
    pub fn scaled_identity(dim: usize, c: f64) -> Self {
        Self {
            matrix: DMatrix::from_diagonal_element(dim, dim, Complex64::new(c, 0.0)),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Real Frobenius inner product `Re tr(A† B)`.
    pub fn frobenius_inner(&self, other: &Self) -> f64 {
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }

    /// `a * self + b * other`; real coefficients keep the result Hermitian.
    pub fn linear_combination(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(Self {
            matrix: self.matrix.map(|z| z * a) + other.matrix.map(|z| z * b),
        })
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            matrix: self.matrix.map(|z| z * a),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|c| (0..n).all(|r| r == c || self.matrix[(r, c)] == ZERO))
    }

    fn is_real(&self) -> bool {
        self.matrix.iter().all(|z| z.im == 0.0)
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: v.len(),
            });
        }
        let n = self.dim();
        let mut out = vec![ZERO; n];
        for (c, &x) in v.iter().enumerate() {
            if x == ZERO {
                continue;
            }
            for (r, o) in out.iter_mut().enumerate() {
                *o += self.matrix[(r, c)] * x;
            }
        }
        Ok(out)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut values: Vec<f64> = if self.is_diagonal() {
            self.matrix.diagonal().iter().map(|z| z.re).collect()
        } else if self.is_real() {
            self.matrix.map(|z| z.re).symmetric_eigenvalues().iter().copied().collect()
        } else {
            self.matrix.clone().symmetric_eigenvalues().iter().copied().collect()
        };
        values.sort_by(f64::total_cmp);
        values
    }
}

pub(crate) fn hermiticity_deviation(matrix: &DMatrix<Complex64>) -> f64 {
    let n = matrix.nrows();
    let mut worst = 0.0f64;
    for c in 0..n {
        for r in c..n {
            let d = (matrix[(r, c)] - matrix[(c, r)].conj()).norm();
            if d.is_nan() {
                return f64::NAN;
            }
            worst = worst.max(d);
        }
    }
    worst
}

/// Dense matrix of the Pauli string `prod_k P_k` acting on `n_qubits` qubits.
///
/// Each column has exactly one nonzero entry, found by flipping the X/Y bits.
pub fn pauli_string(n_qubits: usize, factors: &[(usize, Pauli)]) -> DMatrix<Complex64> {
    let dim = 1usize << n_qubits;
    let mut flip = 0usize;
    for &(q, p) in factors {
        assert!(q < n_qubits, "qubit {q} out of range for {n_qubits} qubits");
        if matches!(p, Pauli::X | Pauli::Y) {
            flip ^= 1 << (n_qubits - 1 - q);
        }
    }
    let mut m = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut phase = ONE;
        for &(q, p) in factors {
            let bit = (col >> (n_qubits - 1 - q)) & 1;
            phase *= match (p, bit) {
                (Pauli::X, _) => ONE,
                (Pauli::Y, 0) => I,
                (Pauli::Y, _) => -I,
                (Pauli::Z, 0) => ONE,
                (Pauli::Z, _) => -ONE,
            };
        }
        m[(col ^ flip, col)] += phase;
    }
    m
}

fn two_body_sum(n_qubits: usize, edges: &[(usize, usize)], p: Pauli) -> DMatrix<Complex64> {
    let dim = 1usize << n_qubits;
    edges.iter().fold(DMatrix::zeros(dim, dim), |acc, &(a, b)| {
        acc + pauli_string(n_qubits, &[(a, p), (b, p)])
    })
}

/// `sum_j (omega_j / 2) Z_j`.
pub fn drift_hamiltonian(model: &HardwareModel) -> Result<HermitianOperator> {
    model.check_cap()?;
    let n = model.n_qubits();
    let diag = (0..1usize << n).map(|s| {
        let e: f64 = model
            .frequencies
            .iter()
            .enumerate()
            .map(|(q, w)| if (s >> (n - 1 - q)) & 1 == 0 { 0.5 * w } else { -0.5 * w })
            .sum();
        Complex64::new(e, 0.0)
    });
    let diag = nalgebra::DVector::from_iterator(1 << n, diag);
    Ok(HermitianOperator {
        matrix: DMatrix::from_diagonal(&diag),
    })
}

/// `sum_{(i,j)} Y_i Y_j` over the ring edges.
pub fn coupling_operator(model: &HardwareModel) -> Result<HermitianOperator> {
    model.check_cap()?;
    Ok(HermitianOperator {
        matrix: two_body_sum(model.n_qubits(), model.topology.edges(), Pauli::Y),
    })
}

/// MAX-CUT Hamiltonian in the x basis, `sum_{(i,j)} X_i X_j`.
pub fn problem_hamiltonian(graph: &ProblemGraph) -> Result<HermitianOperator> {
    check_cap(graph.n_nodes(), DEFAULT_MAX_QUBITS)?;
    Ok(HermitianOperator {
        matrix: two_body_sum(graph.n_nodes(), graph.edges(), Pauli::X),
    })
}

/// MAX-CUT Hamiltonian in the z basis, `sum_{(i,j)} Z_i Z_j`.
pub fn qaoa_problem_hamiltonian(graph: &ProblemGraph) -> Result<HermitianOperator> {
    let n = graph.n_nodes();
    check_cap(n, DEFAULT_MAX_QUBITS)?;
    let diag = (0..1usize << n).map(|s| {
        let e: i64 = graph
            .edges()
            .iter()
            .map(|&(a, b)| {
                let ba = (s >> (n - 1 - a)) & 1;
                let bb = (s >> (n - 1 - b)) & 1;
                if ba == bb {
                    1
                } else {
                    -1
                }
            })
            .sum();
        Complex64::new(e as f64, 0.0)
    });
    let diag = nalgebra::DVector::from_iterator(1 << n, diag);
    Ok(HermitianOperator {
        matrix: DMatrix::from_diagonal(&diag),
    })
}

/// `sum_j X_j`.
pub fn mixer_hamiltonian(n_qubits: usize) -> Result<HermitianOperator> {
    if n_qubits == 0 {
        return Err(Error::invalid("n_qubits", "must be positive"));
    }
    check_cap(n_qubits, DEFAULT_MAX_QUBITS)?;
    let dim = 1usize << n_qubits;
    let matrix = (0..n_qubits).fold(DMatrix::zeros(dim, dim), |acc, q| {
        acc + pauli_string(n_qubits, &[(q, Pauli::X)])
    });
    Ok(HermitianOperator { matrix })
}

/// Smallest eigenvalue.
pub fn ground_energy(op: &HermitianOperator) -> f64 {
    op.eigenvalues()[0]
}

/// Checks Hermiticity of a raw matrix before diagonalizing it.
pub fn ground_energy_of(matrix: DMatrix<Complex64>) -> Result<f64> {
    HermitianOperator::new(matrix).map(|op| ground_energy(&op))
}
