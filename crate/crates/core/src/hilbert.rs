//! Truncated Fock space of the cavity, the two-level qubit, and their joint
//! space.
//!
//! Joint vectors are ordered with the qubit factor first: the amplitude of
//! `|q, n⟩` lives at index `q * fock_dim + n`, with `q = 0` for `|g⟩` and
//! `q = 1` for `|e⟩`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CVector = DVector<C64>;
pub type CMatrix = DMatrix<C64>;

pub const QUBIT_DIM: usize = 2;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

const PURE_NORM_TOL: f64 = 1e-9;
const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-8;
const MIN_EIGEN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HilbertConfig {
    fock_dim: usize,
}

impl HilbertConfig {
    pub fn new(fock_dim: usize) -> Result<Self> {
        if fock_dim < 2 {
            return Err(Error::InvalidHilbert(format!(
                "fock_dim must be at least 2, got {fock_dim}"
            )));
        }
        Ok(Self { fock_dim })
    }

    pub fn fock_dim(&self) -> usize {
        self.fock_dim
    }

    pub fn total_dim(&self) -> usize {
        QUBIT_DIM * self.fock_dim
    }

    #[inline]
    pub fn index(&self, qubit: usize, photons: usize) -> usize {
        qubit * self.fock_dim + photons
    }

    /// Truncation safety rule `r² + 6r ≤ N_F` for a coherent amplitude of
    /// modulus `r`.
    pub fn is_amplitude_safe(&self, modulus: f64) -> bool {
        modulus * modulus + 6.0 * modulus <= self.fock_dim as f64
    }

    pub fn check_amplitude(&self, amplitude: C64) -> Result<()> {
        let r = amplitude.norm();
        if self.is_amplitude_safe(r) {
            Ok(())
        } else {
            Err(Error::Truncation {
                amplitude: r,
                fock_dim: self.fock_dim,
            })
        }
    }

    /// Smallest `fock_dim` that satisfies the safety rule for `modulus`.
    pub fn min_fock_dim_for(modulus: f64) -> usize {
        (modulus * modulus + 6.0 * modulus).ceil().max(2.0) as usize
    }
}

/// Dense complex operator on a factor space or on the joint space.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    matrix: CMatrix,
    label: String,
}

impl Operator {
    pub fn new(matrix: CMatrix, label: impl Into<String>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        Ok(Self {
            matrix,
            label: label.into(),
        })
    }

    pub(crate) fn from_square(matrix: CMatrix, label: impl Into<String>) -> Self {
        debug_assert_eq!(matrix.nrows(), matrix.ncols());
        Self {
            matrix,
            label: label.into(),
        }
    }

    pub fn identity(dim: usize, label: impl Into<String>) -> Self {
        Self::from_square(CMatrix::identity(dim, dim), label)
    }

    pub fn from_diagonal(diag: &CVector, label: impl Into<String>) -> Self {
        Self::from_square(CMatrix::from_diagonal(diag), label)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dagger(&self) -> Self {
        Self::from_square(self.matrix.adjoint(), format!("{}†", self.label))
    }

    /// `self · other`.
    pub fn compose(&self, other: &Operator) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(Self::from_square(
            &self.matrix * &other.matrix,
            format!("{}·{}", self.label, other.label),
        ))
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self::from_square(self.matrix.map(|z| z * factor), self.label.clone())
    }

    pub fn apply(&self, v: &CVector) -> Result<CVector> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(&self.matrix * v)
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|j| (0..n).all(|i| i == j || self.matrix[(i, j)].norm() <= tol))
    }

    pub fn diagonal(&self) -> CVector {
        self.matrix.diagonal()
    }

    /// `max |(U†U − I)_{ij}|` over the full matrix.
    pub fn unitarity_defect(&self) -> f64 {
        self.unitarity_defect_on_block(self.dim())
    }

    /// Unitarity defect restricted to the leading `block × block` corner.
    pub fn unitarity_defect_on_block(&self, block: usize) -> f64 {
        let prod = self.matrix.adjoint() * &self.matrix;
        let block = block.min(self.dim());
        let mut worst: f64 = 0.0;
        for j in 0..block {
            for i in 0..block {
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((prod[(i, j)] - target).norm());
            }
        }
        worst
    }

    /// Largest entrywise deviation between two operators of equal dimension.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// `a` on the cavity factor: `⟨n−1|a|n⟩ = √n`.
pub fn annihilation(cfg: &HilbertConfig) -> Operator {
    let n = cfg.fock_dim();
    let mut m = CMatrix::zeros(n, n);
    for k in 1..n {
        m[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    Operator::from_square(m, "a")
}

pub fn creation(cfg: &HilbertConfig) -> Operator {
    let a = annihilation(cfg);
    Operator::from_square(a.matrix.adjoint(), "a†")
}

pub fn number_operator(cfg: &HilbertConfig) -> Operator {
    let diag = CVector::from_fn(cfg.fock_dim(), |k, _| C64::new(k as f64, 0.0));
    Operator::from_diagonal(&diag, "n")
}

/// `Π = exp(iπ a†a) = diag((−1)^n)`.
pub fn parity_operator(cfg: &HilbertConfig) -> Operator {
    let diag = CVector::from_fn(cfg.fock_dim(), |k, _| {
        if k % 2 == 0 {
            ONE
        } else {
            -ONE
        }
    });
    Operator::from_diagonal(&diag, "Π")
}

pub fn cavity_identity(cfg: &HilbertConfig) -> Operator {
    Operator::identity(cfg.fock_dim(), "I_c")
}

/// `D_α = exp(α a† − α* a)` computed as the matrix exponential of the
/// truncated generator.
pub fn displacement_operator(alpha: C64, cfg: &HilbertConfig) -> Result<Operator> {
    cfg.check_amplitude(alpha)?;
    let a = annihilation(cfg);
    let gen = a.matrix.adjoint() * alpha - &a.matrix * alpha.conj();
    Ok(Operator::from_square(
        gen.exp(),
        format!("D({:.6}{:+.6}i)", alpha.re, alpha.im),
    ))
}

pub fn qubit_identity() -> Operator {
    Operator::identity(QUBIT_DIM, "I_q")
}

/// `σ_z = |e⟩⟨e| − |g⟩⟨g|`.
pub fn sigma_z() -> Operator {
    Operator::from_diagonal(&CVector::from_vec(vec![-ONE, ONE]), "σz")
}

/// `σ₋ = |g⟩⟨e|`.
pub fn sigma_minus() -> Operator {
    let mut m = CMatrix::zeros(2, 2);
    m[(0, 1)] = ONE;
    Operator::from_square(m, "σ-")
}

/// `|e⟩⟨e|`.
pub fn excited_projector() -> Operator {
    Operator::from_diagonal(&CVector::from_vec(vec![ZERO, ONE]), "|e><e|")
}

pub fn ground_projector() -> Operator {
    Operator::from_diagonal(&CVector::from_vec(vec![ONE, ZERO]), "|g><g|")
}

/// Kronecker product with the qubit factor first.
pub fn tensor(qubit_op: &Operator, cavity_op: &Operator, cfg: &HilbertConfig) -> Result<Operator> {
    if qubit_op.dim() != QUBIT_DIM {
        return Err(Error::DimensionMismatch {
            expected: QUBIT_DIM,
            got: qubit_op.dim(),
        });
    }
    if cavity_op.dim() != cfg.fock_dim() {
        return Err(Error::DimensionMismatch {
            expected: cfg.fock_dim(),
            got: cavity_op.dim(),
        });
    }
    Ok(Operator::from_square(
        qubit_op.matrix.kronecker(&cavity_op.matrix),
        format!("{}⊗{}", qubit_op.label, cavity_op.label),
    ))
}

/// Fock basis vector `|n⟩` of the cavity.
pub fn fock_state(n: usize, cfg: &HilbertConfig) -> CVector {
    let mut v = CVector::zeros(cfg.fock_dim());
    v[n] = ONE;
    v
}

/// `(c_g|g⟩ + c_e|e⟩) ⊗ |cavity⟩`.
pub fn product_vector(c_g: C64, c_e: C64, cavity: &CVector) -> CVector {
    let n = cavity.len();
    let mut v = CVector::zeros(2 * n);
    for k in 0..n {
        v[k] = c_g * cavity[k];
        v[n + k] = c_e * cavity[k];
    }
    v
}

/// Normalize a vector in place and return its former norm.
pub fn normalize(v: &mut CVector) -> f64 {
    let norm = v.norm();
    if norm > 0.0 {
        v.unscale_mut(norm);
    }
    norm
}

/// `|⟨a|b⟩|²` for unit vectors.
pub fn overlap_sq(a: &CVector, b: &CVector) -> f64 {
    a.dotc(b).norm_sqr()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    Pure(CVector),
    Density(CMatrix),
}

/// Pure or mixed state of the qubit ⊗ cavity system.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    cfg: HilbertConfig,
    repr: Representation,
    /// Simulated time in microseconds.
    pub time_tag: f64,
}

impl JointState {
    pub fn pure(cfg: HilbertConfig, psi: CVector) -> Result<Self> {
        let s = Self {
            cfg,
            repr: Representation::Pure(psi),
            time_tag: 0.0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn density(cfg: HilbertConfig, rho: CMatrix) -> Result<Self> {
        let s = Self {
            cfg,
            repr: Representation::Density(rho),
            time_tag: 0.0,
        };
        s.validate()?;
        Ok(s)
    }

    pub(crate) fn from_parts_unchecked(cfg: HilbertConfig, repr: Representation, time_tag: f64) -> Self {
        Self { cfg, repr, time_tag }
    }

    /// `(c_g|g⟩ + c_e|e⟩) ⊗ |cavity⟩` as a pure state.
    pub fn product(cfg: HilbertConfig, c_g: C64, c_e: C64, cavity: &CVector) -> Result<Self> {
        if cavity.len() != cfg.fock_dim() {
            return Err(Error::DimensionMismatch {
                expected: cfg.fock_dim(),
                got: cavity.len(),
            });
        }
        Self::pure(cfg, product_vector(c_g, c_e, cavity))
    }

    /// `|g⟩ ⊗ |cavity⟩`.
    pub fn ground_with(cfg: HilbertConfig, cavity: &CVector) -> Result<Self> {
        Self::product(cfg, ONE, ZERO, cavity)
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time_tag = t;
        self
    }

    pub fn config(&self) -> &HilbertConfig {
        &self.cfg
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    pub fn into_representation(self) -> Representation {
        self.repr
    }

    pub fn is_pure_representation(&self) -> bool {
        matches!(self.repr, Representation::Pure(_))
    }

    pub fn dim(&self) -> usize {
        self.cfg.total_dim()
    }

    pub fn as_vector(&self) -> Option<&CVector> {
        match &self.repr {
            Representation::Pure(v) => Some(v),
            Representation::Density(_) => None,
        }
    }

    /// Density matrix (promotes pure states).
    pub fn density_matrix(&self) -> CMatrix {
        match &self.repr {
            Representation::Pure(v) => v * v.adjoint(),
            Representation::Density(m) => m.clone(),
        }
    }

    pub fn into_density(self) -> Self {
        match self.repr {
            Representation::Pure(ref v) => Self {
                cfg: self.cfg,
                repr: Representation::Density(v * v.adjoint()),
                time_tag: self.time_tag,
            },
            Representation::Density(_) => self,
        }
    }

    pub fn trace(&self) -> C64 {
        match &self.repr {
            Representation::Pure(v) => C64::new(v.norm_squared(), 0.0),
            Representation::Density(m) => m.trace(),
        }
    }

    pub fn purity(&self) -> f64 {
        match &self.repr {
            Representation::Pure(v) => v.norm_squared().powi(2),
            Representation::Density(m) => m.iter().map(|z| z.norm_sqr()).sum(),
        }
    }

    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: op.dim(),
            });
        }
        Ok(match &self.repr {
            Representation::Pure(v) => v.dotc(&(op.matrix() * v)),
            Representation::Density(m) => (op.matrix() * m).trace(),
        })
    }

    /// Check the representation invariants: unit norm for vectors; Hermitian,
    /// unit-trace, positive semidefinite for density matrices.
    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        match &self.repr {
            Representation::Pure(v) => {
                if v.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: v.len(),
                    });
                }
                let norm = v.norm();
                if (norm - 1.0).abs() > PURE_NORM_TOL {
                    return Err(Error::InvalidState(format!("vector norm {norm}")));
                }
            }
            Representation::Density(m) => {
                if m.nrows() != dim || m.ncols() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: m.nrows(),
                    });
                }
                let herm = hermiticity_defect(m);
                if herm > HERMITIAN_TOL {
                    return Err(Error::InvalidState(format!("hermiticity defect {herm:.3e}")));
                }
                let tr = m.trace();
                if (tr - ONE).norm() > TRACE_TOL {
                    return Err(Error::InvalidState(format!("trace {tr}")));
                }
                if !is_psd_within(m, MIN_EIGEN_TOL) {
                    let min = min_eigenvalue(m);
                    return Err(Error::InvalidState(format!("minimum eigenvalue {min:.3e}")));
                }
            }
        }
        Ok(())
    }
}

pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Replace `m` by `(m + m†)/2`.
pub fn symmetrize(m: &mut CMatrix) {
    let n = m.nrows();
    for j in 0..n {
        for i in 0..j {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
        m[(j, j)] = C64::new(m[(j, j)].re, 0.0);
    }
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// `λ_min(m) ≥ −tol` for a Hermitian matrix.
pub fn is_psd_within(m: &CMatrix, tol: f64) -> bool {
    min_eigenvalue(m) >= -tol
}

/// `½‖a − b‖₁` for Hermitian matrices.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let diff = a - b;
    0.5 * diff.symmetric_eigenvalues().iter().map(|x| x.abs()).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    Qubit,
    Cavity,
}

/// Reduced density matrix of the kept factor.
pub fn partial_trace(state: &JointState, keep: Subsystem) -> CMatrix {
    let n = state.cfg.fock_dim();
    match (&state.repr, keep) {
        (Representation::Pure(v), Subsystem::Cavity) => {
            let g = v.rows(0, n);
            let e = v.rows(n, n);
            g * g.adjoint() + e * e.adjoint()
        }
        (Representation::Pure(v), Subsystem::Qubit) => {
            let g = v.rows(0, n);
            let e = v.rows(n, n);
            let mut out = CMatrix::zeros(2, 2);
            out[(0, 0)] = g.dotc(&g);
            out[(0, 1)] = e.dotc(&g);
            out[(1, 0)] = g.dotc(&e);
            out[(1, 1)] = e.dotc(&e);
            out
        }
        (Representation::Density(m), Subsystem::Cavity) => {
            m.view((0, 0), (n, n)) + m.view((n, n), (n, n))
        }
        (Representation::Density(m), Subsystem::Qubit) => {
            let mut out = CMatrix::zeros(2, 2);
            for qa in 0..2 {
                for qb in 0..2 {
                    let mut acc = ZERO;
                    for k in 0..n {
                        acc += m[(qa * n + k, qb * n + k)];
                    }
                    out[(qa, qb)] = acc;
                }
            }
            out
        }
    }
}

/// Fidelity `⟨t|ρ|t⟩` (or `|⟨t|ψ⟩|²`) against a pure target.
pub fn fidelity(state: &JointState, target: &JointState) -> Result<f64> {
    let t = target
        .as_vector()
        .ok_or_else(|| Error::InvalidArgument("fidelity target must be pure".into()))?;
    if state.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            got: state.dim(),
        });
    }
    Ok(fidelity_to_vector(state, t))
}

/// `⟨t|ρ|t⟩` for a normalized target vector.
pub fn fidelity_to_vector(state: &JointState, t: &CVector) -> f64 {
    let f = match &state.repr {
        Representation::Pure(v) => t.dotc(v).norm_sqr(),
        Representation::Density(m) => t.dotc(&(m * t)).re,
    };
    f.clamp(0.0, 1.0)
}

/// `⟨t|ρ|t⟩` for a cavity density matrix and vector.
pub fn cavity_fidelity(rho: &CMatrix, t: &CVector) -> f64 {
    t.dotc(&(rho * t)).re.clamp(0.0, 1.0)
}
