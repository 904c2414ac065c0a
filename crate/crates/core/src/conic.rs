//! Backend-neutral conic program builder and the solver adapter contract.
//!
//! A program is a vector of real scalars (free scalars plus the upper
//! triangles of symmetric matrix variables), a list of constraint blocks
//! each asserting that a vector of affine expressions lies in a cone, and a
//! linear objective. Blocks come in three kinds: zero (equalities),
//! nonnegative, and positive semidefinite. PSD blocks are stored as the
//! upper triangle of a symmetric affine matrix in column-major order, so
//! symmetry holds by construction.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::time::Instant;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Environment variable that selects the solver adapter by name.
pub const SOLVER_ENV: &str = "HYBRID_CIS_SOLVER";

#[derive(Debug, Error)]
pub enum ConicError {
    #[error("variable index {0} is not registered in this program")]
    UnknownVariable(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("solver unavailable: {0}")]
    SolverUnavailable(String),
    #[error("invalid solver option: {0}")]
    InvalidOption(String),
    #[error("solver setup failed: {0}")]
    Setup(String),
}

/// Position of `(i, j)` (any order) in the column-major upper triangle.
#[inline]
pub fn tri_index(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    j * (j + 1) / 2 + i
}

#[inline]
pub fn tri_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ScalarVar(usize);

impl ScalarVar {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Handle to a symmetric matrix variable. Entries are scalarized as the
/// upper triangle starting at `offset`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixVar {
    offset: usize,
    dim: usize,
}

impl MatrixVar {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> ScalarVar {
        assert!(i < self.dim && j < self.dim, "matrix entry out of range");
        ScalarVar(self.offset + tri_index(i, j))
    }

    pub fn affine(&self) -> AffineSymMatrix {
        let mut m = AffineSymMatrix::zeros(self.dim);
        for j in 0..self.dim {
            for i in 0..=j {
                m.entries[tri_index(i, j)] = LinExpr::var(self.entry(i, j));
            }
        }
        m
    }
}

/// Affine expression `constant + Σ coeff·var`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinExpr {
    terms: BTreeMap<usize, f64>,
    constant: f64,
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self { terms: BTreeMap::new(), constant: c }
    }

    pub fn var(v: ScalarVar) -> Self {
        Self::term(v, 1.0)
    }

    pub fn term(v: ScalarVar, coeff: f64) -> Self {
        let mut e = Self::zero();
        e.add_term(v, coeff);
        e
    }

    pub fn add_term(&mut self, v: ScalarVar, coeff: f64) {
        if coeff == 0.0 {
            return;
        }
        let slot = self.terms.entry(v.0).or_insert(0.0);
        *slot += coeff;
        if *slot == 0.0 {
            self.terms.remove(&v.0);
        }
    }

    pub fn add_constant(&mut self, c: f64) {
        self.constant += c;
    }

    /// `self += scale * other`
    pub fn add_scaled(&mut self, other: &LinExpr, scale: f64) {
        if scale == 0.0 {
            return;
        }
        for (&k, &c) in &other.terms {
            self.add_term(ScalarVar(k), c * scale);
        }
        self.constant += other.constant * scale;
    }

    pub fn scaled(&self, s: f64) -> LinExpr {
        let mut out = LinExpr::zero();
        out.add_scaled(self, s);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.constant == 0.0
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn constant_term(&self) -> f64 {
        self.constant
    }

    pub fn terms(&self) -> impl Iterator<Item = (ScalarVar, f64)> + '_ {
        self.terms.iter().map(|(&k, &c)| (ScalarVar(k), c))
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(&k, &c)| c * values[k]).sum::<f64>()
    }

    fn max_var(&self) -> Option<usize> {
        self.terms.keys().next_back().copied()
    }
}

impl From<f64> for LinExpr {
    fn from(c: f64) -> Self {
        LinExpr::constant(c)
    }
}

impl From<ScalarVar> for LinExpr {
    fn from(v: ScalarVar) -> Self {
        LinExpr::var(v)
    }
}

impl AddAssign<&LinExpr> for LinExpr {
    fn add_assign(&mut self, rhs: &LinExpr) {
        self.add_scaled(rhs, 1.0);
    }
}

impl Add for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: LinExpr) -> LinExpr {
        self.add_scaled(&rhs, 1.0);
        self
    }
}

impl Sub for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, rhs: LinExpr) -> LinExpr {
        self.add_scaled(&rhs, -1.0);
        self
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self.scaled(-1.0)
    }
}

impl Mul<f64> for LinExpr {
    type Output = LinExpr;
    fn mul(self, rhs: f64) -> LinExpr {
        self.scaled(rhs)
    }
}

/// Symmetric matrix whose entries are affine in the decision variables.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineSymMatrix {
    dim: usize,
    entries: Vec<LinExpr>,
}

impl AffineSymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, entries: vec![LinExpr::zero(); tri_len(dim)] }
    }

    /// Symmetric part of a constant matrix.
    pub fn from_const(m: &DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "constant matrix must be square");
        let mut out = Self::zeros(m.nrows());
        for j in 0..m.ncols() {
            for i in 0..=j {
                out.entries[tri_index(i, j)] = LinExpr::constant(0.5 * (m[(i, j)] + m[(j, i)]));
            }
        }
        out
    }

    /// `expr · m` for a constant symmetric `m`.
    pub fn const_times(m: &DMatrix<f64>, expr: &LinExpr) -> Self {
        let mut out = Self::zeros(m.nrows());
        for j in 0..m.ncols() {
            for i in 0..=j {
                let c = 0.5 * (m[(i, j)] + m[(j, i)]);
                out.entries[tri_index(i, j)].add_scaled(expr, c);
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &LinExpr {
        &self.entries[tri_index(i, j)]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut LinExpr {
        &mut self.entries[tri_index(i, j)]
    }

    /// Upper-triangle entries in column-major order.
    pub fn upper_triangle(&self) -> &[LinExpr] {
        &self.entries
    }

    pub fn add_scaled(&mut self, other: &AffineSymMatrix, s: f64) {
        assert_eq!(self.dim, other.dim, "affine matrix dimension mismatch");
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            a.add_scaled(b, s);
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = Self::zeros(self.dim);
        out.add_scaled(self, s);
        out
    }

    /// `T X Tᵀ` for a constant `T` with `dim` columns.
    pub fn congruence(&self, t: &DMatrix<f64>) -> Self {
        assert_eq!(t.ncols(), self.dim, "congruence dimension mismatch");
        self.sym_product(t, t).scaled(0.5)
    }

    /// `A X Bᵀ + B X Aᵀ` for constant `A`, `B` of equal shape.
    pub fn sym_product(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Self {
        assert_eq!(a.shape(), b.shape(), "sym_product shape mismatch");
        assert_eq!(a.ncols(), self.dim, "sym_product dimension mismatch");
        let r = a.nrows();
        let n = self.dim;
        let mut out = Self::zeros(r);
        for q in 0..r {
            for p in 0..=q {
                let target = &mut out.entries[tri_index(p, q)];
                for i in 0..n {
                    for j in 0..n {
                        let c = a[(p, i)] * b[(q, j)] + b[(p, i)] * a[(q, j)];
                        if c != 0.0 {
                            target.add_scaled(&self.entries[tri_index(i, j)], c);
                        }
                    }
                }
            }
        }
        out
    }

    pub fn eval(&self, values: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for j in 0..self.dim {
            for i in 0..=j {
                let v = self.entries[tri_index(i, j)].eval(values);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeKind {
    Zero,
    Nonnegative,
    /// Upper triangle of a `dim × dim` symmetric matrix.
    Psd(usize),
}

impl ConeKind {
    fn tag(&self) -> String {
        match self {
            ConeKind::Zero => "zero".into(),
            ConeKind::Nonnegative => "nonneg".into(),
            ConeKind::Psd(d) => format!("psd {d}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockId(usize);

#[derive(Clone, Debug)]
pub struct ConstraintBlock {
    pub kind: ConeKind,
    pub rows: Vec<LinExpr>,
}

#[derive(Clone, Debug)]
enum VarLabel {
    Scalar(String),
    Entry,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Maximize,
    Minimize,
}

/// Single-writer builder; `finalize` consumes it and freezes the program.
#[derive(Debug, Default)]
pub struct ProgramBuilder {
    labels: Vec<VarLabel>,
    matrices: Vec<(String, MatrixVar)>,
    blocks: Vec<ConstraintBlock>,
    objective: Option<(Sense, LinExpr)>,
}

impl ProgramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n_vars(&self) -> usize {
        self.labels.len()
    }

    pub fn add_scalar(&mut self, name: impl Into<String>) -> ScalarVar {
        self.labels.push(VarLabel::Scalar(name.into()));
        ScalarVar(self.labels.len() - 1)
    }

    /// Free symmetric matrix variable.
    pub fn add_matrix(&mut self, name: impl Into<String>, dim: usize) -> MatrixVar {
        let offset = self.labels.len();
        self.labels.extend(std::iter::repeat_n(VarLabel::Entry, tri_len(dim)));
        let m = MatrixVar { offset, dim };
        self.matrices.push((name.into(), m));
        m
    }

    /// Symmetric matrix variable constrained to be positive semidefinite.
    pub fn add_psd_matrix(&mut self, name: impl Into<String>, dim: usize) -> MatrixVar {
        let m = self.add_matrix(name, dim);
        if dim > 0 {
            let aff = m.affine();
            self.blocks.push(ConstraintBlock { kind: ConeKind::Psd(dim), rows: aff.entries });
        }
        m
    }

    fn check_rows(&self, rows: &[LinExpr]) -> Result<(), ConicError> {
        for r in rows {
            if let Some(k) = r.max_var() {
                if k >= self.labels.len() {
                    return Err(ConicError::UnknownVariable(k));
                }
            }
        }
        Ok(())
    }

    /// Adds a block asserting `rows ∈ cone`.
    pub fn add_linear(&mut self, rows: Vec<LinExpr>, cone: ConeKind) -> Result<BlockId, ConicError> {
        self.check_rows(&rows)?;
        if let ConeKind::Psd(d) = cone {
            if rows.len() != tri_len(d) {
                return Err(ConicError::DimensionMismatch { expected: tri_len(d), found: rows.len() });
            }
        }
        self.blocks.push(ConstraintBlock { kind: cone, rows });
        Ok(BlockId(self.blocks.len() - 1))
    }

    pub fn add_equality(&mut self, expr: LinExpr) -> Result<BlockId, ConicError> {
        self.add_linear(vec![expr], ConeKind::Zero)
    }

    /// `expr ≥ 0`
    pub fn add_nonnegative(&mut self, expr: LinExpr) -> Result<BlockId, ConicError> {
        self.add_linear(vec![expr], ConeKind::Nonnegative)
    }

    /// `lhs ≤ rhs`
    pub fn add_le(&mut self, lhs: LinExpr, rhs: LinExpr) -> Result<BlockId, ConicError> {
        self.add_nonnegative(rhs - lhs)
    }

    /// `m ⪰ 0`
    pub fn add_psd(&mut self, m: &AffineSymMatrix) -> Result<BlockId, ConicError> {
        self.add_linear(m.entries.clone(), ConeKind::Psd(m.dim))
    }

    pub fn set_objective(&mut self, sense: Sense, expr: LinExpr) -> Result<(), ConicError> {
        self.check_rows(std::slice::from_ref(&expr))?;
        self.objective = Some((sense, expr));
        Ok(())
    }

    pub fn maximize(&mut self, expr: LinExpr) -> Result<(), ConicError> {
        self.set_objective(Sense::Maximize, expr)
    }

    pub fn finalize(self) -> ConicProgram {
        let objective = self.objective.unwrap_or((Sense::Maximize, LinExpr::zero()));
        ConicProgram {
            labels: self.labels,
            matrices: self.matrices,
            blocks: self.blocks,
            sense: objective.0,
            objective: objective.1,
        }
    }
}

/// Frozen conic program.
#[derive(Debug, Clone)]
pub struct ConicProgram {
    labels: Vec<VarLabel>,
    matrices: Vec<(String, MatrixVar)>,
    blocks: Vec<ConstraintBlock>,
    sense: Sense,
    objective: LinExpr,
}

impl ConicProgram {
    pub fn n_vars(&self) -> usize {
        self.labels.len()
    }

    pub fn blocks(&self) -> &[ConstraintBlock] {
        &self.blocks
    }

    pub fn n_rows(&self) -> usize {
        self.blocks.iter().map(|b| b.rows.len()).sum()
    }

    pub fn objective(&self) -> (Sense, &LinExpr) {
        (self.sense, &self.objective)
    }

    /// Sparse triplet text dump; stable ordering makes it diffable.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "conic-program v1");
        let _ = writeln!(out, "vars {}", self.labels.len());
        for (name, m) in &self.matrices {
            let _ = writeln!(out, "matrix {} dim {} offset {}", name, m.dim, m.offset);
        }
        for (k, l) in self.labels.iter().enumerate() {
            if let VarLabel::Scalar(name) = l {
                let _ = writeln!(out, "scalar {k} {name}");
            }
        }
        let sense = match self.sense {
            Sense::Maximize => "maximize",
            Sense::Minimize => "minimize",
        };
        let _ = writeln!(out, "objective {sense} const {:e}", self.objective.constant);
        for (v, c) in self.objective.terms() {
            let _ = writeln!(out, "c {} {:e}", v.0, c);
        }
        let mut row = 0usize;
        for (b, block) in self.blocks.iter().enumerate() {
            let _ = writeln!(out, "block {b} {} rows {}", block.kind.tag(), block.rows.len());
            for r in &block.rows {
                for (v, c) in r.terms() {
                    let _ = writeln!(out, "a {row} {} {:e}", v.0, c);
                }
                if r.constant != 0.0 {
                    let _ = writeln!(out, "b {row} {:e}", r.constant);
                }
                row += 1;
            }
        }
        out
    }

    /// SHA-256 of the dump, hex encoded.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.dump().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Worst violation of the cone memberships at `values` (0 when feasible).
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for block in &self.blocks {
            let vals: Vec<f64> = block.rows.iter().map(|r| r.eval(values)).collect();
            let v = match block.kind {
                ConeKind::Zero => vals.iter().fold(0.0_f64, |a, x| a.max(x.abs())),
                ConeKind::Nonnegative => vals.iter().fold(0.0_f64, |a, x| a.max(-x)),
                ConeKind::Psd(d) => {
                    let mut m = DMatrix::zeros(d, d);
                    for j in 0..d {
                        for i in 0..=j {
                            m[(i, j)] = vals[tri_index(i, j)];
                            m[(j, i)] = vals[tri_index(i, j)];
                        }
                    }
                    let min_eig = m.symmetric_eigenvalues().iter().fold(f64::INFINITY, |a, &x| a.min(x));
                    (-min_eig).max(0.0)
                }
            };
            worst = worst.max(v);
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub solver: String,
    pub raw_status: String,
    pub iterations: u32,
    /// Wall-clock time; left out of serialized output so solution files are reproducible.
    #[serde(default, skip_serializing)]
    pub solve_time_s: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub relative_gap: f64,
    /// Worst cone violation of the returned point, measured on our side.
    pub max_violation: f64,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub status: SolveStatus,
    values: Option<Vec<f64>>,
    pub objective: Option<f64>,
    pub stats: SolveStats,
}

impl Solution {
    pub fn values(&self) -> Option<&[f64]> {
        self.values.as_deref()
    }

    pub fn value(&self, v: ScalarVar) -> Option<f64> {
        self.values.as_ref().map(|x| x[v.0])
    }

    pub fn eval(&self, e: &LinExpr) -> Option<f64> {
        self.values.as_ref().map(|x| e.eval(x))
    }

    pub fn matrix(&self, m: MatrixVar) -> Option<DMatrix<f64>> {
        self.values.as_ref().map(|x| m.affine().eval(x))
    }

    pub fn eval_matrix(&self, m: &AffineSymMatrix) -> Option<DMatrix<f64>> {
        self.values.as_ref().map(|x| m.eval(x))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub max_iters: u32,
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub verbose: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { max_iters: 200, feas_tol: 1e-8, gap_tol: 1e-8, verbose: false }
    }
}

impl SolverOptions {
    /// Applies one `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConicError> {
        let bad = || ConicError::InvalidOption(format!("{key}={value}"));
        match key {
            "max_iters" => self.max_iters = value.parse().map_err(|_| bad())?,
            "feas_tol" => self.feas_tol = value.parse().map_err(|_| bad())?,
            "gap_tol" => self.gap_tol = value.parse().map_err(|_| bad())?,
            "verbose" => self.verbose = value.parse().map_err(|_| bad())?,
            _ => return Err(ConicError::InvalidOption(format!("unknown key `{key}`"))),
        }
        if !(self.feas_tol > 0.0 && self.gap_tol > 0.0) {
            return Err(bad());
        }
        Ok(())
    }
}

pub trait ConicSolver: Send + Sync {
    fn name(&self) -> &str;
    fn solve(&self, program: &ConicProgram, options: &SolverOptions) -> Result<Solution, ConicError>;
}

/// Interior-point adapter over Clarabel.
#[derive(Clone, Copy, Debug, Default)]
pub struct ClarabelSolver;

impl ConicSolver for ClarabelSolver {
    fn name(&self) -> &str {
        "clarabel"
    }

    fn solve(&self, program: &ConicProgram, options: &SolverOptions) -> Result<Solution, ConicError> {
        let n = program.n_vars();
        let m = program.n_rows();
        // Clarabel form: min qᵀx s.t. Ax + s = b, s ∈ K. A row expr ∈ K maps
        // to s = expr, hence A = -coeffs and b = constant.
        let (mut ri, mut ci, mut vals) = (Vec::new(), Vec::new(), Vec::new());
        let mut b = vec![0.0; m];
        let mut cones = Vec::new();
        let mut row = 0;
        for block in &program.blocks {
            match block.kind {
                ConeKind::Zero => cones.push(SupportedConeT::ZeroConeT(block.rows.len())),
                ConeKind::Nonnegative => cones.push(SupportedConeT::NonnegativeConeT(block.rows.len())),
                ConeKind::Psd(d) => cones.push(SupportedConeT::PSDTriangleConeT(d)),
            }
            let mut local = 0;
            for (k, r) in block.rows.iter().enumerate() {
                let scale = match block.kind {
                    ConeKind::Psd(d) => {
                        // recover (i, j) of the k-th upper-triangle slot
                        let (i, j) = tri_position(k, d);
                        if i == j { 1.0 } else { std::f64::consts::SQRT_2 }
                    }
                    _ => 1.0,
                };
                for (v, c) in r.terms() {
                    ri.push(row);
                    ci.push(v.0);
                    vals.push(-c * scale);
                }
                b[row] = r.constant * scale;
                row += 1;
                local += 1;
            }
            debug_assert_eq!(local, block.rows.len());
        }
        // merge duplicate cones of the same scalar kind is unnecessary; Clarabel accepts lists
        let a = CscMatrix::new_from_triplets(m, n, ri, ci, vals);
        let p = CscMatrix::<f64>::zeros((n, n));
        let sign = match program.sense {
            Sense::Maximize => -1.0,
            Sense::Minimize => 1.0,
        };
        let mut q = vec![0.0; n];
        for (v, c) in program.objective.terms() {
            q[v.0] = sign * c;
        }
        let settings = DefaultSettings::<f64> {
            max_iter: options.max_iters,
            tol_feas: options.feas_tol,
            tol_gap_abs: options.gap_tol,
            tol_gap_rel: options.gap_tol,
            verbose: options.verbose,
            ..DefaultSettings::default()
        };
        let started = Instant::now();
        let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings)
            .map_err(|e| ConicError::Setup(format!("{e:?}")))?;
        solver.solve();
        let elapsed = started.elapsed().as_secs_f64();
        let sol = &solver.solution;
        let info = &solver.info;
        let status = match sol.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => SolveStatus::Optimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => SolveStatus::Infeasible,
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => SolveStatus::Unbounded,
            _ => SolveStatus::NumericalFailure,
        };
        let mut stats = SolveStats {
            solver: self.name().to_string(),
            raw_status: format!("{:?}", sol.status),
            iterations: sol.iterations,
            solve_time_s: elapsed,
            primal_residual: sol.r_prim,
            dual_residual: sol.r_dual,
            relative_gap: info.gap_rel,
            max_violation: 0.0,
        };
        if status == SolveStatus::Optimal {
            let values = sol.x.clone();
            stats.max_violation = program.max_violation(&values);
            let objective = program.objective.eval(&values);
            Ok(Solution { status, values: Some(values), objective: Some(objective), stats })
        } else {
            Ok(Solution { status, values: None, objective: None, stats })
        }
    }
}

fn tri_position(k: usize, dim: usize) -> (usize, usize) {
    let mut j = 0;
    while (j + 1) * (j + 2) / 2 <= k {
        j += 1;
    }
    debug_assert!(j < dim);
    (k - j * (j + 1) / 2, j)
}

/// Adapter named by `HYBRID_CIS_SOLVER` (default `clarabel`).
pub fn solver_from_env() -> Result<Box<dyn ConicSolver>, ConicError> {
    let name = std::env::var(SOLVER_ENV).unwrap_or_else(|_| "clarabel".to_string());
    solver_by_name(&name)
}

pub fn solver_by_name(name: &str) -> Result<Box<dyn ConicSolver>, ConicError> {
    match name.to_ascii_lowercase().as_str() {
        "clarabel" => Ok(Box::new(ClarabelSolver)),
        other => Err(ConicError::SolverUnavailable(other.to_string())),
    }
}

/// Solves with the default adapter.
pub fn solve(program: &ConicProgram, options: &SolverOptions) -> Result<Solution, ConicError> {
    solver_from_env()?.solve(program, options)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn tri_index_roundtrip() {
        for d in 1..6 {
            for k in 0..tri_len(d) {
                let (i, j) = tri_position(k, d);
                assert!(i <= j && j < d);
                assert_eq!(tri_index(i, j), k);
                assert_eq!(tri_index(j, i), k);
            }
        }
    }

    #[test]
    fn scalar_upper_bound() {
        let mut b = ProgramBuilder::new();
        let s = b.add_scalar("s");
        b.add_le(s.into(), 3.0.into()).unwrap();
        b.maximize(s.into()).unwrap();
        let sol = solve(&b.finalize(), &opts()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective.unwrap() - 3.0).abs() < 1e-7);
    }

    #[test]
    fn correlation_matrix_bound() {
        let mut b = ProgramBuilder::new();
        let p = b.add_psd_matrix("P", 2);
        b.add_equality(LinExpr::var(p.entry(0, 0)) - 1.0.into()).unwrap();
        b.add_equality(LinExpr::var(p.entry(1, 1)) - 1.0.into()).unwrap();
        b.maximize(p.entry(0, 1).into()).unwrap();
        let sol = solve(&b.finalize(), &opts()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.value(p.entry(0, 1)).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rank_one_lower_bound() {
        // P ⪰ s vvᵀ with v = (1, 1) and unit diagonal caps gives s ≤ 1.
        let mut b = ProgramBuilder::new();
        let p = b.add_psd_matrix("P", 2);
        let s = b.add_scalar("s");
        b.add_le(p.entry(0, 0).into(), 1.0.into()).unwrap();
        b.add_le(p.entry(1, 1).into(), 1.0.into()).unwrap();
        let vvt = DMatrix::from_element(2, 2, 1.0);
        let mut m = p.affine();
        m.add_scaled(&AffineSymMatrix::const_times(&vvt, &s.into()), -1.0);
        b.add_psd(&m).unwrap();
        b.maximize(s.into()).unwrap();
        let sol = solve(&b.finalize(), &opts()).unwrap();
        assert!((sol.objective.unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut b = ProgramBuilder::new();
        let s = b.add_scalar("s");
        b.add_le(s.into(), 0.0.into()).unwrap();
        b.add_le(1.0.into(), s.into()).unwrap();
        b.maximize(s.into()).unwrap();
        assert_eq!(solve(&b.finalize(), &opts()).unwrap().status, SolveStatus::Infeasible);

        let mut b = ProgramBuilder::new();
        let s = b.add_scalar("s");
        b.maximize(s.into()).unwrap();
        assert_eq!(solve(&b.finalize(), &opts()).unwrap().status, SolveStatus::Unbounded);
    }

    #[test]
    fn foreign_handle_rejected() {
        let mut other = ProgramBuilder::new();
        let _ = other.add_matrix("X", 3);
        let foreign = other.add_scalar("z");
        let mut b = ProgramBuilder::new();
        assert!(matches!(b.add_equality(foreign.into()), Err(ConicError::UnknownVariable(_))));
        assert!(matches!(
            b.add_linear(vec![LinExpr::zero(); 2], ConeKind::Psd(2)),
            Err(ConicError::DimensionMismatch { expected: 3, found: 2 })
        ));
    }

    #[test]
    fn matrix_readback_is_symmetric() {
        let mut b = ProgramBuilder::new();
        let p = b.add_psd_matrix("P", 3);
        for i in 0..3 {
            b.add_le(p.entry(i, i).into(), 1.0.into()).unwrap();
        }
        b.add_equality(LinExpr::var(p.entry(0, 2)) - 0.25.into()).unwrap();
        b.maximize(LinExpr::var(p.entry(0, 0)) + LinExpr::var(p.entry(1, 1))).unwrap();
        let sol = solve(&b.finalize(), &opts()).unwrap();
        let m = sol.matrix(p).unwrap();
        assert_eq!(m, m.transpose());
        assert!((m[(2, 0)] - 0.25).abs() < 1e-7);
    }

    #[test]
    fn dump_is_deterministic() {
        let build = || {
            let mut b = ProgramBuilder::new();
            let p = b.add_psd_matrix("P", 2);
            let s = b.add_scalar("s");
            let m = p.affine().congruence(&DMatrix::from_row_slice(1, 2, &[1.0, -2.0]));
            b.add_psd(&m).unwrap();
            b.add_le(s.into(), p.entry(0, 1).into()).unwrap();
            b.maximize(s.into()).unwrap();
            b.finalize()
        };
        assert_eq!(build().dump(), build().dump());
        assert_eq!(build().fingerprint().len(), 64);
    }

    #[test]
    fn option_overrides() {
        let mut o = SolverOptions::default();
        o.set("max_iters", "50").unwrap();
        o.set("feas_tol", "1e-6").unwrap();
        assert_eq!(o.max_iters, 50);
        assert!(o.set("feas_tol", "abc").is_err());
        assert!(o.set("nonsense", "1").is_err());
        assert!(solver_by_name("mosek").is_err());
    }

    #[test]
    fn congruence_matches_dense() {
        let mut b = ProgramBuilder::new();
        let p = b.add_matrix("P", 3);
        let vals: Vec<f64> = (0..6).map(|k| k as f64 * 0.7 - 1.0).collect();
        let t = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, -1.0, 0.5, 0.0, 3.0]);
        let dense = p.affine().eval(&vals);
        let got = p.affine().congruence(&t).eval(&vals);
        let want = &t * &dense * t.transpose();
        assert!((got - want).abs().max() < 1e-12);
        let a = DMatrix::from_row_slice(2, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let got = p.affine().sym_product(&a, &t).eval(&vals);
        let want = &a * &dense * t.transpose() + &t * &dense * a.transpose();
        assert!((got - want).abs().max() < 1e-12);
    }
}
