//! Compiles invariance, safety and objective conditions for a template family
//! into one conic program, solves it and extracts the sets.
//!
//! Decision variables describe the polar side: `P = Q^-1` for ellipsoids and
//! pieces, the coefficients of `p` for polysets. The objective maximizes
//! `gamma` such that `gamma * D` lies in the projection of the root node's set
//! on the chosen coordinates.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conic::{
    self, AffineSymMatrix, ConicError, ConicProgram, LinExpr, MatrixVar, ProgramBuilder, ScalarVar,
    SolveStats, SolveStatus, SolverOptions,
};
use crate::geometry::{
    face_fan, intersect_cones, preimage_cone, ConicPartition, GeometryError, PolyhedralCone, GEOM_TOL,
};
use crate::model::{validate_has, BoxSet, HybridAlgebraicSystem, HybridControlSystem, ValidationReport};
use crate::polysos::{
    emit_cone_quadratic, emit_sos, emit_sos_convexity, lie_polynomial, linear_form, CertificateForm,
    ConeQuadraticCertificate, HomogeneousPoly, PolyError,
};
use crate::reduction::{reduce, LiftingMap, ReductionError};
use crate::verify::{verify_solution, SupportFunctionModel, VerificationReport, VerifyOptions};

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error("invalid system:\n{0}")]
    InvalidSystem(ValidationReport),
    #[error("invalid objective: {0}")]
    InvalidObjective(String),
    #[error("invalid template: {0}")]
    InvalidTemplate(String),
    #[error("partition dimension {partition} does not match state dimension {state} of node {node}")]
    PartitionDimension {
        node: String,
        partition: usize,
        state: usize,
    },
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Conic(#[from] ConicError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PartitionSpec {
    /// Face fan of the sphere sampling with `m1` longitudes and `m2` latitudes.
    FaceFan {
        m1: usize,
        m2: usize,
        #[serde(default)]
        triangulate: bool,
    },
    /// Explicit partition (same for every node).
    Custom { partition: ConicPartition },
    /// Partition stored in a separate file; resolved by the caller.
    File { path: String },
}

impl PartitionSpec {
    pub fn build(&self) -> Result<ConicPartition, SynthesisError> {
        match self {
            PartitionSpec::FaceFan { m1, m2, triangulate } => Ok(face_fan(*m1, *m2, *triangulate)?),
            PartitionSpec::Custom { partition } => Ok(partition.clone()),
            PartitionSpec::File { path } => Err(SynthesisError::InvalidTemplate(format!(
                "partition file {path} was not loaded"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TemplateSpec {
    Ellipsoid,
    Polyset {
        degree: usize,
    },
    Piecewise {
        partition: PartitionSpec,
        /// Force all pieces of a node to share one matrix.
        #[serde(default)]
        tie_pieces: bool,
        #[serde(default)]
        certificate: CertificateForm,
    },
}

impl TemplateSpec {
    pub fn label(&self) -> String {
        match self {
            TemplateSpec::Ellipsoid => "ellipsoid".into(),
            TemplateSpec::Polyset { degree } => format!("polyset-{degree}"),
            TemplateSpec::Piecewise { partition, tie_pieces, .. } => {
                let base = match partition {
                    PartitionSpec::FaceFan { m1, m2, triangulate: false } => format!("piecewise-{m1}-{m2}"),
                    PartitionSpec::FaceFan { m1, m2, triangulate: true } => format!("piecewise-{m1}-{m2}-tri"),
                    _ => "piecewise-custom".into(),
                };
                if *tie_pieces { format!("{base}-tied") } else { base }
            }
        }
    }
}

/// Maximize `gamma` with `gamma * conv(vertices)` inside the projection of
/// the set of `node` on `coordinates`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Objective {
    pub node: String,
    pub coordinates: Vec<usize>,
    pub vertices: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthesisProblem {
    pub system: HybridAlgebraicSystem,
    pub template: TemplateSpec,
    pub objective: Objective,
}

#[derive(Clone, Debug, Default)]
pub struct SynthesisOptions {
    pub solver: SolverOptions,
    pub verify: VerifyOptions,
    /// Sample count per cone certificate for the post-solve soundness audit.
    pub audit_samples: usize,
}

impl SynthesisOptions {
    pub fn new() -> Self {
        SynthesisOptions {
            audit_samples: 100,
            ..Default::default()
        }
    }
}

enum Handles {
    Ellipsoid(Vec<MatrixVar>),
    Polyset(Vec<HomogeneousPoly<LinExpr>>),
    Piecewise(Vec<(ConicPartition, Vec<MatrixVar>)>),
}

/// A compiled program with the handles needed to read a solution back.
pub struct CompiledProblem {
    pub program: ConicProgram,
    objective: ScalarVar,
    handles: Handles,
    pub certificates: Vec<ConeQuadraticCertificate>,
    /// Exponent applied to the objective variable to get `gamma`.
    gamma_root: usize,
}

impl CompiledProblem {
    pub fn gamma(&self, values: &[f64]) -> f64 {
        let t = values[self.objective.index()].max(0.0);
        t.powf(1.0 / self.gamma_root as f64)
    }

    pub fn models(&self, values: &[f64]) -> Vec<SupportFunctionModel> {
        let mat = |m: &MatrixVar| m.affine().eval(values);
        match &self.handles {
            Handles::Ellipsoid(ps) => ps.iter().map(|p| SupportFunctionModel::Ellipsoid { p: mat(p) }).collect(),
            Handles::Polyset(ps) => ps
                .iter()
                .map(|p| SupportFunctionModel::Polyset { poly: p.evaluate(values) })
                .collect(),
            Handles::Piecewise(ps) => ps
                .iter()
                .map(|(partition, ms)| SupportFunctionModel::Piecewise {
                    partition: partition.clone(),
                    matrices: ms.iter().map(mat).collect(),
                })
                .collect(),
        }
    }
}

fn check_problem(problem: &SynthesisProblem) -> Result<(usize, DMatrix<f64>), SynthesisError> {
    let report = validate_has(&problem.system);
    if !report.is_valid() {
        return Err(SynthesisError::InvalidSystem(report));
    }
    let obj = &problem.objective;
    let root = problem
        .system
        .automaton
        .node_index(&obj.node)
        .ok_or_else(|| SynthesisError::InvalidObjective(format!("unknown node {}", obj.node)))?;
    let n = problem.system.nodes[root].safe.dim();
    if obj.coordinates.is_empty() {
        return Err(SynthesisError::InvalidObjective("no projection coordinates".into()));
    }
    if let Some(&c) = obj.coordinates.iter().find(|&&c| c >= n) {
        return Err(SynthesisError::InvalidObjective(format!(
            "coordinate {c} out of range for state dimension {n}"
        )));
    }
    if obj.vertices.is_empty() {
        return Err(SynthesisError::InvalidObjective("polytope has no vertices".into()));
    }
    if let Some(v) = obj.vertices.iter().find(|v| v.len() != obj.coordinates.len()) {
        return Err(SynthesisError::InvalidObjective(format!(
            "vertex {v:?} has {} entries, expected {}",
            v.len(),
            obj.coordinates.len()
        )));
    }
    // Lifting matrix L (n x k): column a is the unit vector of coordinate a.
    let mut lift = DMatrix::zeros(n, obj.coordinates.len());
    for (a, &c) in obj.coordinates.iter().enumerate() {
        lift[(c, a)] = 1.0;
    }
    Ok((root, lift))
}

/// Support bound of a box in direction `sign * e_i`, clamped at zero (all
/// templates describe sets containing the origin).
fn box_bound(b: &BoxSet, i: usize, sign: f64) -> f64 {
    let v = if sign > 0.0 { b.upper[i] } else { -b.lower[i] };
    v.max(0.0)
}

fn box_excludes_origin(sys: &HybridAlgebraicSystem) -> bool {
    sys.nodes
        .iter()
        .any(|n| n.safe.lower.iter().zip(&n.safe.upper).any(|(&l, &u)| l > 0.0 || u < 0.0))
}

/// True when the root box has zero extent along a direction in which the
/// objective polytope extends, so `gamma = 0` for every template.
fn objective_pinned_to_zero(problem: &SynthesisProblem) -> bool {
    let obj = &problem.objective;
    let Some(node) = problem.system.node(&obj.node) else {
        return false;
    };
    obj.coordinates.iter().enumerate().any(|(a, &c)| {
        [1.0, -1.0].into_iter().any(|sign| {
            let reach = obj.vertices.iter().map(|v| sign * v[a]).fold(0.0, f64::max);
            reach > 0.0 && box_bound(&node.safe, c, sign) == 0.0
        })
    })
}

pub fn compile_ellipsoid(problem: &SynthesisProblem) -> Result<CompiledProblem, SynthesisError> {
    let (root, lift) = check_problem(problem)?;
    let sys = &problem.system;
    let mut b = ProgramBuilder::new();
    let ps: Vec<MatrixVar> = sys
        .automaton
        .nodes
        .iter()
        .zip(&sys.nodes)
        .map(|(id, n)| b.add_psd_matrix(format!("P[{id}]"), n.safe.dim()))
        .collect();
    for t in &sys.automaton.transitions {
        let sig = sys.signal(&t.signal).expect("validated");
        if sig.c.nrows() == 0 {
            continue;
        }
        let (i, j) = (
            sys.automaton.node_index(&t.from).expect("validated"),
            sys.automaton.node_index(&t.to).expect("validated"),
        );
        let mut m = ps[j].affine().congruence(&sig.e);
        m.add_scaled(&ps[i].affine().congruence(&sig.c), -1.0);
        b.add_psd(&m)?;
    }
    for (k, node) in sys.nodes.iter().enumerate() {
        if node.c.nrows() > 0 {
            b.add_psd(&ps[k].affine().sym_product(&node.c, &node.e).scaled(-1.0))?;
        }
        for i in 0..node.safe.dim() {
            for sign in [1.0, -1.0] {
                let u = box_bound(&node.safe, i, sign);
                b.add_le(LinExpr::var(ps[k].entry(i, i)), (u * u).into())?;
            }
        }
    }
    let s = b.add_scalar("s");
    let sub = ps[root].affine().congruence(&lift.transpose());
    for v in &problem.objective.vertices {
        let v = DVector::from_column_slice(v);
        let mut m = sub.clone();
        m.add_scaled(&AffineSymMatrix::const_times(&(&v * v.transpose()), &LinExpr::var(s)), -1.0);
        b.add_psd(&m)?;
    }
    b.maximize(LinExpr::var(s))?;
    Ok(CompiledProblem {
        program: b.finalize(),
        objective: s,
        handles: Handles::Ellipsoid(ps),
        certificates: Vec::new(),
        gamma_root: 2,
    })
}

pub fn compile_polyset(problem: &SynthesisProblem, degree: usize) -> Result<CompiledProblem, SynthesisError> {
    if degree == 0 || degree % 2 == 1 {
        return Err(PolyError::OddDegree(degree).into());
    }
    let (root, lift) = check_problem(problem)?;
    let sys = &problem.system;
    let mut b = ProgramBuilder::new();
    let ps: Vec<HomogeneousPoly<LinExpr>> = sys
        .automaton
        .nodes
        .iter()
        .zip(&sys.nodes)
        .map(|(id, n)| HomogeneousPoly::variable(&mut b, &format!("p[{id}]"), n.safe.dim(), degree))
        .collect();
    for t in &sys.automaton.transitions {
        let sig = sys.signal(&t.signal).expect("validated");
        if sig.c.nrows() == 0 {
            continue;
        }
        let (i, j) = (
            sys.automaton.node_index(&t.from).expect("validated"),
            sys.automaton.node_index(&t.to).expect("validated"),
        );
        let diff = ps[j].compose_linear(&sig.e)?.add_scaled(&ps[i].compose_linear(&sig.c)?, -1.0)?;
        emit_sos(&mut b, &diff, &format!("jump[{}]", t.signal))?;
    }
    for (k, (id, node)) in sys.automaton.nodes.iter().zip(&sys.nodes).enumerate() {
        if node.c.nrows() > 0 {
            let lie = lie_polynomial(&ps[k], &node.c, &node.e)?;
            emit_sos(&mut b, &lie.scaled(-1.0), &format!("flow[{id}]"))?;
        }
        emit_sos(&mut b, &ps[k], &format!("nonneg[{id}]"))?;
        emit_sos_convexity(&mut b, &ps[k], &format!("convex[{id}]"))?;
        let n = node.safe.dim();
        for i in 0..n {
            // p(e_i) = p(-e_i) is the coefficient of y_i^degree.
            let coeff = ps[k].coeff(&crate::polysos::Exponent::unit(n, i, degree as u32));
            for sign in [1.0, -1.0] {
                let u = box_bound(&node.safe, i, sign);
                b.add_le(coeff.clone(), u.powi(degree as i32).into())?;
            }
        }
    }
    let t = b.add_scalar("t");
    let restricted = ps[root].compose_linear(&lift.transpose())?;
    for (a, v) in problem.objective.vertices.iter().enumerate() {
        let power = linear_form(&DVector::from_column_slice(v)).pow(degree as u32);
        let mut target = restricted.clone();
        for (e, c) in power.terms() {
            let mut term = HomogeneousPoly::<LinExpr>::zero(restricted.nvars(), degree);
            term.add_term(e.clone(), &LinExpr::term(t, *c), 1.0)?;
            target = target.add_scaled(&term, -1.0)?;
        }
        emit_sos(&mut b, &target, &format!("objective[{a}]"))?;
    }
    b.maximize(LinExpr::var(t))?;
    Ok(CompiledProblem {
        program: b.finalize(),
        objective: t,
        handles: Handles::Polyset(ps),
        certificates: Vec::new(),
        gamma_root: degree,
    })
}

pub fn compile_piecewise(
    problem: &SynthesisProblem,
    partition: &ConicPartition,
    tie_pieces: bool,
    form: CertificateForm,
) -> Result<CompiledProblem, SynthesisError> {
    let (root, lift) = check_problem(problem)?;
    let sys = &problem.system;
    for (id, node) in sys.automaton.nodes.iter().zip(&sys.nodes) {
        if node.safe.dim() != partition.dim {
            return Err(SynthesisError::PartitionDimension {
                node: id.clone(),
                partition: partition.dim,
                state: node.safe.dim(),
            });
        }
    }
    let mut b = ProgramBuilder::new();
    let mut certificates = Vec::new();
    let ps: Vec<Vec<MatrixVar>> = sys
        .automaton
        .nodes
        .iter()
        .map(|id| {
            (0..partition.len())
                .map(|i| b.add_psd_matrix(format!("P[{id}][{i}]"), partition.dim))
                .collect()
        })
        .collect();

    for (k, (id, node)) in sys.automaton.nodes.iter().zip(&sys.nodes).enumerate() {
        let pk = &ps[k];
        if tie_pieces {
            for p in &pk[1..] {
                let mut d = p.affine();
                d.add_scaled(&pk[0].affine(), -1.0);
                for e in d.upper_triangle() {
                    b.add_equality(e.clone())?;
                }
            }
        }
        // Continuity across shared facets, and nonnegative gradient jumps
        // along the facet normal (convexity).
        for adj in &partition.adjacency {
            let mut d = pk[adj.i].affine();
            d.add_scaled(&pk[adj.j].affine(), -1.0);
            for e in d.congruence(&adj.basis.transpose()).upper_triangle() {
                b.add_equality(e.clone())?;
            }
            let mut jump = pk[adj.j].affine();
            jump.add_scaled(&pk[adj.i].affine(), -1.0);
            for r in &adj.shared_rays {
                let mut e = LinExpr::zero();
                for a in 0..partition.dim {
                    for c in 0..partition.dim {
                        let w = adj.normal[a] * r[c];
                        if w != 0.0 {
                            e.add_scaled(jump.get(a, c), w);
                        }
                    }
                }
                b.add_nonnegative(e)?;
            }
        }
        let n = node.safe.dim();
        for i in 0..n {
            for sign in [1.0, -1.0] {
                let mut e = DVector::zeros(n);
                e[i] = sign;
                let u = box_bound(&node.safe, i, sign);
                for piece in partition.containing(&e, GEOM_TOL) {
                    b.add_le(LinExpr::var(pk[piece].entry(i, i)), (u * u).into())?;
                }
            }
        }
        if node.c.nrows() > 0 {
            for (i, cone) in partition.cones.iter().enumerate() {
                let pre = preimage_cone(cone, &node.e)?;
                let m = pk[i].affine().sym_product(&node.c, &node.e);
                if let Some(c) = emit_cone_quadratic(&mut b, &m, &pre, form, &format!("flow[{id}][{i}]"))? {
                    certificates.push(c);
                }
            }
        }
    }

    for t in &sys.automaton.transitions {
        let sig = sys.signal(&t.signal).expect("validated");
        if sig.c.nrows() == 0 {
            continue;
        }
        let (from, to) = (
            sys.automaton.node_index(&t.from).expect("validated"),
            sys.automaton.node_index(&t.to).expect("validated"),
        );
        let pre_from: Vec<PolyhedralCone> = partition
            .cones
            .iter()
            .map(|c| preimage_cone(c, &sig.c))
            .collect::<Result<_, _>>()?;
        let pre_to: Vec<PolyhedralCone> = partition
            .cones
            .iter()
            .map(|c| preimage_cone(c, &sig.e))
            .collect::<Result<_, _>>()?;
        for (i, a) in pre_from.iter().enumerate() {
            for (j, c) in pre_to.iter().enumerate() {
                let inter = intersect_cones(a, c)?;
                if inter.cone.generators()?.is_origin_only() {
                    continue;
                }
                let mut m = ps[from][i].affine().congruence(&sig.c);
                m.add_scaled(&ps[to][j].affine().congruence(&sig.e), -1.0);
                let name = format!("jump[{}][{i},{j}]", t.signal);
                if let Some(cert) = emit_cone_quadratic(&mut b, &m, &inter.cone, form, &name)? {
                    certificates.push(cert);
                }
            }
        }
    }

    let s = b.add_scalar("s");
    let k = problem.objective.coordinates.len();
    for (a, v) in problem.objective.vertices.iter().enumerate() {
        let v = DVector::from_column_slice(v);
        let half = PolyhedralCone::new(DMatrix::from_row_slice(1, v.len(), (-&v).as_slice()));
        let svv = AffineSymMatrix::const_times(&(&v * v.transpose()), &LinExpr::var(s));
        for (i, cone) in partition.cones.iter().enumerate() {
            let pre = preimage_cone(cone, &lift.transpose())?;
            let inter = intersect_cones(&pre, &half)?;
            if inter.cone.generators()?.is_origin_only() {
                continue;
            }
            let mut m = svv.clone();
            m.add_scaled(&ps[root][i].affine().congruence(&lift.transpose()), -1.0);
            debug_assert_eq!(m.dim(), k);
            let name = format!("objective[{a}][{i}]");
            if let Some(cert) = emit_cone_quadratic(&mut b, &m, &inter.cone, form, &name)? {
                certificates.push(cert);
            }
        }
    }
    b.maximize(LinExpr::var(s))?;
    Ok(CompiledProblem {
        program: b.finalize(),
        objective: s,
        handles: Handles::Piecewise(ps.into_iter().map(|p| (partition.clone(), p)).collect()),
        certificates,
        gamma_root: 2,
    })
}

pub fn compile(problem: &SynthesisProblem) -> Result<CompiledProblem, SynthesisError> {
    match &problem.template {
        TemplateSpec::Ellipsoid => compile_ellipsoid(problem),
        TemplateSpec::Polyset { degree } => compile_polyset(problem, *degree),
        TemplateSpec::Piecewise { partition, tie_pieces, certificate } => {
            compile_piecewise(problem, &partition.build()?, *tie_pieces, *certificate)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthesisStatus {
    Verified,
    SolvedUnverified,
    Infeasible,
    SolverFailure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeSet {
    pub node: String,
    pub set: SupportFunctionModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateAudit {
    pub certificates: usize,
    pub samples_per_certificate: usize,
    /// Largest sampled `z^T M z` over all certificate cones.
    pub max_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisSolution {
    pub status: SynthesisStatus,
    pub template: TemplateSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub objective: Objective,
    #[serde(default)]
    pub nodes: Vec<NodeSet>,
    pub solver: SolveStats,
    pub fingerprint: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate_audit: Option<CertificateAudit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lifting: Option<LiftingMap>,
}

impl SynthesisSolution {
    pub fn model(&self, node: &str) -> Option<&SupportFunctionModel> {
        self.nodes.iter().find(|n| n.node == node).map(|n| &n.set)
    }

    pub fn models(&self) -> Vec<SupportFunctionModel> {
        self.nodes.iter().map(|n| n.set.clone()).collect()
    }
}

/// `gamma` at or below this is reported as infeasible.
pub const GAMMA_FLOOR: f64 = 1e-6;

pub fn solve_synthesis(
    problem: &SynthesisProblem,
    options: &SynthesisOptions,
) -> Result<SynthesisSolution, SynthesisError> {
    let compiled = compile(problem)?;
    let fingerprint = compiled.program.fingerprint();
    let mut solution = SynthesisSolution {
        status: SynthesisStatus::SolverFailure,
        template: problem.template.clone(),
        gamma: None,
        objective: problem.objective.clone(),
        nodes: Vec::new(),
        solver: SolveStats::default(),
        fingerprint,
        verification: None,
        certificate_audit: None,
        lifting: None,
    };
    if box_excludes_origin(&problem.system) {
        solution.status = SynthesisStatus::Infeasible;
        solution.solver.raw_status = "not solved: a safe box excludes the origin".into();
        return Ok(solution);
    }
    if objective_pinned_to_zero(problem) {
        solution.status = SynthesisStatus::Infeasible;
        solution.gamma = Some(0.0);
        solution.solver.raw_status = "not solved: the root safe box has no room along the objective polytope".into();
        return Ok(solution);
    }
    let sol = conic::solve(&compiled.program, &options.solver)?;
    solution.solver = sol.stats.clone();
    let values = match (sol.status, sol.values()) {
        (SolveStatus::Optimal, Some(v)) => v.to_vec(),
        (SolveStatus::Infeasible, _) => {
            solution.status = SynthesisStatus::Infeasible;
            return Ok(solution);
        }
        _ => return Ok(solution),
    };
    let gamma = compiled.gamma(&values);
    solution.gamma = Some(gamma);
    let models = compiled.models(&values);
    solution.nodes = problem
        .system
        .automaton
        .nodes
        .iter()
        .zip(&models)
        .map(|(id, m)| NodeSet { node: id.clone(), set: m.clone() })
        .collect();
    if gamma <= GAMMA_FLOOR {
        solution.status = SynthesisStatus::Infeasible;
        return Ok(solution);
    }
    if !compiled.certificates.is_empty() && options.audit_samples > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(options.verify.seed);
        let max_value = compiled
            .certificates
            .iter()
            .map(|c| c.max_sampled_value(&values, options.audit_samples, &mut rng))
            .fold(f64::NEG_INFINITY, f64::max);
        solution.certificate_audit = Some(CertificateAudit {
            certificates: compiled.certificates.len(),
            samples_per_certificate: options.audit_samples,
            max_value,
        });
    }
    let obj = &problem.objective;
    let report = verify_solution(
        &problem.system,
        &models,
        Some((&obj.node, &obj.coordinates, &obj.vertices, gamma)),
        &options.verify,
    );
    solution.status = if report.pass() {
        SynthesisStatus::Verified
    } else {
        SynthesisStatus::SolvedUnverified
    };
    solution.verification = Some(report);
    Ok(solution)
}

/// Lifts box inputs, projects out inputs, and solves. The objective refers to
/// coordinates of the lifted root node (original state coordinates come first).
pub fn solve_control_system(
    system: &HybridControlSystem,
    template: TemplateSpec,
    objective: Objective,
    options: &SynthesisOptions,
) -> Result<SynthesisSolution, SynthesisError> {
    let (has, lifting) = reduce(system)?;
    let problem = SynthesisProblem { system: has, template, objective };
    let mut sol = solve_synthesis(&problem, options)?;
    sol.lifting = Some(lifting);
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AlgebraicNode, Automaton};

    fn single_node(c: DMatrix<f64>, e: DMatrix<f64>, safe: BoxSet) -> HybridAlgebraicSystem {
        HybridAlgebraicSystem {
            automaton: Automaton {
                nodes: vec!["q".into()],
                ..Default::default()
            },
            nodes: vec![AlgebraicNode { c, e, safe }],
            signals: vec![],
        }
    }

    fn square() -> Objective {
        Objective {
            node: "q".into(),
            coordinates: vec![0, 1],
            vertices: vec![vec![1.0, 1.0], vec![-1.0, 1.0], vec![-1.0, -1.0], vec![1.0, -1.0]],
        }
    }

    #[test]
    fn pure_inclusion_problem() {
        // No dynamics: the largest centered ellipse in [-1,1]^2 containing
        // gamma * square is the unit disc, so gamma = 1/sqrt(2).
        let sys = single_node(DMatrix::zeros(0, 2), DMatrix::zeros(0, 2), BoxSet::unit(2));
        for template in [TemplateSpec::Ellipsoid, TemplateSpec::Polyset { degree: 2 }] {
            let p = SynthesisProblem { system: sys.clone(), template, objective: square() };
            let sol = solve_synthesis(&p, &SynthesisOptions::new()).unwrap();
            assert_eq!(sol.status, SynthesisStatus::Verified);
            assert!((sol.gamma.unwrap() - 0.5f64.sqrt()).abs() < 1e-5, "{:?}", sol.gamma);
        }
    }

    #[test]
    fn stable_isotropic_flow_is_free() {
        let sys = single_node(-DMatrix::<f64>::identity(2, 2), DMatrix::identity(2, 2), BoxSet::unit(2));
        let p = SynthesisProblem { system: sys, template: TemplateSpec::Ellipsoid, objective: square() };
        let sol = solve_synthesis(&p, &SynthesisOptions::new()).unwrap();
        assert_eq!(sol.status, SynthesisStatus::Verified);
        assert!((sol.gamma.unwrap() - 0.5f64.sqrt()).abs() < 1e-5);
    }

    #[test]
    fn degenerate_box_is_infeasible() {
        let sys = single_node(
            DMatrix::zeros(0, 2),
            DMatrix::zeros(0, 2),
            BoxSet::new(vec![0.0, 0.0], vec![0.0, 0.0]),
        );
        let p = SynthesisProblem { system: sys, template: TemplateSpec::Ellipsoid, objective: square() };
        let sol = solve_synthesis(&p, &SynthesisOptions::new()).unwrap();
        assert_eq!(sol.status, SynthesisStatus::Infeasible);
    }

    #[test]
    fn odd_degree_rejected() {
        let sys = single_node(DMatrix::zeros(0, 2), DMatrix::zeros(0, 2), BoxSet::unit(2));
        let p = SynthesisProblem { system: sys, template: TemplateSpec::Polyset { degree: 3 }, objective: square() };
        assert!(matches!(compile(&p), Err(SynthesisError::Poly(PolyError::OddDegree(3)))));
    }

    #[test]
    fn bad_objective_rejected() {
        let sys = single_node(DMatrix::zeros(0, 2), DMatrix::zeros(0, 2), BoxSet::unit(2));
        let mut obj = square();
        obj.coordinates = vec![0, 5];
        let p = SynthesisProblem { system: sys, template: TemplateSpec::Ellipsoid, objective: obj };
        assert!(matches!(compile(&p), Err(SynthesisError::InvalidObjective(_))));
    }

    #[test]
    fn template_labels() {
        let t = TemplateSpec::Piecewise {
            partition: PartitionSpec::FaceFan { m1: 8, m2: 5, triangulate: false },
            tie_pieces: false,
            certificate: CertificateForm::Halfspace,
        };
        assert_eq!(t.label(), "piecewise-8-5");
        let json = serde_json::to_string(&t).unwrap();
        let back: TemplateSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
    }
}
