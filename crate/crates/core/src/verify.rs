//! Numerical checks of solved sets: support functions, their gradients, and
//! sampled invariance / inclusion conditions on a hybrid algebraic system.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{random_unit, ConicPartition, GEOM_TOL};
use crate::linalg::rows_serde;
use crate::linalg::rows_vec_serde;
use crate::model::{BoxSet, HybridAlgebraicSystem};
use crate::polysos::HomogeneousPoly;

/// Seed of every sampling loop unless overridden.
pub const DEFAULT_SEED: u64 = 20_190_417;
pub const DEFAULT_DIRECTIONS: usize = 10_000;
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum VerifyError {
    #[error("direction lies in no cone of the partition")]
    NoCone,
    #[error("direction lies on a cone boundary")]
    OnBoundary,
    #[error("support function vanishes at this direction")]
    Degenerate,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Support function of one node's set, in the parametrization of its template.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "template", rename_all = "kebab-case")]
pub enum SupportFunctionModel {
    /// `h(y) = sqrt(y^T P y)`.
    Ellipsoid {
        #[serde(rename = "P", with = "rows_serde")]
        p: DMatrix<f64>,
    },
    /// `h(y) = p(y)^(1/deg p)`.
    Polyset { poly: HomogeneousPoly<f64> },
    /// `h(y) = sqrt(y^T P_i y)` on cone `i`.
    Piecewise {
        partition: ConicPartition,
        #[serde(rename = "P", with = "rows_vec_serde")]
        matrices: Vec<DMatrix<f64>>,
    },
}

fn quad(p: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    (y.transpose() * p * y)[(0, 0)]
}

impl SupportFunctionModel {
    pub fn dim(&self) -> usize {
        match self {
            SupportFunctionModel::Ellipsoid { p } => p.nrows(),
            SupportFunctionModel::Polyset { poly } => poly.nvars(),
            SupportFunctionModel::Piecewise { partition, .. } => partition.dim,
        }
    }

    fn check_dim(&self, y: &DVector<f64>) -> Result<(), VerifyError> {
        if y.len() != self.dim() {
            return Err(VerifyError::DimensionMismatch {
                expected: self.dim(),
                found: y.len(),
            });
        }
        Ok(())
    }

    pub fn support_value(&self, y: &DVector<f64>) -> Result<f64, VerifyError> {
        self.check_dim(y)?;
        Ok(match self {
            SupportFunctionModel::Ellipsoid { p } => quad(p, y).max(0.0).sqrt(),
            SupportFunctionModel::Polyset { poly } => {
                let d = poly.degree() as f64;
                poly.eval(y.as_slice()).max(0.0).powf(1.0 / d)
            }
            SupportFunctionModel::Piecewise { partition, matrices } => {
                let i = *partition
                    .containing(y, GEOM_TOL)
                    .first()
                    .ok_or(VerifyError::NoCone)?;
                quad(&matrices[i], y).max(0.0).sqrt()
            }
        })
    }

    /// The exposed point of the set in direction `y`.
    pub fn support_gradient(&self, y: &DVector<f64>) -> Result<DVector<f64>, VerifyError> {
        self.check_dim(y)?;
        match self {
            SupportFunctionModel::Ellipsoid { p } => {
                let h = quad(p, y).max(0.0).sqrt();
                if h <= 1e-300 {
                    return Err(VerifyError::Degenerate);
                }
                Ok(p * y / h)
            }
            SupportFunctionModel::Polyset { poly } => {
                let d = poly.degree() as f64;
                let v = poly.eval(y.as_slice());
                if v <= 1e-300 {
                    return Err(VerifyError::Degenerate);
                }
                let grad = poly.gradient().expect("positive degree");
                let scale = v.powf(1.0 / d - 1.0) / d;
                Ok(DVector::from_iterator(
                    y.len(),
                    grad.iter().map(|g| g.eval(y.as_slice()) * scale),
                ))
            }
            SupportFunctionModel::Piecewise { partition, matrices } => {
                let i = self.interior_piece(partition, y)?;
                let h = quad(&matrices[i], y).max(0.0).sqrt();
                if h <= 1e-300 {
                    return Err(VerifyError::Degenerate);
                }
                Ok(&matrices[i] * y / h)
            }
        }
    }

    /// Gradients spanning the exposed face in direction `y`: one for smooth
    /// templates, one per containing piece for piecewise models.
    pub fn exposed_face_gradients(&self, y: &DVector<f64>) -> Result<Vec<DVector<f64>>, VerifyError> {
        match self {
            SupportFunctionModel::Piecewise { partition, matrices } => {
                self.check_dim(y)?;
                let pieces = partition.containing(y, GEOM_TOL);
                if pieces.is_empty() {
                    return Err(VerifyError::NoCone);
                }
                pieces
                    .into_iter()
                    .map(|i| {
                        let h = quad(&matrices[i], y).max(0.0).sqrt();
                        if h <= 1e-300 {
                            Err(VerifyError::Degenerate)
                        } else {
                            Ok(&matrices[i] * y / h)
                        }
                    })
                    .collect()
            }
            _ => Ok(vec![self.support_gradient(y)?]),
        }
    }

    fn interior_piece(&self, partition: &ConicPartition, y: &DVector<f64>) -> Result<usize, VerifyError> {
        let margin = 1e-9 * y.norm();
        let strict: Vec<usize> = (0..partition.len())
            .filter(|&i| partition.cones[i].slack(y) < -margin)
            .collect();
        match strict.as_slice() {
            [i] => Ok(*i),
            [] if partition.containing(y, GEOM_TOL).is_empty() => Err(VerifyError::NoCone),
            _ => Err(VerifyError::OnBoundary),
        }
    }

    /// Largest disagreement between the pieces containing `y` (0 off boundaries).
    pub fn piece_disagreement(&self, y: &DVector<f64>) -> f64 {
        match self {
            SupportFunctionModel::Piecewise { partition, matrices } => {
                let vals: Vec<f64> = partition
                    .containing(y, GEOM_TOL)
                    .iter()
                    .map(|&i| quad(&matrices[i], y).max(0.0).sqrt())
                    .collect();
                let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                if vals.len() > 1 { max - min } else { 0.0 }
            }
            _ => 0.0,
        }
    }

    pub fn template_name(&self) -> &'static str {
        match self {
            SupportFunctionModel::Ellipsoid { .. } => "ellipsoid",
            SupportFunctionModel::Polyset { .. } => "polyset",
            SupportFunctionModel::Piecewise { .. } => "piecewise",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub n_dirs: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            n_dirs: DEFAULT_DIRECTIONS,
            tol: DEFAULT_TOL,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionKind {
    /// `<z, C grad h(E^T z)> <= 0`.
    Flow,
    /// `h(C^T y | S_q) <= h(E^T y | S_q')`.
    Jump,
    SafeBox,
    Objective,
    Convexity,
    Continuity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub location: String,
    pub kind: ConditionKind,
    pub samples: usize,
    pub max_violation: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub seed: u64,
    pub n_dirs: usize,
    pub tol: f64,
    pub conditions: Vec<ConditionResult>,
}

impl VerificationReport {
    pub fn pass(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }

    pub fn max_violation(&self, kind: ConditionKind) -> f64 {
        self.conditions
            .iter()
            .filter(|c| c.kind == kind)
            .map(|c| c.max_violation)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn merge(&mut self, other: VerificationReport) {
        self.conditions.extend(other.conditions);
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConditionResult> {
        self.conditions.iter().filter(|c| !c.pass)
    }
}

fn rng_for(seed: u64, salt: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (salt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Samples the flow and jump conditions of every node and transition.
pub fn check_invariance(
    has: &HybridAlgebraicSystem,
    models: &[SupportFunctionModel],
    opts: &VerifyOptions,
) -> VerificationReport {
    let mut report = VerificationReport {
        seed: opts.seed,
        n_dirs: opts.n_dirs,
        tol: opts.tol,
        conditions: Vec::new(),
    };
    for (k, (id, node)) in has.automaton.nodes.iter().zip(&has.nodes).enumerate() {
        let model = &models[k];
        let np = node.c.nrows();
        let location = format!("node {id}");
        if np == 0 {
            report.conditions.push(ConditionResult {
                location,
                kind: ConditionKind::Flow,
                samples: 0,
                max_violation: 0.0,
                pass: true,
                note: Some("no algebraic constraint".into()),
            });
            continue;
        }
        let mut rng = rng_for(opts.seed, k);
        let mut worst = f64::NEG_INFINITY;
        let mut samples = 0;
        let mut skipped = 0;
        for _ in 0..opts.n_dirs {
            let z = random_unit(&mut rng, np);
            let y = node.e.transpose() * &z;
            if y.norm() < 1e-12 {
                skipped += 1;
                continue;
            }
            let Ok(face) = model.exposed_face_gradients(&y) else {
                skipped += 1;
                continue;
            };
            for g in face {
                worst = worst.max(z.dot(&(&node.c * g)));
            }
            samples += 1;
        }
        report.conditions.push(ConditionResult {
            location,
            kind: ConditionKind::Flow,
            samples,
            max_violation: worst,
            pass: worst <= opts.tol && samples > 0,
            note: (skipped > 0).then(|| format!("{skipped} directions skipped")),
        });
    }
    for (k, t) in has.automaton.transitions.iter().enumerate() {
        let (Some(sig), Some(from), Some(to)) = (
            has.signal(&t.signal),
            has.automaton.node_index(&t.from),
            has.automaton.node_index(&t.to),
        ) else {
            continue;
        };
        let np = sig.c.nrows();
        let location = format!("transition {} -{}-> {}", t.from, t.signal, t.to);
        if np == 0 {
            report.conditions.push(ConditionResult {
                location,
                kind: ConditionKind::Jump,
                samples: 0,
                max_violation: 0.0,
                pass: true,
                note: Some("no algebraic constraint".into()),
            });
            continue;
        }
        let mut rng = rng_for(opts.seed, 1_000 + k);
        let mut worst = f64::NEG_INFINITY;
        let mut samples = 0;
        for _ in 0..opts.n_dirs {
            let y = random_unit(&mut rng, np);
            let lhs = models[from].support_value(&(sig.c.transpose() * &y));
            let rhs = models[to].support_value(&(sig.e.transpose() * &y));
            if let (Ok(l), Ok(r)) = (lhs, rhs) {
                worst = worst.max(l - r);
                samples += 1;
            }
        }
        report.conditions.push(ConditionResult {
            location,
            kind: ConditionKind::Jump,
            samples,
            max_violation: worst,
            pass: worst <= opts.tol && samples > 0,
            note: None,
        });
    }
    report
}

/// `S <= box`, checked at the facet normals `+-e_i`.
pub fn check_box_inclusion(model: &SupportFunctionModel, safe: &BoxSet, tol: f64, location: &str) -> ConditionResult {
    let n = model.dim();
    let mut worst = f64::NEG_INFINITY;
    for i in 0..n {
        for (sign, bound) in [(1.0, safe.upper[i]), (-1.0, -safe.lower[i])] {
            let mut e = DVector::zeros(n);
            e[i] = sign;
            match model.support_value(&e) {
                Ok(h) => worst = worst.max(h - bound),
                Err(_) => worst = f64::INFINITY,
            }
        }
    }
    ConditionResult {
        location: location.to_string(),
        kind: ConditionKind::SafeBox,
        samples: 2 * n,
        max_violation: worst,
        pass: worst <= tol,
        note: None,
    }
}

/// `gamma * conv(vertices)` inside the projection of `S` on `coords`, sampled:
/// max over directions of `<gamma v, y> - h(lift y)`.
pub fn check_polytope_inclusion(
    model: &SupportFunctionModel,
    coords: &[usize],
    vertices: &[Vec<f64>],
    gamma: f64,
    opts: &VerifyOptions,
    location: &str,
) -> ConditionResult {
    let n = model.dim();
    let k = coords.len();
    let mut rng = rng_for(opts.seed, 2_000);
    let mut worst = f64::NEG_INFINITY;
    let mut samples = 0;
    for _ in 0..opts.n_dirs {
        let y = random_unit(&mut rng, k);
        let mut lifted = DVector::zeros(n);
        for (a, &c) in coords.iter().enumerate() {
            lifted[c] = y[a];
        }
        let Ok(h) = model.support_value(&lifted) else {
            continue;
        };
        let best = vertices
            .iter()
            .map(|v| gamma * v.iter().zip(y.iter()).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max(best - h);
        samples += 1;
    }
    ConditionResult {
        location: location.to_string(),
        kind: ConditionKind::Objective,
        samples,
        max_violation: worst,
        pass: worst <= opts.tol && samples > 0,
        note: None,
    }
}

/// `h(a y1 + (1-a) y2) - a h(y1) - (1-a) h(y2)` maximized over random triples.
pub fn convexity_audit(model: &SupportFunctionModel, triples: usize, seed: u64) -> f64 {
    let n = model.dim();
    let mut rng = rng_for(seed, 3_000);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..triples {
        let y1 = random_unit(&mut rng, n);
        let y2 = random_unit(&mut rng, n);
        let a: f64 = rng.gen();
        let mid = &y1 * a + &y2 * (1.0 - a);
        if let (Ok(hm), Ok(h1), Ok(h2)) = (
            model.support_value(&mid),
            model.support_value(&y1),
            model.support_value(&y2),
        ) {
            worst = worst.max(hm - a * h1 - (1.0 - a) * h2);
        }
    }
    worst
}

/// Largest mismatch between pieces at sampled points of shared facets.
pub fn continuity_audit(model: &SupportFunctionModel, samples_per_facet: usize, seed: u64) -> f64 {
    let SupportFunctionModel::Piecewise { partition, .. } = model else {
        return 0.0;
    };
    let mut rng = rng_for(seed, 4_000);
    let mut worst: f64 = 0.0;
    for adj in &partition.adjacency {
        for _ in 0..samples_per_facet {
            let mut y = DVector::zeros(partition.dim);
            for r in &adj.shared_rays {
                y += r * rng.gen::<f64>();
            }
            if y.norm() < 1e-12 {
                continue;
            }
            worst = worst.max(model.piece_disagreement(&y.normalize()));
        }
    }
    worst
}

/// Root node, projection coordinates, vertices of `D` and `gamma`.
pub type ObjectiveCheck<'a> = (&'a str, &'a [usize], &'a [Vec<f64>], f64);

/// Full post-solve report: invariance, safe boxes, objective, and shape audits.
pub fn verify_solution(
    has: &HybridAlgebraicSystem,
    models: &[SupportFunctionModel],
    objective: Option<ObjectiveCheck<'_>>,
    opts: &VerifyOptions,
) -> VerificationReport {
    let mut report = check_invariance(has, models, opts);
    for (k, (id, node)) in has.automaton.nodes.iter().zip(&has.nodes).enumerate() {
        report
            .conditions
            .push(check_box_inclusion(&models[k], &node.safe, opts.tol, &format!("node {id}")));
        let model = &models[k];
        let cvx = convexity_audit(model, opts.n_dirs, opts.seed);
        report.conditions.push(ConditionResult {
            location: format!("node {id}"),
            kind: ConditionKind::Convexity,
            samples: opts.n_dirs,
            max_violation: cvx,
            pass: cvx <= 1e-8,
            note: None,
        });
        if matches!(model, SupportFunctionModel::Piecewise { .. }) {
            let gap = continuity_audit(model, 50, opts.seed);
            report.conditions.push(ConditionResult {
                location: format!("node {id}"),
                kind: ConditionKind::Continuity,
                samples: 50,
                max_violation: gap,
                pass: gap <= 1e-8,
                note: None,
            });
        }
    }
    if let Some((node, coords, vertices, gamma)) = objective {
        if let Some(k) = has.automaton.node_index(node) {
            report.conditions.push(check_polytope_inclusion(
                &models[k],
                coords,
                vertices,
                gamma,
                opts,
                &format!("node {node}"),
            ));
        }
    }
    report
}
