//! Projecting out unconstrained inputs, and lifting box inputs into states.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{canonical_range_basis, left_singular_basis};
use crate::model::{
    AlgebraicNode, AlgebraicSignal, Automaton, BoxSet, ControlNode, ControlSignal,
    HybridAlgebraicSystem, HybridControlSystem, InputSet, Transition, ValidationReport,
    validate_hcs,
};

pub const DEFAULT_RANK_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error("input matrix has non-finite entries")]
    NonFinite,
    #[error("{0} has a constrained input; lift box inputs first")]
    ConstrainedInput(String),
    #[error("invalid system:\n{0}")]
    Invalid(ValidationReport),
}

/// Orthonormal-row matrix whose kernel is the image of `B`.
#[derive(Clone, Debug, PartialEq)]
pub struct Projector {
    pub matrix: DMatrix<f64>,
    /// Orthonormal basis (columns) of the image of `B`, i.e. the kernel of `matrix`.
    pub kernel_basis: DMatrix<f64>,
}

impl Projector {
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }
}

pub fn orth_complement_projector(b: &DMatrix<f64>, rank_tol: f64) -> Result<Projector, ReductionError> {
    if b.iter().any(|v| !v.is_finite()) {
        return Err(ReductionError::NonFinite);
    }
    let n = b.nrows();
    let (sv, u) = left_singular_basis(b);
    let max = sv.first().copied().unwrap_or(0.0);
    let r = if max > 0.0 {
        sv.iter().take(n).filter(|&&s| s > rank_tol * max).count()
    } else {
        0
    };
    let complement = u.columns(r, n - r).into_owned();
    // The SVD basis of the complement is arbitrary up to rotation; pick the
    // one obtained by orthonormalizing the projected unit vectors so that
    // e.g. B = e3 gives rows e1, e2.
    let proj = &complement * complement.transpose();
    let rows = canonical_range_basis(&proj, n - r);
    let mut matrix = DMatrix::zeros(rows.len(), n);
    for (i, v) in rows.iter().enumerate() {
        matrix.set_row(i, &v.transpose());
    }
    Ok(Projector {
        matrix,
        kernel_basis: u.columns(0, r).into_owned(),
    })
}

/// Projects out every input. All input sets must be unconstrained.
pub fn hcs_to_has(sys: &HybridControlSystem) -> Result<HybridAlgebraicSystem, ReductionError> {
    for (id, n) in sys.automaton.nodes.iter().zip(&sys.nodes) {
        if !n.input.is_unconstrained() {
            return Err(ReductionError::ConstrainedInput(format!("node {id}")));
        }
    }
    for (id, s) in sys.automaton.signals.iter().zip(&sys.signals) {
        if !s.input.is_unconstrained() {
            return Err(ReductionError::ConstrainedInput(format!("signal {id}")));
        }
    }
    let nodes = sys
        .nodes
        .iter()
        .map(|n| {
            let p = orth_complement_projector(&n.b, DEFAULT_RANK_TOL)?;
            Ok(AlgebraicNode {
                c: &p.matrix * &n.a,
                e: p.matrix,
                safe: n.safe.clone(),
            })
        })
        .collect::<Result<Vec<_>, ReductionError>>()?;
    let signals = sys
        .signals
        .iter()
        .map(|s| {
            let p = orth_complement_projector(&s.b, DEFAULT_RANK_TOL)?;
            Ok(AlgebraicSignal {
                c: &p.matrix * &s.a,
                e: p.matrix,
            })
        })
        .collect::<Result<Vec<_>, ReductionError>>()?;
    Ok(HybridAlgebraicSystem {
        automaton: sys.automaton.clone(),
        nodes,
        signals,
    })
}

/// How a node of the lifted system relates to the original system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftedNode {
    pub id: String,
    /// Original node whose state occupies the leading coordinates.
    pub source: String,
    /// Set for temporary nodes inserted on a transition with a box input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<Transition>,
    pub original_dim: usize,
    pub lifted_dim: usize,
}

impl LiftedNode {
    /// Lifted coordinates holding the original state.
    pub fn state_coordinates(&self) -> Vec<usize> {
        (0..self.original_dim).collect()
    }

    pub fn is_temporary(&self) -> bool {
        self.transition.is_some()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LiftingMap {
    pub nodes: Vec<LiftedNode>,
}

impl LiftingMap {
    pub fn identity(sys: &HybridControlSystem) -> Self {
        LiftingMap {
            nodes: sys
                .automaton
                .nodes
                .iter()
                .zip(&sys.nodes)
                .map(|(id, n)| LiftedNode {
                    id: id.clone(),
                    source: id.clone(),
                    transition: None,
                    original_dim: n.a.nrows(),
                    lifted_dim: n.a.nrows(),
                })
                .collect(),
        }
    }

    pub fn node(&self, id: &str) -> Option<&LiftedNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn is_identity(&self) -> bool {
        self.nodes
            .iter()
            .all(|n| !n.is_temporary() && n.original_dim == n.lifted_dim && n.id == n.source)
    }
}

fn block(rows: usize, cols: usize, parts: &[(usize, usize, &DMatrix<f64>)]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for &(r, c, p) in parts {
        m.view_mut((r, c), (p.nrows(), p.ncols())).copy_from(p);
    }
    m
}

/// Turns every box-constrained input into extra state coordinates.
///
/// A node input `u in U` becomes coordinates `w` with `w' = v`, `v` free, and
/// safe box `X x U`. A transition input is handled by a temporary node holding
/// `(x, u)`: the first transition copies `x` and sets `u` freely, the second
/// applies the original reset reading `u` from the state.
pub fn lift_box_inputs(
    sys: &HybridControlSystem,
) -> Result<(HybridControlSystem, LiftingMap), ReductionError> {
    let report = validate_hcs(sys);
    if !report.is_valid() {
        return Err(ReductionError::Invalid(report));
    }
    if sys.all_inputs_unconstrained() {
        return Ok((sys.clone(), LiftingMap::identity(sys)));
    }
    let aut = &sys.automaton;
    // Extra coordinates per node.
    let ext: Vec<usize> = sys
        .nodes
        .iter()
        .map(|n| n.input.as_box().map_or(0, BoxSet::dim))
        .collect();
    let dim = |id: &str| sys.state_dim(id).expect("validated");
    let ext_of = |id: &str| ext[aut.node_index(id).expect("validated")];

    let mut out = HybridControlSystem {
        automaton: Automaton::default(),
        nodes: Vec::new(),
        signals: Vec::new(),
    };
    let mut map = LiftingMap::default();

    for ((id, node), &m) in aut.nodes.iter().zip(&sys.nodes).zip(&ext) {
        let n = node.a.nrows();
        let lifted = match node.input.as_box() {
            Some(u) => ControlNode {
                a: block(n + m, n + m, &[(0, 0, &node.a), (0, n, &node.b)]),
                b: block(n + m, m, &[(n, 0, &DMatrix::identity(m, m))]),
                safe: node.safe.product(u),
                input: InputSet::unconstrained(),
            },
            None => node.clone(),
        };
        out.automaton.nodes.push(id.clone());
        out.nodes.push(lifted);
        map.nodes.push(LiftedNode {
            id: id.clone(),
            source: id.clone(),
            transition: None,
            original_dim: n,
            lifted_dim: n + m,
        });
    }

    let uses = |sig: &str| aut.transitions.iter().filter(|t| t.signal == sig).count();
    for (k, t) in aut.transitions.iter().enumerate() {
        let sig = sys.signal(&t.signal).expect("validated");
        let (nf, nt) = (dim(&t.from), dim(&t.to));
        let (ef, et) = (ext_of(&t.from), ext_of(&t.to));
        let free_target = DMatrix::identity(et, et);
        match sig.input.as_box() {
            None => {
                let id = if uses(&t.signal) == 1 {
                    t.signal.clone()
                } else {
                    format!("{}#{k}", t.signal)
                };
                let mb = sig.b.ncols();
                out.automaton.signals.push(id.clone());
                out.signals.push(ControlSignal {
                    a: block(nt + et, nf + ef, &[(0, 0, &sig.a)]),
                    b: block(nt + et, mb + et, &[(0, 0, &sig.b), (nt, mb, &free_target)]),
                    input: InputSet::unconstrained(),
                });
                out.automaton.transitions.push(Transition::new(&t.from, &id, &t.to));
            }
            Some(u) => {
                let mu = u.dim();
                let tmp = format!("{}~{}~{}", t.from, t.signal, t.to);
                let from_safe = &sys.node(&t.from).expect("validated").safe;
                out.automaton.nodes.push(tmp.clone());
                out.nodes.push(ControlNode {
                    a: DMatrix::zeros(nf + mu, nf + mu),
                    b: DMatrix::identity(nf + mu, nf + mu),
                    safe: from_safe.product(u),
                    input: InputSet::unconstrained(),
                });
                map.nodes.push(LiftedNode {
                    id: tmp.clone(),
                    source: t.from.clone(),
                    transition: Some(t.clone()),
                    original_dim: nf,
                    lifted_dim: nf + mu,
                });
                let (sin, sout) = (format!("{tmp}:in"), format!("{tmp}:out"));
                out.automaton.signals.push(sin.clone());
                out.signals.push(ControlSignal {
                    a: block(nf + mu, nf + ef, &[(0, 0, &DMatrix::identity(nf, nf))]),
                    b: block(nf + mu, mu, &[(nf, 0, &DMatrix::identity(mu, mu))]),
                    input: InputSet::unconstrained(),
                });
                out.automaton.signals.push(sout.clone());
                out.signals.push(ControlSignal {
                    a: block(nt + et, nf + mu, &[(0, 0, &sig.a), (0, nf, &sig.b)]),
                    b: block(nt + et, et, &[(nt, 0, &free_target)]),
                    input: InputSet::unconstrained(),
                });
                out.automaton.transitions.push(Transition::new(&t.from, &sin, &tmp));
                out.automaton.transitions.push(Transition::new(&tmp, &sout, &t.to));
            }
        }
    }
    debug_assert!(validate_hcs(&out).is_valid());
    Ok((out, map))
}

/// Lifts box inputs, then projects out all inputs.
pub fn reduce(
    sys: &HybridControlSystem,
) -> Result<(HybridAlgebraicSystem, LiftingMap), ReductionError> {
    let (lifted, map) = lift_box_inputs(sys)?;
    Ok((hcs_to_has(&lifted)?, map))
}
