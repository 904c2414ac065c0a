//! Hybrid control systems, hybrid algebraic systems and their file format.
//!
//! A system file is a JSON object tagged by `"kind"` (`"control"` or
//! `"algebraic"`). Matrices are row-major nested arrays and boxes are
//! `[lower[], upper[]]`; see `docs/system-format.md` for the full schema.

use std::collections::HashSet;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::rows_serde;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed system description: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub from: String,
    pub signal: String,
    pub to: String,
}

impl Transition {
    pub fn new(from: &str, signal: &str, to: &str) -> Self {
        Transition {
            from: from.to_string(),
            signal: signal.to_string(),
            to: to.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Automaton {
    pub nodes: Vec<String>,
    pub signals: Vec<String>,
    pub transitions: Vec<Transition>,
}

impl Automaton {
    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == id)
    }

    pub fn signal_index(&self, id: &str) -> Option<usize> {
        self.signals.iter().position(|s| s == id)
    }

    fn check(&self, report: &mut ValidationReport) {
        let mut seen = HashSet::new();
        for n in &self.nodes {
            if !seen.insert(n) {
                report.push(format!("node {n}"), "duplicate node identifier");
            }
        }
        let mut seen = HashSet::new();
        for s in &self.signals {
            if !seen.insert(s) {
                report.push(format!("signal {s}"), "duplicate signal identifier");
            }
        }
        for t in &self.transitions {
            let loc = transition_location(t);
            if self.node_index(&t.from).is_none() {
                report.push(loc.clone(), format!("unknown source node {}", t.from));
            }
            if self.node_index(&t.to).is_none() {
                report.push(loc.clone(), format!("unknown target node {}", t.to));
            }
            if self.signal_index(&t.signal).is_none() {
                report.push(loc, format!("unknown signal {}", t.signal));
            }
        }
    }
}

fn transition_location(t: &Transition) -> String {
    format!("transition {} -{}-> {}", t.from, t.signal, t.to)
}

/// Axis-aligned box `{x : lower <= x <= upper}`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxSet {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        BoxSet { lower, upper }
    }

    pub fn symmetric(bound: &[f64]) -> Self {
        BoxSet {
            lower: bound.iter().map(|b| -b).collect(),
            upper: bound.to_vec(),
        }
    }

    pub fn unit(dim: usize) -> Self {
        BoxSet::symmetric(&vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Support function `sup_{x in box} <y, x>`.
    pub fn support(&self, y: &[f64]) -> f64 {
        y.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&yi, (&l, &u))| (yi * l).max(yi * u))
            .sum()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&xi, (&l, &u))| xi >= l - tol && xi <= u + tol)
    }

    pub fn product(&self, other: &BoxSet) -> BoxSet {
        let mut lower = self.lower.clone();
        lower.extend_from_slice(&other.lower);
        let mut upper = self.upper.clone();
        upper.extend_from_slice(&other.upper);
        BoxSet { lower, upper }
    }

    pub fn scaled(&self, factor: f64) -> BoxSet {
        BoxSet {
            lower: self.lower.iter().map(|v| v * factor).collect(),
            upper: self.upper.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn vertices(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..1usize << n)
            .map(|mask| {
                (0..n)
                    .map(|i| if mask >> i & 1 == 1 { self.upper[i] } else { self.lower[i] })
                    .collect()
            })
            .collect()
    }

    fn check(&self, loc: &str, what: &str, report: &mut ValidationReport) {
        if self.lower.len() != self.upper.len() {
            report.push(loc, format!("{what} bounds have different lengths"));
            return;
        }
        if self.lower.is_empty() {
            report.push(loc, format!("{what} has dimension 0"));
        }
        if self.lower.iter().chain(&self.upper).any(|v| v.is_nan()) {
            report.push(loc, format!("{what} has NaN bounds"));
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| l > u) {
            report.push(loc, format!("{what} has lower bound above upper bound"));
        }
    }
}

impl Serialize for BoxSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        (&self.lower, &self.upper).serialize(s)
    }
}

impl<'de> Deserialize<'de> for BoxSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (lower, upper) = <(Vec<f64>, Vec<f64>)>::deserialize(d)?;
        Ok(BoxSet { lower, upper })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InputSet {
    Unconstrained(UnconstrainedTag),
    Box(BoxSet),
}

/// The literal string `"unconstrained"` in system files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnconstrainedTag {
    Unconstrained,
}

impl InputSet {
    pub fn unconstrained() -> Self {
        InputSet::Unconstrained(UnconstrainedTag::Unconstrained)
    }

    pub fn is_unconstrained(&self) -> bool {
        matches!(self, InputSet::Unconstrained(_))
    }

    pub fn as_box(&self) -> Option<&BoxSet> {
        match self {
            InputSet::Box(b) => Some(b),
            InputSet::Unconstrained(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ControlNode {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub safe: BoxSet,
    pub input: InputSet,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ControlSignal {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub input: InputSet,
}

/// `x' = A_q x + B_q u` at nodes, `x+ = A_s x + B_s u` at transitions.
/// `nodes[k]` holds the data of `automaton.nodes[k]`, likewise for signals.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridControlSystem {
    pub automaton: Automaton,
    pub nodes: Vec<ControlNode>,
    pub signals: Vec<ControlSignal>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraicNode {
    pub c: DMatrix<f64>,
    pub e: DMatrix<f64>,
    pub safe: BoxSet,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraicSignal {
    pub c: DMatrix<f64>,
    pub e: DMatrix<f64>,
}

/// `E_q x' = C_q x` at nodes, `E_s x+ = C_s x` at transitions.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridAlgebraicSystem {
    pub automaton: Automaton,
    pub nodes: Vec<AlgebraicNode>,
    pub signals: Vec<AlgebraicSignal>,
}

impl HybridControlSystem {
    pub fn node(&self, id: &str) -> Option<&ControlNode> {
        self.automaton.node_index(id).and_then(|k| self.nodes.get(k))
    }

    pub fn signal(&self, id: &str) -> Option<&ControlSignal> {
        self.automaton.signal_index(id).and_then(|k| self.signals.get(k))
    }

    pub fn state_dim(&self, id: &str) -> Option<usize> {
        self.node(id).map(|n| n.a.nrows())
    }

    pub fn all_inputs_unconstrained(&self) -> bool {
        self.nodes.iter().all(|n| n.input.is_unconstrained())
            && self.signals.iter().all(|s| s.input.is_unconstrained())
    }
}

impl HybridAlgebraicSystem {
    pub fn node(&self, id: &str) -> Option<&AlgebraicNode> {
        self.automaton.node_index(id).and_then(|k| self.nodes.get(k))
    }

    pub fn signal(&self, id: &str) -> Option<&AlgebraicSignal> {
        self.automaton.signal_index(id).and_then(|k| self.signals.get(k))
    }

    pub fn state_dim(&self, id: &str) -> Option<usize> {
        self.node(id).map(|n| n.safe.dim())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            location: location.into(),
            message: message.into(),
        });
    }

    pub fn mentions(&self, needle: &str) -> bool {
        self.violations.iter().any(|v| v.message.contains(needle))
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_valid() {
            return write!(f, "valid");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{}: {}", v.location, v.message)?;
        }
        Ok(())
    }
}

fn shape(m: &DMatrix<f64>) -> String {
    format!("{}x{}", m.nrows(), m.ncols())
}

fn check_finite(m: &DMatrix<f64>, loc: &str, name: &str, report: &mut ValidationReport) {
    if m.iter().any(|v| !v.is_finite()) {
        report.push(loc, format!("{name} has non-finite entries"));
    }
}

fn check_input(input: &InputSet, cols: usize, loc: &str, report: &mut ValidationReport) {
    if let InputSet::Box(b) = input {
        b.check(loc, "input set", report);
        if b.dim() != cols {
            report.push(
                loc,
                format!("input-set dimension mismatch: box has {} dims, B has {cols} columns", b.dim()),
            );
        }
    }
}

pub fn validate_hcs(sys: &HybridControlSystem) -> ValidationReport {
    let mut report = ValidationReport::default();
    let aut = &sys.automaton;
    aut.check(&mut report);
    if sys.nodes.len() != aut.nodes.len() {
        report.push("system", "node data count differs from node list");
    }
    if sys.signals.len() != aut.signals.len() {
        report.push("system", "signal data count differs from signal list");
    }
    for (id, node) in aut.nodes.iter().zip(&sys.nodes) {
        let loc = format!("node {id}");
        let n = node.a.nrows();
        if node.a.ncols() != n {
            report.push(&loc, format!("A is {} but must be square", shape(&node.a)));
        }
        if node.b.nrows() != n {
            report.push(&loc, format!("B has {} rows, state dimension is {n}", node.b.nrows()));
        }
        check_finite(&node.a, &loc, "A", &mut report);
        check_finite(&node.b, &loc, "B", &mut report);
        node.safe.check(&loc, "safe set", &mut report);
        if node.safe.dim() != n {
            report.push(
                &loc,
                format!("safe-set dimension mismatch: box has {} dims, state has {n}", node.safe.dim()),
            );
        }
        check_input(&node.input, node.b.ncols(), &loc, &mut report);
    }
    for (id, sig) in aut.signals.iter().zip(&sys.signals) {
        let loc = format!("signal {id}");
        check_finite(&sig.a, &loc, "A", &mut report);
        check_finite(&sig.b, &loc, "B", &mut report);
        if sig.b.nrows() != sig.a.nrows() {
            report.push(&loc, format!("B has {} rows, A has {}", sig.b.nrows(), sig.a.nrows()));
        }
        check_input(&sig.input, sig.b.ncols(), &loc, &mut report);
    }
    for t in &aut.transitions {
        let (Some(sig), Some(nf), Some(nt)) =
            (sys.signal(&t.signal), sys.state_dim(&t.from), sys.state_dim(&t.to))
        else {
            continue;
        };
        if sig.a.nrows() != nt || sig.a.ncols() != nf {
            report.push(
                transition_location(t),
                format!("reset matrix A is {}, expected {nt}x{nf}", shape(&sig.a)),
            );
        }
    }
    report
}

pub fn validate_has(sys: &HybridAlgebraicSystem) -> ValidationReport {
    let mut report = ValidationReport::default();
    let aut = &sys.automaton;
    aut.check(&mut report);
    if sys.nodes.len() != aut.nodes.len() {
        report.push("system", "node data count differs from node list");
    }
    if sys.signals.len() != aut.signals.len() {
        report.push("system", "signal data count differs from signal list");
    }
    for (id, node) in aut.nodes.iter().zip(&sys.nodes) {
        let loc = format!("node {id}");
        let n = node.safe.dim();
        node.safe.check(&loc, "safe set", &mut report);
        check_finite(&node.c, &loc, "C", &mut report);
        check_finite(&node.e, &loc, "E", &mut report);
        if node.c.nrows() != node.e.nrows() {
            report.push(
                &loc,
                format!("row count mismatch: C is {}, E is {}", shape(&node.c), shape(&node.e)),
            );
        }
        for (name, m) in [("C", &node.c), ("E", &node.e)] {
            if m.nrows() > 0 && m.ncols() != n {
                report.push(
                    &loc,
                    format!("{name} has {} columns, state dimension is {n}", m.ncols()),
                );
            }
        }
    }
    for (id, sig) in aut.signals.iter().zip(&sys.signals) {
        let loc = format!("signal {id}");
        check_finite(&sig.c, &loc, "C", &mut report);
        check_finite(&sig.e, &loc, "E", &mut report);
        if sig.c.nrows() != sig.e.nrows() {
            report.push(
                &loc,
                format!("row count mismatch: C is {}, E is {}", shape(&sig.c), shape(&sig.e)),
            );
        }
    }
    for t in &aut.transitions {
        let (Some(sig), Some(nf), Some(nt)) =
            (sys.signal(&t.signal), sys.state_dim(&t.from), sys.state_dim(&t.to))
        else {
            continue;
        };
        let loc = transition_location(t);
        if sig.c.nrows() > 0 && sig.c.ncols() != nf {
            report.push(&loc, format!("C has {} columns, source state has {nf}", sig.c.ncols()));
        }
        if sig.e.nrows() > 0 && sig.e.ncols() != nt {
            report.push(&loc, format!("E has {} columns, target state has {nt}", sig.e.ncols()));
        }
    }
    report
}

// ---------------------------------------------------------------------------
// File format

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawControlNode {
    id: String,
    #[serde(rename = "A", with = "rows_serde")]
    a: DMatrix<f64>,
    #[serde(rename = "B", with = "rows_serde")]
    b: DMatrix<f64>,
    safe: BoxSet,
    input: InputSet,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawControlSignal {
    id: String,
    #[serde(rename = "A", with = "rows_serde")]
    a: DMatrix<f64>,
    #[serde(rename = "B", with = "rows_serde")]
    b: DMatrix<f64>,
    input: InputSet,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlgebraicNode {
    id: String,
    #[serde(rename = "C", with = "rows_serde")]
    c: DMatrix<f64>,
    #[serde(rename = "E", with = "rows_serde")]
    e: DMatrix<f64>,
    safe: BoxSet,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlgebraicSignal {
    id: String,
    #[serde(rename = "C", with = "rows_serde")]
    c: DMatrix<f64>,
    #[serde(rename = "E", with = "rows_serde")]
    e: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawControl {
    nodes: Vec<RawControlNode>,
    #[serde(default)]
    signals: Vec<RawControlSignal>,
    #[serde(default)]
    transitions: Vec<Transition>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlgebraic {
    nodes: Vec<RawAlgebraicNode>,
    #[serde(default)]
    signals: Vec<RawAlgebraicSignal>,
    #[serde(default)]
    transitions: Vec<Transition>,
}

/// Empty row lists carry no column count; recover it from context.
fn with_cols(m: DMatrix<f64>, rows: usize, cols: usize) -> DMatrix<f64> {
    if m.nrows() == 0 && m.ncols() == 0 && (rows == 0 || cols == 0) {
        DMatrix::zeros(rows, cols)
    } else {
        m
    }
}

/// State dimensions of the source and target of the first transition using `signal`.
fn signal_dims(
    transitions: &[Transition],
    signal: &str,
    dim_of: impl Fn(&str) -> Option<usize>,
) -> (Option<usize>, Option<usize>) {
    transitions
        .iter()
        .find(|t| t.signal == signal)
        .map_or((None, None), |t| (dim_of(&t.from), dim_of(&t.to)))
}

impl From<RawControl> for HybridControlSystem {
    fn from(raw: RawControl) -> Self {
        let node_dims: Vec<(String, usize)> =
            raw.nodes.iter().map(|n| (n.id.clone(), n.safe.dim())).collect();
        let dim_of = |id: &str| node_dims.iter().find(|(n, _)| n == id).map(|(_, d)| *d);
        let automaton = Automaton {
            nodes: raw.nodes.iter().map(|n| n.id.clone()).collect(),
            signals: raw.signals.iter().map(|s| s.id.clone()).collect(),
            transitions: raw.transitions.clone(),
        };
        let nodes = raw
            .nodes
            .into_iter()
            .map(|n| {
                let dim = n.safe.dim();
                let a = with_cols(n.a, dim, dim);
                let b = with_cols(n.b, dim, 0);
                ControlNode { a, b, safe: n.safe, input: n.input }
            })
            .collect();
        let signals = raw
            .signals
            .into_iter()
            .map(|s| {
                let (from, to) = signal_dims(&raw.transitions, &s.id, dim_of);
                let a = with_cols(s.a, to.unwrap_or(0), from.unwrap_or(0));
                let b = with_cols(s.b, to.unwrap_or(0), 0);
                ControlSignal { a, b, input: s.input }
            })
            .collect();
        HybridControlSystem { automaton, nodes, signals }
    }
}

impl From<&HybridControlSystem> for RawControl {
    fn from(sys: &HybridControlSystem) -> Self {
        RawControl {
            nodes: sys
                .automaton
                .nodes
                .iter()
                .zip(&sys.nodes)
                .map(|(id, n)| RawControlNode {
                    id: id.clone(),
                    a: n.a.clone(),
                    b: n.b.clone(),
                    safe: n.safe.clone(),
                    input: n.input.clone(),
                })
                .collect(),
            signals: sys
                .automaton
                .signals
                .iter()
                .zip(&sys.signals)
                .map(|(id, s)| RawControlSignal {
                    id: id.clone(),
                    a: s.a.clone(),
                    b: s.b.clone(),
                    input: s.input.clone(),
                })
                .collect(),
            transitions: sys.automaton.transitions.clone(),
        }
    }
}

impl From<RawAlgebraic> for HybridAlgebraicSystem {
    fn from(raw: RawAlgebraic) -> Self {
        let node_dims: Vec<(String, usize)> =
            raw.nodes.iter().map(|n| (n.id.clone(), n.safe.dim())).collect();
        let dim_of = |id: &str| node_dims.iter().find(|(n, _)| n == id).map(|(_, d)| *d);
        let automaton = Automaton {
            nodes: raw.nodes.iter().map(|n| n.id.clone()).collect(),
            signals: raw.signals.iter().map(|s| s.id.clone()).collect(),
            transitions: raw.transitions.clone(),
        };
        let nodes = raw
            .nodes
            .into_iter()
            .map(|n| {
                let dim = n.safe.dim();
                AlgebraicNode {
                    c: with_cols(n.c, 0, dim),
                    e: with_cols(n.e, 0, dim),
                    safe: n.safe,
                }
            })
            .collect();
        let signals = raw
            .signals
            .into_iter()
            .map(|s| {
                let (from, to) = signal_dims(&raw.transitions, &s.id, dim_of);
                AlgebraicSignal {
                    c: with_cols(s.c, 0, from.unwrap_or(0)),
                    e: with_cols(s.e, 0, to.unwrap_or(0)),
                }
            })
            .collect();
        HybridAlgebraicSystem { automaton, nodes, signals }
    }
}

impl From<&HybridAlgebraicSystem> for RawAlgebraic {
    fn from(sys: &HybridAlgebraicSystem) -> Self {
        RawAlgebraic {
            nodes: sys
                .automaton
                .nodes
                .iter()
                .zip(&sys.nodes)
                .map(|(id, n)| RawAlgebraicNode {
                    id: id.clone(),
                    c: n.c.clone(),
                    e: n.e.clone(),
                    safe: n.safe.clone(),
                })
                .collect(),
            signals: sys
                .automaton
                .signals
                .iter()
                .zip(&sys.signals)
                .map(|(id, s)| RawAlgebraicSignal {
                    id: id.clone(),
                    c: s.c.clone(),
                    e: s.e.clone(),
                })
                .collect(),
            transitions: sys.automaton.transitions.clone(),
        }
    }
}

impl Serialize for HybridControlSystem {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RawControl::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for HybridControlSystem {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        RawControl::deserialize(d).map(Into::into)
    }
}

impl Serialize for HybridAlgebraicSystem {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RawAlgebraic::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for HybridAlgebraicSystem {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        RawAlgebraic::deserialize(d).map(Into::into)
    }
}

/// Contents of a system description file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SystemFile {
    Control(HybridControlSystem),
    Algebraic(HybridAlgebraicSystem),
}

impl SystemFile {
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("system serialization is infallible")
    }

    pub fn validate(&self) -> ValidationReport {
        match self {
            SystemFile::Control(s) => validate_hcs(s),
            SystemFile::Algebraic(s) => validate_has(s),
        }
    }
}

// ---------------------------------------------------------------------------
// The double-integrator example with a reflecting jump

/// Double integrator `x1' = x2, x2' = u` with a jump
/// `x1+ = -x1 + u/8, x2+ = x2 - u/8`, all inputs in `[-1, 1]`.
pub fn double_integrator_with_jump() -> HybridControlSystem {
    let node = ControlNode {
        a: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
        b: DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
        safe: BoxSet::unit(2),
        input: InputSet::Box(BoxSet::unit(1)),
    };
    let jump = ControlSignal {
        a: DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]),
        b: DMatrix::from_row_slice(2, 1, &[0.125, -0.125]),
        input: InputSet::Box(BoxSet::unit(1)),
    };
    HybridControlSystem {
        automaton: Automaton {
            nodes: vec!["q".into()],
            signals: vec!["jump".into()],
            transitions: vec![Transition::new("q", "jump", "q")],
        },
        nodes: vec![node],
        signals: vec![jump],
    }
}
