//! Homogeneous polynomials and sum-of-squares / copositivity certificates
//! emitted into a [`ProgramBuilder`].
//!
//! Monomials are ordered graded-lexicographically; Gram bases list them in
//! decreasing order, so `y1^d` comes first.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conic::{AffineSymMatrix, BlockId, ConicError, LinExpr, MatrixVar, ProgramBuilder};
use crate::geometry::{GeometryError, Generators, PolyhedralCone};

#[derive(Debug, Error)]
pub enum PolyError {
    #[error("SOS certificate needs even degree, got {0}")]
    OddDegree(usize),
    #[error("exponent {found:?} does not have degree {degree} in {nvars} variables")]
    BadExponent {
        found: Vec<u32>,
        degree: usize,
        nvars: usize,
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("gradient of a constant")]
    ConstantGradient,
    #[error(transparent)]
    Conic(#[from] ConicError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Exponent tuple with graded-lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Exponent(pub Vec<u32>);

impl Exponent {
    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn unit(nvars: usize, i: usize, power: u32) -> Self {
        let mut e = vec![0; nvars];
        e[i] = power;
        Exponent(e)
    }

    pub fn add(&self, other: &Exponent) -> Exponent {
        Exponent(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.0.iter().zip(y).map(|(&e, &v)| v.powi(e as i32)).product()
    }
}

impl Ord for Exponent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All exponents of total degree `d` in `n` variables, largest first.
pub fn monomials(n: usize, d: usize) -> Vec<Exponent> {
    fn rec(n: usize, d: usize, prefix: &mut Vec<u32>, out: &mut Vec<Exponent>) {
        if prefix.len() + 1 == n {
            prefix.push(d as u32);
            out.push(Exponent(prefix.clone()));
            prefix.pop();
            return;
        }
        for e in (0..=d).rev() {
            prefix.push(e as u32);
            rec(n, d - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        if d == 0 {
            out.push(Exponent(Vec::new()));
        }
        return out;
    }
    rec(n, d, &mut Vec::new(), &mut out);
    out
}

/// Coefficient ring: reals, or affine expressions in decision variables.
pub trait Coeff: Clone + fmt::Debug {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn add_scaled(&mut self, other: &Self, s: f64);
    fn scale(&self, s: f64) -> Self;
}

impl Coeff for f64 {
    fn zero() -> Self {
        0.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn add_scaled(&mut self, other: &Self, s: f64) {
        *self += other * s;
    }
    fn scale(&self, s: f64) -> Self {
        self * s
    }
}

impl Coeff for LinExpr {
    fn zero() -> Self {
        LinExpr::zero()
    }
    fn is_zero(&self) -> bool {
        LinExpr::is_zero(self)
    }
    fn add_scaled(&mut self, other: &Self, s: f64) {
        LinExpr::add_scaled(self, other, s);
    }
    fn scale(&self, s: f64) -> Self {
        self.scaled(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneousPoly<C = f64> {
    nvars: usize,
    degree: usize,
    terms: BTreeMap<Exponent, C>,
}

impl<C: Coeff> HomogeneousPoly<C> {
    pub fn zero(nvars: usize, degree: usize) -> Self {
        HomogeneousPoly {
            nvars,
            degree,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_terms(
        nvars: usize,
        degree: usize,
        terms: impl IntoIterator<Item = (Exponent, C)>,
    ) -> Result<Self, PolyError> {
        let mut p = Self::zero(nvars, degree);
        for (e, c) in terms {
            p.add_term(e, &c, 1.0)?;
        }
        Ok(p)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &C)> {
        self.terms.iter()
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, e: &Exponent) -> C {
        self.terms.get(e).cloned().unwrap_or_else(C::zero)
    }

    /// Adds `s * c * y^e`.
    pub fn add_term(&mut self, e: Exponent, c: &C, s: f64) -> Result<(), PolyError> {
        if e.nvars() != self.nvars || e.degree() != self.degree {
            return Err(PolyError::BadExponent {
                found: e.0,
                degree: self.degree,
                nvars: self.nvars,
            });
        }
        self.add_unchecked(e, c, s);
        Ok(())
    }

    fn add_unchecked(&mut self, e: Exponent, c: &C, s: f64) {
        if s == 0.0 || c.is_zero() {
            return;
        }
        let entry = self.terms.entry(e.clone()).or_insert_with(C::zero);
        entry.add_scaled(c, s);
        if entry.is_zero() {
            self.terms.remove(&e);
        }
    }

    fn check_same_shape(&self, other: &Self) -> Result<(), PolyError> {
        if self.nvars != other.nvars {
            return Err(PolyError::DimensionMismatch {
                expected: self.nvars,
                found: other.nvars,
            });
        }
        if self.degree != other.degree && !self.is_zero() && !other.is_zero() {
            return Err(PolyError::DimensionMismatch {
                expected: self.degree,
                found: other.degree,
            });
        }
        Ok(())
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &Self, s: f64) -> Result<Self, PolyError> {
        self.check_same_shape(other)?;
        let mut out = if self.is_zero() {
            Self::zero(self.nvars, other.degree)
        } else {
            self.clone()
        };
        for (e, c) in &other.terms {
            out.add_unchecked(e.clone(), c, s);
        }
        Ok(out)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = Self::zero(self.nvars, self.degree);
        for (e, c) in &self.terms {
            out.add_unchecked(e.clone(), c, s);
        }
        out
    }

    /// Product with a real polynomial.
    pub fn mul_real(&self, other: &HomogeneousPoly<f64>) -> Result<Self, PolyError> {
        if self.nvars != other.nvars {
            return Err(PolyError::DimensionMismatch {
                expected: self.nvars,
                found: other.nvars,
            });
        }
        let mut out = Self::zero(self.nvars, self.degree + other.degree);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                out.add_unchecked(ea.add(eb), ca, *cb);
            }
        }
        Ok(out)
    }

    /// Partial derivatives, each of degree `d - 1`.
    pub fn gradient(&self) -> Result<Vec<Self>, PolyError> {
        if self.degree == 0 {
            return Err(PolyError::ConstantGradient);
        }
        Ok((0..self.nvars).map(|j| self.partial(j)).collect())
    }

    pub fn partial(&self, j: usize) -> Self {
        let mut out = Self::zero(self.nvars, self.degree.saturating_sub(1));
        for (e, c) in &self.terms {
            if e.0[j] > 0 {
                let mut d = e.clone();
                d.0[j] -= 1;
                out.add_unchecked(d, c, e.0[j] as f64);
            }
        }
        out
    }

    /// `y -> p(m^T y)` for `m` of shape `r x k`, `p` in `k` variables.
    pub fn compose_linear(&self, m: &DMatrix<f64>) -> Result<Self, PolyError> {
        if m.ncols() != self.nvars {
            return Err(PolyError::DimensionMismatch {
                expected: self.nvars,
                found: m.ncols(),
            });
        }
        let r = m.nrows();
        let forms: Vec<HomogeneousPoly<f64>> = (0..self.nvars)
            .map(|i| linear_form(&m.column(i).into_owned()))
            .collect();
        let mut powers: HashMap<(usize, u32), HomogeneousPoly<f64>> = HashMap::new();
        let mut out = Self::zero(r, self.degree);
        for (e, c) in &self.terms {
            let mut prod = HomogeneousPoly::<f64>::one(r);
            for (i, &k) in e.0.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                let pw = powers
                    .entry((i, k))
                    .or_insert_with(|| forms[i].pow(k))
                    .clone();
                prod = prod.mul_real(&pw)?;
            }
            for (pe, pc) in &prod.terms {
                out.add_unchecked(pe.clone(), c, *pc);
            }
        }
        Ok(out)
    }

    /// Re-indexes variables: variable `i` becomes variable `map[i]` of `nvars` total.
    pub fn embed(&self, nvars: usize, map: &[usize]) -> Self {
        let mut out = Self::zero(nvars, self.degree);
        for (e, c) in &self.terms {
            let mut x = vec![0; nvars];
            for (i, &k) in e.0.iter().enumerate() {
                x[map[i]] += k;
            }
            out.add_unchecked(Exponent(x), c, 1.0);
        }
        out
    }

    /// Variables appearing in some term.
    pub fn support_vars(&self) -> Vec<usize> {
        let mut used = BTreeSet::new();
        for e in self.terms.keys() {
            for (i, &k) in e.0.iter().enumerate() {
                if k > 0 {
                    used.insert(i);
                }
            }
        }
        used.into_iter().collect()
    }
}

impl HomogeneousPoly<f64> {
    pub fn one(nvars: usize) -> Self {
        let mut p = Self::zero(nvars, 0);
        p.add_unchecked(Exponent(vec![0; nvars]), &1.0, 1.0);
        p
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.terms.iter().map(|(e, c)| c * e.eval(y)).sum()
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::one(self.nvars);
        for _ in 0..k {
            out = out.mul_real(self).expect("same variable count");
        }
        out
    }

    /// Coefficients as `(exponent, value)` pairs in decreasing monomial order.
    pub fn coefficient_list(&self) -> Vec<(Vec<u32>, f64)> {
        self.terms.iter().rev().map(|(e, c)| (e.0.clone(), *c)).collect()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }
}

impl HomogeneousPoly<LinExpr> {
    /// Polynomial with one fresh decision variable per monomial.
    pub fn variable(builder: &mut ProgramBuilder, name: &str, nvars: usize, degree: usize) -> Self {
        let mut p = Self::zero(nvars, degree);
        for e in monomials(nvars, degree) {
            let label = format!("{name}{:?}", e.0);
            let v = builder.add_scalar(label);
            p.terms.insert(e, LinExpr::var(v));
        }
        p
    }

    pub fn from_real(p: &HomogeneousPoly<f64>) -> Self {
        let mut out = Self::zero(p.nvars, p.degree);
        for (e, c) in &p.terms {
            out.add_unchecked(e.clone(), &LinExpr::constant(*c), 1.0);
        }
        out
    }

    /// Coefficientwise evaluation at decision-variable values.
    pub fn evaluate(&self, values: &[f64]) -> HomogeneousPoly<f64> {
        let mut out = HomogeneousPoly::zero(self.nvars, self.degree);
        for (e, c) in &self.terms {
            out.add_unchecked(e.clone(), &c.eval(values), 1.0);
        }
        out
    }

    /// Value at a point, affine in the decision variables.
    pub fn at(&self, y: &[f64]) -> LinExpr {
        let mut out = LinExpr::zero();
        for (e, c) in &self.terms {
            out.add_scaled(c, e.eval(y));
        }
        out
    }
}

impl Serialize for HomogeneousPoly<f64> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Term<'a> {
            exponent: &'a [u32],
            coeff: f64,
        }
        #[derive(Serialize)]
        struct Raw<'a> {
            nvars: usize,
            degree: usize,
            terms: Vec<Term<'a>>,
        }
        Raw {
            nvars: self.nvars,
            degree: self.degree,
            terms: self
                .terms
                .iter()
                .rev()
                .map(|(e, c)| Term { exponent: &e.0, coeff: *c })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for HomogeneousPoly<f64> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        #[derive(Deserialize)]
        struct Term {
            exponent: Vec<u32>,
            coeff: f64,
        }
        #[derive(Deserialize)]
        struct Raw {
            nvars: usize,
            degree: usize,
            terms: Vec<Term>,
        }
        let raw = Raw::deserialize(d)?;
        HomogeneousPoly::from_terms(
            raw.nvars,
            raw.degree,
            raw.terms.into_iter().map(|t| (Exponent(t.exponent), t.coeff)),
        )
        .map_err(D::Error::custom)
    }
}

impl fmt::Display for HomogeneousPoly<f64> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (e, c)) in self.terms.iter().rev().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}")?;
            for (i, &p) in e.0.iter().enumerate() {
                match p {
                    0 => {}
                    1 => write!(f, "*y{}", i + 1)?,
                    _ => write!(f, "*y{}^{p}", i + 1)?,
                }
            }
        }
        Ok(())
    }
}

/// `y -> <a, y>`.
pub fn linear_form(a: &DVector<f64>) -> HomogeneousPoly<f64> {
    let n = a.len();
    let mut p = HomogeneousPoly::zero(n, 1);
    for (i, &v) in a.iter().enumerate() {
        p.add_unchecked(Exponent::unit(n, i, 1), &v, 1.0);
    }
    p
}

/// `p(m^T y)`; see [`HomogeneousPoly::compose_linear`].
pub fn compose_linear<C: Coeff>(p: &HomogeneousPoly<C>, m: &DMatrix<f64>) -> Result<HomogeneousPoly<C>, PolyError> {
    p.compose_linear(m)
}

pub fn gradient<C: Coeff>(p: &HomogeneousPoly<C>) -> Result<Vec<HomogeneousPoly<C>>, PolyError> {
    p.gradient()
}

/// `z -> <z, C grad p(E^T z)>` for `C`, `E` of shape `n_p x n_x`.
pub fn lie_polynomial<C: Coeff>(
    p: &HomogeneousPoly<C>,
    c: &DMatrix<f64>,
    e: &DMatrix<f64>,
) -> Result<HomogeneousPoly<C>, PolyError> {
    if c.shape() != e.shape() {
        return Err(PolyError::DimensionMismatch {
            expected: e.nrows(),
            found: c.nrows(),
        });
    }
    if e.ncols() != p.nvars() {
        return Err(PolyError::DimensionMismatch {
            expected: p.nvars(),
            found: e.ncols(),
        });
    }
    let np = e.nrows();
    let mut out = HomogeneousPoly::zero(np, p.degree());
    for (j, dj) in p.gradient()?.iter().enumerate() {
        let composed = dj.compose_linear(e)?;
        let ell = linear_form(&c.column(j).into_owned());
        out = out.add_scaled(&composed.mul_real(&ell)?, 1.0)?;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Certificates

/// `p(y) = b(y)^T G b(y)` with `G` PSD, over the listed variables.
#[derive(Clone, Debug)]
pub struct GramConstraint {
    /// Variables of the target polynomial that the basis ranges over.
    pub vars: Vec<usize>,
    /// Exponents (over `vars`) of the basis monomials.
    pub basis: Vec<Exponent>,
    pub gram: Option<MatrixVar>,
    pub equalities: Vec<BlockId>,
}

impl GramConstraint {
    pub fn basis_len(&self) -> usize {
        self.basis.len()
    }
}

/// Gram parametrization of `target` over `basis` (exponents in `target`'s
/// variables, restricted to `vars`).
fn emit_gram(
    builder: &mut ProgramBuilder,
    target: &HomogeneousPoly<LinExpr>,
    vars: Vec<usize>,
    basis: Vec<Exponent>,
    name: &str,
) -> Result<GramConstraint, PolyError> {
    let nv = target.nvars();
    let lift = |e: &Exponent| {
        let mut x = vec![0; nv];
        for (k, &v) in vars.iter().enumerate() {
            x[v] = e.0[k];
        }
        Exponent(x)
    };
    if basis.is_empty() {
        // Only the zero polynomial has an empty Gram representation.
        let mut equalities = Vec::new();
        for c in target.terms.values() {
            equalities.push(builder.add_equality(c.clone())?);
        }
        return Ok(GramConstraint { vars, basis, gram: None, equalities });
    }
    let gram = builder.add_psd_matrix(name, basis.len());
    let mut products: BTreeMap<Exponent, LinExpr> = BTreeMap::new();
    for i in 0..basis.len() {
        for j in i..basis.len() {
            let e = lift(&basis[i].add(&basis[j]));
            let w = if i == j { 1.0 } else { 2.0 };
            products.entry(e).or_insert_with(LinExpr::zero).add_term(gram.entry(i, j), w);
        }
    }
    let mut keys: BTreeSet<Exponent> = products.keys().cloned().collect();
    keys.extend(target.terms.keys().cloned());
    let mut equalities = Vec::new();
    for e in keys.into_iter().rev() {
        let mut eq = products.remove(&e).unwrap_or_else(LinExpr::zero);
        eq.add_scaled(&target.coeff(&e), -1.0);
        if eq.is_zero() {
            continue;
        }
        equalities.push(builder.add_equality(eq)?);
    }
    Ok(GramConstraint {
        vars,
        basis,
        gram: Some(gram),
        equalities,
    })
}

/// Constrains `p` to be a sum of squares.
pub fn emit_sos(
    builder: &mut ProgramBuilder,
    p: &HomogeneousPoly<LinExpr>,
    name: &str,
) -> Result<GramConstraint, PolyError> {
    if p.degree() % 2 == 1 {
        return Err(PolyError::OddDegree(p.degree()));
    }
    let vars = p.support_vars();
    let basis = if vars.is_empty() && p.degree() > 0 {
        Vec::new()
    } else {
        monomials(vars.len(), p.degree() / 2)
    };
    emit_gram(builder, p, vars, basis, name)
}

/// `v^T Hess p(y) v` as a polynomial in `(y, v)`.
pub fn hessian_form<C: Coeff>(p: &HomogeneousPoly<C>) -> HomogeneousPoly<C> {
    let n = p.nvars();
    let mut out = HomogeneousPoly::zero(2 * n, p.degree());
    if p.degree() < 2 {
        return out;
    }
    for i in 0..n {
        let di = p.partial(i);
        for j in 0..n {
            let dij = di.partial(j);
            for (e, c) in &dij.terms {
                let mut x = e.0.clone();
                x.extend(std::iter::repeat_n(0, n));
                x[n + i] += 1;
                x[n + j] += 1;
                out.add_unchecked(Exponent(x), c, 1.0);
            }
        }
    }
    out
}

/// Constrains `p` to be SOS-convex: `v^T Hess p(y) v` is a sum of squares of
/// bilinear forms `v_i m(y)` with `deg m = d - 1`.
pub fn emit_sos_convexity(
    builder: &mut ProgramBuilder,
    p: &HomogeneousPoly<LinExpr>,
    name: &str,
) -> Result<GramConstraint, PolyError> {
    if p.degree() % 2 == 1 || p.degree() < 2 {
        return Err(PolyError::OddDegree(p.degree()));
    }
    let n = p.nvars();
    let q = hessian_form(p);
    let half = p.degree() / 2 - 1;
    let mut basis = Vec::new();
    for i in 0..n {
        for m in monomials(n, half) {
            let mut x = m.0.clone();
            x.extend(std::iter::repeat_n(0, n));
            x[n + i] = 1;
            basis.push(Exponent(x));
        }
    }
    emit_gram(builder, &q, (0..2 * n).collect(), basis, name)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateForm {
    /// `W^T M W + H^T L H <= 0` with `L >= 0` entrywise (`H` the facet normals).
    #[default]
    Halfspace,
    /// `-R^T M R = S + N`, `S` PSD, `N >= 0` entrywise (`R` the generators).
    Generator,
}

/// Certificate that `z^T M z <= 0` on a cone.
#[derive(Clone, Debug)]
pub struct ConeQuadraticCertificate {
    pub matrix: AffineSymMatrix,
    pub cone: PolyhedralCone,
    pub form: CertificateForm,
    /// Orthonormal basis of the cone's span; the certificate lives in these coordinates.
    pub basis: DMatrix<f64>,
    /// Facet normals in span coordinates (halfspace form).
    pub facets: DMatrix<f64>,
    pub multiplier: Option<MatrixVar>,
    pub block: BlockId,
}

impl ConeQuadraticCertificate {
    /// Largest `z^T M z` over `samples` unit points of the cone.
    pub fn max_sampled_value<R: Rng>(&self, values: &[f64], samples: usize, rng: &mut R) -> f64 {
        let m = self.matrix.eval(values);
        let gens = self.cone.generators.as_ref().expect("certificate cones carry generators");
        (0..samples)
            .filter_map(|_| sample_in_cone(gens, self.cone.dim(), rng))
            .map(|z| (z.transpose() * &m * &z)[(0, 0)])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Random unit vector of the cone (conic combination of generators).
pub fn sample_in_cone<R: Rng>(gens: &Generators, dim: usize, rng: &mut R) -> Option<DVector<f64>> {
    if gens.is_origin_only() {
        return None;
    }
    let mut z = DVector::zeros(dim);
    for r in &gens.rays {
        // Exponential weights give uniform barycentric coordinates; square them
        // sometimes to reach the boundary more often.
        let mut w: f64 = -rng.gen::<f64>().max(1e-300).ln();
        if rng.gen_bool(0.3) {
            w *= w;
        }
        z += r * w;
    }
    for l in &gens.lineality {
        z += l * rng.gen_range(-1.0..1.0);
    }
    let n = z.norm();
    (n > 1e-12).then(|| z / n)
}

/// Emits a sufficient condition for `z^T M z <= 0` on `cone`. Returns `None`
/// when the cone is the origin (nothing to certify).
pub fn emit_cone_quadratic(
    builder: &mut ProgramBuilder,
    m: &AffineSymMatrix,
    cone: &PolyhedralCone,
    form: CertificateForm,
    name: &str,
) -> Result<Option<ConeQuadraticCertificate>, PolyError> {
    let k = cone.dim();
    if m.dim() != k {
        return Err(PolyError::DimensionMismatch { expected: k, found: m.dim() });
    }
    let cone = cone.clone().with_generators()?;
    let gens = cone.generators.clone().expect("attached");
    if gens.is_origin_only() {
        return Ok(None);
    }
    let w = cone.span()?;
    let s = w.ncols();
    // Restrict to the span so that lower-dimensional cones get a certificate
    // in their own coordinates.
    let restricted = PolyhedralCone::new(&cone.halfspaces * &w).with_generators()?;
    let facet_idx = restricted.facet_rows()?;
    let facets = if facet_idx.is_empty() {
        DMatrix::zeros(0, s)
    } else {
        DMatrix::from_rows(
            &facet_idx.iter().map(|&i| restricted.halfspaces.row(i).into_owned()).collect::<Vec<_>>(),
        )
    };
    let ms = m.congruence(&w.transpose());
    let (multiplier, block) = match form {
        CertificateForm::Halfspace => {
            let t = facets.nrows();
            let mut total = ms.clone();
            let mut multiplier = None;
            if t > 0 {
                let lam = builder.add_matrix(format!("{name}.lambda"), t);
                for i in 0..t {
                    for j in i..t {
                        builder.add_nonnegative(LinExpr::var(lam.entry(i, j)))?;
                    }
                }
                total.add_scaled(&lam.affine().congruence(&facets.transpose()), 1.0);
                multiplier = Some(lam);
            }
            (multiplier, builder.add_psd(&total.scaled(-1.0))?)
        }
        CertificateForm::Generator => {
            let rays: Vec<DVector<f64>> = gens.directions().iter().map(|r| w.transpose() * r).collect();
            let r = DMatrix::from_columns(&rays);
            let q = ms.congruence(&r.transpose());
            let n = builder.add_matrix(format!("{name}.nonneg"), rays.len());
            for i in 0..rays.len() {
                for j in i..rays.len() {
                    builder.add_nonnegative(LinExpr::var(n.entry(i, j)))?;
                }
            }
            let mut sdp = q.scaled(-1.0);
            sdp.add_scaled(&n.affine(), -1.0);
            (Some(n), builder.add_psd(&sdp)?)
        }
    };
    Ok(Some(ConeQuadraticCertificate {
        matrix: m.clone(),
        cone,
        form,
        basis: w,
        facets,
        multiplier,
        block,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::{solve, SolveStatus, SolverOptions};

    fn poly(n: usize, d: usize, terms: &[(&[u32], f64)]) -> HomogeneousPoly<f64> {
        HomogeneousPoly::from_terms(n, d, terms.iter().map(|(e, c)| (Exponent(e.to_vec()), *c))).unwrap()
    }

    fn sos_feasible(p: &HomogeneousPoly<f64>) -> SolveStatus {
        let mut b = ProgramBuilder::new();
        emit_sos(&mut b, &HomogeneousPoly::from_real(p), "g").unwrap();
        solve(&b.finalize(), &SolverOptions::default()).unwrap().status
    }

    fn sos_convex_feasible(p: &HomogeneousPoly<f64>) -> SolveStatus {
        let mut b = ProgramBuilder::new();
        emit_sos_convexity(&mut b, &HomogeneousPoly::from_real(p), "h").unwrap();
        solve(&b.finalize(), &SolverOptions::default()).unwrap().status
    }

    #[test]
    fn monomial_order() {
        let m = monomials(2, 2);
        assert_eq!(m, vec![Exponent(vec![2, 0]), Exponent(vec![1, 1]), Exponent(vec![0, 2])]);
        assert_eq!(monomials(3, 4).len(), 15);
        assert!(Exponent(vec![0, 3]) > Exponent(vec![2, 0]));
    }

    #[test]
    fn permutation_composition() {
        let p = poly(2, 4, &[(&[4, 0], 1.0), (&[0, 4], 1.0)]);
        let swap = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(p.compose_linear(&swap).unwrap(), p);
    }

    #[test]
    fn binomial_composition() {
        let p = poly(1, 2, &[(&[2], 1.0)]);
        let m = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let q = p.compose_linear(&m).unwrap();
        assert_eq!(q, poly(2, 2, &[(&[2, 0], 1.0), (&[1, 1], 2.0), (&[0, 2], 1.0)]));
    }

    #[test]
    fn gradients() {
        let p = poly(2, 4, &[(&[4, 0], 1.0), (&[0, 4], 1.0)]);
        let g = p.gradient().unwrap();
        assert_eq!(g[0], poly(2, 3, &[(&[3, 0], 4.0)]));
        assert_eq!(g[1], poly(2, 3, &[(&[0, 3], 4.0)]));
        let p = poly(2, 4, &[(&[2, 2], 1.0)]);
        let g = p.gradient().unwrap();
        assert_eq!(g[0], poly(2, 3, &[(&[1, 2], 2.0)]));
        assert_eq!(g[1], poly(2, 3, &[(&[2, 1], 2.0)]));
    }

    #[test]
    fn lie_of_isotropic_flow() {
        let p = poly(2, 2, &[(&[2, 0], 1.0), (&[0, 2], 1.0)]);
        let c = -DMatrix::<f64>::identity(2, 2);
        let q = lie_polynomial(&p, &c, &DMatrix::identity(2, 2)).unwrap();
        assert_eq!(q, poly(2, 2, &[(&[2, 0], -2.0), (&[0, 2], -2.0)]));
        let zero = lie_polynomial(&p, &DMatrix::zeros(2, 2), &DMatrix::identity(2, 2)).unwrap();
        assert!(zero.is_zero());
    }

    #[test]
    fn lie_of_lifted_node() {
        let p = poly(3, 2, &[(&[2, 0, 0], 1.0), (&[0, 2, 0], 1.0), (&[0, 0, 2], 1.0)]);
        let c = DMatrix::from_row_slice(2, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let e = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let q = lie_polynomial(&p, &c, &e).unwrap();
        assert_eq!(q, poly(2, 2, &[(&[1, 1], 2.0)]));
    }

    #[test]
    fn sos_examples() {
        assert_eq!(sos_feasible(&poly(2, 4, &[(&[2, 2], 1.0)])), SolveStatus::Optimal);
        assert_eq!(
            sos_feasible(&poly(2, 2, &[(&[2, 0], 1.0), (&[1, 1], 2.0), (&[0, 2], 1.0)])),
            SolveStatus::Optimal
        );
        let motzkin = poly(
            3,
            6,
            &[(&[4, 2, 0], 1.0), (&[2, 4, 0], 1.0), (&[2, 2, 2], -3.0), (&[0, 0, 6], 1.0)],
        );
        assert_eq!(sos_feasible(&motzkin), SolveStatus::Infeasible);
    }

    #[test]
    fn odd_degree_rejected() {
        let mut b = ProgramBuilder::new();
        let p = HomogeneousPoly::from_real(&poly(2, 3, &[(&[3, 0], 1.0)]));
        assert!(matches!(emit_sos(&mut b, &p, "g"), Err(PolyError::OddDegree(3))));
    }

    #[test]
    fn sos_convexity_examples() {
        let sq = poly(2, 4, &[(&[4, 0], 1.0), (&[2, 2], 2.0), (&[0, 4], 1.0)]);
        assert_eq!(sos_convex_feasible(&sq), SolveStatus::Optimal);
        let sep = poly(2, 4, &[(&[4, 0], 1.0), (&[0, 4], 1.0)]);
        assert_eq!(sos_convex_feasible(&sep), SolveStatus::Optimal);
        let bad = poly(2, 4, &[(&[4, 0], 1.0), (&[2, 2], -6.0), (&[0, 4], 1.0)]);
        assert_eq!(sos_convex_feasible(&bad), SolveStatus::Infeasible);
    }

    fn cone_quadratic_status(m: DMatrix<f64>, cone: PolyhedralCone, form: CertificateForm) -> SolveStatus {
        let mut b = ProgramBuilder::new();
        let cert = emit_cone_quadratic(&mut b, &AffineSymMatrix::from_const(&m), &cone, form, "c").unwrap();
        assert!(cert.is_some());
        solve(&b.finalize(), &SolverOptions::default()).unwrap().status
    }

    #[test]
    fn cone_quadratic_examples() {
        for form in [CertificateForm::Halfspace, CertificateForm::Generator] {
            let m = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]);
            assert_eq!(
                cone_quadratic_status(m, PolyhedralCone::negative_orthant(2), form),
                SolveStatus::Optimal
            );
            let m = -DMatrix::<f64>::identity(3, 3);
            assert_eq!(
                cone_quadratic_status(m, PolyhedralCone::negative_orthant(3), form),
                SolveStatus::Optimal
            );
            assert_eq!(
                cone_quadratic_status(DMatrix::identity(2, 2), PolyhedralCone::full_space(2), form),
                SolveStatus::Infeasible
            );
        }
    }

    #[test]
    fn origin_cone_is_vacuous() {
        let h = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, -1.0, 1.0, -1.0, -1.0]);
        let mut b = ProgramBuilder::new();
        let m = AffineSymMatrix::from_const(&DMatrix::identity(2, 2));
        assert!(emit_cone_quadratic(&mut b, &m, &PolyhedralCone::new(h), CertificateForm::Halfspace, "c")
            .unwrap()
            .is_none());
    }

    #[test]
    fn ray_cone_needs_only_ray_value() {
        // On the ray (0,-1), z^T M z = M_22 < 0 although M is indefinite.
        let h = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0]);
        let m = DMatrix::from_row_slice(2, 2, &[5.0, 0.0, 0.0, -1.0]);
        assert_eq!(
            cone_quadratic_status(m, PolyhedralCone::new(h), CertificateForm::Halfspace),
            SolveStatus::Optimal
        );
    }
}
