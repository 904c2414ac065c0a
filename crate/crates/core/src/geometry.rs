//! Polyhedral cones, conic partitions and face fans of sphere samplings.

use std::collections::{BTreeSet, HashMap, HashSet};

use nalgebra::{DMatrix, DVector, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conic::{self, LinExpr, ProgramBuilder, SolveStatus, SolverOptions};
use crate::linalg::{null_space, rank, span_basis};

/// Tolerance on signed distances of unit vectors to unit-normal hyperplanes.
pub const GEOM_TOL: f64 = 1e-9;
/// Largest ambient dimension handled by double description.
pub const MAX_DD_DIM: usize = 6;
const HULL_TOL: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("vertex enumeration supports dimension <= {MAX_DD_DIM}, got {0}")]
    Unsupported(usize),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid face fan parameters: {0}")]
    InvalidFan(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
}

/// V-representation: `cone = cone(rays) + span(lineality)`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Generators {
    pub rays: Vec<DVector<f64>>,
    pub lineality: Vec<DVector<f64>>,
}

impl Generators {
    /// Rays plus both signs of every lineality direction.
    pub fn directions(&self) -> Vec<DVector<f64>> {
        let mut out = self.rays.clone();
        for l in &self.lineality {
            out.push(l.clone());
            out.push(-l);
        }
        out
    }

    pub fn span_dim(&self, ambient: usize) -> usize {
        span_basis(&self.directions(), ambient, 1e-9).len()
    }

    pub fn is_origin_only(&self) -> bool {
        self.rays.is_empty() && self.lineality.is_empty()
    }
}

/// `{y : G y <= 0}`, optionally with its generators.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyhedralCone {
    /// Rows are unit outward normals.
    pub halfspaces: DMatrix<f64>,
    pub generators: Option<Generators>,
}

fn normalized_rows(g: &DMatrix<f64>) -> DMatrix<f64> {
    let rows: Vec<_> = (0..g.nrows())
        .filter_map(|i| {
            let r = g.row(i).into_owned();
            let n = r.norm();
            (n > 1e-14).then(|| r / n)
        })
        .collect();
    if rows.is_empty() {
        DMatrix::zeros(0, g.ncols())
    } else {
        DMatrix::from_rows(&rows)
    }
}

impl PolyhedralCone {
    pub fn new(halfspaces: DMatrix<f64>) -> Self {
        PolyhedralCone {
            halfspaces: normalized_rows(&halfspaces),
            generators: None,
        }
    }

    pub fn full_space(dim: usize) -> Self {
        PolyhedralCone::new(DMatrix::zeros(0, dim))
    }

    pub fn negative_orthant(dim: usize) -> Self {
        PolyhedralCone::new(DMatrix::identity(dim, dim))
    }

    /// Cone generated by `rays` (which need not be extreme).
    pub fn from_rays(rays: &[DVector<f64>], dim: usize) -> Result<Self, GeometryError> {
        if let Some(r) = rays.iter().find(|r| r.len() != dim) {
            return Err(GeometryError::DimensionMismatch { expected: dim, found: r.len() });
        }
        // H-rep of K is the generator set of its polar {g : <g, r> <= 0 for all r}.
        let polar_h = if rays.is_empty() {
            DMatrix::zeros(0, dim)
        } else {
            DMatrix::from_rows(&rays.iter().map(|r| r.transpose()).collect::<Vec<_>>())
        };
        let polar = cone_generators(&PolyhedralCone::new(polar_h))?;
        let rows: Vec<_> = polar.directions().iter().map(|g| g.transpose()).collect();
        let h = if rows.is_empty() {
            DMatrix::zeros(0, dim)
        } else {
            DMatrix::from_rows(&rows)
        };
        let mut cone = PolyhedralCone::new(h);
        cone.generators = Some(cone_generators(&cone)?);
        Ok(cone)
    }

    pub fn dim(&self) -> usize {
        self.halfspaces.ncols()
    }

    pub fn n_halfspaces(&self) -> usize {
        self.halfspaces.nrows()
    }

    /// Largest violation `max_i <g_i, y>`, or `-inf` for the full space.
    pub fn slack(&self, y: &DVector<f64>) -> f64 {
        (&self.halfspaces * y).iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, y: &DVector<f64>, tol: f64) -> bool {
        self.slack(y) <= tol * y.norm().max(1.0)
    }

    /// Attaches generators if missing.
    pub fn with_generators(mut self) -> Result<Self, GeometryError> {
        if self.generators.is_none() {
            self.generators = Some(cone_generators(&self)?);
        }
        Ok(self)
    }

    pub fn generators(&self) -> Result<std::borrow::Cow<'_, Generators>, GeometryError> {
        match &self.generators {
            Some(g) => Ok(std::borrow::Cow::Borrowed(g)),
            None => cone_generators(self).map(std::borrow::Cow::Owned),
        }
    }

    /// Orthonormal basis (columns) of the linear span of the cone.
    pub fn span(&self) -> Result<DMatrix<f64>, GeometryError> {
        let g = self.generators()?;
        let b = span_basis(&g.directions(), self.dim(), 1e-9);
        Ok(if b.is_empty() {
            DMatrix::zeros(self.dim(), 0)
        } else {
            DMatrix::from_columns(&b)
        })
    }

    pub fn is_full_dimensional(&self) -> Result<bool, GeometryError> {
        if self.dim() > MAX_DD_DIM {
            return Ok(strict_interior_probe(self));
        }
        Ok(self.generators()?.span_dim(self.dim()) == self.dim())
    }

    /// A point in the relative interior: the sum of the normalized rays.
    pub fn relative_interior_point(&self) -> Result<DVector<f64>, GeometryError> {
        let g = self.generators()?;
        let mut p = DVector::zeros(self.dim());
        for r in &g.rays {
            p += r / r.norm();
        }
        Ok(p)
    }

    /// Indices of halfspace rows defining facets (tight on a set of
    /// generators spanning a hyperplane of the cone's span).
    pub fn facet_rows(&self) -> Result<Vec<usize>, GeometryError> {
        let g = self.generators()?;
        let dirs = g.directions();
        let s = span_basis(&dirs, self.dim(), 1e-9).len();
        let mut keep = Vec::new();
        let mut seen: Vec<DVector<f64>> = Vec::new();
        for i in 0..self.n_halfspaces() {
            let row = self.halfspaces.row(i).transpose();
            let tight: Vec<_> = dirs.iter().filter(|d| row.dot(d).abs() <= GEOM_TOL).cloned().collect();
            let slack_somewhere = dirs.iter().any(|d| row.dot(d) < -GEOM_TOL);
            if !slack_somewhere {
                continue;
            }
            if s >= 1 && span_basis(&tight, self.dim(), 1e-9).len() == s - 1 {
                // Two rows can define the same facet of a lower-dimensional
                // cone; keep one per tight set.
                let key = tight.iter().fold(DVector::zeros(self.dim()), |acc, d| acc + d);
                if seen.iter().any(|k| (k - &key).norm() < 1e-9) {
                    continue;
                }
                seen.push(key);
                keep.push(i);
            }
        }
        Ok(keep)
    }
}

/// LP probe: is `{y : G y < 0}` nonempty?
pub fn strict_interior_probe(cone: &PolyhedralCone) -> bool {
    let n = cone.dim();
    if cone.n_halfspaces() == 0 {
        return n > 0;
    }
    let mut b = ProgramBuilder::new();
    let y: Vec<_> = (0..n).map(|i| b.add_scalar(format!("y{i}"))).collect();
    let t = b.add_scalar("t");
    for i in 0..cone.n_halfspaces() {
        let mut e = LinExpr::var(t);
        for (k, yk) in y.iter().enumerate() {
            e.add_term(*yk, cone.halfspaces[(i, k)]);
        }
        b.add_le(e, 0.0.into()).expect("own variables");
    }
    for yk in &y {
        b.add_le(LinExpr::var(*yk), 1.0.into()).expect("own variables");
        b.add_le(-LinExpr::var(*yk), 1.0.into()).expect("own variables");
    }
    b.add_le(LinExpr::var(t), 1.0.into()).expect("own variables");
    b.maximize(LinExpr::var(t)).expect("own variables");
    let program = b.finalize();
    match conic::solve(&program, &SolverOptions::default()) {
        Ok(sol) if sol.status == SolveStatus::Optimal => sol.value(t).is_some_and(|v| v > 1e-7),
        _ => false,
    }
}

/// Generators of `{y : G y <= 0}` by double description.
pub fn cone_generators(cone: &PolyhedralCone) -> Result<Generators, GeometryError> {
    let n = cone.dim();
    if n > MAX_DD_DIM {
        return Err(GeometryError::Unsupported(n));
    }
    let g = &cone.halfspaces;
    if g.iter().any(|v| !v.is_finite()) {
        return Err(GeometryError::Degenerate("non-finite halfspace".into()));
    }
    let lin = null_space(g, 1e-10);
    let lineality: Vec<DVector<f64>> = lin.column_iter().map(|c| c.into_owned()).collect();
    let l = lineality.len();
    if l == n {
        return Ok(Generators { rays: Vec::new(), lineality });
    }
    // Pointed part lives in the orthogonal complement of the lineality space.
    let w = if l == 0 {
        DMatrix::identity(n, n)
    } else {
        null_space(&lin.transpose(), 1e-10)
    };
    let k = w.ncols();
    let h = normalized_rows(&(g * &w));
    let rows: Vec<DVector<f64>> = (0..h.nrows()).map(|i| h.row(i).transpose()).collect();

    // Initial simplicial cone from k independent rows.
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut chosen = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let mut v = r.clone();
        for _ in 0..2 {
            for b in &basis {
                v -= b * b.dot(&v);
            }
        }
        if v.norm() > 1e-9 {
            basis.push(v.normalize());
            chosen.push(i);
            if chosen.len() == k {
                break;
            }
        }
    }
    if chosen.len() < k {
        return Err(GeometryError::Degenerate("halfspaces do not determine a pointed cone".into()));
    }
    let h0 = DMatrix::from_rows(&chosen.iter().map(|&i| rows[i].transpose()).collect::<Vec<_>>());
    let inv = h0
        .try_inverse()
        .ok_or_else(|| GeometryError::Degenerate("singular initial system".into()))?;
    let mut rays: Vec<DVector<f64>> = (0..k).map(|j| (-inv.column(j)).normalize()).collect();
    let mut processed: Vec<usize> = chosen.clone();

    let tight_set = |r: &DVector<f64>, processed: &[usize]| -> BTreeSet<usize> {
        processed
            .iter()
            .copied()
            .filter(|&i| rows[i].dot(r).abs() <= GEOM_TOL)
            .collect()
    };

    for idx in 0..rows.len() {
        if chosen.contains(&idx) {
            continue;
        }
        let row = &rows[idx];
        let vals: Vec<f64> = rays.iter().map(|r| row.dot(r)).collect();
        let plus: Vec<usize> = (0..rays.len()).filter(|&a| vals[a] > GEOM_TOL).collect();
        if plus.is_empty() {
            processed.push(idx);
            continue;
        }
        let minus: Vec<usize> = (0..rays.len()).filter(|&a| vals[a] < -GEOM_TOL).collect();
        let mut next: Vec<DVector<f64>> = (0..rays.len())
            .filter(|&a| vals[a] <= GEOM_TOL)
            .map(|a| rays[a].clone())
            .collect();
        if k >= 2 {
            let tights: HashMap<usize, BTreeSet<usize>> = plus
                .iter()
                .chain(&minus)
                .map(|&a| (a, tight_set(&rays[a], &processed)))
                .collect();
            for &p in &plus {
                for &m in &minus {
                    let common: Vec<usize> = tights[&p].intersection(&tights[&m]).copied().collect();
                    if common.len() + 2 < k {
                        continue;
                    }
                    let r = if common.is_empty() {
                        0
                    } else {
                        let sub = DMatrix::from_rows(
                            &common.iter().map(|&i| rows[i].transpose()).collect::<Vec<_>>(),
                        );
                        rank(&sub, 1e-9)
                    };
                    if r + 2 != k {
                        continue;
                    }
                    let new = &rays[m] * vals[p] - &rays[p] * vals[m];
                    let nrm = new.norm();
                    if nrm > 1e-14 {
                        next.push(new / nrm);
                    }
                }
            }
        }
        rays = next;
        processed.push(idx);
    }

    let mut unique: Vec<DVector<f64>> = Vec::new();
    for r in rays {
        let y = (&w * r).normalize();
        if !unique.iter().any(|u| (u - &y).norm() < 1e-9) {
            unique.push(y);
        }
    }
    Ok(Generators { rays: unique, lineality })
}

/// `{y in R^r : m^T y in cone}` for `m` of shape `r x k` and a cone in `R^k`.
pub fn preimage_cone(cone: &PolyhedralCone, m: &DMatrix<f64>) -> Result<PolyhedralCone, GeometryError> {
    if m.ncols() != cone.dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: cone.dim(),
            found: m.ncols(),
        });
    }
    Ok(PolyhedralCone::new(&cone.halfspaces * m.transpose()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConeIntersection {
    pub cone: PolyhedralCone,
    pub empty_interior: bool,
}

pub fn intersect_cones(a: &PolyhedralCone, b: &PolyhedralCone) -> Result<ConeIntersection, GeometryError> {
    if a.dim() != b.dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let n = a.dim();
    let mut h = DMatrix::zeros(a.n_halfspaces() + b.n_halfspaces(), n);
    h.view_mut((0, 0), (a.n_halfspaces(), n)).copy_from(&a.halfspaces);
    h.view_mut((a.n_halfspaces(), 0), (b.n_halfspaces(), n)).copy_from(&b.halfspaces);
    let mut cone = PolyhedralCone::new(h);
    if n <= MAX_DD_DIM {
        cone = cone.with_generators()?;
    }
    let empty_interior = !cone.is_full_dimensional()?;
    Ok(ConeIntersection { cone, empty_interior })
}

/// Two cones of a partition meeting in a common facet.
#[derive(Clone, Debug, PartialEq)]
pub struct Adjacency {
    pub i: usize,
    pub j: usize,
    /// Generators of the shared facet.
    pub shared_rays: Vec<DVector<f64>>,
    /// Orthonormal basis (columns) of the span of the shared facet.
    pub basis: DMatrix<f64>,
    /// Unit normal of the shared facet, pointing from cone `i` into cone `j`.
    pub normal: DVector<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConicPartition {
    pub dim: usize,
    pub cones: Vec<PolyhedralCone>,
    pub adjacency: Vec<Adjacency>,
}

impl ConicPartition {
    /// Builds a partition, computing missing generators and the adjacency
    /// structure. Fails if a cone is not full-dimensional or two cones overlap.
    pub fn new(dim: usize, cones: Vec<PolyhedralCone>) -> Result<Self, GeometryError> {
        if cones.is_empty() {
            return Err(GeometryError::InvalidPartition("no cones".into()));
        }
        let cones = cones
            .into_iter()
            .map(|c| {
                if c.dim() != dim {
                    return Err(GeometryError::DimensionMismatch { expected: dim, found: c.dim() });
                }
                c.with_generators()
            })
            .collect::<Result<Vec<_>, _>>()?;
        for (i, c) in cones.iter().enumerate() {
            if !c.is_full_dimensional()? {
                return Err(GeometryError::InvalidPartition(format!("cone {i} is not full-dimensional")));
            }
        }
        let mut adjacency = Vec::new();
        for i in 0..cones.len() {
            for j in i + 1..cones.len() {
                let inter = intersect_cones(&cones[i], &cones[j])?;
                let gens = inter.cone.generators()?.into_owned();
                let dirs = gens.directions();
                let span = span_basis(&dirs, dim, 1e-9);
                if span.len() == dim {
                    return Err(GeometryError::InvalidPartition(format!("cones {i} and {j} overlap")));
                }
                if dim == 0 || span.len() != dim - 1 {
                    continue;
                }
                let basis = DMatrix::from_columns(&span);
                let mut normal = null_space(&basis.transpose(), 1e-9).column(0).into_owned();
                let inner = cones[i].relative_interior_point()?;
                if normal.dot(&inner) > 0.0 {
                    normal = -normal;
                }
                adjacency.push(Adjacency {
                    i,
                    j,
                    shared_rays: dirs,
                    basis,
                    normal,
                });
            }
        }
        Ok(ConicPartition { dim, cones, adjacency })
    }

    /// The whole space as one piece.
    pub fn trivial(dim: usize) -> Self {
        let cone = PolyhedralCone::full_space(dim).with_generators().expect("dimension checked by caller");
        ConicPartition {
            dim,
            cones: vec![cone],
            adjacency: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.cones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cones.is_empty()
    }

    pub fn containing(&self, y: &DVector<f64>, tol: f64) -> Vec<usize> {
        (0..self.cones.len()).filter(|&i| self.cones[i].contains(y, tol)).collect()
    }

    /// Cone with the smallest slack at `y` (the containing one when any).
    pub fn locate(&self, y: &DVector<f64>) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, c) in self.cones.iter().enumerate() {
            let s = c.slack(y);
            if s < best.1 {
                best = (i, s);
            }
        }
        best.0
    }

    /// Partition axioms: full-dimensional pieces, covering on sampled
    /// directions, pairwise intersections of dimension below `dim`.
    pub fn check(&self, samples: usize, seed: u64) -> Vec<String> {
        let mut problems = Vec::new();
        for (i, c) in self.cones.iter().enumerate() {
            match c.is_full_dimensional() {
                Ok(true) => {}
                Ok(false) => problems.push(format!("cone {i} is not full-dimensional")),
                Err(e) => problems.push(format!("cone {i}: {e}")),
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let y = random_unit(&mut rng, self.dim);
            if self.containing(&y, GEOM_TOL).is_empty() {
                problems.push(format!("direction {:?} is in no cone", y.as_slice()));
                break;
            }
        }
        for i in 0..self.cones.len() {
            for j in i + 1..self.cones.len() {
                match intersect_cones(&self.cones[i], &self.cones[j]) {
                    Ok(x) if !x.empty_interior => problems.push(format!("cones {i} and {j} overlap")),
                    Ok(_) => {}
                    Err(e) => problems.push(format!("cones {i}, {j}: {e}")),
                }
            }
        }
        problems
    }
}

pub fn random_unit<R: rand::Rng>(rng: &mut R, dim: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(dim, |_, _| StandardNormal.sample(rng));
        let n: f64 = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

// ---------------------------------------------------------------------------
// Face fans

/// Points `(cos a cos b, sin a cos b, sin b)` with `a = 2 pi i / m1` and `b`
/// taking `m2` evenly spaced values in `[-pi/2, pi/2]`, poles deduplicated.
pub fn sphere_points(m1: usize, m2: usize) -> Result<Vec<Vector3<f64>>, GeometryError> {
    if m1 < 3 {
        return Err(GeometryError::InvalidFan(format!("m1 must be >= 3, got {m1}")));
    }
    if m2 < 3 || m2.is_multiple_of(2) {
        return Err(GeometryError::InvalidFan(format!("m2 must be odd and >= 3, got {m2}")));
    }
    let snap = |v: f64| if v.abs() < 1e-14 { 0.0 } else { v };
    let mut pts: Vec<Vector3<f64>> = Vec::new();
    for jb in 0..m2 {
        let beta = -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * jb as f64 / (m2 - 1) as f64;
        for ia in 0..m1 {
            let alpha = 2.0 * std::f64::consts::PI * ia as f64 / m1 as f64;
            let p = Vector3::new(
                snap(alpha.cos() * beta.cos()),
                snap(alpha.sin() * beta.cos()),
                snap(beta.sin()),
            );
            if !pts.iter().any(|q| (q - p).norm() < 1e-9) {
                pts.push(p);
            }
        }
    }
    Ok(pts)
}

/// Outward-oriented triangles of the convex hull (incremental algorithm).
pub fn convex_hull_3d(pts: &[Vector3<f64>]) -> Result<Vec<[usize; 3]>, GeometryError> {
    let degenerate = || GeometryError::Degenerate("points are coplanar".into());
    if pts.len() < 4 {
        return Err(degenerate());
    }
    let far = |from: &dyn Fn(&Vector3<f64>) -> f64| {
        (0..pts.len())
            .max_by(|&a, &b| from(&pts[a]).total_cmp(&from(&pts[b])))
            .expect("nonempty")
    };
    let i0 = 0;
    let i1 = far(&|p| (p - pts[i0]).norm());
    let d01 = (pts[i1] - pts[i0]).normalize();
    let i2 = far(&|p| (p - pts[i0]).cross(&d01).norm());
    let nrm = (pts[i1] - pts[i0]).cross(&(pts[i2] - pts[i0]));
    if nrm.norm() < HULL_TOL {
        return Err(degenerate());
    }
    let nrm = nrm.normalize();
    let i3 = far(&|p| (p - pts[i0]).dot(&nrm).abs());
    if (pts[i3] - pts[i0]).dot(&nrm).abs() < HULL_TOL {
        return Err(degenerate());
    }
    let centroid = (pts[i0] + pts[i1] + pts[i2] + pts[i3]) / 4.0;
    let unit_normal = |f: &[usize; 3]| {
        (pts[f[1]] - pts[f[0]]).cross(&(pts[f[2]] - pts[f[0]])).normalize()
    };
    let orient = |f: [usize; 3]| {
        if unit_normal(&f).dot(&(centroid - pts[f[0]])) > 0.0 {
            [f[0], f[2], f[1]]
        } else {
            f
        }
    };
    let mut faces = vec![
        orient([i0, i1, i2]),
        orient([i0, i1, i3]),
        orient([i0, i2, i3]),
        orient([i1, i2, i3]),
    ];
    for p in 0..pts.len() {
        if [i0, i1, i2, i3].contains(&p) {
            continue;
        }
        let visible: Vec<bool> = faces
            .iter()
            .map(|f| unit_normal(f).dot(&(pts[p] - pts[f[0]])) > HULL_TOL)
            .collect();
        if !visible.iter().any(|&v| v) {
            continue;
        }
        let mut kept_edges = HashSet::new();
        for (f, &v) in faces.iter().zip(&visible) {
            if !v {
                for e in 0..3 {
                    kept_edges.insert((f[e], f[(e + 1) % 3]));
                }
            }
        }
        let mut next = Vec::new();
        let mut horizon = Vec::new();
        for (f, &v) in faces.iter().zip(&visible) {
            if v {
                for e in 0..3 {
                    let (a, b) = (f[e], f[(e + 1) % 3]);
                    if kept_edges.contains(&(b, a)) {
                        horizon.push((a, b));
                    }
                }
            } else {
                next.push(*f);
            }
        }
        for (a, b) in horizon {
            next.push([a, b, p]);
        }
        faces = next;
    }
    Ok(faces)
}

/// Groups hull triangles into facets (maximal coplanar edge-connected sets)
/// and returns each facet's vertices in counter-clockwise order seen from outside.
pub fn hull_facets(pts: &[Vector3<f64>], triangles: &[[usize; 3]]) -> Vec<Vec<usize>> {
    let normals: Vec<Vector3<f64>> = triangles
        .iter()
        .map(|f| (pts[f[1]] - pts[f[0]]).cross(&(pts[f[2]] - pts[f[0]])).normalize())
        .collect();
    let mut parent: Vec<usize> = (0..triangles.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut edge_owner: HashMap<(usize, usize), usize> = HashMap::new();
    for (t, f) in triangles.iter().enumerate() {
        for e in 0..3 {
            let (a, b) = (f[e], f[(e + 1) % 3]);
            if let Some(&s) = edge_owner.get(&(b, a)) {
                let offset = (normals[s].dot(&pts[triangles[s][0]]) - normals[t].dot(&pts[f[0]])).abs();
                if normals[s].dot(&normals[t]) > 1.0 - HULL_TOL && offset < HULL_TOL {
                    let (rs, rt) = (find(&mut parent, s), find(&mut parent, t));
                    parent[rs] = rt;
                }
            }
            edge_owner.insert((a, b), t);
        }
    }
    let mut groups: Vec<(usize, BTreeSet<usize>)> = Vec::new();
    for (t, f) in triangles.iter().enumerate() {
        let r = find(&mut parent, t);
        match groups.iter_mut().find(|(root, _)| *root == r) {
            Some((_, set)) => set.extend(f.iter().copied()),
            None => groups.push((r, f.iter().copied().collect())),
        }
    }
    groups
        .into_iter()
        .map(|(root, verts)| {
            let n = normals[root];
            let verts: Vec<usize> = verts.into_iter().collect();
            let c = verts.iter().fold(Vector3::zeros(), |acc, &v| acc + pts[v]) / verts.len() as f64;
            let e1 = (pts[verts[0]] - c).normalize();
            let e2 = n.cross(&e1);
            let mut with_angle: Vec<(f64, usize)> = verts
                .iter()
                .map(|&v| {
                    let d = pts[v] - c;
                    (d.dot(&e2).atan2(d.dot(&e1)), v)
                })
                .collect();
            with_angle.sort_by(|a, b| a.0.total_cmp(&b.0));
            with_angle.into_iter().map(|(_, v)| v).collect()
        })
        .collect()
}

/// Cone over a convex polygon `verts` (ordered) on the sphere.
fn polygon_cone(verts: &[Vector3<f64>]) -> PolyhedralCone {
    let c = verts.iter().fold(Vector3::zeros(), |acc, v| acc + v);
    let mut rows = Vec::new();
    for k in 0..verts.len() {
        let (a, b) = (verts[k], verts[(k + 1) % verts.len()]);
        let mut g = a.cross(&b).normalize();
        if g.dot(&c) > 0.0 {
            g = -g;
        }
        rows.push(g.transpose());
    }
    let halfspaces = DMatrix::from_fn(rows.len(), 3, |i, j| rows[i][j]);
    let rays = verts.iter().map(|v| DVector::from_column_slice(v.as_slice())).collect();
    PolyhedralCone {
        halfspaces,
        generators: Some(Generators { rays, lineality: Vec::new() }),
    }
}

/// Face fan of the convex hull of [`sphere_points`]: one cone per hull facet.
/// Coplanar hull triangles form a single facet unless `triangulate` is set.
pub fn face_fan(m1: usize, m2: usize, triangulate: bool) -> Result<ConicPartition, GeometryError> {
    let pts = sphere_points(m1, m2)?;
    let triangles = convex_hull_3d(&pts)?;
    let facets: Vec<Vec<usize>> = if triangulate {
        triangles.iter().map(|t| t.to_vec()).collect()
    } else {
        hull_facets(&pts, &triangles)
    };
    let cones = facets
        .iter()
        .map(|f| polygon_cone(&f.iter().map(|&v| pts[v]).collect::<Vec<_>>()))
        .collect();
    ConicPartition::new(3, cones)
}

// ---------------------------------------------------------------------------
// Serialization

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCone {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    halfspaces: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rays: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lineality: Option<Vec<Vec<f64>>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPartition {
    dim: usize,
    cones: Vec<RawCone>,
}

fn to_vecs(vs: &[DVector<f64>]) -> Vec<Vec<f64>> {
    vs.iter().map(|v| v.iter().copied().collect()).collect()
}

impl RawCone {
    fn into_cone(self, dim: usize) -> Result<PolyhedralCone, GeometryError> {
        let vecs = |v: Vec<Vec<f64>>| -> Result<Vec<DVector<f64>>, GeometryError> {
            v.into_iter()
                .map(|x| {
                    if x.len() == dim {
                        Ok(DVector::from_vec(x))
                    } else {
                        Err(GeometryError::DimensionMismatch { expected: dim, found: x.len() })
                    }
                })
                .collect()
        };
        match (self.halfspaces, self.rays) {
            (Some(h), rays) => {
                let rows = vecs(h)?;
                let g = if rows.is_empty() {
                    DMatrix::zeros(0, dim)
                } else {
                    DMatrix::from_rows(&rows.iter().map(|r| r.transpose()).collect::<Vec<_>>())
                };
                let mut cone = PolyhedralCone::new(g);
                if let Some(r) = rays {
                    cone.generators = Some(Generators {
                        rays: vecs(r)?,
                        lineality: vecs(self.lineality.unwrap_or_default())?,
                    });
                }
                Ok(cone)
            }
            (None, Some(r)) => {
                let mut dirs = vecs(r)?;
                for l in vecs(self.lineality.unwrap_or_default())? {
                    dirs.push(-&l);
                    dirs.push(l);
                }
                PolyhedralCone::from_rays(&dirs, dim)
            }
            (None, None) => Err(GeometryError::InvalidPartition(
                "cone needs halfspaces or rays".into(),
            )),
        }
    }
}

impl Serialize for PolyhedralCone {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RawCone {
            halfspaces: Some(crate::linalg::matrix_to_rows(&self.halfspaces)),
            rays: self.generators.as_ref().map(|g| to_vecs(&g.rays)),
            lineality: self
                .generators
                .as_ref()
                .filter(|g| !g.lineality.is_empty())
                .map(|g| to_vecs(&g.lineality)),
        }
        .serialize(s)
    }
}

impl Serialize for ConicPartition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("ConicPartition", 2)?;
        st.serialize_field("dim", &self.dim)?;
        st.serialize_field("cones", &self.cones)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for ConicPartition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let raw = RawPartition::deserialize(d)?;
        let dim = raw.dim;
        let cones = raw
            .cones
            .into_iter()
            .map(|c| c.into_cone(dim))
            .collect::<Result<Vec<_>, _>>()
            .map_err(D::Error::custom)?;
        ConicPartition::new(dim, cones).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    fn has_ray(g: &Generators, r: &[f64]) -> bool {
        let r = dv(r).normalize();
        g.rays.iter().any(|x| (x - &r).norm() < 1e-9)
    }

    #[test]
    fn orthant_generators() {
        let g = cone_generators(&PolyhedralCone::negative_orthant(3)).unwrap();
        assert_eq!(g.rays.len(), 3);
        assert!(g.lineality.is_empty());
        for k in 0..3 {
            let mut e = [0.0; 3];
            e[k] = -1.0;
            assert!(has_ray(&g, &e));
        }
    }

    #[test]
    fn collapsed_plane_gives_single_ray() {
        let h = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0]);
        let g = cone_generators(&PolyhedralCone::new(h)).unwrap();
        assert_eq!(g.rays.len(), 1);
        assert!(has_ray(&g, &[0.0, -1.0]));
        assert!(g.lineality.is_empty());
    }

    #[test]
    fn halfplane_has_lineality() {
        let h = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let g = cone_generators(&PolyhedralCone::new(h)).unwrap();
        assert_eq!(g.lineality.len(), 1);
        assert!(has_ray(&g, &[-1.0, 0.0]));
    }

    #[test]
    fn origin_only_cone() {
        let h = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, -1.0, 1.0, -1.0, -1.0]);
        let g = cone_generators(&PolyhedralCone::new(h)).unwrap();
        assert!(g.is_origin_only());
    }

    #[test]
    fn too_many_dimensions() {
        let c = PolyhedralCone::negative_orthant(7);
        assert_eq!(cone_generators(&c), Err(GeometryError::Unsupported(7)));
    }

    #[test]
    fn preimage_identity_and_swap() {
        let c = PolyhedralCone::negative_orthant(2);
        let same = preimage_cone(&c, &DMatrix::identity(2, 2)).unwrap();
        assert_eq!(same.halfspaces, c.halfspaces);
        let c = PolyhedralCone::new(DMatrix::from_row_slice(1, 2, &[1.0, 0.0]));
        let swap = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let p = preimage_cone(&c, &swap).unwrap();
        assert!(p.contains(&dv(&[5.0, -1.0]), 0.0));
        assert!(!p.contains(&dv(&[-1.0, 5.0]), 0.0));
        assert!(preimage_cone(&c, &DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn opposite_halfspaces_flagged() {
        let a = PolyhedralCone::new(DMatrix::from_row_slice(1, 2, &[1.0, 0.0]));
        let b = PolyhedralCone::new(DMatrix::from_row_slice(1, 2, &[-1.0, 0.0]));
        let x = intersect_cones(&a, &b).unwrap();
        assert!(x.empty_interior);
        assert!(!strict_interior_probe(&x.cone));
        let o = PolyhedralCone::negative_orthant(2);
        let y = intersect_cones(&o, &o).unwrap();
        assert!(!y.empty_interior);
        assert!(strict_interior_probe(&y.cone));
    }

    #[test]
    fn octahedron_fan() {
        let fan = face_fan(4, 3, false).unwrap();
        assert_eq!(fan.len(), 8);
        for c in &fan.cones {
            let g = c.generators.as_ref().unwrap();
            assert_eq!(g.rays.len(), 3);
            // Each cone is an orthant: rays are signed unit vectors on distinct axes.
            let mut axes: Vec<usize> = g.rays.iter().map(|r| r.iamax()).collect();
            axes.sort();
            assert_eq!(axes, vec![0, 1, 2]);
            for r in &g.rays {
                assert!((r.amax() - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(fan.adjacency.len(), 12);
        assert!(fan.check(1000, 1).is_empty());
    }

    #[test]
    fn fan_parameter_checks() {
        assert!(face_fan(2, 3, false).is_err());
        assert!(face_fan(4, 4, false).is_err());
        assert_eq!(sphere_points(8, 5).unwrap().len(), 26);
    }

    #[test]
    fn partition_roundtrip_through_json() {
        let fan = face_fan(4, 3, false).unwrap();
        let text = serde_json::to_string(&fan).unwrap();
        let back: ConicPartition = serde_json::from_str(&text).unwrap();
        assert_eq!(back.len(), 8);
        assert_eq!(back.adjacency.len(), 12);
        let rays_only = r#"{"dim":2,"cones":[{"rays":[[1,0],[0,1]]},{"rays":[[0,1],[-1,0]]},
            {"rays":[[-1,0],[0,-1]]},{"rays":[[0,-1],[1,0]]}]}"#;
        let quad: ConicPartition = serde_json::from_str(rays_only).unwrap();
        assert_eq!(quad.adjacency.len(), 4);
        assert!(quad.check(200, 3).is_empty());
    }

    #[test]
    fn overlapping_cones_rejected() {
        let a = PolyhedralCone::negative_orthant(2);
        let b = PolyhedralCone::new(DMatrix::from_row_slice(1, 2, &[1.0, 0.0]));
        assert!(matches!(
            ConicPartition::new(2, vec![a, b]),
            Err(GeometryError::InvalidPartition(_))
        ));
    }

    #[test]
    fn facet_rows_drop_redundant() {
        let h = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let c = PolyhedralCone::new(h);
        assert_eq!(c.facet_rows().unwrap(), vec![0, 1]);
    }
}
