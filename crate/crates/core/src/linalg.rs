//! Small dense linear-algebra helpers shared by the geometric modules.

use nalgebra::{DMatrix, DVector};

/// Singular values of `m` together with a full left basis, sorted by
/// decreasing singular value. The left basis has `m.nrows()` columns; the
/// trailing ones span the orthogonal complement of the column space.
pub fn left_singular_basis(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    // Pad with zero columns so the thin SVD returns a square U.
    let cols = m.ncols().max(n);
    let mut padded = DMatrix::zeros(n, cols);
    padded.view_mut((0, 0), (n, m.ncols())).copy_from(m);
    let svd = padded.svd(true, false);
    let u = svd.u.expect("left vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv: Vec<f64> = order.iter().map(|&k| svd.singular_values[k]).collect();
    let mut basis = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate().take(n) {
        basis.set_column(dst, &u.column(src));
    }
    (sv, basis)
}

/// Numerical rank with a tolerance relative to the largest singular value.
pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

/// Orthonormal basis (as columns) of `{x : m x = 0}`.
pub fn null_space(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = m.ncols();
    if m.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    // Null space of m is the complement of the column space of mᵀ.
    let (sv, basis) = left_singular_basis(&m.transpose());
    let max = sv.first().copied().unwrap_or(0.0);
    let r = if max == 0.0 { 0 } else { sv.iter().filter(|&&s| s > rel_tol * max).count() };
    basis.columns(r, n - r).into_owned()
}

/// Orthonormal basis of the span of `vectors` (each of length `dim`).
pub fn span_basis(vectors: &[DVector<f64>], dim: usize, rel_tol: f64) -> Vec<DVector<f64>> {
    if vectors.is_empty() {
        return Vec::new();
    }
    let m = DMatrix::from_columns(vectors);
    let (sv, basis) = left_singular_basis(&m);
    let max = sv.first().copied().unwrap_or(0.0);
    if max == 0.0 {
        return Vec::new();
    }
    let r = sv.iter().filter(|&&s| s > rel_tol * max).count();
    (0..r.min(dim)).map(|k| basis.column(k).into_owned()).collect()
}

/// Gram-Schmidt over the images of the standard basis under `projector`,
/// giving a deterministic orthonormal basis of its range.
pub fn canonical_range_basis(projector: &DMatrix<f64>, count: usize) -> Vec<DVector<f64>> {
    let n = projector.nrows();
    let mut chosen: Vec<DVector<f64>> = Vec::with_capacity(count);
    let mut candidates: Vec<(f64, DVector<f64>)> = Vec::new();
    for i in 0..n {
        let v = projector.column(i).into_owned();
        candidates.push((v.norm(), v));
    }
    for (_, mut v) in candidates {
        if chosen.len() == count {
            break;
        }
        for _ in 0..2 {
            for c in &chosen {
                let d = c.dot(&v);
                v -= c * d;
            }
        }
        let nrm = v.norm();
        if nrm > 1e-8 {
            chosen.push(v / nrm);
        }
    }
    chosen
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(r, c, |i, j| rows[i][j])
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Serde adapter: a matrix as row-major nested arrays.
pub mod rows_serde {
    use nalgebra::DMatrix;
    use serde::{de::Error, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        super::matrix_to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        if let Some(first) = rows.first() {
            if rows.iter().any(|r| r.len() != first.len()) {
                return Err(D::Error::custom("ragged matrix rows"));
            }
        }
        Ok(super::matrix_from_rows(&rows))
    }
}

/// Serde adapter for a list of matrices.
pub mod rows_vec_serde {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(ms: &[DMatrix<f64>], s: S) -> Result<S::Ok, S::Error> {
        ms.iter().map(super::matrix_to_rows).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<DMatrix<f64>>, D::Error> {
        let ms: Vec<Vec<Vec<f64>>> = Vec::deserialize(d)?;
        Ok(ms.iter().map(|r| super::matrix_from_rows(r)).collect())
    }
}

/// Serde adapter for a list of vectors.
pub mod vectors_serde {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(vs: &[DVector<f64>], s: S) -> Result<S::Ok, S::Error> {
        vs.iter().map(|v| v.iter().copied().collect::<Vec<f64>>()).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<DVector<f64>>, D::Error> {
        let vs: Vec<Vec<f64>> = Vec::deserialize(d)?;
        Ok(vs.into_iter().map(DVector::from_vec).collect())
    }
}
