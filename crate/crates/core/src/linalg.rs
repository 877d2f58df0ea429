//! Small dense helpers shared by the algebra, integration and geometry code.

use nalgebra::{DMatrix, DVector};

pub type Mat = DMatrix<f64>;

pub fn bracket(x: &Mat, y: &Mat) -> Mat {
    x * y - y * x
}

/// `-tr(XY)/2` without shape checks.
pub(crate) fn tr_form(x: &Mat, y: &Mat) -> f64 {
    let n = x.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += x[(i, j)] * y[(j, i)];
        }
    }
    -0.5 * acc
}

pub fn frob(x: &Mat) -> f64 {
    x.norm()
}

pub(crate) fn flatten(x: &Mat) -> DVector<f64> {
    DVector::from_column_slice(x.as_slice())
}

/// Orthonormal basis (Frobenius inner product) of the span of `items`, dropping
/// directions whose residual norm falls below `tol`.
pub(crate) fn orthonormalize(items: &[Mat], tol: f64) -> Vec<Mat> {
    let mut out: Vec<Mat> = Vec::new();
    for item in items {
        let mut v = item.clone();
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for q in &out {
                let c = v.dot(q);
                v -= q * c;
            }
        }
        let nrm = v.norm();
        if nrm > tol {
            out.push(v / nrm);
        }
    }
    out
}

/// Columns spanning the numerical null space of `a` (singular values at or below
/// `tol`), orthonormal.
pub(crate) fn null_space(a: &Mat, tol: f64) -> Mat {
    let cols = a.ncols();
    if cols == 0 {
        return Mat::zeros(0, 0);
    }
    let padded = if a.nrows() < cols {
        let mut p = Mat::zeros(cols, cols);
        p.view_mut((0, 0), (a.nrows(), cols)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= tol)
        .collect();
    let mut out = Mat::zeros(cols, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        out.set_column(c, &v_t.row(i).transpose());
    }
    out
}

pub(crate) fn singular_values(a: &Mat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

pub(crate) fn diag(entries: &[f64]) -> Mat {
    Mat::from_diagonal(&DVector::from_column_slice(entries))
}

/// `E_ij - E_ji`.
pub(crate) fn skew_unit(m: usize, i: usize, j: usize) -> Mat {
    let mut e = Mat::zeros(m, m);
    e[(i, j)] = 1.0;
    e[(j, i)] = -1.0;
    e
}
