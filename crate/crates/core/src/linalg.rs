//! Dense linear algebra helpers on top of `nalgebra`'s SVD.

use nalgebra::{DMatrix, DVector};

/// Singular values below this fraction of the largest one count as zero.
pub const RANK_CUTOFF: f64 = 1e-10;

fn threshold(singular_values: &DVector<f64>) -> f64 {
    RANK_CUTOFF * singular_values.max()
}

pub fn rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let cut = threshold(&sv);
    sv.iter().filter(|&&s| s > cut && s > 0.0).count()
}

/// Minimum-norm least-squares solution of `m x = rhs` via the pseudo-inverse,
/// followed by two steps of iterative refinement. Corrections stay in the
/// row space, so the result is still the minimum-norm solution.
pub fn min_norm_solve(m: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    let svd = m.clone().svd(true, true);
    let cut = threshold(&svd.singular_values);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let apply_pinv = |b: &DVector<f64>| {
        let mut x = DVector::zeros(m.ncols());
        for (i, &s) in svd.singular_values.iter().enumerate() {
            if s <= cut || s == 0.0 {
                continue;
            }
            let coeff = u.column(i).dot(b) / s;
            x += v_t.row(i).transpose() * coeff;
        }
        x
    };
    let mut x = apply_pinv(rhs);
    for _ in 0..2 {
        let r = rhs - m * &x;
        x += apply_pinv(&r);
    }
    x
}

/// Orthonormal basis of the null space of `m`.
pub fn null_space(m: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let cols = m.ncols();
    // Pad to at least square so the SVD returns a full right basis.
    let rows = m.nrows().max(cols);
    let mut padded = DMatrix::zeros(rows, cols);
    padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let svd = padded.svd(false, true);
    let cut = threshold(&svd.singular_values);
    let v_t = svd.v_t.expect("v_t requested");
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= cut || s == 0.0)
        .map(|(i, _)| v_t.row(i).transpose())
        .collect()
}

/// `‖v‖_∞`.
pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}
