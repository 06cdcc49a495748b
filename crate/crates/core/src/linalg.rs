//! Dense helpers over `nalgebra::DMatrix<f64>` shared by every module.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative symmetry tolerance for matrix inputs.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Max absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn is_symmetric(m: &DMatrix<f64>, rel_tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = 1.0 + max_abs(m);
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > rel_tol * scale {
                return false;
            }
        }
    }
    true
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted ascending.
///
/// Only the lower triangle is read, so slightly asymmetric round-off is harmless.
pub fn sym_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    let eig = symmetrize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(i).into_owned();
        // Deterministic sign: largest-magnitude entry positive.
        let (imax, _) = col
            .iter()
            .enumerate()
            .fold((0, 0.0), |(bi, bv), (j, x)| if x.abs() > bv { (j, x.abs()) } else { (bi, bv) });
        if col[imax] < 0.0 {
            col.neg_mut();
        }
        vectors.set_column(k, &col);
    }
    (values, vectors)
}

pub fn sym_eigenvalues(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows();
    if n == 0 {
        return DVector::zeros(0);
    }
    let mut v: Vec<f64> = symmetrize(m).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    DVector::from_vec(v)
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).iter().copied().fold(f64::INFINITY, f64::min)
}

/// Operator 2-norm.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    if m.is_square() && is_symmetric(m, 1e-14) {
        return sym_eigenvalues(m).iter().fold(0.0, |a, x| a.max(x.abs()));
    }
    m.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

/// Kronecker product: block (i, j) of the result is `a[(i, j)] * b`.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

pub fn block_diag(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(*b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Orthonormal basis (as columns) of the null space of `a`.
///
/// Singular values at or below `rel_cut * sigma_max` count as zero. A zero
/// matrix has the whole space as null space.
pub fn nullspace(a: &DMatrix<f64>, rel_cut: f64) -> DMatrix<f64> {
    nullspace_abs(a, rel_cut * spectral_norm(a))
}

/// Null space with an absolute singular-value cutoff.
pub fn nullspace_abs(a: &DMatrix<f64>, cut: f64) -> DMatrix<f64> {
    let ncols = a.ncols();
    if ncols == 0 {
        return DMatrix::zeros(0, 0);
    }
    if a.nrows() == 0 || max_abs(a) == 0.0 {
        return DMatrix::identity(ncols, ncols);
    }
    // Pad so V is always square.
    let rows = a.nrows().max(ncols);
    let mut padded = DMatrix::zeros(rows, ncols);
    padded.view_mut((0, 0), (a.nrows(), ncols)).copy_from(a);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut cols = Vec::new();
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s <= cut {
            cols.push(v_t.row(i).transpose());
        }
    }
    if cols.is_empty() {
        DMatrix::zeros(ncols, 0)
    } else {
        orthonormalize(&DMatrix::from_columns(&cols))
    }
}

/// Re-orthonormalize columns that are already nearly orthonormal.
fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(m.ncols());
    for j in 0..m.ncols() {
        let mut v = m.column(j).into_owned();
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&v);
                v.axpy(-c, q, 1.0);
            }
        }
        let nrm = v.norm();
        if nrm > 0.0 {
            basis.push(v / nrm);
        }
    }
    if basis.is_empty() {
        DMatrix::zeros(m.nrows(), 0)
    } else {
        DMatrix::from_columns(&basis)
    }
}

/// Incremental Gram-Schmidt: extend the orthonormal `basis` by `candidate`
/// if its residual exceeds `abs_cut`. Returns whether it was added.
pub fn gram_schmidt_push(basis: &mut Vec<DVector<f64>>, candidate: &DVector<f64>, abs_cut: f64) -> bool {
    let mut v = candidate.clone();
    for _ in 0..2 {
        for q in basis.iter() {
            let c = q.dot(&v);
            v.axpy(-c, q, 1.0);
        }
    }
    let nrm = v.norm();
    if nrm > abs_cut && nrm > 0.0 {
        basis.push(v / nrm);
        true
    } else {
        false
    }
}

/// Orthonormal basis of the column span of `a`, keeping singular directions
/// with `sigma > rel_cut * sigma_max`.
pub fn range_basis(a: &DMatrix<f64>, rel_cut: f64) -> DMatrix<f64> {
    let n = a.nrows();
    if a.ncols() == 0 || n == 0 {
        return DMatrix::zeros(n, 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if sigma_max == 0.0 {
        return DMatrix::zeros(n, 0);
    }
    let mut idx: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > rel_cut * sigma_max)
        .collect();
    idx.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let cols: Vec<DVector<f64>> = idx.iter().map(|&i| u.column(i).into_owned()).collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        orthonormalize(&DMatrix::from_columns(&cols))
    }
}

/// Square root of a symmetric positive semidefinite matrix; negative
/// round-off eigenvalues are clipped to zero.
pub fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen(m);
    let d = DMatrix::from_diagonal(&vals.map(|x| x.max(0.0).sqrt()));
    &vecs * d * vecs.transpose()
}

/// Euclidean projection of a vector onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - 1.0) / (i as f64 + 1.0);
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Euclidean projection onto {T symmetric, T >= 0, tr T = 1}.
pub fn project_spectraplex(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen(m);
    let proj = project_simplex(vals.as_slice());
    let d = DMatrix::from_diagonal(&DVector::from_vec(proj));
    symmetrize(&(&vecs * d * vecs.transpose()))
}

/// Frobenius inner product.
pub fn frob_dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub(crate) fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput("non-finite matrix entry".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_projection_sums_to_one() {
        let p = project_simplex(&[0.3, -2.0, 5.0, 0.1]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(p.iter().all(|x| *x >= 0.0));
        assert_eq!(p, vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn spectraplex_projection_of_state_is_identity() {
        let t = DMatrix::from_row_slice(2, 2, &[0.7, 0.1, 0.1, 0.3]);
        let p = project_spectraplex(&t);
        assert!((p - t).abs().max() < 1e-14);
    }

    #[test]
    fn nullspace_of_rank_one_row() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        let n = nullspace(&a, 1e-9);
        assert_eq!(n.ncols(), 2);
        assert!((&a * &n).abs().max() < 1e-14);
        let gram = n.transpose() * &n;
        assert!((gram - DMatrix::identity(2, 2)).abs().max() < 1e-12);
    }

    #[test]
    fn eigen_sorted_ascending() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, -1.0, 0.0]));
        let (vals, _) = sym_eigen(&m);
        assert_eq!(vals.as_slice(), &[-1.0, 0.0, 2.0]);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let r = psd_sqrt(&m);
        assert!((&r * &r - m).abs().max() < 1e-12);
    }
}
