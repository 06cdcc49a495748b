//! Boundary pairs `(X, v)` with `X` on the boundary of `D_p` and
//! `p(X) v = 0`, and their compression to small levels.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluate::{eval_poly, first_singular_scale, MatrixTuple, RayOptions, RayPolynomial, WordValues};
use crate::linalg::{self, gram_schmidt_push, spectral_norm};
use crate::ncpoly::{words_up_to, NcPolynomial};
use crate::sampling::RAY_T_MAX;

/// Relative residual allowed for `||p(X) v||`.
pub const BOUNDARY_RESIDUAL_TOL: f64 = 1e-7;

/// Relative singular-value cutoff for span computations.
pub const RANK_CUT: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "crate::io::BoundaryPairJson", into = "crate::io::BoundaryPairJson")]
pub struct BoundaryPair {
    pub x: MatrixTuple,
    /// Unit vector of length `delta * n`, block `alpha` at `alpha*n..(alpha+1)*n`.
    pub v: DVector<f64>,
    pub delta: usize,
    pub residual: f64,
}

impl BoundaryPair {
    /// Normalizes `v` and records `||p(X) v||`.
    pub fn new(p: &NcPolynomial, x: MatrixTuple, v: DVector<f64>) -> Result<Self> {
        let n = x.level();
        if v.len() != p.rows() * n {
            return Err(Error::ShapeMismatch(format!(
                "vector length {} does not match delta * n = {}",
                v.len(),
                p.rows() * n
            )));
        }
        let nrm = v.norm();
        if nrm == 0.0 || !nrm.is_finite() {
            return Err(Error::InvalidInput("boundary vector must be non-zero".into()));
        }
        let v = v / nrm;
        let residual = (eval_poly(p, &x)? * &v).norm();
        Ok(BoundaryPair {
            x,
            v,
            delta: p.rows(),
            residual,
        })
    }

    pub fn level(&self) -> usize {
        self.x.level()
    }

    pub fn g(&self) -> usize {
        self.x.g()
    }

    /// Block `v_alpha` of `v`.
    pub fn block(&self, alpha: usize) -> DVector<f64> {
        let n = self.level();
        self.v.rows(alpha * n, n).into_owned()
    }

    /// Checks `||p(X) v|| <= 1e-7 (1 + ||p(X)||)`, returning the residual.
    pub fn check(&self, p: &NcPolynomial) -> Result<f64> {
        let px = eval_poly(p, &self.x)?;
        let residual = (&px * &self.v).norm();
        let allowed = BOUNDARY_RESIDUAL_TOL * (1.0 + spectral_norm(&px));
        if residual > allowed || !residual.is_finite() {
            return Err(Error::NotOnBoundary { residual, allowed });
        }
        Ok(residual)
    }
}

/// `nu = delta sum_{j<=d} g^j`, `nu_breve = delta sum_{j<=floor(d/2)} g^j`
/// and `mu_bound = nu (nu + 1) / 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeConstants {
    pub nu: usize,
    pub nu_breve: usize,
    pub mu_bound: usize,
}

impl SizeConstants {
    pub fn new(g: usize, d: usize, delta: usize) -> Self {
        let nu = delta * crate::ncpoly::word_count(g, d);
        SizeConstants {
            nu,
            nu_breve: delta * crate::ncpoly::word_count(g, d / 2),
            mu_bound: nu * (nu + 1) / 2,
        }
    }

    pub fn of(p: &NcPolynomial) -> Self {
        Self::new(p.g(), p.degree().max(0) as usize, p.rows())
    }
}

/// One boundary pair per near-kernel vector of `p(t* D)`, where `t*` is the
/// first singular scale along the ray through `direction`.
pub fn find_boundary_pairs(p: &NcPolynomial, direction: &MatrixTuple) -> Result<Vec<BoundaryPair>> {
    find_boundary_pairs_with(p, direction, RayOptions::default(), RAY_T_MAX)
}

pub fn find_boundary_pairs_with(
    p: &NcPolynomial,
    direction: &MatrixTuple,
    opts: RayOptions,
    t_max: f64,
) -> Result<Vec<BoundaryPair>> {
    if !p.is_symmetric(1e-12) {
        return Err(Error::PolynomialNotSymmetric);
    }
    if direction.frobenius_norm() == 0.0 {
        return Err(Error::InvalidInput("direction must be non-zero".into()));
    }
    let ray = RayPolynomial::new(p, direction)?;
    let t = first_singular_scale(&ray, opts, t_max)?.ok_or(Error::RayNeverExits { t_max })?;
    let x = direction.scale(t);
    let px = eval_poly(p, &x)?;
    let (vals, vecs) = linalg::sym_eigen(&px);
    let scale = 1.0 + vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let allowed = BOUNDARY_RESIDUAL_TOL * scale;
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].abs().total_cmp(&vals[b].abs()));
    let mut pairs = Vec::new();
    for (k, &i) in order.iter().enumerate() {
        if k > 0 && vals[i].abs() > allowed {
            break;
        }
        let v = vecs.column(i).into_owned();
        let residual = (&px * &v).norm();
        if residual > allowed {
            return Err(Error::NotOnBoundary { residual, allowed });
        }
        pairs.push(BoundaryPair {
            x: x.clone(),
            v,
            delta: p.rows(),
            residual,
        });
    }
    Ok(pairs)
}

/// The pair for the eigenvalue branch closest to zero.
pub fn find_boundary_pair(p: &NcPolynomial, direction: &MatrixTuple) -> Result<BoundaryPair> {
    Ok(find_boundary_pairs(p, direction)?.swap_remove(0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CompressionMode {
    /// Span of `w(X) v_alpha` for `|w| <= d`.
    FullDegree,
    /// Span of `w(X) v_alpha` for `|w| <= floor(d/2)`; needs `p(0) = I`.
    HalfDegree,
}

/// Orthonormal basis (columns) of `span{w(X) v_alpha : |w| <= k}`, with the
/// `v_alpha` entering first.
pub fn krylov_basis(pair: &BoundaryPair, k: usize) -> DMatrix<f64> {
    let n = pair.level();
    let blocks: Vec<DVector<f64>> = (0..pair.delta).map(|a| pair.block(a)).collect();
    let mut words = WordValues::new(&pair.x);
    let mut cands = Vec::new();
    for w in words_up_to(pair.g(), k) {
        let wx = words.get(&w).clone();
        for b in &blocks {
            cands.push(&wx * b);
        }
    }
    let scale = cands.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return DMatrix::zeros(n, 0);
    }
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for b in &blocks {
        gram_schmidt_push(&mut basis, b, RANK_CUT * scale);
    }
    // Remaining candidates: project out the current basis, keep the
    // numerically significant range of what is left.
    let mut rest = DMatrix::from_columns(&cands);
    for q in &basis {
        let coeffs = rest.transpose() * q;
        rest -= q * coeffs.transpose();
    }
    let extra = if linalg::max_abs(&rest) > 0.0 {
        let svals = rest.clone().singular_values();
        let smax = svals.iter().copied().fold(0.0, f64::max);
        if smax > RANK_CUT * scale {
            linalg::range_basis(&rest, RANK_CUT * scale / smax)
        } else {
            DMatrix::zeros(n, 0)
        }
    } else {
        DMatrix::zeros(n, 0)
    };
    for j in 0..extra.ncols() {
        gram_schmidt_push(&mut basis, &extra.column(j).into_owned(), 1e-6);
    }
    DMatrix::from_columns(&basis)
}

/// Compresses `(X, v)` to `(Q^T X Q, (I ⊗ Q^T) v)` where `Q` spans the
/// degree-bounded Krylov-type space generated by the blocks of `v`.
pub fn compress_pair(p: &NcPolynomial, pair: &BoundaryPair, mode: CompressionMode) -> Result<BoundaryPair> {
    Ok(compress_pair_with_basis(p, pair, mode)?.0)
}

/// As [`compress_pair`], also returning the isometry `Q`.
pub fn compress_pair_with_basis(
    p: &NcPolynomial,
    pair: &BoundaryPair,
    mode: CompressionMode,
) -> Result<(BoundaryPair, DMatrix<f64>)> {
    if p.g() != pair.g() {
        return Err(Error::VariableCount {
            expected: p.g(),
            found: pair.g(),
        });
    }
    if p.rows() != pair.delta {
        return Err(Error::ShapeMismatch("pair and polynomial differ in delta".into()));
    }
    pair.check(p)?;
    let d = p.degree().max(0) as usize;
    let consts = SizeConstants::of(p);
    let (k, bound) = match mode {
        CompressionMode::FullDegree => (d, consts.nu),
        CompressionMode::HalfDegree => {
            let c0 = p.constant_term();
            let id = DMatrix::identity(p.rows(), p.cols());
            if !c0.is_square() || (c0 - id).abs().max() > 1e-10 {
                return Err(Error::NotIdentityAtZero);
            }
            (d / 2, consts.nu_breve)
        }
    };
    let q = krylov_basis(pair, k);
    assert!(q.ncols() <= bound, "compressed dimension {} exceeds bound {}", q.ncols(), bound);
    let x = pair.x.congruence(&q)?;
    let m = q.ncols();
    let mut v = DVector::zeros(pair.delta * m);
    for a in 0..pair.delta {
        v.rows_mut(a * m, m).copy_from(&(q.transpose() * pair.block(a)));
    }
    let nrm = v.norm();
    if nrm == 0.0 {
        return Err(Error::Numerical("compressed vector vanished".into()));
    }
    v /= nrm;
    let px = eval_poly(p, &x)?;
    let residual = (&px * &v).norm();
    if residual > BOUNDARY_RESIDUAL_TOL * (1.0 + spectral_norm(&px)) {
        return Err(Error::CompressionResidual { residual });
    }
    Ok((
        BoundaryPair {
            x,
            v,
            delta: pair.delta,
            residual,
        },
        q,
    ))
}

/// `(⊕ X_i, ⊕ v_i)` with the blocks of `v` stacked per coefficient index and
/// renormalized.
pub fn direct_sum_pairs(pairs: &[BoundaryPair]) -> Result<BoundaryPair> {
    let first = pairs.first().ok_or(Error::Empty("boundary pairs"))?;
    let delta = first.delta;
    let mut x = first.x.clone();
    for p in &pairs[1..] {
        if p.delta != delta {
            return Err(Error::ShapeMismatch("pairs differ in delta".into()));
        }
        x = x.direct_sum(&p.x)?;
    }
    let n = x.level();
    let mut v = DVector::zeros(delta * n);
    for a in 0..delta {
        let mut off = a * n;
        for p in pairs {
            let b = p.block(a);
            v.rows_mut(off, b.len()).copy_from(&b);
            off += b.len();
        }
    }
    let nrm = v.norm();
    let residual = pairs.iter().map(|p| p.residual * p.residual).sum::<f64>().sqrt() / nrm;
    Ok(BoundaryPair {
        x,
        v: v / nrm,
        delta,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluate::{ray_membership, MembershipStatus};

    fn interval() -> NcPolynomial {
        NcPolynomial::scalar(1, &[(1.0, &[]), (-1.0, &[0, 0])]).unwrap()
    }

    fn tv() -> NcPolynomial {
        NcPolynomial::scalar(2, &[(1.0, &[]), (-1.0, &[0, 0, 0, 0]), (-1.0, &[1, 1, 1, 1])]).unwrap()
    }

    fn ball() -> NcPolynomial {
        NcPolynomial::scalar(2, &[(1.0, &[]), (-1.0, &[0, 0]), (-1.0, &[1, 1])]).unwrap()
    }

    #[test]
    fn interval_pair() {
        let pr = find_boundary_pair(&interval(), &MatrixTuple::scalars(&[1.0])).unwrap();
        assert!((pr.x.get(0)[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((pr.v[0].abs() - 1.0).abs() < 1e-15);
        assert!(pr.residual < 1e-12);
    }

    #[test]
    fn tv_axis_pair() {
        let pr = find_boundary_pair(&tv(), &MatrixTuple::scalars(&[1.0, 0.0])).unwrap();
        assert!((pr.x.get(0)[(0, 0)] - 1.0).abs() < 1e-12);
        assert_eq!(pr.x.get(1)[(0, 0)], 0.0);
    }

    #[test]
    fn diagonal_direction_and_compression() {
        let d = MatrixTuple::new(vec![DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.5]))]).unwrap();
        let pr = find_boundary_pair(&interval(), &d).unwrap();
        assert!((pr.x.get(0)[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((pr.v[0].abs() - 1.0).abs() < 1e-12);
        let c = compress_pair(&interval(), &pr, CompressionMode::FullDegree).unwrap();
        assert_eq!(c.level(), 1);
        assert!((c.x.get(0)[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn size_constants() {
        let c = SizeConstants::new(2, 2, 1);
        assert_eq!((c.nu, c.nu_breve, c.mu_bound), (7, 3, 28));
        let c = SizeConstants::new(2, 3, 2);
        assert_eq!((c.nu, c.nu_breve), (30, 6));
    }

    #[test]
    fn ball_half_degree_compression() {
        let mut rng = crate::sampling::rng(5, 0);
        let p = ball();
        let d = crate::sampling::random_direction(&mut rng, 2, 5);
        let pr = find_boundary_pair(&p, &d).unwrap();
        let c = compress_pair(&p, &pr, CompressionMode::HalfDegree).unwrap();
        assert!(c.level() <= 3);
        assert_eq!(ray_membership(&p, &c.x, RayOptions::default()).unwrap().status, MembershipStatus::Boundary);
    }

    #[test]
    fn direct_sum_examples() {
        let pr = find_boundary_pair(&interval(), &MatrixTuple::scalars(&[1.0])).unwrap();
        let s = direct_sum_pairs(&[pr.clone(), pr.clone()]).unwrap();
        assert_eq!(s.level(), 2);
        assert!((s.v[0] - s.v[1]).abs() < 1e-15);
        assert!((s.v[0].abs() - 0.5f64.sqrt()).abs() < 1e-15);
        let a = find_boundary_pair(&tv(), &MatrixTuple::scalars(&[1.0, 0.0])).unwrap();
        let b = find_boundary_pair(&tv(), &MatrixTuple::scalars(&[0.0, 1.0])).unwrap();
        let s = direct_sum_pairs(&[a, b]).unwrap();
        assert!(s.check(&tv()).unwrap() < 1e-10);
        assert!(matches!(direct_sum_pairs(&[]), Err(Error::Empty(_))));
    }
}
