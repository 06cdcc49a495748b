//! Monic linear pencils `L = I + sum_j A_j x_j`, their positivity sets
//! `D_L = {X : L(X) > 0}`, and the Schur-complement construction of an LMI
//! for scalar quadratics.
//!
//! Pencils are stored with the `+` sign. A pencil written `I - sum A_j x_j`
//! is the same object with every `A_j` negated.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluate::{ray_membership, MatrixTuple, MembershipStatus, RayOptions};
use crate::linalg::{self, is_symmetric, kron, spectral_norm, SYMMETRY_TOL};
use crate::ncpoly::{NcPolynomial, Word};
use crate::sampling::{self, Region};

/// Relative eigenvalue margin for `L(X) > 0`.
pub const PENCIL_PD_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "crate::io::PencilJson", into = "crate::io::PencilJson")]
pub struct MonicPencil {
    g: usize,
    size: usize,
    coeffs: Vec<DMatrix<f64>>,
}

impl MonicPencil {
    pub fn new(coeffs: Vec<DMatrix<f64>>) -> Result<Self> {
        let size = coeffs.first().map(|a| a.nrows()).ok_or(Error::Empty("pencil coefficients"))?;
        for a in &coeffs {
            if a.nrows() != size || a.ncols() != size {
                return Err(Error::ShapeMismatch(format!("pencil coefficients must be {size}x{size}")));
            }
            linalg::check_finite(a)?;
            if !is_symmetric(a, SYMMETRY_TOL) {
                return Err(Error::NotSymmetric);
            }
        }
        Ok(MonicPencil {
            g: coeffs.len(),
            size,
            coeffs: coeffs.iter().map(linalg::symmetrize).collect(),
        })
    }

    /// The size-zero pencil, neutral for direct sums.
    pub fn trivial(g: usize) -> Self {
        MonicPencil {
            g,
            size: 0,
            coeffs: vec![DMatrix::zeros(0, 0); g],
        }
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn coeffs(&self) -> &[DMatrix<f64>] {
        &self.coeffs
    }

    /// `I - sum A_j x_j` as a `+`-convention pencil.
    pub fn negated(&self) -> Self {
        MonicPencil {
            g: self.g,
            size: self.size,
            coeffs: self.coeffs.iter().map(|a| -a).collect(),
        }
    }

    /// `sum_j A_j ⊗ X_j`.
    pub fn linear_part(&self, x: &MatrixTuple) -> Result<DMatrix<f64>> {
        if x.g() != self.g {
            return Err(Error::VariableCount {
                expected: self.g,
                found: x.g(),
            });
        }
        let n = x.level();
        let mut out = DMatrix::zeros(self.size * n, self.size * n);
        for (a, xj) in self.coeffs.iter().zip(x.matrices()) {
            out += kron(a, xj);
        }
        Ok(out)
    }

    pub fn eval(&self, x: &MatrixTuple) -> Result<DMatrix<f64>> {
        let mut out = self.linear_part(x)?;
        for i in 0..out.nrows() {
            out[(i, i)] += 1.0;
        }
        Ok(out)
    }

    /// First `t > 0` with `L(tX)` singular: `-1 / lambda_min(sum A_j ⊗ X_j)`.
    pub fn exit_scale(&self, x: &MatrixTuple) -> Result<Option<f64>> {
        let m = self.linear_part(x)?;
        if m.nrows() == 0 {
            return Ok(None);
        }
        let lmin = linalg::min_eigenvalue(&m);
        Ok(if lmin < 0.0 { Some(-1.0 / lmin) } else { None })
    }

    /// Smallest eigenvalue of `L(X)`.
    pub fn min_eigenvalue(&self, x: &MatrixTuple) -> Result<f64> {
        let l = self.eval(x)?;
        Ok(if l.nrows() == 0 {
            f64::INFINITY
        } else {
            linalg::min_eigenvalue(&l)
        })
    }

    /// The `size x size` polynomial `I + sum A_j x_j`.
    pub fn to_polynomial(&self) -> NcPolynomial {
        let terms = std::iter::once((Word::empty(), DMatrix::identity(self.size, self.size)))
            .chain(self.coeffs.iter().enumerate().map(|(j, a)| (Word::letter(j), a.clone())));
        NcPolynomial::from_terms(self.g, self.size, self.size, terms).expect("pencil terms are well-formed")
    }

    /// Reads a degree-one polynomial with constant term `I`.
    pub fn from_polynomial(p: &NcPolynomial) -> Result<Self> {
        if p.degree() > 1 {
            return Err(Error::InvalidInput("pencil polynomial must have degree at most 1".into()));
        }
        if p.rows() != p.cols() {
            return Err(Error::ShapeMismatch("pencil polynomial must be square".into()));
        }
        let c0 = p.constant_term();
        if (c0 - DMatrix::identity(p.rows(), p.rows())).abs().max() > 0.0 {
            return Err(Error::NotMonicConstant);
        }
        let coeffs = (0..p.g())
            .map(|j| {
                p.coefficient(&Word::letter(j))
                    .cloned()
                    .unwrap_or_else(|| DMatrix::zeros(p.rows(), p.rows()))
            })
            .collect();
        if p.g() == 0 {
            return Ok(MonicPencil::trivial(0));
        }
        MonicPencil::new(coeffs)
    }

    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        pencil_direct_sum(self, other)
    }

    /// Largest spectral norm over the coefficients.
    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(spectral_norm).fold(0.0, f64::max)
    }
}

/// `L(X) > 0` with relative margin `1e-9 (1 + ||L(X)||)`.
pub fn pencil_membership(l: &MonicPencil, x: &MatrixTuple) -> Result<bool> {
    let m = l.eval(x)?;
    if m.nrows() == 0 {
        return Ok(true);
    }
    let vals = linalg::sym_eigenvalues(&m);
    let nrm = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Ok(vals[0] > PENCIL_PD_TOL * (1.0 + nrm))
}

pub fn pencil_direct_sum(l: &MonicPencil, m: &MonicPencil) -> Result<MonicPencil> {
    if l.g != m.g {
        return Err(Error::VariableCount {
            expected: l.g,
            found: m.g,
        });
    }
    Ok(MonicPencil {
        g: l.g,
        size: l.size + m.size,
        coeffs: l
            .coeffs
            .iter()
            .zip(&m.coeffs)
            .map(|(a, b)| linalg::block_diag(&[a, b]))
            .collect(),
    })
}

/// `p = 1 + ell(x) - <Lambda x, x>` with `Lambda = sum_k u_k u_k^T`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuadraticDecomposition {
    pub ell: Vec<f64>,
    #[serde(with = "crate::io::serde_dense::matrix")]
    pub lambda: DMatrix<f64>,
    pub m: usize,
    #[serde(with = "crate::io::serde_dense::vectors")]
    pub u: Vec<DVector<f64>>,
    /// Largest coefficient error of `L_0 - L̂^T L̂ - p`.
    pub schur_residual: f64,
}

/// Exact monic LMI for a symmetric scalar quadratic with `p(0) = 1`:
/// the Schur complement of the identity block of
/// `[[I_m, L̂], [L̂^T, 1 + ell(x)]]` is `p`.
pub fn quadratic_to_lmi(p: &NcPolynomial) -> Result<(MonicPencil, QuadraticDecomposition)> {
    if p.rows() != 1 || p.cols() != 1 {
        return Err(Error::ShapeMismatch("quadratic_to_lmi needs a scalar polynomial".into()));
    }
    if p.degree() > 2 {
        return Err(Error::DegreeTooHigh(p.degree()));
    }
    if !p.is_symmetric(1e-12) {
        return Err(Error::PolynomialNotSymmetric);
    }
    if p.constant_term()[(0, 0)] != 1.0 {
        return Err(Error::NotMonicConstant);
    }
    let g = p.g();
    let coef = |w: &[usize]| p.coefficient(&Word::new(w.to_vec())).map(|c| c[(0, 0)]).unwrap_or(0.0);
    let ell: Vec<f64> = (0..g).map(|j| coef(&[j])).collect();
    let lambda = DMatrix::from_fn(g, g, |i, j| -(coef(&[i, j]) + coef(&[j, i])) / 2.0);
    let (vals, vecs) = linalg::sym_eigen(&lambda);
    let lnorm = spectral_norm(&lambda);
    if g > 0 && vals[0] < -1e-9 * (1.0 + lnorm) {
        let mut e: Vec<f64> = vecs.column(0).iter().copied().collect();
        let ell_e: f64 = e.iter().zip(&ell).map(|(a, b)| a * b).sum();
        if ell_e < 0.0 {
            e.iter_mut().for_each(|x| *x = -*x);
        }
        return Err(Error::NotPsd {
            eigenvalue: vals[0],
            direction: e,
        });
    }
    let lmax = vals.iter().copied().fold(0.0, f64::max);
    let u: Vec<DVector<f64>> = (0..g)
        .rev()
        .filter(|&k| vals[k] > 1e-9 * lmax && lmax > 0.0)
        .map(|k| vecs.column(k) * vals[k].sqrt())
        .collect();
    let m = u.len();
    let size = m + 1;
    let coeffs: Vec<DMatrix<f64>> = (0..g)
        .map(|j| {
            let mut a = DMatrix::zeros(size, size);
            for (k, uk) in u.iter().enumerate() {
                a[(k, m)] = uk[j];
                a[(m, k)] = uk[j];
            }
            a[(m, m)] = ell[j];
            a
        })
        .collect();
    let pencil = if g == 0 {
        MonicPencil {
            g: 0,
            size: 1,
            coeffs: Vec::new(),
        }
    } else {
        MonicPencil::new(coeffs)?
    };

    // L_0 - L̂^T L̂ = 1 + ell(x) - sum_k (sum_i u_ki x_i)(sum_j u_kj x_j)
    let mut terms = vec![(Vec::new(), 1.0)];
    terms.extend(ell.iter().enumerate().map(|(j, c)| (vec![j], *c)));
    for uk in &u {
        for i in 0..g {
            for j in 0..g {
                terms.push((vec![i, j], -uk[i] * uk[j]));
            }
        }
    }
    let borrowed: Vec<(f64, &[usize])> = terms.iter().map(|(w, c)| (*c, w.as_slice())).collect();
    let schur = NcPolynomial::scalar(g, &borrowed)?;
    let diff = schur.sub(p)?;
    let schur_residual = diff.max_coefficient();
    if schur_residual > 1e-9 * (1.0 + lnorm) {
        return Err(Error::InvalidInput(format!(
            "Schur identity residual {schur_residual:e} exceeds tolerance"
        )));
    }
    Ok((
        pencil,
        QuadraticDecomposition {
            ell,
            lambda,
            m,
            u,
            schur_residual,
        },
    ))
}

/// Relative boundary band excluded from sampled comparisons.
pub const AGREEMENT_BAND: f64 = 1e-4;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelAgreement {
    pub level: usize,
    pub samples: usize,
    pub agreements: usize,
    pub disagreements: usize,
    pub inconclusive: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Disagreement {
    pub level: usize,
    pub tuple: MatrixTuple,
    pub in_p: bool,
    pub in_pencil: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AgreementReport {
    pub seed: u64,
    pub per_level: Vec<LevelAgreement>,
    pub disagreements: usize,
    /// The first few offending tuples.
    pub witnesses: Vec<Disagreement>,
}

const MAX_WITNESSES: usize = 5;

/// Compares `ray_membership(p, .) = Inside` with `pencil_membership(L, .)` on
/// Gaussian directions scaled across `(0, 2 t*)`, where `t*` is the exit
/// scale of `D_p` along the direction. Samples within `1e-4` relative of `t*`
/// are counted as inconclusive.
pub fn sets_agree_sampled(
    p: &NcPolynomial,
    l: &MonicPencil,
    levels: &[usize],
    samples: usize,
    seed: u64,
) -> Result<AgreementReport> {
    if p.g() != l.g() {
        return Err(Error::VariableCount {
            expected: p.g(),
            found: l.g(),
        });
    }
    let mut report = AgreementReport {
        seed,
        per_level: Vec::new(),
        disagreements: 0,
        witnesses: Vec::new(),
    };
    for &n in levels {
        let mut rng = sampling::rng(seed, n as u64);
        let mut lvl = LevelAgreement {
            level: n,
            samples,
            agreements: 0,
            disagreements: 0,
            inconclusive: 0,
        };
        for _ in 0..samples {
            let d = sampling::random_direction(&mut rng, p.g(), n);
            let tp = p.exit_scale(&d)?;
            let t_ref = match tp {
                Some(t) => t,
                None => l.exit_scale(&d)?.unwrap_or(1.0),
            };
            let u: f64 = rand::Rng::gen_range(&mut rng, 0.0..2.0);
            let s = u * t_ref;
            if let Some(t) = tp {
                if (s - t).abs() <= AGREEMENT_BAND * t {
                    lvl.inconclusive += 1;
                    continue;
                }
            }
            let x = d.scale(s);
            let in_p = ray_membership(p, &x, RayOptions::default())?.status == MembershipStatus::Inside;
            let in_l = pencil_membership(l, &x)?;
            if in_p == in_l {
                lvl.agreements += 1;
            } else {
                lvl.disagreements += 1;
                if report.witnesses.len() < MAX_WITNESSES {
                    report.witnesses.push(Disagreement {
                        level: n,
                        tuple: x,
                        in_p,
                        in_pencil: in_l,
                    });
                }
            }
        }
        report.disagreements += lvl.disagreements;
        report.per_level.push(lvl);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, rows, data)
    }

    fn scalar_pencil(a: f64) -> MonicPencil {
        MonicPencil::new(vec![m(1, &[a])]).unwrap()
    }

    #[test]
    fn membership_examples() {
        let l = scalar_pencil(1.0);
        assert!(pencil_membership(&l, &MatrixTuple::scalars(&[0.0])).unwrap());
        assert!(!pencil_membership(&l, &MatrixTuple::scalars(&[-1.0])).unwrap());
        let l0 = MonicPencil::new(vec![
            m(3, &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]),
            m(3, &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0]),
        ])
        .unwrap();
        assert!(pencil_membership(&l0, &MatrixTuple::scalars(&[0.5, 0.5])).unwrap());
        assert_eq!(l0.eval(&MatrixTuple::scalars(&[0.0, 0.0])).unwrap(), DMatrix::identity(3, 3));
    }

    #[test]
    fn one_minus_x_vanishes_at_one() {
        let l = scalar_pencil(-1.0);
        assert_eq!(l.eval(&MatrixTuple::scalars(&[1.0])).unwrap(), DMatrix::zeros(1, 1));
    }

    #[test]
    fn direct_sum_interval() {
        let l = scalar_pencil(1.0).direct_sum(&scalar_pencil(-1.0)).unwrap();
        assert!(pencil_membership(&l, &MatrixTuple::scalars(&[0.9])).unwrap());
        assert!(!pencil_membership(&l, &MatrixTuple::scalars(&[1.1])).unwrap());
        assert!(!pencil_membership(&l, &MatrixTuple::scalars(&[-1.1])).unwrap());
        let t = MonicPencil::trivial(1);
        assert_eq!(scalar_pencil(2.0).direct_sum(&t).unwrap(), scalar_pencil(2.0));
    }

    #[test]
    fn ball_lmi() {
        let p = NcPolynomial::scalar(3, &[(1.0, &[]), (-1.0, &[0, 0]), (-1.0, &[1, 1]), (-1.0, &[2, 2])]).unwrap();
        let (l, dec) = quadratic_to_lmi(&p).unwrap();
        assert_eq!(dec.m, 3);
        assert_eq!(l.size(), 4);
        assert!(dec.schur_residual < 1e-15);
        assert_eq!(dec.lambda, DMatrix::identity(3, 3));
    }

    #[test]
    fn linear_quadratic_is_one_by_one() {
        let p = NcPolynomial::scalar(1, &[(1.0, &[]), (1.0, &[0])]).unwrap();
        let (l, dec) = quadratic_to_lmi(&p).unwrap();
        assert_eq!(dec.m, 0);
        assert_eq!(l, scalar_pencil(1.0));
    }

    #[test]
    fn shifted_disc() {
        let p = NcPolynomial::scalar(2, &[(1.0, &[]), (1.0, &[0]), (-1.0, &[0, 0]), (-1.0, &[1, 1])]).unwrap();
        let (l, dec) = quadratic_to_lmi(&p).unwrap();
        assert_eq!(dec.ell, vec![1.0, 0.0]);
        assert_eq!(dec.m, 2);
        assert_eq!(l.coeffs()[0][(2, 2)], 1.0);
    }

    #[test]
    fn quadratic_errors() {
        let cubic = NcPolynomial::scalar(1, &[(1.0, &[]), (1.0, &[0, 0, 0])]).unwrap();
        assert!(matches!(quadratic_to_lmi(&cubic), Err(Error::DegreeTooHigh(3))));
        let c2 = NcPolynomial::scalar(1, &[(2.0, &[]), (-1.0, &[0, 0])]).unwrap();
        assert!(matches!(quadratic_to_lmi(&c2), Err(Error::NotMonicConstant)));
        let hyper = NcPolynomial::scalar(2, &[(1.0, &[]), (-1.0, &[0, 0]), (1.0, &[1, 1])]).unwrap();
        match quadratic_to_lmi(&hyper) {
            Err(Error::NotPsd { eigenvalue, direction }) => {
                assert_eq!(eigenvalue, -1.0);
                assert!((direction[1].abs() - 1.0).abs() < 1e-14);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn interval_agreement() {
        let p = NcPolynomial::scalar(1, &[(1.0, &[]), (-1.0, &[0, 0])]).unwrap();
        let l = scalar_pencil(1.0).direct_sum(&scalar_pencil(-1.0)).unwrap();
        let r = sets_agree_sampled(&p, &l, &[1, 2, 3], 50, 11).unwrap();
        assert_eq!(r.disagreements, 0);
    }

    #[test]
    fn polynomial_roundtrip() {
        let l = MonicPencil::new(vec![m(2, &[1.0, 2.0, 2.0, 0.0]), m(2, &[0.0, 0.5, 0.5, -1.0])]).unwrap();
        assert_eq!(MonicPencil::from_polynomial(&l.to_polynomial()).unwrap(), l);
    }
}
