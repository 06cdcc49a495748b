//! Degree-bounded vanishing spaces
//! `I(S) = {q row polynomial of degree <= d : q(X) v = 0 for (X, v) in S}`.
//!
//! A row polynomial `q = sum_w q_w w` with `q_w` a `1 x delta` row is stored
//! by its graded-lex coordinates (see [`NcPolynomial::row_coordinates`]).
//! Coordinate `word_index * delta + alpha` pairs with the column
//! `w(X) v_alpha` of the constraint matrix of a pair, so
//! `q(X) v = C(X, v) q`.
//!
//! Sample sets are finite, so domination and closure are relative to the
//! sampled pairs only; the full boundary at all levels is never available.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::boundary::{direct_sum_pairs, BoundaryPair};
use crate::error::{Error, Result};
use crate::evaluate::WordValues;
use crate::linalg::{self, spectral_norm};
use crate::ncpoly::{word_count, words_up_to, NcPolynomial};

/// Relative singular-value cutoff for nullspaces of constraint matrices.
pub const NULL_CUT: f64 = 1e-6;
/// Residual allowed when testing subspace containment.
pub const CONTAINMENT_TOL: f64 = 1e-6;
/// Distance allowed between `I(S)` and the space of its representative; a
/// guard against gross errors in the greedy selection.
pub const REPRESENTATIVE_TOL: f64 = 1e-4;
/// Relative residual allowed in closure membership tests.
pub const CLOSURE_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "crate::io::VanishingSpaceJson", into = "crate::io::VanishingSpaceJson")]
pub struct VanishingSpace {
    g: usize,
    delta: usize,
    d: usize,
    /// `nu x dim`, orthonormal columns.
    basis: DMatrix<f64>,
}

impl VanishingSpace {
    /// Checks shape and orthonormality of the columns.
    pub fn from_basis(g: usize, delta: usize, d: usize, basis: DMatrix<f64>) -> Result<Self> {
        let nu = delta * word_count(g, d);
        if basis.nrows() != nu {
            return Err(Error::ShapeMismatch(format!("basis rows {} differ from nu = {nu}", basis.nrows())));
        }
        let gram = basis.transpose() * &basis;
        let dev = (gram - DMatrix::identity(basis.ncols(), basis.ncols())).abs().max();
        if basis.ncols() > 0 && (dev.is_nan() || dev > 1e-8) {
            return Err(Error::InvalidInput(format!("basis is not orthonormal (deviation {dev:e})")));
        }
        Ok(VanishingSpace { g, delta, d, basis })
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn delta(&self) -> usize {
        self.delta
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn nu(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Basis element `k` as a `1 x delta` polynomial.
    pub fn polynomial(&self, k: usize) -> NcPolynomial {
        NcPolynomial::from_row_coordinates(self.g, self.delta, self.d, &self.basis.column(k).into_owned())
            .expect("basis length matches nu")
    }

    /// Distance from `q` (coordinates) to the space, relative to `||q||`.
    pub fn relative_residual(&self, q: &DVector<f64>) -> f64 {
        let nrm = q.norm();
        if nrm == 0.0 {
            return 0.0;
        }
        let proj = &self.basis * (self.basis.transpose() * q);
        (q - proj).norm() / nrm
    }

    pub fn contains(&self, q: &DVector<f64>, tol: f64) -> bool {
        self.relative_residual(q) <= tol
    }

    /// Relative residual of a row polynomial of degree at most `d`.
    pub fn polynomial_residual(&self, q: &NcPolynomial) -> Result<f64> {
        if q.g() != self.g || q.cols() != self.delta {
            return Err(Error::ShapeMismatch("polynomial does not live in this coordinate space".into()));
        }
        Ok(self.relative_residual(&q.row_coordinates(self.d)?))
    }

    pub fn is_subspace_of(&self, other: &VanishingSpace) -> bool {
        self.nu() == other.nu() && (0..self.dim()).all(|k| other.contains(&self.basis.column(k).into_owned(), CONTAINMENT_TOL))
    }

    /// Largest relative residual of a basis vector of either space in the
    /// other; infinite when the dimensions or ambient spaces differ.
    pub fn distance(&self, other: &VanishingSpace) -> f64 {
        if self.nu() != other.nu() || self.dim() != other.dim() {
            return f64::INFINITY;
        }
        let one = |a: &VanishingSpace, b: &VanishingSpace| {
            (0..a.dim()).map(|k| b.relative_residual(&a.basis.column(k).into_owned())).fold(0.0, f64::max)
        };
        one(self, other).max(one(other, self))
    }

    pub fn same_as(&self, other: &VanishingSpace) -> bool {
        self.dim() == other.dim() && self.is_subspace_of(other) && other.is_subspace_of(self)
    }
}

/// Boundary pairs of a fixed polynomial, standing for their direct-sum closure.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleSet {
    pairs: Vec<BoundaryPair>,
}

impl SampleSet {
    pub fn new(pairs: Vec<BoundaryPair>) -> Result<Self> {
        let first = pairs.first().ok_or(Error::Empty("sample set"))?;
        let (g, delta) = (first.g(), first.delta);
        for p in &pairs {
            if p.g() != g {
                return Err(Error::VariableCount {
                    expected: g,
                    found: p.g(),
                });
            }
            if p.delta != delta {
                return Err(Error::ShapeMismatch("pairs differ in delta".into()));
            }
        }
        Ok(SampleSet { pairs })
    }

    pub fn singleton(pair: BoundaryPair) -> Self {
        SampleSet { pairs: vec![pair] }
    }

    pub fn pairs(&self) -> &[BoundaryPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn g(&self) -> usize {
        self.pairs[0].g()
    }

    pub fn delta(&self) -> usize {
        self.pairs[0].delta
    }
}

/// `C(X, v)`: `n x nu`, column `word_index * delta + alpha` is `w(X) v_alpha`.
pub fn constraint_matrix(pair: &BoundaryPair, d: usize) -> DMatrix<f64> {
    let n = pair.level();
    let delta = pair.delta;
    let words = words_up_to(pair.g(), d);
    let blocks: Vec<DVector<f64>> = (0..delta).map(|a| pair.block(a)).collect();
    let mut values = WordValues::new(&pair.x);
    let mut c = DMatrix::zeros(n, delta * words.len());
    for (i, w) in words.iter().enumerate() {
        let wx = values.get(w);
        for (a, b) in blocks.iter().enumerate() {
            c.set_column(i * delta + a, &(wx * b));
        }
    }
    c
}

/// Constraint matrices of all pairs, each scaled to unit spectral norm so that
/// far-out pairs do not drown the others under a relative cutoff.
fn stacked_constraints(s: &SampleSet, d: usize) -> DMatrix<f64> {
    let mats: Vec<DMatrix<f64>> = s
        .pairs
        .iter()
        .map(|p| {
            let c = constraint_matrix(p, d);
            let nrm = spectral_norm(&c);
            if nrm > 0.0 {
                c / nrm
            } else {
                c
            }
        })
        .collect();
    let rows = mats.iter().map(|m| m.nrows()).sum();
    let cols = mats[0].ncols();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r = 0;
    for m in &mats {
        out.view_mut((r, 0), (m.nrows(), cols)).copy_from(m);
        r += m.nrows();
    }
    out
}

/// `I(S)` as the common nullspace of the constraint matrices.
pub fn vanishing_space(s: &SampleSet, d: usize) -> Result<VanishingSpace> {
    if s.is_empty() {
        return Err(Error::Empty("sample set"));
    }
    let c = stacked_constraints(s, d);
    let basis = linalg::nullspace(&c, NULL_CUT);
    Ok(VanishingSpace {
        g: s.g(),
        delta: s.delta(),
        d,
        basis,
    })
}

fn check_compatible(candidate: &BoundaryPair, s: &SampleSet) -> Result<()> {
    if s.is_empty() {
        return Err(Error::Empty("sample set"));
    }
    if candidate.g() != s.g() {
        return Err(Error::VariableCount {
            expected: s.g(),
            found: candidate.g(),
        });
    }
    if candidate.delta != s.delta() {
        return Err(Error::ShapeMismatch("candidate and sample set differ in delta".into()));
    }
    Ok(())
}

/// `I(candidate) ⊆ I(S)`.
pub fn is_dominating(candidate: &BoundaryPair, s: &SampleSet, d: usize) -> Result<bool> {
    check_compatible(candidate, s)?;
    let own = vanishing_space(&SampleSet::singleton(candidate.clone()), d)?;
    Ok(own.is_subspace_of(&vanishing_space(s, d)?))
}

/// Every `q` in `I(W)` annihilates the candidate:
/// `||q(X) v|| <= 1e-7 (1 + ||X||)^d` for each basis element.
pub fn closure_contains(candidate: &BoundaryPair, w: &SampleSet, d: usize) -> Result<bool> {
    check_compatible(candidate, w)?;
    let space = vanishing_space(w, d)?;
    let c = constraint_matrix(candidate, d);
    let tol = CLOSURE_TOL * (1.0 + candidate.x.norm()).powi(d as i32);
    Ok((0..space.dim()).all(|k| (&c * space.basis.column(k)).norm() <= tol))
}

/// A single pair (a direct sum of members of `S`) with the same vanishing
/// space as `S`, chosen greedily: a member is kept when it strictly shrinks
/// the running space.
pub fn dominating_representative(s: &SampleSet, d: usize) -> Result<BoundaryPair> {
    Ok(dominating_representative_parts(s, d)?.0)
}

/// As [`dominating_representative`], also returning the indices of the
/// members used.
pub fn dominating_representative_parts(s: &SampleSet, d: usize) -> Result<(BoundaryPair, Vec<usize>)> {
    if s.is_empty() {
        return Err(Error::Empty("sample set"));
    }
    let nu = s.delta() * word_count(s.g(), d);
    let mut running = DMatrix::<f64>::identity(nu, nu);
    let mut used = Vec::new();
    for (i, pair) in s.pairs.iter().enumerate() {
        let c = constraint_matrix(pair, d);
        let cut = NULL_CUT * spectral_norm(&c);
        let restricted = &c * &running;
        let null = linalg::nullspace_abs(&restricted, cut);
        if null.ncols() < running.ncols() {
            running = &running * null;
            used.push(i);
            assert!(used.len() <= nu, "more than nu strict shrinks");
        }
        if running.ncols() == 0 {
            break;
        }
    }
    if used.is_empty() {
        // Every pair imposes no constraint; any member represents S.
        used.push(0);
    }
    let members: Vec<BoundaryPair> = used.iter().map(|&i| s.pairs[i].clone()).collect();
    let rep = direct_sum_pairs(&members)?;
    // I(⊕ members) = ∩ I(member); the member-wise form keeps the scaling.
    let rep_space = vanishing_space(&SampleSet::new(members)?, d)?;
    let full = vanishing_space(s, d)?;
    if rep_space.distance(&full) > REPRESENTATIVE_TOL {
        return Err(Error::Numerical(format!(
            "representative vanishing space (dim {}) differs from I(S) (dim {}), distance {:e}",
            rep_space.dim(),
            full.dim(),
            rep_space.distance(&full)
        )));
    }
    Ok((rep, used))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluate::MatrixTuple;

    fn interval() -> NcPolynomial {
        NcPolynomial::scalar(1, &[(1.0, &[]), (-1.0, &[0, 0])]).unwrap()
    }

    fn pair(x: f64) -> BoundaryPair {
        BoundaryPair::new(&interval(), MatrixTuple::scalars(&[x]), DVector::from_vec(vec![1.0])).unwrap()
    }

    #[test]
    fn single_constraint_dim_two() {
        let s = SampleSet::new(vec![pair(1.0)]).unwrap();
        assert_eq!(vanishing_space(&s, 2).unwrap().dim(), 2);
    }

    #[test]
    fn two_constraints_give_defining_polynomial() {
        let s = SampleSet::new(vec![pair(1.0), pair(-1.0)]).unwrap();
        let v = vanishing_space(&s, 2).unwrap();
        assert_eq!(v.dim(), 1);
        assert!(v.polynomial_residual(&interval()).unwrap() < 1e-12);
    }

    #[test]
    fn domination_examples() {
        let s = SampleSet::new(vec![pair(1.0), pair(-1.0)]).unwrap();
        assert!(!is_dominating(&pair(1.0), &s, 2).unwrap());
        let sum = direct_sum_pairs(s.pairs()).unwrap();
        assert!(is_dominating(&sum, &s, 2).unwrap());
        assert!(is_dominating(&pair(1.0), &SampleSet::singleton(pair(1.0)), 2).unwrap());
    }

    #[test]
    fn closure_examples() {
        let w = SampleSet::new(vec![pair(1.0), pair(-1.0)]).unwrap();
        let x = MatrixTuple::new(vec![DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]))]).unwrap();
        let c = BoundaryPair::new(&interval(), x, DVector::from_vec(vec![1.0, 1.0])).unwrap();
        assert!(closure_contains(&c, &w, 2).unwrap());
        assert!(closure_contains(&pair(1.0), &w, 2).unwrap());
        assert!(!closure_contains(&pair(-1.0), &SampleSet::singleton(pair(1.0)), 2).unwrap());
    }

    #[test]
    fn representative_examples() {
        let s = SampleSet::new(vec![pair(1.0), pair(-1.0), pair(1.0)]).unwrap();
        let (rep, used) = dominating_representative_parts(&s, 2).unwrap();
        assert_eq!(used, vec![0, 1]);
        assert_eq!(rep.level(), 2);
        let single = dominating_representative(&SampleSet::singleton(pair(1.0)), 2).unwrap();
        assert_eq!(single, pair(1.0));
    }
}
