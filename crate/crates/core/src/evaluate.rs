//! Evaluation of free polynomials on tuples of symmetric matrices, matrix
//! signatures, and star-shaped membership in the invertibility set `D_p`.
//!
//! `p(X) = sum_w p_w ⊗ w(X)`, so row/column index `alpha * n + i` of `p(X)`
//! pairs coefficient index `alpha` with the level index `i`.
//!
//! Membership is decided along the ray `t -> p(tX)`. The matrix polynomial
//! `p(tX) = sum_k t^k C_k` is assembled once per ray; probes then cost one
//! Horner sweep and one symmetric eigen-solve. A signature change between
//! grid points is bisected, and local minima of the smallest `|eigenvalue|`
//! are refined by golden-section search so that roots of even multiplicity
//! (where the determinant touches zero without changing sign) are found too.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, is_symmetric, kron, spectral_norm, SYMMETRY_TOL};
use crate::ncpoly::{NcPolynomial, Word};
use crate::pencil::MonicPencil;

/// Default relative zero tolerance for eigenvalues.
pub const DEFAULT_ZERO_TOL: f64 = 1e-8;

/// A `g`-tuple of real symmetric `n x n` matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "crate::io::TupleJson", into = "crate::io::TupleJson")]
pub struct MatrixTuple {
    n: usize,
    mats: Vec<DMatrix<f64>>,
}

impl MatrixTuple {
    pub fn new(mats: Vec<DMatrix<f64>>) -> Result<Self> {
        let n = mats.first().map(|m| m.nrows()).unwrap_or(0);
        for m in &mats {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::ShapeMismatch(format!(
                    "tuple entries must be {n}x{n}, found {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            linalg::check_finite(m)?;
            if !is_symmetric(m, SYMMETRY_TOL) {
                return Err(Error::NotSymmetric);
            }
        }
        Ok(MatrixTuple {
            n,
            mats: mats.iter().map(linalg::symmetrize).collect(),
        })
    }

    /// Symmetrizes each entry instead of rejecting asymmetric input.
    pub fn from_symmetrized(mats: Vec<DMatrix<f64>>) -> Result<Self> {
        Self::new(mats.iter().map(linalg::symmetrize).collect())
    }

    /// Level-one tuple from scalars.
    pub fn scalars(values: &[f64]) -> Self {
        MatrixTuple {
            n: 1,
            mats: values.iter().map(|v| DMatrix::from_element(1, 1, *v)).collect(),
        }
    }

    pub fn zeros(g: usize, n: usize) -> Self {
        MatrixTuple {
            n,
            mats: vec![DMatrix::zeros(n, n); g],
        }
    }

    pub fn g(&self) -> usize {
        self.mats.len()
    }

    pub fn level(&self) -> usize {
        self.n
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.mats
    }

    pub fn get(&self, j: usize) -> &DMatrix<f64> {
        &self.mats[j]
    }

    pub fn scale(&self, t: f64) -> Self {
        MatrixTuple {
            n: self.n,
            mats: self.mats.iter().map(|m| m * t).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.g() != other.g() || self.n != other.n {
            return Err(Error::ShapeMismatch("tuple shapes differ".into()));
        }
        Ok(MatrixTuple {
            n: self.n,
            mats: self.mats.iter().zip(&other.mats).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if self.g() != other.g() {
            return Err(Error::VariableCount {
                expected: self.g(),
                found: other.g(),
            });
        }
        Ok(MatrixTuple {
            n: self.n + other.n,
            mats: self
                .mats
                .iter()
                .zip(&other.mats)
                .map(|(a, b)| linalg::block_diag(&[a, b]))
                .collect(),
        })
    }

    /// `C^T X_j C` for an `n x k` matrix `C`.
    pub fn congruence(&self, c: &DMatrix<f64>) -> Result<Self> {
        if c.nrows() != self.n {
            return Err(Error::ShapeMismatch(format!(
                "congruence needs {} rows, found {}",
                self.n,
                c.nrows()
            )));
        }
        Ok(MatrixTuple {
            n: c.ncols(),
            mats: self
                .mats
                .iter()
                .map(|m| linalg::symmetrize(&(c.transpose() * m * c)))
                .collect(),
        })
    }

    /// Largest spectral norm over the entries.
    pub fn norm(&self) -> f64 {
        self.mats.iter().map(spectral_norm).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mats.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
    }
}

/// Inertia of a symmetric matrix under a relative zero tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Signature {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
    pub tol: f64,
}

impl Signature {
    fn counts(&self) -> (usize, usize, usize) {
        (self.positive, self.negative, self.zero)
    }
}

/// Counts eigenvalues above `tol * s`, below `-tol * s`, and in between,
/// where `s = 1 + ||M||_2`.
pub fn signature(m: &DMatrix<f64>, tol: f64) -> Result<Signature> {
    if !is_symmetric(m, 1e-10) {
        return Err(Error::NotSymmetric);
    }
    Ok(signature_of_eigenvalues(linalg::sym_eigenvalues(m).as_slice(), tol))
}

fn signature_of_eigenvalues(vals: &[f64], tol: f64) -> Signature {
    let s = 1.0 + vals.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let mut sig = Signature {
        positive: 0,
        negative: 0,
        zero: 0,
        tol,
    };
    for &v in vals {
        if v > tol * s {
            sig.positive += 1;
        } else if v < -tol * s {
            sig.negative += 1;
        } else {
            sig.zero += 1;
        }
    }
    sig
}

pub fn eval_word(w: &Word, x: &MatrixTuple) -> Result<DMatrix<f64>> {
    if let Some(m) = w.max_letter() {
        if m >= x.g() {
            return Err(Error::VariableCount {
                expected: m + 1,
                found: x.g(),
            });
        }
    }
    let mut out = DMatrix::identity(x.level(), x.level());
    for &l in w.letters() {
        out *= x.get(l);
    }
    Ok(out)
}

/// Values `w(X)` for every prefix of the requested words.
pub(crate) struct WordValues<'a> {
    x: &'a MatrixTuple,
    cache: HashMap<Word, DMatrix<f64>>,
}

impl<'a> WordValues<'a> {
    pub(crate) fn new(x: &'a MatrixTuple) -> Self {
        let mut cache = HashMap::new();
        cache.insert(Word::empty(), DMatrix::identity(x.level(), x.level()));
        WordValues { x, cache }
    }

    pub(crate) fn get(&mut self, w: &Word) -> &DMatrix<f64> {
        if !self.cache.contains_key(w) {
            let (parent, last) = w.parent().expect("empty word is cached");
            let x = self.x;
            let value = self.get(&parent) * x.get(last);
            self.cache.insert(w.clone(), value);
        }
        &self.cache[w]
    }
}

fn check_vars(p: &NcPolynomial, x: &MatrixTuple) -> Result<()> {
    if p.g() != x.g() {
        return Err(Error::VariableCount {
            expected: p.g(),
            found: x.g(),
        });
    }
    Ok(())
}

/// `p(X) = sum_w p_w ⊗ w(X)`.
pub fn eval_poly(p: &NcPolynomial, x: &MatrixTuple) -> Result<DMatrix<f64>> {
    check_vars(p, x)?;
    let n = x.level();
    let mut out = DMatrix::zeros(p.rows() * n, p.cols() * n);
    let mut words = WordValues::new(x);
    for (w, c) in p.terms() {
        out += kron(c, words.get(w));
    }
    Ok(out)
}

/// `L(X) = I ⊗ I_n + sum_j A_j ⊗ X_j`.
pub fn eval_pencil(l: &MonicPencil, x: &MatrixTuple) -> Result<DMatrix<f64>> {
    l.eval(x)
}

/// Permutation `perm` with `p(X ⊕ Y)[perm, perm] = p(X) ⊕ p(Y)` for a
/// `delta x delta` polynomial and levels `n1`, `n2`.
pub fn shuffle_permutation(delta: usize, n1: usize, n2: usize) -> Vec<usize> {
    let n = n1 + n2;
    let mut perm = Vec::with_capacity(delta * n);
    for a in 0..delta {
        perm.extend((0..n1).map(|i| a * n + i));
    }
    for a in 0..delta {
        perm.extend((0..n2).map(|i| a * n + n1 + i));
    }
    perm
}

/// The matrix polynomial `t -> p(tX) = sum_k t^k C_k`.
#[derive(Clone, Debug)]
pub struct RayPolynomial {
    coeffs: Vec<DMatrix<f64>>,
}

impl RayPolynomial {
    pub fn new(p: &NcPolynomial, x: &MatrixTuple) -> Result<Self> {
        check_vars(p, x)?;
        let n = x.level();
        let deg = p.degree().max(0) as usize;
        let mut coeffs = vec![DMatrix::zeros(p.rows() * n, p.cols() * n); deg + 1];
        let mut words = WordValues::new(x);
        for (w, c) in p.terms() {
            coeffs[w.len()] += kron(c, words.get(w));
        }
        Ok(RayPolynomial { coeffs })
    }

    pub fn at(&self, t: f64) -> DMatrix<f64> {
        let mut iter = self.coeffs.iter().rev();
        let mut acc = iter.next().expect("at least the constant coefficient").clone();
        for c in iter {
            acc *= t;
            acc += c;
        }
        acc
    }
}

/// Tuning for ray scans.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RayOptions {
    /// Probes per unit interval.
    pub grid: usize,
    /// Bisection / golden-section steps when refining a crossing.
    pub refine_iters: usize,
    /// Relative eigenvalue zero tolerance.
    pub zero_tol: f64,
    /// Half-width of the band around `t = 1` reported as `Boundary`.
    pub boundary_tol: f64,
}

impl Default for RayOptions {
    fn default() -> Self {
        RayOptions {
            grid: 64,
            refine_iters: 60,
            zero_tol: DEFAULT_ZERO_TOL,
            boundary_tol: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Probe {
    t: f64,
    sig: Signature,
    strict: (usize, usize),
    gap: f64,
}

fn probe_matrix(m: &DMatrix<f64>, t: f64, tol: f64) -> Probe {
    let vals = linalg::sym_eigenvalues(m);
    let sig = signature_of_eigenvalues(vals.as_slice(), tol);
    let scale = 1.0 + vals.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let strict = (
        vals.iter().filter(|v| **v > 0.0).count(),
        vals.iter().filter(|v| **v < 0.0).count(),
    );
    let gap = vals.iter().fold(f64::INFINITY, |a, x| a.min(x.abs())) / scale;
    Probe { t, sig, strict, gap }
}

/// Sequential scanner along a ray that reports the first singular scale.
pub(crate) struct RayScanner<'a> {
    ray: &'a RayPolynomial,
    base: Signature,
    opts: RayOptions,
    prev: Probe,
    prev2: Option<Probe>,
    min_gap: f64,
}

impl<'a> RayScanner<'a> {
    /// Fails with `SingularAtZero` when `p(0)` has a zero eigenvalue.
    pub(crate) fn start(ray: &'a RayPolynomial, opts: RayOptions) -> Result<Self> {
        let m0 = ray.at(0.0);
        if !is_symmetric(&m0, 1e-10) {
            return Err(Error::PolynomialNotSymmetric);
        }
        let p0 = probe_matrix(&m0, 0.0, opts.zero_tol);
        if p0.sig.zero > 0 {
            return Err(Error::SingularAtZero);
        }
        Ok(RayScanner {
            ray,
            base: p0.sig,
            opts,
            prev: p0,
            prev2: None,
            min_gap: p0.gap,
        })
    }

    fn probe(&self, t: f64) -> Probe {
        probe_matrix(&self.ray.at(t), t, self.opts.zero_tol)
    }

    fn changed(&self, pr: &Probe) -> bool {
        pr.sig.counts() != (self.base.positive, self.base.negative, 0)
    }

    fn strict_changed(&self, pr: &Probe) -> bool {
        pr.strict != (self.base.positive, self.base.negative)
    }

    pub(crate) fn min_gap(&self) -> f64 {
        self.min_gap
    }

    /// Probe at `t > prev.t`; returns the refined first singular scale if one
    /// lies in `(prev2.t, t]`.
    pub(crate) fn advance_to(&mut self, t: f64) -> Option<f64> {
        let pr = self.probe(t);
        if self.changed(&pr) {
            return Some(self.refine_crossing(self.prev.t, t));
        }
        if let Some(p2) = self.prev2 {
            if self.prev.gap < p2.gap && self.prev.gap <= pr.gap {
                if let Some(ts) = self.refine_touch(p2.t, t) {
                    return Some(ts);
                }
            }
        }
        self.min_gap = self.min_gap.min(pr.gap);
        self.prev2 = Some(self.prev);
        self.prev = pr;
        None
    }

    /// `lo` unchanged, `hi` changed (tolerant predicate).
    fn refine_crossing(&mut self, mut lo: f64, hi: f64) -> f64 {
        let grid_hi = hi;
        let mut hi = hi;
        for _ in 0..self.opts.refine_iters {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let pr = self.probe(mid);
            if self.changed(&pr) {
                hi = mid;
            } else {
                self.min_gap = self.min_gap.min(pr.gap);
                lo = mid;
            }
        }
        // `hi` is where an eigenvalue first enters the tolerance band; the
        // exact root is nearby. Look for a strict sign change just beyond.
        let step = (grid_hi - lo).max(1e-12 * (1.0 + lo.abs()));
        let mut strict_hi = None;
        for k in 0..3 {
            let t = grid_hi + step * k as f64;
            let pr = self.probe(t);
            if self.strict_changed(&pr) {
                strict_hi = Some(t);
                break;
            }
            if k == 0 && !self.changed(&pr) {
                break;
            }
        }
        match strict_hi {
            Some(mut shi) => {
                let mut slo = lo;
                for _ in 0..(self.opts.refine_iters + 20) {
                    let mid = 0.5 * (slo + shi);
                    if mid <= slo || mid >= shi {
                        break;
                    }
                    if self.strict_changed(&self.probe(mid)) {
                        shi = mid;
                    } else {
                        slo = mid;
                    }
                }
                let (a, b) = (self.probe(slo), self.probe(shi));
                if a.gap <= b.gap {
                    slo
                } else {
                    shi
                }
            }
            None => {
                // No sign change: a touch. Stretch the bracket across the
                // whole band so the minimum lies inside it.
                // Stop early at a genuine sign change further out.
                let mut right = grid_hi.max(hi);
                let mut step = (right - lo).max(1e-12 * (1.0 + lo.abs()));
                for _ in 0..60 {
                    let prev = right;
                    right += step;
                    let pr = self.probe(right);
                    if self.strict_changed(&pr) {
                        right = self.bisect_strict(prev, right);
                        break;
                    }
                    if !self.changed(&pr) {
                        break;
                    }
                    step *= 2.0;
                }
                self.first_gap_min(lo, right)
            }
        }
    }

    /// Last point of `[a, b]` before the strict signature changes; `b` is
    /// strictly changed.
    fn bisect_strict(&self, mut a: f64, mut b: f64) -> f64 {
        for _ in 0..(self.opts.refine_iters + 20) {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if self.strict_changed(&self.probe(mid)) {
                b = mid;
            } else {
                a = mid;
            }
        }
        a
    }

    /// Leftmost local minimum of the gap on a coarse grid over `[a, b]`,
    /// refined by golden section.
    fn first_gap_min(&self, a: f64, b: f64) -> f64 {
        const N: usize = 32;
        let h = (b - a) / N as f64;
        let gaps: Vec<f64> = (0..=N).map(|k| self.probe(a + h * k as f64).gap).collect();
        let k = (0..N).find(|&k| gaps[k] <= gaps[k + 1]).unwrap_or(N);
        let lo = a + h * k.saturating_sub(1) as f64;
        let hi = (a + h * (k + 1) as f64).min(b);
        self.golden_min(lo, hi).0
    }

    /// Golden-section search for the smallest gap in `[a, b]`; returns
    /// `(argmin, min_gap)`.
    fn golden_min(&self, mut a: f64, mut b: f64) -> (f64, f64) {
        const INV_PHI: f64 = 0.618_033_988_749_894_8;
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let mut fc = self.probe(c).gap;
        let mut fd = self.probe(d).gap;
        for _ in 0..self.opts.refine_iters {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - INV_PHI * (b - a);
                fc = self.probe(c).gap;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INV_PHI * (b - a);
                fd = self.probe(d).gap;
            }
        }
        if fc < fd {
            (c, fc)
        } else {
            (d, fd)
        }
    }

    /// Local minimum of the gap between `a` and `b`: refine and report a
    /// touch if the gap reaches the zero band.
    fn refine_touch(&mut self, a: f64, b: f64) -> Option<f64> {
        const INV_PHI: f64 = 0.618_033_988_749_894_8;
        let (mut lo, mut hi) = (a, b);
        let mut c = hi - INV_PHI * (hi - lo);
        let mut d = lo + INV_PHI * (hi - lo);
        let mut pc = self.probe(c);
        let mut pd = self.probe(d);
        for _ in 0..self.opts.refine_iters {
            for pr in [pc, pd] {
                if self.changed(&pr) {
                    return Some(self.refine_crossing(a, pr.t));
                }
            }
            if pc.gap < pd.gap {
                hi = d;
                d = c;
                pd = pc;
                c = hi - INV_PHI * (hi - lo);
                pc = self.probe(c);
            } else {
                lo = c;
                c = d;
                pc = pd;
                d = lo + INV_PHI * (hi - lo);
                pd = self.probe(d);
            }
        }
        for pr in [pc, pd] {
            if self.changed(&pr) {
                return Some(self.refine_crossing(a, pr.t));
            }
        }
        self.min_gap = self.min_gap.min(pc.gap.min(pd.gap));
        None
    }
}

/// Scan `[0, t_max]` for the first singular scale of `p(t X)`: the unit
/// interval on the fine grid, then doubling intervals.
pub(crate) fn first_singular_scale(ray: &RayPolynomial, opts: RayOptions, t_max: f64) -> Result<Option<f64>> {
    let mut scanner = RayScanner::start(ray, opts)?;
    let grid = opts.grid.max(2);
    let mut a = 0.0;
    let mut b = 1.0f64.min(t_max);
    loop {
        for k in 1..=grid {
            let t = a + (b - a) * k as f64 / grid as f64;
            if let Some(ts) = scanner.advance_to(t) {
                return Ok(Some(ts));
            }
        }
        if b >= t_max {
            return Ok(None);
        }
        a = b;
        b = (2.0 * b).min(t_max);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MembershipStatus {
    Inside,
    Boundary,
    Outside,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipVerdict {
    pub status: MembershipStatus,
    /// First singular scale `t*` along the ray, when one was found.
    pub critical_scale: Option<f64>,
    /// Smallest relative `|eigenvalue|` of `p(tX)` seen on the retained ray.
    pub min_gap: f64,
}

impl MembershipVerdict {
    pub fn is_inside(&self) -> bool {
        self.status == MembershipStatus::Inside
    }
}

/// Star-shaped membership of `X` in `D_p`: `Inside` iff the signature of
/// `p(tX)` equals that of `p(0) ⊗ I_n` for every `t` in `[0, 1]`.
///
/// For non-convex `p` this tests the star-shaped hull of `0` only.
pub fn ray_membership(p: &NcPolynomial, x: &MatrixTuple, opts: RayOptions) -> Result<MembershipVerdict> {
    if !p.is_symmetric(1e-12) {
        return Err(Error::PolynomialNotSymmetric);
    }
    let ray = RayPolynomial::new(p, x)?;
    let mut scanner = RayScanner::start(&ray, opts)?;
    let grid = opts.grid.max(1);
    let mut crossing = None;
    for k in 1..=grid {
        if let Some(ts) = scanner.advance_to(k as f64 / grid as f64) {
            crossing = Some(ts);
            break;
        }
    }
    if crossing.is_none() {
        crossing = scanner.advance_to(1.0 + opts.boundary_tol);
    }
    let status = match crossing {
        None => MembershipStatus::Inside,
        // Touch refinement may place a root past the last probe.
        Some(t) if t > 1.0 + opts.boundary_tol => MembershipStatus::Inside,
        Some(t) if t >= 1.0 - opts.boundary_tol => MembershipStatus::Boundary,
        Some(_) => MembershipStatus::Outside,
    };
    Ok(MembershipVerdict {
        status,
        critical_scale: crossing,
        min_gap: scanner.min_gap(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, rows, data)
    }

    fn one_minus_x2() -> NcPolynomial {
        NcPolynomial::scalar(1, &[(1.0, &[]), (-1.0, &[0, 0])]).unwrap()
    }

    #[test]
    fn word_x1x2_by_hand() {
        let x = MatrixTuple::new(vec![m(2, &[0.0, 1.0, 1.0, 0.0]), m(2, &[1.0, 0.0, 0.0, -1.0])]).unwrap();
        let p = NcPolynomial::variable(2, 0).mul(&NcPolynomial::variable(2, 1)).unwrap();
        let v = eval_poly(&p, &x).unwrap();
        assert_eq!(v, m(2, &[0.0, -1.0, 1.0, 0.0]));
    }

    #[test]
    fn constant_one_is_identity() {
        let x = MatrixTuple::zeros(2, 3);
        let v = eval_poly(&NcPolynomial::identity(2, 1), &x).unwrap();
        assert_eq!(v, DMatrix::identity(3, 3));
    }

    #[test]
    fn variable_mismatch_is_error() {
        let x = MatrixTuple::zeros(3, 2);
        assert!(matches!(
            eval_poly(&NcPolynomial::identity(2, 1), &x),
            Err(Error::VariableCount { .. })
        ));
    }

    #[test]
    fn signature_examples() {
        let s = signature(&DMatrix::identity(3, 3), 1e-8).unwrap();
        assert_eq!((s.positive, s.negative, s.zero), (3, 0, 0));
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, -1.0, 0.0]));
        let s = signature(&d, 1e-8).unwrap();
        assert_eq!((s.positive, s.negative, s.zero), (1, 1, 1));
        assert!(matches!(signature(&m(2, &[1.0, 2.0, 0.0, 1.0]), 1e-8), Err(Error::NotSymmetric)));
    }

    #[test]
    fn nonsymmetric_tuple_rejected() {
        assert!(matches!(
            MatrixTuple::new(vec![m(2, &[1.0, 2.0, 0.0, 1.0])]),
            Err(Error::NotSymmetric)
        ));
    }

    #[test]
    fn ray_polynomial_matches_direct_evaluation() {
        let p = NcPolynomial::scalar(2, &[(1.0, &[]), (0.5, &[0]), (-1.0, &[0, 1]), (-1.0, &[1, 0]), (2.0, &[1, 1, 0])])
            .unwrap();
        let x = MatrixTuple::new(vec![m(2, &[0.3, 0.1, 0.1, -0.2]), m(2, &[0.5, 0.0, 0.0, 0.4])]).unwrap();
        let ray = RayPolynomial::new(&p, &x).unwrap();
        for t in [0.0, 0.3, 1.0, 2.5] {
            let direct = eval_poly(&p, &x.scale(t)).unwrap();
            assert!((ray.at(t) - direct).abs().max() < 1e-13);
        }
    }

    #[test]
    fn ray_membership_interval() {
        let p = one_minus_x2();
        let opts = RayOptions::default();
        assert_eq!(
            ray_membership(&p, &MatrixTuple::scalars(&[0.5]), opts).unwrap().status,
            MembershipStatus::Inside
        );
        let v = ray_membership(&p, &MatrixTuple::scalars(&[1.0]), opts).unwrap();
        assert_eq!(v.status, MembershipStatus::Boundary);
        assert!((v.critical_scale.unwrap() - 1.0).abs() < 1e-12);
        let v = ray_membership(&p, &MatrixTuple::scalars(&[2.0]), opts).unwrap();
        assert_eq!(v.status, MembershipStatus::Outside);
        assert!((v.critical_scale.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ray_membership_tv_screen_point() {
        let p = NcPolynomial::scalar(2, &[(1.0, &[]), (-1.0, &[0, 0, 0, 0]), (-1.0, &[1, 1, 1, 1])]).unwrap();
        // 1 - 0.9^4 - 0.5^4 = 0.2814
        let v = ray_membership(&p, &MatrixTuple::scalars(&[0.9, 0.5]), RayOptions::default()).unwrap();
        assert_eq!(v.status, MembershipStatus::Inside);
    }

    #[test]
    fn double_root_is_detected() {
        // (1 - 2x)^2 (1 - x^2 / 4): touches zero at t = 1/2 without sign change.
        let a = NcPolynomial::scalar(1, &[(1.0, &[]), (-2.0, &[0])]).unwrap();
        let b = NcPolynomial::scalar(1, &[(1.0, &[]), (-0.25, &[0, 0])]).unwrap();
        let p = a.mul(&b).unwrap().mul(&a).unwrap();
        let v = ray_membership(&p, &MatrixTuple::scalars(&[1.0]), RayOptions::default()).unwrap();
        assert_eq!(v.status, MembershipStatus::Outside);
        assert!((v.critical_scale.unwrap() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn singular_at_zero_rejected() {
        let p = NcPolynomial::scalar(1, &[(1.0, &[0, 0])]).unwrap();
        assert!(matches!(
            ray_membership(&p, &MatrixTuple::scalars(&[1.0]), RayOptions::default()),
            Err(Error::SingularAtZero)
        ));
    }

    #[test]
    fn shuffle_permutation_block_diagonalizes() {
        let p = NcPolynomial::identity(1, 2)
            .add(&NcPolynomial::constant(1, m(2, &[0.0, 1.0, 1.0, 0.0])))
            .unwrap()
            .add(&NcPolynomial::from_terms(1, 2, 2, [(Word::letter(0), m(2, &[1.0, 0.5, 0.5, -1.0]))]).unwrap())
            .unwrap();
        let x = MatrixTuple::new(vec![m(2, &[0.1, 0.2, 0.2, 0.3])]).unwrap();
        let y = MatrixTuple::scalars(&[0.7]);
        let big = eval_poly(&p, &x.direct_sum(&y).unwrap()).unwrap();
        let perm = shuffle_permutation(2, 2, 1);
        let permuted = DMatrix::from_fn(6, 6, |i, j| big[(perm[i], perm[j])]);
        let expected = linalg::block_diag(&[&eval_poly(&p, &x).unwrap(), &eval_poly(&p, &y).unwrap()]);
        assert!((permuted - expected).abs().max() < 1e-14);
    }

    #[test]
    fn double_root_just_before_simple_root() {
        // (1 - 2t)^2 (1 - 1.999t): a touch at 0.5 shortly before a crossing.
        let p = NcPolynomial::scalar(
            1,
            &[(1.0, &[]), (-5.999, &[0]), (11.996, &[0, 0]), (-7.996, &[0, 0, 0])],
        )
        .unwrap();
        let v = ray_membership(&p, &MatrixTuple::scalars(&[1.0]), RayOptions::default()).unwrap();
        assert_eq!(v.status, MembershipStatus::Outside);
        assert!((v.critical_scale.unwrap() - 0.5).abs() < 1e-3, "{v:?}");
        let inside = ray_membership(&p, &MatrixTuple::scalars(&[0.49]), RayOptions::default()).unwrap();
        assert_eq!(inside.status, MembershipStatus::Inside);
    }
}
