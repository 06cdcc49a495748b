//! Matrix-coefficient polynomials in `g` formally symmetric, non-commuting
//! variables.
//!
//! Words store 0-based letter indices; the JSON format and `Display` use the
//! conventional 1-based names `x1, x2, ...`. Words are ordered graded
//! lexicographically (shorter first, then by letters), and that order fixes
//! the coefficient coordinates used throughout the crate: a row vector
//! `q = (q_1, ..., q_delta)` of degree at most `d` has coordinate
//! `word_index * delta + alpha` for the coefficient of `word` in `q_alpha`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{block_diag, max_abs};

/// A word in the letters `0..g`. The empty word is the identity.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn new(letters: Vec<usize>) -> Self {
        Word(letters)
    }

    pub fn letter(j: usize) -> Self {
        Word(vec![j])
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Same letters in reverse order.
    pub fn involution(&self) -> Self {
        Word(self.0.iter().rev().copied().collect())
    }

    pub fn concat(&self, other: &Word) -> Self {
        let mut letters = self.0.clone();
        letters.extend_from_slice(&other.0);
        Word(letters)
    }

    /// Word with its last letter removed, if any.
    pub fn parent(&self) -> Option<(Word, usize)> {
        let (&last, rest) = self.0.split_last()?;
        Some((Word(rest.to_vec()), last))
    }

    pub fn max_letter(&self) -> Option<usize> {
        self.0.iter().copied().max()
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for l in &self.0 {
            write!(f, "x{}", l + 1)?;
        }
        Ok(())
    }
}

/// `sum_{j=0}^{d} g^j`, the number of words of length at most `d`.
pub fn word_count(g: usize, d: usize) -> usize {
    let mut total = 0usize;
    let mut pow = 1usize;
    for _ in 0..=d {
        total += pow;
        pow = pow.saturating_mul(g);
    }
    total
}

/// All words of length at most `d` in graded-lex order.
pub fn words_up_to(g: usize, d: usize) -> Vec<Word> {
    let mut out = vec![Word::empty()];
    let mut layer = vec![Word::empty()];
    for _ in 0..d {
        let mut next = Vec::with_capacity(layer.len() * g);
        for w in &layer {
            for j in 0..g {
                let mut l = w.0.clone();
                l.push(j);
                next.push(Word(l));
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// A polynomial `p = sum_w p_w w` with `rows x cols` real coefficients.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "crate::io::PolynomialJson", into = "crate::io::PolynomialJson")]
pub struct NcPolynomial {
    g: usize,
    rows: usize,
    cols: usize,
    terms: BTreeMap<Word, DMatrix<f64>>,
}

fn is_zero_matrix(m: &DMatrix<f64>) -> bool {
    m.iter().all(|x| *x == 0.0)
}

impl NcPolynomial {
    pub fn zero(g: usize, rows: usize, cols: usize) -> Self {
        NcPolynomial {
            g,
            rows,
            cols,
            terms: BTreeMap::new(),
        }
    }

    /// Build from `(word, coefficient)` pairs; repeated words are summed and
    /// zero coefficients dropped.
    pub fn from_terms<I>(g: usize, rows: usize, cols: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Word, DMatrix<f64>)>,
    {
        let mut p = NcPolynomial::zero(g, rows, cols);
        for (w, c) in terms {
            if c.nrows() != rows || c.ncols() != cols {
                return Err(Error::ShapeMismatch(format!(
                    "coefficient of {w} is {}x{}, expected {rows}x{cols}",
                    c.nrows(),
                    c.ncols()
                )));
            }
            if let Some(m) = w.max_letter() {
                if m >= g {
                    return Err(Error::InvalidInput(format!("letter x{} out of range for g = {g}", m + 1)));
                }
            }
            p.add_term(w, &c);
        }
        Ok(p)
    }

    /// Scalar polynomial from `(coefficient, letters)` pairs with 0-based letters.
    pub fn scalar(g: usize, terms: &[(f64, &[usize])]) -> Result<Self> {
        Self::from_terms(
            g,
            1,
            1,
            terms
                .iter()
                .map(|(c, l)| (Word::new(l.to_vec()), DMatrix::from_element(1, 1, *c))),
        )
    }

    pub fn constant(g: usize, coeff: DMatrix<f64>) -> Self {
        let (r, c) = coeff.shape();
        let mut p = NcPolynomial::zero(g, r, c);
        p.add_term(Word::empty(), &coeff);
        p
    }

    pub fn identity(g: usize, delta: usize) -> Self {
        Self::constant(g, DMatrix::identity(delta, delta))
    }

    /// The 1x1 polynomial `x_j` (0-based `j`).
    pub fn variable(g: usize, j: usize) -> Self {
        let mut p = NcPolynomial::zero(g, 1, 1);
        p.add_term(Word::letter(j), &DMatrix::from_element(1, 1, 1.0));
        p
    }

    fn add_term(&mut self, w: Word, c: &DMatrix<f64>) {
        let entry = self
            .terms
            .entry(w.clone())
            .or_insert_with(|| DMatrix::zeros(self.rows, self.cols));
        *entry += c;
        if is_zero_matrix(entry) {
            self.terms.remove(&w);
        }
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &DMatrix<f64>)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, w: &Word) -> Option<&DMatrix<f64>> {
        self.terms.get(w)
    }

    /// Coefficient of the empty word (zero matrix when absent).
    pub fn constant_term(&self) -> DMatrix<f64> {
        self.terms
            .get(&Word::empty())
            .cloned()
            .unwrap_or_else(|| DMatrix::zeros(self.rows, self.cols))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Maximum word length; `-1` for the zero polynomial.
    pub fn degree(&self) -> i64 {
        self.terms.keys().map(|w| w.len() as i64).max().unwrap_or(-1)
    }

    pub fn transpose(&self) -> Self {
        NcPolynomial {
            g: self.g,
            rows: self.cols,
            cols: self.rows,
            terms: self
                .terms
                .iter()
                .map(|(w, c)| (w.involution(), c.transpose()))
                .collect(),
        }
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        self.rows == self.cols && self.approx_eq(&self.transpose(), rel_tol)
    }

    fn check_same_space(&self, other: &Self) -> Result<()> {
        if self.g != other.g {
            return Err(Error::VariableCount {
                expected: self.g,
                found: other.g,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(format!(
                "cannot add {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = NcPolynomial::zero(self.g, self.rows, self.cols);
        for (w, c) in &self.terms {
            out.add_term(w.clone(), &(c * s));
        }
        out
    }

    /// Product: the coefficient of `w` is `sum_{uv = w} p_u q_v`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = NcPolynomial::zero(self.g, self.rows, other.cols);
        for (u, a) in &self.terms {
            for (v, b) in &other.terms {
                out.add_term(u.concat(v), &(a * b));
            }
        }
        Ok(out)
    }

    /// Block-diagonal direct sum.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        let rows = self.rows + other.rows;
        let cols = self.cols + other.cols;
        let mut out = NcPolynomial::zero(self.g, rows, cols);
        let zero_a = DMatrix::zeros(self.rows, self.cols);
        let zero_b = DMatrix::zeros(other.rows, other.cols);
        let words: std::collections::BTreeSet<&Word> = self.terms.keys().chain(other.terms.keys()).collect();
        for w in words {
            let a = self.terms.get(w).unwrap_or(&zero_a);
            let b = other.terms.get(w).unwrap_or(&zero_b);
            out.add_term(w.clone(), &block_diag(&[a, b]));
        }
        Ok(out)
    }

    /// Entrywise `|a - b| <= rel_tol * (1 + |a| + |b|)` over all words.
    pub fn approx_eq(&self, other: &Self, rel_tol: f64) -> bool {
        if self.g != other.g || self.shape() != other.shape() {
            return false;
        }
        let zero = DMatrix::zeros(self.rows, self.cols);
        let words: std::collections::BTreeSet<&Word> = self.terms.keys().chain(other.terms.keys()).collect();
        words.into_iter().all(|w| {
            let a = self.terms.get(w).unwrap_or(&zero);
            let b = other.terms.get(w).unwrap_or(&zero);
            a.iter()
                .zip(b.iter())
                .all(|(x, y)| (x - y).abs() <= rel_tol * (1.0 + x.abs() + y.abs()))
        })
    }

    /// Largest coefficient entry in absolute value.
    pub fn max_coefficient(&self) -> f64 {
        self.terms.values().map(max_abs).fold(0.0, f64::max)
    }

    /// Coordinates of a row-vector polynomial (`rows == 1`) in the graded-lex
    /// basis of degree `d`, length `delta * word_count(g, d)`.
    pub fn row_coordinates(&self, d: usize) -> Result<DVector<f64>> {
        if self.rows != 1 {
            return Err(Error::ShapeMismatch("coordinates need a row vector polynomial".into()));
        }
        if self.degree() > d as i64 {
            return Err(Error::ShapeMismatch(format!("degree {} exceeds {d}", self.degree())));
        }
        let delta = self.cols;
        let words = words_up_to(self.g, d);
        let mut out = DVector::zeros(delta * words.len());
        for (i, w) in words.iter().enumerate() {
            if let Some(c) = self.terms.get(w) {
                for a in 0..delta {
                    out[i * delta + a] = c[(0, a)];
                }
            }
        }
        Ok(out)
    }

    /// Inverse of [`row_coordinates`](Self::row_coordinates).
    pub fn from_row_coordinates(g: usize, delta: usize, d: usize, coords: &DVector<f64>) -> Result<Self> {
        let words = words_up_to(g, d);
        if coords.len() != delta * words.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} coordinates, found {}",
                delta * words.len(),
                coords.len()
            )));
        }
        let mut p = NcPolynomial::zero(g, 1, delta);
        for (i, w) in words.into_iter().enumerate() {
            let c = DMatrix::from_fn(1, delta, |_, a| coords[i * delta + a]);
            p.add_term(w, &c);
        }
        Ok(p)
    }
}

impl std::ops::Neg for &NcPolynomial {
    type Output = NcPolynomial;
    fn neg(self) -> NcPolynomial {
        self.scale(-1.0)
    }
}

impl fmt::Display for NcPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (w, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if c.nrows() == 1 && c.ncols() == 1 {
                write!(f, "{}*{}", c[(0, 0)], w)?;
            } else {
                write!(f, "{:?}*{}", c.as_slice(), w)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(c: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, c)
    }

    #[test]
    fn word_involution_examples() {
        assert_eq!(Word::new(vec![0, 1]).involution(), Word::new(vec![1, 0]));
        assert_eq!(Word::empty().involution(), Word::empty());
        assert_eq!(Word::new(vec![2, 0, 1]).involution(), Word::new(vec![1, 0, 2]));
    }

    #[test]
    fn graded_lex_enumeration() {
        let w = words_up_to(2, 2);
        let names: Vec<String> = w.iter().map(|w| w.to_string()).collect();
        assert_eq!(names, ["1", "x1", "x2", "x1x1", "x1x2", "x2x1", "x2x2"]);
        assert_eq!(word_count(2, 2), 7);
        assert_eq!(word_count(3, 0), 1);
        let mut sorted = w.clone();
        sorted.sort();
        assert_eq!(sorted, w);
    }

    #[test]
    fn transpose_of_p1() {
        // 2 x1 x2^3 + 5 x2 - 3 x3 x1 x2
        let p1 = NcPolynomial::scalar(3, &[(2.0, &[0, 1, 1, 1]), (5.0, &[1]), (-3.0, &[2, 0, 1])]).unwrap();
        let expected =
            NcPolynomial::scalar(3, &[(2.0, &[1, 1, 1, 0]), (5.0, &[1]), (-3.0, &[1, 0, 2])]).unwrap();
        assert_eq!(p1.transpose(), expected);
        assert!(!p1.is_symmetric(1e-12));
    }

    #[test]
    fn p2_is_symmetric() {
        let p2 = NcPolynomial::scalar(
            3,
            &[(1.0, &[0, 1, 1, 1]), (1.0, &[1, 1, 1, 0]), (1.0, &[2, 0, 1]), (1.0, &[1, 0, 2])],
        )
        .unwrap();
        assert_eq!(p2.transpose(), p2);
    }

    #[test]
    fn constant_matrix_transpose() {
        let p = NcPolynomial::constant(1, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]));
        let t = p.transpose();
        assert_eq!(t.constant_term(), DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 2.0, 1.0]));
    }

    #[test]
    fn additive_inverse_is_zero() {
        let x = NcPolynomial::variable(1, 0);
        let z = x.add(&-&x).unwrap();
        assert!(z.is_zero());
        assert_eq!(z.degree(), -1);
    }

    #[test]
    fn one_plus_x_squared() {
        let one = NcPolynomial::identity(1, 1);
        let x2 = NcPolynomial::scalar(1, &[(1.0, &[0, 0])]).unwrap();
        let p = one.add(&x2).unwrap();
        assert_eq!(p.num_terms(), 2);
        assert_eq!(p.degree(), 2);
    }

    #[test]
    fn square_of_one_minus_x_squared() {
        let q = NcPolynomial::scalar(1, &[(1.0, &[]), (-1.0, &[0, 0])]).unwrap();
        let sq = q.mul(&q).unwrap();
        let expected = NcPolynomial::scalar(1, &[(1.0, &[]), (-2.0, &[0, 0]), (1.0, &[0, 0, 0, 0])]).unwrap();
        assert_eq!(sq, expected);
    }

    #[test]
    fn product_of_letters() {
        let x1 = NcPolynomial::variable(2, 0);
        let x2 = NcPolynomial::variable(2, 1);
        let p = x1.mul(&x2).unwrap();
        assert_eq!(p.num_terms(), 1);
        assert_eq!(p.coefficient(&Word::new(vec![0, 1])), Some(&s(1.0)));
    }

    #[test]
    fn shape_mismatch_errors() {
        let a = NcPolynomial::zero(2, 1, 2);
        let b = NcPolynomial::zero(2, 1, 2);
        assert!(matches!(a.mul(&b), Err(Error::ShapeMismatch(_))));
        let c = NcPolynomial::zero(3, 1, 2);
        assert!(matches!(a.add(&c), Err(Error::VariableCount { .. })));
        assert!(matches!(
            a.add(&NcPolynomial::zero(2, 2, 2)),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn direct_sum_with_empty_shape() {
        let p = NcPolynomial::scalar(2, &[(1.0, &[]), (-1.0, &[0, 0])]).unwrap();
        let e = NcPolynomial::zero(2, 0, 0);
        assert_eq!(p.direct_sum(&e).unwrap(), p);
    }

    #[test]
    fn direct_sum_of_letters_is_diagonal() {
        let p = NcPolynomial::variable(2, 0).direct_sum(&NcPolynomial::variable(2, 1)).unwrap();
        assert_eq!(p.shape(), (2, 2));
        let c1 = p.coefficient(&Word::letter(0)).unwrap();
        assert_eq!(c1, &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        assert!(p.is_symmetric(1e-12));
    }

    #[test]
    fn coordinates_round_trip() {
        let q = NcPolynomial::from_terms(
            2,
            1,
            2,
            [
                (Word::empty(), DMatrix::from_row_slice(1, 2, &[1.0, 2.0])),
                (Word::new(vec![1, 0]), DMatrix::from_row_slice(1, 2, &[0.0, -3.0])),
            ],
        )
        .unwrap();
        let c = q.row_coordinates(2).unwrap();
        assert_eq!(c.len(), 14);
        assert_eq!(c[0], 1.0);
        assert_eq!(c[1], 2.0);
        // x2x1 is word index 5
        assert_eq!(c[11], -3.0);
        assert_eq!(NcPolynomial::from_row_coordinates(2, 2, 2, &c).unwrap(), q);
    }

    #[test]
    fn out_of_range_letter_rejected() {
        assert!(NcPolynomial::scalar(2, &[(1.0, &[2])]).is_err());
    }
}
