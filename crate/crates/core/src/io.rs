//! JSON formats.
//!
//! Polynomial: `{"g", "rows", "cols", "terms": [{"word": [..], "coeff": [[..]]}]}`
//! with 1-based variable indices in words.
//!
//! Tuple: `{"n", "g", "matrices": [[[..]]]}`.
//!
//! Pencil: `{"g", "size", "A": [[[..]]], "sign": "+1" | "-1"}`. A pencil with
//! sign `-1` means `I - sum A_j x_j` and is normalized to `+1` on read.
//!
//! Boundary pair: tuple fields plus `{"v": [..], "residual"}`.
//!
//! Vanishing space: `{"g", "delta", "d", "dim", "basis": [[..]]}`. Each basis
//! vector lists coordinates `word_index * delta + alpha` over the words of
//! length at most `d` in graded-lex order (shorter words first, then
//! lexicographic in the letters).
//!
//! Every parser returns an error, never panics, on malformed input.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryPair;
use crate::error::{Error, Result};
use crate::evaluate::MatrixTuple;
use crate::ncpoly::{word_count, NcPolynomial, Word};
use crate::pencil::MonicPencil;
use crate::vanishing::VanishingSpace;

/// Largest dimension accepted from untrusted input.
pub const MAX_DIM: usize = 4096;

fn matrix_from_rows(rows: &[Vec<f64>], nrows: usize, ncols: usize) -> Result<DMatrix<f64>> {
    if rows.len() != nrows {
        return Err(Error::InvalidInput(format!("expected {nrows} rows, found {}", rows.len())));
    }
    for r in rows {
        if r.len() != ncols {
            return Err(Error::InvalidInput(format!("ragged row: expected {ncols} entries, found {}", r.len())));
        }
        if r.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite entry".into()));
        }
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn check_dim(name: &str, v: usize) -> Result<()> {
    if v > MAX_DIM {
        return Err(Error::InvalidInput(format!("{name} = {v} exceeds {MAX_DIM}")));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermJson {
    word: Vec<usize>,
    coeff: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct PolynomialJson {
    g: usize,
    rows: usize,
    cols: usize,
    terms: Vec<TermJson>,
}

impl TryFrom<PolynomialJson> for NcPolynomial {
    type Error = Error;

    fn try_from(j: PolynomialJson) -> Result<Self> {
        check_dim("g", j.g)?;
        check_dim("rows", j.rows)?;
        check_dim("cols", j.cols)?;
        let mut terms = Vec::with_capacity(j.terms.len());
        for t in j.terms {
            let mut letters = Vec::with_capacity(t.word.len());
            for &l in &t.word {
                if l == 0 || l > j.g {
                    return Err(Error::InvalidInput(format!("variable index {l} outside 1..={}", j.g)));
                }
                letters.push(l - 1);
            }
            terms.push((Word::new(letters), matrix_from_rows(&t.coeff, j.rows, j.cols)?));
        }
        NcPolynomial::from_terms(j.g, j.rows, j.cols, terms)
    }
}

impl From<NcPolynomial> for PolynomialJson {
    fn from(p: NcPolynomial) -> Self {
        PolynomialJson {
            g: p.g(),
            rows: p.rows(),
            cols: p.cols(),
            terms: p
                .terms()
                .map(|(w, c)| TermJson {
                    word: w.letters().iter().map(|l| l + 1).collect(),
                    coeff: matrix_to_rows(c),
                })
                .collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct TupleJson {
    n: usize,
    g: usize,
    matrices: Vec<Vec<Vec<f64>>>,
}

impl TryFrom<TupleJson> for MatrixTuple {
    type Error = Error;

    fn try_from(j: TupleJson) -> Result<Self> {
        check_dim("n", j.n)?;
        if j.matrices.len() != j.g {
            return Err(Error::InvalidInput(format!("g = {} but {} matrices", j.g, j.matrices.len())));
        }
        if j.g == 0 {
            return Ok(MatrixTuple::zeros(0, j.n));
        }
        let mats = j
            .matrices
            .iter()
            .map(|m| matrix_from_rows(m, j.n, j.n))
            .collect::<Result<Vec<_>>>()?;
        MatrixTuple::new(mats)
    }
}

impl From<MatrixTuple> for TupleJson {
    fn from(t: MatrixTuple) -> Self {
        TupleJson {
            n: t.level(),
            g: t.g(),
            matrices: t.matrices().iter().map(matrix_to_rows).collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct PencilJson {
    g: usize,
    size: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<Vec<f64>>>,
    #[serde(default = "plus_sign")]
    sign: String,
}

fn plus_sign() -> String {
    "+1".into()
}

impl TryFrom<PencilJson> for MonicPencil {
    type Error = Error;

    fn try_from(j: PencilJson) -> Result<Self> {
        check_dim("size", j.size)?;
        if j.a.len() != j.g {
            return Err(Error::InvalidInput(format!("g = {} but {} coefficients", j.g, j.a.len())));
        }
        let flip = match j.sign.as_str() {
            "+1" | "+" | "1" => false,
            "-1" | "-" => true,
            other => return Err(Error::InvalidInput(format!("sign must be \"+1\" or \"-1\", found {other:?}"))),
        };
        if j.size == 0 {
            if j.a.iter().any(|m| !m.is_empty()) {
                return Err(Error::InvalidInput("size-0 pencil with non-empty coefficients".into()));
            }
            return Ok(MonicPencil::trivial(j.g));
        }
        if j.g == 0 {
            return Err(Error::InvalidInput("pencil needs at least one variable".into()));
        }
        let mats = j
            .a
            .iter()
            .map(|m| matrix_from_rows(m, j.size, j.size))
            .collect::<Result<Vec<_>>>()?;
        let l = MonicPencil::new(mats)?;
        Ok(if flip { l.negated() } else { l })
    }
}

impl From<MonicPencil> for PencilJson {
    fn from(l: MonicPencil) -> Self {
        PencilJson {
            g: l.g(),
            size: l.size(),
            a: l.coeffs().iter().map(matrix_to_rows).collect(),
            sign: plus_sign(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct BoundaryPairJson {
    n: usize,
    g: usize,
    matrices: Vec<Vec<Vec<f64>>>,
    v: Vec<f64>,
    residual: f64,
}

impl TryFrom<BoundaryPairJson> for BoundaryPair {
    type Error = Error;

    fn try_from(j: BoundaryPairJson) -> Result<Self> {
        let x = MatrixTuple::try_from(TupleJson {
            n: j.n,
            g: j.g,
            matrices: j.matrices,
        })?;
        if j.n == 0 || j.v.is_empty() || !j.v.len().is_multiple_of(j.n) {
            return Err(Error::InvalidInput(format!(
                "vector length {} is not a positive multiple of n = {}",
                j.v.len(),
                j.n
            )));
        }
        if j.v.iter().any(|x| !x.is_finite()) || !j.residual.is_finite() || j.residual < 0.0 {
            return Err(Error::InvalidInput("non-finite vector entry or residual".into()));
        }
        let v = DVector::from_vec(j.v);
        let nrm = v.norm();
        if nrm == 0.0 || !nrm.is_finite() {
            return Err(Error::InvalidInput("boundary vector must be non-zero".into()));
        }
        Ok(BoundaryPair {
            delta: v.len() / j.n,
            x,
            v: v / nrm,
            residual: j.residual,
        })
    }
}

impl From<BoundaryPair> for BoundaryPairJson {
    fn from(p: BoundaryPair) -> Self {
        let t = TupleJson::from(p.x);
        BoundaryPairJson {
            n: t.n,
            g: t.g,
            matrices: t.matrices,
            v: p.v.iter().copied().collect(),
            residual: p.residual,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct VanishingSpaceJson {
    g: usize,
    delta: usize,
    d: usize,
    dim: usize,
    basis: Vec<Vec<f64>>,
}

impl TryFrom<VanishingSpaceJson> for VanishingSpace {
    type Error = Error;

    fn try_from(j: VanishingSpaceJson) -> Result<Self> {
        check_dim("g", j.g)?;
        check_dim("delta", j.delta)?;
        check_dim("d", j.d)?;
        let words = checked_word_count(j.g, j.d)?;
        let nu = words
            .checked_mul(j.delta)
            .filter(|nu| *nu <= MAX_DIM * MAX_DIM)
            .ok_or_else(|| Error::InvalidInput("coordinate space too large".into()))?;
        if j.dim != j.basis.len() {
            return Err(Error::InvalidInput(format!("dim = {} but {} basis vectors", j.dim, j.basis.len())));
        }
        if j.dim > nu {
            return Err(Error::InvalidInput(format!("dim {} exceeds nu = {nu}", j.dim)));
        }
        let cols = j
            .basis
            .iter()
            .map(|b| {
                if b.len() != nu {
                    return Err(Error::InvalidInput(format!("basis vector of length {} (nu = {nu})", b.len())));
                }
                if b.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidInput("non-finite basis entry".into()));
                }
                Ok(DVector::from_column_slice(b))
            })
            .collect::<Result<Vec<_>>>()?;
        let basis = if cols.is_empty() {
            DMatrix::zeros(nu, 0)
        } else {
            DMatrix::from_columns(&cols)
        };
        VanishingSpace::from_basis(j.g, j.delta, j.d, basis)
    }
}

impl From<VanishingSpace> for VanishingSpaceJson {
    fn from(s: VanishingSpace) -> Self {
        VanishingSpaceJson {
            g: s.g(),
            delta: s.delta(),
            d: s.d(),
            dim: s.dim(),
            basis: (0..s.dim()).map(|k| s.basis().column(k).iter().copied().collect()).collect(),
        }
    }
}

fn checked_word_count(g: usize, d: usize) -> Result<usize> {
    let mut total: usize = 0;
    let mut pow: usize = 1;
    for _ in 0..=d {
        total = total
            .checked_add(pow)
            .ok_or_else(|| Error::InvalidInput("coordinate space too large".into()))?;
        pow = pow
            .checked_mul(g)
            .ok_or_else(|| Error::InvalidInput("coordinate space too large".into()))?;
        if total > MAX_DIM * MAX_DIM {
            return Err(Error::InvalidInput("coordinate space too large".into()));
        }
    }
    debug_assert!(g == 0 || total == word_count(g, d));
    Ok(total)
}

/// Serde adapters writing matrices as arrays of rows and vectors as arrays.
pub mod serde_dense {
    use super::*;
    use serde::{Deserializer, Serializer};

    fn rows_to_matrix<E: serde::de::Error>(rows: Vec<Vec<f64>>) -> std::result::Result<DMatrix<f64>, E> {
        let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
        let nrows = rows.len();
        matrix_from_rows(&rows, nrows, ncols).map_err(E::custom)
    }

    pub mod matrix {
        use super::*;

        pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
            matrix_to_rows(m).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<DMatrix<f64>, D::Error> {
            rows_to_matrix(Vec::<Vec<f64>>::deserialize(d)?)
        }
    }

    pub mod matrices {
        use super::*;

        pub fn serialize<S: Serializer>(ms: &[DMatrix<f64>], s: S) -> std::result::Result<S::Ok, S::Error> {
            ms.iter().map(matrix_to_rows).collect::<Vec<_>>().serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<DMatrix<f64>>, D::Error> {
            Vec::<Vec<Vec<f64>>>::deserialize(d)?.into_iter().map(rows_to_matrix).collect()
        }
    }

    pub mod vectors {
        use super::*;

        pub fn serialize<S: Serializer>(vs: &[DVector<f64>], s: S) -> std::result::Result<S::Ok, S::Error> {
            vs.iter().map(|v| v.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>().serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<DVector<f64>>, D::Error> {
            Ok(Vec::<Vec<f64>>::deserialize(d)?.into_iter().map(DVector::from_vec).collect())
        }
    }
}

pub fn parse_polynomial(s: &str) -> Result<NcPolynomial> {
    NcPolynomial::try_from(serde_json::from_str::<PolynomialJson>(s)?)
}

pub fn parse_tuple(s: &str) -> Result<MatrixTuple> {
    MatrixTuple::try_from(serde_json::from_str::<TupleJson>(s)?)
}

pub fn parse_pencil(s: &str) -> Result<MonicPencil> {
    MonicPencil::try_from(serde_json::from_str::<PencilJson>(s)?)
}

pub fn parse_boundary_pair(s: &str) -> Result<BoundaryPair> {
    BoundaryPair::try_from(serde_json::from_str::<BoundaryPairJson>(s)?)
}

pub fn parse_vanishing_space(s: &str) -> Result<VanishingSpace> {
    VanishingSpace::try_from(serde_json::from_str::<VanishingSpaceJson>(s)?)
}

/// Pretty-printed JSON of any serializable value.
pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("in-memory values serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_roundtrip() {
        let s = r#"{"g":2,"rows":1,"cols":1,"terms":[{"word":[],"coeff":[[1.0]]},{"word":[1,2],"coeff":[[-0.5]]},{"word":[2,1],"coeff":[[-0.5]]}]}"#;
        let p = parse_polynomial(s).unwrap();
        assert_eq!(p.num_terms(), 3);
        let back = parse_polynomial(&to_json(&p)).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn polynomial_rejects_bad_input() {
        for s in [
            r#"{"g":1,"rows":1,"cols":1,"terms":[{"word":[2],"coeff":[[1.0]]}]}"#,
            r#"{"g":1,"rows":1,"cols":1,"terms":[{"word":[0],"coeff":[[1.0]]}]}"#,
            r#"{"g":1,"rows":2,"cols":2,"terms":[{"word":[],"coeff":[[1.0,2.0],[1.0]]}]}"#,
            r#"{"g":1,"rows":1,"cols":1}"#,
            "[]",
        ] {
            assert!(parse_polynomial(s).is_err(), "{s}");
        }
    }

    #[test]
    fn tuple_roundtrip_and_symmetry() {
        let t = parse_tuple(r#"{"n":2,"g":1,"matrices":[[[1,2],[2,3]]]}"#).unwrap();
        assert_eq!(parse_tuple(&to_json(&t)).unwrap(), t);
        assert!(matches!(
            parse_tuple(r#"{"n":2,"g":1,"matrices":[[[1,2],[0,3]]]}"#),
            Err(Error::NotSymmetric)
        ));
        assert!(parse_tuple(r#"{"n":2,"g":2,"matrices":[[[1,2],[2,3]]]}"#).is_err());
    }

    #[test]
    fn pencil_sign_normalized() {
        let l = parse_pencil(r#"{"g":1,"size":1,"A":[[[1.0]]],"sign":"-1"}"#).unwrap();
        assert_eq!(l.coeffs()[0][(0, 0)], -1.0);
        let j = to_json(&l);
        assert!(j.contains("\"+1\""));
        assert!(parse_pencil(r#"{"g":1,"size":1,"A":[[[1.0]]],"sign":"2"}"#).is_err());
    }

    #[test]
    fn boundary_pair_roundtrip() {
        let s = r#"{"n":1,"g":1,"matrices":[[[1.0]]],"v":[2.0],"residual":0.0}"#;
        let p = parse_boundary_pair(s).unwrap();
        assert_eq!(p.v[0], 1.0);
        assert_eq!(parse_boundary_pair(&to_json(&p)).unwrap(), p);
        assert!(parse_boundary_pair(r#"{"n":2,"g":1,"matrices":[[[1,0],[0,1]]],"v":[1,0,0],"residual":0}"#).is_err());
    }

    #[test]
    fn vanishing_space_validates_lengths() {
        let ok = r#"{"g":1,"delta":1,"d":2,"dim":1,"basis":[[0.7071067811865476,0.0,-0.7071067811865476]]}"#;
        let s = parse_vanishing_space(ok).unwrap();
        assert_eq!(s.dim(), 1);
        assert!(parse_vanishing_space(r#"{"g":1,"delta":1,"d":2,"dim":1,"basis":[[1.0,0.0]]}"#).is_err());
        assert!(parse_vanishing_space(r#"{"g":1000,"delta":1,"d":1000,"dim":0,"basis":[]}"#).is_err());
    }
}
