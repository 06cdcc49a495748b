//! Seeded random matrices and interior samples of star-shaped sets.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::evaluate::{first_singular_scale, MatrixTuple, RayOptions, RayPolynomial};
use crate::linalg::{self, spectral_norm};
use crate::ncpoly::NcPolynomial;
use crate::pencil::MonicPencil;

/// Largest ray scale probed before a ray is declared unbounded.
pub const RAY_T_MAX: f64 = 1e6;

/// Scale used in place of `t*` along rays that never leave the set.
const UNBOUNDED_SCALE: f64 = 10.0;

/// Deterministic generator for `(seed, stream)`.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn random_symmetric<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    linalg::symmetrize(&gaussian_matrix(rng, n, n))
}

/// Gaussian symmetric tuple with unit Frobenius norm.
pub fn random_direction<R: Rng>(rng: &mut R, g: usize, n: usize) -> MatrixTuple {
    loop {
        let t = MatrixTuple::new((0..g).map(|_| random_symmetric(rng, n)).collect()).expect("symmetric by construction");
        let nrm = t.frobenius_norm();
        if nrm > 1e-12 {
            return t.scale(1.0 / nrm);
        }
    }
}

/// Gaussian `m x k` matrix divided by `sigma_max + 1e-6`.
pub fn random_contraction<R: Rng>(rng: &mut R, m: usize, k: usize) -> DMatrix<f64> {
    let c = gaussian_matrix(rng, m, k);
    let s = spectral_norm(&c);
    c / (s + 1e-6)
}

/// Haar-distributed orthogonal matrix via QR with sign correction.
pub fn random_orthogonal<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let qr = gaussian_matrix(rng, n, n).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            let mut col = q.column_mut(j);
            col.neg_mut();
        }
    }
    q
}

/// A set that is star-shaped about the origin, queried along rays.
pub trait Region {
    fn g(&self) -> usize;

    /// First scale `t > 0` at which `tX` leaves the set, or `None` when the
    /// ray stays inside up to the probing limit.
    fn exit_scale(&self, x: &MatrixTuple) -> Result<Option<f64>>;
}

impl Region for NcPolynomial {
    fn g(&self) -> usize {
        NcPolynomial::g(self)
    }

    fn exit_scale(&self, x: &MatrixTuple) -> Result<Option<f64>> {
        let ray = RayPolynomial::new(self, x)?;
        first_singular_scale(&ray, RayOptions::default(), RAY_T_MAX)
    }
}

impl Region for MonicPencil {
    fn g(&self) -> usize {
        MonicPencil::g(self)
    }

    fn exit_scale(&self, x: &MatrixTuple) -> Result<Option<f64>> {
        self.exit_scale(x)
    }
}

/// Interior point `u t* D` for a Gaussian direction `D` and `u` uniform in
/// `(0, max_fraction)`.
pub fn interior_sample<S: Region + ?Sized, R: Rng>(
    set: &S,
    rng: &mut R,
    n: usize,
    max_fraction: f64,
) -> Result<MatrixTuple> {
    let d = random_direction(rng, set.g(), n);
    let t = set.exit_scale(&d)?.unwrap_or(UNBOUNDED_SCALE);
    let u: f64 = rng.gen_range(0.0..max_fraction);
    Ok(d.scale(u * t))
}
