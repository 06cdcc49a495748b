//! Worked examples: the TV screen lift and the `b`, `f` products.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::catalog::{b_plus_f, bfb, fbf, tv_screen};
use crate::error::Result;
use crate::evaluate::{ray_membership, MatrixTuple, MembershipStatus, RayOptions};
use crate::linalg::block_diag;
use crate::pencil::MonicPencil;
use crate::sampling::{self, interior_sample};

/// `γ^4 = 1 + 2α^2`.
pub fn tv_gamma(alpha: f64) -> f64 {
    (1.0 + 2.0 * alpha * alpha).powf(0.25)
}

/// `L_0^α` as a monic pencil in `y`:
/// `[[1, 0, y1], [0, 1, y2], [y1, y2, 1 - 2α(y1 + y2)]]`.
pub fn tv_l0(alpha: f64) -> MonicPencil {
    let a = |k: usize| {
        let mut m = DMatrix::zeros(3, 3);
        m[(k, 2)] = 1.0;
        m[(2, k)] = 1.0;
        m[(2, 2)] = -2.0 * alpha;
        m
    };
    MonicPencil::new(vec![a(0), a(1)]).expect("two coefficients")
}

/// `[[I, γX], [γX, αI + Y]]`.
pub fn tv_lj(alpha: f64, gamma: f64, x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).fill_with_identity();
    m.view_mut((0, n), (n, n)).copy_from(&(x * gamma));
    m.view_mut((n, 0), (n, n)).copy_from(&(x * gamma));
    m.view_mut((n, n), (n, n)).copy_from(&(DMatrix::identity(n, n) * alpha + y));
    m
}

/// `Y_j = γ^2 X_j^2 - (α - ε) I`, which makes `L_j^α` positive definite for
/// every `ε > 0`.
pub fn tv_lift(alpha: f64, gamma: f64, eps: f64, x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    x * x * (gamma * gamma) - DMatrix::identity(n, n) * (alpha - eps)
}

fn is_pd(m: &DMatrix<f64>) -> bool {
    m.clone().cholesky().is_some()
}

/// All three pencils positive definite at `(X, lift(X, ε))`.
fn lift_feasible(alpha: f64, gamma: f64, eps: f64, x: &MatrixTuple) -> Result<bool> {
    let ys: Vec<DMatrix<f64>> = x.matrices().iter().map(|xj| tv_lift(alpha, gamma, eps, xj)).collect();
    let l0 = tv_l0(alpha).eval(&MatrixTuple::from_symmetrized(ys.clone())?)?;
    if !is_pd(&l0) {
        return Ok(false);
    }
    Ok(x
        .matrices()
        .iter()
        .zip(&ys)
        .all(|(xj, yj)| is_pd(&tv_lj(alpha, gamma, xj, yj))))
}

/// Schur complement of `L_0^α` at the lift minus
/// `γ^4 (I - X1^4 - X2^4) - 2εγ^2 (X1^2 + X2^2) - 2ε^2 I`, in max norm.
fn lift_identity_residual(alpha: f64, gamma: f64, eps: f64, x: &MatrixTuple) -> f64 {
    let n = x.level();
    let id = DMatrix::<f64>::identity(n, n);
    let (x1, x2) = (x.get(0), x.get(1));
    let (y1, y2) = (tv_lift(alpha, gamma, eps, x1), tv_lift(alpha, gamma, eps, x2));
    let schur = &id - (&y1 + &y2) * (2.0 * alpha) - &y1 * &y1 - &y2 * &y2;
    let (s1, s2) = (x1 * x1, x2 * x2);
    let g2 = gamma * gamma;
    let formula = (&id - &s1 * &s1 - &s2 * &s2) * (g2 * g2) - (&s1 + &s2) * (2.0 * eps * g2) - &id * (2.0 * eps * eps);
    (schur - formula).abs().max()
}

/// Largest `ε = 2^-k` (`k < 80`) for which the lift is feasible.
fn feasible_eps(alpha: f64, gamma: f64, x: &MatrixTuple, start: f64) -> Result<Option<f64>> {
    let mut eps = start;
    for _ in 0..80 {
        if lift_feasible(alpha, gamma, eps, x)? {
            return Ok(Some(eps));
        }
        eps *= 0.5;
    }
    Ok(None)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GammaCheck {
    pub alpha: f64,
    pub gamma: f64,
    pub gamma4: f64,
    pub relative_error: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridCheck {
    pub points_per_axis: usize,
    pub half_width: f64,
    pub band: f64,
    pub compared: usize,
    pub in_band: usize,
    pub disagreements: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContainmentCheck {
    pub seed: u64,
    pub levels: Vec<usize>,
    pub samples: usize,
    pub violations: usize,
    /// Smallest `ε` that was needed.
    pub min_eps: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TvScreenReport {
    pub alpha: f64,
    pub gamma_checks: Vec<GammaCheck>,
    pub grid: GridCheck,
    pub max_identity_residual: f64,
    pub containment: ContainmentCheck,
    pub passed: bool,
}

/// Tolerance on `|γ^4 - (1 + 2α^2)| / (1 + 2α^2)`.
pub const GAMMA_TOL: f64 = 1e-14;

pub fn gamma_check(alpha: f64) -> GammaCheck {
    let gamma = tv_gamma(alpha);
    let gamma4 = (gamma * gamma) * (gamma * gamma);
    let want = 1.0 + 2.0 * alpha * alpha;
    GammaCheck {
        alpha,
        gamma,
        gamma4,
        relative_error: (gamma4 - want).abs() / want,
    }
}

/// Level-one comparison of the lift with `1 - x^4 - y^4 > 0` on a grid over
/// `[-w, w]^2`, skipping points with `|1 - x^4 - y^4| < band`, plus sampled
/// containment of `D(n)` in the projected set for the given levels.
pub fn tvscreen(alpha: f64, points: usize, samples: usize, levels: &[usize], seed: u64) -> Result<TvScreenReport> {
    let gamma = tv_gamma(alpha);
    let gamma_checks: Vec<GammaCheck> = [0.1, 1.0, 10.0, alpha].iter().map(|&a| gamma_check(a)).collect();

    let half_width = 1.25;
    let band = 1e-6;
    let mut grid = GridCheck {
        points_per_axis: points,
        half_width,
        band,
        compared: 0,
        in_band: 0,
        disagreements: 0,
    };
    let mut max_identity_residual = 0.0f64;
    let step = if points > 1 { 2.0 * half_width / (points - 1) as f64 } else { 0.0 };
    for i in 0..points {
        for j in 0..points {
            let (x1, x2) = (-half_width + step * i as f64, -half_width + step * j as f64);
            let q = 1.0 - x1.powi(4) - x2.powi(4);
            if q.abs() < band {
                grid.in_band += 1;
                continue;
            }
            grid.compared += 1;
            let x = MatrixTuple::scalars(&[x1, x2]);
            let lifted = feasible_eps(alpha, gamma, &x, 1.0)?.is_some();
            if lifted != (q > 0.0) {
                grid.disagreements += 1;
            }
            max_identity_residual = max_identity_residual.max(lift_identity_residual(alpha, gamma, 1e-3, &x));
        }
    }

    let tv = tv_screen();
    let mut containment = ContainmentCheck {
        seed,
        levels: levels.to_vec(),
        samples,
        violations: 0,
        min_eps: f64::INFINITY,
    };
    let mut rng = sampling::rng(seed, 0x7f);
    for k in 0..samples {
        let n = levels[k % levels.len()];
        let x = interior_sample(&tv, &mut rng, n, 1.0)?;
        max_identity_residual = max_identity_residual.max(lift_identity_residual(alpha, gamma, 1e-3, &x));
        match feasible_eps(alpha, gamma, &x, 1.0)? {
            Some(e) => containment.min_eps = containment.min_eps.min(e),
            None => containment.violations += 1,
        }
    }

    let passed = gamma_checks.iter().all(|g| g.relative_error <= GAMMA_TOL)
        && grid.disagreements == 0
        && containment.violations == 0
        && max_identity_residual <= 1e-9;
    Ok(TvScreenReport {
        alpha,
        gamma_checks,
        grid,
        max_identity_residual,
        containment,
        passed,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SetAgreement {
    pub name: String,
    pub disagreements: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BandfReport {
    pub points_per_axis: usize,
    pub half_width: f64,
    pub band: f64,
    pub compared: usize,
    pub in_band: usize,
    pub sets: Vec<SetAgreement>,
    pub passed: bool,
}

/// Exit scale of the intersection of the two discs along `(x, y)`.
fn disc_exit_scale(x: f64, y: f64) -> f64 {
    let r2 = x * x + y * y;
    let tb = 1.0 / r2.sqrt();
    let tf = (x / 2.0 + (x * x / 4.0 + 4.0 * r2 * 15.0 / 16.0).sqrt()) / (2.0 * r2);
    tb.min(tf)
}

/// Level-one grid comparison of `D_{b⊕f}`, `D_{fbf}` and `D_{bfb}` with the
/// intersection of the two discs, computed in closed form.
pub fn bandf(points: usize) -> Result<BandfReport> {
    let half_width = 1.5;
    let band = 1e-6;
    let polys = [("b+f", b_plus_f()), ("fbf", fbf()), ("bfb", bfb())];
    let mut sets: Vec<SetAgreement> = polys
        .iter()
        .map(|(n, _)| SetAgreement {
            name: n.to_string(),
            disagreements: 0,
        })
        .collect();
    let (mut compared, mut in_band) = (0, 0);
    let step = if points > 1 { 2.0 * half_width / (points - 1) as f64 } else { 0.0 };
    for i in 0..points {
        for j in 0..points {
            let (x, y) = (-half_width + step * i as f64, -half_width + step * j as f64);
            let inside = if x == 0.0 && y == 0.0 {
                true
            } else {
                let t = disc_exit_scale(x, y);
                if (t - 1.0).abs() < band {
                    in_band += 1;
                    continue;
                }
                t > 1.0
            };
            compared += 1;
            let pt = MatrixTuple::scalars(&[x, y]);
            for ((_, p), s) in polys.iter().zip(sets.iter_mut()) {
                let v = ray_membership(p, &pt, RayOptions::default())?;
                if (v.status == MembershipStatus::Inside) != inside {
                    s.disagreements += 1;
                }
            }
        }
    }
    let passed = sets.iter().all(|s| s.disagreements == 0);
    Ok(BandfReport {
        points_per_axis: points,
        half_width,
        band,
        compared,
        in_band,
        sets,
        passed,
    })
}

/// Block matrix `[[I, 0, Y1], [0, I, Y2], [Y1, Y2, I]]` of the classical lift.
pub fn classical_l0(y1: &DMatrix<f64>, y2: &DMatrix<f64>) -> DMatrix<f64> {
    let n = y1.nrows();
    let id = DMatrix::identity(n, n);
    let mut m = block_diag(&[&id, &id, &id]);
    m.view_mut((0, 2 * n), (n, n)).copy_from(y1);
    m.view_mut((2 * n, 0), (n, n)).copy_from(y1);
    m.view_mut((n, 2 * n), (n, n)).copy_from(y2);
    m.view_mut((2 * n, n), (n, n)).copy_from(y2);
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_values() {
        for a in [0.1, 1.0, 10.0] {
            assert!(gamma_check(a).relative_error <= GAMMA_TOL);
        }
    }

    #[test]
    fn l0_at_origin_is_identity() {
        let l = tv_l0(0.7);
        assert_eq!(l.eval(&MatrixTuple::scalars(&[0.0, 0.0])).unwrap(), DMatrix::identity(3, 3));
        let half = DMatrix::from_element(1, 1, 0.5);
        assert!(is_pd(&classical_l0(&half, &half)));
        assert_eq!(classical_l0(&DMatrix::zeros(1, 1), &DMatrix::zeros(1, 1)), DMatrix::identity(3, 3));
    }

    #[test]
    fn small_tv_demo() {
        let r = tvscreen(1.0, 41, 30, &[1, 2, 3], 7).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn lift_rejects_outside_point() {
        let x = MatrixTuple::scalars(&[1.0, 0.5]);
        assert!(feasible_eps(1.0, tv_gamma(1.0), &x, 1.0).unwrap().is_none());
    }

    #[test]
    fn disc_scale_examples() {
        assert!((disc_exit_scale(0.5, 0.0) - 2.0).abs() < 1e-15);
        // f along -x: 15/16 - t/4 - t^2/4 = 0 at t = 3/2 for the point (-0.5, 0).
        assert!((disc_exit_scale(-0.5, 0.0) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn small_bandf_demo() {
        let r = bandf(21).unwrap();
        assert!(r.passed, "{r:?}");
    }
}
