//! Separating monic pencils at boundary points.
//!
//! Pipeline at a boundary point `Xb` of `D_p(n)`:
//!
//! 1. A linear functional `Λ(X) = sum_j tr(Λ_j X_j)` with `Λ(Xb) = 1` and
//!    `Λ < 1` on sampled interior points. Candidates are the normalized
//!    gradients of `X -> <p(X) u, u>` at `Xb` for near-kernel vectors `u` of
//!    `p(Xb)`; a small LP picks the convex combination with the largest
//!    sampled margin.
//! 2. A trace state `T` (PSD, trace one) with `T ⊗ I - sum_l B_l ⊗ Y_l ⪰ 0`
//!    on sampled interior `Y`, where `B_l(c, d) = Λ((c d^T + d c^T) e_l) / 2`.
//!    Positivity at `Xb` against `e = sum_j e_j ⊗ e_j` forces
//!    `T = sum_l Λ_l Xb_l`, which is tried first; alternating projection is
//!    the fallback.
//! 3. The pencil `T - L_B` compressed to the range of `T` and normalized to
//!    be monic.
//!
//! Every returned pencil carries a [`SeparationCertificate`] with the sampled
//! checks it passed. Sampling can only fail to find a pencil; an emitted
//! certificate is never weaker than its recorded checks.

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::boundary::BOUNDARY_RESIDUAL_TOL;
use crate::error::{Error, Result};
use crate::evaluate::{eval_poly, MatrixTuple, WordValues};
use crate::linalg::{self, frob_dot, kron, spectral_norm};
use crate::ncpoly::{NcPolynomial, Word};
use crate::pencil::MonicPencil;
use crate::sampling::{self, interior_sample};

/// `Λ(X) = sum_j tr(Λ_j X_j)` on level-`n` tuples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFunctional {
    #[serde(with = "crate::io::serde_dense::matrices")]
    pub coeffs: Vec<DMatrix<f64>>,
}

impl LinearFunctional {
    pub fn new(coeffs: Vec<DMatrix<f64>>) -> Result<Self> {
        let n = coeffs.first().map(|c| c.nrows()).ok_or(Error::Empty("functional coefficients"))?;
        for c in &coeffs {
            if c.nrows() != n || c.ncols() != n {
                return Err(Error::ShapeMismatch("functional coefficients differ in shape".into()));
            }
            if !linalg::is_symmetric(c, 1e-10) {
                return Err(Error::NotSymmetric);
            }
        }
        Ok(LinearFunctional { coeffs })
    }

    pub fn level(&self) -> usize {
        self.coeffs[0].nrows()
    }

    pub fn g(&self) -> usize {
        self.coeffs.len()
    }

    pub fn apply(&self, x: &MatrixTuple) -> f64 {
        self.coeffs.iter().zip(x.matrices()).map(|(l, m)| frob_dot(l, m)).sum()
    }

    /// `Λ` applied to the tuple with `m` in slot `l` and zeros elsewhere.
    pub fn apply_slot(&self, l: usize, m: &DMatrix<f64>) -> f64 {
        frob_dot(&self.coeffs[l], m)
    }

    fn combine(parts: &[LinearFunctional], weights: &[f64]) -> Self {
        let mut coeffs: Vec<DMatrix<f64>> = parts[0].coeffs.iter().map(|c| DMatrix::zeros(c.nrows(), c.ncols())).collect();
        for (p, w) in parts.iter().zip(weights) {
            for (acc, c) in coeffs.iter_mut().zip(&p.coeffs) {
                *acc += c * *w;
            }
        }
        LinearFunctional { coeffs }
    }
}

/// `ε = min{1, Δ / (τ (M + 1))}` with `M = max_{1<=|w|<=d} ||p_w||`,
/// `τ = sum_{j=1}^d g^j` and `Δ` the smallest `|eigenvalue|` of `p(0)`.
/// The `ε`-neighbourhood of `0` lies in `D_p`. Constant `p` gives `1`.
pub fn epsilon_bound(p: &NcPolynomial) -> Result<f64> {
    let c0 = p.constant_term();
    if !c0.is_square() || c0.nrows() == 0 {
        return Err(Error::ShapeMismatch("epsilon bound needs a square polynomial".into()));
    }
    let delta = linalg::sym_eigenvalues(&c0).iter().fold(f64::INFINITY, |a, x| a.min(x.abs()));
    if delta <= 1e-12 * (1.0 + spectral_norm(&c0)) {
        return Err(Error::SingularAtZero);
    }
    let d = p.degree().max(0) as u32;
    let g = p.g() as f64;
    let tau: f64 = (1..=d).map(|j| g.powi(j as i32)).sum();
    if tau == 0.0 {
        return Ok(1.0);
    }
    let m = p
        .terms()
        .filter(|(w, _)| !w.is_empty())
        .map(|(_, c)| spectral_norm(c))
        .fold(0.0, f64::max);
    Ok((delta / (tau * (m + 1.0))).min(1.0))
}

/// Gradient of `X -> <p(X) u, u>` at `Xb` as a functional.
fn gradient_functional(p: &NcPolynomial, xb: &MatrixTuple, u: &DVector<f64>) -> LinearFunctional {
    let n = xb.level();
    let delta = p.rows();
    let umat = DMatrix::from_fn(n, delta, |i, a| u[a * n + i]);
    let mut words = WordValues::new(xb);
    let mut coeffs = vec![DMatrix::zeros(n, n); p.g()];
    for (w, c) in p.terms() {
        if w.is_empty() {
            continue;
        }
        let mid = &umat * c.transpose() * umat.transpose();
        let letters = w.letters();
        for k in 0..letters.len() {
            let prefix = words.get(&Word::new(letters[..k].to_vec())).clone();
            let suffix = words.get(&Word::new(letters[k + 1..].to_vec())).clone();
            let kmat = suffix * &mid * prefix;
            coeffs[letters[k]] += linalg::symmetrize(&kmat);
        }
    }
    LinearFunctional { coeffs }
}

/// Orthonormal near-kernel vectors of `p(X)`, smallest `|eigenvalue|` first.
fn near_kernel(px: &DMatrix<f64>, rel_tol: f64, max_vectors: usize) -> Vec<DVector<f64>> {
    let (vals, vecs) = linalg::sym_eigen(px);
    let scale = 1.0 + vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].abs().total_cmp(&vals[b].abs()));
    order
        .iter()
        .enumerate()
        .take_while(|(k, &i)| *k == 0 || vals[i].abs() <= rel_tol * scale)
        .take(max_vectors)
        .map(|(_, &i)| vecs.column(i).into_owned())
        .collect()
}

/// Interior sample fraction for fitting.
const FIT_FRACTION: f64 = 0.95;
/// Interior sample fraction for verification, closer to the boundary.
const VERIFY_FRACTION: f64 = 0.999;
/// Most near-kernel vectors used to build candidate functionals.
const MAX_KERNEL_VECTORS: usize = 6;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SupportReport {
    pub functional: LinearFunctional,
    pub kernel_dim: usize,
    pub candidates: usize,
    pub weights: Vec<f64>,
    /// `1 - max Λ(Y)` over the fresh verification batch.
    pub verified_margin: f64,
}

fn check_boundary(p: &NcPolynomial, xb: &MatrixTuple) -> Result<DMatrix<f64>> {
    let px = eval_poly(p, xb)?;
    let vals = linalg::sym_eigenvalues(&px);
    let scale = 1.0 + vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let gap = vals.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    let allowed = BOUNDARY_RESIDUAL_TOL * scale;
    if gap > allowed {
        return Err(Error::NotOnBoundary { residual: gap, allowed });
    }
    Ok(px)
}

/// Supporting functional at `Xb` with `Λ(Xb) = 1`, see the module docs.
pub fn supporting_functional(p: &NcPolynomial, xb: &MatrixTuple, samples: usize, seed: u64) -> Result<LinearFunctional> {
    Ok(supporting_functional_report(p, xb, samples, seed)?.functional)
}

pub fn supporting_functional_report(p: &NcPolynomial, xb: &MatrixTuple, samples: usize, seed: u64) -> Result<SupportReport> {
    let px = check_boundary(p, xb)?;
    let kernel = near_kernel(&px, BOUNDARY_RESIDUAL_TOL, MAX_KERNEL_VECTORS);
    let mut gens: Vec<DVector<f64>> = kernel.clone();
    for i in 0..kernel.len() {
        for j in (i + 1)..kernel.len() {
            gens.push((&kernel[i] + &kernel[j]) / 2f64.sqrt());
            gens.push((&kernel[i] - &kernel[j]) / 2f64.sqrt());
        }
    }
    let xnorm = xb.frobenius_norm();
    let mut cands = Vec::new();
    let mut basic = Vec::new();
    for (k, u) in gens.iter().enumerate() {
        let grad = gradient_functional(p, xb, u);
        let at_xb = grad.apply(xb);
        let gnorm: f64 = grad.coeffs.iter().map(|c| c.norm_squared()).sum::<f64>().sqrt();
        if at_xb.abs() <= 1e-10 * gnorm * (1.0 + xnorm) || gnorm == 0.0 {
            continue;
        }
        if k < kernel.len() {
            basic.push(cands.len());
        }
        cands.push(LinearFunctional {
            coeffs: grad.coeffs.iter().map(|c| c / at_xb).collect(),
        });
    }
    if cands.is_empty() {
        return Err(Error::SeparationFailed("all kernel gradients vanish at the boundary point".into()));
    }

    let n = xb.level();
    let mut rng = sampling::rng(seed, 0x5e9a);
    let fit: Vec<MatrixTuple> = (0..samples)
        .map(|_| interior_sample(p, &mut rng, n, FIT_FRACTION))
        .collect::<Result<_>>()?;
    let values: Vec<Vec<f64>> = fit.iter().map(|y| cands.iter().map(|h| h.apply(y)).collect()).collect();
    let margin_of = |w: &[f64]| -> f64 {
        values
            .iter()
            .map(|row| 1.0 - row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    };

    let k = cands.len();
    let mut weights = if k == 1 {
        vec![1.0]
    } else {
        let mut lp = Problem::new(OptimizationDirection::Maximize);
        let cs: Vec<_> = (0..k).map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
        let m = lp.add_var(1.0, (-1e6, 1.0));
        lp.add_constraint(cs.iter().map(|c| (*c, 1.0)), ComparisonOp::Eq, 1.0);
        for row in &values {
            let mut expr: Vec<_> = cs.iter().zip(row).map(|(c, v)| (*c, *v)).collect();
            expr.push((m, 1.0));
            lp.add_constraint(expr, ComparisonOp::Le, 1.0);
        }
        let sol = lp
            .solve()
            .map_err(|e| Error::SeparationFailed(format!("LP failed: {e}")))?
            .into_solution()
            .map_err(|_| Error::SeparationFailed("LP interrupted".into()))?;
        let raw: Vec<f64> = cs.iter().map(|c| sol.var_value(*c).max(0.0)).collect();
        let total: f64 = raw.iter().sum();
        raw.iter().map(|w| w / total).collect::<Vec<f64>>()
    };
    // LP optima sit at vertices and use few candidates. Averaging with the
    // uniform mix of the basic candidates keeps every kernel direction in
    // play whenever that mix also separates the samples.
    if basic.len() > 1 {
        let mut uniform = vec![0.0; k];
        for &i in &basic {
            uniform[i] = 1.0 / basic.len() as f64;
        }
        if margin_of(&uniform) > 0.0 && margin_of(&weights) > 0.0 {
            weights = weights.iter().zip(&uniform).map(|(a, b)| 0.5 * (a + b)).collect();
        }
    }
    let functional = LinearFunctional::combine(&cands, &weights);

    let mut vrng = sampling::rng(seed, 0x5e9b);
    let mut verified_margin = f64::INFINITY;
    for _ in 0..samples.max(1) {
        let y = interior_sample(p, &mut vrng, n, VERIFY_FRACTION)?;
        verified_margin = verified_margin.min(1.0 - functional.apply(&y));
    }
    if verified_margin <= 0.0 {
        return Err(Error::SeparationFailed(format!(
            "functional fails on a fresh interior sample (margin {verified_margin:e})"
        )));
    }
    Ok(SupportReport {
        functional,
        kernel_dim: kernel.len(),
        candidates: k,
        weights,
        verified_margin,
    })
}

/// `B_l(c, d) = Λ((c d^T + d c^T) e_l) / 2`, assembled entrywise on standard
/// basis vectors.
pub fn bilinear_coefficients(lambda: &LinearFunctional) -> Vec<DMatrix<f64>> {
    let n = lambda.level();
    (0..lambda.g())
        .map(|l| {
            DMatrix::from_fn(n, n, |c, d| {
                let mut m = DMatrix::zeros(n, n);
                m[(c, d)] += 1.0;
                m[(d, c)] += 1.0;
                0.5 * lambda.apply_slot(l, &m)
            })
        })
        .collect()
}

/// `T ⊗ I_m - sum_l B_l ⊗ Y_l`.
pub fn state_pencil(t: &DMatrix<f64>, b: &[DMatrix<f64>], y: &MatrixTuple) -> DMatrix<f64> {
    let m = y.level();
    let mut out = kron(t, &DMatrix::identity(m, m));
    for (bl, yl) in b.iter().zip(y.matrices()) {
        out -= kron(bl, yl);
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceStateOptions {
    pub max_level: usize,
    pub n_constraints: usize,
    pub iterations: usize,
    pub margin_tol: f64,
    pub seed: u64,
}

impl Default for TraceStateOptions {
    fn default() -> Self {
        TraceStateOptions {
            max_level: 4,
            n_constraints: 2000,
            iterations: 5000,
            margin_tol: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceState {
    #[serde(with = "crate::io::serde_dense::matrix")]
    pub t: DMatrix<f64>,
    /// Smallest eigenvalue of `T ⊗ I - sum B_l ⊗ Y` over the fresh batch,
    /// i.e. the minimum of `tr(C T C^T) - Λ(C^T Y C)` over unit-Frobenius `C`.
    pub achieved_margin: f64,
    /// Projection sweeps used; zero when the anchored state was accepted.
    pub iterations: usize,
    pub constraints: usize,
}

struct HalfSpace {
    g: DMatrix<f64>,
    b: f64,
    gnorm2: f64,
}

impl HalfSpace {
    /// `<T, C^T C> >= Λ(C^T Y C)` for an `m x n` matrix `C`.
    fn new(lambda: &LinearFunctional, y: &MatrixTuple, c: &DMatrix<f64>) -> Self {
        let g = c.transpose() * c;
        let b = lambda
            .coeffs
            .iter()
            .zip(y.matrices())
            .map(|(l, yl)| frob_dot(l, &(c.transpose() * yl * c)))
            .sum();
        let gnorm2 = g.norm_squared();
        HalfSpace { g, b, gnorm2 }
    }

    fn slack(&self, t: &DMatrix<f64>) -> f64 {
        frob_dot(t, &self.g) - self.b
    }
}

/// Most violated unit-Frobenius `C` (as `m x n`) for `Y`, with its value.
fn most_violated(t: &DMatrix<f64>, b: &[DMatrix<f64>], y: &MatrixTuple) -> (f64, DMatrix<f64>) {
    let n = t.nrows();
    let m = y.level();
    let (vals, vecs) = linalg::sym_eigen(&state_pencil(t, b, y));
    let gamma = vecs.column(0);
    // gamma index i * m + j  ->  Γ (n x m); C = Γ^T.
    let c = DMatrix::from_fn(m, n, |j, i| gamma[i * m + j]);
    (vals[0], c)
}

/// A trace state for `Λ`: `T` in the spectraplex with
/// `tr(C T C^T) >= Λ(C^T Y C)` on sampled interior `Y` of levels
/// `1..=max_level` and contractions `C`.
///
/// With an `anchor` boundary point the forced candidate
/// `T = sym(sum_l Λ_l Xb_l)` is checked first and warm-starts the
/// projections otherwise.
pub fn trace_state(
    lambda: &LinearFunctional,
    p: &NcPolynomial,
    opts: &TraceStateOptions,
    anchor: Option<&MatrixTuple>,
) -> Result<TraceState> {
    let n = lambda.level();
    let b = bilinear_coefficients(lambda);
    let mut rng = sampling::rng(opts.seed, 0x7a11);
    let max_level = opts.max_level.max(1);
    let mut ys = Vec::with_capacity(opts.n_constraints);
    let mut spaces = Vec::with_capacity(opts.n_constraints);
    for _ in 0..opts.n_constraints {
        let m = rand::Rng::gen_range(&mut rng, 1..=max_level);
        let y = interior_sample(p, &mut rng, m, FIT_FRACTION)?;
        let c = sampling::random_contraction(&mut rng, m, n);
        spaces.push(HalfSpace::new(lambda, &y, &c));
        ys.push(y);
    }

    let mut t = match anchor {
        Some(xb) => {
            let mut s = DMatrix::zeros(n, n);
            for (l, x) in lambda.coeffs.iter().zip(xb.matrices()) {
                s += l * x;
            }
            linalg::project_spectraplex(&linalg::symmetrize(&s))
        }
        None => DMatrix::identity(n, n) / n as f64,
    };
    let tol = opts.margin_tol;
    let mut iterations = 0;
    let mut feasible = false;
    while iterations <= opts.iterations {
        let mut violated = false;
        for h in &spaces {
            let s = h.slack(&t);
            if s < -tol && h.gnorm2 > 0.0 {
                violated = true;
                t += &h.g * (-s / h.gnorm2);
            }
        }
        if violated {
            t = linalg::project_spectraplex(&t);
            iterations += 1;
            continue;
        }
        // All sampled half-spaces hold: add the most violated cut per Y.
        let mut cut = false;
        for y in &ys {
            let (val, c) = most_violated(&t, &b, y);
            if val < -tol {
                spaces.push(HalfSpace::new(lambda, y, &c));
                cut = true;
            }
        }
        if !cut {
            feasible = true;
            break;
        }
        iterations += 1;
    }
    if !feasible {
        return Err(Error::StateNotFound(format!(
            "no state satisfies the sampled constraints after {} sweeps",
            opts.iterations
        )));
    }

    let mut vrng = sampling::rng(opts.seed, 0x7a12);
    let mut achieved_margin = f64::INFINITY;
    for _ in 0..(opts.n_constraints / 4).max(50) {
        let m = rand::Rng::gen_range(&mut vrng, 1..=max_level);
        let y = interior_sample(p, &mut vrng, m, VERIFY_FRACTION)?;
        achieved_margin = achieved_margin.min(most_violated(&t, &b, &y).0);
    }
    if achieved_margin < -tol {
        return Err(Error::StateNotFound(format!(
            "state violates a fresh sample (margin {achieved_margin:e})"
        )));
    }
    Ok(TraceState {
        t,
        achieved_margin,
        iterations,
        constraints: spaces.len(),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeparationConfig {
    pub seed: u64,
    /// Interior samples for fitting and verifying the functional.
    pub functional_samples: usize,
    pub trace: TraceStateOptions,
    /// Interior samples per level for the certificate.
    pub certificate_samples: usize,
    pub certificate_levels: Vec<usize>,
    /// Relative eigenvalue cutoff for the range of `T`.
    pub rank_cut: f64,
}

impl Default for SeparationConfig {
    fn default() -> Self {
        SeparationConfig {
            seed: 0,
            functional_samples: 200,
            trace: TraceStateOptions::default(),
            certificate_samples: 200,
            certificate_levels: vec![1, 2, 3, 4],
            rank_cut: 1e-9,
        }
    }
}

impl SeparationConfig {
    pub fn with_seed(seed: u64) -> Self {
        let mut c = SeparationConfig {
            seed,
            ..Default::default()
        };
        c.trace.seed = seed;
        c
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeparationCertificate {
    pub pencil: MonicPencil,
    pub xb: MatrixTuple,
    pub seed: u64,
    /// `λ_min(L(Xb))`.
    pub boundary_singularity: f64,
    /// Minimum of `λ_min(L(Y))` over the interior samples.
    pub interior_margin: f64,
    pub interior_samples: usize,
    pub sampled_levels: Vec<usize>,
    pub epsilon: f64,
    pub max_coeff_norm: f64,
    /// Factor applied to the coefficients so that `L(Xb)` is exactly singular.
    pub scale_correction: f64,
    pub functional: LinearFunctional,
    pub trace_margin: f64,
    pub kernel_dim: usize,
}

/// Outcome of re-checking a certificate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateCheck {
    pub boundary_singularity: f64,
    pub interior_margin: f64,
    pub max_coeff_norm: f64,
    pub coefficient_bound: f64,
    pub passed: bool,
}

/// Tolerance on `|λ_min(L(Xb))|`.
pub const SINGULARITY_TOL: f64 = 1e-6;

fn interior_margin(
    p: &NcPolynomial,
    l: &MonicPencil,
    levels: &[usize],
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let mut margin = f64::INFINITY;
    for &n in levels {
        let mut rng = sampling::rng(seed, 0xce00 + n as u64);
        for _ in 0..samples {
            let y = interior_sample(p, &mut rng, n, FIT_FRACTION)?;
            margin = margin.min(l.min_eigenvalue(&y)?);
        }
    }
    Ok(margin)
}

/// Checks a pencil against `p` at `Xb`: singularity at `Xb`, positivity on
/// fresh interior samples, and `||A_j|| <= 1/ε + 1e-6`.
pub fn check_pencil(
    p: &NcPolynomial,
    l: &MonicPencil,
    xb: &MatrixTuple,
    levels: &[usize],
    samples: usize,
    seed: u64,
) -> Result<CertificateCheck> {
    let boundary_singularity = l.min_eigenvalue(xb)?;
    let interior_margin = interior_margin(p, l, levels, samples, seed)?;
    let coefficient_bound = 1.0 / epsilon_bound(p)? + 1e-6;
    let max_coeff_norm = l.max_coeff_norm();
    Ok(CertificateCheck {
        boundary_singularity,
        interior_margin,
        max_coeff_norm,
        coefficient_bound,
        passed: boundary_singularity.abs() <= SINGULARITY_TOL
            && interior_margin > 0.0
            && max_coeff_norm <= coefficient_bound,
    })
}

impl SeparationCertificate {
    /// Re-runs the three checks on fresh samples.
    pub fn verify(&self, p: &NcPolynomial, levels: &[usize], samples: usize, seed: u64) -> Result<CertificateCheck> {
        check_pencil(p, &self.pencil, &self.xb, levels, samples, seed)
    }
}

/// Monic pencil `D^{-1/2} Q^T (T - L_B) Q D^{-1/2}` on the range of `T`.
pub fn monic_from_state(t: &DMatrix<f64>, b: &[DMatrix<f64>], rank_cut: f64) -> Result<MonicPencil> {
    let (vals, vecs) = linalg::sym_eigen(t);
    let vmax = vals.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > rank_cut * vmax).collect();
    if keep.is_empty() {
        return Err(Error::StateNotFound("trace state has empty range".into()));
    }
    let q = DMatrix::from_columns(&keep.iter().map(|&i| vecs.column(i).into_owned()).collect::<Vec<_>>());
    let dinv = DMatrix::from_diagonal(&DVector::from_iterator(keep.len(), keep.iter().map(|&i| 1.0 / vals[i].sqrt())));
    let coeffs = b
        .iter()
        .map(|bl| linalg::symmetrize(&(-(&dinv * q.transpose() * bl * &q * &dinv))))
        .collect();
    MonicPencil::new(coeffs)
}

/// Separating monic pencil at the boundary point `Xb`, with certificate.
pub fn separating_pencil(p: &NcPolynomial, xb: &MatrixTuple, config: &SeparationConfig) -> Result<SeparationCertificate> {
    let support = supporting_functional_report(p, xb, config.functional_samples, config.seed)?;
    let lambda = support.functional;
    let state = trace_state(&lambda, p, &config.trace, Some(xb))?;
    let b = bilinear_coefficients(&lambda);
    let mut pencil = monic_from_state(&state.t, &b, config.rank_cut)?;

    let mu = linalg::min_eigenvalue(&pencil.linear_part(xb)?);
    let mut scale_correction = 1.0;
    if mu < 0.0 {
        let s = -1.0 / mu;
        if (s - 1.0).abs() <= 1e-4 {
            pencil = MonicPencil::new(pencil.coeffs().iter().map(|a| a * s).collect())?;
            scale_correction = s;
        }
    }

    let check = check_pencil(
        p,
        &pencil,
        xb,
        &config.certificate_levels,
        config.certificate_samples,
        config.seed,
    )?;
    if !check.passed {
        return Err(Error::SeparationFailed(format!(
            "certificate checks failed: boundary {:e}, interior margin {:e}, coefficient norm {:e} (bound {:e})",
            check.boundary_singularity, check.interior_margin, check.max_coeff_norm, check.coefficient_bound
        )));
    }
    Ok(SeparationCertificate {
        pencil,
        xb: xb.clone(),
        seed: config.seed,
        boundary_singularity: check.boundary_singularity,
        interior_margin: check.interior_margin,
        interior_samples: config.certificate_samples * config.certificate_levels.len(),
        sampled_levels: config.certificate_levels.clone(),
        epsilon: epsilon_bound(p)?,
        max_coeff_norm: check.max_coeff_norm,
        scale_correction,
        functional: lambda,
        trace_margin: state.achieved_margin,
        kernel_dim: support.kernel_dim,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval() -> NcPolynomial {
        NcPolynomial::scalar(1, &[(1.0, &[]), (-1.0, &[0, 0])]).unwrap()
    }

    fn ball() -> NcPolynomial {
        NcPolynomial::scalar(2, &[(1.0, &[]), (-1.0, &[0, 0]), (-1.0, &[1, 1])]).unwrap()
    }

    fn quick(seed: u64) -> SeparationConfig {
        let mut c = SeparationConfig::with_seed(seed);
        c.functional_samples = 50;
        c.trace.n_constraints = 100;
        c.certificate_samples = 30;
        c
    }

    #[test]
    fn epsilon_examples() {
        assert_eq!(epsilon_bound(&interval()).unwrap(), 0.25);
        assert_eq!(epsilon_bound(&NcPolynomial::identity(2, 1)).unwrap(), 1.0);
        let tv = NcPolynomial::scalar(2, &[(1.0, &[]), (-1.0, &[0, 0, 0, 0]), (-1.0, &[1, 1, 1, 1])]).unwrap();
        assert!((epsilon_bound(&tv).unwrap() - 1.0 / 60.0).abs() < 1e-15);
    }

    #[test]
    fn interval_functional_is_x() {
        let l = supporting_functional(&interval(), &MatrixTuple::scalars(&[1.0]), 50, 1).unwrap();
        assert!((l.coeffs[0][(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ball_functional_at_axis_point() {
        let l = supporting_functional(&ball(), &MatrixTuple::scalars(&[1.0, 0.0]), 50, 2).unwrap();
        assert!((l.coeffs[0][(0, 0)] - 1.0).abs() < 1e-12);
        assert!(l.coeffs[1][(0, 0)].abs() < 1e-12);
    }

    #[test]
    fn bilinear_form_equals_functional_coefficients() {
        let l = LinearFunctional::new(vec![
            DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, -2.0]),
            DMatrix::from_row_slice(2, 2, &[0.0, 1.5, 1.5, 0.5]),
        ])
        .unwrap();
        let b = bilinear_coefficients(&l);
        assert!((&b[0] - &l.coeffs[0]).abs().max() < 1e-15);
        assert!((&b[1] - &l.coeffs[1]).abs().max() < 1e-15);
    }

    #[test]
    fn interval_pencil_is_one_minus_x() {
        let cert = separating_pencil(&interval(), &MatrixTuple::scalars(&[1.0]), &quick(3)).unwrap();
        assert_eq!(cert.pencil.size(), 1);
        assert!((cert.pencil.coeffs()[0][(0, 0)] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn ball_pencil_at_axis_point() {
        let cert = separating_pencil(&ball(), &MatrixTuple::scalars(&[1.0, 0.0]), &quick(4)).unwrap();
        assert_eq!(cert.pencil.size(), 1);
        assert!((cert.pencil.coeffs()[0][(0, 0)] + 1.0).abs() < 1e-12);
        assert!(cert.pencil.coeffs()[1][(0, 0)].abs() < 1e-12);
    }

    #[test]
    fn trace_state_level_one_is_one() {
        let l = supporting_functional(&interval(), &MatrixTuple::scalars(&[1.0]), 20, 5).unwrap();
        let opts = TraceStateOptions {
            n_constraints: 50,
            ..Default::default()
        };
        let t = trace_state(&l, &interval(), &opts, None).unwrap();
        assert!((t.t[(0, 0)] - 1.0).abs() < 1e-15);
        assert!(t.achieved_margin >= 0.0);
    }

    #[test]
    fn level_two_interval_pencil() {
        let x = MatrixTuple::new(vec![DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.5]))]).unwrap();
        let cert = separating_pencil(&interval(), &x, &quick(6)).unwrap();
        assert!(cert.boundary_singularity.abs() < 1e-9);
        assert!(cert.interior_margin > 0.0);
    }
}
