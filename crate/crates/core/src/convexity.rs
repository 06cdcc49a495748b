//! Randomized search for violations of matrix convexity.
//!
//! A matrix convex set is closed under `X -> C^T X C` for contractions `C`
//! and under convex combinations at each level. The falsifiers sample points
//! of `D_p` near its boundary and look for a compression or a midpoint that
//! leaves `D_p`. A witness stores everything needed to replay the check.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluate::{ray_membership, MatrixTuple, MembershipStatus, RayOptions};
use crate::linalg::{psd_sqrt, spectral_norm, symmetrize};
use crate::ncpoly::NcPolynomial;
use crate::sampling::{self, Region};

/// `[[C, (I - C C^T)^½], [-(I - C^T C)^½, C^T]]` for an `m x k` contraction.
pub fn julia_unitary(c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let norm = spectral_norm(c);
    if norm > 1.0 + 1e-12 {
        return Err(Error::NotContraction(norm));
    }
    let (m, k) = c.shape();
    let left = psd_sqrt(&symmetrize(&(DMatrix::identity(m, m) - c * c.transpose())));
    let right = psd_sqrt(&symmetrize(&(DMatrix::identity(k, k) - c.transpose() * c)));
    let mut u = DMatrix::zeros(m + k, k + m);
    u.view_mut((0, 0), (m, k)).copy_from(c);
    u.view_mut((0, k), (m, m)).copy_from(&left);
    u.view_mut((m, 0), (k, k)).copy_from(&(-right));
    u.view_mut((m, k), (k, m)).copy_from(&c.transpose());
    Ok(u)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FalsifierConfig {
    pub seed: u64,
    /// Levels of the sampled points, cycled across restarts.
    pub levels: Vec<usize>,
    /// Total number of candidate evaluations.
    pub budget: usize,
    /// Points are placed at this fraction of their exit scale.
    pub inner_fraction: f64,
    /// Evaluations without improvement before a restart.
    pub patience: usize,
    /// A candidate is reported once its image scale drops below `1 - margin`.
    pub margin: f64,
    pub ray: RayOptions,
}

impl Default for FalsifierConfig {
    fn default() -> Self {
        FalsifierConfig {
            seed: 0,
            levels: vec![2, 3, 4],
            budget: 100_000,
            inner_fraction: 0.999,
            patience: 150,
            margin: 1e-3,
            ray: RayOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WitnessKind {
    /// `C^T X C` leaves the set.
    Compression {
        x: MatrixTuple,
        #[serde(with = "crate::io::serde_dense::matrix")]
        c: DMatrix<f64>,
    },
    /// `(X + Y) / 2` leaves the set.
    Midpoint { x: MatrixTuple, y: MatrixTuple },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityWitness {
    pub level: usize,
    pub trial: usize,
    #[serde(flatten)]
    pub kind: WitnessKind,
    /// The image point that lies outside.
    pub image: MatrixTuple,
    /// Critical scale of the image along its own ray; below one means outside.
    pub image_scale: f64,
}

impl ConvexityWitness {
    /// Recomputes the image from the stored inputs and checks that the inputs
    /// are inside and the image is outside.
    pub fn replay(&self, p: &NcPolynomial, opts: RayOptions) -> Result<bool> {
        let (inputs, image) = match &self.kind {
            WitnessKind::Compression { x, c } => {
                if spectral_norm(c) > 1.0 + 1e-12 {
                    return Ok(false);
                }
                (vec![x.clone()], x.congruence(c)?)
            }
            WitnessKind::Midpoint { x, y } => (vec![x.clone(), y.clone()], x.add(y)?.scale(0.5)),
        };
        for x in &inputs {
            if ray_membership(p, x, opts)?.status != MembershipStatus::Inside {
                return Ok(false);
            }
        }
        Ok(ray_membership(p, &image, opts)?.status == MembershipStatus::Outside)
    }

    /// A midpoint witness at level `n` as a compression witness at level
    /// `2n`: `(X + Y) / 2 = V^T (X ⊕ Y) V` for the isometry `V = [I; I] / √2`.
    pub fn as_compression(&self) -> Result<ConvexityWitness> {
        match &self.kind {
            WitnessKind::Compression { .. } => Ok(self.clone()),
            WitnessKind::Midpoint { x, y } => {
                let n = x.level();
                let mut v = DMatrix::zeros(2 * n, n);
                for i in 0..n {
                    v[(i, i)] = std::f64::consts::FRAC_1_SQRT_2;
                    v[(n + i, i)] = std::f64::consts::FRAC_1_SQRT_2;
                }
                let big = x.direct_sum(y)?;
                Ok(ConvexityWitness {
                    level: 2 * n,
                    trial: self.trial,
                    image: big.congruence(&v)?,
                    kind: WitnessKind::Compression { x: big, c: v },
                    image_scale: self.image_scale,
                })
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub seed: u64,
    pub trials: usize,
    pub budget: usize,
    pub witness: Option<ConvexityWitness>,
}

fn symmetric_from(params: &[f64], n: usize) -> DMatrix<f64> {
    symmetrize(&DMatrix::from_column_slice(n, n, params))
}

/// Direction from `g n^2` raw parameters, placed at `fraction` of its exit scale.
fn point_from(p: &NcPolynomial, params: &[f64], n: usize, fraction: f64) -> Result<Option<MatrixTuple>> {
    let mats = params.chunks(n * n).map(|c| symmetric_from(c, n)).collect();
    let d = MatrixTuple::from_symmetrized(mats)?;
    let norm = d.frobenius_norm();
    if norm == 0.0 {
        return Ok(None);
    }
    let d = d.scale(1.0 / norm);
    Ok(Region::exit_scale(p, &d)?.map(|t| d.scale(fraction * t)))
}

/// Candidate image for a parameter vector, or `None` when the inputs are not
/// usable (for example an unbounded ray).
type Builder<'a> = dyn FnMut(&[f64], usize, usize) -> Result<Option<(WitnessKind, MatrixTuple)>> + 'a;

/// Restarted (1+1) evolution strategy on the exit scale of the image; a
/// scale below one means the image left the set.
fn search(
    p: &NcPolynomial,
    config: &FalsifierConfig,
    stream: u64,
    dim: &dyn Fn(usize) -> (usize, usize),
    build: &mut Builder<'_>,
) -> Result<ConvexityReport> {
    if config.levels.is_empty() {
        return Err(Error::InvalidInput("no levels to search".into()));
    }
    let mut rng = sampling::rng(config.seed, stream);
    let normal = rand_distr::StandardNormal;
    let mut evals = 0;
    let mut restart = 0;
    let mut score = |params: &[f64], n: usize, k: usize, evals: &mut usize| -> Result<(f64, Option<(WitnessKind, MatrixTuple)>)> {
        *evals += 1;
        let Some((kind, image)) = build(params, n, k)? else {
            return Ok((f64::INFINITY, None));
        };
        let t = Region::exit_scale(p, &image)?.unwrap_or(f64::INFINITY);
        Ok((t, Some((kind, image))))
    };
    while evals < config.budget {
        let n = config.levels[restart % config.levels.len()];
        restart += 1;
        let (len, k) = dim(n);
        let k = if k == 0 { rng.gen_range(2.min(n)..=n) } else { k };
        let mut x: Vec<f64> = (0..len).map(|_| rng.sample(normal)).collect();
        let (mut best, mut cand) = score(&x, n, k, &mut evals)?;
        let mut sigma = 0.3;
        let mut stale = 0;
        while evals < config.budget && stale < config.patience && sigma > 1e-6 {
            if best < 1.0 - config.margin {
                if let Some((kind, image)) = cand.take() {
                    let witness = ConvexityWitness {
                        level: n,
                        trial: evals,
                        kind,
                        image,
                        image_scale: best,
                    };
                    if witness.replay(p, config.ray)? {
                        return Ok(ConvexityReport {
                            seed: config.seed,
                            trials: evals,
                            budget: config.budget,
                            witness: Some(witness),
                        });
                    }
                }
            }
            let y: Vec<f64> = x.iter().map(|v| v + sigma * rng.sample::<f64, _>(normal)).collect();
            let (s, c) = score(&y, n, k, &mut evals)?;
            if s < best {
                // Creeping progress does not postpone a restart.
                if s < best - 1e-6 {
                    stale = 0;
                } else {
                    stale += 1;
                }
                x = y;
                best = s;
                cand = c;
                sigma *= 1.5;
            } else {
                sigma *= 0.9;
                stale += 1;
            }
        }
    }
    Ok(ConvexityReport {
        seed: config.seed,
        trials: evals,
        budget: config.budget,
        witness: None,
    })
}

/// Searches for `X` in `D_p(n)` and an `n x k` contraction `C` (`2 <= k <= n`)
/// with `C^T X C` outside `D_p(k)`.
pub fn contraction_closure_check(p: &NcPolynomial, config: &FalsifierConfig) -> Result<ConvexityReport> {
    let g = p.g();
    let fraction = config.inner_fraction;
    let mut build = |params: &[f64], n: usize, k: usize| -> Result<Option<(WitnessKind, MatrixTuple)>> {
        let (xp, cp) = params.split_at(g * n * n);
        let Some(x) = point_from(p, xp, n, fraction)? else {
            return Ok(None);
        };
        let c = DMatrix::from_column_slice(n, k, &cp[..n * k]);
        let norm = spectral_norm(&c);
        if norm == 0.0 {
            return Ok(None);
        }
        let c = c / norm;
        let image = x.congruence(&c)?;
        Ok(Some((WitnessKind::Compression { x, c }, image)))
    };
    search(p, config, 0xc0c0, &|n| (g * n * n + n * n, 0), &mut build)
}

/// Searches for `X, Y` in `D_p(n)` with `(X + Y) / 2` outside `D_p(n)`.
pub fn midpoint_falsifier(p: &NcPolynomial, config: &FalsifierConfig) -> Result<ConvexityReport> {
    let g = p.g();
    let fraction = config.inner_fraction;
    let mut build = |params: &[f64], n: usize, _k: usize| -> Result<Option<(WitnessKind, MatrixTuple)>> {
        let (a, b) = params.split_at(g * n * n);
        let (Some(x), Some(y)) = (point_from(p, a, n, fraction)?, point_from(p, b, n, fraction)?) else {
            return Ok(None);
        };
        let image = x.add(&y)?.scale(0.5);
        Ok(Some((WitnessKind::Midpoint { x, y }, image)))
    };
    search(p, config, 0x3d3d, &|n| (2 * g * n * n, n), &mut build)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{nc_ball, tv_screen};
    use crate::sampling::{random_contraction, random_direction};

    #[test]
    fn julia_is_orthogonal() {
        let mut r = sampling::rng(1, 0);
        for (m, k) in [(1, 1), (2, 3), (3, 2), (4, 4)] {
            let c = random_contraction(&mut r, m, k);
            let u = julia_unitary(&c).unwrap();
            assert!((u.transpose() * &u - DMatrix::identity(m + k, m + k)).abs().max() < 1e-10);
        }
    }

    #[test]
    fn julia_rejects_expansions() {
        let c = DMatrix::from_element(1, 1, 1.5);
        assert!(matches!(julia_unitary(&c), Err(Error::NotContraction(_))));
    }

    #[test]
    fn compression_through_dilation() {
        // C^T X C is the corner of V^T (X ⊕ 0) V for the first block column V.
        let mut r = sampling::rng(2, 0);
        let c = random_contraction(&mut r, 3, 2);
        let u = julia_unitary(&c).unwrap();
        let v = u.columns(0, 2).into_owned();
        let x = random_direction(&mut r, 1, 3);
        let padded = x.direct_sum(&MatrixTuple::zeros(1, 2)).unwrap();
        let lhs = v.transpose() * padded.get(0) * &v;
        assert!((lhs - x.congruence(&c).unwrap().get(0)).abs().max() < 1e-12);
    }

    #[test]
    fn ball_has_no_witness() {
        let config = FalsifierConfig {
            seed: 3,
            budget: 300,
            ..Default::default()
        };
        assert!(contraction_closure_check(&nc_ball(2), &config).unwrap().witness.is_none());
        assert!(midpoint_falsifier(&nc_ball(2), &config).unwrap().witness.is_none());
    }

    #[test]
    fn tv_level_one_is_convex() {
        let config = FalsifierConfig {
            seed: 4,
            levels: vec![1],
            budget: 300,
            ..Default::default()
        };
        assert!(midpoint_falsifier(&tv_screen(), &config).unwrap().witness.is_none());
    }

    #[test]
    fn tv_midpoint_witness_replays() {
        let config = FalsifierConfig {
            seed: 2,
            levels: vec![2],
            budget: 5000,
            ..Default::default()
        };
        let report = midpoint_falsifier(&tv_screen(), &config).unwrap();
        let w = report.witness.expect("witness within budget");
        assert!(w.replay(&tv_screen(), RayOptions::default()).unwrap());
        let again = midpoint_falsifier(&tv_screen(), &config).unwrap().witness.unwrap();
        assert_eq!(w, again);
        let c = w.as_compression().unwrap();
        assert_eq!(c.level, 4);
        assert!((c.image.get(0) - w.image.get(0)).abs().max() < 1e-12);
        assert!(c.replay(&tv_screen(), RayOptions::default()).unwrap());
    }
}
