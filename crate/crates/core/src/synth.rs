//! Empirical LMI synthesis by pencil augmentation.
//!
//! A pool `S` of boundary pairs is sampled. A separating pencil is built at a
//! compressed dominating representative of `S`; then, while some pairs of `S`
//! leave the current pencil `L` invertible, a new pencil `M` is separated at
//! a representative of those survivors and `L <- L ⊕ M`. Progress is measured
//! by the dimension of the vanishing space of the survivors, which must grow
//! strictly at every step, so the loop runs at most `ν` times.

use serde::{Deserialize, Serialize};

use crate::boundary::{compress_pair, find_boundary_pairs, BoundaryPair, CompressionMode, SizeConstants};
use crate::error::{Error, Result};
use crate::evaluate::MatrixTuple;
use crate::linalg::spectral_norm;
use crate::ncpoly::NcPolynomial;
use crate::pencil::{pencil_direct_sum, sets_agree_sampled, AgreementReport, MonicPencil};
use crate::sampling::{self, random_direction};
use crate::separate::{separating_pencil, SeparationConfig};
use crate::vanishing::{dominating_representative, vanishing_space, SampleSet};

/// Relative singular-value gap above which `L(X)` counts as invertible.
pub const SURVIVOR_GAP: f64 = 1e-7;

/// Pairs of `S` at which `L(X)` is invertible.
pub fn invertible_survivors(l: &MonicPencil, s: &SampleSet) -> Result<Vec<BoundaryPair>> {
    let mut out = Vec::new();
    for pair in s.pairs() {
        let lx = l.eval(&pair.x)?;
        let smin = lx.singular_values().iter().copied().fold(f64::INFINITY, f64::min);
        if smin > SURVIVOR_GAP * (1.0 + spectral_norm(&lx)) {
            out.push(pair.clone());
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SynthesisConfig {
    pub seed: u64,
    /// Number of random directions probed for boundary pairs.
    pub boundary_budget: usize,
    pub iteration_cap: usize,
    /// Pool levels are cycled through `1..=max_pool_level`.
    pub max_pool_level: usize,
    pub separation: SeparationConfig,
    pub agreement_levels: Vec<usize>,
    pub agreement_samples: usize,
}

impl SynthesisConfig {
    pub fn new(seed: u64) -> Self {
        SynthesisConfig {
            seed,
            boundary_budget: 60,
            iteration_cap: 20,
            max_pool_level: 3,
            separation: SeparationConfig::with_seed(seed),
            agreement_levels: vec![1, 2, 3, 4],
            agreement_samples: 200,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SynthesisStep {
    /// Level of the compressed representative the pencil was separated at.
    pub anchor_level: usize,
    pub pencil_size: usize,
    pub survivors_after: usize,
    /// `dim I(survivors)`; `ν` once no survivors remain.
    pub vanishing_dim_after: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SynthesisReport {
    pub seed: u64,
    pub iterations: usize,
    pub survivors: usize,
    pub pool_size: usize,
    pub unbounded_rays: usize,
    pub mode: CompressionMode,
    pub nu: usize,
    pub nu_breve: usize,
    pub mu_bound: usize,
    /// `dim I(S)` of the full pool.
    pub initial_vanishing_dim: usize,
    pub steps: Vec<SynthesisStep>,
    pub pencil_size: usize,
    /// Every component pencil has size at most `ν`.
    pub component_sizes_within_nu: bool,
    pub within_mu_bound: bool,
    pub pencil: Option<MonicPencil>,
    pub agreement: Option<AgreementReport>,
}

/// Boundary pairs along random directions at levels `1..=max_level`, every
/// near-kernel vector included, plus their compressions.
pub fn boundary_pool(
    p: &NcPolynomial,
    budget: usize,
    max_level: usize,
    mode: CompressionMode,
    seed: u64,
) -> Result<(Vec<BoundaryPair>, usize)> {
    let mut rng = sampling::rng(seed, 0xb0);
    let mut pool = Vec::new();
    let mut unbounded = 0;
    for i in 0..budget {
        let n = 1 + i % max_level.max(1);
        let dir = random_direction(&mut rng, p.g(), n);
        let pairs = match find_boundary_pairs(p, &dir) {
            Ok(pairs) => pairs,
            Err(Error::RayNeverExits { .. }) => {
                unbounded += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        for pair in pairs {
            if let Ok(c) = compress_pair(p, &pair, mode) {
                if c.level() < pair.level() {
                    pool.push(c);
                }
            }
            pool.push(pair);
        }
    }
    Ok((pool, unbounded))
}

fn choose_mode(p: &NcPolynomial) -> CompressionMode {
    let c0 = p.constant_term();
    if c0.is_square() && (c0 - nalgebra::DMatrix::identity(p.rows(), p.cols())).abs().max() <= 1e-10 {
        CompressionMode::HalfDegree
    } else {
        CompressionMode::FullDegree
    }
}

fn compressed_representative(p: &NcPolynomial, s: &SampleSet, d: usize, mode: CompressionMode) -> Result<BoundaryPair> {
    let rep = dominating_representative(s, d)?;
    match compress_pair(p, &rep, mode) {
        Ok(c) => Ok(c),
        Err(_) if mode == CompressionMode::HalfDegree => compress_pair(p, &rep, CompressionMode::FullDegree),
        Err(e) => Err(e),
    }
}

fn separate_at(p: &NcPolynomial, x: &MatrixTuple, config: &SynthesisConfig, step: usize) -> Result<MonicPencil> {
    let mut sep = config.separation.clone();
    sep.seed = config.seed.wrapping_add(step as u64);
    sep.trace.seed = sep.seed;
    Ok(separating_pencil(p, x, &sep)?.pencil)
}

/// Runs the augmentation loop and cross-checks the result against `p` on
/// sampled points.
pub fn synthesize_lmi(p: &NcPolynomial, config: &SynthesisConfig) -> Result<(MonicPencil, SynthesisReport)> {
    let d = p.degree().max(0) as usize;
    if d == 0 {
        return Err(Error::InvalidInput("synthesis needs a non-constant polynomial".into()));
    }
    let mode = choose_mode(p);
    let consts = SizeConstants::of(p);
    let (pool, unbounded) = boundary_pool(p, config.boundary_budget, config.max_pool_level, mode, config.seed)?;
    if pool.is_empty() {
        return Err(Error::Empty("boundary pool (every sampled ray is unbounded)"));
    }
    let s = SampleSet::new(pool)?;
    let initial_dim = vanishing_space(&s, d)?.dim();
    let mut report = SynthesisReport {
        seed: config.seed,
        iterations: 0,
        survivors: s.len(),
        pool_size: s.len(),
        unbounded_rays: unbounded,
        mode,
        nu: consts.nu,
        nu_breve: consts.nu_breve,
        mu_bound: consts.mu_bound,
        initial_vanishing_dim: initial_dim,
        steps: Vec::new(),
        pencil_size: 0,
        component_sizes_within_nu: true,
        within_mu_bound: true,
        pencil: None,
        agreement: None,
    };

    let mut current = s.clone();
    let mut before = initial_dim;
    let mut l: Option<MonicPencil> = None;
    loop {
        if report.iterations >= config.iteration_cap {
            report.pencil = l;
            return Err(Error::IterationCapExceeded(Box::new(report)));
        }
        let anchor = compressed_representative(p, &current, d, mode)?;
        let m = separate_at(p, &anchor.x, config, report.iterations)?;
        report.component_sizes_within_nu &= m.size() <= consts.nu;
        let next = match &l {
            Some(prev) => pencil_direct_sum(prev, &m)?,
            None => m.clone(),
        };
        report.iterations += 1;
        let survivors = invertible_survivors(&next, &s)?;
        let after = if survivors.is_empty() {
            consts.nu
        } else {
            vanishing_space(&SampleSet::new(survivors.clone())?, d)?.dim()
        };
        report.steps.push(SynthesisStep {
            anchor_level: anchor.level(),
            pencil_size: m.size(),
            survivors_after: survivors.len(),
            vanishing_dim_after: after,
        });
        report.survivors = survivors.len();
        report.pencil_size = next.size();
        l = Some(next);
        if survivors.is_empty() {
            break;
        }
        if after <= before {
            report.pencil = l;
            return Err(Error::SynthesisStalled {
                iteration: report.iterations,
                before,
                after,
            });
        }
        before = after;
        current = SampleSet::new(survivors)?;
    }
    let l = l.expect("at least one iteration");
    report.within_mu_bound = l.size() <= consts.mu_bound;
    report.agreement = Some(sets_agree_sampled(
        p,
        &l,
        &config.agreement_levels,
        config.agreement_samples,
        config.seed,
    )?);
    report.pencil = Some(l.clone());
    Ok((l, report))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MinDegreeReport {
    pub seed: u64,
    pub degree: usize,
    pub pairs: usize,
    pub dimension: usize,
    /// Relative residual of `p` itself in the space, for scalar `p` whose
    /// degree does not exceed the tested degree.
    pub defining_residual: Option<f64>,
}

/// `dim I(S)` at degree `floor(d/2) + 1` for a sampled pool `S` of `pairs`
/// boundary pairs. A positive dimension is consistent with a low-degree
/// polynomial vanishing on the whole boundary; it is never a certificate.
pub fn min_degree_witness(p: &NcPolynomial, pairs: usize, seed: u64) -> Result<MinDegreeReport> {
    let d = p.degree().max(0) as usize;
    let degree = d / 2 + 1;
    let mut rng = sampling::rng(seed, 0xd6);
    let mut pool = Vec::new();
    let mut attempts = 0;
    while pool.len() < pairs {
        attempts += 1;
        if attempts > 20 * pairs.max(1) {
            return Err(Error::Empty("boundary pool (rays keep missing the boundary)"));
        }
        let n = 1 + attempts % 4;
        match find_boundary_pairs(p, &random_direction(&mut rng, p.g(), n)) {
            Ok(found) => pool.extend(found.into_iter().take(pairs - pool.len())),
            Err(Error::RayNeverExits { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    let space = vanishing_space(&SampleSet::new(pool)?, degree)?;
    let defining_residual = if p.rows() == 1 && d <= degree {
        Some(space.polynomial_residual(p)?)
    } else {
        None
    };
    Ok(MinDegreeReport {
        seed,
        degree,
        pairs,
        dimension: space.dim(),
        defining_residual,
    })
}
