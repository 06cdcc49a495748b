//! Named example polynomials and random families used by tests and demos.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::Result;
use crate::ncpoly::NcPolynomial;
use crate::pencil::MonicPencil;
use crate::sampling::random_symmetric;

/// `1 - sum_j x_j^2`.
pub fn nc_ball(g: usize) -> NcPolynomial {
    let sq: Vec<[usize; 2]> = (0..g).map(|j| [j, j]).collect();
    let mut terms: Vec<(f64, &[usize])> = vec![(1.0, &[])];
    terms.extend(sq.iter().map(|w| (-1.0, &w[..])));
    NcPolynomial::scalar(g, &terms).expect("ball terms are well formed")
}

/// `1 - x^4 - y^4`, convex only in the commutative world.
pub fn tv_screen() -> NcPolynomial {
    NcPolynomial::scalar(2, &[(1.0, &[]), (-1.0, &[0, 0, 0, 0]), (-1.0, &[1, 1, 1, 1])]).expect("well formed")
}

/// Unit disc `1 - x^2 - y^2`.
pub fn disc_b() -> NcPolynomial {
    nc_ball(2)
}

/// Shifted disc `1 - (x - 1/4)^2 - y^2 = 15/16 + x/2 - x^2 - y^2`.
pub fn disc_f() -> NcPolynomial {
    NcPolynomial::scalar(2, &[(15.0 / 16.0, &[]), (0.5, &[0]), (-1.0, &[0, 0]), (-1.0, &[1, 1])])
        .expect("well formed")
}

/// `f b f`.
pub fn fbf() -> NcPolynomial {
    let (b, f) = (disc_b(), disc_f());
    f.mul(&b).and_then(|q| q.mul(&f)).expect("scalar products")
}

/// `b f b`.
pub fn bfb() -> NcPolynomial {
    let (b, f) = (disc_b(), disc_f());
    b.mul(&f).and_then(|q| q.mul(&b)).expect("scalar products")
}

/// `b ⊕ f`, whose invertibility set is the intersection of the two discs.
pub fn b_plus_f() -> NcPolynomial {
    disc_b().direct_sum(&disc_f()).expect("same variables")
}

/// Monic pencil with Gaussian symmetric coefficients scaled by `scale`.
pub fn random_monic_pencil<R: Rng>(rng: &mut R, g: usize, size: usize, scale: f64) -> MonicPencil {
    let coeffs = (0..g).map(|_| random_symmetric(rng, size) * scale).collect();
    MonicPencil::new(coeffs).expect("nonempty coefficients")
}

/// `L^2` as a `size x size` polynomial of degree two. Its invertibility set
/// containing `0` is `D_L`, so it is convex with `p(0) = I`.
pub fn pencil_square(l: &MonicPencil) -> NcPolynomial {
    let p = l.to_polynomial();
    p.mul(&p).expect("square shapes")
}

/// `1 + ell(x) - sum_{ij} Λ_ij x_i x_j` with `Λ = G G^T` and Gaussian `G`, `ell`.
pub fn random_psd_quadratic<R: Rng>(rng: &mut R, g: usize) -> NcPolynomial {
    let gm = crate::sampling::gaussian_matrix(rng, g, g);
    let lambda = &gm * gm.transpose();
    let ell: Vec<f64> = (0..g).map(|_| rng.gen_range(-1.0..1.0)).collect();
    quadratic(&ell, &lambda)
}

/// Like [`random_psd_quadratic`] with `Λ` forced to have a negative eigenvalue.
pub fn random_indefinite_quadratic<R: Rng>(rng: &mut R, g: usize) -> NcPolynomial {
    let lambda = loop {
        let s = random_symmetric(rng, g.max(1));
        let vals = crate::linalg::sym_eigenvalues(&s);
        if vals[0] < -0.1 {
            break s;
        }
    };
    let ell: Vec<f64> = (0..g).map(|_| rng.gen_range(-1.0..1.0)).collect();
    quadratic(&ell, &lambda)
}

/// `1 + ell(x) - sum_{ij} Λ_ij x_i x_j`.
pub fn quadratic(ell: &[f64], lambda: &DMatrix<f64>) -> NcPolynomial {
    let g = ell.len();
    let mut terms: Vec<(Vec<usize>, f64)> = vec![(vec![], 1.0)];
    terms.extend(ell.iter().enumerate().map(|(j, c)| (vec![j], *c)));
    for i in 0..g {
        for j in 0..g {
            terms.push((vec![i, j], -lambda[(i, j)]));
        }
    }
    let borrowed: Vec<(f64, &[usize])> = terms.iter().map(|(w, c)| (*c, w.as_slice())).collect();
    NcPolynomial::scalar(g, &borrowed).expect("well formed")
}

/// Looks up a catalog polynomial by name.
pub fn by_name(name: &str) -> Result<NcPolynomial> {
    Ok(match name {
        "interval" => nc_ball(1),
        "ball" | "ball2" => nc_ball(2),
        "ball3" => nc_ball(3),
        "tv" => tv_screen(),
        "b" => disc_b(),
        "f" => disc_f(),
        "fbf" => fbf(),
        "bfb" => bfb(),
        "b+f" => b_plus_f(),
        _ => return Err(crate::Error::InvalidInput(format!("unknown catalog polynomial '{name}'"))),
    })
}
