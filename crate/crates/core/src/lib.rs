//! Free (non-commutative) convex semi-algebraic geometry at desk scale.
//!
//! Free polynomials with matrix coefficients are evaluated on tuples of
//! symmetric matrices. Their invertibility sets `D_p` are probed along rays,
//! boundary pairs `(X, v)` with `p(X) v = 0` are computed and compressed,
//! degree-bounded vanishing spaces are formed, and monic linear pencils that
//! separate boundary points are built numerically. The augmentation loop in
//! [`synth`] composes these into an empirical LMI representation
//! `D_p = {X : L(X) > 0}`, checked on sampled points.

pub mod boundary;
pub mod catalog;
pub mod convexity;
pub mod demos;
pub mod error;
pub mod evaluate;
pub mod io;
pub mod linalg;
pub mod ncpoly;
pub mod pencil;
pub mod sampling;
pub mod separate;
pub mod synth;
pub mod vanishing;

pub use boundary::{compress_pair, direct_sum_pairs, find_boundary_pair, BoundaryPair, CompressionMode, SizeConstants};
pub use error::{Error, Result};
pub use evaluate::{
    eval_pencil, eval_poly, ray_membership, signature, MatrixTuple, MembershipStatus, MembershipVerdict, RayOptions,
    Signature,
};
pub use ncpoly::{NcPolynomial, Word};
pub use pencil::{pencil_direct_sum, pencil_membership, quadratic_to_lmi, sets_agree_sampled, MonicPencil};

pub use separate::{separating_pencil, SeparationCertificate, SeparationConfig};
pub use vanishing::{SampleSet, VanishingSpace};
