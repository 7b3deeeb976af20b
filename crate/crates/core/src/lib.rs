//! Numerical toolkit for radial solutions of −Δu = eᵘ on Riemannian model
//! manifolds.
//!
//! The pieces fit together as follows: [`manifold`] defines the warping
//! profiles ψ and their geometric quantities; [`solver`] integrates the
//! singular radial IVP and its variational equation with dense output;
//! [`asymptotics`] classifies and measures the behaviour at infinity;
//! [`stability`] decides stability by Sturm oscillation, cross-validates
//! with ball-eigenvalue shooting, and locates the threshold height by
//! bisection; [`intersections`] counts crossings between solution pairs;
//! [`emden`] holds the Euclidean phase-plane analysis and the
//! high-dimension comparison machinery.

// Negated comparisons like `!(x > 0.0)` are used on purpose: they reject
// NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod emden;
pub mod intersections;
pub mod manifold;
pub mod ode;
pub mod solver;
pub mod stability;

pub use asymptotics::{classify_limit, AsymptoticReport, LimitKind};
pub use intersections::{find_intersections, IntersectionReport};
pub use manifold::{check_assumptions, AssumptionFlags, ProfileKind, TailClass, WarpProfile};
pub use solver::{
    blowup_rescale, integrate_ivp, integrate_linearized, LinearizedSolution, RadialSolution,
};
pub use stability::{
    ball_eigenvalue, stability_test, threshold_eta, weighted_ball_eigenvalue, Decision,
    StabilityVerdict,
};
