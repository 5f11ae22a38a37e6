//! Numerical tools for minimal graphs in hyperbolic space over convex planar
//! domains: a singular Dirichlet solver, cone profiles, the Möbius isometry
//! that straightens corners, and experiments measuring boundary asymptotics.

// Parameter checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod cone_profile;
pub mod elliptic_solver;
pub mod geometry;
pub mod mobius;
pub mod ode;
pub mod sparse;
