//! Numerical solver for the discrete L_p chord Minkowski problem.
//!
//! Given a finite discrete measure `mu` on the unit sphere, `chordmink` computes a
//! convex polytope `P` whose L_p chord measure `F_{p,q}(P, .)` matches `mu`
//! (for `0 <= p < 1`, `q > 0`). Alongside the solver it provides the integral
//! geometry it depends on:
//!
//! - [`measure`]: discrete spherical measures, admissibility checks
//!   (hemisphere, general position, subspace mass) and the sphere-partition
//!   discretizer for continuous densities.
//! - [`polytope`]: Wulff shapes `[z, Omega]`, vertex/facet enumeration, support
//!   and radial functions, Chebyshev centers, facet sampling.
//! - [`chord`]: dual quermassintegrals, chord integrals (volume form, line form,
//!   planar quadrature), chord measures and their L_p / cone variants.
//! - [`solver`]: the inner concave maximization `xi_p(z)`, the constrained outer
//!   minimization and the homogeneity rescale producing the solution.
//! - [`verify`]: residuals, finite-difference checks of the variational formula
//!   and the invariant battery.
//! - [`cli`]: the `chordmink` command line front end.

pub mod chord;
pub mod cli;
pub mod error;
pub mod linalg;
mod lp;
pub mod measure;
pub mod polytope;
pub mod quadrature;
pub mod rng;
pub mod solver;
pub mod tol;
pub mod verify;

pub use chord::{ChordEstimate, EstimatorKind, EstimatorOptions};
pub use error::{Error, Result};
pub use measure::DiscreteMeasure;
pub use polytope::{HalfspaceSpec, Polytope};
pub use solver::{SolutionReport, SolverConfig};
