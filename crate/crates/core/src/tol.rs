//! Numerical tolerances shared across modules.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Allowed deviation of a direction's norm from 1.
    pub unit_norm: f64,
    /// Two directions closer than this are considered duplicates.
    pub duplicate_direction: f64,
    /// Feasibility slack used by the hemisphere linear program.
    pub hemisphere: f64,
    /// `|det|` threshold for linear independence of n directions.
    pub independence_det: f64,
    /// `|det|` threshold for a vertex candidate system.
    pub vertex_det: f64,
    /// Vertex deduplication distance and constraint activity slack.
    pub vertex_merge: f64,
    /// Minimal Chebyshev radius for a Wulff shape to count as full-dimensional.
    pub interior_slack: f64,
    /// Minimal slack for radial function base points.
    pub radial_interior: f64,
    /// Directions with `v . u` below this are ignored when clipping a ray.
    pub ray_parallel: f64,
    /// Slack on the strict subspace mass inequality.
    pub subspace_slack: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        unit_norm: 1e-12,
        duplicate_direction: 1e-12,
        hemisphere: 1e-9,
        independence_det: 1e-10,
        vertex_det: 1e-10,
        vertex_merge: 1e-9,
        interior_slack: 1e-9,
        radial_interior: 1e-12,
        ray_parallel: 1e-14,
        subspace_slack: 1e-12,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

pub const TOL: Tolerances = Tolerances::DEFAULT;

/// Exhaustive subset enumeration budget for combinatorial checks.
pub const SUBSET_BUDGET: u128 = 1_000_000;

/// Number of random subsets inspected in spot-check mode.
pub const SPOT_CHECK_SUBSETS: usize = 100_000;

/// Upper bound on n-subsets examined by vertex enumeration.
pub const VERTEX_SUBSET_BUDGET: u128 = 4_000_000;
