//! Chord integrals, chord measures and dual quermassintegrals of polytopes.
//!
//! With the line measure `dl = dy du / (n omega_n)` over oriented lines,
//!
//! ```text
//! I_q(K)    = int |K ∩ l|^q dl = (q / omega_n) int_K V~_{q-1}(K, z) dz
//! F_q(K, η) = (2q / omega_n) int_{nu^{-1}(η)} V~_{q-1}(K, z) dz
//! V~_q(K,z) = (1/n) int_{S_z^+} rho_{K,z}(u)^q du
//! ```
//!
//! where `S_z^+` is the set of directions with positive radial function (a
//! hemisphere for boundary points).

mod dual;
mod estimators;
mod planar;

pub use dual::dual_volume;
pub use estimators::{
    chord_integral, chord_integral_lines, chord_integral_lines_difference, chord_measure,
};
pub use planar::{chord_integral_quadrature, chord_measure_quadrature};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polytope::Polytope;

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    use std::f64::consts::PI;
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// Surface area of `S^{n-1}`.
pub fn sphere_area(n: usize) -> f64 {
    use std::f64::consts::PI;
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (n as f64 - 2.0) * sphere_area(n - 2),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    VolumeForm,
    LineForm,
    Quadrature,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChordEstimate {
    pub value: f64,
    /// Standard error of a Monte Carlo mean; zero for deterministic paths.
    pub std_error: f64,
    /// Sample count, or node count for quadrature.
    pub samples: u64,
    pub estimator: EstimatorKind,
    /// Estimated absolute discretization error of deterministic paths.
    #[serde(default)]
    pub error_bound: f64,
}

impl ChordEstimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            std_error: 0.0,
            samples: 1,
            estimator: EstimatorKind::Exact,
            error_bound: 0.0,
        }
    }

    pub fn quadrature(value: f64, nodes: u64, error_bound: f64) -> Self {
        Self {
            value,
            std_error: 0.0,
            samples: nodes.max(1),
            estimator: EstimatorKind::Quadrature,
            error_bound,
        }
    }

    /// Multiplies value and error by `s`.
    pub fn scaled(self, s: f64) -> Self {
        Self {
            value: self.value * s,
            std_error: self.std_error * s.abs(),
            error_bound: self.error_bound * s.abs(),
            ..self
        }
    }

    /// Combined one-sigma uncertainty (standard error plus quadrature bound).
    pub fn uncertainty(&self) -> f64 {
        self.std_error.hypot(self.error_bound)
    }
}

/// Multipliers applied to the normalizing constants. All are 1 in normal use;
/// the verification harness perturbs them to confirm that its checks notice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub unit_ball: f64,
    pub sphere_area: f64,
    pub measure_factor: f64,
    pub line_measure: f64,
}

impl Default for Normalization {
    fn default() -> Self {
        Self {
            unit_ball: 1.0,
            sphere_area: 1.0,
            measure_factor: 1.0,
            line_measure: 1.0,
        }
    }
}

impl Normalization {
    pub fn omega(&self, n: usize) -> f64 {
        self.unit_ball * unit_ball_volume(n)
    }

    pub fn sphere(&self, n: usize) -> f64 {
        self.sphere_area * sphere_area(n)
    }

    /// `2q / omega_n` in the definition of `F_q`.
    pub fn measure(&self, n: usize, q: f64) -> f64 {
        self.measure_factor * 2.0 * q / self.omega(n)
    }

    /// Density `1 / (n omega_n)` of the line measure with respect to `dy du`.
    pub fn line(&self, n: usize) -> f64 {
        self.line_measure / (n as f64 * self.omega(n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorOptions {
    pub samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub normalization: Normalization,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            samples: 200_000,
            seed: crate::rng::DEFAULT_SEED,
            normalization: Normalization::default(),
        }
    }
}

impl EstimatorOptions {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self {
            samples,
            seed,
            ..Self::default()
        }
    }
}

/// `I_0(K) = omega_{n-1} S(K) / (n omega_n)`.
pub fn closed_form_i0(p: &Polytope) -> f64 {
    closed_form_i0_with(p, &Normalization::default())
}

pub fn closed_form_i0_with(p: &Polytope, norm: &Normalization) -> f64 {
    let n = p.dim();
    unit_ball_volume(n - 1) * p.surface_area() / (n as f64 * norm.omega(n))
}

/// How [`chord_functionals`] evaluates `I_q` and `F_q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChordMethod {
    /// Exact formulas at `q = 1` and `q = n + 1`, planar quadrature for
    /// moderate polygons, Monte Carlo otherwise.
    #[default]
    Auto,
    Exact,
    Quadrature,
    MonteCarlo,
}

/// Polygons with more facets than this use Monte Carlo under [`ChordMethod::Auto`].
pub const AUTO_QUADRATURE_MAX_FACETS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Functionals {
    pub i_q: ChordEstimate,
    pub f_q: Vec<ChordEstimate>,
}

fn exact_available(n: usize, q: f64) -> bool {
    (q - 1.0).abs() < 1e-12 || (q - (n as f64 + 1.0)).abs() < 1e-12
}

/// Resolves [`ChordMethod::Auto`] for a given polytope and `q`.
pub fn resolve_method(p: &Polytope, q: f64, method: ChordMethod) -> ChordMethod {
    let n = p.dim();
    match method {
        ChordMethod::Auto if exact_available(n, q) => ChordMethod::Exact,
        ChordMethod::Auto if n == 2 && p.spec().len() <= AUTO_QUADRATURE_MAX_FACETS => {
            ChordMethod::Quadrature
        }
        ChordMethod::Auto => ChordMethod::MonteCarlo,
        m => m,
    }
}

/// `I_q(P)` together with `F_q(P, v_i)` for every normal.
pub fn chord_functionals(
    p: &Polytope,
    q: f64,
    method: ChordMethod,
    opts: &EstimatorOptions,
) -> Result<Functionals> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::Parameter(format!("q = {q} must be positive")));
    }
    let n = p.dim();
    let norm = &opts.normalization;
    match resolve_method(p, q, method) {
        ChordMethod::Exact => {
            if (q - 1.0).abs() < 1e-12 {
                let f = p
                    .facet_areas()
                    .into_iter()
                    .map(|a| ChordEstimate::exact(norm.measure(n, 1.0) * norm.omega(n) / 2.0 * a))
                    .collect();
                let i = norm.sphere(n) / (n as f64 * norm.omega(n)) * p.volume();
                Ok(Functionals {
                    i_q: ChordEstimate::exact(i),
                    f_q: f,
                })
            } else if (q - (n as f64 + 1.0)).abs() < 1e-12 {
                let v = p.volume();
                let c = (n as f64 + 1.0) / norm.omega(n);
                let f = p
                    .facet_areas()
                    .into_iter()
                    .map(|a| ChordEstimate::exact(norm.measure_factor * 2.0 * c * v * a))
                    .collect();
                Ok(Functionals {
                    i_q: ChordEstimate::exact(c * v * v),
                    f_q: f,
                })
            } else {
                Err(Error::Parameter(format!(
                    "no exact formula for q = {q} (only q = 1 and q = n + 1)"
                )))
            }
        }
        ChordMethod::Quadrature => Ok(Functionals {
            i_q: chord_integral_quadrature(p, q, norm)?,
            f_q: chord_measure_quadrature(p, q, norm)?,
        }),
        ChordMethod::MonteCarlo | ChordMethod::Auto => Ok(Functionals {
            i_q: chord_integral(p, q, opts)?,
            f_q: chord_measure(p, q, opts)?,
        }),
    }
}

fn check_p(p_exp: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p_exp) {
        return Err(Error::Parameter(format!("p = {p_exp} must lie in [0, 1]")));
    }
    Ok(())
}

/// `h_P(v_i)^{1-p}`, requiring the origin to lie in `P`.
pub fn lp_weights(poly: &Polytope, p_exp: f64) -> Result<Vec<f64>> {
    check_p(p_exp)?;
    let origin = vec![0.0; poly.dim()];
    let slack = poly.min_slack(&origin);
    let scale = poly.diameter().max(1.0);
    if slack < -crate::tol::TOL.vertex_merge * scale {
        return Err(Error::OriginOutside { slack });
    }
    Ok(poly
        .tight_offsets()
        .into_iter()
        .map(|h| h.max(0.0).powf(1.0 - p_exp))
        .collect())
}

/// `F_{p,q}(P, v_i) = h_P(v_i)^{1-p} F_q(P, v_i)`.
pub fn lp_chord_measure(
    poly: &Polytope,
    p_exp: f64,
    q: f64,
    method: ChordMethod,
    opts: &EstimatorOptions,
) -> Result<Vec<ChordEstimate>> {
    let w = lp_weights(poly, p_exp)?;
    let f = chord_functionals(poly, q, method, opts)?.f_q;
    Ok(f.into_iter().zip(w).map(|(e, w)| e.scaled(w)).collect())
}

/// `G_q(P, v_i) = F_{0,q}(P, v_i) / (n + q - 1)`.
pub fn cone_chord_measure(
    poly: &Polytope,
    q: f64,
    method: ChordMethod,
    opts: &EstimatorOptions,
) -> Result<Vec<ChordEstimate>> {
    let d = poly.dim() as f64 + q - 1.0;
    Ok(lp_chord_measure(poly, 0.0, q, method, opts)?
        .into_iter()
        .map(|e| e.scaled(1.0 / d))
        .collect())
}

/// Sum of estimates with independent errors added in quadrature.
pub fn total(estimates: &[ChordEstimate]) -> ChordEstimate {
    let value = estimates.iter().map(|e| e.value).sum();
    let std_error = estimates.iter().map(|e| e.std_error.powi(2)).sum::<f64>().sqrt();
    let error_bound = estimates.iter().map(|e| e.error_bound).sum();
    ChordEstimate {
        value,
        std_error,
        samples: estimates.iter().map(|e| e.samples).sum::<u64>().max(1),
        estimator: estimates.first().map_or(EstimatorKind::Exact, |e| e.estimator),
        error_bound,
    }
}

#[cfg(test)]
mod tests;
