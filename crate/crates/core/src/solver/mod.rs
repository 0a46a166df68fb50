//! The variational solver.
//!
//! For offsets `z` over the atom directions `v_j` of `mu`, let
//!
//! ```text
//! Phi_p(z, xi) = sum_j alpha_j (z_j - xi . v_j)^p      (0 < p < 1)
//! Phi_0(z, xi) = sum_j alpha_j log(z_j - xi . v_j)
//! ```
//!
//! and `xi_p(z)` its maximizer over `[z]`. The solver minimizes
//! `E(z) = Phi_p(z, xi_p(z))` subject to `I_q([z]) = |mu|`. At a minimizer
//! with `xi_p(z) = o` the chord measure satisfies
//! `F_{p,q}([z], .) = (n + q - 1) |mu| / Phi_p(z, o) * mu`, so a single
//! homogeneity rescale of `[z]` solves `F_{p,q}(P, .) = mu`.
//!
//! Iterates are kept normalized: tight offsets, `xi_p(z) = o`, and
//! `I_q([z]) = |mu|`. A step moves along the gradient of `E` projected
//! orthogonally to `F_q = grad I_q`, then renormalizes. Backtracking uses `E`
//! at the renormalized point as merit.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chord::{chord_functionals, resolve_method, ChordEstimate, ChordMethod, EstimatorOptions};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, solve_spd};
use crate::measure::{
    discretize, general_position_check_with, hemisphere_check, subspace_mass_check_with,
    DiscreteMeasure, SphereDensity, SubsetMode,
};
use crate::polytope::{hausdorff_distance, HalfspaceSpec, Polytope, PolytopeJson};
use crate::rng::derive_seed;

const INNER_MAX_ITERS: usize = 200;
/// Fraction of the smallest current slack that every slack must keep in a Newton step.
const BOUNDARY_FRACTION: f64 = 0.01;
/// Slacks down to this negative value count as on the boundary.
const SLACK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub p: f64,
    pub q: f64,
    /// Inner stationarity tolerance, relative to `|alpha|`.
    pub inner_tol: f64,
    /// Outer KKT tolerance.
    pub outer_tol: f64,
    pub max_outer_iters: usize,
    /// Monte Carlo samples per `I_q` and per facet.
    pub chord_samples: usize,
    /// Upper limit for the automatic sample doubling.
    pub max_chord_samples: usize,
    pub seed: u64,
    pub shrink: f64,
    /// Sufficient-decrease constant of the line search.
    pub armijo: f64,
    pub max_backtracks: usize,
    pub starts: usize,
    pub method: ChordMethod,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            p: 0.5,
            q: 1.0,
            inner_tol: 1e-10,
            outer_tol: 1e-6,
            max_outer_iters: 2000,
            chord_samples: 200_000,
            max_chord_samples: 3_200_000,
            seed: crate::rng::DEFAULT_SEED,
            shrink: 0.5,
            armijo: 1e-4,
            max_backtracks: 40,
            starts: 3,
            method: ChordMethod::Auto,
        }
    }
}

impl SolverConfig {
    pub fn new(p: f64, q: f64) -> Self {
        Self {
            p,
            q,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.p) {
            return Err(Error::Parameter(format!("p = {} must lie in [0, 1)", self.p)));
        }
        if !(self.q > 0.0 && self.q.is_finite()) {
            return Err(Error::Parameter(format!("q = {} must be positive", self.q)));
        }
        if !(self.inner_tol > 0.0 && self.outer_tol > 0.0) {
            return Err(Error::Parameter("tolerances must be positive".into()));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) || !(self.armijo > 0.0 && self.armijo < 1.0) {
            return Err(Error::Parameter("line search constants must lie in (0, 1)".into()));
        }
        if self.starts == 0 || self.chord_samples == 0 {
            return Err(Error::Parameter("starts and chord_samples must be positive".into()));
        }
        Ok(())
    }

    fn estimator(&self, samples: usize, start: usize) -> EstimatorOptions {
        EstimatorOptions::new(samples, derive_seed(self.seed, start as u64))
    }
}

/// Slacks `z_j - xi . v_j`.
fn slacks(z: &[f64], dirs: &[Vec<f64>], xi: &[f64]) -> Vec<f64> {
    z.iter().zip(dirs).map(|(zj, v)| zj - dot(v, xi)).collect()
}

fn check_lengths(z: &[f64], mu: &DiscreteMeasure) -> Result<()> {
    if z.len() != mu.len() {
        return Err(Error::Parameter(format!(
            "{} offsets for {} atoms",
            z.len(),
            mu.len()
        )));
    }
    Ok(())
}

/// `Phi_p(z, xi)`; `-inf` for `p = 0` when `xi` is on the boundary of `[z]`.
pub fn phi(z: &[f64], xi: &[f64], mu: &DiscreteMeasure, p: f64) -> Result<f64> {
    check_lengths(z, mu)?;
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Parameter(format!("p = {p} must lie in [0, 1)")));
    }
    let s = slacks(z, &mu.directions(), xi);
    let worst = s.iter().copied().fold(f64::INFINITY, f64::min);
    if worst < -SLACK_TOL {
        return Err(Error::NotInterior { slack: worst });
    }
    let terms = s.iter().zip(mu.atoms()).map(|(&sj, a)| {
        let sj = sj.max(0.0);
        if p == 0.0 {
            a.alpha * sj.ln()
        } else {
            a.alpha * sj.powf(p)
        }
    });
    Ok(terms.sum())
}

/// Concave potential with derivative `s^{p-1}`: `Phi_p / p`, or `Phi_0`.
fn potential(s: &[f64], alpha: &[f64], p: f64) -> f64 {
    if s.iter().any(|&x| x <= 0.0) {
        return f64::NEG_INFINITY;
    }
    s.iter()
        .zip(alpha)
        .map(|(&x, &a)| if p == 0.0 { a * x.ln() } else { a * x.powf(p) / p })
        .sum()
}

/// `sum_j alpha_j s_j^{p-1} v_j`, which vanishes at the maximizer.
fn stationarity(s: &[f64], alpha: &[f64], dirs: &[Vec<f64>], p: f64) -> Vec<f64> {
    let mut g = vec![0.0; dirs[0].len()];
    for ((&x, &a), v) in s.iter().zip(alpha).zip(dirs) {
        let w = a * x.powf(p - 1.0);
        for (gk, vk) in g.iter_mut().zip(v) {
            *gk += w * vk;
        }
    }
    g
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerSolution {
    pub xi: Vec<f64>,
    /// `Phi_p(z, xi)`.
    pub value: f64,
    /// `|sum_j alpha_j s_j^{p-1} v_j|`.
    pub residual: f64,
    pub iterations: usize,
    /// Stopped at the rounding floor of the residual rather than below `tol`.
    #[serde(default)]
    pub rounding_limited: bool,
}

/// Residual attainable in floating point: each slack carries an absolute
/// error of about `eps (|z_j| + |xi|)`, amplified through `s^{p-1}`.
fn rounding_floor(z: &[f64], s: &[f64], alpha: &[f64], xi: &[f64], p: f64) -> f64 {
    let r = norm(xi);
    16.0 * f64::EPSILON
        * z.iter()
            .zip(s)
            .zip(alpha)
            .map(|((zj, sj), a)| (1.0 - p) * a * sj.powf(p - 2.0) * (zj.abs() + r))
            .sum::<f64>()
}

/// The maximizer `xi_p(z)` of `Phi_p(z, .)` over `[z]`, by damped Newton from
/// the Chebyshev center. Converged when the stationarity residual is below
/// `tol * |alpha|`.
pub fn xi_star(z: &[f64], mu: &DiscreteMeasure, p: f64, tol: f64) -> Result<InnerSolution> {
    check_lengths(z, mu)?;
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Parameter(format!("p = {p} must lie in [0, 1)")));
    }
    let dirs = mu.directions();
    let alpha = mu.weights();
    let n = mu.dim();
    let spec = HalfspaceSpec::new(dirs.clone(), z.to_vec())?;
    let (mut xi, r) = spec.chebyshev_center()?;
    let scale = z.iter().map(|x| x.abs()).fold(1e-300, f64::max);
    if !(r > crate::tol::TOL.interior_slack * scale) {
        return Err(Error::Degenerate(format!("[z] has empty interior (inner radius {r:e})")));
    }
    let target = tol * norm(&alpha);
    let mut trace = Vec::new();
    let mut s = slacks(z, &dirs, &xi);
    let mut value = potential(&s, &alpha, p);
    for it in 0..INNER_MAX_ITERS {
        let g = stationarity(&s, &alpha, &dirs, p);
        let res = norm(&g);
        trace.push(res);
        let floor = rounding_floor(z, &s, &alpha, &xi, p);
        if res < target.max(floor) {
            if res >= target {
                log::debug!("inner solve stopped at rounding floor {floor:e} (target {target:e})");
            }
            return Ok(InnerSolution {
                value: phi(z, &xi, mu, p)?,
                xi,
                residual: res,
                iterations: it,
                rounding_limited: res >= target,
            });
        }
        // minus the Hessian of the potential
        let mut h = DMatrix::<f64>::zeros(n, n);
        for ((&x, &a), v) in s.iter().zip(&alpha).zip(&dirs) {
            let w = (1.0 - p) * a * x.powf(p - 2.0);
            for i in 0..n {
                for k in 0..n {
                    h[(i, k)] += w * v[i] * v[k];
                }
            }
        }
        let d: Vec<f64> = solve_spd(h, &g)
            .ok_or_else(|| Error::Degenerate("singular inner Hessian".into()))?
            .into_iter()
            .map(|x| -x)
            .collect();
        let smin = s.iter().copied().fold(f64::INFINITY, f64::min);
        let mut t: f64 = 1.0;
        for (sj, v) in s.iter().zip(&dirs) {
            let rate = dot(v, &d);
            if rate > 0.0 {
                t = t.min((sj - BOUNDARY_FRACTION * smin) / rate);
            }
        }
        // the ascent slope of the potential along d
        let slope = -dot(&g, &d);
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = xi.iter().zip(&d).map(|(x, dk)| x + t * dk).collect();
            let st = slacks(z, &dirs, &trial);
            let vt = potential(&st, &alpha, p);
            let flat = (vt - value).abs() <= 1e-14 * (value.abs() + 1.0)
                && norm(&stationarity(&st, &alpha, &dirs, p)) < res;
            if vt >= value + 1e-4 * t * slope || flat {
                xi = trial;
                s = st;
                value = vt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let res = norm(&stationarity(&s, &alpha, &dirs, p));
    trace.push(res);
    Err(Error::InnerNonConvergence {
        iterations: trace.len() - 1,
        residual: res,
        trace,
    })
}

/// Value and gradients of the outer problem at `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterEval {
    /// `E(z) = Phi_p(z, xi_p(z))`.
    pub objective: f64,
    /// `dE/dz_i`, by the envelope theorem.
    pub gradient: Vec<f64>,
    pub xi: Vec<f64>,
    /// `I_q([z]) - |mu|`.
    pub constraint: f64,
    /// `dI_q/dz_i = F_q([z], v_i)`.
    pub constraint_gradient: Vec<ChordEstimate>,
    pub i_q: ChordEstimate,
}

/// `dE/dz_i = p s_i^{p-1} alpha_i`, or `alpha_i / s_i` for `p = 0`.
fn objective_gradient(s: &[f64], alpha: &[f64], p: f64) -> Vec<f64> {
    s.iter()
        .zip(alpha)
        .map(|(&x, &a)| if p == 0.0 { a / x } else { p * a * x.powf(p - 1.0) })
        .collect()
}

pub fn outer_objective_and_gradient(
    z: &[f64],
    mu: &DiscreteMeasure,
    config: &SolverConfig,
) -> Result<OuterEval> {
    config.validate()?;
    let inner = xi_star(z, mu, config.p, config.inner_tol)?;
    let s = slacks(z, &mu.directions(), &inner.xi);
    let poly = Polytope::new(HalfspaceSpec::new(mu.directions(), z.to_vec())?)?;
    let fun = chord_functionals(&poly, config.q, config.method, &config.estimator(config.chord_samples, 0))?;
    Ok(OuterEval {
        objective: inner.value,
        gradient: objective_gradient(&s, &mu.weights(), config.p),
        xi: inner.xi,
        constraint: fun.i_q.value - mu.total_mass(),
        constraint_gradient: fun.f_q,
        i_q: fun.i_q,
    })
}

/// A normalized iterate.
#[derive(Debug, Clone)]
struct State {
    z: Vec<f64>,
    objective: f64,
    /// Standard error of `objective` induced by the noise in `I_q`.
    objective_se: f64,
    f_q: Vec<ChordEstimate>,
    i_q: ChordEstimate,
    /// Projected gradient `grad E - nu F_q`.
    projected: Vec<f64>,
    kkt: f64,
    /// Standard error of `kkt` induced by the noise in `F_q`.
    kkt_se: f64,
    inner_residual: f64,
}

struct Problem<'a> {
    mu: &'a DiscreteMeasure,
    dirs: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    mass: f64,
    degree: f64,
    config: &'a SolverConfig,
}

impl<'a> Problem<'a> {
    fn new(mu: &'a DiscreteMeasure, config: &'a SolverConfig) -> Self {
        Self {
            mu,
            dirs: mu.directions(),
            alpha: mu.weights(),
            mass: mu.total_mass(),
            degree: mu.dim() as f64 + config.q - 1.0,
            config,
        }
    }

    /// Tighten, move `xi_p` to the origin, rescale to `I_q = |mu|`.
    fn normalize(&self, z: &[f64], opts: &EstimatorOptions) -> Result<State> {
        let p = self.config.p;
        let poly = Polytope::new(HalfspaceSpec::new(self.dirs.clone(), z.to_vec())?)?;
        let tight = poly.tight_offsets();
        let inner = xi_star(&tight, self.mu, p, self.config.inner_tol)?;
        let centered = slacks(&tight, &self.dirs, &inner.xi);
        let poly = Polytope::new(poly.spec().with_offsets(centered.clone()))?;
        let fun = chord_functionals(&poly, self.config.q, self.config.method, opts)?;
        let i = fun.i_q.value;
        if !(i > 0.0) {
            return Err(Error::Degenerate(format!("chord integral estimate {i:e} is not positive")));
        }
        let lambda = (self.mass / i).powf(1.0 / self.degree);
        let z: Vec<f64> = centered.iter().map(|x| lambda * x).collect();
        let i_q = fun.i_q.scaled(lambda.powf(self.degree));
        let fs = lambda.powf(self.degree - 1.0);
        let f_q: Vec<ChordEstimate> = fun.f_q.into_iter().map(|e| e.scaled(fs)).collect();

        let objective = phi(&z, &vec![0.0; self.mu.dim()], self.mu, p)?;
        let rel_i = fun.i_q.uncertainty() / i;
        let objective_se = if p == 0.0 {
            self.mass / self.degree * rel_i
        } else {
            p / self.degree * objective.abs() * rel_i
        };
        let gradient = objective_gradient(&z, &self.alpha, p);
        let f: Vec<f64> = f_q.iter().map(|e| e.value).collect();
        let ff = dot(&f, &f);
        let nu = if ff > 0.0 { dot(&gradient, &f) / ff } else { 0.0 };
        let projected: Vec<f64> = gradient.iter().zip(&f).map(|(g, fi)| g - nu * fi).collect();
        let gnorm = norm(&gradient);
        let kkt = norm(&projected) / gnorm;
        let kkt_se = nu.abs() * f_q.iter().map(|e| e.uncertainty().powi(2)).sum::<f64>().sqrt() / gnorm;
        Ok(State {
            z,
            objective,
            objective_se,
            f_q,
            i_q,
            projected,
            kkt,
            kkt_se,
            inner_residual: inner.residual * lambda.powf(p - 1.0),
        })
    }
}

/// Result of one run of the outer minimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterResult {
    /// Normalized minimizer: tight, `xi_p = o`, `I_q = |mu|`.
    pub z: Vec<f64>,
    pub objective_trace: Vec<f64>,
    pub kkt_trace: Vec<f64>,
    pub kkt_residual: f64,
    pub converged: bool,
    /// Stopped because the KKT residual fell within Monte Carlo noise at the sample cap.
    pub noise_limited: bool,
    pub iterations: usize,
    pub final_samples: usize,
    pub inner_residual: f64,
    pub i_q: ChordEstimate,
    pub f_q: Vec<ChordEstimate>,
}

/// Projected-gradient minimization of `E` on `{I_q = |mu|}` from `z0`.
pub fn outer_minimize_from(
    mu: &DiscreteMeasure,
    z0: &[f64],
    config: &SolverConfig,
    start: usize,
) -> Result<OuterResult> {
    config.validate()?;
    check_lengths(z0, mu)?;
    let prob = Problem::new(mu, config);
    let stochastic = {
        let probe = Polytope::new(HalfspaceSpec::new(prob.dirs.clone(), z0.to_vec())?)?;
        resolve_method(&probe, config.q, config.method) == ChordMethod::MonteCarlo
    };
    let mut samples = config.chord_samples;
    let mut opts = config.estimator(samples, start);
    let mut state = prob.normalize(z0, &opts)?;
    let mut objective_trace = Vec::new();
    let mut kkt_trace = Vec::new();
    let mut step = 0.1 * norm(&state.z) / norm(&state.projected).max(1e-300);
    let mut failures = 0;
    let mut converged = false;
    let mut noise_limited = false;
    let mut iterations = 0;
    while iterations < config.max_outer_iters {
        objective_trace.push(state.objective);
        kkt_trace.push(state.kkt);
        if state.kkt < config.outer_tol {
            converged = true;
            break;
        }
        let at_cap = samples >= config.max_chord_samples;
        if stochastic && at_cap && state.kkt < 3.0 * state.kkt_se {
            noise_limited = true;
            break;
        }
        iterations += 1;
        let slope = dot(&state.projected, &state.projected);
        let mut t = step;
        let mut next = None;
        for _ in 0..config.max_backtracks {
            let trial: Vec<f64> = state.z.iter().zip(&state.projected).map(|(z, g)| z - t * g).collect();
            if let Ok(cand) = prob.normalize(&trial, &opts) {
                let noise = 2.0 * state.objective_se.hypot(cand.objective_se);
                if cand.objective <= state.objective - config.armijo * t * slope + noise {
                    next = Some(cand);
                    break;
                }
            }
            t *= config.shrink;
        }
        match next {
            Some(cand) => {
                // Barzilai-Borwein step from the normalized iterates
                let s: Vec<f64> = cand.z.iter().zip(&state.z).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = cand.projected.iter().zip(&state.projected).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &y);
                step = if sy > 0.0 { dot(&s, &s) / sy } else { 2.0 * t };
                step = step.min(1e3 * t).max(1e-3 * t);
                state = cand;
                failures = 0;
            }
            None => {
                failures += 1;
                step = t;
                if !stochastic {
                    log::debug!("line search stalled at KKT residual {:e}", state.kkt);
                    break;
                }
                if failures >= 2 {
                    if at_cap {
                        break;
                    }
                    samples = (samples * 2).min(config.max_chord_samples);
                    log::info!("line search failed twice; chord samples raised to {samples}");
                    opts = config.estimator(samples, start);
                    state = prob.normalize(&state.z, &opts)?;
                    failures = 0;
                }
            }
        }
    }
    if !converged && iterations >= config.max_outer_iters {
        objective_trace.push(state.objective);
        kkt_trace.push(state.kkt);
    }
    Ok(OuterResult {
        z: state.z,
        objective_trace,
        kkt_trace,
        kkt_residual: state.kkt,
        converged,
        noise_limited,
        iterations,
        final_samples: samples,
        inner_residual: state.inner_residual,
        i_q: state.i_q,
        f_q: state.f_q,
    })
}

/// Starting offsets: all ones for the first start, log-normal perturbations after.
fn initial_offsets(len: usize, seed: u64, start: usize) -> Vec<f64> {
    if start == 0 {
        return vec![1.0; len];
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(seed, 1000 + start as u64));
    let normal = Normal::new(0.0_f64, 0.25).expect("valid normal");
    (0..len).map(|_| normal.sample(&mut rng).exp()).collect()
}

/// Outer minimization from the default first start.
pub fn outer_minimize(mu: &DiscreteMeasure, config: &SolverConfig) -> Result<OuterResult> {
    outer_minimize_from(mu, &initial_offsets(mu.len(), config.seed, 0), config, 0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartSummary {
    pub start: usize,
    pub kkt_residual: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Distance from the origin to the boundary of the solution.
    pub inner_radius: f64,
    /// Largest vertex norm of the solution.
    pub outer_radius: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub noise_limited: bool,
    pub inner_residual: f64,
    pub chord_method: ChordMethod,
    pub final_samples: usize,
    pub best_start: usize,
    pub starts: Vec<StartSummary>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub config: SolverConfig,
    pub polytope: PolytopeJson,
    /// Normalized minimizer before the final rescale.
    pub z_star: Vec<f64>,
    /// `xi_p` of the solution offsets; approximately the origin.
    pub xi_star: Vec<f64>,
    pub target_measure: Vec<f64>,
    pub achieved_measure: Vec<f64>,
    pub achieved_std_error: Vec<f64>,
    /// Per-atom `|achieved - target| / target`.
    pub residuals: Vec<f64>,
    pub max_rel: f64,
    pub objective_trace: Vec<f64>,
    pub kkt_trace: Vec<f64>,
    /// Applied scale, from the mass ratio.
    pub scale_factor: f64,
    /// Scale predicted by the optimality condition.
    pub closed_form_scale: f64,
    /// `|closed_form_scale / scale_factor - 1|`.
    pub scale_discrepancy: f64,
    pub converged: bool,
    pub diagnostics: Diagnostics,
}

impl SolutionReport {
    pub fn polytope(&self) -> Result<Polytope> {
        Polytope::new(HalfspaceSpec::new(
            self.polytope.normals.clone(),
            self.polytope.offsets.clone(),
        )?)
    }
}

/// `(Phi_p(z, o) / ((n + q - 1) |mu|))^{1/(n+q-1-p)}`, or
/// `(1/(n + q - 1))^{1/(n+q-1)}` for `p = 0`.
pub fn closed_form_scale(z: &[f64], mu: &DiscreteMeasure, p: f64, q: f64) -> Result<f64> {
    let d = mu.dim() as f64 + q - 1.0;
    if p == 0.0 {
        return Ok((1.0 / d).powf(1.0 / d));
    }
    let value = phi(z, &vec![0.0; mu.dim()], mu, p)?;
    Ok((value / (d * mu.total_mass())).powf(1.0 / (d - p)))
}

fn mass_ratio_scale(z: &[f64], f_q: &[ChordEstimate], mu: &DiscreteMeasure, p: f64, q: f64) -> Result<f64> {
    let total: f64 = z.iter().zip(f_q).map(|(h, f)| h.powf(1.0 - p) * f.value).sum();
    if !(total > 0.0) {
        return Err(Error::NonpositiveMass(total));
    }
    let d = mu.dim() as f64 + q - 1.0 - p;
    Ok((mu.total_mass() / total).powf(1.0 / d))
}

fn build_report(
    mu: &DiscreteMeasure,
    config: &SolverConfig,
    outer: &OuterResult,
    starts: Vec<StartSummary>,
    best_start: usize,
    warnings: Vec<String>,
) -> Result<SolutionReport> {
    let (p, q) = (config.p, config.q);
    let z = &outer.z;
    let t = mass_ratio_scale(z, &outer.f_q, mu, p, q)?;
    let closed = closed_form_scale(z, mu, p, q)?;
    let dirs = mu.directions();
    let poly = Polytope::new(HalfspaceSpec::new(dirs, z.iter().map(|x| t * x).collect())?)?;
    let h = poly.tight_offsets();
    let fs = t.powf(mu.dim() as f64 + q - 2.0);
    let achieved: Vec<ChordEstimate> = outer
        .f_q
        .iter()
        .zip(&h)
        .map(|(f, hi)| f.scaled(fs * hi.powf(1.0 - p)))
        .collect();
    let target = mu.weights();
    let residuals: Vec<f64> = achieved
        .iter()
        .zip(&target)
        .map(|(a, t)| (a.value - t).abs() / t)
        .collect();
    let xi = xi_star(&h, mu, p, config.inner_tol).map(|s| s.xi).unwrap_or_else(|_| vec![f64::NAN; mu.dim()]);
    let outer_radius = poly.vertices().iter().map(|v| norm(v)).fold(0.0, f64::max);
    let method = resolve_method(&poly, q, config.method);
    Ok(SolutionReport {
        config: config.clone(),
        polytope: poly.to_json(),
        z_star: z.clone(),
        xi_star: xi,
        target_measure: target,
        achieved_measure: achieved.iter().map(|e| e.value).collect(),
        achieved_std_error: achieved.iter().map(|e| e.uncertainty()).collect(),
        max_rel: residuals.iter().copied().fold(0.0, f64::max),
        residuals,
        objective_trace: outer.objective_trace.clone(),
        kkt_trace: outer.kkt_trace.clone(),
        scale_factor: t,
        closed_form_scale: closed,
        scale_discrepancy: (closed / t - 1.0).abs(),
        converged: outer.converged,
        diagnostics: Diagnostics {
            inner_radius: poly.min_slack(&vec![0.0; mu.dim()]),
            outer_radius,
            iterations: outer.iterations,
            kkt_residual: outer.kkt_residual,
            noise_limited: outer.noise_limited,
            inner_residual: outer.inner_residual,
            chord_method: method,
            final_samples: outer.final_samples,
            best_start,
            starts,
            warnings,
        },
    })
}

/// Rescales a normalized minimizer into the solution `P = t [z*]`, with `t`
/// from the mass ratio `|mu| / |F_{p,q}([z*], .)|`.
pub fn extract_solution(z_star: &[f64], mu: &DiscreteMeasure, config: &SolverConfig) -> Result<SolutionReport> {
    config.validate()?;
    check_lengths(z_star, mu)?;
    let poly = Polytope::new(HalfspaceSpec::new(mu.directions(), z_star.to_vec())?)?;
    let z = poly.tight_offsets();
    if z.iter().any(|&x| x <= 0.0) {
        return Err(Error::OriginOutside {
            slack: z.iter().copied().fold(f64::INFINITY, f64::min),
        });
    }
    let fun = chord_functionals(&poly, config.q, config.method, &config.estimator(config.chord_samples, 0))?;
    let outer = OuterResult {
        z,
        objective_trace: vec![],
        kkt_trace: vec![],
        kkt_residual: f64::NAN,
        converged: false,
        noise_limited: false,
        iterations: 0,
        final_samples: config.chord_samples,
        inner_residual: f64::NAN,
        i_q: fun.i_q,
        f_q: fun.f_q,
    };
    build_report(mu, config, &outer, vec![], 0, vec![])
}

/// Admissibility gates for `solve`; returns warnings that do not block it.
pub fn admissibility(mu: &DiscreteMeasure, config: &SolverConfig) -> Result<Vec<String>> {
    config.validate()?;
    if !hemisphere_check(mu) {
        return Err(Error::Hemisphere);
    }
    let mut warnings = Vec::new();
    if config.p == 0.0 {
        let mode = SubsetMode::spot_check(config.seed);
        if !general_position_check_with(&mu.directions(), mu.dim(), mode)? {
            return Err(Error::GeneralPosition);
        }
        let n = mu.dim() as f64;
        if config.q > 1.0 && config.q < n + 1.0 {
            let report = subspace_mass_check_with(mu, config.q, mode)?;
            if !report.passes {
                let msg = format!(
                    "subspace mass inequality fails in dimension {} (mass ratio {:.4}); \
                     it is sufficient, not necessary, so solving anyway",
                    report.worst_dim, report.worst_ratio
                );
                log::warn!("{msg}");
                warnings.push(msg);
            }
        }
    }
    Ok(warnings)
}

/// Solves `F_{p,q}(P, .) = mu` with several starts, keeping the smallest KKT residual.
pub fn solve(mu: &DiscreteMeasure, config: &SolverConfig) -> Result<SolutionReport> {
    let warnings = admissibility(mu, config)?;
    let runs: Vec<Result<OuterResult>> = (0..config.starts)
        .into_par_iter()
        .map(|k| outer_minimize_from(mu, &initial_offsets(mu.len(), config.seed, k), config, k))
        .collect();
    let mut summaries = Vec::new();
    let mut best: Option<(usize, &OuterResult)> = None;
    for (k, run) in runs.iter().enumerate() {
        match run {
            Ok(r) => {
                log::info!(
                    "start {k}: KKT residual {:e} after {} iterations (converged: {})",
                    r.kkt_residual,
                    r.iterations,
                    r.converged
                );
                summaries.push(StartSummary {
                    start: k,
                    kkt_residual: r.kkt_residual,
                    objective: r.objective_trace.last().copied().unwrap_or(f64::NAN),
                    iterations: r.iterations,
                    converged: r.converged,
                    error: None,
                });
                if best.is_none_or(|(_, b)| r.kkt_residual < b.kkt_residual) {
                    best = Some((k, r));
                }
            }
            Err(e) => {
                log::warn!("start {k} failed: {e}");
                summaries.push(StartSummary {
                    start: k,
                    kkt_residual: f64::NAN,
                    objective: f64::NAN,
                    iterations: 0,
                    converged: false,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    match best {
        Some((k, r)) => build_report(mu, config, r, summaries, k, warnings),
        None => Err(runs.into_iter().find_map(|r| r.err()).expect("at least one start")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousLevel {
    pub m: usize,
    pub atoms: usize,
    pub total_mass: f64,
    pub report: SolutionReport,
    /// Hausdorff distance to the previous level's solution.
    pub hausdorff_to_previous: Option<f64>,
}

/// Discretizes `density` at each resolution, solves, and reports the
/// Hausdorff distance between successive solutions.
pub fn solve_continuous<D: SphereDensity + ?Sized>(
    density: &D,
    resolutions: &[usize],
    config: &SolverConfig,
) -> Result<Vec<ContinuousLevel>> {
    let mut levels: Vec<ContinuousLevel> = Vec::new();
    let mut previous: Option<Polytope> = None;
    for &m in resolutions {
        let disc = discretize(density, m, derive_seed(config.seed, m as u64))?;
        let report = solve(&disc.measure, config)?;
        let poly = report.polytope()?;
        let hausdorff_to_previous = previous.as_ref().map(|prev| hausdorff_distance(prev, &poly));
        levels.push(ContinuousLevel {
            m,
            atoms: disc.measure.len(),
            total_mass: disc.measure.total_mass(),
            report,
            hausdorff_to_previous,
        });
        previous = Some(poly);
    }
    Ok(levels)
}
