//! Verification harness: residuals of a candidate solution, finite-difference
//! checks of the variational formula, and the invariant battery.
//!
//! Gaps are measured in combined standard errors. Deterministic paths carry a
//! small relative floor in place of a standard error so that rounding and
//! quadrature error do not produce infinite gaps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chord::{
    chord_functionals, chord_integral, chord_integral_lines, chord_integral_lines_difference,
    chord_integral_quadrature, dual_volume, lp_chord_measure, lp_weights, resolve_method,
    unit_ball_volume, ChordEstimate, ChordMethod, EstimatorOptions, Normalization,
};
use crate::error::{Error, Result};
use crate::linalg::{dist, norm};
use crate::measure::{discretize, sandwich_threshold, DensitySpec, DiscreteMeasure};
use crate::polytope::shapes::{cube_spec, random_spec};
use crate::polytope::{HalfspaceSpec, Polytope};
use crate::rng::derive_seed;

/// Relative floor on the uncertainty of deterministic values.
const DETERMINISTIC_FLOOR: f64 = 1e-9;
/// Gap threshold in combined standard errors.
pub const SIGMA_THRESHOLD: f64 = 3.0;
/// Atom directions within this distance of a normal are matched to it.
const MATCH_TOL: f64 = 1e-9;

fn combined(a: f64, b: f64, scale: f64, floor: f64) -> f64 {
    a.hypot(b).max(floor * scale.abs().max(1e-300))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomResidual {
    pub direction: Vec<f64>,
    pub target: f64,
    pub achieved: f64,
    pub std_error: f64,
    pub rel_error: f64,
    /// False when no facet normal of the polytope matches the direction.
    pub matched: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub per_atom: Vec<AtomResidual>,
    pub max_rel: f64,
    /// `| |F_{p,q}| / |mu| - 1 |` over matched atoms.
    pub total_mass_rel: f64,
    /// Standard error of the achieved total mass.
    pub combined_std_error: f64,
}

/// Compares `F_{p,q}(P, .)` with `mu` atom by atom.
pub fn residual(
    poly: &Polytope,
    mu: &DiscreteMeasure,
    p: f64,
    q: f64,
    method: ChordMethod,
    opts: &EstimatorOptions,
) -> Result<ResidualReport> {
    if poly.dim() != mu.dim() {
        return Err(Error::Parameter("dimension mismatch between polytope and measure".into()));
    }
    let f = lp_chord_measure(poly, p, q, method, opts)?;
    let mut per_atom = Vec::with_capacity(mu.len());
    let (mut achieved_total, mut var) = (0.0, 0.0);
    for atom in mu.atoms() {
        let hit = poly.normals().iter().position(|v| dist(v, &atom.v) < MATCH_TOL);
        let (achieved, se) = hit.map_or((0.0, 0.0), |i| (f[i].value, f[i].uncertainty()));
        achieved_total += achieved;
        var += se * se;
        per_atom.push(AtomResidual {
            direction: atom.v.clone(),
            target: atom.alpha,
            achieved,
            std_error: se,
            rel_error: (achieved - atom.alpha).abs() / atom.alpha,
            matched: hit.is_some(),
        });
    }
    Ok(ResidualReport {
        max_rel: per_atom.iter().map(|a| a.rel_error).fold(0.0, f64::max),
        total_mass_rel: (achieved_total / mu.total_mass() - 1.0).abs(),
        combined_std_error: var.sqrt(),
        per_atom,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationalCheck {
    /// Central difference of `I_q` along `beta`.
    pub lhs: f64,
    pub lhs_std_error: f64,
    /// `sum_i beta_i F_q(P, v_i)`.
    pub rhs: f64,
    pub rhs_std_error: f64,
    /// `|lhs - rhs|` in combined standard errors.
    pub gap: f64,
}

/// Default step: `1e-4` times the mean absolute offset or the extent of the
/// smallest nonempty facet, whichever is smaller. Higher derivatives of `I_q`
/// grow near short facets (like `len^{q-2}`), so the step has to resolve them.
pub fn default_step(spec: &HalfspaceSpec) -> f64 {
    let mean = spec.offsets().iter().map(|z| z.abs()).sum::<f64>() / spec.len() as f64;
    let e = 1.0 / (spec.dim() as f64 - 1.0);
    let smallest = Polytope::new(spec.clone())
        .map(|p| {
            p.facet_areas()
                .into_iter()
                .filter(|a| *a > 0.0)
                .map(|a| a.powf(e))
                .fold(f64::INFINITY, f64::min)
        })
        .unwrap_or(f64::INFINITY);
    1e-4 * mean.min(smallest)
}

/// Checks `d/dt I_q([z + t beta]) = sum_i beta_i F_q([z], v_i)` at `t = 0`.
///
/// Monte Carlo paths difference `I_q` with common lines, so the noise of the
/// quotient stays bounded as `h` shrinks. Offsets are used as given; a
/// redundant constraint touching the body makes `I_q` non-differentiable.
pub fn variational_check(
    spec: &HalfspaceSpec,
    beta: &[f64],
    q: f64,
    h: f64,
    method: ChordMethod,
    opts: &EstimatorOptions,
) -> Result<VariationalCheck> {
    if beta.len() != spec.len() {
        return Err(Error::Parameter("beta length differs from the number of normals".into()));
    }
    if !(h > 0.0) {
        return Err(Error::Parameter(format!("step h = {h} must be positive")));
    }
    let shifted = |s: f64| {
        let z = spec.offsets().iter().zip(beta).map(|(z, b)| z + s * h * b).collect();
        Polytope::new(spec.with_offsets(z))
    };
    let base = Polytope::new(spec.clone())?;
    let (plus, minus) = (shifted(1.0)?, shifted(-1.0)?);
    let method = resolve_method(&base, q, method);
    let f = chord_functionals(&base, q, method, opts)?.f_q;
    let rhs = beta.iter().zip(&f).map(|(b, e)| b * e.value).sum::<f64>();
    let rhs_se = beta
        .iter()
        .zip(&f)
        .map(|(b, e)| (b * e.uncertainty()).powi(2))
        .sum::<f64>()
        .sqrt();
    let (lhs, lhs_se) = match method {
        ChordMethod::MonteCarlo => {
            let d = chord_integral_lines_difference(&plus, &minus, q, opts)?;
            (d.value / (2.0 * h), d.std_error / (2.0 * h))
        }
        _ => {
            let a = chord_functionals(&plus, q, method, opts)?.i_q;
            let b = chord_functionals(&minus, q, method, opts)?.i_q;
            ((a.value - b.value) / (2.0 * h), a.uncertainty().hypot(b.uncertainty()) / (2.0 * h))
        }
    };
    // second-order truncation of the central difference
    let floor = if method == ChordMethod::MonteCarlo { DETERMINISTIC_FLOOR } else { 1e-6 };
    let sigma = combined(lhs_se, rhs_se, rhs, floor);
    Ok(VariationalCheck {
        lhs,
        lhs_std_error: lhs_se,
        rhs,
        rhs_std_error: rhs_se,
        gap: (lhs - rhs).abs() / sigma,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryShape {
    pub name: String,
    pub spec: HalfspaceSpec,
}

/// Shapes and parameters exercised by [`run_battery`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Battery {
    pub shapes: Vec<BatteryShape>,
    pub qs: Vec<f64>,
    pub ps: Vec<f64>,
    /// Scale factors for the homogeneity rows.
    #[serde(default = "default_scales")]
    pub scales: Vec<f64>,
    /// Monte Carlo samples per estimate.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Resolutions for the discretizer sandwich rows, per dimension 2 and 3.
    #[serde(default = "default_sandwich")]
    pub sandwich: Vec<(usize, usize)>,
}

fn default_scales() -> Vec<f64> {
    vec![0.5, 2.0]
}

fn default_samples() -> usize {
    100_000
}

fn default_sandwich() -> Vec<(usize, usize)> {
    vec![(2, 1), (2, 2), (2, 4), (3, 1), (3, 2)]
}

impl Battery {
    /// Square, cube, three random polygons and two random 3-polytopes.
    pub fn default_battery(seed: u64) -> Self {
        let mut shapes = vec![
            BatteryShape { name: "square".into(), spec: cube_spec(2, 1.0) },
            BatteryShape { name: "cube".into(), spec: cube_spec(3, 1.0) },
        ];
        for k in 0..3u64 {
            shapes.push(BatteryShape {
                name: format!("polygon-{}", k + 1),
                spec: random_spec(2, 5 + 2 * k as usize, 0.6, 1.4, derive_seed(seed, 10 + k)),
            });
        }
        for k in 0..2u64 {
            shapes.push(BatteryShape {
                name: format!("polytope-{}", k + 1),
                spec: random_spec(3, 8 + 2 * k as usize, 0.6, 1.4, derive_seed(seed, 20 + k)),
            });
        }
        Self {
            shapes,
            qs: vec![0.5, 1.0, 1.5, 2.0, 3.0],
            ps: vec![0.0, 0.3, 0.7],
            scales: default_scales(),
            samples: default_samples(),
            sandwich: default_sandwich(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRow {
    pub check: String,
    pub shape: String,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub measured: f64,
    pub expected: f64,
    /// Combined standard error, or the deterministic floor.
    pub sigma: f64,
    /// `|measured - expected| / sigma`.
    pub gap: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl SuiteRow {
    fn new(check: &str, shape: &str, p: Option<f64>, q: Option<f64>, measured: f64, expected: f64, sigma: f64) -> Self {
        let gap = (measured - expected).abs() / sigma;
        Self {
            check: check.into(),
            shape: shape.into(),
            p,
            q,
            measured,
            expected,
            sigma,
            gap,
            threshold: SIGMA_THRESHOLD,
            pass: gap <= SIGMA_THRESHOLD,
        }
    }

    fn compare(check: &str, shape: &str, p: Option<f64>, q: Option<f64>, a: &ChordEstimate, b: &ChordEstimate) -> Self {
        let sigma = combined(a.uncertainty(), b.uncertainty(), b.value, DETERMINISTIC_FLOOR);
        Self::new(check, shape, p, q, a.value, b.value, sigma)
    }

    /// Against an exact value.
    fn exact(check: &str, shape: &str, q: Option<f64>, a: &ChordEstimate, want: f64) -> Self {
        let sigma = combined(a.uncertainty(), 0.0, want, DETERMINISTIC_FLOOR);
        Self::new(check, shape, None, q, a.value, want, sigma)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub rows: Vec<SuiteRow>,
    pub passed: usize,
    pub failed: usize,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.failed == 0
    }
}

fn sum(estimates: &[ChordEstimate]) -> ChordEstimate {
    crate::chord::total(estimates)
}

/// Closed forms of `I_q` at `q = 1` and `q = n + 1`, with the true constants.
fn closed_form(poly: &Polytope, q: f64) -> Option<f64> {
    let n = poly.dim();
    if (q - 1.0).abs() < 1e-12 {
        Some(poly.volume())
    } else if (q - (n as f64 + 1.0)).abs() < 1e-12 {
        Some((n as f64 + 1.0) / unit_ball_volume(n) * poly.volume().powi(2))
    } else {
        None
    }
}

fn shape_q_rows(
    shape: &BatteryShape,
    q: f64,
    battery: &Battery,
    opts: &EstimatorOptions,
) -> Result<Vec<SuiteRow>> {
    let name = shape.name.as_str();
    let poly = Polytope::new(shape.spec.clone())?;
    let n = poly.dim();
    let qs = Some(q);
    let mut rows = Vec::new();

    let volume_form = chord_integral(&poly, q, opts)?;
    let line_form = chord_integral_lines(&poly, q, &EstimatorOptions { seed: derive_seed(opts.seed, 1), ..*opts })?;
    rows.push(SuiteRow::compare("estimator-agreement", name, None, qs, &volume_form, &line_form));
    let quadrature = if n == 2 {
        let iq = chord_integral_quadrature(&poly, q, &opts.normalization)?;
        rows.push(SuiteRow::compare("quadrature-agreement", name, None, qs, &iq, &line_form));
        Some(iq)
    } else {
        None
    };
    let exact = closed_form(&poly, q);
    if let Some(want) = exact {
        rows.push(SuiteRow::exact("closed-form-volume", name, qs, &volume_form, want));
        rows.push(SuiteRow::exact("closed-form-line", name, qs, &line_form, want));
        if let Some(iq) = &quadrature {
            rows.push(SuiteRow::exact("closed-form-quadrature", name, qs, iq, want));
        }
    }

    // |G_q| = I_q, against the closed form or the independent line form
    let fun = chord_functionals(&poly, q, ChordMethod::Auto, opts)?;
    let weights = lp_weights(&poly, 0.0)?;
    let g: Vec<ChordEstimate> = fun
        .f_q
        .iter()
        .zip(&weights)
        .map(|(f, h)| f.scaled(h / (n as f64 + q - 1.0)))
        .collect();
    let g_total = sum(&g);
    match exact {
        Some(want) => rows.push(SuiteRow::exact("total-measure", name, qs, &g_total, want)),
        None => rows.push(SuiteRow::compare("total-measure", name, None, qs, &g_total, &line_form)),
    }

    // translation invariance of I_q and F_q
    let shift: Vec<f64> = (0..n).map(|k| 0.1 * (k as f64 + 1.0)).collect();
    let moved = poly.translated(&shift)?;
    let fun_moved = chord_functionals(&moved, q, ChordMethod::Auto, opts)?;
    rows.push(SuiteRow::compare("translation-I", name, None, qs, &fun_moved.i_q, &fun.i_q));
    let worst = fun
        .f_q
        .iter()
        .zip(&fun_moved.f_q)
        .map(|(a, b)| SuiteRow::compare("translation-F", name, None, qs, b, a))
        .max_by(|a, b| a.gap.total_cmp(&b.gap));
    rows.extend(worst);

    // homogeneity of I_q, F_q and F_{p,q}
    for &t in &battery.scales {
        let scaled = poly.scaled(t)?;
        let fun_t = chord_functionals(&scaled, q, ChordMethod::Auto, opts)?;
        let d = n as f64 + q - 1.0;
        rows.push(SuiteRow::compare(
            "homogeneity-I",
            name,
            None,
            qs,
            &fun_t.i_q,
            &fun.i_q.scaled(t.powf(d)),
        ));
        rows.push(SuiteRow::compare(
            "homogeneity-F",
            name,
            None,
            qs,
            &sum(&fun_t.f_q),
            &sum(&fun.f_q).scaled(t.powf(d - 1.0)),
        ));
        for &p in &battery.ps {
            let w = lp_weights(&poly, p)?;
            let wt = lp_weights(&scaled, p)?;
            let a = sum(&fun.f_q.iter().zip(&w).map(|(f, w)| f.scaled(*w)).collect::<Vec<_>>());
            let b = sum(&fun_t.f_q.iter().zip(&wt).map(|(f, w)| f.scaled(*w)).collect::<Vec<_>>());
            rows.push(SuiteRow::compare(
                "homogeneity-Fpq",
                name,
                Some(p),
                qs,
                &b,
                &a.scaled(t.powf(d - p)),
            ));
        }
    }
    Ok(rows)
}

fn shape_rows(shape: &BatteryShape, opts: &EstimatorOptions) -> Result<Vec<SuiteRow>> {
    let name = shape.name.as_str();
    let poly = Polytope::new(shape.spec.clone())?;
    let n = poly.dim();
    let x = poly.interior_point().to_vec();
    let mut rows = vec![
        SuiteRow::exact("dual-volume-0", name, None, &dual_volume(&poly, &x, 0.0, opts)?, unit_ball_volume(n)),
        SuiteRow::exact("dual-volume-n", name, None, &dual_volume(&poly, &x, n as f64, opts)?, poly.volume()),
    ];
    let s = norm(&poly.minkowski_sum());
    rows.push(SuiteRow::new(
        "minkowski-relation",
        name,
        None,
        None,
        s,
        0.0,
        DETERMINISTIC_FLOOR * poly.surface_area(),
    ));
    Ok(rows)
}

fn sandwich_rows(n: usize, m: usize, seed: u64) -> Result<Vec<SuiteRow>> {
    let density = DensitySpec::Uniform { dim: n, mass: 1.0 }.build()?;
    let disc = discretize(&density, m, seed)?;
    let name = format!("sandwich-n{n}-m{m}");
    let mut rows = vec![SuiteRow::new(
        "mass-preservation",
        &name,
        None,
        None,
        disc.measure.total_mass(),
        1.0,
        1e-12 / SIGMA_THRESHOLD,
    )];
    if m >= sandwich_threshold(n) {
        let dirs = disc.measure.directions();
        let q = Polytope::new(HalfspaceSpec::new(dirs.clone(), vec![1.0; dirs.len()])?)?;
        let outer = q.vertices().iter().map(|v| norm(v)).fold(0.0, f64::max);
        let inner = q.min_slack(&vec![0.0; n]);
        // passes iff 1 <= inner and outer <= 2
        let excess = (1.0 - inner).max(outer - 2.0).max(0.0);
        let mut row = SuiteRow::new("sandwich", &name, None, None, outer, 2.0, 1.0);
        row.gap = excess;
        row.threshold = 1e-12;
        row.pass = excess <= 1e-12;
        rows.push(row);
    }
    Ok(rows)
}

fn error_row(check: &str, shape: &str, q: Option<f64>, e: &Error) -> SuiteRow {
    log::warn!("{check} on {shape} failed to evaluate: {e}");
    let mut row = SuiteRow::new(check, shape, None, q, f64::NAN, f64::NAN, 1.0);
    row.gap = f64::INFINITY;
    row.pass = false;
    row
}

/// Runs every row of `battery`. Rows are independent and seeded by position,
/// so the table is reproducible.
pub fn run_battery(battery: &Battery, seed: u64, normalization: Normalization) -> SuiteReport {
    let opts = |label: u64| EstimatorOptions {
        samples: battery.samples,
        seed: derive_seed(seed, label),
        normalization,
    };
    let mut jobs: Vec<(usize, Option<usize>)> = Vec::new();
    for s in 0..battery.shapes.len() {
        jobs.push((s, None));
        for k in 0..battery.qs.len() {
            jobs.push((s, Some(k)));
        }
    }
    let mut rows: Vec<SuiteRow> = jobs
        .par_iter()
        .enumerate()
        .map(|(label, &(s, k))| {
            let shape = &battery.shapes[s];
            let o = opts(label as u64);
            match k {
                None => shape_rows(shape, &o).unwrap_or_else(|e| vec![error_row("shape", &shape.name, None, &e)]),
                Some(k) => {
                    let q = battery.qs[k];
                    shape_q_rows(shape, q, battery, &o)
                        .unwrap_or_else(|e| vec![error_row("chord", &shape.name, Some(q), &e)])
                }
            }
        })
        .flatten()
        .collect();
    for &(n, m) in &battery.sandwich {
        rows.extend(sandwich_rows(n, m, derive_seed(seed, 10_000 + m as u64)).unwrap_or_else(|e| {
            vec![error_row("sandwich", &format!("sandwich-n{n}-m{m}"), None, &e)]
        }));
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    SuiteReport {
        seed,
        passed: rows.len() - failed,
        failed,
        rows,
    }
}

/// The default battery with the true constants.
pub fn invariant_suite(seed: u64) -> SuiteReport {
    run_battery(&Battery::default_battery(seed), seed, Normalization::default())
}

#[cfg(test)]
mod tests;
