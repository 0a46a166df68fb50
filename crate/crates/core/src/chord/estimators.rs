//! Monte Carlo estimators: the volume form of `I_q`, the line form of `I_q`
//! and the facet form of `F_q`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{unit_ball_volume, ChordEstimate, EstimatorKind, EstimatorOptions};
use crate::error::{Error, Result};
use crate::linalg::{complement_basis, dot, norm};
use crate::polytope::Polytope;
use crate::rng::{derive_seed, random_frame, run_sharded, unit_vector, Moments, SHARDS};

/// Lines drawn per direction in the line estimator.
const LINES_PER_DIRECTION: usize = 8;
/// Share of `P` treated as the boundary layer when `q < 1`.
const LAYER_FRACTION: f64 = 0.1;
/// Share of the samples spent in the boundary layer (twice its volume share).
const LAYER_SAMPLE_SHARE: f64 = 0.2;

/// Equally spread directions with a random orientation: 8 angles with a random
/// phase in the plane, `±` a Haar frame otherwise. Each member is uniform on
/// the sphere.
fn stencil<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Vec<f64>> {
    if n == 2 {
        let k = 8;
        let phase = rng.gen::<f64>() * 2.0 * PI / k as f64;
        (0..k)
            .map(|j| {
                let t = phase + 2.0 * PI * j as f64 / k as f64;
                vec![t.cos(), t.sin()]
            })
            .collect()
    } else {
        random_frame(rng, n)
            .into_iter()
            .flat_map(|v| {
                let m: Vec<f64> = v.iter().map(|x| -x).collect();
                [v, m]
            })
            .collect()
    }
}

/// Mean of `rho^{q-1}` over a stencil at `z`; with `inward = Some(v)` the
/// directions are reflected into the hemisphere `u . v <= 0`.
fn stencil_mean<R: Rng + ?Sized>(
    p: &Polytope,
    z: &[f64],
    q: f64,
    inward: Option<&[f64]>,
    rng: &mut R,
) -> f64 {
    let dirs = stencil(rng, p.dim());
    let k = dirs.len() as f64;
    dirs.into_iter()
        .map(|mut u| {
            if let Some(v) = inward {
                let c = dot(&u, v);
                if c > 0.0 {
                    u.iter_mut().zip(v).for_each(|(ui, vi)| *ui -= 2.0 * c * vi);
                }
            }
            p.ray_exit(z, &u).powf(q - 1.0)
        })
        .sum::<f64>()
        / k
}

fn sample_moments<F>(seed: u64, count: usize, f: F) -> Moments
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> f64 + Sync,
{
    let parts = run_sharded(seed, count, |rng, c| {
        let mut m = Moments::default();
        for _ in 0..c {
            m.push(f(rng));
        }
        m
    });
    Moments::merged(&parts)
}

/// Inner parallel body `[z - tau]` holding `1 - LAYER_FRACTION` of the volume.
fn layer_split(p: &Polytope) -> Option<(Polytope, f64)> {
    let z = p.spec().offsets();
    let inner = |tau: f64| {
        let shifted: Vec<f64> = z.iter().map(|zi| zi - tau).collect();
        Polytope::new(p.spec().with_offsets(shifted)).ok()
    };
    let target = 1.0 - LAYER_FRACTION;
    let (mut lo, mut hi) = (0.0, p.inradius());
    let mut best = None;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        match inner(mid) {
            Some(q) => {
                let frac = q.volume() / p.volume();
                if frac > target {
                    lo = mid;
                } else {
                    hi = mid;
                }
                let done = (frac - target).abs() < 1e-3;
                best = Some((q, mid));
                if done {
                    break;
                }
            }
            None => hi = mid,
        }
    }
    best
}

/// Volume-form estimate of `I_q = (q / omega_n) int_P V~_{q-1}(P, z) dz`.
///
/// For `q < 1` the integrand blows up near the boundary; the outer layer
/// (10% of the volume, by halfspace slack) then receives twice its share of
/// samples and the strata are recombined with their volume weights.
pub fn chord_integral(p: &Polytope, q: f64, opts: &EstimatorOptions) -> Result<ChordEstimate> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::Parameter(format!(
            "volume-form chord integral needs q > 0 (got {q}); use closed_form_i0 for q = 0"
        )));
    }
    let n = p.dim();
    let norm = &opts.normalization;
    let factor = q / norm.omega(n) * p.volume() * norm.sphere(n) / n as f64;
    let samples = opts.samples.max(2 * SHARDS);
    let estimate = |mean: f64, se: f64, count: u64| ChordEstimate {
        value: factor * mean,
        std_error: factor * se,
        samples: count,
        estimator: EstimatorKind::VolumeForm,
        error_bound: 0.0,
    };

    let split = if q < 1.0 { layer_split(p) } else { None };
    let Some((inner, tau)) = split else {
        let m = sample_moments(opts.seed, samples, |rng| {
            let z = p.sample_interior(rng);
            stencil_mean(p, &z, q, None, rng)
        });
        return Ok(estimate(m.mean, m.std_error(), m.count));
    };

    let n_layer = ((samples as f64 * LAYER_SAMPLE_SHARE) as usize).max(SHARDS);
    let n_inner = samples - n_layer;
    let m_in = sample_moments(derive_seed(opts.seed, 1), n_inner, |rng| {
        let z = inner.sample_interior(rng);
        stencil_mean(p, &z, q, None, rng)
    });
    let m_layer = sample_moments(derive_seed(opts.seed, 2), n_layer, |rng| {
        let z = loop {
            let z = p.sample_interior(rng);
            if p.min_slack(&z) < tau {
                break z;
            }
        };
        stencil_mean(p, &z, q, None, rng)
    });
    let w_in = inner.volume() / p.volume();
    let w_layer = 1.0 - w_in;
    let mean = w_in * m_in.mean + w_layer * m_layer.mean;
    let se = (w_in * m_in.std_error()).hypot(w_layer * m_layer.std_error());
    Ok(estimate(mean, se, m_in.count + m_layer.count))
}

/// A point uniform in the centered `(n-1)`-ball of radius `r`, expressed in
/// `basis`; index `k` of `LINES_PER_DIRECTION` selects a stratum.
fn window_point<R: Rng + ?Sized>(rng: &mut R, basis: &[Vec<f64>], r: f64, k: usize) -> Vec<f64> {
    let m = basis.len();
    let kf = LINES_PER_DIRECTION as f64;
    let coords: Vec<f64> = match m {
        1 => vec![r * (-1.0 + 2.0 * (k as f64 + rng.gen::<f64>()) / kf)],
        2 => {
            let t = 2.0 * PI * (k as f64 + rng.gen::<f64>()) / kf;
            let s = r * rng.gen::<f64>().sqrt();
            vec![s * t.cos(), s * t.sin()]
        }
        _ => {
            let g: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
            let s = r * rng.gen::<f64>().powf(1.0 / m as f64) / norm(&g);
            g.into_iter().map(|x| x * s).collect()
        }
    };
    let mut y = vec![0.0; basis[0].len()];
    for (c, b) in coords.iter().zip(basis) {
        y.iter_mut().zip(b).for_each(|(yi, bi)| *yi += c * bi);
    }
    y
}

/// Per direction, the mean of `|P_j ∩ l|^q` over a stratified set of lines,
/// reduced across polytopes by `combine`.
fn line_moments<C>(
    polys: &[&Polytope],
    center: &[f64],
    radius: f64,
    q: f64,
    opts: &EstimatorOptions,
    combine: C,
) -> Moments
where
    C: Fn(&[f64]) -> f64 + Sync,
{
    let n = center.len();
    let groups = (opts.samples / LINES_PER_DIRECTION).max(2 * SHARDS);
    sample_moments(opts.seed, groups, |rng| {
        let u = unit_vector(rng, n);
        let basis = complement_basis(&u);
        let mut acc = vec![0.0; polys.len()];
        for k in 0..LINES_PER_DIRECTION {
            let y = window_point(rng, &basis, radius, k);
            let x: Vec<f64> = center.iter().zip(&y).map(|(c, y)| c + y).collect();
            for (a, p) in acc.iter_mut().zip(polys) {
                let l = p.chord_length(&x, &u);
                if l > 0.0 {
                    *a += l.powf(q);
                }
            }
        }
        acc.iter_mut().for_each(|a| *a /= LINES_PER_DIRECTION as f64);
        combine(&acc)
    })
}

fn line_factor(n: usize, radius: f64, opts: &EstimatorOptions) -> f64 {
    let norm = &opts.normalization;
    norm.line(n) * norm.sphere(n) * unit_ball_volume(n - 1) * radius.powi(n as i32 - 1)
}

/// Line-form estimate of `I_q = int |P ∩ l|^q dl`: uniform directions and
/// uniform offsets in a ball of `u^⊥` covering the projection of `P`. For
/// `q = 0` every line meeting `P` counts 1.
pub fn chord_integral_lines(p: &Polytope, q: f64, opts: &EstimatorOptions) -> Result<ChordEstimate> {
    if !(q >= 0.0 && q.is_finite()) {
        return Err(Error::Parameter(format!("q = {q} must be nonnegative")));
    }
    let center = p.interior_point();
    let radius = p.radius_about(center) * (1.0 + 1e-9);
    let m = line_moments(&[p], center, radius, q, opts, |v| v[0]);
    let f = line_factor(p.dim(), radius, opts);
    Ok(ChordEstimate {
        value: f * m.mean,
        std_error: f * m.std_error(),
        samples: m.count * LINES_PER_DIRECTION as u64,
        estimator: EstimatorKind::LineForm,
        error_bound: 0.0,
    })
}

/// `I_q(a) - I_q(b)` from the line form with common lines, so that the
/// reported error reflects the paired differences.
pub fn chord_integral_lines_difference(
    a: &Polytope,
    b: &Polytope,
    q: f64,
    opts: &EstimatorOptions,
) -> Result<ChordEstimate> {
    if !(q >= 0.0 && q.is_finite()) {
        return Err(Error::Parameter(format!("q = {q} must be nonnegative")));
    }
    if a.dim() != b.dim() {
        return Err(Error::Parameter("dimension mismatch".into()));
    }
    let center = a.interior_point();
    let radius = a.radius_about(center).max(b.radius_about(center)) * (1.0 + 1e-9);
    let m = line_moments(&[a, b], center, radius, q, opts, |v| v[0] - v[1]);
    let f = line_factor(a.dim(), radius, opts);
    Ok(ChordEstimate {
        value: f * m.mean,
        std_error: f * m.std_error(),
        samples: m.count * LINES_PER_DIRECTION as u64,
        estimator: EstimatorKind::LineForm,
        error_bound: 0.0,
    })
}

/// `F_q(P, v_i)` for every normal: `(2q / omega_n) area_i` times the mean of
/// `V~_{q-1}` over uniform facet points, each evaluated over the inward
/// hemisphere. Empty facets get 0.
pub fn chord_measure(p: &Polytope, q: f64, opts: &EstimatorOptions) -> Result<Vec<ChordEstimate>> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::Parameter(format!("q = {q} must be positive")));
    }
    let n = p.dim();
    let norm = &opts.normalization;
    // V~ over a hemisphere: (1/n) (|S|/2) times the mean over it
    let factor = norm.measure(n, q) * norm.sphere(n) / (2.0 * n as f64);
    let samples = opts.samples.max(SHARDS);
    Ok(p.facets()
        .iter()
        .enumerate()
        .map(|(i, facet)| {
            if facet.is_empty() {
                return ChordEstimate {
                    value: 0.0,
                    std_error: 0.0,
                    samples: 1,
                    estimator: EstimatorKind::VolumeForm,
                    error_bound: 0.0,
                };
            }
            let v = &p.normals()[i];
            let m = sample_moments(derive_seed(opts.seed, i as u64 + 1), samples, |rng| {
                let z = p.sample_facet_point(i, rng);
                stencil_mean(p, &z, q, Some(v), rng)
            });
            let f = factor * facet.area;
            ChordEstimate {
                value: f * m.mean,
                std_error: f * m.std_error(),
                samples: m.count,
                estimator: EstimatorKind::VolumeForm,
                error_bound: 0.0,
            }
        })
        .collect())
}
