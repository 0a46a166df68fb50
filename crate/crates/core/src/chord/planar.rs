//! Deterministic quadrature of `I_q` and `F_q` for polygons.
//!
//! For a fixed line direction the chord length is piecewise linear in the
//! offset, with breaks at vertex projections, so the offset integral of
//! `L^q` is exact piece by piece. Likewise the exit distance of parallel rays
//! leaving an edge is piecewise linear along the edge. Only the remaining
//! angular integral is done by Gauss-Legendre, split wherever the
//! combinatorics change.

use std::f64::consts::{FRAC_PI_2, PI};

use super::{ChordEstimate, Normalization};
use crate::error::{Error, Result};
use crate::linalg::{dist, dot};
use crate::polytope::Polytope;
use crate::quadrature::GaussRule;

const LOW_ORDER: usize = 24;
const HIGH_ORDER: usize = 40;
/// Polygons with at most this many vertices also split at every vertex-pair direction.
const PAIR_SPLIT_MAX_VERTICES: usize = 32;
/// Longest angular piece.
const MAX_PIECE: f64 = 0.05;

/// Lengths below this fraction of the polygon's size are rounding noise at a
/// vertex. They are set to 0 because `L^q` with small `q` would amplify them.
const ROUNDING: f64 = 1e-12;

fn snap_zero(x: f64, tol: f64) -> f64 {
    if x < tol {
        0.0
    } else {
        x
    }
}

fn require_planar(p: &Polytope) -> Result<()> {
    if p.dim() != 2 {
        return Err(Error::Parameter(format!(
            "planar quadrature needs n = 2 (got n = {})",
            p.dim()
        )));
    }
    Ok(())
}

/// `int_0^ds ((1-t/ds) a + (t/ds) b)^e dt` for a linear function with
/// nonnegative endpoint values.
fn linear_power_integral(ds: f64, a: f64, b: f64, e: f64) -> f64 {
    let m = 0.5 * (a + b);
    if m <= 0.0 {
        return 0.0;
    }
    let d = b - a;
    if d.abs() <= 1e-6 * m {
        // second-order expansion about the midpoint
        let r = d / m;
        return ds * m.powf(e) * (1.0 + e * (e - 1.0) * r * r / 24.0);
    }
    let e1 = e + 1.0;
    ds * (b.powf(e1) - a.powf(e1)) / (e1 * d)
}

/// Sorted, deduplicated cut points including both interval ends.
fn cuts_in(mut cuts: Vec<f64>, lo: f64, hi: f64) -> Vec<f64> {
    cuts.retain(|c| *c > lo && *c < hi);
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    let mut out = Vec::with_capacity(cuts.len());
    for w in cuts.windows(2) {
        let pieces = ((w[1] - w[0]) / MAX_PIECE).ceil().max(1.0) as usize;
        for k in 0..pieces {
            out.push(w[0] + (w[1] - w[0]) * k as f64 / pieces as f64);
        }
    }
    out.push(hi);
    out
}

/// Integrates `f` over consecutive cut intervals with two clustered rules and
/// returns the finer value and the difference.
fn integrate_pieces<F: Fn(f64) -> f64>(cuts: &[f64], m: i32, f: F) -> (f64, f64, u64) {
    let low = GaussRule::new(LOW_ORDER);
    let high = GaussRule::new(HIGH_ORDER);
    let (mut a, mut b) = (0.0, 0.0);
    for w in cuts.windows(2) {
        a += low.clustered(w[0], w[1], m).map(|(x, wt)| wt * f(x)).sum::<f64>();
        b += high.clustered(w[0], w[1], m).map(|(x, wt)| wt * f(x)).sum::<f64>();
    }
    let nodes = ((cuts.len() - 1) * (LOW_ORDER + HIGH_ORDER)) as u64;
    (b, (a - b).abs(), nodes)
}

/// `int |P ∩ {x . w = s}|^q ds` for lines parallel to `u = (cos t, sin t)`.
fn offset_integral(p: &Polytope, theta: f64, q: f64) -> f64 {
    let u = [theta.cos(), theta.sin()];
    let w = [-u[1], u[0]];
    let mut s: Vec<f64> = p.vertices().iter().map(|v| dot(v, &w)).collect();
    s.sort_by(f64::total_cmp);
    s.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let snap = ROUNDING * (s[s.len() - 1] - s[0]);
    let lengths: Vec<f64> = s
        .iter()
        .map(|&sk| snap_zero(p.chord_length(&[sk * w[0], sk * w[1]], &u), snap))
        .collect();
    s.windows(2)
        .zip(lengths.windows(2))
        .map(|(sw, lw)| linear_power_integral(sw[1] - sw[0], lw[0], lw[1], q))
        .sum()
}

/// Quadrature value of `I_q` for a polygon, `q >= 0`.
pub fn chord_integral_quadrature(p: &Polytope, q: f64, norm: &Normalization) -> Result<ChordEstimate> {
    require_planar(p)?;
    if !(q >= 0.0 && q.is_finite()) {
        return Err(Error::Parameter(format!("q = {q} must be nonnegative")));
    }
    let verts = p.vertices();
    let angle = |a: &[f64], b: &[f64]| (b[1] - a[1]).atan2(b[0] - a[0]).rem_euclid(PI);
    let mut cuts = Vec::new();
    if verts.len() <= PAIR_SPLIT_MAX_VERTICES {
        for (i, a) in verts.iter().enumerate() {
            for b in &verts[i + 1..] {
                cuts.push(angle(a, b));
            }
        }
    } else {
        for f in p.facets().iter().filter(|f| !f.is_empty()) {
            let (a, b) = edge_endpoints(p, f.normal_index);
            cuts.push(angle(&a, &b));
        }
    }
    let cuts = cuts_in(cuts, 0.0, PI);
    let (value, err, nodes) = integrate_pieces(&cuts, 1, |t| offset_integral(p, t, q));
    // lines through the full circle of directions: twice the half-turn
    let c = 2.0 * norm.line(2);
    Ok(ChordEstimate::quadrature(c * value, nodes, c * err))
}

/// The two extreme vertices of edge `i`.
fn edge_endpoints(p: &Polytope, i: usize) -> (Vec<f64>, Vec<f64>) {
    let ids = &p.facets()[i].vertex_indices;
    let v = p.vertices();
    let a = &v[ids[0]];
    let far = |from: &[f64]| {
        ids.iter()
            .map(|&k| &v[k])
            .max_by(|x, y| dist(x, from).total_cmp(&dist(y, from)))
            .unwrap()
            .clone()
    };
    let b = far(a);
    let a = far(&b);
    (a, b)
}

/// Quadrature values of `F_q(P, v_i)` for a polygon, `q > 0`; empty facets get 0.
pub fn chord_measure_quadrature(
    p: &Polytope,
    q: f64,
    norm: &Normalization,
) -> Result<Vec<ChordEstimate>> {
    require_planar(p)?;
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::Parameter(format!("q = {q} must be positive")));
    }
    // (2q / omega_2) (1/n) int_edge int_{inward} rho^{q-1}
    let c = norm.measure(2, q) / 2.0;
    let m = 3;
    Ok(p.facets()
        .iter()
        .map(|f| {
            if f.is_empty() {
                return ChordEstimate::quadrature(0.0, 1, 0.0);
            }
            let (value, err, nodes) = edge_measure(p, f.normal_index, q, m);
            ChordEstimate::quadrature(c * value, nodes, c * err)
        })
        .collect())
}

/// `int_{-pi/2}^{pi/2} int_0^len rho(a + s t, u(phi))^{q-1} ds dphi` with
/// `u(phi) = sin(phi) t + cos(phi) m`, `m` the inward normal.
fn edge_measure(p: &Polytope, i: usize, q: f64, cluster: i32) -> (f64, f64, u64) {
    let (a, b) = edge_endpoints(p, i);
    let len = dist(&a, &b);
    let t = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
    let v = &p.normals()[i];
    let m = [-v[0], -v[1]];
    // other vertices in (along-edge, into-body) coordinates
    let coords: Vec<(f64, f64)> = p
        .vertices()
        .iter()
        .map(|w| {
            let d = [w[0] - a[0], w[1] - a[1]];
            (dot(&d, &t), dot(&d, &m))
        })
        .filter(|&(_, beta)| beta > 1e-12 * len)
        .collect();

    let mut cuts = Vec::new();
    for &(alpha, beta) in &coords {
        cuts.push((alpha / beta).atan());
        cuts.push(((alpha - len) / beta).atan());
    }
    if coords.len() <= PAIR_SPLIT_MAX_VERTICES {
        for (j, &(aj, bj)) in coords.iter().enumerate() {
            for &(ak, bk) in &coords[j + 1..] {
                if (bj - bk).abs() > 1e-12 * len {
                    cuts.push(((aj - ak) / (bj - bk)).atan());
                }
            }
        }
    }
    let cuts = cuts_in(cuts, -FRAC_PI_2, FRAC_PI_2);
    let snap = ROUNDING * p.diameter();

    let along_edge = |phi: f64| {
        let (sn, cs) = phi.sin_cos();
        let u = [sn * t[0] + cs * m[0], sn * t[1] + cs * m[1]];
        let tan = sn / cs;
        let mut s: Vec<f64> = coords
            .iter()
            .map(|&(alpha, beta)| alpha - beta * tan)
            .filter(|s| *s > 0.0 && *s < len)
            .collect();
        s.push(0.0);
        s.push(len);
        s.sort_by(f64::total_cmp);
        let rho: Vec<f64> = s
            .iter()
            .map(|&sk| snap_zero(p.ray_exit(&[a[0] + sk * t[0], a[1] + sk * t[1]], &u), snap))
            .collect();
        s.windows(2)
            .zip(rho.windows(2))
            .map(|(sw, rw)| linear_power_integral(sw[1] - sw[0], rw[0], rw[1], q - 1.0))
            .sum::<f64>()
    };
    integrate_pieces(&cuts, cluster, along_edge)
}
