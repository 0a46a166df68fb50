//! Dual quermassintegrals `V~_q(P, x) = (1/n) int_{S^{n-1}} rho_{P,x}(u)^q du`.
//!
//! For interior `x` the substitution `u = (y - x) / |y - x|` over the facets
//! gives `int rho^q du = sum_i d_i int_{F_i} |y - x|^{q-n} dA(y)` with `d_i`
//! the distance from `x` to the facet hyperplane. In the plane and in space
//! this is integrated with Gauss rules on facet simplices, refined near `x`;
//! higher dimensions fall back to Monte Carlo over directions.

use super::{ChordEstimate, EstimatorKind, EstimatorOptions};
use crate::error::{Error, Result};
use crate::linalg::{dist, norm, sub};
use crate::polytope::Polytope;
use crate::quadrature::GaussRule;
use crate::rng::{run_sharded, unit_vector, Moments};
use crate::tol::TOL;

const MAX_DEPTH: usize = 24;

struct Rules {
    low: GaussRule,
    high: GaussRule,
}

fn midpoint(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect()
}

/// `(fine, coarse)` values of `int_S |y - x|^e dA` over a segment or triangle.
fn simplex_integral(x: &[f64], pts: &[Vec<f64>], e: f64, rules: &Rules, depth: usize) -> (f64, f64) {
    let k = pts.len() - 1;
    let c = crate::linalg::centroid(pts);
    let rad = pts.iter().map(|p| dist(p, &c)).fold(0.0, f64::max);
    let reach = dist(x, &c) - rad;
    if 2.0 * rad > reach && depth < MAX_DEPTH {
        let subs: Vec<Vec<Vec<f64>>> = if k == 1 {
            let m = midpoint(&pts[0], &pts[1]);
            vec![vec![pts[0].clone(), m.clone()], vec![m, pts[1].clone()]]
        } else {
            let (a, b, cc) = (&pts[0], &pts[1], &pts[2]);
            let (ab, bc, ca) = (midpoint(a, b), midpoint(b, cc), midpoint(cc, a));
            vec![
                vec![a.clone(), ab.clone(), ca.clone()],
                vec![ab.clone(), b.clone(), bc.clone()],
                vec![ca.clone(), bc.clone(), cc.clone()],
                vec![ab, bc, ca],
            ]
        };
        return subs.iter().fold((0.0, 0.0), |acc, s| {
            let (f, g) = simplex_integral(x, s, e, rules, depth + 1);
            (acc.0 + f, acc.1 + g)
        });
    }
    let f = |y: &[f64]| dist(y, x).powf(e);
    let apply = |rule: &GaussRule| -> f64 {
        if k == 1 {
            let len = dist(&pts[0], &pts[1]);
            let d = sub(&pts[1], &pts[0]);
            rule.integrate(0.0, 1.0, |t| {
                let y: Vec<f64> = pts[0].iter().zip(&d).map(|(p, d)| p + t * d).collect();
                len * f(&y)
            })
        } else {
            // collapsed coordinates y = p0 + s (p1 - p0) + s t (p2 - p1)
            let d1 = sub(&pts[1], &pts[0]);
            let d2 = sub(&pts[2], &pts[1]);
            let area2 = 2.0 * crate::linalg::simplex_measure(pts);
            rule.on(0.0, 1.0)
                .map(|(s, ws)| {
                    rule.on(0.0, 1.0)
                        .map(|(t, wt)| {
                            let y: Vec<f64> = (0..pts[0].len())
                                .map(|j| pts[0][j] + s * d1[j] + s * t * d2[j])
                                .collect();
                            wt * f(&y)
                        })
                        .sum::<f64>()
                        * ws
                        * area2
                        * s
                })
                .sum()
        }
    };
    (apply(&rules.high), apply(&rules.low))
}

/// `V~_q(P, x)` for `x` strictly inside `P`.
pub fn dual_volume(p: &Polytope, x: &[f64], q: f64, opts: &EstimatorOptions) -> Result<ChordEstimate> {
    let slack = p.min_slack(x);
    if !(slack > TOL.radial_interior) {
        return Err(Error::NotInterior { slack });
    }
    if !q.is_finite() {
        return Err(Error::Parameter(format!("q = {q} must be finite")));
    }
    let n = p.dim();
    if n <= 3 {
        let rules = Rules {
            low: GaussRule::new(8),
            high: GaussRule::new(12),
        };
        let (mut fine, mut coarse) = (0.0, 0.0);
        for f in p.facets().iter().filter(|f| !f.is_empty()) {
            let d = p.spec().slack(f.normal_index, x);
            for s in &f.simplices {
                let (a, b) = simplex_integral(x, s, q - n as f64, &rules, 0);
                fine += d * a;
                coarse += d * b;
            }
        }
        let nodes = p.facets().iter().map(|f| f.simplices.len()).sum::<usize>() as u64;
        return Ok(ChordEstimate::quadrature(
            fine / n as f64,
            nodes,
            (fine - coarse).abs() / n as f64,
        ));
    }
    let parts = run_sharded(opts.seed, opts.samples.max(1), |rng, count| {
        let mut m = Moments::default();
        for _ in 0..count {
            let u = unit_vector(rng, n);
            debug_assert!((norm(&u) - 1.0).abs() < 1e-12);
            m.push(p.ray_exit(x, &u).powf(q));
        }
        m
    });
    let m = Moments::merged(&parts);
    let c = opts.normalization.sphere(n) / n as f64;
    Ok(ChordEstimate {
        value: c * m.mean,
        std_error: c * m.std_error(),
        samples: m.count,
        estimator: EstimatorKind::VolumeForm,
        error_bound: 0.0,
    })
}
