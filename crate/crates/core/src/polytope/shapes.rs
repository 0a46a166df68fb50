//! Standard shapes used by the verification battery and tests.

use std::f64::consts::PI;

use super::HalfspaceSpec;
use crate::rng::{stream, unit_vector};

/// Axis normals `+e_1, -e_1, .., +e_n, -e_n`.
pub fn axis_normals(n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut v = vec![0.0; n];
            v[i] = s;
            out.push(v);
        }
    }
    out
}

/// The box `prod_i [lo_i, hi_i]`.
pub fn box_spec(lo: &[f64], hi: &[f64]) -> HalfspaceSpec {
    let z = lo.iter().zip(hi).flat_map(|(l, h)| [*h, -*l]).collect();
    HalfspaceSpec::new(axis_normals(lo.len()), z).expect("axis normals are admissible")
}

/// The cube `[-a, a]^n`.
pub fn cube_spec(n: usize, a: f64) -> HalfspaceSpec {
    box_spec(&vec![-a; n], &vec![a; n])
}

/// Regular `k`-gon circumscribing the circle of radius `r`, first normal at `phase`.
pub fn regular_polygon(k: usize, r: f64, phase: f64) -> HalfspaceSpec {
    let normals = (0..k)
        .map(|j| {
            let t = phase + 2.0 * PI * j as f64 / k as f64;
            vec![t.cos(), t.sin()]
        })
        .collect();
    HalfspaceSpec::new(normals, vec![r; k]).expect("regular polygon normals are admissible")
}

/// Random normals (redrawn until admissible) with offsets in `[lo, hi]`.
/// The origin is interior whenever `lo > 0`.
pub fn random_spec(n: usize, count: usize, lo: f64, hi: f64, seed: u64) -> HalfspaceSpec {
    use rand::Rng;
    for attempt in 0.. {
        let mut rng = stream(seed, attempt);
        let normals: Vec<Vec<f64>> = (0..count).map(|_| unit_vector(&mut rng, n)).collect();
        let z: Vec<f64> = (0..count).map(|_| rng.gen_range(lo..=hi)).collect();
        if let Ok(spec) = HalfspaceSpec::new(normals, z) {
            return spec;
        }
    }
    unreachable!()
}
