//! Uniform sampling in polytopes and on facets, and Hausdorff distances.

use rand::Rng;

use super::Polytope;
use crate::error::{Error, Result};
use crate::rng::{barycentric, stream};

fn pick(cdf: &[f64], r: f64) -> usize {
    let total = *cdf.last().unwrap();
    let target = r * total;
    cdf.partition_point(|&c| c <= target).min(cdf.len() - 1)
}

fn combine(points: &[&[f64]], weights: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; points[0].len()];
    for (p, w) in points.iter().zip(weights) {
        for (xi, pi) in x.iter_mut().zip(p.iter()) {
            *xi += w * pi;
        }
    }
    x
}

impl Polytope {
    /// A uniform point in `P`.
    pub fn sample_interior<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let (f, s) = self.cells[pick(&self.cell_cdf, rng.gen())];
        let simplex = &self.facets[f].simplices[s];
        let mut pts: Vec<&[f64]> = Vec::with_capacity(simplex.len() + 1);
        pts.push(&self.interior_point);
        pts.extend(simplex.iter().map(|p| p.as_slice()));
        let w = barycentric(rng, simplex.len());
        combine(&pts, &w)
    }

    /// A uniform point on facet `i`; the facet must be nonempty.
    pub fn sample_facet_point<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> Vec<f64> {
        let facet = &self.facets[i];
        let simplex = &facet.simplices[pick(&facet.simplex_cdf, rng.gen())];
        let pts: Vec<&[f64]> = simplex.iter().map(|p| p.as_slice()).collect();
        let w = barycentric(rng, simplex.len() - 1);
        combine(&pts, &w)
    }

    /// `count` uniform samples on facet `i`, deterministic in `seed`.
    pub fn facet_sample(&self, i: usize, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let facet = self
            .facets
            .get(i)
            .ok_or_else(|| Error::Parameter(format!("no facet {i}")))?;
        if facet.is_empty() {
            return Err(Error::Parameter(format!("facet {i} is empty")));
        }
        let mut rng = stream(seed, i as u64);
        Ok((0..count).map(|_| self.sample_facet_point(i, &mut rng)).collect())
    }
}

fn probe_directions(n: usize, extra: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut dirs = extra.to_vec();
    match n {
        2 => {
            let k = 8192;
            dirs.extend((0..k).map(|j| {
                let t = 2.0 * std::f64::consts::PI * j as f64 / k as f64;
                vec![t.cos(), t.sin()]
            }));
        }
        3 => {
            // Fibonacci lattice
            let k = 20_000;
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            dirs.extend((0..k).map(|j| {
                let y = 1.0 - 2.0 * (j as f64 + 0.5) / k as f64;
                let r = (1.0 - y * y).sqrt();
                let t = golden * j as f64;
                vec![r * t.cos(), y, r * t.sin()]
            }));
        }
        _ => {
            let mut rng = stream(0x5eed, 0);
            dirs.extend((0..50_000).map(|_| crate::rng::unit_vector(&mut rng, n)));
        }
    }
    dirs
}

/// Hausdorff distance `sup_u |h_A(u) - h_B(u)|`, evaluated on a dense direction
/// set that includes both normal sets (a lower bound converging quadratically
/// in the direction spacing).
pub fn hausdorff_distance(a: &Polytope, b: &Polytope) -> f64 {
    let mut extra = a.normals().to_vec();
    extra.extend(b.normals().iter().cloned());
    probe_directions(a.dim(), &extra)
        .iter()
        .map(|u| (a.support_function(u) - b.support_function(u)).abs())
        .fold(0.0, f64::max)
}
