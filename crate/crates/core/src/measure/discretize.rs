//! Sphere partition and the discretization `mu -> mu_bar_m`.
//!
//! `S^{n-1}` is cut into boxes in hyperspherical coordinates
//! `(theta_1, .., theta_{n-2}, phi)`. Bands in `theta_1` have width below half
//! the geodesic budget and each band recursively partitions the remaining
//! `S^{n-2}` with its budget stretched by `1 / max sin(theta_1)`. A cell's
//! geodesic (hence Euclidean) diameter therefore stays below `1/m`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::admissibility::{directions_avoid_hemispheres, general_position_check_with, SubsetMode};
use super::{Atom, DiscreteMeasure};
use crate::error::{Error, Result};
use crate::linalg::{dot, normalized};
use crate::quadrature::GaussRule;
use crate::rng::{derive_seed, stream};

const MAX_RETRIES: usize = 100;
const CELL_NODES: usize = 8;

/// A density with respect to the spherical Lebesgue measure.
pub trait SphereDensity: Sync {
    fn dim(&self) -> usize;
    fn density(&self, x: &[f64]) -> f64;
    /// Exact total mass, when known in closed form.
    fn total_mass(&self) -> Option<f64> {
        None
    }
}

/// Built-in density families accepted by the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum DensitySpec {
    Uniform {
        dim: usize,
        #[serde(default = "unit_mass")]
        mass: f64,
    },
    VonMisesFisher {
        mean: Vec<f64>,
        kappa: f64,
        #[serde(default = "unit_mass")]
        mass: f64,
    },
}

fn unit_mass() -> f64 {
    1.0
}

/// `|S^{n-1}|`
fn sphere_area(n: usize) -> f64 {
    crate::chord::sphere_area(n)
}

impl DensitySpec {
    pub fn dim(&self) -> usize {
        match self {
            DensitySpec::Uniform { dim, .. } => *dim,
            DensitySpec::VonMisesFisher { mean, .. } => mean.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if n < 2 {
            return Err(Error::Parameter(format!("density dimension {n} < 2")));
        }
        match self {
            DensitySpec::Uniform { mass, .. } | DensitySpec::VonMisesFisher { mass, .. }
                if !(*mass > 0.0) =>
            {
                Err(Error::Parameter("density mass must be positive".into()))
            }
            DensitySpec::VonMisesFisher { kappa, mean, .. } => {
                if !(*kappa >= 0.0) || crate::linalg::norm(mean) == 0.0 {
                    return Err(Error::Parameter("von Mises-Fisher needs kappa >= 0 and a nonzero mean".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `int_{S^{n-1}} exp(kappa (x . m - 1)) dx`, by quadrature in the polar angle.
    fn vmf_normalizer(n: usize, kappa: f64) -> f64 {
        let rule = GaussRule::new(32);
        let pieces = 64;
        let mut s = 0.0;
        for k in 0..pieces {
            let a = PI * k as f64 / pieces as f64;
            let b = PI * (k + 1) as f64 / pieces as f64;
            s += rule.integrate(a, b, |t| (kappa * (t.cos() - 1.0)).exp() * t.sin().powi(n as i32 - 2));
        }
        if n == 2 {
            2.0 * s
        } else {
            sphere_area(n - 1) * s
        }
    }

    pub fn build(&self) -> Result<BuiltinDensity> {
        self.validate()?;
        let (norm_const, mean) = match self {
            DensitySpec::Uniform { dim, mass } => (mass / sphere_area(*dim), vec![]),
            DensitySpec::VonMisesFisher { mean, kappa, mass } => {
                (mass / Self::vmf_normalizer(mean.len(), *kappa), normalized(mean))
            }
        };
        Ok(BuiltinDensity {
            spec: self.clone(),
            norm_const,
            mean,
        })
    }
}

#[derive(Debug, Clone)]
pub struct BuiltinDensity {
    spec: DensitySpec,
    norm_const: f64,
    mean: Vec<f64>,
}

impl SphereDensity for BuiltinDensity {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn density(&self, x: &[f64]) -> f64 {
        match &self.spec {
            DensitySpec::Uniform { .. } => self.norm_const,
            DensitySpec::VonMisesFisher { kappa, .. } => {
                self.norm_const * (kappa * (dot(x, &self.mean) - 1.0)).exp()
            }
        }
    }

    fn total_mass(&self) -> Option<f64> {
        match &self.spec {
            DensitySpec::Uniform { mass, .. } | DensitySpec::VonMisesFisher { mass, .. } => Some(*mass),
        }
    }
}

/// A box in hyperspherical coordinates `(theta_1, .., theta_{n-2}, phi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Cell {
    fn contains(&self, c: &[f64]) -> bool {
        c.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (lo, hi))| *x >= *lo && *x < *hi)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Discretization {
    pub measure: DiscreteMeasure,
    /// `mu(U_i)` before the `1/N^2` correction and renormalization.
    pub cell_masses: Vec<f64>,
    pub cells: Vec<Cell>,
    /// `|mu|`, preserved exactly by the renormalization.
    pub total_mass: f64,
    /// Geodesic diameter bound `1/m` on every cell.
    pub diameter_bound: f64,
    /// Number of representative redraws needed for general position.
    pub retries: usize,
}

/// Hyperspherical coordinates to Cartesian.
fn to_cartesian(c: &[f64]) -> Vec<f64> {
    let n = c.len() + 1;
    let mut x = vec![0.0; n];
    let mut s = 1.0;
    for (k, &t) in c[..n - 2].iter().enumerate() {
        x[k] = s * t.cos();
        s *= t.sin();
    }
    let phi = c[n - 2];
    x[n - 2] = s * phi.cos();
    x[n - 1] = s * phi.sin();
    x
}

fn to_spherical(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut c = Vec::with_capacity(n - 1);
    for k in 0..n - 2 {
        let rest = crate::linalg::norm(&x[k + 1..]);
        c.push(rest.atan2(x[k]));
    }
    let mut phi = x[n - 1].atan2(x[n - 2]);
    if phi < 0.0 {
        phi += 2.0 * PI;
    }
    c.push(phi);
    c
}

/// Area element `prod_k sin^{n-1-k}(theta_k)`.
fn jacobian(c: &[f64]) -> f64 {
    let m = c.len() - 1;
    (0..m).map(|k| c[k].sin().powi((m - k) as i32)).product()
}

fn max_sin(lo: f64, hi: f64) -> f64 {
    if lo <= PI / 2.0 && hi >= PI / 2.0 {
        1.0
    } else {
        lo.sin().max(hi.sin())
    }
}

/// Cells of `S^s` with geodesic diameter below `budget`.
fn partition(s: usize, budget: f64) -> Vec<Cell> {
    if s == 1 {
        let m = (2.0 * PI / budget).floor() as usize + 1;
        return (0..m)
            .map(|j| Cell {
                lo: vec![2.0 * PI * j as f64 / m as f64],
                hi: vec![2.0 * PI * (j + 1) as f64 / m as f64],
            })
            .collect();
    }
    let bands = (2.0 * PI / budget).floor() as usize + 1;
    let mut cells = Vec::new();
    for b in 0..bands {
        let lo = PI * b as f64 / bands as f64;
        let hi = PI * (b + 1) as f64 / bands as f64;
        let sub_budget = 0.5 * budget / max_sin(lo, hi).max(1e-300);
        for sub in partition(s - 1, sub_budget) {
            let mut l = vec![lo];
            l.extend(sub.lo);
            let mut h = vec![hi];
            h.extend(sub.hi);
            cells.push(Cell { lo: l, hi: h });
        }
    }
    // the last polar band is closed at theta = pi
    cells
}

fn cell_mass<D: SphereDensity + ?Sized>(density: &D, cell: &Cell, rule: &GaussRule) -> f64 {
    fn rec<D: SphereDensity + ?Sized>(
        density: &D,
        cell: &Cell,
        rule: &GaussRule,
        coords: &mut Vec<f64>,
    ) -> f64 {
        let k = coords.len();
        if k == cell.lo.len() {
            return density.density(&to_cartesian(coords)) * jacobian(coords);
        }
        let mut s = 0.0;
        for (x, w) in rule.on(cell.lo[k], cell.hi[k]) {
            coords.push(x);
            s += w * rec(density, cell, rule, coords);
            coords.pop();
        }
        s
    }
    rec(density, cell, rule, &mut Vec::new())
}

/// Area-uniform point in a cell, by rejection against the Jacobian bound.
fn sample_cell<R: Rng>(cell: &Cell, rng: &mut R) -> Vec<f64> {
    let m = cell.lo.len() - 1;
    let bound: f64 = (0..m)
        .map(|k| max_sin(cell.lo[k], cell.hi[k]).powi((m - k) as i32))
        .product();
    loop {
        let c: Vec<f64> = cell
            .lo
            .iter()
            .zip(&cell.hi)
            .map(|(lo, hi)| lo + (hi - lo) * rng.gen::<f64>())
            .collect();
        if bound <= 0.0 || rng.gen::<f64>() * bound <= jacobian(&c) {
            return normalized(&to_cartesian(&c));
        }
    }
}

/// Resolution from which the all-ones Wulff shape `Q_m` over the discretized
/// directions satisfies `B <= Q_m <= 2B`. Any `u` lies in a cell whose
/// representative `v` has `|u - v| < 1/m <= 1`, so `u . v > 1/2`, which bounds
/// the radial function of `Q_m` by 2 already at `m = 1`.
pub fn sandwich_threshold(_n: usize) -> usize {
    1
}

/// Discretizes a density at resolution `m`.
pub fn discretize<D: SphereDensity + ?Sized>(density: &D, m: usize, seed: u64) -> Result<Discretization> {
    let n = density.dim();
    let cells = check_resolution(n, m)?;
    let rule = GaussRule::new(CELL_NODES);
    let masses: Vec<f64> = cells.iter().map(|c| cell_mass(density, c, &rule)).collect();
    let total = density
        .total_mass()
        .unwrap_or_else(|| masses.iter().sum::<f64>());
    finish(n, m, cells, masses, total, seed)
}

/// Discretizes an empirical measure given as weighted points on the sphere.
pub fn discretize_samples(
    dim: usize,
    samples: &[(Vec<f64>, f64)],
    m: usize,
    seed: u64,
) -> Result<Discretization> {
    let cells = check_resolution(dim, m)?;
    let mut masses = vec![0.0; cells.len()];
    for (x, w) in samples {
        if x.len() != dim {
            return Err(Error::Parameter("sample dimension mismatch".into()));
        }
        let c = to_spherical(&normalized(x));
        let idx = cells
            .iter()
            .position(|cell| cell.contains(&c))
            .unwrap_or_else(|| {
                // theta = pi or phi rounding onto the upper edge
                cells
                    .iter()
                    .enumerate()
                    .min_by(|(_, a), (_, b)| {
                        box_distance(a, &c).total_cmp(&box_distance(b, &c))
                    })
                    .map(|(i, _)| i)
                    .unwrap()
            });
        masses[idx] += w;
    }
    let total = masses.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Parameter("samples carry no mass".into()));
    }
    finish(dim, m, cells, masses, total, seed)
}

fn box_distance(cell: &Cell, c: &[f64]) -> f64 {
    c.iter()
        .zip(cell.lo.iter().zip(&cell.hi))
        .map(|(x, (lo, hi))| (lo - x).max(x - hi).max(0.0))
        .sum()
}

fn check_resolution(n: usize, m: usize) -> Result<Vec<Cell>> {
    if m < 1 {
        return Err(Error::Parameter("resolution m must be at least 1".into()));
    }
    if n < 2 {
        return Err(Error::Parameter(format!("dimension {n} < 2")));
    }
    Ok(partition(n - 1, 1.0 / m as f64))
}

fn finish(
    n: usize,
    m: usize,
    cells: Vec<Cell>,
    masses: Vec<f64>,
    total: f64,
    seed: u64,
) -> Result<Discretization> {
    let count = cells.len();
    let correction = 1.0 / (count as f64 * count as f64);
    let raw: Vec<f64> = masses.iter().map(|w| w + correction).collect();
    let raw_total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w * total / raw_total).collect();

    for attempt in 0..MAX_RETRIES {
        let mut rng = stream(derive_seed(seed, m as u64), attempt as u64);
        let dirs: Vec<Vec<f64>> = cells.iter().map(|c| sample_cell(c, &mut rng)).collect();
        let general = general_position_check_with(&dirs, n, SubsetMode::spot_check(derive_seed(seed, 7)))?;
        if !general || !directions_avoid_hemispheres(&dirs, n) {
            continue;
        }
        let atoms = dirs
            .into_iter()
            .zip(&weights)
            .map(|(v, &alpha)| Atom { v, alpha })
            .collect();
        let measure = match DiscreteMeasure::new(n, atoms) {
            Ok(mu) => mu,
            Err(_) => continue,
        };
        return Ok(Discretization {
            measure,
            cell_masses: masses,
            cells,
            total_mass: total,
            diameter_bound: 1.0 / m as f64,
            retries: attempt,
        });
    }
    Err(Error::RetriesExhausted(format!(
        "no general-position representatives after {MAX_RETRIES} draws"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dist;

    #[test]
    fn coordinates_round_trip() {
        let c = vec![0.3, 1.2, 4.0];
        let x = to_cartesian(&c);
        assert!((crate::linalg::norm(&x) - 1.0).abs() < 1e-14);
        let back = to_spherical(&x);
        for (a, b) in c.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn partition_covers_sphere_area() {
        for n in 2..=4 {
            let cells = partition(n - 1, 0.5);
            let rule = GaussRule::new(6);
            struct One(usize);
            impl SphereDensity for One {
                fn dim(&self) -> usize {
                    self.0
                }
                fn density(&self, _: &[f64]) -> f64 {
                    1.0
                }
            }
            let area: f64 = cells.iter().map(|c| cell_mass(&One(n), c, &rule)).sum();
            assert!((area - sphere_area(n)).abs() < 1e-10 * area, "n={n}");
        }
    }

    #[test]
    fn cells_have_small_diameter() {
        // corners and edge midpoints of every cell stay within the bound
        for n in 2..=3 {
            let m = 3;
            let cells = partition(n - 1, 1.0 / m as f64);
            let mut rng = stream(3, 3);
            for cell in &cells {
                let pts: Vec<Vec<f64>> = (0..40).map(|_| sample_cell(cell, &mut rng)).collect();
                for a in &pts {
                    for b in &pts {
                        assert!(dist(a, b) < 1.0 / m as f64);
                    }
                }
            }
        }
    }

    #[test]
    fn uniform_circle_equal_weights() {
        let d = DensitySpec::Uniform { dim: 2, mass: 1.0 }.build().unwrap();
        let out = discretize(&d, 4, 11).unwrap();
        let w = out.measure.weights();
        assert!(w.iter().all(|x| (x - w[0]).abs() < 1e-14));
        assert!((out.measure.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mass_preserved_for_vmf_in_3d() {
        let d = DensitySpec::VonMisesFisher { mean: vec![0.0, 0.0, 1.0], kappa: 4.0, mass: 2.5 }
            .build()
            .unwrap();
        let out = discretize(&d, 1, 5).unwrap();
        assert!((out.measure.total_mass() - 2.5).abs() < 1e-12);
        // quadrature mass of the cells agrees with the analytic normalization
        let q: f64 = out.cell_masses.iter().sum();
        assert!((q - 2.5).abs() < 1e-6);
    }

    #[test]
    fn samples_variant_bins_mass() {
        let samples = vec![
            (vec![1.0, 0.0], 1.0),
            (vec![0.0, 1.0], 1.0),
            (vec![-1.0, 0.0], 1.0),
            (vec![0.0, -1.0], 1.0),
        ];
        let out = discretize_samples(2, &samples, 2, 1).unwrap();
        assert!((out.measure.total_mass() - 4.0).abs() < 1e-12);
        assert_eq!(out.cell_masses.iter().filter(|&&w| w > 0.0).count(), 4);
    }
}
