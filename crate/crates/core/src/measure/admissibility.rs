//! Admissibility checks on discrete measures: hemisphere, general position,
//! subspace mass inequality.

use itertools::Itertools;
use num_rational::Ratio;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::DiscreteMeasure;
use crate::error::{Error, Result};
use crate::linalg::{binomial, det, distance_to_span, orthonormal_basis};
use crate::lp::DenseLp;
use crate::tol::{SPOT_CHECK_SUBSETS, SUBSET_BUDGET, TOL};

/// How n-subsets of directions are inspected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsetMode {
    /// Every subset, erroring past the enumeration budget.
    Exhaustive,
    /// Every subset within budget, otherwise this many random subsets.
    SpotCheck { subsets: usize, seed: u64 },
}

impl SubsetMode {
    pub fn spot_check(seed: u64) -> Self {
        SubsetMode::SpotCheck {
            subsets: SPOT_CHECK_SUBSETS,
            seed,
        }
    }
}

/// `true` when `mu` is NOT concentrated in any closed hemisphere.
///
/// The directions avoid every closed hemisphere iff the origin is an interior
/// point of their convex hull, i.e. they span `R^n` and some strictly positive
/// combination of them vanishes. The second condition is the linear program
/// `max s` subject to `sum l_i v_i = 0`, `sum l_i = 1`, `l_i >= s`.
pub fn hemisphere_check(mu: &DiscreteMeasure) -> bool {
    directions_avoid_hemispheres(&mu.directions(), mu.dim())
}

pub fn directions_avoid_hemispheres(dirs: &[Vec<f64>], n: usize) -> bool {
    let refs: Vec<&[f64]> = dirs.iter().map(|v| v.as_slice()).collect();
    if orthonormal_basis(&refs, TOL.hemisphere).len() < n {
        return false;
    }
    let m = dirs.len();
    // variables: l_1..l_m, s
    let mut objective = vec![0.0; m + 1];
    objective[m] = 1.0;
    let mut bounds = vec![(0.0, 1.0); m];
    bounds.push((-1.0, 1.0));
    let mut lp = DenseLp::maximize(objective, bounds);
    for k in 0..n {
        let mut row: Vec<f64> = dirs.iter().map(|v| v[k]).collect();
        row.push(0.0);
        lp.eq(row, 0.0);
    }
    let mut row = vec![1.0; m];
    row.push(0.0);
    lp.eq(row, 1.0);
    for i in 0..m {
        let mut row = vec![0.0; m + 1];
        row[i] = -1.0;
        row[m] = 1.0;
        lp.le(row, 0.0);
    }
    match lp.solve() {
        Ok((s, _)) => s > TOL.hemisphere / m as f64,
        Err(_) => false,
    }
}

/// `true` iff every n-subset of `directions` is linearly independent.
pub fn general_position_check(directions: &[Vec<f64>], dim: usize) -> Result<bool> {
    general_position_check_with(directions, dim, SubsetMode::Exhaustive)
}

pub fn general_position_check_with(
    directions: &[Vec<f64>],
    dim: usize,
    mode: SubsetMode,
) -> Result<bool> {
    if directions.is_empty() {
        return Err(Error::Parameter("empty direction list".into()));
    }
    let independent = |idx: &[usize]| {
        let rows: Vec<&[f64]> = idx.iter().map(|&i| directions[i].as_slice()).collect();
        det(&rows).abs() > TOL.independence_det
    };
    let total = binomial(directions.len(), dim);
    if total <= SUBSET_BUDGET {
        return Ok((0..directions.len())
            .combinations(dim)
            .all(|c| independent(&c)));
    }
    match mode {
        SubsetMode::Exhaustive => Err(Error::BudgetExceeded {
            subsets: total,
            budget: SUBSET_BUDGET,
        }),
        SubsetMode::SpotCheck { subsets, seed } => {
            let mut rng = crate::rng::stream(seed, 0);
            Ok((0..subsets).all(|_| {
                let idx = sample(&mut rng, directions.len(), dim).into_vec();
                independent(&idx)
            }))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceMassReport {
    pub passes: bool,
    /// Mass fraction of the most critical subspace (largest ratio / bound).
    pub worst_ratio: f64,
    /// Dimension of that subspace.
    pub worst_dim: usize,
    /// Orthonormal basis of that subspace.
    pub worst_subspace: Vec<Vec<f64>>,
    /// `lambda_i` for `i = 1..n-1`.
    pub bound_lambda: Vec<f64>,
    /// `lambda_i` as exact fractions when `q` is a recognizable rational.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_lambda_exact: Option<Vec<String>>,
    /// Largest mass fraction found per subspace dimension.
    pub worst_ratio_by_dim: Vec<f64>,
    /// False when a random sample of subsets was inspected instead of all.
    pub exhaustive: bool,
}

/// Recognizes `q` as `a/b` with a small denominator.
fn rational_approx(q: f64) -> Option<Ratio<i64>> {
    let mut x = q;
    let (mut h0, mut h1): (i64, i64) = (1, x.floor() as i64);
    let (mut k0, mut k1): (i64, i64) = (0, 1);
    for _ in 0..40 {
        if (h1 as f64 / k1 as f64 - q).abs() <= 1e-15 * q.abs().max(1.0) {
            return Some(Ratio::new(h1, k1));
        }
        let frac = x - x.floor();
        if frac.abs() < 1e-300 {
            break;
        }
        x = 1.0 / frac;
        let a = x.floor() as i64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > 1_000_000 {
            return None;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
    }
    None
}

/// `lambda_i = (i + min(i, q - 1)) / (n + q - 1)` for `i = 1..n-1`, with the
/// exact fractions when `q` is rational.
pub fn lambda_bounds(n: usize, q: f64) -> (Vec<f64>, Option<Vec<Ratio<i64>>>) {
    let float: Vec<f64> = (1..n)
        .map(|i| {
            let i = i as f64;
            (i + i.min(q - 1.0)) / (n as f64 + q - 1.0)
        })
        .collect();
    let exact = rational_approx(q).map(|qr| {
        let one = Ratio::from_integer(1);
        (1..n as i64)
            .map(|i| {
                let ir = Ratio::from_integer(i);
                let m = if ir < qr - one { ir } else { qr - one };
                (ir + m) / (Ratio::from_integer(n as i64) + qr - one)
            })
            .collect::<Vec<_>>()
    });
    let float = match &exact {
        Some(ex) => ex.iter().map(|r| *r.numer() as f64 / *r.denom() as f64).collect(),
        None => float,
    };
    (float, exact)
}

pub fn subspace_mass_check(mu: &DiscreteMeasure, q: f64) -> Result<SubspaceMassReport> {
    subspace_mass_check_with(mu, q, SubsetMode::Exhaustive)
}

/// Worst mass fraction over subspaces spanned by atom directions, compared
/// with `lambda_i`. Restricting to spans of atoms is exact for discrete
/// measures: replacing a subspace by the span of the atoms it contains keeps
/// its mass.
pub fn subspace_mass_check_with(
    mu: &DiscreteMeasure,
    q: f64,
    mode: SubsetMode,
) -> Result<SubspaceMassReport> {
    let n = mu.dim();
    if !(q > 1.0 && q < n as f64 + 1.0) {
        return Err(Error::Parameter(format!(
            "subspace mass inequality requires 1 < q < n+1, got q={q}"
        )));
    }
    if !hemisphere_check(mu) {
        return Err(Error::Hemisphere);
    }
    let dirs = mu.directions();
    let total = mu.total_mass();
    let (lambda, exact) = lambda_bounds(n, q);

    let budget_needed: u128 = (1..n).map(|i| binomial(dirs.len(), i)).sum();
    let exhaustive = budget_needed <= SUBSET_BUDGET;
    if !exhaustive && mode == SubsetMode::Exhaustive {
        return Err(Error::BudgetExceeded {
            subsets: budget_needed,
            budget: SUBSET_BUDGET,
        });
    }

    let mass_of = |idx: &[usize]| -> Option<(f64, Vec<Vec<f64>>)> {
        let refs: Vec<&[f64]> = idx.iter().map(|&i| dirs[i].as_slice()).collect();
        let basis = orthonormal_basis(&refs, 1e-9);
        if basis.len() < idx.len() {
            return None;
        }
        let mass: f64 = mu
            .atoms()
            .iter()
            .filter(|a| distance_to_span(&a.v, &basis) < 1e-9)
            .map(|a| a.alpha)
            .sum();
        Some((mass / total, basis))
    };

    let mut worst_by_dim = vec![0.0; n - 1];
    let mut worst_basis: Vec<Vec<Vec<f64>>> = vec![Vec::new(); n - 1];
    for i in 1..n {
        let mut consider = |idx: &[usize]| {
            if let Some((ratio, basis)) = mass_of(idx) {
                if ratio > worst_by_dim[i - 1] {
                    worst_by_dim[i - 1] = ratio;
                    worst_basis[i - 1] = basis;
                }
            }
        };
        if exhaustive {
            for c in (0..dirs.len()).combinations(i) {
                consider(&c);
            }
        } else if let SubsetMode::SpotCheck { subsets, seed } = mode {
            let mut rng = crate::rng::stream(seed, i as u64);
            for _ in 0..subsets {
                let idx = sample(&mut rng, dirs.len(), i).into_vec();
                consider(&idx);
            }
        }
    }

    let passes = worst_by_dim
        .iter()
        .zip(&lambda)
        .all(|(r, l)| *r < l - TOL.subspace_slack);
    let (worst_dim_idx, _) = worst_by_dim
        .iter()
        .zip(&lambda)
        .map(|(r, l)| r / l)
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });

    Ok(SubspaceMassReport {
        passes,
        worst_ratio: worst_by_dim[worst_dim_idx],
        worst_dim: worst_dim_idx + 1,
        worst_subspace: worst_basis[worst_dim_idx].clone(),
        bound_lambda: lambda,
        bound_lambda_exact: exact.map(|v| v.iter().map(|r| r.to_string()).collect()),
        worst_ratio_by_dim: worst_by_dim,
        exhaustive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Atom;
    use crate::rng::{stream, unit_vector};

    fn planar(angles_deg: &[f64], weights: &[f64]) -> DiscreteMeasure {
        let atoms = angles_deg
            .iter()
            .zip(weights)
            .map(|(a, &w)| {
                let t = a.to_radians();
                Atom { v: vec![t.cos(), t.sin()], alpha: w }
            })
            .collect();
        DiscreteMeasure::new(2, atoms).unwrap()
    }

    #[test]
    fn hemisphere_examples() {
        let cross = planar(&[0.0, 90.0, 180.0, 270.0], &[1.0; 4]);
        assert!(hemisphere_check(&cross));
        let quarter = planar(&[0.0, 90.0], &[1.0; 2]);
        assert!(!hemisphere_check(&quarter));
        // antipodal pair spans only a line
        let line = planar(&[0.0, 180.0], &[1.0; 2]);
        assert!(!hemisphere_check(&line));
        // three directions on a closed half circle
        let half = planar(&[0.0, 90.0, 180.0], &[1.0; 3]);
        assert!(!hemisphere_check(&half));
    }

    /// Dense search for a direction `u` with `v_i . u >= 0` for all atoms.
    fn grid_concentrated(mu: &DiscreteMeasure, candidates: usize, seed: u64) -> bool {
        let mut rng = stream(seed, 99);
        let dirs = mu.directions();
        (0..candidates).any(|_| {
            let u = unit_vector(&mut rng, mu.dim());
            dirs.iter().all(|v| crate::linalg::dot(v, &u) >= 0.0)
        })
    }

    #[test]
    fn hemisphere_matches_grid_search_in_3d() {
        let mut disagreements = 0;
        for trial in 0..40 {
            let mut rng = stream(1234, trial);
            let atoms = (0..6)
                .map(|_| Atom { v: unit_vector(&mut rng, 3), alpha: 1.0 })
                .collect();
            let mu = DiscreteMeasure::new(3, atoms).unwrap();
            let lp = hemisphere_check(&mu);
            let grid = !grid_concentrated(&mu, 100_000, trial);
            if lp != grid {
                disagreements += 1;
            }
        }
        // the grid can only miss thin feasible cones; none expected at this density
        assert_eq!(disagreements, 0);
    }

    #[test]
    fn general_position_examples() {
        let cross: Vec<Vec<f64>> = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]];
        assert!(!general_position_check(&cross, 2).unwrap());
        let mu = planar(&[0.0, 97.0, 185.0, 273.0], &[1.0; 4]);
        assert!(general_position_check(&mu.directions(), 2).unwrap());
        let mut rng = stream(5, 5);
        let dirs: Vec<Vec<f64>> = (0..20).map(|_| unit_vector(&mut rng, 3)).collect();
        assert!(general_position_check(&dirs, 3).unwrap());
    }

    #[test]
    fn general_position_budget() {
        let mut rng = stream(5, 6);
        let dirs: Vec<Vec<f64>> = (0..200).map(|_| unit_vector(&mut rng, 4)).collect();
        let err = general_position_check(&dirs, 4).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
        assert!(general_position_check_with(&dirs, 4, SubsetMode::spot_check(1)).unwrap());
    }

    #[test]
    fn subspace_mass_examples() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mu = DiscreteMeasure::new(
            2,
            vec![
                Atom { v: vec![1.0, 0.0], alpha: 0.7 },
                Atom { v: vec![0.0, 1.0], alpha: 0.15 },
                Atom { v: vec![-s, -s], alpha: 0.15 },
            ],
        )
        .unwrap();
        let rep = subspace_mass_check(&mu, 2.0).unwrap();
        assert!(!rep.passes);
        assert_eq!(rep.bound_lambda_exact.as_deref(), Some(&["2/3".to_string()][..]));
        assert!((rep.bound_lambda[0] - 2.0 / 3.0).abs() < 1e-16);
        assert!((rep.worst_ratio - 0.7).abs() < 1e-12);
        assert!((rep.worst_subspace[0][0].abs() - 1.0).abs() < 1e-12);

        let mu = planar(&[10.0, 100.0, 200.0, 300.0], &[0.25; 4]);
        let rep = subspace_mass_check(&mu, 2.0).unwrap();
        assert!(rep.passes);
        assert!((rep.worst_ratio - 0.25).abs() < 1e-12);
    }

    #[test]
    fn lambda_values_in_3d() {
        let (l, exact) = lambda_bounds(3, 1.5);
        assert_eq!(
            exact.unwrap().iter().map(|r| r.to_string()).collect::<Vec<_>>(),
            vec!["3/7", "5/7"]
        );
        assert!((l[0] - 3.0 / 7.0).abs() < 1e-16);
        assert!((l[1] - 5.0 / 7.0).abs() < 1e-16);
    }

    #[test]
    fn subspace_mass_rejects_bad_q_and_hemisphere() {
        let mu = planar(&[0.0, 90.0, 180.0, 270.0], &[1.0; 4]);
        assert!(subspace_mass_check(&mu, 1.0).is_err());
        assert!(subspace_mass_check(&mu, 3.0).is_err());
        let half = planar(&[0.0, 90.0], &[1.0; 2]);
        assert!(matches!(subspace_mass_check(&half, 2.0), Err(Error::Hemisphere)));
    }
}
