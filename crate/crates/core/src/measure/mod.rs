//! Discrete measures on the unit sphere.

mod admissibility;
mod discretize;

pub use admissibility::{
    directions_avoid_hemispheres as hemisphere_check_directions, general_position_check, general_position_check_with, hemisphere_check, lambda_bounds,
    subspace_mass_check, subspace_mass_check_with, SubsetMode, SubspaceMassReport,
};
pub use discretize::{
    discretize, discretize_samples, sandwich_threshold, Cell, DensitySpec, Discretization,
    SphereDensity,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dist, norm};
use crate::tol::TOL;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub v: Vec<f64>,
    pub alpha: f64,
}

/// `mu = sum_i alpha_i delta_{v_i}` on `S^{n-1}`.
///
/// Construction validates unit directions, positive weights and distinct
/// directions; duplicates are rejected rather than merged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure")]
pub struct DiscreteMeasure {
    dim: usize,
    atoms: Vec<Atom>,
}

#[derive(Deserialize)]
struct RawMeasure {
    dim: usize,
    atoms: Vec<Atom>,
}

impl TryFrom<RawMeasure> for DiscreteMeasure {
    type Error = Error;

    fn try_from(raw: RawMeasure) -> Result<Self> {
        DiscreteMeasure::new(raw.dim, raw.atoms)
    }
}

impl DiscreteMeasure {
    pub fn new(dim: usize, atoms: Vec<Atom>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidMeasure(format!("dimension {dim} < 2")));
        }
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        for (i, a) in atoms.iter().enumerate() {
            if a.v.len() != dim {
                return Err(Error::InvalidMeasure(format!(
                    "atom {i} has {} coordinates, expected {dim}",
                    a.v.len()
                )));
            }
            if (norm(&a.v) - 1.0).abs() > TOL.unit_norm {
                return Err(Error::InvalidMeasure(format!(
                    "atom {i} direction has norm {}",
                    norm(&a.v)
                )));
            }
            if !(a.alpha > 0.0 && a.alpha.is_finite()) {
                return Err(Error::InvalidMeasure(format!(
                    "atom {i} weight {} is not positive",
                    a.alpha
                )));
            }
        }
        for i in 0..atoms.len() {
            for j in 0..i {
                // chord distance equals angular distance to first order
                if dist(&atoms[i].v, &atoms[j].v) <= TOL.duplicate_direction {
                    return Err(Error::InvalidMeasure(format!(
                        "atoms {j} and {i} share a direction"
                    )));
                }
            }
        }
        Ok(Self { dim, atoms })
    }

    /// Builds a measure from directions that are normalized on the way in.
    pub fn from_unnormalized(dim: usize, atoms: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        let atoms = atoms
            .into_iter()
            .map(|(v, alpha)| Atom {
                v: crate::linalg::normalized(&v),
                alpha,
            })
            .collect();
        Self::new(dim, atoms)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn directions(&self) -> Vec<Vec<f64>> {
        self.atoms.iter().map(|a| a.v.clone()).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.alpha).collect()
    }

    /// `|mu|`
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.alpha).sum()
    }

    /// Same directions, weights replaced.
    pub fn with_weights(&self, weights: &[f64]) -> Result<Self> {
        let atoms = self
            .atoms
            .iter()
            .zip(weights)
            .map(|(a, &alpha)| Atom {
                v: a.v.clone(),
                alpha,
            })
            .collect();
        Self::new(self.dim, atoms)
    }

    /// Applies an orthogonal map (rows of `rot`) to every direction.
    pub fn rotated(&self, rot: &[Vec<f64>]) -> Result<Self> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                v: crate::linalg::normalized(
                    &rot.iter().map(|r| crate::linalg::dot(r, &a.v)).collect::<Vec<_>>(),
                ),
                alpha: a.alpha,
            })
            .collect();
        Self::new(self.dim, atoms)
    }
}

pub fn total_mass(mu: &DiscreteMeasure) -> f64 {
    mu.total_mass()
}
