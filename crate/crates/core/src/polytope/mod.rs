//! Polytopes given as Wulff shapes `[z, Omega] = {x : x . v_i <= z_i}`.
//!
//! Vertices are enumerated from n-subsets of constraint hyperplanes, which is
//! adequate for the desk-scale sizes targeted here (`n <= 4`, a few hundred
//! normals in the plane, dozens in space). Faces are recovered from vertex
//! incidences and triangulated by coning from their centroids, recursively
//! down to edges.

mod sampling;
pub mod shapes;

pub use sampling::hausdorff_distance;

use std::collections::BTreeSet;
use std::sync::Arc;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{affine_dimension, binomial, centroid, det, dist, dot, norm, simplex_measure, solve};
use crate::lp::DenseLp;
use crate::measure::hemisphere_check_directions;
use crate::tol::{TOL, VERTEX_SUBSET_BUDGET};

/// Normals `Omega` and offsets `z`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfspaceSpec {
    normals: Arc<Vec<Vec<f64>>>,
    offsets: Vec<f64>,
}

#[derive(Deserialize)]
struct RawSpec {
    normals: Vec<Vec<f64>>,
    offsets: Vec<f64>,
}

impl<'de> Deserialize<'de> for HalfspaceSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawSpec::deserialize(d)?;
        HalfspaceSpec::new(raw.normals, raw.offsets).map_err(serde::de::Error::custom)
    }
}

impl HalfspaceSpec {
    /// Validates the normals (renormalizing inputs that are unit up to 1e-9)
    /// and requires them to avoid every closed hemisphere, so that `[z]` is
    /// bounded for every finite `z`.
    pub fn new(normals: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<Self> {
        if normals.is_empty() {
            return Err(Error::InvalidSpec("no normals".into()));
        }
        let n = normals[0].len();
        if n < 2 {
            return Err(Error::InvalidSpec(format!("dimension {n} < 2")));
        }
        if normals.len() != offsets.len() {
            return Err(Error::InvalidSpec(format!(
                "{} normals but {} offsets",
                normals.len(),
                offsets.len()
            )));
        }
        if normals.len() < n + 1 {
            return Err(Error::InvalidSpec(format!(
                "{} normals cannot bound a polytope in dimension {n}",
                normals.len()
            )));
        }
        let mut unit = Vec::with_capacity(normals.len());
        for (i, v) in normals.into_iter().enumerate() {
            if v.len() != n {
                return Err(Error::InvalidSpec(format!("normal {i} has wrong dimension")));
            }
            if (norm(&v) - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidSpec(format!("normal {i} is not a unit vector")));
            }
            unit.push(crate::linalg::normalized(&v));
        }
        if offsets.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidSpec("non-finite offset".into()));
        }
        if !hemisphere_check_directions(&unit, n) {
            return Err(Error::InvalidSpec(
                "normals lie in a closed hemisphere; the Wulff shape would be unbounded".into(),
            ));
        }
        Ok(Self {
            normals: Arc::new(unit),
            offsets,
        })
    }

    pub fn dim(&self) -> usize {
        self.normals[0].len()
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn normals(&self) -> &[Vec<f64>] {
        &self.normals
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// Same normals, new offsets.
    pub fn with_offsets(&self, offsets: Vec<f64>) -> Self {
        assert_eq!(offsets.len(), self.len());
        Self {
            normals: Arc::clone(&self.normals),
            offsets,
        }
    }

    /// Offsets of `[z] + t`.
    pub fn translated(&self, t: &[f64]) -> Self {
        let z = self
            .normals
            .iter()
            .zip(&self.offsets)
            .map(|(v, z)| z + dot(v, t))
            .collect();
        self.with_offsets(z)
    }

    /// Offsets of `s [z]`, `s > 0`.
    pub fn scaled(&self, s: f64) -> Self {
        self.with_offsets(self.offsets.iter().map(|z| z * s).collect())
    }

    pub fn slack(&self, i: usize, x: &[f64]) -> f64 {
        self.offsets[i] - dot(&self.normals[i], x)
    }

    pub fn min_slack(&self, x: &[f64]) -> f64 {
        (0..self.len()).map(|i| self.slack(i, x)).fold(f64::INFINITY, f64::min)
    }

    /// Maximizes `r` subject to `x . v_i + r <= z_i`. Errors when `[z]` is empty.
    pub fn chebyshev_center(&self) -> Result<(Vec<f64>, f64)> {
        let n = self.dim();
        let mut objective = vec![0.0; n + 1];
        objective[n] = 1.0;
        let mut bounds = vec![(f64::NEG_INFINITY, f64::INFINITY); n];
        bounds.push((f64::NEG_INFINITY, f64::INFINITY));
        let mut lp = DenseLp::maximize(objective, bounds);
        for (v, z) in self.normals.iter().zip(&self.offsets) {
            let mut row = v.clone();
            row.push(1.0);
            lp.le(row, *z);
        }
        let (_, sol) = lp
            .solve()
            .map_err(|e| Error::Degenerate(format!("Chebyshev center: {e}")))?;
        let center = sol[..n].to_vec();
        // polish r from the returned center
        let r = self.min_slack(&center);
        Ok((center, r))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Facet {
    pub normal_index: usize,
    /// Incident vertices; empty when the face is lower dimensional.
    pub vertex_indices: Vec<usize>,
    /// (n-1)-dimensional measure.
    pub area: f64,
    /// (n-1)-simplices (n points each) covering the facet.
    #[serde(skip)]
    pub simplices: Vec<Vec<Vec<f64>>>,
    #[serde(skip)]
    simplex_cdf: Vec<f64>,
}

impl Facet {
    pub fn is_empty(&self) -> bool {
        self.vertex_indices.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Polytope {
    spec: HalfspaceSpec,
    vertices: Vec<Vec<f64>>,
    facets: Vec<Facet>,
    volume: f64,
    interior_point: Vec<f64>,
    inradius: f64,
    /// Cones from the interior point over facet simplices.
    cells: Vec<(usize, usize)>,
    cell_cdf: Vec<f64>,
}

/// Builds the full vertex/facet description of `[z, Omega]`.
pub fn wulff_shape(spec: &HalfspaceSpec) -> Result<Polytope> {
    Polytope::new(spec.clone())
}

/// Offsets `z'_i = h_{[z]}(v_i)`: the tight description of the same set.
pub fn tighten(spec: &HalfspaceSpec) -> Result<Vec<f64>> {
    Ok(wulff_shape(spec)?.tight_offsets())
}

impl Polytope {
    pub fn new(spec: HalfspaceSpec) -> Result<Self> {
        let n = spec.dim();
        let count = spec.len();
        let subsets = binomial(count, n);
        if subsets > VERTEX_SUBSET_BUDGET {
            return Err(Error::InvalidSpec(format!(
                "vertex enumeration over {subsets} subsets exceeds the budget {VERTEX_SUBSET_BUDGET}"
            )));
        }
        let (center, r) = spec.chebyshev_center()?;
        let scale = spec.offsets.iter().map(|z| z.abs()).fold(1.0, f64::max);
        if !(r > TOL.interior_slack * scale) {
            return Err(Error::Degenerate(format!(
                "Wulff shape has empty interior (inner radius {r:e})"
            )));
        }
        let merge = TOL.vertex_merge * scale;

        let normals = spec.normals();
        let z = spec.offsets();
        let mut vertices: Vec<Vec<f64>> = Vec::new();
        for combo in (0..count).combinations(n) {
            let rows: Vec<&[f64]> = combo.iter().map(|&i| normals[i].as_slice()).collect();
            if det(&rows).abs() <= TOL.vertex_det {
                continue;
            }
            let rhs: Vec<f64> = combo.iter().map(|&i| z[i]).collect();
            let Some(x) = solve(&rows, &rhs) else { continue };
            if (0..count).any(|j| dot(&normals[j], &x) > z[j] + merge) {
                continue;
            }
            if vertices.iter().all(|v| dist(v, &x) > merge) {
                vertices.push(x);
            }
        }

        let active: Vec<BTreeSet<usize>> = vertices
            .iter()
            .map(|x| {
                (0..count)
                    .filter(|&j| (z[j] - dot(&normals[j], x)).abs() <= merge)
                    .collect()
            })
            .collect();

        let mut facets = Vec::with_capacity(count);
        for i in 0..count {
            let incident: Vec<usize> = (0..vertices.len()).filter(|&k| active[k].contains(&i)).collect();
            let pts: Vec<Vec<f64>> = incident.iter().map(|&k| vertices[k].clone()).collect();
            let full = pts.len() >= n && affine_dimension(&pts, merge.max(1e-12)) == n - 1;
            let (incident, simplices) = if full {
                let mut simplices = Vec::new();
                triangulate_face(&vertices, &active, &incident, &[i], n - 1, merge, &mut simplices);
                (incident, simplices)
            } else {
                (Vec::new(), Vec::new())
            };
            let measures: Vec<f64> = simplices.iter().map(|s| simplex_measure(s)).collect();
            let area: f64 = measures.iter().sum();
            facets.push(Facet {
                normal_index: i,
                vertex_indices: incident,
                area,
                simplices,
                simplex_cdf: cumulative(&measures),
            });
        }

        let mut cells = Vec::new();
        let mut cell_volumes = Vec::new();
        for f in &facets {
            let height = spec.slack(f.normal_index, &center);
            for (s, simplex) in f.simplices.iter().enumerate() {
                cells.push((f.normal_index, s));
                cell_volumes.push(height * simplex_measure(simplex) / n as f64);
            }
        }
        let volume: f64 = cell_volumes.iter().sum();
        if !(volume > 0.0) {
            return Err(Error::Degenerate("zero volume".into()));
        }

        Ok(Self {
            spec,
            vertices,
            facets,
            volume,
            interior_point: center,
            inradius: r,
            cells,
            cell_cdf: cumulative(&cell_volumes),
        })
    }

    pub fn spec(&self) -> &HalfspaceSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn normals(&self) -> &[Vec<f64>] {
        self.spec.normals()
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn surface_area(&self) -> f64 {
        self.facets.iter().map(|f| f.area).sum()
    }

    pub fn facet_areas(&self) -> Vec<f64> {
        self.facets.iter().map(|f| f.area).collect()
    }

    pub fn interior_point(&self) -> &[f64] {
        &self.interior_point
    }

    pub fn inradius(&self) -> f64 {
        self.inradius
    }

    /// Chebyshev center and inner radius.
    pub fn chebyshev_center(&self) -> (Vec<f64>, f64) {
        (self.interior_point.clone(), self.inradius)
    }

    /// `h_P(v) = max_x x . v` over vertices.
    pub fn support_function(&self, v: &[f64]) -> f64 {
        self.vertices
            .iter()
            .map(|x| dot(x, v))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `h_P(v_i)` for every normal.
    pub fn tight_offsets(&self) -> Vec<f64> {
        self.normals().iter().map(|v| self.support_function(v)).collect()
    }

    pub fn min_slack(&self, x: &[f64]) -> f64 {
        self.spec.min_slack(x)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.min_slack(x) >= -tol
    }

    /// `rho_{P,x}(u) = max{t : x + t u in P}` for interior `x`.
    pub fn radial_function(&self, x: &[f64], u: &[f64]) -> Result<f64> {
        let slack = self.min_slack(x);
        if !(slack > TOL.radial_interior) {
            return Err(Error::NotInterior { slack });
        }
        Ok(self.ray_exit(x, u))
    }

    /// Exit distance of the ray `x + t u` without interior checks. Constraints
    /// the ray moves away from are ignored, so this also serves boundary base
    /// points looking inward.
    #[inline]
    pub fn ray_exit(&self, x: &[f64], u: &[f64]) -> f64 {
        let z = self.spec.offsets();
        let mut best = f64::INFINITY;
        for (v, zi) in self.spec.normals().iter().zip(z) {
            let c = dot(v, u);
            if c > TOL.ray_parallel {
                let t = (zi - dot(v, x)).max(0.0) / c;
                if t < best {
                    best = t;
                }
            }
        }
        best
    }

    /// Parameter interval `[t_min, t_max]` of the line `x + t u` inside `P`,
    /// or `None` when the line misses.
    #[inline]
    pub fn clip_line(&self, x: &[f64], u: &[f64]) -> Option<(f64, f64)> {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (v, zi) in self.spec.normals().iter().zip(self.spec.offsets()) {
            let c = dot(v, u);
            let s = zi - dot(v, x);
            if c > TOL.ray_parallel {
                hi = hi.min(s / c);
            } else if c < -TOL.ray_parallel {
                lo = lo.max(s / c);
            } else if s < 0.0 {
                return None;
            }
        }
        (hi > lo).then_some((lo, hi))
    }

    /// Chord length `|P ∩ (x + R u)|`.
    #[inline]
    pub fn chord_length(&self, x: &[f64], u: &[f64]) -> f64 {
        self.clip_line(x, u).map_or(0.0, |(lo, hi)| hi - lo)
    }

    /// Largest vertex distance from `p`.
    pub fn radius_about(&self, p: &[f64]) -> f64 {
        self.vertices.iter().map(|x| dist(x, p)).fold(0.0, f64::max)
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                d = d.max(dist(a, b));
            }
        }
        d
    }

    /// `sum_i area_i v_i`, zero for a closed surface.
    pub fn minkowski_sum(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.dim()];
        for f in &self.facets {
            for (sk, vk) in s.iter_mut().zip(&self.normals()[f.normal_index]) {
                *sk += f.area * vk;
            }
        }
        s
    }

    pub fn translated(&self, t: &[f64]) -> Result<Polytope> {
        Polytope::new(self.spec.translated(t))
    }

    pub fn scaled(&self, s: f64) -> Result<Polytope> {
        Polytope::new(self.spec.scaled(s))
    }

    pub fn to_json(&self) -> PolytopeJson {
        PolytopeJson {
            normals: self.spec.normals().to_vec(),
            offsets: self.spec.offsets().to_vec(),
            vertices: self.vertices.clone(),
            facets: self
                .facets
                .iter()
                .map(|f| FacetJson {
                    normal_index: f.normal_index,
                    vertex_indices: f.vertex_indices.clone(),
                    area: f.area,
                })
                .collect(),
            volume: self.volume,
        }
    }

    /// Vertices of a polygon in counterclockwise boundary order.
    pub fn boundary_order_2d(&self) -> Vec<Vec<f64>> {
        let c = &self.interior_point;
        let mut v = self.vertices.clone();
        v.sort_by(|a, b| {
            let ta = (a[1] - c[1]).atan2(a[0] - c[0]);
            let tb = (b[1] - c[1]).atan2(b[0] - c[0]);
            ta.total_cmp(&tb)
        });
        v
    }
}

/// Polytope JSON interchange format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolytopeJson {
    pub normals: Vec<Vec<f64>>,
    pub offsets: Vec<f64>,
    pub vertices: Vec<Vec<f64>>,
    pub facets: Vec<FacetJson>,
    pub volume: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacetJson {
    pub normal_index: usize,
    pub vertex_indices: Vec<usize>,
    pub area: f64,
}

fn cumulative(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

/// Triangulates the `k`-face cut out by `constraints` (vertex set `face`) into
/// `k`-simplices by coning from its centroid over its `(k-1)`-faces.
fn triangulate_face(
    vertices: &[Vec<f64>],
    active: &[BTreeSet<usize>],
    face: &[usize],
    constraints: &[usize],
    k: usize,
    tol: f64,
    out: &mut Vec<Vec<Vec<f64>>>,
) {
    if k == 1 {
        let a = &vertices[face[0]];
        let far = |from: &Vec<f64>| {
            face.iter()
                .map(|&i| &vertices[i])
                .max_by(|p, q| dist(p, from).total_cmp(&dist(q, from)))
                .unwrap()
                .clone()
        };
        let b = far(a);
        let a = far(&b);
        out.push(vec![a, b]);
        return;
    }
    let pts: Vec<Vec<f64>> = face.iter().map(|&i| vertices[i].clone()).collect();
    let c = centroid(&pts);
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let candidates: BTreeSet<usize> = face
        .iter()
        .flat_map(|&i| active[i].iter().copied())
        .filter(|j| !constraints.contains(j))
        .collect();
    for j in candidates {
        let sub: Vec<usize> = face.iter().copied().filter(|&i| active[i].contains(&j)).collect();
        if sub.len() < k || seen.contains(&sub) {
            continue;
        }
        let sub_pts: Vec<Vec<f64>> = sub.iter().map(|&i| vertices[i].clone()).collect();
        if affine_dimension(&sub_pts, tol.max(1e-12)) != k - 1 {
            continue;
        }
        seen.insert(sub.clone());
        let mut cons = constraints.to_vec();
        cons.push(j);
        let mut lower = Vec::new();
        triangulate_face(vertices, active, &sub, &cons, k - 1, tol, &mut lower);
        for s in lower {
            let mut simplex = Vec::with_capacity(k + 1);
            simplex.push(c.clone());
            simplex.extend(s);
            out.push(simplex);
        }
    }
}
