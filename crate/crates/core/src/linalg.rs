//! Small dense vector helpers for dimensions 2..=4.
//!
//! Points and directions are plain `[f64]` slices; matrices are row-major
//! `Vec<f64>`. Anything larger than a handful of rows goes through nalgebra.

use nalgebra::DMatrix;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], t: f64) -> Vec<f64> {
    a.iter().map(|x| x * t).collect()
}

/// `a + t * b`
pub fn axpy(a: &[f64], t: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * y).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn normalized(a: &[f64]) -> Vec<f64> {
    let n = norm(a);
    a.iter().map(|x| x / n).collect()
}

pub fn centroid(points: &[Vec<f64>]) -> Vec<f64> {
    let dim = points[0].len();
    let mut c = vec![0.0; dim];
    for p in points {
        for (ci, pi) in c.iter_mut().zip(p) {
            *ci += pi;
        }
    }
    let k = points.len() as f64;
    c.iter_mut().for_each(|x| *x /= k);
    c
}

/// Determinant of a square matrix given as rows, by partial-pivot elimination.
pub fn det(rows: &[&[f64]]) -> f64 {
    let n = rows.len();
    let mut a: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
    let mut d = 1.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .unwrap();
        if a[piv * n + col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
            }
            d = -d;
        }
        let p = a[col * n + col];
        d *= p;
        for i in col + 1..n {
            let f = a[i * n + col] / p;
            if f != 0.0 {
                for k in col..n {
                    a[i * n + k] -= f * a[col * n + k];
                }
            }
        }
    }
    d
}

/// Solves `A x = b` for square `A` given by rows. Returns `None` when singular.
pub fn solve(rows: &[&[f64]], b: &[f64]) -> Option<Vec<f64>> {
    let n = rows.len();
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let lu = m.lu();
    let x = lu.solve(&nalgebra::DVector::from_column_slice(b))?;
    Some(x.iter().copied().collect())
}

/// Solves a symmetric positive definite system, falling back to LU.
pub fn solve_spd(a: DMatrix<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let rhs = nalgebra::DVector::from_column_slice(b);
    if let Some(ch) = a.clone().cholesky() {
        return Some(ch.solve(&rhs).iter().copied().collect());
    }
    a.lu().solve(&rhs).map(|x| x.iter().copied().collect())
}

/// Orthonormal basis of the span of `vectors`, via modified Gram-Schmidt.
/// Vectors whose residual norm falls below `tol` are dropped.
pub fn orthonormal_basis(vectors: &[&[f64]], tol: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.to_vec();
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
            }
        }
        let nw = norm(&w);
        if nw > tol {
            w.iter_mut().for_each(|x| *x /= nw);
            basis.push(w);
        }
    }
    basis
}

/// Orthonormal basis of the orthogonal complement of the unit vector `u`.
pub fn complement_basis(u: &[f64]) -> Vec<Vec<f64>> {
    let n = u.len();
    let mut seeds: Vec<Vec<f64>> = vec![u.to_vec()];
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        seeds.push(e);
    }
    let refs: Vec<&[f64]> = seeds.iter().map(|v| v.as_slice()).collect();
    let mut basis = orthonormal_basis(&refs, 1e-8);
    basis.remove(0);
    basis.truncate(n - 1);
    basis
}

/// Distance from `v` to the subspace spanned by the orthonormal `basis`.
pub fn distance_to_span(v: &[f64], basis: &[Vec<f64>]) -> f64 {
    let mut w = v.to_vec();
    for b in basis {
        let c = dot(&w, b);
        w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
    }
    norm(&w)
}

/// k-dimensional measure of the simplex with the given `k + 1` vertices.
pub fn simplex_measure(points: &[Vec<f64>]) -> f64 {
    let k = points.len() - 1;
    if k == 0 {
        return 1.0;
    }
    let edges: Vec<Vec<f64>> = points[1..].iter().map(|p| sub(p, &points[0])).collect();
    let gram = DMatrix::from_fn(k, k, |i, j| dot(&edges[i], &edges[j]));
    let g = gram.determinant().max(0.0);
    g.sqrt() / factorial(k)
}

/// Affine dimension of a point set (numerical rank of differences).
pub fn affine_dimension(points: &[Vec<f64>], tol: f64) -> usize {
    if points.len() <= 1 {
        return 0;
    }
    let diffs: Vec<Vec<f64>> = points[1..].iter().map(|p| sub(p, &points[0])).collect();
    let refs: Vec<&[f64]> = diffs.iter().map(|v| v.as_slice()).collect();
    orthonormal_basis(&refs, tol).len()
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}
