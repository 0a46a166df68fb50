//! Gauss-Legendre rules.

use std::f64::consts::PI;

/// Nodes and weights on `[-1, 1]`, by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// A Gauss-Legendre rule mapped onto intervals on demand.
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights for `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (c + h * x, h * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Nodes and weights for `[a, b]` after the sigmoidal change of variables
    /// `t -> t^m / (t^m + (1-t)^m)`, which clusters nodes at both endpoints and
    /// tames integrable endpoint singularities.
    pub fn clustered(&self, a: f64, b: f64, m: i32) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mf = m as f64;
        self.on(0.0, 1.0).map(move |(t, w)| {
            let (p, r) = (t.powi(m), (1.0 - t).powi(m));
            let s = p + r;
            let psi = p / s;
            let dpsi = mf * t.powi(m - 1) * (1.0 - t).powi(m - 1) / (s * s);
            (a + (b - a) * psi, w * (b - a) * dpsi)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        for n in 1..12 {
            let rule = GaussRule::new(n);
            for deg in 0..(2 * n) {
                let got = rule.integrate(0.0, 2.0, |x| x.powi(deg as i32));
                let exact = 2f64.powi(deg as i32 + 1) / (deg as f64 + 1.0);
                assert!((got - exact).abs() < 1e-12 * exact, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn clustered_rule_handles_endpoint_singularity() {
        let rule = GaussRule::new(24);
        let got: f64 = rule.clustered(0.0, 1.0, 4).map(|(x, w)| w / x.sqrt()).sum();
        assert!((got - 2.0).abs() < 1e-6, "{got}");
        // the substitution is not polynomial, so exactness needs more nodes
        let fine = GaussRule::new(80);
        let poly: f64 = fine.clustered(1.0, 3.0, 4).map(|(x, w)| w * x * x).sum();
        assert!((poly - 26.0 / 3.0).abs() < 1e-12, "{:e}", poly - 26.0 / 3.0);
    }

    #[test]
    fn smooth_integrand() {
        let rule = GaussRule::new(20);
        let got = rule.integrate(0.0, PI, f64::sin);
        assert!((got - 2.0).abs() < 1e-14);
    }
}
