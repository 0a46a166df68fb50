//! Thin wrapper over `microlp` for the small dense programs used here.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::{Error, Result};

pub(crate) struct DenseLp {
    objective: Vec<f64>,
    bounds: Vec<(f64, f64)>,
    rows: Vec<(Vec<f64>, ComparisonOp, f64)>,
}

impl DenseLp {
    /// Maximize `objective . x` over variables with the given bounds.
    pub fn maximize(objective: Vec<f64>, bounds: Vec<(f64, f64)>) -> Self {
        Self {
            objective,
            bounds,
            rows: Vec::new(),
        }
    }

    pub fn le(&mut self, row: Vec<f64>, rhs: f64) {
        self.rows.push((row, ComparisonOp::Le, rhs));
    }

    pub fn eq(&mut self, row: Vec<f64>, rhs: f64) {
        self.rows.push((row, ComparisonOp::Eq, rhs));
    }

    pub fn solve(&self) -> Result<(f64, Vec<f64>)> {
        let mut problem = Problem::new(OptimizationDirection::Maximize);
        let vars: Vec<_> = self
            .objective
            .iter()
            .zip(&self.bounds)
            .map(|(&c, &b)| problem.add_var(c, b))
            .collect();
        for (row, op, rhs) in &self.rows {
            let terms: Vec<_> = vars
                .iter()
                .zip(row)
                .filter(|(_, &a)| a != 0.0)
                .map(|(&v, &a)| (v, a))
                .collect();
            problem.add_constraint(terms.as_slice(), *op, *rhs);
        }
        let solution = problem
            .solve()
            .map_err(|e| Error::Lp(e.to_string()))?
            .into_solution()
            .map_err(|_| Error::Lp("solve interrupted".into()))?;
        let x = vars.iter().map(|&v| solution.var_value(v)).collect();
        Ok((solution.objective(), x))
    }
}
