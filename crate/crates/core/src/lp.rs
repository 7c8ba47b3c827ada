//! Packing LPs `max c.x  s.t.  sum_{j in row i} x_j <= 1,  x >= 0` solved to
//! an optimal vertex.
//!
//! The solver is a dense primal simplex on the slack-augmented tableau. It
//! starts from the all-slack basis (x = 0 is always feasible) and uses
//! Bland's rule for both the entering and the leaving variable, so it cannot
//! cycle on degenerate vertices. Upper bounds `x_j <= 1` are implied by any
//! row containing `j` and are not carried separately.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::real::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<T> {
    objective: Vec<T>,
    /// Variable indices with a unit coefficient in each row.
    rows: Vec<Vec<usize>>,
}

impl<T: Real> LinearProgram<T> {
    pub fn new(objective: Vec<T>, rows: Vec<Vec<usize>>) -> Result<Self> {
        let n = objective.len();
        if let Some(c) = objective.iter().find(|c| !c.is_finite()) {
            return Err(Error::MalformedLp(format!("non-finite objective coefficient {c}")));
        }
        for (i, row) in rows.iter().enumerate() {
            let mut seen = row.clone();
            seen.sort_unstable();
            if let Some(&j) = seen.iter().find(|&&j| j >= n) {
                return Err(Error::MalformedLp(format!("row {i} references variable {j} of {n}")));
            }
            if seen.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::MalformedLp(format!("row {i} lists a variable twice")));
            }
        }
        Ok(LinearProgram { objective, rows })
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn objective(&self) -> &[T] {
        &self.objective
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn value(&self, x: &[T]) -> T {
        self.objective.iter().zip(x).map(|(&c, &v)| c * v).sum()
    }

    pub fn row_activity(&self, x: &[T]) -> Vec<T> {
        self.rows.iter().map(|r| r.iter().map(|&j| x[j]).sum()).collect()
    }

    pub fn is_feasible(&self, x: &[T]) -> bool {
        let tol = T::feas_tol();
        x.len() == self.num_vars()
            && x.iter().all(|&v| v >= -tol)
            && self.row_activity(x).iter().all(|&a| a <= T::one() + tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasicSolution<T> {
    pub x: Vec<T>,
    pub objective_value: T,
    /// Basic column of each row; columns `>= num_vars` are slacks.
    pub basis: Vec<usize>,
    /// Row prices certifying optimality.
    pub duals: Vec<T>,
}

impl<T: Real> BasicSolution<T> {
    pub fn support(&self) -> usize {
        self.x.iter().filter(|&&v| v > T::feas_tol()).count()
    }
}

struct Tableau<T> {
    n: usize,
    a: Vec<Vec<T>>,
    rhs: Vec<T>,
    reduced: Vec<T>,
    value: T,
    basis: Vec<usize>,
}

impl<T: Real> Tableau<T> {
    fn new(lp: &LinearProgram<T>) -> Self {
        let (n, m) = (lp.num_vars(), lp.num_rows());
        let mut a = vec![vec![T::zero(); n + m]; m];
        for (i, row) in lp.rows.iter().enumerate() {
            for &j in row {
                a[i][j] = T::one();
            }
            a[i][n + i] = T::one();
        }
        let mut reduced = lp.objective.clone();
        reduced.resize(n + m, T::zero());
        Tableau { n, a, rhs: vec![T::one(); m], reduced, value: T::zero(), basis: (n..n + m).collect() }
    }

    fn entering(&self) -> Option<usize> {
        let tol = T::pivot_tol();
        self.reduced.iter().position(|&d| d > tol)
    }

    /// Minimum-ratio row; ties go to the row whose basic column is smallest.
    /// Ties are ratios within a few ulps of the minimum: a wider window would
    /// push the rows it skips below zero.
    fn leaving(&self, col: usize) -> Option<usize> {
        let tol = T::pivot_tol();
        let ratios: Vec<(usize, T)> = self
            .a
            .iter()
            .enumerate()
            .filter(|(_, row)| row[col] > tol)
            .map(|(i, row)| (i, self.rhs[i] / row[col]))
            .collect();
        let min = ratios.iter().map(|&(_, r)| r).fold(T::infinity(), T::min);
        let slack = T::lit(16.0) * T::epsilon() * (T::one() + min.abs());
        ratios.into_iter().filter(|&(_, r)| r <= min + slack).min_by_key(|&(i, _)| self.basis[i]).map(|(i, _)| i)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.a[r][c];
        for v in self.a[r].iter_mut() {
            *v /= p;
        }
        self.rhs[r] /= p;
        let pivot_row = self.a[r].clone();
        let pivot_rhs = self.rhs[r];
        for i in 0..self.a.len() {
            if i == r {
                continue;
            }
            let f = self.a[i][c];
            if f == T::zero() {
                continue;
            }
            for (v, &pv) in self.a[i].iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.a[i][c] = T::zero();
            self.rhs[i] -= f * pivot_rhs;
            if self.rhs[i] < T::zero() && self.rhs[i] > -T::pivot_tol() {
                self.rhs[i] = T::zero();
            }
        }
        let f = self.reduced[c];
        for (v, &pv) in self.reduced.iter_mut().zip(&pivot_row) {
            *v -= f * pv;
        }
        self.reduced[c] = T::zero();
        self.value += f * pivot_rhs;
        self.basis[r] = c;
    }
}

pub fn solve_lp_basic<T: Real>(lp: &LinearProgram<T>) -> Result<BasicSolution<T>> {
    let (n, m) = (lp.num_vars(), lp.num_rows());
    let mut tab = Tableau::new(lp);
    let max_pivots = 1_000 + 200 * (n + m);
    let mut pivots = 0;
    while let Some(col) = tab.entering() {
        let Some(row) = tab.leaving(col) else {
            return Err(Error::MalformedLp(format!("unbounded: variable {col} appears in no row")));
        };
        tab.pivot(row, col);
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::LpCertificate(format!("no convergence after {pivots} pivots")));
        }
    }

    let mut x = vec![T::zero(); n];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < tab.n {
            x[b] = tab.rhs[i].max(T::zero());
        }
    }
    let duals: Vec<T> = (0..m).map(|i| -tab.reduced[n + i]).collect();
    let solution = BasicSolution { objective_value: lp.value(&x), x, basis: tab.basis, duals };
    certify(lp, &solution)?;
    Ok(solution)
}

/// Primal feasibility, dual feasibility and zero duality gap, all checked
/// against the original data rather than the final tableau.
fn certify<T: Real>(lp: &LinearProgram<T>, sol: &BasicSolution<T>) -> Result<()> {
    let scale = lp.objective.iter().fold(T::one(), |acc, c| acc.max(c.abs()));
    let tol = T::lit(10.0) * T::feas_tol() * scale;
    if !lp.is_feasible(&sol.x) {
        let worst = lp.row_activity(&sol.x).into_iter().fold(T::zero(), T::max);
        return Err(Error::LpCertificate(format!("primal infeasible: row activity {worst}")));
    }
    if let Some(i) = sol.duals.iter().position(|&y| y < -tol) {
        return Err(Error::LpCertificate(format!("negative dual on row {i}")));
    }
    let mut price = vec![T::zero(); lp.num_vars()];
    for (row, &y) in lp.rows.iter().zip(&sol.duals) {
        for &j in row {
            price[j] += y;
        }
    }
    if let Some(j) = (0..lp.num_vars()).find(|&j| price[j] < lp.objective[j] - tol) {
        return Err(Error::LpCertificate(format!("reduced cost of variable {j} is positive")));
    }
    let dual_value: T = sol.duals.iter().copied().sum();
    if (dual_value - sol.objective_value).abs() > tol * T::lit(lp.num_rows().max(1) as f64) {
        return Err(Error::LpCertificate(format!("duality gap {}", dual_value - sol.objective_value)));
    }
    Ok(())
}

/// True iff `x` is feasible and the constraints active at `x` (tight rows and
/// zero variables) have full rank, i.e. `x` is a vertex.
pub fn check_basic<T: Real>(lp: &LinearProgram<T>, x: &[T]) -> bool {
    if !lp.is_feasible(x) {
        return false;
    }
    let tol = T::feas_tol();
    let support: Vec<usize> = (0..x.len()).filter(|&j| x[j] > tol).collect();
    if support.is_empty() {
        return true;
    }
    let activity = lp.row_activity(x);
    let tight: Vec<&Vec<usize>> =
        lp.rows.iter().zip(&activity).filter(|(_, &a)| (a - T::one()).abs() <= tol).map(|(r, _)| r).collect();
    if tight.len() < support.len() {
        return false;
    }
    let mut mat = DenseMatrix::zeros(tight.len(), support.len());
    for (i, row) in tight.iter().enumerate() {
        for (c, j) in support.iter().enumerate() {
            if row.contains(j) {
                mat[(i, c)] = T::one();
            }
        }
    }
    mat.rank(T::lit(1e-6)) == support.len()
}
