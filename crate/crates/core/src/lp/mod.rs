//! Dense linear feasibility and optimisation.
//!
//! Problems are stated as
//!
//! ```text
//! maximise  c·x
//! s.t.      A_eq x  = b_eq
//!           A_in x <= b_in
//!           lower <= x <= upper
//! ```
//!
//! with infinite bounds written as `f64::INFINITY` / `f64::NEG_INFINITY`.
//! A zero objective turns the solve into a pure feasibility test.

mod simplex;

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub use simplex::solve_with;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("lower bound exceeds upper bound for variable {0}")]
    CrossedBounds(usize),
    #[error("iteration limit of {0} reached")]
    IterationLimit(usize),
    #[error("basis matrix became singular")]
    SingularBasis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
    pub a_ineq: DMatrix<f64>,
    pub b_ineq: DVector<f64>,
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
    /// Maximised; all zeros for a pure feasibility problem.
    pub objective: DVector<f64>,
    pub variable_names: Vec<String>,
}

impl LinearProgram {
    /// An empty system over `n` nonnegative variables.
    pub fn nonnegative(n: usize) -> Self {
        LinearProgram {
            a_eq: DMatrix::zeros(0, n),
            b_eq: DVector::zeros(0),
            a_ineq: DMatrix::zeros(0, n),
            b_ineq: DVector::zeros(0),
            lower: DVector::zeros(n),
            upper: DVector::from_element(n, f64::INFINITY),
            objective: DVector::zeros(n),
            variable_names: (0..n).map(|j| format!("x{j}")).collect(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.lower.len()
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.n_vars();
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(LpError::Dimension(what.to_string()))
            }
        };
        check(self.upper.len() == n, "upper bound length")?;
        check(self.objective.len() == n, "objective length")?;
        check(self.variable_names.len() == n, "variable name count")?;
        check(self.a_eq.ncols() == n, "equality column count")?;
        check(self.a_ineq.ncols() == n, "inequality column count")?;
        check(self.a_eq.nrows() == self.b_eq.len(), "equality right-hand side length")?;
        check(self.a_ineq.nrows() == self.b_ineq.len(), "inequality right-hand side length")?;
        for j in 0..n {
            if self.lower[j] > self.upper[j] || self.lower[j].is_nan() || self.upper[j].is_nan() {
                return Err(LpError::CrossedBounds(j));
            }
        }
        Ok(())
    }

    /// Appends equality rows `rows · x = rhs`.
    pub fn push_eq(&mut self, rows: &DMatrix<f64>, rhs: &DVector<f64>) {
        self.a_eq = stack(&self.a_eq, rows);
        self.b_eq = stack_vec(&self.b_eq, rhs);
    }

    /// Appends inequality rows `rows · x <= rhs`.
    pub fn push_ineq(&mut self, rows: &DMatrix<f64>, rhs: &DVector<f64>) {
        self.a_ineq = stack(&self.a_ineq, rows);
        self.b_ineq = stack_vec(&self.b_ineq, rhs);
    }

    /// Writes the constraint system as a plain-text tableau, one row per
    /// constraint, with a header of variable names.
    pub fn write_tableau<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "{:>8}", "row")?;
        for name in &self.variable_names {
            write!(w, " {name:>14}")?;
        }
        writeln!(w, " {:>4} {:>14}", "op", "rhs")?;
        let mut write_row = |label: String, row: Vec<f64>, op: &str, rhs: f64| -> io::Result<()> {
            write!(w, "{label:>8}")?;
            for v in row {
                write!(w, " {v:>14.6e}")?;
            }
            writeln!(w, " {op:>4} {rhs:>14.6e}")
        };
        for i in 0..self.a_eq.nrows() {
            write_row(format!("eq{i}"), self.a_eq.row(i).iter().copied().collect(), "=", self.b_eq[i])?;
        }
        for i in 0..self.a_ineq.nrows() {
            write_row(format!("in{i}"), self.a_ineq.row(i).iter().copied().collect(), "<=", self.b_ineq[i])?;
        }
        write_row("lower".into(), self.lower.iter().copied().collect(), "", f64::NAN)?;
        write_row("upper".into(), self.upper.iter().copied().collect(), "", f64::NAN)?;
        write_row("obj".into(), self.objective.iter().copied().collect(), "max", f64::NAN)
    }
}

fn stack(top: &DMatrix<f64>, bottom: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(top.ncols(), bottom.ncols(), "stacked blocks must share columns");
    let mut out = DMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.rows_mut(0, top.nrows()).copy_from(top);
    out.rows_mut(top.nrows(), bottom.nrows()).copy_from(bottom);
    out
}

fn stack_vec(top: &DVector<f64>, bottom: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(top.len() + bottom.len(), top.iter().chain(bottom.iter()).copied())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Feasible,
    Infeasible,
    UnboundedObjective,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// A feasible point; for an unbounded objective, the last vertex visited.
    pub witness: Option<DVector<f64>>,
    pub max_residual_eq: f64,
    pub max_residual_ineq: f64,
    pub iterations: usize,
    /// Some nonbasic, non-fixed column had zero reduced cost at termination,
    /// so the returned point is one of several equally good ones.
    pub degenerate: bool,
}

impl SolveResult {
    pub fn is_feasible(&self) -> bool {
        self.status == SolveStatus::Feasible
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Defaults to `50 * (n + m_eq + m_ineq)`.
    pub max_iterations: Option<usize>,
    /// Relative primal feasibility tolerance.
    pub feasibility_tol: f64,
    pub pivot_tol: f64,
    /// Degenerate pivots tolerated before switching to Bland's rule.
    pub bland_after: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iterations: None,
            feasibility_tol: 1e-9,
            pivot_tol: 1e-10,
            bland_after: 1000,
        }
    }
}

/// Solves with default options.
pub fn solve(lp: &LinearProgram) -> Result<SolveResult, LpError> {
    solve_with(lp, &SolveOptions::default())
}

/// Maximal constraint violations of a candidate point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    pub eq: f64,
    pub ineq: f64,
    pub bounds: f64,
    pub pass: bool,
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Measures the violation of each constraint block at `x`.
///
/// Violations are absolute; the pass test scales `tol` by
/// `1 + ‖rhs‖∞` of the block so that well-posed systems with large
/// coefficients are judged on relative accuracy.
pub fn check_point(lp: &LinearProgram, x: &DVector<f64>, tol: f64) -> Result<ResidualReport, LpError> {
    lp.validate()?;
    if x.len() != lp.n_vars() {
        return Err(LpError::Dimension(format!(
            "point has length {}, program has {} variables",
            x.len(),
            lp.n_vars()
        )));
    }
    let eq = inf_norm(&(&lp.a_eq * x - &lp.b_eq));
    let ineq = (&lp.a_ineq * x - &lp.b_ineq).iter().fold(0.0_f64, |acc, v| acc.max(*v));
    let bounds = (0..x.len()).fold(0.0_f64, |acc, j| {
        acc.max(lp.lower[j] - x[j]).max(x[j] - lp.upper[j])
    });
    let pass = eq <= tol * (1.0 + inf_norm(&lp.b_eq))
        && ineq <= tol * (1.0 + inf_norm(&lp.b_ineq))
        && bounds <= tol * (1.0 + finite_bound_norm(lp));
    Ok(ResidualReport { eq, ineq, bounds, pass })
}

fn finite_bound_norm(lp: &LinearProgram) -> f64 {
    lp.lower
        .iter()
        .chain(lp.upper.iter())
        .filter(|v| v.is_finite())
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
}
