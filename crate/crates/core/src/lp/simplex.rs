//! Bounded revised simplex on row-equilibrated data.
//!
//! Every inequality row gets a slack in `[0, ∞)`; rows whose starting
//! residual cannot be absorbed by a slack get an artificial column signed so
//! that its starting value is nonnegative. Phase 1 drives the artificials to
//! zero, phase 2 maximises the user objective with the artificials pinned.

use nalgebra::{DMatrix, DVector};

use super::{LinearProgram, LpError, SolveOptions, SolveResult, SolveStatus};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Pricing {
    Dantzig,
    Bland,
}

struct Tableau {
    a: DMatrix<f64>,
    b: DVector<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    first_artificial: usize,
}

struct Counters {
    iterations: usize,
    limit: usize,
    degenerate_pivots: usize,
    pricing: Pricing,
}

enum PhaseEnd {
    Optimal { degenerate: bool },
    Unbounded,
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let n = lp.n_vars();
        let m_e = lp.a_eq.nrows();
        let m_i = lp.a_ineq.nrows();
        let m = m_e + m_i;

        let mut rows = DMatrix::zeros(m, n);
        let mut b = DVector::zeros(m);
        for i in 0..m {
            let (row, rhs) = if i < m_e {
                (lp.a_eq.row(i), lp.b_eq[i])
            } else {
                (lp.a_ineq.row(i - m_e), lp.b_ineq[i - m_e])
            };
            let scale = row.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
            let scale = if scale > 0.0 { scale } else { 1.0 };
            for j in 0..n {
                rows[(i, j)] = row[j] / scale;
            }
            b[i] = rhs / scale;
        }

        let start: Vec<f64> = (0..n)
            .map(|j| {
                if lp.lower[j].is_finite() {
                    lp.lower[j]
                } else if lp.upper[j].is_finite() {
                    lp.upper[j]
                } else {
                    0.0
                }
            })
            .collect();
        let residual: Vec<f64> = (0..m)
            .map(|i| b[i] - (0..n).map(|j| rows[(i, j)] * start[j]).sum::<f64>())
            .collect();

        // Rows 0..m_e need an artificial; inequality rows only when the slack
        // would start negative.
        let needs_artificial: Vec<bool> = (0..m).map(|i| i < m_e || residual[i] < 0.0).collect();
        let n_art = needs_artificial.iter().filter(|x| **x).count();
        let n_total = n + m_i + n_art;

        let mut a = DMatrix::zeros(m, n_total);
        a.columns_mut(0, n).copy_from(&rows);
        let mut lower: Vec<f64> = lp.lower.iter().copied().collect();
        let mut upper: Vec<f64> = lp.upper.iter().copied().collect();
        let mut x = start;
        let mut basis = vec![usize::MAX; m];

        for k in 0..m_i {
            let i = m_e + k;
            let col = n + k;
            a[(i, col)] = 1.0;
            lower.push(0.0);
            upper.push(f64::INFINITY);
            if needs_artificial[i] {
                x.push(0.0);
            } else {
                x.push(residual[i]);
                basis[i] = col;
            }
        }
        let first_artificial = n + m_i;
        let mut col = first_artificial;
        for i in 0..m {
            if !needs_artificial[i] {
                continue;
            }
            let sign = if residual[i] < 0.0 { -1.0 } else { 1.0 };
            a[(i, col)] = sign;
            lower.push(0.0);
            upper.push(f64::INFINITY);
            x.push(residual[i].abs());
            basis[i] = col;
            col += 1;
        }

        let mut is_basic = vec![false; n_total];
        for &j in &basis {
            is_basic[j] = true;
        }
        Tableau {
            a,
            b,
            lower,
            upper,
            x,
            basis,
            is_basic,
            first_artificial,
        }
    }

    fn n_total(&self) -> usize {
        self.x.len()
    }

    fn basis_matrix(&self) -> DMatrix<f64> {
        let m = self.basis.len();
        let mut bm = DMatrix::zeros(m, m);
        for (k, &j) in self.basis.iter().enumerate() {
            bm.set_column(k, &self.a.column(j));
        }
        bm
    }

    /// Recomputes the basic values from the nonbasic ones.
    fn refresh_basic(&mut self, lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>) -> Result<(), LpError> {
        let mut rhs = self.b.clone();
        for j in 0..self.n_total() {
            if !self.is_basic[j] && self.x[j] != 0.0 {
                rhs.axpy(-self.x[j], &self.a.column(j), 1.0);
            }
        }
        let xb = lu.solve(&rhs).ok_or(LpError::SingularBasis)?;
        for (k, &j) in self.basis.iter().enumerate() {
            self.x[j] = xb[k];
        }
        Ok(())
    }

    fn fix_artificials(&mut self) {
        for j in self.first_artificial..self.n_total() {
            self.upper[j] = 0.0;
        }
    }

    fn max_artificial(&self) -> f64 {
        self.x[self.first_artificial..]
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(*v))
    }

    fn run_phase(&mut self, cost: &[f64], opts: &SolveOptions, counters: &mut Counters) -> Result<PhaseEnd, LpError> {
        let m = self.basis.len();
        let n_total = self.n_total();
        let cost_scale = cost.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        let dual_tol = 1e-9 * (1.0 + cost_scale);
        loop {
            // nalgebra's LU does not accept empty matrices.
            let bm = self.basis_matrix();
            let lu = (m > 0).then(|| bm.clone().lu());
            if let Some(lu) = &lu {
                self.refresh_basic(lu)?;
            }
            let y = match &lu {
                None => DVector::zeros(0),
                Some(_) => {
                    let c_b = DVector::from_iterator(m, self.basis.iter().map(|&j| cost[j]));
                    bm.transpose().lu().solve(&c_b).ok_or(LpError::SingularBasis)?
                }
            };

            let mut entering: Option<(usize, f64)> = None;
            let mut degenerate = false;
            for j in 0..n_total {
                if self.is_basic[j] || self.lower[j] == self.upper[j] {
                    continue;
                }
                let d = cost[j] - self.a.column(j).dot(&y);
                let can_increase = self.x[j] < self.upper[j];
                let can_decrease = self.x[j] > self.lower[j];
                if d.abs() <= dual_tol {
                    degenerate = true;
                    continue;
                }
                let improving = (d > 0.0 && can_increase) || (d < 0.0 && can_decrease);
                if !improving {
                    continue;
                }
                match (counters.pricing, entering) {
                    (Pricing::Bland, Some(_)) => {}
                    (Pricing::Dantzig, Some((_, best))) if best.abs() >= d.abs() => {}
                    _ => entering = Some((j, d)),
                }
            }
            let Some((q, d_q)) = entering else {
                return Ok(PhaseEnd::Optimal { degenerate });
            };

            if counters.iterations >= counters.limit {
                return Err(LpError::IterationLimit(counters.limit));
            }
            counters.iterations += 1;

            let dir = if d_q > 0.0 { 1.0 } else { -1.0 };
            let w = match &lu {
                None => DVector::zeros(0),
                Some(lu) => lu.solve(&self.a.column(q).into_owned()).ok_or(LpError::SingularBasis)?,
            };

            // Largest step keeping every basic variable within its bounds.
            let mut step = self.upper[q] - self.lower[q];
            let mut leaving: Option<(usize, f64)> = None;
            let mut best_pivot = 0.0;
            for k in 0..m {
                let delta = -dir * w[k];
                if delta.abs() <= opts.pivot_tol {
                    continue;
                }
                let j = self.basis[k];
                let (limit, bound) = if delta < 0.0 {
                    if !self.lower[j].is_finite() {
                        continue;
                    }
                    (((self.x[j] - self.lower[j]) / -delta).max(0.0), self.lower[j])
                } else {
                    if !self.upper[j].is_finite() {
                        continue;
                    }
                    (((self.upper[j] - self.x[j]) / delta).max(0.0), self.upper[j])
                };
                let tie_band = 1e-12 * (1.0 + limit.abs());
                let take = if limit < step - tie_band {
                    true
                } else if limit <= step + tie_band {
                    match (leaving, counters.pricing) {
                        (None, _) => false,
                        (Some((k_best, _)), Pricing::Bland) => j < self.basis[k_best],
                        (Some(_), Pricing::Dantzig) => delta.abs() > best_pivot,
                    }
                } else {
                    false
                };
                if take {
                    step = step.min(limit);
                    leaving = Some((k, bound));
                    best_pivot = delta.abs();
                }
            }

            if !step.is_finite() {
                return Ok(PhaseEnd::Unbounded);
            }
            if step <= 1e-12 {
                counters.degenerate_pivots += 1;
                if counters.degenerate_pivots >= opts.bland_after {
                    counters.pricing = Pricing::Bland;
                }
            }

            match leaving {
                None => {
                    // Bound flip of the entering column.
                    self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
                }
                Some((k, bound)) => {
                    let out = self.basis[k];
                    self.x[q] += dir * step;
                    self.x[out] = bound;
                    self.is_basic[out] = false;
                    self.is_basic[q] = true;
                    self.basis[k] = q;
                    if out >= self.first_artificial {
                        self.upper[out] = 0.0;
                        self.x[out] = 0.0;
                    }
                }
            }
        }
    }
}

/// Solves `lp` with explicit options.
pub fn solve_with(lp: &LinearProgram, opts: &SolveOptions) -> Result<SolveResult, LpError> {
    lp.validate()?;
    let n = lp.n_vars();
    let m_e = lp.a_eq.nrows();
    let m_i = lp.a_ineq.nrows();
    let mut t = Tableau::build(lp);
    let mut counters = Counters {
        iterations: 0,
        limit: opts.max_iterations.unwrap_or(50 * (n + m_e + m_i)),
        degenerate_pivots: 0,
        pricing: Pricing::Dantzig,
    };

    let n_total = t.n_total();
    let phase1_cost: Vec<f64> = (0..n_total)
        .map(|j| if j >= t.first_artificial { -1.0 } else { 0.0 })
        .collect();
    let mut end = t.run_phase(&phase1_cost, opts, &mut counters)?;

    let infeasible = SolveResult {
        status: SolveStatus::Infeasible,
        witness: None,
        max_residual_eq: f64::NAN,
        max_residual_ineq: f64::NAN,
        iterations: counters.iterations,
        degenerate: false,
    };
    if t.max_artificial() > opts.feasibility_tol * (1.0 + inf_norm(&t.b)) {
        return Ok(infeasible);
    }
    t.fix_artificials();

    let mut status = SolveStatus::Feasible;
    if lp.objective.iter().any(|c| *c != 0.0) {
        let mut phase2_cost = vec![0.0; n_total];
        phase2_cost[..n].copy_from_slice(lp.objective.as_slice());
        end = t.run_phase(&phase2_cost, opts, &mut counters)?;
        if matches!(end, PhaseEnd::Unbounded) {
            status = SolveStatus::UnboundedObjective;
        }
    }

    let witness = DVector::from_iterator(
        n,
        (0..n).map(|j| t.x[j].clamp(lp.lower[j], lp.upper[j])),
    );
    let max_residual_eq = inf_norm(&(&lp.a_eq * &witness - &lp.b_eq));
    let max_residual_ineq = (&lp.a_ineq * &witness - &lp.b_ineq)
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(*v));
    let eq_ok = max_residual_eq <= opts.feasibility_tol * (1.0 + inf_norm(&lp.b_eq));
    let ineq_ok = max_residual_ineq <= opts.feasibility_tol * (1.0 + inf_norm(&lp.b_ineq));
    if !(eq_ok && ineq_ok) {
        return Ok(SolveResult {
            iterations: counters.iterations,
            ..infeasible
        });
    }
    Ok(SolveResult {
        status,
        witness: Some(witness),
        max_residual_eq,
        max_residual_ineq,
        iterations: counters.iterations,
        degenerate: matches!(end, PhaseEnd::Optimal { degenerate: true }),
    })
}
