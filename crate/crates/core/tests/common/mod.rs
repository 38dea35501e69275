//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rba_core::lp::{solve, LinearProgram, SolveStatus};
use rba_core::ocp::{FluxMode, ToyParams};

// ---------------------------------------------------------------------------
// Vertex enumeration

/// `{x : E x = e, G x <= g}` with rows stored densely.
struct Polyhedron {
    n: usize,
    eq: Vec<(Vec<f64>, f64)>,
    ineq: Vec<(Vec<f64>, f64)>,
}

fn rank(rows: &[Vec<f64>], n: usize) -> usize {
    if rows.is_empty() || n == 0 {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    m.svd(false, false).rank(1e-9)
}

/// Orthonormal basis of the null space of `rows`.
fn null_space(rows: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    if rows.is_empty() {
        return (0..n).map(|j| (0..n).map(|i| f64::from(u8::from(i == j))).collect()).collect();
    }
    // Pad to a square matrix so the full right singular basis is returned.
    let r = rows.len().max(n);
    let m = DMatrix::from_fn(r, n, |i, j| if i < rows.len() { rows[i][j] } else { 0.0 });
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let scale = svd.singular_values.iter().fold(0.0_f64, |a, s| a.max(*s)).max(1.0);
    (0..n)
        .filter(|&k| svd.singular_values[k] <= 1e-9 * scale)
        .map(|k| v_t.row(k).iter().copied().collect())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Polyhedron {
    fn satisfied(&self, x: &[f64]) -> bool {
        let tol = |b: f64| 1e-7 * (1.0 + b.abs());
        self.eq.iter().all(|(a, b)| (dot(a, x) - b).abs() <= tol(*b))
            && self.ineq.iter().all(|(a, b)| dot(a, x) - b <= tol(*b))
    }

    /// Nonempty iff, after removing the lineality space, some choice of
    /// active constraints pins down a feasible point.
    fn nonempty(&self) -> bool {
        let n = self.n;
        let mut all_rows: Vec<Vec<f64>> = self.eq.iter().map(|r| r.0.clone()).collect();
        all_rows.extend(self.ineq.iter().map(|r| r.0.clone()));
        let mut eq = self.eq.clone();
        for v in null_space(&all_rows, n) {
            eq.push((v, 0.0));
        }
        let eq_rows: Vec<Vec<f64>> = eq.iter().map(|r| r.0.clone()).collect();
        let r_eq = rank(&eq_rows, n);
        let need = n - r_eq;
        let mut chosen = Vec::with_capacity(need);
        self.search(&eq, need, 0, &mut chosen)
    }

    fn search(&self, eq: &[(Vec<f64>, f64)], need: usize, start: usize, chosen: &mut Vec<usize>) -> bool {
        if chosen.len() == need {
            return self.try_vertex(eq, chosen);
        }
        for k in start..self.ineq.len() {
            if self.ineq.len() - k < need - chosen.len() {
                break;
            }
            chosen.push(k);
            if self.search(eq, need, k + 1, chosen) {
                return true;
            }
            chosen.pop();
        }
        false
    }

    fn try_vertex(&self, eq: &[(Vec<f64>, f64)], chosen: &[usize]) -> bool {
        let n = self.n;
        let rows: Vec<&(Vec<f64>, f64)> = eq.iter().chain(chosen.iter().map(|&k| &self.ineq[k])).collect();
        if n == 0 {
            return self.satisfied(&[]);
        }
        let a = DMatrix::from_fn(rows.len(), n, |i, j| rows[i].0[j]);
        let b = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
        let svd = a.clone().svd(true, true);
        if svd.rank(1e-9) < n {
            return false;
        }
        let Ok(x) = svd.solve(&b, 1e-12) else { return false };
        // Overdetermined systems must be consistent.
        if (&a * &x - &b).amax() > 1e-7 * (1.0 + b.amax()) {
            return false;
        }
        self.satisfied(x.as_slice())
    }
}

fn feasible_set(lp: &LinearProgram) -> Polyhedron {
    let n = lp.n_vars();
    let row = |m: &DMatrix<f64>, i: usize| m.row(i).iter().copied().collect::<Vec<f64>>();
    let eq = (0..lp.a_eq.nrows()).map(|i| (row(&lp.a_eq, i), lp.b_eq[i])).collect();
    let mut ineq: Vec<(Vec<f64>, f64)> = (0..lp.a_ineq.nrows()).map(|i| (row(&lp.a_ineq, i), lp.b_ineq[i])).collect();
    for j in 0..n {
        let unit = |s: f64| (0..n).map(|k| if k == j { s } else { 0.0 }).collect::<Vec<f64>>();
        if lp.lower[j].is_finite() {
            ineq.push((unit(-1.0), -lp.lower[j]));
        }
        if lp.upper[j].is_finite() {
            ineq.push((unit(1.0), lp.upper[j]));
        }
    }
    Polyhedron { n, eq, ineq }
}

/// Status of `max c·x` over the feasible set by exhaustive enumeration.
pub fn vertex_status(lp: &LinearProgram) -> SolveStatus {
    let p = feasible_set(lp);
    if !p.nonempty() {
        return SolveStatus::Infeasible;
    }
    if lp.objective.iter().all(|c| *c == 0.0) {
        return SolveStatus::Feasible;
    }
    // Unbounded iff the recession cone meets {c·d = 1}.
    let cone = Polyhedron {
        n: p.n,
        eq: p
            .eq
            .iter()
            .map(|(a, _)| (a.clone(), 0.0))
            .chain(std::iter::once((lp.objective.iter().copied().collect(), 1.0)))
            .collect(),
        ineq: p.ineq.iter().map(|(a, _)| (a.clone(), 0.0)).collect(),
    };
    if cone.nonempty() {
        SolveStatus::UnboundedObjective
    } else {
        SolveStatus::Feasible
    }
}

// ---------------------------------------------------------------------------
// Growth-rate scan

/// Last feasible point of the uniform grid `k · step`, found with a coarse
/// pass at `100 · step` followed by the fine step inside the coarse bracket.
/// Equal to the full scan when feasibility is monotone in μ.
pub fn scan_mu_max(builder: impl Fn(f64) -> LinearProgram, step: f64) -> f64 {
    let feasible = |mu: f64| solve(&builder(mu)).unwrap().is_feasible();
    let coarse = 100.0 * step;
    let mut k = 0u64;
    while feasible((k + 1) as f64 * coarse) {
        k += 1;
        assert!(k < 1_000_000, "scan did not terminate");
    }
    let base = k as f64 * coarse;
    let mut last = base;
    for i in 1..100u64 {
        let mu = (k * 100 + i) as f64 * step;
        if !feasible(mu) {
            break;
        }
        last = mu;
    }
    last
}

// ---------------------------------------------------------------------------
// Steady states of the two-pool system

/// Steady state `(e, m)` under constant allocation `alpha` with the exact
/// minimum law, solved regime by regime.
pub fn constant_alpha_steady_state(alpha: f64, p: &ToyParams) -> (f64, f64) {
    let FluxMode::Constant { nu_e, nu_m } = p.flux else {
        panic!("closed form needs constant fluxes")
    };
    // Positive root of κ x² + γ x − s = 0.
    let root = |kappa: f64, gamma: f64, s: f64| (-gamma + (gamma * gamma + 4.0 * kappa * s).sqrt()) / (2.0 * kappa);
    // Enzyme-limited: μ = κ_E e.
    let e = root(p.kappa_e, p.gamma_e, alpha * nu_e);
    let mu = p.kappa_e * e;
    let m = (1.0 - alpha) * nu_m / (mu + p.gamma_m);
    if p.kappa_e * e <= p.kappa_m * m {
        return (e, m);
    }
    // Machinery-limited: μ = κ_M m.
    let m = root(p.kappa_m, p.gamma_m, (1.0 - alpha) * nu_m);
    let mu = p.kappa_m * m;
    (alpha * nu_e / (mu + p.gamma_e), m)
}

/// Allocation at which the constant-control steady state lies on
/// `κ_E E = κ_M M`, by nested grid scans down to a spacing of 1e-9.
pub fn balanced_alpha_by_grid(p: &ToyParams) -> f64 {
    let residual = |a: f64| {
        let (e, m) = constant_alpha_steady_state(a, p);
        p.kappa_e * e - p.kappa_m * m
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..3 {
        let step = (hi - lo) / 1000.0;
        let mut k = 0;
        while k < 1000 && residual(lo + (k + 1) as f64 * step) < 0.0 {
            k += 1;
        }
        let new_lo = lo + k as f64 * step;
        hi = (new_lo + step).min(hi);
        lo = new_lo;
    }
    0.5 * (lo + hi)
}
