//! Growth rate of a full resource-allocation model evaluated along a toy
//! trajectory, for comparison with the toy growth law.
//!
//! At a checkpoint with pools `(E, M)` the model's enzymes may total at most
//! `enzyme_scale · E` and its process machines at most `machine_scale · M`;
//! the reported rate is the maximal feasible growth rate under those caps.
//! This never feeds back into the optimisation.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};

use super::{ToyState, Trajectory};
use crate::assembly::Problem;
use crate::growth::{mu_max, GrowthError, GrowthSearchOptions};
use crate::lp::LinearProgram;

#[derive(Debug, Clone)]
pub struct RbaHook {
    pub problem: Problem,
    pub enzyme_scale: f64,
    pub machine_scale: f64,
    pub search: GrowthSearchOptions,
}

impl RbaHook {
    pub fn new(problem: Problem) -> Self {
        RbaHook {
            problem,
            enzyme_scale: 1.0,
            machine_scale: 1.0,
            search: GrowthSearchOptions {
                tol: 1e-6,
                ..GrowthSearchOptions::default()
            },
        }
    }

    fn capped(&self, s: ToyState, mu: f64) -> LinearProgram {
        let mut lp = self.problem.build(mu);
        let d = self.problem.model.dims;
        let mut rows = DMatrix::zeros(2, lp.n_vars());
        for j in 0..d.n_y {
            rows[(usize::from(j >= d.n_m), j)] = 1.0;
        }
        let rhs = DVector::from_row_slice(&[self.enzyme_scale * s.e, self.machine_scale * s.m]);
        lp.push_ineq(&rows, &rhs);
        lp
    }

    /// Maximal growth rate with the machine pools capped by `s`.
    pub fn growth_rate(&self, s: ToyState) -> Result<f64, GrowthError> {
        Ok(mu_max(|mu| self.capped(s, mu), &self.search)?.mu_max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbaCheckpoint {
    pub t: f64,
    pub state: ToyState,
    pub mu_toy: f64,
    pub mu_rba: Result<f64, GrowthError>,
}

/// Evaluates the hook at every `every`-th sample of `traj` and at its end.
pub fn rba_checkpoints(traj: &Trajectory, hook: &RbaHook, every: usize) -> Vec<RbaCheckpoint> {
    let every = every.max(1);
    let mut idx: Vec<usize> = (0..traj.len()).step_by(every).collect();
    if idx.last() != Some(&(traj.len() - 1)) {
        idx.push(traj.len() - 1);
    }
    idx.into_iter()
        .map(|i| RbaCheckpoint {
            t: traj.times[i],
            state: traj.states[i],
            mu_toy: traj.mu_values[i],
            mu_rba: hook.growth_rate(traj.states[i]),
        })
        .collect()
}

/// CSV with header `t,E,M,mu_toy,mu_rba`; failed evaluations are written as
/// `nan`.
pub fn write_checkpoints_csv<W: Write>(points: &[RbaCheckpoint], mut w: W) -> io::Result<()> {
    writeln!(w, "t,E,M,mu_toy,mu_rba")?;
    for c in points {
        let rba = c.mu_rba.as_ref().map_or(f64::NAN, |v| *v);
        writeln!(w, "{:?},{:?},{:?},{:?},{:?}", c.t, c.state.e, c.state.m, c.mu_toy, rba)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::golden;
    use crate::ocp::{integrate, ControlSignal, FluxMode, ToyParams};

    #[test]
    fn larger_pools_never_slow_growth() {
        let hook = RbaHook::new(Problem::prokaryotic(golden::toy_prokaryote_model()));
        let small = hook.growth_rate(ToyState::new(0.01, 0.01)).unwrap();
        let large = hook.growth_rate(ToyState::new(0.05, 0.05)).unwrap();
        assert!(large >= small);
        assert_eq!(hook.growth_rate(ToyState::new(0.0, 0.0)).unwrap_or(0.0), 0.0);
    }

    #[test]
    fn checkpoints_cover_the_end() {
        let p = ToyParams {
            kappa_e: 1.0,
            kappa_m: 1.0,
            gamma_e: 0.0,
            gamma_m: 0.0,
            flux: FluxMode::Constant { nu_e: 0.02, nu_m: 0.02 },
            smoothing: 0.0,
        };
        let u = ControlSignal::constant(1.0, 1, 0.5).unwrap();
        let traj = integrate(ToyState::new(0.01, 0.01), &u, &p, 1.0, 0.1).unwrap();
        let hook = RbaHook::new(Problem::prokaryotic(golden::toy_prokaryote_model()));
        let pts = rba_checkpoints(&traj, &hook, 4);
        assert_eq!(pts.last().unwrap().t, 1.0);
        let mut buf = Vec::new();
        write_checkpoints_csv(&pts, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("t,E,M,mu_toy,mu_rba\n"));
    }
}
