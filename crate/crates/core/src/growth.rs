//! Maximal growth rate by bracketing and bisection.
//!
//! Feasibility is monotone in μ (a feasible point at μ scales to one at any
//! smaller rate), so the feasible set is an interval starting at 0 and
//! bisection on its right end is sound.

use nalgebra::DVector;
use thiserror::Error;

use crate::lp::{solve_with, LinearProgram, LpError, SolveOptions, SolveStatus};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrowthError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("no finite infeasible bracket found up to mu = {mu_hi:e}")]
    CapReached { mu_hi: f64 },
    #[error("tolerance and initial upper bound must be positive")]
    InvalidOptions,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthSearchOptions {
    pub tol: f64,
    pub mu_hi_init: f64,
    pub solve: SolveOptions,
}

impl Default for GrowthSearchOptions {
    fn default() -> Self {
        GrowthSearchOptions {
            tol: 1e-8,
            mu_hi_init: 1.0,
            solve: SolveOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthStatus {
    /// `mu_max` is the feasible end of a bracket of the requested width.
    Bracketed,
    /// Even μ = 0 is infeasible: the prescribed composition does not fit.
    BasalCompositionInadmissible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthSearchResult {
    pub status: GrowthStatus,
    /// Largest growth rate found feasible.
    pub mu_max: f64,
    /// `(feasible, infeasible)`; whether the supremum itself is attained is
    /// not decided.
    pub bracket: (f64, f64),
    /// Number of programs solved.
    pub iterations: usize,
    /// Feasible point at `bracket.0`.
    pub witness: Option<DVector<f64>>,
}

/// Finds the largest feasible growth rate of `builder`.
pub fn mu_max<F>(builder: F, opts: &GrowthSearchOptions) -> Result<GrowthSearchResult, GrowthError>
where
    F: Fn(f64) -> LinearProgram,
{
    if !(opts.tol > 0.0 && opts.mu_hi_init > 0.0) {
        return Err(GrowthError::InvalidOptions);
    }
    let mut iterations = 0;
    let mut probe = |mu: f64| -> Result<Option<DVector<f64>>, GrowthError> {
        iterations += 1;
        let r = solve_with(&builder(mu), &opts.solve)?;
        Ok(match r.status {
            SolveStatus::Infeasible => None,
            _ => r.witness,
        })
    };

    let Some(mut witness) = probe(0.0)? else {
        return Ok(GrowthSearchResult {
            status: GrowthStatus::BasalCompositionInadmissible,
            mu_max: 0.0,
            bracket: (0.0, 0.0),
            iterations: 1,
            witness: None,
        });
    };

    let cap = opts.mu_hi_init * 2f64.powi(60);
    let mut lo = 0.0;
    let mut hi = opts.mu_hi_init;
    loop {
        match probe(hi)? {
            Some(w) => {
                lo = hi;
                witness = w;
                if hi >= cap {
                    return Err(GrowthError::CapReached { mu_hi: hi });
                }
                hi *= 2.0;
            }
            None => break,
        }
    }

    while hi - lo > opts.tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match probe(mid)? {
            Some(w) => {
                lo = mid;
                witness = w;
            }
            None => hi = mid,
        }
    }

    Ok(GrowthSearchResult {
        status: GrowthStatus::Bracketed,
        mu_max: lo,
        bracket: (lo, hi),
        iterations,
        witness: Some(witness),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileStatus {
    Feasible,
    Infeasible,
    Failed(LpError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityProfile {
    pub mus: Vec<f64>,
    pub statuses: Vec<ProfileStatus>,
    /// First index at which a feasible status follows an infeasible one.
    pub first_violation: Option<usize>,
}

impl FeasibilityProfile {
    pub fn is_monotone(&self) -> bool {
        self.first_violation.is_none()
    }

    /// Index of the first infeasible entry, if any.
    pub fn switch_index(&self) -> Option<usize> {
        self.statuses.iter().position(|s| *s == ProfileStatus::Infeasible)
    }

    /// CSV with header `mu,status`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("mu,status\n");
        for (mu, s) in self.mus.iter().zip(&self.statuses) {
            let label = match s {
                ProfileStatus::Feasible => "feasible".to_string(),
                ProfileStatus::Infeasible => "infeasible".to_string(),
                ProfileStatus::Failed(e) => format!("failed: {e}"),
            };
            out.push_str(&format!("{mu:?},{label}\n"));
        }
        out
    }
}

/// Solves the program at every μ in `mus` (ascending), spreading the work
/// over the available cores.
pub fn feasibility_profile<F>(builder: F, mus: &[f64], opts: &SolveOptions) -> FeasibilityProfile
where
    F: Fn(f64) -> LinearProgram + Sync,
{
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(mus.len().max(1));
    let chunk = mus.len().div_ceil(workers).max(1);
    let statuses: Vec<ProfileStatus> = std::thread::scope(|scope| {
        let handles: Vec<_> = mus
            .chunks(chunk)
            .map(|part| {
                let builder = &builder;
                scope.spawn(move || {
                    part.iter()
                        .map(|&mu| match solve_with(&builder(mu), opts) {
                            Ok(r) if r.status == SolveStatus::Infeasible => ProfileStatus::Infeasible,
                            Ok(_) => ProfileStatus::Feasible,
                            Err(e) => ProfileStatus::Failed(e),
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("profile worker panicked"))
            .collect()
    });

    let mut seen_infeasible = false;
    let mut first_violation = None;
    for (i, s) in statuses.iter().enumerate() {
        match s {
            ProfileStatus::Infeasible => seen_infeasible = true,
            ProfileStatus::Feasible if seen_infeasible => {
                first_violation = Some(i);
                break;
            }
            _ => {}
        }
    }
    FeasibilityProfile {
        mus: mus.to_vec(),
        statuses,
        first_violation,
    }
}
