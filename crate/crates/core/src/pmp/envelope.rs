use std::io::{self, Write};

use super::SweepResult;
use crate::ocp::{FluxMode, OcpError, ToyParams};

/// Fraction of the horizon, counted from the end, used as the late window.
pub const WINDOW_FRACTION: f64 = 0.2;
pub const MIN_WINDOW_SAMPLES: usize = 10;

/// Balanced steady state: both limitations bind, `κ_E E = κ_M M = μ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub mu: f64,
    pub e: f64,
    pub m: f64,
    pub alpha: f64,
}

/// Allocation shares `(a_E, a_M)` needed to hold the balanced state at `mu`.
fn shares(mu: f64, p: &ToyParams) -> (f64, f64) {
    match p.flux {
        FluxMode::Constant { nu_e, nu_m } => (
            (mu + p.gamma_e) * mu / (p.kappa_e * nu_e),
            (mu + p.gamma_m) * mu / (p.kappa_m * nu_m),
        ),
        // ν = c μ / κ_M cancels the pool sizes.
        FluxMode::MachineProportional { coupling } => (
            (mu + p.gamma_e) * p.kappa_m / (p.kappa_e * coupling),
            (mu + p.gamma_m) / coupling,
        ),
    }
}

/// The constant allocation that holds the balanced steady state, found by
/// bisection on `a_E(μ) + a_M(μ) = 1`. The smoothing width is ignored.
pub fn steady_state_alpha(p: &ToyParams) -> Result<SteadyState, OcpError> {
    p.validate()?;
    let total = |mu: f64| {
        let (a, b) = shares(mu, p);
        a + b
    };
    let no_root = |why: &str| Err(OcpError::NoSteadyState(why.to_string()));
    match p.flux {
        FluxMode::Constant { nu_e, nu_m } if nu_e <= 0.0 || nu_m <= 0.0 => {
            return no_root("both fluxes must be positive");
        }
        FluxMode::MachineProportional { coupling } if coupling <= 0.0 => {
            return no_root("flux coupling must be positive");
        }
        _ => {}
    }
    // The share sum is increasing in μ. In machine-proportional mode it is
    // affine with a positive value at μ = 0, which may already exceed 1.
    let mut lo = 0.0;
    if let FluxMode::MachineProportional { .. } = p.flux {
        if total(0.0) >= 1.0 {
            return no_root("turnover outpaces synthesis at every growth rate");
        }
    }
    let mut hi = 1.0;
    while total(hi) < 1.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return no_root("no balanced growth rate");
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = 0.5 * (lo + hi);
    let (a, b) = shares(mu, p);
    Ok(SteadyState {
        mu,
        e: mu / p.kappa_e,
        m: mu / p.kappa_m,
        alpha: a / (a + b),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeReport {
    /// Mean of `|κ_E E − κ_M M| / (κ_E E + κ_M M)` over the late window.
    pub manifold_residual: f64,
    /// Time average of the control over the late window.
    pub alpha_avg: f64,
    pub alpha_ss: f64,
    pub difference: f64,
    pub window_samples: usize,
}

impl EnvelopeReport {
    pub fn write_summary<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "manifold_residual,{:?}", self.manifold_residual)?;
        writeln!(w, "alpha_avg,{:?}", self.alpha_avg)?;
        writeln!(w, "alpha_ss,{:?}", self.alpha_ss)?;
        writeln!(w, "difference,{:?}", self.difference)
    }
}

/// Compares the late part of a computed extremal with the balanced steady
/// state.
pub fn envelope_check(result: &SweepResult, p: &ToyParams) -> Result<EnvelopeReport, OcpError> {
    let tr = &result.trajectory;
    let t_end = result.control.t_end();
    let t0 = t_end - WINDOW_FRACTION * t_end;
    let idx: Vec<usize> = (0..tr.len()).filter(|&i| tr.times[i] >= t0).collect();
    if idx.len() < MIN_WINDOW_SAMPLES {
        return Err(OcpError::DegenerateWindow {
            found: idx.len(),
            required: MIN_WINDOW_SAMPLES,
        });
    }
    let manifold_residual = idx
        .iter()
        .map(|&i| {
            let (a, b) = (p.kappa_e * tr.states[i].e, p.kappa_m * tr.states[i].m);
            if a + b > 0.0 {
                (a - b).abs() / (a + b)
            } else {
                0.0
            }
        })
        .sum::<f64>()
        / idx.len() as f64;

    let u = &result.control;
    let mut integral = 0.0;
    for k in 0..u.intervals() {
        let (a, b) = (u.grid[k].max(t0), u.grid[k + 1]);
        if b > a {
            integral += (b - a) * u.values[k];
        }
    }
    let alpha_avg = integral / (t_end - t0);
    let alpha_ss = steady_state_alpha(p)?.alpha;
    Ok(EnvelopeReport {
        manifold_residual,
        alpha_avg,
        alpha_ss,
        difference: (alpha_avg - alpha_ss).abs(),
        window_samples: idx.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(flux: FluxMode) -> ToyParams {
        ToyParams {
            kappa_e: 1.0,
            kappa_m: 1.0,
            gamma_e: 0.1,
            gamma_m: 0.1,
            flux,
            smoothing: 0.01,
        }
    }

    #[test]
    fn symmetric_split_is_half() {
        let ss = steady_state_alpha(&params(FluxMode::Constant { nu_e: 1.0, nu_m: 1.0 })).unwrap();
        assert_eq!(ss.alpha, 0.5);
        // α ν = (μ + γ) μ with α = 1/2, ν = 1.
        let expect = (-0.1 + (0.01f64 + 2.0).sqrt()) / 2.0;
        assert!((ss.mu - expect).abs() < 1e-12);
    }

    #[test]
    fn machine_proportional_steady_state() {
        // a_E + a_M = ((μ + γ) + (μ + γ)) / c = 1 with κ = 1.
        let ss = steady_state_alpha(&params(FluxMode::MachineProportional { coupling: 2.0 })).unwrap();
        assert!((ss.mu - 0.9).abs() < 1e-12);
        assert!((ss.alpha - 0.5).abs() < 1e-15);
    }

    #[test]
    fn no_steady_state_when_turnover_dominates() {
        let mut p = params(FluxMode::MachineProportional { coupling: 0.1 });
        p.gamma_m = 0.2;
        assert!(matches!(steady_state_alpha(&p), Err(OcpError::NoSteadyState(_))));
        let p = params(FluxMode::Constant { nu_e: 0.0, nu_m: 1.0 });
        assert!(matches!(steady_state_alpha(&p), Err(OcpError::NoSteadyState(_))));
    }
}
