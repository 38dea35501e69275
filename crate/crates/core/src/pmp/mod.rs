//! Pontryagin machinery for the two-pool allocation problem.
//!
//! The payoff `J = ∫ μ dt` is maximised. With multiplier `η⁰` on the running
//! payoff the Hamiltonian is
//!
//! ```text
//! H = η⁰ μ + η_E (α ν_E − (μ + γ_E) E) + η_M ((1 − α) ν_M − (μ + γ_M) M)
//!   = H₀ + α H₁,      H₁ = η_E ν_E − η_M ν_M
//! ```
//!
//! and the costates obey `η̇ = −∂H/∂x` with `η(T) = 0`. Maximising the payoff
//! with normal extremals means `η⁰ = +1`; then `∫ H₁` over a control
//! interval is the derivative of `J` with respect to that interval's value.

mod envelope;
mod sweep;

pub use envelope::{envelope_check, steady_state_alpha, EnvelopeReport, SteadyState};
pub use sweep::{sweep, SweepOptions, SweepResult};

use crate::ocp::{growth_gradient, growth_rate, integrate, rhs, ControlSignal, OcpError, ToyParams, ToyState, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjointState {
    pub eta_e: f64,
    pub eta_m: f64,
    pub eta0: f64,
}

impl AdjointState {
    pub fn new(eta_e: f64, eta_m: f64, eta0: f64) -> Self {
        AdjointState { eta_e, eta_m, eta0 }
    }
}

/// Multiplier of the payoff along normal extremals of the maximisation.
pub const ETA0_NORMAL: f64 = 1.0;

pub fn hamiltonian(s: ToyState, a: AdjointState, alpha: f64, p: &ToyParams) -> f64 {
    let mu = growth_rate(s, p);
    let (ne, nm) = p.fluxes(s);
    a.eta0 * mu + a.eta_e * (alpha * ne - (mu + p.gamma_e) * s.e) + a.eta_m * ((1.0 - alpha) * nm - (mu + p.gamma_m) * s.m)
}

/// Coefficient of `α` in the Hamiltonian.
pub fn switching(s: ToyState, a: AdjointState, p: &ToyParams) -> f64 {
    let (ne, nm) = p.fluxes(s);
    a.eta_e * ne - a.eta_m * nm
}

/// `(η̇_E, η̇_M)`.
///
/// The growth-law terms are those of `−∂H/∂x`; with machine-proportional
/// fluxes the flux slopes add `−η_E α ∂ν_E/∂M − η_M (1 − α) ∂ν_M/∂M` to the
/// machinery costate.
pub fn adjoint_rhs(s: ToyState, a: AdjointState, alpha: f64, p: &ToyParams) -> Result<(f64, f64), OcpError> {
    if p.smoothing == 0.0 && (p.kappa_e * s.e - p.kappa_m * s.m).abs() < 1e-12 {
        return Err(OcpError::Kink { t: f64::NAN });
    }
    let mu = growth_rate(s, p);
    let (mu_e, mu_m) = growth_gradient(s, p);
    let (de, dm) = p.flux_slopes();
    let eta_e_dot = -a.eta0 * mu_e + a.eta_e * (mu + p.gamma_e) + a.eta_e * s.e * mu_e + a.eta_m * s.m * mu_e;
    let eta_m_dot = -a.eta0 * mu_m + a.eta_m * (mu + p.gamma_m) + a.eta_m * s.m * mu_m + a.eta_e * s.e * mu_m
        - a.eta_e * alpha * de
        - a.eta_m * (1.0 - alpha) * dm;
    Ok((eta_e_dot, eta_m_dot))
}

fn hermite_mid(x0: f64, x1: f64, d0: f64, d1: f64, h: f64) -> f64 {
    0.5 * (x0 + x1) + h / 8.0 * (d0 - d1)
}

fn state_mid(traj: &Trajectory, i: usize, p: &ToyParams) -> ToyState {
    let h = traj.times[i + 1] - traj.times[i];
    let alpha = traj.controls[i];
    let (s0, s1) = (traj.states[i], traj.states[i + 1]);
    let (f0, f1) = (rhs(s0, alpha, p), rhs(s1, alpha, p));
    ToyState::new(hermite_mid(s0.e, s1.e, f0.e, f1.e, h), hermite_mid(s0.m, s1.m, f0.m, f1.m, h))
}

/// Costates at every sample of `traj`, from `η(T) = 0` backwards with RK4;
/// states between samples come from cubic Hermite interpolation.
pub fn backward_integrate(traj: &Trajectory, p: &ToyParams) -> Result<Vec<AdjointState>, OcpError> {
    backward_integrate_with(traj, p, ETA0_NORMAL)
}

pub fn backward_integrate_with(traj: &Trajectory, p: &ToyParams, eta0: f64) -> Result<Vec<AdjointState>, OcpError> {
    let n = traj.len();
    let mut out = vec![AdjointState::new(0.0, 0.0, eta0); n];
    let with_time = |t: f64| move |e: OcpError| match e {
        OcpError::Kink { .. } => OcpError::Kink { t },
        other => other,
    };
    for i in (0..n.saturating_sub(1)).rev() {
        let h = traj.times[i + 1] - traj.times[i];
        let alpha = traj.controls[i];
        let mid = state_mid(traj, i, p);
        let g = |s: ToyState, e: f64, m: f64, t: f64| {
            adjoint_rhs(s, AdjointState::new(e, m, eta0), alpha, p).map_err(with_time(t))
        };
        let a1 = out[i + 1];
        let t_mid = traj.times[i] + 0.5 * h;
        let k1 = g(traj.states[i + 1], a1.eta_e, a1.eta_m, traj.times[i + 1])?;
        let k2 = g(mid, a1.eta_e - 0.5 * h * k1.0, a1.eta_m - 0.5 * h * k1.1, t_mid)?;
        let k3 = g(mid, a1.eta_e - 0.5 * h * k2.0, a1.eta_m - 0.5 * h * k2.1, t_mid)?;
        let k4 = g(traj.states[i], a1.eta_e - h * k3.0, a1.eta_m - h * k3.1, traj.times[i])?;
        out[i] = AdjointState::new(
            a1.eta_e - h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            a1.eta_m - h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
            eta0,
        );
    }
    Ok(out)
}

/// Forward and backward solution under one control, with per-interval
/// integrals of `H₀` and `H₁`.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub trajectory: Trajectory,
    pub adjoints: Vec<AdjointState>,
    pub cost: f64,
    /// `∫ H₁` over each control interval: the gradient of `J`.
    pub gradient: Vec<f64>,
    /// `∫ H₀` over each control interval.
    pub h0_integral: Vec<f64>,
    pub interval_lengths: Vec<f64>,
}

impl Evaluation {
    pub fn h1_average(&self) -> Vec<f64> {
        self.gradient.iter().zip(&self.interval_lengths).map(|(g, l)| g / l).collect()
    }

    /// Interval-averaged Hamiltonian if the interval used control `alpha`.
    pub fn h_average(&self, k: usize, alpha: f64) -> f64 {
        (self.h0_integral[k] + alpha * self.gradient[k]) / self.interval_lengths[k]
    }
}

pub fn evaluate(x0: ToyState, u: &ControlSignal, p: &ToyParams, dt_max: f64) -> Result<Evaluation, OcpError> {
    let t_end = u.t_end();
    let trajectory = integrate(x0, u, p, t_end, dt_max)?;
    let adjoints = backward_integrate(&trajectory, p)?;
    let k_n = u.intervals();
    let mut gradient = vec![0.0; k_n];
    let mut h0_integral = vec![0.0; k_n];
    for i in 0..trajectory.len() - 1 {
        let (t0, t1) = (trajectory.times[i], trajectory.times[i + 1]);
        let h = t1 - t0;
        let k = u.interval_of(0.5 * (t0 + t1));
        let alpha = trajectory.controls[i];
        let s_mid = state_mid(&trajectory, i, p);
        let (a0, a1) = (adjoints[i], adjoints[i + 1]);
        let d0 = adjoint_rhs(trajectory.states[i], a0, alpha, p)?;
        let d1 = adjoint_rhs(trajectory.states[i + 1], a1, alpha, p)?;
        let a_mid = AdjointState::new(
            hermite_mid(a0.eta_e, a1.eta_e, d0.0, d1.0, h),
            hermite_mid(a0.eta_m, a1.eta_m, d0.1, d1.1, h),
            a0.eta0,
        );
        let h1 = |s, a| switching(s, a, p);
        let h0 = |s, a| hamiltonian(s, a, 0.0, p);
        gradient[k] += h / 6.0 * (h1(trajectory.states[i], a0) + 4.0 * h1(s_mid, a_mid) + h1(trajectory.states[i + 1], a1));
        h0_integral[k] += h / 6.0 * (h0(trajectory.states[i], a0) + 4.0 * h0(s_mid, a_mid) + h0(trajectory.states[i + 1], a1));
    }
    let cost = crate::ocp::cost(&trajectory);
    Ok(Evaluation {
        trajectory,
        adjoints,
        cost,
        gradient,
        h0_integral,
        interval_lengths: u.grid.windows(2).map(|w| w[1] - w[0]).collect(),
    })
}

/// Gradient of `J` with respect to the value on each control interval.
pub fn control_gradient(x0: ToyState, u: &ControlSignal, p: &ToyParams, dt_max: f64) -> Result<Vec<f64>, OcpError> {
    Ok(evaluate(x0, u, p, dt_max)?.gradient)
}
