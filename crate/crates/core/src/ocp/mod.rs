//! Two-pool self-replicator with a translational allocation control.
//!
//! Enzymes `E` and machinery `M` are synthesised from fluxes `ν_E`, `ν_M`; a
//! fraction `α` of translation goes to enzymes. Both pools are diluted by
//! growth and degraded at constant rates:
//!
//! ```text
//! dE/dt = α ν_E − (μ + γ_E) E
//! dM/dt = (1 − α) ν_M − (μ + γ_M) M
//! μ     = min(κ_E E, κ_M M)
//! ```
//!
//! The payoff is the accumulated growth `J = ∫ μ dt`, equivalently the log
//! of the final volume ratio.

mod hook;

pub use hook::{rba_checkpoints, write_checkpoints_csv, RbaCheckpoint, RbaHook};

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OcpError {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("invalid control: {0}")]
    InvalidControl(String),
    #[error("state {variable} reached {value:e} at t = {t}; reduce the step size")]
    NegativeState { t: f64, variable: &'static str, value: f64 },
    #[error("growth law not differentiable at the balanced state (t = {t}); use a positive smoothing")]
    Kink { t: f64 },
    #[error("instance file: {0}")]
    Parse(String),
    #[error("no balanced steady state: {0}")]
    NoSteadyState(String),
    #[error("window holds {found} samples, at least {required} needed")]
    DegenerateWindow { found: usize, required: usize },
}

/// How the synthesis fluxes depend on the state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FluxMode {
    Constant { nu_e: f64, nu_m: f64 },
    /// Ribosome-like: both fluxes equal `coupling · M`.
    MachineProportional { coupling: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyParams {
    pub kappa_e: f64,
    pub kappa_m: f64,
    #[serde(default)]
    pub gamma_e: f64,
    #[serde(default)]
    pub gamma_m: f64,
    pub flux: FluxMode,
    /// Soft-min width; 0 gives the exact minimum.
    #[serde(default)]
    pub smoothing: f64,
}

impl ToyParams {
    pub fn validate(&self) -> Result<(), OcpError> {
        let bad = |what: &str| Err(OcpError::InvalidParams(what.to_string()));
        let pos = |v: f64| v > 0.0 && v.is_finite();
        let nonneg = |v: f64| v >= 0.0 && v.is_finite();
        if !pos(self.kappa_e) || !pos(self.kappa_m) {
            return bad("kappa_e and kappa_m must be positive");
        }
        if !nonneg(self.gamma_e) || !nonneg(self.gamma_m) {
            return bad("gamma_e and gamma_m must be nonnegative");
        }
        if !nonneg(self.smoothing) {
            return bad("smoothing must be nonnegative");
        }
        match self.flux {
            FluxMode::Constant { nu_e, nu_m } if !nonneg(nu_e) || !nonneg(nu_m) => bad("fluxes must be nonnegative"),
            FluxMode::MachineProportional { coupling } if !nonneg(coupling) => bad("flux coupling must be nonnegative"),
            _ => Ok(()),
        }
    }

    /// `(ν_E, ν_M)` at `s`.
    pub fn fluxes(&self, s: ToyState) -> (f64, f64) {
        match self.flux {
            FluxMode::Constant { nu_e, nu_m } => (nu_e, nu_m),
            FluxMode::MachineProportional { coupling } => (coupling * s.m, coupling * s.m),
        }
    }

    /// Derivatives of `(ν_E, ν_M)` with respect to `M`; both fluxes are
    /// independent of `E`.
    pub fn flux_slopes(&self) -> (f64, f64) {
        match self.flux {
            FluxMode::Constant { .. } => (0.0, 0.0),
            FluxMode::MachineProportional { coupling } => (coupling, coupling),
        }
    }

    /// Largest rate constant, used to pick stable step sizes.
    pub fn stiffness(&self, s: ToyState) -> f64 {
        let (ne, nm) = self.fluxes(s);
        [self.kappa_e, self.kappa_m, self.gamma_e, self.gamma_m, ne, nm, 1.0]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ToyState {
    pub e: f64,
    pub m: f64,
}

impl ToyState {
    pub fn new(e: f64, m: f64) -> Self {
        ToyState { e, m }
    }

    fn axpy(self, h: f64, d: ToyState) -> ToyState {
        ToyState::new(self.e + h * d.e, self.m + h * d.m)
    }
}

/// Soft minimum of `a` and `b` and the weight `∂/∂a` (the weight on `b` is
/// its complement). Exact minimum when `eps = 0`.
pub fn soft_min(a: f64, b: f64, eps: f64) -> (f64, f64) {
    if eps == 0.0 {
        let w = if a < b {
            1.0
        } else if a > b {
            0.0
        } else {
            0.5
        };
        return (a.min(b), w);
    }
    let lo = a.min(b);
    let z = (-(a - b).abs() / eps).exp();
    let value = lo - eps * z.ln_1p();
    let w = if a > b { z / (1.0 + z) } else { 1.0 / (1.0 + z) };
    (value, w)
}

pub fn growth_rate(s: ToyState, p: &ToyParams) -> f64 {
    soft_min(p.kappa_e * s.e, p.kappa_m * s.m, p.smoothing).0
}

/// `(∂μ/∂E, ∂μ/∂M)`.
pub fn growth_gradient(s: ToyState, p: &ToyParams) -> (f64, f64) {
    let (_, w) = soft_min(p.kappa_e * s.e, p.kappa_m * s.m, p.smoothing);
    (p.kappa_e * w, p.kappa_m * (1.0 - w))
}

pub fn rhs(s: ToyState, alpha: f64, p: &ToyParams) -> ToyState {
    let mu = growth_rate(s, p);
    let (ne, nm) = p.fluxes(s);
    ToyState::new(
        alpha * ne - (mu + p.gamma_e) * s.e,
        (1.0 - alpha) * nm - (mu + p.gamma_m) * s.m,
    )
}

/// Piecewise-constant control: `values[k]` holds on `[grid[k], grid[k+1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSignal {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl ControlSignal {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self, OcpError> {
        let u = ControlSignal { grid, values };
        u.validate()?;
        Ok(u)
    }

    /// `n` equal intervals on `[0, t_end]`.
    pub fn uniform(t_end: f64, values: Vec<f64>) -> Result<Self, OcpError> {
        let n = values.len();
        let grid = (0..=n).map(|k| t_end * k as f64 / n as f64).collect();
        ControlSignal::new(grid, values)
    }

    pub fn constant(t_end: f64, n: usize, alpha: f64) -> Result<Self, OcpError> {
        ControlSignal::uniform(t_end, vec![alpha; n])
    }

    pub fn validate(&self) -> Result<(), OcpError> {
        let bad = |what: &str| Err(OcpError::InvalidControl(what.to_string()));
        if self.values.is_empty() || self.grid.len() != self.values.len() + 1 {
            return bad("grid must have one more point than there are values");
        }
        if self.grid[0] != 0.0 || !self.grid.iter().all(|t| t.is_finite()) {
            return bad("grid must start at 0");
        }
        if self.grid.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("grid must be strictly increasing");
        }
        if self.values.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return bad("values must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn t_end(&self) -> f64 {
        *self.grid.last().expect("validated grid is nonempty")
    }

    pub fn intervals(&self) -> usize {
        self.values.len()
    }

    /// Interval containing `t`; the right end belongs to the last interval.
    pub fn interval_of(&self, t: f64) -> usize {
        match self.grid.partition_point(|g| *g <= t) {
            0 => 0,
            k => (k - 1).min(self.values.len() - 1),
        }
    }

    pub fn value_at(&self, t: f64) -> f64 {
        self.values[self.interval_of(t)]
    }

    /// Reads `t,alpha` lines (header optional); each row starts an interval
    /// and the last row gives the end time with any alpha.
    pub fn from_csv(text: &str) -> Result<Self, OcpError> {
        let mut grid = Vec::new();
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || (i == 0 && line.starts_with('t')) {
                continue;
            }
            let mut fields = line.split(',');
            let parse = |f: Option<&str>| -> Result<f64, OcpError> {
                f.map(str::trim)
                    .ok_or_else(|| OcpError::InvalidControl(format!("line {}: expected t,alpha", i + 1)))?
                    .parse::<f64>()
                    .map_err(|e| OcpError::InvalidControl(format!("line {}: {e}", i + 1)))
            };
            grid.push(parse(fields.next())?);
            values.push(parse(fields.next())?);
        }
        values.pop();
        ControlSignal::new(grid, values)
    }
}

/// A simulated trajectory on the output time grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ToyState>,
    /// Control in force on the step starting at each time.
    pub controls: Vec<f64>,
    pub mu_values: Vec<f64>,
    /// `∫_0^t μ`.
    pub cost_running: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn terminal(&self) -> ToyState {
        *self.states.last().expect("trajectories are nonempty")
    }

    /// CSV with header `t,E,M,alpha,mu,J_cum`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,E,M,alpha,mu,J_cum")?;
        for i in 0..self.len() {
            let s = self.states[i];
            writeln!(
                w,
                "{:?},{:?},{:?},{:?},{:?},{:?}",
                self.times[i], s.e, s.m, self.controls[i], self.mu_values[i], self.cost_running[i]
            )?;
        }
        Ok(())
    }
}

/// Accumulated growth of a trajectory.
pub fn cost(traj: &Trajectory) -> f64 {
    traj.cost_running.last().copied().unwrap_or(0.0)
}

/// Trapezoidal `∫ μ dt` over the stored samples; a cross-check of the
/// integrated cost that converges at second order in the output spacing.
pub fn trapezoid_cost(traj: &Trajectory) -> f64 {
    traj.times
        .windows(2)
        .zip(traj.mu_values.windows(2))
        .map(|(t, m)| 0.5 * (t[1] - t[0]) * (m[0] + m[1]))
        .sum()
}

/// One RK4 step of the state together with the accumulated cost.
fn rk4_step(s: ToyState, alpha: f64, p: &ToyParams, h: f64) -> (ToyState, f64) {
    let f = |x: ToyState| (rhs(x, alpha, p), growth_rate(x, p));
    let (k1, j1) = f(s);
    let (k2, j2) = f(s.axpy(0.5 * h, k1));
    let (k3, j3) = f(s.axpy(0.5 * h, k2));
    let (k4, j4) = f(s.axpy(h, k3));
    let next = ToyState::new(
        s.e + h / 6.0 * (k1.e + 2.0 * k2.e + 2.0 * k3.e + k4.e),
        s.m + h / 6.0 * (k1.m + 2.0 * k2.m + 2.0 * k3.m + k4.m),
    );
    (next, h / 6.0 * (j1 + 2.0 * j2 + 2.0 * j3 + j4))
}

const CLIP_LIMIT: f64 = 1e-9;

fn guard(s: ToyState, t: f64) -> Result<ToyState, OcpError> {
    for (variable, value) in [("E", s.e), ("M", s.m)] {
        if value < -CLIP_LIMIT {
            return Err(OcpError::NegativeState { t, variable, value });
        }
    }
    Ok(ToyState::new(s.e.max(0.0), s.m.max(0.0)))
}

/// Simulates from `x0` under `u` up to `t_end` with fixed RK4 steps no
/// longer than `dt_max`. Steps end exactly on control breakpoints; with the
/// exact minimum law a step that crosses `κ_E E = κ_M M` is split at the
/// crossing.
pub fn integrate(
    x0: ToyState,
    u: &ControlSignal,
    p: &ToyParams,
    t_end: f64,
    dt_max: f64,
) -> Result<Trajectory, OcpError> {
    p.validate()?;
    u.validate()?;
    if !(dt_max > 0.0) || !(t_end > 0.0) {
        return Err(OcpError::InvalidParams("t_end and dt_max must be positive".into()));
    }
    if u.t_end() + 1e-12 * t_end < t_end {
        return Err(OcpError::InvalidControl("control does not cover the horizon".into()));
    }
    if x0.e < 0.0 || x0.m < 0.0 {
        return Err(OcpError::InvalidParams("initial state must be nonnegative".into()));
    }

    let mut traj = Trajectory::default();
    let mut s = x0;
    let mut t = 0.0;
    let mut j = 0.0;
    let push = |traj: &mut Trajectory, t: f64, s: ToyState, alpha: f64, j: f64| {
        traj.times.push(t);
        traj.states.push(s);
        traj.controls.push(alpha);
        traj.mu_values.push(growth_rate(s, p));
        traj.cost_running.push(j);
    };
    push(&mut traj, t, s, u.values[0], j);

    let kink = |x: ToyState| p.kappa_e * x.e - p.kappa_m * x.m;
    for k in 0..u.intervals() {
        let start = u.grid[k];
        if start >= t_end {
            break;
        }
        let end = u.grid[k + 1].min(t_end);
        let alpha = u.values[k];
        let n = ((end - start) / dt_max - 1e-9).ceil().max(1.0) as usize;
        let h = (end - start) / n as f64;
        if let Some(last) = traj.controls.last_mut() {
            *last = alpha;
        }
        for i in 0..n {
            let t_next = if i + 1 == n { end } else { start + (i + 1) as f64 * h };
            let h_step = t_next - t;
            let (mut next, mut dj) = rk4_step(s, alpha, p, h_step);
            if p.smoothing == 0.0 {
                let g0 = kink(s);
                let g1 = kink(next);
                if g0 * g1 < 0.0 {
                    // Bisect on the sub-step length for the crossing.
                    let (mut a, mut b) = (0.0, h_step);
                    for _ in 0..60 {
                        let mid = 0.5 * (a + b);
                        let (x, _) = rk4_step(s, alpha, p, mid);
                        if kink(x) * g0 > 0.0 {
                            a = mid;
                        } else {
                            b = mid;
                        }
                    }
                    let split = b;
                    if split >= 1e-9 * h_step && split < h_step {
                        let (mid_state, dj1) = rk4_step(s, alpha, p, split);
                        let mid_state = guard(mid_state, t + split)?;
                        j += dj1;
                        push(&mut traj, t + split, mid_state, alpha, j);
                        let (rest, dj2) = rk4_step(mid_state, alpha, p, h_step - split);
                        next = rest;
                        dj = dj2;
                    }
                }
            }
            s = guard(next, t_next)?;
            j += dj;
            t = t_next;
            push(&mut traj, t, s, alpha, j);
        }
    }
    Ok(traj)
}

/// A control problem instance: parameters, initial state and horizon.
// Unknown keys are caught by the flattened parameter block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcpInstance {
    #[serde(flatten)]
    pub params: ToyParams,
    pub e0: f64,
    pub m0: f64,
    pub t_end: f64,
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
    #[serde(default)]
    pub dt_max: Option<f64>,
}

fn default_grid_n() -> usize {
    100
}

impl OcpInstance {
    pub fn from_toml(text: &str) -> Result<Self, OcpError> {
        let inst: OcpInstance = toml::from_str(text).map_err(|e| OcpError::Parse(e.to_string()))?;
        inst.params.validate()?;
        if !(inst.t_end > 0.0) || inst.grid_n == 0 || inst.e0 < 0.0 || inst.m0 < 0.0 {
            return Err(OcpError::InvalidParams(
                "t_end and grid_n must be positive, initial state nonnegative".into(),
            ));
        }
        Ok(inst)
    }

    pub fn x0(&self) -> ToyState {
        ToyState::new(self.e0, self.m0)
    }

    /// Step bound: the instance's own, or one well inside the stability
    /// region of the fastest rate.
    pub fn dt(&self) -> f64 {
        self.dt_max.unwrap_or_else(|| {
            let stiff = self.params.stiffness(self.x0()).max(1.0);
            (1e-2 / stiff).min(self.t_end / self.grid_n as f64)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(nu: f64) -> ToyParams {
        ToyParams {
            kappa_e: 1.0,
            kappa_m: 1.0,
            gamma_e: 0.0,
            gamma_m: 0.0,
            flux: FluxMode::Constant { nu_e: nu, nu_m: nu },
            smoothing: 0.0,
        }
    }

    #[test]
    fn growth_rate_examples() {
        let mut p = sym(1.0);
        assert_eq!(growth_rate(ToyState::new(0.0, 0.0), &p), 0.0);
        p.kappa_e = 2.0;
        assert_eq!(growth_rate(ToyState::new(1.0, 3.0), &p), 2.0);
    }

    #[test]
    fn soft_min_within_log_two() {
        let eps = 1e-3;
        let mut p = sym(1.0);
        p.smoothing = eps;
        let q = sym(1.0);
        for i in 0..100 {
            let s = ToyState::new(i as f64 / 99.0, 0.5 + 0.3 * (i as f64 * 0.7).sin());
            let exact = growth_rate(s, &q);
            let soft = growth_rate(s, &p);
            assert!(soft <= exact + 1e-15);
            assert!(exact - soft <= eps * std::f64::consts::LN_2 + 1e-15);
        }
    }

    #[test]
    fn soft_min_gradient_matches_differences() {
        let mut p = sym(1.0);
        p.kappa_e = 1.7;
        p.smoothing = 0.05;
        let s = ToyState::new(0.4, 0.62);
        let (ge, gm) = growth_gradient(s, &p);
        let h = 1e-6;
        let de = (growth_rate(ToyState::new(s.e + h, s.m), &p) - growth_rate(ToyState::new(s.e - h, s.m), &p)) / (2.0 * h);
        let dm = (growth_rate(ToyState::new(s.e, s.m + h), &p) - growth_rate(ToyState::new(s.e, s.m - h), &p)) / (2.0 * h);
        assert!((ge - de).abs() < 1e-8 && (gm - dm).abs() < 1e-8);
    }

    #[test]
    fn rhs_examples() {
        let p = sym(1.0);
        let d = rhs(ToyState::new(0.0, 0.0), 0.3, &p);
        assert!((d.e - 0.3).abs() < 1e-15 && (d.m - 0.7).abs() < 1e-15);
        let d = rhs(ToyState::new(0.4, 0.4), 0.5, &p);
        assert_eq!(d.e, d.m);
        let q = ToyParams {
            flux: FluxMode::MachineProportional { coupling: 2.0 },
            gamma_e: 0.1,
            ..p
        };
        let d = rhs(ToyState::new(0.5, 0.0), 0.4, &q);
        assert!(d.e < 0.0 && d.m == 0.0);
    }

    #[test]
    fn pure_dilution_closed_form() {
        let p = sym(0.0);
        let u = ControlSignal::constant(1.0, 1, 0.5).unwrap();
        let traj = integrate(ToyState::new(1.0, 1.0), &u, &p, 1.0, 1e-3).unwrap();
        let s = traj.terminal();
        assert!((s.e - 0.5).abs() <= 1e-6 && (s.m - 0.5).abs() <= 1e-6);
        assert!((cost(&traj) - std::f64::consts::LN_2).abs() <= 1e-6);
    }

    #[test]
    fn constant_growth_cost() {
        // With E fixed by balance the growth rate stays constant.
        let p = ToyParams {
            kappa_e: 1.0,
            kappa_m: 10.0,
            gamma_e: 0.0,
            gamma_m: 0.0,
            flux: FluxMode::Constant { nu_e: 0.25, nu_m: 10.0 },
            smoothing: 0.0,
        };
        // e = 0.5 gives μ = 0.5 and αν_E = 0.25 = μ e with α = 1.
        let u = ControlSignal::constant(3.0, 3, 1.0).unwrap();
        let traj = integrate(ToyState::new(0.5, 1.0), &u, &p, 3.0, 1e-2).unwrap();
        assert!((cost(&traj) - 1.5).abs() < 1e-9);
    }

    #[test]
    fn full_enzyme_allocation_shrinks_machinery() {
        let mut p = sym(1.0);
        p.gamma_m = 0.2;
        let u = ControlSignal::constant(4.0, 4, 1.0).unwrap();
        let traj = integrate(ToyState::new(0.1, 1.0), &u, &p, 4.0, 1e-2).unwrap();
        assert!(traj.states.windows(2).all(|w| w[1].m <= w[0].m));
    }

    #[test]
    fn event_split_lands_on_balance() {
        let p = sym(1.0);
        let u = ControlSignal::constant(2.0, 1, 1.0).unwrap();
        let traj = integrate(ToyState::new(0.1, 1.0), &u, &p, 2.0, 0.05).unwrap();
        let on_kink = traj.states.iter().any(|s| (s.e - s.m).abs() < 1e-9);
        assert!(on_kink);
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn negativity_guard_fires_on_huge_steps() {
        // One RK4 step of length 3 on dx/dt = -x^2 from 1 overshoots zero.
        let p = sym(0.0);
        let u = ControlSignal::constant(3.0, 1, 0.5).unwrap();
        let err = integrate(ToyState::new(1.0, 1.0), &u, &p, 3.0, 3.0).unwrap_err();
        assert!(matches!(err, OcpError::NegativeState { .. }));
    }

    #[test]
    fn csv_header_and_rows() {
        let p = sym(1.0);
        let u = ControlSignal::constant(1.0, 2, 0.5).unwrap();
        let traj = integrate(ToyState::new(0.2, 0.2), &u, &p, 1.0, 0.25).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("t,E,M,alpha,mu,J_cum"));
        assert_eq!(text.lines().count(), traj.len() + 1);
    }

    #[test]
    fn control_csv_round_trip() {
        let u = ControlSignal::from_csv("t,alpha\n0,0.2\n1.5,0.9\n3,0\n").unwrap();
        assert_eq!(u.grid, vec![0.0, 1.5, 3.0]);
        assert_eq!(u.values, vec![0.2, 0.9]);
        assert_eq!(u.value_at(1.5), 0.9);
        assert_eq!(u.value_at(3.0), 0.9);
        assert!(ControlSignal::from_csv("t,alpha\n0,2\n1,0\n").is_err());
        assert!(ControlSignal::from_csv("0,x\n").is_err());
    }

    #[test]
    fn instance_parses() {
        let text = r#"
kappa_e = 1.0
kappa_m = 2.0
e0 = 0.1
m0 = 0.2
t_end = 5.0
flux = { mode = "machine-proportional", coupling = 3.0 }
"#;
        let inst = OcpInstance::from_toml(text).unwrap();
        assert_eq!(inst.params.flux, FluxMode::MachineProportional { coupling: 3.0 });
        assert_eq!(inst.grid_n, 100);
        assert!(OcpInstance::from_toml("kappa_e = -1.0").is_err());
    }
}
