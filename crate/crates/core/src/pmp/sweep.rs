use std::io::{self, Write};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{evaluate, hamiltonian, switching, AdjointState, Evaluation};
use crate::ocp::{ControlSignal, OcpError, ToyParams, ToyState, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub grid_n: usize,
    /// Weight of the bang target in each relaxed update.
    pub relax: f64,
    /// Sup-norm of the final control update required for convergence.
    pub tol: f64,
    pub max_iter: usize,
    /// Newton refinement steps after the relaxed sweep.
    pub newton_iter: usize,
    /// Integration step bound; defaults to a value tied to the rate scale.
    pub dt_max: Option<f64>,
    pub initial_alpha: f64,
    /// Switches per unit time above which bang targets are averaged.
    pub chattering_cap: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            grid_n: 100,
            relax: 0.5,
            tol: 1e-8,
            max_iter: 200,
            newton_iter: 40,
            dt_max: None,
            initial_alpha: 0.5,
            chattering_cap: 64.0,
        }
    }
}

/// Relative width of the band `|H₁| ≤ band · max |H₁|` treated as singular.
pub const SINGULAR_BAND: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub control: ControlSignal,
    pub trajectory: Trajectory,
    /// Costates at the trajectory samples.
    pub adjoints: Vec<AdjointState>,
    /// `H₁` at the trajectory samples.
    pub switching: Vec<f64>,
    /// `H` at the trajectory samples, using the control of the step that
    /// starts there.
    pub hamiltonian: Vec<f64>,
    /// Interval averages of `H₁`.
    pub switching_avg: Vec<f64>,
    /// Interval averages of `H₀`.
    pub drift_avg: Vec<f64>,
    pub cost: f64,
    pub cost_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub last_update: f64,
    /// Fraction of control intervals with `|H₁|` inside the singular band.
    pub singular_fraction: f64,
    /// Intervals whose bang targets were averaged because of chattering.
    pub chattering_averaged: bool,
}

impl SweepResult {
    /// Largest shortfall of the interval-averaged Hamiltonian below its
    /// maximum over `α ∈ {0, 1}`, in units of `1 + |H|`.
    pub fn max_condition_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, &alpha) in self.control.values.iter().enumerate() {
            let h0 = self.drift_avg[k];
            let h1 = self.switching_avg[k];
            let h = h0 + alpha * h1;
            let best = h0.max(h0 + h1);
            worst = worst.max((best - h) / (1.0 + h.abs()));
        }
        worst
    }

    /// `max H − min H` along the samples.
    pub fn hamiltonian_spread(&self) -> f64 {
        let (lo, hi) = self
            .hamiltonian
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), h| (lo.min(*h), hi.max(*h)));
        hi - lo
    }

    /// Fraction of intervals whose control is not within `eps` of 0 or 1.
    pub fn interior_fraction(&self, eps: f64) -> f64 {
        let n = self.control.values.iter().filter(|a| **a > eps && **a < 1.0 - eps).count();
        n as f64 / self.control.intervals() as f64
    }

    /// CSV with header `t,E,M,eta_E,eta_M,alpha,H,H1`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,E,M,eta_E,eta_M,alpha,H,H1")?;
        let tr = &self.trajectory;
        for i in 0..tr.len() {
            let s = tr.states[i];
            let a = self.adjoints[i];
            writeln!(
                w,
                "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
                tr.times[i], s.e, s.m, a.eta_e, a.eta_m, tr.controls[i], self.hamiltonian[i], self.switching[i]
            )?;
        }
        Ok(())
    }
}

fn singular_band(h1: &[f64]) -> f64 {
    SINGULAR_BAND * h1.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

fn bang_targets(alpha: &[f64], h1: &[f64]) -> Vec<f64> {
    let band = singular_band(h1);
    alpha
        .iter()
        .zip(h1)
        .map(|(&a, &s)| {
            if s > band {
                1.0
            } else if s < -band {
                0.0
            } else {
                a
            }
        })
        .collect()
}

fn count_switches(target: &[f64]) -> usize {
    let mut last = None;
    let mut n = 0;
    for &v in target {
        if v == 0.0 || v == 1.0 {
            if last.is_some_and(|l| l != v) {
                n += 1;
            }
            last = Some(v);
        }
    }
    n
}

fn box_filter(values: &[f64], half: usize) -> Vec<f64> {
    (0..values.len())
        .map(|k| {
            let lo = k.saturating_sub(half);
            let hi = (k + half + 1).min(values.len());
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

struct Problem<'a> {
    x0: ToyState,
    p: &'a ToyParams,
    t_end: f64,
    dt: f64,
}

impl Problem<'_> {
    fn eval(&self, alpha: &[f64]) -> Result<Evaluation, OcpError> {
        let u = ControlSignal::uniform(self.t_end, alpha.to_vec())?;
        evaluate(self.x0, &u, self.p, self.dt)
    }

    /// Like `eval`, but a trial control that drives the integrator out of
    /// the nonnegative orthant is reported as `None` so the caller can
    /// shorten its step.
    fn try_eval(&self, alpha: &[f64]) -> Result<Option<Evaluation>, OcpError> {
        match self.eval(alpha) {
            Ok(ev) => Ok(Some(ev)),
            Err(OcpError::NegativeState { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Forward-difference Hessian of `J` restricted to `free`, built from
    /// adjoint gradients.
    fn hessian(&self, alpha: &[f64], free: &[usize], base: &[f64]) -> Result<DMatrix<f64>, OcpError> {
        let step = 1e-5;
        let columns: Vec<Result<Vec<f64>, OcpError>> = std::thread::scope(|scope| {
            let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).max(1);
            let chunk = free.len().div_ceil(workers).max(1);
            let handles: Vec<_> = free
                .chunks(chunk)
                .map(|part| {
                    scope.spawn(move || {
                        part.iter()
                            .map(|&j| {
                                // Step into the box; controls are validated to [0, 1].
                                let h = if alpha[j] + step <= 1.0 { step } else { -step };
                                let mut a = alpha.to_vec();
                                a[j] += h;
                                let g = self.eval(&a)?.gradient;
                                Ok(free.iter().map(|&i| (g[i] - base[i]) / h).collect())
                            })
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("hessian worker panicked"))
                .collect()
        });
        let n = free.len();
        let mut hess = DMatrix::zeros(n, n);
        for (c, col) in columns.into_iter().enumerate() {
            let col = col?;
            for r in 0..n {
                hess[(r, c)] = col[r];
            }
        }
        Ok(0.5 * (&hess + hess.transpose()))
    }
}

/// Forward–backward sweep for the allocation maximising `∫ μ dt`.
///
/// A relaxed bang update `α ← (1 − r) α + r · 1{H₁ > 0}` (with `r` halved
/// whenever the payoff drops) settles the switching structure; projected
/// Newton steps on the interval values then resolve singular stretches,
/// where `H₁` vanishes and the sign rule alone gives no value.
pub fn sweep(x0: ToyState, p: &ToyParams, t_end: f64, opts: &SweepOptions) -> Result<SweepResult, OcpError> {
    p.validate()?;
    if p.smoothing <= 0.0 {
        return Err(OcpError::InvalidParams("the sweep needs a positive smoothing".into()));
    }
    if !(opts.relax > 0.0 && opts.relax <= 1.0) || opts.grid_n == 0 || !(t_end > 0.0) {
        return Err(OcpError::InvalidParams("need 0 < relax <= 1, grid_n > 0 and t_end > 0".into()));
    }
    let dt = opts.dt_max.unwrap_or_else(|| {
        let stiff = p.stiffness(x0).max(1.0);
        (1e-2 / stiff).min(t_end / opts.grid_n as f64)
    });
    let prob = Problem { x0, p, t_end, dt };

    let mut alpha = vec![opts.initial_alpha.clamp(0.0, 1.0); opts.grid_n];
    let mut ev = prob.eval(&alpha)?;
    let mut history = vec![ev.cost];
    let mut iterations = 0;
    let mut r = opts.relax;
    let mut last_update = f64::INFINITY;
    let mut chattering_averaged = false;
    let slack = |j: f64| 1e-13 * (1.0 + j.abs());

    // Once the relaxed update needs tiny steps, singular stretches are left
    // to the Newton phase.
    let r_floor = if opts.newton_iter > 0 { opts.relax / 64.0 } else { 1e-12 };
    while iterations < opts.max_iter {
        let mut target = bang_targets(&alpha, &ev.h1_average());
        if count_switches(&target) as f64 / t_end > opts.chattering_cap {
            target = box_filter(&target, 2);
            chattering_averaged = true;
        }
        let mut accepted = false;
        while r > r_floor {
            iterations += 1;
            let cand: Vec<f64> = alpha.iter().zip(&target).map(|(a, t)| (1.0 - r) * a + r * t).collect();
            let Some(cand_ev) = prob.try_eval(&cand)? else {
                r *= 0.5;
                continue;
            };
            if cand_ev.cost >= ev.cost - slack(ev.cost) {
                last_update = alpha.iter().zip(&cand).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
                alpha = cand;
                ev = cand_ev;
                history.push(ev.cost);
                accepted = true;
                break;
            }
            r *= 0.5;
        }
        if !accepted || last_update <= opts.tol {
            break;
        }
    }

    // Projected Newton refinement.
    let mut converged = false;
    for _ in 0..opts.newton_iter {
        let g = ev.gradient.clone();
        let g_scale = g.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
        let at_bound = |k: usize| {
            (alpha[k] <= 0.0 && g[k] < 0.0) || (alpha[k] >= 1.0 && g[k] > 0.0)
        };
        let free: Vec<usize> = (0..alpha.len()).filter(|&k| !at_bound(k)).collect();
        let kkt = free.iter().all(|&k| g[k].abs() <= SINGULAR_BAND * 1e-2 * g_scale);
        if kkt && last_update <= opts.tol {
            converged = true;
            break;
        }

        let mut direction = vec![0.0; alpha.len()];
        if !free.is_empty() {
            let hess = prob.hessian(&alpha, &free, &g)?;
            let eig = SymmetricEigen::new(hess);
            let lam_max = eig.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let floor = (1e-10 * lam_max).max(1e-300);
            let gf = DVector::from_iterator(free.len(), free.iter().map(|&k| g[k]));
            let coeffs = eig.eigenvectors.transpose() * &gf;
            let scaled = DVector::from_iterator(
                coeffs.len(),
                coeffs.iter().zip(eig.eigenvalues.iter()).map(|(c, l)| c / l.abs().max(floor)),
            );
            let d = &eig.eigenvectors * scaled;
            for (i, &k) in free.iter().enumerate() {
                direction[k] = d[i];
            }
        }

        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-10 {
            iterations += 1;
            let cand: Vec<f64> = alpha
                .iter()
                .zip(&direction)
                .enumerate()
                .map(|(k, (a, d))| if at_bound(k) { *a } else { (a + t * d).clamp(0.0, 1.0) })
                .collect();
            let Some(cand_ev) = prob.try_eval(&cand)? else {
                t *= 0.5;
                continue;
            };
            if cand_ev.cost >= ev.cost - slack(ev.cost) {
                last_update = alpha.iter().zip(&cand).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
                alpha = cand;
                ev = cand_ev;
                history.push(ev.cost);
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            last_update = 0.0;
        }
    }
    if !converged {
        let g = &ev.gradient;
        let g_scale = g.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
        let kkt = (0..alpha.len()).all(|k| {
            let bound = (alpha[k] <= 0.0 && g[k] < 0.0) || (alpha[k] >= 1.0 && g[k] > 0.0);
            bound || g[k].abs() <= SINGULAR_BAND * 1e-2 * g_scale
        });
        converged = kkt && last_update <= opts.tol;
    }

    let control = ControlSignal::uniform(t_end, alpha)?;
    let h1_avg = ev.h1_average();
    let band = singular_band(&h1_avg);
    let singular = h1_avg.iter().filter(|v| v.abs() <= band).count();
    let drift_avg: Vec<f64> = ev.h0_integral.iter().zip(&ev.interval_lengths).map(|(h, l)| h / l).collect();
    let tr = &ev.trajectory;
    let switching_samples: Vec<f64> = (0..tr.len()).map(|i| switching(tr.states[i], ev.adjoints[i], p)).collect();
    let hamiltonian_samples: Vec<f64> = (0..tr.len())
        .map(|i| hamiltonian(tr.states[i], ev.adjoints[i], tr.controls[i], p))
        .collect();

    Ok(SweepResult {
        singular_fraction: singular as f64 / control.intervals() as f64,
        control,
        switching: switching_samples,
        hamiltonian: hamiltonian_samples,
        switching_avg: h1_avg,
        drift_avg,
        cost: ev.cost,
        cost_history: history,
        iterations,
        converged,
        last_update,
        chattering_averaged,
        trajectory: ev.trajectory,
        adjoints: ev.adjoints,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ocp::FluxMode;

    #[test]
    fn switch_counting_and_filter() {
        assert_eq!(count_switches(&[0.0, 1.0, 0.5, 1.0, 0.0]), 2);
        let f = box_filter(&[0.0, 1.0, 0.0, 1.0], 1);
        assert!((f[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn targets_follow_switching_sign() {
        let t = bang_targets(&[0.3, 0.3, 0.3], &[1.0, -1.0, 1e-9]);
        assert_eq!(t, vec![1.0, 0.0, 0.3]);
    }

    #[test]
    fn rejects_invalid_options() {
        let p = ToyParams {
            kappa_e: 1.0,
            kappa_m: 1.0,
            gamma_e: 0.0,
            gamma_m: 0.0,
            flux: FluxMode::Constant { nu_e: 1.0, nu_m: 1.0 },
            smoothing: 0.0,
        };
        assert!(sweep(ToyState::new(0.1, 0.1), &p, 1.0, &SweepOptions::default()).is_err());
        let p = ToyParams { smoothing: 0.01, ..p };
        let opts = SweepOptions {
            relax: 0.0,
            ..SweepOptions::default()
        };
        assert!(sweep(ToyState::new(0.1, 0.1), &p, 1.0, &opts).is_err());
    }
}
