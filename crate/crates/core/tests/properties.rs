mod common;

use nalgebra::DVector;
use proptest::prelude::*;

use rba_core::assembly::{assemble_prokaryotic, column_ranges};
use rba_core::growth::{mu_max, GrowthSearchOptions};
use rba_core::lp::{check_point, solve, SolveStatus};
use rba_core::model::{compile, expand_duplications};
use rba_core::ocp::{cost, integrate, trapezoid_cost, ControlSignal, FluxMode, ToyParams, ToyState};
use rba_core::pmp::{hamiltonian, switching, AdjointState, ETA0_NORMAL};
use rba_core::random::{random_lp, random_model, RandomModelOptions};

fn toy(kappa: (f64, f64), gamma: (f64, f64), nu: (f64, f64)) -> ToyParams {
    ToyParams {
        kappa_e: kappa.0,
        kappa_m: kappa.1,
        gamma_e: gamma.0,
        gamma_m: gamma.1,
        flux: FluxMode::Constant { nu_e: nu.0, nu_m: nu.1 },
        smoothing: 1e-2,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lp_status_survives_row_scaling(seed in 0u64..10_000, n in 1usize..6, m in 1usize..6, scale in 0.01f64..100.0) {
        let lp = random_lp(seed, n, m);
        let mut scaled = lp.clone();
        let row = (seed as usize) % scaled.a_ineq.nrows().max(1);
        if scaled.a_ineq.nrows() > 0 {
            scaled.a_ineq.row_mut(row).scale_mut(scale);
            scaled.b_ineq[row] *= scale;
        }
        prop_assert_eq!(solve(&lp).unwrap().status, solve(&scaled).unwrap().status);
    }

    #[test]
    fn lp_solve_is_deterministic(seed in 0u64..10_000, n in 1usize..6, m in 0usize..6) {
        let lp = random_lp(seed, n, m);
        // Infeasible results carry NaN residuals, so compare renderings.
        prop_assert_eq!(format!("{:?}", solve(&lp).unwrap()), format!("{:?}", solve(&lp).unwrap()));
    }

    #[test]
    fn lp_status_matches_enumeration(seed in 0u64..10_000, n in 1usize..5, m in 0usize..5) {
        let lp = random_lp(seed, n, m);
        prop_assert_eq!(solve(&lp).unwrap().status, common::vertex_status(&lp));
    }

    #[test]
    fn feasible_witness_passes_check(seed in 0u64..10_000, n in 1usize..6, m in 0usize..6) {
        let lp = random_lp(seed, n, m);
        let r = solve(&lp).unwrap();
        if r.status == SolveStatus::Feasible {
            prop_assert!(check_point(&lp, &r.witness.unwrap(), 1e-9).unwrap().pass);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn expansion_is_idempotent(seed in 0u64..10_000, eukaryote in any::<bool>()) {
        let spec = random_model(seed, &RandomModelOptions { eukaryote, ..Default::default() });
        let once = expand_duplications(&spec);
        prop_assert_eq!(expand_duplications(&once), once);
    }

    #[test]
    fn feasibility_is_downward_closed(seed in 0u64..10_000, frac in 0.0f64..1.0) {
        let model = compile(&expand_duplications(&random_model(seed, &RandomModelOptions::default()))).unwrap();
        let r = mu_max(|mu| assemble_prokaryotic(&model, mu), &GrowthSearchOptions::default()).unwrap();
        let mu = frac * r.bracket.0;
        let lp = assemble_prokaryotic(&model, mu);
        prop_assert!(solve(&lp).unwrap().is_feasible());
        // Scaling fluxes with the growth rate keeps the composition witness.
        let mut w = r.witness.unwrap();
        let [_, nu, _] = column_ranges(&model, None);
        for j in nu {
            w[j] *= frac;
        }
        prop_assert!(check_point(&lp, &w, 1e-9).unwrap().pass);
    }

    #[test]
    fn lp_midpoints_stay_feasible(seed in 0u64..10_000, n in 1usize..6, m in 0usize..6, w in prop::collection::vec(-1.0f64..1.0, 6)) {
        let lp = random_lp(seed, n, m);
        let r = solve(&lp).unwrap();
        if !r.is_feasible() {
            return Ok(());
        }
        let a = r.witness.unwrap();
        let mut other = lp.clone();
        other.objective = DVector::from_fn(n, |i, _| w[i]);
        let radius = 10.0 * (1.0 + a.amax());
        other.lower = other.lower.map(|l| l.max(-radius));
        other.upper = other.upper.map(|u| u.min(radius));
        let b = solve(&other).unwrap().witness.unwrap();
        prop_assert!(check_point(&lp, &(0.5 * (&a + &b)), 1e-9).unwrap().pass);
    }

    #[test]
    fn states_stay_nonnegative(
        values in prop::collection::vec(0.0f64..=1.0, 1..20),
        e0 in 0.0f64..2.0,
        m0 in 0.0f64..2.0,
        kappa in (0.2f64..3.0, 0.2f64..3.0),
        gamma in (0.0f64..0.5, 0.0f64..0.5),
    ) {
        let p = toy(kappa, gamma, (1.0, 1.0));
        let u = ControlSignal::uniform(5.0, values).unwrap();
        let tr = integrate(ToyState::new(e0, m0), &u, &p, 5.0, 1e-2).unwrap();
        prop_assert!(tr.states.iter().all(|s| s.e >= 0.0 && s.m >= 0.0));
        prop_assert!(tr.cost_running.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn swapping_pools_mirrors_the_dynamics(
        values in prop::collection::vec(0.0f64..=1.0, 1..10),
        e0 in 0.05f64..2.0,
        m0 in 0.05f64..2.0,
        kappa in (0.2f64..3.0, 0.2f64..3.0),
        gamma in (0.0f64..0.5, 0.0f64..0.5),
        nu in (0.2f64..2.0, 0.2f64..2.0),
    ) {
        let p = toy(kappa, gamma, nu);
        let q = toy((kappa.1, kappa.0), (gamma.1, gamma.0), (nu.1, nu.0));
        let flipped: Vec<f64> = values.iter().map(|a| 1.0 - a).collect();
        let a = integrate(ToyState::new(e0, m0), &ControlSignal::uniform(3.0, values).unwrap(), &p, 3.0, 1e-2).unwrap();
        let b = integrate(ToyState::new(m0, e0), &ControlSignal::uniform(3.0, flipped).unwrap(), &q, 3.0, 1e-2).unwrap();
        let (x, y) = (a.terminal(), b.terminal());
        prop_assert!((x.e - y.m).abs() <= 1e-9 * (1.0 + x.e.abs()));
        prop_assert!((x.m - y.e).abs() <= 1e-9 * (1.0 + x.m.abs()));
        prop_assert!((cost(&a) - cost(&b)).abs() <= 1e-9 * (1.0 + cost(&a).abs()));
    }

    #[test]
    fn hamiltonian_is_affine_in_control(
        e in 0.0f64..2.0,
        m in 0.0f64..2.0,
        eta in (-3.0f64..3.0, -3.0f64..3.0),
        alpha in 0.0f64..=1.0,
    ) {
        let p = toy((1.3, 0.7), (0.1, 0.2), (1.0, 1.5));
        let s = ToyState::new(e, m);
        let a = AdjointState::new(eta.0, eta.1, ETA0_NORMAL);
        let h0 = hamiltonian(s, a, 0.0, &p);
        let h = hamiltonian(s, a, alpha, &p);
        prop_assert!((h - (h0 + alpha * switching(s, a, &p))).abs() <= 1e-12 * (1.0 + h.abs()));
    }

    #[test]
    fn payoff_quadratures_agree(values in prop::collection::vec(0.0f64..=1.0, 1..10)) {
        let p = toy((1.0, 1.0), (0.1, 0.1), (1.0, 1.0));
        let tr = integrate(ToyState::new(0.3, 0.4), &ControlSignal::uniform(2.0, values).unwrap(), &p, 2.0, 1e-3).unwrap();
        prop_assert!((cost(&tr) - trapezoid_cost(&tr)).abs() <= 1e-5);
    }
}
