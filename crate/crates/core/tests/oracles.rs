mod common;

use common::{rel, richards, simpson};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rotation_core::accounting::{break_even_rotation, report_at};
use rotation_core::optimizer::{
    feasibility_threshold, optimize_rotation, sensitivity_sweep, Objective, RotationSearch, ThinningSearch,
};
use rotation_core::{ManagementPlan, PriceProcess, VolumeTrajectory};

/// Return rate of an unthinned rotation computed from scratch with Simpson
/// quadrature of the yield curve.
fn reference_return(a: f64, m: f64, c: f64, price: f64, est: f64, land: f64, tau: f64) -> f64 {
    let volume = simpson(&|t| richards(a, m, c, t), 0.0, tau, 1e-12);
    let profit = price * richards(a, m, c, tau) - est;
    profit / (land * tau + price * volume)
}

#[test]
fn refined_optimum_agrees_with_a_dense_scan() {
    for (p, e) in [common::high(), common::low()] {
        for objective in [Objective::ReturnRate, Objective::ProfitRate] {
            let result = optimize_rotation(&p, &e, objective, &RotationSearch::default()).unwrap();
            let traj = VolumeTrajectory::build(&p, &ManagementPlan::unthinned(300.0).unwrap(), 0.1).unwrap();
            let tau0 = result.best_plan.rotation;
            // 0.001-year scan over two coarse steps around the reported optimum.
            let (mut best_tau, mut best) = (f64::NAN, f64::NEG_INFINITY);
            let start = (tau0 - 2.0).max(0.001);
            let n = ((tau0 + 2.0).min(300.0) - start) / 0.001;
            for k in 0..=n as usize {
                let tau = start + 0.001 * k as f64;
                let v = objective.of(&report_at(&traj, &e, tau).unwrap());
                if v > best {
                    best = v;
                    best_tau = tau;
                }
            }
            assert!((best_tau - tau0).abs() <= 0.01, "{objective:?}: {tau0} vs scan {best_tau}");
        }
    }
}

#[test]
fn report_matches_an_independent_evaluation() {
    let (p, e) = common::high();
    let traj = VolumeTrajectory::build(&p, &ManagementPlan::unthinned(300.0).unwrap(), 0.1).unwrap();
    for tau in [3.0, 7.5, 15.5, 40.0, 71.0, 150.0, 299.0] {
        let lib = report_at(&traj, &e, tau).unwrap().expected_return_rate;
        let oracle = reference_return(100.0, 0.027, 3.0, 500.0, 250.0, 250.0, tau);
        assert!(rel(lib, oracle) < 1e-9, "tau {tau}: {lib} vs {oracle}");
    }
}

#[test]
fn break_even_matches_a_fine_scan() {
    for (p, e) in [common::high(), common::low()] {
        let tau = break_even_rotation(&p, &e).unwrap();
        let first = (1..100_000)
            .map(|k| k as f64 * 0.001)
            .find(|&t| e.stumpage_price * richards(p.asymptote, p.rate, p.shape, t) >= e.establishment_cost)
            .unwrap();
        assert!((tau - first).abs() <= 0.001, "{tau} vs {first}");
    }
}

#[test]
fn price_level_matches_its_defining_integral() {
    for rho in [0.5, 0.9, 1.02, 1.1] {
        let process = PriceProcess::new(2.5, rho, 0.8, 3.0).unwrap();
        for t in [3.0, 3.5, 10.0, 40.0, 120.0] {
            let growth = simpson(&|q| 0.8 * rho.powf(0.8 * (q - 3.0)), 3.0, t, 1e-14);
            let reference = 2.5 * (1.0 + growth);
            assert!(rel(process.price_level(t).unwrap(), reference) < 1e-9, "rho {rho} t {t}");
        }
    }
}

#[test]
fn sampled_window_average_reproduces_the_expected_price() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for (rho, b, tau) in [(0.9, 2.0, 16.0), (1.02, 10.0, 24.0), (1.1, 0.0, 40.0)] {
        let process = PriceProcess::new(1.0, rho, 1.0, 0.0).unwrap();
        let n = 1_000_000;
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..n {
            let u = process.price_level(b + tau * rng.gen::<f64>()).unwrap();
            sum += u;
            sq += u * u;
        }
        let mean = sum / n as f64;
        let se = ((sq / n as f64 - mean * mean) / n as f64).sqrt();
        let closed = process.expected_price(b, tau).unwrap();
        assert!((mean - closed).abs() <= 3.0 * se, "rho {rho}: {mean} ± {se} vs {closed}");
    }
}

#[test]
fn recursion_and_continuous_form_differ() {
    // The discrete recursion compounds; the continuous form integrates.
    // They agree at the origin and drift apart afterwards.
    let process = PriceProcess::new(1.0, 1.05, 1.0, 0.0).unwrap();
    let path = rotation_core::prices::ar1_path(1.0, 1.05, 1.0, 10);
    assert_eq!(path[0], process.price_level(0.0).unwrap());
    assert!(rel(path[10], process.price_level(10.0).unwrap()) > 0.01);
}

#[test]
fn sweep_pattern_on_both_classes() {
    let m = [0.5, 1.0, 2.0];
    for (p, e) in [common::high(), common::low()] {
        let search = RotationSearch::default();
        let table = sensitivity_sweep(&p, &e, &m, &m, &search).unwrap();
        assert_eq!(table.rows.len(), 9);
        assert!(table.is_monotone(0.0));
        let base = table.cell(1, 1).optimal_rotation;
        assert!(table.cell(2, 1).optimal_rotation < base);
        for k in 0..3 {
            assert!((table.cell(k, k).optimal_rotation - base).abs() <= search.resolution);
        }
    }
}

#[test]
fn feasibility_threshold_is_small_but_positive() {
    // Near the return-rate optimum relative growth roughly equals the return
    // rate, so a thinning just before clearcut needs only a small boost.
    let (p, e) = common::high();
    let search = ThinningSearch {
        max_thinning_age: 30,
        ..ThinningSearch::default()
    };
    let threshold = feasibility_threshold(&p, &e, &search, 1, 0.9, 1e-3).unwrap().unwrap();
    assert!(threshold > 0.0 && threshold < 0.1, "threshold {threshold}");
}
