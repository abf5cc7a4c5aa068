mod common;

use lienard_core::expr::Expr;
use lienard_core::fracsolve::{
    caputo_l1, check_caputo_lemma, mittag_leffler, solve_caputo_system, FracOrder, SampledPath,
};
use lienard_core::lienard::{self, Family, ScenarioSpec};
use lienard_core::ode::field_fn;
use proptest::prelude::*;
use statrs::function::gamma::gamma;

fn order(a: f64) -> FracOrder {
    FracOrder::new(a).unwrap()
}

/// Caputo derivative of `t^p` at `t`.
fn caputo_power(p: f64, alpha: f64, t: f64) -> f64 {
    gamma(p + 1.0) / gamma(p + 1.0 - alpha) * t.powf(p - alpha)
}

fn l1_max_error(p: f64, alpha: f64, h: f64) -> f64 {
    let n = (1.0 / h).round() as usize;
    let path = SampledPath::sample(|t| t.powf(p), 0.0, h, n + 1);
    let d = caputo_l1(&path, order(alpha)).unwrap();
    (1..d.len())
        .map(|i| (d.values[i] - caputo_power(p, alpha, d.time(i))).abs())
        .fold(0.0, f64::max)
}

#[test]
fn l1_matches_gamma_formula_and_converges_at_two_minus_alpha() {
    let hs = [1e-2, 5e-3, 2.5e-3, 1.25e-3];
    for alpha in [0.3, 0.5, 0.7] {
        for p in [1.0, 2.0] {
            assert!(l1_max_error(p, alpha, 1e-3) <= 1e-3, "p = {p}, α = {alpha}");
        }
        for p in [2.0, 3.0] {
            let errs: Vec<f64> = hs.iter().map(|&h| l1_max_error(p, alpha, h)).collect();
            let rate = common::fitted_order(&hs, &errs);
            assert!((rate - (2.0 - alpha)).abs() <= 0.25, "p = {p}, α = {alpha}: rate {rate}");
        }
    }
}

#[test]
fn mittag_leffler_half_order_matches_erfc_form() {
    // E_{1/2}(-x) = exp(x²) erfc(x).
    for x in [0.0, 0.1, 0.5, 1.0, 2.0, 3.0, 5.0] {
        let ours = mittag_leffler(0.5, -x).unwrap();
        let oracle = (x * x).exp() * libm::erfc(x);
        assert!((ours - oracle).abs() <= 1e-10 * oracle.max(1e-300), "x = {x}: {ours} vs {oracle}");
    }
}

#[test]
fn mittag_leffler_series_oracle_for_small_arguments() {
    for alpha in [0.3, 0.7, 0.9] {
        for z in [-1.5f64, -0.5, 0.3, 1.0] {
            let oracle: f64 = (0..120).map(|k| z.powi(k) / gamma(alpha * k as f64 + 1.0)).sum();
            let ours = mittag_leffler(alpha, z).unwrap();
            assert!((ours - oracle).abs() <= 1e-12 * oracle.abs().max(1.0), "α = {alpha}, z = {z}");
        }
    }
}

#[test]
fn linear_relaxation_follows_mittag_leffler() {
    let field = field_fn(|_, s: [f64; 2]| [-s[0], 0.0]);
    for alpha in [0.3, 0.5, 0.7, 0.9] {
        let traj = solve_caputo_system(&field, order(alpha), [1.0, 0.0], 0.0, 5.0, 1e-3, 1e6).unwrap();
        let worst = traj
            .samples
            .iter()
            .map(|s| {
                let exact = mittag_leffler(alpha, -s.t.powf(alpha)).unwrap();
                ((s.x - exact) / exact).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst <= 2e-3, "α = {alpha}: {worst}");
    }
}

#[test]
fn near_unit_order_matches_classical_rk4() {
    let spec = ScenarioSpec::new(Family::Fractional)
        .with("f", "0")
        .with("g", "x")
        .alpha(0.999)
        .span(0.0, 10.0)
        .step(1e-3);
    let traj = lienard::simulate(&spec).unwrap();
    let oracle = common::rk4(|_, s| [s[1], -s[0]], [1.0, 0.0], 0.0, 10.0, 10_000);
    let worst = traj
        .samples
        .iter()
        .zip(&oracle)
        .map(|(s, (t, o))| {
            assert!((s.t - t).abs() < 1e-9);
            (s.x - o[0]).hypot(s.y - o[1])
        })
        .fold(0.0, f64::max);
    assert!(worst <= 5e-2, "{worst}");
}

fn monotone_f() -> impl Strategy<Value = String> {
    prop_oneof![
        (1.5f64..3.0, 0.1f64..1.0).prop_map(|(c, b)| format!("{c:?} + {b:?}*x/sqrt(1 + x^2)")),
        (1.5f64..3.0, 0.1f64..1.0).prop_map(|(c, b)| format!("{c:?} + {b:?}*(1 - exp(-x))/(1 + exp(-x))")),
        (3.0f64..5.0, 0.1f64..0.5).prop_map(|(c, b)| format!("{c:?} + {b:?}*x")),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    /// Along solutions of the Caputo Liénard system the Lemma inequality
    /// holds when `F` is convex on the visited range.
    #[test]
    fn lemma_holds_along_solutions(
        f in monotone_f(),
        alpha in 0.2f64..0.95,
        x0 in -1.0f64..1.0,
        y0 in -1.0f64..1.0,
    ) {
        let spec = ScenarioSpec::new(Family::Fractional)
            .with("f", &f)
            .with("g", "x")
            .alpha(alpha)
            .initial(x0, y0)
            .span(0.0, 5.0)
            .step(1e-2);
        let traj = lienard::simulate(&spec).unwrap();
        let check = check_caputo_lemma(&traj, &Expr::parse(&f).unwrap(), order(alpha)).unwrap();
        prop_assert!(check.max_violation <= 1e-9, "{f}: {check:?}");
    }
}
