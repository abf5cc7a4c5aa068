mod common;

use lienard_core::analyzers::{
    assess, AnalysisOptions, detect_boundedness, detect_oscillation, find_limit_cycle, probe_continuability,
    probe_stability, square_grid, Boundedness, CycleOptions, CycleVerdict, OscillationVerdict,
    StabilityVerdict, DEFAULT_MIN_ZEROS, DEFAULT_RADII,
};
use lienard_core::kernel::{Kernel, KernelKind};
use lienard_core::lienard::{self, Conclusion, Family, ScenarioSpec, Theorem};
use proptest::prelude::*;

fn nc(a: &str, g: &str) -> ScenarioSpec {
    ScenarioSpec::new(Family::Nonconformable)
        .with("f", "0")
        .with("g", g)
        .with("a", a)
        .kernel(Kernel::new(KernelKind::NcExpInv))
        .alpha(0.5)
        .span(1.0, 200.0)
}

fn vdp(t_end: f64) -> ScenarioSpec {
    ScenarioSpec::new(Family::Classical)
        .with("f", "x^2 - 1")
        .with("g", "x")
        .span(0.0, t_end)
}

fn tightened(spec: &ScenarioSpec) -> ScenarioSpec {
    let t = spec.tolerances;
    spec.clone().tolerances(t.rel / 10.0, t.abs / 10.0)
}

#[test]
fn oscillation_verdicts_survive_tighter_tolerances() {
    let osc = nc("1", "x");
    let contrast = nc("(1 + t)^(-3)", "x");
    for (spec, expect_osc) in [(osc, true), (contrast, false)] {
        for s in [spec.clone(), tightened(&spec)] {
            let ev = detect_oscillation(&lienard::simulate(&s).unwrap(), DEFAULT_MIN_ZEROS);
            match (&ev.verdict, expect_osc) {
                (OscillationVerdict::Oscillatory, true) => assert!(ev.zero_times.len() >= 10),
                (OscillationVerdict::NonoscillatoryTail { .. }, false) => {}
                (other, _) => panic!("{other:?}"),
            }
        }
    }
}

#[test]
fn coercive_potential_gives_bounded_solutions_at_two_tolerances() {
    let spec = nc("1", "x^3").initial(1.0, 0.5);
    for s in [spec.clone(), tightened(&spec)] {
        let b = detect_boundedness(&lienard::simulate(&s).unwrap(), &DEFAULT_RADII);
        assert!(matches!(b, Boundedness::Bounded { .. }), "{b:?}");
    }
}

#[test]
fn limit_cycle_is_stable_under_tolerance_changes() {
    let spec = vdp(80.0).tolerances(1e-9, 1e-11);
    let ics = [[0.1, 0.0], [4.0, 0.0]];
    let get = |s: &ScenarioSpec| match find_limit_cycle(s, &ics, &CycleOptions::default()).unwrap().verdict {
        CycleVerdict::UniqueCycle { amplitude, period } => (amplitude, period),
        other => panic!("{other:?}"),
    };
    let (a1, p1) = get(&spec);
    let (a2, p2) = get(&tightened(&spec));
    assert!((a1 - a2).abs() < 1e-3 && (p1 - p2).abs() < 1e-3);
}

#[test]
fn van_der_pol_cycle_matches_rk4_oracle() {
    // Oracle: fixed-step RK4 long run, amplitude from the last loop.
    let run = common::rk4(|_, s| [s[1] - (s[0].powi(3) / 3.0 - s[0]), -s[0]], [0.1, 0.0], 0.0, 100.0, 100_000);
    let tail = &run[80_000..];
    let amp = tail.iter().map(|(_, s)| s[0].abs()).fold(0.0, f64::max);
    let ups: Vec<f64> = tail
        .windows(2)
        .filter(|w| w[0].1[0] < 0.0 && w[1].1[0] >= 0.0)
        .map(|w| w[0].0 + (w[1].0 - w[0].0) * w[0].1[0] / (w[0].1[0] - w[1].1[0]))
        .collect();
    let period = ups[ups.len() - 1] - ups[ups.len() - 2];

    let rep = find_limit_cycle(&vdp(80.0), &[[0.1, 0.0], [4.0, 0.0]], &CycleOptions::default()).unwrap();
    match rep.verdict {
        CycleVerdict::UniqueCycle { amplitude, period: p } => {
            assert!((amplitude - amp).abs() <= 0.02, "{amplitude} vs {amp}");
            assert!((p - period).abs() <= 0.02, "{p} vs {period}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn generalized_system_with_bounded_gamma_is_continuable() {
    let spec = ScenarioSpec::new(Family::Generalized)
        .with("a", "1 + 0.5/(1 + x^2)")
        .with("H", "x")
        .with("alpha_y", "2 + sin(y)")
        .with("beta_y", "1")
        .with("Gamma_x", "x/sqrt(1 + x^2)")
        .with("p", "1")
        .with("g", "x/(1 + x^2)^2")
        .span(0.0, 30.0);
    let rep = probe_continuability(&spec, &square_grid(2.0, 5)).unwrap();
    assert_eq!((rep.completed, rep.total), (25, 25), "{:?}", rep.witnesses);
    let report = assess(&spec, Theorem::T1, &AnalysisOptions::default()).unwrap();
    for (name, v) in &report.hypotheses {
        assert!(v.is_holds(), "{name}: {v:?}");
    }
    assert!(matches!(report.conclusion, Conclusion::Confirmed { .. }));
}

#[test]
fn fractional_probe_is_rejected_by_continuability() {
    let spec = ScenarioSpec::new(Family::Fractional).with("f", "1").with("g", "x");
    assert!(probe_continuability(&spec, &[[0.0, 0.0]]).is_err());
}

#[test]
fn caputo_lienard_origin_is_stable() {
    for alpha in [0.5, 0.8] {
        let spec = ScenarioSpec::new(Family::Fractional)
            .with("f", "2 + sin(x)")
            .with("g", "x")
            .alpha(alpha)
            .span(0.0, 50.0);
        let rep = probe_stability(&spec, &[0.01], 0.1, 50.0).unwrap();
        assert_eq!(rep.verdict, StabilityVerdict::StableEvidence, "α = {alpha}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn stability_is_monotone_in_delta(
        damping in -0.3f64..0.3,
        mut deltas in prop::collection::vec(0.005f64..0.2, 1..5),
    ) {
        let spec = ScenarioSpec::new(Family::Classical)
            .with("f", &format!("{damping:?}"))
            .with("g", "x + x^3")
            .span(0.0, 15.0);
        deltas.sort_by(f64::total_cmp);
        let rep = probe_stability(&spec, &deltas, 0.25, 15.0).unwrap();
        let mut seen_falsified = false;
        for (_, v) in &rep.per_delta {
            if seen_falsified {
                prop_assert!(!matches!(v, StabilityVerdict::StableEvidence));
            }
            seen_falsified |= matches!(v, StabilityVerdict::Falsified { .. });
        }
    }
}
