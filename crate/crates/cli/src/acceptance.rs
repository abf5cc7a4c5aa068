//! The acceptance suite: twelve pass/fail criteria run by `selftest` and by
//! the `acceptance` test target.

use std::time::Instant;

use lienard_core::analyzers::{
    detect_oscillation, find_limit_cycle, probe_stability, CycleOptions, CycleVerdict, OscillationVerdict,
    StabilityVerdict,
};
use lienard_core::expr::Expr;
use lienard_core::fracsolve::{caputo_l1, check_caputo_lemma, mittag_leffler, solve_caputo_system, FracOrder, SampledPath};
use lienard_core::kernel::Kernel;
use lienard_core::lienard::{self, build_field, check_hypotheses, CheckOptions, Family, ScenarioSpec, Theorem};
use lienard_core::ncalc::{check_identity, Identity, IdentityInstance};
use lienard_core::ode::{self, field_fn, Record, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::gamma;

use crate::commands::CommandError;
use crate::oracle;
use crate::report::trajectory_csv_bytes;
use crate::scenario::{parse_scenario, TolerancesFile};
use crate::shipped;

/// Seed for the randomized criteria.
pub const SEED: u64 = 0x5eed_2024;

#[derive(Debug, Clone, Default)]
pub struct Context {
    /// Tolerance override for the scenario runs of the determinism check.
    pub tolerances: Option<TolerancesFile>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    pub detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }

    fn fail(detail: impl Into<String>) -> Self {
        Self::new(false, detail)
    }
}

pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    /// Wall-clock budget in seconds, where one is stated.
    pub budget_s: Option<f64>,
    run: fn(&Context) -> Outcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed_s: f64,
    pub budget_s: Option<f64>,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        let budget = self.budget_s.map(|b| format!(" / {b:.0}s")).unwrap_or_default();
        format!(
            "[{}] {:>2} {:<28} {:>7.2}s{budget}  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed_s,
            self.detail
        )
    }
}

pub const CRITERIA: &[Criterion] = &[
    Criterion { id: 1, name: "n_calculus_identities", budget_s: Some(60.0), run: identities },
    Criterion { id: 2, name: "monotone_triangle", budget_s: Some(30.0), run: monotone_triangle },
    Criterion { id: 3, name: "operator_norm_bound", budget_s: None, run: norm_bound },
    Criterion { id: 4, name: "caputo_closed_forms", budget_s: None, run: caputo_closed_forms },
    Criterion { id: 5, name: "mittag_leffler_probe", budget_s: Some(60.0), run: mittag_leffler_probe },
    Criterion { id: 6, name: "caputo_lemma", budget_s: None, run: caputo_lemma },
    Criterion { id: 7, name: "caputo_stability", budget_s: Some(120.0), run: caputo_stability },
    Criterion { id: 8, name: "oscillation_pipeline", budget_s: None, run: oscillation_pipeline },
    Criterion { id: 9, name: "van_der_pol_cycle", budget_s: Some(60.0), run: van_der_pol_cycle },
    Criterion { id: 10, name: "reduction_consistency", budget_s: None, run: reduction_consistency },
    Criterion { id: 11, name: "unit_order_limit", budget_s: None, run: unit_order_limit },
    Criterion { id: 12, name: "determinism_and_schema", budget_s: None, run: determinism_and_schema },
];

pub fn run_criterion(c: &Criterion, ctx: &Context) -> CriterionResult {
    let start = Instant::now();
    let outcome = std::panic::catch_unwind(|| (c.run)(ctx))
        .unwrap_or_else(|_| Outcome::fail("panicked"));
    let elapsed_s = start.elapsed().as_secs_f64();
    let over = c.budget_s.is_some_and(|b| elapsed_s > b);
    let detail = if over {
        format!("{} (over the time budget)", outcome.detail)
    } else {
        outcome.detail
    };
    CriterionResult {
        id: c.id,
        name: c.name,
        passed: outcome.passed && !over,
        detail,
        elapsed_s,
        budget_s: c.budget_s,
    }
}

/// Runs the selected criteria (all when `only` is empty) in order.
pub fn run_selected(ctx: &Context, only: &[u8]) -> Vec<CriterionResult> {
    CRITERIA
        .iter()
        .filter(|c| only.is_empty() || only.contains(&c.id))
        .map(|c| run_criterion(c, ctx))
        .collect()
}

pub fn run_all(ctx: &Context) -> Vec<CriterionResult> {
    run_selected(ctx, &[])
}

fn e(src: &str) -> Expr {
    Expr::parse(src).expect("built-in expression")
}

const ORDERS: [f64; 3] = [0.25, 0.5, 0.75];

/// Fixed function family: polynomials of degree 0 to 5, a sine and an
/// exponential.
const FAMILY: [&str; 8] = [
    "2.5",
    "1 + t",
    "t^2 - 3*t",
    "2*t^3 - t + 0.5",
    "t^4 - 2*t^2 + 1",
    "0.3*t^5 - t^3 + 2*t - 1",
    "sin(t)",
    "exp(t)",
];

fn identities(_: &Context) -> Outcome {
    let mut worst = (0.0f64, String::new());
    for (i, src) in FAMILY.iter().enumerate() {
        let f = e(src);
        let g = e(FAMILY[(i + 3) % FAMILY.len()]);
        for kernel in Kernel::built_in() {
            for alpha in ORDERS {
                let inst = IdentityInstance::new(f.clone(), kernel.clone(), alpha, 0.1, 2.0)
                    .with_g(g.clone())
                    .with_coefficients(2.0, -3.0);
                for id in [Identity::Fundamental, Identity::Inverse, Identity::Linearity, Identity::Parts] {
                    let r = match check_identity(id, &inst) {
                        Ok(r) => r.max_residual,
                        Err(err) => return Outcome::fail(format!("{id:?} on {src}, {kernel}, α = {alpha}: {err}")),
                    };
                    if !(r <= worst.0) {
                        worst = (r, format!("{id:?} on {src}, {kernel}, α = {alpha}"));
                    }
                }
            }
        }
    }
    Outcome::new(worst.0 <= 1e-6, format!("max residual {:.2e} ({})", worst.0, worst.1))
}

fn random_function(rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..3) {
        0 => {
            let degree = rng.gen_range(0..=5);
            (0..=degree)
                .map(|k| format!("({:?})*t^{k}", rng.gen_range(-3.0..3.0)))
                .collect::<Vec<_>>()
                .join(" + ")
        }
        1 => format!("{:?}*sin({:?}*t)", rng.gen_range(0.5..2.0), rng.gen_range(0.2..3.0)),
        _ => format!("exp({:?}*t)", rng.gen_range(-1.0..0.5)),
    }
}

struct RandomInstance {
    f: String,
    g: String,
    kernel: Kernel,
    alpha: f64,
    a: f64,
    b: f64,
}

/// The shared randomized family of criteria 2 and 3. `f ≥ g` by construction.
fn random_instances(n: usize) -> Vec<RandomInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let kernels = Kernel::built_in();
    (0..n)
        .map(|_| {
            let g = random_function(&mut rng);
            let shift = rng.gen_range(0.0..2.0);
            let bump = rng.gen_range(0.0..0.5);
            let f = format!("{g} + {shift:?} + {bump:?}*t^2");
            let kernel = kernels[rng.gen_range(0..kernels.len())].clone();
            let alpha = rng.gen_range(0.05..0.95);
            let a = rng.gen_range(0.1..1.0);
            let b = a + rng.gen_range(0.1..3.0);
            RandomInstance { f, g, kernel, alpha, a, b }
        })
        .collect()
}

fn monotone_triangle(_: &Context) -> Outcome {
    let instances = random_instances(1000);
    let mut violations = 0;
    let mut first = None;
    for (k, r) in instances.iter().enumerate() {
        let inst = IdentityInstance::new(e(&r.f), r.kernel.clone(), r.alpha, r.a, r.b)
            .with_g(e(&r.g))
            .with_grid(5);
        for id in [Identity::Monotone, Identity::Triangle] {
            match check_identity(id, &inst) {
                Ok(rep) if rep.violations == 0 => {}
                Ok(rep) => {
                    violations += rep.violations;
                    first.get_or_insert(format!("instance {k}: {id:?}, excess {:.2e}", rep.max_residual));
                }
                Err(err) => return Outcome::fail(format!("instance {k}: {err}")),
            }
        }
    }
    let detail = match first {
        None => format!("0 violations over {} instances", instances.len()),
        Some(w) => format!("{violations} violations, first at {w}"),
    };
    Outcome::new(violations == 0, detail)
}

fn norm_bound(_: &Context) -> Outcome {
    let instances = random_instances(1000);
    let mut violations = 0;
    for (k, r) in instances.iter().enumerate() {
        let inst = IdentityInstance::new(e(&r.f), r.kernel.clone(), r.alpha, r.a, r.b).with_grid(20);
        match check_identity(Identity::NormBound, &inst) {
            Ok(rep) => violations += rep.violations,
            Err(err) => return Outcome::fail(format!("instance {k}: {err}")),
        }
    }
    Outcome::new(violations == 0, format!("{violations} violations over {} instances", instances.len()))
}

fn caputo_power(p: f64, alpha: f64, t: f64) -> f64 {
    gamma(p + 1.0) / gamma(p + 1.0 - alpha) * t.powf(p - alpha)
}

fn l1_max_error(p: f64, alpha: f64, h: f64) -> Result<f64, String> {
    let n = (1.0 / h).round() as usize;
    let order = FracOrder::new(alpha).map_err(|e| e.to_string())?;
    let path = SampledPath::sample(|t| t.powf(p), 0.0, h, n + 1);
    let d = caputo_l1(&path, order).map_err(|e| e.to_string())?;
    Ok((1..d.len())
        .map(|i| (d.values[i] - caputo_power(p, alpha, d.time(i))).abs())
        .fold(0.0, f64::max))
}

fn caputo_closed_forms(_: &Context) -> Outcome {
    let hs = [1e-2, 5e-3, 2.5e-3, 1.25e-3];
    let mut worst_err = 0.0f64;
    let mut worst_rate = (0.0f64, String::new());
    for alpha in [0.3, 0.5, 0.7] {
        for p in [1.0, 2.0] {
            match l1_max_error(p, alpha, 1e-3) {
                Ok(err) => worst_err = worst_err.max(err),
                Err(msg) => return Outcome::fail(msg),
            }
        }
        // t is reproduced exactly by the scheme, so rates come from t² and t³.
        for p in [2.0, 3.0] {
            let errs: Result<Vec<f64>, String> = hs.iter().map(|&h| l1_max_error(p, alpha, h)).collect();
            let errs = match errs {
                Ok(v) => v,
                Err(msg) => return Outcome::fail(msg),
            };
            let rate = oracle::fitted_order(&hs, &errs);
            let off = (rate - (2.0 - alpha)).abs();
            if !(off <= worst_rate.0) {
                worst_rate = (off, format!("t^{p} at α = {alpha}: rate {rate:.3}"));
            }
        }
    }
    Outcome::new(
        worst_err <= 1e-3 && worst_rate.0 <= 0.25,
        format!("max error {worst_err:.2e}; worst rate gap {:.3} ({})", worst_rate.0, worst_rate.1),
    )
}

fn mittag_leffler_probe(_: &Context) -> Outcome {
    let field = field_fn(|_, s: [f64; 2]| [-s[0], 0.0]);
    let mut worst = (0.0f64, 0.0);
    for alpha in [0.3, 0.5, 0.7, 0.9] {
        let order = FracOrder::new(alpha).expect("order in range");
        let traj = match solve_caputo_system(&field, order, [1.0, 0.0], 0.0, 5.0, 1e-3, 1e6) {
            Ok(t) => t,
            Err(err) => return Outcome::fail(err.to_string()),
        };
        for s in &traj.samples {
            let exact = match mittag_leffler(alpha, -s.t.powf(alpha)) {
                Ok(v) => v,
                Err(err) => return Outcome::fail(err.to_string()),
            };
            let rel = ((s.x - exact) / exact).abs();
            if !(rel <= worst.0) {
                worst = (rel, alpha);
            }
        }
    }
    Outcome::new(worst.0 <= 2e-3, format!("max relative error {:.2e} at α = {}", worst.0, worst.1))
}

fn caputo_lemma(_: &Context) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 6);
    let h = 1e-2;
    let mut worst = (f64::NEG_INFINITY, String::new());
    for _ in 0..20 {
        let (c, b) = (rng.gen_range(1.5..3.0), rng.gen_range(0.1..1.0));
        let f = match rng.gen_range(0..3) {
            0 => format!("{c:?} + {b:?}*x/sqrt(1 + x^2)"),
            1 => format!("{c:?} + {b:?}*(1 - exp(-x))/(1 + exp(-x))"),
            _ => format!("{:?} + {:?}*x", c + 1.5, b / 2.0),
        };
        let alpha = rng.gen_range(0.2..0.95);
        let (x0, y0) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let spec = ScenarioSpec::new(Family::Fractional)
            .with("f", &f)
            .with("g", "x")
            .alpha(alpha)
            .initial(x0, y0)
            .span(0.0, 5.0)
            .step(h);
        let check = lienard::simulate(&spec)
            .map_err(|e| e.to_string())
            .and_then(|traj| {
                check_caputo_lemma(&traj, &e(&f), FracOrder::new(alpha).expect("order")).map_err(|e| e.to_string())
            });
        match check {
            Ok(c) if c.max_violation > worst.0 => {
                worst = (c.max_violation, format!("f = {f}, α = {alpha:.3}, t = {:.2}", c.at_t))
            }
            Ok(_) => {}
            Err(msg) => return Outcome::fail(format!("f = {f}: {msg}")),
        }
    }
    // Roundoff-level slack, far inside the O(h^{2-α}) band.
    Outcome::new(worst.0 <= 1e-9, format!("max(lhs - rhs) = {:.2e} ({})", worst.0, worst.1))
}

fn caputo_stability(_: &Context) -> Outcome {
    let mut details = Vec::new();
    let mut passed = true;
    for alpha in [0.5, 0.8] {
        let spec = ScenarioSpec::new(Family::Fractional)
            .with("f", "2 + sin(x)")
            .with("g", "x")
            .alpha(alpha)
            .span(0.0, 50.0);
        match probe_stability(&spec, &[0.01], 0.1, 50.0) {
            Ok(rep) => {
                passed &= rep.verdict == StabilityVerdict::StableEvidence;
                details.push(format!("α = {alpha}: {:?}", rep.verdict));
            }
            Err(err) => return Outcome::fail(err.to_string()),
        }
    }
    Outcome::new(passed, details.join("; "))
}

fn shipped_spec(name: &str) -> Result<ScenarioSpec, String> {
    let text = shipped::scenario(name).ok_or_else(|| format!("no shipped scenario {name}"))?;
    let file = parse_scenario(text).map_err(|e| e.to_string())?;
    file.to_spec().map_err(|e| e.to_string())
}

fn oscillation_pipeline(_: &Context) -> Outcome {
    let run = || -> Result<Outcome, String> {
        let osc = shipped_spec("nc-oscillation.json")?;
        let contrast = shipped_spec("nc-contrast.json")?;
        let checks = CheckOptions::default();
        let hyp = check_hypotheses(&osc, Theorem::TO, &checks).map_err(|e| e.to_string())?;
        let not_holding: Vec<&String> = hyp.iter().filter(|(_, v)| !v.is_holds()).map(|(k, _)| k).collect();
        let ev = detect_oscillation(&lienard::simulate(&osc).map_err(|e| e.to_string())?, 10);
        let osc_ok = not_holding.is_empty()
            && ev.verdict == OscillationVerdict::Oscillatory
            && ev.zero_times.len() >= 10;

        let hyp_c = check_hypotheses(&contrast, Theorem::TO, &checks).map_err(|e| e.to_string())?;
        let o1 = hyp_c.get("o1_divergence").map(|v| v.is_violated()).unwrap_or(false);
        let ev_c = detect_oscillation(&lienard::simulate(&contrast).map_err(|e| e.to_string())?, 10);
        let contrast_ok = o1 && ev_c.verdict != OscillationVerdict::Oscillatory;
        Ok(Outcome::new(
            osc_ok && contrast_ok,
            format!(
                "oscillatory scenario: {} zeros, {:?}, unmet hypotheses {:?}; contrast: o1 violated = {o1}, {:?}",
                ev.zero_times.len(),
                ev.verdict,
                not_holding,
                ev_c.verdict
            ),
        ))
    };
    run().unwrap_or_else(Outcome::fail)
}

fn van_der_pol_cycle(_: &Context) -> Outcome {
    let vdp = |s: [f64; 2]| [s[1] - (s[0].powi(3) / 3.0 - s[0]), -s[0]];
    let run = oracle::rk4(|_, s| vdp(s), [0.1, 0.0], 0.0, 100.0, 100_000);
    let Some((oracle_amp, oracle_period)) = oracle::last_loop(&run[80_000..]) else {
        return Outcome::fail("oracle run did not close a loop");
    };
    let spec = ScenarioSpec::new(Family::Classical)
        .with("f", "x^2 - 1")
        .with("g", "x")
        .span(0.0, 80.0);
    let rep = match find_limit_cycle(&spec, &[[0.1, 0.0], [4.0, 0.0]], &CycleOptions::default()) {
        Ok(r) => r,
        Err(err) => return Outcome::fail(err.to_string()),
    };
    match rep.verdict {
        CycleVerdict::UniqueCycle { amplitude, period } => {
            let ok = (amplitude - oracle_amp).abs() <= 0.02
                && (period - oracle_period).abs() <= 0.02
                && (amplitude - 2.0086).abs() <= 0.02
                && (period - 6.663).abs() <= 0.02;
            Outcome::new(
                ok,
                format!(
                    "amplitude {amplitude:.5} (oracle {oracle_amp:.5}), period {period:.5} (oracle {oracle_period:.5})"
                ),
            )
        }
        other => Outcome::fail(format!("{other:?}")),
    }
}

fn grid_run(spec: &ScenarioSpec, initial: [f64; 2]) -> Result<Trajectory, String> {
    let field = build_field(spec).map_err(|e| e.to_string())?;
    let opts = spec.integrate_options().record(Record::Grid(0.05));
    let traj = ode::integrate(&field, initial, &opts);
    if traj.is_completed() {
        Ok(traj)
    } else {
        Err(format!("{:?}", traj.status))
    }
}

fn reduction_consistency(_: &Context) -> Outcome {
    let (rtol, atol) = (1e-12, 1e-14);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 10);
    let mut worst_nc = 0.0f64;
    let mut worst_remark = 0.0f64;
    for _ in 0..5 {
        let (c2, c0) = (rng.gen_range(0.2..1.5), rng.gen_range(-1.0..0.5));
        let cubic: f64 = rng.gen_range(0.0..0.5);
        let d: f64 = rng.gen_range(0.0..0.8);
        let (x0, v0) = (rng.gen_range(-1.5..1.5), rng.gen_range(-1.0..1.0));
        let f = format!("{c2:?}*x^2 + {c0:?}");
        let g = format!("x + {cubic:?}*x^3");
        let a = format!("1 + {d:?}*sin(t)");
        let big_f = |x: f64| c2 * x * x * x / 3.0 + c0 * x;
        let nc = ScenarioSpec::new(Family::Nonconformable)
            .with("f", &f)
            .with("g", &g)
            .with("a", &a)
            .span(0.0, 10.0)
            .tolerances(rtol, atol);
        let cl = ScenarioSpec::new(Family::Classical)
            .with("f", &f)
            .with("g", &g)
            .with("a", &a)
            .span(0.0, 10.0)
            .tolerances(rtol, atol);
        let gen = ScenarioSpec::new(Family::Generalized)
            .with("a", "1")
            .with("H", "x")
            .with("alpha_y", "y")
            .with("beta_y", "1")
            .with("Gamma_x", &format!("{c2:?}*x^3/3 + {c0:?}*x"))
            .with("p", "1")
            .with("g", &g)
            .span(0.0, 10.0)
            .tolerances(rtol, atol);
        let cl_plain = ScenarioSpec::new(Family::Classical)
            .with("f", &f)
            .with("g", &g)
            .span(0.0, 10.0)
            .tolerances(rtol, atol);
        let runs = (|| {
            Ok::<_, String>((
                grid_run(&nc, [x0, v0])?,
                grid_run(&cl, [x0, v0 + big_f(x0)])?,
                grid_run(&gen, [x0, v0])?,
                grid_run(&cl_plain, [x0, v0])?,
            ))
        })();
        let (p, q, r, s) = match runs {
            Ok(v) => v,
            Err(msg) => return Outcome::fail(msg),
        };
        if p.samples.len() != q.samples.len() || r.samples.len() != s.samples.len() {
            return Outcome::fail("grids differ");
        }
        // Nonconformable y is x'; classical y is x' + F(x).
        for (u, v) in p.samples.iter().zip(&q.samples) {
            worst_nc = worst_nc.max((u.x - v.x).abs()).max((u.y + big_f(u.x) - v.y).abs());
        }
        for (u, v) in r.samples.iter().zip(&s.samples) {
            worst_remark = worst_remark.max((u.x - v.x).abs()).max((u.y - v.y).abs());
        }
    }
    Outcome::new(
        worst_nc <= 1e-8 && worst_remark <= 1e-8,
        format!("ordinary kernel {worst_nc:.2e}; generalized specialization {worst_remark:.2e}"),
    )
}

fn unit_order_limit(_: &Context) -> Outcome {
    let spec = ScenarioSpec::new(Family::Fractional)
        .with("f", "0")
        .with("g", "x")
        .alpha(0.999)
        .span(0.0, 10.0)
        .step(1e-3);
    let traj = match lienard::simulate(&spec) {
        Ok(t) => t,
        Err(err) => return Outcome::fail(err.to_string()),
    };
    let oracle = oracle::rk4(|_, s| [s[1], -s[0]], [1.0, 0.0], 0.0, 10.0, 10_000);
    if traj.samples.len() != oracle.len() {
        return Outcome::fail(format!("{} samples vs {} oracle points", traj.samples.len(), oracle.len()));
    }
    let worst = traj
        .samples
        .iter()
        .zip(&oracle)
        .map(|(s, (_, o))| (s.x - o[0]).hypot(s.y - o[1]))
        .fold(0.0, f64::max);
    Outcome::new(worst <= 5e-2, format!("sup-norm gap {worst:.2e}"))
}

fn determinism_and_schema(ctx: &Context) -> Outcome {
    let mut problems = Vec::new();
    for (name, text) in shipped::SCENARIOS {
        let mut file = match parse_scenario(text) {
            Ok(f) => f,
            Err(err) => {
                problems.push(format!("{name}: {err}"));
                continue;
            }
        };
        if let Some(t) = ctx.tolerances {
            file.tolerances = t;
        }
        let bytes = || -> Result<Vec<u8>, String> {
            let spec = file.to_spec().map_err(|e| e.to_string())?;
            let traj = lienard::simulate(&spec).map_err(|e| e.to_string())?;
            Ok(trajectory_csv_bytes(&traj))
        };
        match (bytes(), bytes()) {
            (Ok(a), Ok(b)) if a == b => {}
            (Ok(_), Ok(_)) => problems.push(format!("{name}: CSV differs between runs")),
            (Err(err), _) | (_, Err(err)) => problems.push(format!("{name}: {err}")),
        }
    }
    let mut rejected = 0;
    for (name, text, path) in shipped::MALFORMED {
        let outcome = parse_scenario(text).and_then(|f| f.to_spec().map(|_| ()));
        match outcome {
            Err(err) if CommandError::from(err.clone()).exit_code() == 2 && err.path == *path => rejected += 1,
            Err(err) => problems.push(format!("{name}: rejected at {} (expected {path})", err.path)),
            Ok(()) => problems.push(format!("{name}: accepted")),
        }
    }
    let detail = format!(
        "{} scenarios byte-identical, {rejected}/{} malformed rejected with exit 2{}",
        shipped::SCENARIOS.len(),
        shipped::MALFORMED.len(),
        if problems.is_empty() {
            String::new()
        } else {
            format!("; {}", problems.join("; "))
        }
    );
    Outcome::new(problems.is_empty(), detail)
}
