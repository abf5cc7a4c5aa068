//! Trajectory analyzers: oscillation, boundedness, continuability, stability
//! of the origin and limit cycles, plus the per-theorem harness that pairs
//! them with the hypothesis checks.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::lienard::{
    self, build_field, check_hypotheses, CheckOptions, Conclusion, Family, LienardError,
    QualReport, ScenarioSpec, Theorem, Verdict,
};
use crate::ode::{self, IntegrateOptions, Status, Trajectory, VectorField};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "verdict"))]
pub enum OscillationVerdict {
    Oscillatory,
    NonoscillatoryTail { t_last_zero: Option<f64> },
    Inconclusive { reason: String },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OscillationEvidence {
    pub zero_times: Vec<f64>,
    pub verdict: OscillationVerdict,
}

pub const DEFAULT_MIN_ZEROS: usize = 10;

/// Sign changes of `x`, linearly interpolated between samples.
pub fn zero_times(traj: &Trajectory) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for s in &traj.samples {
        if s.x == 0.0 || !s.x.is_finite() {
            continue;
        }
        if let Some((t0, x0)) = prev {
            if (x0 < 0.0) != (s.x < 0.0) {
                let z = t0 + (s.t - t0) * x0 / (x0 - s.x);
                if out.last().map_or(true, |l| z > *l) {
                    out.push(z);
                }
            }
        }
        prev = Some((s.t, s.x));
    }
    out
}

/// Oscillatory means at least `min_zeros` zeros with the last one in the
/// final quarter of the horizon.
pub fn detect_oscillation(traj: &Trajectory, min_zeros: usize) -> OscillationEvidence {
    let zeros = zero_times(traj);
    let verdict = match (traj.samples.first(), traj.samples.last()) {
        _ if !traj.is_completed() => OscillationVerdict::Inconclusive {
            reason: format!("trajectory did not complete ({:?})", traj.status),
        },
        (Some(first), Some(last)) => {
            let tail_start = first.t + 0.75 * (last.t - first.t);
            match zeros.last() {
                None => OscillationVerdict::NonoscillatoryTail { t_last_zero: None },
                Some(&z) if z < tail_start => OscillationVerdict::NonoscillatoryTail {
                    t_last_zero: Some(z),
                },
                Some(_) if zeros.len() >= min_zeros => OscillationVerdict::Oscillatory,
                Some(_) => OscillationVerdict::Inconclusive {
                    reason: format!("only {} zeros, need {min_zeros}", zeros.len()),
                },
            }
        }
        _ => OscillationVerdict::Inconclusive {
            reason: "empty trajectory".to_string(),
        },
    };
    OscillationEvidence {
        zero_times: zeros,
        verdict,
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "verdict"))]
pub enum Boundedness {
    Bounded { sup_norm: f64 },
    Escaped { t: f64 },
    Inconclusive { reason: String },
}

/// Radii the running sup is compared against; the last is the bound.
pub const DEFAULT_RADII: [f64; 4] = [1e1, 1e2, 1e3, 1e4];

/// Bounded when the run completed below the final radius and the running
/// sup grew by less than 1% over the second half of the horizon. Step
/// underflow counts as escape, since it signals blow-up.
pub fn detect_boundedness(traj: &Trajectory, radii: &[f64]) -> Boundedness {
    match traj.status {
        Status::Escaped { t_esc } => return Boundedness::Escaped { t: t_esc },
        Status::StepUnderflow { t_fail } => return Boundedness::Escaped { t: t_fail },
        Status::Completed => {}
    }
    let (Some(first), Some(last)) = (traj.samples.first(), traj.samples.last()) else {
        return Boundedness::Inconclusive {
            reason: "empty trajectory".to_string(),
        };
    };
    let limit = radii.last().copied().unwrap_or(f64::INFINITY);
    let mid = 0.5 * (first.t + last.t);
    let half_sup = traj
        .samples
        .iter()
        .filter(|s| s.t <= mid)
        .map(|s| s.norm())
        .fold(0.0, f64::max);
    let sup = traj.sup_norm();
    if sup >= limit {
        let crossed = radii.iter().filter(|r| sup >= **r).count();
        return Boundedness::Inconclusive {
            reason: format!("sup norm {sup:.3e} passed {crossed} of {} radii", radii.len()),
        };
    }
    if sup <= 1.01 * half_sup {
        Boundedness::Bounded { sup_norm: sup }
    } else {
        Boundedness::Inconclusive {
            reason: format!("sup norm still growing ({half_sup:.4e} → {sup:.4e})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContinuabilityWitness {
    pub initial: [f64; 2],
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContinuabilityReport {
    pub total: usize,
    pub completed: usize,
    pub fraction_completed: f64,
    /// Initial conditions whose run escaped or underflowed.
    pub witnesses: Vec<ContinuabilityWitness>,
}

/// Square grid of `n × n` points on `[−r, r]²`.
pub fn square_grid(r: f64, n: usize) -> Vec<[f64; 2]> {
    let n = n.max(1);
    let coord = |i: usize| if n == 1 { 0.0 } else { -r + 2.0 * r * i as f64 / (n - 1) as f64 };
    (0..n)
        .flat_map(|i| (0..n).map(move |j| [coord(i), coord(j)]))
        .collect()
}

pub fn probe_continuability_field<V: VectorField + ?Sized>(
    field: &V,
    ics: &[[f64; 2]],
    opts: &IntegrateOptions,
) -> ContinuabilityReport {
    let mut witnesses = Vec::new();
    for &ic in ics {
        let traj = ode::integrate(field, ic, opts);
        if !traj.is_completed() {
            witnesses.push(ContinuabilityWitness {
                initial: ic,
                status: traj.status,
            });
        }
    }
    let total = ics.len();
    let completed = total - witnesses.len();
    ContinuabilityReport {
        total,
        completed,
        fraction_completed: if total == 0 { 1.0 } else { completed as f64 / total as f64 },
        witnesses,
    }
}

pub fn probe_continuability(
    spec: &ScenarioSpec,
    ics: &[[f64; 2]],
) -> Result<ContinuabilityReport, AnalysisError> {
    if spec.family == Family::Fractional {
        return Err(AnalysisError::Family(spec.family));
    }
    let field = build_field(spec).map_err(LienardError::from)?;
    Ok(probe_continuability_field(&field, ics, &spec.integrate_options()))
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Lienard(#[from] LienardError),
    #[error("the origin is not an equilibrium: field there is ({0:e}, {1:e})")]
    NotEquilibrium(f64, f64),
    #[error("probe does not apply to the {0} family")]
    Family(Family),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "verdict"))]
pub enum StabilityVerdict {
    StableEvidence,
    Falsified { delta: f64, initial: [f64; 2], t: f64 },
    Inconclusive { reason: String },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StabilityReport {
    pub epsilon: f64,
    pub horizon: f64,
    /// Outcome per radius, in increasing order of `δ`.
    pub per_delta: Vec<(f64, StabilityVerdict)>,
    pub verdict: StabilityVerdict,
}

pub const STABILITY_ANGLES: usize = 8;

/// Launches the `δ`-circle (8 angles) for every `δ` and watches for an exit
/// from the `ε`-ball before `t0 + horizon`.
///
/// Radii are processed in increasing order. Once some `δ` is falsified every
/// larger radius inherits the witness, which lies inside its disc.
pub fn probe_stability(
    spec: &ScenarioSpec,
    deltas: &[f64],
    epsilon: f64,
    horizon: f64,
) -> Result<StabilityReport, AnalysisError> {
    let field = build_field(spec).map_err(LienardError::from)?;
    let origin = field
        .eval(spec.t0, [0.0, 0.0])
        .map_err(|e| AnalysisError::Lienard(e.into()))?;
    if origin.iter().any(|v| libm::fabs(*v) > 1e-12) {
        return Err(AnalysisError::NotEquilibrium(origin[0], origin[1]));
    }
    let mut spec = spec.clone();
    spec.t_end = spec.t0 + horizon;
    spec.escape_radius = epsilon;
    if spec.family == Family::Fractional && spec.step.is_some_and(|h| h > horizon / 16.0) {
        spec.step = None;
    }

    let mut sorted: Vec<f64> = deltas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut per_delta = Vec::with_capacity(sorted.len());
    let mut first_failure: Option<StabilityVerdict> = None;
    for &delta in &sorted {
        if let Some(f) = &first_failure {
            per_delta.push((delta, f.clone()));
            continue;
        }
        let mut outcome = StabilityVerdict::StableEvidence;
        for k in 0..STABILITY_ANGLES {
            let theta = 2.0 * core::f64::consts::PI * k as f64 / STABILITY_ANGLES as f64;
            let ic = [delta * libm::cos(theta), delta * libm::sin(theta)];
            let traj = match lienard::simulate_from(&spec, ic) {
                Ok(t) => t,
                Err(e) => {
                    outcome = StabilityVerdict::Inconclusive { reason: e.to_string() };
                    break;
                }
            };
            let exit = match traj.status {
                Status::Escaped { t_esc } => Some(t_esc),
                Status::StepUnderflow { t_fail } => Some(t_fail),
                Status::Completed => traj.samples.iter().find(|s| s.norm() >= epsilon).map(|s| s.t),
            };
            if let Some(t) = exit {
                outcome = StabilityVerdict::Falsified { delta, initial: ic, t };
                break;
            }
        }
        if matches!(outcome, StabilityVerdict::Falsified { .. }) {
            first_failure = Some(outcome.clone());
        }
        per_delta.push((delta, outcome));
    }
    let verdict = if let Some(f) = first_failure {
        f
    } else if let Some((_, v)) = per_delta.iter().find(|(_, v)| !matches!(v, StabilityVerdict::StableEvidence)) {
        v.clone()
    } else if per_delta.is_empty() {
        StabilityVerdict::Inconclusive {
            reason: "no radii given".to_string(),
        }
    } else {
        StabilityVerdict::StableEvidence
    };
    Ok(StabilityReport {
        epsilon,
        horizon,
        per_delta,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SectionCrossing {
    pub t: f64,
    pub y: f64,
}

/// Crossings of the half-line `{x = 0, y > 0}` in the direction of
/// increasing `x`, located by bisection on the Hermite interpolant.
pub fn section_crossings(traj: &Trajectory) -> Vec<SectionCrossing> {
    let s = &traj.samples;
    let mut out = Vec::new();
    for i in 0..s.len().saturating_sub(1) {
        let (a, b) = (&s[i], &s[i + 1]);
        if !(a.x < 0.0 && b.x >= 0.0) {
            continue;
        }
        let (da, db) = (traj.slopes[i], traj.slopes[i + 1]);
        let (mut lo, mut hi) = (a.t, b.t);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if ode::hermite(a, b, da, db, mid)[0] < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 4.0 * f64::EPSILON * libm::fmax(1.0, libm::fabs(hi)) {
                break;
            }
        }
        let t = 0.5 * (lo + hi);
        let y = ode::hermite(a, b, da, db, t)[1];
        if y > 0.0 {
            out.push(SectionCrossing { t, y });
        }
    }
    out
}

/// Maximum of `|x|` over `[t_a, t_b]`, refined on the Hermite interpolant.
fn max_abs_x(traj: &Trajectory, t_a: f64, t_b: f64) -> f64 {
    let s = &traj.samples;
    let mut best: f64 = 0.0;
    for i in 0..s.len().saturating_sub(1) {
        let (a, b) = (&s[i], &s[i + 1]);
        if b.t < t_a || a.t > t_b {
            continue;
        }
        let (da, db) = (traj.slopes[i], traj.slopes[i + 1]);
        let f = |t: f64| libm::fabs(ode::hermite(a, b, da, db, t)[0]);
        const SUB: usize = 16;
        let mut k_best = 0;
        let mut v_best = f64::NEG_INFINITY;
        for k in 0..=SUB {
            let t = a.t + (b.t - a.t) * k as f64 / SUB as f64;
            let v = f(t);
            if v > v_best {
                v_best = v;
                k_best = k;
            }
        }
        let h = (b.t - a.t) / SUB as f64;
        let mut lo = libm::fmax(a.t, a.t + h * (k_best as f64 - 1.0));
        let mut hi = libm::fmin(b.t, a.t + h * (k_best as f64 + 1.0));
        for _ in 0..60 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if f(m1) < f(m2) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        best = best.max(v_best).max(f(0.5 * (lo + hi)));
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CycleEstimate {
    pub initial: [f64; 2],
    /// `max |x|` over the last loop.
    pub amplitude: f64,
    pub period: f64,
    /// `|y_{k+1} − y_k|` between the last two section returns.
    pub return_map_gap: f64,
    /// Slope of the return map at the last return; 1 for a continuum of
    /// closed orbits.
    pub multiplier: Option<f64>,
    pub crossings: usize,
    pub converged: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "verdict"))]
pub enum CycleVerdict {
    UniqueCycle { amplitude: f64, period: f64 },
    DistinctCycles { amplitude_spread: f64 },
    NoIsolatedCycle { reason: String },
    Inconclusive { reason: String },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CycleReport {
    pub estimates: Vec<CycleEstimate>,
    /// Largest pairwise gap between converged amplitudes.
    pub amplitude_spread: Option<f64>,
    pub verdict: CycleVerdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleOptions {
    pub cycle_tol: f64,
    /// Minimum `|P′ − 1|` for the cycle to count as isolated.
    pub isolation_tol: f64,
    /// Relative perturbation of the section coordinate for `P′`.
    pub perturbation: f64,
    /// Amplitude spread below which converged runs share one cycle.
    pub uniqueness_tol: f64,
}

impl Default for CycleOptions {
    fn default() -> Self {
        Self {
            cycle_tol: 1e-5,
            isolation_tol: 1e-3,
            perturbation: 1e-2,
            uniqueness_tol: 1e-3,
        }
    }
}

/// `y` at the first return to the section from `(0, y0)`.
fn first_return<V: VectorField + ?Sized>(
    field: &V,
    y0: f64,
    t0: f64,
    period: f64,
    base: &IntegrateOptions,
) -> Option<f64> {
    let mut opts = base.clone();
    opts.t0 = t0;
    opts.t_end = t0 + 3.0 * period;
    opts.record = ode::Record::EveryStep;
    let traj = ode::integrate(field, [0.0, y0], &opts);
    section_crossings(&traj).first().map(|c| c.y)
}

fn estimate_cycle<V: VectorField + ?Sized>(
    field: &V,
    initial: [f64; 2],
    opts: &IntegrateOptions,
    cyc: &CycleOptions,
) -> CycleEstimate {
    let traj = ode::integrate(field, initial, opts);
    let cross = section_crossings(&traj);
    let mut est = CycleEstimate {
        initial,
        amplitude: f64::NAN,
        period: f64::NAN,
        return_map_gap: f64::NAN,
        multiplier: None,
        crossings: cross.len(),
        converged: false,
        note: None,
    };
    if cross.len() < 4 {
        est.note = Some(format!("only {} section crossings", cross.len()));
        return est;
    }
    let n = cross.len();
    let (prev, last) = (cross[n - 2], cross[n - 1]);
    est.amplitude = max_abs_x(&traj, prev.t, last.t);
    est.period = last.t - prev.t;
    let gaps: Vec<f64> = cross.windows(2).map(|w| libm::fabs(w[1].y - w[0].y)).collect();
    est.return_map_gap = gaps[gaps.len() - 1];
    let settled = gaps[gaps.len() - 3..].iter().all(|g| *g < cyc.cycle_tol);
    if !settled {
        est.note = Some("return map has not settled".to_string());
        return est;
    }
    let d = cyc.perturbation * last.y;
    let returns = (
        first_return(field, last.y + d, last.t, est.period, opts),
        first_return(field, last.y - d, last.t, est.period, opts),
    );
    match returns {
        (Some(up), Some(down)) => {
            let m = (up - down) / (2.0 * d);
            est.multiplier = Some(m);
            if libm::fabs(m - 1.0) > cyc.isolation_tol {
                est.converged = true;
            } else {
                est.note = Some(format!("return map slope {m:.6} ≈ 1: orbit is not isolated"));
            }
        }
        _ => est.note = Some("perturbed orbits did not return to the section".to_string()),
    }
    est
}

/// Return-map search for a limit cycle from each initial condition on the
/// section `{x = 0, y > 0}`.
pub fn find_limit_cycle(
    spec: &ScenarioSpec,
    ics: &[[f64; 2]],
    cyc: &CycleOptions,
) -> Result<CycleReport, AnalysisError> {
    if spec.family != Family::Classical {
        return Err(AnalysisError::Family(spec.family));
    }
    let field = build_field(spec).map_err(LienardError::from)?;
    let opts = spec.integrate_options();
    let estimates: Vec<CycleEstimate> = ics
        .iter()
        .map(|&ic| estimate_cycle(&field, ic, &opts, cyc))
        .collect();
    let converged: Vec<&CycleEstimate> = estimates.iter().filter(|e| e.converged).collect();
    let amplitude_spread = if converged.is_empty() {
        None
    } else {
        let hi = converged.iter().map(|e| e.amplitude).fold(f64::NEG_INFINITY, f64::max);
        let lo = converged.iter().map(|e| e.amplitude).fold(f64::INFINITY, f64::min);
        Some(hi - lo)
    };
    let not_isolated = estimates
        .iter()
        .any(|e| e.multiplier.is_some_and(|m| libm::fabs(m - 1.0) <= cyc.isolation_tol));
    let verdict = match amplitude_spread {
        _ if estimates.is_empty() => CycleVerdict::Inconclusive {
            reason: "no initial conditions".to_string(),
        },
        Some(spread) if converged.len() == estimates.len() => {
            if spread <= cyc.uniqueness_tol {
                let k = converged.len() as f64;
                CycleVerdict::UniqueCycle {
                    amplitude: converged.iter().map(|e| e.amplitude).sum::<f64>() / k,
                    period: converged.iter().map(|e| e.period).sum::<f64>() / k,
                }
            } else {
                CycleVerdict::DistinctCycles {
                    amplitude_spread: spread,
                }
            }
        }
        _ if not_isolated => CycleVerdict::NoIsolatedCycle {
            reason: "closed orbits with unit return-map slope".to_string(),
        },
        _ => CycleVerdict::Inconclusive {
            reason: format!("{} of {} runs converged", converged.len(), estimates.len()),
        },
    };
    Ok(CycleReport {
        estimates,
        amplitude_spread,
        verdict,
    })
}

/// Settings for the conclusion probes of [`assess`].
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub checks: CheckOptions,
    pub min_zeros: usize,
    pub radii: Vec<f64>,
    pub continuability_grid: Vec<[f64; 2]>,
    pub deltas: Vec<f64>,
    pub epsilon: f64,
    /// Defaults to the scenario horizon.
    pub stability_horizon: Option<f64>,
    /// Extra initial conditions for the cycle search, besides the scenario's.
    pub cycle_ics: Vec<[f64; 2]>,
    pub cycle: CycleOptions,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            checks: CheckOptions::default(),
            min_zeros: DEFAULT_MIN_ZEROS,
            radii: DEFAULT_RADII.to_vec(),
            continuability_grid: square_grid(2.0, 5),
            deltas: vec![0.01],
            epsilon: 0.1,
            stability_horizon: None,
            cycle_ics: vec![[0.1, 0.0], [4.0, 0.0]],
            cycle: CycleOptions::default(),
        }
    }
}

/// Hypotheses whose truth value is the prediction of an "if and only if"
/// statement rather than a prerequisite.
fn predictor(theorem: Theorem) -> Option<&'static str> {
    match theorem {
        Theorem::TO | Theorem::T2 | Theorem::LemmaL2 => Some("o1_divergence"),
        _ => None,
    }
}

/// Lemma about growing `a(t)` reads "g not increasing" in two ways; either
/// reading may satisfy it.
fn alternatives(theorem: Theorem) -> &'static [&'static str] {
    match theorem {
        Theorem::LemmaL2 | Theorem::FinalBounded => &["g_nonincreasing", "g_not_increasing_everywhere"],
        _ => &[],
    }
}

fn verdict_label(v: &Verdict) -> &'static str {
    match v {
        Verdict::HoldsOnGrid { .. } => "holds",
        Verdict::Violated { .. } => "violated",
        Verdict::Inconclusive { .. } => "inconclusive",
    }
}

fn conclusion_from(agrees: Option<bool>, detail: String) -> Conclusion {
    match agrees {
        Some(true) => Conclusion::Confirmed { detail },
        Some(false) => Conclusion::Falsified {
            witness: detail.clone(),
            detail: "observed behavior contradicts the predicted one".to_string(),
        },
        None => Conclusion::Inconclusive { reason: detail },
    }
}

/// Checks the hypotheses of `theorem` and runs the matching probe.
///
/// A violated prerequisite makes the conclusion inconclusive; prerequisites
/// that cannot be decided are listed in the notes and do not block the probe.
pub fn assess(
    spec: &ScenarioSpec,
    theorem: Theorem,
    opts: &AnalysisOptions,
) -> Result<QualReport, AnalysisError> {
    let hypotheses = check_hypotheses(spec, theorem, &opts.checks)?;
    let mut notes = Vec::new();
    let pred = predictor(theorem);
    let alts = alternatives(theorem);
    let mut blocked = Vec::new();
    for (name, v) in &hypotheses {
        if Some(name.as_str()) == pred {
            continue;
        }
        if alts.contains(&name.as_str()) {
            continue;
        }
        match v {
            Verdict::Violated { .. } => blocked.push(name.clone()),
            Verdict::Inconclusive { .. } => notes.push(format!("unverified hypothesis: {name}")),
            Verdict::HoldsOnGrid { .. } => {}
        }
    }
    if !alts.is_empty() {
        let labels: Vec<String> = alts
            .iter()
            .map(|a| format!("{a}: {}", verdict_label(&hypotheses[*a])))
            .collect();
        notes.push(format!("monotonicity of g under both readings ({})", labels.join(", ")));
        if alts.iter().all(|a| hypotheses[*a].is_violated()) {
            blocked.push("g_not_increasing".to_string());
        }
    }
    if matches!(theorem, Theorem::LemmaL2 | Theorem::FinalBounded) {
        notes.push(
            "a_bounded and a_to_infinity cannot hold together, nor can g nonincreasing and x·g(x) > 0"
                .to_string(),
        );
    }
    if theorem == Theorem::T1 {
        notes.push("E_ap and J(xg) are the signed integrals from 0 to the argument".to_string());
    }

    let conclusion = if !blocked.is_empty() {
        Conclusion::Inconclusive {
            reason: format!("hypotheses violated: {}", blocked.join(", ")),
        }
    } else {
        probe(spec, theorem, opts, &hypotheses, pred)?
    };
    Ok(QualReport {
        theorem,
        hypotheses,
        conclusion,
        notes,
    })
}

fn probe(
    spec: &ScenarioSpec,
    theorem: Theorem,
    opts: &AnalysisOptions,
    hypotheses: &BTreeMap<String, Verdict>,
    pred: Option<&str>,
) -> Result<Conclusion, AnalysisError> {
    let predicted = pred.and_then(|p| match &hypotheses[p] {
        Verdict::HoldsOnGrid { .. } => Some(true),
        Verdict::Violated { .. } => Some(false),
        Verdict::Inconclusive { .. } => None,
    });
    Ok(match theorem {
        Theorem::TO => {
            let traj = lienard::simulate(spec)?;
            let ev = detect_oscillation(&traj, opts.min_zeros);
            let observed = match ev.verdict {
                OscillationVerdict::Oscillatory => Some(true),
                OscillationVerdict::NonoscillatoryTail { .. } => Some(false),
                OscillationVerdict::Inconclusive { .. } => None,
            };
            let detail = format!("{:?} with {} zeros", ev.verdict, ev.zero_times.len());
            match (predicted, observed) {
                (Some(p), Some(o)) => conclusion_from(Some(p == o), format!("oscillation: {detail}")),
                _ => conclusion_from(None, format!("prediction {predicted:?}, observed {detail}")),
            }
        }
        Theorem::T2 | Theorem::FinalBounded => {
            let traj = lienard::simulate(spec)?;
            let b = detect_boundedness(&traj, &opts.radii);
            let observed = match b {
                Boundedness::Bounded { .. } => Some(true),
                Boundedness::Escaped { .. } => Some(false),
                Boundedness::Inconclusive { .. } => None,
            };
            let predicted = if theorem == Theorem::FinalBounded {
                Some(true)
            } else {
                predicted
            };
            match (predicted, observed) {
                (Some(p), Some(o)) => conclusion_from(Some(p == o), format!("boundedness: {b:?}")),
                _ => conclusion_from(None, format!("prediction {predicted:?}, observed {b:?}")),
            }
        }
        Theorem::LemmaL2 => match predicted {
            Some(false) => Conclusion::Confirmed {
                detail: "the divergence condition fails".to_string(),
            },
            Some(true) => Conclusion::Falsified {
                witness: "o1_divergence holds".to_string(),
                detail: "the divergence condition holds".to_string(),
            },
            None => Conclusion::Inconclusive {
                reason: "divergence condition undecided".to_string(),
            },
        },
        Theorem::LemmaL1 | Theorem::T1 => {
            let rep = probe_continuability(spec, &opts.continuability_grid)?;
            let detail = format!("{}/{} runs completed", rep.completed, rep.total);
            if rep.completed == rep.total {
                Conclusion::Confirmed { detail }
            } else {
                Conclusion::Falsified {
                    witness: format!("{:?}", rep.witnesses[0]),
                    detail,
                }
            }
        }
        Theorem::CaputoStability => {
            let horizon = opts.stability_horizon.unwrap_or(spec.t_end - spec.t0);
            let rep = probe_stability(spec, &opts.deltas, opts.epsilon, horizon)?;
            match rep.verdict {
                StabilityVerdict::StableEvidence => Conclusion::Confirmed {
                    detail: format!("stable evidence for ε = {} up to t0 + {horizon}", opts.epsilon),
                },
                StabilityVerdict::Falsified { delta, initial, t } => Conclusion::Falsified {
                    witness: format!("δ = {delta}, start {initial:?}, exit at t = {t}"),
                    detail: "trajectory left the ε-ball".to_string(),
                },
                StabilityVerdict::Inconclusive { reason } => Conclusion::Inconclusive { reason },
            }
        }
        Theorem::LienardCycle => {
            let mut ics = vec![[spec.x0, spec.y0]];
            ics.extend(opts.cycle_ics.iter().copied());
            let rep = find_limit_cycle(spec, &ics, &opts.cycle)?;
            match rep.verdict {
                CycleVerdict::UniqueCycle { amplitude, period } => Conclusion::Confirmed {
                    detail: format!(
                        "unique cycle: amplitude {amplitude:.6}, period {period:.6}, spread {:.2e}",
                        rep.amplitude_spread.unwrap_or(0.0)
                    ),
                },
                CycleVerdict::DistinctCycles { amplitude_spread } => Conclusion::Falsified {
                    witness: format!("amplitude spread {amplitude_spread:.3e}"),
                    detail: "runs converged to different cycles".to_string(),
                },
                CycleVerdict::NoIsolatedCycle { reason } => Conclusion::Falsified {
                    witness: reason,
                    detail: "no isolated cycle".to_string(),
                },
                CycleVerdict::Inconclusive { reason } => Conclusion::Inconclusive { reason },
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{Kernel, KernelKind};
    use crate::ode::{field_fn, Sample};

    fn sampled(f: impl Fn(f64) -> f64, t_end: f64, n: usize) -> Trajectory {
        let samples = (0..=n)
            .map(|i| {
                let t = t_end * i as f64 / n as f64;
                Sample { t, x: f(t), y: 0.0 }
            })
            .collect();
        Trajectory::from_samples(samples, Status::Completed)
    }

    #[test]
    fn cosine_is_oscillatory() {
        let traj = sampled(libm::cos, 40.0 * core::f64::consts::PI, 20_000);
        let ev = detect_oscillation(&traj, DEFAULT_MIN_ZEROS);
        assert_eq!(ev.verdict, OscillationVerdict::Oscillatory);
        assert_eq!(ev.zero_times.len(), 40);
        assert!(ev.zero_times.windows(2).all(|w| w[1] > w[0]));
        assert!((ev.zero_times[0] - core::f64::consts::FRAC_PI_2).abs() < 1e-4);
    }

    #[test]
    fn positive_signal_has_nonoscillatory_tail() {
        let traj = sampled(|t| libm::exp(-t) + 1.0, 10.0, 100);
        let ev = detect_oscillation(&traj, DEFAULT_MIN_ZEROS);
        assert_eq!(ev.verdict, OscillationVerdict::NonoscillatoryTail { t_last_zero: None });
    }

    #[test]
    fn escaped_trajectory_is_inconclusive() {
        let mut traj = sampled(libm::cos, 100.0, 1000);
        traj.status = Status::Escaped { t_esc: 100.0 };
        assert!(matches!(
            detect_oscillation(&traj, 10).verdict,
            OscillationVerdict::Inconclusive { .. }
        ));
    }

    #[test]
    fn harmonic_is_bounded_and_growth_escapes() {
        let spec = ScenarioSpec::new(Family::Classical)
            .with("f", "0")
            .with("g", "x")
            .span(0.0, 50.0);
        let traj = lienard::simulate(&spec).unwrap();
        match detect_boundedness(&traj, &DEFAULT_RADII) {
            Boundedness::Bounded { sup_norm } => assert!((sup_norm - 1.0).abs() < 1e-6),
            other => panic!("{other:?}"),
        }
        let field = field_fn(|_, s: [f64; 2]| [s[0], 0.0]);
        let opts = IntegrateOptions::new(0.0, 100.0).escape_radius(1e6);
        let traj = ode::integrate(&field, [1.0, 0.0], &opts);
        assert!(matches!(detect_boundedness(&traj, &DEFAULT_RADII), Boundedness::Escaped { .. }));
    }

    fn blowup_spec() -> ScenarioSpec {
        ScenarioSpec::new(Family::Generalized)
            .with("a", "1")
            .with("H", "x")
            .with("alpha_y", "0")
            .with("beta_y", "0")
            .with("Gamma_x", "0")
            .with("p", "1 + y^2")
            .with("g", "-1")
            .span(0.0, 5.0)
            .escape_radius(1e300)
    }

    #[test]
    fn tangent_blowup_underflows() {
        let spec = blowup_spec().initial(0.0, 0.0);
        let rep = probe_continuability(&spec, &[[0.0, 0.0]]).unwrap();
        assert_eq!(rep.completed, 0);
        match rep.witnesses[0].status {
            Status::StepUnderflow { t_fail } => assert!(t_fail < core::f64::consts::PI),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn van_der_pol_is_continuable() {
        let spec = ScenarioSpec::new(Family::Classical)
            .with("f", "x^2 - 1")
            .with("g", "x")
            .span(0.0, 20.0);
        let rep = probe_continuability(&spec, &square_grid(2.0, 3)).unwrap();
        assert_eq!(rep.fraction_completed, 1.0);
    }

    #[test]
    fn stability_of_center_and_instability_of_source() {
        let center = ScenarioSpec::new(Family::Classical)
            .with("f", "0")
            .with("g", "x")
            .span(0.0, 20.0);
        let rep = probe_stability(&center, &[0.01, 0.05], 0.1, 20.0).unwrap();
        assert_eq!(rep.verdict, StabilityVerdict::StableEvidence);

        let source = center.clone().with("f", "-1");
        let rep = probe_stability(&source, &[0.01, 0.05], 0.1, 20.0).unwrap();
        assert!(matches!(rep.verdict, StabilityVerdict::Falsified { delta, .. } if delta == 0.01));
        assert!(rep.per_delta.iter().all(|(_, v)| matches!(v, StabilityVerdict::Falsified { .. })));

        let shifted = center.with("g", "x + 1");
        assert!(matches!(
            probe_stability(&shifted, &[0.01], 0.1, 1.0),
            Err(AnalysisError::NotEquilibrium(..))
        ));
    }

    #[test]
    fn harmonic_oscillator_has_no_isolated_cycle() {
        let spec = ScenarioSpec::new(Family::Classical)
            .with("f", "0")
            .with("g", "x")
            .span(0.0, 60.0);
        let rep = find_limit_cycle(&spec, &[[1.0, 0.0], [2.0, 0.0]], &CycleOptions::default()).unwrap();
        assert!(rep.estimates.iter().all(|e| !e.converged));
        assert!(matches!(rep.verdict, CycleVerdict::NoIsolatedCycle { .. }), "{:?}", rep.verdict);
    }

    #[test]
    fn van_der_pol_cycle() {
        let spec = ScenarioSpec::new(Family::Classical)
            .with("f", "x^2 - 1")
            .with("g", "x")
            .span(0.0, 80.0)
            .tolerances(1e-10, 1e-12);
        let rep = find_limit_cycle(&spec, &[[0.1, 0.0], [4.0, 0.0]], &CycleOptions::default()).unwrap();
        match rep.verdict {
            CycleVerdict::UniqueCycle { amplitude, period } => {
                assert!((amplitude - 2.00862).abs() < 1e-3, "{amplitude}");
                assert!((period - 6.66329).abs() < 1e-3, "{period}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn nonconformable_oscillation_end_to_end() {
        let spec = ScenarioSpec::new(Family::Nonconformable)
            .with("f", "0")
            .with("g", "x")
            .with("a", "1")
            .kernel(Kernel::new(KernelKind::NcExpInv))
            .alpha(0.5)
            .span(1.0, 200.0);
        let report = assess(&spec, Theorem::TO, &AnalysisOptions::default()).unwrap();
        assert!(matches!(report.conclusion, Conclusion::Confirmed { .. }), "{report:?}");
    }
}
