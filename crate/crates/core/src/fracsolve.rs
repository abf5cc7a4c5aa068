//! Caputo fractional derivatives of sampled paths, the Mittag-Leffler
//! function, an Adams–Bashforth–Moulton solver for planar Caputo systems
//! and the Lyapunov-type inequality check built on them.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::expr::{Expr, Var};
use crate::ncalc::univariate;
use crate::ode::{FieldError, Sample, Status, StepStats, Trajectory, VectorField};
use crate::primitive::Antiderivative;
use crate::quad::{self, QuadError, QuadOptions};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FracError {
    #[error("fractional order {0} is outside the supported range")]
    Order(f64),
    #[error("grid is not uniformly spaced at index {index}")]
    NonUniform { index: usize },
    #[error("path needs at least 3 samples, got {0}")]
    TooShort(usize),
    #[error("Mittag-Leffler argument {0} is outside |z| <= 50")]
    ArgumentOutOfRange(f64),
    #[error("Mittag-Leffler evaluation is not finite at z = {0}")]
    NonFiniteSeries(f64),
    #[error("step {h} is larger than a sixteenth of the interval")]
    StepTooLarge { h: f64 },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error("f is not positive at x = {x} (value {value})")]
    NotPositive { x: f64, value: f64 },
    #[error("f does not look Lipschitz on [{lo}, {hi}] (slope estimates {coarse} and {fine})")]
    NotLipschitz { lo: f64, hi: f64, coarse: f64, fine: f64 },
    #[error("V is not finite at ({x}, {y})")]
    NonFiniteV { x: f64, y: f64 },
}

/// Order of a Caputo derivative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FracOrder(f64);

impl FracOrder {
    /// An order in the open interval `(0, 1)`.
    pub fn new(alpha: f64) -> Result<Self, FracError> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(Self(alpha))
        } else {
            Err(FracError::Order(alpha))
        }
    }

    /// Also accepts `α = 1`, the classical limit.
    pub fn unit_inclusive(alpha: f64) -> Result<Self, FracError> {
        if alpha > 0.0 && alpha <= 1.0 {
            Ok(Self(alpha))
        } else {
            Err(FracError::Order(alpha))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Values on the uniform grid `t0 + i·h`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    pub t0: f64,
    pub h: f64,
    pub values: Vec<f64>,
}

impl SampledPath {
    pub fn new(t0: f64, h: f64, values: Vec<f64>) -> Self {
        Self { t0, h, values }
    }

    /// Samples `f` at `t0, t0 + h, …, t0 + n·h`.
    pub fn sample<F: Fn(f64) -> f64>(f: F, t0: f64, h: f64, n: usize) -> Self {
        let values = (0..=n).map(|i| f(t0 + h * i as f64)).collect();
        Self { t0, h, values }
    }

    /// Builds a path from explicit times, checking uniform spacing.
    pub fn from_times(times: &[f64], values: Vec<f64>) -> Result<Self, FracError> {
        if times.len() < 2 || times.len() != values.len() {
            return Err(FracError::TooShort(times.len().min(values.len())));
        }
        let h = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        for (i, w) in times.windows(2).enumerate() {
            // Spacing tolerance plus the roundoff of forming `t0 + i·h`.
            let tol = 1e-12 * h + 4.0 * f64::EPSILON * libm::fabs(w[1]);
            if !(libm::fabs(w[1] - w[0] - h) <= tol) {
                return Err(FracError::NonUniform { index: i + 1 });
            }
        }
        Ok(Self {
            t0: times[0],
            h,
            values,
        })
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + self.h * i as f64
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// L1 weights `b_k = (k+1)^{1-α} − k^{1-α}`.
fn l1_weights(alpha: f64, n: usize) -> Vec<f64> {
    let p = 1.0 - alpha;
    (0..n)
        .map(|k| libm::pow((k + 1) as f64, p) - libm::pow(k as f64, p))
        .collect()
}

/// L1 approximation of the Caputo derivative with lower terminal `t0`
/// at every grid point; the first entry is NaN.
pub fn caputo_l1(path: &SampledPath, alpha: FracOrder) -> Result<SampledPath, FracError> {
    let n = path.values.len();
    if n < 3 {
        return Err(FracError::TooShort(n));
    }
    let a = alpha.value();
    let b = l1_weights(a, n);
    let scale = libm::pow(path.h, -a) / libm::tgamma(2.0 - a);
    let diffs: Vec<f64> = path.values.windows(2).map(|w| w[1] - w[0]).collect();
    let mut out = vec![f64::NAN; n];
    for (m, slot) in out.iter_mut().enumerate().skip(1) {
        let mut acc = 0.0;
        for j in 0..m {
            acc += b[m - 1 - j] * diffs[j];
        }
        *slot = scale * acc;
    }
    Ok(SampledPath {
        t0: path.t0,
        h: path.h,
        values: out,
    })
}

struct SeriesOutcome {
    sum: f64,
    max_term: f64,
}

fn ml_series(alpha: f64, z: f64) -> SeriesOutcome {
    let ln_abs = libm::log(libm::fabs(z));
    let negative = z < 0.0;
    let mut sum = 1.0;
    let mut carry = 0.0;
    let mut max_term: f64 = 1.0;
    let mut prev = 1.0f64;
    let mut k = 1usize;
    loop {
        let kf = k as f64;
        let magnitude = libm::exp(kf * ln_abs - libm::lgamma(alpha * kf + 1.0));
        let term = if negative && k % 2 == 1 { -magnitude } else { magnitude };
        // Kahan summation.
        let y = term - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
        max_term = max_term.max(magnitude);
        let decreasing = magnitude < prev;
        prev = magnitude;
        // Past the peak the tail of an alternating series is bounded by the
        // next term; for z > 0 the ratio of terms bounds it geometrically.
        if decreasing && magnitude <= 1e-16 * libm::fabs(sum) {
            break;
        }
        if !magnitude.is_finite() || k > 5_000_000 {
            sum = f64::NAN;
            break;
        }
        k += 1;
    }
    SeriesOutcome { sum, max_term }
}

/// `E_α(−x)` for `x > 0` via
/// `(sin απ / απ) ∫_0^∞ exp(−(s x)^{1/α}) / (s² + 2 s cos απ + 1) ds`.
fn ml_integral(alpha: f64, x: f64) -> Result<f64, FracError> {
    let c = libm::cos(alpha * PI);
    let inv = 1.0 / alpha;
    let integrand = |s: f64| libm::exp(-libm::pow(s * x, inv)) / (s * s + 2.0 * s * c + 1.0);
    let opts = QuadOptions {
        abs_tol: 1e-15,
        rel_tol: 1e-12,
        max_subdivisions: 4000,
    };
    // The denominator peaks near s = 1 when α is close to 1; split there.
    let head = quad::integrate(integrand, 0.0, 1.0, &opts)?;
    let mid = quad::integrate(integrand, 1.0, 2.0, &opts)?;
    let tail = quad::integrate_to_infinity(integrand, 2.0, &opts)?;
    Ok(libm::sin(alpha * PI) / (alpha * PI) * (head.value + mid.value + tail.value))
}

/// Mittag-Leffler function `E_α(z) = Σ z^k / Γ(αk + 1)` for `0 < α ≤ 1`
/// and `|z| ≤ 50`.
///
/// The series is used while cancellation costs fewer than six digits;
/// otherwise, for negative arguments, an integral representation.
pub fn mittag_leffler(alpha: f64, z: f64) -> Result<f64, FracError> {
    let alpha = FracOrder::unit_inclusive(alpha)?.value();
    if !(z.is_finite() && libm::fabs(z) <= 50.0) {
        return Err(FracError::ArgumentOutOfRange(z));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    if alpha == 1.0 {
        return Ok(libm::exp(z));
    }
    let series = ml_series(alpha, z);
    let safe = series.sum.is_finite() && series.max_term <= 1e6 * libm::fabs(series.sum);
    if safe {
        return Ok(series.sum);
    }
    if z < 0.0 {
        return ml_integral(alpha, -z);
    }
    Err(FracError::NonFiniteSeries(z))
}

/// Adams–Bashforth–Moulton predictor-corrector for
/// `D^α (x, y) = field(t, (x, y))` with Caputo derivative and lower terminal
/// `t0`, full memory and one corrector sweep.
///
/// `α = 1` is accepted as a classical regression probe.
pub fn solve_caputo_system<V: VectorField + ?Sized>(
    field: &V,
    alpha: FracOrder,
    initial: [f64; 2],
    t0: f64,
    t_end: f64,
    h: f64,
    escape_radius: f64,
) -> Result<Trajectory, FracError> {
    let span = t_end - t0;
    if !(h > 0.0 && h <= span / 16.0) {
        return Err(FracError::StepTooLarge { h });
    }
    let a = alpha.value();
    let n_steps = libm::ceil(span / h - 1e-9) as usize;
    let pred_scale = libm::pow(h, a) / libm::tgamma(a + 1.0);
    let corr_scale = libm::pow(h, a) / libm::tgamma(a + 2.0);
    let pa = |k: f64| libm::pow(k, a);
    let pa1 = |k: f64| libm::pow(k, a + 1.0);
    // Predictor weights b_k and corrector weights c_k for k = n − j.
    let b: Vec<f64> = (0..=n_steps).map(|k| pa(k as f64 + 1.0) - pa(k as f64)).collect();
    let c: Vec<f64> = (0..=n_steps)
        .map(|k| {
            let k = k as f64;
            pa1(k + 2.0) + pa1(k) - 2.0 * pa1(k + 1.0)
        })
        .collect();

    let time = |i: usize| t0 + h * i as f64;
    let mut samples = Vec::with_capacity(n_steps + 1);
    let mut slopes: Vec<[f64; 2]> = Vec::with_capacity(n_steps + 1);
    let mut state = initial;
    samples.push(Sample {
        t: t0,
        x: state[0],
        y: state[1],
    });
    slopes.push(field.eval_finite(t0, state)?);
    let mut status = Status::Completed;

    for n in 0..n_steps {
        let t_next = time(n + 1);
        let mut pred = initial;
        let mut hist = [0.0; 2];
        let nf = n as f64;
        let a0 = pa1(nf) - (nf - a) * pa(nf + 1.0);
        for (j, fj) in slopes.iter().enumerate() {
            let bw = b[n - j];
            let cw = if j == 0 { a0 } else { c[n - j] };
            for d in 0..2 {
                pred[d] += pred_scale * bw * fj[d];
                hist[d] += cw * fj[d];
            }
        }
        let fp = field.eval_finite(t_next, pred)?;
        for d in 0..2 {
            state[d] = initial[d] + corr_scale * (fp[d] + hist[d]);
        }
        if !(state[0].is_finite() && state[1].is_finite()) {
            return Err(FracError::Field(FieldError::NonFinite {
                t: t_next,
                x: state[0],
                y: state[1],
            }));
        }
        samples.push(Sample {
            t: t_next,
            x: state[0],
            y: state[1],
        });
        if libm::hypot(state[0], state[1]) > escape_radius {
            slopes.push(fp);
            status = Status::Escaped { t_esc: t_next };
            break;
        }
        slopes.push(field.eval_finite(t_next, state)?);
    }
    let accepted = samples.len() - 1;
    Ok(Trajectory {
        samples,
        slopes,
        status,
        stats: StepStats {
            accepted,
            rejected: 0,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaCheck {
    /// `max (lhs − rhs)` over the grid, excluding the first point.
    pub max_violation: f64,
    pub at_t: f64,
    pub f_min: f64,
    pub lipschitz: f64,
}

/// Grid check that `f` is positive and Lipschitz on `[lo, hi]`; returns
/// `(min f, slope bound)`.
pub fn check_positive_lipschitz<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
) -> Result<(f64, f64), FracError> {
    let (lo, hi) = if hi - lo < 1e-6 {
        (lo - 1e-6, hi + 1e-6)
    } else {
        (lo, hi)
    };
    let scan = |n: usize| -> Result<(f64, f64), FracError> {
        let dx = (hi - lo) / n as f64;
        let mut prev = f(lo);
        let mut min = prev;
        let mut slope: f64 = 0.0;
        for i in 0..=n {
            let x = lo + dx * i as f64;
            let v = f(x);
            if !(v.is_finite() && v > 0.0) {
                return Err(FracError::NotPositive { x, value: v });
            }
            if i > 0 {
                slope = slope.max(libm::fabs(v - prev) / dx);
            }
            min = min.min(v);
            prev = v;
        }
        Ok((min, slope))
    };
    let (_, coarse) = scan(200)?;
    let (min, fine) = scan(1600)?;
    if fine > 2.0 * coarse + 1e-9 {
        return Err(FracError::NotLipschitz {
            lo,
            hi,
            coarse,
            fine,
        });
    }
    Ok((min, fine))
}

/// Evaluates both sides of `D^α F(x(t)) ≤ f(x(t)) · D^α x(t)` along the
/// `x` component of a uniformly sampled trajectory, with `F = ∫_0^x f`.
pub fn check_caputo_lemma(
    traj: &Trajectory,
    f: &Expr,
    alpha: FracOrder,
) -> Result<LemmaCheck, FracError> {
    let times: Vec<f64> = traj.samples.iter().map(|s| s.t).collect();
    let xs: Vec<f64> = traj.samples.iter().map(|s| s.x).collect();
    let path = SampledPath::from_times(&times, xs.clone())?;
    let fx = univariate(f, Var::X);
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (f_min, lipschitz) = check_positive_lipschitz(&fx, lo, hi)?;

    let prim = Antiderivative::new(&fx);
    let big_f = xs
        .iter()
        .map(|&x| prim.eval(x))
        .collect::<Result<Vec<f64>, _>>()?;
    let lhs = caputo_l1(&SampledPath::new(path.t0, path.h, big_f), alpha)?;
    let dx = caputo_l1(&path, alpha)?;
    let mut worst = (f64::NEG_INFINITY, path.t0);
    for i in 1..path.len() {
        let v = lhs.values[i] - fx(xs[i]) * dx.values[i];
        if v > worst.0 {
            worst = (v, path.time(i));
        }
    }
    Ok(LemmaCheck {
        max_violation: worst.0,
        at_t: worst.1,
        f_min,
        lipschitz,
    })
}

/// Estimates `lim sup_{h→0+} (V(x) − V(x − h^q f(t, x))) / h^q` for an
/// autonomous `V(x, y)`.
///
/// The quotients along `h_seq` are Richardson-smoothed in `s = h^q`, and the
/// maximum over the second half of the smoothed sequence is returned. This
/// is an estimate; a true upper limit cannot be read off finitely many steps.
pub fn dini_caputo_v<Fld: VectorField + ?Sized>(
    v: &Expr,
    field: &Fld,
    q: f64,
    t: f64,
    state: [f64; 2],
    h_seq: &[f64],
) -> Result<f64, FracError> {
    let q = FracOrder::unit_inclusive(q)?.value();
    let eval_v = |x: f64, y: f64| -> Result<f64, FracError> {
        let b = crate::expr::Bindings::new().t(t).x(x).y(y);
        match v.eval(&b) {
            Ok(val) if val.is_finite() => Ok(val),
            _ => Err(FracError::NonFiniteV { x, y }),
        }
    };
    let d = field.eval_finite(t, state)?;
    let v0 = eval_v(state[0], state[1])?;
    let mut quotients = Vec::with_capacity(h_seq.len());
    for &h in h_seq {
        let s = libm::pow(h, q);
        let back = eval_v(state[0] - s * d[0], state[1] - s * d[1])?;
        quotients.push((s, (v0 - back) / s));
    }
    if quotients.is_empty() {
        return Ok(f64::NAN);
    }
    if quotients.len() == 1 {
        return Ok(quotients[0].1);
    }
    let smoothed: Vec<f64> = quotients
        .windows(2)
        .map(|w| {
            let (s0, q0) = w[0];
            let (s1, q1) = w[1];
            (s0 * q1 - s1 * q0) / (s0 - s1)
        })
        .collect();
    let tail = &smoothed[smoothed.len() / 2..];
    Ok(tail.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// Default step sequence for [`dini_caputo_v`]: `2^{-k}`, `k = 4..16`.
pub fn default_h_seq() -> Vec<f64> {
    (4..=16).map(|k| libm::ldexp(1.0, -k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::field_fn;

    fn order(a: f64) -> FracOrder {
        FracOrder::new(a).unwrap()
    }

    #[test]
    fn l1_constant_and_linear() {
        let p = SampledPath::sample(|_| 5.0, 0.0, 0.01, 100);
        let d = caputo_l1(&p, order(0.5)).unwrap();
        assert!(d.values[0].is_nan());
        assert!(d.values[1..].iter().all(|v| v.abs() < 1e-12));

        let p = SampledPath::sample(|t| t, 0.0, 1e-3, 1000);
        let d = caputo_l1(&p, order(0.5)).unwrap();
        let exact = 2.0 / libm::sqrt(PI);
        assert!((d.values[1000] - exact).abs() < 1e-10);
    }

    #[test]
    fn l1_rejects_non_uniform_grid() {
        let err = SampledPath::from_times(&[0.0, 0.1, 0.25], vec![0.0; 3]).unwrap_err();
        assert_eq!(err, FracError::NonUniform { index: 1 });
        assert!(caputo_l1(&SampledPath::new(0.0, 0.1, vec![1.0, 2.0]), order(0.5)).is_err());
    }

    #[test]
    fn mittag_leffler_special_values() {
        assert!((mittag_leffler(1.0, 1.0).unwrap() - core::f64::consts::E).abs() < 1e-14);
        assert_eq!(mittag_leffler(0.3, 0.0).unwrap(), 1.0);
        assert!(mittag_leffler(0.5, 51.0).is_err());
        assert!(mittag_leffler(1.5, 1.0).is_err());
    }

    #[test]
    fn series_and_integral_agree() {
        for &(a, x) in &[(0.5, 1.0), (0.7, 2.0), (0.9, 0.5), (0.3, 0.4)] {
            let s = ml_series(a, -x).sum;
            let i = ml_integral(a, x).unwrap();
            assert!((s - i).abs() < 1e-10, "α={a} x={x}: {s} vs {i}");
        }
    }

    #[test]
    fn mittag_leffler_large_negative_argument() {
        // E_α(−x) decays like x^{-1}/Γ(1−α) for large x.
        let v = mittag_leffler(0.3, -40.0).unwrap();
        let asym = 1.0 / (40.0 * libm::tgamma(0.7));
        assert!(v > 0.0 && (v - asym).abs() < 0.1 * asym, "{v} vs {asym}");
    }

    #[test]
    fn abm_classical_limit() {
        let field = field_fn(|_, s| [-s[0], 0.0]);
        let alpha = FracOrder::unit_inclusive(1.0).unwrap();
        let traj = solve_caputo_system(&field, alpha, [1.0, 0.0], 0.0, 1.0, 1e-3, 1e6).unwrap();
        let end = traj.last().unwrap();
        assert!((end.t - 1.0).abs() < 1e-12);
        assert!((end.x - (-1.0f64).exp()).abs() < 1e-4);
    }

    #[test]
    fn abm_relaxation_matches_mittag_leffler() {
        let field = field_fn(|_, s| [-s[0], 0.0]);
        let traj = solve_caputo_system(&field, order(0.5), [1.0, 0.0], 0.0, 1.0, 1e-3, 1e6).unwrap();
        let end = traj.last().unwrap();
        let exact = mittag_leffler(0.5, -1.0).unwrap();
        assert!((end.x - exact).abs() < 2e-3, "{} vs {exact}", end.x);
    }

    #[test]
    fn abm_escape_and_step_checks() {
        let field = field_fn(|_, s| [s[0], 0.0]);
        let traj = solve_caputo_system(&field, order(0.5), [1.0, 0.0], 0.0, 20.0, 0.01, 100.0).unwrap();
        assert!(matches!(traj.status, Status::Escaped { .. }));
        assert!(solve_caputo_system(&field, order(0.5), [1.0, 0.0], 0.0, 1.0, 0.1, 1e6).is_err());
        let bad = field_fn(|_, s| [1.0 / (s[0] - 1.0), 0.0]);
        assert!(solve_caputo_system(&bad, order(0.5), [1.0, 0.0], 0.0, 1.0, 0.01, 1e6).is_err());
    }

    #[test]
    fn lemma_equality_case() {
        let field = field_fn(|_, s| [s[1], -s[0]]);
        let traj = solve_caputo_system(&field, order(0.5), [1.0, 0.0], 0.0, 2.0, 0.01, 1e6).unwrap();
        let f: Expr = "1".parse().unwrap();
        let check = check_caputo_lemma(&traj, &f, order(0.5)).unwrap();
        assert!(check.max_violation.abs() <= 1e-10);
    }

    #[test]
    fn lemma_monotone_path() {
        let samples = (0..=1000)
            .map(|i| {
                let t = i as f64 * 1e-3;
                Sample { t, x: t, y: 0.0 }
            })
            .collect();
        let traj = Trajectory::from_samples(samples, Status::Completed);
        let f: Expr = "2+sin(x)".parse().unwrap();
        let check = check_caputo_lemma(&traj, &f, order(0.5)).unwrap();
        assert!(check.max_violation <= 1e-3, "{check:?}");
    }

    #[test]
    fn lemma_fails_without_monotone_f() {
        // Along x = t the inequality needs f nondecreasing on the visited
        // range; past the maximum of 2 + cos(x) it is violated.
        let samples = (0..=500)
            .map(|i| {
                let t = i as f64 * 1e-2;
                Sample { t, x: t, y: 0.0 }
            })
            .collect();
        let traj = Trajectory::from_samples(samples, Status::Completed);
        let f: Expr = "2+cos(x)".parse().unwrap();
        let check = check_caputo_lemma(&traj, &f, order(0.5)).unwrap();
        assert!(check.max_violation > 1e-2, "{check:?}");
    }

    #[test]
    fn lemma_preconditions() {
        let samples = (0..=100)
            .map(|i| {
                let t = i as f64 * 1e-2;
                Sample { t, x: t - 0.5, y: 0.0 }
            })
            .collect();
        let traj = Trajectory::from_samples(samples, Status::Completed);
        let f: Expr = "x".parse().unwrap();
        assert!(matches!(
            check_caputo_lemma(&traj, &f, order(0.5)),
            Err(FracError::NotPositive { .. })
        ));
        let f: Expr = "1+sqrt(abs(x))".parse().unwrap();
        assert!(matches!(
            check_caputo_lemma(&traj, &f, order(0.5)),
            Err(FracError::NotLipschitz { .. })
        ));
    }

    #[test]
    fn dini_estimates() {
        let v: Expr = "x^2+y^2".parse().unwrap();
        let zero = field_fn(|_, _| [0.0, 0.0]);
        let h = default_h_seq();
        assert_eq!(dini_caputo_v(&v, &zero, 0.5, 0.0, [1.0, 0.0], &h).unwrap(), 0.0);

        let osc = field_fn(|_, s| [s[1], -s[0]]);
        let d = dini_caputo_v(&v, &osc, 0.5, 0.0, [1.0, 0.0], &h).unwrap();
        assert!(d <= 1e-8, "{d}");

        let x: Expr = "x".parse().unwrap();
        let unit = field_fn(|_, _| [1.0, 0.0]);
        let d = dini_caputo_v(&x, &unit, 1.0, 0.0, [0.3, 0.0], &h).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
    }
}
