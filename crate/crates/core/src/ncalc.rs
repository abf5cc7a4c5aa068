//! The N-derivative and its integral operator `J`.
//!
//! For a kernel `F` and order `α`, the N-derivative of a differentiable
//! `f` is `N f(t) = F(t, α) f'(t)` and the integral operator is
//! `J_a f(x) = ∫_a^x f(t) / F(t, α) dt`. This module evaluates both, the
//! raw limit quotient that defines `N`, the improper version of `J`, and
//! residual checks for the calculus identities that tie them together.

use alloc::vec::Vec;

use crate::expr::{Bindings, EvalError, Expr, Var};
use crate::kernel::{Kernel, KernelError};
use crate::quad::{self, QuadError, QuadOptions};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NCalcError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error("function is not finite near t = {at}")]
    NonFinite { at: f64 },
    #[error("interval [{a}, {b}] is empty or reversed")]
    Interval { a: f64, b: f64 },
    #[error("lower limit {a} lies outside the domain of the `{kernel}` kernel")]
    Domain { a: f64, kernel: &'static str },
    #[error("identity `{0:?}` needs a second function `g`")]
    MissingSecondFunction(Identity),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum NDerivMethod {
    ProductForm,
    LimitQuotient,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NDerivResult {
    pub value: f64,
    pub method: NDerivMethod,
    pub est_error: f64,
    /// False when the limit quotient did not settle (for instance the one
    /// sided limits differ at a kink).
    pub converged: bool,
}

/// Evaluates an expression as a function of one variable, mapping
/// evaluation failures to NaN.
pub fn univariate(expr: &Expr, var: Var) -> impl Fn(f64) -> f64 + '_ {
    move |v| {
        expr.eval(&Bindings::new().set(var, v))
            .unwrap_or(f64::NAN)
    }
}

fn finite_at<F: Fn(f64) -> f64>(f: &F, t: f64) -> Result<f64, NCalcError> {
    let v = f(t);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(NCalcError::NonFinite { at: t })
    }
}

/// Central difference derivative with one Richardson step.
/// Returns `(extrapolated, |extrapolated - raw|)`.
pub fn richardson_derivative<F: Fn(f64) -> f64>(
    f: &F,
    t: f64,
    h: f64,
) -> Result<(f64, f64), NCalcError> {
    let d1 = (finite_at(f, t + h)? - finite_at(f, t - h)?) / (2.0 * h);
    let d2 = (finite_at(f, t + 2.0 * h)? - finite_at(f, t - 2.0 * h)?) / (4.0 * h);
    let extrapolated = (4.0 * d1 - d2) / 3.0;
    Ok((extrapolated, libm::fabs(extrapolated - d1)))
}

pub fn default_step(t: f64) -> f64 {
    libm::fmax(1e-6, 1e-6 * libm::fabs(t))
}

/// Product form `F(t, α) f'(t)` for an arbitrary function of `t`.
pub fn n_derivative_fn<F: Fn(f64) -> f64>(
    f: &F,
    kernel: &Kernel,
    alpha: f64,
    t: f64,
) -> Result<NDerivResult, NCalcError> {
    let weight = kernel.eval(t, alpha)?;
    let (slope, err) = richardson_derivative(f, t, default_step(t))?;
    Ok(NDerivResult {
        value: weight * slope,
        method: NDerivMethod::ProductForm,
        est_error: libm::fabs(weight) * err,
        converged: true,
    })
}

/// `N_F^α f(t)` for an expression in `t`, via the product form.
pub fn n_derivative(
    f: &Expr,
    kernel: &Kernel,
    alpha: f64,
    t: f64,
) -> Result<NDerivResult, NCalcError> {
    n_derivative_fn(&univariate(f, Var::T), kernel, alpha, t)
}

/// Default ε schedule for the limit quotient: the first perturbation
/// `ε F` is 2% of the local scale, then halved seven times.
pub fn default_epsilons(weight: f64, t: f64) -> Vec<f64> {
    let first = 0.02 * libm::fmax(1.0, libm::fabs(t)) / weight;
    (0..8).map(|i| first / (1u64 << i) as f64).collect()
}

/// Neville extrapolation of `q(ε)` to `ε = 0`, keeping the tableau entry
/// with the smallest local disagreement. Returns `(estimate, error)`.
fn extrapolate_to_zero(eps: &[f64], q: &[f64]) -> (f64, f64) {
    let n = eps.len();
    let mut prev: Vec<f64> = Vec::with_capacity(n);
    let mut best = (q[n - 1], f64::INFINITY);
    for i in 0..n {
        let mut row = Vec::with_capacity(i + 1);
        row.push(q[i]);
        for j in 1..=i {
            let (far, near) = (eps[i - j], eps[i]);
            let value = (far * row[j - 1] - near * prev[j - 1]) / (far - near);
            let err = libm::fmax(
                libm::fabs(value - row[j - 1]),
                libm::fabs(value - prev[j - 1]),
            );
            if err <= best.1 {
                best = (value, err);
            }
            row.push(value);
        }
        if i > 0 && libm::fabs(row[i] - prev[i - 1]) > 2.0 * best.1 {
            break;
        }
        prev = row;
    }
    best
}

fn one_sided_limit<F: Fn(f64) -> f64>(
    f: &F,
    t: f64,
    weight: f64,
    eps: &[f64],
    sign: f64,
) -> Result<(f64, f64), NCalcError> {
    let base = finite_at(f, t)?;
    let mut signed = Vec::with_capacity(eps.len());
    let mut quotients = Vec::with_capacity(eps.len());
    for &e in eps {
        let e = sign * e;
        let shifted = finite_at(f, t + e * weight)?;
        signed.push(e);
        quotients.push((shifted - base) / e);
    }
    Ok(extrapolate_to_zero(&signed, &quotients))
}

/// Two-sided limit of `(f(t + ε w) - f(t)) / ε` over `eps` (positive,
/// decreasing), with `w` the kernel weight.
fn limit_quotient<F: Fn(f64) -> f64>(
    f: &F,
    t: f64,
    weight: f64,
    eps: &[f64],
) -> Result<NDerivResult, NCalcError> {
    let eps = if eps.is_empty() {
        default_epsilons(weight, t)
    } else {
        eps.to_vec()
    };
    let (right, _) = one_sided_limit(f, t, weight, &eps, 1.0)?;
    let (left, _) = one_sided_limit(f, t, weight, &eps, -1.0)?;
    // The symmetric quotient is even in ε, so extrapolate in ε².
    let mut squares = Vec::with_capacity(eps.len());
    let mut central = Vec::with_capacity(eps.len());
    for &e in &eps {
        let up = finite_at(f, t + e * weight)?;
        let down = finite_at(f, t - e * weight)?;
        squares.push(e * e);
        central.push((up - down) / (2.0 * e));
    }
    let (value, central_err) = extrapolate_to_zero(&squares, &central);
    // One-sided limits only serve to expose kinks.
    let est_error = libm::fmax(central_err, 0.5 * libm::fabs(right - left));
    let tol = 1e-6 * libm::fmax(1.0, libm::fabs(value));
    Ok(NDerivResult {
        value,
        method: NDerivMethod::LimitQuotient,
        est_error,
        converged: est_error <= tol,
    })
}

/// `N_F^α f(t)` straight from the defining limit. An empty `eps` selects
/// [`default_epsilons`].
pub fn n_derivative_quotient(
    f: &Expr,
    kernel: &Kernel,
    alpha: f64,
    t: f64,
    eps: &[f64],
) -> Result<NDerivResult, NCalcError> {
    let weight = kernel.eval(t, alpha)?;
    limit_quotient(&univariate(f, Var::T), t, weight, eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Generalized partial N-derivative of `f(x, y)` along `axis`. The kernel
/// is evaluated at `scale_t`, defaulting to the perturbed coordinate.
pub fn partial_n_derivative(
    f: &Expr,
    axis: Axis,
    kernel: &Kernel,
    gamma: f64,
    point: (f64, f64),
    scale_t: Option<f64>,
) -> Result<NDerivResult, NCalcError> {
    let along_x = |x: f64| f.eval(&Bindings::new().x(x).y(point.1)).unwrap_or(f64::NAN);
    let along_y = |y: f64| f.eval(&Bindings::new().x(point.0).y(y)).unwrap_or(f64::NAN);
    let (coord, g): (f64, &dyn Fn(f64) -> f64) = match axis {
        Axis::X => (point.0, &along_x),
        Axis::Y => (point.1, &along_y),
    };
    let weight = kernel.eval(scale_t.unwrap_or(coord), gamma)?;
    limit_quotient(&g, coord, weight, &[])
}

/// `∫_a^x f(t) / F(t, α) dt` for any integrand. Power-type kernel
/// singularities at `a = 0` are removed by substitution.
pub fn j_integral<F: Fn(f64) -> f64>(
    f: &F,
    kernel: &Kernel,
    alpha: f64,
    a: f64,
    x: f64,
    opts: &QuadOptions,
) -> Result<f64, NCalcError> {
    crate::kernel::check_order(alpha)?;
    if !(x >= a) {
        return Err(NCalcError::Interval { a, b: x });
    }
    if kernel.singular_at_zero() && a < 0.0 {
        return Err(NCalcError::Domain {
            a,
            kernel: kernel.name(),
        });
    }
    let integrand = |t: f64| f(t) * kernel.reciprocal(t, alpha).unwrap_or(f64::NAN);
    let result = match kernel.reciprocal_singularity(alpha) {
        Some(beta) if a == 0.0 => quad::integrate_left_power_singular(integrand, a, x, beta, opts)?,
        _ => quad::integrate(integrand, a, x, opts)?,
    };
    Ok(result.value)
}

/// Left operator `J_{F,a+}^α f(x)`, `a < x`.
pub fn j_left(f: &Expr, kernel: &Kernel, alpha: f64, a: f64, x: f64) -> Result<f64, NCalcError> {
    j_integral(&univariate(f, Var::T), kernel, alpha, a, x, &QuadOptions::default())
}

/// Right operator `J_{F,b-}^α f(x) = ∫_x^b f(t) / F(t, α) dt`, `x < b`.
pub fn j_right(f: &Expr, kernel: &Kernel, alpha: f64, x: f64, b: f64) -> Result<f64, NCalcError> {
    j_integral(&univariate(f, Var::T), kernel, alpha, x, b, &QuadOptions::default())
}

/// `∫_0^x f(s) / F(|s|, α) ds` for either sign of `x`; the kernel is
/// applied to the distance from the origin.
pub fn j_signed_axis<F: Fn(f64) -> f64>(
    f: &F,
    kernel: &Kernel,
    alpha: f64,
    x: f64,
    opts: &QuadOptions,
) -> Result<f64, NCalcError> {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let mirrored = |u: f64| f(sign * u);
    Ok(sign * j_integral(&mirrored, kernel, alpha, 0.0, libm::fabs(x), opts)?)
}

/// Doubling-horizon schedule for improper integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Horizons {
    pub first: f64,
    pub doublings: u32,
    /// Convergence threshold on the last partial-integral increment.
    pub tol_abs: f64,
}

impl Default for Horizons {
    fn default() -> Self {
        Self {
            first: 10.0,
            doublings: 12,
            tol_abs: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "status"))]
pub enum DivergenceStatus {
    Converged { value: f64 },
    Diverging { growth_exponent: f64, positive: bool },
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DivergenceVerdict {
    pub status: DivergenceStatus,
    /// `(T, ∫_a^T)` for each horizon.
    pub horizons: Vec<(f64, f64)>,
}

impl DivergenceVerdict {
    pub fn is_converged(&self) -> bool {
        matches!(self.status, DivergenceStatus::Converged { .. })
    }

    pub fn diverges_to(&self, positive: bool) -> bool {
        matches!(self.status, DivergenceStatus::Diverging { positive: p, .. } if p == positive)
    }
}

/// Classifies a sequence of partial integrals over doubling horizons.
///
/// Converged when the last increment is below `tol_abs` and increments are
/// shrinking; diverging when the last three increments keep one sign and
/// do not shrink by more than 10% per doubling.
pub fn classify_growth(horizons: &[(f64, f64)], tol_abs: f64) -> DivergenceStatus {
    let n = horizons.len();
    if n < 4 {
        return DivergenceStatus::Inconclusive;
    }
    let inc: Vec<f64> = horizons.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let m = inc.len();
    let last = inc[m - 1];
    let tail = &inc[m - 3..];
    let ratios: Vec<f64> = tail
        .windows(2)
        .map(|w| if w[0] == 0.0 { 0.0 } else { w[1] / w[0] })
        .collect();
    let final_value = horizons[n - 1].1;

    let shrinking = ratios.iter().all(|r| libm::fabs(*r) < 1.0);
    if libm::fabs(last) < tol_abs && (shrinking || libm::fabs(last) < 1e-12) {
        let r = ratios[ratios.len() - 1];
        let extrapolated = if r > 0.0 && r < 1.0 {
            last * r / (1.0 - r)
        } else {
            0.0
        };
        return DivergenceStatus::Converged {
            value: final_value + extrapolated,
        };
    }

    let same_sign = tail.iter().all(|d| *d > 0.0) || tail.iter().all(|d| *d < 0.0);
    let sustained = ratios.iter().all(|r| *r >= 0.9);
    if same_sign && sustained {
        let pts = &horizons[n - 4..];
        let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        let k = pts.len() as f64;
        for &(t, v) in pts {
            let lx = libm::log(t);
            let ly = libm::log(libm::fabs(v).max(f64::MIN_POSITIVE));
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
        }
        let slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
        return DivergenceStatus::Diverging {
            growth_exponent: slope,
            positive: last > 0.0,
        };
    }
    DivergenceStatus::Inconclusive
}

/// Improper integral `∫_a^∞ f(t) / F(t, α) dt` probed on horizons
/// `a + T, a + 2T, …`.
pub fn j_improper_fn<F: Fn(f64) -> f64>(
    f: &F,
    kernel: &Kernel,
    alpha: f64,
    a: f64,
    schedule: &Horizons,
) -> Result<DivergenceVerdict, NCalcError> {
    let opts = QuadOptions {
        abs_tol: 1e-10,
        rel_tol: 1e-10,
        max_subdivisions: 4000,
    };
    let mut horizons = Vec::with_capacity(schedule.doublings as usize + 1);
    let mut lower = a;
    let mut total = 0.0;
    for k in 0..=schedule.doublings {
        let upper = a + schedule.first * (1u64 << k) as f64;
        total += j_integral(f, kernel, alpha, lower, upper, &opts)?;
        horizons.push((upper, total));
        lower = upper;
    }
    Ok(DivergenceVerdict {
        status: classify_growth(&horizons, schedule.tol_abs),
        horizons,
    })
}

/// Improper integral of an expression in `t`. Quadrature failures yield an
/// inconclusive verdict instead of an error.
pub fn j_improper(
    f: &Expr,
    kernel: &Kernel,
    alpha: f64,
    a: f64,
    schedule: &Horizons,
) -> DivergenceVerdict {
    j_improper_fn(&univariate(f, Var::T), kernel, alpha, a, schedule).unwrap_or(DivergenceVerdict {
        status: DivergenceStatus::Inconclusive,
        horizons: Vec::new(),
    })
}

/// Calculus identities with numerical residual checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Identity {
    /// `J(N f)(x) = f(x) - f(a)`.
    Fundamental,
    /// `N(J f)(x) = f(x)`.
    Inverse,
    /// `J(k₁ f + k₂ g) = k₁ J f + k₂ J g`.
    Linearity,
    /// `f ≥ g ⇒ J f ≥ J g`.
    Monotone,
    /// `|J f| ≤ J |f|`.
    Triangle,
    /// `J(f N g) = [f g]_a^x - J(g N f)`.
    Parts,
    /// `|N f| ≤ sup|F| (sup|f| + sup|f'|)`.
    NormBound,
}

#[derive(Debug, Clone)]
pub struct IdentityInstance {
    pub f: Expr,
    pub g: Option<Expr>,
    pub k1: f64,
    pub k2: f64,
    pub kernel: Kernel,
    pub alpha: f64,
    pub a: f64,
    pub b: f64,
    /// Number of evaluation points in `(a, b]`.
    pub grid_points: usize,
}

impl IdentityInstance {
    pub fn new(f: Expr, kernel: Kernel, alpha: f64, a: f64, b: f64) -> Self {
        Self {
            f,
            g: None,
            k1: 1.0,
            k2: 1.0,
            kernel,
            alpha,
            a,
            b,
            grid_points: 10,
        }
    }

    pub fn with_g(mut self, g: Expr) -> Self {
        self.g = Some(g);
        self
    }

    pub fn with_coefficients(mut self, k1: f64, k2: f64) -> Self {
        self.k1 = k1;
        self.k2 = k2;
        self
    }

    pub fn with_grid(mut self, points: usize) -> Self {
        self.grid_points = points.max(1);
        self
    }

    fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.grid_points;
        (1..=n).map(move |i| self.a + (self.b - self.a) * i as f64 / n as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IdentityReport {
    pub identity: Identity,
    /// Largest residual (equalities) or largest excess (inequalities).
    pub max_residual: f64,
    /// Grid points where an inequality failed beyond quadrature tolerance.
    pub violations: usize,
    pub points: usize,
}

/// Slack allowed on inequalities for quadrature error.
const INEQUALITY_SLACK: f64 = 1e-8;

/// Evaluates the residual of `identity` on the instance's grid.
pub fn check_identity(
    identity: Identity,
    inst: &IdentityInstance,
) -> Result<IdentityReport, NCalcError> {
    let opts = QuadOptions {
        abs_tol: 1e-11,
        rel_tol: 1e-12,
        max_subdivisions: 2000,
    };
    let f = univariate(&inst.f, Var::T);
    let g_expr = || {
        inst.g
            .as_ref()
            .ok_or(NCalcError::MissingSecondFunction(identity))
    };
    let kernel = &inst.kernel;
    let alpha = inst.alpha;
    let a = inst.a;
    let j = |h: &dyn Fn(f64) -> f64, x: f64| j_integral(&h, kernel, alpha, a, x, &opts);
    // Integrands containing a numerical derivative carry noise near 1e-11,
    // below which adaptive refinement cannot go.
    let noisy = QuadOptions {
        abs_tol: 1e-9,
        rel_tol: 1e-9,
        ..opts
    };
    let j_noisy = |h: &dyn Fn(f64) -> f64, x: f64| j_integral(&h, kernel, alpha, a, x, &noisy);
    let n_of = |h: &dyn Fn(f64) -> f64, t: f64| {
        n_derivative_fn(&h, kernel, alpha, t)
            .map(|r| r.value)
            .unwrap_or(f64::NAN)
    };

    let mut max_residual: f64 = 0.0;
    let mut violations = 0;
    let mut points = 0;
    let mut record = |residual: f64, violated: bool| {
        max_residual = max_residual.max(residual);
        points += 1;
        if violated {
            violations += 1;
        }
    };

    match identity {
        Identity::Fundamental => {
            let fa = finite_at(&f, a)?;
            let nf = |t: f64| n_of(&f, t);
            for x in inst.grid() {
                let lhs = j_noisy(&nf, x)?;
                let rhs = finite_at(&f, x)? - fa;
                record(libm::fabs(lhs - rhs), false);
            }
        }
        Identity::Inverse => {
            for x in inst.grid() {
                // J f(x ± δ) - J f(x ∓ δ) by additivity of J over intervals.
                let mut delta = 1e-3 * libm::fmax(1.0, libm::fabs(x));
                if kernel.singular_at_zero() {
                    delta = delta.min(x / 4.0);
                }
                let spread = |d: f64| -> Result<f64, NCalcError> {
                    let width = j_integral(&f, kernel, alpha, x - d, x + d, &opts)?;
                    Ok(width / (2.0 * d))
                };
                let d1 = spread(delta)?;
                let d2 = spread(2.0 * delta)?;
                let slope = (4.0 * d1 - d2) / 3.0;
                let lhs = kernel.eval(x, alpha)? * slope;
                record(libm::fabs(lhs - finite_at(&f, x)?), false);
            }
        }
        Identity::Linearity => {
            let g = univariate(g_expr()?, Var::T);
            let (k1, k2) = (inst.k1, inst.k2);
            let combo = |t: f64| k1 * f(t) + k2 * g(t);
            for x in inst.grid() {
                let lhs = j(&combo, x)?;
                let rhs = k1 * j(&f, x)? + k2 * j(&g, x)?;
                record(libm::fabs(lhs - rhs), false);
            }
        }
        Identity::Monotone => {
            let g = univariate(g_expr()?, Var::T);
            for x in inst.grid() {
                let excess = j(&g, x)? - j(&f, x)?;
                record(excess.max(0.0), excess > INEQUALITY_SLACK);
            }
        }
        Identity::Triangle => {
            let abs_f = |t: f64| libm::fabs(f(t));
            for x in inst.grid() {
                let excess = libm::fabs(j(&f, x)?) - j(&abs_f, x)?;
                record(excess.max(0.0), excess > INEQUALITY_SLACK);
            }
        }
        Identity::Parts => {
            let g = univariate(g_expr()?, Var::T);
            let f_ng = |t: f64| f(t) * n_of(&g, t);
            let g_nf = |t: f64| g(t) * n_of(&f, t);
            let fg_a = finite_at(&f, a)? * finite_at(&g, a)?;
            for x in inst.grid() {
                let lhs = j_noisy(&f_ng, x)?;
                let rhs = finite_at(&f, x)? * finite_at(&g, x)? - fg_a - j_noisy(&g_nf, x)?;
                record(libm::fabs(lhs - rhs), false);
            }
        }
        Identity::NormBound => {
            let grid: Vec<f64> = core::iter::once(a).chain(inst.grid()).collect();
            let mut sup_kernel: f64 = 0.0;
            let mut sup_f: f64 = 0.0;
            let mut sup_df: f64 = 0.0;
            let mut nf = Vec::with_capacity(grid.len());
            for &t in &grid {
                sup_kernel = sup_kernel.max(libm::fabs(kernel.eval(t, alpha)?));
                sup_f = sup_f.max(libm::fabs(finite_at(&f, t)?));
                sup_df = sup_df.max(libm::fabs(richardson_derivative(&f, t, default_step(t))?.0));
                nf.push(n_derivative_fn(&f, kernel, alpha, t)?.value);
            }
            let bound = sup_kernel * (sup_f + sup_df);
            for v in nf {
                let excess = libm::fabs(v) - bound;
                record(excess.max(0.0), excess > 1e-12 * bound.max(1.0));
            }
        }
    }
    Ok(IdentityReport {
        identity,
        max_residual,
        violations,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelKind;

    fn k(kind: &str) -> Kernel {
        Kernel::new(kind.parse::<KernelKind>().unwrap())
    }

    fn e(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    #[test]
    fn product_form_examples() {
        let r = n_derivative(&e("t^2"), &k("conf_khalil"), 0.5, 1.0).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9);
        assert_eq!(r.method, NDerivMethod::ProductForm);
        let r = n_derivative(&e("t"), &Kernel::ordinary(), 0.3, 7.0).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
        // e^{1} cos(1), evaluated directly.
        let want = core::f64::consts::E * libm::cos(1.0);
        let r = n_derivative(&e("sin(t)"), &k("nc_exp_inv"), 0.5, 1.0).unwrap();
        assert!((r.value - want).abs() < 1e-9, "{} vs {want}", r.value);
    }

    #[test]
    fn quotient_examples() {
        let r = n_derivative_quotient(&e("t^2"), &k("conf_khalil"), 0.5, 1.0, &[]).unwrap();
        assert!(r.converged);
        assert!((r.value - 2.0).abs() < 1e-6);
        let r = n_derivative_quotient(&e("exp(t)"), &k("conf_exp"), 0.5, 0.0, &[]).unwrap();
        assert!(r.converged);
        assert!((r.value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn quotient_flags_kink() {
        for kernel in [Kernel::ordinary(), k("conf_khalil"), k("nc_exp_inv")] {
            let r = n_derivative_quotient(&e("abs(t-1)"), &kernel, 0.5, 1.0, &[]).unwrap();
            assert!(!r.converged, "{}", kernel.name());
        }
    }

    #[test]
    fn quotient_accepts_custom_schedule() {
        let eps = [0.1, 0.05, 0.02, 0.01, 0.005];
        let r = n_derivative_quotient(&e("sin(t)"), &Kernel::ordinary(), 0.5, 0.3, &eps).unwrap();
        assert!((r.value - libm::cos(0.3)).abs() < 1e-8);
    }

    #[test]
    fn partial_examples() {
        let r = partial_n_derivative(&e("x*y"), Axis::X, &Kernel::ordinary(), 0.5, (2.0, 3.0), None)
            .unwrap();
        assert!((r.value - 3.0).abs() < 1e-8);
        let r = partial_n_derivative(
            &e("x^2+y^2"),
            Axis::Y,
            &k("conf_khalil"),
            0.5,
            (1.0, 4.0),
            Some(4.0),
        )
        .unwrap();
        assert!((r.value - 16.0).abs() < 1e-7);
        let pi = core::f64::consts::PI;
        let r = partial_n_derivative(&e("sin(x)*y"), Axis::X, &k("nc_pow_pos"), 0.5, (pi, 1.0), None)
            .unwrap();
        assert!((r.value + libm::sqrt(pi)).abs() < 1e-7, "{}", r.value);
    }

    #[test]
    fn partial_needs_positive_coordinate_for_singular_kernel() {
        let r = partial_n_derivative(&e("x"), Axis::X, &k("conf_khalil"), 0.5, (-1.0, 0.0), None);
        assert!(matches!(r, Err(NCalcError::Kernel(_))));
    }

    #[test]
    fn j_closed_forms() {
        let khalil = k("conf_khalil");
        assert!((j_left(&e("1"), &khalil, 0.5, 0.0, 1.0).unwrap() - 2.0).abs() < 1e-9);
        assert!((j_left(&e("t"), &khalil, 0.5, 0.0, 1.0).unwrap() - 2.0 / 3.0).abs() < 1e-9);
        for alpha in [0.1, 0.3, 0.9] {
            let v = j_left(&e("t"), &khalil, alpha, 0.0, 1.0).unwrap();
            assert!((v - 1.0 / (alpha + 1.0)).abs() < 1e-9);
        }
        let ord = Kernel::ordinary();
        assert!((j_right(&e("1"), &ord, 0.5, 0.0, 3.0).unwrap() - 3.0).abs() < 1e-12);
        assert!((j_right(&e("t"), &ord, 0.5, 0.0, 2.0).unwrap() - 2.0).abs() < 1e-12);
        assert!((j_right(&e("1"), &khalil, 0.5, 0.0, 1.0).unwrap() - 2.0).abs() < 1e-9);
        // t^{-α} near zero for the t^α kernel.
        let v = j_left(&e("1"), &k("nc_pow_pos"), 0.8, 0.0, 1.0).unwrap();
        assert!((v - 5.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn j_rejects_bad_domain() {
        assert!(matches!(
            j_left(&e("1"), &k("conf_khalil"), 0.5, -1.0, 1.0),
            Err(NCalcError::Domain { .. })
        ));
        assert!(matches!(
            j_left(&e("1"), &Kernel::ordinary(), 0.5, 2.0, 1.0),
            Err(NCalcError::Interval { .. })
        ));
        assert!(matches!(
            j_left(&e("1/t"), &Kernel::ordinary(), 0.5, 0.0, 1.0),
            Err(NCalcError::Quad(_))
        ));
    }

    #[test]
    fn signed_axis_integral() {
        let g = |x: f64| x;
        let opts = QuadOptions::default();
        let plus = j_signed_axis(&g, &Kernel::ordinary(), 0.5, 2.0, &opts).unwrap();
        let minus = j_signed_axis(&g, &Kernel::ordinary(), 0.5, -2.0, &opts).unwrap();
        assert!((plus - 2.0).abs() < 1e-12 && (minus - 2.0).abs() < 1e-12);
    }

    #[test]
    fn improper_examples() {
        let v = j_improper(&e("1/(t^2)"), &Kernel::ordinary(), 0.5, 1.0, &Horizons::default());
        match v.status {
            DivergenceStatus::Converged { value } => assert!((value - 1.0).abs() < 1e-6, "{value}"),
            other => panic!("{other:?}"),
        }
        assert_eq!(v.horizons.len(), 13);

        let v = j_improper(&e("t"), &k("nc_exp_inv"), 0.5, 1.0, &Horizons::default());
        match v.status {
            DivergenceStatus::Diverging { growth_exponent, positive } => {
                assert!(positive);
                assert!((growth_exponent - 2.0).abs() < 0.05, "{growth_exponent}");
            }
            other => panic!("{other:?}"),
        }

        let v = j_improper(&e("exp(-t)"), &k("conf_khalil"), 0.5, 0.0, &Horizons::default());
        match v.status {
            DivergenceStatus::Converged { value } => {
                assert!((value - libm::sqrt(core::f64::consts::PI)).abs() < 1e-8, "{value}")
            }
            other => panic!("{other:?}"),
        }

        let v = j_improper(&e("-1/t"), &Kernel::ordinary(), 0.5, 1.0, &Horizons::default());
        assert!(v.diverges_to(false), "{:?}", v.status);

        let v = j_improper(&e("sin(t)"), &Kernel::ordinary(), 0.5, 0.0, &Horizons::default());
        assert_eq!(v.status, DivergenceStatus::Inconclusive);
    }

    #[test]
    fn identity_examples() {
        let inst = IdentityInstance::new(e("sin(t)"), k("conf_exp"), 0.5, 0.0, 1.0);
        let r = check_identity(Identity::Fundamental, &inst).unwrap();
        assert!(r.max_residual <= 1e-6, "{r:?}");

        let inst = IdentityInstance::new(e("t"), k("conf_khalil"), 0.5, 0.1, 1.0).with_g(e("t^2"));
        let r = check_identity(Identity::Parts, &inst).unwrap();
        assert!(r.max_residual <= 1e-6, "{r:?}");

        let inst = IdentityInstance::new(e("cos(t)"), k("nc_exp_inv"), 0.3, 1.0, 2.0).with_grid(50);
        let r = check_identity(Identity::Inverse, &inst).unwrap();
        assert_eq!(r.points, 50);
        assert!(r.max_residual <= 1e-6, "{r:?}");
    }

    #[test]
    fn inequalities_hold() {
        let inst = IdentityInstance::new(e("2 + sin(5*t)"), k("nc_pow_neg"), 0.4, 0.0, 3.0)
            .with_g(e("1 + sin(5*t)"));
        let r = check_identity(Identity::Monotone, &inst).unwrap();
        assert_eq!(r.violations, 0);
        let inst = IdentityInstance::new(e("sin(5*t)"), k("conf_khalil"), 0.4, 0.0, 3.0);
        let r = check_identity(Identity::Triangle, &inst).unwrap();
        assert_eq!(r.violations, 0);
        let inst = IdentityInstance::new(e("t^3 - t"), k("conf_exp"), 0.4, 0.0, 2.0);
        let r = check_identity(Identity::NormBound, &inst).unwrap();
        assert_eq!(r.violations, 0);
    }

    #[test]
    fn monotone_detects_swapped_pair() {
        // g > f, so J g > J f must show up as violations.
        let inst = IdentityInstance::new(e("1"), Kernel::ordinary(), 0.5, 0.0, 1.0).with_g(e("2"));
        let r = check_identity(Identity::Monotone, &inst).unwrap();
        assert_eq!(r.violations, r.points);
    }

    #[test]
    fn missing_g_is_an_error() {
        let inst = IdentityInstance::new(e("t"), Kernel::ordinary(), 0.5, 0.0, 1.0);
        assert!(matches!(
            check_identity(Identity::Parts, &inst),
            Err(NCalcError::MissingSecondFunction(Identity::Parts))
        ));
    }
}
