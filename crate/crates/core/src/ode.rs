//! Planar vector fields, trajectories and a Dormand–Prince 5(4)
//! integrator with PI step-size control.

use alloc::vec::Vec;

use crate::expr::EvalError;
use crate::kernel::KernelError;
use crate::quad::QuadError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FieldError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("antiderivative: {0}")]
    Quad(#[from] QuadError),
    #[error("field is not finite at t = {t}, state = ({x}, {y})")]
    NonFinite { t: f64, x: f64, y: f64 },
}

/// Right-hand side `(t, (x, y)) ↦ (dx/dt, dy/dt)`.
pub trait VectorField {
    fn eval(&self, t: f64, state: [f64; 2]) -> Result<[f64; 2], FieldError>;

    /// Evaluates and rejects non-finite output.
    fn eval_finite(&self, t: f64, state: [f64; 2]) -> Result<[f64; 2], FieldError> {
        let d = self.eval(t, state)?;
        if d[0].is_finite() && d[1].is_finite() {
            Ok(d)
        } else {
            Err(FieldError::NonFinite {
                t,
                x: state[0],
                y: state[1],
            })
        }
    }
}

impl<F> VectorField for F
where
    F: Fn(f64, [f64; 2]) -> Result<[f64; 2], FieldError>,
{
    fn eval(&self, t: f64, state: [f64; 2]) -> Result<[f64; 2], FieldError> {
        self(t, state)
    }
}

/// Adapts an infallible closure into a [`VectorField`].
pub fn field_fn<F: Fn(f64, [f64; 2]) -> [f64; 2]>(
    f: F,
) -> impl Fn(f64, [f64; 2]) -> Result<[f64; 2], FieldError> {
    move |t, s| Ok(f(t, s))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Sample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

impl Sample {
    pub fn norm(&self) -> f64 {
        libm::hypot(self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "status"))]
pub enum Status {
    Completed,
    Escaped { t_esc: f64 },
    StepUnderflow { t_fail: f64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    /// Field value at each sample, for Hermite interpolation.
    pub slopes: Vec<[f64; 2]>,
    pub status: Status,
    pub stats: StepStats,
}

impl Trajectory {
    /// Builds a trajectory from bare samples (slopes estimated by finite
    /// differences). Mostly useful for analysing externally produced data.
    pub fn from_samples(samples: Vec<Sample>, status: Status) -> Self {
        let n = samples.len();
        let slopes = (0..n)
            .map(|i| {
                let (a, b) = match (i.checked_sub(1), i + 1 < n) {
                    (Some(p), true) => (p, i + 1),
                    (None, true) => (i, i + 1),
                    (Some(p), false) => (p, i),
                    (None, false) => return [0.0, 0.0],
                };
                let dt = samples[b].t - samples[a].t;
                [
                    (samples[b].x - samples[a].x) / dt,
                    (samples[b].y - samples[a].y) / dt,
                ]
            })
            .collect();
        Self {
            samples,
            slopes,
            status,
            stats: StepStats::default(),
        }
    }

    pub fn is_completed(&self) -> bool {
        self.status == Status::Completed
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().map(Sample::norm).fold(0.0, f64::max)
    }

    /// Cubic Hermite interpolation of the state at `t`.
    pub fn interpolate(&self, t: f64) -> Option<[f64; 2]> {
        let s = &self.samples;
        if s.is_empty() || t < s[0].t || t > s[s.len() - 1].t {
            return None;
        }
        let i = match s.binary_search_by(|p| p.t.partial_cmp(&t).unwrap_or(core::cmp::Ordering::Less)) {
            Ok(i) => return Some([s[i].x, s[i].y]),
            Err(i) => i - 1,
        };
        Some(hermite(&s[i], &s[i + 1], self.slopes[i], self.slopes[i + 1], t))
    }
}

/// Cubic Hermite interpolant between two samples with known slopes.
pub fn hermite(a: &Sample, b: &Sample, da: [f64; 2], db: [f64; 2], t: f64) -> [f64; 2] {
    let h = b.t - a.t;
    let s = (t - a.t) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    [
        h00 * a.x + h10 * h * da[0] + h01 * b.x + h11 * h * db[0],
        h00 * a.y + h10 * h * da[1] + h01 * b.y + h11 * h * db[1],
    ]
}

/// Which points end up in the trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Record {
    EveryStep,
    /// Steps are clipped to land on `t0 + k·dt` and only those points are kept.
    Grid(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    pub t0: f64,
    pub t_end: f64,
    pub rtol: f64,
    pub atol: f64,
    pub escape_radius: f64,
    pub h_max: f64,
    pub max_steps: usize,
    pub record: Record,
}

impl IntegrateOptions {
    pub fn new(t0: f64, t_end: f64) -> Self {
        Self {
            t0,
            t_end,
            rtol: 1e-8,
            atol: 1e-10,
            escape_radius: 1e6,
            h_max: f64::INFINITY,
            max_steps: 5_000_000,
            record: Record::EveryStep,
        }
    }

    pub fn tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn escape_radius(mut self, r: f64) -> Self {
        self.escape_radius = r;
        self
    }

    pub fn record(mut self, record: Record) -> Self {
        self.record = record;
        self
    }

    pub fn h_max(mut self, h: f64) -> Self {
        self.h_max = h;
        self
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy(y: [f64; 2], terms: &[(f64, [f64; 2])], h: f64) -> [f64; 2] {
    let mut out = y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

struct StepResult {
    y: [f64; 2],
    k7: [f64; 2],
    err: f64,
}

fn dopri_step<V: VectorField + ?Sized>(
    field: &V,
    t: f64,
    y: [f64; 2],
    k1: [f64; 2],
    h: f64,
    rtol: f64,
    atol: f64,
) -> Result<StepResult, FieldError> {
    let k2 = field.eval_finite(t + C2 * h, axpy(y, &[(A21, k1)], h))?;
    let k3 = field.eval_finite(t + C3 * h, axpy(y, &[(A31, k1), (A32, k2)], h))?;
    let k4 = field.eval_finite(t + C4 * h, axpy(y, &[(A41, k1), (A42, k2), (A43, k3)], h))?;
    let k5 = field.eval_finite(
        t + C5 * h,
        axpy(y, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)], h),
    )?;
    let k6 = field.eval_finite(
        t + h,
        axpy(y, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)], h),
    )?;
    let y_new = axpy(y, &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)], h);
    let k7 = field.eval_finite(t + h, y_new)?;
    let mut sum = 0.0;
    for i in 0..2 {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = atol + rtol * libm::fmax(libm::fabs(y[i]), libm::fabs(y_new[i]));
        sum += (e / sc) * (e / sc);
    }
    Ok(StepResult {
        y: y_new,
        k7,
        err: libm::sqrt(sum / 2.0),
    })
}

fn initial_step<V: VectorField + ?Sized>(
    field: &V,
    t: f64,
    y: [f64; 2],
    f0: [f64; 2],
    opts: &IntegrateOptions,
) -> f64 {
    let span = opts.t_end - opts.t0;
    let sc = |i: usize| opts.atol + opts.rtol * libm::fabs(y[i]);
    let d0 = libm::sqrt(((y[0] / sc(0)).powi2() + (y[1] / sc(1)).powi2()) / 2.0);
    let d1 = libm::sqrt(((f0[0] / sc(0)).powi2() + (f0[1] / sc(1)).powi2()) / 2.0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min(span).min(opts.h_max);
    let y1 = axpy(y, &[(1.0, f0)], h0);
    let d2 = match field.eval_finite(t + h0, y1) {
        Ok(f1) => {
            libm::sqrt(
                (((f1[0] - f0[0]) / sc(0)).powi2() + ((f1[1] - f0[1]) / sc(1)).powi2()) / 2.0,
            ) / h0
        }
        Err(_) => return h0 * 1e-3,
    };
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        libm::pow(0.01 / d1.max(d2), 0.2)
    };
    (100.0 * h0).min(h1).min(span).min(opts.h_max)
}

trait Square {
    fn powi2(self) -> f64;
}

impl Square for f64 {
    fn powi2(self) -> f64 {
        self * self
    }
}

/// Integrates `field` from `(x0, y0)` at `opts.t0` to `opts.t_end`.
///
/// Never fails: field errors reject the step, and termination is reported
/// through [`Trajectory::status`].
pub fn integrate<V: VectorField + ?Sized>(
    field: &V,
    initial: [f64; 2],
    opts: &IntegrateOptions,
) -> Trajectory {
    const SAFETY: f64 = 0.9;
    const FAC_MIN: f64 = 0.2;
    const FAC_MAX: f64 = 10.0;
    const BETA: f64 = 0.04;
    const EXPO: f64 = 0.2 - BETA * 0.75;

    let mut t = opts.t0;
    let mut y = initial;
    let mut stats = StepStats::default();
    let mut samples = Vec::new();
    let mut slopes = Vec::new();

    let mut k1 = match field.eval_finite(t, y) {
        Ok(k) => k,
        Err(_) => {
            return Trajectory {
                samples: alloc::vec![Sample { t, x: y[0], y: y[1] }],
                slopes: alloc::vec![[f64::NAN; 2]],
                status: Status::StepUnderflow { t_fail: t },
                stats,
            }
        }
    };
    samples.push(Sample { t, x: y[0], y: y[1] });
    slopes.push(k1);
    if libm::hypot(y[0], y[1]) > opts.escape_radius {
        return Trajectory {
            samples,
            slopes,
            status: Status::Escaped { t_esc: t },
            stats,
        };
    }

    let grid = match opts.record {
        Record::Grid(dt) => Some(dt),
        Record::EveryStep => None,
    };
    let mut next_grid_index: u64 = 1;
    let grid_time = |k: u64| match grid {
        Some(dt) => (opts.t0 + dt * k as f64).min(opts.t_end),
        None => opts.t_end,
    };

    let mut h = initial_step(field, t, y, k1, opts);
    let mut err_old: f64 = 1e-4;
    let mut last_rejected = false;

    loop {
        if t >= opts.t_end {
            break;
        }
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Trajectory {
                samples,
                slopes,
                status: Status::StepUnderflow { t_fail: t },
                stats,
            };
        }
        let target = grid_time(next_grid_index);
        let mut hits_target = false;
        let mut step = h.min(opts.h_max);
        if t + step >= target {
            step = target - t;
            hits_target = true;
        }
        if step < 1e-12 * libm::fmax(libm::fabs(t), 1.0) && !(hits_target && step > 0.0) {
            return Trajectory {
                samples,
                slopes,
                status: Status::StepUnderflow { t_fail: t },
                stats,
            };
        }

        let attempt = dopri_step(field, t, y, k1, step, opts.rtol, opts.atol);
        let (accepted, err) = match &attempt {
            Ok(r) if r.err.is_finite() && r.err <= 1.0 => (true, r.err),
            Ok(r) if r.err.is_finite() => (false, r.err),
            _ => (false, f64::INFINITY),
        };

        if !accepted {
            stats.rejected += 1;
            let fac = if err.is_finite() {
                (SAFETY * libm::pow(err, -0.2)).clamp(FAC_MIN, 1.0)
            } else {
                0.1
            };
            h = step * fac;
            last_rejected = true;
            if h < 1e-12 * libm::fmax(libm::fabs(t), 1.0) {
                return Trajectory {
                    samples,
                    slopes,
                    status: Status::StepUnderflow { t_fail: t },
                    stats,
                };
            }
            continue;
        }

        let r = attempt.expect("accepted step");
        stats.accepted += 1;
        t = if hits_target { target } else { t + step };
        y = r.y;
        k1 = r.k7;

        let escaped = libm::hypot(y[0], y[1]) > opts.escape_radius;
        let keep = grid.is_none() || hits_target || escaped;
        if keep {
            samples.push(Sample { t, x: y[0], y: y[1] });
            slopes.push(k1);
        }
        if hits_target {
            next_grid_index += 1;
        }
        if escaped {
            return Trajectory {
                samples,
                slopes,
                status: Status::Escaped { t_esc: t },
                stats,
            };
        }

        let err_c = libm::fmax(err, 1e-10);
        let mut fac = SAFETY * libm::pow(err_c, -EXPO) * libm::pow(err_old, BETA);
        fac = fac.clamp(FAC_MIN, FAC_MAX);
        if last_rejected {
            fac = fac.min(1.0);
        }
        // A step clipped to an output point says little about the natural step.
        h = if hits_target { h.max(step * fac) } else { step * fac };
        err_old = err_c;
        last_rejected = false;
    }

    Trajectory {
        samples,
        slopes,
        status: Status::Completed,
        stats,
    }
}
