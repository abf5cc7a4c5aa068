//! Adaptive Gauss–Kronrod quadrature (10/21 point pair).
//!
//! Integrands are plain `Fn(f64) -> f64`; a non-finite sample aborts the
//! integration with [`QuadError::NonFinite`] so that evaluation failures
//! are never averaged away.

use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum QuadError {
    #[error("integrand is not finite at t = {at}")]
    NonFinite { at: f64 },
    #[error("subdivision limit reached (value {value}, error estimate {abs_error}); the integrand may have a non-integrable singularity")]
    SubdivisionLimit { value: f64, abs_error: f64 },
    #[error("invalid interval [{a}, {b}]")]
    BadInterval { a: f64, b: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            rel_tol: 1e-12,
            max_subdivisions: 2000,
        }
    }
}

impl QuadOptions {
    pub fn tight() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-13,
            max_subdivisions: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub abs_error: f64,
    pub intervals: usize,
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn sample<F: Fn(f64) -> f64>(f: &F, t: f64) -> Result<f64, QuadError> {
    let v = f(t);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(QuadError::NonFinite { at: t })
    }
}

/// One 21-point Kronrod evaluation with the embedded 10-point Gauss
/// estimate used for the error.
fn kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Segment, QuadError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = sample(f, center)?;
    let mut left = [0.0; 10];
    let mut right = [0.0; 10];
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    let mut abs_sum = libm::fabs(fc) * WGK[10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = sample(f, center - dx)?;
        let f2 = sample(f, center + dx)?;
        left[j] = f1;
        right[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (libm::fabs(f1) + libm::fabs(f2));
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kronrod * half;
    let mut error = libm::fabs((kronrod - gauss) * half);
    // QUADPACK-style scaling: the raw Gauss/Kronrod difference grossly
    // overstates the error of the Kronrod value for smooth integrands.
    let mean = kronrod * 0.5;
    let mut asc = WGK[10] * libm::fabs(fc - mean);
    for j in 0..10 {
        asc += WGK[j] * (libm::fabs(left[j] - mean) + libm::fabs(right[j] - mean));
    }
    asc *= libm::fabs(half);
    if asc != 0.0 && error != 0.0 {
        let scale = libm::pow(200.0 * error / asc, 1.5);
        error = asc * libm::fmin(1.0, scale);
    }
    let abs_value = abs_sum * libm::fabs(half);
    if abs_value > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = libm::fmax(error, 50.0 * f64::EPSILON * abs_value);
    }
    Ok(Segment { a, b, value, error })
}

/// Integrates `f` over `[a, b]` (either orientation).
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    opts: &QuadOptions,
) -> Result<Quadrature, QuadError> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(QuadError::BadInterval { a, b });
    }
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            abs_error: 0.0,
            intervals: 0,
        });
    }
    if a > b {
        return match integrate(f, b, a, opts) {
            Ok(r) => Ok(Quadrature {
                value: -r.value,
                ..r
            }),
            Err(QuadError::SubdivisionLimit { value, abs_error }) => {
                Err(QuadError::SubdivisionLimit {
                    value: -value,
                    abs_error,
                })
            }
            Err(e) => Err(e),
        };
    }

    let mut segments: Vec<Segment> = Vec::with_capacity(32);
    segments.push(kronrod21(&f, a, b)?);
    loop {
        let value: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        let target = libm::fmax(opts.abs_tol, opts.rel_tol * libm::fabs(value));
        if error <= target {
            return Ok(Quadrature {
                value,
                abs_error: error,
                intervals: segments.len(),
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, s)| {
                if s.error > acc.1 {
                    (i, s.error)
                } else {
                    acc
                }
            });
        let seg = segments[worst];
        let mid = 0.5 * (seg.a + seg.b);
        let too_small = mid <= seg.a || mid >= seg.b || (seg.b - seg.a) < 1e-15 * libm::fmax(1.0, libm::fabs(mid));
        if segments.len() >= opts.max_subdivisions || too_small {
            return Err(QuadError::SubdivisionLimit {
                value,
                abs_error: error,
            });
        }
        segments[worst] = kronrod21(&f, seg.a, mid)?;
        segments.push(kronrod21(&f, mid, seg.b)?);
    }
}

/// Integrates over `[a, ∞)` through `t = a + u / (1 - u)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    opts: &QuadOptions,
) -> Result<Quadrature, QuadError> {
    let mapped = |u: f64| {
        let w = 1.0 - u;
        let t = a + u / w;
        let v = f(t);
        // The integrand must decay; a vanishing sample at t = ∞ is fine.
        if v == 0.0 {
            0.0
        } else {
            v / (w * w)
        }
    };
    integrate(mapped, 0.0, 1.0, opts)
}

/// Integrates `f` over `[a, b]` when `f(t) ~ (t - a)^{-β}` near `a`,
/// `0 < β < 1`, through `t = a + u^{1/(1-β)}`, which makes the
/// transformed integrand bounded.
pub fn integrate_left_power_singular<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    beta: f64,
    opts: &QuadOptions,
) -> Result<Quadrature, QuadError> {
    if !(beta > 0.0 && beta < 1.0) || !(b > a) {
        return integrate(f, a, b, opts);
    }
    let gamma = 1.0 - beta;
    let inv = 1.0 / gamma;
    let upper = libm::pow(b - a, gamma);
    let mapped = |u: f64| {
        let t = a + libm::pow(u, inv);
        inv * libm::pow(u, beta * inv) * f(t)
    };
    integrate(mapped, 0.0, upper, opts)
}

/// Fixed 10-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss10<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    for j in 0..5 {
        let dx = half * XGK[2 * j + 1];
        sum += WG[j] * (f(center - dx) + f(center + dx));
    }
    sum * half
}
