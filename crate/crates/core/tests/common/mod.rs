//! Oracles shared by the integration tests. Deliberately independent of the
//! library's quadrature and integrators.
#![allow(dead_code)]

/// Tanh-sinh quadrature on `[a, b]` with step `h` in the transformed variable.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let pi2 = std::f64::consts::FRAC_PI_2;
    let mut total = 0.0;
    let h: f64 = 1.0 / 64.0;
    let mut k: i64 = -400;
    while k <= 400 {
        let u = k as f64 * h;
        let s = pi2 * u.sinh();
        let x = s.tanh();
        let w = pi2 * u.cosh() / (s.cosh() * s.cosh());
        let arg = mid + half * x;
        if w > 1e-300 && arg > a && arg < b {
            total += w * f(arg);
        }
        k += 1;
    }
    total * half * h
}

/// Classical fourth-order Runge–Kutta with a fixed step, returning the
/// states at every step including the first.
pub fn rk4<F: Fn(f64, [f64; 2]) -> [f64; 2]>(f: F, y0: [f64; 2], t0: f64, t1: f64, n: usize) -> Vec<(f64, [f64; 2])> {
    let h = (t1 - t0) / n as f64;
    let mut out = Vec::with_capacity(n + 1);
    let mut y = y0;
    out.push((t0, y));
    let add = |y: [f64; 2], k: [f64; 2], s: f64| [y[0] + s * k[0], y[1] + s * k[1]];
    for i in 0..n {
        let t = t0 + h * i as f64;
        let k1 = f(t, y);
        let k2 = f(t + 0.5 * h, add(y, k1, 0.5 * h));
        let k3 = f(t + 0.5 * h, add(y, k2, 0.5 * h));
        let k4 = f(t + h, add(y, k3, h));
        y = [
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
        out.push((t0 + h * (i + 1) as f64, y));
    }
    out
}

/// Least-squares slope of `log err` against `log h`.
pub fn fitted_order(hs: &[f64], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
