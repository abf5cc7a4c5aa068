//! Reference computations used by the acceptance suite. None of them touch
//! the library's integrators.

/// Fixed-step classical Runge–Kutta, returning every state including the
/// first.
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

/// Least-squares slope of `ln err` against `ln h`.
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

/// Amplitude and period of the last full loop of a long RK4 run, from
/// upward zero crossings of `x`.
pub fn last_loop(run: &[(f64, [f64; 2])]) -> Option<(f64, f64)> {
    let ups: Vec<f64> = run
        .windows(2)
        .filter(|w| w[0].1[0] < 0.0 && w[1].1[0] >= 0.0)
        .map(|w| w[0].0 + (w[1].0 - w[0].0) * w[0].1[0] / (w[0].1[0] - w[1].1[0]))
        .collect();
    let n = ups.len();
    if n < 2 {
        return None;
    }
    let (a, b) = (ups[n - 2], ups[n - 1]);
    let amp = run
        .iter()
        .filter(|(t, _)| *t >= a && *t <= b)
        .map(|(_, s)| s[0].abs())
        .fold(0.0, f64::max);
    Some((amp, b - a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_is_fourth_order_on_harmonic_oscillator() {
        let err = |n: usize| {
            let run = rk4(|_, s| [s[1], -s[0]], [1.0, 0.0], 0.0, 1.0, n);
            (run[n].1[0] - 1f64.cos()).abs()
        };
        let order = fitted_order(&[0.1, 0.05, 0.025], &[err(10), err(20), err(40)]);
        assert!((order - 4.0).abs() < 0.2, "{order}");
    }

    #[test]
    fn harmonic_loop_has_period_two_pi() {
        let run = rk4(|_, s| [s[1], -s[0]], [1.0, 0.0], 0.0, 20.0, 20_000);
        let (amp, period) = last_loop(&run).unwrap();
        assert!((amp - 1.0).abs() < 1e-6);
        assert!((period - std::f64::consts::TAU).abs() < 1e-6);
    }
}
