//! Memoized antiderivatives `∫_0^x f(s) ds`.
//!
//! Values at knots `kΔ` are accumulated left to right with adaptive
//! quadrature and cached; the remainder from the nearest knot is a fixed
//! 10-point Gauss rule. Knots sit at fixed positions, so a value does not
//! depend on the order in which the table was extended.

use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;

use crate::quad::{self, QuadError, QuadOptions};

pub struct Antiderivative<F> {
    integrand: F,
    spacing: f64,
    /// `table[k] = ∫_0^{kΔ}` on the positive side.
    positive: RefCell<Vec<f64>>,
    /// `table[k] = ∫_0^{-kΔ}` on the negative side.
    negative: RefCell<Vec<f64>>,
}

impl<F: Fn(f64) -> f64> Antiderivative<F> {
    pub fn new(integrand: F) -> Self {
        Self::with_spacing(integrand, 0.25)
    }

    pub fn with_spacing(integrand: F, spacing: f64) -> Self {
        Self {
            integrand,
            spacing,
            positive: RefCell::new(vec![0.0]),
            negative: RefCell::new(vec![0.0]),
        }
    }

    pub fn integrand(&self, x: f64) -> f64 {
        (self.integrand)(x)
    }

    fn knot(&self, table: &RefCell<Vec<f64>>, sign: f64, k: usize) -> Result<f64, QuadError> {
        let mut table = table.borrow_mut();
        let opts = QuadOptions {
            abs_tol: 1e-14,
            rel_tol: 1e-13,
            max_subdivisions: 500,
        };
        while table.len() <= k {
            let i = table.len() - 1;
            let lo = sign * self.spacing * i as f64;
            let hi = sign * self.spacing * (i + 1) as f64;
            let piece = match quad::integrate(&self.integrand, lo, hi, &opts) {
                Ok(q) => q.value,
                // Tolerance below roundoff still yields a usable value.
                Err(QuadError::SubdivisionLimit { value, abs_error })
                    if abs_error <= 1e-10 * value.abs().max(1.0) =>
                {
                    value
                }
                Err(e) => return Err(e),
            };
            let last = table[i];
            table.push(last + piece);
        }
        Ok(table[k])
    }

    /// `∫_0^x f(s) ds`.
    pub fn eval(&self, x: f64) -> Result<f64, QuadError> {
        if !x.is_finite() {
            return Err(QuadError::NonFinite { at: x });
        }
        let (table, sign) = if x >= 0.0 {
            (&self.positive, 1.0)
        } else {
            (&self.negative, -1.0)
        };
        let k = (x.abs() / self.spacing) as usize;
        let base = self.knot(table, sign, k)?;
        let start = sign * self.spacing * k as f64;
        let rest = quad::gauss10(&self.integrand, start, x);
        if rest.is_finite() {
            Ok(base + rest)
        } else {
            Err(QuadError::NonFinite { at: x })
        }
    }
}

impl<F> core::fmt::Debug for Antiderivative<F> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Antiderivative")
            .field("spacing", &self.spacing)
            .field("knots", &(self.positive.borrow().len() + self.negative.borrow().len()))
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_antiderivative() {
        let prim = Antiderivative::new(|x: f64| x * x - 1.0);
        assert!((prim.eval(2.0).unwrap() - 2.0 / 3.0).abs() < 1e-14);
        let v = prim.eval(-2.0).unwrap();
        assert!((v + 2.0 / 3.0).abs() < 1e-14, "{v}");
        assert_eq!(prim.eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn order_of_queries_does_not_matter() {
        let a = Antiderivative::new(libm::sin);
        let b = Antiderivative::new(libm::sin);
        let _ = a.eval(7.3).unwrap();
        let v1 = a.eval(3.1).unwrap();
        let v2 = b.eval(3.1).unwrap();
        assert_eq!(v1.to_bits(), v2.to_bits());
        assert!((v1 - (1.0 - libm::cos(3.1))).abs() < 1e-13);
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        let prim = Antiderivative::new(|x: f64| 1.0 / (x - 1.0));
        assert!(prim.eval(2.0).is_err());
    }
}
