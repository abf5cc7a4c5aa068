//! Kernels `F(t, α)` that parameterize the N-derivative.

use alloc::string::{String, ToString};
use core::fmt;
use core::str::FromStr;

use crate::expr::{Bindings, Expr, ParseError, Scope, Var};

/// Derivative orders are restricted to the open interval (0, 1).
pub fn check_order(alpha: f64) -> Result<f64, KernelError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(alpha)
    } else {
        Err(KernelError::OrderOutOfRange(alpha))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KernelError {
    #[error("order {0} is outside the open interval (0, 1)")]
    OrderOutOfRange(f64),
    #[error("kernel `{kind}` is singular at t = 0 and needs t > 0, got t = {t}")]
    Domain { kind: &'static str, t: f64 },
    #[error("custom kernel evaluated to {value} at t = {t}, alpha = {alpha}; kernels must be finite and positive")]
    NotPositive { t: f64, alpha: f64, value: f64 },
    #[error("unknown kernel kind `{0}`")]
    UnknownKind(String),
    #[error("custom kernel expression: {0}")]
    Parse(#[from] ParseError),
}

/// The built-in kernel families plus user expressions.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelKind {
    /// `F ≡ 1`, the classical derivative.
    Ordinary,
    /// `e^{t^{-α}}`, the non-conformable derivative used by the N-Liénard equation.
    NcExpInv,
    /// `e^{(1-α)t}`.
    ConfExp,
    /// `t^{1-α}`.
    ConfKhalil,
    /// `t^{α}`.
    NcPowPos,
    /// `t^{-α}`.
    NcPowNeg,
    /// An expression in `t` and `alpha`.
    Custom(Expr),
}

impl KernelKind {
    pub const BUILT_IN: [&'static str; 6] = [
        "ordinary",
        "nc_exp_inv",
        "conf_exp",
        "conf_khalil",
        "nc_pow_pos",
        "nc_pow_neg",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            KernelKind::Ordinary => "ordinary",
            KernelKind::NcExpInv => "nc_exp_inv",
            KernelKind::ConfExp => "conf_exp",
            KernelKind::ConfKhalil => "conf_khalil",
            KernelKind::NcPowPos => "nc_pow_pos",
            KernelKind::NcPowNeg => "nc_pow_neg",
            KernelKind::Custom(_) => "custom",
        }
    }
}

impl FromStr for KernelKind {
    type Err = KernelError;

    /// Parses a built-in kind name; custom kernels go through [`Kernel::custom`].
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "ordinary" => KernelKind::Ordinary,
            "nc_exp_inv" => KernelKind::NcExpInv,
            "conf_exp" => KernelKind::ConfExp,
            "conf_khalil" => KernelKind::ConfKhalil,
            "nc_pow_pos" => KernelKind::NcPowPos,
            "nc_pow_neg" => KernelKind::NcPowNeg,
            other => return Err(KernelError::UnknownKind(other.to_string())),
        })
    }
}

/// A kernel together with its behaviour at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    kind: KernelKind,
    singular_at_zero: bool,
}

impl Kernel {
    pub fn new(kind: KernelKind) -> Self {
        let singular_at_zero = match &kind {
            KernelKind::Ordinary | KernelKind::ConfExp => false,
            KernelKind::NcExpInv
            | KernelKind::ConfKhalil
            | KernelKind::NcPowPos
            | KernelKind::NcPowNeg => true,
            KernelKind::Custom(expr) => {
                let at_zero = expr.eval(&Bindings::new().t(0.0).set(Var::Alpha, 0.5));
                !matches!(at_zero, Ok(v) if v.is_finite() && v > 0.0)
            }
        };
        Self {
            kind,
            singular_at_zero,
        }
    }

    pub fn ordinary() -> Self {
        Self::new(KernelKind::Ordinary)
    }

    /// Builds a kernel from an expression in `t` and `alpha`.
    pub fn custom(source: &str) -> Result<Self, KernelError> {
        let expr = Expr::parse_in(source, &Scope::kernel())?;
        Ok(Self::new(KernelKind::Custom(expr)))
    }

    /// All six built-in kernels.
    pub fn built_in() -> [Kernel; 6] {
        [
            KernelKind::Ordinary,
            KernelKind::NcExpInv,
            KernelKind::ConfExp,
            KernelKind::ConfKhalil,
            KernelKind::NcPowPos,
            KernelKind::NcPowNeg,
        ]
        .map(Kernel::new)
    }

    pub fn kind(&self) -> &KernelKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    /// True when `F` or `1/F` blows up as `t → 0+`.
    pub fn singular_at_zero(&self) -> bool {
        self.singular_at_zero
    }

    /// `F(t, α)`.
    pub fn eval(&self, t: f64, alpha: f64) -> Result<f64, KernelError> {
        check_order(alpha)?;
        if self.singular_at_zero && !(t > 0.0) {
            return Err(KernelError::Domain {
                kind: self.name(),
                t,
            });
        }
        Ok(self.eval_unchecked(t, alpha)?)
    }

    fn eval_unchecked(&self, t: f64, alpha: f64) -> Result<f64, KernelError> {
        Ok(match &self.kind {
            KernelKind::Ordinary => 1.0,
            KernelKind::NcExpInv => libm::exp(libm::pow(t, -alpha)),
            KernelKind::ConfExp => libm::exp((1.0 - alpha) * t),
            KernelKind::ConfKhalil => libm::pow(t, 1.0 - alpha),
            KernelKind::NcPowPos => libm::pow(t, alpha),
            KernelKind::NcPowNeg => libm::pow(t, -alpha),
            KernelKind::Custom(expr) => {
                let v = expr
                    .eval(&Bindings::new().t(t).set(Var::Alpha, alpha))
                    .unwrap_or(f64::NAN);
                if !(v.is_finite() && v > 0.0) {
                    return Err(KernelError::NotPositive { t, alpha, value: v });
                }
                v
            }
        })
    }

    /// `1 / F(t, α)`, the weight used by the integral operator.
    ///
    /// Unlike `1.0 / eval(..)` this stays finite where `F` overflows
    /// (the `e^{t^{-α}}` kernel near zero).
    pub fn reciprocal(&self, t: f64, alpha: f64) -> Result<f64, KernelError> {
        match self.kind {
            KernelKind::NcExpInv => {
                check_order(alpha)?;
                if !(t > 0.0) {
                    return Err(KernelError::Domain {
                        kind: self.name(),
                        t,
                    });
                }
                Ok(libm::exp(-libm::pow(t, -alpha)))
            }
            _ => Ok(1.0 / self.eval(t, alpha)?),
        }
    }

    /// If `1/F(t, α)` behaves like `t^{-β}` with `0 < β < 1` near zero,
    /// returns `β`. Used to pick a substitution that removes the endpoint
    /// singularity in quadrature.
    pub fn reciprocal_singularity(&self, alpha: f64) -> Option<f64> {
        match self.kind {
            KernelKind::ConfKhalil => Some(1.0 - alpha),
            KernelKind::NcPowPos => Some(alpha),
            _ => None,
        }
    }

    /// Numerically classifies the kernel by its `α → 1⁻` limit on `t_grid`.
    pub fn classify_conformable(&self, t_grid: &[f64]) -> Result<Conformability, KernelError> {
        const TOL: f64 = 1e-6;
        let mut verdict = Conformability::Conformable;
        for &t in t_grid {
            // Limit estimates from α = 1 - 10^{-k}, extrapolated assuming a
            // linear leading error term in (1 - α).
            let mut prev_value: Option<f64> = None;
            let mut estimates = [0.0; 6];
            let mut n = 0;
            for k in 3..=8 {
                let alpha = 1.0 - libm::pow(10.0, -(k as f64));
                let v = self.eval(t, alpha)?;
                if let Some(p) = prev_value {
                    estimates[n] = v + (v - p) / 9.0;
                    n += 1;
                }
                prev_value = Some(v);
            }
            let last = estimates[n - 1];
            let before = estimates[n - 2];
            let scale = libm::fmax(1.0, libm::fabs(last));
            if !last.is_finite() || libm::fabs(last - before) > TOL * scale {
                return Ok(Conformability::Indeterminate);
            }
            if libm::fabs(last - 1.0) > TOL {
                verdict = Conformability::NonConformable;
            }
        }
        Ok(verdict)
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            KernelKind::Custom(expr) => write!(f, "custom({expr})"),
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Conformability {
    Conformable,
    NonConformable,
    Indeterminate,
}
