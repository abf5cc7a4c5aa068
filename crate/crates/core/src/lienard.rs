//! Liénard-type families, their first-order fields, and grid checks of the
//! hypotheses of the qualitative theorems.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::expr::{BinOp, Bindings, Expr, Node, Var};
use crate::fracsolve::{self, FracError, FracOrder};
use crate::kernel::Kernel;
use crate::ncalc::{self, Axis, DivergenceStatus, DivergenceVerdict, Horizons, NCalcError};
use crate::ode::{self, FieldError, IntegrateOptions, Trajectory, VectorField};
use crate::primitive::Antiderivative;
use crate::quad::{QuadError, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Family {
    /// `ẋ = y − F(x)`, `ẏ = −a(t) g(x)` with `a ≡ 1` unless given.
    Classical,
    /// `N(N x) + f(x) N x + a(t) g(x) = 0`.
    Nonconformable,
    /// `N x = a(x,y) H(α(y) − β(y) Γ(x))`, `N y = −p(y) g(x)`.
    Generalized,
    /// Caputo system `D^α x = y − F(x)`, `D^α y = −g(x)`.
    Fractional,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Classical,
        Family::Nonconformable,
        Family::Generalized,
        Family::Fractional,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Classical => "classical",
            Family::Nonconformable => "nonconformable",
            Family::Generalized => "generalized",
            Family::Fractional => "fractional",
        }
    }

    /// `(name, variables it may use, required)`.
    pub fn functions(self) -> &'static [(&'static str, &'static [Var], bool)] {
        const X: &[Var] = &[Var::X];
        const Y: &[Var] = &[Var::Y];
        const T: &[Var] = &[Var::T];
        const XY: &[Var] = &[Var::X, Var::Y];
        match self {
            Family::Classical => &[("f", X, true), ("g", X, true), ("a", T, false)],
            Family::Nonconformable => &[("f", X, true), ("g", X, true), ("a", T, true)],
            Family::Generalized => &[
                ("a", XY, true),
                ("H", X, true),
                ("alpha_y", Y, true),
                ("beta_y", Y, true),
                ("Gamma_x", X, true),
                ("p", Y, true),
                ("g", X, true),
            ],
            Family::Fractional => &[("f", X, true), ("g", X, true)],
        }
    }

    pub fn uses_kernel(self) -> bool {
        matches!(self, Family::Nonconformable | Family::Generalized)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| SpecError::UnknownFamily(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rel: 1e-8,
            abs: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpecError {
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("{family} family requires function `{name}`")]
    MissingFunction { family: Family, name: &'static str },
    #[error("{family} family does not use a function named `{name}`")]
    UnexpectedFunction { family: Family, name: String },
    #[error("function `{name}` may not depend on `{var}`")]
    Variable { name: String, var: &'static str },
    #[error("order {0} is outside (0, 1)")]
    Order(f64),
    #[error("kernel `{kernel}` is singular at 0, so t0 must be positive (got {t0})")]
    InitialTime { kernel: &'static str, t0: f64 },
    #[error("t_end ({t_end}) must exceed t0 ({t0})")]
    Horizon { t0: f64, t_end: f64 },
    #[error("tolerances must be positive and finite")]
    Tolerances,
    #[error("escape radius must be positive")]
    EscapeRadius,
    #[error("step {0} must be positive and at most a sixteenth of the horizon")]
    Step(f64),
    #[error("initial state must be finite")]
    InitialState,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LienardError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Frac(#[from] FracError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    NCalc(#[from] NCalcError),
    #[error("{theorem} applies to the {expected} family, not {found}")]
    NotApplicable {
        theorem: Theorem,
        expected: Family,
        found: Family,
    },
}

/// A fully parsed scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub family: Family,
    pub functions: BTreeMap<String, Expr>,
    pub kernel: Kernel,
    pub alpha: f64,
    pub x0: f64,
    pub y0: f64,
    pub t0: f64,
    pub t_end: f64,
    pub tolerances: Tolerances,
    pub escape_radius: f64,
    /// Grid step for the fractional solver.
    pub step: Option<f64>,
}

impl ScenarioSpec {
    /// A scenario with default tolerances, ordinary kernel, `α = 0.5`,
    /// start `(1, 0)` at `t0 = 0` and horizon 10.
    pub fn new(family: Family) -> Self {
        Self {
            family,
            functions: BTreeMap::new(),
            kernel: Kernel::ordinary(),
            alpha: 0.5,
            x0: 1.0,
            y0: 0.0,
            t0: 0.0,
            t_end: 10.0,
            tolerances: Tolerances::default(),
            escape_radius: 1e6,
            step: None,
        }
    }

    /// Adds a function parsed from `source`.
    ///
    /// # Panics
    /// If `source` does not parse; meant for literals in code.
    pub fn with(mut self, name: &str, source: &str) -> Self {
        let expr = Expr::parse(source).unwrap_or_else(|e| panic!("{name}: {e}"));
        self.functions.insert(name.to_string(), expr);
        self
    }

    pub fn with_expr(mut self, name: &str, expr: Expr) -> Self {
        self.functions.insert(name.to_string(), expr);
        self
    }

    pub fn kernel(mut self, kernel: Kernel) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn initial(mut self, x0: f64, y0: f64) -> Self {
        self.x0 = x0;
        self.y0 = y0;
        self
    }

    pub fn span(mut self, t0: f64, t_end: f64) -> Self {
        self.t0 = t0;
        self.t_end = t_end;
        self
    }

    pub fn tolerances(mut self, rel: f64, abs: f64) -> Self {
        self.tolerances = Tolerances { rel, abs };
        self
    }

    pub fn escape_radius(mut self, r: f64) -> Self {
        self.escape_radius = r;
        self
    }

    pub fn step(mut self, h: f64) -> Self {
        self.step = Some(h);
        self
    }

    pub fn function(&self, name: &str) -> Option<&Expr> {
        self.functions.get(name)
    }

    fn require(&self, name: &'static str) -> Result<&Expr, SpecError> {
        self.functions.get(name).ok_or(SpecError::MissingFunction {
            family: self.family,
            name,
        })
    }

    /// Checks the family's function set, variable usage and numeric fields.
    pub fn validate(&self) -> Result<(), SpecError> {
        let table = self.family.functions();
        for (name, _, required) in table {
            if *required && !self.functions.contains_key(*name) {
                return Err(SpecError::MissingFunction {
                    family: self.family,
                    name,
                });
            }
        }
        for (name, expr) in &self.functions {
            let Some((_, vars, _)) = table.iter().find(|(n, _, _)| n == name) else {
                return Err(SpecError::UnexpectedFunction {
                    family: self.family,
                    name: name.clone(),
                });
            };
            if let Some(bad) = expr.free_vars().into_iter().find(|v| !vars.contains(v)) {
                return Err(SpecError::Variable {
                    name: name.clone(),
                    var: bad.name(),
                });
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(SpecError::Order(self.alpha));
        }
        if !(self.x0.is_finite() && self.y0.is_finite()) {
            return Err(SpecError::InitialState);
        }
        if !(self.t0.is_finite() && self.t_end.is_finite() && self.t_end > self.t0) {
            return Err(SpecError::Horizon {
                t0: self.t0,
                t_end: self.t_end,
            });
        }
        if self.family.uses_kernel() && self.kernel.singular_at_zero() && !(self.t0 > 0.0) {
            return Err(SpecError::InitialTime {
                kernel: self.kernel.name(),
                t0: self.t0,
            });
        }
        let tol_ok = |v: f64| v.is_finite() && v > 0.0;
        if !(tol_ok(self.tolerances.rel) && tol_ok(self.tolerances.abs)) {
            return Err(SpecError::Tolerances);
        }
        if !(self.escape_radius > 0.0) {
            return Err(SpecError::EscapeRadius);
        }
        if let Some(h) = self.step {
            if !(h > 0.0 && h <= (self.t_end - self.t0) / 16.0) {
                return Err(SpecError::Step(h));
            }
        }
        Ok(())
    }

    /// Grid step used for the fractional family.
    pub fn fractional_step(&self) -> f64 {
        self.step
            .unwrap_or_else(|| libm::fmin(0.01, (self.t_end - self.t0) / 16.0))
    }

    pub fn integrate_options(&self) -> IntegrateOptions {
        IntegrateOptions::new(self.t0, self.t_end)
            .tolerances(self.tolerances.rel, self.tolerances.abs)
            .escape_radius(self.escape_radius)
    }
}

type BoxFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;

fn of_x(expr: &Expr) -> BoxFn {
    let e = expr.clone();
    Box::new(move |x| e.eval(&Bindings::new().x(x)).unwrap_or(f64::NAN))
}

fn eval_at(expr: &Expr, b: Bindings) -> Result<f64, FieldError> {
    Ok(expr.eval(&b)?)
}

/// `E(x, y) = a(x, y) · H(α(y) − β(y) Γ(x))` as a single expression.
pub fn composite_e(spec: &ScenarioSpec) -> Result<Expr, SpecError> {
    let a = spec.require("a")?;
    let h = spec.require("H")?;
    let alpha_y = spec.require("alpha_y")?;
    let beta_y = spec.require("beta_y")?;
    let gamma_x = spec.require("Gamma_x")?;
    let inner = Expr::from_node(Node::binary(
        BinOp::Sub,
        alpha_y.node().clone(),
        Node::binary(BinOp::Mul, beta_y.node().clone(), gamma_x.node().clone()),
    ));
    let hx = h.substitute(Var::X, &inner);
    Ok(Expr::from_node(Node::binary(
        BinOp::Mul,
        a.node().clone(),
        hx.node().clone(),
    )))
}

/// First-order field of a scenario.
pub struct LienardField {
    family: Family,
    kernel: Kernel,
    order: f64,
    f: Option<Expr>,
    f_prim: Option<Antiderivative<BoxFn>>,
    g: Expr,
    a: Option<Expr>,
    e: Option<Expr>,
    p: Option<Expr>,
}

impl fmt::Debug for LienardField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LienardField")
            .field("family", &self.family)
            .field("kernel", &self.kernel.name())
            .field("order", &self.order)
            .finish()
    }
}

impl LienardField {
    pub fn family(&self) -> Family {
        self.family
    }

    /// `F(x) = ∫_0^x f`.
    pub fn big_f(&self, x: f64) -> Result<f64, QuadError> {
        match &self.f_prim {
            Some(p) => p.eval(x),
            None => Ok(0.0),
        }
    }
}

impl VectorField for LienardField {
    fn eval(&self, t: f64, s: [f64; 2]) -> Result<[f64; 2], FieldError> {
        let [x, y] = s;
        let gx = eval_at(&self.g, Bindings::new().x(x))?;
        let a_t = |t: f64| match &self.a {
            Some(a) => eval_at(a, Bindings::new().t(t)),
            None => Ok(1.0),
        };
        match self.family {
            Family::Classical => Ok([y - self.big_f(x)?, -a_t(t)? * gx]),
            Family::Fractional => Ok([y - self.big_f(x)?, -gx]),
            Family::Nonconformable => {
                let w = self.kernel.eval(t, self.order)?;
                let fx = match &self.f {
                    Some(f) => eval_at(f, Bindings::new().x(x))?,
                    None => 0.0,
                };
                Ok([y / w, (-fx * y - a_t(t)? * gx) / w])
            }
            Family::Generalized => {
                let w = self.kernel.eval(t, self.order)?;
                let e = eval_at(self.e.as_ref().expect("generalized field has E"), Bindings::new().x(x).y(y))?;
                let p = eval_at(self.p.as_ref().expect("generalized field has p"), Bindings::new().y(y))?;
                Ok([e / w, -p * gx / w])
            }
        }
    }
}

/// Builds the first-order field of a validated scenario.
pub fn build_field(spec: &ScenarioSpec) -> Result<LienardField, SpecError> {
    spec.validate()?;
    let f = spec.function("f").cloned();
    let f_prim = match spec.family {
        Family::Classical | Family::Fractional => f.as_ref().map(|f| Antiderivative::new(of_x(f))),
        _ => None,
    };
    let (e, p) = if spec.family == Family::Generalized {
        (Some(composite_e(spec)?), Some(spec.require("p")?.clone()))
    } else {
        (None, None)
    };
    Ok(LienardField {
        family: spec.family,
        kernel: spec.kernel.clone(),
        order: spec.alpha,
        f,
        f_prim,
        g: spec.require("g")?.clone(),
        a: match spec.family {
            Family::Classical | Family::Nonconformable => spec.function("a").cloned(),
            _ => None,
        },
        e,
        p,
    })
}

/// Integrates a non-fractional scenario with the adaptive Runge–Kutta pair.
pub fn integrate(field: &LienardField, spec: &ScenarioSpec) -> Trajectory {
    ode::integrate(field, [spec.x0, spec.y0], &spec.integrate_options())
}

/// Integrates any family; the fractional one goes through the Caputo solver.
pub fn simulate(spec: &ScenarioSpec) -> Result<Trajectory, LienardError> {
    simulate_from(spec, [spec.x0, spec.y0])
}

/// Like [`simulate`] from a different initial state.
pub fn simulate_from(spec: &ScenarioSpec, initial: [f64; 2]) -> Result<Trajectory, LienardError> {
    let field = build_field(spec)?;
    if spec.family == Family::Fractional {
        let order = FracOrder::new(spec.alpha)?;
        Ok(fracsolve::solve_caputo_system(
            &field,
            order,
            initial,
            spec.t0,
            spec.t_end,
            spec.fractional_step(),
            spec.escape_radius,
        )?)
    } else {
        Ok(ode::integrate(&field, initial, &spec.integrate_options()))
    }
}

/// `G(x)`: the plain antiderivative of `g` for the classical and fractional
/// families, the kernel-weighted `J_{F,0}(g)(x)` for the others.
pub struct FirstIntegral {
    inner: GInner,
}

enum GInner {
    Plain(Antiderivative<BoxFn>),
    Weighted { g: Expr, kernel: Kernel, order: f64 },
}

impl FirstIntegral {
    pub fn eval(&self, x: f64) -> Result<f64, NCalcError> {
        match &self.inner {
            GInner::Plain(p) => Ok(p.eval(x)?),
            GInner::Weighted { g, kernel, order } => {
                let gx = of_x(g);
                ncalc::j_signed_axis(&gx, kernel, *order, x, &QuadOptions::tight())
            }
        }
    }
}

impl fmt::Debug for FirstIntegral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.inner {
            GInner::Plain(_) => f.write_str("FirstIntegral::Plain"),
            GInner::Weighted { kernel, .. } => write!(f, "FirstIntegral::Weighted({kernel})"),
        }
    }
}

pub fn first_integral_g(spec: &ScenarioSpec) -> Result<FirstIntegral, SpecError> {
    let g = spec.require("g")?;
    let inner = match spec.family {
        Family::Classical | Family::Fractional => GInner::Plain(Antiderivative::new(of_x(g))),
        Family::Nonconformable | Family::Generalized => GInner::Weighted {
            g: g.clone(),
            kernel: spec.kernel.clone(),
            order: spec.alpha,
        },
    };
    Ok(FirstIntegral { inner })
}

/// Theorems whose hypotheses and conclusions can be checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Theorem {
    /// Oscillation criterion for the non-conformable equation.
    TO,
    /// Continuability of the non-conformable equation.
    LemmaL1,
    /// Boundedness criterion for the non-conformable equation.
    T2,
    /// Failure of the divergence condition for growing `a(t)`.
    LemmaL2,
    /// Boundedness under the damping-decay and coercivity conditions.
    FinalBounded,
    /// Continuability of the generalized system.
    T1,
    /// Stability of the trivial solution of the Caputo system.
    CaputoStability,
    /// Unique limit cycle of the classical system.
    LienardCycle,
}

impl Theorem {
    pub const ALL: [Theorem; 8] = [
        Theorem::TO,
        Theorem::LemmaL1,
        Theorem::T2,
        Theorem::LemmaL2,
        Theorem::FinalBounded,
        Theorem::T1,
        Theorem::CaputoStability,
        Theorem::LienardCycle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Theorem::TO => "t_o",
            Theorem::LemmaL1 => "lemma_l1",
            Theorem::T2 => "t_2",
            Theorem::LemmaL2 => "lemma_l2",
            Theorem::FinalBounded => "final_bounded",
            Theorem::T1 => "t_1",
            Theorem::CaputoStability => "caputo_stability",
            Theorem::LienardCycle => "lienard_cycle",
        }
    }

    pub fn family(self) -> Family {
        match self {
            Theorem::TO | Theorem::LemmaL1 | Theorem::T2 | Theorem::LemmaL2 | Theorem::FinalBounded => {
                Family::Nonconformable
            }
            Theorem::T1 => Family::Generalized,
            Theorem::CaputoStability => Family::Fractional,
            Theorem::LienardCycle => Family::Classical,
        }
    }

    /// Conditions reported for this theorem, standing assumptions included.
    pub fn conditions(self) -> &'static [&'static str] {
        const STANDING: [&str; 3] = ["xg_positive", "J_g_infinite", "a_bounded"];
        match self {
            Theorem::TO => &[
                STANDING[0],
                STANDING[1],
                STANDING[2],
                "neg_part_integral_finite",
                "F_bounded",
                "o1_divergence",
            ],
            Theorem::LemmaL1 => &[STANDING[0], STANDING[1], STANDING[2], "f_in_F_g_class", "N_a_positive"],
            Theorem::T2 => &[
                STANDING[0],
                STANDING[1],
                STANDING[2],
                "f_in_F_g_class",
                "N_a_positive",
                "F_bounded",
                "G_infinite",
                "o1_divergence",
            ],
            Theorem::LemmaL2 => &[
                STANDING[0],
                STANDING[1],
                STANDING[2],
                "f_in_F_g_class",
                "N_a_positive",
                "F_bounded",
                "G_infinite",
                "g_nonincreasing",
                "g_not_increasing_everywhere",
                "a_to_infinity",
            ],
            Theorem::FinalBounded => &[
                STANDING[0],
                STANDING[1],
                STANDING[2],
                "f_in_F_g_class",
                "N_a_positive",
                "F_bounded",
                "G_infinite",
                "g_nonincreasing",
                "g_not_increasing_everywhere",
                "a_to_infinity",
                "neg_part_integral_finite",
                "G_coercive",
            ],
            Theorem::T1 => &[
                "E_partial_bounded",
                "E_ap_limsup",
                "p_positive",
                "gGamma_lower_bound",
                "J_xg_lower_bound",
                "Gamma_bounded",
                "a_positive",
                "a_limsup_finite",
            ],
            Theorem::CaputoStability => &["f_positive", "f_lipschitz", "xg_positive"],
            Theorem::LienardCycle => &[
                "g_identity",
                "F_odd",
                "F_unique_positive_root",
                "F_increasing_beyond_root",
            ],
        }
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Theorem {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Theorem::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown theorem `{s}`"))
    }
}

/// Outcome of one grid check.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "verdict"))]
pub enum Verdict {
    HoldsOnGrid { detail: String },
    Violated { witness: Vec<f64>, detail: String },
    Inconclusive { reason: String },
}

impl Verdict {
    pub fn holds(detail: impl Into<String>) -> Self {
        Verdict::HoldsOnGrid {
            detail: detail.into(),
        }
    }

    pub fn violated(witness: Vec<f64>, detail: impl Into<String>) -> Self {
        Verdict::Violated {
            witness,
            detail: detail.into(),
        }
    }

    pub fn inconclusive(reason: impl Into<String>) -> Self {
        Verdict::Inconclusive {
            reason: reason.into(),
        }
    }

    pub fn is_holds(&self) -> bool {
        matches!(self, Verdict::HoldsOnGrid { .. })
    }

    pub fn is_violated(&self) -> bool {
        matches!(self, Verdict::Violated { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "verdict"))]
pub enum Conclusion {
    Confirmed { detail: String },
    Falsified { witness: String, detail: String },
    Inconclusive { reason: String },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QualReport {
    pub theorem: Theorem,
    pub hypotheses: BTreeMap<String, Verdict>,
    pub conclusion: Conclusion,
    pub notes: Vec<String>,
}

/// Grids and schedules for the hypothesis checks.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOptions {
    /// Space grid `[−X, X]`.
    pub space_extent: f64,
    pub space_points: usize,
    /// Second-variable grid `[−Y, Y]` for the generalized family.
    pub y_extent: f64,
    /// Time grid `[t0, t0 + span]`, log-spaced.
    pub time_span: f64,
    pub time_points: usize,
    /// Slopes `k` in the divergence condition.
    pub k_values: Vec<f64>,
    /// Start times in the divergence condition; empty means the scenario's t0.
    pub start_times: Vec<f64>,
    pub horizons: Horizons,
    /// Ball radius and points per axis for the partial-derivative bound.
    pub ball_radius: f64,
    pub ball_points: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            space_extent: 100.0,
            space_points: 2001,
            y_extent: 100.0,
            time_span: 1000.0,
            time_points: 2001,
            k_values: vec![0.5, 1.0, 2.0],
            start_times: Vec::new(),
            horizons: Horizons::default(),
            ball_radius: 1.0,
            ball_points: 11,
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// `t0 + ((1 + span)^{i/(n−1)} − 1)`, `i = 0..n`.
pub fn log_time_grid(t0: f64, span: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| t0 + libm::pow(1.0 + span, i as f64 / (n - 1) as f64) - 1.0)
        .collect()
}

/// Abscissae `X·2^{-k}`, `k = 6, …, 0`.
fn doubling_points(extent: f64) -> Vec<f64> {
    (0..=6).rev().map(|k| extent / (1u32 << k) as f64).collect()
}

enum Growth {
    Unbounded,
    Bounded { limit: f64 },
    Unclear,
}

/// Classifies values at doubling abscissae: sustained positive increments
/// mean growth without bound, geometrically shrinking increments a limit.
fn doubling_growth(values: &[f64]) -> Growth {
    let inc: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    if inc.len() < 3 {
        return Growth::Unclear;
    }
    let tail = &inc[inc.len() - 3..];
    let last = values[values.len() - 1];
    if tail.iter().all(|d| libm::fabs(*d) <= 1e-12 * libm::fmax(1.0, libm::fabs(last))) {
        return Growth::Bounded { limit: last };
    }
    let ratio = |a: f64, b: f64| if a == 0.0 { f64::INFINITY } else { b / a };
    let r1 = ratio(tail[0], tail[1]);
    let r2 = ratio(tail[1], tail[2]);
    if tail.iter().all(|d| *d > 0.0) && r1 >= 0.9 && r2 >= 0.9 {
        return Growth::Unbounded;
    }
    if libm::fabs(r1) <= 0.75 && libm::fabs(r2) <= 0.75 {
        let extra = if r2 > 0.0 { tail[2] * r2 / (1.0 - r2) } else { 0.0 };
        return Growth::Bounded { limit: last + extra };
    }
    Growth::Unclear
}

fn fmt_g(v: f64) -> String {
    format!("{v:.6e}")
}

/// Evaluates a one-variable expression, `None` on failure.
fn ev(expr: &Expr, var: Var, v: f64) -> Option<f64> {
    expr.eval(&Bindings::new().set(var, v)).ok().filter(|r| r.is_finite())
}

fn check_xg_positive(g: &Expr, grid: &[f64]) -> Verdict {
    for &x in grid {
        if libm::fabs(x) < 1e-12 {
            continue;
        }
        match ev(g, Var::X, x) {
            Some(gx) if x * gx > 0.0 => {}
            Some(gx) => return Verdict::violated(vec![x], format!("x·g(x) = {}", fmt_g(x * gx))),
            None => return Verdict::inconclusive(format!("g not evaluable at x = {x}")),
        }
    }
    Verdict::holds("x·g(x) > 0 at every nonzero grid point")
}

/// `sup |h|` over the grid restricted to `|x| ≤ limit`, with its argmax.
fn sup_abs<F: Fn(f64) -> Option<f64>>(h: &F, grid: &[f64], limit: f64) -> Option<(f64, f64)> {
    let mut best = (0.0, 0.0);
    for &x in grid.iter().filter(|x| libm::fabs(**x) <= limit * (1.0 + 1e-12)) {
        let v = libm::fabs(h(x)?);
        if v > best.0 {
            best = (v, x);
        }
    }
    Some(best)
}

/// Boundedness by the doubling heuristic: the sup over `[−X, X]` may exceed
/// the sup over `[−X/2, X/2]` by at most 5%.
fn check_bounded<F: Fn(f64) -> Option<f64>>(h: &F, name: &str, grid: &[f64], extent: f64) -> Verdict {
    let (Some(full), Some(half)) = (sup_abs(h, grid, extent), sup_abs(h, grid, extent / 2.0)) else {
        return Verdict::inconclusive(format!("{name} not evaluable on the grid"));
    };
    if full.0 <= 1.05 * half.0 + 1e-12 {
        Verdict::holds(format!("sup |{name}| = {}", fmt_g(full.0)))
    } else {
        Verdict::violated(
            vec![full.1],
            format!(
                "sup |{name}| grows from {} to {} when the range doubles",
                fmt_g(half.0),
                fmt_g(full.0)
            ),
        )
    }
}

fn growth_verdict<F: Fn(f64) -> Option<f64>>(h: &F, name: &str, points: &[f64], upward: bool) -> Verdict {
    let mut values = Vec::with_capacity(points.len());
    for &x in points {
        match h(x) {
            Some(v) => values.push(if upward { v } else { -v }),
            None => return Verdict::inconclusive(format!("{name} not evaluable at {x}")),
        }
    }
    let target = if upward { "+∞" } else { "−∞" };
    match doubling_growth(&values) {
        Growth::Unbounded => Verdict::holds(format!("{name} → {target} along doubling arguments")),
        Growth::Bounded { limit } => {
            let limit = if upward { limit } else { -limit };
            Verdict::violated(
                vec![points[points.len() - 1]],
                format!("{name} levels off near {}", fmt_g(limit)),
            )
        }
        Growth::Unclear => Verdict::inconclusive(format!("growth of {name} is not settled")),
    }
}

fn combine(verdicts: Vec<Verdict>, summary: &str) -> Verdict {
    if let Some(v) = verdicts.iter().find(|v| v.is_violated()) {
        return v.clone();
    }
    if let Some(v) = verdicts.iter().find(|v| !v.is_holds()) {
        return v.clone();
    }
    Verdict::holds(summary)
}

fn divergence_verdict(
    verdict: Result<DivergenceVerdict, NCalcError>,
    want: Option<bool>,
    label: &str,
) -> Verdict {
    match verdict {
        Err(e) => Verdict::inconclusive(format!("{label}: {e}")),
        Ok(v) => match (v.status, want) {
            (DivergenceStatus::Converged { value }, None) => {
                Verdict::holds(format!("{label} converges to {}", fmt_g(value)))
            }
            (DivergenceStatus::Converged { value }, Some(_)) => {
                let last = v.horizons.last().map(|h| h.0).unwrap_or(f64::NAN);
                Verdict::violated(vec![last], format!("{label} converges to {}", fmt_g(value)))
            }
            (DivergenceStatus::Diverging { positive, growth_exponent }, Some(p)) if positive == p => {
                Verdict::holds(format!("{label} diverges (growth exponent {growth_exponent:.3})"))
            }
            (DivergenceStatus::Diverging { positive, .. }, _) => {
                let last = v.horizons.last().map(|h| h.0).unwrap_or(f64::NAN);
                let sign = if positive { "+∞" } else { "−∞" };
                Verdict::violated(vec![last], format!("{label} diverges to {sign}"))
            }
            (DivergenceStatus::Inconclusive, _) => {
                Verdict::inconclusive(format!("{label}: partial integrals do not settle"))
            }
        },
    }
}

struct Checker<'a> {
    spec: &'a ScenarioSpec,
    opts: &'a CheckOptions,
    space: Vec<f64>,
    cache: BTreeMap<&'static str, Verdict>,
}

impl<'a> Checker<'a> {
    fn new(spec: &'a ScenarioSpec, opts: &'a CheckOptions) -> Self {
        let x = opts.space_extent;
        Self {
            spec,
            opts,
            space: linspace(-x, x, opts.space_points),
            cache: BTreeMap::new(),
        }
    }

    fn expr(&self, name: &str) -> Option<&'a Expr> {
        self.spec.functions.get(name)
    }

    fn start(&self) -> f64 {
        self.spec.t0
    }

    fn time_grid(&self) -> Vec<f64> {
        log_time_grid(self.spec.t0, self.opts.time_span, self.opts.time_points)
    }

    fn run(&mut self, name: &'static str) -> Verdict {
        if let Some(v) = self.cache.get(name) {
            return v.clone();
        }
        let missing = |n: &str| Verdict::inconclusive(format!("function `{n}` is not defined"));
        let v = match name {
            "xg_positive" => match self.expr("g") {
                Some(g) => check_xg_positive(g, &self.space),
                None => missing("g"),
            },
            "J_g_infinite" => self.j_g_infinite(),
            "a_bounded" => self.a_bounded(),
            "neg_part_integral_finite" => self.neg_part_integral(),
            "F_bounded" => self.f_bounded(),
            "o1_divergence" => self.o1_divergence(),
            "f_in_F_g_class" => Verdict::inconclusive(
                "the function class F_g(R) is never defined, so membership cannot be checked",
            ),
            "N_a_positive" => self.n_a_positive(),
            "G_infinite" => self.g_growth(true, false),
            "G_coercive" => self.g_growth(true, true),
            "g_nonincreasing" => self.g_monotone(true),
            "g_not_increasing_everywhere" => self.g_monotone(false),
            "a_to_infinity" => self.a_to_infinity(),
            "E_partial_bounded" => self.e_partial_bounded(),
            "E_ap_limsup" => self.e_ap_limsup(),
            "p_positive" => self.p_positive(),
            "gGamma_lower_bound" => self.g_gamma_lower_bound(),
            "J_xg_lower_bound" => self.j_xg_lower_bound(),
            "Gamma_bounded" => match self.expr("Gamma_x") {
                Some(gm) => check_bounded(&|x| ev(gm, Var::X, x), "Γ", &self.space, self.opts.space_extent),
                None => missing("Gamma_x"),
            },
            "a_positive" => self.a_xy_positive(),
            "a_limsup_finite" => self.a_xy_limsup(),
            "f_positive" => self.f_positive(),
            "f_lipschitz" => self.f_lipschitz(),
            "g_identity" => self.g_identity(),
            "F_odd" => self.big_f_odd(),
            "F_unique_positive_root" => self.big_f_root().0,
            "F_increasing_beyond_root" => self.big_f_increasing(),
            other => Verdict::inconclusive(format!("no checker for `{other}`")),
        };
        self.cache.insert(name, v.clone());
        v
    }

    fn a_of_t(&self) -> Option<&'a Expr> {
        self.expr("a")
    }

    fn j_g_infinite(&self) -> Verdict {
        let Some(g) = self.expr("g") else {
            return Verdict::inconclusive("g is not defined");
        };
        let gt = |t: f64| ev(g, Var::X, t).unwrap_or(f64::NAN);
        let res = ncalc::j_improper_fn(&gt, &self.spec.kernel, self.spec.alpha, self.start(), &self.opts.horizons);
        divergence_verdict(res, Some(true), "J g")
    }

    fn a_bounded(&self) -> Verdict {
        let Some(a) = self.a_of_t() else {
            return Verdict::inconclusive("a is not defined");
        };
        let grid = self.time_grid();
        let half_end = self.spec.t0 + self.opts.time_span / 2.0;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut lo_half, mut hi_half) = (f64::INFINITY, f64::NEG_INFINITY);
        for &t in &grid {
            let Some(v) = ev(a, Var::T, t) else {
                return Verdict::inconclusive(format!("a not evaluable at t = {t}"));
            };
            if v <= 0.0 {
                return Verdict::violated(vec![t], format!("a(t) = {} is not positive", fmt_g(v)));
            }
            lo = lo.min(v);
            hi = hi.max(v);
            if t <= half_end {
                lo_half = lo_half.min(v);
                hi_half = hi_half.max(v);
            }
        }
        if hi > 1.05 * hi_half {
            return Verdict::violated(
                vec![grid[grid.len() - 1]],
                format!("a grows without settling (sup {} vs {} on the first half)", fmt_g(hi), fmt_g(hi_half)),
            );
        }
        if lo < lo_half / 1.05 {
            return Verdict::violated(
                vec![grid[grid.len() - 1]],
                format!("a decays toward 0 (inf {} vs {} on the first half)", fmt_g(lo), fmt_g(lo_half)),
            );
        }
        Verdict::holds(format!("{} ≤ a(t) ≤ {}", fmt_g(lo), fmt_g(hi)))
    }

    fn n_a(&self, t: f64) -> f64 {
        match self.a_of_t() {
            Some(a) => ncalc::n_derivative(a, &self.spec.kernel, self.spec.alpha, t)
                .map(|r| r.value)
                .unwrap_or(f64::NAN),
            None => f64::NAN,
        }
    }

    fn n_a_positive(&self) -> Verdict {
        if self.a_of_t().is_none() {
            return Verdict::inconclusive("a is not defined");
        }
        for t in self.time_grid() {
            let v = self.n_a(t);
            if !v.is_finite() {
                return Verdict::inconclusive(format!("N a not evaluable at t = {t}"));
            }
            if v <= 0.0 {
                return Verdict::violated(vec![t], format!("N a(t) = {}", fmt_g(v)));
            }
        }
        Verdict::holds("N a > 0 on the time grid")
    }

    fn neg_part_integral(&self) -> Verdict {
        let Some(a) = self.a_of_t() else {
            return Verdict::inconclusive("a is not defined");
        };
        let integrand = |t: f64| {
            let na = self.n_a(t);
            let at = ev(a, Var::T, t).unwrap_or(f64::NAN);
            libm::fmax(-na, 0.0) / at
        };
        let res = ncalc::j_improper_fn(
            &integrand,
            &self.spec.kernel,
            self.spec.alpha,
            self.start(),
            &self.opts.horizons,
        );
        divergence_verdict(res, None, "J((N a)⁻ / a)")
    }

    fn f_bounded(&self) -> Verdict {
        let Some(f) = self.expr("f") else {
            return Verdict::inconclusive("f is not defined");
        };
        let prim = Antiderivative::new(of_x(f));
        check_bounded(&|x| prim.eval(x).ok(), "F", &self.space, self.opts.space_extent)
    }

    fn o1_divergence(&self) -> Verdict {
        let (Some(a), Some(g)) = (self.a_of_t(), self.expr("g")) else {
            return Verdict::inconclusive("a or g is not defined");
        };
        let starts = if self.opts.start_times.is_empty() {
            vec![self.start()]
        } else {
            self.opts.start_times.clone()
        };
        let mut verdicts = Vec::new();
        for &s in &starts {
            for &k in &self.opts.k_values {
                for sign in [1.0, -1.0] {
                    let integrand = |t: f64| {
                        let at = ev(a, Var::T, t).unwrap_or(f64::NAN);
                        let gv = ev(g, Var::X, sign * k * (t - s)).unwrap_or(f64::NAN);
                        at * gv
                    };
                    let res = ncalc::j_improper_fn(
                        &integrand,
                        &self.spec.kernel,
                        self.spec.alpha,
                        s,
                        &self.opts.horizons,
                    );
                    let label = format!("k = {k}, t0 = {s}, sign {}", if sign > 0.0 { "+" } else { "−" });
                    let v = divergence_verdict(res, Some(sign > 0.0), &label);
                    let v = match v {
                        Verdict::Violated { detail, .. } => Verdict::violated(vec![k, s, sign], detail),
                        other => other,
                    };
                    verdicts.push(v);
                }
            }
        }
        combine(verdicts, "J a(t) g(±k(t − t0)) diverges to ±∞ for every k and t0 tried")
    }

    fn g_growth(&self, positive_side: bool, both: bool) -> Verdict {
        let big_g = match first_integral_g(self.spec) {
            Ok(g) => g,
            Err(e) => return Verdict::inconclusive(e.to_string()),
        };
        let h = |x: f64| big_g.eval(x).ok().filter(|v| v.is_finite());
        let pts = doubling_points(self.opts.space_extent);
        let mut verdicts = Vec::new();
        if positive_side || both {
            verdicts.push(growth_verdict(&h, "G(x)", &pts, true));
        }
        if both {
            let neg: Vec<f64> = pts.iter().map(|x| -x).collect();
            verdicts.push(match growth_verdict(&h, "G(−x)", &neg, true) {
                Verdict::Violated { detail, .. } => {
                    Verdict::violated(vec![-self.opts.space_extent], detail)
                }
                other => other,
            });
        }
        combine(verdicts, if both { "G(x) → +∞ as |x| → ∞" } else { "G(+∞) = +∞" })
    }

    /// `nonincreasing = true`: `g` nonincreasing on the grid. Otherwise:
    /// `g` fails to be increasing somewhere on the grid.
    fn g_monotone(&self, nonincreasing: bool) -> Verdict {
        let Some(g) = self.expr("g") else {
            return Verdict::inconclusive("g is not defined");
        };
        let mut vals = Vec::with_capacity(self.space.len());
        for &x in &self.space {
            match ev(g, Var::X, x) {
                Some(v) => vals.push(v),
                None => return Verdict::inconclusive(format!("g not evaluable at x = {x}")),
            }
        }
        let rise = vals.windows(2).position(|w| w[1] > w[0]);
        let drop = vals.windows(2).position(|w| w[1] <= w[0]);
        if nonincreasing {
            match rise {
                Some(i) => Verdict::violated(vec![self.space[i]], "g increases here"),
                None => Verdict::holds("g is nonincreasing on the grid"),
            }
        } else {
            match drop {
                Some(i) => Verdict::holds(format!("g does not increase at x = {}", self.space[i])),
                None => Verdict::violated(vec![self.space[0]], "g is strictly increasing on the whole grid"),
            }
        }
    }

    fn a_to_infinity(&self) -> Verdict {
        let Some(a) = self.a_of_t() else {
            return Verdict::inconclusive("a is not defined");
        };
        let pts: Vec<f64> = doubling_points(self.opts.time_span)
            .into_iter()
            .map(|t| self.spec.t0 + t)
            .collect();
        growth_verdict(&|t| ev(a, Var::T, t), "a(t)", &pts, true)
    }

    fn e_expr(&self) -> Option<Expr> {
        composite_e(self.spec).ok()
    }

    fn e_partial_bounded(&self) -> Verdict {
        let Some(e) = self.e_expr() else {
            return Verdict::inconclusive("E is not defined");
        };
        let (cx, cy) = (self.spec.x0, self.spec.y0);
        let r = self.opts.ball_radius;
        let axis = linspace(-r, r, self.opts.ball_points);
        let mut sup: f64 = 0.0;
        let mut evaluated = 0usize;
        let mut skipped = 0usize;
        for &dx in &axis {
            for &dy in &axis {
                if dx * dx + dy * dy >= r * r {
                    continue;
                }
                let (x, y) = (cx + dx, cy + dy);
                // The defining limit needs a positive perturbed coordinate
                // when the kernel is singular at the origin.
                if self.spec.kernel.singular_at_zero() && x <= 0.0 {
                    skipped += 1;
                    continue;
                }
                match ncalc::partial_n_derivative(&e, Axis::X, &self.spec.kernel, self.spec.alpha, (x, y), None) {
                    Ok(d) if d.value.is_finite() => {
                        sup = sup.max(libm::fabs(d.value));
                        evaluated += 1;
                    }
                    _ => {
                        return Verdict::violated(vec![x, y], "N_x E is not finite here");
                    }
                }
            }
        }
        if evaluated == 0 {
            return Verdict::inconclusive("no ball point admits the partial derivative");
        }
        let mut detail = format!("sup |N_x E| = {} over {evaluated} ball points", fmt_g(sup));
        if skipped > 0 {
            detail.push_str(&format!(" ({skipped} points with x ≤ 0 skipped)"));
        }
        Verdict::holds(detail)
    }

    fn e_ap_limsup(&self) -> Verdict {
        let (Some(a), Some(h), Some(al), Some(p)) =
            (self.expr("a"), self.expr("H"), self.expr("alpha_y"), self.expr("p"))
        else {
            return Verdict::inconclusive("a, H, alpha_y or p is not defined");
        };
        let tilde = |s: f64| {
            let a0 = a.eval(&Bindings::new().x(0.0).y(s)).unwrap_or(f64::NAN);
            let hv = al
                .eval(&Bindings::new().y(s))
                .and_then(|u| h.eval(&Bindings::new().x(u)))
                .unwrap_or(f64::NAN);
            let pv = p.eval(&Bindings::new().y(s)).unwrap_or(f64::NAN);
            a0 * hv / pv
        };
        let e_ap = |y: f64| {
            ncalc::j_signed_axis(&tilde, &self.spec.kernel, self.spec.alpha, y, &QuadOptions::default())
                .ok()
                .filter(|v| v.is_finite())
        };
        let pts = doubling_points(self.opts.y_extent);
        let neg: Vec<f64> = pts.iter().map(|y| -y).collect();
        let up = growth_verdict(&e_ap, "E_ap(y)", &pts, true);
        let down = growth_verdict(&e_ap, "E_ap(−y)", &neg, false);
        let down = match down {
            Verdict::Violated { detail, .. } => Verdict::violated(vec![-self.opts.y_extent], detail),
            other => other,
        };
        combine(vec![up, down], "E_ap(y) → ±∞ as y → ±∞")
    }

    fn p_positive(&self) -> Verdict {
        let Some(p) = self.expr("p") else {
            return Verdict::inconclusive("p is not defined");
        };
        let y = self.opts.y_extent;
        for v in linspace(-y, y, self.opts.space_points) {
            match ev(p, Var::Y, v) {
                Some(pv) if pv > 0.0 => {}
                Some(pv) => return Verdict::violated(vec![v], format!("p(y) = {}", fmt_g(pv))),
                None => return Verdict::inconclusive(format!("p not evaluable at y = {v}")),
            }
        }
        Verdict::holds("p > 0 on the grid")
    }

    fn lower_bound<F: Fn(f64) -> Option<f64>>(&self, h: &F, name: &str) -> Verdict {
        let x = self.opts.space_extent;
        let inf_over = |limit: f64| -> Option<(f64, f64)> {
            let mut best = (f64::INFINITY, 0.0);
            for &s in self.space.iter().filter(|s| libm::fabs(**s) <= limit * (1.0 + 1e-12)) {
                let v = h(s)?;
                if v < best.0 {
                    best = (v, s);
                }
            }
            Some(best)
        };
        let (Some(full), Some(half)) = (inf_over(x), inf_over(x / 2.0)) else {
            return Verdict::inconclusive(format!("{name} not evaluable on the grid"));
        };
        if full.0 >= 0.0 || full.0 >= 1.05 * half.0 - 1e-12 {
            Verdict::holds(format!("{name} ≥ −λ with λ = {}", fmt_g(libm::fmax(0.0, -full.0))))
        } else {
            Verdict::violated(
                vec![full.1],
                format!("inf {name} keeps falling ({} then {})", fmt_g(half.0), fmt_g(full.0)),
            )
        }
    }

    fn g_gamma_lower_bound(&self) -> Verdict {
        let (Some(g), Some(gm)) = (self.expr("g"), self.expr("Gamma_x")) else {
            return Verdict::inconclusive("g or Gamma_x is not defined");
        };
        self.lower_bound(&|x| Some(ev(g, Var::X, x)? * ev(gm, Var::X, x)?), "g·Γ")
    }

    fn j_xg_lower_bound(&self) -> Verdict {
        let Some(g) = self.expr("g") else {
            return Verdict::inconclusive("g is not defined");
        };
        let xg = |s: f64| s * ev(g, Var::X, s).unwrap_or(f64::NAN);
        let j = |x: f64| {
            ncalc::j_signed_axis(&xg, &self.spec.kernel, self.spec.alpha, x, &QuadOptions::default())
                .ok()
                .filter(|v| v.is_finite())
        };
        let pts = doubling_points(self.opts.space_extent);
        let mut values = Vec::new();
        for &x in &pts {
            for s in [x, -x] {
                match j(s) {
                    Some(v) => values.push((s, v)),
                    None => return Verdict::inconclusive(format!("J(xg) not evaluable at {s}")),
                }
            }
        }
        let neg_side: Vec<f64> = values.iter().filter(|(s, _)| *s < 0.0).map(|(_, v)| -v).collect();
        let pos_side: Vec<f64> = values.iter().filter(|(s, _)| *s > 0.0).map(|(_, v)| -v).collect();
        for (side, sign) in [(&neg_side, -1.0), (&pos_side, 1.0)] {
            if let Growth::Unbounded = doubling_growth(side) {
                return Verdict::violated(
                    vec![sign * self.opts.space_extent],
                    "J(xg) decreases without bound",
                );
            }
        }
        let inf = values.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
        Verdict::holds(format!("J(xg) ≥ −λ with λ = {}", fmt_g(libm::fmax(0.0, -inf))))
    }

    fn a_xy_positive(&self) -> Verdict {
        let Some(a) = self.expr("a") else {
            return Verdict::inconclusive("a is not defined");
        };
        for x in linspace(-self.opts.space_extent, self.opts.space_extent, 41) {
            for y in linspace(-self.opts.y_extent, self.opts.y_extent, 41) {
                match a.eval(&Bindings::new().x(x).y(y)) {
                    Ok(v) if v.is_finite() && v > 0.0 => {}
                    Ok(v) if v.is_finite() => {
                        return Verdict::violated(vec![x, y], format!("a(x, y) = {}", fmt_g(v)))
                    }
                    _ => return Verdict::inconclusive(format!("a not evaluable at ({x}, {y})")),
                }
            }
        }
        Verdict::holds("a(x, y) > 0 on the grid")
    }

    fn a_xy_limsup(&self) -> Verdict {
        let Some(a) = self.expr("a") else {
            return Verdict::inconclusive("a is not defined");
        };
        let mut worst: f64 = 0.0;
        for y in linspace(-self.opts.y_extent, self.opts.y_extent, 11) {
            let h = |x: f64| a.eval(&Bindings::new().x(x).y(y)).ok().filter(|v| v.is_finite());
            match check_bounded(&h, "a(·, y)", &self.space, self.opts.space_extent) {
                Verdict::HoldsOnGrid { .. } => {
                    worst = worst.max(sup_abs(&h, &self.space, self.opts.space_extent).map_or(0.0, |s| s.0));
                }
                Verdict::Violated { witness, detail } => {
                    let mut w = witness;
                    w.push(y);
                    return Verdict::violated(w, detail);
                }
                other => return other,
            }
        }
        Verdict::holds(format!("sup a = {} on the grid", fmt_g(worst)))
    }

    fn f_positive(&self) -> Verdict {
        let Some(f) = self.expr("f") else {
            return Verdict::inconclusive("f is not defined");
        };
        let mut min = f64::INFINITY;
        for &x in &self.space {
            match ev(f, Var::X, x) {
                Some(v) if v > 0.0 => min = min.min(v),
                Some(v) => return Verdict::violated(vec![x], format!("f(x) = {}", fmt_g(v))),
                None => return Verdict::inconclusive(format!("f not evaluable at x = {x}")),
            }
        }
        Verdict::holds(format!("min f = {}", fmt_g(min)))
    }

    fn f_lipschitz(&self) -> Verdict {
        let Some(f) = self.expr("f") else {
            return Verdict::inconclusive("f is not defined");
        };
        let x = self.opts.space_extent;
        let slope = |n: usize| -> Option<(f64, f64)> {
            let grid = linspace(-x, x, n);
            let mut best = (0.0, 0.0);
            let mut prev = ev(f, Var::X, grid[0])?;
            for w in grid.windows(2) {
                let v = ev(f, Var::X, w[1])?;
                let s = libm::fabs(v - prev) / (w[1] - w[0]);
                if s > best.0 {
                    best = (s, w[1]);
                }
                prev = v;
            }
            Some(best)
        };
        let n = self.opts.space_points;
        let (Some(coarse), Some(fine)) = (slope(n), slope(4 * n)) else {
            return Verdict::inconclusive("f not evaluable on the grid");
        };
        if fine.0 <= 2.0 * coarse.0 + 1e-9 {
            Verdict::holds(format!("Lipschitz constant ≈ {}", fmt_g(fine.0)))
        } else {
            Verdict::violated(
                vec![fine.1],
                format!("slopes grow under refinement ({} then {})", fmt_g(coarse.0), fmt_g(fine.0)),
            )
        }
    }

    fn g_identity(&self) -> Verdict {
        let Some(g) = self.expr("g") else {
            return Verdict::inconclusive("g is not defined");
        };
        for &x in &self.space {
            match ev(g, Var::X, x) {
                Some(v) if libm::fabs(v - x) <= 1e-12 * libm::fmax(1.0, libm::fabs(x)) => {}
                Some(v) => return Verdict::violated(vec![x], format!("g(x) = {}", fmt_g(v))),
                None => return Verdict::inconclusive(format!("g not evaluable at x = {x}")),
            }
        }
        Verdict::holds("g(x) = x on the grid")
    }

    fn big_f_values(&self) -> Option<Vec<f64>> {
        let f = self.expr("f")?;
        let prim = Antiderivative::new(of_x(f));
        self.space.iter().map(|&x| prim.eval(x).ok()).collect()
    }

    fn big_f_odd(&self) -> Verdict {
        let Some(vals) = self.big_f_values() else {
            return Verdict::inconclusive("F not evaluable on the grid");
        };
        let n = vals.len();
        for i in 0..n / 2 {
            let (lo, hi) = (vals[i], vals[n - 1 - i]);
            if libm::fabs(lo + hi) > 1e-8 * libm::fmax(1.0, libm::fabs(hi)) {
                return Verdict::violated(vec![self.space[n - 1 - i]], format!("F(x) + F(−x) = {}", fmt_g(lo + hi)));
            }
        }
        Verdict::holds("F is odd on the grid")
    }

    /// Verdict and, when unique, the positive root of `F`.
    fn big_f_root(&self) -> (Verdict, Option<f64>) {
        let Some(f) = self.expr("f") else {
            return (Verdict::inconclusive("f is not defined"), None);
        };
        let prim = Antiderivative::new(of_x(f));
        let pos: Vec<f64> = self.space.iter().copied().filter(|x| *x > 0.0).collect();
        let mut vals = Vec::with_capacity(pos.len());
        for &x in &pos {
            match prim.eval(x) {
                Ok(v) => vals.push(v),
                Err(_) => return (Verdict::inconclusive(format!("F not evaluable at {x}")), None),
            }
        }
        let crossings: Vec<usize> = (0..vals.len() - 1)
            .filter(|&i| vals[i] == 0.0 || vals[i] * vals[i + 1] < 0.0)
            .collect();
        match crossings.as_slice() {
            [] => (Verdict::violated(vec![], "F has no positive root on the grid"), None),
            [i] => {
                let (mut lo, mut hi) = (pos[*i], pos[i + 1]);
                let flo = vals[*i];
                if flo == 0.0 {
                    return (Verdict::holds(format!("unique positive root at {lo}")), Some(lo));
                }
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    match prim.eval(mid) {
                        Ok(v) if v * flo > 0.0 => lo = mid,
                        Ok(_) => hi = mid,
                        Err(_) => break,
                    }
                }
                let root = 0.5 * (lo + hi);
                (Verdict::holds(format!("unique positive root at {root:.12}")), Some(root))
            }
            many => (
                Verdict::violated(
                    many.iter().map(|&i| pos[i]).collect(),
                    format!("F changes sign {} times on x > 0", many.len()),
                ),
                None,
            ),
        }
    }

    fn big_f_increasing(&self) -> Verdict {
        let (_, Some(root)) = self.big_f_root() else {
            return Verdict::inconclusive("no unique positive root to start from");
        };
        let Some(f) = self.expr("f") else {
            return Verdict::inconclusive("f is not defined");
        };
        let prim = Antiderivative::new(of_x(f));
        let grid = linspace(root, self.opts.space_extent, self.opts.space_points);
        let mut prev = match prim.eval(root) {
            Ok(v) => v,
            Err(_) => return Verdict::inconclusive("F not evaluable at the root"),
        };
        for &x in &grid[1..] {
            match prim.eval(x) {
                Ok(v) if v >= prev => prev = v,
                Ok(_) => return Verdict::violated(vec![x], "F decreases beyond the root"),
                Err(_) => return Verdict::inconclusive(format!("F not evaluable at {x}")),
            }
        }
        Verdict::holds("F is nondecreasing beyond its positive root")
    }
}

/// Checks every condition named by `theorem` on the configured grids.
pub fn check_hypotheses(
    spec: &ScenarioSpec,
    theorem: Theorem,
    opts: &CheckOptions,
) -> Result<BTreeMap<String, Verdict>, LienardError> {
    spec.validate()?;
    if spec.family != theorem.family() {
        return Err(LienardError::NotApplicable {
            theorem,
            expected: theorem.family(),
            found: spec.family,
        });
    }
    let mut checker = Checker::new(spec, opts);
    Ok(theorem
        .conditions()
        .iter()
        .map(|name| (name.to_string(), checker.run(name)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelKind;

    fn vdp() -> ScenarioSpec {
        ScenarioSpec::new(Family::Classical)
            .with("f", "x^2 - 1")
            .with("g", "x")
    }

    fn nc_oscillator() -> ScenarioSpec {
        ScenarioSpec::new(Family::Nonconformable)
            .with("f", "0")
            .with("g", "x")
            .with("a", "1")
            .kernel(Kernel::new(KernelKind::NcExpInv))
            .alpha(0.5)
            .span(1.0, 200.0)
    }

    #[test]
    fn van_der_pol_field_value() {
        let field = build_field(&vdp()).unwrap();
        let d = field.eval(0.0, [2.0, 0.0]).unwrap();
        assert!((d[0] + 2.0 / 3.0).abs() < 1e-14);
        assert_eq!(d[1], -2.0);
    }

    #[test]
    fn nonconformable_with_ordinary_kernel_matches_second_order_form() {
        let spec = ScenarioSpec::new(Family::Nonconformable)
            .with("f", "x^2 - 1")
            .with("g", "x")
            .with("a", "2 + sin(t)");
        let field = build_field(&spec).unwrap();
        let d = field.eval(0.3, [1.5, 0.2]).unwrap();
        let a = 2.0 + 0.3f64.sin();
        assert_eq!(d[0], 0.2);
        assert!((d[1] - (-(1.5f64 * 1.5 - 1.0) * 0.2 - a * 1.5)).abs() < 1e-14);
    }

    #[test]
    fn generalized_specialization_reproduces_classical_field() {
        let spec = ScenarioSpec::new(Family::Generalized)
            .with("a", "1")
            .with("H", "x")
            .with("alpha_y", "y")
            .with("beta_y", "1")
            .with("Gamma_x", "x^3/3 - x")
            .with("p", "1")
            .with("g", "x");
        let gen = build_field(&spec).unwrap();
        let cls = build_field(&vdp()).unwrap();
        for &(x, y) in &[(2.0, 0.0), (-1.3, 0.7), (0.1, -3.0)] {
            let a = gen.eval(0.5, [x, y]).unwrap();
            let b = cls.eval(0.5, [x, y]).unwrap();
            assert!((a[0] - b[0]).abs() < 1e-13 && (a[1] - b[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn validation_errors() {
        let spec = ScenarioSpec::new(Family::Classical).with("f", "0");
        assert_eq!(
            spec.validate(),
            Err(SpecError::MissingFunction {
                family: Family::Classical,
                name: "g"
            })
        );
        let spec = vdp().with("g", "x*t");
        assert!(matches!(spec.validate(), Err(SpecError::Variable { .. })));
        let spec = vdp().with("p", "1");
        assert!(matches!(spec.validate(), Err(SpecError::UnexpectedFunction { .. })));
        let spec = nc_oscillator().span(0.0, 10.0);
        assert!(matches!(spec.validate(), Err(SpecError::InitialTime { .. })));
        assert!(nc_oscillator().validate().is_ok());
    }

    #[test]
    fn first_integral_values() {
        let g = first_integral_g(&vdp()).unwrap();
        assert!((g.eval(2.0).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(g.eval(0.0).unwrap(), 0.0);
        let cubic = first_integral_g(&vdp().with("g", "x^3")).unwrap();
        assert!((cubic.eval(2.0).unwrap() - 4.0).abs() < 1e-13);
        let sine = first_integral_g(&vdp().with("g", "sin(x)")).unwrap();
        assert!((sine.eval(core::f64::consts::PI).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn harmonic_oscillator_returns() {
        let spec = ScenarioSpec::new(Family::Classical)
            .with("f", "0")
            .with("g", "x")
            .span(0.0, 2.0 * core::f64::consts::PI)
            .tolerances(1e-10, 1e-12);
        let traj = simulate(&spec).unwrap();
        let end = traj.last().unwrap();
        assert!((end.x - 1.0).abs() < 1e-6 && end.y.abs() < 1e-6);
    }

    #[test]
    fn nonconformable_oscillator_hypotheses() {
        let opts = CheckOptions::default();
        let report = check_hypotheses(&nc_oscillator(), Theorem::TO, &opts).unwrap();
        let names: Vec<&str> = report.keys().map(String::as_str).collect();
        let mut expected: Vec<&str> = Theorem::TO.conditions().to_vec();
        expected.sort_unstable();
        assert_eq!(names, expected);
        for key in ["xg_positive", "F_bounded", "a_bounded", "o1_divergence", "J_g_infinite"] {
            assert!(report[key].is_holds(), "{key}: {:?}", report[key]);
        }
        assert!(report["neg_part_integral_finite"].is_holds());
    }

    #[test]
    fn coercive_g_and_sign_changing_n_a() {
        let spec = nc_oscillator().with("g", "x^3").with("a", "2 + sin(t)");
        let opts = CheckOptions::default();
        let report = check_hypotheses(&spec, Theorem::FinalBounded, &opts).unwrap();
        assert!(report["G_coercive"].is_holds(), "{:?}", report["G_coercive"]);
        match &report["N_a_positive"] {
            Verdict::Violated { witness, .. } => {
                let t = witness[0];
                assert!(libm::cos(t) <= 1e-3, "witness {t}");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(report["f_in_F_g_class"], Verdict::Inconclusive { .. }));
    }

    #[test]
    fn saturating_g_is_not_coercive() {
        let spec = nc_oscillator().with("g", "x/(1+x^2)^1.5");
        let report = check_hypotheses(&spec, Theorem::T2, &CheckOptions::default()).unwrap();
        assert!(report["G_infinite"].is_violated(), "{:?}", report["G_infinite"]);
    }

    #[test]
    fn van_der_pol_satisfies_cycle_hypotheses() {
        let report = check_hypotheses(&vdp(), Theorem::LienardCycle, &CheckOptions::default()).unwrap();
        for (k, v) in &report {
            assert!(v.is_holds(), "{k}: {v:?}");
        }
        let bad = vdp().with("f", "x^2 - 1 + x");
        let report = check_hypotheses(&bad, Theorem::LienardCycle, &CheckOptions::default()).unwrap();
        assert!(report["F_odd"].is_violated());
    }

    #[test]
    fn theorem_family_mismatch() {
        let err = check_hypotheses(&vdp(), Theorem::TO, &CheckOptions::default()).unwrap_err();
        assert!(matches!(err, LienardError::NotApplicable { .. }));
    }
}
