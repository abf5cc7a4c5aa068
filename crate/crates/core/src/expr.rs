//! A small arithmetic expression language.
//!
//! Scenario functions (damping, restoring force, time coefficients, kernels)
//! are written as text and parsed into an [`Expr`]. The grammar is:
//!
//! ```text
//! expr    = term   { ("+" | "-") term } ;
//! term    = unary  { ("*" | "/") unary } ;
//! unary   = "-" unary | power ;
//! power   = atom [ "^" unary ] ;          (* right associative *)
//! atom    = number | ident | ident "(" args ")" | "(" expr ")" ;
//! args    = expr { "," expr } ;
//! number  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;
//! ```
//!
//! Identifiers resolve to a variable of the active [`Scope`] (by default
//! `t`, `x`, `y`), to a named constant registered in the scope, or to one of
//! the built-in functions `sin cos exp ln abs sign sqrt min max pow`.

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Variables an expression may refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    T,
    X,
    Y,
    /// Only available in kernel expressions.
    Alpha,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::T => "t",
            Var::X => "x",
            Var::Y => "y",
            Var::Alpha => "alpha",
        }
    }

    fn from_name(name: &str) -> Option<Var> {
        Some(match name {
            "t" => Var::T,
            "x" => Var::X,
            "y" => Var::Y,
            "alpha" => Var::Alpha,
            _ => return None,
        })
    }

    fn slot(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Abs,
    Sign,
    Sqrt,
    Min,
    Max,
    Pow,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Abs => "abs",
            Func::Sign => "sign",
            Func::Sqrt => "sqrt",
            Func::Min => "min",
            Func::Max => "max",
            Func::Pow => "pow",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "abs" => Func::Abs,
            "sign" => Func::Sign,
            "sqrt" => Func::Sqrt,
            "min" => Func::Min,
            "max" => Func::Max,
            "pow" => Func::Pow,
            _ => return None,
        })
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max | Func::Pow => 2,
            _ => 1,
        }
    }

    fn apply(self, args: &[f64]) -> f64 {
        let a = args[0];
        match self {
            Func::Sin => libm::sin(a),
            Func::Cos => libm::cos(a),
            Func::Exp => libm::exp(a),
            Func::Ln => libm::log(a),
            Func::Abs => libm::fabs(a),
            Func::Sign => {
                if a > 0.0 {
                    1.0
                } else if a < 0.0 {
                    -1.0
                } else {
                    a
                }
            }
            Func::Sqrt => libm::sqrt(a),
            Func::Min => libm::fmin(a, args[1]),
            Func::Max => libm::fmax(a, args[1]),
            Func::Pow => libm::pow(a, args[1]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }

    fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div => a / b,
            BinOp::Pow => libm::pow(a, b),
        }
    }
}

/// Syntax tree node.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(Var),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

impl Node {
    pub fn binary(op: BinOp, lhs: Node, rhs: Node) -> Node {
        Node::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    /// Replaces every occurrence of `var` by `with`.
    pub fn substitute(&self, var: Var, with: &Node) -> Node {
        match self {
            Node::Var(v) if *v == var => with.clone(),
            Node::Const(_) | Node::Var(_) => self.clone(),
            Node::Neg(inner) => Node::Neg(Box::new(inner.substitute(var, with))),
            Node::Binary(op, lhs, rhs) => {
                Node::binary(*op, lhs.substitute(var, with), rhs.substitute(var, with))
            }
            Node::Call(func, args) => {
                Node::Call(*func, args.iter().map(|a| a.substitute(var, with)).collect())
            }
        }
    }

    fn eval(&self, slots: &[Option<f64>; 4]) -> Result<f64, EvalError> {
        Ok(match self {
            Node::Const(c) => *c,
            Node::Var(v) => slots[v.slot()].ok_or(EvalError::MissingBinding(v.name()))?,
            Node::Neg(inner) => -inner.eval(slots)?,
            Node::Binary(op, lhs, rhs) => op.apply(lhs.eval(slots)?, rhs.eval(slots)?),
            Node::Call(func, args) => {
                let mut vals = [0.0; 2];
                for (slot, arg) in vals.iter_mut().zip(args) {
                    *slot = arg.eval(slots)?;
                }
                func.apply(&vals[..args.len()])
            }
        })
    }

    fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Node::Const(_) => {}
            Node::Var(v) => {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
            Node::Neg(inner) => inner.collect_vars(out),
            Node::Binary(_, lhs, rhs) => {
                lhs.collect_vars(out);
                rhs.collect_vars(out);
            }
            Node::Call(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }
}

impl fmt::Display for Node {
    /// Fully parenthesized form; reparses to the same tree, except that a
    /// negative constant comes back as a negation of its magnitude.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(c) if c.is_sign_negative() => write!(f, "(-{:?})", -c),
            Node::Const(c) => write!(f, "{c:?}"),
            Node::Var(v) => f.write_str(v.name()),
            Node::Neg(inner) => write!(f, "(-{inner})"),
            Node::Binary(op, lhs, rhs) => write!(f, "({lhs} {} {rhs})", op.symbol()),
            Node::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, arg) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{arg}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Variable values for evaluation. Unset variables are reported as
/// [`EvalError::MissingBinding`] only if the expression uses them.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Bindings {
    slots: [Option<f64>; 4],
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(mut self, var: Var, value: f64) -> Self {
        self.slots[var.slot()] = Some(value);
        self
    }

    pub fn t(self, value: f64) -> Self {
        self.set(Var::T, value)
    }

    pub fn x(self, value: f64) -> Self {
        self.set(Var::X, value)
    }

    pub fn y(self, value: f64) -> Self {
        self.set(Var::Y, value)
    }

    pub fn get(&self, var: Var) -> Option<f64> {
        self.slots[var.slot()]
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: expected {expected}, found {found}")]
    Syntax {
        offset: usize,
        expected: &'static str,
        found: String,
    },
    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("unknown variable `{name}` at byte {offset}")]
    UnknownVariable { name: String, offset: usize },
    #[error("function `{name}` at byte {offset} takes {expected} argument(s), got {found}")]
    Arity {
        name: &'static str,
        offset: usize,
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("no value bound for variable `{0}`")]
    MissingBinding(&'static str),
    #[error("expression evaluated to a non-finite value ({0})")]
    NonFinite(f64),
}

/// Names an expression is allowed to use.
#[derive(Debug, Clone)]
pub struct Scope {
    vars: Vec<Var>,
    constants: BTreeMap<String, f64>,
}

impl Default for Scope {
    fn default() -> Self {
        Self::new(&[Var::T, Var::X, Var::Y])
    }
}

impl Scope {
    pub fn new(vars: &[Var]) -> Self {
        Self {
            vars: vars.to_vec(),
            constants: BTreeMap::new(),
        }
    }

    /// Scope for custom kernels: `t` and `alpha`.
    pub fn kernel() -> Self {
        Self::new(&[Var::T, Var::Alpha])
    }

    /// Registers a named constant that is substituted at parse time.
    pub fn with_constant(mut self, name: &str, value: f64) -> Self {
        self.constants.insert(name.to_owned(), value);
        self
    }

    pub fn with_constants<'a>(mut self, constants: impl IntoIterator<Item = (&'a str, f64)>) -> Self {
        for (name, value) in constants {
            self.constants.insert(name.to_owned(), value);
        }
        self
    }
}

/// A parsed, immutable expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
}

impl Expr {
    /// Parses with the default `{t, x, y}` scope.
    pub fn parse(source: &str) -> Result<Expr, ParseError> {
        Self::parse_in(source, &Scope::default())
    }

    pub fn parse_in(source: &str, scope: &Scope) -> Result<Expr, ParseError> {
        let mut parser = Parser {
            src: source,
            pos: 0,
            scope,
        };
        let root = parser.expr(0)?;
        parser.skip_ws();
        if parser.pos < source.len() {
            return Err(parser.syntax("operator or end of input"));
        }
        Ok(Expr { root })
    }

    pub fn constant(value: f64) -> Expr {
        Expr {
            root: Node::Const(value),
        }
    }

    pub fn from_node(root: Node) -> Expr {
        Expr { root }
    }

    pub fn node(&self) -> &Node {
        &self.root
    }

    /// Raw IEEE value; non-finite results are passed through unchanged.
    pub fn eval(&self, bindings: &Bindings) -> Result<f64, EvalError> {
        self.root.eval(&bindings.slots)
    }

    /// Like [`Expr::eval`], but a non-finite result is an error.
    pub fn eval_finite(&self, bindings: &Bindings) -> Result<f64, EvalError> {
        let v = self.eval(bindings)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite(v))
        }
    }

    pub fn free_vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.root.collect_vars(&mut out);
        out.sort();
        out
    }

    pub fn uses(&self, var: Var) -> bool {
        self.free_vars().contains(&var)
    }

    /// `self` with `var` replaced by the expression `with`.
    pub fn substitute(&self, var: Var, with: &Expr) -> Expr {
        Expr {
            root: self.root.substitute(var, &with.root),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.free_vars().is_empty()
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

impl core::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

const PREFIX_NEG_BP: u8 = 5;

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    scope: &'a Scope,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn found(&self) -> String {
        match self.src[self.pos..].chars().next() {
            Some(c) => alloc::format!("`{c}`"),
            None => "end of input".to_owned(),
        }
    }

    fn syntax(&self, expected: &'static str) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            expected,
            found: self.found(),
        }
    }

    fn expect(&mut self, c: char, expected: &'static str) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.syntax(expected))
        }
    }

    fn infix(c: char) -> Option<(BinOp, u8, u8)> {
        Some(match c {
            '+' => (BinOp::Add, 1, 2),
            '-' => (BinOp::Sub, 1, 2),
            '*' => (BinOp::Mul, 3, 4),
            '/' => (BinOp::Div, 3, 4),
            '^' => (BinOp::Pow, 8, 7),
            _ => return None,
        })
    }

    fn expr(&mut self, min_bp: u8) -> Result<Node, ParseError> {
        let mut lhs = self.prefix()?;
        while let Some(c) = self.peek() {
            let Some((op, l_bp, r_bp)) = Self::infix(c) else {
                break;
            };
            if l_bp < min_bp {
                break;
            }
            self.pos += 1;
            let rhs = self.expr(r_bp)?;
            lhs = Node::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Node, ParseError> {
        match self.peek() {
            Some('-') => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.expr(PREFIX_NEG_BP)?)))
            }
            Some('(') => {
                self.pos += 1;
                let inner = self.expr(0)?;
                self.expect(')', "`)`")?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == '_' => self.ident(),
            _ => Err(self.syntax("number, name, `-` or `(`")),
        }
    }

    fn number(&mut self) -> Result<Node, ParseError> {
        let bytes = self.src.as_bytes();
        let start = self.pos;
        let mut end = start;
        let digits = |end: &mut usize| {
            let from = *end;
            while *end < bytes.len() && bytes[*end].is_ascii_digit() {
                *end += 1;
            }
            *end > from
        };
        let int_digits = digits(&mut end);
        let mut frac_digits = false;
        if end < bytes.len() && bytes[end] == b'.' {
            end += 1;
            frac_digits = digits(&mut end);
        }
        if !int_digits && !frac_digits {
            return Err(self.syntax("digits"));
        }
        if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
            let mut exp_end = end + 1;
            if exp_end < bytes.len() && (bytes[exp_end] == b'+' || bytes[exp_end] == b'-') {
                exp_end += 1;
            }
            if digits(&mut exp_end) {
                end = exp_end;
            } else {
                self.pos = exp_end;
                return Err(self.syntax("exponent digits"));
            }
        }
        let value: f64 = self.src[start..end]
            .parse()
            .map_err(|_| self.syntax("number"))?;
        self.pos = end;
        Ok(Node::Const(value))
    }

    fn ident(&mut self) -> Result<Node, ParseError> {
        let start = self.pos;
        let rest = &self.src[start..];
        let len = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(rest.len());
        let name = &rest[..len];
        self.pos += len;

        if self.peek() == Some('(') {
            let func = Func::from_name(name).ok_or_else(|| ParseError::UnknownFunction {
                name: name.to_owned(),
                offset: start,
            })?;
            self.pos += 1;
            let mut args = Vec::new();
            if self.peek() != Some(')') {
                loop {
                    args.push(self.expr(0)?);
                    if self.peek() == Some(',') {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
            }
            self.expect(')', "`,` or `)`")?;
            if args.len() != func.arity() {
                return Err(ParseError::Arity {
                    name: func.name(),
                    offset: start,
                    expected: func.arity(),
                    found: args.len(),
                });
            }
            return Ok(Node::Call(func, args));
        }

        if let Some(var) = Var::from_name(name).filter(|v| self.scope.vars.contains(v)) {
            return Ok(Node::Var(var));
        }
        if let Some(&value) = self.scope.constants.get(name) {
            return Ok(Node::Const(value));
        }
        if Func::from_name(name).is_some() {
            return Err(ParseError::Syntax {
                offset: self.pos,
                expected: "`(` after function name",
                found: self.found(),
            });
        }
        Err(ParseError::UnknownVariable {
            name: name.to_owned(),
            offset: start,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval_at(src: &str, b: Bindings) -> f64 {
        Expr::parse(src).unwrap().eval(&b).unwrap()
    }

    #[test]
    fn substitution_composes() {
        let h = Expr::parse("x^2 + x").unwrap();
        let inner = Expr::parse("y - 1").unwrap();
        let e = h.substitute(Var::X, &inner);
        assert_eq!(e.free_vars(), alloc::vec![Var::Y]);
        assert_eq!(e.eval(&Bindings::new().y(3.0)).unwrap(), 6.0);
    }

    #[test]
    fn polynomial_value() {
        assert_eq!(eval_at("x^2 + 1", Bindings::new().x(2.0)), 5.0);
    }

    #[test]
    fn power_binds_tighter_than_product() {
        assert_eq!(Expr::parse("2*x^3").unwrap(), Expr::parse("2*(x^3)").unwrap());
    }

    #[test]
    fn power_is_right_associative() {
        assert_eq!(Expr::parse("2^3^2").unwrap(), Expr::parse("2^(3^2)").unwrap());
        assert_eq!(eval_at("2^3^2", Bindings::new()), 512.0);
    }

    #[test]
    fn unary_minus_below_power() {
        assert_eq!(eval_at("-x^2", Bindings::new().x(3.0)), -9.0);
        assert_eq!(eval_at("2^-1", Bindings::new()), 0.5);
        assert_eq!(eval_at("2^-1*4", Bindings::new()), 2.0);
    }

    #[test]
    fn unknown_variable_is_rejected() {
        let err = Expr::parse("sin(q)").unwrap_err();
        assert_eq!(
            err,
            ParseError::UnknownVariable {
                name: "q".into(),
                offset: 4
            }
        );
    }

    #[test]
    fn unknown_function_is_rejected() {
        assert!(matches!(
            Expr::parse("tan(x)"),
            Err(ParseError::UnknownFunction { .. })
        ));
    }

    #[test]
    fn syntax_error_reports_offset() {
        match Expr::parse("x + * 2") {
            Err(ParseError::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(Expr::parse("(x + 1"), Err(ParseError::Syntax { offset: 6, .. })));
        assert!(matches!(Expr::parse("1e+"), Err(ParseError::Syntax { .. })));
        assert!(matches!(Expr::parse("x y"), Err(ParseError::Syntax { offset: 2, .. })));
    }

    #[test]
    fn arity_is_checked() {
        assert!(matches!(Expr::parse("min(x)"), Err(ParseError::Arity { .. })));
        assert!(matches!(Expr::parse("sin(x, y)"), Err(ParseError::Arity { .. })));
    }

    #[test]
    fn exp_matches_platform() {
        let v = eval_at("exp(t)", Bindings::new().t(1.0));
        assert!((v - core::f64::consts::E).abs() <= f64::EPSILON * core::f64::consts::E);
    }

    #[test]
    fn sign_times_abs_is_identity() {
        assert_eq!(eval_at("sign(x)*abs(x)", Bindings::new().x(-3.0)), -3.0);
        assert_eq!(eval_at("sign(x)", Bindings::new().x(0.0)), 0.0);
    }

    #[test]
    fn division_by_zero_is_flagged() {
        let e = Expr::parse("1/x").unwrap();
        let b = Bindings::new().x(0.0);
        assert!(e.eval(&b).unwrap().is_infinite());
        assert!(matches!(e.eval_finite(&b), Err(EvalError::NonFinite(_))));
        assert!(Expr::parse("ln(x)").unwrap().eval(&Bindings::new().x(-1.0)).unwrap().is_nan());
    }

    #[test]
    fn missing_binding() {
        let e = Expr::parse("x + y").unwrap();
        assert_eq!(
            e.eval(&Bindings::new().x(1.0)),
            Err(EvalError::MissingBinding("y"))
        );
    }

    #[test]
    fn kernel_scope_and_constants() {
        let e = Expr::parse_in("t^(1-alpha)", &Scope::kernel()).unwrap();
        let v = e.eval(&Bindings::new().t(4.0).set(Var::Alpha, 0.5)).unwrap();
        assert_eq!(v, 2.0);
        assert!(Expr::parse("alpha").is_err());
        assert!(Expr::parse_in("x", &Scope::kernel()).is_err());

        let scope = Scope::default().with_constant("mu", 2.0);
        let e = Expr::parse_in("mu*(x^2-1)", &scope).unwrap();
        assert_eq!(e.eval(&Bindings::new().x(2.0)).unwrap(), 6.0);
        assert_eq!(e.free_vars(), alloc::vec![Var::X]);
    }

    #[test]
    fn printed_corpus_reparses_identically() {
        let corpus = [
            "x^2 + 1",
            "-x^2",
            "2^-x^2",
            "sin(t)*exp(-t/2) - 3.5e-3",
            "max(x, y) / min(abs(x), 1)",
            "pow(x, 0.5) + sqrt(y) - ln(t)",
            "(x - y) - (t - 1) * -2",
            "sign(x)*abs(x)^(1/3)",
            ".5 + 2.",
        ];
        for src in corpus {
            let e = Expr::parse(src).unwrap();
            let again = Expr::parse(&alloc::format!("{e}")).unwrap();
            assert_eq!(e, again, "{src}");
        }
    }
}
