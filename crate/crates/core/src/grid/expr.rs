//! Scalar expression trees over `x`, `y` (and an auxiliary `t`) with symbolic partials.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    Y,
    /// Placeholder argument of scalar-to-scalar maps such as `F` in `u = F(beta)`.
    T,
}

impl Var {
    fn index(self) -> usize {
        match self {
            Var::X => 0,
            Var::Y => 1,
            Var::T => 2,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::T => "t",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
    Tan,
    Atan,
    Tanh,
    Sqrt,
    Abs,
    Sign,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Atan => "atan",
            Func::Tanh => "tanh",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sign => "sign",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "ln" | "log" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "atan" => Func::Atan,
            "tanh" => Func::Tanh,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "sign" => Func::Sign,
            _ => return None,
        })
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Exp => v.exp(),
            Func::Ln => v.ln(),
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Atan => v.atan(),
            Func::Tanh => v.tanh(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
            Func::Sign => {
                if v > 0.0 {
                    1.0
                } else if v < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Analytic scalar expression.
///
/// Build trees with the smart constructors ([`Expr::add`], [`Expr::mul`], ...), which fold
/// constants and drop neutral elements so that derivative trees stay small.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
    Func(Func, Box<Expr>),
}

impl Expr {
    pub fn c(v: f64) -> Self {
        Expr::Const(v)
    }

    pub fn x() -> Self {
        Expr::Var(Var::X)
    }

    pub fn y() -> Self {
        Expr::Var(Var::Y)
    }

    pub fn t() -> Self {
        Expr::Var(Var::T)
    }

    fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(v) => Some(*v),
            _ => None,
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Const(v) => Expr::Const(-v),
            Expr::Neg(inner) => *inner,
            a => Expr::Neg(Box::new(a)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x + y),
            (Some(z), _) if z == 0.0 => b,
            (_, Some(z)) if z == 0.0 => a,
            _ => match b {
                Expr::Neg(nb) => Expr::Sub(Box::new(a), nb),
                b => Expr::Add(Box::new(a), Box::new(b)),
            },
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x - y),
            (Some(z), _) if z == 0.0 => Expr::neg(b),
            (_, Some(z)) if z == 0.0 => a,
            _ => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x * y),
            (Some(z), _) | (_, Some(z)) if z == 0.0 => Expr::Const(0.0),
            (Some(o), _) if o == 1.0 => b,
            (_, Some(o)) if o == 1.0 => a,
            (Some(m), _) if m == -1.0 => Expr::neg(b),
            (_, Some(m)) if m == -1.0 => Expr::neg(a),
            _ => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if y != 0.0 => Expr::Const(x / y),
            (Some(z), _) if z == 0.0 => Expr::Const(0.0),
            (_, Some(o)) if o == 1.0 => a,
            _ => Expr::Div(Box::new(a), Box::new(b)),
        }
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x.powf(y)),
            (_, Some(z)) if z == 0.0 => Expr::Const(1.0),
            (_, Some(o)) if o == 1.0 => a,
            _ => Expr::Pow(Box::new(a), Box::new(b)),
        }
    }

    pub fn max(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x.max(y)),
            _ => Expr::Max(Box::new(a), Box::new(b)),
        }
    }

    pub fn min(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x.min(y)),
            _ => Expr::Min(Box::new(a), Box::new(b)),
        }
    }

    pub fn func(f: Func, a: Expr) -> Expr {
        match a.as_const() {
            Some(v) => Expr::Const(f.apply(v)),
            None => Expr::Func(f, Box::new(a)),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(v) if *v == 0.0)
    }

    /// Evaluates with `vars = [x, y, t]`.
    pub fn eval(&self, vars: &[f64; 3]) -> f64 {
        match self {
            Expr::Const(v) => *v,
            Expr::Var(v) => vars[v.index()],
            Expr::Neg(a) => -a.eval(vars),
            Expr::Add(a, b) => a.eval(vars) + b.eval(vars),
            Expr::Sub(a, b) => a.eval(vars) - b.eval(vars),
            Expr::Mul(a, b) => a.eval(vars) * b.eval(vars),
            Expr::Div(a, b) => a.eval(vars) / b.eval(vars),
            Expr::Pow(a, b) => {
                let base = a.eval(vars);
                match b.as_ref() {
                    Expr::Const(e) if e.fract() == 0.0 && e.abs() < 64.0 => base.powi(*e as i32),
                    b => base.powf(b.eval(vars)),
                }
            }
            Expr::Max(a, b) => a.eval(vars).max(b.eval(vars)),
            Expr::Min(a, b) => a.eval(vars).min(b.eval(vars)),
            Expr::Func(f, a) => f.apply(a.eval(vars)),
        }
    }

    pub fn eval_xy(&self, x: f64, y: f64) -> f64 {
        self.eval(&[x, y, 0.0])
    }

    /// Symbolic partial derivative with respect to `var`.
    pub fn diff(&self, var: Var) -> Expr {
        match self {
            Expr::Const(_) => Expr::c(0.0),
            Expr::Var(v) => Expr::c(if *v == var { 1.0 } else { 0.0 }),
            Expr::Neg(a) => Expr::neg(a.diff(var)),
            Expr::Add(a, b) => Expr::add(a.diff(var), b.diff(var)),
            Expr::Sub(a, b) => Expr::sub(a.diff(var), b.diff(var)),
            Expr::Mul(a, b) => Expr::add(
                Expr::mul(a.diff(var), (**b).clone()),
                Expr::mul((**a).clone(), b.diff(var)),
            ),
            Expr::Div(a, b) => {
                // (a'b - ab') / b^2
                let num = Expr::sub(
                    Expr::mul(a.diff(var), (**b).clone()),
                    Expr::mul((**a).clone(), b.diff(var)),
                );
                if num.is_zero() {
                    return Expr::c(0.0);
                }
                Expr::div(num, Expr::pow((**b).clone(), Expr::c(2.0)))
            }
            Expr::Pow(a, b) => {
                let da = a.diff(var);
                let db = b.diff(var);
                if db.is_zero() {
                    if da.is_zero() {
                        return Expr::c(0.0);
                    }
                    let e = (**b).clone();
                    let lowered = match e.as_const() {
                        Some(v) => Expr::pow((**a).clone(), Expr::c(v - 1.0)),
                        None => Expr::pow((**a).clone(), Expr::sub(e.clone(), Expr::c(1.0))),
                    };
                    Expr::mul(Expr::mul(e, lowered), da)
                } else {
                    // a^b (b' ln a + b a'/a)
                    let inner = Expr::add(
                        Expr::mul(db, Expr::func(Func::Ln, (**a).clone())),
                        Expr::div(Expr::mul((**b).clone(), da), (**a).clone()),
                    );
                    Expr::mul(self.clone(), inner)
                }
            }
            Expr::Max(a, b) | Expr::Min(a, b) => {
                // max(a,b) = (a + b + |a - b|)/2, min(a,b) = (a + b - |a - b|)/2
                let da = a.diff(var);
                let db = b.diff(var);
                if da.is_zero() && db.is_zero() {
                    return Expr::c(0.0);
                }
                let sign = Expr::func(Func::Sign, Expr::sub((**a).clone(), (**b).clone()));
                let jump = Expr::mul(sign, Expr::sub(da.clone(), db.clone()));
                let sum = Expr::add(da, db);
                let total = if matches!(self, Expr::Max(..)) {
                    Expr::add(sum, jump)
                } else {
                    Expr::sub(sum, jump)
                };
                Expr::mul(Expr::c(0.5), total)
            }
            Expr::Func(f, a) => {
                let da = a.diff(var);
                if da.is_zero() {
                    return Expr::c(0.0);
                }
                let a = (**a).clone();
                let outer = match f {
                    Func::Exp => Expr::func(Func::Exp, a),
                    Func::Ln => Expr::div(Expr::c(1.0), a),
                    Func::Sin => Expr::func(Func::Cos, a),
                    Func::Cos => Expr::neg(Expr::func(Func::Sin, a)),
                    Func::Tan => Expr::div(
                        Expr::c(1.0),
                        Expr::pow(Expr::func(Func::Cos, a), Expr::c(2.0)),
                    ),
                    Func::Atan => Expr::div(
                        Expr::c(1.0),
                        Expr::add(Expr::c(1.0), Expr::pow(a, Expr::c(2.0))),
                    ),
                    Func::Tanh => Expr::sub(
                        Expr::c(1.0),
                        Expr::pow(Expr::func(Func::Tanh, a), Expr::c(2.0)),
                    ),
                    Func::Sqrt => Expr::div(
                        Expr::c(0.5),
                        Expr::func(Func::Sqrt, a),
                    ),
                    Func::Abs => Expr::func(Func::Sign, a),
                    Func::Sign => return Expr::c(0.0),
                };
                Expr::mul(outer, da)
            }
        }
    }

    /// Replaces every occurrence of `var` by `with`.
    pub fn substitute(&self, var: Var, with: &Expr) -> Expr {
        let sub = |e: &Expr| e.substitute(var, with);
        match self {
            Expr::Const(v) => Expr::c(*v),
            Expr::Var(v) if *v == var => with.clone(),
            Expr::Var(v) => Expr::Var(*v),
            Expr::Neg(a) => Expr::neg(sub(a)),
            Expr::Add(a, b) => Expr::add(sub(a), sub(b)),
            Expr::Sub(a, b) => Expr::sub(sub(a), sub(b)),
            Expr::Mul(a, b) => Expr::mul(sub(a), sub(b)),
            Expr::Div(a, b) => Expr::div(sub(a), sub(b)),
            Expr::Pow(a, b) => Expr::pow(sub(a), sub(b)),
            Expr::Max(a, b) => Expr::max(sub(a), sub(b)),
            Expr::Min(a, b) => Expr::min(sub(a), sub(b)),
            Expr::Func(f, a) => Expr::func(*f, sub(a)),
        }
    }

    pub fn uses(&self, var: Var) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Neg(a) | Expr::Func(_, a) => a.uses(var),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b)
            | Expr::Max(a, b)
            | Expr::Min(a, b) => a.uses(var) || b.uses(var),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            Expr::Const(v) if *v < 0.0 => 3,
            _ => 5,
        }
    }
}

fn write_const(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    if v.is_finite() {
        // `{:?}` is the shortest representation that round-trips
        write!(f, "{v:?}")
    } else if v.is_nan() {
        write!(f, "(0/0)")
    } else if v > 0.0 {
        write!(f, "(1/0)")
    } else {
        write!(f, "(-1/0)")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8| -> fmt::Result {
            if e.precedence() < min_prec {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            Expr::Const(v) => write_const(f, *v),
            Expr::Var(v) => write!(f, "{}", v.name()),
            Expr::Neg(a) => {
                write!(f, "-")?;
                wrap(f, a, 4)
            }
            Expr::Add(a, b) => {
                wrap(f, a, 1)?;
                write!(f, " + ")?;
                wrap(f, b, 2)
            }
            Expr::Sub(a, b) => {
                wrap(f, a, 1)?;
                write!(f, " - ")?;
                wrap(f, b, 2)
            }
            Expr::Mul(a, b) => {
                wrap(f, a, 2)?;
                write!(f, " * ")?;
                wrap(f, b, 3)
            }
            Expr::Div(a, b) => {
                wrap(f, a, 2)?;
                write!(f, " / ")?;
                wrap(f, b, 4)
            }
            Expr::Pow(a, b) => {
                wrap(f, a, 5)?;
                write!(f, "^")?;
                wrap(f, b, 5)
            }
            Expr::Max(a, b) => write!(f, "max({a}, {b})"),
            Expr::Min(a, b) => write!(f, "min({a}, {b})"),
            Expr::Func(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule() {
        // d/dx (x^2 * y) = 2xy
        let e = Expr::mul(Expr::pow(Expr::x(), Expr::c(2.0)), Expr::y());
        let d = e.diff(Var::X);
        assert_eq!(d.eval_xy(3.0, 5.0), 30.0);
        assert!(e.diff(Var::T).is_zero());
    }

    #[test]
    fn chain_rule_through_functions() {
        let e = Expr::func(Func::Sin, Expr::mul(Expr::x(), Expr::y()));
        let dx = e.diff(Var::X);
        let (x, y) = (0.3, -0.7);
        assert!((dx.eval_xy(x, y) - y * (x * y).cos()).abs() < 1e-15);
    }

    #[test]
    fn max_derivative_picks_active_branch() {
        let e = Expr::max(Expr::x(), Expr::neg(Expr::x()));
        let d = e.diff(Var::X);
        assert_eq!(d.eval_xy(2.0, 0.0), 1.0);
        assert_eq!(d.eval_xy(-2.0, 0.0), -1.0);
    }

    #[test]
    fn substitution_composes() {
        let f = Expr::func(Func::Sin, Expr::t());
        let beta = Expr::add(Expr::x(), Expr::y());
        let u = f.substitute(Var::T, &beta);
        assert_eq!(u.eval_xy(0.25, 0.5), 0.75f64.sin());
        assert!(!u.uses(Var::T));
    }

    #[test]
    fn simplification_keeps_constant_derivatives_exact() {
        let affine = Expr::add(Expr::c(1.0), Expr::sub(Expr::mul(Expr::c(2.0), Expr::x()), Expr::y()));
        let dxx = affine.diff(Var::X).diff(Var::X);
        assert!(dxx.is_zero());
        assert_eq!(affine.diff(Var::Y), Expr::c(-1.0));
    }
}
