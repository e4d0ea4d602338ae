//! Scalar expression language used to declare problem data.
//!
//! Expressions range over the variables `t`, `s`, `y`, `u`, numeric
//! literals, the operators `+ - * / ^` (power is right-associative and binds
//! tighter than unary minus) and the functions `sqrt exp log sin cos abs
//! sign`. The AST can be differentiated symbolically with respect to `y` or
//! `u`; see [`ScalarExpr::differentiate`].

mod diff;
mod parse;

use std::collections::BTreeSet;
use std::fmt;

pub use diff::NonSmooth;
pub use parse::parse_expression;

/// Independent variables an expression may reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    T,
    S,
    Y,
    U,
}

impl Var {
    pub fn name(self) -> char {
        match self {
            Var::T => 't',
            Var::S => 's',
            Var::Y => 'y',
            Var::U => 'u',
        }
    }

    fn from_name(name: &str) -> Option<Var> {
        match name {
            "t" => Some(Var::T),
            "s" => Some(Var::S),
            "y" => Some(Var::Y),
            "u" => Some(Var::U),
            _ => None,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
    Abs,
    /// Derivative of `abs`; also accepted by the parser so printed
    /// derivatives re-parse.
    Sign,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
            Func::Sign => "sign",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "abs" => Func::Abs,
            "sign" => Func::Sign,
            _ => return None,
        })
    }

    pub fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sqrt => x.sqrt(),
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Abs => x.abs(),
            Func::Sign => {
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// A point at which expressions are evaluated. Unused coordinates are
/// ignored.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point {
    pub t: f64,
    pub s: f64,
    pub y: f64,
    pub u: f64,
}

impl Point {
    pub fn new(t: f64, s: f64, y: f64, u: f64) -> Self {
        Self { t, s, y, u }
    }

    pub fn get(&self, var: Var) -> f64 {
        match var {
            Var::T => self.t,
            Var::S => self.s,
            Var::Y => self.y,
            Var::U => self.u,
        }
    }

    pub fn with(mut self, var: Var, value: f64) -> Self {
        match var {
            Var::T => self.t = value,
            Var::S => self.s = value,
            Var::Y => self.y = value,
            Var::U => self.u = value,
        }
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScalarExpr {
    Num(f64),
    Var(Var),
    Neg(Box<ScalarExpr>),
    Add(Box<ScalarExpr>, Box<ScalarExpr>),
    Sub(Box<ScalarExpr>, Box<ScalarExpr>),
    Mul(Box<ScalarExpr>, Box<ScalarExpr>),
    Div(Box<ScalarExpr>, Box<ScalarExpr>),
    Pow(Box<ScalarExpr>, Box<ScalarExpr>),
    Call(Func, Box<ScalarExpr>),
}

impl ScalarExpr {
    pub fn num(value: f64) -> Self {
        ScalarExpr::Num(value)
    }

    pub fn var(var: Var) -> Self {
        ScalarExpr::Var(var)
    }

    pub fn eval(&self, p: &Point) -> f64 {
        match self {
            ScalarExpr::Num(c) => *c,
            ScalarExpr::Var(v) => p.get(*v),
            ScalarExpr::Neg(a) => -a.eval(p),
            ScalarExpr::Add(a, b) => a.eval(p) + b.eval(p),
            ScalarExpr::Sub(a, b) => a.eval(p) - b.eval(p),
            ScalarExpr::Mul(a, b) => a.eval(p) * b.eval(p),
            ScalarExpr::Div(a, b) => a.eval(p) / b.eval(p),
            ScalarExpr::Pow(a, b) => pow(a.eval(p), b.eval(p)),
            ScalarExpr::Call(f, a) => f.apply(a.eval(p)),
        }
    }

    /// Evaluates with all four coordinates given positionally.
    pub fn eval4(&self, t: f64, s: f64, y: f64, u: f64) -> f64 {
        self.eval(&Point { t, s, y, u })
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            ScalarExpr::Num(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_constant() == Some(0.0)
    }

    pub fn variables(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            ScalarExpr::Num(_) => {}
            ScalarExpr::Var(v) => {
                out.insert(*v);
            }
            ScalarExpr::Neg(a) | ScalarExpr::Call(_, a) => a.collect_vars(out),
            ScalarExpr::Add(a, b)
            | ScalarExpr::Sub(a, b)
            | ScalarExpr::Mul(a, b)
            | ScalarExpr::Div(a, b)
            | ScalarExpr::Pow(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn depends_on(&self, var: Var) -> bool {
        match self {
            ScalarExpr::Num(_) => false,
            ScalarExpr::Var(v) => *v == var,
            ScalarExpr::Neg(a) | ScalarExpr::Call(_, a) => a.depends_on(var),
            ScalarExpr::Add(a, b)
            | ScalarExpr::Sub(a, b)
            | ScalarExpr::Mul(a, b)
            | ScalarExpr::Div(a, b)
            | ScalarExpr::Pow(a, b) => a.depends_on(var) || b.depends_on(var),
        }
    }

    /// Fails if the expression mentions a variable outside `allowed`.
    pub fn check_variables(&self, allowed: &[Var]) -> crate::Result<()> {
        if let Some(bad) = self.variables().into_iter().find(|v| !allowed.contains(v)) {
            return Err(crate::Error::ForbiddenVariable {
                expr: self.to_string(),
                var: bad.name(),
                allowed: allowed.iter().map(|v| v.name()).collect(),
            });
        }
        Ok(())
    }

    fn precedence(&self) -> u8 {
        match self {
            ScalarExpr::Add(..) | ScalarExpr::Sub(..) => 1,
            ScalarExpr::Mul(..) | ScalarExpr::Div(..) => 2,
            ScalarExpr::Neg(_) => 3,
            ScalarExpr::Num(c) if c.is_sign_negative() || !c.is_finite() => 3,
            ScalarExpr::Pow(..) => 4,
            ScalarExpr::Num(_) | ScalarExpr::Var(_) | ScalarExpr::Call(..) => 5,
        }
    }
}

fn pow(base: f64, exponent: f64) -> f64 {
    if exponent == 2.0 {
        base * base
    } else if exponent == 1.0 {
        base
    } else if exponent == 0.5 {
        base.sqrt()
    } else {
        base.powf(exponent)
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, e: &ScalarExpr, parens: bool) -> fmt::Result {
            if parens {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        let p = self.precedence();
        match self {
            ScalarExpr::Num(c) => {
                if c.is_nan() {
                    write!(f, "(0/0)")
                } else if c.is_infinite() {
                    write!(f, "({}1/0)", if *c < 0.0 { "-" } else { "" })
                } else {
                    write!(f, "{c:?}")
                }
            }
            ScalarExpr::Var(v) => write!(f, "{v}"),
            ScalarExpr::Neg(a) => {
                write!(f, "-")?;
                child(f, a, a.precedence() < 3)
            }
            ScalarExpr::Add(a, b)
            | ScalarExpr::Sub(a, b)
            | ScalarExpr::Mul(a, b)
            | ScalarExpr::Div(a, b) => {
                let op = match self {
                    ScalarExpr::Add(..) => " + ",
                    ScalarExpr::Sub(..) => " - ",
                    ScalarExpr::Mul(..) => " * ",
                    _ => " / ",
                };
                // Left-associative: an equal-precedence right child keeps its
                // parentheses so re-parsing preserves the evaluation order.
                child(f, a, a.precedence() < p)?;
                write!(f, "{op}")?;
                child(f, b, b.precedence() <= p)
            }
            ScalarExpr::Pow(a, b) => {
                child(f, a, a.precedence() <= p)?;
                write!(f, "^")?;
                child(f, b, b.precedence() < p)
            }
            ScalarExpr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

impl std::str::FromStr for ScalarExpr {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_expression(s)
    }
}
