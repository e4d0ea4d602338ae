// Float literal patterns are avoided for the older toolchains we support.
#![allow(clippy::redundant_guards)]

use super::{Func, ScalarExpr, Var};

use ScalarExpr::Num;

/// A site where a derivative was taken through a function that is not
/// differentiable everywhere (`abs`, `sign`). Differentiation still succeeds
/// and yields the one-sided convention `d|a| = sign(a) da`.
#[derive(Clone, Debug, PartialEq)]
pub struct NonSmooth {
    pub func: &'static str,
    pub argument: String,
}

impl std::fmt::Display for NonSmooth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}({}) is not differentiable where its argument vanishes",
            self.func, self.argument
        )
    }
}

fn b(e: ScalarExpr) -> Box<ScalarExpr> {
    Box::new(e)
}

pub(crate) fn neg(a: ScalarExpr) -> ScalarExpr {
    match a {
        Num(c) => Num(-c),
        ScalarExpr::Neg(inner) => *inner,
        a => ScalarExpr::Neg(b(a)),
    }
}

pub(crate) fn add(x: ScalarExpr, y: ScalarExpr) -> ScalarExpr {
    match (x, y) {
        (Num(p), Num(q)) => Num(p + q),
        (Num(z), e) | (e, Num(z)) if z == 0.0 => e,
        (x, ScalarExpr::Neg(y)) => ScalarExpr::Sub(b(x), y),
        (x, y) => ScalarExpr::Add(b(x), b(y)),
    }
}

pub(crate) fn sub(x: ScalarExpr, y: ScalarExpr) -> ScalarExpr {
    match (x, y) {
        (Num(p), Num(q)) => Num(p - q),
        (e, Num(z)) if z == 0.0 => e,
        (Num(z), e) if z == 0.0 => neg(e),
        (x, ScalarExpr::Neg(y)) => add(x, *y),
        (x, y) => ScalarExpr::Sub(b(x), b(y)),
    }
}

pub(crate) fn mul(x: ScalarExpr, y: ScalarExpr) -> ScalarExpr {
    match (x, y) {
        (Num(p), Num(q)) => Num(p * q),
        (Num(z), _) | (_, Num(z)) if z == 0.0 => Num(0.0),
        (Num(o), e) | (e, Num(o)) if o == 1.0 => e,
        (Num(m), e) | (e, Num(m)) if m == -1.0 => neg(e),
        // Keep literal factors in front and merge them.
        (Num(p), ScalarExpr::Mul(l, r)) if matches!(*l, Num(_)) => {
            let Num(q) = *l else { unreachable!() };
            mul(Num(p * q), *r)
        }
        (e, Num(c)) => mul(Num(c), e),
        (Num(c), ScalarExpr::Neg(e)) => mul(Num(-c), *e),
        (ScalarExpr::Neg(x), ScalarExpr::Neg(y)) => mul(*x, *y),
        (x, y) => ScalarExpr::Mul(b(x), b(y)),
    }
}

pub(crate) fn div(x: ScalarExpr, y: ScalarExpr) -> ScalarExpr {
    match (x, y) {
        (Num(p), Num(q)) if q != 0.0 => Num(p / q),
        (Num(z), y) if z == 0.0 && !matches!(y, Num(_)) => Num(0.0),
        (e, Num(o)) if o == 1.0 => e,
        (x, y) => ScalarExpr::Div(b(x), b(y)),
    }
}

pub(crate) fn pow(x: ScalarExpr, y: ScalarExpr) -> ScalarExpr {
    match (x, y) {
        (Num(p), Num(q)) => Num(super::pow(p, q)),
        (_, Num(z)) if z == 0.0 => Num(1.0),
        (e, Num(o)) if o == 1.0 => e,
        (x, y) => ScalarExpr::Pow(b(x), b(y)),
    }
}

pub(crate) fn call(f: Func, a: ScalarExpr) -> ScalarExpr {
    match a {
        Num(c) => Num(f.apply(c)),
        a => ScalarExpr::Call(f, b(a)),
    }
}

impl ScalarExpr {
    /// Symbolic partial derivative with respect to `var`, with constant
    /// subtrees folded.
    pub fn differentiate(&self, var: Var) -> ScalarExpr {
        self.differentiate_with_warnings(var).0
    }

    /// Like [`differentiate`](Self::differentiate), also reporting every
    /// non-smooth function the derivative passed through.
    pub fn differentiate_with_warnings(&self, var: Var) -> (ScalarExpr, Vec<NonSmooth>) {
        let mut warnings = Vec::new();
        let d = self.d(var, &mut warnings);
        (d, warnings)
    }

    /// Rebuilds the tree through the folding constructors.
    pub fn simplify(&self) -> ScalarExpr {
        match self {
            Num(_) | ScalarExpr::Var(_) => self.clone(),
            ScalarExpr::Neg(a) => neg(a.simplify()),
            ScalarExpr::Add(x, y) => add(x.simplify(), y.simplify()),
            ScalarExpr::Sub(x, y) => sub(x.simplify(), y.simplify()),
            ScalarExpr::Mul(x, y) => mul(x.simplify(), y.simplify()),
            ScalarExpr::Div(x, y) => div(x.simplify(), y.simplify()),
            ScalarExpr::Pow(x, y) => pow(x.simplify(), y.simplify()),
            ScalarExpr::Call(f, a) => call(*f, a.simplify()),
        }
    }

    fn d(&self, var: Var, w: &mut Vec<NonSmooth>) -> ScalarExpr {
        if !self.depends_on(var) {
            return Num(0.0);
        }
        match self {
            Num(_) => Num(0.0),
            ScalarExpr::Var(v) => Num(if *v == var { 1.0 } else { 0.0 }),
            ScalarExpr::Neg(a) => neg(a.d(var, w)),
            ScalarExpr::Add(x, y) => add(x.d(var, w), y.d(var, w)),
            ScalarExpr::Sub(x, y) => sub(x.d(var, w), y.d(var, w)),
            ScalarExpr::Mul(x, y) => add(
                mul(x.d(var, w), y.simplify()),
                mul(x.simplify(), y.d(var, w)),
            ),
            ScalarExpr::Div(x, y) => {
                if !y.depends_on(var) {
                    return div(x.d(var, w), y.simplify());
                }
                let num = sub(
                    mul(x.d(var, w), y.simplify()),
                    mul(x.simplify(), y.d(var, w)),
                );
                div(num, pow(y.simplify(), Num(2.0)))
            }
            ScalarExpr::Pow(x, y) => {
                let (xs, ys) = (x.simplify(), y.simplify());
                if !y.depends_on(var) {
                    // c * x^(c-1) * x'
                    let reduced = pow(xs, sub(ys.clone(), Num(1.0)));
                    return mul(mul(ys, reduced), x.d(var, w));
                }
                let whole = pow(xs.clone(), ys.clone());
                if !x.depends_on(var) {
                    return mul(mul(whole, call(Func::Log, xs)), y.d(var, w));
                }
                let inner = add(
                    mul(y.d(var, w), call(Func::Log, xs.clone())),
                    div(mul(ys, x.d(var, w)), xs),
                );
                mul(whole, inner)
            }
            ScalarExpr::Call(f, a) => {
                let da = a.d(var, w);
                let a = a.simplify();
                let outer = match f {
                    Func::Sqrt => div(Num(0.5), call(Func::Sqrt, a)),
                    Func::Exp => call(Func::Exp, a),
                    Func::Log => div(Num(1.0), a),
                    Func::Sin => call(Func::Cos, a),
                    Func::Cos => neg(call(Func::Sin, a)),
                    Func::Abs => {
                        w.push(NonSmooth {
                            func: "abs",
                            argument: a.to_string(),
                        });
                        call(Func::Sign, a)
                    }
                    Func::Sign => {
                        w.push(NonSmooth {
                            func: "sign",
                            argument: a.to_string(),
                        });
                        Num(0.0)
                    }
                };
                mul(outer, da)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse_expression, Point};
    use super::*;

    fn d(src: &str, var: Var) -> ScalarExpr {
        parse_expression(src).unwrap().differentiate(var)
    }

    #[test]
    fn product_rule_folds() {
        let e = d("t*y*u", Var::U);
        assert_eq!(e.to_string(), "t * y");
    }

    #[test]
    fn second_derivative_of_scaled_square() {
        let e = d("3*u^2", Var::U).differentiate(Var::U);
        assert_eq!(e, Num(6.0));
        let e = d("u^2", Var::U).differentiate(Var::U);
        assert_eq!(e, Num(2.0));
    }

    #[test]
    fn square_at_one() {
        let e = d("y^2", Var::Y);
        assert_eq!(e.eval(&Point::new(0.0, 0.0, 1.0, 0.0)), 2.0);
    }

    #[test]
    fn constant_wrt_var() {
        assert_eq!(d("t*sin(u)", Var::Y), Num(0.0));
    }

    #[test]
    fn abs_is_flagged() {
        let (e, warnings) = parse_expression("abs(y)*2")
            .unwrap()
            .differentiate_with_warnings(Var::Y);
        assert_eq!(warnings.len(), 1);
        assert_eq!(e.eval(&Point::new(0.0, 0.0, 0.0, 0.0)), 0.0);
        assert_eq!(e.eval(&Point::new(0.0, 0.0, -2.0, 0.0)), -2.0);
    }

    #[test]
    fn variable_exponent() {
        // d/dy y^y = y^y (ln y + 1)
        let e = d("y^y", Var::Y);
        let y: f64 = 1.7;
        let expect = y.powf(y) * (y.ln() + 1.0);
        assert!((e.eval(&Point::new(0.0, 0.0, y, 0.0)) - expect).abs() < 1e-12);
    }
}
