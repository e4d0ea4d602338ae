//! Problem definitions: the controlled state equation
//!
//! ```text
//! y(t) = eta(t) + ∫_0^t f(t, s, y(s), u(s)) (t - s)^(alpha - 1) ds
//! ```
//!
//! and the cost `J(u) = ∫_0^T g(t, y, u) dt + Σ_i h_i(y(t_i))`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::expr::{parse_expression, NonSmooth, ScalarExpr, Var};
use crate::{Error, Result};

/// A cost charged on the state at a fixed time.
#[derive(Clone, Debug, PartialEq)]
pub struct InstantCost {
    pub time: f64,
    /// Expression in `y`.
    pub cost: ScalarExpr,
}

/// An expression together with its first and second partials in `(y, u)`.
#[derive(Clone, Debug)]
pub struct SecondOrderPartials {
    pub value: ScalarExpr,
    pub d_y: ScalarExpr,
    pub d_u: ScalarExpr,
    pub d_yy: ScalarExpr,
    pub d_yu: ScalarExpr,
    pub d_uu: ScalarExpr,
}

impl SecondOrderPartials {
    fn of(e: &ScalarExpr, warnings: &mut Vec<NonSmooth>) -> Self {
        let mut d = |e: &ScalarExpr, v: Var| {
            let (out, w) = e.differentiate_with_warnings(v);
            warnings.extend(w);
            out
        };
        let d_y = d(e, Var::Y);
        let d_u = d(e, Var::U);
        let d_yy = d(&d_y, Var::Y);
        let d_yu = d(&d_y, Var::U);
        let d_uu = d(&d_u, Var::U);
        Self {
            value: e.clone(),
            d_y,
            d_u,
            d_yy,
            d_yu,
            d_uu,
        }
    }

    /// `(name, expression)` pairs, parent first.
    pub fn entries(&self) -> [(&'static str, &ScalarExpr); 6] {
        [
            ("value", &self.value),
            ("d_y", &self.d_y),
            ("d_u", &self.d_u),
            ("d_yy", &self.d_yy),
            ("d_yu", &self.d_yu),
            ("d_uu", &self.d_uu),
        ]
    }
}

#[derive(Clone, Debug)]
pub struct InstantPartials {
    pub value: ScalarExpr,
    pub d_y: ScalarExpr,
    pub d_yy: ScalarExpr,
}

/// Symbolic partials of every problem function.
#[derive(Clone, Debug)]
pub struct DerivativeBundle {
    pub f: SecondOrderPartials,
    pub g: SecondOrderPartials,
    pub h: Vec<InstantPartials>,
    pub warnings: Vec<NonSmooth>,
}

impl DerivativeBundle {
    fn new(f: &ScalarExpr, g: &ScalarExpr, instants: &[InstantCost]) -> Self {
        let mut warnings = Vec::new();
        let f = SecondOrderPartials::of(f, &mut warnings);
        let g = SecondOrderPartials::of(g, &mut warnings);
        let h = instants
            .iter()
            .map(|ic| {
                let (d_y, w1) = ic.cost.differentiate_with_warnings(Var::Y);
                let (d_yy, w2) = d_y.differentiate_with_warnings(Var::Y);
                warnings.extend(w1);
                warnings.extend(w2);
                InstantPartials {
                    value: ic.cost.clone(),
                    d_y,
                    d_yy,
                }
            })
            .collect();
        Self { f, g, h, warnings }
    }
}

/// A validated optimal-control problem with its derivative bundle.
///
/// Equality compares the mathematical content only (alpha, horizon,
/// expressions, instants, bounds), not the label or parameter record.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    label: String,
    params: BTreeMap<String, f64>,
    alpha: f64,
    horizon: f64,
    eta: ScalarExpr,
    f: ScalarExpr,
    g: ScalarExpr,
    instant_costs: Vec<InstantCost>,
    control_bounds: Option<(f64, f64)>,
    derivs: DerivativeBundle,
}

impl PartialEq for ProblemSpec {
    fn eq(&self, other: &Self) -> bool {
        self.alpha == other.alpha
            && self.horizon == other.horizon
            && self.eta == other.eta
            && self.f == other.f
            && self.g == other.g
            && self.instant_costs == other.instant_costs
            && self.control_bounds == other.control_bounds
    }
}

impl ProblemSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        label: impl Into<String>,
        alpha: f64,
        horizon: f64,
        eta: ScalarExpr,
        f: ScalarExpr,
        g: ScalarExpr,
        instant_costs: Vec<InstantCost>,
        control_bounds: Option<(f64, f64)>,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::AlphaOutOfRange(alpha));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidHorizon(horizon));
        }
        eta.check_variables(&[Var::T])?;
        f.check_variables(&[Var::T, Var::S, Var::Y, Var::U])?;
        g.check_variables(&[Var::T, Var::Y, Var::U])?;
        let mut prev = f64::NEG_INFINITY;
        for ic in &instant_costs {
            if !(0.0..=horizon).contains(&ic.time) {
                return Err(Error::InstantOutOfRange(ic.time));
            }
            if ic.time <= prev {
                return Err(Error::InvalidProblem(format!(
                    "instant times must be strictly increasing ({} follows {})",
                    ic.time, prev
                )));
            }
            prev = ic.time;
            ic.cost.check_variables(&[Var::Y])?;
        }
        if let Some((lo, hi)) = control_bounds {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidProblem(format!(
                    "control bounds [{lo}, {hi}] are not an interval"
                )));
            }
        }
        let derivs = DerivativeBundle::new(&f, &g, &instant_costs);
        Ok(Self {
            label: label.into(),
            params: BTreeMap::new(),
            alpha,
            horizon,
            eta,
            f,
            g,
            instant_costs,
            control_bounds,
            derivs,
        })
    }

    fn with_params(mut self, params: BTreeMap<String, f64>) -> Self {
        self.params = params;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn eta(&self) -> &ScalarExpr {
        &self.eta
    }

    pub fn f(&self) -> &ScalarExpr {
        &self.f
    }

    pub fn g(&self) -> &ScalarExpr {
        &self.g
    }

    pub fn instant_costs(&self) -> &[InstantCost] {
        &self.instant_costs
    }

    pub fn control_bounds(&self) -> Option<(f64, f64)> {
        self.control_bounds
    }

    pub fn derivatives(&self) -> &DerivativeBundle {
        &self.derivs
    }

    /// Clamps a control value into the admissible interval, if any.
    pub fn clip_control(&self, u: f64) -> f64 {
        match self.control_bounds {
            Some((lo, hi)) => u.clamp(lo, hi),
            None => u,
        }
    }

    /// Serializes into the problem-file schema.
    pub fn to_file(&self) -> ProblemFile {
        ProblemFile {
            name: Some(self.label.clone()),
            alpha: self.alpha,
            horizon: self.horizon,
            eta: self.eta.to_string(),
            f: self.f.to_string(),
            g: self.g.to_string(),
            instant_costs: self
                .instant_costs
                .iter()
                .map(|ic| InstantCostEntry {
                    t: ic.time,
                    h: ic.cost.to_string(),
                })
                .collect(),
            control_bounds: self.control_bounds.map(|(lo, hi)| [lo, hi]),
        }
    }
}

/// On-disk problem description (JSON).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub alpha: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub eta: String,
    pub f: String,
    pub g: String,
    #[serde(default)]
    pub instant_costs: Vec<InstantCostEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_bounds: Option<[f64; 2]>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InstantCostEntry {
    pub t: f64,
    pub h: String,
}

impl ProblemFile {
    pub fn into_problem(self) -> Result<ProblemSpec> {
        let instants = self
            .instant_costs
            .iter()
            .map(|e| {
                Ok(InstantCost {
                    time: e.t,
                    cost: parse_expression(&e.h)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ProblemSpec::new(
            self.name.unwrap_or_else(|| "file".to_string()),
            self.alpha,
            self.horizon,
            parse_expression(&self.eta)?,
            parse_expression(&self.f)?,
            parse_expression(&self.g)?,
            instants,
            self.control_bounds.map(|[lo, hi]| (lo, hi)),
        )
    }
}

/// Reads and validates a JSON problem file.
pub fn load_problem_file(path: impl AsRef<Path>) -> Result<ProblemSpec> {
    let text = std::fs::read_to_string(path)?;
    parse_problem_json(&text)
}

pub fn parse_problem_json(text: &str) -> Result<ProblemSpec> {
    let file: ProblemFile = serde_json::from_str(text)?;
    file.into_problem()
}

/// Names accepted by [`builtin_problem`], with their parameters.
pub const BUILTIN_PROBLEMS: &[(&str, &str)] = &[
    (
        "paper_example",
        "alpha=1/2, T=1, eta=1+t^(3/2), f=t*y*u, g=y*u, h(y(1))=y, |u|<=1",
    ),
    (
        "abel_linear",
        "lambda [alpha=0.5, T=1]: f=lambda*y, eta=1, g=0",
    ),
    ("sing_quad", "c [alpha=0.5, T=1]: f=c*u^2, g=y^2, eta=1"),
    (
        "lq",
        "a, b, r [alpha=0.5, T=1]: f=a*y+b*u, g=y^2+r*u^2, eta=1",
    ),
];

fn expr(src: &str) -> ScalarExpr {
    parse_expression(src).expect("builtin expression parses")
}

/// Instantiates a builtin problem.
pub fn builtin_problem(name: &str, params: &BTreeMap<String, f64>) -> Result<ProblemSpec> {
    let (required, optional): (&[&str], &[&str]) = match name {
        "paper_example" => (&[], &[]),
        "abel_linear" => (&["lambda"], &["alpha", "T"]),
        "sing_quad" => (&["c"], &["alpha", "T"]),
        "lq" => (&["a", "b", "r"], &["alpha", "T"]),
        other => return Err(Error::UnknownProblem(other.to_string())),
    };
    for key in params.keys() {
        if !required.contains(&key.as_str()) && !optional.contains(&key.as_str()) {
            return Err(Error::InvalidProblem(format!(
                "`{name}` has no parameter `{key}`"
            )));
        }
    }
    let get = |key: &str| {
        params.get(key).copied().ok_or_else(|| Error::MissingParameter {
            problem: name.to_string(),
            param: key.to_string(),
        })
    };
    let alpha = params.get("alpha").copied().unwrap_or(0.5);
    let horizon = params.get("T").copied().unwrap_or(1.0);

    let spec = match name {
        "paper_example" => ProblemSpec::new(
            name,
            0.5,
            1.0,
            expr("1 + t*sqrt(t)"),
            expr("t*y*u"),
            expr("y*u"),
            vec![InstantCost {
                time: 1.0,
                cost: expr("y"),
            }],
            Some((-1.0, 1.0)),
        )?,
        "abel_linear" => {
            let lambda = get("lambda")?;
            ProblemSpec::new(
                name,
                alpha,
                horizon,
                expr("1"),
                expr(&format!("{lambda:?}*y")),
                expr("0"),
                vec![],
                None,
            )?
        }
        "sing_quad" => {
            let c = get("c")?;
            ProblemSpec::new(
                name,
                alpha,
                horizon,
                expr("1"),
                expr(&format!("{c:?}*u^2")),
                expr("y^2"),
                vec![],
                None,
            )?
        }
        "lq" => {
            let (a, b, r) = (get("a")?, get("b")?, get("r")?);
            ProblemSpec::new(
                name,
                alpha,
                horizon,
                expr("1"),
                expr(&format!("{a:?}*y + {b:?}*u")),
                expr(&format!("y^2 + {r:?}*u^2")),
                vec![],
                None,
            )?
        }
        _ => unreachable!(),
    };
    Ok(spec.with_params(params.clone()))
}

/// Convenience wrapper taking `(key, value)` pairs.
pub fn builtin(name: &str, params: &[(&str, f64)]) -> Result<ProblemSpec> {
    let map = params
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect::<BTreeMap<_, _>>();
    builtin_problem(name, &map)
}
