//! The continuous two-point boundary-value problem
//!
//! ```text
//! -eps u'' - b(x) u' + c(x) u = f(x),  0 < x < 1,   u(0) = u(1) = 0
//! ```
//!
//! with `b(x) >= beta > 0` and `c(x) >= 0`. For small `eps` the solution has
//! a boundary layer of width `O(eps)` at `x = 0`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Exact solution `u(x, eps)`.
pub type ExactFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A coefficient function on `[0, 1]`.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    /// Coefficients in ascending powers of `x`.
    Polynomial(Vec<f64>),
    Custom(ScalarFn),
}

impl Coefficient {
    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Coefficient::Custom(Arc::new(f))
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Coefficient::Constant(v) => *v,
            Coefficient::Polynomial(coeffs) => coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c),
            Coefficient::Custom(f) => f(x),
        }
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(v) => write!(f, "const {v}"),
            Coefficient::Polynomial(c) => write!(f, "poly {c:?}"),
            Coefficient::Custom(_) => f.write_str("custom"),
        }
    }
}

/// Parses the config-file presets `const V`, `poly C0 C1 ...` or a bare number.
impl FromStr for Coefficient {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut words = s.split_whitespace();
        let head = words
            .next()
            .ok_or_else(|| Error::InvalidProblem("empty coefficient".into()))?;
        let parse = |w: &str| {
            w.parse::<f64>().map_err(|_| {
                Error::InvalidProblem(format!("bad number `{w}` in coefficient `{s}`"))
            })
        };
        match head {
            "const" | "constant" => {
                let v: Vec<f64> = words.map(parse).collect::<Result<_>>()?;
                match v.as_slice() {
                    [c] => Ok(Coefficient::Constant(*c)),
                    _ => Err(Error::InvalidProblem(format!(
                        "`{s}`: const takes one value"
                    ))),
                }
            }
            "poly" | "polynomial" => {
                let v: Vec<f64> = words.map(parse).collect::<Result<_>>()?;
                if v.is_empty() {
                    return Err(Error::InvalidProblem(format!(
                        "`{s}`: poly needs coefficients"
                    )));
                }
                Ok(Coefficient::Polynomial(v))
            }
            other if words.next().is_none() => parse(other).map(Coefficient::Constant),
            _ => Err(Error::InvalidProblem(format!(
                "unrecognised coefficient `{s}`"
            ))),
        }
    }
}

#[derive(Clone)]
pub struct TestProblem {
    pub name: String,
    /// Convection coefficient.
    pub b: Coefficient,
    /// Reaction coefficient.
    pub c: Coefficient,
    /// Source term.
    pub f: Coefficient,
    /// Lower bound for `b` on `[0, 1]`.
    pub beta: f64,
    pub exact: Option<ExactFn>,
}

impl fmt::Debug for TestProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestProblem")
            .field("name", &self.name)
            .field("b", &self.b)
            .field("c", &self.c)
            .field("f", &self.f)
            .field("beta", &self.beta)
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl TestProblem {
    pub fn new(
        name: impl Into<String>,
        b: Coefficient,
        c: Coefficient,
        f: Coefficient,
        beta: f64,
    ) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "beta must be positive, got {beta}"
            )));
        }
        Ok(TestProblem {
            name: name.into(),
            b,
            c,
            f,
            beta,
            exact: None,
        })
    }

    pub fn with_exact(mut self, u: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.exact = Some(Arc::new(u));
        self
    }

    pub fn exact_at(&self, x: f64, epsilon: f64) -> Option<f64> {
        self.exact.as_ref().map(|u| u(x, epsilon))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    ConvectionBelowBeta { x: f64, b: f64, beta: f64 },
    NegativeReaction { x: f64, c: f64 },
    NonzeroBoundaryValue { x: f64, epsilon: f64, value: f64 },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_admissible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Perturbation parameters at which the exact solution's boundary values are checked.
const BOUNDARY_CHECK_EPS: [f64; 2] = [1e-2, 1e-8];
const BOUNDARY_TOL: f64 = 1e-12;

/// Samples the sign conditions `b >= beta` and `c >= 0` at `grid_size + 1`
/// equidistant points. Smoothness of the coefficients is not checked.
pub fn validate_problem(p: &TestProblem, grid_size: usize) -> ValidationReport {
    assert!(grid_size >= 2, "validation grid needs at least 2 intervals");
    let mut violations = Vec::new();
    for k in 0..=grid_size {
        let x = k as f64 / grid_size as f64;
        let b = p.b.eval(x);
        if !(b >= p.beta) {
            violations.push(Violation::ConvectionBelowBeta { x, b, beta: p.beta });
        }
        let c = p.c.eval(x);
        if !(c >= 0.0) {
            violations.push(Violation::NegativeReaction { x, c });
        }
    }
    if let Some(u) = &p.exact {
        for &epsilon in &BOUNDARY_CHECK_EPS {
            for x in [0.0, 1.0] {
                let value = u(x, epsilon);
                if !(value.abs() <= BOUNDARY_TOL) {
                    violations.push(Violation::NonzeroBoundaryValue { x, epsilon, value });
                }
            }
        }
    }
    ValidationReport { violations }
}

/// `u(x) = (1 - exp(-x/eps)) / (1 - exp(-1/eps)) - x`, the solution of
/// `-eps u'' - u' = 1` with homogeneous boundary values.
pub fn layer_solution(x: f64, epsilon: f64) -> f64 {
    (-x / epsilon).exp_m1() / (-1.0 / epsilon).exp_m1() - x
}

/// `b = 1, c = 0, f = 1, beta = 1` with the closed-form solution [`layer_solution`].
pub fn builtin_layer_problem() -> TestProblem {
    TestProblem {
        name: "layer-constant".into(),
        b: Coefficient::Constant(1.0),
        c: Coefficient::Constant(0.0),
        f: Coefficient::Constant(1.0),
        beta: 1.0,
        exact: Some(Arc::new(layer_solution)),
    }
}

/// `b = 1 + x^2, c = x, f = 1 + x, beta = 1`. No closed form; use the
/// double-mesh error estimate.
pub fn builtin_variable_problem() -> TestProblem {
    TestProblem {
        name: "layer-variable".into(),
        b: Coefficient::Polynomial(vec![1.0, 0.0, 1.0]),
        c: Coefficient::Polynomial(vec![0.0, 1.0]),
        f: Coefficient::Polynomial(vec![1.0, 1.0]),
        beta: 1.0,
        exact: None,
    }
}

pub const BUILTIN_PROBLEMS: [&str; 2] = ["layer-constant", "layer-variable"];

pub fn problem_by_name(name: &str) -> Result<TestProblem> {
    match name {
        "layer-constant" => Ok(builtin_layer_problem()),
        "layer-variable" => Ok(builtin_variable_problem()),
        other => Err(Error::UnknownProblem(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(b: f64, c: f64, f: f64, beta: f64) -> TestProblem {
        TestProblem::new(
            "t",
            Coefficient::Constant(b),
            Coefficient::Constant(c),
            Coefficient::Constant(f),
            beta,
        )
        .unwrap()
    }

    #[test]
    fn constant_problem_is_admissible() {
        assert!(validate_problem(&constant(1.0, 0.0, 1.0, 1.0), 10).is_admissible());
    }

    #[test]
    fn vanishing_convection_is_reported_at_zero() {
        let mut p = constant(1.0, 0.0, 1.0, 1.0);
        p.b = Coefficient::Polynomial(vec![0.0, 1.0]);
        let report = validate_problem(&p, 4);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::ConvectionBelowBeta { x, .. } if *x == 0.0)));
    }

    #[test]
    fn quadratic_reaction_is_admissible() {
        let mut p = constant(2.0, 0.0, 1.0, 2.0);
        p.c = Coefficient::Polynomial(vec![0.0, 0.0, 1.0]);
        assert!(validate_problem(&p, 16).is_admissible());
    }

    #[test]
    fn negative_reaction_and_bad_exact_are_reported() {
        let p = constant(1.0, -0.5, 1.0, 1.0).with_exact(|x, _| x);
        let report = validate_problem(&p, 2);
        let negative = report
            .violations
            .iter()
            .filter(|v| matches!(v, Violation::NegativeReaction { .. }))
            .count();
        assert_eq!(negative, 3);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NonzeroBoundaryValue { x, .. } if *x == 1.0)));
    }

    #[test]
    fn builtin_problems_validate_on_any_grid() {
        for n in [2, 3, 7, 100, 1000] {
            assert!(validate_problem(&builtin_layer_problem(), n).is_admissible());
            assert!(validate_problem(&builtin_variable_problem(), n).is_admissible());
        }
    }

    #[test]
    fn layer_solution_boundary_values() {
        for eps in [1.0, 1e-2, 1e-6, 1e-12] {
            assert_eq!(layer_solution(0.0, eps), 0.0);
            assert!(layer_solution(1.0, eps).abs() < 1e-15);
        }
    }

    #[test]
    fn layer_solution_closed_form_value() {
        // 50-digit evaluation of the closed form.
        let expected = 0.493_307_149_075_715_1;
        assert!((layer_solution(0.5, 0.1) - expected).abs() < 1e-15);
    }

    #[test]
    fn nonpositive_beta_is_rejected() {
        let r = TestProblem::new(
            "t",
            Coefficient::Constant(1.0),
            Coefficient::Constant(0.0),
            Coefficient::Constant(1.0),
            0.0,
        );
        assert!(matches!(r, Err(Error::InvalidProblem(_))));
    }

    #[test]
    fn coefficient_presets_parse() {
        let c: Coefficient = "poly 1 0 2".parse().unwrap();
        assert_eq!(c.eval(2.0), 9.0);
        let c: Coefficient = "const 3.5".parse().unwrap();
        assert_eq!(c.eval(0.3), 3.5);
        let c: Coefficient = "0.25".parse().unwrap();
        assert_eq!(c.eval(0.9), 0.25);
        assert!("poly".parse::<Coefficient>().is_err());
        assert!("spline 1 2".parse::<Coefficient>().is_err());
    }

    #[test]
    fn unknown_problem_name() {
        assert!(matches!(
            problem_by_name("nope"),
            Err(Error::UnknownProblem(_))
        ));
        assert_eq!(
            problem_by_name("layer-constant").unwrap().name,
            "layer-constant"
        );
    }
}
