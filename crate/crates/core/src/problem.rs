//! Problem descriptions: the manufactured example with known optimal
//! triple, and JSON problem files.
//!
//! File schema (unknown keys are rejected):
//!
//! ```json
//! {
//!   "name": "optional label",
//!   "nu": 0.78, "lambda": 0.1, "alpha": -1.0, "beta": 1.0,
//!   "omega": [0.0, 1.0],
//!   "y_d": {"breaks": [0, 1], "coeffs": [[0, 1, -1]]},
//!   "u_d": {...}, "f": {...},
//!   "exact": {"u": {...}, "y": {...}, "p": {...}}
//! }
//! ```
//!
//! Polynomial coefficients are ascending powers of the global coordinate.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fe::{PiecewisePolyFn, ScalarFn};
use crate::forms::ControlWindow;
use crate::optimizer::ControlBounds;

/// Tolerance on the pointwise optimality residuals of a declared exact
/// solution when loading a problem file.
pub const EXACT_TRIPLE_TOL: f64 = 1e-8;

/// Number of sample points for the exact-triple check.
const RESIDUAL_GRID: usize = 1000;

pub const DEFAULT_LAMBDA: f64 = 0.1;

/// Exact optimal control, state and adjoint state.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    pub u: PiecewisePolyFn,
    pub y: PiecewisePolyFn,
    pub p: PiecewisePolyFn,
}

/// `min ½‖y - y_d‖² + λ/2 ‖u - u_d‖²` subject to
/// `-ν y'' + y y' = B u + f`, `y(0) = y(1) = 0`, `α <= u <= β`.
#[derive(Debug, Clone, PartialEq)]
pub struct OcpProblem {
    pub name: String,
    pub nu: f64,
    pub lambda: f64,
    pub bounds: ControlBounds,
    pub window: ControlWindow,
    pub y_d: PiecewisePolyFn,
    pub u_d: PiecewisePolyFn,
    pub f: PiecewisePolyFn,
    pub exact: Option<ExactSolution>,
}

impl OcpProblem {
    /// Scalar invariants; the exact triple is checked by
    /// [`optimality_residuals`].
    pub fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            issues.push(format!("nu must be positive, got {}", self.nu));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            issues.push(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.bounds.lower() < self.bounds.upper()) {
            issues.push(format!(
                "bounds: alpha = {} must be below beta = {}",
                self.bounds.lower(),
                self.bounds.upper()
            ));
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(issues))
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    /// `B u` evaluated pointwise.
    pub fn apply_window(&self, g: &dyn ScalarFn, x: f64) -> f64 {
        if self.window.contains(x) {
            g.value(x)
        } else {
            0.0
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ProblemFile::from(self))?)
    }

    pub fn from_json(text: &str, lambda_override: Option<f64>) -> Result<Self> {
        let file: ProblemFile = serde_json::from_str(text)?;
        let problem = file.into_problem(lambda_override)?;
        if let Some(exact) = &problem.exact {
            let residuals = optimality_residuals(&problem, exact);
            let bad: Vec<_> = residuals
                .into_iter()
                .filter(|(_, r)| !(*r <= EXACT_TRIPLE_TOL))
                .collect();
            if !bad.is_empty() {
                return Err(Error::ExactTripleInconsistent(bad));
            }
        }
        Ok(problem)
    }
}

/// The manufactured example on `(0, 1)` with `ν = 0.78`, bounds `[-1, 1]`
/// and optimal triple `ū = u_d`, `ȳ = y_d = x(1 - x)`, `p̄ = 0`.
pub fn example_e(lambda: f64) -> OcpProblem {
    let nu = 0.78;
    let u_d = PiecewisePolyFn::new(
        vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0],
        vec![vec![1.0], vec![3.0, -6.0], vec![-1.0]],
    )
    .expect("valid control data");
    let y_d = PiecewisePolyFn::polynomial(vec![0.0, 1.0, -1.0]).expect("valid state data");
    // x(x - 1)(2x - 1) + 2ν
    let smooth = PiecewisePolyFn::polynomial(vec![2.0 * nu, 1.0, -3.0, 2.0]).expect("cubic");
    let f = smooth.add(&u_d.scale(-1.0));
    OcpProblem {
        name: "example-e".into(),
        nu,
        lambda,
        bounds: ControlBounds::new(-1.0, 1.0).expect("valid bounds"),
        window: ControlWindow::full(),
        exact: Some(ExactSolution {
            u: u_d.clone(),
            y: y_d.clone(),
            p: PiecewisePolyFn::zero(),
        }),
        y_d,
        u_d,
        f,
    }
}

/// Resolves a catalog name or a path to a problem file.
pub fn resolve_problem(spec: &str, lambda: Option<f64>) -> Result<OcpProblem> {
    match spec.to_ascii_lowercase().as_str() {
        "e" | "example-e" | "example_e" => {
            let p = example_e(lambda.unwrap_or(DEFAULT_LAMBDA));
            p.validate()?;
            Ok(p)
        }
        _ => load_problem(spec, lambda),
    }
}

pub fn load_problem(path: impl AsRef<Path>, lambda_override: Option<f64>) -> Result<OcpProblem> {
    let text = std::fs::read_to_string(path)?;
    OcpProblem::from_json(&text, lambda_override)
}

/// Maximum pointwise residuals of the optimality system, named by equation:
/// state `-ν y'' + y y' - (B u + f)`, adjoint `-ν p'' - y p' - (y - y_d)`,
/// projection `u - P(u_d - B p / λ)` and the boundary values of `y`, `p`.
pub fn optimality_residuals(problem: &OcpProblem, exact: &ExactSolution) -> Vec<(String, f64)> {
    let (y, u, p) = (&exact.y, &exact.u, &exact.p);
    let nu = problem.nu;
    let mut state = 0.0f64;
    let mut adjoint = 0.0f64;
    let mut projection = 0.0f64;
    for j in 0..RESIDUAL_GRID {
        let x = (j as f64 + 0.5) / RESIDUAL_GRID as f64;
        let (yv, dy, d2y) = (y.value(x), y.slope(x), y.second_derivative(x));
        let rs = -nu * d2y + yv * dy - (problem.apply_window(u, x) + problem.f.value(x));
        let (dp, d2p) = (p.slope(x), p.second_derivative(x));
        let ra = -nu * d2p - yv * dp - (yv - problem.y_d.value(x));
        let target = problem.u_d.value(x) - problem.apply_window(p, x) / problem.lambda;
        let rp = u.value(x) - problem.bounds.clip(target);
        state = state.max(rs.abs());
        adjoint = adjoint.max(ra.abs());
        projection = projection.max(rp.abs());
    }
    let boundary = [y.value(0.0), y.value(1.0), p.value(0.0), p.value(1.0)]
        .iter()
        .fold(0.0f64, |a, b| a.max(b.abs()));
    vec![
        ("state".into(), state),
        ("adjoint".into(), adjoint),
        ("projection".into(), projection),
        ("boundary".into(), boundary),
    ]
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FunctionSpec {
    breaks: Vec<f64>,
    coeffs: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExactSpec {
    u: FunctionSpec,
    y: FunctionSpec,
    p: FunctionSpec,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    nu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    alpha: f64,
    beta: f64,
    omega: [f64; 2],
    y_d: FunctionSpec,
    u_d: FunctionSpec,
    f: FunctionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    exact: Option<ExactSpec>,
}

impl From<&PiecewisePolyFn> for FunctionSpec {
    fn from(f: &PiecewisePolyFn) -> Self {
        FunctionSpec {
            breaks: f.breaks().to_vec(),
            coeffs: f.coeffs().to_vec(),
        }
    }
}

impl From<&OcpProblem> for ProblemFile {
    fn from(p: &OcpProblem) -> Self {
        ProblemFile {
            name: Some(p.name.clone()),
            nu: p.nu,
            lambda: Some(p.lambda),
            alpha: p.bounds.lower(),
            beta: p.bounds.upper(),
            omega: p.window.into(),
            y_d: (&p.y_d).into(),
            u_d: (&p.u_d).into(),
            f: (&p.f).into(),
            exact: p.exact.as_ref().map(|e| ExactSpec {
                u: (&e.u).into(),
                y: (&e.y).into(),
                p: (&e.p).into(),
            }),
        }
    }
}

fn convert(field: &str, spec: FunctionSpec, issues: &mut Vec<String>) -> PiecewisePolyFn {
    match PiecewisePolyFn::new(spec.breaks, spec.coeffs) {
        Ok(f) => f,
        Err(e) => {
            issues.push(format!("{field}: {e}"));
            PiecewisePolyFn::zero()
        }
    }
}

impl ProblemFile {
    fn into_problem(self, lambda_override: Option<f64>) -> Result<OcpProblem> {
        let mut issues = Vec::new();
        let lambda = lambda_override.or(self.lambda).unwrap_or(DEFAULT_LAMBDA);
        let bounds = ControlBounds::new(self.alpha, self.beta).unwrap_or_else(|_| {
            issues.push(format!(
                "bounds: alpha = {} must be below beta = {}",
                self.alpha, self.beta
            ));
            ControlBounds::unchecked(self.alpha, self.beta)
        });
        let window = ControlWindow::new(self.omega[0], self.omega[1]).unwrap_or_else(|e| {
            issues.push(format!("omega: {e}"));
            ControlWindow::full()
        });
        let y_d = convert("y_d", self.y_d, &mut issues);
        let u_d = convert("u_d", self.u_d, &mut issues);
        let f = convert("f", self.f, &mut issues);
        let exact = self.exact.map(|e| ExactSolution {
            u: convert("exact.u", e.u, &mut issues),
            y: convert("exact.y", e.y, &mut issues),
            p: convert("exact.p", e.p, &mut issues),
        });
        let problem = OcpProblem {
            name: self.name.unwrap_or_else(|| "unnamed".into()),
            nu: self.nu,
            lambda,
            bounds,
            window,
            y_d,
            u_d,
            f,
            exact,
        };
        if let Err(Error::Validation(more)) = problem.validate() {
            for m in more {
                if !issues.contains(&m) {
                    issues.push(m);
                }
            }
        }
        if issues.is_empty() {
            Ok(problem)
        } else {
            Err(Error::Validation(issues))
        }
    }
}

/// Builds the JSON value of a problem, for callers that edit fields before
/// writing a file.
pub fn problem_to_value(problem: &OcpProblem) -> Result<serde_json::Value> {
    serde_json::to_value(ProblemFile::from(problem)).map_err(Error::from)
}

pub(crate) fn require_exact(problem: &OcpProblem) -> Result<&ExactSolution> {
    problem
        .exact
        .as_ref()
        .ok_or_else(|| invalid(format!("problem '{}' has no exact solution", problem.name)))
}
