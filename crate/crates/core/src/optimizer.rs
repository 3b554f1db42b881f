//! Box-constrained minimization of the reduced objective.
//!
//! Projected gradient with Armijo backtracking in the L² inner product, and
//! an optional projected limited-memory BFGS direction that falls back to a
//! gradient step when it fails the sufficient-decrease test. Projection
//! clips nodal values, so every iterate is the interpolant of a clipped
//! function.

use serde::{Deserialize, Serialize};

use crate::adjoint::{ReducedEval, ReducedProblem};
use crate::error::{invalid, Error, Result};
use crate::fe::{Mesh, PiecewiseLinearFn};
use crate::problem::OcpProblem;

const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 50;
const LBFGS_MEMORY: usize = 8;
const LBFGS_BACKTRACKS: usize = 10;

/// Admissible control values `[α, β]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlBounds {
    lower: f64,
    upper: f64,
}

impl ControlBounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower < upper) {
            return Err(invalid(format!(
                "bounds: alpha = {lower} must be below beta = {upper}"
            )));
        }
        Ok(Self { lower, upper })
    }

    /// Bypasses the ordering check; used while collecting load errors.
    pub(crate) fn unchecked(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn clip(&self, v: f64) -> f64 {
        v.clamp(self.lower, self.upper)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

pub fn project_box(u: &PiecewiseLinearFn, bounds: &ControlBounds) -> PiecewiseLinearFn {
    let values = u.values().iter().map(|&v| bounds.clip(v)).collect();
    PiecewiseLinearFn::new(*u.mesh(), values, false).expect("same shape as input")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Gradient,
    Bfgs,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gradient" => Ok(Method::Gradient),
            "bfgs" => Ok(Method::Bfgs),
            other => Err(invalid(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OcpOptions {
    /// Stop once `‖u_{k+1} - u_k‖_h < tol`.
    pub tol: f64,
    pub max_iter: usize,
    pub method: Method,
    /// Starting control; defaults to the projection of zero.
    pub initial: Option<PiecewiseLinearFn>,
}

impl Default for OcpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 5000,
            method: Method::Gradient,
            initial: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OcpSolution {
    pub control: PiecewiseLinearFn,
    pub state: PiecewiseLinearFn,
    pub adjoint_state: PiecewiseLinearFn,
    pub objective: f64,
    pub iterations: usize,
    /// `‖u_{k+1} - u_k‖_h` per accepted step.
    pub step_history: Vec<f64>,
    /// Objective at the initial control and after each accepted step.
    pub objective_history: Vec<f64>,
    pub vi_residual: f64,
    pub converged: bool,
}

/// Fixed-point residual `‖u - P(u_d - B p / λ)‖_h` in the discrete
/// setting: `u_d` enters through its nodal interpolant and `B p` through its
/// Riesz representative in the lumped inner product, clipped nodally.
pub fn vi_residual(
    u: &PiecewiseLinearFn,
    p: &PiecewiseLinearFn,
    problem: &OcpProblem,
) -> Result<f64> {
    if !(problem.lambda > 0.0) {
        return Err(invalid(format!(
            "lambda must be positive, got {}",
            problem.lambda
        )));
    }
    let rp = ReducedProblem::new(problem, *u.mesh())?;
    vi_residual_with(&rp, u, p)
}

fn vi_residual_with(
    rp: &ReducedProblem<'_>,
    u: &PiecewiseLinearFn,
    p: &PiecewiseLinearFn,
) -> Result<f64> {
    u.check_same_mesh(p)?;
    let problem = rp.problem();
    let bp = rp.window_riesz(p)?;
    let diff: Vec<f64> = u
        .values()
        .iter()
        .zip(rp.control_target().values())
        .zip(&bp)
        .map(|((&u, &ud), &b)| u - problem.bounds.clip(ud - b / problem.lambda))
        .collect();
    Ok(rp.norm(&diff))
}

/// Limited-memory inverse-Hessian approximation in the lumped inner product.
struct Lbfgs {
    pairs: Vec<(Vec<f64>, Vec<f64>, f64)>,
    initial_scale: f64,
}

impl Lbfgs {
    fn new(initial_scale: f64) -> Self {
        Self {
            pairs: Vec::new(),
            initial_scale,
        }
    }

    fn push(&mut self, rp: &ReducedProblem<'_>, s: Vec<f64>, y: Vec<f64>) {
        let sy = rp.inner(&s, &y);
        if sy <= 1e-12 * rp.norm(&s) * rp.norm(&y) || sy <= 0.0 {
            return;
        }
        if self.pairs.len() == LBFGS_MEMORY {
            self.pairs.remove(0);
        }
        self.pairs.push((s, y, 1.0 / sy));
    }

    /// `-H g` by the two-loop recursion.
    fn direction(&self, rp: &ReducedProblem<'_>, g: &[f64]) -> Vec<f64> {
        let mut q = g.to_vec();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * rp.inner(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        let gamma = match self.pairs.last() {
            Some((s, y, _)) => rp.inner(s, y) / rp.inner(y, y),
            None => self.initial_scale,
        };
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.iter().rev()) {
            let b = rho * rp.inner(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        q.iter().map(|v| -v).collect()
    }
}

struct Trial {
    u: PiecewiseLinearFn,
    eval: ReducedEval,
}

fn projected_point(
    u: &PiecewiseLinearFn,
    dir: &[f64],
    step: f64,
    problem: &OcpProblem,
) -> PiecewiseLinearFn {
    let values = u
        .values()
        .iter()
        .zip(dir)
        .map(|(&a, &d)| problem.bounds.clip(a + step * d))
        .collect();
    PiecewiseLinearFn::new(*u.mesh(), values, false).expect("same shape as input")
}

/// Armijo test `j(u+) <= j(u) - c (g, u - u+)`; requires positive decrease.
fn armijo_trial(
    rp: &ReducedProblem<'_>,
    u: &PiecewiseLinearFn,
    current: &ReducedEval,
    candidate: PiecewiseLinearFn,
) -> Result<Option<Trial>> {
    let diff: Vec<f64> = u
        .values()
        .iter()
        .zip(candidate.values())
        .map(|(a, b)| a - b)
        .collect();
    let decrease = rp.inner(current.gradient.values(), &diff);
    if diff.iter().all(|&d| d == 0.0) {
        let eval = current.clone();
        return Ok(Some(Trial { u: candidate, eval }));
    }
    if !(decrease > 0.0) {
        return Ok(None);
    }
    let eval = rp.eval(&candidate)?;
    if eval.j <= current.j - ARMIJO_C * decrease {
        Ok(Some(Trial { u: candidate, eval }))
    } else {
        Ok(None)
    }
}

/// Solves the discrete control-constrained problem on `mesh`.
pub fn solve_ocp(problem: &OcpProblem, mesh: &Mesh, opts: &OcpOptions) -> Result<OcpSolution> {
    problem.validate()?;
    if !(opts.tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let rp = ReducedProblem::new(problem, *mesh)?;
    let start = match &opts.initial {
        Some(u0) => {
            if u0.mesh() != mesh {
                return Err(invalid("initial control lives on a different mesh"));
            }
            project_box(u0, &problem.bounds)
        }
        None => project_box(&PiecewiseLinearFn::zeros(*mesh, false), &problem.bounds),
    };

    let mut u = start;
    let mut current = rp.eval(&u)?;
    let mut step = 1.0;
    let mut step_history = Vec::new();
    let mut objective_history = vec![current.j];
    let mut lbfgs = Lbfgs::new(1.0 / problem.lambda);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        iterations += 1;
        let g = current.gradient.values().to_vec();

        let mut accepted = None;
        if opts.method == Method::Bfgs {
            let dir = lbfgs.direction(&rp, &g);
            let mut t = 1.0;
            for _ in 0..LBFGS_BACKTRACKS {
                let cand = projected_point(&u, &dir, t, problem);
                if let Some(trial) = armijo_trial(&rp, &u, &current, cand)? {
                    accepted = Some(trial);
                    break;
                }
                t *= 0.5;
            }
        }
        if accepted.is_none() {
            let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
            let mut s = if iterations == 1 { step } else { 2.0 * step };
            for _ in 0..MAX_BACKTRACKS {
                let cand = projected_point(&u, &neg_g, s, problem);
                if let Some(trial) = armijo_trial(&rp, &u, &current, cand)? {
                    step = s;
                    accepted = Some(trial);
                    break;
                }
                s *= 0.5;
            }
        }

        let Some(trial) = accepted else {
            // No admissible decrease at any step length: stationary to
            // rounding.
            step_history.push(0.0);
            converged = true;
            break;
        };

        let diff: Vec<f64> = trial
            .u
            .values()
            .iter()
            .zip(u.values())
            .map(|(a, b)| a - b)
            .collect();
        let moved = rp.norm(&diff);
        if opts.method == Method::Bfgs {
            let dg: Vec<f64> = trial
                .eval
                .gradient
                .values()
                .iter()
                .zip(&g)
                .map(|(a, b)| a - b)
                .collect();
            lbfgs.push(&rp, diff, dg);
        }
        step_history.push(moved);
        objective_history.push(trial.eval.j);
        u = trial.u;
        current = trial.eval;
        if moved < opts.tol {
            converged = true;
            break;
        }
    }

    let vi = vi_residual_with(&rp, &u, &current.adjoint_state)?;
    let solution = OcpSolution {
        control: u,
        state: current.state,
        adjoint_state: current.adjoint_state,
        objective: current.j,
        iterations,
        step_history,
        objective_history,
        vi_residual: vi,
        converged,
    };
    if converged {
        Ok(solution)
    } else {
        Err(Error::OcpNonconvergence(Box::new(solution)))
    }
}
