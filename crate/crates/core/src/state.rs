//! Damped Newton solver for the discrete steady Burgers equation
//! `a(y_h, φ) + b(y_h, y_h, φ) = (rhs, φ)` on the zero-boundary P1 space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fe::{h1_seminorm, l2_norm, Mesh, PiecewiseLinearFn, ScalarFn};
use crate::forms::{assemble_linearized, assemble_stiffness, nonlinear_residual};

/// Maximum number of step halvings per Newton iteration.
const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonReport {
    /// Linear solves performed, the initial linear solve included.
    pub iterations: usize,
    /// Max-norm of the residual after each iterate.
    pub residual_history: Vec<f64>,
    pub damping_events: usize,
    pub converged: bool,
    /// Whether `‖f‖ < ν²` was known to hold for the forcing.
    pub viscosity_ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// `‖f‖_{L²}` of the forcing behind the load, when known. Enables the
    /// viscosity check and the post-solve H¹ stability bound.
    pub forcing_norm: Option<f64>,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 50,
            forcing_norm: None,
        }
    }
}

/// Whether `‖f‖_{L²} < ν²`, together with the norm.
pub fn check_viscosity(f: &dyn ScalarFn, nu: f64) -> (bool, f64) {
    let norm = l2_norm(f);
    (norm < nu * nu, norm)
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
}

/// Solves the discrete Burgers equation for the interior load `rhs`.
///
/// The first iterate solves the linear problem `a(y, φ) = rhs`. Each Newton
/// update is halved until the residual max-norm decreases.
pub fn solve_state(
    rhs: &[f64],
    mesh: &Mesh,
    nu: f64,
    opts: &NewtonOptions,
) -> Result<(PiecewiseLinearFn, NewtonReport)> {
    let stiffness = assemble_stiffness(mesh, nu)?;
    let viscosity_ok = opts.forcing_norm.is_some_and(|f| f < nu * nu);
    let mut report = NewtonReport {
        iterations: 1,
        residual_history: Vec::new(),
        damping_events: 0,
        converged: false,
        viscosity_ok,
    };

    let mut y = PiecewiseLinearFn::from_interior(*mesh, &stiffness.solve(rhs)?)?;
    let mut r = nonlinear_residual(&y, rhs, mesh, nu)?;
    let mut rn = max_norm(&r);
    report.residual_history.push(rn);

    while rn > opts.tol {
        if report.iterations >= opts.max_iter {
            return Err(Error::NewtonNonconvergence(Box::new(report)));
        }
        let jac = assemble_linearized(&y, mesh, nu)?;
        let neg_r: Vec<f64> = r.iter().map(|v| -v).collect();
        let delta = jac.solve(&neg_r)?;
        report.iterations += 1;

        let mut scale = 1.0;
        let mut halvings = 0;
        let (next, next_r, next_rn) = loop {
            let trial: Vec<f64> = y
                .interior()
                .iter()
                .zip(&delta)
                .map(|(a, d)| a + scale * d)
                .collect();
            let cand = PiecewiseLinearFn::from_interior(*mesh, &trial)?;
            let cand_r = nonlinear_residual(&cand, rhs, mesh, nu)?;
            let cand_rn = max_norm(&cand_r);
            if cand_rn < rn || halvings == MAX_HALVINGS {
                break (cand, cand_r, cand_rn);
            }
            scale *= 0.5;
            halvings += 1;
        };
        if halvings > 0 {
            report.damping_events += 1;
        }
        y = next;
        r = next_r;
        rn = next_rn;
        report.residual_history.push(rn);
    }
    report.converged = true;

    if viscosity_ok {
        let forcing = opts.forcing_norm.unwrap_or_default();
        let seminorm = h1_seminorm(&y);
        let bound = forcing / nu;
        if seminorm > bound * (1.0 + 1e-12) {
            return Err(Error::StabilityViolation { seminorm, bound });
        }
    }
    Ok((y, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fe::{build_mesh, PiecewisePolyFn};
    use crate::forms::{load_vector, ControlWindow};
    use approx::assert_abs_diff_eq;

    #[test]
    fn viscosity_examples() {
        assert_eq!(check_viscosity(&PiecewisePolyFn::zero(), 0.5), (true, 0.0));
        let ud = PiecewisePolyFn::new(
            vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0],
            vec![vec![1.0], vec![3.0, -6.0], vec![-1.0]],
        )
        .unwrap();
        let (ok, norm) = check_viscosity(&ud, 0.78);
        assert!(!ok);
        assert_abs_diff_eq!(norm, 7.0f64.sqrt() / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_load_gives_zero_state() {
        let m = build_mesh(10).unwrap();
        let (y, rep) = solve_state(&[0.0; 9], &m, 0.78, &NewtonOptions::default()).unwrap();
        assert!(y.values().iter().all(|&v| v == 0.0));
        assert_eq!(rep.iterations, 1);
        assert!(rep.converged);
    }

    #[test]
    fn single_dof_is_linear() {
        let m = build_mesh(2).unwrap();
        let nu = 0.78;
        let rhs = load_vector(&PiecewisePolyFn::constant(1.0), &ControlWindow::full(), &m);
        let (y, rep) = solve_state(&rhs, &m, nu, &NewtonOptions::default()).unwrap();
        assert_abs_diff_eq!(y.values()[1], 1.0 / (8.0 * nu), epsilon = 1e-15);
        assert!(rep.converged);
    }

    #[test]
    fn converges_to_tolerance() {
        let m = build_mesh(40).unwrap();
        let f = PiecewisePolyFn::polynomial(vec![3.0, -2.0, 5.0]).unwrap();
        let rhs = load_vector(&f, &ControlWindow::full(), &m);
        let (y, rep) = solve_state(&rhs, &m, 0.3, &NewtonOptions::default()).unwrap();
        let r = nonlinear_residual(&y, &rhs, &m, 0.3).unwrap();
        assert!(max_norm(&r) <= 1e-12);
        assert!(rep.iterations > 2);
        assert!(rep.residual_history.last().unwrap() <= &1e-12);
    }

    #[test]
    fn nonconvergence_carries_report() {
        let m = build_mesh(40).unwrap();
        let f = PiecewisePolyFn::constant(50.0);
        let rhs = load_vector(&f, &ControlWindow::full(), &m);
        let opts = NewtonOptions {
            max_iter: 2,
            ..Default::default()
        };
        match solve_state(&rhs, &m, 0.3, &opts) {
            Err(Error::NewtonNonconvergence(rep)) => {
                assert_eq!(rep.iterations, 2);
                assert!(!rep.converged);
            }
            other => panic!("expected nonconvergence, got {other:?}"),
        }
    }

    #[test]
    fn stability_bound_checked() {
        let m = build_mesh(32).unwrap();
        let nu = 0.78;
        let f = PiecewisePolyFn::polynomial(vec![0.1, 0.4, -0.3]).unwrap();
        let (ok, norm) = check_viscosity(&f, nu);
        assert!(ok);
        let rhs = load_vector(&f, &ControlWindow::full(), &m);
        let opts = NewtonOptions {
            forcing_norm: Some(norm),
            ..Default::default()
        };
        let (y, rep) = solve_state(&rhs, &m, nu, &opts).unwrap();
        assert!(rep.viscosity_ok);
        assert!(h1_seminorm(&y) <= norm / nu);
    }

    #[test]
    fn deterministic() {
        let m = build_mesh(33).unwrap();
        let f = PiecewisePolyFn::polynomial(vec![1.0, 2.0, -7.0]).unwrap();
        let rhs = load_vector(&f, &ControlWindow::full(), &m);
        let a = solve_state(&rhs, &m, 0.4, &NewtonOptions::default()).unwrap();
        let b = solve_state(&rhs, &m, 0.4, &NewtonOptions::default()).unwrap();
        assert_eq!(a, b);
    }
}
