//! Optimal control of the steady viscous Burgers equation on `(0, 1)` with
//! pointwise control bounds, discretized by continuous piecewise-linear
//! finite elements.
//!
//! Modules, bottom-up:
//!
//! - [`fe`]: uniform mesh, P1 functions, reference functions, quadrature,
//!   L²/H¹ errors.
//! - [`tridiag`]: tridiagonal storage and direct solve.
//! - [`forms`]: viscous, mass and convective forms, residual and Jacobian.
//! - [`state`]: damped Newton for the discrete state equation.
//! - [`adjoint`]: discrete adjoint and reduced objective/gradient.
//! - [`optimizer`]: projected gradient / projected L-BFGS.
//! - [`problem`]: manufactured example and JSON problem files.
//! - [`study`]: convergence tables, gradient checks, CSV/JSON output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adjoint;
pub mod error;
pub mod fe;
pub mod forms;
pub mod optimizer;
pub mod problem;
pub mod state;
pub mod study;
pub mod tridiag;

pub use adjoint::{reduced_eval, solve_adjoint, ReducedEval, ReducedProblem};
pub use error::{Error, Result};
pub use fe::{
    build_mesh, h1_seminorm, h1_seminorm_error, interpolate, l2_error, l2_norm, Mesh,
    PiecewiseLinearFn, PiecewisePolyFn, QuadratureRule, ScalarFn,
};
pub use forms::{
    assemble_linearized, assemble_lumped_mass, assemble_mass, assemble_stiffness, load_vector,
    nonlinear_residual,
    trilinear_b, ControlWindow,
};
pub use optimizer::{
    project_box, solve_ocp, vi_residual, ControlBounds, Method, OcpOptions, OcpSolution,
};
pub use problem::{example_e, load_problem, resolve_problem, ExactSolution, OcpProblem};
pub use state::{check_viscosity, solve_state, NewtonOptions, NewtonReport};
pub use study::{
    emit, run_eoc_control, run_eoc_state, run_grad_check, EocRow, EocTable, FixedControl, Format,
    GradCheckReport, Reference,
};
pub use tridiag::TridiagonalMatrix;
