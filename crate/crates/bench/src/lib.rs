//! Shared inputs for the solver benchmarks.

use burgers_ocp::{example_e, interpolate, Mesh, OcpProblem, PiecewiseLinearFn, ReducedProblem};

pub const SIZES: [usize; 3] = [41, 161, 641];

pub fn problem() -> OcpProblem {
    example_e(0.1)
}

/// Nodal interpolant of the exact control on `n` elements.
pub fn exact_control(problem: &OcpProblem, n: usize) -> PiecewiseLinearFn {
    let exact = problem.exact.as_ref().expect("example has an exact triple");
    interpolate(&exact.u, Mesh::new(n).unwrap(), false).unwrap()
}

/// Interior state load for the exact control.
pub fn state_load(problem: &OcpProblem, n: usize) -> Vec<f64> {
    let rp = ReducedProblem::new(problem, Mesh::new(n).unwrap()).unwrap();
    rp.state_load(&exact_control(problem, n))
}
