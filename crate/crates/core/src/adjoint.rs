//! Discrete adjoint and the reduced objective `j(u) = J(y_h(u), u)`.
//!
//! The adjoint operator is the transpose of the Newton Jacobian, which makes
//! the reduced gradient the exact derivative of the discrete objective.
//!
//! The control space (free P1 functions) carries the lumped L² inner product
//! `(a, b)_h = Σ m_i a_i b_i`. The control cost is `λ/2 ‖u - Π_h u_d‖_h²`
//! with `Π_h` the nodal interpolant, and the gradient is the Riesz
//! representative in `(·, ·)_h`. Nodal clipping is then the exact projection
//! onto the box in this metric, so projected descent steps are descent steps
//! and stationary points are fixed points of `u = P(Π_h u_d - B p / λ)`.

use crate::error::{invalid, Result};
use crate::fe::{interpolate, l2_distance, Difference, Mesh, PiecewiseLinearFn, PiecewisePolyFn};
use crate::forms::{
    assemble_linearized, assemble_lumped_mass, load_vector, load_vector_full, ControlWindow,
};
use crate::problem::OcpProblem;
use crate::state::{solve_state, NewtonOptions, NewtonReport};
use crate::tridiag::TridiagonalMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedEval {
    pub j: f64,
    pub gradient: PiecewiseLinearFn,
    pub state: PiecewiseLinearFn,
    pub adjoint_state: PiecewiseLinearFn,
    pub newton: NewtonReport,
}

/// Solves `L(y)ᵀ p = (y - y_d, φ_i)` for the zero-boundary adjoint state.
pub fn solve_adjoint(
    y: &PiecewiseLinearFn,
    y_d: &PiecewisePolyFn,
    mesh: &Mesh,
    nu: f64,
) -> Result<PiecewiseLinearFn> {
    let jac = assemble_linearized(y, mesh, nu)?;
    let load = load_vector(&Difference(y, y_d), &ControlWindow::full(), mesh);
    let p = jac.transpose().solve(&load)?;
    PiecewiseLinearFn::from_interior(*mesh, &p)
}

/// Per-mesh data of the reduced problem, assembled once and reused for
/// every control evaluation.
#[derive(Debug, Clone)]
pub struct ReducedProblem<'a> {
    problem: &'a OcpProblem,
    mesh: Mesh,
    forcing_load: Vec<f64>,
    ud_nodal: PiecewiseLinearFn,
    mass: TridiagonalMatrix,
    newton: NewtonOptions,
}

impl<'a> ReducedProblem<'a> {
    pub fn new(problem: &'a OcpProblem, mesh: Mesh) -> Result<Self> {
        problem.validate()?;
        Ok(Self {
            problem,
            mesh,
            forcing_load: load_vector(&problem.f, &ControlWindow::full(), &mesh),
            ud_nodal: interpolate(&problem.u_d, mesh, false)?,
            mass: assemble_lumped_mass(&mesh),
            newton: NewtonOptions::default(),
        })
    }

    pub fn with_newton(mut self, newton: NewtonOptions) -> Self {
        self.newton = newton;
        self
    }

    pub fn problem(&self) -> &OcpProblem {
        self.problem
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    /// Nodal interpolant of the control target `u_d`.
    pub fn control_target(&self) -> &PiecewiseLinearFn {
        &self.ud_nodal
    }

    /// Lumped (diagonal) mass matrix of the control space.
    pub fn mass(&self) -> &TridiagonalMatrix {
        &self.mass
    }

    /// Lumped inner product `(a, b)_h` of control-space functions.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.mass.matvec(a).iter().zip(b).map(|(x, y)| x * y).sum()
    }

    pub fn norm(&self, a: &[f64]) -> f64 {
        self.inner(a, a).max(0.0).sqrt()
    }

    fn check_control(&self, u: &PiecewiseLinearFn) -> Result<()> {
        if u.mesh() != &self.mesh {
            return Err(invalid(format!(
                "control lives on n = {}, problem discretized on n = {}",
                u.mesh().n(),
                self.mesh.n()
            )));
        }
        Ok(())
    }

    /// Interior load `(B u + f, φ_i)`.
    pub fn state_load(&self, u: &dyn crate::fe::ScalarFn) -> Vec<f64> {
        let mut load = load_vector(u, &self.problem.window, &self.mesh);
        for (l, f) in load.iter_mut().zip(&self.forcing_load) {
            *l += f;
        }
        load
    }

    pub fn solve_state(&self, u: &PiecewiseLinearFn) -> Result<(PiecewiseLinearFn, NewtonReport)> {
        self.check_control(u)?;
        solve_state(&self.state_load(u), &self.mesh, self.problem.nu, &self.newton)
    }

    fn cost(&self, u: &PiecewiseLinearFn, y: &PiecewiseLinearFn) -> f64 {
        let tracking = l2_distance(y, &self.problem.y_d);
        let d: Vec<f64> = u
            .values()
            .iter()
            .zip(self.ud_nodal.values())
            .map(|(a, b)| a - b)
            .collect();
        0.5 * tracking * tracking + 0.5 * self.problem.lambda * self.inner(&d, &d)
    }

    pub fn objective(&self, u: &PiecewiseLinearFn) -> Result<f64> {
        let (y, _) = self.solve_state(u)?;
        Ok(self.cost(u, &y))
    }

    /// Riesz representative in `(·, ·)_h` of `v ↦ (B p, v)`.
    pub fn window_riesz(&self, p: &PiecewiseLinearFn) -> Result<Vec<f64>> {
        let load = load_vector_full(p, &self.problem.window, &self.mesh);
        self.mass.solve(&load)
    }

    pub fn eval(&self, u: &PiecewiseLinearFn) -> Result<ReducedEval> {
        let (y, newton) = self.solve_state(u)?;
        let j = self.cost(u, &y);
        let p = solve_adjoint(&y, &self.problem.y_d, &self.mesh, self.problem.nu)?;
        let bp = self.window_riesz(&p)?;
        let lambda = self.problem.lambda;
        let g: Vec<f64> = u
            .values()
            .iter()
            .zip(self.ud_nodal.values())
            .zip(&bp)
            .map(|((u, ud), b)| lambda * (u - ud) + b)
            .collect();
        Ok(ReducedEval {
            j,
            gradient: PiecewiseLinearFn::new(self.mesh, g, false)?,
            state: y,
            adjoint_state: p,
            newton,
        })
    }
}

/// One-shot evaluation of objective, gradient, state and adjoint at `u`.
pub fn reduced_eval(u: &PiecewiseLinearFn, problem: &OcpProblem, mesh: &Mesh) -> Result<ReducedEval> {
    ReducedProblem::new(problem, *mesh)?.eval(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fe::{build_mesh, l2_norm};
    use crate::optimizer::ControlBounds;
    use crate::problem::example_e;
    use approx::assert_abs_diff_eq;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn random_control(mesh: Mesh, rng: &mut StdRng) -> PiecewiseLinearFn {
        let v = (0..=mesh.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        PiecewiseLinearFn::new(mesh, v, false).unwrap()
    }

    #[test]
    fn adjoint_vanishes_for_matched_target() {
        let m = build_mesh(16).unwrap();
        let y_d = PiecewisePolyFn::polynomial(vec![0.0, 1.0, -1.0]).unwrap();
        let y = interpolate(&y_d, m, true).unwrap();
        let y_d_p1 = y.to_poly();
        let p = solve_adjoint(&y, &y_d_p1, &m, 0.78).unwrap();
        assert!(p.values().iter().all(|v| v.abs() <= 1e-13));
        assert!(p.zero_boundary());
    }

    #[test]
    fn adjoint_transpose_identity() {
        let mut rng = StdRng::seed_from_u64(5);
        let m = build_mesh(20).unwrap();
        for _ in 0..5 {
            let yi: Vec<f64> = (0..19).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y = PiecewiseLinearFn::from_interior(m, &yi).unwrap();
            let l = assemble_linearized(&y, &m, 0.78).unwrap();
            let w: Vec<f64> = (0..19).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let p: Vec<f64> = (0..19).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lhs: f64 = l.matvec(&w).iter().zip(&p).map(|(a, b)| a * b).sum();
            let rhs: f64 = l.transpose().matvec(&p).iter().zip(&w).map(|(a, b)| a * b).sum();
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_data_gives_zero_objective() {
        let p = OcpProblem {
            name: "zero".into(),
            nu: 1.0,
            lambda: 0.3,
            bounds: ControlBounds::new(-1.0, 1.0).unwrap(),
            window: ControlWindow::full(),
            y_d: PiecewisePolyFn::zero(),
            u_d: PiecewisePolyFn::zero(),
            f: PiecewisePolyFn::zero(),
            exact: None,
        };
        let m = build_mesh(9).unwrap();
        let ev = reduced_eval(&PiecewiseLinearFn::zeros(m, false), &p, &m).unwrap();
        assert_eq!(ev.j, 0.0);
        assert!(ev.gradient.values().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = StdRng::seed_from_u64(17);
        let problem = example_e(0.1);
        let m = build_mesh(21).unwrap();
        let rp = ReducedProblem::new(&problem, m).unwrap();
        for _ in 0..10 {
            let u = random_control(m, &mut rng);
            let v = random_control(m, &mut rng);
            let ev = rp.eval(&u).unwrap();
            let an = rp.inner(ev.gradient.values(), v.values());
            let best = [1e-4, 1e-5, 1e-6]
                .iter()
                .map(|&eps| {
                    let jp = rp.objective(&u.axpy(eps, &v).unwrap()).unwrap();
                    let jm = rp.objective(&u.axpy(-eps, &v).unwrap()).unwrap();
                    let fd = (jp - jm) / (2.0 * eps);
                    ((fd - an) / an).abs()
                })
                .fold(f64::INFINITY, f64::min);
            assert!(best <= 1e-6, "relative error {best}");
        }
    }

    #[test]
    fn gradient_small_at_exact_optimum() {
        let problem = example_e(0.1);
        let exact = problem.exact.clone().unwrap();
        let norms: Vec<f64> = [21, 41, 81]
            .iter()
            .map(|&n| {
                let m = build_mesh(n).unwrap();
                let u = interpolate(&exact.u, m, false).unwrap();
                let ev = reduced_eval(&u, &problem, &m).unwrap();
                l2_norm(&ev.gradient)
            })
            .collect();
        assert!(norms.windows(2).all(|w| w[1] < w[0]), "{norms:?}");
        assert!(norms[2] < 1e-3);
    }

    #[test]
    fn objective_is_nonnegative() {
        let mut rng = StdRng::seed_from_u64(2);
        let problem = example_e(0.1);
        let m = build_mesh(12).unwrap();
        let rp = ReducedProblem::new(&problem, m).unwrap();
        for _ in 0..5 {
            assert!(rp.objective(&random_control(m, &mut rng)).unwrap() >= 0.0);
        }
    }

    #[test]
    fn rejects_foreign_mesh() {
        let problem = example_e(0.1);
        let rp = ReducedProblem::new(&problem, build_mesh(10).unwrap()).unwrap();
        let u = PiecewiseLinearFn::zeros(build_mesh(11).unwrap(), false);
        assert!(rp.eval(&u).is_err());
    }
}
