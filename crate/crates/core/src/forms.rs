//! Assembly of the viscous form `a`, the L² mass matrix, the convective
//! trilinear form `b` and the discrete Burgers residual with its Jacobian.
//!
//! Matrices and residual vectors act on interior nodes only (row `i - 1`
//! belongs to node `i`) unless stated otherwise. The residual, the Jacobian
//! and the adjoint operator all go through [`b_kernel`], so the Jacobian is
//! the exact derivative of the residual and its transpose is the exact
//! discrete adjoint.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fe::{
    merge_cuts, Mesh, PiecewiseLinearFn, QuadratureRule, ScalarFn, ASSEMBLY_QUAD_POINTS,
    ERROR_QUAD_POINTS,
};
use crate::tridiag::TridiagonalMatrix;

/// Open subinterval `(a, b)` of `[0, 1]` on which the control acts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct ControlWindow {
    a: f64,
    b: f64,
}

impl ControlWindow {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(0.0 <= a && a < b && b <= 1.0) {
            return Err(invalid(format!(
                "control window ({a}, {b}) must satisfy 0 <= a < b <= 1"
            )));
        }
        Ok(Self { a, b })
    }

    pub fn full() -> Self {
        Self { a: 0.0, b: 1.0 }
    }

    pub fn start(&self) -> f64 {
        self.a
    }

    pub fn end(&self) -> f64 {
        self.b
    }

    /// Indicator of the open window.
    pub fn contains(&self, x: f64) -> bool {
        self.a < x && x < self.b
    }
}

impl TryFrom<[f64; 2]> for ControlWindow {
    type Error = crate::error::Error;

    fn try_from(v: [f64; 2]) -> Result<Self> {
        ControlWindow::new(v[0], v[1])
    }
}

impl From<ControlWindow> for [f64; 2] {
    fn from(w: ControlWindow) -> Self {
        [w.a, w.b]
    }
}

/// Pointwise integrand of `b(φ, ψ, χ) = 1/3 ∫ [(φψ)'χ + φψ'χ]`.
#[inline]
fn b_kernel(phi: f64, dphi: f64, psi: f64, dpsi: f64, chi: f64) -> f64 {
    ((dphi * psi + phi * dpsi) * chi + phi * dpsi * chi) / 3.0
}

/// Local view of element `k`: Gauss points with the two hat functions.
struct ElementQuad {
    /// `(weight * h, N0, N1)` per Gauss point.
    points: Vec<(f64, f64, f64)>,
    /// Slopes of the two local hats.
    dn: [f64; 2],
}

impl ElementQuad {
    fn new(mesh: &Mesh) -> Self {
        let rule = QuadratureRule::gauss(ASSEMBLY_QUAD_POINTS);
        let h = mesh.h();
        let points = rule
            .points()
            .iter()
            .zip(rule.weights())
            .map(|(&t, &w)| (w * h, 1.0 - t, t))
            .collect();
        Self {
            points,
            dn: [-1.0 / h, 1.0 / h],
        }
    }
}

fn require_mesh(f: &PiecewiseLinearFn, mesh: &Mesh) -> Result<()> {
    if f.mesh() != mesh {
        return Err(invalid(format!(
            "function lives on n = {}, expected n = {}",
            f.mesh().n(),
            mesh.n()
        )));
    }
    Ok(())
}

fn require_zero_boundary(f: &PiecewiseLinearFn) -> Result<()> {
    if !f.zero_boundary() {
        return Err(invalid("argument must be a zero-boundary (state space) function"));
    }
    Ok(())
}

/// `ν ∫ φ_i' φ_j'` over interior nodes.
pub fn assemble_stiffness(mesh: &Mesh, nu: f64) -> Result<TridiagonalMatrix> {
    if !(nu > 0.0) {
        return Err(invalid(format!("viscosity must be positive, got {nu}")));
    }
    let m = mesh.interior_len();
    let d = nu / mesh.h();
    TridiagonalMatrix::new(vec![-d; m - 1], vec![2.0 * d; m], vec![-d; m - 1])
}

/// `∫ φ_i φ_j` over interior nodes (`constrained`) or over all `n + 1` nodes.
pub fn assemble_mass(mesh: &Mesh, constrained: bool) -> TridiagonalMatrix {
    let h = mesh.h();
    let m = if constrained {
        mesh.interior_len()
    } else {
        mesh.n() + 1
    };
    let mut main = vec![2.0 * h / 3.0; m];
    if !constrained {
        main[0] = h / 3.0;
        main[m - 1] = h / 3.0;
    }
    TridiagonalMatrix::new(vec![h / 6.0; m - 1], main, vec![h / 6.0; m - 1])
        .expect("mass matrix shape is consistent")
}

/// Row-sum lumped mass matrix on all `n + 1` nodes: the trapezoidal rule
/// for `∫ u v` with P1 arguments.
pub fn assemble_lumped_mass(mesh: &Mesh) -> TridiagonalMatrix {
    let h = mesh.h();
    let m = mesh.n() + 1;
    let mut main = vec![h; m];
    main[0] = h / 2.0;
    main[m - 1] = h / 2.0;
    TridiagonalMatrix::new(vec![0.0; m - 1], main, vec![0.0; m - 1])
        .expect("mass matrix shape is consistent")
}

/// `b(φ, ψ, χ)` for P1 arguments on a common mesh.
pub fn trilinear_b(
    phi: &PiecewiseLinearFn,
    psi: &PiecewiseLinearFn,
    chi: &PiecewiseLinearFn,
) -> Result<f64> {
    phi.check_same_mesh(psi)?;
    phi.check_same_mesh(chi)?;
    let mesh = *phi.mesh();
    let quad = ElementQuad::new(&mesh);
    let n = mesh.n() as f64;
    let (p, s, c) = (phi.values(), psi.values(), chi.values());
    let mut total = 0.0;
    for k in 0..mesh.n() {
        let dp = (p[k + 1] - p[k]) * n;
        let ds = (s[k + 1] - s[k]) * n;
        for &(w, n0, n1) in &quad.points {
            let pv = p[k] * n0 + p[k + 1] * n1;
            let sv = s[k] * n0 + s[k + 1] * n1;
            let cv = c[k] * n0 + c[k + 1] * n1;
            total += w * b_kernel(pv, dp, sv, ds, cv);
        }
    }
    Ok(total)
}

/// Jacobian of [`nonlinear_residual`] at `y`: entry `(i, j)` is
/// `a(e_j, e_i) + b(e_j, y, e_i) + b(y, e_j, e_i)`.
pub fn assemble_linearized(
    y: &PiecewiseLinearFn,
    mesh: &Mesh,
    nu: f64,
) -> Result<TridiagonalMatrix> {
    require_mesh(y, mesh)?;
    require_zero_boundary(y)?;
    let mut mat = assemble_stiffness(mesh, nu)?;
    let quad = ElementQuad::new(mesh);
    let n = mesh.n();
    let yv = y.values();
    for k in 0..n {
        let dy = (yv[k + 1] - yv[k]) * n as f64;
        for &(w, n0, n1) in &quad.points {
            let yq = yv[k] * n0 + yv[k + 1] * n1;
            let basis = [n0, n1];
            for trial in 0..2 {
                let node_j = k + trial;
                if node_j == 0 || node_j == n {
                    continue;
                }
                let (e, de) = (basis[trial], quad.dn[trial]);
                for (test, &chi) in basis.iter().enumerate() {
                    let node_i = k + test;
                    if node_i == 0 || node_i == n {
                        continue;
                    }
                    let v = b_kernel(e, de, yq, dy, chi) + b_kernel(yq, dy, e, de, chi);
                    mat.add(node_i - 1, node_j - 1, w * v);
                }
            }
        }
    }
    Ok(mat)
}

/// `a(y, e_i) + b(y, y, e_i) - rhs_i` for every interior node `i`.
pub fn nonlinear_residual(
    y: &PiecewiseLinearFn,
    rhs: &[f64],
    mesh: &Mesh,
    nu: f64,
) -> Result<Vec<f64>> {
    require_mesh(y, mesh)?;
    require_zero_boundary(y)?;
    let m = mesh.interior_len();
    if rhs.len() != m {
        return Err(invalid(format!(
            "load vector has length {}, expected {m}",
            rhs.len()
        )));
    }
    let stiffness = assemble_stiffness(mesh, nu)?;
    let mut r = stiffness.matvec(y.interior());
    let quad = ElementQuad::new(mesh);
    let n = mesh.n();
    let yv = y.values();
    for k in 0..n {
        let dy = (yv[k + 1] - yv[k]) * n as f64;
        for &(w, n0, n1) in &quad.points {
            let yq = yv[k] * n0 + yv[k + 1] * n1;
            for (test, chi) in [n0, n1].into_iter().enumerate() {
                let node = k + test;
                if node == 0 || node == n {
                    continue;
                }
                r[node - 1] += w * b_kernel(yq, dy, yq, dy, chi);
            }
        }
    }
    for (ri, fi) in r.iter_mut().zip(rhs) {
        *ri -= fi;
    }
    Ok(r)
}

/// `∫_ω g φ_i` for all `n + 1` hat functions.
///
/// Cells are split at the mesh nodes, the breakpoints of `g` and the
/// window ends, so the hats are linear on every cell.
pub fn load_vector_full(g: &dyn ScalarFn, window: &ControlWindow, mesh: &Mesh) -> Vec<f64> {
    let rule = QuadratureRule::gauss(ERROR_QUAD_POINTS);
    let nodes = mesh.nodes();
    let cuts = merge_cuts(&[&nodes, &g.breakpoints(), &[window.start(), window.end()]]);
    let n = mesh.n();
    let mut out = vec![0.0; n + 1];
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        if mid <= window.start() || mid >= window.end() {
            continue;
        }
        let k = mesh.element_of(mid);
        let (xl, xr) = (mesh.node(k), mesh.node(k + 1));
        let h = mesh.h();
        let mut left = 0.0;
        let mut right = 0.0;
        for (&t, &wt) in rule.points().iter().zip(rule.weights()) {
            let x = a + (b - a) * t;
            let gv = g.value(x) * wt * (b - a);
            left += gv * (xr - x) / h;
            right += gv * (x - xl) / h;
        }
        out[k] += left;
        out[k + 1] += right;
    }
    out
}

/// `∫_ω g φ_i` for the interior hat functions.
pub fn load_vector(g: &dyn ScalarFn, window: &ControlWindow, mesh: &Mesh) -> Vec<f64> {
    let mut full = load_vector_full(g, window, mesh);
    full.pop();
    full.remove(0);
    full
}
