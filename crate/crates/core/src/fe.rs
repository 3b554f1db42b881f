//! Uniform P1 finite element space on `[0, 1]`.
//!
//! Holds the mesh, continuous piecewise-linear functions over it, exact
//! piecewise-polynomial reference functions, Gauss-Legendre rules and the
//! L²/H¹ error integrals used by every convergence study.
//!
//! Error integrals split the domain at the union of all breakpoints of both
//! operands, so kinked reference functions are integrated exactly (up to
//! rounding) as long as each piece has degree at most `2k - 1` for a
//! `k`-point rule.

use crate::error::{invalid, Error, Result};

/// Points closer than this are merged when building integration cells.
const CUT_MERGE_TOL: f64 = 1e-14;

/// Largest polynomial degree a [`PiecewisePolyFn`] segment may carry.
pub const MAX_POLY_DEGREE: usize = 4;

/// Gauss points per cell for error integrals (exact to degree 9).
pub const ERROR_QUAD_POINTS: usize = 5;

/// Gauss points per element for form assembly (exact to degree 3).
pub const ASSEMBLY_QUAD_POINTS: usize = 2;

/// A real function on `[0, 1]` that can be integrated cell by cell.
pub trait ScalarFn: Sync {
    fn value(&self, x: f64) -> f64;

    fn slope(&self, x: f64) -> f64;

    /// Interior points at which the function may lose smoothness.
    fn breakpoints(&self) -> Vec<f64>;
}

/// Uniform partition of `[0, 1]` into `n` elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Mesh {
    n: usize,
}

/// Builds the uniform mesh with `n` elements, `n >= 2`.
pub fn build_mesh(n: usize) -> Result<Mesh> {
    Mesh::new(n)
}

impl Mesh {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("mesh needs at least 2 elements, got {n}")));
        }
        Ok(Self { n })
    }

    /// Number of elements.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n).map(|i| self.node(i)).collect()
    }

    /// Number of interior nodes (state degrees of freedom).
    pub fn interior_len(&self) -> usize {
        self.n - 1
    }

    /// Index of the element containing `x`; the last element is closed.
    pub fn element_of(&self, x: f64) -> usize {
        let k = (x * self.n as f64).floor();
        if k < 0.0 {
            0
        } else {
            (k as usize).min(self.n - 1)
        }
    }
}

/// Continuous piecewise-linear function given by its nodal values.
///
/// With `zero_boundary` set the function belongs to the state space and both
/// end values are exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearFn {
    mesh: Mesh,
    values: Vec<f64>,
    zero_boundary: bool,
}

impl PiecewiseLinearFn {
    pub fn new(mesh: Mesh, values: Vec<f64>, zero_boundary: bool) -> Result<Self> {
        if values.len() != mesh.n() + 1 {
            return Err(invalid(format!(
                "expected {} nodal values, got {}",
                mesh.n() + 1,
                values.len()
            )));
        }
        if zero_boundary && (values[0] != 0.0 || values[mesh.n()] != 0.0) {
            return Err(invalid("zero-boundary function with nonzero end values"));
        }
        Ok(Self {
            mesh,
            values,
            zero_boundary,
        })
    }

    pub fn zeros(mesh: Mesh, zero_boundary: bool) -> Self {
        Self {
            mesh,
            values: vec![0.0; mesh.n() + 1],
            zero_boundary,
        }
    }

    /// Zero-boundary function from its `n - 1` interior values.
    pub fn from_interior(mesh: Mesh, interior: &[f64]) -> Result<Self> {
        if interior.len() != mesh.interior_len() {
            return Err(invalid(format!(
                "expected {} interior values, got {}",
                mesh.interior_len(),
                interior.len()
            )));
        }
        let mut values = Vec::with_capacity(mesh.n() + 1);
        values.push(0.0);
        values.extend_from_slice(interior);
        values.push(0.0);
        Ok(Self {
            mesh,
            values,
            zero_boundary: true,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn interior(&self) -> &[f64] {
        &self.values[1..self.mesh.n()]
    }

    pub fn zero_boundary(&self) -> bool {
        self.zero_boundary
    }

    /// Point evaluation with a domain check.
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(invalid(format!("evaluation point {x} outside [0, 1]")));
        }
        Ok(self.value(x))
    }

    /// Nodal values of `self + scale * other` on the same mesh.
    pub fn axpy(&self, scale: f64, other: &PiecewiseLinearFn) -> Result<Self> {
        self.check_same_mesh(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + scale * b)
            .collect();
        Ok(Self {
            mesh: self.mesh,
            values,
            zero_boundary: self.zero_boundary && other.zero_boundary,
        })
    }

    /// Same function as a piecewise polynomial with one segment per element.
    pub fn to_poly(&self) -> PiecewisePolyFn {
        let n = self.mesh.n();
        let coeffs = (0..n)
            .map(|k| {
                let s = (self.values[k + 1] - self.values[k]) * n as f64;
                vec![self.values[k] - s * self.mesh.node(k), s]
            })
            .collect();
        PiecewisePolyFn {
            breaks: self.mesh.nodes(),
            coeffs,
        }
    }

    pub(crate) fn check_same_mesh(&self, other: &PiecewiseLinearFn) -> Result<()> {
        if self.mesh != other.mesh {
            return Err(invalid(format!(
                "mesh mismatch: n = {} vs n = {}",
                self.mesh.n(),
                other.mesh.n()
            )));
        }
        Ok(())
    }
}

impl ScalarFn for PiecewiseLinearFn {
    fn value(&self, x: f64) -> f64 {
        let k = self.mesh.element_of(x);
        let t = (x - self.mesh.node(k)) * self.mesh.n() as f64;
        self.values[k] * (1.0 - t) + self.values[k + 1] * t
    }

    fn slope(&self, x: f64) -> f64 {
        let k = self.mesh.element_of(x);
        (self.values[k + 1] - self.values[k]) * self.mesh.n() as f64
    }

    fn breakpoints(&self) -> Vec<f64> {
        (1..self.mesh.n()).map(|i| self.mesh.node(i)).collect()
    }
}

/// Exact reference function: a polynomial of degree at most four on each
/// segment `[t_k, t_{k+1})`, coefficients ascending in the global `x`.
///
/// Points on an interior breakpoint belong to the right segment; the last
/// segment is closed at `x = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePolyFn {
    breaks: Vec<f64>,
    coeffs: Vec<Vec<f64>>,
}

impl PiecewisePolyFn {
    pub fn new(breaks: Vec<f64>, coeffs: Vec<Vec<f64>>) -> Result<Self> {
        if breaks.len() < 2 {
            return Err(invalid("piecewise polynomial needs at least two breakpoints"));
        }
        if breaks[0] != 0.0 || *breaks.last().unwrap() != 1.0 {
            return Err(invalid("breakpoints must start at 0 and end at 1"));
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("breakpoints must be strictly increasing"));
        }
        if coeffs.len() != breaks.len() - 1 {
            return Err(invalid(format!(
                "{} segments need {} coefficient lists, got {}",
                breaks.len() - 1,
                breaks.len() - 1,
                coeffs.len()
            )));
        }
        for (k, c) in coeffs.iter().enumerate() {
            if c.is_empty() || c.len() > MAX_POLY_DEGREE + 1 {
                return Err(invalid(format!(
                    "segment {k} has {} coefficients, allowed 1..={}",
                    c.len(),
                    MAX_POLY_DEGREE + 1
                )));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(invalid(format!("segment {k} has non-finite coefficients")));
            }
        }
        Ok(Self { breaks, coeffs })
    }

    /// Single polynomial on all of `[0, 1]`.
    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        Self::new(vec![0.0, 1.0], vec![coeffs])
    }

    pub fn constant(c: f64) -> Self {
        Self {
            breaks: vec![0.0, 1.0],
            coeffs: vec![vec![c]],
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    pub fn segment(&self, x: f64) -> usize {
        let last = self.coeffs.len() - 1;
        // First k with breaks[k + 1] > x.
        let k = self.breaks[1..].partition_point(|&t| t <= x);
        k.min(last)
    }

    pub fn derivative_at(&self, x: f64, order: usize) -> f64 {
        let c = &self.coeffs[self.segment(x)];
        let mut acc = 0.0;
        for (p, &ck) in c.iter().enumerate().skip(order).rev() {
            let falling: f64 = (0..order).map(|j| (p - j) as f64).product();
            acc = acc * x + ck * falling;
        }
        acc
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        self.derivative_at(x, 2)
    }

    /// Pointwise sum, refined to the union of both breakpoint sets.
    pub fn add(&self, other: &PiecewisePolyFn) -> PiecewisePolyFn {
        let breaks = merge_cuts(&[&self.breaks, &other.breaks]);
        let coeffs = breaks
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let a = &self.coeffs[self.segment(mid)];
                let b = &other.coeffs[other.segment(mid)];
                let mut c = vec![0.0; a.len().max(b.len())];
                for (i, v) in a.iter().enumerate() {
                    c[i] += v;
                }
                for (i, v) in b.iter().enumerate() {
                    c[i] += v;
                }
                c
            })
            .collect();
        PiecewisePolyFn { breaks, coeffs }
    }

    pub fn scale(&self, s: f64) -> PiecewisePolyFn {
        PiecewisePolyFn {
            breaks: self.breaks.clone(),
            coeffs: self
                .coeffs
                .iter()
                .map(|c| c.iter().map(|v| v * s).collect())
                .collect(),
        }
    }
}

impl ScalarFn for PiecewisePolyFn {
    fn value(&self, x: f64) -> f64 {
        self.derivative_at(x, 0)
    }

    fn slope(&self, x: f64) -> f64 {
        self.derivative_at(x, 1)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.breaks[1..self.breaks.len() - 1].to_vec()
    }
}

/// `a - b` as a lazily evaluated function.
pub(crate) struct Difference<'a>(pub &'a dyn ScalarFn, pub &'a dyn ScalarFn);

impl ScalarFn for Difference<'_> {
    fn value(&self, x: f64) -> f64 {
        self.0.value(x) - self.1.value(x)
    }

    fn slope(&self, x: f64) -> f64 {
        self.0.slope(x) - self.1.slope(x)
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.0.breakpoints();
        b.extend(self.1.breakpoints());
        b
    }
}

/// Lagrange interpolation at the mesh nodes.
pub fn interpolate(
    f: &dyn ScalarFn,
    mesh: Mesh,
    zero_boundary: bool,
) -> Result<PiecewiseLinearFn> {
    let mut values: Vec<f64> = mesh.nodes().iter().map(|&x| f.value(x)).collect();
    if zero_boundary {
        let (left, right) = (values[0], values[mesh.n()]);
        if left.abs() > CUT_MERGE_TOL || right.abs() > CUT_MERGE_TOL {
            return Err(Error::InfeasibleInterpolant { left, right });
        }
        values[0] = 0.0;
        values[mesh.n()] = 0.0;
    }
    PiecewiseLinearFn::new(mesh, values, zero_boundary)
}

/// Gauss-Legendre rule mapped to the reference cell `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// `k`-point Gauss-Legendre rule; nodes by Newton iteration on `P_k`.
    pub fn gauss(k: usize) -> Self {
        assert!(k >= 1, "quadrature rule needs at least one point");
        let mut points = vec![0.0; k];
        let mut weights = vec![0.0; k];
        let kf = k as f64;
        for i in 0..k.div_ceil(2) {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (kf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(k, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(k, z);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            // Map [-1, 1] -> [0, 1]; weights halve.
            points[i] = 0.5 * (1.0 - z);
            points[k - 1 - i] = 0.5 * (1.0 + z);
            weights[i] = 0.5 * w;
            weights[k - 1 - i] = 0.5 * w;
        }
        Self { points, weights }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn exactness_degree(&self) -> usize {
        2 * self.points.len() - 1
    }

    /// `∫_a^b g(x) dx` with the rule mapped to `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut g: impl FnMut(f64) -> f64) -> f64 {
        let len = b - a;
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * g(a + len * t))
            .sum::<f64>()
            * len
    }
}

/// `(P_k(z), P_k'(z))` by the three-term recurrence.
fn legendre(k: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if k == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=k {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = k as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Sorted, deduplicated union of cut points, always containing 0 and 1.
pub(crate) fn merge_cuts(sets: &[&[f64]]) -> Vec<f64> {
    let mut cuts: Vec<f64> = vec![0.0, 1.0];
    for s in sets {
        cuts.extend(s.iter().copied().filter(|&x| x > 0.0 && x < 1.0));
    }
    cuts.sort_by(|a, b| a.total_cmp(b));
    cuts.dedup_by(|b, a| (*b - *a).abs() <= CUT_MERGE_TOL);
    if let Some(last) = cuts.last_mut() {
        *last = 1.0;
    }
    cuts
}

/// `∫_0^1 g` over the cells delimited by `cuts`.
pub(crate) fn integrate_cells(
    cuts: &[f64],
    rule: &QuadratureRule,
    mut g: impl FnMut(f64) -> f64,
) -> f64 {
    cuts.windows(2)
        .map(|w| rule.integrate(w[0], w[1], &mut g))
        .sum()
}

fn cells_for(a: &dyn ScalarFn, b: &dyn ScalarFn) -> Vec<f64> {
    merge_cuts(&[&a.breakpoints(), &b.breakpoints()])
}

/// `‖a - b‖_{L²(0,1)}` for arbitrary piecewise-smooth operands.
pub fn l2_distance(a: &dyn ScalarFn, b: &dyn ScalarFn) -> f64 {
    let rule = QuadratureRule::gauss(ERROR_QUAD_POINTS);
    let s = integrate_cells(&cells_for(a, b), &rule, |x| {
        let d = a.value(x) - b.value(x);
        d * d
    });
    s.max(0.0).sqrt()
}

/// `‖a' - b'‖_{L²(0,1)}`.
pub fn h1_seminorm_distance(a: &dyn ScalarFn, b: &dyn ScalarFn) -> f64 {
    let rule = QuadratureRule::gauss(ERROR_QUAD_POINTS);
    let s = integrate_cells(&cells_for(a, b), &rule, |x| {
        let d = a.slope(x) - b.slope(x);
        d * d
    });
    s.max(0.0).sqrt()
}

pub fn l2_error(fh: &PiecewiseLinearFn, f: &dyn ScalarFn) -> f64 {
    l2_distance(fh, f)
}

pub fn h1_seminorm_error(fh: &PiecewiseLinearFn, f: &dyn ScalarFn) -> f64 {
    h1_seminorm_distance(fh, f)
}

pub fn l2_norm(f: &dyn ScalarFn) -> f64 {
    l2_distance(f, &PiecewisePolyFn::zero())
}

pub fn h1_seminorm(f: &dyn ScalarFn) -> f64 {
    h1_seminorm_distance(f, &PiecewisePolyFn::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn hump() -> PiecewisePolyFn {
        // x(1 - x)
        PiecewisePolyFn::polynomial(vec![0.0, 1.0, -1.0]).unwrap()
    }

    #[test]
    fn mesh_nodes() {
        let m = build_mesh(2).unwrap();
        assert_eq!(m.nodes(), vec![0.0, 0.5, 1.0]);
        assert_eq!(m.h(), 0.5);
        assert_eq!(
            build_mesh(4).unwrap().nodes(),
            vec![0.0, 0.25, 0.5, 0.75, 1.0]
        );
        assert!(matches!(build_mesh(1), Err(Error::InvalidArgument(_))));
        assert!(build_mesh(0).is_err());
    }

    #[test]
    fn mesh_uniform_to_rounding() {
        for n in [3, 21, 161, 2561] {
            let m = build_mesh(n).unwrap();
            let nodes = m.nodes();
            assert_eq!(nodes[0], 0.0);
            assert_eq!(nodes[n], 1.0);
            for (i, x) in nodes.iter().enumerate() {
                assert!((x - i as f64 * m.h()).abs() <= 1e-14);
            }
            assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn evaluate_linear_segments() {
        let m = build_mesh(2).unwrap();
        let f = PiecewiseLinearFn::new(m, vec![0.0, 1.0, 0.0], true).unwrap();
        assert_eq!(f.evaluate(0.25).unwrap(), 0.5);
        assert_eq!(f.evaluate(0.5).unwrap(), 1.0);
        assert_eq!(f.evaluate(1.0).unwrap(), 0.0);
        assert!(matches!(f.evaluate(1.2), Err(Error::InvalidArgument(_))));
        assert!(f.evaluate(-0.1).is_err());
    }

    #[test]
    fn zero_boundary_enforced() {
        let m = build_mesh(2).unwrap();
        assert!(PiecewiseLinearFn::new(m, vec![1.0, 1.0, 0.0], true).is_err());
        assert!(PiecewiseLinearFn::new(m, vec![1.0, 1.0], false).is_err());
    }

    #[test]
    fn interpolation_examples() {
        let m = build_mesh(2).unwrap();
        let f = interpolate(&hump(), m, true).unwrap();
        assert_eq!(f.values(), &[0.0, 0.25, 0.0]);

        let one = PiecewisePolyFn::constant(1.0);
        assert!(matches!(
            interpolate(&one, m, true),
            Err(Error::InfeasibleInterpolant { .. })
        ));
    }

    #[test]
    fn segment_lookup_is_left_closed() {
        let f = PiecewisePolyFn::new(
            vec![0.0, 0.5, 1.0],
            vec![vec![1.0], vec![2.0]],
        )
        .unwrap();
        assert_eq!(f.value(0.0), 1.0);
        assert_eq!(f.value(0.49), 1.0);
        assert_eq!(f.value(0.5), 2.0);
        assert_eq!(f.value(1.0), 2.0);
    }

    #[test]
    fn poly_derivatives() {
        // 1 + 2x + 3x^2 + 4x^3
        let f = PiecewisePolyFn::polynomial(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let x = 0.3;
        assert_abs_diff_eq!(f.value(x), 1.0 + 0.6 + 0.27 + 0.108, epsilon = 1e-15);
        assert_abs_diff_eq!(f.slope(x), 2.0 + 1.8 + 1.08, epsilon = 1e-15);
        assert_abs_diff_eq!(f.second_derivative(x), 6.0 + 7.2, epsilon = 1e-14);
    }

    #[test]
    fn poly_validation() {
        assert!(PiecewisePolyFn::new(vec![0.0, 1.0], vec![vec![0.0; 6]]).is_err());
        assert!(PiecewisePolyFn::new(vec![0.0, 0.5], vec![vec![0.0]]).is_err());
        assert!(PiecewisePolyFn::new(vec![0.0, 0.6, 0.4, 1.0], vec![vec![0.0]; 3]).is_err());
        assert!(PiecewisePolyFn::new(vec![0.0, 1.0], vec![]).is_err());
    }

    #[test]
    fn poly_sum_merges_breaks() {
        let a = PiecewisePolyFn::new(vec![0.0, 0.5, 1.0], vec![vec![1.0], vec![0.0, 1.0]]).unwrap();
        let b = PiecewisePolyFn::new(vec![0.0, 0.25, 1.0], vec![vec![0.0, 0.0, 1.0], vec![3.0]])
            .unwrap();
        let s = a.add(&b);
        assert_eq!(s.breaks(), &[0.0, 0.25, 0.5, 1.0]);
        for x in [0.1, 0.3, 0.7, 1.0] {
            assert_abs_diff_eq!(s.value(x), a.value(x) + b.value(x), epsilon = 1e-15);
        }
    }

    #[test]
    fn gauss_rules_exact_on_monomials() {
        for k in 1..=8 {
            let rule = QuadratureRule::gauss(k);
            let wsum: f64 = rule.weights().iter().sum();
            assert_abs_diff_eq!(wsum, 1.0, epsilon = 1e-14);
            for p in 0..=rule.exactness_degree() {
                let q = rule.integrate(0.0, 1.0, |x| x.powi(p as i32));
                assert_abs_diff_eq!(q, 1.0 / (p as f64 + 1.0), epsilon = 1e-14);
            }
        }
        assert_eq!(QuadratureRule::gauss(ERROR_QUAD_POINTS).exactness_degree(), 9);
        assert_eq!(QuadratureRule::gauss(ASSEMBLY_QUAD_POINTS).exactness_degree(), 3);
    }

    #[test]
    fn linear_reproduced_exactly() {
        let lin = PiecewisePolyFn::polynomial(vec![0.3, -1.7]).unwrap();
        for n in [2, 7, 64] {
            let fh = interpolate(&lin, build_mesh(n).unwrap(), false).unwrap();
            assert!(l2_error(&fh, &lin) <= 1e-14);
            assert!(h1_seminorm_error(&fh, &lin) <= 1e-14);
        }
    }

    #[test]
    fn error_of_zero_against_hump() {
        let zero = PiecewiseLinearFn::zeros(build_mesh(2).unwrap(), true);
        // ∫ x²(1-x)² = 1/30, ∫ (1-2x)² = 1/3
        assert_abs_diff_eq!(l2_error(&zero, &hump()), (1.0f64 / 30.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(
            h1_seminorm_error(&zero, &hump()),
            (1.0f64 / 3.0).sqrt(),
            epsilon = 1e-15
        );
    }

    /// Brute-force midpoint-free oracle: composite Simpson on 2000 subcells
    /// per mesh element, independent of the Gauss cell splitting.
    fn simpson_h1_error(fh: &PiecewiseLinearFn, f: &PiecewisePolyFn) -> f64 {
        let n = fh.mesh().n();
        let sub = 2000;
        let mut total = 0.0;
        for k in 0..n {
            let (a, b) = (fh.mesh().node(k), fh.mesh().node(k + 1));
            let s = fh.values()[k + 1] - fh.values()[k];
            let dh = s * n as f64;
            let step = (b - a) / sub as f64;
            for j in 0..sub {
                let x0 = a + j as f64 * step;
                let g = |x: f64| (dh - f.slope(x)).powi(2);
                total += step / 6.0 * (g(x0) + 4.0 * g(x0 + 0.5 * step) + g(x0 + step));
            }
        }
        total.sqrt()
    }

    #[test]
    fn h1_interpolation_rate_is_one() {
        let f = hump();
        let errs: Vec<f64> = [8, 16, 32]
            .iter()
            .map(|&n| {
                let fh = interpolate(&f, build_mesh(n).unwrap(), true).unwrap();
                let e = h1_seminorm_error(&fh, &f);
                assert_abs_diff_eq!(e, simpson_h1_error(&fh, &f), epsilon = 1e-12);
                e
            })
            .collect();
        for w in errs.windows(2) {
            let eoc = (w[0] / w[1]).log2();
            assert!((eoc - 1.0).abs() <= 0.05, "eoc {eoc}");
        }
    }

    #[test]
    fn l2_interpolation_rate_is_two_for_smooth() {
        let f = PiecewisePolyFn::polynomial(vec![0.0, 0.0, 1.0, -1.0]).unwrap();
        let errs: Vec<f64> = [8, 16, 32, 64]
            .iter()
            .map(|&n| l2_error(&interpolate(&f, build_mesh(n).unwrap(), true).unwrap(), &f))
            .collect();
        for w in errs.windows(2) {
            let eoc = (w[0] / w[1]).log2();
            assert!((eoc - 2.0).abs() <= 0.1, "eoc {eoc}");
        }
    }

    #[test]
    fn kinked_cells_are_split() {
        // |x - 0.3| has a kink that falls inside an element for n = 4.
        let f = PiecewisePolyFn::new(
            vec![0.0, 0.3, 1.0],
            vec![vec![0.3, -1.0], vec![-0.3, 1.0]],
        )
        .unwrap();
        // ∫ |x-0.3|² = (0.3³ + 0.7³)/3
        let exact = ((0.027f64 + 0.343) / 3.0).sqrt();
        let zero = PiecewiseLinearFn::zeros(build_mesh(4).unwrap(), false);
        assert_abs_diff_eq!(l2_error(&zero, &f), exact, epsilon = 1e-15);
    }

    #[test]
    fn axpy_checks_mesh() {
        let a = PiecewiseLinearFn::zeros(build_mesh(3).unwrap(), false);
        let b = PiecewiseLinearFn::zeros(build_mesh(4).unwrap(), false);
        assert!(a.axpy(1.0, &b).is_err());
    }
}
