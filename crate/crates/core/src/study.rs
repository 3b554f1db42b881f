//! Convergence studies, gradient checks and table output.

use std::path::Path;
use std::time::Instant;

use rand::{rngs::StdRng, Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adjoint::{solve_adjoint, ReducedProblem};
use crate::error::{invalid, Error, Result};
use crate::fe::{
    h1_seminorm_distance, l2_distance, Mesh, PiecewiseLinearFn, ScalarFn,
};
use crate::optimizer::{solve_ocp, OcpOptions, OcpSolution};
use crate::problem::{require_exact, OcpProblem};
use crate::state::{solve_state, NewtonOptions};

/// Mesh levels `n_{k+1} = 2 n_k - 1` starting at 21.
pub const DEFAULT_LEVELS: [usize; 6] = [21, 41, 81, 161, 321, 641];

/// Number of random directions in a gradient check.
pub const GRAD_CHECK_DIRECTIONS: usize = 10;

/// Pass threshold on the relative gradient error.
pub const GRAD_CHECK_TOL: f64 = 1e-5;

const CSV_HEADER: &str =
    "n,h,err_u,eoc_u,err_y_l2,eoc_y_l2,err_y_h1,eoc_y_h1,err_p,eoc_p,iters,runtime_ms";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EocRow {
    pub n: usize,
    pub h: f64,
    pub err_u: Option<f64>,
    pub eoc_u: Option<f64>,
    pub err_y_l2: Option<f64>,
    pub eoc_y_l2: Option<f64>,
    pub err_y_h1: Option<f64>,
    pub eoc_y_h1: Option<f64>,
    pub err_p: Option<f64>,
    pub eoc_p: Option<f64>,
    pub iters: usize,
    pub runtime_ms: f64,
    pub converged: bool,
}

impl EocRow {
    fn new(n: usize) -> Self {
        Self {
            n,
            h: 1.0 / n as f64,
            err_u: None,
            eoc_u: None,
            err_y_l2: None,
            eoc_y_l2: None,
            err_y_h1: None,
            eoc_y_h1: None,
            err_p: None,
            eoc_p: None,
            iters: 0,
            runtime_ms: 0.0,
            converged: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EocTable {
    pub rows: Vec<EocRow>,
}

/// `log(e_prev / e) / log(h_prev / h)`; undefined for vanishing errors.
pub fn eoc(e_prev: f64, e: f64, h_prev: f64, h: f64) -> Option<f64> {
    if e_prev > 0.0 && e > 0.0 && e_prev.is_finite() && e.is_finite() {
        Some((e_prev / e).ln() / (h_prev / h).ln())
    } else {
        None
    }
}

/// Least-squares slope of `log e` against `log h`.
pub fn fitted_order(h: &[f64], e: &[f64]) -> Option<f64> {
    if h.len() != e.len() || h.len() < 2 || e.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

impl EocTable {
    /// Fills every EOC column from consecutive rows; rows from failed
    /// solves neither receive nor provide an EOC.
    pub fn compute_eocs(&mut self) {
        type Col = fn(&mut EocRow) -> (&mut Option<f64>, &mut Option<f64>);
        let cols: [Col; 4] = [
            |r| (&mut r.err_u, &mut r.eoc_u),
            |r| (&mut r.err_y_l2, &mut r.eoc_y_l2),
            |r| (&mut r.err_y_h1, &mut r.eoc_y_h1),
            |r| (&mut r.err_p, &mut r.eoc_p),
        ];
        if let Some(first) = self.rows.first_mut() {
            for col in cols {
                *col(first).1 = None;
            }
        }
        for k in 1..self.rows.len() {
            let (head, tail) = self.rows.split_at_mut(k);
            let prev = &mut head[k - 1];
            let row = &mut tail[0];
            let both_ok = prev.converged && row.converged;
            let h = row.h;
            for col in cols {
                let (pe, ph) = (*col(prev).0, prev.h);
                let (e, slot) = col(row);
                *slot = match (both_ok, pe, *e) {
                    (true, Some(a), Some(b)) => eoc(a, b, ph, h),
                    _ => None,
                };
            }
        }
    }

    pub fn column(&self, f: impl Fn(&EocRow) -> Option<f64>) -> Vec<Option<f64>> {
        self.rows.iter().map(f).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let cells = [
                r.n.to_string(),
                fmt_num(Some(r.h)),
                fmt_num(r.err_u),
                fmt_num(r.eoc_u),
                fmt_num(r.err_y_l2),
                fmt_num(r.eoc_y_l2),
                fmt_num(r.err_y_h1),
                fmt_num(r.eoc_y_h1),
                fmt_num(r.err_p),
                fmt_num(r.eoc_p),
                r.iters.to_string(),
                fmt_num(Some(r.runtime_ms)),
            ];
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// 17 significant digits, empty for absent values.
fn fmt_num(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.16e}"),
        None => String::new(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(invalid(format!("unknown format '{other}'"))),
        }
    }
}

impl Format {
    /// From a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

pub fn emit(table: &EocTable, format: Format, path: impl AsRef<Path>) -> Result<()> {
    let text = match format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json()?,
    };
    std::fs::write(path, text)?;
    Ok(())
}

fn sorted_levels(levels: &[usize]) -> Result<Vec<usize>> {
    if levels.is_empty() {
        return Err(invalid("at least one mesh level is required"));
    }
    let mut v = levels.to_vec();
    v.sort_unstable();
    if v.windows(2).any(|w| w[0] == w[1]) {
        return Err(invalid("mesh levels must be distinct"));
    }
    for &n in &v {
        Mesh::new(n)?;
    }
    Ok(v)
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn fill_errors(row: &mut EocRow, sol: &OcpSolution, problem: &OcpProblem) {
    let exact = problem.exact.as_ref().expect("checked by caller");
    row.iters = sol.iterations;
    row.err_u = Some(l2_distance(&sol.control, &exact.u));
    row.err_y_l2 = Some(l2_distance(&sol.state, &exact.y));
    row.err_y_h1 = Some(h1_seminorm_distance(&sol.state, &exact.y));
    row.err_p = Some(l2_distance(&sol.adjoint_state, &exact.p));
}

/// Solves the control problem on each level and measures the errors of
/// the discrete optimal triple against the exact one.
pub fn run_eoc_control(
    problem: &OcpProblem,
    levels: &[usize],
    opts: &OcpOptions,
) -> Result<EocTable> {
    require_exact(problem)?;
    problem.validate()?;
    let levels = sorted_levels(levels)?;
    let rows: Vec<Result<EocRow>> = levels
        .par_iter()
        .map(|&n| {
            let t = Instant::now();
            let mesh = Mesh::new(n)?;
            let mut row = EocRow::new(n);
            match solve_ocp(problem, &mesh, opts) {
                Ok(sol) => fill_errors(&mut row, &sol, problem),
                Err(Error::OcpNonconvergence(sol)) => {
                    fill_errors(&mut row, &sol, problem);
                    row.converged = false;
                }
                Err(e) => return Err(e),
            }
            row.runtime_ms = elapsed_ms(t);
            Ok(row)
        })
        .collect();
    let mut table = EocTable {
        rows: rows.into_iter().collect::<Result<_>>()?,
    };
    table.compute_eocs();
    Ok(table)
}

/// What the discrete state and adjoint are compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    /// The declared exact solution.
    Exact,
    /// A discrete solution on a fine mesh with `n_ref` elements
    /// (`n_ref >= 8 * max(levels)`).
    Fine { n_ref: usize },
}

impl Reference {
    pub fn fine_for(levels: &[usize]) -> Self {
        let max = levels.iter().copied().max().unwrap_or(2);
        Reference::Fine { n_ref: 16 * max }
    }
}

/// Control held fixed during a state study.
pub enum FixedControl<'a> {
    /// The exact optimal control of the problem.
    Exact,
    Given(&'a dyn ScalarFn),
}

fn state_and_adjoint(
    problem: &OcpProblem,
    control: &dyn ScalarFn,
    mesh: Mesh,
) -> Result<(PiecewiseLinearFn, PiecewiseLinearFn, usize)> {
    let rp = ReducedProblem::new(problem, mesh)?;
    let load = rp.state_load(control);
    let (y, report) = solve_state(&load, &mesh, problem.nu, &NewtonOptions::default())?;
    let p = solve_adjoint(&y, &problem.y_d, &mesh, problem.nu)?;
    Ok((y, p, report.iterations))
}

/// State and adjoint convergence with the control held fixed; the load is
/// integrated from the control function itself.
pub fn run_eoc_state(
    problem: &OcpProblem,
    levels: &[usize],
    reference: Reference,
    control: FixedControl<'_>,
) -> Result<EocTable> {
    problem.validate()?;
    let levels = sorted_levels(levels)?;
    let control: &dyn ScalarFn = match control {
        FixedControl::Exact => &require_exact(problem)?.u,
        FixedControl::Given(u) => u,
    };

    struct RefPair {
        y: Box<dyn ScalarFn>,
        p: Box<dyn ScalarFn>,
    }
    let reference = match reference {
        Reference::Exact => {
            let exact = require_exact(problem)?;
            RefPair {
                y: Box::new(exact.y.clone()),
                p: Box::new(exact.p.clone()),
            }
        }
        Reference::Fine { n_ref } => {
            let max = *levels.last().expect("nonempty");
            if n_ref < 8 * max {
                return Err(invalid(format!(
                    "reference mesh n_ref = {n_ref} must be at least 8 x {max}"
                )));
            }
            let (y, p, _) = state_and_adjoint(problem, control, Mesh::new(n_ref)?)?;
            RefPair {
                y: Box::new(y),
                p: Box::new(p),
            }
        }
    };

    let rows: Vec<Result<EocRow>> = levels
        .par_iter()
        .map(|&n| {
            let t = Instant::now();
            let (y, p, iters) = state_and_adjoint(problem, control, Mesh::new(n)?)?;
            let mut row = EocRow::new(n);
            row.iters = iters;
            row.err_y_l2 = Some(l2_distance(&y, reference.y.as_ref()));
            row.err_y_h1 = Some(h1_seminorm_distance(&y, reference.y.as_ref()));
            row.err_p = Some(l2_distance(&p, reference.p.as_ref()));
            row.runtime_ms = elapsed_ms(t);
            Ok(row)
        })
        .collect();
    let mut table = EocTable {
        rows: rows.into_iter().collect::<Result<_>>()?,
    };
    table.compute_eocs();
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionCheck {
    pub analytic: f64,
    pub finite_difference: f64,
    /// `None` when the direction was skipped.
    pub relative_error: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub n: usize,
    pub eps: f64,
    pub directions: Vec<DirectionCheck>,
    pub max_relative_error: f64,
    pub passed: bool,
}

/// Compares `(g, v)` with `(j(u + εv) - j(u - εv)) / 2ε` for each direction.
pub fn grad_check_directions(
    rp: &ReducedProblem<'_>,
    u: &PiecewiseLinearFn,
    directions: &[PiecewiseLinearFn],
    eps: f64,
) -> Result<GradCheckReport> {
    if !(eps > 0.0) {
        return Err(invalid(format!("eps must be positive, got {eps}")));
    }
    let ev = rp.eval(u)?;
    let mut checks = Vec::with_capacity(directions.len());
    for v in directions {
        if v.values().iter().all(|&x| x == 0.0) {
            checks.push(DirectionCheck {
                analytic: 0.0,
                finite_difference: 0.0,
                relative_error: None,
                note: Some("zero direction skipped".into()),
            });
            continue;
        }
        let analytic = rp.inner(ev.gradient.values(), v.values());
        let jp = rp.objective(&u.axpy(eps, v)?)?;
        let jm = rp.objective(&u.axpy(-eps, v)?)?;
        let fd = (jp - jm) / (2.0 * eps);
        let scale = analytic.abs().max(fd.abs()).max(f64::MIN_POSITIVE);
        checks.push(DirectionCheck {
            analytic,
            finite_difference: fd,
            relative_error: Some((fd - analytic).abs() / scale),
            note: None,
        });
    }
    let evaluated: Vec<f64> = checks.iter().filter_map(|c| c.relative_error).collect();
    let max_relative_error = evaluated.iter().copied().fold(0.0f64, f64::max);
    Ok(GradCheckReport {
        n: rp.mesh().n(),
        eps,
        passed: !evaluated.is_empty() && max_relative_error <= GRAD_CHECK_TOL,
        max_relative_error,
        directions: checks,
    })
}

/// Gradient check at a random control with random directions.
pub fn run_grad_check(problem: &OcpProblem, n: usize, eps: f64, seed: u64) -> Result<GradCheckReport> {
    let mesh = Mesh::new(n)?;
    let rp = ReducedProblem::new(problem, mesh)?;
    let mut rng = StdRng::seed_from_u64(seed);
    let (lo, hi) = (problem.bounds.lower(), problem.bounds.upper());
    let mut random_fn = |lo: f64, hi: f64| {
        let v = (0..=n).map(|_| rng.gen_range(lo..hi)).collect();
        PiecewiseLinearFn::new(mesh, v, false)
    };
    let u = random_fn(lo, hi)?;
    let dirs = (0..GRAD_CHECK_DIRECTIONS)
        .map(|_| random_fn(-1.0, 1.0))
        .collect::<Result<Vec<_>>>()?;
    grad_check_directions(&rp, &u, &dirs, eps)
}
