//! Tridiagonal matrices and the Thomas algorithm.

use crate::error::{invalid, Error, Result};

/// Relative pivot threshold below which a system is declared singular.
const PIVOT_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalMatrix {
    sub: Vec<f64>,
    main: Vec<f64>,
    sup: Vec<f64>,
}

impl TridiagonalMatrix {
    pub fn new(sub: Vec<f64>, main: Vec<f64>, sup: Vec<f64>) -> Result<Self> {
        let m = main.len();
        if m == 0 {
            return Err(invalid("tridiagonal matrix must have dimension >= 1"));
        }
        if sub.len() != m - 1 || sup.len() != m - 1 {
            return Err(invalid(format!(
                "off-diagonals must have length {}, got {} and {}",
                m - 1,
                sub.len(),
                sup.len()
            )));
        }
        Ok(Self { sub, main, sup })
    }

    pub fn zeros(m: usize) -> Self {
        Self {
            sub: vec![0.0; m.saturating_sub(1)],
            main: vec![0.0; m],
            sup: vec![0.0; m.saturating_sub(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.main.len()
    }

    pub fn sub(&self) -> &[f64] {
        &self.sub
    }

    pub fn main(&self) -> &[f64] {
        &self.main
    }

    pub fn sup(&self) -> &[f64] {
        &self.sup
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.main[i]
        } else if j == i + 1 {
            self.sup[i]
        } else if i == j + 1 {
            self.sub[j]
        } else {
            0.0
        }
    }

    /// Adds `v` to entry `(i, j)`, which must lie in the band.
    pub(crate) fn add(&mut self, i: usize, j: usize, v: f64) {
        if i == j {
            self.main[i] += v;
        } else if j == i + 1 {
            self.sup[i] += v;
        } else if i == j + 1 {
            self.sub[j] += v;
        } else {
            panic!("entry ({i}, {j}) outside the tridiagonal band");
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            sub: self.sup.clone(),
            main: self.main.clone(),
            sup: self.sub.clone(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let f = |v: &Vec<f64>| v.iter().map(|x| x * s).collect();
        Self {
            sub: f(&self.sub),
            main: f(&self.main),
            sup: f(&self.sup),
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let m = self.dim();
        assert_eq!(x.len(), m, "matvec dimension mismatch");
        (0..m)
            .map(|i| {
                let mut s = self.main[i] * x[i];
                if i > 0 {
                    s += self.sub[i - 1] * x[i - 1];
                }
                if i + 1 < m {
                    s += self.sup[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    fn max_abs_entry(&self) -> f64 {
        self.sub
            .iter()
            .chain(&self.main)
            .chain(&self.sup)
            .fold(0.0f64, |a, &b| a.max(b.abs()))
    }

    /// Solves `A x = rhs` by forward elimination and back substitution
    /// without pivoting.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let m = self.dim();
        if rhs.len() != m {
            return Err(invalid(format!(
                "right-hand side has length {}, matrix dimension {m}",
                rhs.len()
            )));
        }
        let threshold = PIVOT_TOL * self.max_abs_entry();
        let mut c = vec![0.0; m];
        let mut d = vec![0.0; m];

        let mut pivot = self.main[0];
        if pivot.abs() <= threshold || !pivot.is_finite() {
            return Err(Error::SingularMatrix { row: 0, pivot });
        }
        if m > 1 {
            c[0] = self.sup[0] / pivot;
        }
        d[0] = rhs[0] / pivot;
        for i in 1..m {
            pivot = self.main[i] - self.sub[i - 1] * c[i - 1];
            if pivot.abs() <= threshold || !pivot.is_finite() {
                return Err(Error::SingularMatrix { row: i, pivot });
            }
            if i + 1 < m {
                c[i] = self.sup[i] / pivot;
            }
            d[i] = (rhs[i] - self.sub[i - 1] * d[i - 1]) / pivot;
        }
        for i in (0..m - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }
}
