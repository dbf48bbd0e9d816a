//! Degree-2 polynomial approximation of the logistic objective and
//! per-degree coefficient noise.
//!
//! With `z = (x, 1)` and `theta = (w, a)`, the Taylor expansion of
//! `ln(1 + e^t)` around `t = 0` truncated after the quadratic term gives
//!
//! ```text
//! l(theta) ~ N ln2 + sum_i (1/2 - y_i) z_i.theta + 1/8 sum_i (z_i.theta)^2
//! ```
//!
//! which is stored as `c0 + c1.theta + theta' C2 theta`.

use std::f64::consts::LN_2;

use super::laplace::{NoiseSource, PrivacyBudget};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::{Gradient, ModelParams, Objective};

/// Highest polynomial order kept in the approximation.
pub const TRUNCATION_DEGREE: usize = 2;

/// Derivatives of order 0, 1 and 2 of `ln(1 + e^t)` at `t = 0`.
pub fn taylor_coefficients() -> (f64, f64, f64) {
    (LN_2, 0.5, 0.25)
}

/// `c0 + c1.theta + theta' C2 theta` over `theta = (w, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticObjective {
    c0: f64,
    c1: Vec<f64>,
    /// Row-major `(d+1) x (d+1)`, symmetric.
    c2: Vec<f64>,
    records: usize,
}

impl QuadraticObjective {
    /// Builds an objective from raw coefficients. `records` only sets the
    /// gradient-descent step normalization.
    pub fn from_parts(c0: f64, c1: Vec<f64>, c2: Vec<f64>, records: usize) -> Result<Self> {
        let n = c1.len();
        if n < 2 {
            return Err(Error::invalid("quadratic objective needs at least one weight and a bias"));
        }
        if c2.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: c2.len(),
            });
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (c2[i * n + j], c2[j * n + i]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::invalid(format!("c2 is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(QuadraticObjective {
            c0,
            c1,
            c2,
            records: records.max(1),
        })
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn c1(&self) -> &[f64] {
        &self.c1
    }

    pub fn c2(&self, i: usize, j: usize) -> f64 {
        self.c2[i * self.c1.len() + j]
    }

    /// Size of `theta`, i.e. `d + 1`.
    pub fn order(&self) -> usize {
        self.c1.len()
    }

    pub fn records(&self) -> usize {
        self.records
    }

    /// Largest `|C2[i][j] - C2[j][i]|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.order();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.c2(i, j) - self.c2(j, i)).abs());
            }
        }
        worst
    }

    fn c2_times(&self, theta: &[f64]) -> Vec<f64> {
        let n = self.order();
        self.c2
            .chunks_exact(n)
            .map(|row| row.iter().zip(theta).map(|(a, b)| a * b).sum())
            .collect()
    }
}

impl Objective for QuadraticObjective {
    fn dim(&self) -> usize {
        self.order() - 1
    }

    fn value(&self, params: &ModelParams) -> f64 {
        let theta = params.to_vec();
        let linear: f64 = self.c1.iter().zip(&theta).map(|(a, b)| a * b).sum();
        let quad: f64 = self.c2_times(&theta).iter().zip(&theta).map(|(a, b)| a * b).sum();
        self.c0 + linear + quad
    }

    fn gradient(&self, params: &ModelParams) -> Gradient {
        let theta = params.to_vec();
        let mut g: Vec<f64> = self
            .c2_times(&theta)
            .iter()
            .zip(&self.c1)
            .map(|(q, l)| l + 2.0 * q)
            .collect();
        let bias = g.pop().unwrap_or(0.0);
        Gradient { weights: g, bias }
    }

    fn step_scale(&self) -> f64 {
        self.records as f64
    }
}

/// Truncated Taylor approximation of the logistic objective over `data`.
pub fn build_quadratic_objective(data: &Dataset) -> Result<QuadraticObjective> {
    data.ensure_non_empty()?;
    data.ensure_normalized()?;
    let (f0, f1, f2) = taylor_coefficients();
    let n = data.dim() + 1;
    let half_f2 = f2 / 2.0;
    let mut c1 = vec![0.0; n];
    let mut c2 = vec![0.0; n * n];
    let mut z = vec![1.0; n];
    for r in data.records() {
        z[..n - 1].copy_from_slice(&r.features);
        let coef = f1 - f64::from(r.label);
        for (c, zi) in c1.iter_mut().zip(&z) {
            *c += coef * zi;
        }
        for i in 0..n {
            for j in i..n {
                c2[i * n + j] += half_f2 * z[i] * z[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            c2[i * n + j] = c2[j * n + i];
        }
    }
    Ok(QuadraticObjective {
        c0: data.len() as f64 * f0,
        c1,
        c2,
        records: data.len(),
    })
}

/// l1 sensitivity used for the Laplace noise on degree-`degree` coefficients.
///
/// Degree 1 uses the closed bound `9d/2`; degrees 0 and 2 apply the same
/// `2(J+1)` factor to the largest per-record coefficient mass, `ln 2` and
/// `(d+1)^2 / 8` respectively.
pub fn ofaa_sensitivity(degree: usize, dim: usize, truncation: usize) -> Result<f64> {
    if dim == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    if truncation < TRUNCATION_DEGREE {
        return Err(Error::invalid(format!(
            "truncation degree must be at least {TRUNCATION_DEGREE}, got {truncation}"
        )));
    }
    let factor = 2.0 * (truncation as f64 + 1.0);
    let d = dim as f64;
    match degree {
        0 => Ok(factor * LN_2),
        // 2(J+1) * 3d/4, which is 9d/2 at J = 2
        1 => Ok(factor * 0.75 * d),
        2 => Ok(factor * (d + 1.0) * (d + 1.0) / 8.0),
        _ => Err(Error::invalid(format!("polynomial degree must be 0, 1 or 2, got {degree}"))),
    }
}

/// Adds an independent `Lap(0, S_j / epsilon)` draw to every coefficient of
/// degree `j`. Degree-2 noise is drawn for the upper triangle and mirrored.
///
/// Draw order: `c0`, then `c1` in index order, then the upper triangle of
/// `C2` row by row.
pub fn ofaa_perturb(
    quad: &QuadraticObjective,
    budget: PrivacyBudget,
    noise: &mut dyn NoiseSource,
) -> Result<QuadraticObjective> {
    let d = quad.dim();
    let eps = budget.epsilon();
    let scales = [
        ofaa_sensitivity(0, d, TRUNCATION_DEGREE)? / eps,
        ofaa_sensitivity(1, d, TRUNCATION_DEGREE)? / eps,
        ofaa_sensitivity(2, d, TRUNCATION_DEGREE)? / eps,
    ];
    let mut out = quad.clone();
    out.c0 += noise.laplace(scales[0]);
    for c in &mut out.c1 {
        *c += noise.laplace(scales[1]);
    }
    let n = out.order();
    for i in 0..n {
        for j in i..n {
            let v = noise.laplace(scales[2]);
            out.c2[i * n + j] += v;
            if i != j {
                out.c2[j * n + i] = out.c2[i * n + j];
            }
        }
    }
    Ok(out)
}
