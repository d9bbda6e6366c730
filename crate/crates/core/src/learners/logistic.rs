//! Logistic regression fitted by Newton / IRLS.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_training_data, Classifier, LearnerId};
use crate::error::{Error, Result};
use crate::matrix::{dot, sigmoid, Matrix};

pub const GRAD_TOL: f64 = 1e-8;
pub const MAX_ITER: usize = 100;

/// Coefficients beyond this magnitude with no penalty indicate separation.
/// Linear predictor beyond which a fitted probability is treated as 0 or 1.
const SATURATION_BOUND: f64 = 25.0;
const SEPARATION_BOUND: f64 = 30.0;

/// Result of a Newton solve of `NLL + (l2/2)‖w‖²` (intercept unpenalized).
#[derive(Debug, Clone)]
pub struct IrlsFit {
    pub intercept: f64,
    pub coef: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub grad_norm: f64,
    /// Hessian of the objective at the solution, intercept first.
    pub hessian: DMatrix<f64>,
}

impl IrlsFit {
    /// Inverse Hessian (intercept first). With `l2 = 0` this is the inverse
    /// observed information used for Wald standard errors.
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        self.hessian
            .clone()
            .cholesky()
            .map(|c| c.inverse())
            .ok_or_else(|| {
                Error::RankDeficient("information matrix is not positive definite".into())
            })
    }
}

fn objective(x: &Matrix, y: &[u8], theta: &[f64], l2: f64) -> f64 {
    let (b, w) = (theta[0], &theta[1..]);
    let mut nll = 0.0;
    for (row, &yi) in x.rows_iter().zip(y) {
        let z = b + dot(row, w);
        // log(1 + e^z) - y z, computed stably
        let softplus = if z > 0.0 {
            z + (-z).exp().ln_1p()
        } else {
            z.exp().ln_1p()
        };
        nll += softplus - f64::from(yi) * z;
    }
    nll + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
}

fn grad_hess(x: &Matrix, y: &[u8], theta: &[f64], l2: f64) -> (DVector<f64>, DMatrix<f64>) {
    let p = theta.len();
    let mut g = DVector::zeros(p);
    let mut h = DMatrix::zeros(p, p);
    let mut xt = vec![0.0; p];
    xt[0] = 1.0;
    for (row, &yi) in x.rows_iter().zip(y) {
        xt[1..].copy_from_slice(row);
        let mu = sigmoid(dot(&xt, theta));
        let r = mu - f64::from(yi);
        let w = mu * (1.0 - mu);
        for a in 0..p {
            g[a] += r * xt[a];
            let wa = w * xt[a];
            if wa != 0.0 {
                for b in a..p {
                    h[(a, b)] += wa * xt[b];
                }
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            h[(a, b)] = h[(b, a)];
        }
    }
    for a in 1..p {
        g[a] += l2 * theta[a];
        h[(a, a)] += l2;
    }
    (g, h)
}

/// Newton iterations with step halving until ‖gradient‖ ≤ 1e-8 or 100 steps.
pub fn irls(x: &Matrix, y: &[u8], l2: f64) -> Result<IrlsFit> {
    irls_named(x, y, l2, &[])
}

/// [`irls`] with column names for diagnostics.
pub fn irls_named(x: &Matrix, y: &[u8], l2: f64, names: &[String]) -> Result<IrlsFit> {
    if y.len() != x.nrows() {
        return Err(Error::LengthMismatch {
            expected: x.nrows(),
            got: y.len(),
        });
    }
    if !(l2 >= 0.0 && l2.is_finite()) {
        return Err(Error::InvalidHyperParam {
            key: "l2".into(),
            detail: format!("must be finite and >= 0, got {l2}"),
        });
    }
    let p = x.ncols() + 1;
    let mut theta = vec![0.0; p];
    let mut obj = objective(x, y, &theta, l2);
    let mut iterations = 0;
    let mut converged = false;
    let (mut g, mut h) = grad_hess(x, y, &theta, l2);
    loop {
        let gnorm = g.norm();
        if gnorm <= GRAD_TOL {
            converged = true;
            break;
        }
        if iterations >= MAX_ITER {
            break;
        }
        let chol = h.clone().cholesky().ok_or_else(|| {
            Error::RankDeficient(
                "Hessian is singular; a column may be constant or collinear".into(),
            )
        })?;
        let step = chol.solve(&g);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand: Vec<f64> = theta
                .iter()
                .zip(step.iter())
                .map(|(a, s)| a - t * s)
                .collect();
            let c_obj = objective(x, y, &cand, l2);
            if c_obj <= obj + 1e-12 * obj.abs().max(1.0) {
                theta = cand;
                obj = c_obj;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        (g, h) = grad_hess(x, y, &theta, l2);
        if !accepted {
            // no further descent possible at machine precision
            converged = g.norm() <= GRAD_TOL.sqrt();
            break;
        }
        if l2 == 0.0 && theta[1..].iter().any(|v| v.abs() > SEPARATION_BOUND) {
            break;
        }
    }
    let grad_norm = g.norm();
    // fitted probabilities numerically 0 or 1 mean the optimum sits at infinity
    let saturated = x
        .rows_iter()
        .any(|r| (theta[0] + dot(&theta[1..], r)).abs() > SATURATION_BOUND);
    if l2 == 0.0
        && (!converged || saturated || theta[1..].iter().any(|v| v.abs() > SEPARATION_BOUND))
    {
        let (col, val) = theta[1..]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(j, v)| (j, *v))
            .unwrap_or((0, 0.0));
        let col = names
            .get(col)
            .cloned()
            .unwrap_or_else(|| format!("column {col}"));
        return Err(Error::Separation(format!(
            "{col}: coefficient reached {val:.3e} with fitted probabilities at 0 or 1; use l2 > 0"
        )));
    }
    Ok(IrlsFit {
        intercept: theta[0],
        coef: theta[1..].to_vec(),
        iterations,
        converged,
        grad_norm,
        hessian: h,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub w: Vec<f64>,
    pub b: f64,
    pub l2: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl LogisticModel {
    pub fn fit(x: &Matrix, y: &[u8], l2: f64) -> Result<Self> {
        check_training_data(x, y)?;
        let fit = irls(x, y, l2)?;
        Ok(LogisticModel {
            w: fit.coef,
            b: fit.intercept,
            l2,
            iterations: fit.iterations,
            converged: fit.converged,
        })
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        self.b + dot(row, &self.w)
    }
}

impl Classifier for LogisticModel {
    fn learner(&self) -> LearnerId {
        LearnerId::Lr
    }

    fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        x.rows_iter().map(|r| sigmoid(self.decision(r))).collect()
    }

    fn parameters(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("plain data serializes")
    }
}
