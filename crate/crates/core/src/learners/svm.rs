//! Soft-margin SVM trained with SMO (second-order working-set selection) on
//! the dual, with Platt-scaled probabilities.

use serde::{Deserialize, Serialize};

use super::{check_training_data, Classifier, LearnerId};
use crate::error::{Error, Result};
use crate::matrix::{dot, sq_dist, Matrix};

pub const KKT_TOL: f64 = 1e-3;
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    #[inline]
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => dot(a, b),
            Kernel::Rbf { gamma } => (-gamma * sq_dist(a, b)).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub c: f64,
    pub support_vectors: Matrix,
    /// α_i·y_i for each support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    /// Primal weights (linear kernel only).
    pub w: Option<Vec<f64>>,
    pub platt_a: f64,
    pub platt_b: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Outcome of the dual solve on the full training set.
#[derive(Debug, Clone)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solve min ½αᵀQα − eᵀα s.t. 0 ≤ α ≤ C, yᵀα = 0 (y ∈ {−1, +1}).
pub fn smo(k: &[f64], y: &[f64], c: f64, max_iter: usize) -> DualSolution {
    let n = y.len();
    let kk = |i: usize, j: usize| k[i * n + j];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut iterations = 0;
    let mut converged = false;
    let in_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);
    while iterations < max_iter {
        // i: maximal violating index in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if in_up(alpha[t], y[t]) {
                let v = -y[t] * grad[t];
                if v > gmax {
                    gmax = v;
                    i = t;
                }
            }
        }
        let mut gmin = f64::INFINITY;
        let mut j = usize::MAX;
        let mut best_obj = f64::INFINITY;
        for t in 0..n {
            if !in_low(alpha[t], y[t]) {
                continue;
            }
            let v = -y[t] * grad[t];
            gmin = gmin.min(v);
            if i != usize::MAX && v < gmax {
                let b = gmax - v;
                let mut a = kk(i, i) + kk(t, t) - 2.0 * kk(i, t);
                if a <= 0.0 {
                    a = TAU;
                }
                let obj = -(b * b) / a;
                if obj < best_obj {
                    best_obj = obj;
                    j = t;
                }
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < KKT_TOL {
            converged = true;
            break;
        }
        iterations += 1;

        let (yi, yj) = (y[i], y[j]);
        let (old_ai, old_aj) = (alpha[i], alpha[j]);
        let mut quad = kk(i, i) + kk(j, j) - 2.0 * kk(i, j);
        if quad <= 0.0 {
            quad = TAU;
        }
        if yi != yj {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 && alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = diff;
            } else if diff <= 0.0 && alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 && alpha[i] > c {
                alpha[i] = c;
                alpha[j] = c - diff;
            } else if diff <= 0.0 && alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c && alpha[i] > c {
                alpha[i] = c;
                alpha[j] = sum - c;
            } else if sum <= c && alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c && alpha[j] > c {
                alpha[j] = c;
                alpha[i] = sum - c;
            } else if sum <= c && alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (dai, daj) = (alpha[i] - old_ai, alpha[j] - old_aj);
        for t in 0..n {
            grad[t] += y[t] * (yi * kk(t, i) * dai + yj * kk(t, j) * daj);
        }
    }

    // ρ from free vectors, else midpoint of the feasible interval
    let mut free_sum = 0.0;
    let mut n_free = 0usize;
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            free_sum += yg;
            n_free += 1;
        } else if (alpha[t] >= c && y[t] < 0.0) || (alpha[t] <= 0.0 && y[t] > 0.0) {
            ub = ub.min(yg);
        } else {
            lb = lb.max(yg);
        }
    }
    let rho = if n_free > 0 {
        free_sum / n_free as f64
    } else if ub.is_finite() && lb.is_finite() {
        0.5 * (ub + lb)
    } else if ub.is_finite() {
        ub
    } else {
        lb.max(0.0)
    };
    DualSolution {
        alpha,
        bias: -rho,
        iterations,
        converged,
    }
}

/// Platt sigmoid P(y=1|f) = 1/(1+exp(A f + B)) fitted by Newton's method with
/// backtracking on smoothed targets.
pub fn platt_fit(dec: &[f64], y: &[u8]) -> (f64, f64) {
    let prior1 = y.iter().filter(|&&v| v == 1).count() as f64;
    let prior0 = y.len() as f64 - prior1;
    let hi = (prior1 + 1.0) / (prior1 + 2.0);
    let lo = 1.0 / (prior0 + 2.0);
    let t: Vec<f64> = y.iter().map(|&v| if v == 1 { hi } else { lo }).collect();
    let mut a = 0.0;
    let mut b = ((prior0 + 1.0) / (prior1 + 1.0)).ln();
    let sigma = 1e-12;
    let fval_at = |a: f64, b: f64| -> f64 {
        dec.iter()
            .zip(&t)
            .map(|(&f, &ti)| {
                let fapb = f * a + b;
                if fapb >= 0.0 {
                    ti * fapb + (-fapb).exp().ln_1p()
                } else {
                    (ti - 1.0) * fapb + fapb.exp().ln_1p()
                }
            })
            .sum()
    };
    let mut fval = fval_at(a, b);
    for _ in 0..100 {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (sigma, sigma, 0.0, 0.0, 0.0);
        for (&f, &ti) in dec.iter().zip(&t) {
            let fapb = f * a + b;
            let (p, q) = if fapb >= 0.0 {
                let e = (-fapb).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = fapb.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = ti - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < 1e-5 && g2.abs() < 1e-5 {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        let mut moved = false;
        while step >= 1e-10 {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = fval_at(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                moved = true;
                break;
            }
            step /= 2.0;
        }
        if !moved {
            break;
        }
    }
    (a, b)
}

impl SvmModel {
    pub fn fit(x: &Matrix, y: &[u8], c: f64, kernel: Kernel) -> Result<Self> {
        check_training_data(x, y)?;
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidHyperParam {
                key: "C".into(),
                detail: format!("must be positive, got {c}"),
            });
        }
        if let Kernel::Rbf { gamma } = kernel {
            if !(gamma > 0.0 && gamma.is_finite()) {
                return Err(Error::InvalidHyperParam {
                    key: "gamma".into(),
                    detail: format!("must be positive, got {gamma}"),
                });
            }
        }
        let n = x.nrows();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = kernel.eval(x.row(i), x.row(j));
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        let ys: Vec<f64> = y.iter().map(|&v| if v == 1 { 1.0 } else { -1.0 }).collect();
        let max_iter = (100 * n).max(100_000);
        let sol = smo(&k, &ys, c, max_iter);

        let sv: Vec<usize> = (0..n).filter(|&i| sol.alpha[i] > 0.0).collect();
        let dual_coef: Vec<f64> = sv.iter().map(|&i| sol.alpha[i] * ys[i]).collect();
        // training decision values straight from the kernel matrix
        let dec: Vec<f64> = (0..n)
            .map(|t| {
                sv.iter()
                    .zip(&dual_coef)
                    .map(|(&i, &a)| a * k[t * n + i])
                    .sum::<f64>()
                    + sol.bias
            })
            .collect();
        let (platt_a, platt_b) = platt_fit(&dec, y);
        let support_vectors = x.select_rows(&sv);
        let w = matches!(kernel, Kernel::Linear).then(|| {
            let mut w = vec![0.0; x.ncols()];
            for (r, &a) in support_vectors.rows_iter().zip(&dual_coef) {
                for (wj, xj) in w.iter_mut().zip(r) {
                    *wj += a * xj;
                }
            }
            w
        });
        Ok(SvmModel {
            kernel,
            c,
            support_vectors,
            dual_coef,
            bias: sol.bias,
            w,
            platt_a,
            platt_b,
            iterations: sol.iterations,
            converged: sol.converged,
        })
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        match &self.w {
            Some(w) => dot(w, row) + self.bias,
            None => {
                self.support_vectors
                    .rows_iter()
                    .zip(&self.dual_coef)
                    .map(|(sv, &a)| a * self.kernel.eval(sv, row))
                    .sum::<f64>()
                    + self.bias
            }
        }
    }

    /// |α_i| for each support vector.
    pub fn alphas(&self) -> Vec<f64> {
        self.dual_coef.iter().map(|a| a.abs()).collect()
    }
}

impl Classifier for SvmModel {
    fn learner(&self) -> LearnerId {
        LearnerId::Svm
    }

    fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        x.rows_iter()
            .map(|r| {
                let z = self.platt_a * self.decision(r) + self.platt_b;
                crate::matrix::sigmoid(-z)
            })
            .collect()
    }

    fn parameters(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("plain data serializes")
    }
}
