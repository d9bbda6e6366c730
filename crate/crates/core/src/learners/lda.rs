//! Two-class linear discriminant analysis.
//!
//! With two classes the generalized eigenproblem `S_B w = λ S_W w` has a
//! single non-trivial solution `w ∝ S_W⁻¹(μ₁ − μ₀)`. The same direction gives
//! the Gaussian discriminant with shared covariance `Σ = S_W/n + εI`, whose
//! log-odds are `wᵀx + c`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_training_data, Classifier, LearnerId};
use crate::error::{Error, Result};
use crate::matrix::{dot, sigmoid, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub eps: f64,
    pub means: [Vec<f64>; 2],
    pub priors: [f64; 2],
    /// Pooled within-class scatter (row-major d×d).
    pub s_w: Vec<f64>,
    /// Between-class scatter n₀n₁/n (μ₁−μ₀)(μ₁−μ₀)ᵀ (row-major d×d).
    pub s_b: Vec<f64>,
    /// Discriminant direction Σ⁻¹(μ₁ − μ₀).
    pub w: Vec<f64>,
    pub intercept: f64,
    /// Generalized eigenvalue paired with `w`.
    pub lambda: f64,
}

impl LdaModel {
    pub fn fit(x: &Matrix, y: &[u8], eps: f64) -> Result<Self> {
        check_training_data(x, y)?;
        let (n, d) = (x.nrows(), x.ncols());
        if n <= d {
            return Err(Error::InvalidInput(format!(
                "LDA needs n > d, got n={n}, d={d}"
            )));
        }
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::InvalidHyperParam {
                key: "eps".into(),
                detail: format!("must be >= 0, got {eps}"),
            });
        }
        let mut counts = [0.0f64; 2];
        let mut means = [vec![0.0; d], vec![0.0; d]];
        for (r, &yi) in x.rows_iter().zip(y) {
            counts[yi as usize] += 1.0;
            for (m, v) in means[yi as usize].iter_mut().zip(r) {
                *m += v;
            }
        }
        for k in 0..2 {
            means[k].iter_mut().for_each(|m| *m /= counts[k]);
        }
        let mut s_w = DMatrix::<f64>::zeros(d, d);
        let mut centred = vec![0.0; d];
        for (r, &yi) in x.rows_iter().zip(y) {
            for (c, (v, m)) in centred.iter_mut().zip(r.iter().zip(&means[yi as usize])) {
                *c = v - m;
            }
            for a in 0..d {
                if centred[a] == 0.0 {
                    continue;
                }
                for b in a..d {
                    s_w[(a, b)] += centred[a] * centred[b];
                }
            }
        }
        for a in 0..d {
            for b in 0..a {
                s_w[(a, b)] = s_w[(b, a)];
            }
        }
        let nf = n as f64;
        let diff = DVector::from_iterator(d, means[1].iter().zip(&means[0]).map(|(a, b)| a - b));
        let s_b = &diff * diff.transpose() * (counts[0] * counts[1] / nf);
        let sigma = &s_w / nf + DMatrix::identity(d, d) * eps;
        let singular = || {
            Error::SingularScatter(format!(
                "within-class scatter is not positive definite at eps={eps}; use eps > 0"
            ))
        };
        let chol = sigma.clone().cholesky().ok_or_else(singular)?;
        let l = chol.l();
        let diag_max = (0..d).map(|i| sigma[(i, i)]).fold(0.0, f64::max);
        let pivot_min = (0..d)
            .map(|i| l[(i, i)] * l[(i, i)])
            .fold(f64::INFINITY, f64::min);
        if d > 0 && pivot_min <= 1e-12 * diag_max.max(f64::MIN_POSITIVE) {
            return Err(singular());
        }
        let w = chol.solve(&diff);
        let priors = [counts[0] / nf, counts[1] / nf];
        let mid: Vec<f64> = means[0]
            .iter()
            .zip(&means[1])
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        let wv: Vec<f64> = w.iter().copied().collect();
        let intercept = -dot(&wv, &mid) + (priors[1] / priors[0]).ln();
        // λ = wᵀS_B w / wᵀS_W w (with S_W = nΣ)
        let sww = (w.transpose() * &sigma * &w)[(0, 0)] * nf;
        let lambda = if sww > 0.0 {
            (w.transpose() * &s_b * &w)[(0, 0)] / sww
        } else {
            0.0
        };
        Ok(LdaModel {
            eps,
            means,
            priors,
            s_w: s_w.transpose().as_slice().to_vec(),
            s_b: s_b.transpose().as_slice().to_vec(),
            w: wv,
            intercept,
            lambda,
        })
    }

    /// Unit-norm projection direction (zero when the class means coincide).
    pub fn projection(&self) -> Vec<f64> {
        let norm = self.w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return self.w.clone();
        }
        self.w.iter().map(|v| v / norm).collect()
    }

    pub fn log_odds(&self, row: &[f64]) -> f64 {
        dot(&self.w, row) + self.intercept
    }
}

impl Classifier for LdaModel {
    fn learner(&self) -> LearnerId {
        LearnerId::Lda
    }

    fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        x.rows_iter().map(|r| sigmoid(self.log_odds(r))).collect()
    }

    fn parameters(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("plain data serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussians(n: usize, shift: f64, seed: u64) -> (Matrix, Vec<u8>) {
        let mut rng = rng_from_seed(seed);
        let mut x = Matrix::zeros(n, 3);
        let mut y = Vec::new();
        for i in 0..n {
            let c = (i % 2) as u8;
            for j in 0..3 {
                let z: f64 = StandardNormal.sample(&mut rng);
                x.set(i, j, z + if j == 0 && c == 1 { shift } else { 0.0 });
            }
            y.push(c);
        }
        (x, y)
    }

    #[test]
    fn direction_follows_mean_shift() {
        let (x, y) = gaussians(4000, 3.0, 2);
        let m = LdaModel::fit(&x, &y, 1e-6).unwrap();
        let w = m.projection();
        let angle = w[0].clamp(-1.0, 1.0).acos().to_degrees();
        assert!(angle < 1.0, "angle {angle}");
    }

    #[test]
    fn solves_generalized_eigenproblem() {
        let (x, y) = gaussians(500, 1.0, 5);
        let m = LdaModel::fit(&x, &y, 0.0).unwrap();
        let d = 3;
        let sw = DMatrix::from_row_slice(d, d, &m.s_w);
        let sb = DMatrix::from_row_slice(d, d, &m.s_b);
        let w = DVector::from_vec(m.w.clone());
        let lhs = &sb * &w;
        let rhs = &sw * &w * m.lambda;
        assert!((lhs - rhs).norm() < 1e-8 * (sb.norm() * w.norm()).max(1.0));
    }

    #[test]
    fn identical_means_give_prior() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [0.0], [1.0], [0.0], [1.0]]).unwrap();
        let y = [0, 0, 1, 1, 1, 1];
        let m = LdaModel::fit(&x, &y, 1e-4).unwrap();
        assert!(m.w[0].abs() < 1e-12);
        for p in m.predict_proba(&x) {
            assert!((p - 4.0 / 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_scatter_without_shrinkage() {
        let x = Matrix::from_rows(&[[0.0, 1.0], [1.0, 1.0], [2.0, 1.0], [3.0, 1.0]]).unwrap();
        let y = [0, 1, 0, 1];
        assert!(matches!(
            LdaModel::fit(&x, &y, 0.0),
            Err(Error::SingularScatter(_))
        ));
        assert!(LdaModel::fit(&x, &y, 1e-2).is_ok());
    }

    #[test]
    fn scaling_inputs_keeps_labels() {
        let (x, y) = gaussians(600, 1.0, 9);
        let a = LdaModel::fit(&x, &y, 1e-4).unwrap();
        let xs = x.map(|v| v * 10.0);
        let b = LdaModel::fit(&xs, &y, 1e-4).unwrap();
        assert_eq!(a.predict(&x), b.predict(&xs));
    }
}
