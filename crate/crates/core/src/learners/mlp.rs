//! Feed-forward network: ReLU hidden layers, one sigmoid output unit, binary
//! cross-entropy, mini-batch training by backpropagation with Adam updates.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{check_training_data, Classifier, LearnerId};
use crate::error::{Error, Result};
use crate::matrix::{sigmoid, Matrix};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub n_in: usize,
    pub n_out: usize,
    /// Row-major `n_out × n_in`.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden_sizes: Vec<usize>,
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden_sizes: vec![64, 32],
            lr: 1e-3,
            epochs: 200,
            batch: 32,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
    pub params: MlpParams,
    pub epoch_loss: Vec<f64>,
}

impl MlpModel {
    /// Fan-in scaled uniform init U(±√(6/fan_in)); biases start at zero.
    pub fn init(n_inputs: usize, hidden: &[usize], seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let mut sizes = vec![n_inputs];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (n_in, n_out) = (w[0], w[1]);
                let limit = (6.0 / n_in.max(1) as f64).sqrt();
                Layer {
                    n_in,
                    n_out,
                    w: (0..n_in * n_out)
                        .map(|_| rng.random_range(-limit..limit))
                        .collect(),
                    b: vec![0.0; n_out],
                }
            })
            .collect();
        MlpModel {
            layers,
            params: MlpParams {
                hidden_sizes: hidden.to_vec(),
                seed,
                ..MlpParams::default()
            },
            epoch_loss: Vec::new(),
        }
    }

    /// Pre-activations and activations per layer; the last activation holds
    /// the output logit (sigmoid is applied by the caller).
    fn forward(&self, input: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut act = vec![input.to_vec()];
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let h = &act[l];
            let z: Vec<f64> = (0..layer.n_out)
                .map(|o| {
                    let row = &layer.w[o * layer.n_in..(o + 1) * layer.n_in];
                    layer.b[o] + row.iter().zip(h).map(|(w, x)| w * x).sum::<f64>()
                })
                .collect();
            let a = if l == last {
                z.clone()
            } else {
                z.iter().map(|v| v.max(0.0)).collect()
            };
            pre.push(z);
            act.push(a);
        }
        (pre, act)
    }

    pub fn logit(&self, input: &[f64]) -> f64 {
        let (_, act) = self.forward(input);
        act.last().expect("output layer")[0]
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Parameters flattened layer by layer (weights then biases).
    pub fn params_flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.w.iter().chain(&l.b).copied())
            .collect()
    }

    pub fn set_params_flat(&mut self, p: &[f64]) {
        let mut k = 0;
        for l in &mut self.layers {
            for v in l.w.iter_mut().chain(l.b.iter_mut()) {
                *v = p[k];
                k += 1;
            }
        }
    }

    /// Mean BCE over the given rows and its gradient (same layout as
    /// [`params_flat`](Self::params_flat)).
    pub fn loss_and_grad(&self, x: &Matrix, y: &[u8], rows: &[usize]) -> (f64, Vec<f64>) {
        let mut grads: Vec<(Vec<f64>, Vec<f64>)> = self
            .layers
            .iter()
            .map(|l| (vec![0.0; l.w.len()], vec![0.0; l.b.len()]))
            .collect();
        let mut loss = 0.0;
        for &i in rows {
            let (pre, act) = self.forward(x.row(i));
            let z = pre.last().expect("output")[0];
            let yi = f64::from(y[i]);
            loss += if z > 0.0 {
                z + (-z).exp().ln_1p()
            } else {
                z.exp().ln_1p()
            } - yi * z;
            let mut delta = vec![sigmoid(z) - yi];
            for l in (0..self.layers.len()).rev() {
                let layer = &self.layers[l];
                let input = &act[l];
                let (gw, gb) = &mut grads[l];
                // inactive ReLU units pass back exactly zero, skip them
                for (o, &d) in delta.iter().enumerate().filter(|(_, d)| **d != 0.0) {
                    gb[o] += d;
                    for (g, x) in gw[o * layer.n_in..(o + 1) * layer.n_in]
                        .iter_mut()
                        .zip(input)
                    {
                        *g += d * x;
                    }
                }
                if l > 0 {
                    let mut back = vec![0.0; layer.n_in];
                    for (o, &d) in delta.iter().enumerate().filter(|(_, d)| **d != 0.0) {
                        for (b, w) in back
                            .iter_mut()
                            .zip(&layer.w[o * layer.n_in..(o + 1) * layer.n_in])
                        {
                            *b += w * d;
                        }
                    }
                    for (b, z) in back.iter_mut().zip(&pre[l - 1]) {
                        if *z <= 0.0 {
                            *b = 0.0;
                        }
                    }
                    delta = back;
                }
            }
        }
        let scale = 1.0 / rows.len().max(1) as f64;
        let flat = grads
            .into_iter()
            .flat_map(|(w, b)| w.into_iter().chain(b))
            .map(|g| g * scale)
            .collect();
        (loss * scale, flat)
    }

    pub fn fit(x: &Matrix, y: &[u8], params: MlpParams) -> Result<Self> {
        check_training_data(x, y)?;
        if params.hidden_sizes.is_empty() || params.hidden_sizes.contains(&0) {
            return Err(Error::InvalidHyperParam {
                key: "hidden_sizes".into(),
                detail: "need at least one non-empty hidden layer".into(),
            });
        }
        if params.lr.is_nan() || params.lr <= 0.0 || params.batch == 0 {
            return Err(Error::InvalidHyperParam {
                key: "lr/batch".into(),
                detail: "lr must be positive and batch >= 1".into(),
            });
        }
        let mut model = MlpModel::init(x.ncols(), &params.hidden_sizes, params.seed);
        model.params = params.clone();
        let mut rng = rng_from_seed(params.seed ^ 0x0005_DEEC_E66D);
        let (beta1, beta2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);
        let mut theta = model.params_flat();
        let mut m = vec![0.0; theta.len()];
        let mut v = vec![0.0; theta.len()];
        let mut step = 0i32;
        let mut order: Vec<usize> = (0..x.nrows()).collect();
        for epoch in 0..params.epochs {
            order.shuffle(&mut rng);
            let mut total = 0.0;
            for batch in order.chunks(params.batch) {
                let (loss, g) = model.loss_and_grad(x, y, batch);
                if !loss.is_finite() || g.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Diverged(format!("non-finite loss at epoch {epoch}")));
                }
                total += loss * batch.len() as f64;
                step += 1;
                let (c1, c2) = (1.0 - beta1.powi(step), 1.0 - beta2.powi(step));
                for k in 0..theta.len() {
                    m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
                    v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
                    theta[k] -= params.lr * (m[k] / c1) / ((v[k] / c2).sqrt() + eps);
                }
                model.set_params_flat(&theta);
            }
            model.epoch_loss.push(total / x.nrows() as f64);
        }
        Ok(model)
    }
}

impl Classifier for MlpModel {
    fn learner(&self) -> LearnerId {
        LearnerId::Dnn
    }

    fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        x.rows_iter().map(|r| sigmoid(self.logit(r))).collect()
    }

    fn parameters(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("plain data serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_zero_input_give_output_bias() {
        let mut m = MlpModel::init(3, &[4], 1);
        let mut p = vec![0.0; m.n_params()];
        *p.last_mut().unwrap() = 0.7;
        m.set_params_flat(&p);
        let out = m.predict_proba(&Matrix::zeros(1, 3))[0];
        assert!((out - sigmoid(0.7)).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = rng_from_seed(17);
        let rows: Vec<[f64; 2]> = (0..10)
            .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<u8> = (0..10).map(|i| (i % 2) as u8).collect();
        let idx: Vec<usize> = (0..10).collect();
        let mut m = MlpModel::init(2, &[3], 5);
        // nonzero biases keep ReLU units away from the kink
        let mut p = m.params_flat();
        for v in p.iter_mut() {
            *v += 0.05;
        }
        m.set_params_flat(&p);
        let (_, g) = m.loss_and_grad(&x, &y, &idx);
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for k in 0..p.len() {
            let mut probe = m.clone();
            let mut q = p.clone();
            q[k] += h;
            probe.set_params_flat(&q);
            let up = probe.loss_and_grad(&x, &y, &idx).0;
            q[k] -= 2.0 * h;
            probe.set_params_flat(&q);
            let down = probe.loss_and_grad(&x, &y, &idx).0;
            worst = worst.max(((up - down) / (2.0 * h) - g[k]).abs());
        }
        assert!(worst <= 1e-6, "max abs diff {worst}");
    }

    #[test]
    fn same_seed_same_model() {
        let x = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0], [1.0, 1.0], [0.0, 0.0]]).unwrap();
        let p = MlpParams {
            hidden_sizes: vec![4],
            epochs: 20,
            batch: 2,
            ..MlpParams::default()
        };
        let a = MlpModel::fit(&x, &[0, 1, 1, 0], p.clone()).unwrap();
        let b = MlpModel::fit(&x, &[0, 1, 1, 0], p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn learns_xor() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]).unwrap();
        let y = [0, 1, 1, 0];
        let m = MlpModel::fit(
            &x,
            &y,
            MlpParams {
                hidden_sizes: vec![8],
                lr: 1e-2,
                epochs: 2000,
                batch: 4,
                seed: 3,
            },
        )
        .unwrap();
        assert_eq!(m.predict(&x), y.to_vec());
    }

    #[test]
    fn diverging_rate_is_reported() {
        // activations overflow to infinity on the first forward pass
        let x = Matrix::from_rows(&[[1e308; 10], [-1e308; 10]]).unwrap();
        let r = MlpModel::fit(
            &x,
            &[0, 1],
            MlpParams {
                hidden_sizes: vec![8],
                lr: 1.0,
                epochs: 5,
                batch: 2,
                seed: 0,
            },
        );
        assert!(matches!(r, Err(Error::Diverged(_))));
    }
}
