//! The traffic-sign classifier: two convolutional layers (each followed by
//! ReLU and 2x2 max pooling) and two fully connected layers.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::tensor::{Tape, Tensor, TensorError};
use crate::{rng_from_seed, Rng};

/// Layer sizes. The paper fixes only the layer count; the widths here are
/// conventional defaults and everything is configurable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub in_channels: usize,
    pub input_hw: usize,
    pub conv1_out: usize,
    pub conv2_out: usize,
    pub kernel: usize,
    pub fc_hidden: usize,
    pub n_classes: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            in_channels: 3,
            input_hw: 32,
            conv1_out: 32,
            conv2_out: 64,
            kernel: 5,
            fc_hidden: 128,
            n_classes: 14,
        }
    }
}

impl ClassifierConfig {
    /// Compact preset that keeps desk-scale experiments fast.
    pub fn small(n_classes: usize) -> Self {
        ClassifierConfig {
            conv1_out: 8,
            conv2_out: 16,
            fc_hidden: 64,
            n_classes,
            ..Self::default()
        }
    }

    /// Minimal preset for unit tests and fuzz loops.
    pub fn tiny(n_classes: usize) -> Self {
        ClassifierConfig {
            conv1_out: 4,
            conv2_out: 8,
            fc_hidden: 32,
            n_classes,
            ..Self::default()
        }
    }

    /// Spatial extent after conv(valid) + pool, applied twice.
    pub fn spatial_after_convs(&self) -> Result<usize, TensorError> {
        let mut hw = self.input_hw;
        for _ in 0..2 {
            if self.kernel > hw {
                return Err(TensorError::BadShape {
                    op: "classifier config",
                    expected: "kernel no larger than feature map",
                    got: vec![self.kernel, hw],
                });
            }
            hw = hw - self.kernel + 1;
            if hw % 2 != 0 {
                return Err(TensorError::BadShape {
                    op: "classifier config",
                    expected: "even feature map before pooling",
                    got: vec![hw],
                });
            }
            hw /= 2;
        }
        Ok(hw)
    }

    pub fn fc1_in(&self) -> Result<usize, TensorError> {
        Ok(self.conv2_out * self.spatial_after_convs()?.pow(2))
    }

    /// Total parameter count implied by the configuration.
    pub fn param_count(&self) -> Result<usize, TensorError> {
        let k2 = self.kernel * self.kernel;
        Ok(self.conv1_out * self.in_channels * k2
            + self.conv1_out
            + self.conv2_out * self.conv1_out * k2
            + self.conv2_out
            + self.fc1_in()? * self.fc_hidden
            + self.fc_hidden
            + self.fc_hidden * self.n_classes
            + self.n_classes)
    }
}

/// All trainable weights. FC weights are stored input-major
/// (`in_features x out_features`) so the forward pass is a plain matmul.
#[derive(Debug, Clone)]
pub struct ClassifierParams<S: Scalar> {
    pub config: ClassifierConfig,
    pub conv1_w: Tensor<S>,
    pub conv1_b: Tensor<S>,
    pub conv2_w: Tensor<S>,
    pub conv2_b: Tensor<S>,
    pub fc1_w: Tensor<S>,
    pub fc1_b: Tensor<S>,
    pub fc2_w: Tensor<S>,
    pub fc2_b: Tensor<S>,
}

fn fan_in_uniform<S: Scalar>(rng: &mut Rng, shape: Vec<usize>, fan_in: usize) -> Tensor<S> {
    let bound = 1.0 / (fan_in as f64).sqrt();
    let n = shape.iter().product::<usize>();
    let data = (0..n)
        .map(|_| S::lit((rng.random::<f64>() * 2.0 - 1.0) * bound))
        .collect::<Vec<_>>();
    Tensor::from_vec(shape, data).expect("shape/data agree by construction")
}

/// Deterministic fan-in-scaled uniform initialization; biases start at zero.
pub fn init_classifier<S: Scalar>(
    config: &ClassifierConfig,
    seed: u64,
) -> Result<ClassifierParams<S>, TensorError> {
    if config.n_classes < 2 {
        return Err(TensorError::BadShape {
            op: "init_classifier",
            expected: "at least 2 classes",
            got: vec![config.n_classes],
        });
    }
    let fc1_in = config.fc1_in()?;
    let mut rng = rng_from_seed(seed);
    let k = config.kernel;
    let conv1_w = fan_in_uniform(
        &mut rng,
        vec![config.conv1_out, config.in_channels, k, k],
        config.in_channels * k * k,
    );
    let conv2_w = fan_in_uniform(
        &mut rng,
        vec![config.conv2_out, config.conv1_out, k, k],
        config.conv1_out * k * k,
    );
    let fc1_w = fan_in_uniform(&mut rng, vec![fc1_in, config.fc_hidden], fc1_in);
    let fc2_w = fan_in_uniform(
        &mut rng,
        vec![config.fc_hidden, config.n_classes],
        config.fc_hidden,
    );
    Ok(ClassifierParams {
        conv1_b: Tensor::zeros(vec![config.conv1_out]),
        conv2_b: Tensor::zeros(vec![config.conv2_out]),
        fc1_b: Tensor::zeros(vec![config.fc_hidden]),
        fc2_b: Tensor::zeros(vec![config.n_classes]),
        config: config.clone(),
        conv1_w,
        conv2_w,
        fc1_w,
        fc2_w,
    })
}

impl<S: Scalar> ClassifierParams<S> {
    /// Parameter tensors in a fixed order (weights interleaved with biases).
    pub fn tensors(&self) -> [&Tensor<S>; 8] {
        [
            &self.conv1_w,
            &self.conv1_b,
            &self.conv2_w,
            &self.conv2_b,
            &self.fc1_w,
            &self.fc1_b,
            &self.fc2_w,
            &self.fc2_b,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Tensor<S>; 8] {
        [
            &mut self.conv1_w,
            &mut self.conv1_b,
            &mut self.conv2_w,
            &mut self.conv2_b,
            &mut self.fc1_w,
            &mut self.fc1_b,
            &mut self.fc2_w,
            &mut self.fc2_b,
        ]
    }

    /// Names matching [`Self::tensors`] order, for checkpoints and reports.
    pub fn tensor_names() -> [&'static str; 8] {
        [
            "conv1_w", "conv1_b", "conv2_w", "conv2_b", "fc1_w", "fc1_b", "fc2_w", "fc2_b",
        ]
    }

    /// Copy with every tensor registered as a differentiable leaf on `tape`.
    pub fn watched(&self, tape: &mut Tape<S>) -> ClassifierParams<S> {
        ClassifierParams {
            config: self.config.clone(),
            conv1_w: tape.watch(&self.conv1_w),
            conv1_b: tape.watch(&self.conv1_b),
            conv2_w: tape.watch(&self.conv2_w),
            conv2_b: tape.watch(&self.conv2_b),
            fc1_w: tape.watch(&self.fc1_w),
            fc1_b: tape.watch(&self.fc1_b),
            fc2_w: tape.watch(&self.fc2_w),
            fc2_b: tape.watch(&self.fc2_b),
        }
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.numel()).sum()
    }
}

/// Logits for a batch of images in `[0,1]`, shape `batch x channels x hw x hw`.
pub fn forward<S: Scalar>(
    tape: &mut Tape<S>,
    params: &ClassifierParams<S>,
    x: &Tensor<S>,
) -> Result<Tensor<S>, TensorError> {
    let cfg = &params.config;
    let want = [cfg.in_channels, cfg.input_hw, cfg.input_hw];
    if x.shape().len() != 4 || x.shape()[1..] != want {
        return Err(TensorError::BadShape {
            op: "classifier forward",
            expected: "batch x channels x hw x hw matching the configuration",
            got: x.shape().to_vec(),
        });
    }
    let batch = x.shape()[0];
    let c = tape.conv2d(x, &params.conv1_w, Some(&params.conv1_b), 0)?;
    let c = tape.relu(&c)?;
    let c = tape.maxpool2(&c)?;
    let c = tape.conv2d(&c, &params.conv2_w, Some(&params.conv2_b), 0)?;
    let c = tape.relu(&c)?;
    let c = tape.maxpool2(&c)?;
    let flat = tape.reshape(&c, vec![batch, cfg.fc1_in()?])?;
    let h = tape.matmul(&flat, &params.fc1_w)?;
    let h = tape.add_bias_row(&h, &params.fc1_b)?;
    let h = tape.relu(&h)?;
    let o = tape.matmul(&h, &params.fc2_w)?;
    tape.add_bias_row(&o, &params.fc2_b)
}

/// Per-sample negative log-softmax of the true class.
pub fn cross_entropy_per_sample<S: Scalar>(
    tape: &mut Tape<S>,
    logits: &Tensor<S>,
    labels: &[usize],
) -> Result<Tensor<S>, TensorError> {
    let lp = tape.log_softmax(logits)?;
    tape.nll_pick(&lp, labels)
}

/// Mean cross-entropy over the batch.
pub fn cross_entropy<S: Scalar>(
    tape: &mut Tape<S>,
    logits: &Tensor<S>,
    labels: &[usize],
) -> Result<Tensor<S>, TensorError> {
    let per = cross_entropy_per_sample(tape, logits, labels)?;
    tape.mean(&per)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_deterministic_in_seed() {
        let cfg = ClassifierConfig::tiny(14);
        let a = init_classifier::<f32>(&cfg, 7).unwrap();
        let b = init_classifier::<f32>(&cfg, 7).unwrap();
        for (x, y) in a.tensors().iter().zip(b.tensors().iter()) {
            assert!(x.bitwise_eq(y));
        }
        let c = init_classifier::<f32>(&cfg, 8).unwrap();
        assert!(!a.conv1_w.bitwise_eq(&c.conv1_w));
    }

    #[test]
    fn final_layer_matches_class_count() {
        let cfg = ClassifierConfig {
            n_classes: 14,
            ..ClassifierConfig::default()
        };
        let p = init_classifier::<f32>(&cfg, 0).unwrap();
        assert_eq!(p.fc2_w.shape()[1], 14);
        assert_eq!(p.fc2_b.shape(), &[14]);
        // default arch: 32x32 -> conv5 -> 28 -> pool 14 -> conv5 -> 10 -> pool 5
        assert_eq!(cfg.spatial_after_convs().unwrap(), 5);
        assert_eq!(cfg.fc1_in().unwrap(), 64 * 5 * 5);
    }

    #[test]
    fn param_count_is_pure_function_of_config() {
        let cfg = ClassifierConfig::small(14);
        let p = init_classifier::<f32>(&cfg, 3).unwrap();
        assert_eq!(p.param_count(), cfg.param_count().unwrap());
    }

    #[test]
    fn zero_weight_network_yields_zero_logits() {
        let cfg = ClassifierConfig::tiny(5);
        let mut p = init_classifier::<f32>(&cfg, 0).unwrap();
        for t in p.tensors_mut() {
            for v in t.data_mut() {
                *v = 0.0;
            }
        }
        let x = Tensor::filled(vec![2, 3, 32, 32], 0.7);
        let mut tape = Tape::new();
        let logits = forward(&mut tape, &p, &x).unwrap();
        assert_eq!(logits.shape(), &[2, 5]);
        assert!(logits.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn forward_shapes_and_softmax_normalization() {
        let cfg = ClassifierConfig::tiny(6);
        let p = init_classifier::<f32>(&cfg, 11).unwrap();
        let mut rng = rng_from_seed(5);
        let data: Vec<f32> = (0..4 * 3 * 32 * 32).map(|_| rng.random::<f32>()).collect();
        let x = Tensor::from_vec(vec![4, 3, 32, 32], data).unwrap();
        let mut tape = Tape::new();
        let logits = forward(&mut tape, &p, &x).unwrap();
        assert_eq!(logits.shape(), &[4, 6]);
        let sm = tape.softmax(&logits).unwrap();
        for r in 0..4 {
            let s: f32 = sm.data()[r * 6..(r + 1) * 6].iter().sum();
            assert!((s - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn wrong_spatial_size_is_rejected() {
        let cfg = ClassifierConfig::tiny(5);
        let p = init_classifier::<f32>(&cfg, 0).unwrap();
        let x = Tensor::filled(vec![1, 3, 16, 16], 0.2);
        let mut tape = Tape::new();
        assert!(matches!(
            forward(&mut tape, &p, &x),
            Err(TensorError::BadShape { .. })
        ));
    }

    #[test]
    fn uniform_logits_give_ln_nclasses() {
        let mut tape = Tape::new();
        let logits = Tensor::<f64>::zeros(vec![3, 14]);
        let loss = cross_entropy(&mut tape, &logits, &[0, 5, 13]).unwrap();
        assert!((loss.item() - (14.0f64).ln()).abs() < 1e-12);
        assert!((loss.item() - 2.6391).abs() < 1e-4);
    }

    #[test]
    fn confident_correct_logits_drive_loss_to_zero() {
        let mut tape = Tape::new();
        let mut data = vec![0.0f64; 14];
        data[3] = 40.0; // huge margin
        let logits = Tensor::from_vec(vec![1, 14], data).unwrap();
        let loss = cross_entropy(&mut tape, &logits, &[3]).unwrap();
        assert!(loss.item() >= 0.0);
        assert!(loss.item() < 1e-12);
    }

    #[test]
    fn cross_entropy_matches_log_sum_exp_oracle() {
        // independent route: loss = logsumexp(row) - row[label]
        let mut rng = rng_from_seed(99);
        for _ in 0..20 {
            let cols = 7;
            let data: Vec<f64> = (0..3 * cols).map(|_| rng.random::<f64>() * 8.0 - 4.0).collect();
            let labels = [2usize, 0, 6];
            let logits = Tensor::from_vec(vec![3, cols], data.clone()).unwrap();
            let mut tape = Tape::new();
            let loss = cross_entropy(&mut tape, &logits, &labels).unwrap();
            let mut want = 0.0;
            for (r, &y) in labels.iter().enumerate() {
                let row = &data[r * cols..(r + 1) * cols];
                let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lse = mx + row.iter().map(|v| (v - mx).exp()).sum::<f64>().ln();
                want += lse - row[y];
            }
            want /= labels.len() as f64;
            assert!((loss.item() - want).abs() < 1e-6);
        }
    }

    #[test]
    fn out_of_range_label_is_rejected() {
        let mut tape = Tape::new();
        let logits = Tensor::<f64>::zeros(vec![1, 4]);
        let err = cross_entropy(&mut tape, &logits, &[4]).unwrap_err();
        assert_eq!(
            err,
            TensorError::LabelOutOfRange {
                op: "nll_pick",
                label: 4,
                classes: 4
            }
        );
    }

    #[test]
    fn cross_entropy_is_nonnegative() {
        let mut rng = rng_from_seed(123);
        for _ in 0..50 {
            let data: Vec<f64> = (0..8).map(|_| rng.random::<f64>() * 10.0 - 5.0).collect();
            let logits = Tensor::from_vec(vec![2, 4], data).unwrap();
            let mut tape = Tape::new();
            let loss = cross_entropy(&mut tape, &logits, &[1, 3]).unwrap();
            assert!(loss.item() >= 0.0);
        }
    }
}
