//! Adadelta, following the original recurrence: accumulate squared
//! gradients, scale the step by the ratio of running RMS values, accumulate
//! squared updates, then apply `lr * update`.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::tensor::{Tensor, TensorError};

/// Optimizer hyperparameters. The learning rate of 1.0 is the training
/// default; decay and epsilon follow the original algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdadeltaConfig {
    pub lr: f64,
    pub decay: f64,
    pub epsilon: f64,
}

impl Default for AdadeltaConfig {
    fn default() -> Self {
        AdadeltaConfig {
            lr: 1.0,
            decay: 0.9,
            epsilon: 1e-6,
        }
    }
}

/// Per-parameter running averages of squared gradients and squared updates.
#[derive(Debug, Clone)]
pub struct AdadeltaState<S: Scalar> {
    config: AdadeltaConfig,
    sq_grad: Vec<Vec<S>>,
    sq_update: Vec<Vec<S>>,
}

impl<S: Scalar> AdadeltaState<S> {
    pub fn new(config: AdadeltaConfig, param_sizes: &[usize]) -> Self {
        AdadeltaState {
            config,
            sq_grad: param_sizes.iter().map(|&n| vec![S::zero(); n]).collect(),
            sq_update: param_sizes.iter().map(|&n| vec![S::zero(); n]).collect(),
        }
    }

    pub fn config(&self) -> AdadeltaConfig {
        self.config
    }

    /// Accumulator pairs, for invariant checks.
    pub fn accumulators(&self) -> (&[Vec<S>], &[Vec<S>]) {
        (&self.sq_grad, &self.sq_update)
    }

    /// One update over a parameter list and equally shaped gradients.
    pub fn step(
        &mut self,
        params: &mut [&mut Tensor<S>],
        grads: &[Tensor<S>],
    ) -> Result<(), TensorError> {
        if params.len() != self.sq_grad.len() || grads.len() != params.len() {
            return Err(TensorError::BadShape {
                op: "adadelta step",
                expected: "one gradient per tracked parameter",
                got: vec![params.len(), grads.len()],
            });
        }
        let rho = S::lit(self.config.decay);
        let one_minus = S::one() - rho;
        let eps = S::lit(self.config.epsilon);
        let lr = S::lit(self.config.lr);
        for ((param, grad), (eg2, ed2)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.sq_grad.iter_mut().zip(self.sq_update.iter_mut()))
        {
            if param.shape() != grad.shape() {
                return Err(TensorError::ShapeMismatch {
                    op: "adadelta step",
                    lhs: param.shape().to_vec(),
                    rhs: grad.shape().to_vec(),
                });
            }
            let gdata = grad.data();
            let pdata = param.data_mut();
            for i in 0..pdata.len() {
                let g = gdata[i];
                eg2[i] = rho * eg2[i] + one_minus * g * g;
                let delta = -((ed2[i] + eps).sqrt() / (eg2[i] + eps).sqrt()) * g;
                ed2[i] = rho * ed2[i] + one_minus * delta * delta;
                pdata[i] = pdata[i] + lr * delta;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut p = Tensor::from_vec(vec![3], vec![1.0f64, -2.0, 0.5]).unwrap();
        let mut st = AdadeltaState::new(AdadeltaConfig::default(), &[3]);
        // seed the accumulators with a non-trivial first step, then feed zeros
        let g = Tensor::from_vec(vec![3], vec![0.1, 0.0, -0.2]).unwrap();
        st.step(&mut [&mut p], core::slice::from_ref(&g)).unwrap();
        let before = p.clone();
        let (eg_before, ed_before) = {
            let (a, b) = st.accumulators();
            (a[0].clone(), b[0].clone())
        };
        let zero = Tensor::zeros(vec![3]);
        st.step(&mut [&mut p], core::slice::from_ref(&zero)).unwrap();
        assert!(p.bitwise_eq(&before));
        // accumulators decay by the same factor, so their ratio is preserved
        let (eg, ed) = st.accumulators();
        for i in 0..3 {
            if eg_before[i] > 0.0 {
                let r0 = ed_before[i] / eg_before[i];
                let r1 = ed[0][i] / eg[0][i];
                assert!((r0 - r1).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn single_scalar_step_matches_hand_recurrence() {
        // rho = 0.9, eps = 1e-6, lr = 1.0, x = 2, g = 0.5
        let mut p = Tensor::from_vec(vec![1], vec![2.0f64]).unwrap();
        let mut st = AdadeltaState::new(AdadeltaConfig::default(), &[1]);
        let g = Tensor::from_vec(vec![1], vec![0.5f64]).unwrap();
        st.step(&mut [&mut p], core::slice::from_ref(&g)).unwrap();

        let eg2 = 0.1 * 0.25; // (1 - rho) * g^2
        let delta = -((0.0f64 + 1e-6).sqrt() / (eg2 + 1e-6).sqrt()) * 0.5;
        let expect = 2.0 + delta;
        assert!((p.data()[0] - expect).abs() < 1e-9);
        let (eg, ed) = st.accumulators();
        assert!((eg[0][0] - eg2).abs() < 1e-15);
        assert!((ed[0][0] - 0.1 * delta * delta).abs() < 1e-15);
    }

    #[test]
    fn default_learning_rate_is_one() {
        assert_eq!(AdadeltaConfig::default().lr, 1.0);
        assert_eq!(AdadeltaConfig::default().decay, 0.9);
        assert_eq!(AdadeltaConfig::default().epsilon, 1e-6);
    }

    #[test]
    fn accumulators_stay_nonnegative_and_shape_matched() {
        let mut p = Tensor::from_vec(vec![2], vec![0.3f64, -0.9]).unwrap();
        let mut st = AdadeltaState::new(AdadeltaConfig::default(), &[2]);
        for k in 0..20 {
            let g = Tensor::from_vec(vec![2], vec![(k as f64 - 10.0) * 0.03, 0.07]).unwrap();
            st.step(&mut [&mut p], core::slice::from_ref(&g)).unwrap();
        }
        let (eg, ed) = st.accumulators();
        assert_eq!(eg[0].len(), 2);
        assert_eq!(ed[0].len(), 2);
        assert!(eg[0].iter().chain(ed[0].iter()).all(|&v| v >= 0.0));
    }

    #[test]
    fn mismatched_gradient_shape_is_rejected() {
        let mut p = Tensor::<f64>::zeros(vec![2]);
        let mut st = AdadeltaState::new(AdadeltaConfig::default(), &[2]);
        let g = Tensor::<f64>::zeros(vec![3]);
        assert!(st.step(&mut [&mut p], core::slice::from_ref(&g)).is_err());
    }
}
