//! Central finite-difference gradient checking.

use alloc::vec::Vec;

use super::{Tape, Tensor, TensorError};
use crate::scalar::Scalar;

/// Max relative error between an analytic gradient and central differences
/// of `f` at `x`, over the given coordinates:
/// `|analytic - central| / (|analytic| + |central| + 1e-12)`.
pub fn finite_diff_check_coords<S: Scalar, F>(
    f: &mut F,
    x: &Tensor<S>,
    analytic: &Tensor<S>,
    h: f64,
    coords: &[usize],
) -> f64
where
    F: FnMut(&Tensor<S>) -> S,
{
    let mut worst = 0.0f64;
    for &i in coords {
        let mut plus = x.detached();
        plus.data_mut()[i] = plus.data()[i] + S::lit(h);
        let mut minus = x.detached();
        minus.data_mut()[i] = minus.data()[i] - S::lit(h);
        let central = (f(&plus).to64() - f(&minus).to64()) / (2.0 * h);
        let a = analytic.data()[i].to64();
        let rel = (a - central).abs() / (a.abs() + central.abs() + 1e-12);
        if rel > worst {
            worst = rel;
        }
    }
    worst
}

/// [`finite_diff_check_coords`] over every coordinate of `x`.
pub fn finite_diff_check<S: Scalar, F>(f: &mut F, x: &Tensor<S>, analytic: &Tensor<S>, h: f64) -> f64
where
    F: FnMut(&Tensor<S>) -> S,
{
    let coords: Vec<usize> = (0..x.numel()).collect();
    finite_diff_check_coords(f, x, analytic, h, &coords)
}

/// Convenience wrapper: `build` constructs the scalar loss on a fresh tape
/// from a watched copy of `x`; the analytic gradient comes from the tape and
/// is then compared against central differences of the same construction.
pub fn grad_check<S: Scalar, F>(build: &mut F, x: &Tensor<S>, h: f64) -> Result<f64, TensorError>
where
    F: FnMut(&mut Tape<S>, &Tensor<S>) -> Result<Tensor<S>, TensorError>,
{
    let coords: Vec<usize> = (0..x.numel()).collect();
    grad_check_coords(build, x, h, &coords)
}

/// [`grad_check`] restricted to a coordinate subset (for large inputs).
pub fn grad_check_coords<S: Scalar, F>(
    build: &mut F,
    x: &Tensor<S>,
    h: f64,
    coords: &[usize],
) -> Result<f64, TensorError>
where
    F: FnMut(&mut Tape<S>, &Tensor<S>) -> Result<Tensor<S>, TensorError>,
{
    let analytic = {
        let mut tape = Tape::new();
        let xl = tape.watch(x);
        let loss = build(&mut tape, &xl)?;
        tape.backward(&loss)?.wrt(&xl)?
    };
    let mut f = |pt: &Tensor<S>| -> S {
        let mut tape = Tape::new();
        let loss = build(&mut tape, pt).expect("loss construction at perturbed point");
        loss.item()
    };
    Ok(finite_diff_check_coords(
        &mut f, x, &analytic, h, coords,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn sum_has_near_zero_error() {
        let x = Tensor::from_vec(vec![4], vec![0.3f64, -1.2, 2.2, 0.9]).unwrap();
        let err = grad_check(&mut |tape, xl| tape.sum(xl), &x, 1e-4).unwrap();
        assert!(err < 1e-9, "sum gradient error {err}");
    }

    #[test]
    fn softmax_cross_entropy_gradient_checks_out() {
        // f = -log softmax(x)[label], a smooth composition with known-good vjps
        let logits = Tensor::from_vec(vec![1, 5], vec![0.4f64, -0.3, 1.7, 0.0, -2.2]).unwrap();
        let err = grad_check(
            &mut |tape, xl| {
                let lp = tape.log_softmax(xl)?;
                let nll = tape.nll_pick(&lp, &[2])?;
                tape.mean(&nll)
            },
            &logits,
            1e-4,
        )
        .unwrap();
        assert!(err <= 1e-5, "log-softmax NLL gradient error {err}");
    }

    #[test]
    fn softmax_cross_entropy_gradient_f32() {
        let logits = Tensor::from_vec(vec![1, 5], vec![0.4f32, -0.3, 1.7, 0.0, -2.2]).unwrap();
        let err = grad_check(
            &mut |tape, xl| {
                let lp = tape.log_softmax(xl)?;
                let nll = tape.nll_pick(&lp, &[2])?;
                tape.mean(&nll)
            },
            &logits,
            5e-3,
        )
        .unwrap();
        assert!(err <= 1e-3, "f32 log-softmax NLL gradient error {err}");
    }
}
