//! Scalar compute kernels shared by forward ops and their VJPs.
//!
//! All loops are written so the innermost dimension walks contiguous memory;
//! on 32x32 inputs a direct convolution in this form is fast enough that no
//! im2col or FFT path is needed.

use alloc::vec;
use alloc::vec::Vec;

use crate::scalar::Scalar;

/// out[m x n] += a[m x k] @ b[k x n]
pub fn matmul_nn<S: Scalar>(a: &[S], b: &[S], m: usize, k: usize, n: usize, out: &mut [S]) {
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let orow = &mut out[i * n..(i + 1) * n];
        for (kk, &av) in arow.iter().enumerate() {
            let brow = &b[kk * n..(kk + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow.iter()) {
                *o = *o + av * bv;
            }
        }
    }
}

/// out[m x k] += a[m x n] @ b[k x n]^T
pub fn matmul_nt<S: Scalar>(a: &[S], b: &[S], m: usize, n: usize, k: usize, out: &mut [S]) {
    for i in 0..m {
        let arow = &a[i * n..(i + 1) * n];
        let orow = &mut out[i * k..(i + 1) * k];
        for kk in 0..k {
            let brow = &b[kk * n..(kk + 1) * n];
            let mut acc = S::zero();
            for (&av, &bv) in arow.iter().zip(brow.iter()) {
                acc = acc + av * bv;
            }
            orow[kk] = orow[kk] + acc;
        }
    }
}

/// out[k x n] += a[m x k]^T @ b[m x n]
pub fn matmul_tn<S: Scalar>(a: &[S], b: &[S], m: usize, k: usize, n: usize, out: &mut [S]) {
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let brow = &b[i * n..(i + 1) * n];
        for (kk, &av) in arow.iter().enumerate() {
            let orow = &mut out[kk * n..(kk + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow.iter()) {
                *o = *o + av * bv;
            }
        }
    }
}

/// Static geometry of a stride-1 2-D convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvDims {
    pub batch: usize,
    pub cin: usize,
    pub cout: usize,
    pub h: usize,
    pub w: usize,
    pub kh: usize,
    pub kw: usize,
    pub pad: usize,
    pub oh: usize,
    pub ow: usize,
}

impl ConvDims {
    /// Valid output-row/col ranges for a given kernel offset, so the inner
    /// loops never index outside the (possibly padded) input.
    #[inline]
    fn ranges(&self, kh_i: usize, kw_i: usize) -> (usize, usize, usize, usize) {
        let oh_lo = self.pad.saturating_sub(kh_i);
        let oh_hi = self.oh.min((self.h + self.pad).saturating_sub(kh_i));
        let ow_lo = self.pad.saturating_sub(kw_i);
        let ow_hi = self.ow.min((self.w + self.pad).saturating_sub(kw_i));
        (oh_lo, oh_hi, ow_lo, ow_hi)
    }
}

/// Forward convolution: out[b,co,oh,ow] = bias[co] + sum x[b,ci,oh+kh-p,ow+kw-p] * w[co,ci,kh,kw]
pub fn conv2d_forward<S: Scalar>(
    x: &[S],
    w: &[S],
    bias: Option<&[S]>,
    d: &ConvDims,
    out: &mut [S],
) {
    let (h, wd, oh, ow) = (d.h, d.w, d.oh, d.ow);
    for bi in 0..d.batch {
        for co in 0..d.cout {
            let out_plane = &mut out[(bi * d.cout + co) * oh * ow..][..oh * ow];
            if let Some(bias) = bias {
                for o in out_plane.iter_mut() {
                    *o = bias[co];
                }
            }
            for ci in 0..d.cin {
                let x_plane = &x[(bi * d.cin + ci) * h * wd..][..h * wd];
                for kh_i in 0..d.kh {
                    for kw_i in 0..d.kw {
                        let wv = w[((co * d.cin + ci) * d.kh + kh_i) * d.kw + kw_i];
                        let (oh_lo, oh_hi, ow_lo, ow_hi) = d.ranges(kh_i, kw_i);
                        for oh_i in oh_lo..oh_hi {
                            let ih = oh_i + kh_i - d.pad;
                            let xrow = &x_plane[ih * wd..][..wd];
                            let orow = &mut out_plane[oh_i * ow..][..ow];
                            for ow_i in ow_lo..ow_hi {
                                orow[ow_i] = orow[ow_i] + wv * xrow[ow_i + kw_i - d.pad];
                            }
                        }
                    }
                }
            }
        }
    }
}

/// VJP into the convolution input: dx += g (*) flipped(w).
pub fn conv2d_backward_x<S: Scalar>(g: &[S], w: &[S], d: &ConvDims, dx: &mut [S]) {
    let (h, wd, oh, ow) = (d.h, d.w, d.oh, d.ow);
    for bi in 0..d.batch {
        for co in 0..d.cout {
            let g_plane = &g[(bi * d.cout + co) * oh * ow..][..oh * ow];
            for ci in 0..d.cin {
                let dx_plane = &mut dx[(bi * d.cin + ci) * h * wd..][..h * wd];
                for kh_i in 0..d.kh {
                    for kw_i in 0..d.kw {
                        let wv = w[((co * d.cin + ci) * d.kh + kh_i) * d.kw + kw_i];
                        let (oh_lo, oh_hi, ow_lo, ow_hi) = d.ranges(kh_i, kw_i);
                        for oh_i in oh_lo..oh_hi {
                            let ih = oh_i + kh_i - d.pad;
                            let grow = &g_plane[oh_i * ow..][..ow];
                            let dxrow = &mut dx_plane[ih * wd..][..wd];
                            for ow_i in ow_lo..ow_hi {
                                let iw = ow_i + kw_i - d.pad;
                                dxrow[iw] = dxrow[iw] + wv * grow[ow_i];
                            }
                        }
                    }
                }
            }
        }
    }
}

/// VJP into the kernel: dw[co,ci,kh,kw] += sum_b x (*) g.
pub fn conv2d_backward_w<S: Scalar>(x: &[S], g: &[S], d: &ConvDims, dw: &mut [S]) {
    let (h, wd, oh, ow) = (d.h, d.w, d.oh, d.ow);
    for bi in 0..d.batch {
        for co in 0..d.cout {
            let g_plane = &g[(bi * d.cout + co) * oh * ow..][..oh * ow];
            for ci in 0..d.cin {
                let x_plane = &x[(bi * d.cin + ci) * h * wd..][..h * wd];
                for kh_i in 0..d.kh {
                    for kw_i in 0..d.kw {
                        let (oh_lo, oh_hi, ow_lo, ow_hi) = d.ranges(kh_i, kw_i);
                        let mut acc = S::zero();
                        for oh_i in oh_lo..oh_hi {
                            let ih = oh_i + kh_i - d.pad;
                            let xrow = &x_plane[ih * wd..][..wd];
                            let grow = &g_plane[oh_i * ow..][..ow];
                            for ow_i in ow_lo..ow_hi {
                                acc = acc + xrow[ow_i + kw_i - d.pad] * grow[ow_i];
                            }
                        }
                        let wi = ((co * d.cin + ci) * d.kh + kh_i) * d.kw + kw_i;
                        dw[wi] = dw[wi] + acc;
                    }
                }
            }
        }
    }
}

/// Row-wise softmax with max-shift for stability. `out` may alias fresh space.
pub fn softmax_rows<S: Scalar>(x: &[S], rows: usize, cols: usize, out: &mut [S]) {
    for r in 0..rows {
        let xrow = &x[r * cols..(r + 1) * cols];
        let orow = &mut out[r * cols..(r + 1) * cols];
        let mut mx = xrow[0];
        for &v in xrow.iter() {
            if v > mx {
                mx = v;
            }
        }
        let mut sum = S::zero();
        for (o, &v) in orow.iter_mut().zip(xrow.iter()) {
            let e = (v - mx).exp();
            *o = e;
            sum = sum + e;
        }
        for o in orow.iter_mut() {
            *o = *o / sum;
        }
    }
}

/// Row-wise log-softmax: x - (max + log(sum(exp(x - max)))).
pub fn log_softmax_rows<S: Scalar>(x: &[S], rows: usize, cols: usize, out: &mut [S]) {
    for r in 0..rows {
        let xrow = &x[r * cols..(r + 1) * cols];
        let orow = &mut out[r * cols..(r + 1) * cols];
        let mut mx = xrow[0];
        for &v in xrow.iter() {
            if v > mx {
                mx = v;
            }
        }
        let mut sum = S::zero();
        for &v in xrow.iter() {
            sum = sum + (v - mx).exp();
        }
        let lse = mx + sum.ln();
        for (o, &v) in orow.iter_mut().zip(xrow.iter()) {
            *o = v - lse;
        }
    }
}

/// 2x2 max pooling with stride 2; records the winning input index per output.
pub fn maxpool2_forward<S: Scalar>(
    x: &[S],
    planes: usize,
    h: usize,
    w: usize,
    out: &mut [S],
    argmax: &mut Vec<u32>,
) {
    let (oh, ow) = (h / 2, w / 2);
    argmax.clear();
    argmax.reserve(planes * oh * ow);
    for p in 0..planes {
        let x_plane = &x[p * h * w..][..h * w];
        let out_plane = &mut out[p * oh * ow..][..oh * ow];
        for oh_i in 0..oh {
            for ow_i in 0..ow {
                let base = (2 * oh_i) * w + 2 * ow_i;
                let cand = [base, base + 1, base + w, base + w + 1];
                let mut best = cand[0];
                let mut bv = x_plane[cand[0]];
                for &c in &cand[1..] {
                    if x_plane[c] > bv {
                        bv = x_plane[c];
                        best = c;
                    }
                }
                out_plane[oh_i * ow + ow_i] = bv;
                argmax.push((p * h * w + best) as u32);
            }
        }
    }
}

pub fn zeros<S: Scalar>(n: usize) -> Vec<S> {
    vec![S::zero(); n]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_variants_agree_with_naive() {
        let (m, k, n) = (3, 4, 5);
        let a: Vec<f64> = (0..m * k).map(|i| (i as f64) * 0.37 - 1.0).collect();
        let b: Vec<f64> = (0..k * n).map(|i| (i as f64) * 0.11 + 0.2).collect();
        let mut nn = vec![0.0; m * n];
        matmul_nn(&a, &b, m, k, n, &mut nn);
        for i in 0..m {
            for j in 0..n {
                let want: f64 = (0..k).map(|kk| a[i * k + kk] * b[kk * n + j]).sum();
                assert!((nn[i * n + j] - want).abs() < 1e-12);
            }
        }
        // nt: c[m x k] = nn[m x n] @ b'[k x n]^T with b' = b reinterpreted
        let mut nt = vec![0.0; m * k];
        matmul_nt(&nn, &b, m, n, k, &mut nt);
        for i in 0..m {
            for kk in 0..k {
                let want: f64 = (0..n).map(|j| nn[i * n + j] * b[kk * n + j]).sum();
                assert!((nt[i * k + kk] - want).abs() < 1e-12);
            }
        }
        // tn: c[k x n] = a[m x k]^T @ nn[m x n]
        let mut tn = vec![0.0; k * n];
        matmul_tn(&a, &nn, m, k, n, &mut tn);
        for kk in 0..k {
            for j in 0..n {
                let want: f64 = (0..m).map(|i| a[i * k + kk] * nn[i * n + j]).sum();
                assert!((tn[kk * n + j] - want).abs() < 1e-12);
            }
        }
    }
}
