//! Raw spectral operations on flat row-major arrays.
//!
//! All transforms are unnormalized forward / normalized inverse, so a
//! forward-inverse round trip is the identity. Fields have at most two
//! axes (2D one-particle or 1D two-particle); axis 0 is the slow
//! (outermost) index.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// In-place FFT along one axis of a row-major array.
pub fn fft_along(data: &mut [Complex64], shape: &[usize], axis: usize, inverse: bool) {
    assert!(axis < shape.len());
    assert_eq!(data.len(), shape.iter().product::<usize>());
    let n = shape[axis];
    let fft = plan(n, inverse);
    let scale = if inverse { 1.0 / n as f64 } else { 1.0 };

    match (shape.len(), axis) {
        (1, 0) => {
            fft.process(data);
        }
        (2, 1) => {
            for row in data.chunks_exact_mut(n) {
                fft.process(row);
            }
        }
        (2, 0) => {
            let stride = shape[1];
            let mut col = vec![Complex64::default(); n];
            for c in 0..stride {
                for r in 0..n {
                    col[r] = data[r * stride + c];
                }
                fft.process(&mut col);
                for r in 0..n {
                    data[r * stride + c] = col[r];
                }
            }
        }
        _ => unreachable!("fields have at most two axes"),
    }
    if inverse {
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

/// Forward transform along every axis.
pub fn fft_all(data: &mut [Complex64], shape: &[usize], inverse: bool) {
    for axis in 0..shape.len() {
        fft_along(data, shape, axis, inverse);
    }
}

/// Spectral derivative along `axis`: multiplication by i*k in Fourier space.
pub fn derivative_axis(
    data: &[Complex64],
    shape: &[usize],
    ks: &[f64],
    axis: usize,
) -> Vec<Complex64> {
    let mut out = data.to_vec();
    fft_along(&mut out, shape, axis, false);
    multiply_axis(&mut out, shape, axis, |k_idx| Complex64::new(0.0, ks[k_idx]));
    fft_along(&mut out, shape, axis, true);
    out
}

/// Spectral Laplacian over the selected axes: multiplication by
/// -(sum of k^2 over those axes) in the jointly transformed domain.
pub fn laplacian_axes(
    data: &[Complex64],
    shape: &[usize],
    ks: &[f64],
    axes: &[usize],
) -> Vec<Complex64> {
    let mut out = data.to_vec();
    for &axis in axes {
        fft_along(&mut out, shape, axis, false);
    }
    match shape.len() {
        1 => {
            for (i, v) in out.iter_mut().enumerate() {
                *v *= -ks[i] * ks[i];
            }
        }
        2 => {
            let n1 = shape[1];
            let use0 = axes.contains(&0);
            let use1 = axes.contains(&1);
            for (r, row) in out.chunks_exact_mut(n1).enumerate() {
                let k0sq = if use0 { ks[r] * ks[r] } else { 0.0 };
                for (c, v) in row.iter_mut().enumerate() {
                    let k1sq = if use1 { ks[c] * ks[c] } else { 0.0 };
                    *v *= -(k0sq + k1sq);
                }
            }
        }
        _ => unreachable!(),
    }
    for &axis in axes {
        fft_along(&mut out, shape, axis, true);
    }
    out
}

/// Multiply each element by a factor depending on its index along `axis`.
pub fn multiply_axis(
    data: &mut [Complex64],
    shape: &[usize],
    axis: usize,
    factor: impl Fn(usize) -> Complex64,
) {
    match (shape.len(), axis) {
        (1, 0) => {
            for (i, v) in data.iter_mut().enumerate() {
                *v *= factor(i);
            }
        }
        (2, 1) => {
            let n1 = shape[1];
            for row in data.chunks_exact_mut(n1) {
                for (i, v) in row.iter_mut().enumerate() {
                    *v *= factor(i);
                }
            }
        }
        (2, 0) => {
            let n1 = shape[1];
            for (r, row) in data.chunks_exact_mut(n1).enumerate() {
                let f = factor(r);
                for v in row.iter_mut() {
                    *v *= f;
                }
            }
        }
        _ => unreachable!(),
    }
}
