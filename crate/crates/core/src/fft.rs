//! Planned 3D complex FFT on a cubic, row-major `n × n × n` buffer.
//!
//! The last axis is contiguous and transformed as a batch. The other two axes
//! are brought into contiguous position by in-place square transposes.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

const TILE: usize = 16;

pub(crate) struct Fft3 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft3 {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    /// Unnormalized forward DFT, `e^{-2πi jk/n}` kernel on every axis.
    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.forward);
    }

    /// Unnormalized inverse DFT.
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
    }

    /// Unnormalized inverse DFT of every contiguous length-`n` row.
    pub(crate) fn inverse_rows(&self, data: &mut [Complex64]) {
        assert_eq!(data.len() % self.n, 0, "buffer is not a whole number of rows");
        let mut scratch = vec![Complex64::default(); self.inverse.get_inplace_scratch_len()];
        self.inverse.process_with_scratch(data, &mut scratch);
    }

    fn run(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        assert_eq!(data.len(), n * n * n, "buffer does not match FFT size");
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];

        fft.process_with_scratch(data, &mut scratch);

        // axis 1: transpose (iy1, iy2) inside each x-plane
        for ix in 0..n {
            transpose_square(data, ix * n * n, n, n);
        }
        fft.process_with_scratch(data, &mut scratch);
        for ix in 0..n {
            transpose_square(data, ix * n * n, n, n);
        }

        // axis 0: transpose (ix, iy2) inside each y1-slab
        for iy in 0..n {
            transpose_square(data, iy * n, n * n, n);
        }
        fft.process_with_scratch(data, &mut scratch);
        for iy in 0..n {
            transpose_square(data, iy * n, n * n, n);
        }
    }
}

/// In-place transpose of the `n × n` matrix `M[a][b] = data[offset + a*row_stride + b]`.
fn transpose_square(data: &mut [Complex64], offset: usize, row_stride: usize, n: usize) {
    for a0 in (0..n).step_by(TILE) {
        for b0 in (a0..n).step_by(TILE) {
            let a1 = (a0 + TILE).min(n);
            let b1 = (b0 + TILE).min(n);
            for a in a0..a1 {
                let start = if a0 == b0 { a + 1 } else { b0 };
                for b in start..b1 {
                    data.swap(offset + a * row_stride + b, offset + b * row_stride + a);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(input: &[Complex64], n: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); n * n * n];
        let w = |j: usize, k: usize| {
            Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * (j * k) as f64 / n as f64)
        };
        for k0 in 0..n {
            for k1 in 0..n {
                for k2 in 0..n {
                    let mut acc = Complex64::default();
                    for j0 in 0..n {
                        for j1 in 0..n {
                            for j2 in 0..n {
                                acc += input[(j0 * n + j1) * n + j2] * w(j0, k0) * w(j1, k1) * w(j2, k2);
                            }
                        }
                    }
                    out[(k0 * n + k1) * n + k2] = acc;
                }
            }
        }
        out
    }

    #[test]
    fn matches_naive_dft() {
        let n = 6;
        let input: Vec<Complex64> = (0..n * n * n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let expected = naive_dft(&input, n);
        let mut data = input.clone();
        Fft3::new(n).forward(&mut data);
        for (a, b) in data.iter().zip(&expected) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn transpose_is_involution() {
        let n = 37;
        let orig: Vec<Complex64> = (0..n * n).map(|i| Complex64::new(i as f64, 0.0)).collect();
        let mut data = orig.clone();
        transpose_square(&mut data, 0, n, n);
        assert_eq!(data[1 * n + 2], orig[2 * n + 1]);
        transpose_square(&mut data, 0, n, n);
        assert_eq!(data, orig);
    }
}
