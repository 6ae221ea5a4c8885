//! Radix-2 complex FFT over the axes of a hypercubic periodic grid.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

/// Plan for a 1-D transform of power-of-two length.
#[derive(Debug, Clone)]
struct Plan1d {
    len: usize,
    /// `exp(-2πi k / len)` for `k < len / 2`.
    twiddles: Vec<Complex64>,
    bitrev: Vec<usize>,
}

impl Plan1d {
    fn new(len: usize) -> Self {
        debug_assert!(len.is_power_of_two());
        let bits = len.trailing_zeros();
        let twiddles = (0..len / 2)
            .map(|k| {
                let angle = -2.0 * PI * (k as f64) / (len as f64);
                Complex64::new(angle.cos(), angle.sin())
            })
            .collect();
        let bitrev = (0..len)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        Self { len, twiddles, bitrev }
    }

    /// Unnormalized in-place transform; `inverse` flips the twiddle sign.
    fn run(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.len;
        for i in 0..n {
            let j = self.bitrev[i];
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut half = 1;
        while half < n {
            let step = n / (2 * half);
            for start in (0..n).step_by(2 * half) {
                for k in 0..half {
                    let w = self.twiddles[k * step];
                    let w = if inverse { w.conj() } else { w };
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            half *= 2;
        }
    }
}

/// Multi-dimensional transform on `axes` axes of `len` points each, row-major
/// (axis 0 slowest).
#[derive(Debug, Clone)]
pub(crate) struct FftNd {
    plan: Plan1d,
    axes: usize,
    total: usize,
}

impl FftNd {
    pub(crate) fn new(len: usize, axes: usize) -> Self {
        Self { plan: Plan1d::new(len), axes, total: len.pow(axes as u32) }
    }

    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    /// Inverse transform including the `1/total` normalization.
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, true);
        let scale = 1.0 / self.total as f64;
        for z in data.iter_mut() {
            *z *= scale;
        }
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        assert_eq!(data.len(), self.total);
        let n = self.plan.len;
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for axis in 0..self.axes {
            let stride = n.pow((self.axes - 1 - axis) as u32);
            if stride == 1 {
                for chunk in data.chunks_exact_mut(n) {
                    self.plan.run(chunk, inverse);
                }
                continue;
            }
            let block = n * stride;
            for outer in (0..self.total).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for (j, z) in line.iter_mut().enumerate() {
                        *z = data[base + j * stride];
                    }
                    self.plan.run(&mut line, inverse);
                    for (j, z) in line.iter().enumerate() {
                        data[base + j * stride] = *z;
                    }
                }
            }
        }
    }
}
