//! Radix-2 FFT and a Bluestein-based centered DFT with arbitrary frequency
//! spacing. Used by the finite-aperture kernel to evaluate fields on the
//! detection plane.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::math;

/// Power-of-two complex FFT plan.
#[derive(Debug, Clone)]
pub struct Fft {
    n: usize,
    twiddles: Vec<Complex64>,
}

impl Fft {
    /// Panics unless `n` is a power of two.
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two(), "FFT length must be a power of two");
        let twiddles = (0..n / 2)
            .map(|k| {
                let (s, c) = math::sin_cos(-2.0 * PI * k as f64 / n as f64);
                Complex64::new(c, s)
            })
            .collect();
        Self { n, twiddles }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In place, `X_k = sum_j x_j exp(-2 pi i jk/n)`.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, false);
    }

    /// In place, `x_j = sum_k X_k exp(+2 pi i jk/n)`, unscaled.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.run(buf, true);
    }

    fn run(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.n;
        assert_eq!(buf.len(), n);
        if n <= 1 {
            return;
        }
        let bits = n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if j > i {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
    }
}

/// Plan for `out_v = sum_{u=-K..K} a_u exp(i s u v)` for `v = -J..J`.
///
/// Inputs and outputs are stored with the zero index in the middle
/// (`a[u + K]`, `out[v + J]`).
#[derive(Debug, Clone)]
pub struct CenteredDft {
    half_in: usize,
    half_out: usize,
    fft: Fft,
    pre: Vec<Complex64>,
    post: Vec<Complex64>,
    kernel_hat: Vec<Complex64>,
}

fn chirp(s: f64, u: i64) -> Complex64 {
    // u^2 is exact in f64 for the sizes used here
    let (sn, cs) = math::sin_cos(0.5 * s * (u * u) as f64);
    Complex64::new(cs, sn)
}

impl CenteredDft {
    pub fn new(half_in: usize, half_out: usize, s: f64) -> Self {
        let n_in = 2 * half_in + 1;
        let n_out = 2 * half_out + 1;
        let len = (n_in + n_out - 1).next_power_of_two();
        let fft = Fft::new(len);
        let (k, j) = (half_in as i64, half_out as i64);
        let pre = (-k..=k).map(|u| chirp(s, u)).collect();
        let post = (-j..=j).map(|v| chirp(s, v)).collect();
        // b[d] = exp(-i s (d + K - J)^2 / 2) with d = iv - iu
        let mut kernel_hat = alloc::vec![Complex64::new(0.0, 0.0); len];
        for d in -(n_in as i64 - 1)..=(n_out as i64 - 1) {
            let idx = if d >= 0 { d as usize } else { len - (-d) as usize };
            kernel_hat[idx] = chirp(s, d + k - j).conj();
        }
        fft.forward(&mut kernel_hat);
        Self {
            half_in,
            half_out,
            fft,
            pre,
            post,
            kernel_hat,
        }
    }

    pub fn input_len(&self) -> usize {
        2 * self.half_in + 1
    }

    pub fn output_len(&self) -> usize {
        2 * self.half_out + 1
    }

    /// Scratch buffer of the right size for [`CenteredDft::apply`].
    pub fn scratch(&self) -> Vec<Complex64> {
        alloc::vec![Complex64::new(0.0, 0.0); self.fft.len()]
    }

    pub fn apply(&self, input: &[Complex64], out: &mut [Complex64], scratch: &mut [Complex64]) {
        assert_eq!(input.len(), self.input_len());
        assert_eq!(out.len(), self.output_len());
        let len = self.fft.len();
        for (dst, (a, p)) in scratch.iter_mut().zip(input.iter().zip(&self.pre)) {
            *dst = a * p;
        }
        for z in scratch[input.len()..].iter_mut() {
            *z = Complex64::new(0.0, 0.0);
        }
        self.fft.forward(scratch);
        for (z, k) in scratch.iter_mut().zip(&self.kernel_hat) {
            *z *= k;
        }
        self.fft.inverse(scratch);
        let scale = 1.0 / len as f64;
        for ((o, z), p) in out.iter_mut().zip(scratch.iter()).zip(&self.post) {
            *o = z * p * scale;
        }
    }
}
