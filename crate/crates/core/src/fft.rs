//! In-place radix-2 Cooley–Tukey FFT.
//!
//! Forward transform with the `e^{-2πi jk/N}` kernel, which is the sign
//! convention the density inversion in [`crate::retdist`] needs. Only
//! power-of-two lengths are supported; the inversion grid is a power of
//! two by construction.

#[allow(unused_imports)] // resolves f64 math in no_std builds; std test builds shadow it
use num_traits::Float;
use num_complex::Complex64;

/// Forward DFT of `data` in place. `data.len()` must be a power of two.
pub fn fft_forward(data: &mut [Complex64]) {
    let n = data.len();
    debug_assert!(n.is_power_of_two());
    if n <= 1 {
        return;
    }

    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            data.swap(i, j);
        }
    }

    let mut len = 2;
    while len <= n {
        let ang = -2.0 * core::f64::consts::PI / len as f64;
        let wlen = Complex64::new(ang.cos(), ang.sin());
        let mut i = 0;
        while i < n {
            let mut w = Complex64::ONE;
            for k in 0..len / 2 {
                let u = data[i + k];
                let v = data[i + k + len / 2] * w;
                data[i + k] = u + v;
                data[i + k + len / 2] = u - v;
                w *= wlen;
            }
            i += len;
        }
        len <<= 1;
    }
}
