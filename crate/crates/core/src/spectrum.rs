//! Discrete Fourier transforms and spectral peak picking.
//!
//! Power-of-two lengths use an iterative radix-2 transform; other lengths go
//! through Bluestein's chirp-z identity on top of it.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// In-place forward DFT, `X_k = sum_j x_j exp(-2 pi i j k / n)`, for any length.
pub fn fft(buf: &mut [Complex64]) {
    transform(buf, false);
}

/// In-place inverse DFT including the `1/n` factor.
pub fn ifft(buf: &mut [Complex64]) {
    transform(buf, true);
    let n = buf.len();
    if n > 0 {
        let s = 1.0 / n as f64;
        for v in buf.iter_mut() {
            *v *= s;
        }
    }
}

fn transform(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    if n <= 1 {
        return;
    }
    if n.is_power_of_two() {
        radix2(buf, inverse);
    } else {
        bluestein(buf, inverse);
    }
}

fn radix2(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j ^= bit;
        if i < j {
            buf.swap(i, j);
        }
    }

    let sign = if inverse { 1.0 } else { -1.0 };
    let twiddles: Vec<Complex64> = (0..n / 2)
        .map(|k| {
            let ang = sign * 2.0 * PI * k as f64 / n as f64;
            Complex64::new(libm::cos(ang), libm::sin(ang))
        })
        .collect();

    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let u = buf[start + k];
                let v = buf[start + k + half] * twiddles[k * stride];
                buf[start + k] = u + v;
                buf[start + k + half] = u - v;
            }
        }
        len <<= 1;
    }
}

fn bluestein(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    let m = (2 * n - 1).next_power_of_two();
    let sign = if inverse { 1.0 } else { -1.0 };
    let two_n = 2 * n as u128;
    let chirp: Vec<Complex64> = (0..n)
        .map(|k| {
            let k2 = (k as u128 * k as u128) % two_n;
            let ang = sign * PI * k2 as f64 / n as f64;
            Complex64::new(libm::cos(ang), libm::sin(ang))
        })
        .collect();

    let mut a = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..n {
        a[k] = buf[k] * chirp[k];
    }
    let mut b = vec![Complex64::new(0.0, 0.0); m];
    b[0] = chirp[0].conj();
    for k in 1..n {
        let c = chirp[k].conj();
        b[k] = c;
        b[m - k] = c;
    }
    radix2(&mut a, false);
    radix2(&mut b, false);
    for (x, y) in a.iter_mut().zip(b.iter()) {
        *x *= *y;
    }
    radix2(&mut a, true);
    let s = 1.0 / m as f64;
    for k in 0..n {
        buf[k] = a[k] * s * chirp[k];
    }
}

/// One-sided magnitude spectrum `|X_k|`, `k = 0..=n_fft/2`, of `x` zero-padded to `n_fft`.
pub fn magnitude_spectrum(x: &[f64], n_fft: usize) -> Vec<f64> {
    let n_fft = n_fft.max(x.len()).max(1);
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    for (b, &v) in buf.iter_mut().zip(x) {
        b.re = v;
    }
    fft(&mut buf);
    buf[..=n_fft / 2].iter().map(|c| c.norm()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    /// Refined peak frequency in Hz.
    pub frequency_hz: f64,
    /// Integer bin of the raw maximum in the padded spectrum.
    pub bin: usize,
    /// Bin spacing of the padded spectrum in Hz.
    pub resolution_hz: f64,
}

/// Zero-padding factor used for peak picking.
pub const DEFAULT_PAD_FACTOR: usize = 8;

/// In-band peak of the mean-removed spectrum of `x` with parabolic refinement.
///
/// The input is zero-padded to the next power of two at or above `pad_factor * len`.
pub fn spectral_peak(
    x: &[f64],
    sample_rate: f64,
    f_min: f64,
    f_max: f64,
    pad_factor: usize,
) -> Result<Peak> {
    if !(sample_rate > 0.0) {
        return Err(Error::InvalidParameter("sample_rate must be positive"));
    }
    if !(f_min < f_max) || f_min < 0.0 {
        return Err(Error::InvalidParameter(
            "band must satisfy 0 <= f_min < f_max",
        ));
    }
    if x.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            available: x.len(),
        });
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let n_fft = (x.len() * pad_factor.max(1)).next_power_of_two();
    let mag = magnitude_spectrum(&centered, n_fft);
    let df = sample_rate / n_fft as f64;

    let lo = libm::ceil(f_min / df) as usize;
    let hi = (libm::floor(f_max / df) as usize).min(mag.len() - 1);
    if lo > hi {
        return Err(Error::NoPeak { f_min, f_max });
    }
    let mut k_best = lo;
    let mut lo_val = f64::INFINITY;
    for k in lo..=hi {
        if mag[k] > mag[k_best] {
            k_best = k;
        }
        lo_val = lo_val.min(mag[k]);
    }
    let peak = mag[k_best];
    let scale = x.iter().fold(0.0f64, |acc, v| acc.max(libm::fabs(*v))) * x.len() as f64;
    if !(peak > 1e-10 * scale) || peak - lo_val <= 1e-9 * peak {
        return Err(Error::NoPeak { f_min, f_max });
    }

    let mut delta = 0.0;
    if k_best > 0 && k_best + 1 < mag.len() {
        let (ym, y0, yp) = (mag[k_best - 1], mag[k_best], mag[k_best + 1]);
        let denom = ym - 2.0 * y0 + yp;
        if y0 >= ym && y0 >= yp && denom < 0.0 {
            delta = (0.5 * (ym - yp) / denom).clamp(-0.5, 0.5);
        }
    }
    Ok(Peak {
        frequency_hz: (k_best as f64 + delta) * df,
        bin: k_best,
        resolution_hz: df,
    })
}

/// Frequency of the largest non-DC bin of the unpadded spectrum, with the bin width.
///
/// No refinement is applied, so the result is quantized to multiples of `sample_rate / len`.
pub fn dominant_frequency(x: &[f64], sample_rate: f64) -> Result<(f64, f64)> {
    if x.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            available: x.len(),
        });
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let mag = magnitude_spectrum(&centered, x.len());
    let mut k_best = 1;
    for k in 1..mag.len() {
        if mag[k] > mag[k_best] {
            k_best = k;
        }
    }
    if !(mag[k_best] > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let df = sample_rate / x.len() as f64;
    Ok((k_best as f64 * df, df))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .fold(Complex64::new(0.0, 0.0), |acc, (j, v)| {
                        let ang = -2.0 * PI * ((j * k) % n) as f64 / n as f64;
                        acc + v * Complex64::new(libm::cos(ang), libm::sin(ang))
                    })
            })
            .collect()
    }

    fn test_vector(n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|i| {
                Complex64::new(
                    libm::sin(i as f64 * 0.37) + 0.1 * i as f64,
                    libm::cos(i as f64 * 1.3),
                )
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft_for_many_lengths() {
        for n in [1usize, 2, 3, 5, 8, 12, 17, 64, 100, 127, 500] {
            let x = test_vector(n);
            let want = naive_dft(&x);
            let mut got = x.clone();
            fft(&mut got);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).norm() < 1e-9 * (1.0 + n as f64), "n={n}");
            }
        }
    }

    #[test]
    fn inverse_round_trips() {
        for n in [16usize, 30, 97] {
            let x = test_vector(n);
            let mut y = x.clone();
            fft(&mut y);
            ifft(&mut y);
            for (a, b) in x.iter().zip(&y) {
                assert!((a - b).norm() < 1e-12 * n as f64);
            }
        }
    }

    #[test]
    fn peak_refines_between_bins() {
        let fs = 30.0;
        let x: Vec<f64> = (0..450)
            .map(|i| libm::sin(2.0 * PI * 0.3 * i as f64 / fs))
            .collect();
        let p = spectral_peak(&x, fs, 0.1, 0.583, DEFAULT_PAD_FACTOR).unwrap();
        assert!((p.frequency_hz - 0.3).abs() < 0.005, "{}", p.frequency_hz);
    }

    #[test]
    fn silent_signal_has_no_peak() {
        let x = vec![0.0; 300];
        assert!(matches!(
            spectral_peak(&x, 30.0, 0.1, 0.5, 8),
            Err(Error::NoPeak { .. })
        ));
        let c = vec![2.5; 300];
        assert!(matches!(
            spectral_peak(&c, 30.0, 0.1, 0.5, 8),
            Err(Error::NoPeak { .. })
        ));
    }

    #[test]
    fn dominant_frequency_is_bin_exact_for_integer_cycles() {
        let x: Vec<f64> = (0..500)
            .map(|i| libm::sin(2.0 * PI * 7.0 * i as f64 / 500.0))
            .collect();
        let (f, df) = dominant_frequency(&x, 100.0).unwrap();
        assert_eq!(df, 0.2);
        assert!((f - 1.4).abs() < 1e-12);
    }
}
