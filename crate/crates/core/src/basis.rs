//! Orthonormal quadratic basis over one period and projection onto it.
//!
//! The inner product is the time average over one symmetric period,
//! sampled on the midpoint grid `t_m = -pi/w0 + (m + 0.5) (2 pi / w0) / M`.
//! The basis is `{1, t, t^2}` orthonormalized under that discrete average. Written
//! in `u = w0 t / pi` it is
//!
//! ```text
//! psi1 = (u^2 - m2) / sqrt(m4 - m2^2)    psi2 = u / sqrt(m2)    psi3 = 1
//! ```
//!
//! where `m2`, `m4` are the grid moments of `u`. As `M` grows these tend to the
//! continuum forms `(3 sqrt5 / 2 pi^2) w0^2 t^2 - sqrt5/2` and `(sqrt3/pi) w0 t`
//! with error `O(1/M^2)`, while the discrete Gram matrix is the identity to
//! rounding at every `M`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};

pub const DEFAULT_BASIS_SAMPLES: usize = 256;
pub const MIN_BASIS_SAMPLES: usize = 64;

/// `|a|` of a unit-amplitude pure tone at the basis frequency, `3 sqrt5 / pi^2`.
pub const PURE_TONE_A: f64 = 0.679_683_162_555_021;
/// `|b|` of a unit-amplitude pure tone at the basis frequency, `sqrt3 / pi`.
pub const PURE_TONE_B: f64 = 0.551_328_895_421_792_1;

/// Continuum `psi1(t)` for basis frequency `w0`.
pub fn analytic_psi1(w0: f64, t: f64) -> f64 {
    3.0 * libm::sqrt(5.0) / (2.0 * PI * PI) * w0 * w0 * t * t - libm::sqrt(5.0) / 2.0
}

/// Continuum `psi2(t)` for basis frequency `w0`.
pub fn analytic_psi2(w0: f64, t: f64) -> f64 {
    libm::sqrt(3.0) / PI * w0 * t
}

/// Continuum `psi3(t)`.
pub fn analytic_psi3(_w0: f64, _t: f64) -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticBasis {
    w0: f64,
    times: Vec<f64>,
    psi1: Vec<f64>,
    psi2: Vec<f64>,
}

impl QuadraticBasis {
    pub fn new(w0: f64, m: usize) -> Result<Self> {
        if !(w0 > 0.0) || !w0.is_finite() {
            return Err(Error::InvalidParameter(
                "basis frequency must be positive and finite",
            ));
        }
        if m < MIN_BASIS_SAMPLES {
            return Err(Error::InvalidParameter(
                "basis needs at least 64 samples per period",
            ));
        }
        // mirrored so that odd integrands cancel pairwise
        let mut u = vec![0.0; m];
        for i in 0..m.div_ceil(2) {
            let v = -1.0 + (2 * i + 1) as f64 / m as f64;
            u[i] = v;
            u[m - 1 - i] = -v;
        }
        let m2 = u.iter().map(|v| v * v).sum::<f64>() / m as f64;
        let m4 = u.iter().map(|v| v * v * v * v).sum::<f64>() / m as f64;
        let s1 = libm::sqrt(m4 - m2 * m2);
        let s2 = libm::sqrt(m2);
        let psi1 = u.iter().map(|v| (v * v - m2) / s1).collect();
        let psi2 = u.iter().map(|v| v / s2).collect();
        let times = u.iter().map(|v| v * PI / w0).collect();
        Ok(Self {
            w0,
            times,
            psi1,
            psi2,
        })
    }

    pub fn w0(&self) -> f64 {
        self.w0
    }

    /// Number of grid samples `M`.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// One basis period `2 pi / w0` in seconds.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.w0
    }

    /// Grid times `t_m`, symmetric about zero.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn psi1(&self) -> &[f64] {
        &self.psi1
    }

    pub fn psi2(&self) -> &[f64] {
        &self.psi2
    }

    /// The three basis functions sampled on the grid.
    pub fn eval(&self) -> [Vec<f64>; 3] {
        [self.psi1.clone(), self.psi2.clone(), vec![1.0; self.len()]]
    }

    /// Time average `(1/M) sum x[m] y[m]`.
    pub fn inner_product(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_len(x)?;
        self.check_len(y)?;
        Ok(dot(x, y) / self.len() as f64)
    }

    pub fn project(&self, s: &[f64]) -> Result<CoeffPoint> {
        self.check_len(s)?;
        let m = self.len() as f64;
        Ok(CoeffPoint {
            a: dot(s, &self.psi1) / m,
            b: dot(s, &self.psi2) / m,
            c: s.iter().sum::<f64>() / m,
        })
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                actual: x.len(),
            });
        }
        Ok(())
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn eval_basis(basis: &QuadraticBasis) -> [Vec<f64>; 3] {
    basis.eval()
}

pub fn inner_product(x: &[f64], y: &[f64], basis: &QuadraticBasis) -> Result<f64> {
    basis.inner_product(x, y)
}

pub fn project(s: &[f64], basis: &QuadraticBasis) -> Result<CoeffPoint> {
    basis.project(s)
}

/// Quadratic-fit coordinates of one period.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CoeffPoint {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl CoeffPoint {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b, c: 0.0 }
    }

    pub fn scaled(self, k: f64) -> Self {
        Self {
            a: self.a * k,
            b: self.b * k,
            c: self.c * k,
        }
    }
}

/// Precomputed linear interpolation from a uniformly sampled stream onto the basis grid.
///
/// Sample `start` of the stream is placed at `t = -pi/w0`; grid point `m` sits at
/// fractional sample `start + (m + 0.5) P fs / M` with `P` the basis period.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSampler {
    index: Vec<usize>,
    frac: Vec<f64>,
}

impl WindowSampler {
    pub fn new(
        n_samples: usize,
        sample_rate: f64,
        start: usize,
        basis: &QuadraticBasis,
    ) -> Result<Self> {
        let m = basis.len();
        let span = basis.period() * sample_rate;
        let last = start as f64 + (m as f64 - 0.5) * span / m as f64;
        if n_samples == 0 || last > (n_samples - 1) as f64 {
            let needed = libm::ceil(last) as usize + 1;
            return Err(Error::TooShort {
                needed,
                available: n_samples,
            });
        }
        let mut index = Vec::with_capacity(m);
        let mut frac = Vec::with_capacity(m);
        for i in 0..m {
            let pos = start as f64 + (i as f64 + 0.5) * span / m as f64;
            let k = (libm::floor(pos) as usize).min(n_samples - 1);
            index.push(k);
            frac.push(pos - k as f64);
        }
        Ok(Self { index, frac })
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// Resampled values; `stream` must be the length the sampler was built for.
    pub fn sample_into(&self, stream: &[f64], out: &mut [f64]) {
        let n = stream.len();
        for ((o, &k), &f) in out.iter_mut().zip(&self.index).zip(&self.frac) {
            *o = if k + 1 < n {
                stream[k] * (1.0 - f) + stream[k + 1] * f
            } else {
                stream[k]
            };
        }
    }

    pub fn sample(&self, stream: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.sample_into(stream, &mut out);
        out
    }
}

/// One basis period of `stream` from sample `start`, resampled onto the grid.
pub fn window_to_grid(
    stream: &[f64],
    sample_rate: f64,
    start: usize,
    basis: &QuadraticBasis,
) -> Result<Vec<f64>> {
    Ok(WindowSampler::new(stream.len(), sample_rate, start, basis)?.sample(stream))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gram_error(m: usize) -> f64 {
        let b = QuadraticBasis::new(3.0, m).unwrap();
        let e = b.eval();
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((b.inner_product(&e[i], &e[j]).unwrap() - want).abs());
            }
        }
        worst
    }

    #[test]
    fn gram_is_identity() {
        assert!(gram_error(64) <= 1e-4);
        assert!(gram_error(1024) <= 1e-6);
        assert!(gram_error(257) <= 1e-12);
    }

    #[test]
    fn psi3_self_product_is_one_and_parity_is_exact() {
        let b = QuadraticBasis::new(1.0, 200).unwrap();
        let e = b.eval();
        assert_eq!(b.inner_product(&e[2], &e[2]).unwrap(), 1.0);
        assert!(b.inner_product(&e[0], &e[1]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn pure_tone_constants() {
        assert!((PURE_TONE_A - 3.0 * libm::sqrt(5.0) / (PI * PI)).abs() < 1e-15);
        assert!((PURE_TONE_B - libm::sqrt(3.0) / PI).abs() < 1e-15);
    }

    #[test]
    fn analytic_values() {
        assert!((analytic_psi1(2.0, 0.0) + libm::sqrt(5.0) / 2.0).abs() < 1e-15);
        assert!((analytic_psi2(2.0, PI / 2.0) - libm::sqrt(3.0)).abs() < 1e-15);
        assert_eq!(analytic_psi3(2.0, 0.7), 1.0);
    }

    #[test]
    fn grid_basis_converges_to_analytic_quadratically() {
        let w0 = 2.0 * PI * 0.25;
        let dev = |m: usize| {
            let b = QuadraticBasis::new(w0, m).unwrap();
            let mut worst = 0.0f64;
            for (i, &t) in b.times().iter().enumerate() {
                worst = worst.max((b.psi1()[i] - analytic_psi1(w0, t)).abs());
                worst = worst.max((b.psi2()[i] - analytic_psi2(w0, t)).abs());
            }
            worst
        };
        let (d64, d256, d1024) = (dev(64), dev(256), dev(1024));
        assert!(d64 < 2e-3);
        assert!(
            d256 < d64 / 12.0 && d1024 < d256 / 12.0,
            "{d64} {d256} {d1024}"
        );
    }

    #[test]
    fn sine_squared_averages_to_half() {
        let w0 = 7.0;
        let b = QuadraticBasis::new(w0, 256).unwrap();
        let s: Vec<f64> = b.times().iter().map(|t| libm::sin(w0 * t)).collect();
        assert!((b.inner_product(&s, &s).unwrap() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn pure_tone_projection_closed_form() {
        let w0 = 2.0 * PI * 5.0;
        let b = QuadraticBasis::new(w0, 256).unwrap();
        for j in 0..16 {
            let phi = -PI + j as f64 * PI / 8.0;
            let s: Vec<f64> = b.times().iter().map(|t| libm::sin(w0 * t + phi)).collect();
            let p = b.project(&s).unwrap();
            assert!((p.a + PURE_TONE_A * libm::sin(phi)).abs() < 1e-4);
            assert!((p.b - PURE_TONE_B * libm::cos(phi)).abs() < 1e-4);
            assert!(p.c.abs() < 1e-12);
            let q = b
                .project(&s.iter().map(|v| 2.5 * v).collect::<Vec<_>>())
                .unwrap();
            assert!((q.a - 2.5 * p.a).abs() < 1e-12 && (q.b - 2.5 * p.b).abs() < 1e-12);
        }
    }

    #[test]
    fn length_mismatch_is_reported() {
        let b = QuadraticBasis::new(1.0, 64).unwrap();
        assert_eq!(
            b.project(&[0.0; 10]),
            Err(Error::LengthMismatch {
                expected: 64,
                actual: 10
            })
        );
        assert!(QuadraticBasis::new(1.0, 32).is_err());
    }

    #[test]
    fn window_sampler_reproduces_linear_streams() {
        let fs = 100.0;
        let w0 = 2.0 * PI * 2.0;
        let b = QuadraticBasis::new(w0, 64).unwrap();
        let stream: Vec<f64> = (0..200).map(|i| 0.5 * i as f64 - 3.0).collect();
        let win = window_to_grid(&stream, fs, 10, &b).unwrap();
        for (m, v) in win.iter().enumerate() {
            let pos = 10.0 + (m as f64 + 0.5) * 50.0 / 64.0;
            assert!((v - (0.5 * pos - 3.0)).abs() < 1e-12);
        }
        assert!(matches!(
            window_to_grid(&stream[..40], fs, 0, &b),
            Err(Error::TooShort { .. })
        ));
    }
}
