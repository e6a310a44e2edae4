//! Frame-similarity proxy, basis-frequency estimation and disk orientation.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::basis::{CoeffPoint, QuadraticBasis, WindowSampler};
use crate::error::{Error, Result};
use crate::signal::normalize_in_place;
use crate::spectrum::{spectral_peak, DEFAULT_PAD_FACTOR};

/// 6 to 35 breaths per minute, in Hz.
pub const RESPIRATORY_BAND_HZ: (f64, f64) = (0.1, 35.0 / 60.0);

/// Cosine similarity of every frame with the first one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxySignal {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
}

pub fn proxy<F, T>(frames: &[F], sample_rate: f64) -> Result<ProxySignal>
where
    F: AsRef<[T]>,
    T: Copy + Into<f64>,
{
    if frames.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            available: frames.len(),
        });
    }
    let first = frames[0].as_ref();
    let e0 = energy(first);
    if !(e0 > 0.0) {
        return Err(Error::ZeroFrame { index: 0 });
    }
    let mut samples = Vec::with_capacity(frames.len());
    for (index, f) in frames.iter().enumerate() {
        let f = f.as_ref();
        if f.len() != first.len() {
            return Err(Error::LengthMismatch {
                expected: first.len(),
                actual: f.len(),
            });
        }
        let e = energy(f);
        if !(e > 0.0) {
            return Err(Error::ZeroFrame { index });
        }
        let d: f64 = first
            .iter()
            .zip(f)
            .map(|(&a, &b)| a.into() * b.into())
            .sum();
        samples.push((d / libm::sqrt(e0 * e)).clamp(-1.0, 1.0));
    }
    Ok(ProxySignal {
        samples,
        sample_rate,
    })
}

fn energy<T: Copy + Into<f64>>(x: &[T]) -> f64 {
    x.iter()
        .map(|&v| {
            let v: f64 = v.into();
            v * v
        })
        .sum()
}

/// Angular frequency of the in-band spectral peak of mean-removed `p`.
///
/// The signal must span at least two periods of `f_min`.
pub fn fundamental(p: &[f64], sample_rate: f64, f_min: f64, f_max: f64) -> Result<f64> {
    if !(f_min > 0.0 && f_min < f_max) {
        return Err(Error::InvalidParameter(
            "band must satisfy 0 < f_min < f_max",
        ));
    }
    let needed = libm::ceil(2.0 / f_min * sample_rate) as usize;
    if p.len() < needed {
        return Err(Error::TooShort {
            needed,
            available: p.len(),
        });
    }
    let peak = spectral_peak(p, sample_rate, f_min, f_max, DEFAULT_PAD_FACTOR)?;
    Ok(2.0 * PI * peak.frequency_hz)
}

/// Projection of the first basis period of `p`, centred and unit-normalized.
pub fn orientation_point(
    p: &[f64],
    sample_rate: f64,
    basis: &QuadraticBasis,
) -> Result<CoeffPoint> {
    let sampler = WindowSampler::new(p.len(), sample_rate, 0, basis)?;
    let mut w = sampler.sample(p);
    normalize_in_place(&mut w)?;
    basis.project(&w)
}
