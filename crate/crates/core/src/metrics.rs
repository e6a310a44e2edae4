//! Similarity, rate and agreement statistics.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::signal::SampledSignal;
use crate::spectrum::{spectral_peak, DEFAULT_PAD_FACTOR};

/// Largest zero-mean, unit-norm correlation over lags `-max_lag..=max_lag`.
///
/// At lag `L` the overlap `x[i]`, `y[i + L]` is used, centred and scaled on its own.
pub fn ncc(x: &[f64], y: &[f64], max_lag: usize) -> Result<f64> {
    let n = x.len().min(y.len());
    if n < 2 {
        return Err(Error::TooShort {
            needed: 2,
            available: n,
        });
    }
    let max_lag = max_lag.min(n - 2);
    let mut best: Option<f64> = None;
    for lag in -(max_lag as isize)..=(max_lag as isize) {
        let (xs, ys) = if lag >= 0 {
            let l = lag as usize;
            let len = n.min(y.len() - l).min(x.len());
            (&x[..len], &y[l..l + len])
        } else {
            let l = (-lag) as usize;
            let len = n.min(x.len() - l).min(y.len());
            (&x[l..l + len], &y[..len])
        };
        if let Some(r) = centred_cosine(xs, ys) {
            best = Some(best.map_or(r, |b: f64| b.max(r)));
        }
    }
    best.ok_or(Error::ZeroVariance)
}

/// `ncc` for two signals at the same sample rate.
pub fn ncc_signals(x: &SampledSignal, y: &SampledSignal, max_lag: usize) -> Result<f64> {
    if x.sample_rate() != y.sample_rate() {
        return Err(Error::InvalidParameter("ncc needs equal sample rates"));
    }
    ncc(x.samples(), y.samples(), max_lag)
}

fn centred_cosine(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if !(sxx > 0.0) || !(syy > 0.0) {
        return None;
    }
    Some((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// Pearson correlation of paired samples.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            available: x.len(),
        });
    }
    centred_cosine(x, y).ok_or(Error::ZeroVariance)
}

pub const MIN_RR_WINDOW_S: f64 = 5.0;
pub const MAX_RR_WINDOW_S: f64 = 60.0;

/// Breaths per minute over consecutive non-overlapping windows, stamped at window centres.
pub fn rr_estimate(rp: &SampledSignal, window_s: f64, band: (f64, f64)) -> Result<Vec<(f64, f64)>> {
    let duration = rp.duration();
    if !(MIN_RR_WINDOW_S..=MAX_RR_WINDOW_S).contains(&window_s) || window_s > duration + 1e-9 {
        return Err(Error::WindowTooLong {
            window_s,
            duration_s: duration,
        });
    }
    let fs = rp.sample_rate();
    if !(band.0 > 0.0 && band.0 < band.1 && band.1 < fs / 2.0) {
        return Err(Error::InvalidParameter(
            "band must satisfy 0 < f_min < f_max < Nyquist",
        ));
    }
    let n_win = libm::round(window_s * fs) as usize;
    let count = rp.len() / n_win;
    let mut out = Vec::with_capacity(count);
    for j in 0..count {
        let seg = &rp.samples()[j * n_win..(j + 1) * n_win];
        let peak = spectral_peak(seg, fs, band.0, band.1, DEFAULT_PAD_FACTOR)?;
        let t = rp.t0() + (j as f64 + 0.5) * n_win as f64 / fs;
        out.push((t, 60.0 * peak.frequency_hz));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgreementReport {
    /// `None` when either series has zero variance.
    pub pearson_r: Option<f64>,
    pub bias: f64,
    pub sd_diff: f64,
    pub limits_of_agreement: (f64, f64),
    pub pct_within_ci: f64,
    pub ci_halfwidth: f64,
    pub n: usize,
}

/// Bias, 95% limits of agreement and the share of pairs within `ci_halfwidth`.
pub fn bland_altman(est: &[f64], reference: &[f64], ci_halfwidth: f64) -> Result<AgreementReport> {
    if est.len() != reference.len() {
        return Err(Error::LengthMismatch {
            expected: reference.len(),
            actual: est.len(),
        });
    }
    let n = est.len();
    if n < 2 {
        return Err(Error::TooShort {
            needed: 2,
            available: n,
        });
    }
    let diffs: Vec<f64> = est.iter().zip(reference).map(|(e, r)| e - r).collect();
    let bias = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - bias) * (d - bias)).sum::<f64>() / (n - 1) as f64;
    let sd_diff = libm::sqrt(var);
    let within = diffs
        .iter()
        .filter(|d| libm::fabs(**d) <= ci_halfwidth)
        .count();
    Ok(AgreementReport {
        pearson_r: centred_cosine(est, reference),
        bias,
        sd_diff,
        limits_of_agreement: (bias - 1.96 * sd_diff, bias + 1.96 * sd_diff),
        pct_within_ci: 100.0 * within as f64 / n as f64,
        ci_halfwidth,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::PI;

    fn wave(n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| {
                libm::sin(0.21 * i as f64) + 0.3 * libm::cos(0.05 * i as f64 * i as f64 / 40.0)
            })
            .collect()
    }

    #[test]
    fn ncc_identity_and_negation() {
        let x = wave(200);
        assert!((ncc(&x, &x, 5).unwrap() - 1.0).abs() < 1e-12);
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((ncc(&x, &y, 0).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn ncc_finds_a_delay() {
        let x = wave(300);
        let mut y = vec![0.0; 300];
        y[3..].copy_from_slice(&x[..297]);
        assert!((ncc(&x, &y, 3).unwrap() - 1.0).abs() < 1e-9);
        assert!(ncc(&x, &y, 0).unwrap() < 0.999);
    }

    #[test]
    fn ncc_rejects_constant_input() {
        assert_eq!(ncc(&[1.0; 10], &wave(10), 2), Err(Error::ZeroVariance));
    }

    #[test]
    fn rr_of_steady_tone() {
        let fs = 30.0;
        let x: Vec<f64> = (0..1800)
            .map(|i| libm::sin(2.0 * PI * 0.3 * i as f64 / fs))
            .collect();
        let s = SampledSignal::new(x, fs, 0.0).unwrap();
        let rr = rr_estimate(&s, 15.0, (0.1, 0.583)).unwrap();
        assert_eq!(rr.len(), 4);
        for (t, bpm) in &rr {
            assert!((bpm - 18.0).abs() < 0.5, "{t} {bpm}");
        }
        assert_eq!(rr[0].0, 7.5);
        assert!(matches!(
            rr_estimate(&s, 61.0, (0.1, 0.5)),
            Err(Error::WindowTooLong { .. })
        ));
        let silent = SampledSignal::new(vec![0.0; 900], fs, 0.0).unwrap();
        assert!(matches!(
            rr_estimate(&silent, 15.0, (0.1, 0.5)),
            Err(Error::NoPeak { .. })
        ));
    }

    #[test]
    fn bland_altman_simple_cases() {
        let r = [10.0, 12.0, 15.0, 18.0];
        let same = bland_altman(&r, &r, 3.0).unwrap();
        assert_eq!(same.bias, 0.0);
        assert_eq!(same.pct_within_ci, 100.0);
        assert!((same.pearson_r.unwrap() - 1.0).abs() < 1e-12);
        let plus: Vec<f64> = r.iter().map(|v| v + 1.0).collect();
        let shifted = bland_altman(&plus, &r, 0.5).unwrap();
        assert!((shifted.bias - 1.0).abs() < 1e-12);
        assert!(shifted.sd_diff < 1e-12);
        assert_eq!(shifted.pct_within_ci, 0.0);
        assert!(matches!(
            bland_altman(&r, &r[..3], 1.0),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
