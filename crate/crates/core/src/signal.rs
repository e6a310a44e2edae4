//! Periodic generating signals, their sampled form, and normalization.

use alloc::string::ToString;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::str::FromStr;

use crate::error::{Error, Result};

/// One sinusoidal component `G sin(w t + theta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    pub amplitude: f64,
    /// Angular frequency in rad/s.
    pub omega: f64,
}

/// `g(t) = sum_k G_k sin(w_k t + theta)` with a phase shared by all harmonics.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingSignal {
    harmonics: Vec<Harmonic>,
    phase: f64,
}

impl GeneratingSignal {
    pub fn new(harmonics: Vec<Harmonic>, phase: f64) -> Result<Self> {
        if harmonics.is_empty() {
            return Err(Error::EmptySignal);
        }
        let mut prev = 0.0;
        for h in &harmonics {
            if !h.amplitude.is_finite() || !h.omega.is_finite() {
                return Err(Error::InvalidParameter("harmonic values must be finite"));
            }
            if !(h.omega > prev) {
                return Err(Error::InvalidParameter(
                    "harmonic frequencies must be positive and strictly increasing",
                ));
            }
            prev = h.omega;
        }
        if !phase.is_finite() {
            return Err(Error::InvalidParameter("phase must be finite"));
        }
        Ok(Self { harmonics, phase })
    }

    /// Builds a signal from `(amplitude, frequency in Hz)` pairs.
    pub fn from_hz(components: &[(f64, f64)], phase: f64) -> Result<Self> {
        let harmonics = components
            .iter()
            .map(|&(amplitude, hz)| Harmonic {
                amplitude,
                omega: 2.0 * PI * hz,
            })
            .collect();
        Self::new(harmonics, phase)
    }

    pub fn harmonics(&self) -> &[Harmonic] {
        &self.harmonics
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    pub fn n_harmonics(&self) -> usize {
        self.harmonics.len()
    }

    /// Angular frequency of the lowest harmonic.
    pub fn fundamental(&self) -> f64 {
        self.harmonics[0].omega
    }

    pub fn fundamental_hz(&self) -> f64 {
        self.fundamental() / (2.0 * PI)
    }

    pub fn max_omega(&self) -> f64 {
        self.harmonics[self.harmonics.len() - 1].omega
    }

    pub fn value_at(&self, t: f64) -> f64 {
        self.harmonics
            .iter()
            .map(|h| h.amplitude * libm::sin(h.omega * t + self.phase))
            .sum()
    }

    /// Time-average RMS over a common period, `sqrt(sum G_k^2 / 2)`.
    pub fn period_norm(&self) -> f64 {
        libm::sqrt(
            self.harmonics
                .iter()
                .map(|h| h.amplitude * h.amplitude)
                .sum::<f64>()
                / 2.0,
        )
    }
}

/// The seven reference signals with fundamentals between 2 and 5 Hz.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    Single,
    Two,
    Three,
    Four,
    Sawtooth,
    Square,
    Triangle,
}

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::Single,
        Preset::Two,
        Preset::Three,
        Preset::Four,
        Preset::Sawtooth,
        Preset::Square,
        Preset::Triangle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Single => "single",
            Preset::Two => "two",
            Preset::Three => "three",
            Preset::Four => "four",
            Preset::Sawtooth => "sawtooth",
            Preset::Square => "square",
            Preset::Triangle => "triangle",
        }
    }

    pub fn signal(self) -> GeneratingSignal {
        table1_preset(self)
    }
}

impl core::fmt::Display for Preset {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

const WAVE_TERMS: usize = 10;

/// Harmonic set of a preset, in Hz, with `theta = 0`.
pub fn table1_preset(preset: Preset) -> GeneratingSignal {
    let comps: Vec<(f64, f64)> = match preset {
        Preset::Single => [(1.0, 5.0)].to_vec(),
        Preset::Two => [(1.0, 2.5), (1.0 / 3.0, 7.5)].to_vec(),
        Preset::Three => [(1.0, 2.0), (1.0 / 3.0, 6.0), (0.5, 12.0)].to_vec(),
        Preset::Four => [
            (1.0, 2.5),
            (1.0 / 6.0, 5.0),
            (1.0 / 8.0, 10.0),
            (1.0 / 12.0, 12.5),
        ]
        .to_vec(),
        Preset::Sawtooth => (1..=WAVE_TERMS)
            .map(|k| (1.0 / k as f64, 2.0 * k as f64))
            .collect(),
        Preset::Square => (1..=WAVE_TERMS)
            .map(|k| {
                let odd = (2 * k - 1) as f64;
                (1.0 / odd, 2.0 * odd)
            })
            .collect(),
        Preset::Triangle => (1..=WAVE_TERMS)
            .map(|k| {
                let odd = (2 * k - 1) as f64;
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                (sign / (odd * odd), 2.0 * odd)
            })
            .collect(),
    };
    GeneratingSignal::from_hz(&comps, 0.0).expect("preset tables are valid")
}

/// Uniformly sampled real signal starting at `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    samples: Vec<f64>,
    sample_rate: f64,
    t0: f64,
}

impl SampledSignal {
    pub fn new(samples: Vec<f64>, sample_rate: f64, t0: f64) -> Result<Self> {
        if !(sample_rate > 0.0) || !sample_rate.is_finite() {
            return Err(Error::InvalidParameter(
                "sample_rate must be positive and finite",
            ));
        }
        if !t0.is_finite() || samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("samples must be finite"));
        }
        Ok(Self {
            samples,
            sample_rate,
            t0,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, m: usize) -> f64 {
        self.t0 + m as f64 / self.sample_rate
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }
}

/// Number of samples covering `duration` seconds at `sample_rate`.
pub fn sample_count(sample_rate: f64, duration: f64) -> usize {
    libm::round(duration * sample_rate) as usize
}

pub fn synth(
    sig: &GeneratingSignal,
    sample_rate: f64,
    duration: f64,
    t0: f64,
) -> Result<SampledSignal> {
    if !(duration > 0.0) {
        return Err(Error::InvalidParameter("duration must be positive"));
    }
    check_nyquist(sig, sample_rate)?;
    let n = sample_count(sample_rate, duration);
    if n == 0 {
        return Err(Error::InvalidParameter(
            "duration is shorter than one sample",
        ));
    }
    let samples = (0..n)
        .map(|m| sig.value_at(t0 + m as f64 / sample_rate))
        .collect();
    SampledSignal::new(samples, sample_rate, t0)
}

/// Fails when `sample_rate` does not exceed twice the highest harmonic frequency.
pub fn check_nyquist(sig: &GeneratingSignal, sample_rate: f64) -> Result<()> {
    let max_frequency = sig.max_omega() / (2.0 * PI);
    if !(sample_rate > 2.0 * max_frequency) {
        return Err(Error::NyquistViolation {
            sample_rate,
            max_frequency,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalizeMode {
    ZeroMean,
    UnitNorm,
    Both,
}

pub fn normalize(s: &SampledSignal, mode: NormalizeMode) -> Result<SampledSignal> {
    if s.is_empty() {
        return Err(Error::InvalidParameter("cannot normalize an empty signal"));
    }
    let mut out = s.samples.clone();
    match mode {
        NormalizeMode::ZeroMean => remove_mean(&mut out),
        NormalizeMode::UnitNorm => scale_to_unit_norm(&mut out)?,
        NormalizeMode::Both => normalize_in_place(&mut out)?,
    }
    SampledSignal::new(out, s.sample_rate, s.t0)
}

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Time-average norm `sqrt(mean(x^2))`.
pub fn period_norm(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    libm::sqrt(x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64)
}

pub fn remove_mean(x: &mut [f64]) {
    let m = mean(x);
    for v in x.iter_mut() {
        *v -= m;
    }
}

pub fn scale_to_unit_norm(x: &mut [f64]) -> Result<()> {
    let n = period_norm(x);
    if !(n > 0.0) {
        return Err(Error::ZeroNorm);
    }
    for v in x.iter_mut() {
        *v /= n;
    }
    Ok(())
}

/// Zero mean, then unit period norm.
pub fn normalize_in_place(x: &mut [f64]) -> Result<()> {
    remove_mean(x);
    scale_to_unit_norm(x)
}
