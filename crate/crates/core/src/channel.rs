//! Random banks of LTI channels and their noisy responses.
//!
//! A channel is reduced to a gain per harmonic plus a phase lag. Its output is
//! `x_i(t) = sum_k G_k F_i(w_k) sin(w_k t + phi_i + theta) + n_i(t)`.
//!
//! Noise levels are period norms: the time-average RMS over a period, which for white
//! noise equals the per-sample standard deviation. Each channel draws its noise from its
//! own ChaCha stream, so output never depends on the order channels are generated in.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::signal::{check_nyquist, sample_count, GeneratingSignal};

#[derive(Debug, Clone, PartialEq)]
pub enum PhaseResponse {
    /// One lag shared by every harmonic.
    Constant(f64),
    /// Independent lag per harmonic. Breaks the estimator's constant-phase assumption.
    PerHarmonic(Vec<f64>),
}

impl PhaseResponse {
    pub fn at(&self, k: usize) -> f64 {
        match self {
            PhaseResponse::Constant(phi) => *phi,
            PhaseResponse::PerHarmonic(v) => v[k],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    /// `F_i(w_k)` for each harmonic slot.
    pub gains: Vec<f64>,
    pub phase: PhaseResponse,
    /// Period norm of the additive noise.
    pub noise_sigma: f64,
}

impl ChannelSpec {
    /// Period norm of the noiseless response to `sig`.
    pub fn response_norm(&self, sig: &GeneratingSignal) -> f64 {
        let e: f64 = sig
            .harmonics()
            .iter()
            .zip(&self.gains)
            .map(|(h, f)| {
                let amp = h.amplitude * f;
                amp * amp
            })
            .sum();
        libm::sqrt(e / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseModel {
    Constant,
    PerHarmonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseKind {
    #[default]
    Gaussian,
    Uniform,
    Laplace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelBank {
    channels: Vec<ChannelSpec>,
    n_harmonics: usize,
    seed: u64,
}

impl ChannelBank {
    pub fn new(channels: Vec<ChannelSpec>, seed: u64) -> Result<Self> {
        let n_harmonics = channels
            .first()
            .map(|c| c.gains.len())
            .ok_or(Error::InvalidCount("bank needs at least one channel"))?;
        for c in &channels {
            if c.gains.len() != n_harmonics {
                return Err(Error::InvalidCount(
                    "every channel needs the same number of gains",
                ));
            }
            if let PhaseResponse::PerHarmonic(p) = &c.phase {
                if p.len() != n_harmonics {
                    return Err(Error::InvalidCount(
                        "per-harmonic phases must match the gain count",
                    ));
                }
            }
            if !(c.noise_sigma >= 0.0) {
                return Err(Error::InvalidParameter("noise_sigma must be non-negative"));
            }
        }
        Ok(Self {
            channels,
            n_harmonics,
            seed,
        })
    }

    pub fn channels(&self) -> &[ChannelSpec] {
        &self.channels
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn n_harmonics(&self) -> usize {
        self.n_harmonics
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Same channels with every noise level set to `sigma`.
    pub fn with_noise_sigma(mut self, sigma: f64) -> Self {
        for c in &mut self.channels {
            c.noise_sigma = sigma;
        }
        self
    }
}

/// Gains `U[0,1]` and phases `U[-pi,pi]`, one constant phase per channel.
pub fn random_bank(
    n_channels: usize,
    n_harmonics: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<ChannelBank> {
    random_bank_with(
        n_channels,
        n_harmonics,
        noise_sigma,
        seed,
        PhaseModel::Constant,
    )
}

pub fn random_bank_with(
    n_channels: usize,
    n_harmonics: usize,
    noise_sigma: f64,
    seed: u64,
    phase_model: PhaseModel,
) -> Result<ChannelBank> {
    if n_channels == 0 {
        return Err(Error::InvalidCount("n_channels must be at least 1"));
    }
    if n_harmonics == 0 {
        return Err(Error::InvalidCount("n_harmonics must be at least 1"));
    }
    if !(noise_sigma >= 0.0) {
        return Err(Error::InvalidParameter("noise_sigma must be non-negative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut channels = Vec::with_capacity(n_channels);
    for _ in 0..n_channels {
        let gains: Vec<f64> = (0..n_harmonics).map(|_| rng.random::<f64>()).collect();
        let phase = match phase_model {
            PhaseModel::Constant => PhaseResponse::Constant(uniform_phase(&mut rng)),
            PhaseModel::PerHarmonic => PhaseResponse::PerHarmonic(
                (0..n_harmonics).map(|_| uniform_phase(&mut rng)).collect(),
            ),
        };
        channels.push(ChannelSpec {
            gains,
            phase,
            noise_sigma,
        });
    }
    ChannelBank::new(channels, seed)
}

fn uniform_phase(rng: &mut ChaCha8Rng) -> f64 {
    -PI + 2.0 * PI * rng.random::<f64>()
}

/// Channel-major matrix of equally long streams.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    n_channels: usize,
    n_samples: usize,
    sample_rate: f64,
    data: Vec<f64>,
}

impl ChannelMatrix {
    pub fn new(
        n_channels: usize,
        n_samples: usize,
        sample_rate: f64,
        data: Vec<f64>,
    ) -> Result<Self> {
        if data.len() != n_channels * n_samples {
            return Err(Error::LengthMismatch {
                expected: n_channels * n_samples,
                actual: data.len(),
            });
        }
        if !(sample_rate > 0.0) {
            return Err(Error::InvalidParameter("sample_rate must be positive"));
        }
        Ok(Self {
            n_channels,
            n_samples,
            sample_rate,
            data,
        })
    }

    pub fn zeros(n_channels: usize, n_samples: usize, sample_rate: f64) -> Result<Self> {
        Self::new(
            n_channels,
            n_samples,
            sample_rate,
            vec![0.0; n_channels * n_samples],
        )
    }

    pub fn from_rows(rows: &[Vec<f64>], sample_rate: f64) -> Result<Self> {
        let n_samples = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * n_samples);
        for r in rows {
            if r.len() != n_samples {
                return Err(Error::LengthMismatch {
                    expected: n_samples,
                    actual: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), n_samples, sample_rate, data)
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_samples..(i + 1) * self.n_samples]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n_samples..(i + 1) * self.n_samples]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data
            .chunks_exact(self.n_samples.max(1))
            .take(self.n_channels)
    }

    /// Sample-wise mean over all channels.
    pub fn mean_row(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_samples];
        for r in self.rows() {
            for (a, v) in acc.iter_mut().zip(r) {
                *a += v;
            }
        }
        let n = self.n_channels.max(1) as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }

    /// Columns `start..start + len` of every row.
    pub fn columns(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.n_samples {
            return Err(Error::TooShort {
                needed: start + len,
                available: self.n_samples,
            });
        }
        let mut data = Vec::with_capacity(self.n_channels * len);
        for r in self.rows() {
            data.extend_from_slice(&r[start..start + len]);
        }
        Self::new(self.n_channels, len, self.sample_rate, data)
    }

    pub fn scale(&mut self, k: f64) {
        self.data.iter_mut().for_each(|v| *v *= k);
    }
}

/// Precomputed harmonic tables for generating channel rows one at a time.
///
/// Rows can be filled in any order or concurrently; each row depends only on its index.
#[derive(Debug, Clone)]
pub struct Responder<'a> {
    bank: &'a ChannelBank,
    amplitudes: Vec<f64>,
    sin_table: Vec<Vec<f64>>,
    cos_table: Vec<Vec<f64>>,
    n_samples: usize,
    sample_rate: f64,
    noise: NoiseKind,
    noise_seed: u64,
}

impl<'a> Responder<'a> {
    pub fn new(
        bank: &'a ChannelBank,
        sig: &GeneratingSignal,
        sample_rate: f64,
        duration: f64,
        noise_seed: u64,
        noise: NoiseKind,
    ) -> Result<Self> {
        if !(duration > 0.0) {
            return Err(Error::InvalidParameter("duration must be positive"));
        }
        let n = sample_count(sample_rate, duration);
        let clock: Vec<f64> = (0..n).map(|m| m as f64 / sample_rate).collect();
        Self::with_clock(bank, sig, &clock, sample_rate, noise_seed, noise)
    }

    /// Uses `clock[m]` as the phase time of sample `m` instead of `m / sample_rate`.
    pub fn with_clock(
        bank: &'a ChannelBank,
        sig: &GeneratingSignal,
        clock: &[f64],
        sample_rate: f64,
        noise_seed: u64,
        noise: NoiseKind,
    ) -> Result<Self> {
        if bank.n_harmonics() < sig.n_harmonics() {
            return Err(Error::HarmonicMismatch {
                bank: bank.n_harmonics(),
                signal: sig.n_harmonics(),
            });
        }
        if clock.is_empty() {
            return Err(Error::InvalidParameter(
                "response needs at least one sample",
            ));
        }
        let theta = sig.phase();
        let mut sin_table = Vec::with_capacity(sig.n_harmonics());
        let mut cos_table = Vec::with_capacity(sig.n_harmonics());
        for h in sig.harmonics() {
            sin_table.push(
                clock
                    .iter()
                    .map(|t| libm::sin(h.omega * t + theta))
                    .collect(),
            );
            cos_table.push(
                clock
                    .iter()
                    .map(|t| libm::cos(h.omega * t + theta))
                    .collect(),
            );
        }
        Ok(Self {
            bank,
            amplitudes: sig.harmonics().iter().map(|h| h.amplitude).collect(),
            sin_table,
            cos_table,
            n_samples: clock.len(),
            sample_rate,
            noise,
            noise_seed,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_channels(&self) -> usize {
        self.bank.n_channels()
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    /// Writes channel `i` into `out`, which must hold `n_samples` values.
    pub fn fill(&self, i: usize, out: &mut [f64]) {
        let spec = &self.bank.channels()[i];
        out.iter_mut().for_each(|v| *v = 0.0);
        for (k, g) in self.amplitudes.iter().enumerate() {
            let amp = g * spec.gains[k];
            let phi = spec.phase.at(k);
            // sin(x + phi) = sin x cos phi + cos x sin phi
            let p = amp * libm::cos(phi);
            let q = amp * libm::sin(phi);
            for ((o, s), c) in out
                .iter_mut()
                .zip(&self.sin_table[k])
                .zip(&self.cos_table[k])
            {
                *o += p * s + q * c;
            }
        }
        if spec.noise_sigma > 0.0 {
            add_noise(out, spec.noise_sigma, self.noise, self.noise_seed, i as u64);
        }
    }

    pub fn run(&self) -> ChannelMatrix {
        let mut data = vec![0.0; self.n_channels() * self.n_samples];
        for (i, row) in data.chunks_exact_mut(self.n_samples).enumerate() {
            self.fill(i, row);
        }
        ChannelMatrix {
            n_channels: self.n_channels(),
            n_samples: self.n_samples,
            sample_rate: self.sample_rate,
            data,
        }
    }
}

/// Adds white noise of period norm `sigma` drawn from stream `stream` of `seed`.
pub fn add_noise(out: &mut [f64], sigma: f64, kind: NoiseKind, seed: u64, stream: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    match kind {
        NoiseKind::Gaussian => {
            for v in out.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v += sigma * z;
            }
        }
        NoiseKind::Uniform => {
            let half_width = sigma * libm::sqrt(3.0);
            for v in out.iter_mut() {
                *v += half_width * (2.0 * rng.random::<f64>() - 1.0);
            }
        }
        NoiseKind::Laplace => {
            let scale = sigma / libm::sqrt(2.0);
            for v in out.iter_mut() {
                let u = rng.random::<f64>() - 0.5;
                let mag = -scale * libm::log(1.0 - 2.0 * libm::fabs(u));
                *v += if u < 0.0 { -mag } else { mag };
            }
        }
    }
}

pub fn respond(
    bank: &ChannelBank,
    sig: &GeneratingSignal,
    sample_rate: f64,
    duration: f64,
    noise_seed: u64,
) -> Result<ChannelMatrix> {
    respond_with(
        bank,
        sig,
        sample_rate,
        duration,
        noise_seed,
        NoiseKind::Gaussian,
    )
}

pub fn respond_with(
    bank: &ChannelBank,
    sig: &GeneratingSignal,
    sample_rate: f64,
    duration: f64,
    noise_seed: u64,
    noise: NoiseKind,
) -> Result<ChannelMatrix> {
    check_nyquist(sig, sample_rate)?;
    Ok(Responder::new(bank, sig, sample_rate, duration, noise_seed, noise)?.run())
}

/// Noise period norm giving a bank-average SNR `||f_i|| / sigma` of `target_snr_db`.
pub fn snr_to_sigma(sig: &GeneratingSignal, bank: &ChannelBank, target_snr_db: f64) -> Result<f64> {
    if bank.n_channels() == 0 {
        return Err(Error::InvalidCount("bank is empty"));
    }
    let mean_norm = bank
        .channels()
        .iter()
        .map(|c| c.response_norm(sig))
        .sum::<f64>()
        / bank.n_channels() as f64;
    if !(mean_norm > 0.0) {
        return Err(Error::ZeroSignal);
    }
    if target_snr_db == f64::INFINITY {
        return Ok(0.0);
    }
    Ok(mean_norm / libm::pow(10.0, target_snr_db / 20.0))
}

/// One piece of a quasi-periodic schedule: `duration` seconds with every frequency times `scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub duration: f64,
    pub scale: f64,
}

/// Warped clock whose rate is `scale` inside each segment; continuous at the joins.
pub fn schedule_clock(schedule: &[Segment], sample_rate: f64) -> Result<Vec<f64>> {
    if schedule.is_empty() {
        return Err(Error::EmptySchedule);
    }
    let mut clock = Vec::new();
    let mut seg_start = 0.0;
    let mut warped_start = 0.0;
    let mut m = 0usize;
    let mut end_count = 0usize;
    for seg in schedule {
        if !(seg.duration > 0.0) || !(seg.scale > 0.0) {
            return Err(Error::InvalidParameter(
                "segment durations and scales must be positive",
            ));
        }
        end_count += sample_count(sample_rate, seg.duration);
        while m < end_count {
            let t = m as f64 / sample_rate;
            clock.push(warped_start + seg.scale * (t - seg_start));
            m += 1;
        }
        let seg_end = seg_start + seg.duration;
        warped_start += seg.scale * seg.duration;
        seg_start = seg_end;
    }
    Ok(clock)
}

pub fn quasi_periodic_respond(
    bank: &ChannelBank,
    sig: &GeneratingSignal,
    schedule: &[Segment],
    sample_rate: f64,
    noise_seed: u64,
) -> Result<ChannelMatrix> {
    let max_scale = schedule.iter().fold(0.0f64, |acc, s| acc.max(s.scale));
    let max_frequency = sig.max_omega() * max_scale / (2.0 * PI);
    if !(sample_rate > 2.0 * max_frequency) {
        return Err(Error::NyquistViolation {
            sample_rate,
            max_frequency,
        });
    }
    let clock = schedule_clock(schedule, sample_rate)?;
    Ok(Responder::with_clock(
        bank,
        sig,
        &clock,
        sample_rate,
        noise_seed,
        NoiseKind::Gaussian,
    )?
    .run())
}
