//! End-to-end estimation: windows, disk, radius sweep, and the refinements built on it.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::basis::{CoeffPoint, QuadraticBasis, WindowSampler, DEFAULT_BASIS_SAMPLES};
use crate::channel::ChannelMatrix;
use crate::disk::{
    default_radius_grid, disk_from_points, normalized_rows, sweep_normalized, CoeffDisk,
    EstimateResult, RadiusSweep, DEFAULT_GOE_EPSILON,
};
use crate::error::{Error, Result};
use crate::proxy::orientation_point;
use crate::signal::{normalize_in_place, period_norm, remove_mean, SampledSignal};
use crate::spectrum::{spectral_peak, DEFAULT_PAD_FACTOR};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub m_basis: usize,
    pub r_e_grid: Vec<f64>,
    pub goe_epsilon: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            m_basis: DEFAULT_BASIS_SAMPLES,
            r_e_grid: default_radius_grid(),
            goe_epsilon: DEFAULT_GOE_EPSILON,
        }
    }
}

/// Where the disk orientation comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Orientation<'a> {
    Point(CoeffPoint),
    /// First basis period of a reference stream sampled like the channels.
    Reference(&'a [f64]),
    /// First basis period of the channel average.
    ChannelMean,
}

/// Channel streams with every row centred and scaled to unit period norm.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedStreams(ChannelMatrix);

impl NormalizedStreams {
    pub fn new(streams: &ChannelMatrix) -> Self {
        Self(normalized_rows(streams))
    }

    /// Normalizes in place, avoiding a copy of large matrices.
    pub fn from_owned(mut streams: ChannelMatrix) -> Self {
        for i in 0..streams.n_channels() {
            let row = streams.row_mut(i);
            remove_mean(row);
            let n = period_norm(row);
            if n > 0.0 {
                row.iter_mut().for_each(|v| *v /= n);
            } else {
                row.iter_mut().for_each(|v| *v = 0.0);
            }
        }
        Self(streams)
    }

    pub fn matrix(&self) -> &ChannelMatrix {
        &self.0
    }

    pub fn columns(&self, start: usize, len: usize) -> Result<Self> {
        Ok(Self::from_owned(self.0.columns(start, len)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub sweep: RadiusSweep,
    pub disk: CoeffDisk,
    pub orientation_point: CoeffPoint,
}

impl PipelineOutput {
    pub fn best(&self) -> &EstimateResult {
        &self.sweep.best
    }
}

/// Projection of the first basis period of every channel. Flat windows map to the origin.
pub fn channel_points(
    streams: &ChannelMatrix,
    basis: &QuadraticBasis,
) -> Result<Vec<(usize, CoeffPoint)>> {
    let sampler = WindowSampler::new(streams.n_samples(), streams.sample_rate(), 0, basis)?;
    let mut w = vec![0.0; basis.len()];
    let mut points = Vec::with_capacity(streams.n_channels());
    for (i, row) in streams.rows().enumerate() {
        sampler.sample_into(row, &mut w);
        let p = match normalize_in_place(&mut w) {
            Ok(()) => basis.project(&w)?,
            Err(Error::ZeroNorm) => CoeffPoint::default(),
            Err(e) => return Err(e),
        };
        points.push((i, p));
    }
    Ok(points)
}

pub fn run(
    streams: &ChannelMatrix,
    w0: f64,
    orientation: Orientation<'_>,
    cfg: &PipelineConfig,
) -> Result<PipelineOutput> {
    run_normalized(&NormalizedStreams::new(streams), w0, orientation, cfg)
}

pub fn run_normalized(
    streams: &NormalizedStreams,
    w0: f64,
    orientation: Orientation<'_>,
    cfg: &PipelineConfig,
) -> Result<PipelineOutput> {
    let m = streams.matrix();
    let basis = QuadraticBasis::new(w0, cfg.m_basis)?;
    let orientation_point = match orientation {
        Orientation::Point(p) => p,
        Orientation::Reference(r) => {
            if r.len() != m.n_samples() {
                return Err(Error::LengthMismatch {
                    expected: m.n_samples(),
                    actual: r.len(),
                });
            }
            orientation_point(r, m.sample_rate(), &basis)?
        }
        Orientation::ChannelMean => orientation_point(&m.mean_row(), m.sample_rate(), &basis)?,
    };
    let disk = disk_from_points(channel_points(m, &basis)?, orientation_point)?;
    let sweep = sweep_normalized(&disk, m, &cfg.r_e_grid, cfg.goe_epsilon, w0)?;
    Ok(PipelineOutput {
        sweep,
        disk,
        orientation_point,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoStep {
    pub first: PipelineOutput,
    /// Peak of the first estimate's spectrum, rad/s.
    pub recovered_w0: f64,
    pub second: PipelineOutput,
}

/// In-band spectral peak of an estimate, rad/s.
pub fn estimate_fundamental(estimate: &SampledSignal, band: (f64, f64)) -> Result<f64> {
    let p = spectral_peak(
        estimate.samples(),
        estimate.sample_rate(),
        band.0,
        band.1,
        DEFAULT_PAD_FACTOR,
    )?;
    Ok(2.0 * PI * p.frequency_hz)
}

/// Runs at `w_initial`, reads the fundamental off the estimate, and runs again there.
pub fn two_step(
    streams: &NormalizedStreams,
    w_initial: f64,
    orientation: Orientation<'_>,
    cfg: &PipelineConfig,
    band: (f64, f64),
) -> Result<TwoStep> {
    let first = run_normalized(streams, w_initial, orientation, cfg)?;
    let recovered_w0 = estimate_fundamental(&first.best().signal, band)?;
    let second = run_normalized(streams, recovered_w0, orientation, cfg)?;
    Ok(TwoStep {
        first,
        recovered_w0,
        second,
    })
}

/// Basis frequency for each segment.
#[derive(Debug, Clone, PartialEq)]
pub enum SegmentBasis {
    Fixed(f64),
    PerSegment(Vec<f64>),
    /// Spectral peak of the segment's reference (or channel mean) within the band, Hz.
    Estimated {
        band: (f64, f64),
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentedEstimate {
    pub signal: SampledSignal,
    pub segments: Vec<EstimateResult>,
    /// First sample index of each segment.
    pub starts: Vec<usize>,
}

/// Re-selects the membership independently on consecutive segments and concatenates.
///
/// The final partial segment is merged into the one before it.
pub fn segmented_estimate(
    streams: &ChannelMatrix,
    reference: Option<&[f64]>,
    basis: &SegmentBasis,
    segment_len_s: f64,
    cfg: &PipelineConfig,
) -> Result<SegmentedEstimate> {
    let fs = streams.sample_rate();
    let n = streams.n_samples();
    if let Some(r) = reference {
        if r.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: r.len(),
            });
        }
    }
    let seg = libm::round(segment_len_s * fs) as usize;
    if seg < 2 {
        return Err(Error::SegmentTooShort {
            segment_s: segment_len_s,
            period_s: f64::INFINITY,
        });
    }
    let count = (n / seg).max(1);
    if let SegmentBasis::PerSegment(v) = basis {
        if v.len() != count {
            return Err(Error::LengthMismatch {
                expected: count,
                actual: v.len(),
            });
        }
    }
    let normalized = NormalizedStreams::new(streams);
    let mut signal = Vec::with_capacity(n);
    let mut segments = Vec::with_capacity(count);
    let mut starts = Vec::with_capacity(count);
    for j in 0..count {
        let start = j * seg;
        let len = if j + 1 == count { n - start } else { seg };
        let part = normalized.columns(start, len)?;
        let local_ref = reference.map(|r| &r[start..start + len]);
        let w0 = match basis {
            SegmentBasis::Fixed(w) => *w,
            SegmentBasis::PerSegment(v) => v[j],
            SegmentBasis::Estimated { band } => {
                let mean;
                let src = match local_ref {
                    Some(r) => r,
                    None => {
                        mean = part.matrix().mean_row();
                        &mean
                    }
                };
                2.0 * PI * spectral_peak(src, fs, band.0, band.1, DEFAULT_PAD_FACTOR)?.frequency_hz
            }
        };
        let period_s = 2.0 * PI / w0;
        if (len as f64) < period_s * fs {
            return Err(Error::SegmentTooShort {
                segment_s: len as f64 / fs,
                period_s,
            });
        }
        let orientation = match local_ref {
            Some(r) => Orientation::Reference(r),
            None => Orientation::ChannelMean,
        };
        let out = run_normalized(&part, w0, orientation, cfg)?;
        let mut piece = out.sweep.best.signal.samples().to_vec();
        normalize_in_place(&mut piece)?;
        signal.extend_from_slice(&piece);
        starts.push(start);
        segments.push(out.sweep.best);
    }
    Ok(SegmentedEstimate {
        signal: SampledSignal::new(signal, fs, 0.0)?,
        segments,
        starts,
    })
}
