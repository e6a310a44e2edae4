//! Grayscale frame sequences: pixel pruning, pixel time series, a synthetic
//! breathing renderer, and the end-to-end respiratory analysis.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channel::ChannelMatrix;
use crate::error::{Error, Result};
use crate::metrics::rr_estimate;
use crate::pipeline::{
    estimate_fundamental, run_normalized, NormalizedStreams, Orientation, PipelineConfig,
    PipelineOutput,
};
use crate::proxy::{fundamental, proxy, ProxySignal, RESPIRATORY_BAND_HZ};
use crate::signal::SampledSignal;
use crate::spectrum::{spectral_peak, DEFAULT_PAD_FACTOR};

#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    width: usize,
    height: usize,
    fps: f64,
    frames: Vec<Vec<u8>>,
}

impl FrameSequence {
    pub fn new(width: usize, height: usize, fps: f64, frames: Vec<Vec<u8>>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter("frame dimensions must be positive"));
        }
        if !(fps > 0.0) {
            return Err(Error::InvalidParameter("fps must be positive"));
        }
        for f in &frames {
            if f.len() != width * height {
                return Err(Error::DimensionMismatch {
                    expected: (width, height),
                    actual: (f.len(), 1),
                });
            }
        }
        Ok(Self {
            width,
            height,
            fps,
            frames,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn frames(&self) -> &[Vec<u8>] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn into_frames(self) -> Vec<Vec<u8>> {
        self.frames
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PixelSelection {
    /// `(row, col)` in row-major order.
    pub indices: Vec<(usize, usize)>,
    pub threshold_percentile: f64,
}

pub const DEFAULT_THRESHOLD_PERCENTILE: f64 = 80.0;

/// Pixels whose absolute change between frame 0 and frame `round(fps / min_rr_hz)`
/// reaches the given percentile of all changes. For a positive percentile the change
/// must also be non-zero.
pub fn prune(
    seq: &FrameSequence,
    min_rr_hz: f64,
    threshold_percentile: f64,
) -> Result<PixelSelection> {
    if !(min_rr_hz > 0.0) {
        return Err(Error::InvalidParameter("min_rr_hz must be positive"));
    }
    if !(0.0..=100.0).contains(&threshold_percentile) {
        return Err(Error::InvalidParameter(
            "threshold percentile must lie in [0, 100]",
        ));
    }
    let k = libm::round(seq.fps / min_rr_hz) as usize;
    if seq.len() <= k {
        return Err(Error::TooFewFrames {
            needed: k,
            available: seq.len(),
        });
    }
    let diff: Vec<u8> = seq.frames[0]
        .iter()
        .zip(&seq.frames[k])
        .map(|(a, b)| a.abs_diff(*b))
        .collect();
    let mut sorted = diff.clone();
    sorted.sort_unstable();
    let n = sorted.len();
    let rank = libm::ceil(threshold_percentile / 100.0 * n as f64) as usize;
    let threshold = sorted[rank.clamp(1, n) - 1];
    let positive = threshold_percentile > 0.0;
    let indices: Vec<(usize, usize)> = diff
        .iter()
        .enumerate()
        .filter(|(_, &d)| d >= threshold && (!positive || d > 0))
        .map(|(i, _)| (i / seq.width, i % seq.width))
        .collect();
    if indices.is_empty() {
        return Err(Error::EmptySelection);
    }
    Ok(PixelSelection {
        indices,
        threshold_percentile,
    })
}

/// One zero-mean intensity trace per selected pixel, channel-major.
pub fn extract_pts(seq: &FrameSequence, sel: &PixelSelection) -> Result<ChannelMatrix> {
    if sel.indices.is_empty() {
        return Err(Error::EmptySelection);
    }
    let n = seq.len();
    let offsets: Vec<usize> = sel
        .indices
        .iter()
        .map(|&(r, c)| {
            if r >= seq.height || c >= seq.width {
                Err(Error::InvalidParameter("pixel selection outside the frame"))
            } else {
                Ok(r * seq.width + c)
            }
        })
        .collect::<Result<_>>()?;
    let mut data = vec![0.0; offsets.len() * n];
    for (k, frame) in seq.frames.iter().enumerate() {
        for (i, &o) in offsets.iter().enumerate() {
            data[i * n + k] = frame[o] as f64;
        }
    }
    for row in data.chunks_exact_mut(n.max(1)) {
        let m = row.iter().sum::<f64>() / n as f64;
        row.iter_mut().for_each(|v| *v -= m);
    }
    ChannelMatrix::new(offsets.len(), n, seq.fps, data)
}

/// Frame-to-first-frame cosine similarity.
pub fn frame_proxy(seq: &FrameSequence) -> Result<ProxySignal> {
    proxy(&seq.frames, seq.fps)
}

/// Axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchRect {
    pub x0: usize,
    pub y0: usize,
    pub width: usize,
    pub height: usize,
}

impl PatchRect {
    pub fn contains(&self, row: usize, col: usize) -> bool {
        row >= self.y0
            && row < self.y0 + self.height
            && col >= self.x0
            && col < self.x0 + self.width
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderConfig {
    pub width: usize,
    pub height: usize,
    pub fps: f64,
    pub duration_s: f64,
    pub texture_seed: u64,
    /// Per-pixel Gaussian sensor noise in gray levels.
    pub noise_sigma: f64,
    /// Vertical displacement in pixels per unit of the respiratory pattern.
    pub amplitude_px: f64,
    pub patch: PatchRect,
    /// Lattice spacing of the value-noise texture.
    pub cell_px: usize,
}

impl RenderConfig {
    /// Centred patch covering half of each dimension.
    pub fn new(width: usize, height: usize, fps: f64, duration_s: f64) -> Self {
        Self {
            width,
            height,
            fps,
            duration_s,
            texture_seed: 0,
            noise_sigma: 0.0,
            amplitude_px: 2.0,
            patch: PatchRect {
                x0: width / 4,
                y0: height / 4,
                width: width / 2,
                height: height / 2,
            },
            cell_px: 6,
        }
    }

    /// Side-on view: a thin moving band covering a small part of the frame.
    pub fn lateral(mut self) -> Self {
        self.patch = PatchRect {
            x0: self.width * 3 / 8,
            y0: self.height * 3 / 8,
            width: self.width / 8,
            height: self.height / 4,
        };
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedVideo {
    pub frames: FrameSequence,
    /// Row-major flags marking pixels covered by the moving patch.
    pub moving_mask: Vec<bool>,
    /// Respiratory pattern sampled at frame times.
    pub rp: SampledSignal,
}

/// Smooth random texture: value noise on a lattice with smoothstep blending, in `[lo, hi]`.
fn value_noise(
    width: usize,
    height: usize,
    cell: usize,
    lo: f64,
    hi: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let cell = cell.max(1);
    let gw = width / cell + 2;
    let gh = height / cell + 2;
    let lattice: Vec<f64> = (0..gw * gh).map(|_| rng.random::<f64>()).collect();
    let smooth = |x: f64| x * x * (3.0 - 2.0 * x);
    let mut out = Vec::with_capacity(width * height);
    for r in 0..height {
        let gy = r / cell;
        let fy = smooth((r % cell) as f64 / cell as f64);
        for c in 0..width {
            let gx = c / cell;
            let fx = smooth((c % cell) as f64 / cell as f64);
            let v00 = lattice[gy * gw + gx];
            let v01 = lattice[gy * gw + gx + 1];
            let v10 = lattice[(gy + 1) * gw + gx];
            let v11 = lattice[(gy + 1) * gw + gx + 1];
            let top = v00 + (v01 - v00) * fx;
            let bottom = v10 + (v11 - v10) * fx;
            out.push(lo + (hi - lo) * (top + (bottom - top) * fy));
        }
    }
    out
}

fn interpolate(rp: &SampledSignal, t: f64) -> Result<f64> {
    let pos = (t - rp.t0()) * rp.sample_rate();
    let x = rp.samples();
    if pos < -1e-9 || pos > (x.len() - 1) as f64 + 1e-9 {
        return Err(Error::TooShort {
            needed: libm::ceil(pos) as usize + 1,
            available: x.len(),
        });
    }
    let pos = pos.clamp(0.0, (x.len() - 1) as f64);
    let i = libm::floor(pos) as usize;
    if i + 1 >= x.len() {
        return Ok(x[x.len() - 1]);
    }
    let f = pos - i as f64;
    Ok(x[i] * (1.0 - f) + x[i + 1] * f)
}

/// Renders a textured patch moving vertically by `amplitude_px * rp(t)` over a static
/// textured background, with Gaussian sensor noise.
pub fn render_synthetic(cfg: &RenderConfig, rp: &SampledSignal) -> Result<RenderedVideo> {
    let (w, h) = (cfg.width, cfg.height);
    let p = cfg.patch;
    if w == 0 || h == 0 || !(cfg.fps > 0.0) || !(cfg.duration_s > 0.0) {
        return Err(Error::InvalidParameter(
            "render needs positive dimensions, fps and duration",
        ));
    }
    if p.width == 0 || p.height == 0 || p.x0 + p.width > w || p.y0 + p.height > h {
        return Err(Error::InvalidParameter(
            "moving patch must lie inside the frame",
        ));
    }
    if rp.is_empty() {
        return Err(Error::InvalidParameter("respiratory pattern is empty"));
    }
    if rp.len() >= 2 {
        match spectral_peak(
            rp.samples(),
            rp.sample_rate(),
            0.0,
            rp.sample_rate() / 2.0,
            DEFAULT_PAD_FACTOR,
        ) {
            Ok(peak) if peak.frequency_hz >= cfg.fps / 2.0 => {
                return Err(Error::NyquistViolation {
                    sample_rate: cfg.fps,
                    max_frequency: peak.frequency_hz,
                });
            }
            Ok(_) | Err(Error::NoPeak { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let n_frames = libm::round(cfg.duration_s * cfg.fps) as usize;
    let rp_frames: Vec<f64> = (0..n_frames)
        .map(|k| interpolate(rp, k as f64 / cfg.fps))
        .collect::<Result<_>>()?;
    let disp: Vec<f64> = rp_frames.iter().map(|v| v * cfg.amplitude_px).collect();
    let max_disp = disp.iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v)));
    let margin = libm::ceil(max_disp) as usize + 2;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.texture_seed);
    rng.set_stream(0);
    let background = value_noise(w, h, cfg.cell_px, 30.0, 225.0, &mut rng);
    rng.set_stream(1);
    let tex_h = p.height + 2 * margin;
    let texture = value_noise(p.width, tex_h, cfg.cell_px, 30.0, 225.0, &mut rng);

    let mut frames = Vec::with_capacity(n_frames);
    let mut values = background.clone();
    for (k, &d) in disp.iter().enumerate() {
        let mut noise = ChaCha8Rng::seed_from_u64(cfg.texture_seed);
        noise.set_stream(2 + k as u64);
        for r in 0..p.height {
            let src = (r + margin) as f64 - d;
            let i = libm::floor(src) as usize;
            let f = src - i as f64;
            for c in 0..p.width {
                let a = texture[i * p.width + c];
                let b = texture[(i + 1).min(tex_h - 1) * p.width + c];
                values[(p.y0 + r) * w + p.x0 + c] = a + (b - a) * f;
            }
        }
        let frame: Vec<u8> = values
            .iter()
            .map(|&v| {
                let z: f64 = if cfg.noise_sigma > 0.0 {
                    StandardNormal.sample(&mut noise)
                } else {
                    0.0
                };
                libm::round(v + cfg.noise_sigma * z).clamp(0.0, 255.0) as u8
            })
            .collect();
        frames.push(frame);
    }
    let moving_mask = (0..w * h).map(|i| p.contains(i / w, i % w)).collect();
    Ok(RenderedVideo {
        frames: FrameSequence::new(w, h, cfg.fps, frames)?,
        moving_mask,
        rp: SampledSignal::new(rp_frames, cfg.fps, 0.0)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoConfig {
    pub min_rr_hz: f64,
    pub threshold_percentile: f64,
    pub band: (f64, f64),
    pub pipeline: PipelineConfig,
    pub rr_window_s: f64,
    /// Re-run at the estimate's own fundamental when it disagrees with the proxy's.
    pub refine_w0: bool,
}

impl Default for VideoConfig {
    fn default() -> Self {
        Self {
            min_rr_hz: RESPIRATORY_BAND_HZ.0,
            threshold_percentile: DEFAULT_THRESHOLD_PERCENTILE,
            band: RESPIRATORY_BAND_HZ,
            pipeline: PipelineConfig::default(),
            rr_window_s: 15.0,
            refine_w0: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoAnalysis {
    pub selection: PixelSelection,
    pub proxy: ProxySignal,
    /// Basis frequency read off the proxy, rad/s.
    pub proxy_w0: f64,
    pub output: PipelineOutput,
    /// `(t, bpm)` per window.
    pub rr: Vec<(f64, f64)>,
}

impl VideoAnalysis {
    pub fn estimate(&self) -> &SampledSignal {
        &self.output.sweep.best.signal
    }
}

/// prune, pixel series, proxy frequency and orientation, radius sweep, windowed RR.
pub fn analyze(seq: &FrameSequence, cfg: &VideoConfig) -> Result<VideoAnalysis> {
    let selection = prune(seq, cfg.min_rr_hz, cfg.threshold_percentile)?;
    let streams = NormalizedStreams::from_owned(extract_pts(seq, &selection)?);
    let proxy = frame_proxy(seq)?;
    let proxy_w0 = fundamental(&proxy.samples, proxy.sample_rate, cfg.band.0, cfg.band.1)?;
    let orientation = Orientation::Reference(&proxy.samples);
    let mut output = run_normalized(&streams, proxy_w0, orientation, &cfg.pipeline)?;
    if cfg.refine_w0 {
        let w_est = estimate_fundamental(&output.sweep.best.signal, cfg.band)?;
        let resolution = 2.0 * PI / seq.len() as f64 * seq.fps;
        if libm::fabs(w_est - proxy_w0) > resolution {
            output = run_normalized(&streams, w_est, orientation, &cfg.pipeline)?;
        }
    }
    let rr = rr_estimate(&output.sweep.best.signal, cfg.rr_window_s, cfg.band)?;
    Ok(VideoAnalysis {
        selection,
        proxy,
        proxy_w0,
        output,
        rr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(frames: Vec<Vec<u8>>) -> FrameSequence {
        FrameSequence::new(2, 2, 10.0, frames).unwrap()
    }

    #[test]
    fn static_video_has_empty_selection() {
        let seq = tiny(vec![vec![5, 6, 7, 8]; 30]);
        assert_eq!(prune(&seq, 1.0, 80.0), Err(Error::EmptySelection));
        assert_eq!(prune(&seq, 1.0, 0.0).unwrap().indices.len(), 4);
        assert!(matches!(
            prune(&seq, 0.1, 80.0),
            Err(Error::TooFewFrames { .. })
        ));
    }

    #[test]
    fn single_pixel_trace() {
        let frames: Vec<Vec<u8>> = (0..6).map(|k| vec![k as u8, 0, 2 * k as u8, 9]).collect();
        let seq = tiny(frames);
        let sel = PixelSelection {
            indices: vec![(1, 0)],
            threshold_percentile: 0.0,
        };
        let m = extract_pts(&seq, &sel).unwrap();
        assert_eq!((m.n_channels(), m.n_samples()), (1, 6));
        assert_eq!(m.row(0), &[-5.0, -3.0, -1.0, 1.0, 3.0, 5.0]);
    }

    #[test]
    fn frame_size_is_checked() {
        assert!(matches!(
            FrameSequence::new(2, 2, 10.0, vec![vec![0; 3]]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn zero_amplitude_render_is_static_up_to_noise() {
        let mut cfg = RenderConfig::new(32, 24, 10.0, 2.0);
        cfg.amplitude_px = 0.0;
        let rp =
            SampledSignal::new((0..20).map(|k| libm::sin(k as f64)).collect(), 10.0, 0.0).unwrap();
        let v = render_synthetic(&cfg, &rp).unwrap();
        assert!(v.frames.frames().iter().all(|f| f == &v.frames.frames()[0]));
    }

    #[test]
    fn render_rejects_aliasing_patterns() {
        let cfg = RenderConfig::new(32, 24, 10.0, 2.0);
        let rp = SampledSignal::new(
            (0..200)
                .map(|k| libm::sin(2.0 * PI * 8.0 * k as f64 / 100.0))
                .collect(),
            100.0,
            0.0,
        )
        .unwrap();
        assert!(matches!(
            render_synthetic(&cfg, &rp),
            Err(Error::NyquistViolation { .. })
        ));
    }
}
