//! Simulation sweeps and the synthetic-video oracle.
//!
//! Every driver fans its cases out over rayon and collects them in input order,
//! so results (and the CSV text built from them) do not depend on the pool size.

use std::f64::consts::PI;

use rayon::prelude::*;
use selagg_core::channel::{random_bank_with, snr_to_sigma, ChannelBank, ChannelMatrix, Responder};
use selagg_core::metrics::{bland_altman, ncc, rr_estimate, AgreementReport};
use selagg_core::pipeline::{run_normalized, two_step, NormalizedStreams, Orientation};
use selagg_core::signal::{check_nyquist, synth, GeneratingSignal, Preset, SampledSignal};
use selagg_core::spectrum::{dominant_frequency, spectral_peak, DEFAULT_PAD_FACTOR};
use selagg_core::video::{analyze, render_synthetic, FrameSequence, RenderConfig, VideoAnalysis};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::io::{csv_string, fmt_f64};

/// Noise streams use a seed decorrelated from the bank's.
pub fn noise_seed(seed: u64) -> u64 {
    seed ^ 0x9E37_79B9_7F4A_7C15
}

/// Seed of the `k`-th repetition.
pub fn case_seed(cfg: &RunConfig, k: usize) -> u64 {
    cfg.seed.wrapping_add(k as u64)
}

/// A quarter of the fundamental period in samples.
pub fn quarter_period_lag(sample_rate: f64, f0_hz: f64) -> usize {
    (sample_rate / (4.0 * f0_hz)).round() as usize
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Channel outputs plus everything needed to score an estimate against the source.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub signal: GeneratingSignal,
    pub bank: ChannelBank,
    pub sigma: f64,
    pub truth: SampledSignal,
    pub streams: ChannelMatrix,
}

impl Simulation {
    pub fn lag(&self) -> usize {
        quarter_period_lag(self.truth.sample_rate(), self.signal.fundamental_hz())
    }

    pub fn score(&self, estimate: &[f64]) -> Result<f64> {
        Ok(ncc(estimate, self.truth.samples(), self.lag())?)
    }
}

/// Fills the rows of `r` in parallel.
pub fn respond_par(r: &Responder<'_>) -> Result<ChannelMatrix> {
    let mut m = ChannelMatrix::zeros(r.n_channels(), r.n_samples(), r.sample_rate())?;
    let n = r.n_samples();
    m.data_mut()
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(i, row)| r.fill(i, row));
    Ok(m)
}

/// Random bank, noise at `snr_db` (`+inf` for none) and `periods` fundamental periods of output.
pub fn simulate(
    cfg: &RunConfig,
    signal: &GeneratingSignal,
    snr_db: f64,
    seed: u64,
    periods: f64,
) -> Result<Simulation> {
    let fs = cfg.sample_rate;
    check_nyquist(signal, fs)?;
    let duration = periods / signal.fundamental_hz();
    let bank = random_bank_with(
        cfg.n_channels,
        signal.n_harmonics(),
        0.0,
        seed,
        cfg.phases.into(),
    )?;
    let sigma = snr_to_sigma(signal, &bank, snr_db)?;
    let bank = bank.with_noise_sigma(sigma);
    let responder = Responder::new(
        &bank,
        signal,
        fs,
        duration,
        noise_seed(seed),
        cfg.noise.into(),
    )?;
    let streams = respond_par(&responder)?;
    let truth = synth(signal, fs, duration, 0.0)?;
    Ok(Simulation {
        signal: signal.clone(),
        bank,
        sigma,
        truth,
        streams,
    })
}

fn preset_signal(cfg: &RunConfig, preset: Preset) -> GeneratingSignal {
    preset.signal().with_phase(cfg.theta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnrRow {
    pub preset: Preset,
    pub snr_db: f64,
    pub seed: u64,
    pub ncc: f64,
    pub r_e: f64,
    pub goe: f64,
    pub cardinality: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnrSummary {
    pub preset: Preset,
    pub snr_db: f64,
    pub median_ncc: f64,
    pub min_ncc: f64,
}

fn require_presets(presets: &[Preset]) -> Result<()> {
    if presets.is_empty() {
        return Err(Error::Config("preset list is empty".into()));
    }
    Ok(())
}

/// Every preset at every SNR for `cfg.n_seeds` seeds, with the generating signal as orientation reference.
pub fn sweep_snr(cfg: &RunConfig, presets: &[Preset], snr_db: &[f64]) -> Result<Vec<SnrRow>> {
    require_presets(presets)?;
    if snr_db.is_empty() {
        return Err(Error::Config("SNR list is empty".into()));
    }
    let mut cases = Vec::new();
    for &p in presets {
        for &s in snr_db {
            for k in 0..cfg.n_seeds {
                cases.push((p, s, case_seed(cfg, k)));
            }
        }
    }
    let pipeline = cfg.pipeline();
    cases
        .par_iter()
        .map(|&(preset, snr, seed)| {
            let sig = preset_signal(cfg, preset);
            let sim = simulate(cfg, &sig, snr, seed, cfg.periods)?;
            let streams = NormalizedStreams::from_owned(sim.streams.clone());
            let out = run_normalized(
                &streams,
                sig.fundamental(),
                Orientation::Reference(sim.truth.samples()),
                &pipeline,
            )?;
            let best = out.best();
            Ok(SnrRow {
                preset,
                snr_db: snr,
                seed,
                ncc: sim.score(best.signal.samples())?,
                r_e: best.r_e,
                goe: best.goe,
                cardinality: best.membership.cardinality(),
            })
        })
        .collect()
}

/// Median and minimum NCC per `(preset, snr)`, in first-appearance order.
pub fn summarize_snr(rows: &[SnrRow]) -> Vec<SnrSummary> {
    let mut keys: Vec<(Preset, f64)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|k| k.0 == r.preset && k.1 == r.snr_db) {
            keys.push((r.preset, r.snr_db));
        }
    }
    keys.into_iter()
        .map(|(preset, snr_db)| {
            let v: Vec<f64> = rows
                .iter()
                .filter(|r| r.preset == preset && r.snr_db == snr_db)
                .map(|r| r.ncc)
                .collect();
            SnrSummary {
                preset,
                snr_db,
                median_ncc: median(&v),
                min_ncc: v.iter().copied().fold(f64::INFINITY, f64::min),
            }
        })
        .collect()
}

pub fn snr_csv(rows: &[SnrRow]) -> String {
    csv_string(
        &[
            "preset",
            "snr_db",
            "seed",
            "ncc",
            "r_e",
            "goe",
            "cardinality",
        ],
        rows.iter().map(|r| {
            [
                r.preset.to_string(),
                fmt_f64(r.snr_db),
                r.seed.to_string(),
                fmt_f64(r.ncc),
                fmt_f64(r.r_e),
                fmt_f64(r.goe),
                r.cardinality.to_string(),
            ]
        }),
    )
}

pub fn snr_summary_csv(rows: &[SnrSummary]) -> String {
    csv_string(
        &["preset", "snr_db", "median_ncc", "min_ncc"],
        rows.iter().map(|r| {
            [
                r.preset.to_string(),
                fmt_f64(r.snr_db),
                fmt_f64(r.median_ncc),
                fmt_f64(r.min_ncc),
            ]
        }),
    )
}

pub const DEFAULT_BASISFREQ_RATIOS: [f64; 7] = [0.05, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0];
/// Long enough for one basis period at the smallest default ratio.
pub const DEFAULT_BASISFREQ_PERIODS: f64 = 24.0;

#[derive(Debug, Clone, PartialEq)]
pub struct BasisFreqRow {
    pub preset: Preset,
    pub ratio: f64,
    pub seed: u64,
    pub ncc: f64,
    /// Unrefined dominant frequency of the estimate.
    pub est_fundamental_hz: f64,
    pub true_f0_hz: f64,
    pub bin_hz: f64,
    pub within_bin: bool,
    /// Refined in-band peak of the estimate, used as the second basis frequency.
    pub recovered_hz: f64,
    pub two_step_ncc: f64,
    /// NCC of the run at the true fundamental.
    pub reference_ncc: f64,
}

/// Forces the basis frequency to `ratio * w0` and records what the estimate says the fundamental is.
pub fn sweep_basisfreq(
    cfg: &RunConfig,
    presets: &[Preset],
    ratios: &[f64],
    snr_db: f64,
    periods: f64,
) -> Result<Vec<BasisFreqRow>> {
    require_presets(presets)?;
    if ratios.is_empty() || ratios.iter().any(|r| !(*r > 0.0 && *r <= 2.0)) {
        return Err(Error::Config(
            "basis-frequency ratios must be non-empty and lie in (0, 2]".into(),
        ));
    }
    let needed = 1.0 / ratios.iter().copied().fold(f64::INFINITY, f64::min);
    if periods < needed {
        return Err(Error::Config(format!("{periods} periods cannot hold one basis period at the smallest ratio ({needed:.1} needed)")));
    }
    let mut sims = Vec::new();
    for &p in presets {
        for k in 0..cfg.n_seeds {
            sims.push((p, case_seed(cfg, k)));
        }
    }
    let pipeline = cfg.pipeline();
    let band = cfg.simulation_band();
    let grouped: Vec<Vec<BasisFreqRow>> = sims
        .par_iter()
        .map(|&(preset, seed)| {
            let sig = preset_signal(cfg, preset);
            let sim = simulate(cfg, &sig, snr_db, seed, periods)?;
            let streams = NormalizedStreams::from_owned(sim.streams.clone());
            let orientation = Orientation::Reference(sim.truth.samples());
            let w0 = sig.fundamental();
            let reference = run_normalized(&streams, w0, orientation, &pipeline)?;
            let reference_ncc = sim.score(reference.best().signal.samples())?;
            ratios
                .par_iter()
                .map(|&ratio| {
                    let ts = two_step(&streams, ratio * w0, orientation, &pipeline, band)?;
                    let est = &ts.first.best().signal;
                    let (f_est, df) = dominant_frequency(est.samples(), est.sample_rate())?;
                    let f0 = sig.fundamental_hz();
                    Ok(BasisFreqRow {
                        preset,
                        ratio,
                        seed,
                        ncc: sim.score(est.samples())?,
                        est_fundamental_hz: f_est,
                        true_f0_hz: f0,
                        bin_hz: df,
                        within_bin: (f_est - f0).abs() <= df,
                        recovered_hz: ts.recovered_w0 / (2.0 * PI),
                        two_step_ncc: sim.score(ts.second.best().signal.samples())?,
                        reference_ncc,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    // rows ordered by preset, ratio, seed
    let mut rows = Vec::with_capacity(grouped.len() * ratios.len());
    for &p in presets {
        for j in 0..ratios.len() {
            for (g, &(gp, _)) in grouped.iter().zip(&sims) {
                if gp == p {
                    rows.push(g[j].clone());
                }
            }
        }
    }
    Ok(rows)
}

pub fn basisfreq_csv(rows: &[BasisFreqRow]) -> String {
    csv_string(
        &[
            "preset",
            "ratio",
            "seed",
            "ncc",
            "est_fundamental_hz",
            "true_f0_hz",
            "bin_hz",
            "within_bin",
            "recovered_hz",
            "two_step_ncc",
            "reference_ncc",
        ],
        rows.iter().map(|r| {
            [
                r.preset.to_string(),
                fmt_f64(r.ratio),
                r.seed.to_string(),
                fmt_f64(r.ncc),
                fmt_f64(r.est_fundamental_hz),
                fmt_f64(r.true_f0_hz),
                fmt_f64(r.bin_hz),
                r.within_bin.to_string(),
                fmt_f64(r.recovered_hz),
                fmt_f64(r.two_step_ncc),
                fmt_f64(r.reference_ncc),
            ]
        }),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoeRow {
    pub preset: Preset,
    pub seed: u64,
    pub r_e: f64,
    pub goe: f64,
    pub cardinality: usize,
    pub ncc: f64,
    /// The argmax-GoE point of this seed's curve.
    pub best: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoeSummary {
    pub preset: Preset,
    pub seed: u64,
    pub best_r_e: f64,
    pub best_ncc: f64,
    pub max_ncc: f64,
}

impl GoeSummary {
    pub fn gap(&self) -> f64 {
        self.max_ncc - self.best_ncc
    }
}

/// The whole `(r_e, goe, ncc)` curve for each seed.
pub fn goe_curve(cfg: &RunConfig, presets: &[Preset], snr_db: f64) -> Result<Vec<GoeRow>> {
    require_presets(presets)?;
    let mut cases = Vec::new();
    for &p in presets {
        for k in 0..cfg.n_seeds {
            cases.push((p, case_seed(cfg, k)));
        }
    }
    let pipeline = cfg.pipeline();
    let grouped: Vec<Vec<GoeRow>> = cases
        .par_iter()
        .map(|&(preset, seed)| {
            let sig = preset_signal(cfg, preset);
            let sim = simulate(cfg, &sig, snr_db, seed, cfg.periods)?;
            let streams = NormalizedStreams::from_owned(sim.streams.clone());
            let out = run_normalized(
                &streams,
                sig.fundamental(),
                Orientation::Reference(sim.truth.samples()),
                &pipeline,
            )?;
            out.sweep
                .curve
                .iter()
                .map(|p| {
                    Ok(GoeRow {
                        preset,
                        seed,
                        r_e: p.r_e,
                        goe: p.goe,
                        cardinality: p.cardinality,
                        ncc: sim.score(p.estimate.samples())?,
                        best: p.r_e == out.best().r_e,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(grouped.into_iter().flatten().collect())
}

pub fn summarize_goe(rows: &[GoeRow]) -> Vec<GoeSummary> {
    let mut out: Vec<GoeSummary> = Vec::new();
    for r in rows {
        let i = match out
            .iter()
            .position(|s| s.preset == r.preset && s.seed == r.seed)
        {
            Some(i) => i,
            None => {
                out.push(GoeSummary {
                    preset: r.preset,
                    seed: r.seed,
                    best_r_e: f64::NAN,
                    best_ncc: f64::NAN,
                    max_ncc: f64::NEG_INFINITY,
                });
                out.len() - 1
            }
        };
        let s = &mut out[i];
        s.max_ncc = s.max_ncc.max(r.ncc);
        if r.best {
            s.best_r_e = r.r_e;
            s.best_ncc = r.ncc;
        }
    }
    out
}

pub fn goe_csv(rows: &[GoeRow]) -> String {
    csv_string(
        &["preset", "seed", "r_e", "goe", "cardinality", "ncc", "best"],
        rows.iter().map(|r| {
            [
                r.preset.to_string(),
                r.seed.to_string(),
                fmt_f64(r.r_e),
                fmt_f64(r.goe),
                r.cardinality.to_string(),
                fmt_f64(r.ncc),
                r.best.to_string(),
            ]
        }),
    )
}

/// Shape of a synthetic breathing pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RpShape {
    Tone,
    /// Tone whose depth swells from 1 to 2 and back over 60 s.
    Modulated,
}

/// Breathing pattern starting at an inhalation peak, sampled at `fps`.
pub fn rp_signal(shape: RpShape, rate_hz: f64, fps: f64, duration_s: f64) -> Result<SampledSignal> {
    let n = (duration_s * fps).round() as usize;
    let samples = (0..n)
        .map(|k| {
            let t = k as f64 / fps;
            let carrier = (2.0 * PI * rate_hz * t).cos();
            match shape {
                RpShape::Tone => carrier,
                RpShape::Modulated => (1.0 + 0.5 * (1.0 - (2.0 * PI * t / 60.0).cos())) * carrier,
            }
        })
        .collect();
    Ok(SampledSignal::new(samples, fps, 0.0)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoScore {
    pub ncc: f64,
    /// `(t, bpm)` of the estimate and of the ground truth, window by window.
    pub rr_estimate: Vec<(f64, f64)>,
    pub rr_truth: Vec<(f64, f64)>,
    pub max_rr_error_bpm: f64,
    pub agreement: AgreementReport,
    pub membership_size: usize,
    pub r_e: f64,
    pub selected_pixels: usize,
    pub proxy_hz: f64,
    pub w0_hz: f64,
}

/// Scores a video analysis against the ground-truth pattern with the same RR estimator on both.
pub fn score_video(
    a: &VideoAnalysis,
    truth: &SampledSignal,
    cfg: &RunConfig,
) -> Result<VideoScore> {
    let vcfg = cfg.video();
    let est = a.estimate();
    if (truth.sample_rate() - est.sample_rate()).abs() > 1e-9 * est.sample_rate() {
        return Err(Error::Config(format!(
            "ground truth is sampled at {} Hz but the video runs at {} Hz",
            truth.sample_rate(),
            est.sample_rate()
        )));
    }
    let n = truth.len().min(est.len());
    let truth = SampledSignal::new(truth.samples()[..n].to_vec(), truth.sample_rate(), 0.0)?;
    let f_truth = spectral_peak(
        truth.samples(),
        truth.sample_rate(),
        vcfg.band.0,
        vcfg.band.1,
        DEFAULT_PAD_FACTOR,
    )?
    .frequency_hz;
    let ncc_v = ncc(
        &est.samples()[..n],
        truth.samples(),
        quarter_period_lag(truth.sample_rate(), f_truth),
    )?;
    let rr_truth = rr_estimate(&truth, vcfg.rr_window_s, vcfg.band)?;
    let m = rr_truth.len().min(a.rr.len());
    let rr_estimate: Vec<(f64, f64)> = a.rr[..m].to_vec();
    let rr_truth: Vec<(f64, f64)> = rr_truth[..m].to_vec();
    let e: Vec<f64> = rr_estimate.iter().map(|p| p.1).collect();
    let r: Vec<f64> = rr_truth.iter().map(|p| p.1).collect();
    let agreement = bland_altman(&e, &r, cfg.ci_halfwidth_bpm)?;
    let max_rr_error_bpm = e
        .iter()
        .zip(&r)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(VideoScore {
        ncc: ncc_v,
        rr_estimate,
        rr_truth,
        max_rr_error_bpm,
        agreement,
        membership_size: a.output.best().membership.cardinality(),
        r_e: a.output.best().r_e,
        selected_pixels: a.selection.indices.len(),
        proxy_hz: a.proxy_w0 / (2.0 * PI),
        w0_hz: a.output.best().w0_used / (2.0 * PI),
    })
}

/// Renders a pattern, analyses the video and scores it.
pub fn video_oracle(
    cfg: &RunConfig,
    render: &RenderConfig,
    shape: RpShape,
    rate_hz: f64,
) -> Result<(VideoScore, FrameSequence, SampledSignal)> {
    let rp = rp_signal(shape, rate_hz, render.fps, render.duration_s)?;
    let video = render_synthetic(render, &rp)?;
    let analysis = analyze(&video.frames, &cfg.video())?;
    let score = score_video(&analysis, &video.rp, cfg)?;
    Ok((score, video.frames, video.rp))
}

pub fn rr_csv(score: &VideoScore) -> String {
    csv_string(
        &["t", "bpm", "truth_bpm"],
        score
            .rr_estimate
            .iter()
            .zip(&score.rr_truth)
            .map(|(e, t)| [fmt_f64(e.0), fmt_f64(e.1), fmt_f64(t.1)]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn small_sweep_scores_well_and_orders_rows() {
        let cfg = RunConfig {
            n_channels: 400,
            n_seeds: 2,
            ..RunConfig::default()
        };
        let rows = sweep_snr(&cfg, &[Preset::Single, Preset::Two], &[10.0]).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!((rows[0].preset, rows[0].seed), (Preset::Single, 1));
        assert_eq!((rows[3].preset, rows[3].seed), (Preset::Two, 2));
        assert!(rows.iter().all(|r| r.ncc > 0.9), "{rows:?}");
        assert!(matches!(
            sweep_snr(&cfg, &[], &[0.0]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn modulated_pattern_starts_at_peak() {
        let rp = rp_signal(RpShape::Modulated, 0.25, 30.0, 60.0).unwrap();
        assert_eq!(rp.samples()[0], 1.0);
        assert_eq!(rp.len(), 1800);
    }
}
