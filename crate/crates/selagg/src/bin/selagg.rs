use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use selagg::config::{Overrides, RunConfig};
use selagg::core::channel::{quasi_periodic_respond, random_bank_with, snr_to_sigma, Segment};
use selagg::core::metrics::ncc;
use selagg::core::pipeline::{run, segmented_estimate, Orientation, SegmentBasis};
use selagg::core::signal::{Preset, SampledSignal};
use selagg::core::spectrum::{spectral_peak, DEFAULT_PAD_FACTOR};
use selagg::core::video::{analyze, render_synthetic, RenderConfig};
use selagg::experiments::{self, noise_seed, quarter_period_lag, RpShape};
use selagg::io;
use selagg::manifest::ManifestBuilder;
use selagg::{Error, Result};
use serde_json::json;

#[derive(Debug, Parser)]
#[command(
    name = "selagg",
    version,
    about = "Blind recovery of a periodic source from many noisy channels"
)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// NCC against the source for every preset and SNR.
    SweepSnr {
        /// Comma-separated preset names; all seven when omitted.
        #[arg(long, value_delimiter = ',')]
        presets: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-2.0, 10.0])]
        snr_db: Vec<f64>,
    },
    /// Runs with the basis frequency forced to a multiple of the true fundamental.
    SweepBasisfreq {
        #[arg(long, value_delimiter = ',')]
        presets: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',', default_values_t = experiments::DEFAULT_BASISFREQ_RATIOS)]
        ratios: Vec<f64>,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        snr_db: f64,
        /// Simulated duration in fundamental periods for this sweep.
        #[arg(long, default_value_t = experiments::DEFAULT_BASISFREQ_PERIODS)]
        basis_periods: f64,
    },
    /// GoE and NCC over the radius-of-exclusion grid.
    GoeCurve {
        #[arg(long, value_delimiter = ',', default_value = "sawtooth")]
        presets: Vec<String>,
        #[arg(long, allow_negative_numbers = true, default_value_t = -5.0)]
        snr_db: f64,
    },
    /// Estimates the respiratory pattern and rate from a frame sequence.
    Video {
        /// Directory of frame_%06d.pgm files, or a raw blob with a .json sidecar.
        #[arg(long)]
        input: PathBuf,
        /// `t,value` CSV of the true pattern sampled at the frame rate.
        #[arg(long)]
        ground_truth: Option<PathBuf>,
        #[arg(long)]
        fps: Option<f64>,
    },
    /// Renders a synthetic breathing video with its ground truth.
    Render {
        #[arg(long, value_enum, default_value_t = RpShape::Tone)]
        shape: RpShape,
        #[arg(long, default_value_t = 0.25)]
        rate_hz: f64,
        /// Use this `t,value` pattern instead of a built-in shape.
        #[arg(long)]
        rp_csv: Option<PathBuf>,
        #[arg(long, default_value_t = 320)]
        width: usize,
        #[arg(long, default_value_t = 240)]
        height: usize,
        #[arg(long, default_value_t = 30.0)]
        fps: f64,
        #[arg(long, default_value_t = 60.0)]
        duration: f64,
        #[arg(long, default_value_t = 2.0)]
        noise_sigma: f64,
        #[arg(long)]
        amplitude_px: Option<f64>,
        /// Small moving region, as seen from the side.
        #[arg(long)]
        lateral: bool,
        #[arg(long, value_enum, default_value_t = FrameFormat::Pgm)]
        format: FrameFormat,
    },
    /// Writes simulated channel outputs and the generating signal.
    Simulate {
        #[arg(long, default_value = "single")]
        preset: String,
        #[arg(long, allow_negative_numbers = true, default_value_t = f64::INFINITY)]
        snr_db: f64,
        /// Quasi-periodic schedule as `seconds:scale` pairs, e.g. `5:1,5:2`.
        #[arg(long, value_delimiter = ',')]
        schedule: Option<Vec<String>>,
    },
    /// Runs the estimator on a channel matrix file.
    Estimate {
        #[arg(long)]
        input: PathBuf,
        /// Basis frequency; read off the reference (or channel mean) spectrum when omitted.
        #[arg(long)]
        f0_hz: Option<f64>,
        /// `t,value` CSV sampled like the channels, used for orientation and scoring.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FrameFormat {
    Pgm,
    Blob,
}

fn parse_presets(names: Option<&[String]>) -> Result<Vec<Preset>> {
    match names {
        None => Ok(Preset::ALL.to_vec()),
        Some(names) => {
            let presets = names
                .iter()
                .map(|s| s.trim())
                .filter(|s| !s.is_empty())
                .map(|s| {
                    Preset::from_str(s).map_err(|_| Error::Config(format!("unknown preset {s:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if presets.is_empty() {
                return Err(Error::Config("preset list is empty".into()));
            }
            Ok(presets)
        }
    }
}

fn parse_schedule(items: &[String]) -> Result<Vec<Segment>> {
    let bad = |s: &str| Error::Config(format!("schedule entry {s:?} is not seconds:scale"));
    let out = items
        .iter()
        .map(|s| {
            let (d, k) = s.split_once(':').ok_or_else(|| bad(s))?;
            let duration = d.trim().parse().map_err(|_| bad(s))?;
            let scale = k.trim().parse().map_err(|_| bad(s))?;
            Ok(Segment { duration, scale })
        })
        .collect::<Result<Vec<_>>>()?;
    if out.is_empty() {
        return Err(Error::Config("schedule is empty".into()));
    }
    Ok(out)
}

fn write_text(m: &mut ManifestBuilder, path: &Path, text: &str) -> Result<()> {
    io::write_file(path, text.as_bytes())?;
    m.output(path);
    Ok(())
}

fn execute(cmd: &Command, cfg: &RunConfig) -> Result<()> {
    let out = &cfg.output_dir;
    match cmd {
        Command::SweepSnr { presets, snr_db } => {
            let presets = parse_presets(presets.as_deref())?;
            let mut m = ManifestBuilder::start("sweep-snr", cfg);
            let rows = experiments::sweep_snr(cfg, &presets, snr_db)?;
            let summary = experiments::summarize_snr(&rows);
            write_text(
                &mut m,
                &out.join("sweep_snr.csv"),
                &experiments::snr_csv(&rows),
            )?;
            write_text(
                &mut m,
                &out.join("sweep_snr_summary.csv"),
                &experiments::snr_summary_csv(&summary),
            )?;
            m.detail(
                "presets",
                presets.iter().map(|p| p.name()).collect::<Vec<_>>(),
            );
            m.detail("snr_db", snr_db);
            m.write()?;
        }
        Command::SweepBasisfreq {
            presets,
            ratios,
            snr_db,
            basis_periods,
        } => {
            let presets = parse_presets(presets.as_deref())?;
            let mut m = ManifestBuilder::start("sweep-basisfreq", cfg);
            let rows =
                experiments::sweep_basisfreq(cfg, &presets, ratios, *snr_db, *basis_periods)?;
            write_text(
                &mut m,
                &out.join("sweep_basisfreq.csv"),
                &experiments::basisfreq_csv(&rows),
            )?;
            let within = rows.iter().filter(|r| r.within_bin).count();
            m.detail(
                "presets",
                presets.iter().map(|p| p.name()).collect::<Vec<_>>(),
            );
            m.detail("ratios", ratios);
            m.detail("snr_db", snr_db);
            m.detail("periods", basis_periods);
            m.detail("within_bin_fraction", within as f64 / rows.len() as f64);
            m.write()?;
        }
        Command::GoeCurve { presets, snr_db } => {
            let presets = parse_presets(Some(presets))?;
            let mut m = ManifestBuilder::start("goe-curve", cfg);
            let rows = experiments::goe_curve(cfg, &presets, *snr_db)?;
            write_text(
                &mut m,
                &out.join("goe_curve.csv"),
                &experiments::goe_csv(&rows),
            )?;
            let best: Vec<_> = experiments::summarize_goe(&rows)
                .iter()
                .map(|s| json!({"preset": s.preset.name(), "seed": s.seed, "best_r_e": s.best_r_e, "best_ncc": s.best_ncc, "max_ncc": s.max_ncc}))
                .collect();
            m.detail("snr_db", snr_db);
            m.detail("best", best);
            m.write()?;
        }
        Command::Video {
            input,
            ground_truth,
            fps,
        } => {
            let mut m = ManifestBuilder::start("video", cfg);
            let seq = io::load_frames(input, *fps)?;
            let a = analyze(&seq, &cfg.video())?;
            let rp = out.join("rp.csv");
            io::write_signal_csv(&rp, a.estimate())?;
            m.output(&rp);
            let proxy_path = out.join("proxy.csv");
            let proxy: Vec<(f64, f64)> = a
                .proxy
                .samples
                .iter()
                .enumerate()
                .map(|(k, v)| (k as f64 / a.proxy.sample_rate, *v))
                .collect();
            io::write_pairs_csv(&proxy_path, ["t", "p"], &proxy)?;
            m.output(&proxy_path);
            let best = a.output.best();
            m.detail("input", input);
            m.detail("frames", seq.len());
            m.detail("selected_pixels", a.selection.indices.len());
            m.detail("membership_size", best.membership.cardinality());
            m.detail("r_e", best.r_e);
            m.detail("proxy_hz", a.proxy_w0 / (2.0 * PI));
            m.detail("w0_hz", best.w0_used / (2.0 * PI));
            let membership = out.join("membership.json");
            io::write_json(
                &membership,
                &json!({"r_e": best.r_e, "channel_ids": best.membership.channel_ids}),
            )?;
            m.output(&membership);
            match ground_truth {
                None => {
                    let rr = out.join("rr.csv");
                    io::write_pairs_csv(&rr, ["t", "bpm"], &a.rr)?;
                    m.output(&rr);
                }
                Some(gt) => {
                    let truth = io::read_signal_csv(gt)?;
                    let s = experiments::score_video(&a, &truth, cfg)?;
                    write_text(&mut m, &out.join("rr.csv"), &experiments::rr_csv(&s))?;
                    let g = &s.agreement;
                    let report = json!({
                        "ncc": s.ncc,
                        "max_rr_error_bpm": s.max_rr_error_bpm,
                        "pearson_r": g.pearson_r,
                        "bias": g.bias,
                        "sd_diff": g.sd_diff,
                        "limits_of_agreement": [g.limits_of_agreement.0, g.limits_of_agreement.1],
                        "pct_within_ci": g.pct_within_ci,
                        "ci_halfwidth": g.ci_halfwidth,
                        "n": g.n,
                    });
                    let path = out.join("agreement.json");
                    io::write_json(&path, &report)?;
                    m.output(&path);
                    m.detail("ncc", s.ncc);
                }
            }
            m.write()?;
        }
        Command::Render {
            shape,
            rate_hz,
            rp_csv,
            width,
            height,
            fps,
            duration,
            noise_sigma,
            amplitude_px,
            lateral,
            format,
        } => {
            let mut m = ManifestBuilder::start("render", cfg);
            let rp = match rp_csv {
                Some(p) => io::read_signal_csv(p)?,
                None => experiments::rp_signal(*shape, *rate_hz, *fps, *duration)?,
            };
            let duration = if rp_csv.is_some() {
                rp.duration().min(*duration)
            } else {
                *duration
            };
            let mut rc = RenderConfig::new(*width, *height, *fps, duration);
            if *lateral {
                rc = rc.lateral();
            }
            rc.texture_seed = cfg.seed;
            rc.noise_sigma = *noise_sigma;
            if let Some(a) = amplitude_px {
                rc.amplitude_px = *a;
            }
            let v = render_synthetic(&rc, &rp)?;
            let frames = match format {
                FrameFormat::Pgm => {
                    let d = out.join("frames");
                    io::save_pgm_dir(&d, &v.frames)?;
                    d
                }
                FrameFormat::Blob => {
                    let b = out.join("frames.bin");
                    io::save_blob(&b, &v.frames)?;
                    b
                }
            };
            m.output(&frames);
            let truth = out.join("ground_truth.csv");
            io::write_signal_csv(&truth, &v.rp)?;
            m.output(&truth);
            let mask: Vec<u8> = v
                .moving_mask
                .iter()
                .map(|&b| if b { 255 } else { 0 })
                .collect();
            let mask_path = out.join("moving_mask.pgm");
            io::write_pgm(&mask_path, *width, *height, &mask)?;
            m.output(&mask_path);
            m.detail("frames", v.frames.len());
            m.detail(
                "moving_pixels",
                v.moving_mask.iter().filter(|b| **b).count(),
            );
            m.write()?;
        }
        Command::Simulate {
            preset,
            snr_db,
            schedule,
        } => {
            let preset = parse_presets(Some(std::slice::from_ref(preset)))?[0];
            let mut m = ManifestBuilder::start("simulate", cfg);
            let sig = preset.signal().with_phase(cfg.theta);
            let (streams, truth, sigma) = match schedule {
                None => {
                    let sim = experiments::simulate(cfg, &sig, *snr_db, cfg.seed, cfg.periods)?;
                    (sim.streams, sim.truth, sim.sigma)
                }
                Some(items) => {
                    let schedule = parse_schedule(items)?;
                    let bank = random_bank_with(
                        cfg.n_channels,
                        sig.n_harmonics(),
                        0.0,
                        cfg.seed,
                        cfg.phases.into(),
                    )?;
                    let sigma = snr_to_sigma(&sig, &bank, *snr_db)?;
                    let bank = bank.with_noise_sigma(sigma);
                    let streams = quasi_periodic_respond(
                        &bank,
                        &sig,
                        &schedule,
                        cfg.sample_rate,
                        noise_seed(cfg.seed),
                    )?;
                    let clock = selagg::core::channel::schedule_clock(&schedule, cfg.sample_rate)?;
                    let samples = clock.iter().map(|&t| sig.value_at(t)).collect();
                    (
                        streams,
                        SampledSignal::new(samples, cfg.sample_rate, 0.0)?,
                        sigma,
                    )
                }
            };
            let channels = out.join("channels.bin");
            io::write_matrix(&channels, &streams, Some(cfg.seed))?;
            m.output(&channels);
            m.output(&io::sidecar_path(&channels));
            let truth_path = out.join("ground_truth.csv");
            io::write_signal_csv(&truth_path, &truth)?;
            m.output(&truth_path);
            m.detail("preset", preset.name());
            m.detail(
                "snr_db",
                if snr_db.is_finite() {
                    json!(snr_db)
                } else {
                    json!("inf")
                },
            );
            m.detail("noise_sigma", sigma);
            m.write()?;
        }
        Command::Estimate {
            input,
            f0_hz,
            reference,
        } => {
            let mut m = ManifestBuilder::start("estimate", cfg);
            let (streams, _) = io::read_matrix(input)?;
            let fs = streams.sample_rate();
            let reference = match reference {
                Some(p) => {
                    let r = io::read_signal_csv(p)?;
                    if r.len() != streams.n_samples() {
                        return Err(Error::Core(selagg::core::Error::LengthMismatch {
                            expected: streams.n_samples(),
                            actual: r.len(),
                        }));
                    }
                    Some(r)
                }
                None => None,
            };
            let band = cfg.simulation_band();
            let orientation_source = if reference.is_some() {
                "reference"
            } else {
                "channel_mean"
            };
            m.detail("orientation_source", orientation_source);
            let estimate_path = out.join("estimate.csv");
            let signal = match cfg.segment_len {
                Some(seg) => {
                    let basis = match f0_hz {
                        Some(f) => SegmentBasis::Fixed(2.0 * PI * f),
                        None => SegmentBasis::Estimated { band },
                    };
                    let s = segmented_estimate(
                        &streams,
                        reference.as_ref().map(|r| r.samples()),
                        &basis,
                        seg,
                        &cfg.pipeline(),
                    )?;
                    m.detail("segments", s.segments.iter().map(|e| json!({"r_e": e.r_e, "w0_hz": e.w0_used / (2.0 * PI), "members": e.membership.cardinality()})).collect::<Vec<_>>());
                    s.signal
                }
                None => {
                    let f0 = match f0_hz {
                        Some(f) => *f,
                        None => {
                            let src = match &reference {
                                Some(r) => r.samples().to_vec(),
                                None => streams.mean_row(),
                            };
                            spectral_peak(&src, fs, band.0, band.1, DEFAULT_PAD_FACTOR)?
                                .frequency_hz
                        }
                    };
                    let orientation = match &reference {
                        Some(r) => Orientation::Reference(r.samples()),
                        None => Orientation::ChannelMean,
                    };
                    let o = run(&streams, 2.0 * PI * f0, orientation, &cfg.pipeline())?;
                    let lag = quarter_period_lag(fs, f0);
                    let curve_rows = o
                        .sweep
                        .curve
                        .iter()
                        .map(|p| {
                            let mut row = vec![
                                io::fmt_f64(p.r_e),
                                io::fmt_f64(p.goe),
                                p.cardinality.to_string(),
                            ];
                            if let Some(r) = &reference {
                                row.push(io::fmt_f64(ncc(p.estimate.samples(), r.samples(), lag)?));
                            }
                            Ok(row)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let header: &[&str] = if reference.is_some() {
                        &["r_e", "goe", "cardinality", "ncc"]
                    } else {
                        &["r_e", "goe", "cardinality"]
                    };
                    write_text(
                        &mut m,
                        &out.join("goe_curve.csv"),
                        &io::csv_string(header, curve_rows),
                    )?;
                    let coeffs = out.join("coefficients.csv");
                    io::write_coefficients_csv(&coeffs, &o.disk)?;
                    m.output(&coeffs);
                    let best = o.best();
                    let membership = out.join("membership.json");
                    io::write_json(
                        &membership,
                        &json!({"r_e": best.r_e, "channel_ids": best.membership.channel_ids}),
                    )?;
                    m.output(&membership);
                    m.detail("f0_hz", f0);
                    m.detail("r_e", best.r_e);
                    m.detail("membership_size", best.membership.cardinality());
                    if let Some(r) = &reference {
                        m.detail("ncc", ncc(best.signal.samples(), r.samples(), lag)?);
                    }
                    best.signal.clone()
                }
            };
            io::write_signal_csv(&estimate_path, &signal)?;
            m.output(&estimate_path);
            m.write()?;
        }
    }
    Ok(())
}

fn report(e: &Error) -> ExitCode {
    let code = e.exit_code();
    let body = json!({"error": e.kind(), "message": e.to_string(), "exit_code": code});
    eprintln!("{body}");
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            return report(&Error::Config(e.to_string().trim().to_string()));
        }
    };
    let result = cli
        .overrides
        .resolve()
        .and_then(|cfg| execute(&cli.command, &cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}
