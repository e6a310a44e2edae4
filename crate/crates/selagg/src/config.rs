//! Run configuration: a flat JSON file whose keys can each be overridden from the command line.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use selagg_core::basis::MIN_BASIS_SAMPLES;
use selagg_core::channel::{NoiseKind, PhaseModel};
use selagg_core::disk::{default_radius_grid, DEFAULT_GOE_EPSILON};
use selagg_core::pipeline::PipelineConfig;
use selagg_core::proxy::RESPIRATORY_BAND_HZ;
use selagg_core::video::{VideoConfig, DEFAULT_THRESHOLD_PERCENTILE};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default output directory when neither the config nor a flag names one.
pub const OUTPUT_DIR_ENV: &str = "SELAGG_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Noise {
    #[default]
    Gaussian,
    Uniform,
    Laplace,
}

impl From<Noise> for NoiseKind {
    fn from(n: Noise) -> Self {
        match n {
            Noise::Gaussian => NoiseKind::Gaussian,
            Noise::Uniform => NoiseKind::Uniform,
            Noise::Laplace => NoiseKind::Laplace,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Phases {
    /// One phase lag per channel, shared by every harmonic.
    #[default]
    Constant,
    /// Independent phase per harmonic. Violates the estimator's assumptions.
    PerHarmonic,
}

impl From<Phases> for PhaseModel {
    fn from(p: Phases) -> Self {
        match p {
            Phases::Constant => PhaseModel::Constant,
            Phases::PerHarmonic => PhaseModel::PerHarmonic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub sample_rate: f64,
    pub n_channels: usize,
    pub m_basis_samples: usize,
    pub r_e_grid: Vec<f64>,
    pub goe_epsilon: f64,
    /// Frequency band in Hz; `None` means the whole Nyquist band in simulation
    /// and the respiratory band for video.
    pub band: Option<(f64, f64)>,
    /// Re-select the membership every `segment_len` seconds; `None` disables it.
    pub segment_len: Option<f64>,
    pub output_dir: PathBuf,
    pub n_seeds: usize,
    /// Simulated duration in fundamental periods.
    pub periods: f64,
    pub noise: Noise,
    pub phases: Phases,
    /// Phase of the generating signal, rad.
    pub theta: f64,
    pub min_rr_hz: f64,
    pub threshold_percentile: f64,
    pub rr_window_s: f64,
    pub ci_halfwidth_bpm: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            sample_rate: 100.0,
            n_channels: 5000,
            m_basis_samples: 256,
            r_e_grid: default_radius_grid(),
            goe_epsilon: DEFAULT_GOE_EPSILON,
            band: None,
            segment_len: None,
            output_dir: default_output_dir(),
            n_seeds: 5,
            periods: 10.0,
            noise: Noise::Gaussian,
            phases: Phases::Constant,
            theta: 0.0,
            min_rr_hz: RESPIRATORY_BAND_HZ.0,
            threshold_percentile: DEFAULT_THRESHOLD_PERCENTILE,
            rr_window_s: 15.0,
            ci_halfwidth_bpm: 3.0,
        }
    }
}

fn default_output_dir() -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        positive("sample_rate", self.sample_rate)?;
        positive("goe_epsilon", self.goe_epsilon)?;
        positive("periods", self.periods)?;
        positive("rr_window_s", self.rr_window_s)?;
        positive("min_rr_hz", self.min_rr_hz)?;
        positive("ci_halfwidth_bpm", self.ci_halfwidth_bpm)?;
        if self.goe_epsilon >= 1.0 {
            return Err(Error::Config("goe_epsilon must be below 1".into()));
        }
        if self.n_channels == 0 {
            return Err(Error::Config("n_channels must be at least 1".into()));
        }
        if self.n_seeds == 0 {
            return Err(Error::Config("n_seeds must be at least 1".into()));
        }
        if self.m_basis_samples < MIN_BASIS_SAMPLES {
            return Err(Error::Config(format!(
                "m_basis_samples must be at least {MIN_BASIS_SAMPLES}"
            )));
        }
        if self.r_e_grid.is_empty() {
            return Err(Error::Config("r_e_grid is empty".into()));
        }
        if let Some(r) = self.r_e_grid.iter().find(|r| !(**r >= 0.0 && **r < 1.0)) {
            return Err(Error::Config(format!("r_e_grid value {r} outside [0, 1)")));
        }
        if let Some((lo, hi)) = self.band {
            if !(lo >= 0.0 && lo < hi && hi.is_finite()) {
                return Err(Error::Config(format!(
                    "band ({lo}, {hi}) must satisfy 0 <= lo < hi"
                )));
            }
        }
        if let Some(s) = self.segment_len {
            positive("segment_len", s)?;
        }
        if !(0.0..=100.0).contains(&self.threshold_percentile) {
            return Err(Error::Config(
                "threshold_percentile must lie in [0, 100]".into(),
            ));
        }
        Ok(())
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            m_basis: self.m_basis_samples,
            r_e_grid: self.r_e_grid.clone(),
            goe_epsilon: self.goe_epsilon,
        }
    }

    /// Configured band, else `(0, fs/2)`.
    pub fn simulation_band(&self) -> (f64, f64) {
        self.band.unwrap_or((0.0, self.sample_rate / 2.0))
    }

    pub fn video(&self) -> VideoConfig {
        VideoConfig {
            min_rr_hz: self.min_rr_hz,
            threshold_percentile: self.threshold_percentile,
            band: self.band.unwrap_or(RESPIRATORY_BAND_HZ),
            pipeline: self.pipeline(),
            rr_window_s: self.rr_window_s,
            refine_w0: true,
        }
    }
}

/// Command-line overrides; every field left unset keeps the config file's value.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON config file with flat RunConfig keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub sample_rate: Option<f64>,
    #[arg(long, global = true)]
    pub n_channels: Option<usize>,
    #[arg(long, global = true)]
    pub m_basis_samples: Option<usize>,
    /// Comma-separated radius-of-exclusion values.
    #[arg(long, global = true, value_delimiter = ',', num_args = 1..)]
    pub r_e_grid: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub goe_epsilon: Option<f64>,
    /// Band in Hz as `lo,hi`.
    #[arg(long, global = true, value_delimiter = ',', num_args = 2)]
    pub band: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub segment_len: Option<f64>,
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub n_seeds: Option<usize>,
    #[arg(long, global = true)]
    pub periods: Option<f64>,
    #[arg(long, global = true)]
    pub noise: Option<Noise>,
    #[arg(long, global = true)]
    pub phases: Option<Phases>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    #[arg(long, global = true)]
    pub min_rr_hz: Option<f64>,
    #[arg(long, global = true)]
    pub threshold_percentile: Option<f64>,
    #[arg(long, global = true)]
    pub rr_window_s: Option<f64>,
    #[arg(long, global = true)]
    pub ci_halfwidth_bpm: Option<f64>,
}

impl Overrides {
    /// Loads the config file if given, applies the flags on top and validates.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        macro_rules! take {
            ($($f:ident),*) => {$(
                if let Some(v) = &self.$f {
                    c.$f = v.clone();
                }
            )*};
        }
        take!(
            seed,
            sample_rate,
            n_channels,
            m_basis_samples,
            r_e_grid,
            goe_epsilon,
            output_dir,
            n_seeds,
            periods
        );
        take!(
            noise,
            phases,
            theta,
            min_rr_hz,
            threshold_percentile,
            rr_window_s,
            ci_halfwidth_bpm
        );
        if let Some(b) = &self.band {
            c.band = Some((b[0], b[1]));
        }
        if let Some(s) = self.segment_len {
            c.segment_len = Some(s);
        }
        c.validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn flags_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(
            &path,
            r#"{"seed": 7, "n_channels": 300, "band": [0.2, 0.5]}"#,
        )
        .unwrap();
        let o = Overrides {
            config: Some(path),
            seed: Some(9),
            ..Default::default()
        };
        let c = o.resolve().unwrap();
        assert_eq!((c.seed, c.n_channels, c.band), (9, 300, Some((0.2, 0.5))));
    }

    #[test]
    fn bad_values_are_config_errors() {
        for bad in [
            Overrides {
                r_e_grid: Some(vec![0.5, 1.0]),
                ..Default::default()
            },
            Overrides {
                sample_rate: Some(-1.0),
                ..Default::default()
            },
            Overrides {
                m_basis_samples: Some(8),
                ..Default::default()
            },
            Overrides {
                band: Some(vec![0.5, 0.2]),
                ..Default::default()
            },
        ] {
            assert_eq!(bad.resolve().unwrap_err().exit_code(), 2);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"seeed": 7}"#).unwrap();
        let o = Overrides {
            config: Some(path),
            ..Default::default()
        };
        assert_eq!(o.resolve().unwrap_err().exit_code(), 2);
    }
}
