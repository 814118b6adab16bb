use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::channel::{AttackSpec, SignMode};
use crate::error::{Error, Result};
use crate::latent::LatentShape;
use crate::prc::PrcParams;
use crate::schedule::DEFAULT_SCHEDULE_LEN;
use crate::temporal::{ReferenceMode, DEFAULT_NULL_SAMPLES, DEFAULT_TAU};

/// Everything an experiment needs, as read from JSON. Missing fields take
/// defaults; [`ExperimentConfig::resolve`] fills in the derived ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub key: KeyConfig,
    /// Load this key instead of generating one.
    pub key_file: Option<PathBuf>,
    pub shape: Option<LatentShape>,
    pub dtype: Dtype,
    pub schedule: ScheduleConfig,
    pub video: VideoConfig,
    pub channel: ChannelConfig,
    pub attacks: Vec<AttackSpec>,
    pub detection: DetectionConfig,
    pub sweep: Option<SweepConfig>,
    pub fit: FitConfig,
    pub plot: Option<PlotConfig>,
    pub workers: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: None,
            key: KeyConfig::default(),
            key_file: None,
            shape: None,
            dtype: Dtype::F32,
            schedule: ScheduleConfig::default(),
            video: VideoConfig::default(),
            channel: ChannelConfig::default(),
            attacks: Vec::new(),
            detection: DetectionConfig::default(),
            sweep: None,
            fit: FitConfig::default(),
            plot: None,
            workers: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    #[default]
    F32,
    F64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KeyConfig {
    pub n: usize,
    pub k_msg: usize,
    pub k_pad: usize,
    /// Defaults to `n - k_msg - k_pad`.
    pub r: Option<usize>,
    pub t: usize,
    pub eta: f64,
    pub fpr: f64,
    pub max_bp_iters: usize,
    pub llr_clamp: f64,
    /// Also write the JSON sidecar on `keygen`.
    pub json_sidecar: bool,
}

impl Default for KeyConfig {
    fn default() -> Self {
        let p = PrcParams::new(16384, 512);
        Self {
            n: p.n,
            k_msg: p.k_msg,
            k_pad: p.k_pad,
            r: None,
            t: p.t,
            eta: p.eta,
            fpr: p.fpr,
            max_bp_iters: p.max_bp_iters,
            llr_clamp: p.llr_clamp,
            json_sidecar: false,
        }
    }
}

impl KeyConfig {
    pub fn params(&self) -> PrcParams {
        PrcParams {
            n: self.n,
            k_msg: self.k_msg,
            k_pad: self.k_pad,
            r: self
                .r
                .unwrap_or_else(|| self.n.saturating_sub(self.k_msg + self.k_pad)),
            t: self.t,
            eta: self.eta,
            fpr: self.fpr,
            max_bp_iters: self.max_bp_iters,
            llr_clamp: self.llr_clamp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub len: usize,
    /// Defaults to the seed stored with the key.
    pub seed: Option<u64>,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            len: DEFAULT_SCHEDULE_LEN,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VideoConfig {
    pub frames: usize,
    pub count: usize,
    /// Image-to-video: frame 0 is neither watermarked nor recoverable.
    pub i2v: bool,
    /// When false, videos are plain Gaussian noise (null calibration).
    pub watermarked: bool,
}

impl Default for VideoConfig {
    fn default() -> Self {
        Self {
            frames: 16,
            count: 10,
            i2v: false,
            watermarked: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub rho: f64,
    pub mode: SignMode,
    /// When set, fidelity compounds with length: `rho^(frames / reference_frames)`.
    pub reference_frames: Option<usize>,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            rho: 1.0,
            mode: SignMode::Hard,
            reference_frames: None,
        }
    }
}

impl ChannelConfig {
    pub fn effective_rho(&self, frames: usize) -> f64 {
        match self.reference_frames {
            Some(f0) => self.rho.powf(frames as f64 / f0 as f64),
            None => self.rho,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionConfig {
    pub samples: usize,
    pub tau: f64,
    pub reference: ReferenceMode,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            samples: DEFAULT_NULL_SAMPLES,
            tau: DEFAULT_TAU,
            reference: ReferenceMode::Window,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "rho")]
    Rho,
    #[serde(rename = "t")]
    T,
    #[serde(rename = "k_msg")]
    KMsg,
    #[serde(rename = "f")]
    F,
    #[serde(rename = "L")]
    L,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Rho => "rho",
            SweepAxis::T => "t",
            SweepAxis::KMsg => "k_msg",
            SweepAxis::F => "f",
            SweepAxis::L => "L",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Required fraction of frames decoding to their exact message.
    pub target_decode_rate: f64,
    /// Frames whose decoding thresholds are measured.
    pub trials: usize,
    /// Fidelity search range.
    pub lo: f64,
    pub hi: f64,
    /// Resolution of each frame's threshold, in flip rate.
    pub tolerance: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            target_decode_rate: 0.9999,
            trials: 200,
            lo: 0.0,
            hi: 1.0,
            tolerance: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotConfig {
    /// CSV file, relative to the output directory.
    pub input: PathBuf,
    pub x: String,
    pub y: Vec<String>,
    #[serde(default)]
    pub title: Option<String>,
    #[serde(default = "default_plot_output")]
    pub output: PathBuf,
}

fn default_plot_output() -> PathBuf {
    PathBuf::from("plot.svg")
}

fn invalid<T>(msg: String) -> Result<T> {
    Err(Error::InvalidParams(msg))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Applies the command-line seed and fills every derived field, so the
    /// echoed config is complete.
    pub fn resolve(mut self, seed: Option<u64>) -> Result<Self> {
        if let Some(s) = seed {
            self.seed = Some(s);
        }
        self.seed.get_or_insert(0);
        if self.key.r.is_none() {
            self.key.r = Some(self.key.params().r);
        }
        if self.shape.is_none() {
            self.shape = Some(default_shape(self.key.n));
        }
        self.validate()?;
        Ok(self)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn shape(&self) -> LatentShape {
        self.shape.unwrap_or_else(|| default_shape(self.key.n))
    }

    pub fn validate(&self) -> Result<()> {
        let params = self.key.params();
        params.validate()?;
        let shape = self.shape();
        shape.validate()?;
        if shape.n() != params.n {
            return invalid(format!(
                "latent shape {shape} has {} elements but n = {}",
                shape.n(),
                params.n
            ));
        }
        if self.video.frames == 0 || self.video.count == 0 {
            return invalid("video.frames and video.count must be positive".into());
        }
        if self.video.frames + 1 > self.schedule.len {
            return invalid(format!(
                "schedule.len = {} must exceed video.frames = {}",
                self.schedule.len, self.video.frames
            ));
        }
        if !(0.0..=1.0).contains(&self.channel.rho) {
            return invalid(format!(
                "channel.rho = {} must lie in [0, 1]",
                self.channel.rho
            ));
        }
        if self.channel.reference_frames == Some(0) {
            return invalid("channel.reference_frames must be positive".into());
        }
        for a in &self.attacks {
            a.validate()?;
        }
        if self.detection.samples == 0 {
            return invalid("detection.samples must be positive".into());
        }
        if !(self.detection.tau > 0.0 && self.detection.tau < 1.0) {
            return invalid(format!(
                "detection.tau = {} must lie in (0, 1)",
                self.detection.tau
            ));
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return invalid("sweep.values is empty".into());
            }
        }
        let f = &self.fit;
        if !(f.target_decode_rate > 0.0 && f.target_decode_rate < 1.0)
            || f.trials == 0
            || !(0.0 <= f.lo && f.lo < f.hi && f.hi <= 1.0)
            || f.tolerance <= 0.0
        {
            return invalid("fit settings out of range".into());
        }
        if self.workers == Some(0) {
            return invalid("workers must be positive".into());
        }
        Ok(())
    }
}

/// `(4, 64, 64)` for the default frame size, otherwise a single channel,
/// square when possible.
pub fn default_shape(n: usize) -> LatentShape {
    if n == 16384 {
        return LatentShape { c: 4, h: 64, w: 64 };
    }
    let side = (n as f64).sqrt().round() as usize;
    if side * side == n {
        LatentShape {
            c: 1,
            h: side,
            w: side,
        }
    } else {
        LatentShape {
            c: 1,
            h: 1,
            w: n.max(1),
        }
    }
}
