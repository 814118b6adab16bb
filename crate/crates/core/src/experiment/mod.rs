//! Reproducible end-to-end experiments: embed, attack, invert, decode, match
//! and detect, with CSV reports.

mod config;
mod plot;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::*;
pub use plot::render_svg;

use crate::channel::{self, apply_spatial, apply_temporal, ChannelParams, SignMode};
use crate::error::{Error, Result};
use crate::gf2::BitVec;
use crate::latent::{
    embed_frame, embed_video, EmbedOptions, FrameLatent, LatentShape, VideoLatent,
};
use crate::prc::{keygen, PrcKey};
use crate::rng::{self, derive_seed, tag};
use crate::scalar::Scalar;
use crate::schedule::MessageSchedule;
use crate::stats;
use crate::temporal::{decode_signals, match_and_detect, DetectionReport};

pub const WORKERS_ENV: &str = "PRCMARK_WORKERS";

/// Runs `f` on a pool sized by `PRCMARK_WORKERS`, else `config.workers`,
/// else the rayon default.
pub fn with_workers<R: Send>(config: &ExperimentConfig, f: impl FnOnce() -> R + Send) -> Result<R> {
    let from_env = match std::env::var(WORKERS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| {
                    Error::InvalidParams(format!("{WORKERS_ENV} = {v:?} is not a positive integer"))
                })?,
        ),
        Err(_) => None,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = from_env.or(config.workers) {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Loads `key_file` or generates a key from the config seed.
pub fn obtain_key(config: &ExperimentConfig) -> Result<PrcKey> {
    let key = match &config.key_file {
        Some(path) => {
            let key = PrcKey::load(path)?;
            if key.n() != config.shape().n() {
                return Err(Error::InvalidParams(format!(
                    "key has n = {}, latent shape {} has {}",
                    key.n(),
                    config.shape(),
                    config.shape().n()
                )));
            }
            key
        }
        None => keygen(&config.key.params(), config.seed())?,
    };
    Ok(key)
}

pub fn build_schedule(config: &ExperimentConfig, key: &PrcKey) -> Result<MessageSchedule> {
    let seed = config.schedule.seed.unwrap_or(key.schedule_params().seed);
    MessageSchedule::build(config.schedule.len, key.k_msg(), seed)
}

/// One row of a run report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub video: usize,
    pub attacks: String,
    /// True window start (absent for unwatermarked videos).
    pub start: Option<usize>,
    pub found_start: usize,
    pub frames: usize,
    /// Fraction of watermarked frames decoding to their exact message.
    pub decode_rate: f64,
    /// Per-frame bit accuracy before matching; a null frame scores 0.5.
    pub raw_bit_acc: f64,
    /// Bit accuracy of the messages assigned by temporal matching.
    pub bit_acc: f64,
    pub matching_acc: f64,
    pub p_value: f64,
    pub decision: bool,
    #[serde(skip)]
    pub wall_ms: f64,
}

/// Means over a set of records. Undefined metrics (NaN) are skipped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub videos: usize,
    pub frames: f64,
    pub decode_rate: f64,
    pub raw_bit_acc: f64,
    pub bit_acc: f64,
    pub matching_acc: f64,
    pub p_value: f64,
    pub detection_rate: f64,
}

fn finite_mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values
        .filter(|v| v.is_finite())
        .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

pub fn summarize(records: &[RunRecord]) -> RunSummary {
    let mean = |f: fn(&RunRecord) -> f64| finite_mean(records.iter().map(f));
    RunSummary {
        videos: records.len(),
        frames: mean(|r| r.frames as f64),
        decode_rate: mean(|r| r.decode_rate),
        raw_bit_acc: mean(|r| r.raw_bit_acc),
        bit_acc: mean(|r| r.bit_acc),
        matching_acc: mean(|r| r.matching_acc),
        p_value: mean(|r| r.p_value),
        detection_rate: mean(|r| if r.decision { 1.0 } else { 0.0 }),
    }
}

/// Shared state for simulating the videos of one run.
pub struct RunContext<'a> {
    pub config: &'a ExperimentConfig,
    pub key: &'a PrcKey,
    pub schedule: &'a MessageSchedule,
}

pub struct VideoOutcome {
    pub record: RunRecord,
    pub report: DetectionReport,
}

fn bit_accuracy(a: &BitVec, b: &BitVec) -> f64 {
    1.0 - a.hamming(b) as f64 / a.len().max(1) as f64
}

/// Simulates video `index`: window, embedding, channel, attacks, decoding,
/// matching and detection.
pub fn simulate_video<T: Scalar>(ctx: &RunContext<'_>, index: usize) -> Result<VideoOutcome> {
    let timer = Instant::now();
    let cfg = ctx.config;
    let seed = cfg.seed();
    let v = index as u64;
    let shape = cfg.shape();
    let frames = cfg.video.frames;
    let watermarked = cfg.video.watermarked;

    let window = ctx
        .schedule
        .assign_window(frames, &mut rng::stream(seed, &[tag::WINDOW, v]))?;
    let latents: VideoLatent<T> = if watermarked {
        embed_video(
            ctx.key,
            &window.messages,
            shape,
            derive_seed(seed, &[tag::VIDEO, v]),
            EmbedOptions {
                skip_first_frame: cfg.video.i2v,
            },
        )?
    } else {
        VideoLatent::new(
            (0..frames)
                .map(|i| {
                    FrameLatent::sample_gaussian(
                        shape,
                        &mut rng::stream(seed, &[tag::NULL_VIDEO, v, i as u64]),
                    )
                })
                .collect(),
        )?
    };

    let mut channel = ChannelParams {
        rho: cfg.channel.effective_rho(frames),
        mode: cfg.channel.mode,
        seed: derive_seed(seed, &[tag::CHANNEL, v]),
        first_frame_lost: cfg.video.i2v,
    };
    for attack in cfg.attacks.iter().filter(|a| !a.is_temporal()) {
        channel = apply_spatial(&channel, attack)?;
    }
    let recovered = channel::invert(&latents, &channel)?;

    let mut seq: Vec<(FrameLatent<T>, Option<usize>)> = recovered
        .into_frames()
        .into_iter()
        .enumerate()
        .map(|(i, f)| (f, watermarked.then_some(window.start + i)))
        .collect();
    let mut attack_rng = rng::stream(seed, &[tag::ATTACK, v]);
    for attack in cfg.attacks.iter().filter(|a| a.is_temporal()) {
        apply_temporal(&mut seq, attack, &mut attack_rng, |r| {
            (FrameLatent::sample_gaussian(shape, r), None)
        })?;
    }
    let truth: Vec<Option<usize>> = seq.iter().map(|(_, t)| *t).collect();
    let signals: Vec<_> = seq.iter().map(|(f, _)| channel.observe(f)).collect();
    let decoded = decode_signals(ctx.key, &signals)?;

    let report = match_and_detect(
        ctx.schedule,
        &decoded,
        watermarked.then_some(truth.as_slice()),
        cfg.detection.reference,
        cfg.detection.samples,
        cfg.detection.tau,
        &mut rng::stream(seed, &[tag::DETECT, v]),
    )?;
    let frame_index = &report.frame_index;

    // frames that really carry a message
    let lost_first = cfg.video.i2v.then_some(window.start);
    let carrying: Vec<(usize, &BitVec)> = truth
        .iter()
        .enumerate()
        .filter_map(|(j, t)| match t {
            Some(i) if Some(*i) != lost_first => Some((j, &ctx.schedule.messages()[*i])),
            _ => None,
        })
        .collect();
    let (decode_rate, raw_bit_acc, bit_acc) = if carrying.is_empty() {
        (f64::NAN, f64::NAN, f64::NAN)
    } else {
        let count = carrying.len() as f64;
        let raw: Vec<f64> = carrying
            .iter()
            .map(|&(j, m)| decoded[j].as_ref().map_or(0.5, |d| bit_accuracy(d, m)))
            .collect();
        let exact = carrying
            .iter()
            .filter(|&&(j, m)| decoded[j].as_ref() == Some(m))
            .count() as f64;
        let assigned: f64 = carrying
            .iter()
            .zip(&raw)
            .map(|(&(j, m), &fallback)| {
                frame_index[j].map_or(fallback, |i| bit_accuracy(&ctx.schedule.messages()[i], m))
            })
            .sum();
        (
            exact / count,
            raw.iter().sum::<f64>() / count,
            assigned / count,
        )
    };

    let labels: Vec<String> = cfg.attacks.iter().map(|a| a.label()).collect();
    let record = RunRecord {
        video: index,
        attacks: if labels.is_empty() {
            "none".into()
        } else {
            labels.join("+")
        },
        start: watermarked.then_some(window.start),
        found_start: report.alignment.start,
        frames: seq.len(),
        decode_rate,
        raw_bit_acc,
        bit_acc,
        matching_acc: report.matching_accuracy.unwrap_or(f64::NAN),
        p_value: report.p_value,
        decision: report.decision,
        wall_ms: timer.elapsed().as_secs_f64() * 1e3,
    };
    Ok(VideoOutcome { record, report })
}

/// Simulates every video of a run.
pub fn run_videos(ctx: &RunContext<'_>) -> Result<Vec<RunRecord>> {
    let run = |i| match ctx.config.dtype {
        Dtype::F32 => simulate_video::<f32>(ctx, i),
        Dtype::F64 => simulate_video::<f64>(ctx, i),
    };
    (0..ctx.config.video.count)
        .into_par_iter()
        .map(|i| run(i).map(|o| o.record))
        .collect()
}

fn fmt_f(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.6}")
    }
}

fn fmt_opt(x: Option<usize>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn config_header(out: &mut String, title: &str, config: &ExperimentConfig, key: Option<&PrcKey>) {
    let _ = writeln!(out, "# prcmark {title}");
    let _ = writeln!(out, "# seed: {}", config.seed());
    if let Some(k) = key {
        let _ = writeln!(out, "# key_id: {}", k.key_id());
    }
    let json = serde_json::to_string(config).expect("config serializes");
    let _ = writeln!(out, "# config: {json}");
}

pub const RUN_COLUMNS: &str =
    "video,attacks,start,found_start,frames,decode_rate,raw_bit_acc,bit_acc,matching_acc,p_value,decision";

/// The run report: config echo, one row per video, then the means.
pub fn render_run_csv(config: &ExperimentConfig, key: &PrcKey, records: &[RunRecord]) -> String {
    let mut out = String::new();
    config_header(&mut out, "run", config, Some(key));
    out.push_str(RUN_COLUMNS);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.video,
            r.attacks,
            fmt_opt(r.start),
            r.found_start,
            r.frames,
            fmt_f(r.decode_rate),
            fmt_f(r.raw_bit_acc),
            fmt_f(r.bit_acc),
            fmt_f(r.matching_acc),
            fmt_f(r.p_value),
            u8::from(r.decision),
        );
    }
    let s = summarize(records);
    let _ = writeln!(
        out,
        "mean,,,,{},{},{},{},{},{},{}",
        fmt_f(s.frames),
        fmt_f(s.decode_rate),
        fmt_f(s.raw_bit_acc),
        fmt_f(s.bit_acc),
        fmt_f(s.matching_acc),
        fmt_f(s.p_value),
        fmt_f(s.detection_rate),
    );
    out
}

fn ensure_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    Ok(())
}

pub fn cmd_keygen(config: &ExperimentConfig, out: &Path) -> Result<PrcKey> {
    let key = keygen(&config.key.params(), config.seed())?;
    ensure_dir(out)?;
    key.save(out.join("key.prck"))?;
    if config.key.json_sidecar {
        fs::write(out.join("key.json"), key.to_json()?)?;
    }
    Ok(key)
}

pub struct RunOutput {
    pub key: PrcKey,
    pub records: Vec<RunRecord>,
    pub csv: String,
}

/// Runs the configured videos without touching the filesystem (apart from
/// reading `key_file`).
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutput> {
    let key = obtain_key(config)?;
    let schedule = build_schedule(config, &key)?;
    let records = run_videos(&RunContext {
        config,
        key: &key,
        schedule: &schedule,
    })?;
    let csv = render_run_csv(config, &key, &records);
    Ok(RunOutput { key, records, csv })
}

/// Writes `run.csv` (deterministic) and `timing.csv` (wall times).
pub fn cmd_run(config: &ExperimentConfig, out: &Path) -> Result<RunSummary> {
    let output = run_experiment(config)?;
    ensure_dir(out)?;
    fs::write(out.join("run.csv"), &output.csv)?;
    let mut timing = String::from("video,wall_ms\n");
    for r in &output.records {
        let _ = writeln!(timing, "{},{:.3}", r.video, r.wall_ms);
    }
    fs::write(out.join("timing.csv"), timing)?;
    Ok(summarize(&output.records))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub summary: RunSummary,
}

fn as_count(axis: SweepAxis, value: f64) -> Result<usize> {
    if value >= 0.0 && value.fract() == 0.0 {
        Ok(value as usize)
    } else {
        Err(Error::InvalidParams(format!(
            "sweep value {value} is not a valid {}",
            axis.name()
        )))
    }
}

/// The config for one sweep point.
pub fn sweep_point(
    config: &ExperimentConfig,
    axis: SweepAxis,
    value: f64,
) -> Result<ExperimentConfig> {
    let mut c = config.clone();
    match axis {
        SweepAxis::Rho => c.channel.rho = value,
        SweepAxis::T => c.key.t = as_count(axis, value)?,
        SweepAxis::KMsg => {
            c.key.k_msg = as_count(axis, value)?;
            c.key.r = None;
        }
        SweepAxis::F => c.video.frames = as_count(axis, value)?,
        SweepAxis::L => c.schedule.len = as_count(axis, value)?,
    }
    if matches!(axis, SweepAxis::T | SweepAxis::KMsg) {
        c.key_file = None;
    }
    c.resolve(None)
}

pub fn run_sweep(config: &ExperimentConfig) -> Result<(SweepAxis, Vec<SweepRow>)> {
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| Error::InvalidParams("config has no sweep section".into()))?;
    if sweep.values.is_empty() {
        return Err(Error::InvalidParams("sweep.values is empty".into()));
    }
    let rows = sweep
        .values
        .iter()
        .map(|&value| {
            let point = sweep_point(config, sweep.axis, value)?;
            let output = run_experiment(&point)?;
            Ok(SweepRow {
                value,
                summary: summarize(&output.records),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((sweep.axis, rows))
}

pub const SWEEP_COLUMNS: &str =
    "axis,value,videos,frames,decode_rate,raw_bit_acc,bit_acc,matching_acc,p_value,detection_rate";

pub fn render_sweep_csv(config: &ExperimentConfig, axis: SweepAxis, rows: &[SweepRow]) -> String {
    let mut out = String::new();
    config_header(&mut out, "sweep", config, None);
    out.push_str(SWEEP_COLUMNS);
    out.push('\n');
    for row in rows {
        let s = &row.summary;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            axis.name(),
            row.value,
            s.videos,
            fmt_f(s.frames),
            fmt_f(s.decode_rate),
            fmt_f(s.raw_bit_acc),
            fmt_f(s.bit_acc),
            fmt_f(s.matching_acc),
            fmt_f(s.p_value),
            fmt_f(s.detection_rate),
        );
    }
    out
}

pub fn cmd_sweep(config: &ExperimentConfig, out: &Path) -> Result<Vec<SweepRow>> {
    let (axis, rows) = run_sweep(config)?;
    ensure_dir(out)?;
    fs::write(out.join("sweep.csv"), render_sweep_csv(config, axis, &rows))?;
    Ok(rows)
}

/// Single-frame decoding statistics through the channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameStats {
    pub trials: usize,
    /// Frames decoding to exactly the embedded message.
    pub exact: usize,
    /// Mean bit accuracy, a null decode scoring 0.5.
    pub bit_acc: f64,
    /// Evaluation stopped early after exceeding the failure budget.
    pub truncated: bool,
}

impl FrameStats {
    pub fn decode_rate(&self) -> f64 {
        self.exact as f64 / self.trials.max(1) as f64
    }
}

/// Encodes, embeds, passes through the channel at `rho` and decodes frame
/// `trial`. The frame uses the same message, latent and channel noise for
/// every `rho`. Returns whether the message came back exactly, and the bit
/// accuracy (0.5 for a null decode).
pub fn decode_trial<T: Scalar>(
    key: &PrcKey,
    shape: LatentShape,
    rho: f64,
    mode: SignMode,
    seed: u64,
    trial: usize,
) -> Result<(bool, f64)> {
    if shape.n() != key.n() {
        return Err(Error::ShapeMismatch(format!(
            "latent shape {shape} does not match n = {}",
            key.n()
        )));
    }
    let mut r = rng::stream(seed, &[tag::FIT, trial as u64]);
    let message = BitVec::random(key.k_msg(), &mut r);
    let codeword = key.encode(&message, &mut r)?;
    let noise = FrameLatent::<T>::sample_gaussian(shape, &mut r);
    let video = VideoLatent::new(vec![embed_frame(&codeword, &noise)?])?;
    let params = ChannelParams {
        rho,
        mode,
        seed: derive_seed(seed, &[tag::FIT, trial as u64]),
        first_frame_lost: false,
    };
    let recovered = channel::invert(&video, &params)?;
    let out = key.decode(&params.observe(&recovered.frames()[0]))?;
    Ok(match out.message {
        Some(m) => (m == message, bit_accuracy(&m, &message)),
        None => (false, 0.5),
    })
}

/// Runs [`decode_trial`] for trials `0..trials`.
///
/// With `max_failures`, stops once more frames than that have failed.
pub fn evaluate_frames<T: Scalar>(
    key: &PrcKey,
    shape: LatentShape,
    rho: f64,
    mode: SignMode,
    trials: usize,
    seed: u64,
    max_failures: Option<usize>,
) -> Result<FrameStats> {
    let chunk = match max_failures {
        Some(_) => rayon::current_num_threads().max(1),
        None => trials.max(1),
    };
    let (mut exact, mut acc, mut done) = (0usize, 0.0f64, 0usize);
    let mut truncated = false;
    while done < trials {
        let hi = (done + chunk).min(trials);
        let results = (done..hi)
            .into_par_iter()
            .map(|i| decode_trial::<T>(key, shape, rho, mode, seed, i))
            .collect::<Result<Vec<_>>>()?;
        for (ok, a) in results {
            exact += usize::from(ok);
            acc += a;
        }
        done = hi;
        if max_failures.is_some_and(|m| done - exact > m) && done < trials {
            truncated = true;
            break;
        }
    }
    Ok(FrameStats {
        trials: done,
        exact,
        bit_acc: acc / done.max(1) as f64,
        truncated,
    })
}

/// Largest flip rate in `[lo, hi]` at which trial `trial` still decodes,
/// found by bisection to within `tolerance`.
fn trial_threshold<T: Scalar>(
    key: &PrcKey,
    shape: LatentShape,
    mode: SignMode,
    seed: u64,
    trial: usize,
    (lo, hi): (f64, f64),
    tolerance: f64,
) -> Result<f64> {
    let decodes = |flip: f64| {
        decode_trial::<T>(key, shape, channel::rho_for_flip(flip), mode, seed, trial).map(|r| r.0)
    };
    if decodes(hi)? {
        return Ok(hi);
    }
    if !decodes(lo)? {
        return Ok(lo);
    }
    let (mut ok, mut bad) = (lo, hi);
    while bad - ok > tolerance {
        let mid = 0.5 * (ok + bad);
        if decodes(mid)? {
            ok = mid;
        } else {
            bad = mid;
        }
    }
    Ok(0.5 * (ok + bad))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Fidelity at which the predicted decode rate equals the target.
    pub rho: f64,
    pub flip_probability: f64,
    pub target_decode_rate: f64,
    /// Mean and standard deviation of the per-frame threshold flip rates.
    pub threshold_mean: f64,
    pub threshold_sd: f64,
    /// Frames used to estimate the thresholds.
    pub trials: usize,
    /// Decode rate and bit accuracy at `rho` on fresh frames.
    pub validation: FrameStats,
}

/// Fits the channel fidelity for a target per-frame decode rate.
///
/// Each of `trials` coupled frames is bisected for the largest flip rate at
/// which it still decodes. The thresholds are summarized by a normal law and
/// the fitted flip rate is its `1 - target` quantile, so targets beyond
/// `1 - 1/trials` are reached by extrapolation rather than by the worst
/// sampled frame. The result is checked on `trials` fresh frames.
pub fn fit_rho(config: &ExperimentConfig, key: &PrcKey) -> Result<FitResult> {
    let fit = &config.fit;
    let shape = config.shape();
    let mode = config.channel.mode;
    let seed = derive_seed(config.seed(), &[tag::FIT]);
    let bracket = (
        channel::flip_probability(fit.hi),
        channel::flip_probability(fit.lo),
    );
    let thresholds = (0..fit.trials)
        .into_par_iter()
        .map(|i| match config.dtype {
            Dtype::F32 => trial_threshold::<f32>(key, shape, mode, seed, i, bracket, fit.tolerance),
            Dtype::F64 => trial_threshold::<f64>(key, shape, mode, seed, i, bracket, fit.tolerance),
        })
        .collect::<Result<Vec<_>>>()?;
    let count = thresholds.len() as f64;
    let mean = thresholds.iter().sum::<f64>() / count;
    let sd = if thresholds.len() > 1 {
        (thresholds.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (count - 1.0)).sqrt()
    } else {
        0.0
    };
    let z = -stats::normal_quantile(1.0 - fit.target_decode_rate);
    let flip = if sd > 0.0 { mean - z * sd } else { mean }.clamp(bracket.0, bracket.1);
    let rho = channel::rho_for_flip(flip);

    let check_seed = derive_seed(seed, &[tag::FIT]);
    let validation = match config.dtype {
        Dtype::F32 => evaluate_frames::<f32>(key, shape, rho, mode, fit.trials, check_seed, None)?,
        Dtype::F64 => evaluate_frames::<f64>(key, shape, rho, mode, fit.trials, check_seed, None)?,
    };
    Ok(FitResult {
        rho,
        flip_probability: flip,
        target_decode_rate: fit.target_decode_rate,
        threshold_mean: mean,
        threshold_sd: sd,
        trials: thresholds.len(),
        validation,
    })
}

pub fn cmd_fit_rho(config: &ExperimentConfig, out: &Path) -> Result<FitResult> {
    let key = obtain_key(config)?;
    let result = fit_rho(config, &key)?;
    ensure_dir(out)?;
    fs::write(out.join("fit.json"), serde_json::to_string_pretty(&result)?)?;
    Ok(result)
}

pub fn cmd_plot(config: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    let plot = config
        .plot
        .as_ref()
        .ok_or_else(|| Error::InvalidParams("config has no plot section".into()))?;
    let csv = fs::read_to_string(out.join(&plot.input))?;
    let svg = render_svg(&csv, plot)?;
    let path = out.join(&plot.output);
    fs::write(&path, svg)?;
    Ok(path)
}
