use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::control::LegModel;
use crate::{Error, GaitId, LegId, Result};

use super::config::{ModelKind, RunConfig, Scenario};
use super::scenario::run_scenario;
use super::training::{record_flat_log, run_training};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Recurrent gain.
    Gain,
    /// Reservoir size.
    Size,
    /// Rough-terrain elasticity, reservoir against baseline.
    Elasticity,
}

impl SweepAxis {
    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepAxis::Gain => vec![0.1, 0.5, 0.95, 1.2],
            SweepAxis::Size => vec![10.0, 30.0, 100.0],
            SweepAxis::Elasticity => vec![1.0, 5.0, 10.0],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Gain => "g",
            SweepAxis::Size => "N",
            SweepAxis::Elasticity => "elasticity",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "g" | "gain" => Ok(SweepAxis::Gain),
            "N" | "n" | "size" => Ok(SweepAxis::Size),
            "elasticity" | "e" => Ok(SweepAxis::Elasticity),
            _ => Err(Error::config("axis", format!("unknown sweep axis {s:?}; use g, N or elasticity"))),
        }
    }
}

/// Mean and sample spread of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub model: ModelKind,
    /// Per-trial metric; `None` for a failed trial (elasticity axis only).
    pub samples: Vec<Option<f64>>,
    pub mean: f64,
    pub std: f64,
}

impl SweepPoint {
    fn new(value: f64, model: ModelKind, samples: Vec<Option<f64>>) -> Self {
        let ok: Vec<f64> = samples.iter().flatten().copied().collect();
        let (mean, std) = mean_std(&ok);
        Self { value, model, samples, mean, std }
    }

    pub fn successes(&self) -> usize {
        self.samples.iter().flatten().count()
    }
}

/// Mean and population standard deviation; NaN for an empty slice.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
}

impl SweepTable {
    pub fn point(&self, value: f64, model: ModelKind) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.value == value && p.model == model)
    }

    pub fn write_csv(&self, path: &Path, echo: &str) -> Result<()> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        let mut text: String = echo.lines().map(|l| format!("# {l}\n")).collect();
        let mut w = csv::Writer::from_writer(Vec::new());
        let metric = if self.axis == SweepAxis::Elasticity { "success_seconds" } else { "training_mse" };
        w.write_record([self.axis.name(), "model", "trials", "successes", &format!("{metric}_mean"), &format!("{metric}_std"), "samples"])?;
        for p in &self.points {
            let samples: Vec<String> = p.samples.iter().map(|s| s.map_or("fail".to_string(), |v| v.to_string())).collect();
            w.write_record([
                p.value.to_string(),
                p.model.to_string(),
                p.samples.len().to_string(),
                p.successes().to_string(),
                p.mean.to_string(),
                p.std.to_string(),
                samples.join(" "),
            ])?;
        }
        let body = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        text.push_str(&String::from_utf8_lossy(&body));
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Training error of a single forward model (leg R1, wave gait) built with
/// `cfg`'s reservoir parameters: one block on flat ground, pre-training,
/// then one RLS pass. The error is the mean squared pre-update prediction
/// error over the second half of the block.
pub fn training_mse(cfg: &RunConfig) -> Result<f64> {
    let ticks = cfg.training.block_ticks;
    let flat = record_flat_log(cfg, &[(GaitId::Wave, ticks)])?;
    let i = LegId::R1.index();
    let mut model = LegModel::new(&cfg.reservoir, cfg.rls.delta_c)?;
    let mut pre = cfg.training.pretrain.clone();
    if pre.validation.is_empty() {
        let len = pre.validation_len.min(ticks / 2);
        pre.validation = vec![((ticks - len) / 2, len)];
    }
    model.reservoir.pretrain_adapt(&flat.u[i], &flat.fc[i], cfg.training.pretrain_epochs, &pre)?;
    model.reservoir.reset();
    let settle = cfg.training.settle.min(ticks / 4);
    let from = ticks / 2;
    let mut sum = 0.0;
    for t in 0..ticks {
        let err = if t < settle {
            model.raw_step(flat.u[i][t], GaitId::Wave)? - flat.fc[i][t]
        } else {
            model.train_step(flat.u[i][t], flat.fc[i][t], GaitId::Wave)?.error
        };
        if t >= from {
            sum += err * err;
        }
    }
    Ok(sum / (ticks - from) as f64)
}

/// Runs `trials` seeds (`cfg.run.seed + trial`) per value of `axis`.
///
/// Gain and size points report the training error of [`training_mse`]. The
/// elasticity axis trains one bank with the base seed, then walks the rough
/// scenario with both the reservoir and the baseline model, varying only the
/// terrain and plant seed between trials; failed trials are kept as `None`.
pub fn run_sweep(cfg: &RunConfig, axis: SweepAxis, values: &[f64], trials: usize) -> Result<SweepTable> {
    cfg.validate()?;
    if trials == 0 {
        return Err(Error::config("trials", "must be at least 1"));
    }
    if values.is_empty() {
        return Err(Error::config("values", "sweep needs at least one value"));
    }
    let mut points = Vec::new();
    match axis {
        SweepAxis::Gain | SweepAxis::Size => {
            for &v in values {
                let mut samples = Vec::with_capacity(trials);
                for trial in 0..trials {
                    let mut c = cfg.clone();
                    let seed = cfg.run.seed.wrapping_add(trial as u64);
                    c.run.seed = seed;
                    c.reservoir.seed = seed;
                    if axis == SweepAxis::Gain {
                        c.reservoir.gain = v;
                    } else {
                        if v < 1.0 || v.fract() != 0.0 {
                            return Err(Error::config("N", format!("reservoir size must be a positive integer, got {v}")));
                        }
                        c.reservoir.size = v as usize;
                    }
                    c.validate()?;
                    samples.push(Some(training_mse(&c)?));
                }
                points.push(SweepPoint::new(v, ModelKind::Reservoir, samples));
            }
        }
        SweepAxis::Elasticity => {
            let mut train_cfg = cfg.clone();
            train_cfg.run.scenario = Scenario::TrainFlat;
            let trained = run_training(&train_cfg)?;
            for &e in values {
                for model in [ModelKind::Reservoir, ModelKind::Baseline] {
                    let mut samples = Vec::with_capacity(trials);
                    for trial in 0..trials {
                        let mut c = cfg.clone();
                        c.run.seed = cfg.run.seed.wrapping_add(trial as u64);
                        c.run.scenario = Scenario::RoughElastic(e);
                        c.run.model = model;
                        c.validate()?;
                        let outcome = match model {
                            ModelKind::Reservoir => run_scenario(&c, &mut trained.bank.clone())?,
                            ModelKind::Baseline => run_scenario(&c, &mut trained.baseline.clone())?,
                        };
                        samples.push(outcome.summary.progress.and_then(|p| p.success_seconds()));
                    }
                    points.push(SweepPoint::new(e, model, samples));
                }
            }
        }
    }
    Ok(SweepTable { axis, points })
}
