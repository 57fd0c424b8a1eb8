use crate::control::{
    instantaneous_error, leg_offsets, AccumulatorEvent, AccumulatorPair, BjMode, BjState, ForwardModel,
};
use crate::cpg::{JointOffsets, MotorPipeline};
use crate::plant::{inject_corruption, Corruption, Plant, PlantParams};
use crate::{GaitId, LegId, Phase, Result};

use super::config::RunConfig;
use super::log::{summarize, LegRow, RunLog, Summary, TickRow};
use super::training::record_flat_log;

/// Ticks the forward model is driven before an open-loop evaluation starts.
pub const EVAL_PREROLL: usize = 200;

/// One upward/downward backbone excursion.
#[derive(Debug, Clone, PartialEq)]
pub struct BjEpisode {
    pub start: usize,
    pub down_start: Option<usize>,
    pub end: Option<usize>,
    pub increments: Vec<f64>,
    pub peak: f64,
    pub trough: f64,
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub log: RunLog,
    pub summary: Summary,
    pub episodes: Vec<BjEpisode>,
}

/// Plant parameters with the trial seed folded in.
pub fn trial_plant(cfg: &RunConfig) -> PlantParams {
    let mut p = cfg.plant.clone();
    p.seed = cfg.plant.seed ^ cfg.run.seed;
    p
}

/// Closed loop: pattern generator → plant → forward models → accumulators
/// → joint offsets and backbone joint, fed back on the next tick.
pub fn run_scenario(cfg: &RunConfig, model: &mut dyn ForwardModel) -> Result<ScenarioOutcome> {
    cfg.validate()?;
    let gait = cfg.run.scenario.gait();
    let terrain = cfg.terrain();
    let plant_params = trial_plant(cfg);
    let mut plant = Plant::new(plant_params.clone(), &terrain, 0.0)?;
    let mut pipeline = MotorPipeline::new(cfg.gaits.clone(), gait)?;
    model.reset();
    for _ in 0..cfg.training.warmup {
        let frame = pipeline.step()?;
        for leg in LegId::ALL {
            model.predict_step(leg, frame.leg(leg).ctr, gait)?;
        }
    }

    let gains = &cfg.control;
    let adapt = cfg.run.adaptation;
    let mut accs = [AccumulatorPair::new(); 6];
    let mut offsets = [JointOffsets::default(); 6];
    let mut bj = BjState::new(gains.bj.clone());
    let mut episodes: Vec<BjEpisode> = Vec::new();
    let ticks = cfg.ticks();
    let mut rows = Vec::with_capacity(ticks);

    for t in 0..ticks {
        let mut frame = pipeline.step()?;
        frame.offsets = offsets;
        frame.bj_deg = bj.angle();
        let out = plant.step(&frame, gait);
        let mut legs = [LegRow::default(); 6];
        let mut front_end: Option<f64> = None;
        for leg in LegId::ALL {
            let i = leg.index();
            let u = frame.leg(leg).ctr;
            let rf = model.predict_step(leg, u, gait)?;
            let fc = out.fc[i];
            let phase = Phase::from_ctr(u);
            let delta = if t >= cfg.training.transient { instantaneous_error(rf, fc) } else { 0.0 };
            if let AccumulatorEvent::StanceCompleted(m) = accs[i].step(delta, phase) {
                if leg.is_front() {
                    front_end = Some(front_end.map_or(m, |f| f.max(m)));
                }
            }
            offsets[i] = if adapt { leg_offsets(&accs[i], leg, phase, gains) } else { JointOffsets::default() };
            legs[i] = LegRow { u, rf, fc, delta, s: accs[i].s, e: accs[i].e, offsets: frame.offsets[i] };
        }
        if adapt {
            let before = bj.mode();
            bj.update(front_end);
            track_episode(&mut episodes, before, &bj, t);
        }
        rows.push(TickRow { tick: t, gait, body_x: plant.body_x(), bj: frame.bj_deg, legs });
    }

    let summary = summarize(&rows, cfg.training.transient, Some((&terrain, &plant_params)));
    Ok(ScenarioOutcome { log: RunLog { config_echo: cfg.echo(), rows, weight_norms: Vec::new() }, summary, episodes })
}

fn track_episode(episodes: &mut Vec<BjEpisode>, before: BjMode, bj: &BjState, t: usize) {
    let after = bj.mode();
    match (before, after) {
        (BjMode::Normal, BjMode::TiltUp) => episodes.push(BjEpisode {
            start: t,
            down_start: None,
            end: None,
            increments: Vec::new(),
            peak: bj.angle(),
            trough: bj.angle(),
        }),
        (BjMode::TiltUp, BjMode::TiltDown) => {
            if let Some(ep) = episodes.last_mut() {
                ep.down_start = Some(t);
            }
        }
        (BjMode::TiltDown, BjMode::Normal) => {
            if let Some(ep) = episodes.last_mut() {
                ep.end = Some(t);
            }
        }
        _ => {}
    }
    if let Some(ep) = episodes.last_mut() {
        if ep.end.is_none() {
            ep.increments = bj.increments().to_vec();
            ep.peak = ep.peak.max(bj.angle());
            ep.trough = ep.trough.min(bj.angle());
        }
    }
}

/// Open-loop prediction on flat ground at one gait, optionally with the
/// efference copy corrupted. Corruption windows count from the first
/// evaluated tick; the model is primed for [`EVAL_PREROLL`] ticks before.
pub fn evaluate_prediction(
    cfg: &RunConfig,
    model: &mut dyn ForwardModel,
    gait: GaitId,
    ticks: usize,
    corruption: Option<&Corruption>,
) -> Result<(Summary, RunLog)> {
    let flat = record_flat_log(cfg, &[(gait, EVAL_PREROLL + ticks)])?;
    let mut inputs: [Vec<f64>; 6] = std::array::from_fn(|i| flat.u[i][EVAL_PREROLL..].to_vec());
    if let Some(c) = corruption {
        for leg in LegId::ALL {
            inputs[leg.index()] = inject_corruption(&inputs[leg.index()], c, cfg.run.seed.wrapping_add(leg.index() as u64))?;
        }
    }
    model.reset();
    for t in 0..EVAL_PREROLL {
        for leg in LegId::ALL {
            model.predict_step(leg, flat.u[leg.index()][t], gait)?;
        }
    }
    let mut rows = Vec::with_capacity(ticks);
    for t in 0..ticks {
        let mut legs = [LegRow::default(); 6];
        for leg in LegId::ALL {
            let i = leg.index();
            let u = inputs[i][t];
            let rf = model.predict_step(leg, u, gait)?;
            let fc = flat.fc[i][EVAL_PREROLL + t];
            legs[i] = LegRow { u, rf, fc, delta: instantaneous_error(rf, fc), ..LegRow::default() };
        }
        rows.push(TickRow {
            tick: t,
            gait,
            body_x: flat.body_x[EVAL_PREROLL + t],
            bj: crate::cpg::BJ_NORMAL_DEG,
            legs,
        });
    }
    let summary = summarize(&rows, cfg.training.transient, None);
    Ok((summary, RunLog { config_echo: cfg.echo(), rows, weight_norms: Vec::new() }))
}

/// Clean open-loop NMSE at every gait, `ticks` evaluated ticks each.
pub fn flat_nmse(cfg: &RunConfig, model: &mut dyn ForwardModel, ticks: usize) -> Result<Summary> {
    let mut nmse = Vec::new();
    for gait in GaitId::ALL {
        let (s, _) = evaluate_prediction(cfg, model, gait, ticks, None)?;
        nmse.extend(s.nmse);
    }
    Ok(Summary { nmse, progress: None })
}
