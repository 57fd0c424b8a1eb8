use crate::control::{fit_baseline_delay, BaselineModel, ForwardModelBank};
use crate::cpg::{MotorFrame, MotorPipeline};
use crate::plant::{Plant, TerrainSpec};
use crate::reservoir::PretrainReport;
use crate::rls::RlsStep;
use crate::{Error, GaitId, LegId, Result};

use super::config::RunConfig;
use super::log::{LegRow, RunLog, TickRow};

/// Open-loop recording of motor commands and foot contact on flat ground.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FlatLog {
    pub gait: Vec<GaitId>,
    pub body_x: Vec<f64>,
    /// CTr efference copy per leg.
    pub u: [Vec<f64>; 6],
    pub fc: [Vec<f64>; 6],
    pub frames: Vec<MotorFrame>,
}

impl FlatLog {
    pub fn len(&self) -> usize {
        self.gait.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gait.is_empty()
    }
}

/// Walks `schedule` (gait, ticks) blocks on flat ground without adaptation.
pub fn record_flat_log(cfg: &RunConfig, schedule: &[(GaitId, usize)]) -> Result<FlatLog> {
    let first = schedule.first().map_or(GaitId::Wave, |s| s.0);
    let mut pipeline = MotorPipeline::new(cfg.gaits.clone(), first)?;
    pipeline.warm_up(cfg.training.warmup)?;
    let mut plant_params = cfg.plant.clone();
    plant_params.seed = cfg.plant.seed ^ cfg.run.seed;
    let total: usize = schedule.iter().map(|s| s.1).sum();
    let terrain = TerrainSpec::flat(plant_params.step_advance * total as f64 + 1000.0);
    let mut plant = Plant::new(plant_params, &terrain, 0.0)?;
    let mut log = FlatLog::default();
    for &(gait, ticks) in schedule {
        pipeline.set_gait(gait)?;
        for _ in 0..ticks {
            let frame = pipeline.step()?;
            let out = plant.step(&frame, gait);
            log.gait.push(gait);
            log.body_x.push(plant.body_x());
            for leg in LegId::ALL {
                log.u[leg.index()].push(frame.leg(leg).ctr);
                log.fc[leg.index()].push(out.fc[leg.index()]);
            }
            log.frames.push(frame);
        }
    }
    Ok(log)
}

/// The wave → tetrapod → caterpillar block schedule.
pub fn training_schedule(cfg: &RunConfig) -> Vec<(GaitId, usize)> {
    (0..cfg.training.cycles)
        .flat_map(|_| GaitId::ALL.map(|g| (g, cfg.training.block_ticks)))
        .collect()
}

#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub bank: ForwardModelBank,
    pub baseline: BaselineModel,
    pub pretrain: Vec<PretrainReport>,
    pub log: RunLog,
    /// `(gait, start tick, end tick)` of every training block.
    pub blocks: Vec<(GaitId, usize, usize)>,
}

/// Full protocol: record the gait schedule, pre-train each leg's reservoir,
/// then one RLS pass over the same recording.
pub fn run_training(cfg: &RunConfig) -> Result<TrainingOutcome> {
    cfg.validate()?;
    if cfg.training.cycles == 0 {
        return Err(Error::config("cycles", "zero training cycles leave no data to learn from"));
    }
    let schedule = training_schedule(cfg);
    let flat = record_flat_log(cfg, &schedule)?;
    let mut blocks = Vec::with_capacity(schedule.len());
    let mut t0 = 0;
    for &(g, n) in &schedule {
        blocks.push((g, t0, t0 + n));
        t0 += n;
    }

    let mut pretrain_cfg = cfg.training.pretrain.clone();
    if pretrain_cfg.validation.is_empty() {
        // one validation window in the middle of each gait's first block
        let len = pretrain_cfg.validation_len.min(cfg.training.block_ticks);
        pretrain_cfg.validation = GaitId::ALL
            .iter()
            .filter_map(|&g| blocks.iter().find(|b| b.0 == g))
            .map(|&(_, s, e)| (s + (e - s - len) / 2, len))
            .collect();
    }

    let mut bank = ForwardModelBank::new(&cfg.reservoir, cfg.rls.delta_c)?;
    let mut pretrain = Vec::with_capacity(6);
    for leg in LegId::ALL {
        let i = leg.index();
        let report = bank.leg_mut(leg).reservoir.pretrain_adapt(
            &flat.u[i],
            &flat.fc[i],
            cfg.training.pretrain_epochs,
            &pretrain_cfg,
        )?;
        pretrain.push(report);
    }

    let n = flat.len();
    // readouts are held while the pattern generator settles after a gait change
    let mut settling = vec![false; n];
    for &(_, s, e) in &blocks {
        settling[s..(s + cfg.training.settle).min(e)].fill(true);
    }
    let mut rows = Vec::with_capacity(n);
    let mut norms = vec![[[0.0; 3]; 6]; n];
    let mut leg_rows = vec![[LegRow::default(); 6]; n];
    for leg in LegId::ALL {
        let i = leg.index();
        let model = bank.leg_mut(leg);
        model.reservoir.reset();
        for t in 0..n {
            let step = if settling[t] {
                let prediction = model.raw_step(flat.u[i][t], flat.gait[t])?;
                RlsStep { prediction, error: prediction - flat.fc[i][t] }
            } else {
                model.train_step(flat.u[i][t], flat.fc[i][t], flat.gait[t])?
            };
            leg_rows[t][i] = LegRow {
                u: flat.u[i][t],
                rf: step.prediction,
                fc: flat.fc[i][t],
                delta: step.prediction - flat.fc[i][t],
                ..LegRow::default()
            };
            norms[t][i] = GaitId::ALL.map(|g| model.readout.column_norm(g));
        }
        model.reservoir.reset();
    }
    bank.set_learning(false);
    for t in 0..n {
        rows.push(TickRow {
            tick: t,
            gait: flat.gait[t],
            body_x: flat.body_x[t],
            bj: crate::cpg::BJ_NORMAL_DEG,
            legs: leg_rows[t],
        });
    }

    let mut baseline = BaselineModel::new([0; 3]);
    for gait in GaitId::ALL {
        if let Some(&(_, s, e)) = blocks.iter().find(|b| b.0 == gait) {
            let mut fits: Vec<usize> = LegId::ALL
                .iter()
                .map(|l| fit_baseline_delay(&flat.u[l.index()][s..e], &flat.fc[l.index()][s..e], cfg.training.baseline_max_delay))
                .collect();
            fits.sort_unstable();
            baseline.set_delay(gait, fits[fits.len() / 2]);
        }
    }

    Ok(TrainingOutcome {
        bank,
        baseline,
        pretrain,
        log: RunLog { config_echo: cfg.echo(), rows, weight_norms: norms },
        blocks,
    })
}
