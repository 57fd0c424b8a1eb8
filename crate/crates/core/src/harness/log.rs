use crate::cpg::JointOffsets;
use crate::plant::{progress_metrics, PlantParams, Progress, TerrainSpec};
use crate::{GaitId, LegId};

/// Per-leg values of one logged tick.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LegRow {
    /// Efference copy fed to the forward model.
    pub u: f64,
    pub rf: f64,
    pub fc: f64,
    pub delta: f64,
    pub s: f64,
    pub e: f64,
    pub offsets: JointOffsets,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickRow {
    pub tick: usize,
    pub gait: GaitId,
    pub body_x: f64,
    pub bj: f64,
    pub legs: [LegRow; 6],
}

/// Error statistics of one leg at one gait.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmseEntry {
    pub gait: GaitId,
    pub leg: LegId,
    pub nmse: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Summary {
    pub nmse: Vec<NmseEntry>,
    pub progress: Option<Progress>,
}

impl Summary {
    pub fn nmse_of(&self, gait: GaitId, leg: LegId) -> Option<f64> {
        self.nmse.iter().find(|e| e.gait == gait && e.leg == leg).map(|e| e.nmse)
    }

    pub fn worst_nmse(&self) -> Option<f64> {
        self.nmse.iter().map(|e| e.nmse).fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunLog {
    /// Effective configuration (TOML) the run was produced with.
    pub config_echo: String,
    pub rows: Vec<TickRow>,
    /// Readout column norms per tick and leg, filled by training runs only.
    pub weight_norms: Vec<[[f64; 3]; 6]>,
}

/// Mean squared error divided by target variance; `None` for a constant
/// target.
pub fn nmse(prediction: &[f64], target: &[f64]) -> Option<f64> {
    let n = prediction.len().min(target.len());
    if n == 0 {
        return None;
    }
    let mean = target[..n].iter().sum::<f64>() / n as f64;
    let var = target[..n].iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n as f64;
    if var <= 0.0 {
        return None;
    }
    let mse = prediction[..n].iter().zip(&target[..n]).map(|(z, d)| (z - d).powi(2)).sum::<f64>() / n as f64;
    Some(mse / var)
}

/// NMSE per gait and leg over `rows`, skipping the first `transient` ticks
/// of the run and after every gait change. Progress is added when the
/// terrain is known.
pub fn summarize(rows: &[TickRow], transient: usize, terrain: Option<(&TerrainSpec, &PlantParams)>) -> Summary {
    let mut keep = Vec::with_capacity(rows.len());
    let mut since_change = 0usize;
    let mut prev_gait = None;
    for row in rows {
        if prev_gait != Some(row.gait) {
            since_change = 0;
            prev_gait = Some(row.gait);
        }
        keep.push(since_change >= transient);
        since_change += 1;
    }
    let mut nmse_entries = Vec::new();
    for gait in GaitId::ALL {
        for leg in LegId::ALL {
            let i = leg.index();
            let (z, d): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .zip(&keep)
                .filter(|(r, &k)| k && r.gait == gait)
                .map(|(r, _)| (r.legs[i].rf, r.legs[i].fc))
                .unzip();
            if let Some(v) = nmse(&z, &d) {
                nmse_entries.push(NmseEntry { gait, leg, nmse: v, samples: z.len() });
            }
        }
    }
    let progress = terrain.map(|(t, p)| {
        let trace: Vec<f64> = rows.iter().map(|r| r.body_x).collect();
        progress_metrics(&trace, t, p)
    });
    Summary { nmse: nmse_entries, progress }
}
