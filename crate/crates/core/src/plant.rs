//! One-dimensional kinematic walker.
//!
//! The body is a point moving along x (the front hip); feet are planted at
//! touchdown and stay put through stance. Contact sensing, gaps, rough
//! ground, obstacles and stairs are all reduced to rules on foot positions
//! and phase timing. Nothing here is dynamics: the plant only has to turn
//! motor frames into believable foot-contact signals and forward progress.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cpg::MotorFrame;
use crate::{Error, GaitId, LegId, Result, TICK_SECONDS};

/// Widest gap the robot is expected to cross.
pub const MAX_CROSSABLE_GAP_CM: f64 = 15.0;

/// Ticks from stance onset until the foot-contact signal rises on flat ground.
pub fn lag_model(gait: GaitId) -> usize {
    match gait {
        GaitId::Wave => 8,
        GaitId::Tetrapod => 5,
        GaitId::Caterpillar => 3,
    }
}

fn default_obstacle_length() -> f64 {
    20.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Segment {
    Flat {
        length: f64,
    },
    Gap {
        length: f64,
    },
    Rough {
        length: f64,
        obstacle_height: f64,
        elasticity: f64,
    },
    Obstacle {
        height: f64,
        #[serde(default = "default_obstacle_length")]
        length: f64,
    },
    /// Ascending steps, one body length deep each.
    Stairs {
        step_height: f64,
        count: usize,
    },
}

impl Segment {
    pub fn length(&self, body_length: f64) -> f64 {
        match *self {
            Segment::Flat { length }
            | Segment::Gap { length }
            | Segment::Rough { length, .. }
            | Segment::Obstacle { length, .. } => length,
            Segment::Stairs { count, .. } => count as f64 * body_length,
        }
    }

    pub fn is_flat(&self) -> bool {
        matches!(self, Segment::Flat { .. })
    }

    /// Only meaningful for gaps; every other segment is trivially crossable.
    pub fn crossable(&self) -> bool {
        match *self {
            Segment::Gap { length } => length <= MAX_CROSSABLE_GAP_CM,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerrainSpec {
    /// x position (cm) where the first segment begins; flat ground before it.
    pub start: f64,
    pub segments: Vec<Segment>,
}

impl Default for TerrainSpec {
    fn default() -> Self {
        Self { start: 0.0, segments: vec![Segment::Flat { length: 1000.0 }] }
    }
}

impl TerrainSpec {
    pub fn flat(length: f64) -> Self {
        Self { start: 0.0, segments: vec![Segment::Flat { length }] }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.start.is_finite() {
            return Err(Error::config("terrain.start", "must be finite"));
        }
        for seg in &self.segments {
            let bad = match *seg {
                Segment::Flat { length } | Segment::Gap { length } => !(length > 0.0),
                Segment::Rough { length, obstacle_height, elasticity } => {
                    !(length > 0.0) || !(obstacle_height >= 0.0) || !(elasticity >= 1.0)
                }
                Segment::Obstacle { height, length } => !(length > 0.0) || !(height >= 0.0),
                Segment::Stairs { step_height, count } => count == 0 || !(step_height >= 0.0),
            };
            if bad {
                return Err(Error::config("terrain.segments", format!("invalid segment {seg:?}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Surface {
    Ground,
    Gap,
    Rough { elasticity: f64 },
}

#[derive(Debug, Clone, PartialEq)]
struct Placed {
    x0: f64,
    x1: f64,
    surface: Surface,
    /// Ground level over the segment relative to the level before it.
    rise: f64,
    step: Option<(f64, f64)>,
    flat: bool,
}

/// Terrain resolved into absolute positions, with rough-ground bumps drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct TerrainLayout {
    placed: Vec<Placed>,
    bumps: Vec<(f64, f64, f64)>,
    final_level: f64,
}

impl TerrainLayout {
    pub fn new(spec: &TerrainSpec, params: &PlantParams, rng: &mut ChaCha8Rng) -> Result<Self> {
        spec.validate()?;
        let mut placed = Vec::with_capacity(spec.segments.len());
        let mut bumps = Vec::new();
        let mut x = spec.start;
        let mut level = 0.0;
        for seg in &spec.segments {
            let len = seg.length(params.body_length);
            let (x0, x1) = (x, x + len);
            let mut p = Placed { x0, x1, surface: Surface::Ground, rise: level, step: None, flat: seg.is_flat() };
            match *seg {
                Segment::Flat { .. } => {}
                Segment::Gap { .. } => p.surface = Surface::Gap,
                Segment::Rough { obstacle_height, elasticity, .. } => {
                    p.surface = Surface::Rough { elasticity };
                    let mut bx = x0 + rng.random_range(0.0..params.bump_spacing);
                    while bx + params.bump_width < x1 {
                        bumps.push((bx, bx + params.bump_width, obstacle_height));
                        bx += params.bump_spacing * rng.random_range(0.5..1.5);
                    }
                }
                Segment::Obstacle { height, .. } => p.rise = level + height,
                Segment::Stairs { step_height, .. } => {
                    p.step = Some((level, step_height));
                    level += step_height * (len / params.body_length).round();
                }
            }
            placed.push(p);
            x = x1;
        }
        Ok(Self { placed, bumps, final_level: level })
    }

    fn segment_at(&self, x: f64) -> Option<&Placed> {
        self.placed.iter().find(|p| x >= p.x0 && x < p.x1)
    }

    pub fn is_gap(&self, x: f64) -> bool {
        matches!(self.segment_at(x), Some(Placed { surface: Surface::Gap, .. }))
    }

    pub fn elasticity_at(&self, x: f64) -> Option<f64> {
        match self.segment_at(x) {
            Some(Placed { surface: Surface::Rough { elasticity }, .. }) => Some(*elasticity),
            _ => None,
        }
    }

    /// Height of the walking surface at `x` (cm). Gaps report the level of
    /// the surrounding ground; they are handled separately.
    pub fn ground_level(&self, x: f64, body_length: f64) -> f64 {
        let base = match self.segment_at(x) {
            Some(p) => match p.step {
                Some((from, h)) => from + h * (((x - p.x0) / body_length).floor() + 1.0),
                None => p.rise,
            },
            None if self.placed.first().is_some_and(|p| x < p.x0) => 0.0,
            None => self.final_level,
        };
        let bump = self
            .bumps
            .iter()
            .filter(|&&(b0, b1, _)| x >= b0 && x < b1)
            .map(|&(_, _, h)| h)
            .fold(0.0, f64::max);
        base + bump
    }

    /// A swing moving from `from` to `to` hits anything taller than `top`.
    pub fn path_blocked(&self, from: f64, to: f64, top: f64, body_length: f64) -> bool {
        if to <= from {
            return false;
        }
        let n = ((to - from) / 0.25).ceil() as usize;
        (1..=n).any(|k| {
            let x = from + (to - from) * k as f64 / n as f64;
            !self.is_gap(x) && self.ground_level(x, body_length) > top
        })
    }

    /// End x of the last segment that is not flat ground.
    pub fn last_feature_end(&self) -> Option<f64> {
        self.placed.iter().rev().find(|p| !p.flat).map(|p| p.x1)
    }

    /// x range of every gap, in order.
    pub fn gaps(&self) -> Vec<(f64, f64)> {
        self.placed.iter().filter(|p| p.surface == Surface::Gap).map(|p| (p.x0, p.x1)).collect()
    }

    pub fn rough_spans(&self) -> Vec<(f64, f64)> {
        self.placed
            .iter()
            .filter(|p| matches!(p.surface, Surface::Rough { .. }))
            .map(|p| (p.x0, p.x1))
            .collect()
    }

    pub fn bumps(&self) -> &[(f64, f64, f64)] {
        &self.bumps
    }
}

/// Geometry and contact constants of the stand-in robot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantParams {
    pub body_length: f64,
    pub leg_length: f64,
    /// Body advance per tick while the propulsion condition holds (cm).
    pub step_advance: f64,
    /// Foot speed during swing (cm/tick).
    pub swing_speed: f64,
    /// Touchdown reach at zero offsets, as a fraction of leg length.
    pub base_reach: f64,
    pub reach_per_bj_deg: f64,
    pub reach_per_offset: f64,
    /// Foot clearance during swing with no elevation offset (cm).
    pub clearance: f64,
    /// Extra clearance per unit of positive CTr offset (cm).
    pub lift_per_offset: f64,
    /// Extra front-leg clearance per degree of upward backbone tilt (cm).
    pub lift_per_bj_deg: f64,
    pub rough_dropout: f64,
    /// Extra touchdown delay per elasticity unit above 1 (ticks).
    pub elastic_delay: f64,
    pub bump_spacing: f64,
    pub bump_width: f64,
    /// Minimum number of contacting stance legs for the body to advance,
    /// per gait (wave, tetrapod, caterpillar).
    pub min_support: [usize; 3],
    pub seed: u64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            body_length: 34.0,
            leg_length: 17.5,
            step_advance: 0.5,
            swing_speed: 3.0,
            base_reach: 0.6,
            reach_per_bj_deg: 0.02,
            reach_per_offset: 0.3,
            clearance: 5.0,
            lift_per_offset: 12.0,
            lift_per_bj_deg: 0.3,
            rough_dropout: 0.3,
            elastic_delay: 2.0,
            bump_spacing: 15.0,
            bump_width: 2.0,
            min_support: [3, 3, 2],
            seed: 11,
        }
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("body_length", self.body_length),
            ("leg_length", self.leg_length),
            ("step_advance", self.step_advance),
            ("swing_speed", self.swing_speed),
            ("bump_spacing", self.bump_spacing),
            ("bump_width", self.bump_width),
        ];
        for (field, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(field, format!("must be positive, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.rough_dropout) {
            return Err(Error::config("rough_dropout", "must be a probability"));
        }
        if self.min_support.iter().any(|&m| m == 0 || m > 6) {
            return Err(Error::config("min_support", "must be between 1 and 6"));
        }
        Ok(())
    }

    /// Hip x position of a leg given the front hip position.
    pub fn hip_x(&self, body_x: f64, leg: LegId) -> f64 {
        body_x - self.body_length * 0.5 * leg.segment() as f64
    }

    /// Touchdown reach ahead of the hip (cm).
    pub fn reach(&self, leg: LegId, tc_off: f64, fti_off: f64, bj_deg: f64) -> f64 {
        let bj = if leg.is_front() { self.reach_per_bj_deg * (-bj_deg).max(0.0) } else { 0.0 };
        let ext = self.reach_per_offset * (tc_off.clamp(-0.5, 0.5) + fti_off.clamp(-0.5, 0.5));
        self.leg_length * (self.base_reach + bj + ext).max(0.0)
    }

    /// Swing clearance (cm).
    pub fn swing_clearance(&self, leg: LegId, ctr_off: f64, bj_deg: f64) -> f64 {
        let bj = if leg.is_front() { self.lift_per_bj_deg * bj_deg.max(0.0) } else { 0.0 };
        self.clearance + self.lift_per_offset * ctr_off.max(0.0) + bj
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegState {
    pub foot_x: f64,
    pub in_stance: bool,
    pub contact: f64,
    /// Ticks since the current phase began.
    pub phase_ticks: usize,
    /// Foot is planted on ground (stance) and no longer searching.
    pub planted: bool,
    /// Ground level under the last touchdown.
    pub stand_level: f64,
    pub striking: bool,
}

/// One tick of plant output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantOutput {
    pub fc: [f64; 6],
    pub advanced: bool,
    pub strikes: [bool; 6],
}

#[derive(Debug, Clone)]
pub struct Plant {
    params: PlantParams,
    layout: TerrainLayout,
    body_x: f64,
    legs: [LegState; 6],
    tick: u64,
    rng: ChaCha8Rng,
}

impl Plant {
    /// Starts with the front hip at `body_x`, every foot at its neutral reach
    /// and in swing, so the first stance onset produces a regular touchdown.
    pub fn new(params: PlantParams, terrain: &TerrainSpec, body_x: f64) -> Result<Self> {
        params.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let layout = TerrainLayout::new(terrain, &params, &mut rng)?;
        let legs = std::array::from_fn(|i| {
            let leg = LegId::ALL[i];
            let foot_x = params.hip_x(body_x, leg) + params.reach(leg, 0.0, 0.0, crate::cpg::BJ_NORMAL_DEG);
            LegState {
                foot_x,
                in_stance: false,
                contact: 0.0,
                phase_ticks: 0,
                planted: false,
                stand_level: layout.ground_level(foot_x, params.body_length),
                striking: false,
            }
        });
        Ok(Self { params, layout, body_x, legs, tick: 0, rng })
    }

    pub fn params(&self) -> &PlantParams {
        &self.params
    }

    pub fn layout(&self) -> &TerrainLayout {
        &self.layout
    }

    pub fn body_x(&self) -> f64 {
        self.body_x
    }

    pub fn legs(&self) -> &[LegState; 6] {
        &self.legs
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn step(&mut self, frame: &MotorFrame, gait: GaitId) -> PlantOutput {
        let lag = lag_model(gait);
        let p = self.params.clone();
        let mut fc = [0.0; 6];
        let mut strikes = [false; 6];
        for leg in LegId::ALL {
            let i = leg.index();
            let base = frame.leg(leg);
            let off = frame.offsets[i];
            let stance = base.ctr < 0.0;
            let hip = p.hip_x(self.body_x, leg);
            let reach = p.reach(leg, off.tc, off.fti, frame.bj_deg);
            let target = hip + reach;
            let state = &mut self.legs[i];
            if stance != state.in_stance {
                state.in_stance = stance;
                state.phase_ticks = 0;
                state.planted = false;
                state.striking = false;
                if stance {
                    state.foot_x = state.foot_x.max(target.min(state.foot_x + p.swing_speed));
                }
            } else {
                state.phase_ticks += 1;
            }

            if stance {
                if !state.planted {
                    // searching: an unsupported foot follows the current reach
                    if self.layout.is_gap(state.foot_x) {
                        state.foot_x = state.foot_x.max(target);
                    }
                    let over_gap = self.layout.is_gap(state.foot_x);
                    let ctr_depress = off.ctr.min(0.0).abs().min(0.5);
                    let delay = match self.layout.elasticity_at(state.foot_x) {
                        Some(e) => (p.elastic_delay * (e - 1.0) * (1.0 - ctr_depress)).round() as usize,
                        None => 0,
                    };
                    if !over_gap && state.phase_ticks >= lag + delay {
                        state.planted = true;
                        state.stand_level = self.layout.ground_level(state.foot_x, p.body_length);
                    }
                }
                let mut c = if state.planted { 1.0 } else { 0.0 };
                if state.planted && self.layout.elasticity_at(state.foot_x).is_some() {
                    let depress = off.ctr.min(0.0).abs().min(0.5);
                    let prob = p.rough_dropout * (1.0 - depress / 0.5);
                    if self.rng.random::<f64>() < prob {
                        c = 0.0;
                    }
                }
                state.contact = c;
            } else {
                let clearance = p.swing_clearance(leg, off.ctr, frame.bj_deg);
                let next = if state.foot_x < target { (state.foot_x + p.swing_speed).min(target) } else { state.foot_x };
                let blocked = self.layout.path_blocked(state.foot_x, next, state.stand_level + clearance, p.body_length);
                state.striking = blocked;
                if !blocked {
                    state.foot_x = next;
                }
                state.contact = if blocked { 1.0 } else { 0.0 };
            }
            fc[i] = state.contact;
            strikes[i] = state.striking;
        }

        let support = self.legs.iter().filter(|l| l.in_stance && l.contact > 0.0).count();
        let any_strike = strikes.iter().any(|&s| s);
        let front_hip_unsupported = self.layout.is_gap(self.body_x)
            && !LegId::ALL.iter().any(|l| l.is_front() && self.legs[l.index()].in_stance && self.legs[l.index()].planted);
        let advanced = support >= p.min_support[gait.index()] && !any_strike && !front_hip_unsupported;
        if advanced {
            self.body_x += p.step_advance;
        }
        self.tick += 1;
        PlantOutput { fc, advanced, strikes }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Corruption {
    GaussianNoise { percent: f64, start: usize, end: usize },
    Dropout { start: usize, end: usize },
}

impl Corruption {
    pub fn window(&self) -> (usize, usize) {
        match *self {
            Corruption::GaussianNoise { start, end, .. } | Corruption::Dropout { start, end } => (start, end),
        }
    }

    pub fn validate(&self, len: usize) -> Result<()> {
        let (start, end) = self.window();
        if start > end || end >= len {
            return Err(Error::config("corruption", format!("window [{start}, {end}] outside a {len}-tick run")));
        }
        if let Corruption::GaussianNoise { percent, .. } = *self {
            if !(percent >= 0.0) || !percent.is_finite() {
                return Err(Error::config("corruption.percent", "must be non-negative"));
            }
        }
        Ok(())
    }
}

/// Applies a corruption window (inclusive) to a recorded stream. Noise
/// standard deviation is `percent / 100` of the stream's range.
pub fn inject_corruption(stream: &[f64], c: &Corruption, seed: u64) -> Result<Vec<f64>> {
    c.validate(stream.len())?;
    let mut out = stream.to_vec();
    let (start, end) = c.window();
    match *c {
        Corruption::Dropout { .. } => out[start..=end].fill(0.0),
        Corruption::GaussianNoise { percent, .. } => {
            if percent > 0.0 {
                let (lo, hi) = stream.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
                let sd = percent / 100.0 * (hi - lo);
                let normal = Normal::new(0.0, sd).map_err(|e| Error::Numeric(e.to_string()))?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for v in &mut out[start..=end] {
                    *v += normal.sample(&mut rng);
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    pub success: bool,
    pub success_tick: Option<usize>,
    pub distance: f64,
}

impl Progress {
    pub fn success_seconds(&self) -> Option<f64> {
        self.success_tick.map(|t| t as f64 * TICK_SECONDS)
    }
}

/// Success once the hind hip has passed the end of the last non-flat
/// segment (or the end of the terrain if it is all flat).
pub fn progress_metrics(body_trace: &[f64], terrain: &TerrainSpec, params: &PlantParams) -> Progress {
    let goal = {
        let mut x = terrain.start;
        let mut last = None;
        for seg in &terrain.segments {
            x += seg.length(params.body_length);
            if !seg.is_flat() {
                last = Some(x);
            }
        }
        last.unwrap_or(x)
    };
    let success_tick = body_trace.iter().position(|&b| b - params.body_length > goal);
    let distance = match (body_trace.first(), body_trace.last()) {
        (Some(a), Some(b)) => b - a,
        _ => 0.0,
    };
    Progress { success: success_tick.is_some(), success_tick, distance }
}
