//! Forward models, prediction-error accumulators and the reflexes they drive.

use serde::{Deserialize, Serialize};

use crate::cpg::{DelayLine, JointOffsets, BJ_NORMAL_DEG};
use crate::reservoir::{Reservoir, ReservoirParams};
use crate::rls::{RlsReadout, RlsStep};
use crate::{Error, GaitId, LegId, Phase, Result};

/// A per-leg predictor of foot contact from the CTr efference copy.
pub trait ForwardModel {
    /// Advances the model for `leg` by one tick and returns the expected
    /// contact in `[0, 1]`.
    fn predict_step(&mut self, leg: LegId, u: f64, gait: GaitId) -> Result<f64>;

    /// Clears all dynamic state (not learned parameters).
    fn reset(&mut self);
}

/// Reservoir plus readout for one leg.
#[derive(Debug, Clone, PartialEq)]
pub struct LegModel {
    pub reservoir: Reservoir,
    pub readout: RlsReadout,
}

impl LegModel {
    pub fn new(params: &ReservoirParams, delta_c: f64) -> Result<Self> {
        let reservoir = Reservoir::new(params.clone())?;
        let readout = RlsReadout::new(params.size, delta_c)?;
        Ok(Self { reservoir, readout })
    }

    /// One supervised tick: step the reservoir, then update the readout.
    pub fn train_step(&mut self, u: f64, target: f64, gait: GaitId) -> Result<RlsStep> {
        let r = self.reservoir.step(u)?;
        self.readout.step(r, target, gait)
    }

    /// Raw (unclipped) readout after stepping the reservoir.
    pub fn raw_step(&mut self, u: f64, gait: GaitId) -> Result<f64> {
        let r = self.reservoir.step(u)?;
        self.readout.predict(r, gait)
    }
}

/// Six independent forward models, one per leg, built from identical
/// parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardModelBank {
    legs: Vec<LegModel>,
}

impl ForwardModelBank {
    pub fn new(params: &ReservoirParams, delta_c: f64) -> Result<Self> {
        let model = LegModel::new(params, delta_c)?;
        Ok(Self { legs: vec![model; 6] })
    }

    pub fn from_models(legs: Vec<LegModel>) -> Result<Self> {
        if legs.len() != 6 {
            return Err(Error::Dimension { expected: 6, actual: legs.len() });
        }
        Ok(Self { legs })
    }

    pub fn leg(&self, leg: LegId) -> &LegModel {
        &self.legs[leg.index()]
    }

    pub fn leg_mut(&mut self, leg: LegId) -> &mut LegModel {
        &mut self.legs[leg.index()]
    }

    pub fn models(&self) -> &[LegModel] {
        &self.legs
    }

    pub fn set_learning(&mut self, enabled: bool) {
        for m in &mut self.legs {
            m.readout.set_learning(enabled);
        }
    }
}

impl ForwardModel for ForwardModelBank {
    fn predict_step(&mut self, leg: LegId, u: f64, gait: GaitId) -> Result<f64> {
        Ok(self.legs[leg.index()].raw_step(u, gait)?.clamp(0.0, 1.0))
    }

    fn reset(&mut self) {
        for m in &mut self.legs {
            m.reservoir.reset();
        }
    }
}

/// Self-weight of the baseline's low-pass neuron.
pub const BASELINE_SMOOTHING: f64 = 0.9;

/// Thresholded, fixed-delay square wave through a first-order low-pass:
/// `y ← 0.9·y + 0.1·[u(t − d) < 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineModel {
    delays: [usize; 3],
    lines: Vec<DelayLine>,
    y: [f64; 6],
}

impl BaselineModel {
    pub fn new(delays: [usize; 3]) -> Self {
        Self { delays, lines: vec![DelayLine::new(delays[0]); 6], y: [0.0; 6] }
    }

    pub fn delays(&self) -> [usize; 3] {
        self.delays
    }

    pub fn delay(&self, gait: GaitId) -> usize {
        self.delays[gait.index()]
    }

    pub fn set_delay(&mut self, gait: GaitId, d: usize) {
        self.delays[gait.index()] = d;
    }
}

impl ForwardModel for BaselineModel {
    fn predict_step(&mut self, leg: LegId, u: f64, gait: GaitId) -> Result<f64> {
        if !u.is_finite() {
            return Err(Error::Input(format!("non-finite efference copy {u}")));
        }
        let i = leg.index();
        let line = &mut self.lines[i];
        line.set_delay(self.delays[gait.index()]);
        let s = line.step(if u < 0.0 { 1.0 } else { 0.0 });
        self.y[i] = BASELINE_SMOOTHING * self.y[i] + (1.0 - BASELINE_SMOOTHING) * s;
        Ok(self.y[i])
    }

    fn reset(&mut self) {
        self.lines = vec![DelayLine::new(0); 6];
        self.y = [0.0; 6];
    }
}

/// Median lag (ticks) from each stance command onset (`u` turning negative)
/// to the next contact onset, capped at `max_delay`. Onsets with no contact
/// within `max_delay` ticks are ignored; 0 when none are found.
pub fn fit_baseline_delay(u: &[f64], fc: &[f64], max_delay: usize) -> usize {
    let n = u.len().min(fc.len());
    let mut lags = Vec::new();
    for t in 1..n {
        if u[t] < 0.0 && u[t - 1] >= 0.0 {
            let end = (t + max_delay + 1).min(n);
            if let Some(k) = (t..end).find(|&k| fc[k] > 0.5 && (k == 0 || fc[k - 1] <= 0.5)) {
                lags.push(k - t);
            }
        }
    }
    if lags.is_empty() {
        return 0;
    }
    lags.sort_unstable();
    lags[lags.len() / 2]
}

/// Prediction error: positive when contact was expected but missing,
/// negative when contact appears unexpectedly.
pub fn instantaneous_error(rf: f64, fc: f64) -> f64 {
    rf - fc
}

/// Searching (`S`, stance) and elevation (`E`, swing) error integrators of
/// one leg.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AccumulatorPair {
    pub s: f64,
    pub e: f64,
    phase: Option<Phase>,
    stance_peak: f64,
    /// Largest `S` of the most recently completed stance phase.
    held_max: f64,
}

/// What happened on an accumulator tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AccumulatorEvent {
    None,
    /// A stance phase just ended with this maximum `S`.
    StanceCompleted(f64),
}

impl AccumulatorPair {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn phase(&self) -> Option<Phase> {
        self.phase
    }

    pub fn max_stance_error(&self) -> f64 {
        self.held_max
    }

    pub fn step(&mut self, delta: f64, phase: Phase) -> AccumulatorEvent {
        let mut event = AccumulatorEvent::None;
        if self.phase != Some(phase) {
            match phase {
                Phase::Swing => {
                    if self.phase == Some(Phase::Stance) {
                        self.held_max = self.stance_peak;
                        event = AccumulatorEvent::StanceCompleted(self.held_max);
                    }
                    self.s = 0.0;
                    self.stance_peak = 0.0;
                }
                Phase::Stance => self.e = 0.0,
            }
            self.phase = Some(phase);
        }
        match phase {
            Phase::Stance => {
                self.s += delta.max(0.0);
                self.stance_peak = self.stance_peak.max(self.s);
            }
            Phase::Swing => self.e += (-delta).max(0.0),
        }
        event
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlGains {
    /// Searching gain per unit accumulated stance error.
    pub k_s: f64,
    /// Elevation gain per unit accumulated swing error.
    pub k_e: f64,
    pub offset_clip: f64,
    /// Front-leg forward extension per unit of held stance error.
    pub k_gap: f64,
    /// Held stance error above which front legs extend forward.
    pub gap_threshold: f64,
    pub bj: BjParams,
}

impl Default for ControlGains {
    fn default() -> Self {
        Self { k_s: 0.1, k_e: 0.1, offset_clip: 0.5, k_gap: 0.1, gap_threshold: 1.0, bj: BjParams::default() }
    }
}

impl ControlGains {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("k_s", self.k_s), ("k_e", self.k_e), ("k_gap", self.k_gap), ("offset_clip", self.offset_clip)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::config(field, format!("must be non-negative, got {v}")));
            }
        }
        self.bj.validate()
    }
}

/// Joint offsets produced from one leg's accumulators.
pub fn leg_offsets(acc: &AccumulatorPair, leg: LegId, phase: Phase, gains: &ControlGains) -> JointOffsets {
    let mut off = JointOffsets::default();
    match phase {
        Phase::Stance => {
            off.ctr = -gains.k_s * acc.s;
            off.fti = gains.k_s * acc.s;
        }
        Phase::Swing => off.ctr = gains.k_e * acc.e,
    }
    let held = acc.max_stance_error();
    if leg.is_front() && held > gains.gap_threshold {
        off.tc += gains.k_gap * held;
        off.fti += gains.k_gap * held;
    }
    let c = gains.offset_clip;
    off.tc = off.tc.clamp(-c, c);
    off.ctr = off.ctr.clamp(-c, c);
    off.fti = off.fti.clamp(-c, c);
    off
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BjParams {
    /// Held stance error that starts an upward tilt.
    pub threshold: f64,
    /// Degrees added per unit of held error at each front stance completion.
    pub k_bj: f64,
    pub up_timeout: usize,
    pub down_timeout: usize,
    pub clip_deg: f64,
}

impl Default for BjParams {
    fn default() -> Self {
        Self { threshold: 1.0, k_bj: 0.25, up_timeout: 170, down_timeout: 50, clip_deg: 30.0 }
    }
}

impl BjParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_bj >= 0.0) || !(self.threshold >= 0.0) {
            return Err(Error::config("bj", "k_bj and threshold must be non-negative"));
        }
        if !(self.clip_deg >= BJ_NORMAL_DEG.abs()) {
            return Err(Error::config("bj.clip_deg", "must admit the normal angle"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BjMode {
    Normal,
    TiltUp,
    TiltDown,
}

/// Backbone-joint timeout state machine.
///
/// A front-leg stance that ends with a held error above threshold starts an
/// upward tilt; every further front stance completion in that mode adds an
/// increment proportional to its error. After `up_timeout` ticks the joint
/// flips to the mirrored downward angle for `down_timeout` ticks and then
/// returns to normal.
#[derive(Debug, Clone, PartialEq)]
pub struct BjState {
    params: BjParams,
    angle: f64,
    mode: BjMode,
    timer: usize,
    increments: Vec<f64>,
}

impl BjState {
    pub fn new(params: BjParams) -> Self {
        Self { params, angle: BJ_NORMAL_DEG, mode: BjMode::Normal, timer: 0, increments: Vec::new() }
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn mode(&self) -> BjMode {
        self.mode
    }

    /// Increments applied during the current or most recent upward episode.
    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    fn clip(&self, a: f64) -> f64 {
        a.clamp(-self.params.clip_deg, self.params.clip_deg)
    }

    /// One tick. `front_stance_end` carries the held error whenever a front
    /// leg finished a stance phase on this tick.
    pub fn update(&mut self, front_stance_end: Option<f64>) -> f64 {
        match self.mode {
            BjMode::Normal => {
                if let Some(err) = front_stance_end.filter(|&e| e > self.params.threshold) {
                    self.mode = BjMode::TiltUp;
                    self.timer = 0;
                    self.increments.clear();
                    self.raise(err);
                }
            }
            BjMode::TiltUp => {
                self.timer += 1;
                if self.timer >= self.params.up_timeout {
                    self.mode = BjMode::TiltDown;
                    self.timer = 0;
                    self.angle = self.clip(2.0 * BJ_NORMAL_DEG - self.angle);
                } else if let Some(err) = front_stance_end.filter(|&e| e > 0.0) {
                    self.raise(err);
                }
            }
            BjMode::TiltDown => {
                self.timer += 1;
                if self.timer >= self.params.down_timeout {
                    self.mode = BjMode::Normal;
                    self.timer = 0;
                    self.angle = BJ_NORMAL_DEG;
                }
            }
        }
        self.angle
    }

    fn raise(&mut self, err: f64) {
        let before = self.angle;
        self.angle = self.clip(self.angle + self.params.k_bj * err);
        self.increments.push(self.angle - before);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_sign_convention() {
        assert_eq!(instantaneous_error(0.7, 0.7), 0.0);
        assert_eq!(instantaneous_error(1.0, 0.0), 1.0);
        assert_eq!(instantaneous_error(0.0, 1.0), -1.0);
    }

    #[test]
    fn stance_accumulation_arithmetic() {
        let mut acc = AccumulatorPair::new();
        for _ in 0..10 {
            acc.step(0.5, Phase::Stance);
        }
        assert_eq!(acc.s, 5.0);
        assert_eq!(acc.e, 0.0);
        let ev = acc.step(0.0, Phase::Swing);
        assert_eq!(ev, AccumulatorEvent::StanceCompleted(5.0));
        assert_eq!(acc.s, 0.0);
        assert_eq!(acc.max_stance_error(), 5.0);
    }

    #[test]
    fn negative_stance_error_is_ignored() {
        let mut acc = AccumulatorPair::new();
        for _ in 0..5 {
            acc.step(-1.0, Phase::Stance);
        }
        assert_eq!(acc.s, 0.0);
        for _ in 0..3 {
            acc.step(-1.0, Phase::Swing);
        }
        assert_eq!(acc.e, 3.0);
        acc.step(0.0, Phase::Stance);
        assert_eq!(acc.e, 0.0);
    }

    #[test]
    fn held_maximum_steps_down() {
        let mut acc = AccumulatorPair::new();
        for d in [1.0, 1.0, 1.0] {
            acc.step(d, Phase::Stance);
        }
        acc.step(0.0, Phase::Swing);
        assert_eq!(acc.max_stance_error(), 3.0);
        acc.step(1.0, Phase::Stance);
        assert_eq!(acc.max_stance_error(), 3.0);
        acc.step(0.0, Phase::Swing);
        assert_eq!(acc.max_stance_error(), 1.0);
    }

    #[test]
    fn offsets_from_accumulators() {
        let gains = ControlGains::default();
        let zero = AccumulatorPair::new();
        assert_eq!(leg_offsets(&zero, LegId::R2, Phase::Stance, &gains), JointOffsets::default());
        let acc = AccumulatorPair { s: 2.0, ..AccumulatorPair::default() };
        let off = leg_offsets(&acc, LegId::R2, Phase::Stance, &gains);
        assert!((off.ctr + 0.2).abs() < 1e-12 && (off.fti - 0.2).abs() < 1e-12);
        let big = AccumulatorPair { e: 50.0, ..AccumulatorPair::default() };
        assert_eq!(leg_offsets(&big, LegId::L3, Phase::Swing, &gains).ctr, 0.5);
    }

    #[test]
    fn bj_idle_without_error() {
        let mut bj = BjState::new(BjParams::default());
        for t in 0..1000 {
            let a = bj.update(if t % 40 == 0 { Some(0.0) } else { None });
            assert_eq!(a, BJ_NORMAL_DEG);
        }
    }

    #[test]
    fn bj_episode_shape() {
        let params = BjParams::default();
        let mut bj = BjState::new(params.clone());
        let mut trace = Vec::new();
        for t in 0..400 {
            let ev = (t % 40 == 0 && t < 200).then_some(10.0);
            trace.push(bj.update(ev));
        }
        let peak = trace.iter().cloned().fold(f64::MIN, f64::max);
        let low = trace.iter().cloned().fold(f64::MAX, f64::min);
        assert!(peak > BJ_NORMAL_DEG && peak <= 30.0);
        assert!(low < BJ_NORMAL_DEG && low >= -30.0);
        let up_end = trace.iter().position(|&a| a < BJ_NORMAL_DEG).unwrap();
        assert_eq!(up_end, params.up_timeout);
        assert_eq!(trace[up_end + params.down_timeout], BJ_NORMAL_DEG);
        // staircase: increments are non-negative during the up phase
        assert!(trace[..up_end].windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn baseline_converges_to_stance() {
        let mut b = BaselineModel::new([3, 3, 3]);
        let mut y = 0.0;
        for _ in 0..200 {
            y = b.predict_step(LegId::R1, -1.0, GaitId::Wave).unwrap();
        }
        assert!((y - 1.0).abs() < 1e-6);
    }

    #[test]
    fn baseline_delay_fit_recovers_shift() {
        let u: Vec<f64> = (0..400).map(|t| if (t / 20) % 2 == 0 { -1.0 } else { 1.0 }).collect();
        let fc: Vec<f64> = (0..400).map(|t| if t >= 7 && u[t - 7] < 0.0 { 1.0 } else { 0.0 }).collect();
        assert_eq!(fit_baseline_delay(&u, &fc, 15), 7);
        // contact shorter than the command (touchdown late, lift-off on time)
        let fc: Vec<f64> = (0..400).map(|t| if t >= 5 && u[t - 5] < 0.0 && u[t] < 0.0 { 1.0 } else { 0.0 }).collect();
        assert_eq!(fit_baseline_delay(&u, &fc, 15), 5);
        assert_eq!(fit_baseline_delay(&u, &vec![0.0; 400], 15), 0);
    }

    #[test]
    fn untrained_bank_predicts_zero() {
        let mut bank = ForwardModelBank::new(&ReservoirParams::default(), 1.0).unwrap();
        for t in 0..50 {
            let rf = bank.predict_step(LegId::L2, (t as f64 * 0.3).sin(), GaitId::Wave).unwrap();
            assert_eq!(rf, 0.0);
        }
    }
}
