//! Motor pattern generation: a two-neuron oscillator, post-processing into
//! stance/swing trapezoids, and per-leg delay lines that set the gait's
//! inter-leg phase offsets.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::{Error, GaitId, LegId, Result};

/// Normal backbone-joint angle in degrees.
pub const BJ_NORMAL_DEG: f64 = -2.0;

/// Fraction of a period spanned by each linear ramp of the shaped output.
pub const RAMP_FRACTION: f64 = 0.1;

/// Phase-rotation angle of the oscillator for a modulatory input.
pub fn phi_of_mi(mi: f64) -> f64 {
    0.02 + 0.5 * mi
}

/// Two-neuron fully connected tanh oscillator.
///
/// With `w11 = w22 = α cos φ`, `w12 = α sin φ`, `w21 = −α sin φ` and `α`
/// slightly above one the origin is unstable and the outputs settle on a
/// small limit cycle rotating by roughly `φ` per tick.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpg {
    o1: f64,
    o2: f64,
    alpha: f64,
    phi: f64,
    mi_range: (f64, f64),
}

impl Cpg {
    pub const DEFAULT_ALPHA: f64 = 1.01;

    pub fn new(alpha: f64, mi_range: (f64, f64)) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::config("alpha", "must be positive"));
        }
        if !(mi_range.0 <= mi_range.1) {
            return Err(Error::config("mi_range", "lower bound exceeds upper bound"));
        }
        let mut cpg = Self { o1: 0.0, o2: 0.0, alpha, phi: phi_of_mi(mi_range.0), mi_range };
        cpg.reset();
        Ok(cpg)
    }

    /// Back to the seeded start `(0.1, 0)`.
    pub fn reset(&mut self) {
        self.o1 = 0.1;
        self.o2 = 0.0;
    }

    pub fn set_outputs(&mut self, o1: f64, o2: f64) {
        self.o1 = o1.clamp(-1.0, 1.0);
        self.o2 = o2.clamp(-1.0, 1.0);
    }

    pub fn outputs(&self) -> (f64, f64) {
        (self.o1, self.o2)
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn step(&mut self, mi: f64) -> Result<(f64, f64)> {
        let (lo, hi) = self.mi_range;
        if !(mi >= lo && mi <= hi) {
            return Err(Error::config("mi", format!("modulatory input {mi} outside [{lo}, {hi}]")));
        }
        self.phi = phi_of_mi(mi);
        let (s, c) = self.phi.sin_cos();
        let w_self = self.alpha * c;
        let w_cross = self.alpha * s;
        let n1 = (w_self * self.o1 + w_cross * self.o2).tanh();
        let n2 = (-w_cross * self.o1 + w_self * self.o2).tanh();
        self.o1 = n1;
        self.o2 = n2;
        Ok((n1, n2))
    }
}

/// Trapezoid over one cycle: `−1` stance plateau for `duty` of the cycle
/// starting at phase 0, `+1` swing plateau otherwise, with linear ramps of
/// width `RAMP_FRACTION` centred on both transitions.
pub fn trapezoid(phase: f64, duty: f64) -> f64 {
    let p = phase.rem_euclid(1.0);
    let width = RAMP_FRACTION.min(duty).min(1.0 - duty);
    let to_onset = p.min(1.0 - p);
    let to_end = (p - duty).abs();
    let edge = to_onset.min(to_end);
    let level = if width > 0.0 { (2.0 * edge / width).min(1.0) } else { 1.0 };
    if p < duty {
        -level
    } else {
        level
    }
}

/// CPG post-processing unit.
///
/// Tracks upward zero crossings of its input and replaces the oscillation by
/// a [`trapezoid`] timed from the last crossing and the last measured period.
/// Until a full cycle has been seen the input passes through unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct Pcpg {
    duty: f64,
    tick: u64,
    prev: f64,
    last_cross: Option<u64>,
    period: Option<f64>,
}

impl Pcpg {
    pub fn new(duty: f64) -> Result<Self> {
        check_duty(duty)?;
        Ok(Self { duty, tick: 0, prev: 0.0, last_cross: None, period: None })
    }

    pub fn set_duty(&mut self, duty: f64) -> Result<()> {
        check_duty(duty)?;
        self.duty = duty;
        Ok(())
    }

    pub fn duty(&self) -> f64 {
        self.duty
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    /// Phase in `[0, 1)` of the current tick, once a cycle has been measured.
    pub fn phase(&self) -> Option<f64> {
        let (cross, period) = (self.last_cross?, self.period?);
        Some(((self.tick - 1 - cross) as f64 / period).rem_euclid(1.0))
    }

    pub fn shape(&mut self, o: f64) -> f64 {
        let t = self.tick;
        self.tick += 1;
        if self.prev < 0.0 && o >= 0.0 {
            if let Some(prev_cross) = self.last_cross {
                self.period = Some((t - prev_cross) as f64);
            }
            self.last_cross = Some(t);
        }
        self.prev = o;
        match self.phase() {
            Some(p) => trapezoid(p, self.duty),
            None => o,
        }
    }
}

fn check_duty(duty: f64) -> Result<()> {
    if !(duty > 0.0 && duty < 1.0) {
        return Err(Error::config("duty", format!("must lie in (0, 1), got {duty}")));
    }
    Ok(())
}

/// Fixed delay line: returns the sample pushed `delay` ticks ago, zero
/// before that many samples have been seen. The delay can be changed on
/// the fly; history is kept for the largest delay requested so far.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayLine {
    delay: usize,
    history: VecDeque<f64>,
    capacity: usize,
}

impl DelayLine {
    pub fn new(delay: usize) -> Self {
        Self { delay, history: VecDeque::with_capacity(delay + 1), capacity: delay + 1 }
    }

    pub fn delay(&self) -> usize {
        self.delay
    }

    pub fn set_delay(&mut self, delay: usize) {
        self.delay = delay;
        self.capacity = self.capacity.max(delay + 1);
    }

    pub fn step(&mut self, sample: f64) -> f64 {
        self.history.push_front(sample);
        while self.history.len() > self.capacity {
            self.history.pop_back();
        }
        self.history.get(self.delay).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaitSpec {
    /// Modulatory input fed to the oscillator.
    pub mi: f64,
    /// Nominal period in ticks.
    pub period: usize,
    /// Stance fraction of a cycle.
    pub duty: f64,
    /// Per-leg phase offsets as fractions of the period, ordered R1..L3.
    pub offsets: [f64; 6],
    /// Per-leg delay-line lengths in ticks, ordered R1..L3.
    pub delays: [usize; 6],
}

impl GaitSpec {
    fn from_offsets(mi: f64, period: usize, duty: f64, offsets: [f64; 6]) -> Self {
        let delays = offsets.map(|f| (f * period as f64).round() as usize);
        Self { mi, period, duty, offsets, delays }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaitTable {
    pub wave: GaitSpec,
    pub tetrapod: GaitSpec,
    pub caterpillar: GaitSpec,
}

impl Default for GaitTable {
    /// Modulatory inputs are calibrated so the oscillator period is 100, 60
    /// and 40 ticks to within 1e-3 tick.
    fn default() -> Self {
        use LegId::*;
        let mut wave = [0.0; 6];
        for (k, leg) in [R3, R2, R1, L3, L2, L1].into_iter().enumerate() {
            wave[leg.index()] = k as f64 / 6.0;
        }
        let mut tetrapod = [0.0; 6];
        for (k, pair) in [[R1, L2], [R2, L3], [R3, L1]].into_iter().enumerate() {
            for leg in pair {
                tetrapod[leg.index()] = k as f64 / 3.0;
            }
        }
        let mut caterpillar = [0.0; 6];
        for leg in LegId::ALL {
            caterpillar[leg.index()] = leg.segment() as f64 / 3.0;
        }
        Self {
            wave: GaitSpec::from_offsets(0.085_925_017_033_211_68, 100, 5.0 / 6.0, wave),
            tetrapod: GaitSpec::from_offsets(0.169_595_040_587_950_6, 60, 2.0 / 3.0, tetrapod),
            caterpillar: GaitSpec::from_offsets(0.274_253_203_677_502_7, 40, 0.5, caterpillar),
        }
    }
}

impl GaitTable {
    pub fn get(&self, gait: GaitId) -> &GaitSpec {
        match gait {
            GaitId::Wave => &self.wave,
            GaitId::Tetrapod => &self.tetrapod,
            GaitId::Caterpillar => &self.caterpillar,
        }
    }

    pub fn mi_range(&self) -> (f64, f64) {
        GaitId::ALL.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &g| {
            let mi = self.get(g).mi;
            (lo.min(mi), hi.max(mi))
        })
    }

    pub fn validate(&self) -> Result<()> {
        for gait in GaitId::ALL {
            let spec = self.get(gait);
            check_duty(spec.duty)?;
            if spec.period < 4 {
                return Err(Error::config("period", format!("{gait} period must be at least 4 ticks")));
            }
            if !spec.mi.is_finite() {
                return Err(Error::config("mi", format!("{gait} modulatory input must be finite")));
            }
            if spec.offsets.iter().any(|&f| !(0.0..1.0).contains(&f)) {
                return Err(Error::config("offsets", format!("{gait} offsets must lie in [0, 1)")));
            }
        }
        let distinct = |offs: &[f64; 6]| {
            let mut v: Vec<f64> = offs.to_vec();
            v.sort_by(|a, b| a.total_cmp(b));
            v.dedup();
            v.len()
        };
        if distinct(&self.wave.offsets) != 6 {
            return Err(Error::config("offsets", "wave gait needs six distinct leg offsets"));
        }
        let t = &self.tetrapod.offsets;
        if distinct(t) != 3 || LegId::ALL.iter().any(|&l| t.iter().filter(|&&o| o == t[l.index()]).count() != 2) {
            return Err(Error::config("offsets", "tetrapod gait needs three groups of two legs"));
        }
        let c = &self.caterpillar.offsets;
        if LegId::ALL.iter().any(|&l| c[l.index()] != c[l.mirror().index()]) {
            return Err(Error::config("offsets", "caterpillar gait needs left/right pairs in phase"));
        }
        let (lo, hi) = self.mi_range();
        if !(self.wave.mi < self.tetrapod.mi && self.tetrapod.mi < self.caterpillar.mi) || lo > hi {
            return Err(Error::config("mi", "modulatory inputs must increase wave < tetrapod < caterpillar"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LegCommand {
    pub tc: f64,
    pub ctr: f64,
    pub fti: f64,
}

/// Adaptive joint offsets added on top of the generated commands.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct JointOffsets {
    pub tc: f64,
    pub ctr: f64,
    pub fti: f64,
}

/// One tick of motor output for the whole body.
///
/// `legs` holds the pattern-generator commands (the efference copy);
/// `offsets` holds what adaptive control adds on top. [`MotorFrame::command`]
/// gives the clipped sum sent to the joints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorFrame {
    pub legs: [LegCommand; 6],
    pub offsets: [JointOffsets; 6],
    pub bj_deg: f64,
}

impl Default for MotorFrame {
    fn default() -> Self {
        Self { legs: [LegCommand::default(); 6], offsets: [JointOffsets::default(); 6], bj_deg: BJ_NORMAL_DEG }
    }
}

impl MotorFrame {
    pub fn leg(&self, leg: LegId) -> LegCommand {
        self.legs[leg.index()]
    }

    pub fn command(&self, leg: LegId) -> LegCommand {
        let base = self.legs[leg.index()];
        let off = self.offsets[leg.index()];
        LegCommand {
            tc: (base.tc + off.tc).clamp(-1.0, 1.0),
            ctr: (base.ctr + off.ctr).clamp(-1.0, 1.0),
            fti: (base.fti + off.fti).clamp(-1.0, 1.0),
        }
    }
}

/// Oscillator → per-leg delay lines → per-leg post-processing.
#[derive(Debug, Clone)]
pub struct MotorPipeline {
    cpg: Cpg,
    table: GaitTable,
    gait: GaitId,
    lines: [DelayLine; 6],
    shapers: [Pcpg; 6],
}

impl MotorPipeline {
    pub fn new(table: GaitTable, gait: GaitId) -> Result<Self> {
        table.validate()?;
        let spec = table.get(gait).clone();
        let shaper = Pcpg::new(spec.duty)?;
        Ok(Self {
            cpg: Cpg::new(Cpg::DEFAULT_ALPHA, table.mi_range())?,
            lines: spec.delays.map(DelayLine::new),
            shapers: std::array::from_fn(|_| shaper.clone()),
            table,
            gait,
        })
    }

    pub fn gait(&self) -> GaitId {
        self.gait
    }

    pub fn table(&self) -> &GaitTable {
        &self.table
    }

    pub fn cpg(&self) -> &Cpg {
        &self.cpg
    }

    pub fn set_gait(&mut self, gait: GaitId) -> Result<()> {
        let spec = self.table.get(gait);
        for leg in LegId::ALL {
            self.lines[leg.index()].set_delay(spec.delays[leg.index()]);
            self.shapers[leg.index()].set_duty(spec.duty)?;
        }
        self.gait = gait;
        Ok(())
    }

    /// Runs `ticks` steps and discards them (oscillator and shaper transient).
    pub fn warm_up(&mut self, ticks: usize) -> Result<()> {
        for _ in 0..ticks {
            self.step()?;
        }
        Ok(())
    }

    pub fn step(&mut self) -> Result<MotorFrame> {
        let spec = self.table.get(self.gait);
        let (o1, _) = self.cpg.step(spec.mi)?;
        let mut frame = MotorFrame::default();
        for leg in LegId::ALL {
            let i = leg.index();
            let delayed = self.lines[i].step(o1);
            let ctr = self.shapers[i].shape(delayed);
            let tc = match self.shapers[i].phase() {
                Some(p) => trapezoid(p + 0.25, spec.duty),
                None => ctr,
            };
            frame.legs[i] = LegCommand { tc, ctr, fti: -ctr };
        }
        Ok(frame)
    }
}

/// Stance (`true`) / swing matrix, one row per leg, from the generated CTr
/// commands.
pub fn gait_diagram(frames: &[MotorFrame]) -> [Vec<bool>; 6] {
    std::array::from_fn(|i| frames.iter().map(|f| f.legs[i].ctr < 0.0).collect())
}
