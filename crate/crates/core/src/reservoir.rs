//! Leaky-integrator tanh reservoir with per-neuron gain, bias and time constant.
//!
//! Each neuron follows
//!
//! ```text
//! x_i ← (1 − dt/τ_i)·x_i + (dt/τ_i)·(g·Σ_j W_rec[i,j]·r_j + W_in[i]·u + B_i)
//! r_i ← tanh(a_i·x_i + b_i)
//! ```
//!
//! `W_rec` is drawn with unit scale `1/√(p_c·N)`; the gain `g` is applied only
//! in the dynamics. The transfer parameters `a`, `b` are shaped by intrinsic
//! plasticity and the time constants by an accept/reject search during
//! pre-training, after which all three are frozen.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::rls::batch_ridge_oracle;
use crate::{Error, Result};

/// Lower clip for the transfer gain `a` under intrinsic plasticity.
pub const MIN_TRANSFER_GAIN: f64 = 0.1;
/// Time constants are kept within `[dt, TAU_MAX_STEPS·dt]`.
pub const TAU_MAX_STEPS: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReservoirParams {
    /// Neuron count `N`.
    pub size: usize,
    /// Recurrent gain `g`.
    pub gain: f64,
    /// Connection probability `p_c`.
    pub connectivity: f64,
    /// Integration step in ticks.
    pub dt: f64,
    /// Initial time constant in ticks.
    pub tau0: f64,
    pub input_weight_range: f64,
    pub bias_range: f64,
    pub seed: u64,
}

impl Default for ReservoirParams {
    fn default() -> Self {
        Self {
            size: 30,
            gain: 0.95,
            connectivity: 0.2,
            dt: 1.0,
            tau0: 2.0,
            input_weight_range: 0.1,
            bias_range: 0.1,
            seed: 7,
        }
    }
}

impl ReservoirParams {
    pub fn validate(&self) -> Result<()> {
        if self.size == 0 {
            return Err(Error::config("size", "reservoir needs at least one neuron"));
        }
        if !(self.connectivity > 0.0 && self.connectivity <= 1.0) {
            return Err(Error::config("connectivity", format!("must lie in (0, 1], got {}", self.connectivity)));
        }
        if !(self.gain > 0.0) || !self.gain.is_finite() {
            return Err(Error::config("gain", format!("must be positive, got {}", self.gain)));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::config("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.tau0 >= self.dt) || self.tau0 > TAU_MAX_STEPS * self.dt {
            return Err(Error::config("tau0", format!("must lie in [dt, {TAU_MAX_STEPS}·dt], got {}", self.tau0)));
        }
        if !(self.input_weight_range >= 0.0) {
            return Err(Error::config("input_weight_range", "must be non-negative"));
        }
        if !(self.bias_range >= 0.0) {
            return Err(Error::config("bias_range", "must be non-negative"));
        }
        Ok(())
    }

    pub fn tau_bounds(&self) -> (f64, f64) {
        (self.dt, TAU_MAX_STEPS * self.dt)
    }
}

/// Row-compressed sparse matrix, enough for the recurrent weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut row_start = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut values = Vec::new();
        row_start.push(0);
        for i in 0..n {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v != 0.0 {
                    cols.push(j);
                    values.push(v);
                }
            }
            row_start.push(cols.len());
        }
        Self { n, row_start, cols, values }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for k in self.row_start[i]..self.row_start[i + 1] {
                m[(i, self.cols[k])] = self.values[k];
            }
        }
        m
    }

    fn row_dot(&self, i: usize, v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for k in self.row_start[i]..self.row_start[i + 1] {
            acc += self.values[k] * v[self.cols[k]];
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reservoir {
    params: ReservoirParams,
    x: Vec<f64>,
    r: Vec<f64>,
    transfer_gain: Vec<f64>,
    transfer_bias: Vec<f64>,
    tau: Vec<f64>,
    w_rec: SparseMatrix,
    w_in: Vec<f64>,
    aux_bias: Vec<f64>,
    frozen: bool,
}

/// Stored form of a reservoir: everything needed to rebuild it bit-exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirParts {
    pub params: ReservoirParams,
    pub transfer_gain: Vec<f64>,
    pub transfer_bias: Vec<f64>,
    pub tau: Vec<f64>,
    pub w_rec: DMatrix<f64>,
    pub w_in: Vec<f64>,
    pub aux_bias: Vec<f64>,
    pub frozen: bool,
}

impl Reservoir {
    pub fn new(params: ReservoirParams) -> Result<Self> {
        params.validate()?;
        let n = params.size;
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

        let w_in: Vec<f64> = if params.input_weight_range > 0.0 {
            let dist = Uniform::new_inclusive(-params.input_weight_range, params.input_weight_range)
                .map_err(|e| Error::config("input_weight_range", e.to_string()))?;
            (0..n).map(|_| dist.sample(&mut rng)).collect()
        } else {
            vec![0.0; n]
        };

        let std = 1.0 / (params.connectivity * n as f64).sqrt();
        let normal = Normal::new(0.0, std).map_err(|e| Error::config("connectivity", e.to_string()))?;
        let mut dense = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if rng.random::<f64>() < params.connectivity {
                    dense[(i, j)] = normal.sample(&mut rng);
                }
            }
        }

        let aux_bias: Vec<f64> = if params.bias_range > 0.0 {
            let dist = Uniform::new_inclusive(-params.bias_range, params.bias_range)
                .map_err(|e| Error::config("bias_range", e.to_string()))?;
            (0..n).map(|_| dist.sample(&mut rng)).collect()
        } else {
            vec![0.0; n]
        };

        Ok(Self {
            x: vec![0.0; n],
            r: vec![0.0; n],
            transfer_gain: vec![1.0; n],
            transfer_bias: vec![0.0; n],
            tau: vec![params.tau0; n],
            w_rec: SparseMatrix::from_dense(&dense),
            w_in,
            aux_bias,
            frozen: false,
            params,
        })
    }

    pub fn from_parts(parts: ReservoirParts) -> Result<Self> {
        parts.params.validate()?;
        let n = parts.params.size;
        for (len, field) in [
            (parts.transfer_gain.len(), "transfer_gain"),
            (parts.transfer_bias.len(), "transfer_bias"),
            (parts.tau.len(), "tau"),
            (parts.w_in.len(), "w_in"),
            (parts.aux_bias.len(), "aux_bias"),
            (parts.w_rec.nrows(), "w_rec"),
            (parts.w_rec.ncols(), "w_rec"),
        ] {
            if len != n {
                return Err(Error::config(field, format!("expected {n} entries, got {len}")));
            }
        }
        Ok(Self {
            x: vec![0.0; n],
            r: vec![0.0; n],
            transfer_gain: parts.transfer_gain,
            transfer_bias: parts.transfer_bias,
            tau: parts.tau,
            w_rec: SparseMatrix::from_dense(&parts.w_rec),
            w_in: parts.w_in,
            aux_bias: parts.aux_bias,
            frozen: parts.frozen,
            params: parts.params,
        })
    }

    pub fn to_parts(&self) -> ReservoirParts {
        ReservoirParts {
            params: self.params.clone(),
            transfer_gain: self.transfer_gain.clone(),
            transfer_bias: self.transfer_bias.clone(),
            tau: self.tau.clone(),
            w_rec: self.w_rec.to_dense(),
            w_in: self.w_in.clone(),
            aux_bias: self.aux_bias.clone(),
            frozen: self.frozen,
        }
    }

    pub fn params(&self) -> &ReservoirParams {
        &self.params
    }

    pub fn size(&self) -> usize {
        self.params.size
    }

    pub fn potentials(&self) -> &[f64] {
        &self.x
    }

    pub fn rates(&self) -> &[f64] {
        &self.r
    }

    pub fn transfer_gain(&self) -> &[f64] {
        &self.transfer_gain
    }

    pub fn transfer_bias(&self) -> &[f64] {
        &self.transfer_bias
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn input_weights(&self) -> &[f64] {
        &self.w_in
    }

    pub fn aux_bias(&self) -> &[f64] {
        &self.aux_bias
    }

    pub fn recurrent(&self) -> &SparseMatrix {
        &self.w_rec
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    /// Test and diagnostics hook: overwrite the trainable per-neuron parameters.
    pub fn set_neuron_params(&mut self, gain: &[f64], bias: &[f64], tau: &[f64]) -> Result<()> {
        let n = self.size();
        if gain.len() != n || bias.len() != n || tau.len() != n {
            return Err(Error::Dimension { expected: n, actual: gain.len().min(bias.len()).min(tau.len()) });
        }
        let (lo, hi) = self.params.tau_bounds();
        if tau.iter().any(|&t| !(lo..=hi).contains(&t)) {
            return Err(Error::config("tau", format!("time constants must lie in [{lo}, {hi}]")));
        }
        if gain.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::config("transfer_gain", "must be positive"));
        }
        self.transfer_gain.copy_from_slice(gain);
        self.transfer_bias.copy_from_slice(bias);
        self.tau.copy_from_slice(tau);
        Ok(())
    }

    /// Sets membrane potentials and rates back to zero.
    pub fn reset(&mut self) {
        self.x.fill(0.0);
        self.r.fill(0.0);
    }

    /// Advances exactly one tick with scalar input `u`.
    pub fn step(&mut self, u: f64) -> Result<&[f64]> {
        if !u.is_finite() {
            return Err(Error::Input(format!("reservoir input must be finite, got {u}")));
        }
        let n = self.size();
        let g = self.params.gain;
        let dt = self.params.dt;
        // x(t+1) depends on r(t) for every neuron, so finish x before touching r.
        for i in 0..n {
            let leak = dt / self.tau[i];
            let drive = g * self.w_rec.row_dot(i, &self.r) + self.w_in[i] * u + self.aux_bias[i];
            self.x[i] = (1.0 - leak) * self.x[i] + leak * drive;
        }
        for i in 0..n {
            self.r[i] = (self.transfer_gain[i] * self.x[i] + self.transfer_bias[i]).tanh();
        }
        Ok(&self.r)
    }

    /// Intrinsic plasticity towards an exponential rate distribution with mean `mu`.
    ///
    /// Works on the rectified rate `y = max(r, 0)` of the current tick:
    /// `Δb = η(1 − (2 + 1/μ)y + y²/μ)`, `Δa = η/a + x·Δb`, `a ≥ 0.1`.
    /// A zero learning rate is a no-op.
    pub fn ip_update(&mut self, eta: f64, mu: f64) -> Result<()> {
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(Error::config("eta_ip", format!("must be non-negative, got {eta}")));
        }
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::config("mu_ip", format!("must be positive, got {mu}")));
        }
        if self.frozen {
            return Err(Error::config("eta_ip", "reservoir transfer parameters are frozen"));
        }
        if eta == 0.0 {
            return Ok(());
        }
        for i in 0..self.size() {
            let y = self.r[i].max(0.0);
            let db = eta * (1.0 - (2.0 + 1.0 / mu) * y + y * y / mu);
            let da = eta / self.transfer_gain[i] + self.x[i] * db;
            self.transfer_bias[i] += db;
            self.transfer_gain[i] = (self.transfer_gain[i] + da).max(MIN_TRANSFER_GAIN);
        }
        Ok(())
    }

    /// Bound on `|x_i|` implied by the weights and an input bound, assuming
    /// the state started inside it.
    pub fn potential_bound(&self, max_abs_input: f64) -> f64 {
        let n = self.size() as f64;
        let w_in = self.w_in.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let b = self.aux_bias.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tau_ratio = self.tau.iter().fold(0.0f64, |m, t| m.max(t / self.params.dt));
        (self.params.gain * n * self.w_rec.max_abs() + w_in * max_abs_input + b) * tau_ratio
    }

    /// Intrinsic-plasticity and time-constant pre-training over a recorded
    /// input/target log, then freezes `a`, `b` and `τ`.
    ///
    /// Epoch `e` applies intrinsic plasticity along the window starting at
    /// `e·stride` (windows overlap whenever the log allows it). The plasticity
    /// result and each per-neuron `τ` perturbation are kept only when the
    /// provisional ridge readout's validation error does not increase.
    pub fn pretrain_adapt(
        &mut self,
        inputs: &[f64],
        targets: &[f64],
        epochs: usize,
        cfg: &PretrainConfig,
    ) -> Result<PretrainReport> {
        if inputs.is_empty() {
            return Err(Error::Input("pre-training needs a non-empty input log".into()));
        }
        if inputs.len() != targets.len() {
            return Err(Error::Dimension { expected: inputs.len(), actual: targets.len() });
        }
        if inputs.iter().chain(targets).any(|v| !v.is_finite()) {
            return Err(Error::Input("pre-training log contains non-finite samples".into()));
        }
        cfg.validate()?;
        if epochs == 0 {
            return Ok(PretrainReport::default());
        }
        if self.frozen {
            return Err(Error::config("epochs", "reservoir is already frozen"));
        }
        let total = inputs.len();
        let window = cfg.window.min(total);
        let windows = cfg.validation_windows(total);
        let stride = if epochs > 1 {
            cfg.stride.min((total - window) / (epochs - 1))
        } else {
            0
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.params.seed ^ 0x7a75_5ea2_c400_0001);
        let (lo, hi) = self.params.tau_bounds();

        let mut best = self.validate_readout(inputs, targets, &windows, cfg)?;
        let mut report = PretrainReport {
            mse_trace: vec![best.mse],
            kl_trace: vec![best.kl],
            tau_before: self.tau.clone(),
            ..PretrainReport::default()
        };

        for epoch in 0..epochs {
            let start = epoch * stride;
            let mut candidate = self.clone();
            candidate.reset();
            for (k, &u) in inputs[start..start + window].iter().enumerate() {
                candidate.step(u)?;
                if k >= cfg.washout {
                    candidate.ip_update(cfg.eta_ip, cfg.mu_ip)?;
                }
            }
            let eval = candidate.validate_readout(inputs, targets, &windows, cfg)?;
            if eval.mse <= best.mse {
                self.transfer_gain = candidate.transfer_gain;
                self.transfer_bias = candidate.transfer_bias;
                best = eval;
                report.ip_accepted += 1;
            }

            for i in 0..self.size() {
                let factor = if rng.random_bool(0.5) {
                    1.0 + cfg.tau_step
                } else {
                    1.0 - cfg.tau_step
                };
                let old = self.tau[i];
                let proposal = (old * factor).clamp(lo, hi);
                if proposal == old {
                    continue;
                }
                self.tau[i] = proposal;
                let eval = self.validate_readout(inputs, targets, &windows, cfg)?;
                if eval.mse <= best.mse {
                    best = eval;
                    report.tau_accepted += 1;
                } else {
                    self.tau[i] = old;
                }
            }
            report.mse_trace.push(best.mse);
            report.kl_trace.push(best.kl);
        }
        self.reset();
        self.frozen = true;
        report.tau_after = self.tau.clone();
        Ok(report)
    }

    /// Ridge readout fitted on the front part of each validation window and
    /// scored on the rest; also returns the rate-distribution divergence.
    fn validate_readout(
        &self,
        inputs: &[f64],
        targets: &[f64],
        windows: &[(usize, usize)],
        cfg: &PretrainConfig,
    ) -> Result<ReadoutEval> {
        let n = self.size();
        let mut sq_err = 0.0;
        let mut count = 0usize;
        let mut rectified = Vec::new();
        let mut probe = self.clone();
        for &(start, len) in windows {
            probe.reset();
            let washout = cfg.washout.min(len / 4);
            let mut rows = Vec::with_capacity((len - washout) * n);
            let mut d = Vec::with_capacity(len - washout);
            for t in start..start + len {
                let r = probe.step(inputs[t])?;
                if t - start >= washout {
                    rows.extend_from_slice(r);
                    rectified.extend(r.iter().map(|v| v.max(0.0)));
                    d.push(targets[t]);
                }
            }
            let samples = d.len();
            let fit = ((samples as f64 * cfg.fit_fraction) as usize).clamp(1, samples.saturating_sub(1).max(1));
            let design = DMatrix::from_row_slice(samples, n, &rows);
            let w = batch_ridge_oracle(
                &design.rows(0, fit).into_owned(),
                &DVector::from_row_slice(&d[..fit]),
                cfg.ridge,
            )?;
            for t in fit..samples {
                let z: f64 = design.row(t).iter().zip(w.iter()).map(|(a, b)| a * b).sum();
                sq_err += (z - d[t]).powi(2);
                count += 1;
            }
        }
        Ok(ReadoutEval {
            mse: if count > 0 { sq_err / count as f64 } else { 0.0 },
            kl: rate_kl_divergence(&rectified, cfg.mu_ip, cfg.kl_bins),
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct ReadoutEval {
    mse: f64,
    kl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PretrainConfig {
    pub eta_ip: f64,
    pub mu_ip: f64,
    /// Length of each plasticity window in ticks.
    pub window: usize,
    /// Upper bound on the offset between consecutive windows.
    pub stride: usize,
    /// Ticks run from a reset state before plasticity or fitting starts.
    pub washout: usize,
    /// Relative step of the `τ` perturbation.
    pub tau_step: f64,
    /// Explicit validation windows `(start, len)`; empty means evenly spaced.
    pub validation: Vec<(usize, usize)>,
    pub validation_len: usize,
    pub validation_count: usize,
    /// Fraction of each validation window used to fit the ridge readout.
    pub fit_fraction: f64,
    pub ridge: f64,
    pub kl_bins: usize,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self {
            eta_ip: 1e-4,
            mu_ip: 0.2,
            window: 1000,
            stride: 500,
            washout: 50,
            tau_step: 0.2,
            validation: Vec::new(),
            validation_len: 600,
            validation_count: 3,
            fit_fraction: 0.6,
            ridge: 1e-4,
            kl_bins: 20,
        }
    }
}

impl PretrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta_ip >= 0.0) {
            return Err(Error::config("eta_ip", "must be non-negative"));
        }
        if !(self.mu_ip > 0.0) {
            return Err(Error::config("mu_ip", "must be positive"));
        }
        if self.window == 0 {
            return Err(Error::config("window", "must be positive"));
        }
        if !(self.tau_step > 0.0 && self.tau_step < 1.0) {
            return Err(Error::config("tau_step", "must lie in (0, 1)"));
        }
        if !(self.fit_fraction > 0.0 && self.fit_fraction < 1.0) {
            return Err(Error::config("fit_fraction", "must lie in (0, 1)"));
        }
        if self.kl_bins == 0 {
            return Err(Error::config("kl_bins", "must be positive"));
        }
        Ok(())
    }

    fn validation_windows(&self, total: usize) -> Vec<(usize, usize)> {
        let explicit: Vec<_> = self
            .validation
            .iter()
            .filter_map(|&(s, l)| (s < total).then(|| (s, l.min(total - s))))
            .filter(|&(_, l)| l >= 8)
            .collect();
        if !explicit.is_empty() {
            return explicit;
        }
        let len = self.validation_len.min(total).max(1);
        let count = self.validation_count.max(1);
        let span = total - len;
        (0..count)
            .map(|k| {
                let start = if count == 1 { span / 2 } else { k * span / (count - 1) };
                (start, len)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PretrainReport {
    /// Validation MSE of the accepted parameters; index 0 is before training.
    pub mse_trace: Vec<f64>,
    /// Rate-distribution divergence from the exponential target, same indexing.
    pub kl_trace: Vec<f64>,
    pub ip_accepted: usize,
    pub tau_accepted: usize,
    pub tau_before: Vec<f64>,
    pub tau_after: Vec<f64>,
}

/// KL divergence of a histogram of rectified rates on `[0, 1]` from the
/// exponential density with mean `mu` truncated to the same interval.
pub fn rate_kl_divergence(rectified: &[f64], mu: f64, bins: usize) -> f64 {
    if rectified.is_empty() || bins == 0 {
        return 0.0;
    }
    let mut counts = vec![0usize; bins];
    for &y in rectified {
        let k = ((y.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let norm = 1.0 - (-1.0 / mu).exp();
    let total = rectified.len() as f64;
    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(k, &c)| {
            let lo = k as f64 / bins as f64;
            let hi = (k + 1) as f64 / bins as f64;
            let q = ((-lo / mu).exp() - (-hi / mu).exp()) / norm;
            let p = c as f64 / total;
            p * (p / q).ln()
        })
        .sum()
}

/// Largest eigenvalue modulus by two-vector block power iteration.
///
/// A block of two handles both a dominant real eigenvalue and a dominant
/// complex-conjugate pair; the estimate is the larger modulus of the 2×2
/// Ritz matrix.
pub fn spectral_radius_estimate(w: &DMatrix<f64>) -> Result<f64> {
    const TOL: f64 = 1e-6;
    const MAX_ITER: usize = 100_000;
    let n = w.nrows();
    if n != w.ncols() {
        return Err(Error::Dimension { expected: n, actual: w.ncols() });
    }
    if n == 0 {
        return Ok(0.0);
    }
    if n == 1 {
        return Ok(w[(0, 0)].abs());
    }
    if w.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let mut q = DMatrix::from_fn(n, 2, |i, j| 1.0 + ((i * 7 + j * 13) % 11) as f64 / 11.0 - 0.5 * j as f64);
    orthonormalize(&mut q);
    let mut previous = f64::NAN;
    let mut settled = 0;
    for _ in 0..MAX_ITER {
        let z = w * &q;
        let ritz = q.transpose() * &z;
        let estimate = max_modulus_2x2(&ritz);
        let mut next = z;
        if orthonormalize(&mut next) == 0 {
            return Ok(0.0);
        }
        q = next;
        if estimate.is_finite() && (estimate - previous).abs() <= TOL * estimate.max(f64::MIN_POSITIVE) {
            settled += 1;
            if settled >= 3 {
                return Ok(estimate);
            }
        } else {
            settled = 0;
        }
        previous = estimate;
    }
    Err(Error::Numeric(format!("power iteration did not converge in {MAX_ITER} iterations")))
}

/// Gram-Schmidt on the columns; returns the number of non-degenerate columns.
fn orthonormalize(q: &mut DMatrix<f64>) -> usize {
    let mut rank = 0;
    for j in 0..q.ncols() {
        for k in 0..j {
            let proj = q.column(k).dot(&q.column(j));
            let ck = q.column(k).into_owned();
            q.column_mut(j).axpy(-proj, &ck, 1.0);
        }
        let norm = q.column(j).norm();
        if norm > 1e-300 {
            q.column_mut(j).scale_mut(1.0 / norm);
            rank += 1;
        } else {
            // restart a dead direction from a canonical vector
            let n = q.nrows();
            let mut col = q.column_mut(j);
            col.fill(0.0);
            col[j % n] = 1.0;
        }
    }
    rank
}

fn max_modulus_2x2(m: &DMatrix<f64>) -> f64 {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let half_trace = 0.5 * (a + d);
    let det = a * d - b * c;
    let disc = half_trace * half_trace - det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        (half_trace + s).abs().max((half_trace - s).abs())
    } else {
        // complex pair: modulus² = det
        det.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize) -> ReservoirParams {
        ReservoirParams { size: n, ..ReservoirParams::default() }
    }

    #[test]
    fn init_matches_requested_shape_and_ranges() {
        let res = Reservoir::new(ReservoirParams { seed: 7, ..params(30) }).unwrap();
        assert_eq!(res.size(), 30);
        assert!(res.input_weights().iter().all(|w| w.abs() <= 0.1));
        assert!(res.aux_bias().iter().all(|b| b.abs() <= 0.1));
        assert!(res.potentials().iter().all(|&x| x == 0.0));
        assert!(res.rates().iter().all(|&r| r == 0.0));
        assert!(res.transfer_gain().iter().all(|&a| a == 1.0));
        assert!(res.transfer_bias().iter().all(|&b| b == 0.0));
        assert!(res.tau().iter().all(|&t| t == 2.0));
        let frac = res.recurrent().nnz() as f64 / 900.0;
        assert!((frac - 0.2).abs() <= 0.05, "density {frac}");
    }

    #[test]
    fn single_neuron_fully_connected() {
        let res = Reservoir::new(ReservoirParams { connectivity: 1.0, ..params(1) }).unwrap();
        assert_eq!(res.recurrent().nnz(), 1);
        assert_eq!(res.potentials(), &[0.0]);
        assert_eq!(res.rates(), &[0.0]);
    }

    #[test]
    fn init_is_deterministic() {
        let a = Reservoir::new(params(30)).unwrap();
        let b = Reservoir::new(params(30)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_params_name_the_field() {
        let cases: Vec<(ReservoirParams, &str)> = vec![
            (params(0), "size"),
            (ReservoirParams { connectivity: 0.0, ..params(5) }, "connectivity"),
            (ReservoirParams { connectivity: 1.5, ..params(5) }, "connectivity"),
            (ReservoirParams { gain: 0.0, ..params(5) }, "gain"),
            (ReservoirParams { tau0: 0.5, ..params(5) }, "tau0"),
        ];
        for (p, field) in cases {
            match Reservoir::new(p) {
                Err(Error::Config { field: f, .. }) => assert_eq!(f, field),
                other => panic!("expected config error for {field}, got {other:?}"),
            }
        }
    }

    fn scalar_neuron(tau: f64, w_in: f64) -> Reservoir {
        let mut parts = Reservoir::new(ReservoirParams { connectivity: 1.0, tau0: tau, ..params(1) })
            .unwrap()
            .to_parts();
        parts.w_rec[(0, 0)] = 0.0;
        parts.w_in = vec![w_in];
        parts.aux_bias = vec![0.0];
        Reservoir::from_parts(parts).unwrap()
    }

    #[test]
    fn zero_weights_keep_the_zero_fixed_point() {
        let mut res = scalar_neuron(2.0, 0.0);
        for u in [1.0, -3.0, 0.5] {
            res.step(u).unwrap();
            assert_eq!(res.potentials(), &[0.0]);
            assert_eq!(res.rates(), &[0.0]);
        }
    }

    #[test]
    fn scalar_leak_converges_to_driven_fixed_point() {
        // x ← x/2 + 0.05 converges to 0.1
        let mut res = scalar_neuron(2.0, 0.1);
        for _ in 0..80 {
            res.step(1.0).unwrap();
        }
        assert!((res.potentials()[0] - 0.1).abs() < 1e-12);
        assert!((res.rates()[0] - 0.1f64.tanh()).abs() < 1e-12);
        assert!((res.rates()[0] - 0.0997).abs() < 1e-4);
    }

    #[test]
    fn unit_time_constant_is_instantaneous() {
        let mut parts = Reservoir::new(ReservoirParams { tau0: 1.0, ..params(12) }).unwrap().to_parts();
        parts.tau = vec![1.0; 12];
        let mut res = Reservoir::from_parts(parts).unwrap();
        for t in 0..30 {
            let u = (t as f64 * 0.3).sin();
            let w = res.recurrent().to_dense();
            let r_prev = DVector::from_row_slice(res.rates());
            let expected = res.params().gain * (&w * &r_prev)
                + DVector::from_row_slice(res.input_weights()) * u
                + DVector::from_row_slice(res.aux_bias());
            res.step(u).unwrap();
            for (x, e) in res.potentials().iter().zip(expected.iter()) {
                assert!((x - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn non_finite_input_rejected() {
        let mut res = Reservoir::new(params(5)).unwrap();
        let before = res.clone();
        assert!(matches!(res.step(f64::NAN), Err(Error::Input(_))));
        assert!(res.step(f64::INFINITY).is_err());
        assert_eq!(res, before);
    }

    #[test]
    fn ip_with_zero_rate_is_noop_and_negative_rate_errors() {
        let mut res = Reservoir::new(params(10)).unwrap();
        res.step(0.7).unwrap();
        let before = res.clone();
        res.ip_update(0.0, 0.2).unwrap();
        assert_eq!(res, before);
        assert!(matches!(res.ip_update(-1e-4, 0.2), Err(Error::Config { field: "eta_ip", .. })));
    }

    #[test]
    fn ip_lowers_bias_of_saturated_neuron() {
        let mut res = scalar_neuron(1.0, 0.1);
        let mut parts = res.to_parts();
        parts.w_in = vec![1.0];
        res = Reservoir::from_parts(parts).unwrap();
        let mut last = res.transfer_bias()[0];
        for _ in 0..200 {
            res.step(40.0).unwrap();
            assert!(res.rates()[0] > 0.99);
            res.ip_update(1e-3, 0.2).unwrap();
            let b = res.transfer_bias()[0];
            assert!(b < last);
            last = b;
        }
    }

    #[test]
    fn ip_keeps_gain_above_floor() {
        let mut res = Reservoir::new(params(10)).unwrap();
        for t in 0..2000 {
            res.step(5.0 * (t as f64 * 0.1).sin()).unwrap();
            res.ip_update(0.05, 0.2).unwrap();
            assert!(res.transfer_gain().iter().all(|&a| a >= MIN_TRANSFER_GAIN));
        }
    }

    #[test]
    fn pretrain_zero_epochs_is_identity() {
        let mut res = Reservoir::new(params(10)).unwrap();
        let before = res.clone();
        let u: Vec<f64> = (0..2000).map(|t| (t as f64 * 0.06).sin()).collect();
        let report = res.pretrain_adapt(&u, &u, 0, &PretrainConfig::default()).unwrap();
        assert_eq!(res, before);
        assert!(report.mse_trace.is_empty());
    }

    #[test]
    fn pretrain_rejects_empty_log() {
        let mut res = Reservoir::new(params(10)).unwrap();
        assert!(matches!(res.pretrain_adapt(&[], &[], 3, &PretrainConfig::default()), Err(Error::Input(_))));
    }

    #[test]
    fn kl_of_matching_histogram_is_small() {
        // inverse-CDF samples of the truncated exponential
        let mu: f64 = 0.2;
        let norm = 1.0 - (-1.0 / mu).exp();
        let samples: Vec<f64> = (0..20000)
            .map(|k| {
                let p = (k as f64 + 0.5) / 20000.0;
                -mu * (1.0 - p * norm).ln()
            })
            .collect();
        assert!(rate_kl_divergence(&samples, mu, 20) < 1e-3);
        let flat: Vec<f64> = (0..1000).map(|k| k as f64 / 1000.0).collect();
        assert!(rate_kl_divergence(&flat, mu, 20) > 0.3);
    }

    #[test]
    fn spectral_radius_of_simple_matrices() {
        let eye = DMatrix::<f64>::identity(3, 3);
        assert!((spectral_radius_estimate(&eye).unwrap() - 1.0).abs() < 1e-9);
        let diag = DMatrix::from_diagonal(&DVector::from_row_slice(&[0.5, -0.9, 0.2]));
        assert!((spectral_radius_estimate(&diag).unwrap() - 0.9).abs() < 1e-5);
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -0.8, 0.8, 0.0]);
        assert!((spectral_radius_estimate(&rot).unwrap() - 0.8).abs() < 1e-9);
        assert_eq!(spectral_radius_estimate(&DMatrix::zeros(4, 4)).unwrap(), 0.0);
        assert!(spectral_radius_estimate(&DMatrix::zeros(2, 3)).is_err());
    }
}
