//! Online readout learning.
//!
//! Each of the three gait readouts keeps its own inverse-correlation matrix
//! `P`; only the readout of the gait currently being walked is updated on a
//! tick. With `P(0) = I / delta_c` and zero initial weights each column is the
//! ridge solution `min ‖R w − d‖² + delta_c ‖w‖²` over the ticks of its gait,
//! which is what [`batch_ridge_oracle`] computes directly.

use nalgebra::{DMatrix, DVector};

use crate::{Error, GaitId, Result};

pub const READOUT_COUNT: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct RlsReadout {
    p: [DMatrix<f64>; READOUT_COUNT],
    w_out: DMatrix<f64>,
    delta_c: f64,
    learning_enabled: bool,
    gain: Vec<f64>,
}

/// Result of one learning tick: prediction and error before the update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RlsStep {
    pub prediction: f64,
    pub error: f64,
}

impl RlsReadout {
    pub fn new(n: usize, delta_c: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("n", "readout needs at least one input"));
        }
        if !(delta_c > 0.0) || !delta_c.is_finite() {
            return Err(Error::config("delta_c", format!("must be positive and finite, got {delta_c}")));
        }
        Ok(Self {
            p: std::array::from_fn(|_| DMatrix::identity(n, n) / delta_c),
            w_out: DMatrix::zeros(n, READOUT_COUNT),
            delta_c,
            learning_enabled: true,
            gain: vec![0.0; n],
        })
    }

    /// Rebuilds a readout from stored parts (weight files).
    pub fn from_parts(p: [DMatrix<f64>; READOUT_COUNT], w_out: DMatrix<f64>, delta_c: f64) -> Result<Self> {
        let n = w_out.nrows();
        for m in &p {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::Dimension { expected: n, actual: m.nrows().max(m.ncols()) });
            }
        }
        if w_out.nrows() != n {
            return Err(Error::Dimension { expected: n, actual: w_out.nrows() });
        }
        if w_out.ncols() != READOUT_COUNT {
            return Err(Error::Dimension { expected: READOUT_COUNT, actual: w_out.ncols() });
        }
        Ok(Self { p, w_out, delta_c, learning_enabled: true, gain: vec![0.0; n] })
    }

    pub fn size(&self) -> usize {
        self.w_out.nrows()
    }

    pub fn delta_c(&self) -> f64 {
        self.delta_c
    }

    pub fn p(&self, gait: GaitId) -> &DMatrix<f64> {
        &self.p[gait.index()]
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.w_out
    }

    pub fn column(&self, gait: GaitId) -> Vec<f64> {
        self.w_out.column(gait.index()).iter().copied().collect()
    }

    pub fn set_column(&mut self, gait: GaitId, w: &[f64]) -> Result<()> {
        self.check_len(w.len())?;
        for (i, &v) in w.iter().enumerate() {
            self.w_out[(i, gait.index())] = v;
        }
        Ok(())
    }

    pub fn column_norm(&self, gait: GaitId) -> f64 {
        self.w_out.column(gait.index()).norm()
    }

    pub fn learning_enabled(&self) -> bool {
        self.learning_enabled
    }

    pub fn set_learning(&mut self, enabled: bool) {
        self.learning_enabled = enabled;
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.size() {
            return Err(Error::Dimension { expected: self.size(), actual: len });
        }
        Ok(())
    }

    /// `z = W_out[:, gait] · r`.
    pub fn predict(&self, r: &[f64], gait: GaitId) -> Result<f64> {
        self.check_len(r.len())?;
        Ok(self.dot_column(r, gait.index()))
    }

    fn dot_column(&self, r: &[f64], col: usize) -> f64 {
        self.w_out
            .column(col)
            .iter()
            .zip(r)
            .map(|(w, x)| w * x)
            .sum()
    }

    /// One RLS update of the `gait` readout towards target `d`.
    ///
    /// The error is taken with the pre-update weights. `P` is updated first and
    /// the weight step uses the updated matrix: `P_new r = P r / (1 + rᵀ P r)`.
    pub fn step(&mut self, r: &[f64], d: f64, gait: GaitId) -> Result<RlsStep> {
        if !self.learning_enabled {
            return Err(Error::Input("learning is disabled for this readout".into()));
        }
        self.check_len(r.len())?;
        if !d.is_finite() || r.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("non-finite rate vector or target".into()));
        }
        let n = self.size();
        let col = gait.index();
        let prediction = self.dot_column(r, col);
        let error = prediction - d;

        let p = &mut self.p[col];
        // gain = P r
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += p[(i, j)] * r[j];
            }
            self.gain[i] = acc;
        }
        let denom = 1.0 + r.iter().zip(&self.gain).map(|(a, b)| a * b).sum::<f64>();
        for j in 0..n {
            let gj = self.gain[j] / denom;
            for i in 0..n {
                p[(i, j)] -= self.gain[i] * gj;
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let m = 0.5 * (p[(i, j)] + p[(j, i)]);
                p[(i, j)] = m;
                p[(j, i)] = m;
            }
        }
        for i in 0..n {
            self.w_out[(i, col)] -= error * self.gain[i] / denom;
        }
        Ok(RlsStep { prediction, error })
    }
}

/// Ridge solution of `(RᵀR + delta_c I) w = Rᵀ D`.
///
/// `rates` is T×N (one row per tick). Used as the reference for the online
/// recursion and for provisional readouts during pre-training.
pub fn batch_ridge_oracle(rates: &DMatrix<f64>, targets: &DVector<f64>, delta_c: f64) -> Result<DVector<f64>> {
    if rates.nrows() == 0 {
        return Err(Error::Input("ridge regression needs at least one sample".into()));
    }
    if rates.nrows() != targets.len() {
        return Err(Error::Dimension { expected: rates.nrows(), actual: targets.len() });
    }
    if delta_c < 0.0 || !delta_c.is_finite() {
        return Err(Error::config("delta_c", format!("must be non-negative, got {delta_c}")));
    }
    let n = rates.ncols();
    let mut gram = rates.tr_mul(rates);
    for i in 0..n {
        gram[(i, i)] += delta_c;
    }
    let rhs = rates.tr_mul(targets);
    if let Some(chol) = gram.clone().cholesky() {
        return Ok(chol.solve(&rhs));
    }
    gram.lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numeric("ridge system is singular".into()))
}
