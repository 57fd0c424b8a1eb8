//! A single reservoir learns a delayed square wave online and is compared
//! with the batch ridge solution on the same recording.

use hexapod_fm::reservoir::{Reservoir, ReservoirParams};
use hexapod_fm::rls::{batch_ridge_oracle, RlsReadout};
use hexapod_fm::GaitId;
use nalgebra::{DMatrix, DVector};

fn main() -> hexapod_fm::Result<()> {
    let n = 30;
    let ticks = 3000;
    let mut res = Reservoir::new(ReservoirParams { size: n, seed: 7, ..ReservoirParams::default() })?;
    let mut rls = RlsReadout::new(n, 1.0)?;
    let mut rates = DMatrix::zeros(ticks, n);
    let mut targets = DVector::zeros(ticks);
    let mut sq = 0.0;
    for t in 0..ticks {
        let u = (std::f64::consts::TAU * t as f64 / 60.0).sin();
        let d = f64::from((std::f64::consts::TAU * (t as f64 - 6.0) / 60.0).sin() < 0.0);
        let r = res.step(u)?.to_vec();
        let step = rls.step(&r, d, GaitId::Wave)?;
        if t >= ticks / 2 {
            sq += step.error * step.error;
        }
        rates.row_mut(t).copy_from(&DVector::from_row_slice(&r).transpose());
        targets[t] = d;
    }
    let online = DVector::from_vec(rls.column(GaitId::Wave));
    let batch = batch_ridge_oracle(&rates, &targets, 1.0)?;
    println!("second-half MSE     {:.5}", sq / (ticks / 2) as f64);
    println!("|w| online / batch  {:.4} / {:.4}", online.norm(), batch.norm());
    println!("relative difference {:.2e}", (&online - &batch).norm() / batch.norm());
    Ok(())
}
