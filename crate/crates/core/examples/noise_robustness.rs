//! Corrupts the efference copy of every leg (Gaussian noise, then dropout)
//! and compares prediction error with the clean run at each gait.

use hexapod_fm::harness::{evaluate_prediction, run_training, RunConfig};
use hexapod_fm::plant::Corruption;
use hexapod_fm::{GaitId, LegId};

fn main() -> hexapod_fm::Result<()> {
    let mut cfg = RunConfig::default();
    let out = run_training(&cfg)?;
    cfg.training.transient = 0;
    let cases = [
        ("noise 2%", Corruption::GaussianNoise { percent: 2.0, start: 300, end: 350 }),
        ("dropout", Corruption::Dropout { start: 280, end: 320 }),
    ];
    for gait in GaitId::ALL {
        let (clean, _) = evaluate_prediction(&cfg, &mut out.bank.clone(), gait, 1000, None)?;
        for (name, c) in &cases {
            let (hit, _) = evaluate_prediction(&cfg, &mut out.bank.clone(), gait, 1000, Some(c))?;
            let ratios: Vec<String> = LegId::ALL
                .iter()
                .map(|&l| format!("{:.2}", hit.nmse_of(gait, l).unwrap() / clean.nmse_of(gait, l).unwrap()))
                .collect();
            println!("{:<12} {name:<9} NMSE ratio per leg {}", gait.name(), ratios.join(" "));
        }
    }
    Ok(())
}
