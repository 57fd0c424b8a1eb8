//! Trains the six forward models on flat ground over the gait schedule and
//! writes the weight file, traces and weight-norm plots to `out/train_flat`.

use std::path::Path;
use std::time::Instant;

use hexapod_fm::harness::output::{emit_outputs, save_weights};
use hexapod_fm::harness::{flat_nmse, run_training, RunConfig};
use hexapod_fm::{GaitId, LegId};

fn main() -> hexapod_fm::Result<()> {
    let cfg = RunConfig::default();
    let dir = Path::new("out/train_flat");
    let t0 = Instant::now();
    let out = run_training(&cfg)?;
    println!("trained in {:.1} s", t0.elapsed().as_secs_f64());

    for (leg, rep) in LegId::ALL.iter().zip(&out.pretrain) {
        let kl = (rep.kl_trace[0], rep.kl_trace[rep.kl_trace.len() - 1]);
        println!("{leg}: rate KL {:.3} -> {:.3}", kl.0, kl.1);
    }
    let summary = flat_nmse(&cfg, &mut out.bank.clone(), 1000)?;
    for gait in GaitId::ALL {
        let worst = LegId::ALL.iter().filter_map(|&l| summary.nmse_of(gait, l)).fold(0.0, f64::max);
        println!("{:<12} worst NMSE {worst:.4}", gait.name());
    }

    save_weights(&dir.join("weights.txt"), &out.bank, &out.baseline, &cfg.echo())?;
    for f in emit_outputs(&out.log, dir, "train")? {
        println!("wrote {}", f.display());
    }
    Ok(())
}
