//! Walks the rough elastic patch and shows the per-phase accumulated errors
//! rising on the patch and settling once the body has left it.

use hexapod_fm::harness::{run_scenario, run_training, RunConfig, Scenario};

fn main() -> hexapod_fm::Result<()> {
    let mut cfg = RunConfig::default();
    let trained = run_training(&cfg)?;
    cfg.run.scenario = Scenario::RoughElastic(1.0);
    let out = run_scenario(&cfg, &mut trained.bank.clone())?;

    // peak of S or E over windows of 100 ticks
    for chunk in out.log.rows.chunks(100).take(20) {
        let peak = chunk.iter().flat_map(|r| r.legs.iter().map(|l| l.s.max(l.e))).fold(0.0, f64::max);
        let bar = "*".repeat((peak * 10.0).min(60.0) as usize);
        println!("{:>5} x={:>6.1} {peak:6.3} {bar}", chunk[0].tick, chunk[0].body_x);
    }
    if let Some(p) = &out.summary.progress {
        println!("success at {:?} ({:.1} s)", p.success_tick, p.success_seconds().unwrap_or(f64::NAN));
    }
    Ok(())
}
