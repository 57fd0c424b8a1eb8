//! Reservoir forward models against the delay-line baseline on rough
//! terrain of increasing elasticity.

use hexapod_fm::harness::sweep::{run_sweep, SweepAxis};
use hexapod_fm::harness::{ModelKind, RunConfig};

fn main() -> hexapod_fm::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.run.seed = 1;
    let table = run_sweep(&cfg, SweepAxis::Elasticity, &[1.0, 5.0, 10.0], 3)?;
    println!("elasticity  reservoir (s)      baseline (s)");
    for e in [1.0, 5.0, 10.0] {
        let r = table.point(e, ModelKind::Reservoir).unwrap();
        let b = table.point(e, ModelKind::Baseline).unwrap();
        println!(
            "{e:>10}  {:>6.1} ± {:<4.1} {}/3  {:>6.1} ± {:<4.1} {}/3",
            r.mean,
            r.std,
            r.successes(),
            b.mean,
            b.std,
            b.successes()
        );
    }
    Ok(())
}
