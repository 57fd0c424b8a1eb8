//! Training error against recurrent gain and reservoir size, five seeds per
//! point. Writes both tables under `out/sweep`.

use std::path::Path;

use hexapod_fm::harness::sweep::{run_sweep, SweepAxis};
use hexapod_fm::harness::RunConfig;

fn main() -> hexapod_fm::Result<()> {
    let cfg = RunConfig::default();
    let dir = Path::new("out/sweep");
    for axis in [SweepAxis::Gain, SweepAxis::Size] {
        let table = run_sweep(&cfg, axis, &axis.default_values(), 5)?;
        for p in &table.points {
            println!("{axis}={:<5} MSE {:.2e} ± {:.1e}", p.value, p.mean, p.std);
        }
        table.write_csv(&dir.join(format!("sweep_{}.csv", axis.name())), &cfg.echo())?;
    }
    Ok(())
}
