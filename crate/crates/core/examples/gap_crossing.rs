//! Closed-loop walk over two gaps with the reservoir models. Prints the
//! backbone episodes and writes the log and plots to `out/gap`.

use std::path::Path;

use hexapod_fm::harness::output::emit_outputs;
use hexapod_fm::harness::{run_scenario, run_training, RunConfig, Scenario};

fn main() -> hexapod_fm::Result<()> {
    let mut cfg = RunConfig::default();
    let trained = run_training(&cfg)?;
    cfg.run.scenario = Scenario::GapDouble;
    let out = run_scenario(&cfg, &mut trained.bank.clone())?;

    for (i, ep) in out.episodes.iter().enumerate() {
        println!(
            "gap {}: lift from tick {}, lowering at {:?}, back to normal at {:?}, peak {:.1} deg, steps {:?}",
            i + 1,
            ep.start,
            ep.down_start,
            ep.end,
            ep.peak,
            ep.increments.iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>()
        );
    }
    if let Some(p) = &out.summary.progress {
        println!("success tick {:?}, distance {:.1} cm", p.success_tick, p.distance);
    }
    emit_outputs(&out.log, Path::new("out/gap"), "gap_double")?;
    Ok(())
}
