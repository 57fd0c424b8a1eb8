//! Obstacle and stair scenarios with the reservoir models.

use hexapod_fm::harness::{run_scenario, run_training, RunConfig, Scenario};

fn main() -> hexapod_fm::Result<()> {
    let mut cfg = RunConfig::default();
    let trained = run_training(&cfg)?;
    for scenario in [Scenario::Obstacle(4.0), Scenario::Obstacle(8.0), Scenario::Stairs] {
        cfg.run.scenario = scenario;
        let out = run_scenario(&cfg, &mut trained.bank.clone())?;
        let p = out.summary.progress.as_ref().expect("scenario has a goal");
        let max_e = out.log.rows.iter().flat_map(|r| r.legs.iter().map(|l| l.e)).fold(0.0, f64::max);
        println!(
            "{:<12} success {:?}  distance {:.1} cm  largest E {max_e:.2}  backbone episodes {}",
            scenario.to_string(),
            p.success_tick,
            p.distance,
            out.episodes.len()
        );
    }
    Ok(())
}
