// Open-loop walk at each gait; prints a text gait diagram (# = stance)
// and writes the SVG version next to it.

use std::path::Path;

use hexapod_fm::harness::output::gait_diagram_svg;
use hexapod_fm::harness::{record_flat_log, RunConfig, RunLog, TickRow, LegRow};
use hexapod_fm::{GaitId, LegId, Phase};

fn main() -> hexapod_fm::Result<()> {
    let cfg = RunConfig::default();
    let dir = Path::new("out/gaits");
    std::fs::create_dir_all(dir)?;
    for gait in GaitId::ALL {
        let flat = record_flat_log(&cfg, &[(gait, 400)])?;
        println!("{}", gait.name());
        for leg in LegId::ALL {
            let line: String = flat.u[leg.index()][280..400]
                .iter()
                .step_by(2)
                .map(|&u| if Phase::from_ctr(u) == Phase::Stance { '#' } else { '.' })
                .collect();
            println!("  {leg} {line}");
        }
        let rows = (0..400)
            .map(|t| TickRow {
                tick: t,
                gait,
                body_x: flat.body_x[t],
                bj: hexapod_fm::cpg::BJ_NORMAL_DEG,
                legs: std::array::from_fn(|i| LegRow { u: flat.u[i][t], fc: flat.fc[i][t], ..LegRow::default() }),
            })
            .collect();
        let log = RunLog { config_echo: cfg.echo(), rows, weight_norms: Vec::new() };
        let path = dir.join(format!("gait_{}.svg", gait.name()));
        std::fs::write(&path, gait_diagram_svg(&log, 120))?;
    }
    Ok(())
}
