use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hexapod_fm::harness::output::{
    emit_outputs, emit_svgs, file_stem, load_weights, read_log_csv, read_weight_norms_csv, save_weights,
    write_progress_csv, write_summary_csv,
};
use hexapod_fm::harness::sweep::{run_sweep, SweepAxis};
use hexapod_fm::harness::{flat_nmse, run_scenario, run_training, ModelKind, RunConfig, Scenario};
use hexapod_fm::{GaitId, LegId, Result};

#[derive(Parser)]
#[command(name = "hexapod-fm", version, about = "Reservoir forward models for hexapod locomotion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the six forward models on flat ground and save the weight file.
    Train(Common),
    /// Walk a scenario closed-loop with trained weights.
    Run {
        #[command(flatten)]
        common: Common,
        /// Weight file; defaults to `<out>/weights_seed<seed>.txt`.
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Repeat training or scenario runs over a parameter axis.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// `g`, `N` or `elasticity`.
        #[arg(long, default_value = "g")]
        axis: String,
        /// Comma-separated axis values; defaults depend on the axis.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
    },
    /// Render SVG plots from a previously written log CSV.
    Plot {
        /// Per-tick log CSV.
        input: PathBuf,
        /// Weight-norm CSV from a training run.
        #[arg(long)]
        norms: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML configuration; missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// train_flat, gap_double, rough_elastic:<e>, obstacle:<h> or stairs.
    #[arg(long)]
    scenario: Option<Scenario>,
    #[arg(long)]
    model: Option<ModelKind>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
}

impl Common {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.run.seed = s;
        }
        if let Some(s) = self.scenario {
            cfg.run.scenario = s;
        }
        if let Some(m) = self.model {
            cfg.run.model = m;
        }
        if let Some(o) = &self.out {
            cfg.run.out_dir = o.clone();
        }
        if let Some(t) = self.trials {
            cfg.run.trials = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Evaluated ticks per gait for the post-training prediction check.
const EVAL_TICKS: usize = 1000;

fn weights_path(cfg: &RunConfig) -> PathBuf {
    cfg.run.out_dir.join(format!("weights_seed{}.txt", cfg.run.seed))
}

fn train(cfg: RunConfig) -> Result<()> {
    let mut cfg = cfg;
    cfg.run.scenario = Scenario::TrainFlat;
    let out = run_training(&cfg)?;
    let echo = cfg.echo();
    let dir = &cfg.run.out_dir;
    let stem = file_stem(&cfg.run.scenario.slug(), "reservoir", cfg.run.seed);
    let wpath = weights_path(&cfg);
    save_weights(&wpath, &out.bank, &out.baseline, &echo)?;
    let mut files = emit_outputs(&out.log, dir, &stem)?;
    let summary = flat_nmse(&cfg, &mut out.bank.clone(), EVAL_TICKS)?;
    let spath = dir.join(format!("nmse_{stem}.csv"));
    write_summary_csv(&summary, &echo, &spath)?;
    files.push(spath);
    files.push(wpath);
    for gait in GaitId::ALL {
        let row: Vec<String> = LegId::ALL
            .iter()
            .map(|&l| format!("{l} {:.4}", summary.nmse_of(gait, l).unwrap_or(f64::NAN)))
            .collect();
        println!("flat nmse {:<12} {}", gait.name(), row.join("  "));
    }
    println!("baseline delays {:?}", out.baseline.delays());
    report(&files);
    Ok(())
}

fn run(cfg: RunConfig, weights: Option<PathBuf>) -> Result<()> {
    let wpath = weights.unwrap_or_else(|| weights_path(&cfg));
    if !wpath.exists() {
        return Err(hexapod_fm::Error::Input(format!(
            "weight file {} not found; run `hexapod-fm train` first or pass --weights",
            wpath.display()
        )));
    }
    let (mut bank, mut baseline) = load_weights(&wpath)?;
    let outcome = match cfg.run.model {
        ModelKind::Reservoir => run_scenario(&cfg, &mut bank)?,
        ModelKind::Baseline => run_scenario(&cfg, &mut baseline)?,
    };
    let echo = cfg.echo();
    let dir = &cfg.run.out_dir;
    let stem = file_stem(&cfg.run.scenario.slug(), &cfg.run.model.to_string(), cfg.run.seed);
    let mut files = emit_outputs(&outcome.log, dir, &stem)?;
    let spath = dir.join(format!("nmse_{stem}.csv"));
    write_summary_csv(&outcome.summary, &echo, &spath)?;
    files.push(spath);
    if let Some(p) = &outcome.summary.progress {
        let ppath = dir.join(format!("progress_{stem}.csv"));
        write_progress_csv(p, &outcome.episodes, &echo, &ppath)?;
        files.push(ppath);
        match p.success_tick {
            Some(t) => println!("{}: success at tick {t} ({:.1} s)", cfg.run.scenario, p.success_seconds().unwrap_or(0.0)),
            None => println!("{}: no success, distance {:.1} cm", cfg.run.scenario, p.distance),
        }
    }
    for ep in &outcome.episodes {
        println!(
            "bj episode start {} down {:?} end {:?} peak {:.2} first increment {:.3}",
            ep.start,
            ep.down_start,
            ep.end,
            ep.peak,
            ep.increments.first().copied().unwrap_or(0.0)
        );
    }
    report(&files);
    Ok(())
}

fn sweep(cfg: RunConfig, axis: &str, values: Vec<f64>) -> Result<()> {
    let axis: SweepAxis = axis.parse()?;
    let values = if values.is_empty() { axis.default_values() } else { values };
    let table = run_sweep(&cfg, axis, &values, cfg.run.trials)?;
    for p in &table.points {
        println!(
            "{}={} {}: mean {:.6} std {:.6} ({}/{} ok)",
            axis,
            p.value,
            p.model,
            p.mean,
            p.std,
            p.successes(),
            p.samples.len()
        );
    }
    let path = cfg.run.out_dir.join(format!("sweep_{}_seed{}.csv", axis.name(), cfg.run.seed));
    table.write_csv(&path, &cfg.echo())?;
    report(&[path]);
    Ok(())
}

fn plot(input: &Path, norms: Option<&Path>, out: Option<PathBuf>) -> Result<()> {
    let mut log = read_log_csv(input)?;
    let dir = out.unwrap_or_else(|| input.parent().map(Path::to_path_buf).unwrap_or_default());
    let stem = input
        .file_stem()
        .and_then(|s| s.to_str())
        .map(|s| s.trim_start_matches("log_").to_string())
        .unwrap_or_else(|| "plot".into());
    if let Some(n) = norms {
        log.weight_norms = read_weight_norms_csv(n)?.1;
    }
    let files = emit_svgs(&log, &dir, &stem)?;
    if files.is_empty() {
        return Err(hexapod_fm::Error::Input(format!("{} has no rows to plot", input.display())));
    }
    report(&files);
    Ok(())
}

fn report(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(c) => c.config().and_then(train),
        Command::Run { common, weights } => common.config().and_then(|cfg| run(cfg, weights)),
        Command::Sweep { common, axis, values } => common.config().and_then(|cfg| sweep(cfg, &axis, values)),
        Command::Plot { input, norms, out } => plot(&input, norms.as_deref(), out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
