//! CSV, SVG and weight-file writers and readers.
//!
//! Every file starts with the effective configuration as `#` comment lines.
//! Floats are written with Rust's shortest round-trip formatting, so reading
//! a CSV back gives the exact values that were logged.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::control::{BaselineModel, ForwardModelBank, LegModel};
use crate::cpg::JointOffsets;
use crate::plant::Progress;
use crate::reservoir::{Reservoir, ReservoirParams, ReservoirParts};
use crate::rls::RlsReadout;
use crate::{Error, GaitId, LegId, Result};

use super::log::{LegRow, RunLog, Summary, TickRow};
use super::scenario::BjEpisode;

const LEG_FIELDS: [&str; 9] = ["u", "rf", "fc", "delta", "s", "e", "tc", "ctr", "fti"];

/// Column names of the per-tick CSV.
pub fn log_header() -> Vec<String> {
    let mut h: Vec<String> = ["tick", "gait", "body_x", "bj"].iter().map(|s| s.to_string()).collect();
    for leg in LegId::ALL {
        for f in LEG_FIELDS {
            h.push(format!("{leg}_{f}"));
        }
    }
    h
}

/// `scenario_model_seedN`, shared by every file of one run.
pub fn file_stem(scenario: &str, model: &str, seed: u64) -> String {
    format!("{scenario}_{model}_seed{seed}")
}

fn echo_lines(echo: &str) -> String {
    echo.lines().map(|l| format!("# {l}\n")).collect()
}

fn create(path: &Path) -> Result<fs::File> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    Ok(fs::File::create(path)?)
}

fn write_csv(path: &Path, echo: &str, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut file = create(path)?;
    file.write_all(echo_lines(echo).as_bytes())?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

/// Splits leading `#` lines (the config echo) from the CSV body.
fn split_echo(text: &str) -> (String, &str) {
    let mut echo = String::new();
    let mut rest = text;
    while let Some(line) = rest.strip_prefix('#') {
        let end = line.find('\n').map_or(line.len(), |i| i + 1);
        echo.push_str(line[..end].strip_prefix(' ').unwrap_or(&line[..end]));
        rest = &line[end..];
    }
    (echo, rest)
}

fn log_record(row: &TickRow) -> Vec<String> {
    let mut rec = vec![row.tick.to_string(), row.gait.name().to_string(), row.body_x.to_string(), row.bj.to_string()];
    for l in &row.legs {
        for v in [l.u, l.rf, l.fc, l.delta, l.s, l.e, l.offsets.tc, l.offsets.ctr, l.offsets.fti] {
            rec.push(v.to_string());
        }
    }
    rec
}

pub fn write_log_csv(log: &RunLog, path: &Path) -> Result<()> {
    write_csv(path, &log.config_echo, &log_header(), log.rows.iter().map(log_record))
}

fn parse_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), reason: reason.into() }
}

/// Reads a CSV written by [`write_log_csv`]. Weight norms are not part of
/// this file and come back empty.
pub fn read_log_csv(path: &Path) -> Result<RunLog> {
    let text = fs::read_to_string(path)?;
    let (config_echo, body) = split_echo(&text);
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != log_header() {
        return Err(parse_err(path, "unexpected column layout"));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec[i].parse::<f64>().map_err(|_| parse_err(path, format!("bad number {:?}", &rec[i])))
        };
        let tick = rec[0].parse::<usize>().map_err(|_| parse_err(path, format!("bad tick {:?}", &rec[0])))?;
        let gait = GaitId::parse(&rec[1]).ok_or_else(|| parse_err(path, format!("unknown gait {:?}", &rec[1])))?;
        let mut legs = [LegRow::default(); 6];
        for (k, leg) in legs.iter_mut().enumerate() {
            let b = 4 + k * LEG_FIELDS.len();
            *leg = LegRow {
                u: num(b)?,
                rf: num(b + 1)?,
                fc: num(b + 2)?,
                delta: num(b + 3)?,
                s: num(b + 4)?,
                e: num(b + 5)?,
                offsets: JointOffsets { tc: num(b + 6)?, ctr: num(b + 7)?, fti: num(b + 8)? },
            };
        }
        rows.push(TickRow { tick, gait, body_x: num(2)?, bj: num(3)?, legs });
    }
    Ok(RunLog { config_echo, rows, weight_norms: Vec::new() })
}

pub fn write_weight_norms_csv(log: &RunLog, path: &Path) -> Result<()> {
    let mut header = vec!["tick".to_string()];
    for leg in LegId::ALL {
        for g in GaitId::ALL {
            header.push(format!("{leg}_{}", g.name()));
        }
    }
    let rows = log.weight_norms.iter().enumerate().map(|(t, norms)| {
        let mut rec = vec![t.to_string()];
        rec.extend(norms.iter().flatten().map(f64::to_string));
        rec
    });
    write_csv(path, &log.config_echo, &header, rows)
}

/// Reads a file written by [`write_weight_norms_csv`] into `(echo, norms)`.
pub fn read_weight_norms_csv(path: &Path) -> Result<(String, Vec<[[f64; 3]; 6]>)> {
    let text = fs::read_to_string(path)?;
    let (echo, body) = split_echo(&text);
    let mut r = csv::Reader::from_reader(body.as_bytes());
    if r.headers()?.len() != 19 {
        return Err(parse_err(path, "expected tick plus 18 norm columns"));
    }
    let mut norms = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let mut row = [[0.0; 3]; 6];
        for (k, v) in row.iter_mut().flatten().enumerate() {
            *v = rec[k + 1].parse().map_err(|_| parse_err(path, format!("bad number {:?}", &rec[k + 1])))?;
        }
        norms.push(row);
    }
    Ok((echo, norms))
}

pub fn write_summary_csv(summary: &Summary, echo: &str, path: &Path) -> Result<()> {
    let header: Vec<String> = ["gait", "leg", "nmse", "samples"].iter().map(|s| s.to_string()).collect();
    let rows = summary
        .nmse
        .iter()
        .map(|e| vec![e.gait.name().to_string(), e.leg.to_string(), e.nmse.to_string(), e.samples.to_string()]);
    write_csv(path, echo, &header, rows)
}

/// One `success` row (`end` = success tick, `value` = distance, `detail` =
/// success flag), then one `bj_episode` row per backbone excursion (`value`
/// = peak angle, `detail` = angle increments).
pub fn write_progress_csv(progress: &Progress, episodes: &[BjEpisode], echo: &str, path: &Path) -> Result<()> {
    let header: Vec<String> = ["item", "start", "down_start", "end", "value", "detail"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let opt = |v: Option<usize>| v.map_or(String::new(), |v| v.to_string());
    let mut rows = vec![vec![
        "success".to_string(),
        String::new(),
        String::new(),
        opt(progress.success_tick),
        progress.distance.to_string(),
        progress.success.to_string(),
    ]];
    for ep in episodes {
        rows.push(vec![
            "bj_episode".to_string(),
            ep.start.to_string(),
            opt(ep.down_start),
            opt(ep.end),
            ep.peak.to_string(),
            ep.increments.iter().map(f64::to_string).collect::<Vec<_>>().join(" "),
        ]);
    }
    write_csv(path, echo, &header, rows.into_iter())
}

// ---------------------------------------------------------------- SVG

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const WIDTH: f64 = 900.0;
const PANEL_H: f64 = 160.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 110.0;
const MAX_POINTS: usize = 3000;

pub struct Series {
    pub label: String,
    pub y: Vec<f64>,
}

pub struct Panel {
    pub title: String,
    pub series: Vec<Series>,
}

fn svg_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Stacked line-plot panels sharing the tick axis.
pub fn render_panels(panels: &[Panel], echo: &str) -> String {
    let height = PANEL_H * panels.len() as f64 + 30.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, "<!--\n{}-->", svg_escape(echo).replace("--", "- -"));
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    for (p, panel) in panels.iter().enumerate() {
        let top = p as f64 * PANEL_H + 20.0;
        let plot_h = PANEL_H - 40.0;
        let n = panel.series.iter().map(|s| s.y.len()).max().unwrap_or(0);
        let finite = panel.series.iter().flat_map(|s| s.y.iter().copied()).filter(|v| v.is_finite());
        let (mut lo, mut hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        let _ = writeln!(s, r#"<text x="{MARGIN_L}" y="{}" font-weight="bold">{}</text>"#, top - 4.0, svg_escape(&panel.title));
        let _ = writeln!(
            s,
            r##"<rect x="{MARGIN_L}" y="{top}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#888"/>"##
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#, MARGIN_L - 4.0, top + 10.0, hi);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#, MARGIN_L - 4.0, top + plot_h, lo);
        let _ = writeln!(s, r#"<text x="{MARGIN_L}" y="{}">0</text>"#, top + plot_h + 14.0);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{} ticks</text>"#,
            MARGIN_L + plot_w,
            top + plot_h + 14.0,
            n.saturating_sub(1)
        );
        let stride = n.div_ceil(MAX_POINTS).max(1);
        let sx = plot_w / (n.max(2) - 1) as f64;
        for (k, series) in panel.series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            let mut pts = String::new();
            for (t, &v) in series.y.iter().enumerate().step_by(stride) {
                if v.is_finite() {
                    let x = MARGIN_L + t as f64 * sx;
                    let y = top + plot_h * (hi - v) / (hi - lo);
                    let _ = write!(pts, "{x:.1},{y:.1} ");
                }
            }
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1" points="{}"/>"#,
                pts.trim_end()
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
                MARGIN_L + plot_w + 8.0,
                top + 12.0 + 13.0 * k as f64,
                svg_escape(&series.label)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Efference copy, predicted and actual contact, and both accumulators for
/// one leg.
pub fn traces_svg(log: &RunLog, leg: LegId) -> String {
    let i = leg.index();
    let col = |f: fn(&LegRow) -> f64| log.rows.iter().map(|r| f(&r.legs[i])).collect::<Vec<_>>();
    let panels = vec![
        Panel { title: format!("{leg} efference copy"), series: vec![Series { label: "u".into(), y: col(|l| l.u) }] },
        Panel {
            title: format!("{leg} foot contact"),
            series: vec![Series { label: "predicted".into(), y: col(|l| l.rf) }, Series { label: "actual".into(), y: col(|l| l.fc) }],
        },
        Panel {
            title: format!("{leg} accumulated error"),
            series: vec![Series { label: "S".into(), y: col(|l| l.s) }, Series { label: "E".into(), y: col(|l| l.e) }],
        },
    ];
    render_panels(&panels, &log.config_echo)
}

/// One panel per gait readout, one line per leg.
pub fn weight_norms_svg(log: &RunLog) -> String {
    let panels: Vec<Panel> = GaitId::ALL
        .iter()
        .map(|&g| Panel {
            title: format!("|W_out| {} readout", g.name()),
            series: LegId::ALL
                .iter()
                .map(|&l| Series {
                    label: l.to_string(),
                    y: log.weight_norms.iter().map(|n| n[l.index()][g.index()]).collect(),
                })
                .collect(),
        })
        .collect();
    render_panels(&panels, &log.config_echo)
}

pub fn bj_svg(log: &RunLog) -> String {
    let panels = vec![
        Panel { title: "backbone joint (deg)".into(), series: vec![Series { label: "bj".into(), y: log.rows.iter().map(|r| r.bj).collect() }] },
        Panel { title: "body position (cm)".into(), series: vec![Series { label: "x".into(), y: log.rows.iter().map(|r| r.body_x).collect() }] },
    ];
    render_panels(&panels, &log.config_echo)
}

/// Stance bars per leg (efference copy below zero), last `window` ticks.
pub fn gait_diagram_svg(log: &RunLog, window: usize) -> String {
    let rows = &log.rows[log.rows.len().saturating_sub(window)..];
    let n = rows.len().max(1);
    let row_h = 22.0;
    let height = row_h * 6.0 + 50.0;
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let sx = plot_w / n as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, "<!--\n{}-->", svg_escape(&log.config_echo).replace("--", "- -"));
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let first = rows.first().map_or(0, |r| r.tick);
    let title = rows.first().map_or("", |r| r.gait.name());
    let _ = writeln!(s, r#"<text x="{MARGIN_L}" y="14" font-weight="bold">{title} gait, stance in black, from tick {first}</text>"#);
    for leg in LegId::ALL {
        let y = 24.0 + leg.index() as f64 * row_h;
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{leg}</text>"#, MARGIN_L - 6.0, y + 14.0);
        let mut start: Option<usize> = None;
        for t in 0..=rows.len() {
            let stance = t < rows.len() && rows[t].legs[leg.index()].u < 0.0;
            match (stance, start) {
                (true, None) => start = Some(t),
                (false, Some(t0)) => {
                    let _ = writeln!(
                        s,
                        r#"<rect x="{:.1}" y="{y}" width="{:.1}" height="{}" fill="black"/>"#,
                        MARGIN_L + t0 as f64 * sx,
                        (t - t0) as f64 * sx,
                        row_h - 6.0
                    );
                    start = None;
                }
                _ => {}
            }
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Writes the per-tick CSV and, for a non-empty log, its SVG plots into
/// `dir`. Returns the paths written.
pub fn emit_outputs(log: &RunLog, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let csv_path = dir.join(format!("log_{stem}.csv"));
    write_log_csv(log, &csv_path)?;
    written.push(csv_path);
    if !log.weight_norms.is_empty() {
        let p = dir.join(format!("weight_norms_{stem}.csv"));
        write_weight_norms_csv(log, &p)?;
        written.push(p);
    }
    written.extend(emit_svgs(log, dir, stem)?);
    Ok(written)
}

/// The SVG half of [`emit_outputs`]; writes nothing for an empty log.
pub fn emit_svgs(log: &RunLog, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if log.rows.is_empty() && log.weight_norms.is_empty() {
        return Ok(written);
    }
    let mut svg = |name: String, body: String| -> Result<()> {
        let p = dir.join(name);
        create(&p)?.write_all(body.as_bytes())?;
        written.push(p);
        Ok(())
    };
    if !log.rows.is_empty() {
        svg(format!("traces_R1_{stem}.svg"), traces_svg(log, LegId::R1))?;
        svg(format!("traces_L1_{stem}.svg"), traces_svg(log, LegId::L1))?;
        svg(format!("gait_{stem}.svg"), gait_diagram_svg(log, 300))?;
        svg(format!("bj_{stem}.svg"), bj_svg(log))?;
    }
    if !log.weight_norms.is_empty() {
        svg(format!("weight_norms_{stem}.svg"), weight_norms_svg(log))?;
    }
    Ok(written)
}

// ---------------------------------------------------------------- weights

const WEIGHTS_MAGIC: &str = "hexapod-fm-weights";
const WEIGHTS_VERSION: u32 = 1;

fn push_vec(out: &mut String, name: &str, v: &[f64]) {
    let _ = writeln!(out, "vector {name} {}", v.len());
    let line: Vec<String> = v.iter().map(f64::to_string).collect();
    let _ = writeln!(out, "{}", line.join(" "));
}

fn push_mat(out: &mut String, name: &str, m: &DMatrix<f64>) {
    let _ = writeln!(out, "matrix {name} {} {}", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let line: Vec<String> = m.row(i).iter().map(f64::to_string).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
}

/// Text serialisation of a trained bank and baseline: a version line, the
/// config echo, then named scalars, vectors (`vector name len` + one line)
/// and matrices (`matrix name rows cols` + one line per row).
pub fn weights_to_string(bank: &ForwardModelBank, baseline: &BaselineModel, echo: &str) -> String {
    let mut out = format!("{WEIGHTS_MAGIC} {WEIGHTS_VERSION}\n");
    out.push_str(&echo_lines(echo));
    let d = baseline.delays();
    let _ = writeln!(out, "baseline_delays {} {} {}", d[0], d[1], d[2]);
    for (leg, m) in LegId::ALL.iter().zip(bank.models()) {
        let parts = m.reservoir.to_parts();
        let p = &parts.params;
        let _ = writeln!(out, "leg {leg}");
        let _ = writeln!(out, "size {}", p.size);
        let _ = writeln!(out, "gain {}", p.gain);
        let _ = writeln!(out, "connectivity {}", p.connectivity);
        let _ = writeln!(out, "dt {}", p.dt);
        let _ = writeln!(out, "tau0 {}", p.tau0);
        let _ = writeln!(out, "input_weight_range {}", p.input_weight_range);
        let _ = writeln!(out, "bias_range {}", p.bias_range);
        let _ = writeln!(out, "seed {}", p.seed);
        let _ = writeln!(out, "frozen {}", parts.frozen);
        let _ = writeln!(out, "delta_c {}", m.readout.delta_c());
        let _ = writeln!(out, "learning {}", m.readout.learning_enabled());
        push_vec(&mut out, "transfer_gain", &parts.transfer_gain);
        push_vec(&mut out, "transfer_bias", &parts.transfer_bias);
        push_vec(&mut out, "tau", &parts.tau);
        push_vec(&mut out, "w_in", &parts.w_in);
        push_vec(&mut out, "aux_bias", &parts.aux_bias);
        push_mat(&mut out, "w_rec", &parts.w_rec);
        push_mat(&mut out, "w_out", m.readout.weights());
        for g in GaitId::ALL {
            push_mat(&mut out, &format!("p_{}", g.name()), m.readout.p(g));
        }
    }
    out
}

pub fn save_weights(path: &Path, bank: &ForwardModelBank, baseline: &BaselineModel, echo: &str) -> Result<()> {
    create(path)?.write_all(weights_to_string(bank, baseline, echo).as_bytes())?;
    Ok(())
}

struct Tokens<'a> {
    path: &'a Path,
    lines: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
}

impl<'a> Tokens<'a> {
    fn new(path: &'a Path, text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)>> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.trim()))
                .filter(|(_, l)| !l.is_empty() && !l.starts_with('#')),
        );
        Self { path, lines: it.peekable() }
    }

    fn err(&self, line: usize, reason: impl std::fmt::Display) -> Error {
        parse_err(self.path, format!("line {line}: {reason}"))
    }

    fn line(&mut self) -> Result<(usize, Vec<&'a str>)> {
        match self.lines.next() {
            Some((n, l)) => Ok((n, l.split_whitespace().collect())),
            None => Err(parse_err(self.path, "unexpected end of file")),
        }
    }

    /// `key v1 v2 ...`, returning the values.
    fn keyed(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        let (n, toks) = self.line()?;
        if toks.first() != Some(&key) {
            return Err(self.err(n, format!("expected {key:?}")));
        }
        Ok((n, toks[1..].to_vec()))
    }

    fn scalar<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let (n, v) = self.keyed(key)?;
        match v.as_slice() {
            [x] => x.parse().map_err(|_| self.err(n, format!("bad value for {key}: {x:?}"))),
            _ => Err(self.err(n, format!("{key} takes one value"))),
        }
    }

    fn floats(&mut self, expect: usize) -> Result<Vec<f64>> {
        let (n, toks) = self.line()?;
        if toks.len() != expect {
            return Err(Error::Dimension { expected: expect, actual: toks.len() });
        }
        toks.iter()
            .map(|t| t.parse::<f64>().map_err(|_| self.err(n, format!("bad number {t:?}"))))
            .collect()
    }

    fn vector(&mut self, name: &str) -> Result<Vec<f64>> {
        let (n, v) = self.keyed("vector")?;
        if v.len() != 2 || v[0] != name {
            return Err(self.err(n, format!("expected vector {name}")));
        }
        let len: usize = v[1].parse().map_err(|_| self.err(n, "bad length"))?;
        self.floats(len)
    }

    fn matrix(&mut self, name: &str) -> Result<DMatrix<f64>> {
        let (n, v) = self.keyed("matrix")?;
        if v.len() != 3 || v[0] != name {
            return Err(self.err(n, format!("expected matrix {name}")));
        }
        let rows: usize = v[1].parse().map_err(|_| self.err(n, "bad row count"))?;
        let cols: usize = v[2].parse().map_err(|_| self.err(n, "bad column count"))?;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            data.extend(self.floats(cols)?);
        }
        Ok(DMatrix::from_row_slice(rows, cols, &data))
    }
}

pub fn weights_from_str(text: &str, path: &Path) -> Result<(ForwardModelBank, BaselineModel)> {
    let mut tok = Tokens::new(path, text);
    let (n, v) = tok.keyed(WEIGHTS_MAGIC)?;
    if v != [WEIGHTS_VERSION.to_string().as_str()] {
        return Err(tok.err(n, format!("unsupported weight file version {v:?}")));
    }
    let (n, d) = tok.keyed("baseline_delays")?;
    let delays: Vec<usize> = d.iter().map(|x| x.parse::<usize>()).collect::<std::result::Result<_, _>>().map_err(|_| tok.err(n, "bad delay"))?;
    let delays: [usize; 3] = delays.try_into().map_err(|_| tok.err(n, "expected three delays"))?;
    let mut models = Vec::with_capacity(6);
    for leg in LegId::ALL {
        let name: String = tok.scalar("leg")?;
        if name != leg.name() {
            return Err(parse_err(path, format!("expected leg {leg}, found {name}")));
        }
        let params = ReservoirParams {
            size: tok.scalar("size")?,
            gain: tok.scalar("gain")?,
            connectivity: tok.scalar("connectivity")?,
            dt: tok.scalar("dt")?,
            tau0: tok.scalar("tau0")?,
            input_weight_range: tok.scalar("input_weight_range")?,
            bias_range: tok.scalar("bias_range")?,
            seed: tok.scalar("seed")?,
        };
        let frozen: bool = tok.scalar("frozen")?;
        let delta_c: f64 = tok.scalar("delta_c")?;
        let learning: bool = tok.scalar("learning")?;
        let parts = ReservoirParts {
            params,
            transfer_gain: tok.vector("transfer_gain")?,
            transfer_bias: tok.vector("transfer_bias")?,
            tau: tok.vector("tau")?,
            w_in: tok.vector("w_in")?,
            aux_bias: tok.vector("aux_bias")?,
            w_rec: tok.matrix("w_rec")?,
            frozen,
        };
        let reservoir = Reservoir::from_parts(parts)?;
        let w_out = tok.matrix("w_out")?;
        let p = [tok.matrix("p_wave")?, tok.matrix("p_tetrapod")?, tok.matrix("p_caterpillar")?];
        if w_out.nrows() != reservoir.size() {
            return Err(Error::Dimension { expected: reservoir.size(), actual: w_out.nrows() });
        }
        let mut readout = RlsReadout::from_parts(p, w_out, delta_c)?;
        readout.set_learning(learning);
        models.push(LegModel { reservoir, readout });
    }
    if let Some((n, _)) = tok.lines.next() {
        return Err(tok.err(n, "trailing content"));
    }
    Ok((ForwardModelBank::from_models(models)?, BaselineModel::new(delays)))
}

pub fn load_weights(path: &Path) -> Result<(ForwardModelBank, BaselineModel)> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read weight file {}: {e}", path.display())))?;
    weights_from_str(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::log::summarize;
    use crate::reservoir::ReservoirParams;

    fn tmp(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("hexapod-fm-output-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    fn sample_log() -> RunLog {
        let rows = (0..120)
            .map(|t| {
                let mut legs = [LegRow::default(); 6];
                for (k, l) in legs.iter_mut().enumerate() {
                    l.u = ((t + k) as f64 * 0.37).sin();
                    l.fc = if l.u < 0.0 { 1.0 } else { 0.0 };
                    l.rf = (l.fc + 0.1 * (t as f64 / 7.0).cos()).clamp(0.0, 1.0);
                    l.delta = l.rf - l.fc;
                    l.s = 1.0 / 3.0 * t as f64;
                    l.offsets.ctr = -0.1 * k as f64;
                }
                let gait = if t < 60 { GaitId::Wave } else { GaitId::Caterpillar };
                TickRow { tick: t, gait, body_x: t as f64 * 0.1, bj: -2.0 + (t as f64).sqrt(), legs }
            })
            .collect();
        RunLog { config_echo: "[run]\nseed = 3\n".into(), rows, weight_norms: Vec::new() }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let log = sample_log();
        let path = tmp("round_trip.csv");
        write_log_csv(&log, &path).unwrap();
        let back = read_log_csv(&path).unwrap();
        assert_eq!(back.rows, log.rows);
        assert_eq!(back.config_echo, log.config_echo);
        assert_eq!(summarize(&back.rows, 5, None), summarize(&log.rows, 5, None));
    }

    #[test]
    fn empty_log_writes_header_only() {
        let dir = tmp("empty");
        let log = RunLog { config_echo: "a = 1\n".into(), ..RunLog::default() };
        let files = emit_outputs(&log, &dir, "train_flat_reservoir_seed1").unwrap();
        assert_eq!(files.len(), 1);
        let text = fs::read_to_string(&files[0]).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("# a = 1\n"));
        assert!(read_log_csv(&files[0]).unwrap().rows.is_empty());
    }

    #[test]
    fn training_log_gets_three_panel_norm_plot() {
        let mut log = sample_log();
        log.weight_norms = (0..120).map(|t| [[t as f64, 0.0, 1.0]; 6]).collect();
        let dir = tmp("train");
        let files = emit_outputs(&log, &dir, "x_seed2").unwrap();
        let norms_csv = files.iter().find(|p| p.to_string_lossy().ends_with("weight_norms_x_seed2.csv")).unwrap();
        assert_eq!(read_weight_norms_csv(norms_csv).unwrap().1, log.weight_norms);
        let svg = files.iter().find(|p| p.to_string_lossy().ends_with("weight_norms_x_seed2.svg")).unwrap();
        let text = fs::read_to_string(svg).unwrap();
        assert_eq!(text.matches("readout</text>").count(), 3);
        assert_eq!(text.matches("<polyline").count(), 18);
        assert!(files.iter().all(|p| p.to_string_lossy().contains("x_seed2")));
    }

    #[test]
    fn weight_file_round_trip() {
        let params = ReservoirParams { size: 6, ..ReservoirParams::default() };
        let mut bank = ForwardModelBank::new(&params, 0.01).unwrap();
        for t in 0..200 {
            let u = (t as f64 * 0.3).sin();
            for leg in LegId::ALL {
                let g = GaitId::ALL[t / 70];
                bank.leg_mut(leg).train_step(u, if u < 0.0 { 1.0 } else { 0.0 }, g).unwrap();
            }
        }
        bank.set_learning(false);
        let baseline = BaselineModel::new([8, 5, 3]);
        let text = weights_to_string(&bank, &baseline, "k = 'v'\n");
        let (loaded, base2) = weights_from_str(&text, Path::new("mem")).unwrap();
        assert_eq!(weights_to_string(&loaded, &base2, "k = 'v'\n"), text);
        assert_eq!(base2.delays(), [8, 5, 3]);
        for (a, b) in bank.models().iter().zip(loaded.models()) {
            assert_eq!(a.readout.weights(), b.readout.weights());
            assert_eq!(a.readout.learning_enabled(), b.readout.learning_enabled());
        }
    }

    #[test]
    fn truncated_weight_file_is_an_error() {
        let params = ReservoirParams { size: 4, ..ReservoirParams::default() };
        let bank = ForwardModelBank::new(&params, 1.0).unwrap();
        let text = weights_to_string(&bank, &BaselineModel::new([1, 2, 3]), "");
        let cut = &text[..text.len() / 2];
        assert!(weights_from_str(cut, Path::new("mem")).is_err());
        assert!(weights_from_str("hexapod-fm-weights 9\n", Path::new("mem")).is_err());
    }
}
