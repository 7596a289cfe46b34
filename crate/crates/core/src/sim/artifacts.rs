//! Run directories: metrics, timing, plot data, summary and checkpoint.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::agents::AgentBundle;
use super::metrics::{moving_average, read_records, summarize, RecordWriter, SlotRecord, SlotTiming, Summary, DEFAULT_SPAN};
use super::runner::{RunConfig, Simulation};
use super::scenario::Scenario;
use super::scheme::{Mode, SchemeSpec};
use crate::error::{Error, Result};

pub const METRICS_FILE: &str = "metrics.csv";
pub const TIMING_FILE: &str = "timing.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const RUN_FILE: &str = "run.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.ckpt";
pub const SCENARIO_FILE: &str = "scenario.toml";
pub const PLOT_DIR: &str = "plot";

/// Run metadata written next to the metrics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub scheme: SchemeSpec,
    pub mode: Mode,
    pub seed: u64,
    pub slots: usize,
    pub num_bs: usize,
    pub num_tu: usize,
    pub num_au: usize,
    pub exchange_count: usize,
    pub learning_exchange_count: usize,
    pub optimizer_exchange_count: usize,
}

pub struct RunRequest<'a> {
    pub scenario: Scenario,
    pub scheme: SchemeSpec,
    pub mode: Mode,
    pub slots: usize,
    pub seed: u64,
    pub out: &'a Path,
    pub force: bool,
    pub agents: Option<AgentBundle>,
    /// Also write per-slot wall-clock times. Off by default so that a run
    /// directory depends only on its inputs.
    pub timing: bool,
}

pub struct RunResult {
    pub summary: Summary,
    pub records: Vec<SlotRecord>,
    pub checkpoint: Option<PathBuf>,
}

fn prepare_dir(out: &Path, force: bool) -> Result<()> {
    if out.join(METRICS_FILE).exists() && !force {
        return Err(Error::Exists(out.join(METRICS_FILE)));
    }
    std::fs::create_dir_all(out.join(PLOT_DIR))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Simulates `slots` slots and writes every artifact into `out`.
pub fn run_to_dir(req: RunRequest<'_>) -> Result<RunResult> {
    prepare_dir(req.out, req.force)?;
    let s = &req.scenario;
    let (n_bs, n_tu, n_au) = (s.num_bs(), s.num_tu(), s.num_au());
    let info = RunInfo {
        scheme: req.scheme,
        mode: req.mode,
        seed: req.seed,
        slots: req.slots,
        num_bs: n_bs,
        num_tu: n_tu,
        num_au: n_au,
        exchange_count: if req.scheme.uses_learning_exchange() { s.learning_exchange_count() } else { s.optimizer_exchange_count() },
        learning_exchange_count: s.learning_exchange_count(),
        optimizer_exchange_count: s.optimizer_exchange_count(),
    };
    std::fs::write(req.out.join(SCENARIO_FILE), s.to_toml())?;
    write_json(&req.out.join(RUN_FILE), &info)?;

    let cfg = RunConfig { scheme: req.scheme, mode: req.mode, seed: req.seed, record_events: false };
    let mut sim = Simulation::new(req.scenario.clone(), cfg, req.agents)?;
    let mut metrics = RecordWriter::create(&req.out.join(METRICS_FILE), n_bs, n_tu, n_au)?;
    let timing_path = req.out.join(TIMING_FILE);
    let mut timing = if req.timing {
        Some(csv::Writer::from_path(&timing_path)?)
    } else {
        if timing_path.exists() {
            std::fs::remove_file(&timing_path)?;
        }
        None
    };
    let mut records = Vec::with_capacity(req.slots);
    for _ in 0..req.slots {
        let out = sim.step()?;
        metrics.write(&out.record)?;
        if let Some(t) = timing.as_mut() {
            t.serialize(TimingRow::from(out.timing))?;
        }
        records.push(out.record);
    }
    metrics.finish()?;
    if let Some(mut t) = timing {
        t.flush()?;
    }

    let summary = summarize(&records, s.radio.slot_s, s.radio.bandwidth_hz);
    write_json(&req.out.join(SUMMARY_FILE), &summary)?;
    write_plot_data(&req.out.join(PLOT_DIR), &records, n_au)?;

    let checkpoint = if req.scheme.has_agents() && req.mode == Mode::Train {
        let path = req.out.join(CHECKPOINT_FILE);
        sim.bundle().save(&path)?;
        Some(path)
    } else {
        None
    };
    Ok(RunResult { summary, records, checkpoint })
}

#[derive(Serialize, Deserialize)]
struct TimingRow {
    slot: usize,
    ua_us: u64,
    bs_us: u64,
    transmit_us: u64,
    total_us: u64,
}

impl From<SlotTiming> for TimingRow {
    fn from(t: SlotTiming) -> Self {
        Self { slot: t.slot, ua_us: t.ua_us, bs_us: t.bs_us, transmit_us: t.transmit_us, total_us: t.total_us() }
    }
}

/// Named per-slot series that get a plot-data file.
pub fn plot_series(records: &[SlotRecord], num_au: usize) -> Vec<(String, Vec<f64>)> {
    let mut out = vec![
        ("sum_rate".to_string(), records.iter().map(|r| r.sum_rate).collect()),
        ("eff_sum_rate".to_string(), records.iter().map(|r| r.eff_sum_rate).collect()),
        (
            "handover_pct".to_string(),
            records.iter().map(|r| 100.0 * r.handovers() as f64 / r.handover.len().max(1) as f64).collect(),
        ),
    ];
    for l in 0..num_au {
        out.push((format!("rho_ratio_{l}"), records.iter().map(|r| r.rho_ratio[l]).collect()));
    }
    out
}

fn write_plot_data(dir: &Path, records: &[SlotRecord], num_au: usize) -> Result<()> {
    for (name, series) in plot_series(records, num_au) {
        let mut w = csv::Writer::from_path(dir.join(format!("{name}.csv")))?;
        w.write_record(["slot", "value"])?;
        for (r, v) in records.iter().zip(moving_average(&series, DEFAULT_SPAN)) {
            w.write_record([r.slot.to_string(), v.to_string()])?;
        }
        w.flush()?;
    }
    Ok(())
}

/// One row of the comparison table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareRow {
    pub dir: PathBuf,
    pub scheme: String,
    pub mean_sum_rate: f64,
    pub mean_rho_ratio: f64,
    pub handover_pct: f64,
    /// `None` when the run was made without timing.
    pub mean_slot_ms: Option<f64>,
    pub exchange_count: usize,
}

pub fn compare_row(dir: &Path) -> Result<CompareRow> {
    let info: RunInfo = serde_json::from_str(&std::fs::read_to_string(dir.join(RUN_FILE))?)?;
    let records = read_records(&dir.join(METRICS_FILE))?;
    let summary = summarize(&records, 1.0, 1.0);
    let timing_path = dir.join(TIMING_FILE);
    let mean_slot_ms = if timing_path.exists() {
        let mut rd = csv::Reader::from_path(&timing_path)?;
        let (mut total, mut count) = (0u64, 0usize);
        for row in rd.deserialize::<TimingRow>() {
            total += row?.total_us;
            count += 1;
        }
        (count > 0).then(|| total as f64 / count as f64 / 1000.0)
    } else {
        None
    };
    let ratios = &summary.mean_rho_ratio;
    Ok(CompareRow {
        dir: dir.to_path_buf(),
        scheme: info.scheme.to_string(),
        mean_sum_rate: summary.mean_sum_rate,
        mean_rho_ratio: if ratios.is_empty() { 0.0 } else { ratios.iter().sum::<f64>() / ratios.len() as f64 },
        handover_pct: summary.handover_pct,
        mean_slot_ms,
        exchange_count: info.exchange_count,
    })
}

/// Plain-text comparison: exchange counts for `scenario`, then one row per
/// run directory.
pub fn compare_table(scenario: &Scenario, dirs: &[PathBuf]) -> Result<String> {
    let mut s = String::new();
    writeln!(s, "exchange_count learning={} optimizer={}", scenario.learning_exchange_count(), scenario.optimizer_exchange_count()).unwrap();
    if dirs.is_empty() {
        return Ok(s);
    }
    writeln!(s, "{:<14} {:>12} {:>12} {:>10} {:>10} {:>9}  dir", "scheme", "sum_rate", "rho/I_max", "handover%", "slot_ms", "exchange").unwrap();
    for d in dirs {
        let r = compare_row(d)?;
        writeln!(
            s,
            "{:<14} {:>12.4} {:>12.4} {:>10.3} {:>10} {:>9}  {}",
            r.scheme,
            r.mean_sum_rate,
            r.mean_rho_ratio,
            r.handover_pct,
            r.mean_slot_ms.map_or("-".to_string(), |ms| format!("{ms:.3}")),
            r.exchange_count,
            r.dir.display()
        )
        .unwrap();
    }
    Ok(s)
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// Minimal SVG line chart.
pub fn svg_chart(title: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let (w, h, pad) = (720.0, 420.0, 56.0);
    let pts = series.iter().flat_map(|(_, p)| p.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#).unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(title)).unwrap();
    writeln!(s, r#"<path d="M{pad},{pad} V{} H{}" fill="none" stroke="black"/>"#, h - pad, w - pad).unwrap();
    for i in 0..=4 {
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, pad - 4.0, sy(fy) + 4.0, fmt_tick(fy)).unwrap();
        writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, sx(fx), h - pad + 16.0, fmt_tick(fx)).unwrap();
    }
    for (i, (name, p)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        for (j, &(x, y)) in p.iter().filter(|p| p.0.is_finite() && p.1.is_finite()).enumerate() {
            write!(d, "{}{:.2},{:.2}", if j == 0 { "M" } else { " L" }, sx(x), sy(y)).unwrap();
        }
        writeln!(s, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>"#).unwrap();
        let ly = pad + 16.0 * i as f64;
        writeln!(s, r#"<text x="{}" y="{}" fill="{color}">{}</text>"#, w - pad - 150.0, ly, escape(name)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Overlays the moving-average series of several runs, one SVG per metric.
pub fn plot_runs(dirs: &[PathBuf], out: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out)?;
    let mut runs = Vec::new();
    for d in dirs {
        let info: RunInfo = serde_json::from_str(&std::fs::read_to_string(d.join(RUN_FILE))?)?;
        let records = read_records(&d.join(METRICS_FILE))?;
        let label = format!("{} (seed {})", info.scheme, info.seed);
        runs.push((label, plot_series(&records, info.num_au), records));
    }
    let Some((_, first, _)) = runs.first() else {
        return Err(Error::InvalidArgument("plot needs at least one run directory".into()));
    };
    let names: Vec<String> = first.iter().map(|(n, _)| n.clone()).collect();
    let mut written = Vec::new();
    for (i, name) in names.iter().enumerate() {
        let series: Vec<(String, Vec<(f64, f64)>)> = runs
            .iter()
            .filter_map(|(label, metrics, records)| {
                let (_, values) = metrics.get(i)?;
                let ma = moving_average(values, DEFAULT_SPAN);
                Some((label.clone(), records.iter().zip(ma).map(|(r, v)| (r.slot as f64, v)).collect()))
            })
            .collect();
        let path = out.join(format!("{name}.svg"));
        std::fs::write(&path, svg_chart(name, &series))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svg_is_well_formed_for_empty_and_flat_series() {
        let s = svg_chart("x<y", &[("a".into(), vec![]), ("b".into(), vec![(0.0, 1.0), (1.0, 1.0)])]);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains("x&lt;y"));
    }
}
