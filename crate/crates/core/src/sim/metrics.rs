//! Per-slot records, CSV persistence and summary statistics.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SPAN: usize = 41;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot: usize,
    /// `sum_k log2(1 + gamma_k)`.
    pub sum_rate: f64,
    /// Sum rate with each handover slot discounted by `zeta_r`.
    pub eff_sum_rate: f64,
    pub serving: Vec<usize>,
    pub handover: Vec<bool>,
    pub rate: Vec<f64>,
    /// Received interference per AU, watts.
    pub rho: Vec<f64>,
    pub rho_ratio: Vec<f64>,
    pub bs_reward: Vec<f64>,
    /// Shared cost per AU, `rho_l / I_max - 1`.
    pub cost: Vec<f64>,
}

impl SlotRecord {
    pub fn handovers(&self) -> usize {
        self.handover.iter().filter(|&&h| h).count()
    }
}

/// Wall-clock per phase, microseconds. Kept apart from the metrics so that
/// metrics files are reproducible.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SlotTiming {
    pub slot: usize,
    pub ua_us: u64,
    pub bs_us: u64,
    pub transmit_us: u64,
}

impl SlotTiming {
    pub fn total_us(&self) -> u64 {
        self.ua_us + self.bs_us + self.transmit_us
    }
}

/// `(num_bs, num_tu, num_au)` determine the column layout.
pub fn csv_header(num_bs: usize, num_tu: usize, num_au: usize) -> Vec<String> {
    let mut h = vec!["slot".to_string(), "sum_rate".into(), "eff_sum_rate".into(), "handovers".into()];
    h.extend((0..num_tu).map(|k| format!("serving_{k}")));
    h.extend((0..num_tu).map(|k| format!("handover_{k}")));
    h.extend((0..num_tu).map(|k| format!("rate_{k}")));
    h.extend((0..num_au).map(|l| format!("rho_{l}")));
    h.extend((0..num_au).map(|l| format!("rho_ratio_{l}")));
    h.extend((0..num_bs).map(|n| format!("reward_{n}")));
    h.extend((0..num_au).map(|l| format!("cost_{l}")));
    h
}

fn row(r: &SlotRecord) -> Vec<String> {
    let mut v = vec![r.slot.to_string(), r.sum_rate.to_string(), r.eff_sum_rate.to_string(), r.handovers().to_string()];
    v.extend(r.serving.iter().map(|x| x.to_string()));
    v.extend(r.handover.iter().map(|&x| u8::from(x).to_string()));
    for series in [&r.rate, &r.rho, &r.rho_ratio, &r.bs_reward, &r.cost] {
        v.extend(series.iter().map(|x| x.to_string()));
    }
    v
}

/// Streams records to a CSV file with a fixed header.
pub struct RecordWriter {
    inner: csv::Writer<std::fs::File>,
}

impl RecordWriter {
    pub fn create(path: &Path, num_bs: usize, num_tu: usize, num_au: usize) -> Result<Self> {
        let mut inner = csv::Writer::from_path(path)?;
        inner.write_record(csv_header(num_bs, num_tu, num_au))?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, r: &SlotRecord) -> Result<()> {
        self.inner.write_record(row(r))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

pub fn write_records(path: &Path, records: &[SlotRecord], num_bs: usize, num_tu: usize, num_au: usize) -> Result<()> {
    let mut w = RecordWriter::create(path, num_bs, num_tu, num_au)?;
    for r in records {
        w.write(r)?;
    }
    w.finish()
}

fn count_prefix(header: &csv::StringRecord, prefix: &str) -> usize {
    header.iter().filter(|h| h.strip_prefix(prefix).is_some_and(|rest| rest.parse::<usize>().is_ok())).count()
}

pub fn read_records(path: &Path) -> Result<Vec<SlotRecord>> {
    let mut rd = csv::Reader::from_path(path)?;
    let header = rd.headers()?.clone();
    let (k, l, n) = (count_prefix(&header, "rate_"), count_prefix(&header, "rho_"), count_prefix(&header, "reward_"));
    if header.len() != csv_header(n, k, l).len() {
        return Err(Error::Config(format!("{}: unexpected metrics header", path.display())));
    }
    let parse_f = |s: &str| s.parse::<f64>().map_err(|e| Error::Config(format!("bad number '{s}': {e}")));
    let parse_u = |s: &str| s.parse::<usize>().map_err(|e| Error::Config(format!("bad integer '{s}': {e}")));
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let f: Vec<&str> = rec.iter().collect();
        let mut i = 4;
        let mut take = |len: usize| {
            let s = &f[i..i + len];
            i += len;
            s.to_vec()
        };
        let serving = take(k).into_iter().map(parse_u).collect::<Result<Vec<_>>>()?;
        let handover = take(k).into_iter().map(|s| Ok(parse_u(s)? != 0)).collect::<Result<Vec<_>>>()?;
        let rate = take(k).into_iter().map(parse_f).collect::<Result<Vec<_>>>()?;
        let rho = take(l).into_iter().map(parse_f).collect::<Result<Vec<_>>>()?;
        let rho_ratio = take(l).into_iter().map(parse_f).collect::<Result<Vec<_>>>()?;
        let bs_reward = take(n).into_iter().map(parse_f).collect::<Result<Vec<_>>>()?;
        let cost = take(l).into_iter().map(parse_f).collect::<Result<Vec<_>>>()?;
        out.push(SlotRecord {
            slot: parse_u(f[0])?,
            sum_rate: parse_f(f[1])?,
            eff_sum_rate: parse_f(f[2])?,
            serving,
            handover,
            rate,
            rho,
            rho_ratio,
            bs_reward,
            cost,
        });
    }
    Ok(out)
}

/// Centred moving average; near the ends the window shrinks symmetrically so
/// it stays centred.
pub fn moving_average(series: &[f64], span: usize) -> Vec<f64> {
    let half = span.max(1) / 2;
    let n = series.len();
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + series[i];
    }
    (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            (prefix[i + h + 1] - prefix[i - h]) / (2 * h + 1) as f64
        })
        .collect()
}

/// Value of the last full-width centred window, i.e. the mean of the final
/// `span` samples (or of all samples when the series is shorter).
pub fn final_window_mean(series: &[f64], span: usize) -> f64 {
    if series.is_empty() {
        return f64::NAN;
    }
    let w = (2 * (span.max(1) / 2) + 1).min(series.len());
    series[series.len() - w..].iter().sum::<f64>() / w as f64
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub slots: usize,
    pub mean_sum_rate: f64,
    pub mean_eff_sum_rate: f64,
    /// Bits per second delivered to all TUs, handover slots discounted.
    pub throughput_bps: f64,
    pub mean_rho: Vec<f64>,
    pub mean_rho_ratio: Vec<f64>,
    /// Handover events over `K * slots`, in percent.
    pub handover_pct: f64,
    pub final_sum_rate: f64,
    pub final_rho_ratio: Vec<f64>,
}

pub fn summarize(records: &[SlotRecord], interval_s: f64, bandwidth_hz: f64) -> Summary {
    let t = records.len();
    if t == 0 {
        return Summary::default();
    }
    let tf = t as f64;
    let num_au = records[0].rho.len();
    let num_tu = records[0].rate.len();
    let eff: Vec<f64> = records.iter().map(|r| r.eff_sum_rate).collect();
    let sum: Vec<f64> = records.iter().map(|r| r.sum_rate).collect();
    let bits: f64 = eff.iter().map(|e| e * bandwidth_hz * interval_s).sum();
    let handovers: usize = records.iter().map(SlotRecord::handovers).sum();
    let ratio_series = |l: usize| records.iter().map(|r| r.rho_ratio[l]).collect::<Vec<_>>();
    Summary {
        slots: t,
        mean_sum_rate: sum.iter().sum::<f64>() / tf,
        mean_eff_sum_rate: eff.iter().sum::<f64>() / tf,
        throughput_bps: bits / (tf * interval_s),
        mean_rho: (0..num_au).map(|l| records.iter().map(|r| r.rho[l]).sum::<f64>() / tf).collect(),
        mean_rho_ratio: (0..num_au).map(|l| ratio_series(l).iter().sum::<f64>() / tf).collect(),
        handover_pct: 100.0 * handovers as f64 / (num_tu.max(1) as f64 * tf),
        final_sum_rate: final_window_mean(&sum, DEFAULT_SPAN),
        final_rho_ratio: (0..num_au).map(|l| final_window_mean(&ratio_series(l), DEFAULT_SPAN)).collect(),
    }
}
