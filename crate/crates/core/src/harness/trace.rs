//! CSV persistence of round traces and their cross-seed summaries.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::config::ExperimentConfig;
use super::run::{simulate, simulate_sweep, RoundRecord, SeedTraces, SweepPoint};

pub const ROUND_HEADER: &str =
    "scenario,seed,sweep_value,round,n_selected,mse_empirical,mse_analytic,train_loss,test_acc,epsilon_proxy,ms";

const METRICS: [&str; 6] = ["n_selected", "mse_empirical", "mse_analytic", "train_loss", "test_acc", "epsilon_proxy"];

pub fn summary_header() -> String {
    let mut h = String::from("scenario,sweep_value,round,seeds");
    for m in METRICS {
        write!(h, ",{m}_mean,{m}_std").expect("write to string");
    }
    h
}

/// 17 significant digits, enough to round-trip any `f64`.
fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn format_rounds(records: &[RoundRecord]) -> String {
    let mut out = String::with_capacity(128 * (records.len() + 1));
    out.push_str(ROUND_HEADER);
    out.push('\n');
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.scenario,
            r.seed,
            r.sweep_value,
            r.round,
            r.n_selected,
            float(r.mse_empirical),
            float(r.mse_analytic),
            float(r.train_loss),
            float(r.test_acc),
            float(r.epsilon_proxy),
            float(r.ms),
        )
        .expect("write to string");
    }
    out
}

fn schema(path: &Path, detail: impl Into<String>) -> Error {
    Error::Schema {
        path: path.to_path_buf(),
        detail: detail.into(),
    }
}

pub fn read_rounds(path: &Path) -> Result<Vec<RoundRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(ROUND_HEADER) => {}
        Some(other) => return Err(schema(path, format!("unexpected header {other:?}"))),
        None => return Err(schema(path, "empty file")),
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let line_no = i + 2;
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 11 {
                return Err(schema(path, format!("line {line_no}: expected 11 columns, found {}", cols.len())));
            }
            let num = |j: usize| -> Result<f64> {
                cols[j]
                    .parse()
                    .map_err(|_| schema(path, format!("line {line_no}: bad number {:?}", cols[j])))
            };
            let int = |j: usize| -> Result<u64> {
                cols[j]
                    .parse()
                    .map_err(|_| schema(path, format!("line {line_no}: bad integer {:?}", cols[j])))
            };
            Ok(RoundRecord {
                scenario: cols[0].to_string(),
                seed: int(1)?,
                sweep_value: cols[2].to_string(),
                round: int(3)? as usize,
                n_selected: int(4)? as usize,
                mse_empirical: num(5)?,
                mse_analytic: num(6)?,
                train_loss: num(7)?,
                test_acc: num(8)?,
                epsilon_proxy: num(9)?,
                ms: num(10)?,
                update_power: f64::NAN,
            })
        })
        .collect()
}

/// Mean and sample standard deviation of one metric across seeds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub std: f64,
}

impl Moments {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        if values.is_empty() {
            return Self { mean: f64::NAN, std: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Self { mean, std }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub scenario: String,
    pub sweep_value: String,
    pub round: usize,
    pub seeds: usize,
    /// In the order of the summary header.
    pub metrics: [Moments; 6],
}

impl SummaryRow {
    pub fn test_acc(&self) -> Moments {
        self.metrics[4]
    }
}

/// Group by `(sweep_value, round)` in order of first appearance.
pub fn summarize(records: &[RoundRecord]) -> Vec<SummaryRow> {
    let mut keys: Vec<(&str, &str, usize)> = Vec::new();
    for r in records {
        let key = (r.scenario.as_str(), r.sweep_value.as_str(), r.round);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(scenario, value, round)| {
            let group: Vec<&RoundRecord> = records
                .iter()
                .filter(|r| r.scenario == scenario && r.sweep_value == value && r.round == round)
                .collect();
            let column = |f: fn(&RoundRecord) -> f64| Moments::of(&group.iter().map(|r| f(r)).collect::<Vec<_>>());
            SummaryRow {
                scenario: scenario.to_string(),
                sweep_value: value.to_string(),
                round,
                seeds: group.len(),
                metrics: [
                    column(|r| r.n_selected as f64),
                    column(|r| r.mse_empirical),
                    column(|r| r.mse_analytic),
                    column(|r| r.train_loss),
                    column(|r| r.test_acc),
                    column(|r| r.epsilon_proxy),
                ],
            }
        })
        .collect()
}

pub fn format_summary(rows: &[SummaryRow]) -> String {
    let mut out = summary_header();
    out.push('\n');
    for r in rows {
        write!(out, "{},{},{},{}", r.scenario, r.sweep_value, r.round, r.seeds).expect("write to string");
        for m in &r.metrics {
            write!(out, ",{},{}", float(m.mean), float(m.std)).expect("write to string");
        }
        out.push('\n');
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

pub fn seed_file_name(seed: u64) -> String {
    format!("seed_{seed}.csv")
}

pub const SUMMARY_FILE: &str = "summary.csv";
pub const SWEEP_FILE: &str = "sweep.csv";

fn write_traces(dir: &Path, traces: &SeedTraces) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let mut files = Vec::with_capacity(traces.len() + 1);
    for records in traces {
        let seed = records.first().map(|r| r.seed).expect("every trace has round 0");
        let path = dir.join(seed_file_name(seed));
        write_file(&path, &format_rounds(records))?;
        files.push(path);
    }
    let all: Vec<RoundRecord> = traces.iter().flatten().cloned().collect();
    let path = dir.join(SUMMARY_FILE);
    write_file(&path, &format_summary(&summarize(&all)))?;
    files.push(path);
    Ok(files)
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub traces: SeedTraces,
    pub files: Vec<PathBuf>,
}

/// Simulate every seed and write `seed_<n>.csv` plus `summary.csv` to `out`.
pub fn run(config: &ExperimentConfig, out: &Path) -> Result<RunOutput> {
    let traces = simulate(config, "")?;
    let files = write_traces(out, &traces)?;
    Ok(RunOutput { traces, files })
}

#[derive(Clone, Debug)]
pub struct SweepOutput {
    pub points: Vec<SweepPoint>,
    pub files: Vec<PathBuf>,
}

fn point_dir(key: &str, label: &str) -> String {
    let safe = |s: &str| {
        s.chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '_' { c } else { '_' })
            .collect::<String>()
    };
    format!("{}={}", safe(key), safe(label))
}

/// Run the `[sweep]` of `config`: one subdirectory per value, plus a
/// combined long-format `sweep.csv` and its `summary.csv` at the top.
pub fn scenario_sweep(config: &ExperimentConfig, out: &Path) -> Result<SweepOutput> {
    let key = config
        .sweep
        .as_ref()
        .map(|s| s.key.clone())
        .ok_or_else(|| Error::Config("configuration has no [sweep] section".into()))?;
    let points = simulate_sweep(config)?;
    let mut files = Vec::new();
    let mut all = Vec::new();
    for p in &points {
        files.extend(write_traces(&out.join(point_dir(&key, &p.label)), &p.traces)?);
        all.extend(p.traces.iter().flatten().cloned());
    }
    let combined = out.join(SWEEP_FILE);
    write_file(&combined, &format_rounds(&all))?;
    let summary = out.join(SUMMARY_FILE);
    write_file(&summary, &format_summary(&summarize(&all)))?;
    files.push(combined);
    files.push(summary);
    Ok(SweepOutput { points, files })
}
