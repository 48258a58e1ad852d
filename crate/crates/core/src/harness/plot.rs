//! SVG figures from trace directories.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use plotters::prelude::*;

use crate::error::{Error, Result};

use super::config::ERROR_FREE_LABEL;
use super::run::RoundRecord;
use super::trace::{read_rounds, SWEEP_FILE};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    MseVsN,
    AccVsN,
    AccVsRound,
    AccVsL,
    PrivacyTradeoff,
}

impl PlotKind {
    pub const ALL: [PlotKind; 5] = [
        PlotKind::MseVsN,
        PlotKind::AccVsN,
        PlotKind::AccVsRound,
        PlotKind::AccVsL,
        PlotKind::PrivacyTradeoff,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlotKind::MseVsN => "mse_vs_n",
            PlotKind::AccVsN => "acc_vs_n",
            PlotKind::AccVsRound => "acc_vs_round",
            PlotKind::AccVsL => "acc_vs_L",
            PlotKind::PrivacyTradeoff => "privacy_tradeoff",
        }
    }
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlotKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown plot kind {s:?}")))
    }
}

/// Records from `dir/sweep.csv`, or else from every `seed_*.csv` in `dir`.
pub fn load_traces(dir: &Path) -> Result<Vec<RoundRecord>> {
    let combined = dir.join(SWEEP_FILE);
    if combined.is_file() {
        let records = read_rounds(&combined)?;
        if records.is_empty() {
            return Err(Error::NoData(dir.to_path_buf()));
        }
        return Ok(records);
    }
    let mut files: Vec<PathBuf> = match fs::read_dir(dir) {
        Ok(entries) => entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("seed_") && n.ends_with(".csv"))
            })
            .collect(),
        Err(_) => Vec::new(),
    };
    files.sort();
    let mut records = Vec::new();
    for f in &files {
        records.extend(read_rounds(f)?);
    }
    if records.is_empty() {
        return Err(Error::NoData(dir.to_path_buf()));
    }
    Ok(records)
}

struct Group<'a> {
    label: &'a str,
    rows: Vec<&'a RoundRecord>,
}

impl Group<'_> {
    fn mean_by_round(&self, f: fn(&RoundRecord) -> f64) -> Vec<(f64, f64)> {
        let last = self.rows.iter().map(|r| r.round).max().unwrap_or(0);
        (0..=last)
            .filter_map(|round| {
                let v: Vec<f64> = self.rows.iter().filter(|r| r.round == round).map(|r| f(r)).collect();
                (!v.is_empty()).then(|| (round as f64, v.iter().sum::<f64>() / v.len() as f64))
            })
            .collect()
    }

    fn final_accuracy(&self) -> f64 {
        self.mean_by_round(|r| r.test_acc).last().map_or(f64::NAN, |p| p.1)
    }

    /// Mean over seeds and all aggregation rounds, ignoring non-finite values.
    fn mean_after_start(&self, f: fn(&RoundRecord) -> f64) -> f64 {
        let v: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.round > 0)
            .map(|r| f(r))
            .filter(|x| x.is_finite())
            .collect();
        if v.is_empty() {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    }
}

fn groups(records: &[RoundRecord]) -> Vec<Group<'_>> {
    let mut out: Vec<Group> = Vec::new();
    for r in records {
        match out.iter_mut().find(|g| g.label == r.sweep_value) {
            Some(g) => g.rows.push(r),
            None => out.push(Group {
                label: &r.sweep_value,
                rows: vec![r],
            }),
        }
    }
    out
}

fn range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo > hi {
        return None;
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
    Some((lo - pad, hi + pad))
}

struct Series {
    name: String,
    points: Vec<(f64, f64)>,
    dashed: bool,
}

fn plot_err(e: impl std::fmt::Display) -> Error {
    Error::Plot(e.to_string())
}

fn render(path: &Path, title: &str, x_desc: &str, y_desc: &str, series: &[Series]) -> Result<()> {
    let all = || series.iter().flat_map(|s| s.points.iter());
    let (x0, x1) = range(all().map(|p| p.0)).ok_or_else(|| Error::Plot("nothing finite to draw".into()))?;
    let (y0, y1) = range(all().map(|p| p.1)).ok_or_else(|| Error::Plot("nothing finite to draw".into()))?;

    let root = SVGBackend::new(path, (800, 560)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(16)
        .x_label_area_size(44)
        .y_label_area_size(64)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc(x_desc)
        .y_desc(y_desc)
        .draw()
        .map_err(plot_err)?;
    for (i, s) in series.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        let pts: Vec<(f64, f64)> = s.points.iter().copied().filter(|p| p.0.is_finite() && p.1.is_finite()).collect();
        let drawn = if s.dashed {
            chart.draw_series(DashedLineSeries::new(pts.clone(), 8, 6, color.stroke_width(2)))
        } else {
            chart.draw_series(LineSeries::new(pts.clone(), color.stroke_width(2)))
        }
        .map_err(plot_err)?;
        drawn
            .label(s.name.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
        if !s.dashed {
            chart
                .draw_series(pts.iter().map(|&p| Circle::new(p, 3, color.filled())))
                .map_err(plot_err)?;
        }
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(())
}

fn numeric_points<'a>(dir: &Path, gs: &[Group<'a>], y: impl Fn(&Group<'a>) -> f64) -> Result<Vec<(f64, f64)>> {
    let mut pts: Vec<(f64, f64)> = gs
        .iter()
        .filter_map(|g| g.label.parse::<f64>().ok().map(|x| (x, y(g))))
        .collect();
    if pts.is_empty() {
        return Err(Error::Schema {
            path: dir.to_path_buf(),
            detail: "traces carry no numeric sweep values".into(),
        });
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pts)
}

fn reference_line(gs: &[Group], pts: &[(f64, f64)]) -> Option<Series> {
    let g = gs.iter().find(|g| g.label == ERROR_FREE_LABEL)?;
    let acc = g.final_accuracy();
    let (lo, hi) = (pts.first()?.0, pts.last()?.0);
    Some(Series {
        name: "error-free".into(),
        points: vec![(lo, acc), (hi, acc)],
        dashed: true,
    })
}

/// Render one figure from the traces in `dir`; returns the written path.
/// The default output is `dir/<kind>.svg`.
pub fn plot(dir: &Path, kind: PlotKind, out: Option<&Path>) -> Result<PathBuf> {
    let records = load_traces(dir)?;
    let gs = groups(&records);
    let path = out.map_or_else(|| dir.join(format!("{}.svg", kind.name())), Path::to_path_buf);
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    match kind {
        PlotKind::MseVsN => {
            let pts = numeric_points(dir, &gs, |g| g.mean_after_start(|r| r.mse_empirical))?;
            let s = Series { name: "empirical MSE".into(), points: pts, dashed: false };
            render(&path, "Aggregation MSE vs selected devices", "selected devices", "MSE", &[s])?;
        }
        PlotKind::AccVsN | PlotKind::AccVsL => {
            let pts = numeric_points(dir, &gs, |g| g.final_accuracy())?;
            let mut series = Vec::new();
            series.extend(reference_line(&gs, &pts));
            series.insert(0, Series { name: "final test accuracy".into(), points: pts, dashed: false });
            let (title, x) = if kind == PlotKind::AccVsN {
                ("Test accuracy vs selected devices", "selected devices")
            } else {
                ("Test accuracy vs RIS elements", "RIS elements")
            };
            render(&path, title, x, "test accuracy", &series)?;
        }
        PlotKind::AccVsRound => {
            let series: Vec<Series> = gs
                .iter()
                .map(|g| Series {
                    name: if g.label.is_empty() { "run".into() } else { g.label.to_string() },
                    points: g.mean_by_round(|r| r.test_acc),
                    dashed: g.label == ERROR_FREE_LABEL,
                })
                .collect();
            render(&path, "Test accuracy per round", "round", "test accuracy", &series)?;
        }
        PlotKind::PrivacyTradeoff => {
            let mut pts: Vec<(f64, f64)> = gs
                .iter()
                .filter(|g| g.label != ERROR_FREE_LABEL)
                .map(|g| (g.mean_after_start(|r| r.epsilon_proxy), g.final_accuracy()))
                .filter(|p| p.0.is_finite())
                .collect();
            if pts.is_empty() {
                return Err(Error::Schema {
                    path: dir.to_path_buf(),
                    detail: "traces carry no finite epsilon_proxy values".into(),
                });
            }
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let s = Series { name: "final accuracy".into(), points: pts, dashed: false };
            render(&path, "Privacy proxy vs accuracy", "epsilon proxy", "test accuracy", &[s])?;
        }
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::trace::format_rounds;

    fn rec(value: &str, seed: u64, round: usize, acc: f64, eps: f64) -> RoundRecord {
        RoundRecord {
            scenario: "t".into(),
            seed,
            sweep_value: value.into(),
            round,
            n_selected: 2,
            mse_empirical: 0.01 * round as f64,
            mse_analytic: 0.0,
            train_loss: 1.0,
            test_acc: acc,
            epsilon_proxy: eps,
            ms: 0.0,
            update_power: f64::NAN,
        }
    }

    #[test]
    fn empty_directory_has_no_data() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(plot(dir.path(), PlotKind::AccVsRound, None), Err(Error::NoData(_))));
        assert!(matches!(
            plot(&dir.path().join("missing"), PlotKind::MseVsN, None),
            Err(Error::NoData(_))
        ));
    }

    #[test]
    fn every_kind_renders_deterministically() {
        let dir = tempfile::tempdir().unwrap();
        let mut rows = Vec::new();
        for (v, eps) in [("0", 5.0), ("0.1", 2.0), ("0.5", 0.5), (ERROR_FREE_LABEL, f64::NAN)] {
            for seed in [1, 2] {
                for round in 0..3 {
                    rows.push(rec(v, seed, round, 0.3 + 0.1 * round as f64, eps));
                }
            }
        }
        fs::write(dir.path().join(SWEEP_FILE), format_rounds(&rows)).unwrap();
        for kind in PlotKind::ALL {
            let a = plot(dir.path(), kind, None).unwrap();
            let first = fs::read(&a).unwrap();
            plot(dir.path(), kind, None).unwrap();
            assert_eq!(first, fs::read(&a).unwrap(), "{}", kind.name());
            assert!(String::from_utf8(first).unwrap().contains("<svg"));
        }
    }

    #[test]
    fn kind_names_parse() {
        for kind in PlotKind::ALL {
            assert_eq!(kind.name().parse::<PlotKind>().unwrap(), kind);
        }
        assert!("scatter".parse::<PlotKind>().is_err());
    }
}
