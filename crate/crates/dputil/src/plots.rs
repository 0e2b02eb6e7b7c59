//! SVG charts of each metric against log10(epsilon), one series per
//! mechanism, seed means with standard-deviation error bars. Every chart has
//! a companion CSV with the plotted numbers.

use std::path::{Path, PathBuf};

use dputil_core::learners::ArchKind;
use dputil_core::mechanisms::MechanismKind;
use dputil_core::metrics::{mean_std, MeanStd, MetricRow};
use plotters::prelude::*;

use crate::error::{io_err, HarnessError, Result};
use crate::results::{format_float, SweepResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    UtilityLoss,
    PrivacyLeakage,
    TrueRevealed,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::UtilityLoss, Metric::PrivacyLeakage, Metric::TrueRevealed];

    pub fn name(self) -> &'static str {
        match self {
            Metric::UtilityLoss => "utility_loss",
            Metric::PrivacyLeakage => "privacy_leakage",
            Metric::TrueRevealed => "true_revealed",
        }
    }

    fn title(self) -> &'static str {
        match self {
            Metric::UtilityLoss => "Utility loss",
            Metric::PrivacyLeakage => "Privacy leakage",
            Metric::TrueRevealed => "True revealed records",
        }
    }

    pub fn value(self, row: &MetricRow) -> f64 {
        match self {
            Metric::UtilityLoss => row.utility_loss,
            Metric::PrivacyLeakage => row.privacy_leakage,
            Metric::TrueRevealed => row.true_revealed as f64,
        }
    }
}

/// Seed-aggregated points of one series.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPoint {
    pub epsilon: f64,
    pub stats: MeanStd,
}

/// Mean and spread over seeds for every (mechanism, epsilon) of one
/// (dataset, arch) group. Mechanisms and epsilons keep first-seen order.
pub fn aggregate(
    result: &SweepResult,
    dataset: &str,
    arch: ArchKind,
    metric: Metric,
) -> Vec<(MechanismKind, Vec<SeriesPoint>)> {
    let mut series: Vec<(MechanismKind, Vec<(f64, Vec<f64>)>)> = Vec::new();
    for row in result.rows.iter().filter(|r| r.dataset == dataset && r.arch == arch) {
        let Some(m) = &row.metrics else { continue };
        let idx = match series.iter().position(|(k, _)| *k == row.mechanism) {
            Some(i) => i,
            None => {
                series.push((row.mechanism, Vec::new()));
                series.len() - 1
            }
        };
        let points = &mut series[idx].1;
        match points.iter_mut().find(|(e, _)| *e == row.epsilon) {
            Some((_, values)) => values.push(metric.value(m)),
            None => points.push((row.epsilon, vec![metric.value(m)])),
        }
    }
    series
        .into_iter()
        .map(|(kind, points)| {
            let mut points: Vec<SeriesPoint> = points
                .into_iter()
                .filter_map(|(epsilon, v)| mean_std(&v).map(|stats| SeriesPoint { epsilon, stats }))
                .collect();
            points.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
            (kind, points)
        })
        .collect()
}

fn groups(result: &SweepResult) -> Vec<(String, ArchKind)> {
    let mut out: Vec<(String, ArchKind)> = Vec::new();
    for row in result.rows.iter().filter(|r| r.is_ok()) {
        if !out.iter().any(|(d, a)| *d == row.dataset && *a == row.arch) {
            out.push((row.dataset.clone(), row.arch));
        }
    }
    out
}

fn file_stem(dataset: &str, arch: ArchKind, metric: Metric) -> String {
    let safe: String = dataset
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("{safe}_{}_{}", arch.as_str(), metric.name())
}

const PALETTE: [RGBColor; 5] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
];

fn companion_csv(series: &[(MechanismKind, Vec<SeriesPoint>)]) -> String {
    let mut out = String::from("mechanism,epsilon,log10_epsilon,mean,std,count\n");
    for (kind, points) in series {
        for p in points {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                kind.as_str(),
                format_float(p.epsilon),
                format_float(p.epsilon.log10()),
                format_float(p.stats.mean),
                format_float(p.stats.std),
                p.stats.count
            ));
        }
    }
    out
}

fn draw_chart(
    path: &Path,
    title: &str,
    series: &[(MechanismKind, Vec<SeriesPoint>)],
) -> std::result::Result<(), Box<dyn std::error::Error>> {
    let points = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in points {
        let x = p.epsilon.log10();
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(p.stats.mean - p.stats.std);
        y1 = y1.max(p.stats.mean + p.stats.std);
    }
    let pad_x = ((x1 - x0) * 0.05).max(0.5);
    let pad_y = ((y1 - y0) * 0.08).max(0.05 * y1.abs().max(1e-3));

    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(45)
        .y_label_area_size(70)
        .build_cartesian_2d((x0 - pad_x)..(x1 + pad_x), (y0 - pad_y)..(y1 + pad_y))?;
    chart.configure_mesh().x_desc("log10(epsilon)").y_desc(title).draw()?;

    for (i, (kind, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let line: Vec<(f64, f64)> = pts.iter().map(|p| (p.epsilon.log10(), p.stats.mean)).collect();
        chart
            .draw_series(LineSeries::new(line.clone(), color.stroke_width(2)))?
            .label(kind.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
        chart.draw_series(line.iter().map(|&(x, y)| Circle::new((x, y), 3, color.filled())))?;
        chart.draw_series(pts.iter().map(|p| {
            let x = p.epsilon.log10();
            ErrorBar::new_vertical(x, p.stats.mean - p.stats.std, p.stats.mean, p.stats.mean + p.stats.std, color, 8)
        }))?;
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .draw()?;
    root.present()?;
    Ok(())
}

/// Writes three charts and three companion CSVs per (dataset, arch) group
/// into `dir`. Returns the SVG paths.
pub fn emit_plots(result: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>> {
    let groups = groups(result);
    if groups.is_empty() {
        return Err(HarnessError::EmptyReport);
    }
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    for (dataset, arch) in &groups {
        for metric in Metric::ALL {
            let series = aggregate(result, dataset, *arch, metric);
            let stem = file_stem(dataset, *arch, metric);
            let csv_path = dir.join(format!("{stem}.csv"));
            std::fs::write(&csv_path, companion_csv(&series)).map_err(io_err(&csv_path))?;
            let svg_path = dir.join(format!("{stem}.svg"));
            let title = format!("{} ({dataset}, {})", metric.title(), arch.as_str());
            draw_chart(&svg_path, &title, &series).map_err(|e| HarnessError::Plot(format!("{}: {e}", svg_path.display())))?;
            written.push(svg_path);
        }
    }
    Ok(written)
}
