//! SVG figures: box plots of the minimum model size against μ, and
//! median post-screening size / detection rate against λ.

use std::collections::BTreeMap;
use std::path::Path;

use plotters::prelude::*;

use super::compare::{CompareSummaryRow, METHOD_EXSIS};
use super::stats::{BoxStats, OrdF64};
use super::ExperimentRecord;
use crate::error::{Error, Result};

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(148, 103, 189),
    RGBColor(255, 127, 14),
    RGBColor(23, 190, 207),
];

fn plot_err<E: std::fmt::Display>(err: E) -> Error {
    Error::Io(std::io::Error::other(err.to_string()))
}

/// One box per `(μ target, e)` cell, boxes of different `e` side by side.
pub fn oracle_boxplot(path: &Path, records: &[ExperimentRecord]) -> Result<()> {
    let mut cells: BTreeMap<(OrdF64, OrdF64), Vec<f64>> = BTreeMap::new();
    for r in records {
        if let (Some(mu), Some(mms)) = (r.mu_target, r.mms) {
            cells.entry((OrdF64(r.e.unwrap_or(0.0)), OrdF64(mu))).or_default().push(mms as f64);
        }
    }
    if cells.is_empty() {
        return Err(Error::InsufficientData("no completed cells to plot".into()));
    }
    let mut es: Vec<f64> = cells.keys().map(|k| k.0 .0).collect();
    es.dedup();
    let mut mus: Vec<f64> = cells.keys().map(|k| k.1 .0).collect();
    mus.sort_by(f64::total_cmp);
    mus.dedup();
    let boxes: Vec<(usize, usize, BoxStats)> = cells
        .iter()
        .map(|((e, mu), v)| {
            let ei = es.iter().position(|x| *x == e.0).unwrap_or(0);
            let mi = mus.iter().position(|x| *x == mu.0).unwrap_or(0);
            BoxStats::of(v).map(|b| (ei, mi, b))
        })
        .collect::<Result<_>>()?;
    let y_max = boxes.iter().map(|b| b.2.outliers.last().copied().unwrap_or(b.2.whisker_high)).fold(1.0, f64::max);

    let root = SVGBackend::new(path, (900, 560)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("Minimum model size vs coherence", ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(56)
        .build_cartesian_2d(-0.5f64..mus.len() as f64 - 0.5, (1.0f64..y_max * 1.5).log_scale())
        .map_err(plot_err)?;
    let labels = mus.clone();
    chart
        .configure_mesh()
        .x_desc("target mu")
        .y_desc("MMS")
        .x_labels(mus.len())
        .x_label_formatter(&|x| {
            let i = x.round();
            if (x - i).abs() < 1e-6 && i >= 0.0 && (i as usize) < labels.len() {
                format!("{:.2}", labels[i as usize])
            } else {
                String::new()
            }
        })
        .draw()
        .map_err(plot_err)?;
    let width = 0.7 / es.len() as f64;
    for (ei, e) in es.iter().enumerate() {
        let color = PALETTE[ei % PALETTE.len()];
        let series: Vec<&(usize, usize, BoxStats)> = boxes.iter().filter(|b| b.0 == ei).collect();
        let offset = |mi: usize| mi as f64 - 0.35 + width * (ei as f64 + 0.5);
        chart
            .draw_series(series.iter().map(|(_, mi, b)| {
                let x = offset(*mi);
                Rectangle::new([(x - width * 0.4, b.q1.max(1.0)), (x + width * 0.4, b.q3.max(1.0))], color.stroke_width(2))
            }))
            .map_err(plot_err)?
            .label(format!("e = {e}"))
            .legend(move |(x, y)| Rectangle::new([(x, y - 5), (x + 12, y + 5)], color.filled()));
        for (_, mi, b) in series {
            let x = offset(*mi);
            let seg = |y0: f64, y1: f64| PathElement::new(vec![(x, y0.max(1.0)), (x, y1.max(1.0))], color);
            chart
                .draw_series([
                    seg(b.whisker_low, b.q1),
                    seg(b.q3, b.whisker_high),
                    PathElement::new(vec![(x - width * 0.4, b.median.max(1.0)), (x + width * 0.4, b.median.max(1.0))], color.stroke_width(3)),
                ])
                .map_err(plot_err)?;
            chart
                .draw_series(b.outliers.iter().map(|&o| Circle::new((x, o.max(1.0)), 2, color)))
                .map_err(plot_err)?;
        }
    }
    chart
        .configure_series_labels()
        .border_style(BLACK)
        .background_style(WHITE.mix(0.8))
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(())
}

/// Median post-screening size (left) and detection rate (right) against
/// `λ/λ_max` for every rule; the fixed-size screen is a horizontal line.
pub fn comparison_curves(path: &Path, rows: &[CompareSummaryRow]) -> Result<()> {
    let mut series: BTreeMap<(String, OrdF64), Vec<&CompareSummaryRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.lambda_ratio.is_some()) {
        series.entry((r.method.clone(), OrdF64(r.alpha.unwrap_or(1.0)))).or_default().push(r);
    }
    let exsis = rows.iter().find(|r| r.method == METHOD_EXSIS);
    let max_size = rows.iter().map(|r| r.median_post_screen_size).fold(1.0, f64::max);

    let root = SVGBackend::new(path, (1200, 520)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let panels = root.split_evenly((1, 2));
    for (panel, (title, detection)) in panels.iter().zip([("Median size after screening", false), ("Median detection rate", true)]) {
        let y_range = if detection { 0.0..1.05 } else { 0.0..max_size * 1.05 };
        let mut chart = ChartBuilder::on(panel)
            .caption(title, ("sans-serif", 20))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(56)
            .build_cartesian_2d(0.0f64..1.0, y_range)
            .map_err(plot_err)?;
        chart.configure_mesh().x_desc("lambda / lambda_max").draw().map_err(plot_err)?;
        for (i, ((method, alpha), pts)) in series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let value = |r: &CompareSummaryRow| if detection { r.median_detection_rate } else { r.median_post_screen_size };
            chart
                .draw_series(LineSeries::new(pts.iter().map(|r| (r.lambda_ratio.unwrap_or(0.0), value(r))), color.stroke_width(2)))
                .map_err(plot_err)?
                .label(format!("{method} (alpha = {})", alpha.0))
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color.stroke_width(2)));
            chart
                .draw_series(
                    pts.iter()
                        .filter(|r| r.labeled)
                        .map(|r| Cross::new((r.lambda_ratio.unwrap_or(0.0), value(r)), 6, color.stroke_width(2))),
                )
                .map_err(plot_err)?;
        }
        if let Some(ex) = exsis {
            let level = if detection { ex.median_detection_rate } else { ex.median_post_screen_size };
            chart
                .draw_series(LineSeries::new([(0.0, level), (1.0, level)], BLACK.stroke_width(2)))
                .map_err(plot_err)?
                .label("exsis")
                .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], BLACK.stroke_width(2)));
        }
        chart
            .configure_series_labels()
            .border_style(BLACK)
            .background_style(WHITE.mix(0.8))
            .draw()
            .map_err(plot_err)?;
    }
    root.present().map_err(plot_err)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_svg_is_written() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("o.svg");
        let records: Vec<ExperimentRecord> = (0..30)
            .map(|i| ExperimentRecord {
                trial: i,
                mu_target: Some(if i % 2 == 0 { 0.1 } else { 0.5 }),
                e: Some(if i % 3 == 0 { 2.0 } else { 10.0 }),
                mms: Some(5 + i * i),
                ..Default::default()
            })
            .collect();
        oracle_boxplot(&path, &records).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("<svg"));
        assert!(text.contains("e = 10"));
        assert!(oracle_boxplot(&path, &[]).is_err());
    }
}
