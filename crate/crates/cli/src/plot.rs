//! SVG plots: log-log error series with the fitted power law, and banded
//! filled contours of a solved field.

use std::path::Path;

use hypmin::asymptotics::AsymptoticsReport;
use hypmin::elliptic_solver::{GridField, NodeKind};
use plotters::prelude::*;

use crate::io::{IoError, Result};

/// Colour bands of the contour plot.
pub const CONTOUR_LEVELS: usize = 10;

fn fail(path: &Path, reason: impl ToString) -> IoError {
    IoError::WriteFailure {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
}

/// Range covering `values` with a margin of a quarter decade on each side.
fn log_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let pad = 10f64.powf(0.25);
    (lo / pad, hi * pad)
}

/// Series of the report against `r` on log-log axes, the fitted line
/// `e = exp(intercept) r^slope`, and the slope in the caption.
pub fn plot_report(report: &AsymptoticsReport, path: &Path) -> Result<()> {
    if report.series.is_empty() {
        return Err(fail(path, "empty series"));
    }
    if let Some(p) = report.series.iter().find(|p| !(p.r > 0.0 && p.e > 0.0)) {
        return Err(fail(path, format!("non-positive point r = {}, e = {}", p.r, p.e)));
    }
    let fit = |r: f64| report.intercept.exp() * r.powf(report.slope);
    let (r0, r1) = log_range(report.series.iter().map(|p| p.r));
    let (e0, e1) = log_range(report.series.iter().flat_map(|p| [p.e, fit(p.r)]));
    let root = SVGBackend::new(path, (720, 540)).into_drawing_area();
    let draw = || -> std::result::Result<(), Box<dyn std::error::Error + '_>> {
        root.fill(&WHITE)?;
        let caption = format!(
            "{}: slope {:.3} (threshold {:.2}) {}",
            report.experiment,
            report.slope,
            report.threshold,
            if report.verdict { "PASS" } else { "FAIL" }
        );
        let mut chart = ChartBuilder::on(&root)
            .caption(caption, ("sans-serif", 20))
            .margin(15)
            .x_label_area_size(45)
            .y_label_area_size(65)
            .build_cartesian_2d((r0..r1).log_scale(), (e0..e1).log_scale())?;
        chart
            .configure_mesh()
            .x_desc(if report.experiment == "smooth_expansion" {
                "d"
            } else {
                "r"
            })
            .y_desc("error")
            .draw()?;
        chart
            .draw_series(LineSeries::new([r0, r1].map(|r| (r, fit(r))), RED.stroke_width(2)))?
            .label(format!("fit: slope {:.3}", report.slope))
            .legend(|(x, y)| PathElement::new([(x, y), (x + 20, y)], RED));
        chart
            .draw_series(report.series.iter().map(|p| Circle::new((p.r, p.e), 4, BLUE.filled())))?
            .label("measured")
            .legend(|(x, y)| Circle::new((x + 10, y), 4, BLUE.filled()));
        chart
            .configure_series_labels()
            .position(SeriesLabelPosition::LowerRight)
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()?;
        root.present()?;
        Ok(())
    };
    draw().map_err(|e| fail(path, e))
}

/// Banded filled contours of `f`: every unknown node is painted as a cell
/// of side `h` in the colour of its band `floor(levels * f / max f)`.
pub fn plot_field(field: &GridField, path: &Path) -> Result<()> {
    let nodes: Vec<usize> = (0..field.nx * field.ny)
        .filter(|&k| field.mask[k] != NodeKind::Outside)
        .collect();
    if nodes.is_empty() {
        return Err(fail(path, "field has no interior nodes"));
    }
    let f_max = nodes.iter().map(|&k| field.values[k]).fold(0.0, f64::max);
    if !(f_max > 0.0 && f_max.is_finite()) {
        return Err(fail(path, format!("field maximum {f_max} is not positive")));
    }
    let h = field.spacing;
    let x0 = field.origin.x - h;
    let y0 = field.origin.y - h;
    let x1 = field.origin.x + field.nx as f64 * h;
    let y1 = field.origin.y + field.ny as f64 * h;
    let width = 640u32;
    let height = ((width as f64) * (y1 - y0) / (x1 - x0)).clamp(160.0, 1600.0) as u32 + 60;
    let root = SVGBackend::new(path, (width + 80, height)).into_drawing_area();
    let band = |f: f64| ((CONTOUR_LEVELS as f64 * f / f_max).floor() as usize).min(CONTOUR_LEVELS - 1);
    let colour = |b: usize| {
        let t = b as f64 / (CONTOUR_LEVELS - 1) as f64;
        HSLColor(0.66 * (1.0 - t), 0.75, 0.5)
    };
    let draw = || -> std::result::Result<(), Box<dyn std::error::Error + '_>> {
        root.fill(&WHITE)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(
                format!("f, {CONTOUR_LEVELS} bands up to {f_max:.4}"),
                ("sans-serif", 18),
            )
            .margin(10)
            .x_label_area_size(35)
            .y_label_area_size(50)
            .build_cartesian_2d(x0..x1, y0..y1)?;
        chart.configure_mesh().disable_mesh().draw()?;
        chart.draw_series(nodes.iter().map(|&k| {
            let p = field.node_point(k % field.nx, k / field.nx);
            let c = colour(band(field.values[k]));
            Rectangle::new(
                [(p.x - 0.5 * h, p.y - 0.5 * h), (p.x + 0.5 * h, p.y + 0.5 * h)],
                c.filled(),
            )
        }))?;
        root.present()?;
        Ok(())
    };
    draw().map_err(|e| fail(path, e))
}
