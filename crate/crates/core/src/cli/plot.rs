//! Report figures. Text uses an embedded font so images are identical
//! across machines.

use std::error::Error as StdError;
use std::path::Path;
use std::sync::Once;

use plotters::prelude::*;
use plotters::style::text_anchor::{HPos, Pos, VPos};
use plotters::style::{register_font, FontStyle};

use super::eval::AttentionGroup;
use crate::analysis::{ConfusionMatrix, LogFit};
use crate::train::{Arm, SweepTable};
use crate::uq::{CoverageLevel, SparsificationCurve, DEFAULT_LEVELS};
use crate::{Error, Result};

type PlotResult = std::result::Result<(), Box<dyn StdError>>;

static FONT: &[u8] = include_bytes!("../../assets/DejaVuSans.ttf");
static REGISTER: Once = Once::new();

const FONT_NAME: &str = "sans-serif";
const SIZE: (u32, u32) = (720, 540);
const BLUE: RGBColor = RGBColor(31, 119, 180);
const ORANGE: RGBColor = RGBColor(255, 127, 14);
const GREEN: RGBColor = RGBColor(44, 160, 44);
const GREY: RGBColor = RGBColor(127, 127, 127);

fn render(path: &Path, draw: impl FnOnce(&Path) -> PlotResult) -> Result<()> {
    REGISTER.call_once(|| {
        if register_font(FONT_NAME, FontStyle::Normal, FONT).is_err() {
            log::error!("embedded font rejected");
        }
    });
    draw(path).map_err(|e| Error::Plot(format!("{}: {e}", path.display())))
}

/// White to dark blue.
fn shade(t: f64) -> RGBColor {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    RGBColor(lerp(255.0, 8.0), lerp(255.0, 48.0), lerp(255.0, 107.0))
}

pub(crate) fn confusion_heatmap(cm: &ConfusionMatrix, path: &Path) -> Result<()> {
    render(path, |path| {
        let n = cm.counts.len();
        let span = -0.5..n as f64 - 0.5;
        let root = BitMapBackend::new(path, (600, 600)).into_drawing_area();
        root.fill(&WHITE)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(
                format!("Confusion matrix, accuracy {:.3}", cm.accuracy),
                (FONT_NAME, 20),
            )
            .margin(10)
            .x_label_area_size(40)
            .y_label_area_size(40)
            .build_cartesian_2d(span.clone(), span)?;
        // row 0 on top
        let flip = |v: f64| n as f64 - 1.0 - v;
        let tick = |v: f64| {
            let r = v.round();
            if (v - r).abs() < 1e-6 && r >= 0.0 && r < n as f64 {
                format!("{r:.0}")
            } else {
                String::new()
            }
        };
        chart
            .configure_mesh()
            .disable_mesh()
            .x_desc("predicted class")
            .y_desc("true class")
            .x_labels(n + 1)
            .y_labels(n + 1)
            .x_label_formatter(&|v| tick(*v))
            .y_label_formatter(&|v| tick(flip(*v)))
            .label_style((FONT_NAME, 12))
            .draw()?;
        let centered = Pos::new(HPos::Center, VPos::Center);
        let mut cells = Vec::new();
        let mut labels = Vec::new();
        for (t, row) in cm.counts.iter().enumerate() {
            let total = row.iter().sum::<u64>().max(1) as f64;
            for (p, &c) in row.iter().enumerate() {
                let frac = c as f64 / total;
                let (x, y) = (p as f64, flip(t as f64));
                cells.push(Rectangle::new(
                    [(x - 0.5, y - 0.5), (x + 0.5, y + 0.5)],
                    shade(frac).filled(),
                ));
                if c > 0 {
                    let color = if frac > 0.5 { WHITE } else { BLACK };
                    let style = (FONT_NAME, 13).into_font().color(&color).pos(centered);
                    labels.push(Text::new(c.to_string(), (x, y), style));
                }
            }
        }
        chart.draw_series(cells)?;
        chart.draw_series(labels)?;
        root.present()?;
        Ok(())
    })
}

pub(crate) fn sparsification_plot(curve: &SparsificationCurve, ause: (f64, f64), path: &Path) -> Result<()> {
    render(path, |path| {
        let root = BitMapBackend::new(path, SIZE).into_drawing_area();
        root.fill(&WHITE)?;
        let top = curve
            .modeled
            .iter()
            .chain(&curve.oracle)
            .chain(&curve.random)
            .copied()
            .fold(1.0, f64::max);
        let mut chart = ChartBuilder::on(&root)
            .caption(
                format!("Sparsification, AUSE modeled {:.3} / random {:.3}", ause.0, ause.1),
                (FONT_NAME, 20),
            )
            .margin(10)
            .x_label_area_size(40)
            .y_label_area_size(50)
            .build_cartesian_2d(0f64..1f64, 0f64..top * 1.05)?;
        chart
            .configure_mesh()
            .x_desc("fraction of samples removed")
            .y_desc("normalized MAE of retained samples")
            .label_style((FONT_NAME, 12))
            .draw()?;
        for (name, ys, color) in [
            ("modeled", &curve.modeled, BLUE),
            ("oracle", &curve.oracle, GREEN),
            ("random", &curve.random, GREY),
        ] {
            let pts: Vec<(f64, f64)> = curve
                .fractions_removed
                .iter()
                .copied()
                .zip(ys.iter().copied())
                .collect();
            chart
                .draw_series(LineSeries::new(pts, color.stroke_width(2)))?
                .label(name)
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
        }
        chart
            .configure_series_labels()
            .label_font((FONT_NAME, 14))
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()?;
        root.present()?;
        Ok(())
    })
}

/// Empirical against nominal coverage, with the nominal 50/68/95% levels
/// drawn as reference lines.
pub(crate) fn coverage_chart(before: &[CoverageLevel], after: &[CoverageLevel], s: f64, path: &Path) -> Result<()> {
    render(path, |path| {
        let root = BitMapBackend::new(path, SIZE).into_drawing_area();
        root.fill(&WHITE)?;
        let n = before.len();
        let mut chart = ChartBuilder::on(&root)
            .caption(format!("Interval coverage, s = {s:.3}"), (FONT_NAME, 20))
            .margin(10)
            .x_label_area_size(40)
            .y_label_area_size(50)
            .build_cartesian_2d(0f64..n as f64, 0f64..1f64)?;
        let names: Vec<String> = before.iter().map(|c| format!("{:.0}%", c.nominal * 100.0)).collect();
        chart
            .configure_mesh()
            .disable_x_mesh()
            .x_labels(n.max(1) * 2 + 1)
            .x_label_formatter(&|x| {
                let i = x.floor() as usize;
                if (x - i as f64 - 0.5).abs() < 1e-6 {
                    names.get(i).cloned().unwrap_or_default()
                } else {
                    String::new()
                }
            })
            .x_desc("nominal level")
            .y_desc("empirical coverage")
            .label_style((FONT_NAME, 12))
            .draw()?;
        for tau in DEFAULT_LEVELS {
            chart.draw_series(LineSeries::new(
                [(0.0, tau), (n as f64, tau)],
                BLACK.mix(0.6).stroke_width(1),
            ))?;
            chart.draw_series([Text::new(
                format!("{:.0}%", tau * 100.0),
                (n as f64 - 0.12, tau + 0.035),
                (FONT_NAME, 12),
            )])?;
        }
        for (k, (name, levels, color)) in [("before", before, ORANGE), ("after", after, BLUE)]
            .into_iter()
            .enumerate()
        {
            let x0 = 0.15 + 0.35 * k as f64;
            chart
                .draw_series(levels.iter().enumerate().map(move |(i, c)| {
                    let x = i as f64 + x0;
                    Rectangle::new([(x, 0.0), (x + 0.3, c.empirical)], color.filled())
                }))?
                .label(name)
                .legend(move |(x, y)| Rectangle::new([(x, y - 5), (x + 15, y + 5)], color.filled()));
        }
        chart
            .configure_series_labels()
            .position(SeriesLabelPosition::UpperLeft)
            .label_font((FONT_NAME, 14))
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()?;
        root.present()?;
        Ok(())
    })
}

/// Mean spatial attention per bin; one row per dimensionless number.
pub(crate) fn attention_panels(groups: &[AttentionGroup], path: &Path) -> Result<()> {
    render(path, |path| {
        let cols = groups.iter().map(|g| g.bins.len()).max().unwrap_or(1).max(1);
        let cell = 170u32;
        let root =
            BitMapBackend::new(path, (cell * cols as u32, cell * groups.len().max(1) as u32 + 40)).into_drawing_area();
        root.fill(&WHITE)?;
        // one colour scale for every panel
        let (lo, hi) = groups
            .iter()
            .flat_map(|g| &g.bins)
            .filter_map(|b| b.mean.as_ref())
            .flat_map(|m| m.spatial.iter().copied())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
        let range = (hi - lo).max(f64::MIN_POSITIVE);
        let (title, body) = root.split_vertically(40);
        title.titled(
            &format!("Mean attention by bin (rows Re, Ca, We; low to high), shade {lo:.4} to {hi:.4}"),
            (FONT_NAME, 16),
        )?;
        let panels = body.split_evenly((groups.len().max(1), cols));
        for (r, g) in groups.iter().enumerate() {
            for (c, bin) in g.bins.iter().enumerate() {
                let area = &panels[r * cols + c];
                let caption = format!("{} [{:.3e}, {:.3e}]", g.number, bin.lower, bin.upper);
                let Some(mean) = &bin.mean else {
                    area.titled(&format!("{} empty", g.number), (FONT_NAME, 12))?;
                    continue;
                };
                let (h, w) = mean.spatial.dim();
                let mut chart = ChartBuilder::on(area)
                    .caption(caption, (FONT_NAME, 11))
                    .margin(4)
                    .build_cartesian_2d(0..w as i32, 0..h as i32)?;
                chart.draw_series(mean.spatial.indexed_iter().map(|((i, j), &v)| {
                    let y = (h - 1 - i) as i32;
                    Rectangle::new([(j as i32, y), (j as i32 + 1, y + 1)], shade((v - lo) / range).filled())
                }))?;
            }
        }
        root.present()?;
        Ok(())
    })
}

/// Per-class accuracy against `ln D` with the fitted line.
pub(crate) fn proximity_scatter(d: &[f64], acc: &[Option<f64>], fit: Option<&LogFit>, path: &Path) -> Result<()> {
    render(path, |path| {
        let pts: Vec<(usize, f64, f64)> = d
            .iter()
            .zip(acc)
            .enumerate()
            .filter_map(|(i, (&d, a))| Some((i, d.ln(), (*a)?)))
            .filter(|p| p.1.is_finite())
            .collect();
        let (mut lo, mut hi) = pts
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p.1), h.max(p.1)));
        if !lo.is_finite() {
            (lo, hi) = (-1.0, 1.0);
        }
        let pad = ((hi - lo) * 0.1).max(0.1);
        let root = BitMapBackend::new(path, SIZE).into_drawing_area();
        root.fill(&WHITE)?;
        let caption = match fit {
            Some(f) => format!("acc = {:.3} ln D + {:.3}, r2 = {:.3}", f.slope, f.intercept, f.r2),
            None => "accuracy against proximity (no fit)".to_string(),
        };
        let mut chart = ChartBuilder::on(&root)
            .caption(caption, (FONT_NAME, 20))
            .margin(10)
            .x_label_area_size(40)
            .y_label_area_size(50)
            .build_cartesian_2d((lo - pad)..(hi + pad), 0f64..1.05f64)?;
        chart
            .configure_mesh()
            .x_desc("ln D (D in m^2/s)")
            .y_desc("per-class accuracy")
            .label_style((FONT_NAME, 12))
            .draw()?;
        chart.draw_series(pts.iter().map(|&(_, x, y)| Circle::new((x, y), 5, BLUE.filled())))?;
        chart.draw_series(
            pts.iter()
                .map(|&(i, x, y)| Text::new(format!("{i}"), (x, y + 0.03), (FONT_NAME, 12))),
        )?;
        if let Some(f) = fit {
            let line = [lo - pad, hi + pad].map(|x| (x, f.slope * x + f.intercept));
            chart.draw_series(LineSeries::new(line, ORANGE.stroke_width(2)))?;
        }
        root.present()?;
        Ok(())
    })
}

/// Mean accuracy per fraction for each arm, with one-std bars.
pub(crate) fn data_efficiency_curves(table: &SweepTable, path: &Path) -> Result<()> {
    render(path, |path| {
        let root = BitMapBackend::new(path, SIZE).into_drawing_area();
        root.fill(&WHITE)?;
        let mut chart = ChartBuilder::on(&root)
            .caption("Fine-tuning accuracy against training fraction", (FONT_NAME, 20))
            .margin(10)
            .x_label_area_size(40)
            .y_label_area_size(50)
            .build_cartesian_2d(0f64..1.05f64, 0f64..1.05f64)?;
        chart
            .configure_mesh()
            .x_desc("fraction of training split")
            .y_desc("validation accuracy")
            .label_style((FONT_NAME, 12))
            .draw()?;
        for (arm, color) in [(Arm::Pretrained, BLUE), (Arm::Scratch, ORANGE)] {
            let mut cells: Vec<_> = table.summary.iter().filter(|c| c.arm == arm).collect();
            if cells.is_empty() {
                continue;
            }
            cells.sort_by(|a, b| a.fraction.total_cmp(&b.fraction));
            chart
                .draw_series(LineSeries::new(
                    cells.iter().map(|c| (c.fraction, c.mean_accuracy)),
                    color.stroke_width(2),
                ))?
                .label(arm.as_str())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
            chart.draw_series(cells.iter().map(|c| {
                ErrorBar::new_vertical(
                    c.fraction,
                    c.mean_accuracy - c.std_accuracy,
                    c.mean_accuracy,
                    c.mean_accuracy + c.std_accuracy,
                    color.filled(),
                    8,
                )
            }))?;
        }
        chart
            .configure_series_labels()
            .position(SeriesLabelPosition::LowerRight)
            .label_font((FONT_NAME, 14))
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()?;
        root.present()?;
        Ok(())
    })
}
