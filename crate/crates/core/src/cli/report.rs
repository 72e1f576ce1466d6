use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::eval::EvalMetrics;
use super::{load_config, plot, resolve, write_text, CommandOutput, RunConfig};
use crate::train::SweepTable;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    /// `metrics.json` written by `eval`.
    pub metrics: PathBuf,
    /// `sweep.json` written by a data-efficiency `sweep`.
    pub sweep: PathBuf,
}

/// Figure files written by `report`, in index order.
pub const FIGURES: [&str; 6] = [
    "confusion.png",
    "sparsification.png",
    "coverage.png",
    "attention_bins.png",
    "accuracy_vs_proximity.png",
    "data_efficiency.png",
];

const CAPTIONS: [&str; 6] = [
    "Confusion matrix on the validation split (rows true, columns predicted).",
    "Sparsification curves: normalized MAE as the most uncertain samples are removed.",
    "Empirical interval coverage before and after global sigma scaling.",
    "Mean final-layer spatial attention, binned by Reynolds, capillary and Weber number.",
    "Per-class accuracy against log neighbour proximity, with the least-squares fit.",
    "Fine-tuning accuracy against training fraction, pretrained and from scratch.",
];

fn html_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn index_html(metrics: &EvalMetrics, metrics_path: &Path, sweep_path: &Path) -> String {
    let rows = [
        ("samples", metrics.samples.to_string()),
        ("accuracy", format!("{:.4}", metrics.accuracy)),
        ("mae_log", format!("{:.4}", metrics.mae_log)),
        ("ause_modeled", format!("{:.4}", metrics.ause_modeled)),
        ("ause_random", format!("{:.4}", metrics.ause_random)),
        ("ce_before", format!("{:.4}", metrics.ce_before)),
        ("ce_after", format!("{:.4}", metrics.ce_after)),
        ("s", format!("{:.4}", metrics.s)),
    ];
    let mut html = String::from(
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>viscnet report</title>\n\
         <style>body{font-family:sans-serif;max-width:960px;margin:auto}td,th{padding:2px 10px;text-align:left}\
         figure{margin:24px 0}img{max-width:100%}</style>\n</head>\n<body>\n<h1>viscnet report</h1>\n",
    );
    html.push_str(&format!(
        "<p>metrics: <code>{}</code><br>sweep: <code>{}</code></p>\n<table>\n",
        html_escape(&metrics_path.display().to_string()),
        html_escape(&sweep_path.display().to_string())
    ));
    for (k, v) in rows {
        html.push_str(&format!("<tr><th>{k}</th><td>{v}</td></tr>\n"));
    }
    html.push_str("</table>\n");
    for (f, c) in FIGURES.iter().zip(CAPTIONS) {
        html.push_str(&format!(
            "<figure><img src=\"{f}\" alt=\"{f}\"><figcaption>{c}</figcaption></figure>\n"
        ));
    }
    html.push_str("</body>\n</html>\n");
    html
}

/// Renders the six report figures and `index.html`.
pub fn cmd_report(run: &RunConfig) -> Result<CommandOutput> {
    let cfg: ReportConfig = load_config(&run.config_path)?;
    let metrics_path = resolve(&run.config_path, &cfg.metrics);
    let sweep_path = resolve(&run.config_path, &cfg.sweep);
    let missing: Vec<String> = [&metrics_path, &sweep_path]
        .iter()
        .filter(|p| !p.is_file())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingArtifacts(missing));
    }
    let metrics: EvalMetrics = load_config(&metrics_path)?;
    let sweep: SweepTable = load_config(&sweep_path)?;
    let Some(attention) = &metrics.attention else {
        return Err(Error::MissingArtifacts(vec![format!(
            "{}: attention (evaluate at least as many samples as attention bins)",
            metrics_path.display()
        )]));
    };

    let out = |name: &str| run.output_dir.join(name);
    plot::confusion_heatmap(&metrics.confusion, &out(FIGURES[0]))?;
    plot::sparsification_plot(
        &metrics.sparsification,
        (metrics.ause_modeled, metrics.ause_random),
        &out(FIGURES[1]),
    )?;
    plot::coverage_chart(
        &metrics.coverage_before,
        &metrics.coverage_after,
        metrics.s,
        &out(FIGURES[2]),
    )?;
    plot::attention_panels(attention, &out(FIGURES[3]))?;
    plot::proximity_scatter(
        &metrics.proximity,
        &metrics.confusion.per_class_accuracy,
        metrics.proximity_fit.as_ref(),
        &out(FIGURES[4]),
    )?;
    plot::data_efficiency_curves(&sweep, &out(FIGURES[5]))?;
    let index = write_text(&out("index.html"), &index_html(&metrics, &metrics_path, &sweep_path))?;

    let mut artifacts: Vec<PathBuf> = FIGURES.iter().map(|f| out(f)).collect();
    artifacts.push(index.clone());
    Ok(CommandOutput {
        lines: vec![format!("{} figures, index at {}", FIGURES.len(), index.display())],
        artifacts,
    })
}
