//! Report emission: metrics CSVs, the ROC plot as a self-contained SVG, and
//! a JSON run summary. All outputs are byte-deterministic for fixed inputs.

use std::path::{Path, PathBuf};

use super::{ConfusionMetrics, RocPoint, SliceReport, Slicer};
use crate::ingest::ClassLabel;
use crate::{Error, Result};

/// Evaluation of one model over a scored example set.
#[derive(Debug, Clone)]
pub struct ModelEvalResult {
    pub name: String,
    pub per_class: Vec<(ClassLabel, Vec<RocPoint>, f64)>,
    pub micro_curve: Vec<RocPoint>,
    pub micro_auc: f64,
    pub macro_curve: Vec<RocPoint>,
    pub macro_auc: f64,
    /// Positive-class confusion metrics at the decision threshold.
    pub confusion: ConfusionMetrics,
    pub threshold: f64,
    /// Micro-average over per-chunk scores, reported alongside the default
    /// per-recording numbers.
    pub per_chunk_micro_auc: Option<f64>,
}

pub struct ReportInputs<'a> {
    pub primary: &'a ModelEvalResult,
    pub ablation: Option<&'a ModelEvalResult>,
    pub slices: &'a [SliceReport],
    pub summary: serde_json::Value,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn metrics_csv(result: &ModelEvalResult) -> String {
    let mut out = String::from("series,auc\n");
    for (class, _, auc) in &result.per_class {
        out.push_str(&format!("{},{auc:.6}\n", class.name()));
    }
    out.push_str(&format!("micro_average,{:.6}\n", result.micro_auc));
    out.push_str(&format!("macro_average,{:.6}\n", result.macro_auc));
    out
}

fn confusion_csv(results: &[&ModelEvalResult]) -> String {
    let mut out = String::from(
        "model,threshold,tp,fp,tn,fn,sensitivity,specificity,ppv,npv,prevalence\n",
    );
    for r in results {
        let c = &r.confusion;
        out.push_str(&format!(
            "{},{:.2},{},{},{},{},{},{},{},{},{:.6}\n",
            r.name,
            r.threshold,
            c.tp,
            c.fp,
            c.tn,
            c.fn_,
            fmt_opt(c.sensitivity),
            fmt_opt(c.specificity),
            fmt_opt(c.ppv),
            fmt_opt(c.npv),
            c.prevalence
        ));
    }
    out
}

fn slices_csv(slices: &[SliceReport]) -> String {
    let mut out = String::from(
        "slicer,group,n,class1_auc,class2_auc,class3_auc,micro_avg,sensitivity,specificity,ppv,npv,excluded\n",
    );
    for report in slices {
        let slicer = match report.slicer {
            Slicer::AgeBins => "age",
            Slicer::Gender => "gender",
        };
        for g in &report.groups {
            let m = &g.class3_metrics;
            out.push_str(&format!(
                "{slicer},{},{},{},{},{},{},{},{},{},{},{}\n",
                g.group,
                g.n,
                fmt_opt(g.per_class_auc[0]),
                fmt_opt(g.per_class_auc[1]),
                fmt_opt(g.per_class_auc[2]),
                fmt_opt(g.micro_auc),
                fmt_opt(m.sensitivity),
                fmt_opt(m.specificity),
                fmt_opt(m.ppv),
                fmt_opt(m.npv),
                report.excluded,
            ));
        }
    }
    out
}

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 480.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 170.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 50.0;

fn path_for(points: &[RocPoint]) -> String {
    let plot_w = SVG_W - MARGIN_L - MARGIN_R;
    let plot_h = SVG_H - MARGIN_T - MARGIN_B;
    let mut d = String::new();
    for (i, p) in points.iter().enumerate() {
        let x = MARGIN_L + p.fpr * plot_w;
        let y = MARGIN_T + (1.0 - p.tpr) * plot_h;
        d.push_str(if i == 0 { "M" } else { " L" });
        d.push_str(&format!("{x:.2},{y:.2}"));
    }
    d
}

/// Render the one-vs-all curves plus the micro and macro averages as a
/// standalone SVG document with exactly five curve paths.
pub fn render_roc_svg(result: &ModelEvalResult) -> String {
    let plot_w = SVG_W - MARGIN_L - MARGIN_R;
    let plot_h = SVG_H - MARGIN_T - MARGIN_B;
    let colors = ["#1f77b4", "#2ca02c", "#d62728"];

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_W}\" height=\"{SVG_H}\" viewBox=\"0 0 {SVG_W} {SVG_H}\">\n"
    ));
    svg.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{SVG_W}\" height=\"{SVG_H}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"18\" font-family=\"sans-serif\" font-size=\"14\">ROC curves ({})</text>\n",
        MARGIN_L,
        result.name
    ));

    // Axes and ticks.
    svg.push_str(&format!(
        "  <rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{plot_w}\" height=\"{plot_h}\" fill=\"none\" stroke=\"#333333\"/>\n"
    ));
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let x = MARGIN_L + f * plot_w;
        let y = MARGIN_T + (1.0 - f) * plot_h;
        svg.push_str(&format!(
            "  <text x=\"{x:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">{f:.2}</text>\n",
            SVG_H - MARGIN_B + 16.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">{f:.2}</text>\n",
            MARGIN_L - 6.0,
            y + 3.0
        ));
    }
    svg.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">false positive rate</text>\n",
        MARGIN_L + plot_w / 2.0,
        SVG_H - 12.0
    ));
    svg.push_str(&format!(
        "  <text x=\"16\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 {:.1})\" text-anchor=\"middle\">true positive rate</text>\n",
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0
    ));

    // Chance diagonal.
    svg.push_str(&format!(
        "  <line x1=\"{MARGIN_L}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{MARGIN_T}\" stroke=\"#bbbbbb\" stroke-dasharray=\"3,3\"/>\n",
        MARGIN_T + plot_h,
        MARGIN_L + plot_w
    ));

    let mut legend_y = MARGIN_T + 14.0;
    let legend_x = SVG_W - MARGIN_R + 12.0;
    for (i, (class, points, auc)) in result.per_class.iter().enumerate() {
        svg.push_str(&format!(
            "  <path class=\"curve-{}\" d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
            class.name(),
            path_for(points),
            colors[i % colors.len()]
        ));
        svg.push_str(&format!(
            "  <text x=\"{legend_x:.1}\" y=\"{legend_y:.1}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{}\">{} (AUC {auc:.3})</text>\n",
            colors[i % colors.len()],
            class.name()
        ));
        legend_y += 16.0;
    }
    svg.push_str(&format!(
        "  <path class=\"curve-micro\" d=\"{}\" fill=\"none\" stroke=\"#9467bd\" stroke-width=\"1.5\" stroke-dasharray=\"6,3\"/>\n",
        path_for(&result.micro_curve)
    ));
    svg.push_str(&format!(
        "  <text x=\"{legend_x:.1}\" y=\"{legend_y:.1}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#9467bd\">micro avg (AUC {:.3})</text>\n",
        result.micro_auc
    ));
    legend_y += 16.0;
    svg.push_str(&format!(
        "  <path class=\"curve-macro\" d=\"{}\" fill=\"none\" stroke=\"#8c564b\" stroke-width=\"1.5\" stroke-dasharray=\"2,3\"/>\n",
        path_for(&result.macro_curve)
    ));
    svg.push_str(&format!(
        "  <text x=\"{legend_x:.1}\" y=\"{legend_y:.1}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#8c564b\">macro avg (AUC {:.3})</text>\n",
        result.macro_auc
    ));

    svg.push_str("</svg>\n");
    svg
}

/// Write the full report bundle into `out_dir`; returns the paths written.
pub fn emit_report(out_dir: impl AsRef<Path>, inputs: &ReportInputs) -> Result<Vec<PathBuf>> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();

    let mut all_results = vec![inputs.primary];
    if let Some(ablation) = inputs.ablation {
        all_results.push(ablation);
    }

    for r in &all_results {
        let path = out_dir.join(format!("metrics_{}.csv", r.name));
        write_file(&path, &metrics_csv(r))?;
        written.push(path);
    }

    let path = out_dir.join("confusion.csv");
    write_file(&path, &confusion_csv(&all_results))?;
    written.push(path);

    let path = out_dir.join("slices.csv");
    write_file(&path, &slices_csv(inputs.slices))?;
    written.push(path);

    let path = out_dir.join("roc.svg");
    write_file(&path, &render_roc_svg(inputs.primary))?;
    written.push(path);

    let path = out_dir.join("summary.json");
    let json = serde_json::to_string_pretty(&inputs.summary)
        .map_err(|e| Error::Config(format!("summary serialization: {e}")))?;
    write_file(&path, &(json + "\n"))?;
    written.push(path);

    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{
        macro_average_auc, macro_average_roc, micro_average_roc, roc_auc_one_vs_all,
        threshold_metrics, ScoredExample,
    };
    use crate::rng::Rng;

    fn scored_set() -> Vec<ScoredExample> {
        let mut rng = Rng::new(40);
        (0..30)
            .map(|i| {
                let label = ClassLabel::from_index(i % 3).unwrap();
                let mut probs = [rng.uniform() * 0.3; 3];
                probs[label.index()] += 0.5;
                let sum: f64 = probs.iter().sum();
                probs.iter_mut().for_each(|p| *p /= sum);
                ScoredExample {
                    record_id: format!("r{i}"),
                    true_label: label,
                    probs,
                    age: Some(20 + i as u32),
                    gender: None,
                }
            })
            .collect()
    }

    fn result_for(examples: &[ScoredExample]) -> ModelEvalResult {
        let per_class = ClassLabel::ALL
            .iter()
            .map(|&c| {
                let (pts, auc) = roc_auc_one_vs_all(examples, c).unwrap();
                (c, pts, auc)
            })
            .collect();
        let (micro_curve, micro_auc) = micro_average_roc(examples).unwrap();
        ModelEvalResult {
            name: "multi_branch".into(),
            per_class,
            micro_curve,
            micro_auc,
            macro_curve: macro_average_roc(examples).unwrap(),
            macro_auc: macro_average_auc(examples).unwrap(),
            confusion: threshold_metrics(examples, ClassLabel::CovidPositive, 0.9),
            threshold: 0.9,
            per_chunk_micro_auc: None,
        }
    }

    #[test]
    fn svg_has_five_curve_paths() {
        let examples = scored_set();
        let svg = render_roc_svg(&result_for(&examples));
        assert_eq!(svg.matches("<path class=\"curve-").count(), 5);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn metrics_csv_has_classes_plus_two_averages() {
        let examples = scored_set();
        let csv = metrics_csv(&result_for(&examples));
        let rows: Vec<&str> = csv.trim_end().lines().collect();
        assert_eq!(rows.len(), 1 + 3 + 2);
        assert!(rows[4].starts_with("micro_average,"));
        assert!(rows[5].starts_with("macro_average,"));
    }

    #[test]
    fn report_bundle_is_byte_deterministic() {
        let examples = scored_set();
        let result = result_for(&examples);
        let slices = vec![crate::eval::slice_analysis(
            &examples,
            Slicer::AgeBins,
            0.9,
        )];
        let inputs = ReportInputs {
            primary: &result,
            ablation: None,
            slices: &slices,
            summary: serde_json::json!({"seed": 7, "config_digest": "abc"}),
        };
        let dir_a = std::env::temp_dir().join("coughscreen_report_a");
        let dir_b = std::env::temp_dir().join("coughscreen_report_b");
        let files_a = emit_report(&dir_a, &inputs).unwrap();
        let files_b = emit_report(&dir_b, &inputs).unwrap();
        for (a, b) in files_a.iter().zip(&files_b) {
            assert_eq!(
                std::fs::read(a).unwrap(),
                std::fs::read(b).unwrap(),
                "{a:?} differs"
            );
        }
    }
}
