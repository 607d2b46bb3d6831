use std::fmt::Write as _;

use super::runner::ModelEvaluation;

/// Canonical row order for the comparison table.
const MODEL_ORDER: [&str; 6] = ["DNN", "BD", "JI", "PC-B", "PC-J", "IC"];

/// Merged cross-validation results for a set of models.
#[derive(Clone, Debug)]
pub struct EvaluationReport {
    pub k: usize,
    pub sections: Vec<ModelEvaluation>,
    /// Models requested but absent from the sections.
    pub missing: Vec<String>,
}

/// Merges per-model evaluations into one report, ordering rows canonically
/// (DNN first, then the baselines, then anything else by name). Models in
/// `expected` but absent from `sections` are listed as missing.
pub fn compare_models(
    sections: Vec<ModelEvaluation>,
    k: usize,
    expected: &[String],
) -> EvaluationReport {
    let mut ordered = sections;
    ordered.sort_by_key(|s| {
        (
            MODEL_ORDER.iter().position(|&m| m == s.model).unwrap_or(MODEL_ORDER.len()),
            s.model.clone(),
        )
    });
    let missing: Vec<String> = expected
        .iter()
        .filter(|name| !ordered.iter().any(|s| &s.model == *name))
        .cloned()
        .collect();
    EvaluationReport { k, sections: ordered, missing }
}

fn percent(v: f64) -> String {
    format!("{:.1}%", 100.0 * v)
}

impl EvaluationReport {
    /// Aligned plain-text table: per-fold means with standard deviations,
    /// pooled-confusion metrics, and per-model threshold information.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "model comparison ({}-fold cross-validation)", self.k);
        let _ = writeln!(out);
        let _ = writeln!(out, "mean over folds (± std dev)");
        let _ = writeln!(
            out,
            "{:<6} {:>16} {:>16} {:>16}  {}",
            "model", "accuracy", "tpr", "fpr", "threshold rule"
        );
        for section in &self.sections {
            if let (Some(mean), Some(std)) = (section.mean(), section.std_dev()) {
                let _ = writeln!(
                    out,
                    "{:<6} {:>16} {:>16} {:>16}  {}",
                    section.model,
                    format!("{} ± {}", percent(mean[0]), percent(std[0])),
                    format!("{} ± {}", percent(mean[1]), percent(std[1])),
                    format!("{} ± {}", percent(mean[2]), percent(std[2])),
                    section.rule,
                );
            } else {
                let reason = section.failure.as_deref().unwrap_or("no folds");
                let _ = writeln!(out, "{:<6} failed: {}", section.model, reason);
            }
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "pooled confusion over all folds");
        let _ = writeln!(
            out,
            "{:<6} {:>9} {:>9} {:>9} {:>8} {:>8} {:>8} {:>8}",
            "model", "accuracy", "tpr", "fpr", "tp", "fp", "tn", "fn"
        );
        for section in &self.sections {
            if let Some((cm, m)) = section.pooled() {
                let _ = writeln!(
                    out,
                    "{:<6} {:>9} {:>9} {:>9} {:>8} {:>8} {:>8} {:>8}",
                    section.model,
                    percent(m.accuracy),
                    percent(m.tpr),
                    percent(m.fpr),
                    cm.true_positives,
                    cm.false_positives,
                    cm.true_negatives,
                    cm.false_negatives,
                );
            }
        }
        for name in &self.missing {
            let _ = writeln!(out);
            let _ = writeln!(out, "note: model {name} was requested but produced no results");
        }
        out
    }

    /// Machine-readable block: `model<TAB>metric<TAB>fold<TAB>value` lines.
    /// Fold is an index, `mean`, `std`, or `pooled`.
    pub fn render_machine(&self) -> String {
        let mut out = String::new();
        for section in &self.sections {
            if let Some(reason) = &section.failure {
                let _ = writeln!(out, "{}\tfailure\t-\t{}", section.model, reason);
                continue;
            }
            for fold in &section.folds {
                let f = fold.fold;
                let _ = writeln!(out, "{}\taccuracy\t{f}\t{}", section.model, fold.metrics.accuracy);
                let _ = writeln!(out, "{}\ttpr\t{f}\t{}", section.model, fold.metrics.tpr);
                let _ = writeln!(out, "{}\tfpr\t{f}\t{}", section.model, fold.metrics.fpr);
                let _ = writeln!(out, "{}\tthreshold\t{f}\t{}", section.model, fold.threshold);
            }
            if let (Some(mean), Some(std)) = (section.mean(), section.std_dev()) {
                for (i, metric) in ["accuracy", "tpr", "fpr"].iter().enumerate() {
                    let _ = writeln!(out, "{}\t{metric}\tmean\t{}", section.model, mean[i]);
                    let _ = writeln!(out, "{}\t{metric}\tstd\t{}", section.model, std[i]);
                }
            }
            if let Some((_, pooled)) = section.pooled() {
                let _ = writeln!(out, "{}\taccuracy\tpooled\t{}", section.model, pooled.accuracy);
                let _ = writeln!(out, "{}\ttpr\tpooled\t{}", section.model, pooled.tpr);
                let _ = writeln!(out, "{}\tfpr\tpooled\t{}", section.model, pooled.fpr);
            }
        }
        for name in &self.missing {
            let _ = writeln!(out, "{name}\tmissing\t-\t1");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::metrics::{metrics, ConfusionMatrix};
    use crate::eval::runner::{FoldOutcome, ThresholdRule};

    fn fake_section(model: &str, accuracy_numerator: u64) -> ModelEvaluation {
        let cm = ConfusionMatrix {
            true_positives: accuracy_numerator,
            false_positives: 10 - accuracy_numerator,
            true_negatives: accuracy_numerator,
            false_negatives: 10 - accuracy_numerator,
        };
        ModelEvaluation {
            model: model.to_string(),
            rule: ThresholdRule::Youden,
            folds: vec![FoldOutcome { fold: 0, threshold: 0.5, confusion: cm, metrics: metrics(&cm) }],
            failure: None,
        }
    }

    #[test]
    fn rows_follow_canonical_order() {
        let report = compare_models(
            vec![fake_section("IC", 7), fake_section("DNN", 9), fake_section("BD", 8)],
            10,
            &["DNN".into(), "BD".into(), "IC".into()],
        );
        let names: Vec<&str> = report.sections.iter().map(|s| s.model.as_str()).collect();
        assert_eq!(names, vec!["DNN", "BD", "IC"]);
        assert!(report.missing.is_empty());
        let text = report.render_text();
        assert!(text.contains("DNN"));
        assert!(text.contains("90.0%"));
    }

    #[test]
    fn six_model_report_has_six_rows() {
        let sections: Vec<ModelEvaluation> =
            ["DNN", "BD", "JI", "PC-B", "PC-J", "IC"].iter().map(|m| fake_section(m, 8)).collect();
        let expected: Vec<String> = sections.iter().map(|s| s.model.clone()).collect();
        let report = compare_models(sections, 10, &expected);
        let text = report.render_text();
        let table_rows = text
            .lines()
            .filter(|l| {
                ["DNN", "BD", "JI", "PC-B", "PC-J", "IC"]
                    .iter()
                    .any(|m| l.starts_with(&format!("{m} ")))
            })
            .count();
        assert_eq!(table_rows, 12); // six in the mean table, six pooled
    }

    #[test]
    fn single_model_report() {
        let report = compare_models(vec![fake_section("JI", 6)], 2, &["JI".into()]);
        assert_eq!(report.sections.len(), 1);
        assert!(report.missing.is_empty());
    }

    #[test]
    fn missing_model_is_noticed() {
        let report = compare_models(vec![fake_section("BD", 8)], 2, &["BD".into(), "IC".into()]);
        assert_eq!(report.missing, vec!["IC".to_string()]);
        assert!(report.render_text().contains("model IC was requested"));
        assert!(report.render_machine().contains("IC\tmissing"));
    }

    #[test]
    fn machine_block_is_tab_separated() {
        let report = compare_models(vec![fake_section("BD", 8)], 2, &["BD".into()]);
        for line in report.render_machine().lines() {
            assert_eq!(line.split('\t').count(), 4, "line {line:?}");
        }
    }
}
