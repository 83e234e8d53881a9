//! Plain-text tables and structured (JSON) report files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use bushing_core::diagnosis::{ComparisonRow, Diagnosis, MetricsReport};
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::experiment::{BaselineReport, BatchCompareReport, SessionReport};
use crate::snapshot::{Snapshot, SnapshotModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Structured,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Text => "txt",
            Format::Structured => "json",
        }
    }
}

pub fn structured<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.digits$}"))
}

pub fn session_text(r: &SessionReport) -> String {
    let mut s = String::new();
    let n = r.accuracy_matrix.len();
    let _ = writeln!(s, "experiment {} (seed {})", r.experiment, r.seed);
    let _ = writeln!(
        s,
        "databases: {:?}, validation samples: {}",
        r.database_sizes, r.validation_size
    );
    let _ = writeln!(s, "\naccuracy (%) by training session");
    let _ = write!(s, "{:<12}", "database");
    for k in 0..n {
        let _ = write!(s, "{:>8}", format!("S{}", k + 1));
    }
    s.push('\n');
    for d in 0..n {
        let _ = write!(s, "{:<12}", format!("DB{}", d + 1));
        for row in &r.accuracy_matrix {
            match row.get(d) {
                Some(v) => {
                    let _ = write!(s, "{v:>8.1}");
                }
                None => {
                    let _ = write!(s, "{:>8}", "");
                }
            }
        }
        s.push('\n');
    }
    let _ = write!(s, "{:<12}", "validation");
    for v in &r.validation_accuracy {
        let _ = write!(s, "{v:>8.1}");
    }
    s.push('\n');

    let _ = writeln!(s, "\nconfidence on correctly classified validation samples");
    let _ = write!(s, "{:<18}", "class");
    for k in 0..n {
        let _ = write!(s, "{:>8}", format!("S{}", k + 1));
    }
    s.push('\n');
    for (c, name) in r.classes.iter().enumerate() {
        let _ = write!(s, "{name:<18}");
        for row in &r.class_confidence {
            let _ = write!(s, "{:>8}", opt(row[c], 3));
        }
        s.push('\n');
    }
    let _ = write!(s, "{:<18}", "all");
    for v in &r.mean_correct_confidence {
        let _ = write!(s, "{v:>8.3}");
    }
    s.push('\n');

    let _ = writeln!(s, "\nvalidation recall (%) per class");
    for (c, name) in r.classes.iter().enumerate() {
        let _ = write!(s, "{name:<18}");
        for row in &r.class_recall {
            let _ = write!(s, "{:>8}", opt(row[c], 1));
        }
        s.push('\n');
    }

    let _ = writeln!(
        s,
        "\nsession  hypotheses  discarded  weak acc (%)  composite acc (%)  train (s)"
    );
    for (k, b) in r.boosting.iter().enumerate() {
        let _ = writeln!(
            s,
            "{:<9}{:>10}{:>11}{:>14.1}{:>19.1}{:>11.3}",
            format!("S{}", k + 1),
            b.hypotheses,
            b.discarded,
            b.mean_weak_accuracy,
            b.composite_accuracy,
            r.train_seconds[k]
        );
    }
    s
}

/// Column headers of the comparison table.
pub const COMPARISON_COLUMNS: [&str; 5] = [
    "Accuracy",
    "Specificity",
    "Sensitivity",
    "Training Time(s)",
    "Classification Time(s)",
];

type Cell = Box<dyn Fn(&MetricsReport) -> String>;

fn comparison_table(title: &str, rows: &[ComparisonRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{title}");
    let _ = write!(s, "{:<24}", "");
    for r in rows {
        let _ = write!(s, "{:>12}", r.classifier);
    }
    s.push('\n');
    let cells: [Cell; 5] = [
        Box::new(|m| format!("{:.3}", m.accuracy)),
        Box::new(|m| opt(m.specificity, 3)),
        Box::new(|m| opt(m.sensitivity, 3)),
        Box::new(|m| format!("{:.3}", m.train_seconds)),
        Box::new(|m| format!("{:.3}", m.classify_seconds)),
    ];
    for (name, cell) in COMPARISON_COLUMNS.iter().zip(&cells) {
        let _ = write!(s, "{name:<24}");
        for r in rows {
            let _ = write!(s, "{:>12}", cell(&r.metrics));
        }
        s.push('\n');
    }
    let _ = write!(s, "{:<24}", "Selected");
    for r in rows {
        let _ = write!(s, "  {}", r.selection);
    }
    s.push('\n');
    s
}

pub fn batch_compare_text(r: &BatchCompareReport) -> String {
    let mut s = format!("batch comparison (seed {})\n\n", r.seed);
    s += &comparison_table("level 1: Normal vs Faulty (sensitivity: Faulty)", &r.level1);
    s.push('\n');
    s += &comparison_table(
        "level 2: fault type (sensitivity: UnknownSource)",
        &r.level2,
    );
    s
}

fn metrics_text(name: &str, m: &MetricsReport, classes: &[String]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{name}: accuracy {:.3}, train {:.3} s, classify {:.3} s",
        m.accuracy, m.train_seconds, m.classify_seconds
    );
    for (c, r) in m.recall().into_iter().enumerate() {
        let _ = writeln!(s, "  recall {:<18}{}", classes[c], opt(r, 3));
    }
    s
}

pub fn baseline_text(r: &BaselineReport) -> String {
    let mut s = format!("batch baseline (seed {})\n", r.seed);
    s += &metrics_text("pooled (all databases)", &r.pooled, &r.classes);
    s += &metrics_text(
        &format!("starved (databases {:?})", r.starved_databases),
        &r.starved,
        &r.classes,
    );
    s
}

pub fn diagnosis_text(id: &str, d: &Diagnosis) -> String {
    let mut s = format!("{id}: {}", d.level1);
    let _ = write!(
        s,
        " (confidence {:.3})",
        d.level1_confidence[d.level1.index()]
    );
    if let (Some(l2), Some(g)) = (d.level2, &d.level2_confidence) {
        let _ = write!(s, ", {l2} (confidence {:.3})", g[l2.index()]);
    }
    s.push('\n');
    s
}

/// Structured summary of a snapshot.
#[derive(Debug, Serialize)]
pub struct ModelSummary {
    pub format: String,
    pub version: u32,
    pub level: crate::snapshot::Level,
    pub kind: String,
    pub tdcg: bushing_core::features::TdcgVariant,
    pub feature_order: Vec<String>,
    pub classes: usize,
    /// Hypotheses per session; empty for single models.
    pub session_hypotheses: Vec<usize>,
    pub known_classes: Vec<usize>,
}

pub fn model_summary(s: &Snapshot) -> ModelSummary {
    use bushing_core::classifier::Classify;
    let (session_hypotheses, known_classes) = match &s.model {
        SnapshotModel::Single { .. } => (Vec::new(), (0..s.n_classes()).collect()),
        SnapshotModel::Ensemble { ensemble, .. } => (
            ensemble.sessions.iter().map(Vec::len).collect(),
            ensemble.known_classes(),
        ),
    };
    ModelSummary {
        format: s.format.clone(),
        version: s.version,
        level: s.level,
        kind: s.kind().into(),
        tdcg: s.normalizer.variant,
        feature_order: s.feature_order.clone(),
        classes: s.n_classes(),
        session_hypotheses,
        known_classes,
    }
}

pub fn model_text(m: &ModelSummary) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "format {} v{}", m.format, m.version);
    let _ = writeln!(
        s,
        "level {:?}, model {}, {} classes",
        m.level, m.kind, m.classes
    );
    let _ = writeln!(s, "tdcg {:?}", m.tdcg);
    let _ = writeln!(s, "features {}", m.feature_order.join(","));
    if !m.session_hypotheses.is_empty() {
        let _ = writeln!(
            s,
            "sessions {} (hypotheses {:?})",
            m.session_hypotheses.len(),
            m.session_hypotheses
        );
        let _ = writeln!(s, "classes with votes {:?}", m.known_classes);
    }
    s
}

fn write(dir: &Path, stem: &str, format: Format, text: String, json: String) -> Result<()> {
    let path = dir.join(format!("{stem}.{}", format.extension()));
    let body = match format {
        Format::Text => text,
        Format::Structured => json,
    };
    fs::write(&path, body).map_err(|e| CliError::io(&path, e))
}

pub fn write_session_report(dir: &Path, r: &SessionReport, format: Format) -> Result<()> {
    write(dir, "report", format, session_text(r), structured(r))
}

pub fn write_batch_compare(dir: &Path, r: &BatchCompareReport, format: Format) -> Result<()> {
    write(dir, "report", format, batch_compare_text(r), structured(r))
}

pub fn write_baseline(dir: &Path, r: &BaselineReport, format: Format) -> Result<()> {
    write(dir, "report", format, baseline_text(r), structured(r))
}
