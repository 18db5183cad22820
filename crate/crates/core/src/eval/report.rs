//! Cross-validation reports and run comparison tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::corpus::Lang;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Tally {
    pub correct: usize,
    pub total: usize,
}

impl Tally {
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }

    pub fn add(&mut self, other: Tally) {
        self.correct += other.correct;
        self.total += other.total;
    }
}

#[derive(Debug, Clone)]
pub struct FoldResult {
    pub fold: usize,
    pub overall: Tally,
    pub per_language: BTreeMap<Lang, Tally>,
    /// Wall-clock seconds; ignored by equality.
    pub seconds: f64,
}

impl FoldResult {
    pub fn accuracy(&self) -> f64 {
        self.overall.accuracy()
    }
}

impl PartialEq for FoldResult {
    fn eq(&self, other: &Self) -> bool {
        self.fold == other.fold && self.overall == other.overall && self.per_language == other.per_language
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CVReport {
    pub name: String,
    pub kind: String,
    pub config_fingerprint: String,
    pub folds: Vec<FoldResult>,
    /// Arithmetic mean of the per-fold accuracies.
    pub mean_accuracy: f64,
    pub per_language: BTreeMap<Lang, Tally>,
}

impl CVReport {
    pub fn new(name: String, kind: String, config_fingerprint: String, folds: Vec<FoldResult>) -> Self {
        let mean_accuracy = if folds.is_empty() {
            0.0
        } else {
            folds.iter().map(FoldResult::accuracy).sum::<f64>() / folds.len() as f64
        };
        let mut per_language: BTreeMap<Lang, Tally> = BTreeMap::new();
        for f in &folds {
            for (l, t) in &f.per_language {
                per_language.entry(l.clone()).or_default().add(*t);
            }
        }
        CVReport {
            name,
            kind,
            config_fingerprint,
            folds,
            mean_accuracy,
            per_language,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{} ({}, config {})", self.name, self.kind, self.config_fingerprint).unwrap();
        writeln!(out, "{:<6} {:>8} {:>8} {:>9}", "fold", "correct", "total", "accuracy").unwrap();
        for f in &self.folds {
            writeln!(
                out,
                "{:<6} {:>8} {:>8} {:>9.4}",
                f.fold, f.overall.correct, f.overall.total, f.accuracy()
            )
            .unwrap();
        }
        writeln!(out, "mean accuracy {:.4}", self.mean_accuracy).unwrap();
        for (l, t) in &self.per_language {
            writeln!(out, "  {l:<4} {:>6}/{:<6} {:.4}", t.correct, t.total, t.accuracy()).unwrap();
        }
        out
    }

    /// One row per fold plus a `mean` row; per-language columns follow.
    pub fn to_csv(&self) -> String {
        let langs: Vec<&Lang> = self.per_language.keys().collect();
        let mut out = String::from("fold,correct,total,accuracy,seconds");
        for l in &langs {
            write!(out, ",{l}_correct,{l}_total").unwrap();
        }
        out.push('\n');
        for f in &self.folds {
            write!(
                out,
                "{},{},{},{},{:.3}",
                f.fold,
                f.overall.correct,
                f.overall.total,
                f.accuracy(),
                f.seconds
            )
            .unwrap();
            for l in &langs {
                let t = f.per_language.get(*l).copied().unwrap_or_default();
                write!(out, ",{},{}", t.correct, t.total).unwrap();
            }
            out.push('\n');
        }
        write!(out, "mean,,,{},", self.mean_accuracy).unwrap();
        for l in &langs {
            let t = self.per_language[*l];
            write!(out, ",{},{}", t.correct, t.total).unwrap();
        }
        out.push('\n');
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub name: String,
    pub kind: String,
    pub mean_accuracy: f64,
    /// Difference from the baseline row; absent when there is one report.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub baseline: String,
    pub rows: Vec<ComparisonRow>,
}

/// Rows sorted by name; deltas are taken against `baseline` (a report
/// name), or against the first row when none is named.
pub fn compare_runs(reports: &[CVReport], baseline: Option<&str>) -> Result<Comparison> {
    if reports.is_empty() {
        return Err(Error::Argument("nothing to compare".into()));
    }
    let mut sorted: Vec<&CVReport> = reports.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    let base = match baseline {
        Some(name) => sorted
            .iter()
            .find(|r| r.name == name)
            .ok_or_else(|| Error::Argument(format!("no report named {name:?}")))?,
        None => sorted[0],
    };
    let with_delta = reports.len() > 1;
    let rows = sorted
        .iter()
        .map(|r| ComparisonRow {
            name: r.name.clone(),
            kind: r.kind.clone(),
            mean_accuracy: r.mean_accuracy,
            delta: with_delta.then_some(r.mean_accuracy - base.mean_accuracy),
        })
        .collect();
    Ok(Comparison {
        baseline: base.name.clone(),
        rows,
    })
}

impl Comparison {
    fn has_delta(&self) -> bool {
        self.rows.iter().any(|r| r.delta.is_some())
    }

    pub fn to_text(&self) -> String {
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(0).max(5);
        let mut out = format!("{:<width$}  {:<5}  {:>8}", "model", "kind", "accuracy");
        if self.has_delta() {
            out.push_str(&format!("  {:>7}", "delta"));
        }
        out.push('\n');
        for r in &self.rows {
            write!(out, "{:<width$}  {:<5}  {:>8.3}", r.name, r.kind, r.mean_accuracy).unwrap();
            if let Some(d) = r.delta {
                write!(out, "  {d:>+7.3}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(if self.has_delta() {
            "model,kind,accuracy,delta\n"
        } else {
            "model,kind,accuracy\n"
        });
        for r in &self.rows {
            write!(out, "{},{},{}", r.name, r.kind, r.mean_accuracy).unwrap();
            if let Some(d) = r.delta {
                write!(out, ",{d}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(name: &str, mean_correct: usize) -> CVReport {
        let fold = FoldResult {
            fold: 0,
            overall: Tally {
                correct: mean_correct,
                total: 1000,
            },
            per_language: BTreeMap::from([(
                Lang::new("en"),
                Tally {
                    correct: mean_correct,
                    total: 1000,
                },
            )]),
            seconds: 1.0,
        };
        CVReport::new(name.into(), "cnn".into(), "0".into(), vec![fold])
    }

    #[test]
    fn single_report_has_no_delta() {
        let c = compare_runs(&[report("a", 500)], None).unwrap();
        assert_eq!(c.rows[0].delta, None);
        assert_eq!(c.to_csv(), "model,kind,accuracy\na,cnn,0.5\n");
    }

    #[test]
    fn raw_versus_transformed_delta() {
        let c = compare_runs(&[report("transformed", 587), report("raw", 573)], Some("raw")).unwrap();
        assert_eq!(c.rows[0].name, "raw");
        let d = c.rows[1].delta.unwrap();
        assert!((d - 0.014).abs() < 1e-12);
        assert!(c.to_text().contains("+0.014"), "{}", c.to_text());
    }

    #[test]
    fn identical_reports_have_zero_delta() {
        let c = compare_runs(&[report("a", 600), report("b", 600)], None).unwrap();
        assert!(c.rows.iter().all(|r| r.delta == Some(0.0)));
    }

    #[test]
    fn equality_ignores_timing() {
        let a = report("a", 1);
        let mut b = a.clone();
        b.folds[0].seconds = 99.0;
        assert_eq!(a, b);
    }

    #[test]
    fn mean_of_folds() {
        let mk = |fold, correct| FoldResult {
            fold,
            overall: Tally { correct, total: 4 },
            per_language: BTreeMap::new(),
            seconds: 0.0,
        };
        let r = CVReport::new("r".into(), "nb".into(), "0".into(), vec![mk(0, 1), mk(1, 2), mk(2, 4)]);
        assert!((r.mean_accuracy - (0.25 + 0.5 + 1.0) / 3.0).abs() < 1e-12);
    }
}
