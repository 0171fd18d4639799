//! Precision, recall and F1 of system alignments, per test case and per track.
//!
//! Cells compare by key; confidences are ignored.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::alignment::{Alignment, AlignmentError};
use crate::sampling::{Judgement, PartialReference};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn new(tp: usize, fp: usize, fn_: usize) -> Self {
        ConfusionCounts { tp, fp, fn_ }
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = ConfusionCounts;

    fn add(self, o: ConfusionCounts) -> ConfusionCounts {
        ConfusionCounts::new(self.tp + o.tp, self.fp + o.fp, self.fn_ + o.fn_)
    }
}

impl std::iter::Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = ConfusionCounts>>(iter: I) -> Self {
        iter.fold(ConfusionCounts::default(), |a, b| a + b)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    /// Metrics from precision and recall, with F1 their harmonic mean (0 when both are 0).
    pub fn from_pr(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Metrics {
            precision,
            recall,
            f1,
        }
    }
}

/// Counts against a complete reference.
pub fn confusion(system: &Alignment, reference: &Alignment) -> ConfusionCounts {
    let tp = system.keys().filter(|k| reference.contains(k)).count();
    ConfusionCounts::new(tp, system.len() - tp, reference.len() - tp)
}

/// Counts against a sampled (incomplete) reference: a system cell is a true
/// positive if sampled, a false positive if exactly one of its endpoints
/// occurs in the sample, and is ignored otherwise. Sampled cells missing
/// from the system are false negatives.
pub fn confusion_partial(system: &Alignment, reference: &Alignment) -> ConfusionCounts {
    let judge = PartialReference::new(reference);
    let mut c = ConfusionCounts::default();
    for k in system.keys() {
        match judge.judge(k) {
            Judgement::Correct => c.tp += 1,
            Judgement::Wrong => c.fp += 1,
            Judgement::Undecidable => {}
        }
    }
    c.fn_ = reference.len() - c.tp;
    c
}

pub fn metrics(c: ConfusionCounts) -> Metrics {
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    Metrics::from_pr(ratio(c.tp, c.tp + c.fp), ratio(c.tp, c.tp + c.fn_))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("cannot aggregate an empty list of results")]
    Empty,
}

/// Sums the counts, then computes metrics once.
pub fn micro_average(results: &[ConfusionCounts]) -> Result<Metrics, EvalError> {
    if results.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(metrics(results.iter().copied().sum()))
}

/// Unweighted mean of per-case precision, recall and F1 (F1 is averaged, not recomputed).
pub fn macro_average(results: &[Metrics]) -> Result<Metrics, EvalError> {
    if results.is_empty() {
        return Err(EvalError::Empty);
    }
    let n = results.len() as f64;
    Ok(Metrics {
        precision: results.iter().map(|m| m.precision).sum::<f64>() / n,
        recall: results.iter().map(|m| m.recall).sum::<f64>() / n,
        f1: results.iter().map(|m| m.f1).sum::<f64>() / n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    #[default]
    Micro,
    Macro,
}

impl std::str::FromStr for Aggregation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "micro" => Ok(Aggregation::Micro),
            "macro" => Ok(Aggregation::Macro),
            other => Err(format!(
                "unknown aggregation {other:?} (expected micro or macro)"
            )),
        }
    }
}

impl std::fmt::Display for Aggregation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Aggregation::Micro => "MICRO",
            Aggregation::Macro => "MACRO",
        })
    }
}

pub const SOURCE_FILE: &str = "source.ttl";
pub const TARGET_FILE: &str = "target.ttl";
pub const REFERENCE_FILE: &str = "reference.xml";

#[derive(Debug, Clone, PartialEq)]
pub struct TestCase {
    pub name: String,
    pub source: PathBuf,
    pub target: PathBuf,
    pub reference: PathBuf,
}

impl TestCase {
    pub fn load_reference(&self) -> Result<Alignment, AlignmentError> {
        Alignment::load(&self.reference)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Track {
    pub name: String,
    /// Sorted by name.
    pub cases: Vec<TestCase>,
}

#[derive(Debug, thiserror::Error)]
pub enum TestCaseError {
    #[error("missing {0}")]
    MissingFile(PathBuf),
    #[error("reference: {0}")]
    Reference(#[from] AlignmentError),
}

/// A track plus the test cases that failed validation.
#[derive(Debug, Default)]
pub struct TrackLoad {
    pub track: Track,
    pub errors: Vec<(String, TestCaseError)>,
}

/// Discovers `<dir>/<case>/{source.ttl,target.ttl,reference.xml}`.
///
/// Every subdirectory is a test case; invalid ones are reported in
/// [`TrackLoad::errors`] rather than failing the whole track.
pub fn load_track(dir: &Path) -> std::io::Result<TrackLoad> {
    let mut names = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        if entry.file_type()?.is_dir() {
            names.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    names.sort();
    let mut out = TrackLoad {
        track: Track {
            name: dir
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            cases: Vec::new(),
        },
        errors: Vec::new(),
    };
    for name in names {
        let case_dir = dir.join(&name);
        let case = TestCase {
            source: case_dir.join(SOURCE_FILE),
            target: case_dir.join(TARGET_FILE),
            reference: case_dir.join(REFERENCE_FILE),
            name: name.clone(),
        };
        let missing = [&case.source, &case.target, &case.reference]
            .into_iter()
            .find(|p| !p.is_file())
            .cloned();
        let check = match missing {
            Some(p) => Err(TestCaseError::MissingFile(p)),
            None => case.load_reference().map(drop).map_err(TestCaseError::from),
        };
        match check {
            Ok(()) => out.track.cases.push(case),
            Err(e) => out.errors.push((name, e)),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseResult {
    pub name: String,
    pub counts: ConfusionCounts,
    pub metrics: Metrics,
}

impl CaseResult {
    pub fn new(name: impl Into<String>, counts: ConfusionCounts) -> Self {
        CaseResult {
            name: name.into(),
            counts,
            metrics: metrics(counts),
        }
    }

    /// A test case without a system alignment: every reference cell is missed.
    pub fn missing(name: impl Into<String>, reference: &Alignment) -> Self {
        Self::new(name, ConfusionCounts::new(0, 0, reference.len()))
    }
}

/// Per-case rows plus the aggregate row.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackReport {
    pub cases: Vec<CaseResult>,
    pub aggregation: Aggregation,
    pub total: Metrics,
    pub total_counts: ConfusionCounts,
}

impl TrackReport {
    pub fn new(mut cases: Vec<CaseResult>, aggregation: Aggregation) -> Result<Self, EvalError> {
        cases.sort_by(|a, b| a.name.cmp(&b.name));
        let counts: Vec<ConfusionCounts> = cases.iter().map(|c| c.counts).collect();
        let total = match aggregation {
            Aggregation::Micro => micro_average(&counts)?,
            Aggregation::Macro => {
                macro_average(&cases.iter().map(|c| c.metrics).collect::<Vec<_>>())?
            }
        };
        Ok(TrackReport {
            cases,
            aggregation,
            total,
            total_counts: counts.into_iter().sum(),
        })
    }

    /// `testcase,precision,recall,f1,tp,fp,fn`, one row per case, then the aggregate row.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["testcase", "precision", "recall", "f1", "tp", "fp", "fn"])?;
        let row = |name: &str, m: &Metrics, c: &ConfusionCounts| {
            [
                name.to_string(),
                format!("{:.6}", m.precision),
                format!("{:.6}", m.recall),
                format!("{:.6}", m.f1),
                c.tp.to_string(),
                c.fp.to_string(),
                c.fn_.to_string(),
            ]
        };
        for c in &self.cases {
            w.write_record(row(&c.name, &c.metrics, &c.counts))?;
        }
        w.write_record(row(
            &self.aggregation.to_string(),
            &self.total,
            &self.total_counts,
        ))?;
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

/// Evaluates system alignments keyed by test case name; cases without one count as all-missed.
pub fn evaluate_cases(
    references: &BTreeMap<String, Alignment>,
    systems: &BTreeMap<String, Alignment>,
) -> Vec<CaseResult> {
    references
        .iter()
        .map(|(name, reference)| match systems.get(name) {
            Some(system) => CaseResult::new(name.clone(), confusion(system, reference)),
            None => CaseResult::missing(name.clone(), reference),
        })
        .collect()
}
