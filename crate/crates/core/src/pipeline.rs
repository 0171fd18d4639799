//! The four-stage matching pipeline: candidates, rescoring, threshold, one-to-one.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::alignment::{Alignment, AlignmentError, CellKey};
use crate::bridge::csv_io::TrainingRecord;
use crate::bridge::{
    build_pairs, LexicalScorer, PairScorer, RemoteScorer, ScoreError, ScorerEndpoint,
    SerializationMode,
};
use crate::eval::{confusion, metrics, CaseResult, Metrics, TestCase, Track};
use crate::filters::{
    find_best_threshold, max_weight_bipartite, threshold_cut, transformers_filter, FilterError,
    ThresholdSearchResult,
};
use crate::graph::{LoadError, Ontology};
use crate::matcher::high_recall_match;
use crate::sampling::{sample_reference, LabeledCorrespondence, SamplingConfig, SamplingError};
use crate::text::ExtractorKind;

#[derive(Debug, Clone, PartialEq)]
pub enum ScorerChoice {
    Lexical,
    Remote(ScorerEndpoint),
}

impl ScorerChoice {
    /// The remote variant is health-checked before use.
    pub fn build(&self) -> Result<Box<dyn PairScorer>, ScoreError> {
        Ok(match self {
            ScorerChoice::Lexical => Box::new(LexicalScorer),
            ScorerChoice::Remote(endpoint) => Box::new(RemoteScorer::connect(endpoint.clone())?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdChoice {
    Fixed(f64),
    /// Learn the threshold on a `fraction` sample of the reference.
    /// `incomplete` selects the sampled-reference counting rule.
    Search {
        fraction: f64,
        incomplete: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub extractor: ExtractorKind,
    pub mode: SerializationMode,
    pub scorer: ScorerChoice,
    pub threshold: ThresholdChoice,
    pub one_to_one: bool,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            extractor: ExtractorKind::default(),
            mode: SerializationMode::default(),
            scorer: ScorerChoice::Lexical,
            threshold: ThresholdChoice::Fixed(0.0),
            one_to_one: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Load,
    Match,
    Score,
    Threshold,
    OneToOne,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Load => "load",
            Stage::Match => "match",
            Stage::Score => "score",
            Stage::Threshold => "threshold",
            Stage::OneToOne => "one-to-one",
            Stage::Write => "write",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StageError {
    #[error(transparent)]
    Ontology(#[from] LoadError),
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, thiserror::Error)]
#[error("stage {stage}: {error}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub error: StageError,
}

impl PipelineError {
    pub fn new(stage: Stage, error: impl Into<StageError>) -> Self {
        PipelineError {
            stage,
            error: error.into(),
        }
    }
}

fn at<E: Into<StageError>>(stage: Stage) -> impl FnOnce(E) -> PipelineError {
    move |e| PipelineError::new(stage, e)
}

/// Stage sizes and the threshold decision of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub scorer: String,
    pub candidates: usize,
    pub unscored: usize,
    pub threshold: f64,
    /// Present when the threshold was learned.
    pub search: Option<ThresholdSearchResult>,
    pub sample_size: Option<usize>,
    pub post_threshold: usize,
    /// Present when one-to-one extraction ran.
    pub post_bipartite: Option<usize>,
}

impl RunReport {
    pub fn final_size(&self) -> usize {
        self.post_bipartite.unwrap_or(self.post_threshold)
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "candidates: {}", self.candidates)?;
        writeln!(f, "scorer: {} ({} unscored)", self.scorer, self.unscored)?;
        match (&self.search, self.sample_size) {
            (Some(s), Some(n)) => writeln!(
                f,
                "threshold: {} (searched on {} sampled reference cells, training F1 {:.4})",
                self.threshold, n, s.achieved_metric
            )?,
            _ => writeln!(f, "threshold: {}", self.threshold)?,
        }
        writeln!(f, "post-threshold: {}", self.post_threshold)?;
        match self.post_bipartite {
            Some(n) => writeln!(f, "post-bipartite: {n}"),
            None => writeln!(f, "post-bipartite: skipped"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub candidates: Alignment,
    pub scored: Alignment,
    pub alignment: Alignment,
    pub report: RunReport,
}

/// Runs all stages on loaded ontologies. A learned threshold needs `reference`.
pub fn run_pipeline(
    o1: &Ontology,
    o2: &Ontology,
    reference: Option<&Alignment>,
    config: &PipelineConfig,
    scorer: &dyn PairScorer,
) -> Result<PipelineRun, PipelineError> {
    let candidates = high_recall_match(o1, o2, config.extractor);
    let scored = transformers_filter(&candidates, o1, o2, config.extractor, config.mode, scorer)
        .map_err(at(Stage::Score))?;

    let (threshold, search, sample_size) = match config.threshold {
        ThresholdChoice::Fixed(t) => {
            if !(0.0..=1.0).contains(&t) {
                return Err(PipelineError::new(
                    Stage::Threshold,
                    StageError::Config(format!("threshold {t} outside [0, 1]")),
                ));
            }
            (t, None, None)
        }
        ThresholdChoice::Search {
            fraction,
            incomplete,
        } => {
            let reference = reference.ok_or_else(|| {
                PipelineError::new(
                    Stage::Threshold,
                    StageError::Config("threshold search needs a reference alignment".into()),
                )
            })?;
            let cfg = SamplingConfig::new(fraction, config.seed).map_err(at(Stage::Threshold))?;
            let sample = sample_reference(reference, &cfg).map_err(at(Stage::Threshold))?;
            let found = find_best_threshold(&scored.alignment, &sample, !incomplete)
                .map_err(at(Stage::Threshold))?;
            (found.threshold, Some(found), Some(sample.len()))
        }
    };
    let cut = threshold_cut(&scored.alignment, threshold);
    let post_threshold = cut.len();
    let (alignment, post_bipartite) = if config.one_to_one {
        let m = max_weight_bipartite(&cut);
        let n = m.len();
        (m, Some(n))
    } else {
        (cut, None)
    };
    let report = RunReport {
        scorer: scorer.name().to_string(),
        candidates: candidates.len(),
        unscored: scored.unscored.len(),
        threshold,
        search,
        sample_size,
        post_threshold,
        post_bipartite,
    };
    Ok(PipelineRun {
        candidates,
        scored: scored.alignment,
        alignment,
        report,
    })
}

pub fn load_ontology(path: &Path) -> Result<Ontology, PipelineError> {
    Ontology::load(path).map_err(at(Stage::Load))
}

pub fn load_alignment(path: &Path) -> Result<Alignment, PipelineError> {
    Alignment::load(path).map_err(at(Stage::Load))
}

/// Loads the inputs, builds the scorer and runs the pipeline.
pub fn run_files(
    source: &Path,
    target: &Path,
    reference: Option<&Path>,
    config: &PipelineConfig,
) -> Result<PipelineRun, PipelineError> {
    let o1 = load_ontology(source)?;
    let o2 = load_ontology(target)?;
    let reference = reference.map(load_alignment).transpose()?;
    let scorer = config.scorer.build().map_err(at(Stage::Score))?;
    run_pipeline(&o1, &o2, reference.as_ref(), config, scorer.as_ref())
}

/// Runs a test case and scores the result against its full reference.
pub fn run_case(
    case: &TestCase,
    config: &PipelineConfig,
    scorer: &dyn PairScorer,
) -> Result<(CaseResult, RunReport), PipelineError> {
    let o1 = load_ontology(&case.source)?;
    let o2 = load_ontology(&case.target)?;
    let reference = load_alignment(&case.reference)?;
    let run = run_pipeline(&o1, &o2, Some(&reference), config, scorer)?;
    Ok((
        CaseResult::new(case.name.clone(), confusion(&run.alignment, &reference)),
        run.report,
    ))
}

/// One sweep row: the aggregated metrics for a sampling fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub fraction: f64,
    pub metrics: Metrics,
    pub cases: Vec<CaseResult>,
}

/// Runs the track once per fraction with a learned threshold. Cases run in
/// parallel on the current rayon pool.
pub fn sweep(
    track: &Track,
    config: &PipelineConfig,
    fractions: &[f64],
    scorer: &dyn PairScorer,
    aggregate: impl Fn(&[CaseResult]) -> Metrics,
) -> Result<Vec<SweepRow>, PipelineError> {
    use rayon::prelude::*;
    let incomplete = match config.threshold {
        ThresholdChoice::Search { incomplete, .. } => incomplete,
        ThresholdChoice::Fixed(_) => true,
    };
    fractions
        .iter()
        .map(|&fraction| {
            let cfg = PipelineConfig {
                threshold: ThresholdChoice::Search {
                    fraction,
                    incomplete,
                },
                ..config.clone()
            };
            let cases = track
                .cases
                .par_iter()
                .map(|case| run_case(case, &cfg, scorer).map(|(r, _)| r))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(SweepRow {
                fraction,
                metrics: aggregate(&cases),
                cases,
            })
        })
        .collect()
}

/// Single-text training rows for labelled correspondences. Cells without
/// text on some side are dropped and returned separately.
pub fn training_records(
    labeled: &[LabeledCorrespondence],
    o1: &Ontology,
    o2: &Ontology,
    extractor: ExtractorKind,
) -> (Vec<TrainingRecord>, Vec<CellKey>) {
    let labels: BTreeMap<&CellKey, _> = labeled.iter().map(|l| (l.key(), l.label)).collect();
    let cells: Alignment = labeled.iter().map(|l| l.correspondence.clone()).collect();
    let batch = build_pairs(&cells, o1, o2, extractor, SerializationMode::SingleText);
    let rows = batch
        .records
        .into_iter()
        .map(|r| TrainingRecord {
            label: labels[&r.key],
            text_left: r.left,
            text_right: r.right,
        })
        .collect();
    (rows, batch.skipped)
}

/// Micro-averaged F1 of a list of case results, for quick comparisons.
pub fn micro_f1(cases: &[CaseResult]) -> f64 {
    metrics(cases.iter().map(|c| c.counts).sum()).f1
}
