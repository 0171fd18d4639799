//! Ontology matching toolkit.
//!
//! A high-recall token matcher proposes candidates, a pair scorer rescores
//! them, and threshold and one-to-one filters trim the result. Alignments
//! are read and written in the alignment XML format; [`eval`] scores them
//! against references.

pub mod alignment;
pub mod bridge;
pub mod eval;
pub mod filters;
pub mod graph;
pub mod matcher;
pub mod pipeline;
pub mod sampling;
pub mod text;

pub use alignment::{Alignment, AlignmentError, CellKey, Correspondence, Relation};
pub use bridge::{
    apply_scores, build_pairs, lexical_score, LexicalScorer, PairScorer, RemoteScorer, ScoreError,
    ScoreRecord, ScorerEndpoint, SerializationMode, TextPairRecord,
};
pub use eval::{confusion, macro_average, metrics, micro_average, ConfusionCounts, Metrics};
pub use filters::{
    find_best_threshold, max_weight_bipartite, threshold_cut, transformers_filter,
    ThresholdSearchResult,
};
pub use graph::{Iri, Literal, Ontology};
pub use matcher::high_recall_match;
pub use pipeline::{
    run_pipeline, PipelineConfig, PipelineError, ScorerChoice, Stage, ThresholdChoice,
};
pub use sampling::{Label, LabeledCorrespondence, SamplingConfig};
pub use text::{ExtractorKind, TextSet};
