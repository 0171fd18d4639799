//! Pipeline settings from a TOML file, the environment and flags (flags win).
//!
//! Recognized file keys, all optional:
//!
//! ```toml
//! extractor = "transformers"   # set | short-long | transformers
//! mode = "multi"               # multi | single
//! scorer = "lexical"           # lexical | remote
//! endpoint = "http://127.0.0.1:8000"
//! batch_size = 1000
//! timeout_secs = 300
//! max_in_flight = 4
//! threshold = 0.5              # fixed threshold ...
//! search_threshold = false     # ... or learn it on a reference sample
//! fraction = 0.2
//! complete_reference = false
//! one_to_one = true
//! seed = 0
//! jobs = 4
//! ```

use std::path::Path;
use std::time::Duration;

use clap::{Args, ValueEnum};
use serde::Deserialize;

use ontomatch_core::pipeline::{PipelineConfig, ScorerChoice, ThresholdChoice};
use ontomatch_core::{ExtractorKind, ScorerEndpoint, SerializationMode};

pub const ENDPOINT_ENV: &str = "ONTOMATCH_ENDPOINT";

/// Sampling rate used when a threshold is searched without an explicit fraction.
pub const DEFAULT_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    Lexical,
    Remote,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub extractor: Option<String>,
    pub mode: Option<String>,
    pub scorer: Option<ScorerKind>,
    pub endpoint: Option<String>,
    pub batch_size: Option<usize>,
    pub timeout_secs: Option<u64>,
    pub max_in_flight: Option<usize>,
    pub threshold: Option<f64>,
    pub search_threshold: Option<bool>,
    pub fraction: Option<f64>,
    pub complete_reference: Option<bool>,
    pub one_to_one: Option<bool>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct PipelineArgs {
    /// Text extractor: set, short-long or transformers.
    #[arg(long)]
    pub extractor: Option<ExtractorKind>,
    /// Record serialization: multi or single.
    #[arg(long)]
    pub mode: Option<SerializationMode>,
    #[arg(long, value_enum)]
    pub scorer: Option<ScorerKind>,
    /// Base URL of a running scorer service.
    #[arg(long, env = ENDPOINT_ENV)]
    pub endpoint: Option<String>,
    /// Records per scoring request.
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Per-request timeout in seconds.
    #[arg(long)]
    pub timeout: Option<u64>,
    /// Keep correspondences with confidence >= X.
    #[arg(long, value_name = "X", conflicts_with = "search_threshold")]
    pub threshold: Option<f64>,
    /// Learn the threshold on a sample of the reference.
    #[arg(long)]
    pub search_threshold: bool,
    /// Share of the reference sampled for threshold search.
    #[arg(long, value_name = "F")]
    pub fraction: Option<f64>,
    /// Count the sample as a complete reference during threshold search.
    #[arg(long)]
    pub complete_reference: bool,
    /// Reduce the result to a one-to-one alignment.
    #[arg(long, overrides_with = "no_one_to_one")]
    pub one_to_one: bool,
    #[arg(long)]
    pub no_one_to_one: bool,
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Test cases run in parallel.
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub pipeline: PipelineConfig,
    pub jobs: Option<usize>,
}

fn parse_field<T: std::str::FromStr<Err = String>>(
    value: Option<&String>,
) -> Result<Option<T>, String> {
    value.map(|v| v.parse()).transpose()
}

pub fn resolve(args: &PipelineArgs, file: &FileConfig) -> Result<Resolved, String> {
    let extractor = match args.extractor {
        Some(e) => e,
        None => parse_field(file.extractor.as_ref())?.unwrap_or_default(),
    };
    let mode = match args.mode {
        Some(m) => m,
        None => parse_field(file.mode.as_ref())?.unwrap_or_default(),
    };
    let scorer = match args.scorer.or(file.scorer).unwrap_or(ScorerKind::Lexical) {
        ScorerKind::Lexical => ScorerChoice::Lexical,
        ScorerKind::Remote => {
            let url = args
                .endpoint
                .clone()
                .or_else(|| file.endpoint.clone())
                .ok_or_else(|| format!("the remote scorer needs --endpoint or {ENDPOINT_ENV}"))?;
            let mut endpoint = ScorerEndpoint::new(url);
            if let Some(n) = args.batch_size.or(file.batch_size) {
                if n == 0 {
                    return Err("batch size must be positive".into());
                }
                endpoint = endpoint.with_batch_size(n);
            }
            if let Some(s) = args.timeout.or(file.timeout_secs) {
                endpoint = endpoint.with_timeout(Duration::from_secs(s));
            }
            if let Some(n) = file.max_in_flight {
                endpoint = endpoint.with_max_in_flight(n);
            }
            ScorerChoice::Remote(endpoint)
        }
    };
    let search = if args.threshold.is_some() {
        false
    } else {
        args.search_threshold || args.fraction.is_some() || file.search_threshold.unwrap_or(false)
    };
    let threshold = if search {
        let fraction = args.fraction.or(file.fraction).unwrap_or(DEFAULT_FRACTION);
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(format!("fraction {fraction} outside (0, 1]"));
        }
        let complete = args.complete_reference || file.complete_reference.unwrap_or(false);
        ThresholdChoice::Search {
            fraction,
            incomplete: !complete,
        }
    } else {
        let t = args.threshold.or(file.threshold).unwrap_or(0.0);
        if !(0.0..=1.0).contains(&t) {
            return Err(format!("threshold {t} outside [0, 1]"));
        }
        ThresholdChoice::Fixed(t)
    };
    let one_to_one = if args.one_to_one {
        true
    } else if args.no_one_to_one {
        false
    } else {
        file.one_to_one.unwrap_or(false)
    };
    let jobs = args.jobs.or(file.jobs);
    if jobs == Some(0) {
        return Err("--jobs must be positive".into());
    }
    Ok(Resolved {
        pipeline: PipelineConfig {
            extractor,
            mode,
            scorer,
            threshold,
            one_to_one,
            seed: args.seed.or(file.seed).unwrap_or(0),
        },
        jobs,
    })
}
