mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use ontomatch_core::bridge::csv_io::write_training_csv;
use ontomatch_core::eval::{
    load_track, macro_average, micro_average, Aggregation, CaseResult, TrackReport,
};
use ontomatch_core::pipeline::{
    load_alignment, load_ontology, run_case, run_pipeline, sweep, training_records, PipelineError,
    Stage,
};
use ontomatch_core::sampling::{
    add_negatives_one_one, add_negatives_random_absolute, add_negatives_random_share,
    add_negatives_via_matcher, sample_reference, Label,
};
use ontomatch_core::{
    confusion, high_recall_match, Alignment, ExtractorKind, PairScorer, SamplingConfig,
};

use config::{resolve, FileConfig, PipelineArgs, Resolved};

#[derive(Parser)]
#[command(
    name = "ontomatch",
    version,
    about = "Match ontologies, evaluate alignments, emit training data"
)]
struct Cli {
    /// TOML file with default pipeline settings.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Align two ontologies and write the alignment XML.
    Match {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Reference alignment, needed for --search-threshold.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long, short)]
        output: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Score a track. Without --systems the pipeline is run on every test case.
    Evaluate {
        #[arg(long)]
        track: PathBuf,
        /// Directory of `<testcase>.xml` system alignments.
        #[arg(long)]
        systems: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = AggregationArg::Micro)]
        aggregation: AggregationArg,
        /// Results CSV (stdout when omitted).
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Write labelled text pairs for fine-tuning.
    TrainData {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long, value_enum)]
        strategy: Strategy,
        /// Negatives for the absolute strategy.
        #[arg(long, default_value_t = 0)]
        count: usize,
        /// Negatives per positive for the share strategy.
        #[arg(long, default_value_t = 1.0)]
        share: f64,
        /// Share of the reference used as positives.
        #[arg(long, default_value_t = 1.0)]
        fraction: f64,
        #[arg(long)]
        extractor: Option<ExtractorKind>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Evaluate a track once per reference sampling rate.
    Sweep {
        #[arg(long)]
        track: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5,0.6")]
        fractions: Vec<f64>,
        #[arg(long, value_enum, default_value_t = AggregationArg::Micro)]
        aggregation: AggregationArg,
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AggregationArg {
    Micro,
    Macro,
}

impl From<AggregationArg> for Aggregation {
    fn from(a: AggregationArg) -> Self {
        match a {
            AggregationArg::Micro => Aggregation::Micro,
            AggregationArg::Macro => Aggregation::Macro,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Absolute,
    Share,
    OneOne,
    ViaMatcher,
}

/// An error with its exit code: 2 when inputs could not be loaded, 1 otherwise.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn stage(stage: Stage, message: impl std::fmt::Display) -> Self {
        PipelineError::new(
            stage,
            ontomatch_core::pipeline::StageError::Config(message.to_string()),
        )
        .into()
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure {
            code: if e.stage == Stage::Load { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn settings(config: Option<&Path>, args: &PipelineArgs) -> Result<Resolved, Failure> {
    let file = match config {
        Some(p) => FileConfig::load(p).map_err(|e| Failure::input(format!("config: {e}")))?,
        None => FileConfig::default(),
    };
    let resolved = resolve(args, &file).map_err(|e| Failure::input(format!("config: {e}")))?;
    if let Some(n) = resolved.jobs {
        // only fails if a pool already exists, which keeps its size
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(resolved)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            Failure::stage(Stage::Write, format!("{}: {e}", p.display()))
        })?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Match {
            source,
            target,
            reference,
            output,
            pipeline,
        } => {
            let cfg = settings(config, &pipeline)?.pipeline;
            let o1 = load_ontology(&source)?;
            let o2 = load_ontology(&target)?;
            let reference = reference.as_deref().map(load_alignment).transpose()?;
            let scorer = cfg
                .scorer
                .build()
                .map_err(|e| PipelineError::new(Stage::Score, e))?;
            let run = run_pipeline(&o1, &o2, reference.as_ref(), &cfg, scorer.as_ref())?;
            run.alignment
                .save(&output)
                .map_err(|e| PipelineError::new(Stage::Write, e))?;
            print!("{}", run.report);
            if let Some(r) = &reference {
                let m = ontomatch_core::metrics(confusion(&run.alignment, r));
                println!(
                    "precision {:.4} recall {:.4} f1 {:.4}",
                    m.precision, m.recall, m.f1
                );
            }
            Ok(())
        }
        Command::Evaluate {
            track,
            systems,
            aggregation,
            output: out,
            pipeline,
        } => {
            let resolved = settings(config, &pipeline)?;
            let load = load_track(&track)
                .map_err(|e| Failure::input(format!("{}: {e}", track.display())))?;
            let mut failures: Vec<String> = load
                .errors
                .iter()
                .map(|(name, e)| format!("{name}: {e}"))
                .collect();
            let results: Vec<Result<CaseResult, String>> = match &systems {
                Some(dir) => load
                    .track
                    .cases
                    .iter()
                    .map(|case| {
                        let reference = case.load_reference().map_err(|e| e.to_string())?;
                        let path = dir.join(format!("{}.xml", case.name));
                        if !path.is_file() {
                            return Ok(CaseResult::missing(case.name.clone(), &reference));
                        }
                        let system = Alignment::load(&path).map_err(|e| e.to_string())?;
                        Ok(CaseResult::new(
                            case.name.clone(),
                            confusion(&system, &reference),
                        ))
                    })
                    .collect(),
                None => {
                    let scorer: Box<dyn PairScorer> = resolved
                        .pipeline
                        .scorer
                        .build()
                        .map_err(|e| PipelineError::new(Stage::Score, e))?;
                    load.track
                        .cases
                        .par_iter()
                        .map(|case| {
                            run_case(case, &resolved.pipeline, scorer.as_ref())
                                .map(|(r, _)| r)
                                .map_err(|e| e.to_string())
                        })
                        .collect()
                }
            };
            let mut cases = Vec::new();
            for (case, r) in load.track.cases.iter().zip(results) {
                match r {
                    Ok(c) => cases.push(c),
                    Err(e) => failures.push(format!("{}: {e}", case.name)),
                }
            }
            for f in &failures {
                eprintln!("test case {f}");
            }
            if cases.is_empty() {
                return Err(Failure {
                    code: if failures.is_empty() { 2 } else { 1 },
                    message: format!("no test case in {} could be evaluated", track.display()),
                });
            }
            let report = TrackReport::new(cases, aggregation.into()).expect("cases is non-empty");
            let mut w = output(out.as_deref())?;
            report
                .write_csv(&mut w)
                .and_then(|_| w.flush().map_err(Into::into))
                .map_err(|e| Failure::stage(Stage::Write, e))?;
            if failures.is_empty() {
                Ok(())
            } else {
                Err(Failure {
                    code: 1,
                    message: format!("{} test case(s) failed", failures.len()),
                })
            }
        }
        Command::TrainData {
            source,
            target,
            reference,
            strategy,
            count,
            share,
            fraction,
            extractor,
            seed,
            output: out,
        } => {
            let extractor = extractor.unwrap_or_default();
            let seed = seed.unwrap_or(0);
            let o1 = load_ontology(&source)?;
            let o2 = load_ontology(&target)?;
            let reference = load_alignment(&reference)?;
            let sampling = |e: ontomatch_core::sampling::SamplingError| {
                Failure::from(PipelineError::new(Stage::Match, e))
            };
            let cfg = SamplingConfig::new(fraction, seed).map_err(sampling)?;
            let positives = sample_reference(&reference, &cfg).map_err(sampling)?;
            let labeled = match strategy {
                Strategy::Absolute => {
                    add_negatives_random_absolute(&positives, &o1, &o2, count, seed)
                }
                Strategy::Share => add_negatives_random_share(&positives, &o1, &o2, share, seed),
                Strategy::OneOne => add_negatives_one_one(&positives, &o1, &o2, seed),
                Strategy::ViaMatcher => Ok(add_negatives_via_matcher(
                    &high_recall_match(&o1, &o2, extractor),
                    &positives,
                )),
            }
            .map_err(sampling)?;
            let (rows, skipped) = training_records(&labeled, &o1, &o2, extractor);
            let file = File::create(&out)
                .map_err(|e| Failure::stage(Stage::Write, format!("{}: {e}", out.display())))?;
            write_training_csv(&rows, BufWriter::new(file))
                .map_err(|e| Failure::stage(Stage::Write, e))?;
            let pos = rows.iter().filter(|r| r.label == Label::Positive).count();
            println!(
                "positives: {pos}\nnegatives: {}\nskipped (no text): {}",
                rows.len() - pos,
                skipped.len()
            );
            Ok(())
        }
        Command::Sweep {
            track,
            fractions,
            aggregation,
            output: out,
            pipeline,
        } => {
            let resolved = settings(config, &pipeline)?;
            if let Some(f) = fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
                return Err(Failure::input(format!("fraction {f} outside (0, 1]")));
            }
            let load = load_track(&track)
                .map_err(|e| Failure::input(format!("{}: {e}", track.display())))?;
            if let Some((name, e)) = load.errors.first() {
                return Err(Failure::input(format!("test case {name}: {e}")));
            }
            if load.track.cases.is_empty() {
                return Err(Failure::input(format!(
                    "no test cases in {}",
                    track.display()
                )));
            }
            let scorer = resolved
                .pipeline
                .scorer
                .build()
                .map_err(|e| PipelineError::new(Stage::Score, e))?;
            let aggregation: Aggregation = aggregation.into();
            let rows = sweep(
                &load.track,
                &resolved.pipeline,
                &fractions,
                scorer.as_ref(),
                |cases| {
                    match aggregation {
                        Aggregation::Micro => {
                            micro_average(&cases.iter().map(|c| c.counts).collect::<Vec<_>>())
                        }
                        Aggregation::Macro => {
                            macro_average(&cases.iter().map(|c| c.metrics).collect::<Vec<_>>())
                        }
                    }
                    .expect("tracks are non-empty")
                },
            )?;
            let mut w = output(out.as_deref())?;
            let mut write = || -> io::Result<()> {
                writeln!(w, "fraction,precision,recall,f1")?;
                for r in &rows {
                    writeln!(
                        w,
                        "{},{:.6},{:.6},{:.6}",
                        r.fraction, r.metrics.precision, r.metrics.recall, r.metrics.f1
                    )?;
                }
                w.flush()
            };
            write().map_err(|e| Failure::stage(Stage::Write, e))?;
            Ok(())
        }
    }
}
