//! RFC 4180 CSV for the three record schemas crossing the scorer boundary:
//!
//! * requests: `pair_id,text_left,text_right`
//! * responses: `pair_id,score`
//! * training data: `text_left,text_right,label` with label `0` or `1`

use std::io::{Read, Write};

use super::{ScoreRecord, TextPairRecord};
use crate::sampling::Label;

pub const PAIRS_HEADER: [&str; 3] = ["pair_id", "text_left", "text_right"];
pub const SCORES_HEADER: [&str; 2] = ["pair_id", "score"];
pub const TRAINING_HEADER: [&str; 3] = ["text_left", "text_right", "label"];

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("missing or wrong header: expected {expected:?}, found {found:?}")]
    Header { expected: String, found: String },
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("line {line}: score {value:?} is not a number")]
    InvalidScore { line: u64, value: String },
    #[error("line {line}: score {value} outside [0, 1]")]
    ScoreOutOfRange { line: u64, value: f64 },
    #[error("line {line}: label {value:?} is not 0 or 1")]
    InvalidLabel { line: u64, value: String },
    #[error("line {line}: empty text")]
    EmptyText { line: u64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for CsvError {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map(|p| p.line()).unwrap_or(0);
        match e.into_kind() {
            csv::ErrorKind::Io(io) => CsvError::Io(io),
            other => CsvError::Malformed {
                line,
                message: format!("{other:?}"),
            },
        }
    }
}

/// A request row as read back from CSV (the correspondence key stays with the sender).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairRow {
    pub pair_id: String,
    pub text_left: String,
    pub text_right: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingRecord {
    pub text_left: String,
    pub text_right: String,
    pub label: Label,
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out)
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(input)
}

fn read_rows<R: Read>(
    input: R,
    header: &[&str],
) -> Result<Vec<(u64, csv::StringRecord)>, CsvError> {
    let mut rdr = reader(input);
    let mut records = rdr.records();
    let first = match records.next() {
        Some(r) => r?,
        None => {
            return Err(CsvError::Header {
                expected: header.join(","),
                found: String::new(),
            })
        }
    };
    if first.iter().ne(header.iter().copied()) {
        return Err(CsvError::Header {
            expected: header.join(","),
            found: first.iter().collect::<Vec<_>>().join(","),
        });
    }
    records
        .map(|r| {
            let r = r?;
            let line = r.position().map(|p| p.line()).unwrap_or(0);
            Ok((line, r))
        })
        .collect()
}

pub fn write_pairs_csv<W: Write>(records: &[TextPairRecord], out: W) -> Result<(), CsvError> {
    let mut w = writer(out);
    w.write_record(PAIRS_HEADER)?;
    for r in records {
        w.write_record([&r.pair_id, &r.left, &r.right])?;
    }
    w.flush()?;
    Ok(())
}

pub fn pairs_to_csv(records: &[TextPairRecord]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_pairs_csv(records, &mut buf).expect("writing to memory");
    buf
}

pub fn read_pairs_csv<R: Read>(input: R) -> Result<Vec<PairRow>, CsvError> {
    read_rows(input, &PAIRS_HEADER)?
        .into_iter()
        .map(|(line, r)| {
            let row = PairRow {
                pair_id: r[0].to_string(),
                text_left: r[1].to_string(),
                text_right: r[2].to_string(),
            };
            if row.text_left.is_empty() || row.text_right.is_empty() {
                return Err(CsvError::EmptyText { line });
            }
            Ok(row)
        })
        .collect()
}

pub fn write_scores_csv<W: Write>(scores: &[ScoreRecord], out: W) -> Result<(), CsvError> {
    let mut w = writer(out);
    w.write_record(SCORES_HEADER)?;
    for s in scores {
        w.write_record([s.pair_id.as_str(), &s.score().to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn scores_to_csv(scores: &[ScoreRecord]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_scores_csv(scores, &mut buf).expect("writing to memory");
    buf
}

pub fn read_scores_csv<R: Read>(input: R) -> Result<Vec<ScoreRecord>, CsvError> {
    read_rows(input, &SCORES_HEADER)?
        .into_iter()
        .map(|(line, r)| {
            let raw = r[1].trim();
            let value: f64 = raw.parse().map_err(|_| CsvError::InvalidScore {
                line,
                value: raw.to_string(),
            })?;
            ScoreRecord::new(&r[0], value).map_err(|_| CsvError::ScoreOutOfRange { line, value })
        })
        .collect()
}

pub fn write_training_csv<W: Write>(records: &[TrainingRecord], out: W) -> Result<(), CsvError> {
    let mut w = writer(out);
    w.write_record(TRAINING_HEADER)?;
    for r in records {
        let label = r.label.as_int().to_string();
        w.write_record([r.text_left.as_str(), r.text_right.as_str(), label.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn training_to_csv(records: &[TrainingRecord]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_training_csv(records, &mut buf).expect("writing to memory");
    buf
}

pub fn read_training_csv<R: Read>(input: R) -> Result<Vec<TrainingRecord>, CsvError> {
    read_rows(input, &TRAINING_HEADER)?
        .into_iter()
        .map(|(line, r)| {
            let label = match r[2].trim() {
                "1" => Label::Positive,
                "0" => Label::Negative,
                other => {
                    return Err(CsvError::InvalidLabel {
                        line,
                        value: other.to_string(),
                    })
                }
            };
            Ok(TrainingRecord {
                text_left: r[0].to_string(),
                text_right: r[1].to_string(),
                label,
            })
        })
        .collect()
}
