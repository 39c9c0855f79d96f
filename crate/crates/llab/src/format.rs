//! Trace files: CSV (canonical) and JSONL.
//!
//! Both carry the same six fields per probe. Metadata is not stored; on
//! read it is inferred from the samples, and the nominal interval is the
//! median send-time step per sequence number.

use std::fmt::Write as _;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use llab_core::trace::DEFAULT_DT_NS;
use llab_core::{LatencySample, Trace, TraceError, TraceMetadata};
use serde::{Deserialize, Serialize};

use crate::artifacts::write_atomic;

pub const CSV_HEADER: &str = "seq,t_send_ns,ul_ns,dl_ns,rtt_ns,lost";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Csv,
    Jsonl,
}

impl TraceFormat {
    /// `.jsonl` and `.ndjson` are JSONL; everything else is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") => TraceFormat::Jsonl,
            _ => TraceFormat::Csv,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    MalformedRow { line: u64, msg: String },
    #[error("duplicate sequence number {0}")]
    DuplicateSeq(u64),
    #[error("trace has no samples")]
    EmptyTrace,
    #[error("invalid trace: {0}")]
    Invalid(TraceError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl From<TraceError> for FormatError {
    fn from(e: TraceError) -> Self {
        match e {
            TraceError::DuplicateSeq(s) => FormatError::DuplicateSeq(s),
            TraceError::Empty => FormatError::EmptyTrace,
            other => FormatError::Invalid(other),
        }
    }
}

fn malformed(line: u64, msg: impl Into<String>) -> FormatError {
    FormatError::MalformedRow { line, msg: msg.into() }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonRow {
    seq: u64,
    t_send_ns: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ul_ns: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dl_ns: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rtt_ns: Option<u64>,
    lost: u8,
}

fn row_to_sample(line: u64, row: JsonRow) -> Result<LatencySample, FormatError> {
    let lost = match row.lost {
        0 => false,
        1 => true,
        v => return Err(malformed(line, format!("lost must be 0 or 1, got {v}"))),
    };
    Ok(LatencySample {
        seq: row.seq,
        t_send: row.t_send_ns,
        ul: row.ul_ns,
        dl: row.dl_ns,
        rtt: row.rtt_ns,
        lost,
    })
}

fn parse_u64(line: u64, name: &str, field: &str) -> Result<u64, FormatError> {
    field
        .trim()
        .parse()
        .map_err(|_| malformed(line, format!("{name}: expected an unsigned integer, got {field:?}")))
}

fn parse_opt(line: u64, name: &str, field: &str) -> Result<Option<u64>, FormatError> {
    if field.trim().is_empty() {
        Ok(None)
    } else {
        parse_u64(line, name, field).map(Some)
    }
}

fn parse_csv<R: Read>(reader: R) -> Result<Vec<LatencySample>, FormatError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| malformed(1, e.to_string()))?;
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(malformed(1, format!("expected header {CSV_HEADER:?}")));
    }
    let mut samples = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                return Err(malformed(line, e.to_string()));
            }
        }
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let lost = match record[5].trim() {
            "0" => false,
            "1" => true,
            other => return Err(malformed(line, format!("lost must be 0 or 1, got {other:?}"))),
        };
        samples.push(LatencySample {
            seq: parse_u64(line, "seq", &record[0])?,
            t_send: parse_u64(line, "t_send_ns", &record[1])?,
            ul: parse_opt(line, "ul_ns", &record[2])?,
            dl: parse_opt(line, "dl_ns", &record[3])?,
            rtt: parse_opt(line, "rtt_ns", &record[4])?,
            lost,
        });
    }
    Ok(samples)
}

fn parse_jsonl<R: Read>(reader: R) -> Result<Vec<LatencySample>, FormatError> {
    let mut samples = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line.map_err(|e| malformed(line_no, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: JsonRow = serde_json::from_str(&line).map_err(|e| malformed(line_no, e.to_string()))?;
        samples.push(row_to_sample(line_no, row)?);
    }
    Ok(samples)
}

/// Median of `(t[i+1] - t[i]) / (seq[i+1] - seq[i])` over consecutive rows.
pub fn infer_interval(samples: &[LatencySample]) -> u64 {
    let mut steps: Vec<u64> = samples
        .windows(2)
        .filter(|w| w[1].seq > w[0].seq && w[1].t_send > w[0].t_send)
        .map(|w| (w[1].t_send - w[0].t_send) / (w[1].seq - w[0].seq))
        .filter(|&d| d > 0)
        .collect();
    if steps.is_empty() {
        return DEFAULT_DT_NS;
    }
    let mid = steps.len() / 2;
    *steps.select_nth_unstable(mid).1
}

/// Reads a trace. Rows may come in any order; they are sorted by sequence
/// number.
pub fn parse_trace<R: Read>(reader: R, format: TraceFormat, source: &str) -> Result<Trace, FormatError> {
    let mut samples = match format {
        TraceFormat::Csv => parse_csv(reader)?,
        TraceFormat::Jsonl => parse_jsonl(reader)?,
    };
    if samples.is_empty() {
        return Err(FormatError::EmptyTrace);
    }
    samples.sort_by_key(|s| s.seq);
    let dt = infer_interval(&samples);
    let meta = TraceMetadata::inferred(source, &samples);
    Ok(Trace::new(samples, dt, meta)?)
}

fn push_opt(buf: &mut String, v: Option<u64>) {
    if let Some(v) = v {
        let _ = write!(buf, "{v}");
    }
}

/// Writes a trace in `format`.
pub fn write_trace<W: Write>(trace: &Trace, format: TraceFormat, writer: W) -> Result<(), FormatError> {
    if trace.is_empty() {
        return Err(FormatError::EmptyTrace);
    }
    let mut w = BufWriter::with_capacity(1 << 16, writer);
    let mut line = String::with_capacity(96);
    match format {
        TraceFormat::Csv => {
            writeln!(w, "{CSV_HEADER}")?;
            for s in trace.samples() {
                line.clear();
                let _ = write!(line, "{},{},", s.seq, s.t_send);
                push_opt(&mut line, s.ul);
                line.push(',');
                push_opt(&mut line, s.dl);
                line.push(',');
                push_opt(&mut line, s.rtt);
                line.push_str(if s.lost { ",1\n" } else { ",0\n" });
                w.write_all(line.as_bytes())?;
            }
        }
        TraceFormat::Jsonl => {
            for s in trace.samples() {
                let row = JsonRow {
                    seq: s.seq,
                    t_send_ns: s.t_send,
                    ul_ns: s.ul,
                    dl_ns: s.dl,
                    rtt_ns: s.rtt,
                    lost: s.lost as u8,
                };
                serde_json::to_writer(&mut w, &row).map_err(io::Error::from)?;
                w.write_all(b"\n")?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace_file(path: &Path) -> Result<Trace, FormatError> {
    let file = std::fs::File::open(path)?;
    parse_trace(
        BufReader::with_capacity(1 << 16, file),
        TraceFormat::from_path(path),
        &path.display().to_string(),
    )
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_trace_file(trace: &Trace, path: &Path) -> Result<(), FormatError> {
    let mut out = Ok(());
    write_atomic(path, |w| {
        out = write_trace(trace, TraceFormat::from_path(path), w);
        match &out {
            Ok(()) => Ok(()),
            Err(e) => Err(io::Error::other(e.to_string())),
        }
    })?;
    out
}
