//! Append-only progress log for grid runs.
//!
//! One tab-separated record per completed (scenario, structure) pair:
//!
//! ```text
//! scenario_id<TAB>structure<TAB>estimate<TAB>std_error<TAB>seed
//! ```
//!
//! Records are flushed line by line, so a crash loses at most the record
//! being written. A final line without a trailing newline is treated as
//! that lost record and dropped on load; anything else that fails to parse
//! aborts the run with its line number.

use crate::error::{Error, Result};
use crate::payoff::StructureKind;
use std::fs::{File, OpenOptions};
use std::io::{LineWriter, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckpointRecord {
    pub scenario_id: u32,
    pub structure: StructureKind,
    pub estimate: f64,
    pub std_error: f64,
    pub seed: u64,
}

fn parse_record(line: &str, line_no: usize) -> Result<CheckpointRecord> {
    let corrupt = |reason: &str| Error::CheckpointCorrupt {
        line: line_no,
        reason: reason.to_string(),
    };
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 5 {
        return Err(corrupt(&format!("expected 5 fields, found {}", fields.len())));
    }
    Ok(CheckpointRecord {
        scenario_id: fields[0]
            .parse()
            .map_err(|_| corrupt("scenario id is not an integer"))?,
        structure: fields[1]
            .parse()
            .map_err(|_| corrupt("unknown structure tag"))?,
        estimate: fields[2]
            .parse()
            .map_err(|_| corrupt("estimate is not a number"))?,
        std_error: fields[3]
            .parse()
            .map_err(|_| corrupt("std_error is not a number"))?,
        seed: fields[4]
            .parse()
            .map_err(|_| corrupt("seed is not an integer"))?,
    })
}

/// Replay a checkpoint file. Missing file means an empty log.
pub fn load_checkpoint(path: &Path) -> Result<Vec<CheckpointRecord>> {
    let text = match std::fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let complete = text.ends_with('\n');
    let lines: Vec<&str> = text.lines().collect();
    let mut records = Vec::with_capacity(lines.len());
    for (idx, line) in lines.iter().enumerate() {
        let last = idx + 1 == lines.len();
        if last && !complete {
            // torn final write: drop it, the scenario will be recomputed
            break;
        }
        if line.is_empty() {
            continue;
        }
        records.push(parse_record(line, idx + 1)?);
    }
    Ok(records)
}

/// Serialized appender; the single sink behind the worker pool.
pub struct CheckpointWriter {
    out: LineWriter<File>,
}

impl CheckpointWriter {
    pub fn append(path: &Path) -> Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            out: LineWriter::new(file),
        })
    }

    pub fn write_record(&mut self, record: &CheckpointRecord) -> Result<()> {
        writeln!(
            self.out,
            "{}\t{}\t{}\t{}\t{}",
            record.scenario_id, record.structure, record.estimate, record.std_error, record.seed
        )?;
        self.out.flush()?;
        Ok(())
    }
}
