//! Canonical triple record serialization: one triple per line, JSON object
//! per line with fields `head`, `relation`, `tail` (each with `text` and,
//! for entities, `properties`) and a top-level `provenance`.
//!
//! This is the interchange format every stage reads and writes. Provenance
//! coupling (initial carries paper id, split/abstract do not) is re-checked
//! on every record read.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::Triple;

/// Serialize triples one per line. Returns the record count.
pub fn write_records<W: Write>(writer: &mut W, triples: &[Triple]) -> std::io::Result<usize> {
    let mut count = 0;
    for triple in triples {
        let line = serde_json::to_string(triple).expect("triple serialization is infallible");
        writer.write_all(line.as_bytes())?;
        writer.write_all(b"\n")?;
        count += 1;
    }
    Ok(count)
}

pub fn write_records_file(path: &Path, triples: &[Triple]) -> Result<usize> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    let count = write_records(&mut writer, triples).map_err(|e| Error::io(path, e))?;
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(count)
}

/// Read triples from a line-delimited record stream, validating each record.
/// Blank lines are skipped; a malformed record reports its line number.
pub fn read_records<R: BufRead>(reader: R, origin: &Path) -> Result<Vec<Triple>> {
    let mut triples = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let triple: Triple = serde_json::from_str(&line).map_err(|e| Error::Record {
            path: origin.to_path_buf(),
            line: idx + 1,
            detail: e.to_string(),
        })?;
        triple.validate().map_err(|e| Error::Record {
            path: origin.to_path_buf(),
            line: idx + 1,
            detail: e.to_string(),
        })?;
        triples.push(triple);
    }
    Ok(triples)
}

pub fn read_records_file(path: &Path) -> Result<Vec<Triple>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_records(BufReader::new(file), path)
}
