//! Line-oriented record files.
//!
//! One element per line, comma separated:
//!
//! ```text
//! message_bit,index,a_0,a_pi/2,a_pi,a_3pi/2,null
//! 0,1,0,0,1,0,0
//! ```
//!
//! Lines starting with `#` and blank lines are ignored. Indices are 1-based
//! and must be consecutive.

use std::io::{self, BufRead, Write};

use super::{EliminationRecord, SignatureRecords};
use crate::error::{Error, Result};

pub const HEADER: &str = "# message_bit,index,a_0,a_pi/2,a_pi,a_3pi/2,null";

pub fn write_records<W: Write>(mut w: W, records: &SignatureRecords) -> io::Result<()> {
    writeln!(w, "{HEADER}")?;
    for (rec, &null) in records.records.iter().zip(&records.null_clicks) {
        let a = rec.ruled_out.map(u8::from);
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            rec.message_bit, rec.element_index, a[0], a[1], a[2], a[3], null as u8
        )?;
    }
    Ok(())
}

fn parse_bit(field: &str, line: usize, column: usize) -> Result<bool> {
    match field.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(Error::Parse {
            line,
            column,
            message: format!("expected 0 or 1, found `{other}`"),
        }),
    }
}

pub fn read_records<R: BufRead>(reader: R) -> Result<SignatureRecords> {
    let mut out: Option<SignatureRecords> = None;
    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            column: 1,
            message: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::Parse {
                line: line_no,
                column: 1,
                message: format!("expected 7 fields, found {}", fields.len()),
            });
        }
        let bit = parse_bit(fields[0], line_no, 1)? as u8;
        let index: usize = fields[1].trim().parse().map_err(|_| Error::Parse {
            line: line_no,
            column: 2,
            message: format!("invalid element index `{}`", fields[1].trim()),
        })?;
        let mut ruled_out = [false; 4];
        for (k, slot) in ruled_out.iter_mut().enumerate() {
            *slot = parse_bit(fields[2 + k], line_no, 3 + k)?;
        }
        let null = parse_bit(fields[6], line_no, 7)?;

        let recs = out.get_or_insert_with(|| SignatureRecords {
            message_bit: bit,
            ..Default::default()
        });
        if bit != recs.message_bit {
            return Err(Error::Parse {
                line: line_no,
                column: 1,
                message: "message bit changes within file".into(),
            });
        }
        if index != recs.records.len() + 1 {
            return Err(Error::Parse {
                line: line_no,
                column: 2,
                message: format!(
                    "expected element index {}, found {index}",
                    recs.records.len() + 1
                ),
            });
        }
        recs.records.push(EliminationRecord {
            message_bit: bit,
            element_index: index,
            ruled_out,
        });
        recs.null_clicks.push(null);
    }
    Ok(out.unwrap_or_default())
}
