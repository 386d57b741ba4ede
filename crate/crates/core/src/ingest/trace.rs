use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One process execution: an identifier, an optional class label and the
/// ordered sequence of system calls it issued.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyscallTrace {
    pub trace_id: String,
    pub label: Option<String>,
    pub calls: Vec<String>,
}

impl SyscallTrace {
    pub fn new(
        trace_id: impl Into<String>,
        label: Option<String>,
        calls: Vec<String>,
    ) -> Result<Self> {
        let trace_id = trace_id.into();
        if calls.is_empty() {
            return Err(Error::validation(format!(
                "trace \"{trace_id}\" has no system calls"
            )));
        }
        Ok(SyscallTrace {
            trace_id,
            label,
            calls,
        })
    }
}

/// Parses the line-oriented trace format. Lines: `<trace_id> <label|->
/// <token> [<token> ...]`; `#` comments and blank lines are skipped.
pub fn parse_trace_file<R: BufRead>(reader: R) -> Result<Vec<SyscallTrace>> {
    let mut traces = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 3 {
            return Err(Error::parse(
                line_no,
                format!(
                    "expected at least 3 whitespace-separated fields (id, label, calls), found {}",
                    fields.len()
                ),
            ));
        }
        let trace_id = fields[0].to_string();
        if !seen.insert(trace_id.clone()) {
            return Err(Error::validation(format!(
                "duplicate trace_id \"{trace_id}\" at line {line_no}"
            )));
        }
        let label = match fields[1] {
            "-" => None,
            other => Some(other.to_string()),
        };
        let calls = fields[2..].iter().map(|s| s.to_string()).collect();
        traces.push(SyscallTrace {
            trace_id,
            label,
            calls,
        });
    }
    Ok(traces)
}

/// Writes traces in the same line-oriented format `parse_trace_file`
/// reads, so write → parse round-trips.
pub fn write_trace_file<W: Write>(mut writer: W, traces: &[SyscallTrace]) -> Result<()> {
    for t in traces {
        for field in std::iter::once(&t.trace_id)
            .chain(t.label.iter())
            .chain(t.calls.iter())
        {
            if field.is_empty() || field.chars().any(char::is_whitespace) {
                return Err(Error::validation(format!(
                    "field {field:?} in trace \"{}\" cannot be written to the trace format",
                    t.trace_id
                )));
            }
        }
        let label = t.label.as_deref().unwrap_or("-");
        writeln!(writer, "{} {} {}", t.trace_id, label, t.calls.join(" "))?;
    }
    Ok(())
}
