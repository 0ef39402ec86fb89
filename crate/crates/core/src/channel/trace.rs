//! Channel trace files.
//!
//! Comma-separated, one row per (user, subcarrier), `#` lines are comments:
//!
//! ```text
//! user_id,subcarrier_index,real,imag
//! 1,0,0.83,-0.12
//! ```
//!
//! A magnitude-only variant with header `user_id,subcarrier_index,magnitude`
//! is also accepted; its gains get zero phase.

use super::{FrequencyResponse, ResourceGrid};
use crate::{Error, Result, UserId};
use num_complex::Complex64;
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader, Read, Write};
use std::path::Path;

const COMPLEX_HEADER: [&str; 4] = ["user_id", "subcarrier_index", "real", "imag"];
const MAGNITUDE_HEADER: [&str; 3] = ["user_id", "subcarrier_index", "magnitude"];

#[derive(Clone, Copy)]
enum Layout {
    Complex,
    Magnitude,
}

/// Write responses in the complex trace layout, users in the given order.
///
/// `comment`, when present, is emitted as a leading `# ` line.
pub fn write_channel_trace<W: Write>(
    mut out: W,
    responses: &[FrequencyResponse],
    comment: Option<&str>,
) -> io::Result<()> {
    if let Some(c) = comment {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "{}", COMPLEX_HEADER.join(","))?;
    for r in responses {
        for (i, g) in r.gains().iter().enumerate() {
            writeln!(out, "{},{},{},{}", r.user_id(), i, g.re, g.im)?;
        }
    }
    out.flush()
}

/// Load a trace file; the grid comes from the accompanying scenario config.
pub fn load_channel_trace(path: &Path, grid: &ResourceGrid) -> Result<Vec<FrequencyResponse>> {
    let file = File::open(path).map_err(|e| Error::Trace {
        path: path.to_path_buf(),
        line: 0,
        message: format!("cannot open: {e}"),
    })?;
    read_channel_trace(BufReader::new(file), path, grid)
}

/// Parse a trace from any reader. `path` only labels error messages.
pub fn read_channel_trace<R: Read>(
    reader: R,
    path: &Path,
    grid: &ResourceGrid,
) -> Result<Vec<FrequencyResponse>> {
    let err = |line: u64, message: String| Error::Trace {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut layout = None;
    let mut rows: BTreeMap<UserId, BTreeMap<usize, (Complex64, u64)>> = BTreeMap::new();

    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let fields: Vec<&str> = record.iter().collect();

        let layout = match layout {
            Some(l) => l,
            None => {
                layout = Some(if fields == COMPLEX_HEADER {
                    Layout::Complex
                } else if fields == MAGNITUDE_HEADER {
                    Layout::Magnitude
                } else {
                    return Err(err(
                        line,
                        format!(
                            "expected header `{}` or `{}`",
                            COMPLEX_HEADER.join(","),
                            MAGNITUDE_HEADER.join(",")
                        ),
                    ));
                });
                continue;
            }
        };

        let expected_fields = match layout {
            Layout::Complex => 4,
            Layout::Magnitude => 3,
        };
        if fields.len() != expected_fields {
            return Err(err(
                line,
                format!("expected {expected_fields} fields, found {}", fields.len()),
            ));
        }
        let user: u32 = fields[0]
            .parse()
            .map_err(|_| err(line, format!("invalid user_id `{}`", fields[0])))?;
        let index: usize = fields[1]
            .parse()
            .map_err(|_| err(line, format!("invalid subcarrier_index `{}`", fields[1])))?;
        let number = |s: &str, name: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(line, format!("invalid {name} `{s}`")))
        };
        let gain = match layout {
            Layout::Complex => Complex64::new(number(fields[2], "real")?, number(fields[3], "imag")?),
            Layout::Magnitude => {
                let m = number(fields[2], "magnitude")?;
                if m < 0.0 {
                    return Err(err(line, format!("negative magnitude `{}`", fields[2])));
                }
                Complex64::new(m, 0.0)
            }
        };

        let user = UserId(user);
        match rows.entry(user).or_default().entry(index) {
            Entry::Occupied(_) => {
                return Err(Error::TraceDuplicate {
                    path: path.to_path_buf(),
                    line,
                    user,
                    index,
                })
            }
            Entry::Vacant(v) => {
                v.insert((gain, line));
            }
        }
    }

    if layout.is_none() {
        return Err(err(0, "empty trace: missing header".into()));
    }

    let first_len = rows.values().next().map_or(0, BTreeMap::len);
    for (user, entries) in &rows {
        if entries.len() != first_len {
            return Err(Error::TraceLength {
                path: path.to_path_buf(),
                user: *user,
                expected: first_len,
                actual: entries.len(),
            });
        }
    }

    let n = grid.subcarrier_count();
    rows.into_iter()
        .map(|(user, entries)| {
            if entries.len() != n {
                return Err(Error::TraceLength {
                    path: path.to_path_buf(),
                    user,
                    expected: n,
                    actual: entries.len(),
                });
            }
            // n distinct indices, all < n: the map covers 0..n exactly.
            if let Some((&index, &(_, line))) = entries.iter().next_back().filter(|(i, _)| **i >= n) {
                return Err(err(
                    line,
                    format!("subcarrier_index {index} out of range for {n} subcarriers"),
                ));
            }
            let gains = entries.into_values().map(|(g, _)| g).collect();
            FrequencyResponse::new(user, gains, *grid)
        })
        .collect()
}
