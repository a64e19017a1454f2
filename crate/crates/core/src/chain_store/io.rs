//! CSV and flat-binary serialization of draw tensors.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{ChainDraws, DrawsError, SuperchainLayout};

const CSV_HEADER: &str = "k,m,n,d,value";

/// Write one row per value, `k,m,n,d,value`, 0-based indices in storage order.
/// Values use Rust's shortest round-trip formatting, so reading back is lossless.
pub fn write_csv<W: Write>(draws: &ChainDraws, mut out: W) -> std::io::Result<()> {
    let l = draws.layout();
    writeln!(out, "{CSV_HEADER}")?;
    for (i, v) in draws.values().iter().enumerate() {
        let (k, m, n, d) = l.unravel(i);
        writeln!(out, "{k},{m},{n},{d},{v:?}")?;
    }
    out.flush()
}

/// Parse the CSV form. The layout is inferred from the largest index on each
/// axis; every cell must appear exactly once.
pub fn read_csv<R: Read>(input: R) -> Result<ChainDraws, DrawsError> {
    let reader = BufReader::new(input);
    let mut rows: Vec<([usize; 4], f64)> = Vec::new();
    let mut saw_header = false;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if !saw_header {
            if trimmed != CSV_HEADER {
                return Err(DrawsError::Parse {
                    line: lineno,
                    message: format!("expected header `{CSV_HEADER}`"),
                });
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 5 {
            return Err(DrawsError::Parse {
                line: lineno,
                message: format!("expected 5 fields, found {}", fields.len()),
            });
        }
        let mut idx = [0usize; 4];
        for (slot, field) in idx.iter_mut().zip(&fields) {
            *slot = field.trim().parse().map_err(|_| DrawsError::Parse {
                line: lineno,
                message: format!("bad index `{field}`"),
            })?;
        }
        let value: f64 = fields[4].trim().parse().map_err(|_| DrawsError::Parse {
            line: lineno,
            message: format!("bad value `{}`", fields[4]),
        })?;
        rows.push((idx, value));
    }
    if !saw_header {
        return Err(DrawsError::Parse {
            line: 1,
            message: "empty draw file".into(),
        });
    }
    if rows.is_empty() {
        return Err(DrawsError::Parse {
            line: 2,
            message: "no draws".into(),
        });
    }
    let mut dims = [0usize; 4];
    for (idx, _) in &rows {
        for (dim, &i) in dims.iter_mut().zip(idx) {
            *dim = (*dim).max(i + 1);
        }
    }
    let layout = SuperchainLayout::new(dims[0], dims[1], dims[2], dims[3])?;
    if rows.len() != layout.total_values() {
        return Err(DrawsError::ShapeMismatch {
            expected: layout.total_values(),
            actual: rows.len(),
        });
    }
    let mut values = vec![f64::NAN; layout.total_values()];
    let mut seen = vec![false; layout.total_values()];
    for ([k, m, n, d], v) in rows {
        let i = layout.index(k, m, n, d);
        if seen[i] {
            return Err(DrawsError::Parse {
                line: 0,
                message: format!("duplicate cell (k={k}, m={m}, n={n}, d={d})"),
            });
        }
        seen[i] = true;
        values[i] = v;
    }
    ChainDraws::new(layout, values)
}

/// Four little-endian `u32` (K, M, N, D) followed by the values as little-endian `f64`.
pub fn write_binary<W: Write>(draws: &ChainDraws, mut out: W) -> std::io::Result<()> {
    let l = draws.layout();
    for dim in [l.k, l.m, l.n, l.d] {
        let dim = u32::try_from(dim)
            .map_err(|_| std::io::Error::new(std::io::ErrorKind::InvalidInput, "layout axis exceeds u32"))?;
        out.write_all(&dim.to_le_bytes())?;
    }
    for v in draws.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()
}

pub fn read_binary<R: Read>(mut input: R) -> Result<ChainDraws, DrawsError> {
    let mut header = [0u8; 16];
    input.read_exact(&mut header).map_err(|_| DrawsError::Parse {
        line: 0,
        message: "binary header truncated".into(),
    })?;
    let dim = |i: usize| u32::from_le_bytes(header[4 * i..4 * i + 4].try_into().unwrap()) as usize;
    let layout = SuperchainLayout::new(dim(0), dim(1), dim(2), dim(3))?;
    let mut body = Vec::new();
    input.read_to_end(&mut body)?;
    if body.len() != layout.total_values() * 8 {
        return Err(DrawsError::ShapeMismatch {
            expected: layout.total_values(),
            actual: body.len() / 8,
        });
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    ChainDraws::new(layout, values)
}

/// Read a draw file, choosing the format from the extension (`.csv` or binary otherwise).
pub fn read_draws_file(path: &Path) -> Result<ChainDraws, DrawsError> {
    let file = File::open(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        read_csv(file)
    } else {
        read_binary(BufReader::new(file))
    }
}

impl ChainDraws {
    pub fn write_csv_file(&self, path: &Path) -> std::io::Result<()> {
        write_csv(self, BufWriter::new(File::create(path)?))
    }

    pub fn write_binary_file(&self, path: &Path) -> std::io::Result<()> {
        write_binary(self, BufWriter::new(File::create(path)?))
    }
}
