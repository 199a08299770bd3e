//! Field files: a short text header followed by raw little-endian `f64`s.
//!
//! ```text
//! TPNS-FIELD 1
//! dims <n1> <n2> <n3> <m>
//! box <l1> <l2> <l3>
//! period <T>
//! lambda <lambda>
//! components <1|3>
//! endian little
//! end
//! <components * n1 * n2 * n3 * m little-endian f64>
//! ```
//!
//! Samples are component-major; within a component they follow the grid's
//! node order (time slowest, then `x3`, `x2`, `x1` fastest). Floats in the
//! header use Rust's shortest round-trip formatting, so a written header
//! rebuilds a bit-identical grid.

use std::path::Path;
use std::sync::Arc;

use thiserror::Error;
use tpns::{Grid, Params, PhysicalField};

pub const MAGIC: &str = "TPNS-FIELD 1";
const MAX_HEADER: usize = 4096;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("malformed field file: {0}")]
    Malformed(String),
    #[error("field grid {found} does not match the declared grid {expected}")]
    GridMismatch { expected: String, found: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn malformed(msg: impl Into<String>) -> FieldError {
    FieldError::Malformed(msg.into())
}

/// Everything the header declares.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldHeader {
    pub n_space: [usize; 3],
    pub n_time: usize,
    pub box_len: [f64; 3],
    pub period: f64,
    pub lambda: f64,
    pub components: usize,
}

impl FieldHeader {
    pub fn of(field: &PhysicalField) -> Self {
        let g = field.grid();
        Self {
            n_space: g.n_space(),
            n_time: g.n_time(),
            box_len: g.box_len(),
            period: g.period(),
            lambda: g.lambda(),
            components: field.components(),
        }
    }

    pub fn grid(&self) -> Result<Arc<Grid>, FieldError> {
        let params = Params::new(self.lambda, self.period).map_err(|e| malformed(e.to_string()))?;
        Grid::new(self.box_len, self.n_space, self.n_time, params).map_err(|e| malformed(e.to_string()))
    }

    /// Number of `f64` values in the body, if it fits in memory arithmetic.
    pub fn value_count(&self) -> Option<usize> {
        self.n_space
            .iter()
            .try_fold(self.n_time, |acc, n| acc.checked_mul(*n))
            .and_then(|n| n.checked_mul(self.components))
    }

    fn describe(&self) -> String {
        let [a, b, c] = self.n_space;
        let [x, y, z] = self.box_len;
        format!("{a}x{b}x{c}x{} box {x}x{y}x{z} period {} lambda {}", self.n_time, self.period, self.lambda)
    }

    fn to_text(&self) -> String {
        let [a, b, c] = self.n_space;
        let [x, y, z] = self.box_len;
        format!(
            "{MAGIC}\ndims {a} {b} {c} {}\nbox {x:?} {y:?} {z:?}\nperiod {:?}\nlambda {:?}\ncomponents {}\nendian little\nend\n",
            self.n_time, self.period, self.lambda, self.components
        )
    }
}

pub fn encode(field: &PhysicalField) -> Vec<u8> {
    let header = FieldHeader::of(field).to_text();
    let mut out = Vec::with_capacity(header.len() + 8 * field.components() * field.grid().len());
    out.extend_from_slice(header.as_bytes());
    for c in 0..field.components() {
        for v in field.component(c) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn expect_line<'a>(lines: &mut impl Iterator<Item = &'a str>, key: &str) -> Result<Vec<&'a str>, FieldError> {
    let line = lines.next().ok_or_else(|| malformed(format!("header ends before '{key}'")))?;
    let mut words = line.split_ascii_whitespace();
    match words.next() {
        Some(k) if k == key => Ok(words.collect()),
        _ => Err(malformed(format!("expected '{key}' line, got '{line}'"))),
    }
}

fn numbers<T: std::str::FromStr>(words: &[&str], count: usize, key: &str) -> Result<Vec<T>, FieldError> {
    if words.len() != count {
        return Err(malformed(format!("'{key}' needs {count} values, got {}", words.len())));
    }
    words.iter().map(|w| w.parse().map_err(|_| malformed(format!("'{key}': cannot parse '{w}'")))).collect()
}

/// Splits `bytes` into a parsed header and the raw body.
pub fn decode_header(bytes: &[u8]) -> Result<(FieldHeader, &[u8]), FieldError> {
    let marker = b"\nend\n";
    let limit = bytes.len().min(MAX_HEADER);
    let end = bytes[..limit]
        .windows(marker.len())
        .position(|w| w == marker)
        .ok_or_else(|| malformed("no 'end' line within the first 4096 bytes"))?;
    let text = std::str::from_utf8(&bytes[..end]).map_err(|_| malformed("header is not UTF-8"))?;
    let body = &bytes[end + marker.len()..];
    let mut lines = text.lines();
    if lines.next() != Some(MAGIC) {
        return Err(malformed(format!("missing magic '{MAGIC}'")));
    }
    let dims: Vec<usize> = numbers(&expect_line(&mut lines, "dims")?, 4, "dims")?;
    let box_len: Vec<f64> = numbers(&expect_line(&mut lines, "box")?, 3, "box")?;
    let period: Vec<f64> = numbers(&expect_line(&mut lines, "period")?, 1, "period")?;
    let lambda: Vec<f64> = numbers(&expect_line(&mut lines, "lambda")?, 1, "lambda")?;
    let components: Vec<usize> = numbers(&expect_line(&mut lines, "components")?, 1, "components")?;
    let endian = expect_line(&mut lines, "endian")?;
    if endian != ["little"] {
        return Err(malformed(format!("unsupported endianness {endian:?}")));
    }
    if let Some(extra) = lines.next() {
        return Err(malformed(format!("unexpected header line '{extra}'")));
    }
    if components[0] != 1 && components[0] != 3 {
        return Err(malformed(format!("components must be 1 or 3, got {}", components[0])));
    }
    let header = FieldHeader {
        n_space: [dims[0], dims[1], dims[2]],
        n_time: dims[3],
        box_len: [box_len[0], box_len[1], box_len[2]],
        period: period[0],
        lambda: lambda[0],
        components: components[0],
    };
    let expected = header.value_count().and_then(|n| n.checked_mul(8)).ok_or_else(|| malformed("dims overflow"))?;
    if body.len() != expected {
        return Err(malformed(format!("body has {} bytes, header implies {expected}", body.len())));
    }
    Ok((header, body))
}

/// Parses a complete field file, building its grid from the header.
pub fn decode(bytes: &[u8]) -> Result<PhysicalField, FieldError> {
    let (header, body) = decode_header(bytes)?;
    let grid = header.grid()?;
    build(&header, body, grid)
}

/// Parses a field file that must live on `grid`.
pub fn decode_on(bytes: &[u8], grid: &Arc<Grid>) -> Result<PhysicalField, FieldError> {
    let (header, body) = decode_header(bytes)?;
    let declared =
        FieldHeader { components: header.components, ..FieldHeader::of(&PhysicalField::zeros(grid.clone(), 1)) };
    if header != declared {
        return Err(FieldError::GridMismatch { expected: declared.describe(), found: header.describe() });
    }
    build(&header, body, grid.clone())
}

fn build(header: &FieldHeader, body: &[u8], grid: Arc<Grid>) -> Result<PhysicalField, FieldError> {
    let len = grid.len();
    let values: Vec<f64> = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let data = values.chunks(len).map(<[f64]>::to_vec).collect::<Vec<_>>();
    debug_assert_eq!(data.len(), header.components);
    PhysicalField::new(grid, data).map_err(|e| malformed(e.to_string()))
}

pub fn write(path: &Path, field: &PhysicalField) -> Result<(), FieldError> {
    std::fs::write(path, encode(field)).map_err(|source| FieldError::Io { path: path.display().to_string(), source })
}

pub fn read(path: &Path) -> Result<Vec<u8>, FieldError> {
    std::fs::read(path).map_err(|source| FieldError::Io { path: path.display().to_string(), source })
}
