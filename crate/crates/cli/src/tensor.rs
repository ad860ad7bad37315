//! `CFM1` binary tensors and CSV ingestion.
//!
//! Binary layout: magic `CFM1`, `u32` LE version (1), `u8` dtype (1 = f64,
//! 2 = i64), `u8` rank (1 or 2), two zero bytes, then `rank` LE `u64`
//! dims and the row-major LE payload.

use std::fs;
use std::path::Path;

use condmetrics::data::ROW_SUM_TOLERANCE;
use condmetrics::{FeatureMatrix, LabelVector, ProbabilityMatrix};
use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"CFM1";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Dtype {
    F64 = 1,
    I64 = 2,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F64(Vec<f64>),
    I64(Vec<i64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: TensorData,
}

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("bad magic {found:02x?} at offset 0, expected \"CFM1\"")]
    BadMagic { found: Vec<u8> },
    #[error("unsupported version {version} at offset 4")]
    UnsupportedVersion { version: u32 },
    #[error("malformed header at offset {offset}: {reason}")]
    BadHeader { offset: usize, reason: String },
    #[error("truncated payload: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("trailing data: expected {expected} bytes, found {actual}")]
    TrailingData { expected: usize, actual: usize },
    #[error("non-finite value at byte offset {offset}")]
    NonFinite { offset: usize },
    #[error("non-finite value at row {row}, column {column}")]
    NonFiniteCell { row: usize, column: usize },
    #[error("row {row}: probability {value} at column {column} outside [0, 1]")]
    ProbabilityRange { row: usize, column: usize, value: f64 },
    #[error("row {row}: probabilities sum to {sum}, expected 1 within {ROW_SUM_TOLERANCE:e}")]
    RowSum { row: usize, sum: f64 },
    #[error("label at index {index} is {value}, expected an integer in [0, {classes})")]
    BadLabel { index: usize, value: String, classes: usize },
    #[error("expected {expected}, found {found}")]
    WrongShape { expected: &'static str, found: String },
    #[error("CSV line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl TensorError {
    /// Stable identifier for each failure kind.
    pub fn code(&self) -> &'static str {
        match self {
            TensorError::BadMagic { .. } => "bad-magic",
            TensorError::UnsupportedVersion { .. } => "bad-version",
            TensorError::BadHeader { .. } => "bad-header",
            TensorError::Truncated { .. } => "truncated",
            TensorError::TrailingData { .. } => "trailing-data",
            TensorError::NonFinite { .. } | TensorError::NonFiniteCell { .. } => "non-finite",
            TensorError::ProbabilityRange { .. } => "probability-range",
            TensorError::RowSum { .. } => "row-sum",
            TensorError::BadLabel { .. } => "bad-label",
            TensorError::WrongShape { .. } => "wrong-shape",
            TensorError::Csv { .. } => "csv",
            TensorError::Io(_) => "io",
        }
    }
}

type Result<T> = std::result::Result<T, TensorError>;

impl Tensor {
    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len());
        Self {
            dims: vec![rows, cols],
            data: TensorData::F64(data),
        }
    }

    pub fn labels(labels: &[usize]) -> Self {
        Self {
            dims: vec![labels.len()],
            data: TensorData::I64(labels.iter().map(|&l| l as i64).collect()),
        }
    }

    pub fn dtype(&self) -> Dtype {
        match self.data {
            TensorData::F64(_) => Dtype::F64,
            TensorData::I64(_) => Dtype::I64,
        }
    }

    fn describe(&self) -> String {
        let kind = match self.dtype() {
            Dtype::F64 => "float64",
            Dtype::I64 => "int64",
        };
        format!("{kind} tensor of shape {:?}", self.dims)
    }

    pub fn encode(&self) -> Vec<u8> {
        let elems: usize = self.dims.iter().product();
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.dims.len() + 8 * elems);
        out.extend(MAGIC);
        out.extend(VERSION.to_le_bytes());
        out.push(self.dtype() as u8);
        out.push(self.dims.len() as u8);
        out.extend([0, 0]);
        for &d in &self.dims {
            out.extend((d as u64).to_le_bytes());
        }
        match &self.data {
            TensorData::F64(v) => v.iter().for_each(|x| out.extend(x.to_le_bytes())),
            TensorData::I64(v) => v.iter().for_each(|x| out.extend(x.to_le_bytes())),
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || bytes[..4] != MAGIC {
            return Err(TensorError::BadMagic {
                found: bytes[..bytes.len().min(4)].to_vec(),
            });
        }
        if bytes.len() < HEADER_LEN {
            return Err(TensorError::Truncated {
                expected: HEADER_LEN,
                actual: bytes.len(),
            });
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(TensorError::UnsupportedVersion { version });
        }
        let dtype = match bytes[8] {
            1 => Dtype::F64,
            2 => Dtype::I64,
            other => {
                return Err(TensorError::BadHeader {
                    offset: 8,
                    reason: format!("unknown dtype code {other}"),
                })
            }
        };
        let rank = bytes[9] as usize;
        if !(1..=2).contains(&rank) {
            return Err(TensorError::BadHeader {
                offset: 9,
                reason: format!("rank {rank} not in {{1, 2}}"),
            });
        }
        if bytes[10..12] != [0, 0] {
            return Err(TensorError::BadHeader {
                offset: 10,
                reason: "padding bytes are not zero".into(),
            });
        }
        let dims_end = HEADER_LEN + 8 * rank;
        if bytes.len() < dims_end {
            return Err(TensorError::Truncated {
                expected: dims_end,
                actual: bytes.len(),
            });
        }
        let dims = bytes[HEADER_LEN..dims_end]
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()) as usize)
            .collect::<Vec<_>>();
        let expected = dims
            .iter()
            .try_fold(8usize, |acc, &d| acc.checked_mul(d))
            .and_then(|payload| payload.checked_add(dims_end))
            .ok_or_else(|| TensorError::BadHeader {
                offset: HEADER_LEN,
                reason: format!("dims {dims:?} overflow"),
            })?;
        if bytes.len() < expected {
            return Err(TensorError::Truncated {
                expected,
                actual: bytes.len(),
            });
        }
        if bytes.len() > expected {
            return Err(TensorError::TrailingData {
                expected,
                actual: bytes.len(),
            });
        }
        let payload = bytes[dims_end..].chunks_exact(8);
        let data = match dtype {
            Dtype::F64 => {
                let mut values = Vec::with_capacity(payload.len());
                for (i, c) in payload.enumerate() {
                    let v = f64::from_le_bytes(c.try_into().unwrap());
                    if !v.is_finite() {
                        return Err(TensorError::NonFinite {
                            offset: dims_end + 8 * i,
                        });
                    }
                    values.push(v);
                }
                TensorData::F64(values)
            }
            Dtype::I64 => TensorData::I64(payload.map(|c| i64::from_le_bytes(c.try_into().unwrap())).collect()),
        };
        Ok(Self { dims, data })
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Parses comma-separated numbers into an `rows x cols` float64 tensor.
/// A first record that is not entirely numeric is taken as a header.
pub fn parse_csv(text: &str) -> Result<Tensor> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| TensorError::Csv {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(i as u64 + 1, |p| p.line());
        let parsed: Vec<std::result::Result<f64, _>> = record.iter().map(str::parse::<f64>).collect();
        if i == 0 && parsed.iter().any(|p| p.is_err()) {
            continue;
        }
        if *cols.get_or_insert(parsed.len()) != parsed.len() {
            return Err(TensorError::Csv {
                line,
                message: format!("expected {} fields, found {}", cols.unwrap(), parsed.len()),
            });
        }
        for (column, (p, raw)) in parsed.into_iter().zip(record.iter()).enumerate() {
            let v = p.map_err(|_| TensorError::Csv {
                line,
                message: format!("field {column} ({raw:?}) is not a number"),
            })?;
            if !v.is_finite() {
                return Err(TensorError::NonFiniteCell { row: rows, column });
            }
            values.push(v);
        }
        rows += 1;
    }
    let cols = cols.unwrap_or(0);
    if rows == 0 || cols == 0 {
        return Err(TensorError::WrongShape {
            expected: "at least one numeric CSV row",
            found: "no data rows".into(),
        });
    }
    Ok(Tensor::matrix(rows, cols, values))
}

/// Reads a `.csv` file as CSV and anything else as a `CFM1` tensor.
pub fn read_tensor(path: &Path) -> Result<Tensor> {
    if is_csv(path) {
        parse_csv(&fs::read_to_string(path)?)
    } else {
        Tensor::decode(&fs::read(path)?)
    }
}

pub fn write_tensor(path: &Path, tensor: &Tensor) -> Result<()> {
    Ok(fs::write(path, tensor.encode())?)
}

fn float_matrix(t: Tensor, what: &'static str) -> Result<(usize, usize, Vec<f64>)> {
    match (t.dims.as_slice(), &t.data) {
        (&[r, c], TensorData::F64(_)) if r > 0 && c > 0 => match t.data {
            TensorData::F64(v) => Ok((r, c, v)),
            TensorData::I64(_) => unreachable!(),
        },
        _ => Err(TensorError::WrongShape {
            expected: what,
            found: t.describe(),
        }),
    }
}

pub fn load_features(path: &Path) -> Result<FeatureMatrix> {
    let (r, c, v) = float_matrix(read_tensor(path)?, "a non-empty float64 rank-2 feature matrix")?;
    Ok(FeatureMatrix::from_row_major(r, c, &v).expect("validated finite non-empty matrix"))
}

pub fn to_probabilities(t: Tensor) -> Result<ProbabilityMatrix> {
    let (r, k, v) = float_matrix(t, "a float64 rank-2 probability matrix")?;
    if k < 2 {
        return Err(TensorError::WrongShape {
            expected: "at least 2 probability columns",
            found: format!("{k}"),
        });
    }
    for (row, chunk) in v.chunks_exact(k).enumerate() {
        if let Some((column, &value)) = chunk.iter().enumerate().find(|(_, x)| !(0.0..=1.0).contains(*x)) {
            return Err(TensorError::ProbabilityRange { row, column, value });
        }
        let sum: f64 = chunk.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(TensorError::RowSum { row, sum });
        }
    }
    Ok(ProbabilityMatrix::from_row_major(r, k, v).expect("validated probability rows"))
}

pub fn load_probabilities(path: &Path) -> Result<ProbabilityMatrix> {
    to_probabilities(read_tensor(path)?)
}

/// Raw non-negative labels. Accepts int64 rank 1, or a single-column
/// float table of integral values (the CSV form).
pub fn to_labels(t: Tensor) -> Result<Vec<usize>> {
    let bad = |index: usize, value: String| TensorError::BadLabel {
        index,
        value,
        classes: usize::MAX,
    };
    match (t.dims.as_slice(), t.data) {
        (&[_], TensorData::I64(v)) => v
            .into_iter()
            .enumerate()
            .map(|(i, l)| usize::try_from(l).map_err(|_| bad(i, l.to_string())))
            .collect(),
        (&[_, 1], TensorData::F64(v)) => v
            .into_iter()
            .enumerate()
            .map(|(i, l)| {
                if l >= 0.0 && l.fract() == 0.0 && l < u32::MAX as f64 {
                    Ok(l as usize)
                } else {
                    Err(bad(i, l.to_string()))
                }
            })
            .collect(),
        (dims, data) => Err(TensorError::WrongShape {
            expected: "an int64 rank-1 label vector or a single CSV column",
            found: Tensor { dims: dims.to_vec(), data }.describe(),
        }),
    }
}

pub fn load_labels(path: &Path) -> Result<Vec<usize>> {
    to_labels(read_tensor(path)?)
}

/// Checks raw labels against the class count.
pub fn label_vector(raw: Vec<usize>, classes: usize) -> Result<LabelVector> {
    if let Some((index, &l)) = raw.iter().enumerate().find(|(_, &l)| l >= classes) {
        return Err(TensorError::BadLabel {
            index,
            value: l.to_string(),
            classes,
        });
    }
    Ok(LabelVector::new(raw, classes).expect("labels checked against class count"))
}

pub fn save_features(path: &Path, f: &FeatureMatrix) -> Result<()> {
    write_tensor(path, &Tensor::matrix(f.nrows(), f.ncols(), f.to_row_major()))
}

pub fn save_probabilities(path: &Path, p: &ProbabilityMatrix) -> Result<()> {
    write_tensor(path, &Tensor::matrix(p.nrows(), p.nclasses(), p.as_slice().to_vec()))
}

pub fn save_labels(path: &Path, l: &LabelVector) -> Result<()> {
    write_tensor(path, &Tensor::labels(l.as_slice()))
}
