use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::metric::FeatVec;

/// Vectors plus optional ground-truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub vectors: Vec<FeatVec>,
    pub labels: Option<Vec<usize>>,
    pub source: String,
    pub fingerprint: String,
}

impl Dataset {
    pub fn new(
        vectors: Vec<FeatVec>,
        labels: Option<Vec<usize>>,
        source: impl Into<String>,
    ) -> Result<Self> {
        let first = vectors
            .first()
            .ok_or(Error::EmptyInput("dataset has no vectors"))?;
        let dim = first.dim();
        if let Some(v) = vectors.iter().find(|v| v.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.dim(),
            });
        }
        if let Some(l) = &labels {
            if l.len() != vectors.len() {
                return Err(Error::LengthMismatch {
                    left: vectors.len(),
                    right: l.len(),
                });
            }
        }
        let fingerprint = fingerprint(&vectors);
        Ok(Dataset {
            vectors,
            labels,
            source: source.into(),
            fingerprint,
        })
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].dim()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// SHA-256 over the dimension and the little-endian bits of every value.
pub fn fingerprint(vectors: &[FeatVec]) -> String {
    let mut hasher = Sha256::new();
    hasher.update((vectors.len() as u64).to_le_bytes());
    if let Some(first) = vectors.first() {
        hasher.update((first.dim() as u64).to_le_bytes());
    }
    for v in vectors {
        for x in v.iter() {
            hasher.update(x.to_bits().to_le_bytes());
        }
    }
    hex::encode(hasher.finalize())
}

/// How the trailing label column is detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelColumn {
    /// Present iff the header row's last name is `label`.
    #[default]
    Auto,
    Present,
    Absent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CsvOptions {
    /// `None` detects a header from a non-numeric first row.
    pub has_header: Option<bool>,
    pub labels: LabelColumn,
}

/// Reads a CSV dataset from `path`.
pub fn read_csv(path: impl AsRef<Path>, options: CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv_from(file, options, path.display().to_string())
}

/// Reads a CSV dataset from any reader. Row order is preserved and the
/// dimension is taken from the first data row.
pub fn read_csv_from<R: Read>(reader: R, options: CsvOptions, source: String) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);

    let mut vectors = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;
    let mut has_labels = options.labels == LabelColumn::Present;
    let mut first = true;

    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            column: None,
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if first {
            first = false;
            let numeric = record.iter().all(|c| c.parse::<f64>().is_ok());
            let header = options.has_header.unwrap_or(!numeric);
            if header {
                if options.labels == LabelColumn::Auto {
                    has_labels = record
                        .iter()
                        .next_back()
                        .is_some_and(|name| name.eq_ignore_ascii_case("label"));
                }
                continue;
            }
        }

        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::Parse {
                line,
                column: None,
                message: format!("expected {expected} fields, found {}", record.len()),
            });
        }
        let n_features = if has_labels {
            expected.saturating_sub(1)
        } else {
            expected
        };
        if n_features == 0 {
            return Err(Error::Parse {
                line,
                column: None,
                message: "row has no feature columns".into(),
            });
        }
        let mut values = Vec::with_capacity(n_features);
        for (col, cell) in record.iter().take(n_features).enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                line,
                column: Some(col + 1),
                message: format!("`{cell}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    column: Some(col + 1),
                    message: format!("`{cell}` is not finite"),
                });
            }
            values.push(v);
        }
        if has_labels {
            let cell = &record[n_features];
            let label: usize = cell.parse().map_err(|_| Error::Parse {
                line,
                column: Some(expected),
                message: format!("label `{cell}` is not a non-negative integer"),
            })?;
            labels.push(label);
        }
        vectors.push(FeatVec::new(values)?);
    }

    if vectors.is_empty() {
        return Err(Error::EmptyInput("CSV contains no data rows"));
    }
    Dataset::new(vectors, has_labels.then_some(labels), source)
}

/// Writes a header (`x0,…,label`) and one row per vector at full precision.
pub fn write_csv_to<W: Write>(dataset: &Dataset, mut out: W) -> std::io::Result<()> {
    let dim = dataset.dim();
    let mut header: Vec<String> = (0..dim).map(|j| format!("x{j}")).collect();
    if dataset.labels.is_some() {
        header.push("label".into());
    }
    writeln!(out, "{}", header.join(","))?;
    for (i, v) in dataset.vectors.iter().enumerate() {
        let mut row: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
        if let Some(labels) = &dataset.labels {
            row.push(labels[i].to_string());
        }
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()
}

pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(dataset, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}
