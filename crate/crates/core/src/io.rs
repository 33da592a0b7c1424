//! File formats.
//!
//! * tensor: `{"dim": d, "entries": [...]}` with `d³` row-major entries
//! * components: `{"dim": d, "count": n, "columns": [[...], ...]}`
//! * samples: CSV with one row per sample and an optional header, or
//!   `{"dim": d, "rows": [[...], ...]}`
//! * mixture parameters: `{"weights": [...], "means": [[...]], "covariance": [[...]], "diagnostics": {...}}`

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cumulants::{CumulantError, SampleSet};
use crate::linalg::Matrix;
use crate::mixtures::DiscreteMixtureParams;
use crate::overcomplete::DecompositionResult;
use crate::scalar::Real;
use crate::tensor::{ComponentMatrix, SymTensor3, TensorError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot access {path}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("CSV line {line}: cannot parse {value:?} as a number")]
    CsvValue { line: usize, value: String },
    #[error("invalid content: {0}")]
    Invalid(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Samples(#[from] CumulantError),
}

fn open(path: &Path) -> Result<BufReader<File>, IoError> {
    File::open(path).map(BufReader::new).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    File::create(path).map(BufWriter::new).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

fn to_f64<T: Real>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.as_f64()).collect()
}

fn from_f64<T: Real>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| T::lit(x)).collect()
}

/// Pretty JSON with a trailing newline.
pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), IoError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|source| IoError::File {
            path: path.display().to_string(),
            source,
        })
}

pub fn read_json<D: for<'de> Deserialize<'de>>(path: &Path) -> Result<D, IoError> {
    Ok(serde_json::from_reader(open(path)?)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorFile {
    pub dim: usize,
    pub entries: Vec<f64>,
}

impl TensorFile {
    pub fn from_tensor<T: Real>(t: &SymTensor3<T>) -> Self {
        Self {
            dim: t.dim(),
            entries: to_f64(t.entries()),
        }
    }

    pub fn to_tensor<T: Real>(&self) -> Result<SymTensor3<T>, IoError> {
        Ok(SymTensor3::new(self.dim, from_f64(&self.entries))?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentsFile {
    pub dim: usize,
    pub count: usize,
    pub columns: Vec<Vec<f64>>,
}

impl ComponentsFile {
    pub fn from_components<T: Real>(a: &ComponentMatrix<T>) -> Self {
        Self {
            dim: a.dim(),
            count: a.count(),
            columns: a.columns().iter().map(|c| to_f64(c)).collect(),
        }
    }

    pub fn to_components<T: Real>(&self) -> Result<ComponentMatrix<T>, IoError> {
        if self.columns.len() != self.count {
            return Err(IoError::Invalid(format!(
                "count is {} but {} columns are listed",
                self.count,
                self.columns.len()
            )));
        }
        if self.columns.iter().flatten().any(|x| !x.is_finite()) {
            return Err(IoError::Invalid("non-finite component entry".into()));
        }
        Ok(ComponentMatrix::new(
            self.dim,
            self.columns.iter().map(|c| from_f64(c)).collect(),
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplesFile {
    pub dim: usize,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_tensor<T: Real>(path: &Path) -> Result<SymTensor3<T>, IoError> {
    read_json::<TensorFile>(path)?.to_tensor()
}

pub fn write_tensor<T: Real>(path: &Path, t: &SymTensor3<T>) -> Result<(), IoError> {
    write_json(path, &TensorFile::from_tensor(t))
}

pub fn read_components<T: Real>(path: &Path) -> Result<ComponentMatrix<T>, IoError> {
    read_json::<ComponentsFile>(path)?.to_components()
}

pub fn write_components<T: Real>(path: &Path, a: &ComponentMatrix<T>) -> Result<(), IoError> {
    write_json(path, &ComponentsFile::from_components(a))
}

/// Reads samples from a `.json` file or from CSV (any other extension).
pub fn read_samples<T: Real>(path: &Path) -> Result<SampleSet<T>, IoError> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        let f: SamplesFile = read_json(path)?;
        let rows = f.rows.iter().map(|r| from_f64(r)).collect();
        return Ok(SampleSet::new(f.dim, rows)?);
    }
    parse_samples_csv(open(path)?)
}

/// Parses CSV samples; a first line that does not parse as numbers is a header.
pub fn parse_samples_csv<T: Real, R: Read>(reader: R) -> Result<SampleSet<T>, IoError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut dim = None;
    let mut data = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parsed: Result<Vec<f64>, String> = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| s.to_string()))
            .collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if i == 0 => continue,
            Err(value) => return Err(IoError::CsvValue { line: i + 1, value }),
        };
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(IoError::Invalid(format!(
                    "line {} has {} fields, expected {d}",
                    i + 1,
                    values.len()
                )))
            }
            _ => {}
        }
        data.extend(values.into_iter().map(T::lit));
    }
    let dim = dim.ok_or_else(|| IoError::Invalid("no sample rows".into()))?;
    Ok(SampleSet::from_row_major(dim, data)?)
}

/// Writes samples as CSV with a `x0,x1,…` header. Values use the shortest
/// round-trip representation.
pub fn write_samples_csv<T: Real>(path: &Path, s: &SampleSet<T>) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record((0..s.dim()).map(|i| format!("x{i}")))?;
    for row in s.rows() {
        w.write_record(row.iter().map(|x| x.as_f64().to_string()))?;
    }
    w.flush().map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_samples_json<T: Real>(path: &Path, s: &SampleSet<T>) -> Result<(), IoError> {
    write_json(
        path,
        &SamplesFile {
            dim: s.dim(),
            rows: s.rows().map(to_f64).collect(),
        },
    )
}

/// Estimated or ground-truth mixture parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsFile<D = serde_json::Value> {
    pub weights: Vec<f64>,
    /// One mean per entry.
    pub means: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<D>,
}

impl<D> ParamsFile<D> {
    pub fn from_params<T: Real>(
        p: &DiscreteMixtureParams<T>,
        covariance: Option<&Matrix<T>>,
        diagnostics: Option<D>,
    ) -> Self {
        Self {
            weights: to_f64(p.weights()),
            means: p.means().columns().iter().map(|c| to_f64(c)).collect(),
            covariance: covariance.map(|m| m.to_rows().iter().map(|r| to_f64(r)).collect()),
            diagnostics,
        }
    }

    pub fn to_params<T: Real>(&self) -> Result<DiscreteMixtureParams<T>, IoError> {
        let dim = self.means.first().map_or(0, Vec::len);
        let means = ComponentMatrix::new(dim, self.means.iter().map(|c| from_f64(c)).collect())?;
        DiscreteMixtureParams::new(from_f64(&self.weights), means).map_err(|e| IoError::Invalid(e.to_string()))
    }

    pub fn covariance_matrix<T: Real>(&self) -> Option<Matrix<T>> {
        self.covariance
            .as_ref()
            .map(|rows| Matrix::from_rows(&rows.iter().map(|r| from_f64(r)).collect::<Vec<_>>()))
    }
}

/// Serialized decomposition output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionFile {
    pub dim: usize,
    pub components: Vec<Vec<f64>>,
    pub directions: Vec<Vec<f64>>,
    pub xi: Vec<f64>,
    pub residual_frobenius: f64,
    pub attempts: usize,
    pub probe_x: Vec<f64>,
    pub probe_y: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deflation_probes: Option<(Vec<f64>, Vec<f64>)>,
}

impl DecompositionFile {
    pub fn from_result<T: Real>(r: &DecompositionResult<T>) -> Self {
        Self {
            dim: r.components.dim(),
            components: r.components.columns().iter().map(|c| to_f64(c)).collect(),
            directions: r.directions.columns().iter().map(|c| to_f64(c)).collect(),
            xi: to_f64(&r.scales_xi),
            residual_frobenius: r.residual_frobenius.as_f64(),
            attempts: r.attempts_used,
            probe_x: to_f64(&r.probes.x),
            probe_y: to_f64(&r.probes.y),
            deflation_probes: r.probes.deflation.as_ref().map(|(a, b)| (to_f64(a), to_f64(b))),
        }
    }

    pub fn components<T: Real>(&self) -> Result<ComponentMatrix<T>, IoError> {
        Ok(ComponentMatrix::new(
            self.dim,
            self.components.iter().map(|c| from_f64(c)).collect(),
        )?)
    }
}
