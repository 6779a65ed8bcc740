//! Empirical measures with uniform weights.

use std::path::Path;

use crate::{Error, Result};

/// `N` points in `R^d`, stored row-major; each point carries weight `1/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleCloud {
    data: Vec<f64>,
    n: usize,
    d: usize,
}

impl ParticleCloud {
    /// Wraps a flat row-major buffer of `n·d` coordinates.
    pub fn new(data: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if data.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if data.len() % d != 0 {
            return Err(Error::DimensionMismatch { expected: d, got: data.len() % d });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let n = data.len() / d;
        Ok(Self { data, n, d })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyCloud)?;
        let d = first.as_ref().len();
        let mut data = Vec::with_capacity(rows.len() * d);
        for row in rows {
            let row = row.as_ref();
            if row.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: row.len() });
            }
            data.extend_from_slice(row);
        }
        Self::new(data, d)
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.n
    }

    /// Always false: a cloud holds at least one point.
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> impl DoubleEndedIterator<Item = &[f64]> + ExactSizeIterator + '_ {
        self.data.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Mean of the points.
    pub fn centroid(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.d];
        for p in self.points() {
            for (ci, pi) in c.iter_mut().zip(p) {
                *ci += pi;
            }
        }
        let inv = 1.0 / self.n as f64;
        c.iter_mut().for_each(|v| *v *= inv);
        c
    }

    /// Returns a copy with every point shifted by `shift`.
    pub fn translated(&self, shift: &[f64]) -> Result<Self> {
        self.check_dim(shift.len())?;
        let mut data = self.data.clone();
        for p in data.chunks_exact_mut(self.d) {
            for (pi, si) in p.iter_mut().zip(shift) {
                *pi += si;
            }
        }
        Self::new(data, self.d)
    }

    /// Concatenation of two clouds of equal dimension.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.d)?;
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Self::new(data, self.d)
    }

    pub(crate) fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: d });
        }
        Ok(())
    }

    /// Reads a headerless CSV file with one point per row.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let shown = path.display().to_string();
        let csv_err = |source| Error::Csv { path: shown.clone(), source };
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(csv_err)?;
        let mut data = Vec::new();
        let mut d = None;
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(csv_err)?;
            if *d.get_or_insert(record.len()) != record.len() {
                return Err(Error::CsvShape {
                    path: shown.clone(),
                    msg: format!("row {} has {} columns, expected {}", line + 1, record.len(), d.unwrap()),
                });
            }
            for field in record.iter() {
                let v: f64 = field.parse().map_err(|_| Error::CsvShape {
                    path: shown.clone(),
                    msg: format!("row {}: cannot parse {field:?} as a number", line + 1),
                })?;
                data.push(v);
            }
        }
        let d = d.ok_or(Error::EmptyCloud)?;
        Self::new(data, d)
    }

    /// Writes the cloud as headerless CSV, one point per row, in shortest
    /// round-trip float formatting.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let csv_err = |source| Error::Csv { path: path.display().to_string(), source };
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(csv_err)?;
        for p in self.points() {
            writer.write_record(p.iter().map(|v| v.to_string())).map_err(csv_err)?;
        }
        writer.flush().map_err(|e| csv_err(e.into()))?;
        Ok(())
    }
}
