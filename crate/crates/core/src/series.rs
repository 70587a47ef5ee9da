//! Multivariate time series container and CSV ingestion.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A real p-variate sample of length N, stored as one row per component.
///
/// All entries are finite; `p >= 1` and `n_samples >= 1` are enforced at
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    components: Vec<Vec<f64>>,
}

impl TimeSeries {
    /// Build a series from component rows (each of equal length).
    pub fn from_components(components: Vec<Vec<f64>>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidConfig("series needs at least one component".into()));
        }
        let n = components[0].len();
        if n == 0 {
            return Err(Error::InvalidConfig("series needs at least one sample".into()));
        }
        if components.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidConfig("component rows have unequal lengths".into()));
        }
        for (a, row) in components.iter().enumerate() {
            if let Some(t) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    context: format!("component {a}, sample {t}"),
                });
            }
        }
        Ok(TimeSeries { components })
    }

    /// Scalar (p = 1) series.
    pub fn scalar(values: Vec<f64>) -> Result<Self> {
        Self::from_components(vec![values])
    }

    pub fn p(&self) -> usize {
        self.components.len()
    }

    pub fn n_samples(&self) -> usize {
        self.components[0].len()
    }

    pub fn component(&self, a: usize) -> &[f64] {
        &self.components[a]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    /// Entry x_a(t), zero-based in both indices.
    #[inline]
    pub fn value(&self, a: usize, t: usize) -> f64 {
        self.components[a][t]
    }

    /// Per-component sample means.
    pub fn means(&self) -> Vec<f64> {
        self.components
            .iter()
            .map(|row| row.iter().sum::<f64>() / row.len() as f64)
            .collect()
    }

    /// Subtract the sample mean of each component.
    pub fn centered(&self) -> TimeSeries {
        let means = self.means();
        let components = self
            .components
            .iter()
            .zip(&means)
            .map(|(row, m)| row.iter().map(|v| v - m).collect())
            .collect();
        TimeSeries { components }
    }

    /// Apply a p x p linear map to every sample: x(t) -> A x(t).
    pub fn linear_map(&self, a: &DMatrix<f64>) -> Result<TimeSeries> {
        let p = self.p();
        if a.nrows() != p || a.ncols() != p {
            return Err(Error::InvalidConfig(format!(
                "linear map must be {p}x{p}, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let n = self.n_samples();
        let mut out = vec![vec![0.0; n]; p];
        for t in 0..n {
            for r in 0..p {
                let mut acc = 0.0;
                for c in 0..p {
                    acc += a[(r, c)] * self.components[c][t];
                }
                out[r][t] = acc;
            }
        }
        TimeSeries::from_components(out)
    }

    /// Read a CSV file: one column per component, one row per time step.
    ///
    /// A header row is detected by attempting to parse the first record as
    /// numbers; if that fails the record is treated as a header. Decimal
    /// point is '.', no thousands separators.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io_at(path, e))?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(BufReader::new(file));

        let mut columns: Vec<Vec<f64>> = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            if record.is_empty() || (record.len() == 1 && record[0].is_empty()) {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                record.iter().map(|f| f.parse::<f64>()).collect();
            match parsed {
                Ok(row) => {
                    if columns.is_empty() {
                        columns = vec![Vec::new(); row.len()];
                    }
                    if row.len() != columns.len() {
                        return Err(Error::InvalidConfig(format!(
                            "row {} has {} fields, expected {}",
                            i + 1,
                            row.len(),
                            columns.len()
                        )));
                    }
                    for (col, v) in columns.iter_mut().zip(row) {
                        col.push(v);
                    }
                }
                Err(_) if i == 0 => continue, // header row
                Err(_) => {
                    let bad = record
                        .iter()
                        .find(|f| f.parse::<f64>().is_err())
                        .unwrap_or("")
                        .to_string();
                    return Err(Error::CsvParse {
                        line: i + 1,
                        value: bad,
                    });
                }
            }
        }
        if columns.is_empty() || columns[0].is_empty() {
            return Err(Error::InvalidConfig("CSV contains no data rows".into()));
        }
        TimeSeries::from_components(columns)
    }

    /// Write the series as CSV with an `x1,x2,...` header.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io_at(path, e))?;
        let mut w = BufWriter::new(file);
        let header: Vec<String> = (1..=self.p()).map(|a| format!("x{a}")).collect();
        writeln!(w, "{}", header.join(",")).map_err(|e| Error::io_at(path, e))?;
        for t in 0..self.n_samples() {
            let row: Vec<String> = (0..self.p())
                .map(|a| format!("{:.17e}", self.components[a][t]))
                .collect();
            writeln!(w, "{}", row.join(",")).map_err(|e| Error::io_at(path, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        let err = TimeSeries::scalar(vec![1.0, f64::NAN]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn rejects_ragged_rows() {
        let err = TimeSeries::from_components(vec![vec![1.0, 2.0], vec![3.0]]).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }

    #[test]
    fn centering_removes_means() {
        let x = TimeSeries::from_components(vec![vec![1.0, 2.0, 3.0], vec![-1.0, 0.0, 7.0]])
            .unwrap();
        let c = x.centered();
        for m in c.means() {
            assert!(m.abs() < 1e-15);
        }
    }

    #[test]
    fn csv_round_trip_with_header_detection() {
        let dir = std::env::temp_dir().join("mardia_series_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rt.csv");
        let x = TimeSeries::from_components(vec![
            vec![1.5, -2.25, 0.125],
            vec![0.0, 3.5, -1.0],
        ])
        .unwrap();
        x.write_csv(&path).unwrap();
        let y = TimeSeries::read_csv(&path).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn csv_without_header() {
        let dir = std::env::temp_dir().join("mardia_series_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("nohdr.csv");
        std::fs::write(&path, "1.0,2.0\n3.0,4.0\n").unwrap();
        let x = TimeSeries::read_csv(&path).unwrap();
        assert_eq!(x.p(), 2);
        assert_eq!(x.n_samples(), 2);
        assert_eq!(x.value(1, 1), 4.0);
    }

    #[test]
    fn csv_bad_value_reports_line() {
        let dir = std::env::temp_dir().join("mardia_series_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.csv");
        std::fs::write(&path, "a,b\n1.0,2.0\n3.0,oops\n").unwrap();
        let err = TimeSeries::read_csv(&path).unwrap_err();
        assert!(matches!(err, Error::CsvParse { line: 3, .. }));
    }
}
