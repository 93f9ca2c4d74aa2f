//! Column-oriented numeric data with CSV import and export.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("column `{name}` has {len} rows, expected {expected}")]
    Ragged {
        name: String,
        len: usize,
        expected: usize,
    },
    #[error("row {row}, column `{column}`: `{value}` is not a finite number")]
    BadValue {
        row: usize,
        column: String,
        value: String,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Where a simulated dataset came from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub model: Option<String>,
    pub seed: Option<u64>,
    pub replication: Option<u64>,
    pub interventions: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = (S, Vec<f64>)>) -> Result<Self, DataError> {
        let mut d = Dataset::default();
        for (name, col) in columns {
            d.push_column(name, col)?;
        }
        Ok(d)
    }

    pub fn push_column<S: Into<String>>(&mut self, name: S, col: Vec<f64>) -> Result<(), DataError> {
        let name = name.into();
        if self.names.contains(&name) {
            return Err(DataError::DuplicateColumn(name));
        }
        if let Some(first) = self.columns.first() {
            if first.len() != col.len() {
                return Err(DataError::Ragged {
                    name,
                    len: col.len(),
                    expected: first.len(),
                });
            }
        }
        self.names.push(name);
        self.columns.push(col);
        Ok(())
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn column(&self, name: &str) -> Result<&[f64], DataError> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| DataError::UnknownColumn(name.to_string()))
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.names.iter().any(|n| n == name)
    }

    /// True when every value is 0 or 1.
    pub fn is_binary(&self, name: &str) -> Result<bool, DataError> {
        Ok(self.column(name)?.iter().all(|&v| v == 0.0 || v == 1.0))
    }

    /// Rows for which `keep(row_index)` holds.
    pub fn filter_rows(&self, mut keep: impl FnMut(usize) -> bool) -> Dataset {
        let idx: Vec<usize> = (0..self.n_rows()).filter(|&i| keep(i)).collect();
        Dataset {
            names: self.names.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| idx.iter().map(|&i| c[i]).collect())
                .collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Rows where every named column equals `value`.
    pub fn filter_equal(&self, columns: &[String], value: f64) -> Result<Dataset, DataError> {
        let cols: Vec<&[f64]> = columns
            .iter()
            .map(|c| self.column(c))
            .collect::<Result<_, _>>()?;
        Ok(self.filter_rows(|i| cols.iter().all(|c| c[i] == value)))
    }

    /// Reorders rows by `order` (a permutation of row indices).
    pub fn permute_rows(&self, order: &[usize]) -> Dataset {
        Dataset {
            names: self.names.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| order.iter().map(|&i| c[i]).collect())
                .collect(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn mean(&self, name: &str) -> Result<f64, DataError> {
        let c = self.column(name)?;
        Ok(c.iter().sum::<f64>() / c.len() as f64)
    }

    /// CSV with a header row. Values print with shortest round-trip form.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), DataError> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(&self.names)?;
        let mut rec = Vec::with_capacity(self.n_cols());
        for i in 0..self.n_rows() {
            rec.clear();
            rec.extend(self.columns.iter().map(|c| c[i].to_string()));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Dataset, DataError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let names: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut columns = vec![Vec::new(); names.len()];
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            for (j, field) in rec.iter().enumerate() {
                let v: f64 = field.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                    DataError::BadValue {
                        row: row + 1,
                        column: names[j].clone(),
                        value: field.to_string(),
                    }
                })?;
                columns[j].push(v);
            }
        }
        Dataset::new(names.into_iter().zip(columns))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let d = Dataset::new([("x", vec![0.1, 2.0, -3.5]), ("y", vec![1.0, 0.0, 1.0])]).unwrap();
        let text = d.to_csv_string();
        assert!(text.starts_with("x,y\n0.1,1\n"));
        let back = Dataset::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back.column("x").unwrap(), d.column("x").unwrap());
        assert!(back.is_binary("y").unwrap());
        assert!(!back.is_binary("x").unwrap());
    }

    #[test]
    fn bad_input() {
        assert!(matches!(
            Dataset::read_csv("x\n1\nfoo\n".as_bytes()),
            Err(DataError::BadValue { row: 2, .. })
        ));
        assert!(Dataset::new([("x", vec![1.0]), ("x", vec![2.0])]).is_err());
        assert!(Dataset::new([("x", vec![1.0]), ("y", vec![])]).is_err());
    }

    #[test]
    fn filtering() {
        let d = Dataset::new([("c", vec![1.0, 0.0, 1.0]), ("v", vec![5.0, 6.0, 7.0])]).unwrap();
        let f = d.filter_equal(&["c".into()], 1.0).unwrap();
        assert_eq!(f.column("v").unwrap(), [5.0, 7.0]);
        assert_eq!(d.permute_rows(&[2, 0, 1]).column("v").unwrap(), [7.0, 5.0, 6.0]);
    }
}
