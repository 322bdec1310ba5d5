//! Tabular dataset shared by the model generators, the estimators and the
//! CSV interfaces: named input columns plus one response column.

use crate::error::{NpError, Result};

#[derive(Debug, Clone)]
pub struct Dataset {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
    pub response_name: String,
    pub response: Vec<f64>,
}

impl Dataset {
    pub fn new(
        names: Vec<String>,
        columns: Vec<Vec<f64>>,
        response_name: String,
        response: Vec<f64>,
    ) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(NpError::LengthMismatch {
                expected: names.len(),
                got: columns.len(),
            });
        }
        let n = response.len();
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != n {
                return Err(NpError::InvalidSample(format!(
                    "column {name} has {} rows, response has {n}",
                    col.len()
                )));
            }
        }
        Ok(Dataset {
            names,
            columns,
            response_name,
            response,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.response.len()
    }

    pub fn n_inputs(&self) -> usize {
        self.columns.len()
    }
}
