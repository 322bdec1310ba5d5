//! Benchmark models with reference indices and their input samplers.

pub mod distributions;
pub mod dyke;
pub mod gsobol;

pub use distributions::{sample_distribution, DistributionSpec};
pub use dyke::{dyke_eval, DykeConfig, DykeOutput, DYKE_INPUT_NAMES};
pub use gsobol::{gsobol_eval, gsobol_exact_indices, GSobolSpec};

use crate::data::Dataset;
use crate::error::{NpError, Result};
use crate::rng::RandomStream;
use crate::util::StableSum;

/// A benchmark model: input distributions plus a deterministic evaluator.
#[derive(Debug, Clone)]
pub enum Model {
    GSobol(GSobolSpec),
    Dyke(DykeConfig, DykeOutput),
}

impl Model {
    pub fn n_inputs(&self) -> usize {
        match self {
            Model::GSobol(spec) => spec.dim(),
            Model::Dyke(..) => 8,
        }
    }

    pub fn input_names(&self) -> Vec<String> {
        match self {
            Model::GSobol(spec) => (1..=spec.dim()).map(|i| format!("x{i}")).collect(),
            Model::Dyke(..) => DYKE_INPUT_NAMES.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn response_name(&self) -> String {
        match self {
            Model::GSobol(_) => "y".into(),
            Model::Dyke(_, DykeOutput::S) => "S".into(),
            Model::Dyke(_, DykeOutput::Cp) => "Cp".into(),
        }
    }

    pub fn input_distribution(&self, column: usize) -> DistributionSpec {
        match self {
            Model::GSobol(_) => DistributionSpec::Uniform { lo: 0.0, hi: 1.0 },
            Model::Dyke(cfg, _) => cfg.distributions[column],
        }
    }

    pub fn eval_row(&self, row: &[f64]) -> Result<f64> {
        match self {
            Model::GSobol(spec) => gsobol_eval(row, spec),
            Model::Dyke(cfg, output) => {
                let inputs: &[f64; 8] = row.try_into().map_err(|_| NpError::LengthMismatch {
                    expected: 8,
                    got: row.len(),
                })?;
                let (s, cp) = dyke_eval(inputs, cfg)?;
                Ok(match output {
                    DykeOutput::S => s,
                    DykeOutput::Cp => cp,
                })
            }
        }
    }

    /// Reference first-order indices: exact for g-Sobol, pick-freeze Monte
    /// Carlo for the dyke outputs (no closed form exists).
    pub fn reference_indices(&self, pickfreeze_n: usize, rng: RandomStream) -> Result<Vec<f64>> {
        match self {
            Model::GSobol(spec) => Ok(gsobol_exact_indices(spec)),
            Model::Dyke(..) => (0..self.n_inputs())
                .map(|i| pickfreeze_oracle(self, i, pickfreeze_n, rng.child(i as u64)))
                .collect(),
        }
    }
}

fn sample_design(model: &Model, n: usize, rng: RandomStream) -> Result<Vec<Vec<f64>>> {
    (0..model.n_inputs())
        .map(|c| sample_distribution(&model.input_distribution(c), n, rng.child(c as u64)))
        .collect()
}

fn eval_rows(model: &Model, design: &[Vec<f64>], n: usize) -> Result<Vec<f64>> {
    let p = design.len();
    let mut row = vec![0.0; p];
    (0..n)
        .map(|k| {
            for c in 0..p {
                row[c] = design[c][k];
            }
            model.eval_row(&row)
        })
        .collect()
}

/// Sample a design column-wise (child stream per column) and evaluate the
/// response row-wise.
pub fn generate_dataset(model: &Model, n: usize, rng: RandomStream) -> Result<Dataset> {
    if n < 2 {
        return Err(NpError::InvalidSample(
            "dataset generation needs n >= 2".into(),
        ));
    }
    let design = sample_design(model, n, rng)?;
    let response = eval_rows(model, &design, n)?;
    Dataset::new(
        model.input_names(),
        design,
        model.response_name(),
        response,
    )
}

/// Monte Carlo pick-freeze estimate of the first-order index of input `i`:
/// two independent designs share (freeze) column `i`, and the index is the
/// normalized covariance of the paired outputs.
pub fn pickfreeze_oracle(model: &Model, i: usize, n: usize, rng: RandomStream) -> Result<f64> {
    let p = model.n_inputs();
    if i >= p {
        return Err(NpError::IndexOutOfRange { index: i, n: p });
    }
    if n < 100 {
        return Err(NpError::InvalidSample(
            "pick-freeze needs at least 100 evaluations".into(),
        ));
    }
    let design = sample_design(model, n, rng)?;
    let mut picked = (0..p)
        .map(|c| sample_distribution(&model.input_distribution(c), n, rng.child((p + c) as u64)))
        .collect::<Result<Vec<Vec<f64>>>>()?;
    picked[i] = design[i].clone();

    let y = eval_rows(model, &design, n)?;
    let y_frozen = eval_rows(model, &picked, n)?;

    let mut cross = StableSum::default();
    let mut mean = StableSum::default();
    let mut square = StableSum::default();
    for (a, b) in y.iter().zip(&y_frozen) {
        cross.add(a * b);
        mean.add((a + b) / 2.0);
        square.add((a * a + b * b) / 2.0);
    }
    let nf = n as f64;
    let m = mean.value() / nf;
    let num = cross.value() / nf - m * m;
    let den = square.value() / nf - m * m;
    if den <= 1e-14 * (1.0 + square.value().abs() / nf) {
        return Err(NpError::DegenerateResponse);
    }
    Ok(num / den)
}
