//! Replication harness: runs the benchmark studies, aggregates bias,
//! variance and bandwidth summaries across replications, and serializes
//! everything to CSV/JSON.
//!
//! Determinism contract: every replication draws from a child stream keyed
//! by (model response, n, replication index), so results are identical for
//! any thread count and adding replications never changes earlier ones.

pub mod io;

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandwidth::SearchOverrides;
use crate::bootstrap::{BootstrapConfig, SigmaMode};
use crate::error::{NpError, Result};
use crate::kernels::{KernelOrder, KernelSpec};
use crate::models::{generate_dataset, DykeOutput, Model};
use crate::rng::RandomStream;
use crate::smoother::RegressionSample;
use crate::sobol::{sobol_boot, sobol_cv, EstimateMethod, SelectionMethod, SobolEstimate};

/// Sample count used for the pick-freeze reference truths of models with no
/// closed-form indices.
pub const REFERENCE_PICKFREEZE_N: usize = 100_000;

/// Full study configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model: Model,
    pub n_list: Vec<usize>,
    pub replications: usize,
    pub b: usize,
    pub kernel_orders: Vec<KernelOrder>,
    pub methods: Vec<SelectionMethod>,
    pub sigma_mode: SigmaMode,
    pub search: SearchOverrides,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn new(model: Model, output_dir: PathBuf) -> Self {
        ExperimentConfig {
            model,
            n_list: vec![100, 200, 300],
            replications: 100,
            b: 100,
            kernel_orders: vec![KernelOrder::Second, KernelOrder::Fourth],
            methods: vec![SelectionMethod::Cv, SelectionMethod::Boot],
            sigma_mode: SigmaMode::default(),
            search: SearchOverrides::default(),
            seed: 0,
            output_dir,
        }
    }

    /// Desk-scale run: 20 replications, 50 bootstrap replicates.
    pub fn fast(mut self) -> Self {
        self.replications = 20;
        self.b = 50;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(NpError::InvalidConfig("n_list must be nonempty".into()));
        }
        if self.replications < 1 {
            return Err(NpError::InvalidConfig("need at least one replication".into()));
        }
        if self.kernel_orders.is_empty() || self.methods.is_empty() {
            return Err(NpError::InvalidConfig(
                "need at least one kernel order and one method".into(),
            ));
        }
        Ok(())
    }
}

/// One estimate from one replication.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RawRecord {
    pub response: String,
    pub variable: String,
    pub n: usize,
    pub kernel_order: u8,
    pub method: EstimateMethod,
    pub replication: usize,
    pub estimate: f64,
    pub h: f64,
    pub flat_curve: bool,
    pub degenerate_points: usize,
}

/// A failed estimation task, excluded from aggregates but never dropped.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FailureRecord {
    pub response: String,
    pub variable: String,
    pub n: usize,
    pub kernel_order: u8,
    pub method: EstimateMethod,
    pub replication: usize,
    pub message: String,
}

/// Aggregate over replications for one (variable, n, order, method) cell.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReportRow {
    pub variable: String,
    pub n: usize,
    pub kernel_order: u8,
    pub method: EstimateMethod,
    pub bias: f64,
    pub variance: f64,
    pub mse: f64,
    pub mean_diff_boot_cv: Option<f64>,
    pub median_bandwidth: f64,
    pub flat_curve_rate: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TruthRecord {
    pub variable: String,
    pub truth: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct ReplicationReport {
    pub rows: Vec<ReportRow>,
    pub raw: Vec<RawRecord>,
    pub truths: Vec<TruthRecord>,
    pub failures: Vec<FailureRecord>,
}

fn fnv1a64(s: &str) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for byte in s.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x1_0000_0000_01b3);
    }
    hash
}

/// Thread pool capped by NPSOBOL_THREADS (0 or unset means all cores).
fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let n = match threads {
        Some(n) => n,
        None => std::env::var("NPSOBOL_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .unwrap_or(0),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| NpError::InvalidConfig(format!("thread pool: {e}")))
}

struct TaskOutput {
    raw: Vec<RawRecord>,
    failures: Vec<FailureRecord>,
}

fn run_one_replication(config: &ExperimentConfig, n: usize, rep: usize) -> TaskOutput {
    let response = config.model.response_name();
    let root = RandomStream::from_seed(config.seed).child(fnv1a64(&response));
    let data_stream = root.child(1).child(n as u64).child(rep as u64);
    let mut out = TaskOutput {
        raw: Vec::new(),
        failures: Vec::new(),
    };

    let data = match generate_dataset(&config.model, n, data_stream) {
        Ok(d) => d,
        Err(e) => {
            out.failures.push(FailureRecord {
                response,
                variable: "*".into(),
                n,
                kernel_order: 0,
                method: EstimateMethod::Cv,
                replication: rep,
                message: e.to_string(),
            });
            return out;
        }
    };

    for &order in &config.kernel_orders {
        let kernel = KernelSpec::epanechnikov(order);
        for (var_idx, name) in data.names.iter().enumerate() {
            let task = (|| -> Result<Vec<SobolEstimate>> {
                let sample = RegressionSample::new(
                    data.columns[var_idx].clone(),
                    data.response.clone(),
                )?;
                let search = config.search.resolve(&sample)?;
                let mut results = Vec::new();
                for &method in &config.methods {
                    let estimate = match method {
                        SelectionMethod::Cv => sobol_cv(&sample, kernel, &search)?,
                        SelectionMethod::Boot => {
                            let boot = BootstrapConfig::for_response(
                                config.b,
                                config.sigma_mode,
                                sample.y(),
                            )?;
                            let stream = root
                                .child(2)
                                .child(n as u64)
                                .child(rep as u64)
                                .child(order.as_flag() as u64)
                                .child(var_idx as u64);
                            sobol_boot(&sample, kernel, &search, &boot, stream)?
                        }
                    };
                    results.push(estimate);
                }
                Ok(results)
            })();
            match task {
                Ok(estimates) => {
                    for (est, &method) in estimates.iter().zip(&config.methods) {
                        let method_tag = match method {
                            SelectionMethod::Cv => EstimateMethod::Cv,
                            SelectionMethod::Boot => EstimateMethod::Boot,
                        };
                        out.raw.push(RawRecord {
                            response: response.clone(),
                            variable: name.clone(),
                            n,
                            kernel_order: order.as_flag(),
                            method: method_tag,
                            replication: rep,
                            estimate: est.value,
                            h: est.h.unwrap_or(f64::NAN),
                            flat_curve: est.flat_curve,
                            degenerate_points: est.degenerate_points,
                        });
                    }
                }
                Err(e) => {
                    for &method in &config.methods {
                        out.failures.push(FailureRecord {
                            response: response.clone(),
                            variable: name.clone(),
                            n,
                            kernel_order: order.as_flag(),
                            method: match method {
                                SelectionMethod::Cv => EstimateMethod::Cv,
                                SelectionMethod::Boot => EstimateMethod::Boot,
                            },
                            replication: rep,
                            message: e.to_string(),
                        });
                    }
                }
            }
        }
    }
    out
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn aggregate(
    config: &ExperimentConfig,
    truths: &[TruthRecord],
    raw: &[RawRecord],
    names: &[String],
) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    for &n in &config.n_list {
        for &order in &config.kernel_orders {
            for name in names {
                let truth = truths
                    .iter()
                    .find(|t| t.variable == *name)
                    .map(|t| t.truth)
                    .unwrap_or(f64::NAN);
                let cell = |method: EstimateMethod| -> Vec<&RawRecord> {
                    raw.iter()
                        .filter(|r| {
                            r.n == n
                                && r.kernel_order == order.as_flag()
                                && r.variable == *name
                                && r.method == method
                        })
                        .collect()
                };
                let cv = cell(EstimateMethod::Cv);
                let boot = cell(EstimateMethod::Boot);
                // Paired difference over replications where both succeeded.
                let mean_diff = if !cv.is_empty() && !boot.is_empty() {
                    let diffs: Vec<f64> = boot
                        .iter()
                        .filter_map(|b| {
                            cv.iter()
                                .find(|c| c.replication == b.replication)
                                .map(|c| b.estimate - c.estimate)
                        })
                        .collect();
                    if diffs.is_empty() {
                        None
                    } else {
                        Some(diffs.iter().sum::<f64>() / diffs.len() as f64)
                    }
                } else {
                    None
                };
                for records in [cv, boot] {
                    if records.is_empty() {
                        continue;
                    }
                    let estimates: Vec<f64> = records.iter().map(|r| r.estimate).collect();
                    let m = estimates.iter().sum::<f64>() / estimates.len() as f64;
                    let variance = if estimates.len() > 1 {
                        estimates.iter().map(|&v| (v - m) * (v - m)).sum::<f64>()
                            / (estimates.len() - 1) as f64
                    } else {
                        0.0
                    };
                    let bias = m - truth;
                    let mut hs: Vec<f64> = records.iter().map(|r| r.h).collect();
                    hs.sort_by(f64::total_cmp);
                    let flat_rate = records.iter().filter(|r| r.flat_curve).count() as f64
                        / records.len() as f64;
                    rows.push(ReportRow {
                        variable: name.clone(),
                        n,
                        kernel_order: order.as_flag(),
                        method: records[0].method,
                        bias,
                        variance,
                        mse: bias * bias + variance,
                        mean_diff_boot_cv: mean_diff,
                        median_bandwidth: median(&hs),
                        flat_curve_rate: flat_rate,
                    });
                }
            }
        }
    }
    rows
}

/// Run the replication study described by `config`, using the thread count
/// from NPSOBOL_THREADS.
pub fn run_replication_study(config: &ExperimentConfig) -> Result<ReplicationReport> {
    run_replication_study_with_threads(config, None)
}

/// As [`run_replication_study`] with an explicit thread cap (tests).
pub fn run_replication_study_with_threads(
    config: &ExperimentConfig,
    threads: Option<usize>,
) -> Result<ReplicationReport> {
    config.validate()?;
    let response = config.model.response_name();
    let root = RandomStream::from_seed(config.seed).child(fnv1a64(&response));
    let names = config.model.input_names();

    let truths: Vec<TruthRecord> = config
        .model
        .reference_indices(REFERENCE_PICKFREEZE_N, root.child(0))?
        .into_iter()
        .zip(&names)
        .map(|(truth, name)| TruthRecord {
            variable: name.clone(),
            truth,
        })
        .collect();

    let tasks: Vec<(usize, usize)> = config
        .n_list
        .iter()
        .flat_map(|&n| (0..config.replications).map(move |rep| (n, rep)))
        .collect();

    let pool = thread_pool(threads)?;
    let outputs: Vec<TaskOutput> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(n, rep)| run_one_replication(config, n, rep))
            .collect()
    });

    let mut raw = Vec::new();
    let mut failures = Vec::new();
    for out in outputs {
        raw.extend(out.raw);
        failures.extend(out.failures);
    }
    let rows = aggregate(config, &truths, &raw, &names);
    Ok(ReplicationReport {
        rows,
        raw,
        truths,
        failures,
    })
}

/// The flood-model study: n = 1000, both outputs S and Cp, one merged
/// report with variables tagged by response.
pub fn run_dyke_study(config: &ExperimentConfig) -> Result<ReplicationReport> {
    run_dyke_study_with_threads(config, None)
}

pub fn run_dyke_study_with_threads(
    config: &ExperimentConfig,
    threads: Option<usize>,
) -> Result<ReplicationReport> {
    let dyke_cfg = match &config.model {
        Model::Dyke(cfg, _) => cfg.clone(),
        Model::GSobol(_) => {
            return Err(NpError::InvalidConfig(
                "the dyke study needs a dyke model".into(),
            ))
        }
    };
    let mut merged = ReplicationReport::default();
    for output in [DykeOutput::S, DykeOutput::Cp] {
        let mut sub = config.clone();
        sub.model = Model::Dyke(dyke_cfg.clone(), output);
        if sub.n_list.is_empty() {
            sub.n_list = vec![1000];
        }
        let mut report = run_replication_study_with_threads(&sub, threads)?;
        let prefix = sub.model.response_name();
        for row in &mut report.rows {
            row.variable = format!("{prefix}:{}", row.variable);
        }
        for t in &mut report.truths {
            t.variable = format!("{prefix}:{}", t.variable);
        }
        merged.rows.extend(report.rows);
        merged.raw.extend(report.raw);
        merged.truths.extend(report.truths);
        merged.failures.extend(report.failures);
    }
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::GSobolSpec;

    fn tiny_config(dir: &std::path::Path) -> ExperimentConfig {
        let mut config = ExperimentConfig::new(
            Model::GSobol(GSobolSpec::new(vec![0.0, 9.0]).unwrap()),
            dir.to_path_buf(),
        );
        config.n_list = vec![40];
        config.replications = 3;
        config.b = 6;
        config.kernel_orders = vec![KernelOrder::Second];
        config.seed = 9;
        config
    }

    #[test]
    fn replications_are_prefix_stable() {
        let dir = std::env::temp_dir();
        let config = tiny_config(&dir);
        let small = run_replication_study_with_threads(&config, Some(1)).unwrap();
        let mut bigger = tiny_config(&dir);
        bigger.replications = 4;
        let big = run_replication_study_with_threads(&bigger, Some(1)).unwrap();
        for r in &small.raw {
            let twin = big
                .raw
                .iter()
                .find(|t| {
                    t.replication == r.replication
                        && t.variable == r.variable
                        && t.method == r.method
                        && t.kernel_order == r.kernel_order
                })
                .expect("record preserved");
            assert_eq!(twin.estimate.to_bits(), r.estimate.to_bits());
            assert_eq!(twin.h.to_bits(), r.h.to_bits());
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let dir = std::env::temp_dir();
        let config = tiny_config(&dir);
        let one = run_replication_study_with_threads(&config, Some(1)).unwrap();
        let four = run_replication_study_with_threads(&config, Some(4)).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn single_replication_bias_is_single_error() {
        let dir = std::env::temp_dir();
        let mut config = tiny_config(&dir);
        config.replications = 1;
        let report = run_replication_study_with_threads(&config, Some(1)).unwrap();
        for row in &report.rows {
            assert_eq!(row.variance, 0.0);
            let truth = report
                .truths
                .iter()
                .find(|t| t.variable == row.variable)
                .unwrap()
                .truth;
            let raw = report
                .raw
                .iter()
                .find(|r| {
                    r.variable == row.variable && r.method == row.method && r.n == row.n
                })
                .unwrap();
            assert!((row.bias - (raw.estimate - truth)).abs() < 1e-12);
        }
    }

    #[test]
    fn dyke_study_merges_both_outputs() {
        let dir = std::env::temp_dir();
        let mut config = ExperimentConfig::new(
            Model::Dyke(crate::models::DykeConfig::default(), DykeOutput::S),
            dir.to_path_buf(),
        );
        config.n_list = vec![80];
        config.replications = 2;
        config.b = 4;
        config.kernel_orders = vec![KernelOrder::Second];
        config.methods = vec![crate::sobol::SelectionMethod::Cv];
        config.seed = 31;
        let report = run_dyke_study_with_threads(&config, Some(1)).unwrap();
        assert!(report.rows.iter().any(|r| r.variable == "S:Q"));
        assert!(report.rows.iter().any(|r| r.variable == "Cp:Q"));
        assert!(report.truths.iter().any(|t| t.variable == "S:Hd"));
        assert_eq!(report.rows.len(), 2 * 8);
        let gsobol = ExperimentConfig::new(
            Model::GSobol(crate::models::GSobolSpec::benchmark()),
            dir.to_path_buf(),
        );
        assert!(run_dyke_study_with_threads(&gsobol, Some(1)).is_err());
    }

    #[test]
    fn aggregates_recompute_from_raw() {
        let dir = std::env::temp_dir();
        let config = tiny_config(&dir);
        let report = run_replication_study_with_threads(&config, Some(2)).unwrap();
        for row in &report.rows {
            let cell: Vec<&RawRecord> = report
                .raw
                .iter()
                .filter(|r| {
                    r.variable == row.variable
                        && r.n == row.n
                        && r.kernel_order == row.kernel_order
                        && r.method == row.method
                })
                .collect();
            let truth = report
                .truths
                .iter()
                .find(|t| t.variable == row.variable)
                .unwrap()
                .truth;
            let m = cell.iter().map(|r| r.estimate).sum::<f64>() / cell.len() as f64;
            assert!((row.bias - (m - truth)).abs() < 1e-12);
            let var = cell
                .iter()
                .map(|r| (r.estimate - m) * (r.estimate - m))
                .sum::<f64>()
                / (cell.len() - 1) as f64;
            assert!((row.variance - var).abs() < 1e-12);
            assert!((row.mse - (row.bias * row.bias + row.variance)).abs() < 1e-12);
        }
    }
}
