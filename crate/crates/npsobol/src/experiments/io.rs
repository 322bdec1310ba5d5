//! CSV and JSON serialization: datasets, study reports, per-variable
//! estimate records and figure data.
//!
//! The CSV dialect is fixed: UTF-8, header row, comma separator, decimal
//! point, no quoting or thousands separators. Floats use the shortest
//! round-trip representation, so a written file re-parses to identical bits
//! and identical runs produce byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::data::Dataset;
use crate::error::{NpError, Result};
use crate::experiments::{RawRecord, ReplicationReport, ReportRow};
use crate::sobol::{ColumnEstimate, EstimateConfig, EstimateMethod};

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> NpError + '_ {
    move |source| NpError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(path))?;
    }
    std::fs::write(path, content).map_err(io_err(path))
}

/// Write a dataset as CSV: input columns then the response column.
pub fn write_dataset_csv(path: &Path, data: &Dataset) -> Result<()> {
    let mut out = String::new();
    let header: Vec<&str> = data
        .names
        .iter()
        .map(String::as_str)
        .chain(std::iter::once(data.response_name.as_str()))
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for k in 0..data.n_rows() {
        for col in &data.columns {
            let _ = write!(out, "{},", col[k]);
        }
        let _ = writeln!(out, "{}", data.response[k]);
    }
    write_file(path, &out)
}

/// Parse a dataset CSV; every column except `response` becomes an input.
pub fn read_dataset_csv(path: &Path, response: &str) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| NpError::Csv {
        path: path.to_path_buf(),
        row: 1,
        column: "-".into(),
        message: "file is empty".into(),
    })?;
    let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let response_idx = names.iter().position(|n| n == response).ok_or_else(|| {
        NpError::Csv {
            path: path.to_path_buf(),
            row: 1,
            column: response.into(),
            message: format!("response column not found in header {names:?}"),
        }
    })?;

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (line_idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != names.len() {
            return Err(NpError::Csv {
                path: path.to_path_buf(),
                row: line_idx + 1,
                column: "-".into(),
                message: format!("expected {} cells, found {}", names.len(), cells.len()),
            });
        }
        for (c, cell) in cells.iter().enumerate() {
            let value: f64 = cell.trim().parse().map_err(|_| NpError::Csv {
                path: path.to_path_buf(),
                row: line_idx + 1,
                column: names[c].clone(),
                message: format!("not a number: {cell:?}"),
            })?;
            columns[c].push(value);
        }
    }
    if columns[response_idx].len() < 3 {
        return Err(NpError::Csv {
            path: path.to_path_buf(),
            row: columns[response_idx].len() + 1,
            column: response.into(),
            message: "need at least 3 data rows".into(),
        });
    }
    let response_col = columns.remove(response_idx);
    let mut input_names = names;
    input_names.remove(response_idx);
    Dataset::new(input_names, columns, response.to_string(), response_col)
}

pub const REPORT_HEADER: &str =
    "variable,n,kernel_order,method,bias,variance,mse,mean_diff_boot_cv,median_bandwidth,flat_curve_rate";

fn report_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.variable,
            r.n,
            r.kernel_order,
            r.method,
            fmt_f64(r.bias),
            fmt_f64(r.variance),
            fmt_f64(r.mse),
            fmt_opt(r.mean_diff_boot_cv),
            fmt_f64(r.median_bandwidth),
            fmt_f64(r.flat_curve_rate),
        );
    }
    out
}

fn parse_method(s: &str) -> Result<EstimateMethod> {
    Ok(match s {
        "plugin" => EstimateMethod::PlugIn,
        "cv" => EstimateMethod::Cv,
        "boot" => EstimateMethod::Boot,
        "exact" => EstimateMethod::Exact,
        "pickfreeze" => EstimateMethod::PickFreeze,
        other => {
            return Err(NpError::InvalidConfig(format!(
                "unknown estimate method {other:?}"
            )))
        }
    })
}

/// Re-parse a written report (used by the determinism checks).
pub fn read_report_csv(path: &Path) -> Result<Vec<ReportRow>> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 10 {
            return Err(NpError::Csv {
                path: path.to_path_buf(),
                row: i + 1,
                column: "-".into(),
                message: format!("expected 10 cells, found {}", cells.len()),
            });
        }
        let num = |idx: usize| -> Result<f64> {
            cells[idx].parse().map_err(|_| NpError::Csv {
                path: path.to_path_buf(),
                row: i + 1,
                column: idx.to_string(),
                message: format!("not a number: {:?}", cells[idx]),
            })
        };
        rows.push(ReportRow {
            variable: cells[0].to_string(),
            n: cells[1].parse().unwrap_or(0),
            kernel_order: cells[2].parse().unwrap_or(0),
            method: parse_method(cells[3])?,
            bias: num(4)?,
            variance: num(5)?,
            mse: num(6)?,
            mean_diff_boot_cv: if cells[7].is_empty() {
                None
            } else {
                Some(num(7)?)
            },
            median_bandwidth: num(8)?,
            flat_curve_rate: num(9)?,
        });
    }
    Ok(rows)
}

fn raw_csv(raw: &[RawRecord]) -> String {
    let mut out = String::from(
        "response,variable,n,kernel_order,method,replication,estimate,h,flat_curve,degenerate_points\n",
    );
    for r in raw {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.response,
            r.variable,
            r.n,
            r.kernel_order,
            r.method,
            r.replication,
            fmt_f64(r.estimate),
            fmt_f64(r.h),
            r.flat_curve,
            r.degenerate_points,
        );
    }
    out
}

/// Serialize a study report: aggregate rows (CSV + JSON), the raw
/// per-replication dump, the reference truths and any failures.
pub fn write_report(report: &ReplicationReport, output_dir: &Path) -> Result<Vec<PathBuf>> {
    let report_csv_path = output_dir.join("report.csv");
    write_file(&report_csv_path, &report_csv(&report.rows))?;

    let report_json_path = output_dir.join("report.json");
    let json = serde_json::to_string_pretty(&report.rows)
        .map_err(|e| NpError::InvalidConfig(format!("json: {e}")))?;
    write_file(&report_json_path, &json)?;

    let raw_path = output_dir.join("raw.csv");
    write_file(&raw_path, &raw_csv(&report.raw))?;

    let truths_path = output_dir.join("truths.csv");
    let mut truths = String::from("variable,truth\n");
    for t in &report.truths {
        let _ = writeln!(truths, "{},{}", t.variable, fmt_f64(t.truth));
    }
    write_file(&truths_path, &truths)?;

    let failures_path = output_dir.join("failures.csv");
    let mut failures =
        String::from("response,variable,n,kernel_order,method,replication,message\n");
    for f in &report.failures {
        let _ = writeln!(
            failures,
            "{},{},{},{},{},{},{}",
            f.response,
            f.variable,
            f.n,
            f.kernel_order,
            f.method,
            f.replication,
            f.message.replace([',', '\n'], ";"),
        );
    }
    write_file(&failures_path, &failures)?;

    Ok(vec![
        report_csv_path,
        report_json_path,
        raw_path,
        truths_path,
        failures_path,
    ])
}

/// One output row of the `estimate` command.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateRecord {
    pub variable: String,
    pub method: Option<String>,
    pub estimate: Option<f64>,
    pub estimate_raw: Option<f64>,
    pub bandwidth: Option<f64>,
    pub flat_curve: Option<bool>,
    pub degenerate_points: Option<usize>,
    pub error: Option<String>,
}

impl EstimateRecord {
    fn from_column(col: &ColumnEstimate, clamp: bool) -> Self {
        match &col.outcome {
            Ok(est) => EstimateRecord {
                variable: col.name.clone(),
                method: Some(est.method.to_string()),
                estimate: Some(if clamp {
                    est.value.clamp(0.0, 1.0)
                } else {
                    est.value
                }),
                estimate_raw: Some(est.value),
                bandwidth: est.h,
                flat_curve: Some(est.flat_curve),
                degenerate_points: Some(est.degenerate_points),
                error: None,
            },
            Err(e) => EstimateRecord {
                variable: col.name.clone(),
                method: None,
                estimate: None,
                estimate_raw: None,
                bandwidth: None,
                flat_curve: None,
                degenerate_points: None,
                error: Some(e.to_string()),
            },
        }
    }
}

fn estimates_csv(records: &[EstimateRecord]) -> String {
    let mut out = String::from(
        "variable,method,estimate,estimate_raw,bandwidth,flat_curve,degenerate_points,error\n",
    );
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.variable,
            r.method.as_deref().unwrap_or_default(),
            fmt_opt(r.estimate),
            fmt_opt(r.estimate_raw),
            fmt_opt(r.bandwidth),
            r.flat_curve.map(|b| b.to_string()).unwrap_or_default(),
            r.degenerate_points
                .map(|d| d.to_string())
                .unwrap_or_default(),
            r.error
                .as_deref()
                .unwrap_or_default()
                .replace([',', '\n'], ";"),
        );
    }
    out
}

/// Estimate every input column of a CSV file and write the per-variable
/// records as CSV and JSON.
pub fn cmd_estimate(
    csv_path: &Path,
    response: &str,
    config: &EstimateConfig,
    clamp: bool,
    output_dir: &Path,
) -> Result<Vec<EstimateRecord>> {
    let data = read_dataset_csv(csv_path, response)?;
    let outcomes = crate::sobol::estimate_all(&data, config);
    let records: Vec<EstimateRecord> = outcomes
        .iter()
        .map(|c| EstimateRecord::from_column(c, clamp))
        .collect();
    write_file(&output_dir.join("estimates.csv"), &estimates_csv(&records))?;
    let json = serde_json::to_string_pretty(&records)
        .map_err(|e| NpError::InvalidConfig(format!("json: {e}")))?;
    write_file(&output_dir.join("estimates.json"), &json)?;
    Ok(records)
}

/// Inputs for figure-data emission.
#[derive(Debug, Clone)]
pub struct PlotDataCommand {
    pub model: crate::models::Model,
    /// Input column to plot against the response (0-based).
    pub variable: usize,
    pub n: usize,
    pub b: usize,
    pub kernel: crate::kernels::KernelSpec,
    pub sigma_mode: crate::bootstrap::SigmaMode,
    pub seed: u64,
    pub grid_points: usize,
    pub output_dir: PathBuf,
}

/// Emit long-format figure data for one variable: the data scatter, each
/// bootstrap curve sampled on a grid clamped to the data range, and the mean
/// curve. Everything needed to redraw the bootstrap-ensemble figure.
pub fn cmd_plot_data(cmd: &PlotDataCommand) -> Result<PathBuf> {
    use crate::bandwidth::{select_boot_full, BandwidthSearchSpec};
    use crate::bootstrap::{curves_on_grid, BootstrapConfig};
    use crate::models::generate_dataset;
    use crate::rng::RandomStream;
    use crate::smoother::RegressionSample;

    if cmd.variable >= cmd.model.n_inputs() {
        return Err(NpError::IndexOutOfRange {
            index: cmd.variable,
            n: cmd.model.n_inputs(),
        });
    }
    let root = RandomStream::from_seed(cmd.seed);
    let data = generate_dataset(&cmd.model, cmd.n, root.child(1))?;
    let sample = RegressionSample::new(
        data.columns[cmd.variable].clone(),
        data.response.clone(),
    )?;
    let search = BandwidthSearchSpec::for_sample(&sample)?;
    // Bandwidth selection needs at least two replicates; when a single curve
    // is requested, only the first replicate is emitted.
    let boot = BootstrapConfig::for_response(cmd.b.max(2), cmd.sigma_mode, sample.y())?;
    let selection = select_boot_full(&sample, cmd.kernel, &search, &boot, root.child(2))?;
    let mut pseudo = selection.pseudo;
    pseudo.y.truncate(cmd.b.max(1));
    pseudo.means.truncate(cmd.b.max(1));

    // Grid clamped to the data range; no extrapolation beyond it.
    let (lo, hi) = (sample.x_min(), sample.x_max());
    let g = cmd.grid_points.max(2);
    let grid: Vec<f64> = (0..g)
        .map(|j| lo + (hi - lo) * j as f64 / (g - 1) as f64)
        .collect();
    let curves = curves_on_grid(&sample, &pseudo, selection.result.h, cmd.kernel, &grid);

    let mut out = String::from("series,x,y\n");
    for (x, y) in sample.x().iter().zip(sample.y()) {
        let _ = writeln!(out, "data,{x},{y}");
    }
    for (b, curve) in curves.iter().enumerate() {
        for (x, y) in grid.iter().zip(curve) {
            let _ = writeln!(out, "curve_{:04},{x},{y}", b + 1);
        }
    }
    for (j, x) in grid.iter().enumerate() {
        let mean = curves.iter().map(|c| c[j]).sum::<f64>() / curves.len() as f64;
        let _ = writeln!(out, "mean,{x},{mean}");
    }
    let path = cmd.output_dir.join("plot_data.csv");
    write_file(&path, &out)?;
    Ok(path)
}
