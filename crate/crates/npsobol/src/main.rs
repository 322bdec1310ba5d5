use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use npsobol::bootstrap::SigmaMode;
use npsobol::experiments::io::{
    cmd_estimate, cmd_plot_data, write_dataset_csv, write_report, PlotDataCommand,
};
use npsobol::experiments::{run_dyke_study, run_replication_study, ExperimentConfig};
use npsobol::kernels::{KernelOrder, KernelSpec};
use npsobol::models::{generate_dataset, DykeConfig, DykeOutput, GSobolSpec, Model};
use npsobol::rng::RandomStream;
use npsobol::sobol::{EstimateConfig, SelectionMethod};
use npsobol::{NpError, SearchOverrides};

/// First-order Sobol sensitivity indices from data alone, via kernel
/// regression with cross-validated or bootstrap-corrected bandwidths.
#[derive(Parser)]
#[command(name = "npsobol", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BandwidthArg {
    Cv,
    Boot,
}

#[derive(Clone, Copy, ValueEnum)]
enum SigmaModeArg {
    Smoothed,
    Global,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Gsobol,
    DykeS,
    DykeCp,
}

#[derive(Args)]
struct ModelOpts {
    /// Benchmark model.
    #[arg(long, value_enum, default_value = "gsobol")]
    model: ModelArg,
    /// g-Sobol parameters a_1,...,a_p (comma separated).
    #[arg(long, default_value = "0,1,4.5,9,99,99,99,99", value_delimiter = ',')]
    gsobol_a: Vec<f64>,
    /// Exponent in the dyke water-depth relation (1.0 = no exponent).
    #[arg(long, default_value_t = 0.6)]
    dyke_h_exponent: f64,
}

impl ModelOpts {
    fn build(&self) -> Result<Model, NpError> {
        Ok(match self.model {
            ModelArg::Gsobol => Model::GSobol(GSobolSpec::new(self.gsobol_a.clone())?),
            ModelArg::DykeS => Model::Dyke(
                DykeConfig::with_h_exponent(self.dyke_h_exponent)?,
                DykeOutput::S,
            ),
            ModelArg::DykeCp => Model::Dyke(
                DykeConfig::with_h_exponent(self.dyke_h_exponent)?,
                DykeOutput::Cp,
            ),
        })
    }
}

#[derive(Args)]
struct SearchOpts {
    /// Coarse-scan grid size.
    #[arg(long)]
    grid_size: Option<usize>,
    /// Lower end of the bandwidth bracket.
    #[arg(long)]
    h_min: Option<f64>,
    /// Upper end of the bandwidth bracket.
    #[arg(long)]
    h_max: Option<f64>,
    /// Refinement tolerance, relative in log-h.
    #[arg(long)]
    tol: Option<f64>,
}

impl SearchOpts {
    fn overrides(&self) -> SearchOverrides {
        SearchOverrides {
            h_min: self.h_min,
            h_max: self.h_max,
            grid_size: self.grid_size,
            tol: self.tol,
            max_iter: None,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Estimate first-order indices for every input column of a CSV file.
    Estimate {
        /// Input CSV (UTF-8, header row, comma separated).
        csv: PathBuf,
        /// Name of the response column; all other columns are inputs.
        #[arg(long)]
        response: String,
        /// Bandwidth selection method.
        #[arg(long, value_enum, default_value = "cv")]
        bandwidth: BandwidthArg,
        /// Kernel order (2 or 4).
        #[arg(long, default_value_t = 2)]
        kernel_order: u8,
        /// Bootstrap replicates for the boot method.
        #[arg(long = "boot-B", default_value_t = 100)]
        boot_b: usize,
        /// Conditional standard deviation estimator.
        #[arg(long, value_enum, default_value = "smoothed")]
        sigma_mode: SigmaModeArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Clamp reported estimates into [0, 1] (raw values stay in the
        /// estimate_raw column).
        #[arg(long)]
        clamp: bool,
        #[command(flatten)]
        search: SearchOpts,
        /// Output directory for estimates.csv / estimates.json.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Generate a benchmark dataset and write it as CSV.
    Simulate {
        #[command(flatten)]
        model: ModelOpts,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a replication study of the benchmark models and write report
    /// tables.
    Replicate {
        #[command(flatten)]
        model: ModelOpts,
        /// Desk-scale run: 20 replications, B = 50.
        #[arg(long, conflicts_with = "full")]
        fast: bool,
        /// Full-scale run: 100 replications, B = 100.
        #[arg(long)]
        full: bool,
        /// Sample sizes (g-Sobol study; the dyke study is fixed at 1000).
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
        #[arg(long = "boot-B")]
        boot_b: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit scatter, bootstrap curves and mean curve for one variable as
    /// long-format CSV.
    PlotData {
        #[command(flatten)]
        model: ModelOpts,
        /// Input column to plot (0-based).
        #[arg(long)]
        variable: usize,
        #[arg(long, default_value_t = 300)]
        n: usize,
        #[arg(long = "boot-B", default_value_t = 100)]
        boot_b: usize,
        #[arg(long, default_value_t = 2)]
        kernel_order: u8,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn configure_threads() {
    if let Ok(v) = std::env::var("NPSOBOL_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn run() -> Result<(), NpError> {
    configure_threads();
    let cli = Cli::parse();
    match cli.command {
        Command::Estimate {
            csv,
            response,
            bandwidth,
            kernel_order,
            boot_b,
            sigma_mode,
            seed,
            clamp,
            search,
            out,
        } => {
            let config = EstimateConfig {
                kernel: KernelSpec::epanechnikov(KernelOrder::from_flag(kernel_order)?),
                method: match bandwidth {
                    BandwidthArg::Cv => SelectionMethod::Cv,
                    BandwidthArg::Boot => SelectionMethod::Boot,
                },
                search: search.overrides(),
                boot_b,
                sigma_mode: match sigma_mode {
                    SigmaModeArg::Smoothed => SigmaMode::Smoothed,
                    SigmaModeArg::Global => SigmaMode::Global,
                },
                seed,
            };
            let records = cmd_estimate(&csv, &response, &config, clamp, &out)?;
            println!("variable,method,estimate,bandwidth");
            for r in &records {
                match &r.error {
                    None => println!(
                        "{},{},{},{}",
                        r.variable,
                        r.method.as_deref().unwrap_or(""),
                        r.estimate.map(|v| v.to_string()).unwrap_or_default(),
                        r.bandwidth.map(|v| v.to_string()).unwrap_or_default(),
                    ),
                    Some(e) => println!("{},error: {e},,", r.variable),
                }
            }
            eprintln!("wrote {}", out.join("estimates.csv").display());
            Ok(())
        }
        Command::Simulate { model, n, seed, out } => {
            let model = model.build()?;
            let data = generate_dataset(&model, n, RandomStream::from_seed(seed))?;
            let path = out.join("dataset.csv");
            write_dataset_csv(&path, &data)?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        Command::Replicate {
            model,
            fast,
            full,
            n_list,
            boot_b,
            seed,
            out,
        } => {
            let is_dyke = !matches!(model.model, ModelArg::Gsobol);
            let built = model.build()?;
            let mut config = ExperimentConfig::new(built, out.clone());
            if is_dyke {
                config.n_list = vec![1000];
            }
            if fast || !full {
                config = config.fast();
            }
            if let Some(ns) = n_list {
                config.n_list = ns;
            }
            if let Some(b) = boot_b {
                config.b = b;
            }
            config.seed = seed;
            let report = if is_dyke {
                run_dyke_study(&config)?
            } else {
                run_replication_study(&config)?
            };
            let files = write_report(&report, &out)?;
            for f in &files {
                eprintln!("wrote {}", f.display());
            }
            if !report.failures.is_empty() {
                eprintln!("{} task(s) failed; see failures.csv", report.failures.len());
            }
            Ok(())
        }
        Command::PlotData {
            model,
            variable,
            n,
            boot_b,
            kernel_order,
            seed,
            out,
        } => {
            let cmd = PlotDataCommand {
                model: model.build()?,
                variable,
                n,
                b: boot_b,
                kernel: KernelSpec::epanechnikov(KernelOrder::from_flag(kernel_order)?),
                sigma_mode: SigmaMode::default(),
                seed,
                grid_points: 200,
                output_dir: out,
            };
            let path = cmd_plot_data(&cmd)?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
