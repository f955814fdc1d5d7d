//! Command-line entry point for the valuation engine.
//!
//! Every subcommand is a thin binding from the shared JSON config (plus a
//! few flag overrides) to a library call. Exit codes: 0 success, 1 domain
//! error, 2 usage error.

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use std::io::Write;
use std::path::{Path, PathBuf};
use termlend::closed_form::{binary_put_closed_form, closed_form_grid, BinaryPutInputs, GridAxis};
use termlend::config::RunConfig;
use termlend::historical::{HistoricalDataset, HistoricalSeries, PartitionSpec};
use termlend::inventory::{
    retailer_pnl, simulate_demand, value_demand_breach, BreachDirection, BreachMode,
};
use termlend::payoff::{StructureKind, ValuationResult};
use termlend::process::{sample_parameter_seed, simulate_gbm_paths, simulate_locates};
use termlend::scenario::{build_grid, emit_report, run_grid, PerturbAxis, RunOptions};

/// Default master seed so demo runs reproduce exactly.
const DEFAULT_SEED: u64 = 42;

const USAGE_EXIT: i32 = 2;

#[derive(Parser)]
#[command(
    name = "termlend",
    version,
    about = "Securities-lending term loan valuation engine"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; the fixed default keeps demo runs reproducible.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Output directory (created if absent).
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate paths from the config and export them as CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Override the number of paths.
        #[arg(long)]
        paths: Option<usize>,
        /// Sample per-security parameters from the config's ranges and
        /// simulate this many securities instead of the explicit processes.
        #[arg(long)]
        securities: Option<usize>,
    },
    /// Value payoff structures by Monte Carlo.
    Value {
        #[command(flatten)]
        common: Common,
        /// Structures to value (repeatable); defaults to the config list.
        #[arg(long = "structure")]
        structures: Vec<StructureKind>,
        /// Override the number of paths.
        #[arg(long)]
        paths: Option<usize>,
    },
    /// Closed-form binary put value and optional sensitivity grid.
    ClosedForm {
        /// JSON run configuration with a closed_form section (optional when
        /// every input is given by flag).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for the grid CSV.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Availability at inception.
        #[arg(long = "A0")]
        start: Option<f64>,
        /// Guaranteed quantity (barrier).
        #[arg(long = "H")]
        barrier: Option<f64>,
        /// Cash payoff at breach.
        #[arg(long = "K")]
        payoff: Option<f64>,
        /// Availability drift per year.
        #[arg(long = "mu")]
        drift: Option<f64>,
        /// Availability volatility per sqrt-year.
        #[arg(long = "sigma")]
        vol: Option<f64>,
        /// Expiry in years.
        #[arg(long = "T")]
        expiry: Option<f64>,
        /// Also sweep every axis over the config's multipliers.
        #[arg(long)]
        grid: bool,
    },
    /// Value structures on partitions of historical series.
    Historical {
        #[command(flatten)]
        common: Common,
    },
    /// Inventory profit and demand-breach valuations.
    Inventory {
        #[command(flatten)]
        common: Common,
        /// Override the number of paths.
        #[arg(long)]
        paths: Option<usize>,
    },
    /// Run the perturbation scenario grid with checkpoint/resume.
    Grid {
        #[command(flatten)]
        common: Common,
        /// Structures to value (repeatable); defaults to the config list.
        #[arg(long = "structure")]
        structures: Vec<StructureKind>,
        /// Checkpoint file (defaults to <out>/grid.checkpoint).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Worker threads; 0 uses all cores.
        #[arg(long, env = "TERMLEND_WORKERS", default_value_t = 0)]
        workers: usize,
        /// Stop after computing this many scenarios (resume later).
        #[arg(long)]
        max_scenarios: Option<usize>,
    },
}

/// Config problems are usage errors (exit 2), not domain errors.
fn load_config(path: &Path) -> RunConfig {
    match RunConfig::from_path(path) {
        Ok(config) => config,
        Err(err) => {
            eprintln!("error: config: {err}");
            std::process::exit(USAGE_EXIT);
        }
    }
}

fn write_results_csv(path: &Path, results: &[ValuationResult]) -> anyhow::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "structure,estimate,std_error,n_paths,annualized_rate")?;
    for r in results {
        let rate = r.annualized_rate.map(|x| x.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{rate}",
            r.structure, r.estimate, r.std_error, r.n_paths
        )?;
    }
    out.flush()?;
    Ok(())
}

fn run() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate {
            common,
            paths,
            securities,
        } => {
            let config = load_config(&common.config);
            std::fs::create_dir_all(&common.out)?;
            let n_paths = paths.unwrap_or(config.valuation.paths);
            if let Some(n_securities) = securities {
                let ranges = config
                    .parameter_ranges
                    .as_ref()
                    .context("--securities needs a parameter_ranges config section")?;
                let samples = sample_parameter_seed(ranges, n_securities, common.seed)?;
                let grid = config.simulation_grid()?;
                for (i, sample) in samples.iter().enumerate() {
                    let bundle =
                        simulate_gbm_paths(&sample.system, &grid, n_paths, common.seed ^ i as u64)?;
                    let path = common.out.join(format!("paths_security_{i}.csv"));
                    bundle.write_csv(std::fs::File::create(&path)?)?;
                    if let Some(locate) = &sample.locate {
                        let locates =
                            simulate_locates(locate, &grid, n_paths, common.seed ^ i as u64)?;
                        locates.write_csv(std::fs::File::create(
                            common.out.join(format!("locates_security_{i}.csv")),
                        )?)?;
                    }
                }
                println!(
                    "simulated {} securities x {} paths into {}",
                    samples.len(),
                    n_paths,
                    common.out.display()
                );
            } else {
                let setup = config.setup()?;
                let bundle = setup.simulate(n_paths, common.seed)?;
                let path = common.out.join("paths.csv");
                bundle.write_csv(std::fs::File::create(&path)?)?;
                if let Some(locate) = &config.locate {
                    let locates = simulate_locates(locate, &setup.grid, n_paths, common.seed)?;
                    locates.write_csv(std::fs::File::create(common.out.join("locates.csv"))?)?;
                }
                println!("simulated {n_paths} paths into {}", path.display());
            }
        }
        Command::Value {
            common,
            structures,
            paths,
        } => {
            let config = load_config(&common.config);
            std::fs::create_dir_all(&common.out)?;
            let setup = config.setup()?;
            let structures = if structures.is_empty() {
                config.valuation.structures.clone()
            } else {
                structures
            };
            if structures.is_empty() {
                bail!("no structures requested (flag --structure or config valuation.structures)");
            }
            let n_paths = paths.unwrap_or(setup.paths);
            let results = setup.value_structures(&structures, n_paths, common.seed)?;
            for r in &results {
                println!(
                    "{}: {:.6} (se {:.6}, {} paths)",
                    r.structure, r.estimate, r.std_error, r.n_paths
                );
            }
            write_results_csv(&common.out.join("valuations.csv"), &results)?;
        }
        Command::ClosedForm {
            config,
            out,
            start,
            barrier,
            payoff,
            drift,
            vol,
            expiry,
            grid,
        } => {
            // flags override the config; a full flag set needs no config
            let section = config.as_ref().map(|p| load_config(p)).and_then(|c| c.closed_form);
            let base = section.as_ref().map(|s| s.inputs);
            let field = |flag: Option<f64>, from_config: Option<f64>, name: &str| {
                flag.or(from_config)
                    .with_context(|| format!("missing closed-form input `{name}`"))
            };
            let inputs = BinaryPutInputs {
                start: field(start, base.map(|b| b.start), "A0")?,
                barrier: field(barrier, base.map(|b| b.barrier), "H")?,
                drift: field(drift, base.map(|b| b.drift), "mu")?,
                vol: field(vol, base.map(|b| b.vol), "sigma")?,
                payoff: field(payoff, base.map(|b| b.payoff), "K")?,
                expiry: field(expiry, base.map(|b| b.expiry), "T")?,
            };
            let value = binary_put_closed_form(&inputs)?;
            println!("{value:.6}");
            if grid {
                let multipliers = section
                    .map(|s| s.multipliers)
                    .filter(|m| !m.is_empty())
                    .unwrap_or_else(|| termlend::scenario::default_multipliers(5));
                let table = closed_form_grid(&inputs, &GridAxis::ALL, &multipliers)?;
                std::fs::create_dir_all(&out)?;
                let path = out.join("closed_form_grid.csv");
                table.write_csv(std::fs::File::create(&path)?)?;
                println!("grid written to {}", path.display());
            }
        }
        Command::Historical { common } => {
            let config = load_config(&common.config);
            std::fs::create_dir_all(&common.out)?;
            let section = config
                .historical
                .as_ref()
                .context("config has no historical section")?;
            let mut dataset = HistoricalDataset::new();
            let config_dir = common
                .config
                .parent()
                .filter(|p| !p.as_os_str().is_empty())
                .unwrap_or(Path::new("."))
                .to_path_buf();
            for series_ref in &section.series {
                let mut file = PathBuf::from(&series_ref.path);
                if file.is_relative() {
                    file = config_dir.join(file);
                }
                let text = std::fs::read_to_string(&file)
                    .with_context(|| format!("cannot read {}", file.display()))?;
                dataset = dataset.with(
                    series_ref.kind,
                    HistoricalSeries::from_csv(&text)?,
                    series_ref.target_start,
                )?;
            }
            let spec = PartitionSpec {
                count: section.partitions,
                overlap: section.overlap,
            };
            let valuation = termlend::historical::value_historical(
                &dataset,
                &config.contract()?,
                &config.simulation_grid()?,
                &spec,
                section.structure,
                &config.discount()?,
                &config.eval_options(),
            )?;
            println!(
                "{}: {:.6} (partition se {:.6}, {} partitions)",
                valuation.result.structure,
                valuation.result.estimate,
                valuation.result.std_error,
                valuation.result.n_paths
            );
            write_results_csv(
                &common.out.join("historical_valuation.csv"),
                std::slice::from_ref(&valuation.result),
            )?;
            valuation
                .write_pnl_csv(std::fs::File::create(common.out.join("historical_pnl.csv"))?)?;
        }
        Command::Inventory { common, paths } => {
            let config = load_config(&common.config);
            std::fs::create_dir_all(&common.out)?;
            let section = config
                .inventory
                .as_ref()
                .context("config has no inventory section")?;
            let params = config.inventory_params()?.expect("section checked above");
            let grid = config.horizon_grid()?;
            let n_paths = paths.unwrap_or(config.valuation.paths);
            let demand = simulate_demand(
                &section.demand,
                section.jumps.as_ref(),
                &grid,
                n_paths,
                common.seed,
            )?;
            let discount = config.discount()?;
            let mut results = vec![("".to_string(), retailer_pnl(&demand, &params, &discount)?)];
            for (mode, direction) in [
                (BreachMode::Constant, BreachDirection::Down),
                (BreachMode::Constant, BreachDirection::Up),
                (BreachMode::ConstantCounter, BreachDirection::Down),
                (BreachMode::ProportionalCounter, BreachDirection::Down),
            ] {
                let label = match direction {
                    BreachDirection::Down => " [breach down]",
                    BreachDirection::Up => " [breach up]",
                };
                results.push((
                    label.to_string(),
                    value_demand_breach(&demand, &params, &discount, mode, direction)?,
                ));
            }
            for (label, r) in &results {
                println!(
                    "{}{label}: {:.6} (se {:.6})",
                    r.structure, r.estimate, r.std_error
                );
            }
            let rows: Vec<ValuationResult> = results.into_iter().map(|(_, r)| r).collect();
            write_results_csv(&common.out.join("inventory.csv"), &rows)?;
        }
        Command::Grid {
            common,
            structures,
            checkpoint,
            workers,
            max_scenarios,
        } => {
            let config = load_config(&common.config);
            std::fs::create_dir_all(&common.out)?;
            let section = config
                .scenario
                .as_ref()
                .context("config has no scenario section")?;
            let axes: Vec<PerturbAxis> = section
                .axes
                .iter()
                .map(|s| s.parse())
                .collect::<Result<_, _>>()?;
            let structures = if structures.is_empty() {
                config.valuation.structures.clone()
            } else {
                structures
            };
            if structures.is_empty() {
                bail!("no structures requested (flag --structure or config valuation.structures)");
            }
            let grid = build_grid(config.setup()?, &axes, section.steps, &section.iterations)?;
            println!(
                "grid: {} scenarios x {} structures",
                grid.len(),
                structures.len()
            );
            let checkpoint = checkpoint.unwrap_or_else(|| common.out.join("grid.checkpoint"));
            let options = RunOptions {
                master_seed: common.seed,
                workers,
                max_scenarios,
            };
            let run = run_grid(&grid, &structures, &checkpoint, &options)?;
            println!(
                "computed {} scenarios ({} records reused, {} scenarios remaining)",
                run.computed_scenarios, run.reused_records, run.remaining_scenarios
            );
            let report = emit_report(&run, &grid, &structures, &common.out)?;
            println!(
                "{} rows across {} result files in {}",
                report.rows_written,
                report.result_files.len(),
                common.out.display()
            );
        }
    }
    Ok(())
}

fn main() {
    if let Err(err) = run() {
        // single-line, machine-parsable diagnostic
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
