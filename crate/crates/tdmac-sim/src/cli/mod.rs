//! Command-line harness.
//!
//! Subcommands: `simulate`, `compare`, `noise`, `energy`, `sweep`. Exit
//! codes form a stable contract: 0 on success, 2 on configuration errors
//! (violations are listed), 3 on usage or operand errors.

pub mod manifest;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::arch::{self, MacArchitecture};
use crate::config::{default_params, CircuitParams, ConfigError, VectorOperands, Violation};
use crate::engine::MacEngine;
use crate::metrics::{
    self, energy_report, linearity_metrics, transfer_curve, OperandStats, Sampling,
};
use crate::report;
use crate::rng::instance_stream;
use manifest::RunManifest;

const SETTING_PRECEDENCE: &str = "Setting precedence: command-line flags override config-file \
fields, which override built-in defaults. The seed resolves as --seed, then the TDMAC_SEED \
environment variable, then the config file, then the default.";

#[derive(Parser)]
#[command(
    name = "tdmac-sim",
    version,
    about = "Behavioral simulator for time-domain near-memory MAC macros",
    after_help = SETTING_PRECEDENCE
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one MAC operation and print the readout.
    Simulate(SimulateArgs),
    /// Sweep both architectures on identical operands and compare linearity.
    Compare(CompareArgs),
    /// Quantization-noise and kT/C Monte Carlo study.
    Noise(NoiseArgs),
    /// Power, energy, and efficiency report.
    Energy(EnergyArgs),
    /// Transfer-curve sweep of a single architecture.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file. Missing keys fall back to built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// PRNG seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Readout counter clock period override (s).
    #[arg(long, global = true)]
    t_clk_tdc: Option<f64>,
    /// kT/C noise override (true/false).
    #[arg(long, global = true)]
    noise: Option<bool>,
    /// Directory for CSV outputs and the run manifest.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Accumulation architecture (cascade, counter).
    #[arg(long, default_value = "cascade")]
    arch: String,
    /// Comma-separated input codes, 0..=15.
    #[arg(long, value_delimiter = ',', required = true)]
    inputs: Vec<u8>,
    /// Comma-separated weight codes, 0..=15.
    #[arg(long, value_delimiter = ',', required = true)]
    weights: Vec<u8>,
    /// Also dump per-cell and per-phase trace CSVs.
    #[arg(long)]
    trace: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SamplingArg {
    Diagonal,
    Exhaustive,
    Random,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Operand vector length.
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, value_enum, default_value_t = SamplingArg::Diagonal)]
    sampling: SamplingArg,
    /// Sample count for random sampling.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Worker threads for the sweep; 0 means automatic.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct NoiseArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of delay cells per trial.
    #[arg(long, default_value_t = 4)]
    cells: usize,
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
}

#[derive(Args)]
struct EnergyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Accumulation architecture (cascade, counter).
    #[arg(long, default_value = "cascade")]
    arch: String,
    /// Operand vector length.
    #[arg(long, default_value_t = 4)]
    n: usize,
    /// Operation rate (Hz).
    #[arg(long, default_value_t = 40e6)]
    f_op: f64,
    /// Ops counted per cycle; defaults to 2*n (multiply plus add per cell).
    #[arg(long)]
    ops_per_cycle: Option<u32>,
    /// Force the total power (W) and back-solve the efficiency.
    #[arg(long)]
    calibrate_power: Option<f64>,
    /// Assume full-scale operands instead of uniform-code statistics.
    #[arg(long)]
    worst_case: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Accumulation architecture (cascade, counter).
    #[arg(long, default_value = "cascade")]
    arch: String,
    /// Operand vector length.
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, value_enum, default_value_t = SamplingArg::Diagonal)]
    sampling: SamplingArg,
    /// Sample count for random sampling.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Worker threads for the sweep; 0 means automatic.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

enum CliError {
    Config(ConfigError),
    Violations(Vec<Violation>),
    Usage(String),
    Run(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Violations(_) => 2,
            CliError::Usage(_) => 3,
            CliError::Run(_) => 1,
        }
    }

    fn report(&self) {
        match self {
            CliError::Config(e) => eprintln!("error: {e}"),
            CliError::Violations(violations) => {
                eprintln!("error: invalid parameters:");
                for v in violations {
                    eprintln!("  - {v}");
                }
            }
            CliError::Usage(msg) => eprintln!("error: {msg}"),
            CliError::Run(msg) => eprintln!("error: {msg}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(format!("i/o failure: {e}"))
    }
}

impl From<metrics::MetricsError> for CliError {
    fn from(e: metrics::MetricsError) -> Self {
        match e {
            metrics::MetricsError::ExhaustiveTooLarge(_) | metrics::MetricsError::DegenerateFit => {
                CliError::Usage(e.to_string())
            }
            metrics::MetricsError::Delay(d) => CliError::Run(d.to_string()),
        }
    }
}

/// Entry point used by the binary.
pub fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    run(&argv)
}

/// Parses and runs a full command line. Returns the process exit code.
pub fn run(argv: &[String]) -> ExitCode {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0u8,
                _ => 3,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::Simulate(args) => cmd_simulate(args, argv),
        Command::Compare(args) => cmd_compare(args, argv),
        Command::Noise(args) => cmd_noise(args, argv),
        Command::Energy(args) => cmd_energy(args, argv),
        Command::Sweep(args) => cmd_sweep(args, argv),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            e.report();
            ExitCode::from(e.exit_code())
        }
    }
}

/// Resolves the parameter set: file under the flags, then validation.
fn resolve_params(common: &CommonArgs) -> Result<CircuitParams, CliError> {
    let mut params = match &common.config {
        Some(path) => CircuitParams::load(path).map_err(CliError::Config)?,
        None => default_params(),
    };
    if common.seed.is_none() {
        if let Ok(env_seed) = std::env::var("TDMAC_SEED") {
            params.seed = env_seed
                .parse()
                .map_err(|_| CliError::Usage(format!("TDMAC_SEED is not a u64: {env_seed:?}")))?;
        }
    }
    if let Some(seed) = common.seed {
        params.seed = seed;
    }
    if let Some(t) = common.t_clk_tdc {
        params.t_clk_tdc = t;
    }
    if let Some(noise) = common.noise {
        params.noise_enabled = noise;
    }
    let violations = params.validate();
    if violations.is_empty() {
        Ok(params)
    } else {
        Err(CliError::Violations(violations))
    }
}

fn resolve_arch(name: &str) -> Result<&'static dyn MacArchitecture, CliError> {
    arch::lookup(name).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown architecture {name:?}; available: {}",
            arch::names()
        ))
    })
}

fn sampling_for(arg: SamplingArg, samples: usize, seed: u64) -> Sampling {
    match arg {
        SamplingArg::Diagonal => Sampling::Diagonal,
        SamplingArg::Exhaustive => Sampling::Exhaustive,
        SamplingArg::Random => Sampling::Random {
            count: samples,
            seed,
        },
    }
}

fn make_output_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn csv_writer(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Run(format!("failed to build worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn cmd_simulate(args: &SimulateArgs, argv: &[String]) -> Result<(), CliError> {
    let params = resolve_params(&args.common)?;
    let arch = resolve_arch(&args.arch)?;
    let ops = VectorOperands::from_u8(&args.inputs, &args.weights)
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let mut engine = MacEngine::new(&params, 0);
    let (readout, trace) = engine
        .run_traced(arch, &ops)
        .map_err(|e| CliError::Run(e.to_string()))?;

    println!("arch:    {}", readout.architecture);
    println!("oracle:  {}", readout.oracle);
    println!("d_out:   {}", readout.d_out);
    println!("t_acc:   {:e} s", readout.t_acc);
    println!("latency: {:e} s", readout.latency);
    println!("energy:  {:e} J", readout.energy);
    if readout.saturated_cells.is_empty() {
        println!("saturated_cells: none");
    } else {
        println!("saturated_cells: {:?}", readout.saturated_cells);
    }

    if let Some(dir) = &args.common.output_dir {
        make_output_dir(dir)?;
        let record = metrics::TransferRecord {
            oracle: readout.oracle,
            d_out: readout.d_out,
            t_acc: readout.t_acc,
            arch: readout.architecture,
            operands: ops,
            saturated: !readout.saturated_cells.is_empty(),
        };
        let mut out = csv_writer(dir, "transfer.csv")?;
        report::write_transfer(&mut out, &[report::TransferRow::from_record(&record)])?;
        out.flush()?;
        if args.trace {
            let mut cells = csv_writer(dir, "trace_cells.csv")?;
            writeln!(cells, "cell,v_mac_v,t_d_s,d_i")?;
            for c in &trace.cells {
                writeln!(cells, "{},{},{},{}", c.cell_index, c.v_mac, c.t_d, c.d_i)?;
            }
            cells.flush()?;
            let mut phases = csv_writer(dir, "trace_phases.csv")?;
            writeln!(phases, "phase,start_s,end_s")?;
            for p in &trace.phases {
                writeln!(phases, "{},{},{}", p.phase, p.start, p.end)?;
            }
            phases.flush()?;
        }
        RunManifest::new(args.common.config.as_deref(), argv, dir, 1, &params).write(dir)?;
    }
    Ok(())
}

fn write_sweep_outputs(
    dir: &Path,
    arch_name: &str,
    records: &[metrics::TransferRecord],
) -> Result<f64, CliError> {
    let rows: Vec<report::TransferRow> = records
        .iter()
        .map(report::TransferRow::from_record)
        .collect();
    let mut out = csv_writer(dir, &format!("transfer_{arch_name}.csv"))?;
    report::write_transfer(&mut out, &rows)?;
    out.flush()?;

    let fit = linearity_metrics(records)?;
    let mut out = csv_writer(dir, &format!("linearity_{arch_name}.csv"))?;
    report::write_linearity(&mut out, &report::linearity_rows(records, &fit))?;
    out.flush()?;
    Ok(fit.inl_max)
}

fn cmd_compare(args: &CompareArgs, argv: &[String]) -> Result<(), CliError> {
    let params = resolve_params(&args.common)?;
    let sampling = sampling_for(args.sampling, args.samples, params.seed);
    let dir = args
        .common
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("tdmac-out"));
    make_output_dir(&dir)?;

    // Both architectures see identical operand samples and per-record seeds.
    let (cascade, counter) = in_pool(args.workers, || {
        let cascade = transfer_curve(&arch::CASCADE, &params, args.n, sampling);
        let counter = transfer_curve(&arch::COUNTER, &params, args.n, sampling);
        (cascade, counter)
    })?;
    let cascade = cascade?;
    let counter = counter?;

    let inl_cascade = write_sweep_outputs(&dir, "cascade", &cascade)?;
    let inl_counter = write_sweep_outputs(&dir, "counter", &counter)?;
    RunManifest::new(
        args.common.config.as_deref(),
        argv,
        &dir,
        args.workers,
        &params,
    )
    .write(&dir)?;

    println!("inl_max(cascade): {inl_cascade}");
    println!("inl_max(counter): {inl_counter}");
    let verdict = if inl_cascade < inl_counter {
        "cascade"
    } else if inl_counter < inl_cascade {
        "counter"
    } else {
        "tie"
    };
    println!("verdict: {verdict} (lower inl_max)");
    Ok(())
}

fn cmd_noise(args: &NoiseArgs, argv: &[String]) -> Result<(), CliError> {
    let params = resolve_params(&args.common)?;
    if args.cells == 0 || args.trials < 2 {
        return Err(CliError::Usage(
            "noise study needs --cells >= 1 and --trials >= 2".into(),
        ));
    }
    let mut rng = instance_stream(params.seed, 0);
    let errors = metrics::quantization_errors(args.cells, &params, args.trials, &mut rng);
    let stats = metrics::stats_from_errors(&errors, args.cells, &params);

    println!(
        "quantization noise ({} cells, {} trials):",
        args.cells, args.trials
    );
    println!("  empirical_variance: {:e} s^2", stats.empirical_variance);
    println!("  predicted_variance: {:e} s^2", stats.predicted_variance);
    println!("  ratio:              {}", stats.ratio);

    // kT/C Monte Carlo at a mid-scale product, far from the clamp rails.
    let sigma_pred = crate::analog::thermal_noise_sigma(params.c_int, params.temperature);
    let mut engine_rng = instance_stream(params.seed, 1);
    let dac = crate::analog::Dac::ideal(&params);
    let mid = crate::config::Code4::new(8).expect("in range");
    let window = crate::pulsegen::pulse_train(mid, params.t_clk_pulse);
    let current = dac.current(mid);
    let samples: Vec<f64> = (0..args.trials)
        .map(|i| crate::analog::integrate(&current, &window, &params, &mut engine_rng, i).v_mac)
        .collect();
    // Shift by the first sample: identical samples then give exactly zero.
    let base = samples[0];
    let mean = samples.iter().map(|v| v - base).sum::<f64>() / samples.len() as f64;
    let var = samples
        .iter()
        .map(|v| (v - base - mean).powi(2))
        .sum::<f64>()
        / (samples.len() - 1) as f64;
    println!(
        "kT/C sampling noise (noise_enabled = {}):",
        params.noise_enabled
    );
    println!("  predicted_sigma: {:e} V", sigma_pred);
    println!("  observed_sigma:  {:e} V", var.sqrt());

    if let Some(dir) = &args.common.output_dir {
        make_output_dir(dir)?;
        let rows: Vec<report::NoiseRow> = errors
            .iter()
            .enumerate()
            .map(|(i, &e)| report::NoiseRow {
                trial: i as u64,
                error_s: e,
            })
            .collect();
        let mut out = csv_writer(dir, "noise.csv")?;
        report::write_noise(&mut out, &rows)?;
        out.flush()?;
        RunManifest::new(args.common.config.as_deref(), argv, dir, 1, &params).write(dir)?;
    }
    Ok(())
}

fn cmd_energy(args: &EnergyArgs, argv: &[String]) -> Result<(), CliError> {
    let params = resolve_params(&args.common)?;
    let arch = resolve_arch(&args.arch)?;
    if args.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    if args.f_op <= 0.0 || args.f_op.is_nan() {
        return Err(CliError::Usage("--f-op must be positive".into()));
    }
    let ops_per_cycle = args.ops_per_cycle.unwrap_or(2 * args.n as u32);
    let stats = if args.worst_case {
        OperandStats::WorstCase
    } else {
        OperandStats::Average
    };
    let rep = energy_report(
        &params,
        arch,
        args.n,
        args.f_op,
        ops_per_cycle,
        stats,
        args.calibrate_power,
    );

    println!("p_analog:       {:e} W", rep.p_analog);
    println!("p_digital:      {:e} W", rep.p_digital);
    if rep.calibrated {
        println!("p_total:        {:e} W (calibrated)", rep.p_total);
        println!(
            "tops_per_watt:  {} ({} ops/cycle, back-solved from calibrated power)",
            rep.tops_per_watt, rep.ops_per_cycle
        );
    } else {
        println!("p_total:        {:e} W", rep.p_total);
        println!(
            "tops_per_watt:  {} ({} ops/cycle)",
            rep.tops_per_watt, rep.ops_per_cycle
        );
    }
    println!("energy_per_mac: {:e} J", rep.energy_per_mac);

    if let Some(dir) = &args.common.output_dir {
        make_output_dir(dir)?;
        let mut out = csv_writer(dir, "energy.csv")?;
        report::write_energy(&mut out, &report::energy_rows(&rep, args.f_op))?;
        out.flush()?;
        RunManifest::new(args.common.config.as_deref(), argv, dir, 1, &params).write(dir)?;
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs, argv: &[String]) -> Result<(), CliError> {
    let params = resolve_params(&args.common)?;
    let arch = resolve_arch(&args.arch)?;
    let sampling = sampling_for(args.sampling, args.samples, params.seed);
    let dir = args
        .common
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("tdmac-out"));
    make_output_dir(&dir)?;

    let records = in_pool(args.workers, || {
        transfer_curve(arch, &params, args.n, sampling)
    })??;
    let inl_max = write_sweep_outputs(&dir, arch.name(), &records)?;
    RunManifest::new(
        args.common.config.as_deref(),
        argv,
        &dir,
        args.workers,
        &params,
    )
    .write(&dir)?;

    println!("records: {}", records.len());
    println!("inl_max({}): {inl_max}", arch.name());
    Ok(())
}
