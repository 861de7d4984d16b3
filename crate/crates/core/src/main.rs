use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qbattery_core::capacity::{beta_grid, capacity_at_entropy, solve_beta_for_entropy, thermal_curve, write_diagram_csv, Branch};
use qbattery_core::harness::csvio::Table;
use qbattery_core::harness::scaling::sweep_scaling;
use qbattery_core::harness::table1::table1_verify;
use qbattery_core::harness::validate::run_validation;
use qbattery_core::harness::{certify_rows, run_trajectory, ScenarioConfig};
use qbattery_core::{Error, Model};

const EXIT_CONFIG: u8 = 2;
const EXIT_VIOLATION: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

#[derive(Parser)]
#[command(name = "qbattery", version, about = "Quantum battery charging simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory and write its CSV and summary JSON.
    Simulate { config: PathBuf },
    /// Run the scenario over `sweep.n_values` and fit power laws.
    Sweep { config: PathBuf },
    /// Thermal energy-entropy diagram of the battery Hamiltonian.
    Capacity { config: PathBuf },
    /// Check the closed-form paradigmatic results against simulation.
    Table1 {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Re-check every bound on the rows of a trajectory CSV.
    Certify { trajectory: PathBuf },
    /// Run every oracle cross-check.
    Validate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Numerical(_) => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn output_dir(cfg: &ScenarioConfig) -> Result<PathBuf, Error> {
    fs::create_dir_all(&cfg.outputs.directory)?;
    Ok(cfg.outputs.directory.clone())
}

fn simulate(path: &Path) -> Result<u8, Error> {
    let cfg = ScenarioConfig::load(path)?;
    let run = run_trajectory(&cfg).map_err(|e| with_context(e, path))?;
    let dir = output_dir(&cfg)?;
    let stem = cfg.stem();
    let table = run.trajectory.to_table(cfg.outputs.populations);
    let csv_path = dir.join(format!("{stem}.csv"));
    table.write(&csv_path)?;
    write_json(&dir.join(format!("{stem}_summary.json")), &run.summary)?;
    let report = certify_rows(&table)?;
    println!("{}", csv_path.display());
    if !report.passed() {
        eprintln!("{} bound violations", report.violations.len());
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(EXIT_VIOLATION);
    }
    Ok(0)
}

fn sweep(path: &Path) -> Result<u8, Error> {
    let cfg = ScenarioConfig::load(path)?;
    if cfg.sweep.is_none() {
        return Err(Error::Config(format!("{}: sweep section missing", path.display())));
    }
    let out = sweep_scaling(&cfg).map_err(|e| with_context(e, path))?;
    let dir = output_dir(&cfg)?;
    let stem = cfg.stem();
    let csv_path = dir.join(format!("{stem}_scaling.csv"));
    out.to_table().write(&csv_path)?;
    write_json(&dir.join(format!("{stem}_scaling.json")), &out.fits)?;
    write_json(&dir.join(format!("{stem}_summaries.json")), &out.summaries)?;
    for f in &out.fits {
        println!("{:<20} exponent {:>9.4}  residual {:.2e}", f.quantity, f.exponent, f.residual);
    }
    Ok(0)
}

fn capacity(path: &Path) -> Result<u8, Error> {
    let cfg = ScenarioConfig::load(path)?;
    let model = Model::build(&cfg.model, cfg.tolerances.level_rel_tol).map_err(|e| with_context(e, path))?;
    let cap = cfg.capacity.clone().unwrap_or_default();
    let dir = output_dir(&cfg)?;
    let stem = cfg.stem();
    let mut betas = beta_grid(cap.beta_min, cap.beta_max, cap.points);
    betas.insert(0, f64::NEG_INFINITY);
    betas.push(f64::INFINITY);
    let curve = thermal_curve(&model.h_b, &betas)?;
    let diagram = dir.join(format!("{stem}_capacity.csv"));
    write_diagram_csv(&curve, &diagram)?;
    if !cap.s_targets.is_empty() {
        let mut t = Table::new(["S_bits", "E_min", "E_max", "C", "beta_pos", "beta_neg"].map(String::from).to_vec());
        for &s in &cap.s_targets {
            let lo = solve_beta_for_entropy(&model.h_b, s, Branch::PositiveBeta)?;
            let hi = solve_beta_for_entropy(&model.h_b, s, Branch::NegativeBeta)?;
            let c = capacity_at_entropy(&model.h_b, s)?;
            t.push(vec![Some(s), Some(lo.e), Some(hi.e), Some(c), Some(lo.beta), Some(hi.beta)]);
        }
        t.write(&dir.join(format!("{stem}_capacity_targets.csv")))?;
    }
    println!("{}", diagram.display());
    Ok(0)
}

fn with_context(e: Error, path: &Path) -> Error {
    match e {
        Error::Numerical(m) => Error::Numerical(format!("{}: {m}", path.display())),
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => Error::Config(format!("{}: {other}", path.display())),
    }
}

fn table1(seed: u64) -> Result<u8, Error> {
    let report = table1_verify(1.0, seed)?;
    for c in &report.cells {
        println!("{} {:<14} N={} {:<13} max_rel_dev {:.2e}", if c.pass { "PASS" } else { "FAIL" }, c.family, c.n, c.quantity, c.max_rel_dev);
    }
    Ok(if report.passed() { 0 } else { EXIT_NUMERICAL })
}

fn certify(path: &Path) -> Result<u8, Error> {
    let table = Table::read(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let report = certify_rows(&table)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if report.passed() { 0 } else { EXIT_VIOLATION })
}

fn validate(seed: u64) -> Result<u8, Error> {
    let report = run_validation(seed)?;
    for c in &report.checks {
        println!("{} {:<28} max_dev {:.2e} tol {:.0e}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.max_dev, c.tol);
    }
    Ok(if report.passed() { 0 } else { EXIT_NUMERICAL })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate { config } => simulate(config),
        Command::Sweep { config } => sweep(config),
        Command::Capacity { config } => capacity(config),
        Command::Table1 { seed } => table1(*seed),
        Command::Certify { trajectory } => certify(trajectory),
        Command::Validate { seed } => validate(*seed),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
