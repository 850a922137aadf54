use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use heff::harness::{self, parse_noise, BackendChoice, RunConfig, SearchChoice, CHEMICAL_ACCURACY};
use heff::{HeffError, MeasurementStyle, Result};

#[derive(Parser)]
#[command(
    name = "heff",
    version,
    about = "Effective-Hamiltonian eigensolver on simulated ancilla circuits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Map a fermion-term file to a Pauli-sum file.
    Transform {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Select a subspace and write it as a bitstring file.
    Subspace {
        #[command(flatten)]
        run: RunArgs,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Build and diagonalize the effective Hamiltonian.
    Solve {
        #[command(flatten)]
        run: RunArgs,
        /// Result bundle directory.
        #[arg(short, long, env = "HEFF_OUTPUT")]
        output: Option<PathBuf>,
    },
    /// Solve every Hamiltonian file of a directory and tabulate the levels.
    Scan {
        dir: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        #[arg(short, long, env = "HEFF_OUTPUT")]
        output: Option<PathBuf>,
    },
    /// Sample a readout calibration for a noise model.
    Calibrate {
        #[arg(long, env = "HEFF_NOISE")]
        noise: String,
        #[arg(long)]
        qubits: usize,
        #[arg(long, env = "HEFF_SHOTS", default_value_t = 8000)]
        shots: u64,
        #[arg(long, env = "HEFF_SEED", default_value_t = 0)]
        seed: u64,
        /// JSON output file; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// Flags layered over an optional JSON config file.
#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Pauli-sum or fermion-term file.
    #[arg(long = "hamiltonian", short = 'H')]
    hamiltonian: Option<PathBuf>,
    #[arg(long, env = "HEFF_ELECTRONS")]
    electrons: Option<usize>,
    /// Fixed basis file instead of subspace selection.
    #[arg(long)]
    basis: Option<PathBuf>,
    /// oracle, exact, sampled or noisy.
    #[arg(long, env = "HEFF_BACKEND")]
    backend: Option<String>,
    #[arg(long, env = "HEFF_SHOTS")]
    shots: Option<u64>,
    #[arg(long, env = "HEFF_SEED")]
    seed: Option<u64>,
    /// Readout flip probabilities `p01,p10`.
    #[arg(long, env = "HEFF_NOISE")]
    noise: Option<String>,
    #[arg(long, env = "HEFF_MITIGATE")]
    mitigate: bool,
    #[arg(long, env = "HEFF_CALIBRATION_SHOTS")]
    calibration_shots: Option<u64>,
    /// direct or indirect.
    #[arg(long, env = "HEFF_STYLE")]
    style: Option<String>,
    /// Measure diagonal elements with circuits too.
    #[arg(long, env = "HEFF_CIRCUIT_DIAGONALS")]
    circuit_diagonals: bool,
    /// Highest excitation order of the subspace.
    #[arg(long, env = "HEFF_ORDER")]
    order: Option<usize>,
    /// Subspace size.
    #[arg(long, env = "HEFF_NS")]
    ns: Option<usize>,
    /// exhaustive or monte_carlo reference search.
    #[arg(long, env = "HEFF_SEARCH")]
    search: Option<String>,
    #[arg(long, env = "HEFF_SWEEPS")]
    sweeps: Option<usize>,
    #[arg(long, env = "HEFF_REPEATS")]
    repeats: Option<usize>,
    #[arg(long, env = "HEFF_DOS_BINS")]
    dos_bins: Option<usize>,
    #[arg(long, env = "HEFF_LEVELS")]
    levels: Option<usize>,
    /// Constant added to every eigenvalue.
    #[arg(long, env = "HEFF_SHIFT", allow_hyphen_values = true)]
    shift: Option<f64>,
}

impl RunArgs {
    fn into_config(self, needs_hamiltonian: bool) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.hamiltonian {
            cfg.hamiltonian = v;
        }
        if self.electrons.is_some() {
            cfg.electrons = self.electrons;
        }
        if self.basis.is_some() {
            cfg.basis = self.basis;
        }
        if let Some(v) = self.backend {
            cfg.backend = v.parse::<BackendChoice>()?;
        }
        if let Some(v) = self.shots {
            cfg.shots = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.noise {
            cfg.noise = Some(parse_noise(&v)?);
        }
        cfg.mitigate |= self.mitigate;
        if self.calibration_shots.is_some() {
            cfg.calibration_shots = self.calibration_shots;
        }
        if let Some(v) = self.style {
            cfg.style = v.parse::<MeasurementStyle>()?;
        }
        cfg.circuit_diagonals |= self.circuit_diagonals;
        if let Some(v) = self.order {
            cfg.order = v;
        }
        if self.ns.is_some() {
            cfg.ns = self.ns;
        }
        if let Some(v) = self.search {
            cfg.search = v.parse::<SearchChoice>()?;
        }
        if let Some(v) = self.sweeps {
            cfg.sweeps = v;
        }
        if let Some(v) = self.repeats {
            cfg.repeats = v;
        }
        if let Some(v) = self.dos_bins {
            cfg.dos_bins = v;
        }
        if let Some(v) = self.levels {
            cfg.levels = v;
        }
        if let Some(v) = self.shift {
            cfg.constant_shift = v;
        }
        if needs_hamiltonian && cfg.hamiltonian.as_os_str().is_empty() {
            return Err(HeffError::Invalid(
                "no Hamiltonian file given (--hamiltonian)".into(),
            ));
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Transform { input, output } => {
            let r = harness::transform(&input, &output)?;
            println!(
                "{} qubits, {} Pauli strings, max locality {}",
                r.qubits, r.terms, r.max_locality
            );
        }
        Command::Subspace { run, output } => {
            let cfg = run.into_config(true)?;
            let basis = harness::subspace(&cfg, &output)?;
            for w in &basis.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "{} states, reference {} (diagonal energy {:?})",
                basis.len(),
                basis.reference,
                basis.diagonal_energies[0]
            );
        }
        Command::Solve { run, output } => {
            let mut cfg = run.into_config(true)?;
            if let Some(o) = output {
                cfg.output = o;
            }
            let report = harness::solve(&cfg)?;
            for w in &report.basis.warnings {
                eprintln!("warning: {w}");
            }
            for r in &report.runs {
                let e0 = r.spectrum.eigenvalues[0];
                print!("run {}: E0 = {e0:.10} +/- {:.2e}", r.run, r.ground_stderr);
                if let Some(x) = report.exact.as_ref().and_then(|s| s.ground_energy()) {
                    let err = e0 - x;
                    let mark = if err.abs() <= CHEMICAL_ACCURACY {
                        "within"
                    } else {
                        "outside"
                    };
                    print!(", exact {x:.10}, error {err:.3e} ({mark} chemical accuracy)");
                }
                println!();
            }
            if report.runs.len() > 1 {
                if let Some((lo, hi)) = report.band(0) {
                    println!(
                        "E0 range over {} runs: [{lo:.10}, {hi:.10}]",
                        report.runs.len()
                    );
                }
            }
            println!("results in {}", cfg.output.display());
        }
        Command::Scan { dir, run, output } => {
            let mut cfg = run.into_config(false)?;
            if let Some(o) = output {
                cfg.output = o;
            }
            let points = harness::scan(&dir, &cfg)?;
            for p in &points {
                println!("R = {:?}: E0 = {:.10}", p.bond_length, p.levels[0]);
            }
            println!("table in {}", cfg.output.join("pes.csv").display());
        }
        Command::Calibrate {
            noise,
            qubits,
            shots,
            seed,
            output,
        } => {
            let cal = harness::calibrate(parse_noise(&noise)?, qubits, shots, seed)?;
            let text = serde_json::to_string_pretty(&cal)? + "\n";
            match output {
                Some(path) => harness::write_atomic(&path, &text)?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
