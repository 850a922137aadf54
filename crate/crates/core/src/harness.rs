//! End-to-end pipeline driven by a serializable run configuration: file
//! ingestion, subspace selection, effective-Hamiltonian estimation, spectra
//! and result bundles.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{FlipRates, ReadoutNoise};
use crate::error::{HeffError, Result};
use crate::estimator::{
    build_calibration, Backend, CalibrationMatrix, CircuitAccounting, EffectiveHamiltonian,
    Estimator, MeasurementStyle,
};
use crate::fermion::{jw_transform, FermionHamiltonian};
use crate::pauli::PauliSum;
use crate::rng::{derive_seed, stream};
use crate::spectra::{
    dos, eigendecompose, eigenvalue_stderr, exact_sector_spectrum, Binning, Spectrum,
    MAX_DENSE_DIMENSION,
};
use crate::subspace::{
    binomial, build_subspace, parse_states, AnnealSchedule, SearchStrategy, SubspaceBasis,
    SubspaceSpec, TargetSize,
};

/// Ground-state error regarded as chemically accurate, in Hartree.
pub const CHEMICAL_ACCURACY: f64 = 5e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    #[default]
    Oracle,
    Exact,
    Sampled,
    Noisy,
}

impl FromStr for BackendChoice {
    type Err = HeffError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "oracle" => Ok(BackendChoice::Oracle),
            "exact" | "exact_circuit" => Ok(BackendChoice::Exact),
            "sampled" => Ok(BackendChoice::Sampled),
            "noisy" | "sampled_noisy" => Ok(BackendChoice::Noisy),
            other => Err(HeffError::invalid(format!(
                "unknown backend '{other}' (expected oracle, exact, sampled or noisy)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchChoice {
    #[default]
    Exhaustive,
    MonteCarlo,
}

impl FromStr for SearchChoice {
    type Err = HeffError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "exhaustive" => Ok(SearchChoice::Exhaustive),
            "monte_carlo" | "anneal" => Ok(SearchChoice::MonteCarlo),
            other => Err(HeffError::invalid(format!(
                "unknown search strategy '{other}' (expected exhaustive or monte_carlo)"
            ))),
        }
    }
}

/// Parses `p01,p10`.
pub fn parse_noise(s: &str) -> Result<[f64; 2]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || HeffError::invalid(format!("noise '{s}' must be two probabilities 'p01,p10'"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let p01 = parts[0].parse().map_err(|_| bad())?;
    let p10 = parts[1].parse().map_err(|_| bad())?;
    FlipRates::new(p01, p10)?;
    Ok([p01, p10])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Pauli-sum or fermion-term file.
    pub hamiltonian: PathBuf,
    pub electrons: Option<usize>,
    /// Fixed basis file; replaces subspace selection when present.
    pub basis: Option<PathBuf>,
    pub output: PathBuf,
    pub backend: BackendChoice,
    pub shots: u64,
    pub seed: u64,
    /// Readout flip probabilities `[p01, p10]` for the noisy backend.
    pub noise: Option<[f64; 2]>,
    pub mitigate: bool,
    pub calibration_shots: Option<u64>,
    pub style: MeasurementStyle,
    pub circuit_diagonals: bool,
    pub order: usize,
    /// Subspace size; every enumerated state when absent.
    pub ns: Option<usize>,
    pub search: SearchChoice,
    pub sweeps: usize,
    pub repeats: usize,
    pub dos_bins: usize,
    /// Number of lowest levels reported by scans.
    pub levels: usize,
    /// Added to every eigenvalue.
    pub constant_shift: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            hamiltonian: PathBuf::new(),
            electrons: None,
            basis: None,
            output: PathBuf::from("out"),
            backend: BackendChoice::Oracle,
            shots: 8000,
            seed: 0,
            noise: None,
            mitigate: false,
            calibration_shots: None,
            style: MeasurementStyle::Direct,
            circuit_diagonals: false,
            order: 2,
            ns: None,
            search: SearchChoice::Exhaustive,
            sweeps: 200,
            repeats: 1,
            dos_bins: 50,
            levels: 4,
            constant_shift: 0.0,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_file(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if matches!(self.backend, BackendChoice::Sampled | BackendChoice::Noisy) && self.shots == 0
        {
            return Err(HeffError::invalid("sampled backends need shots > 0"));
        }
        if self.backend == BackendChoice::Noisy && self.noise.is_none() {
            return Err(HeffError::invalid(
                "the noisy backend needs --noise p01,p10",
            ));
        }
        if let Some([p01, p10]) = self.noise {
            FlipRates::new(p01, p10)?;
        }
        if self.repeats == 0 {
            return Err(HeffError::invalid("repeat count must be positive"));
        }
        if self.dos_bins == 0 {
            return Err(HeffError::invalid("DOS bin count must be positive"));
        }
        if self.ns == Some(0) {
            return Err(HeffError::invalid("subspace size must be positive"));
        }
        Ok(())
    }

    /// Backend for one run, seeded with `seed`.
    pub fn backend_with_seed(&self, seed: u64) -> Result<Backend> {
        let b = match self.backend {
            BackendChoice::Oracle => Backend::oracle(),
            BackendChoice::Exact => Backend::exact(),
            BackendChoice::Sampled => Backend::sampled(self.shots, seed),
            BackendChoice::Noisy => {
                let [p01, p10] = self
                    .noise
                    .ok_or_else(|| HeffError::invalid("the noisy backend needs a noise model"))?;
                Backend::noisy(
                    self.shots,
                    seed,
                    ReadoutNoise::uniform(p01, p10)?,
                    self.mitigate,
                )
            }
        };
        let mut b = b
            .with_style(self.style)
            .with_circuit_diagonals(self.circuit_diagonals);
        b.calibration_shots = self.calibration_shots;
        Ok(b)
    }

    fn repeat_seed(&self, run: usize) -> u64 {
        if self.repeats == 1 {
            self.seed
        } else {
            derive_seed(self.seed, &[stream::REPEAT, run as u64])
        }
    }

    pub fn subspace_spec(&self) -> Result<SubspaceSpec> {
        let particles = self
            .electrons
            .ok_or_else(|| HeffError::invalid("the electron count is required"))?;
        let strategy = match self.search {
            SearchChoice::Exhaustive => SearchStrategy::Exhaustive,
            SearchChoice::MonteCarlo => SearchStrategy::MonteCarlo(AnnealSchedule {
                sweeps: self.sweeps,
                ..AnnealSchedule::with_seed(derive_seed(self.seed, &[stream::REFERENCE_SEARCH]))
            }),
        };
        Ok(SubspaceSpec::new(particles, self.order)
            .with_target(self.ns.map_or(TargetSize::All, TargetSize::Count))
            .with_strategy(strategy))
    }
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| HeffError::Invalid(format!("{}: {e}", path.display())))
}

/// Reads a Hamiltonian file; fermion-term files (starting with `modes`) are
/// mapped to qubits first.
pub fn load_hamiltonian(path: &Path) -> Result<PauliSum> {
    let text = read_file(path)?;
    let first = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .find(|l| !l.is_empty())
        .unwrap_or("");
    if first.starts_with("modes") {
        jw_transform(&FermionHamiltonian::parse_text(&text)?)
    } else {
        PauliSum::parse_text(&text)
    }
}

/// Writes via a temporary sibling and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformReport {
    pub qubits: usize,
    pub terms: usize,
    pub max_locality: usize,
}

/// Maps a fermion-term file to a Pauli-sum file.
pub fn transform(input: &Path, output: &Path) -> Result<TransformReport> {
    let fermion = FermionHamiltonian::parse_text(&read_file(input)?)?;
    let h = jw_transform(&fermion)?;
    write_atomic(output, &h.to_text())?;
    Ok(TransformReport {
        qubits: h.qubit_count(),
        terms: h.len(),
        max_locality: h.max_locality(),
    })
}

/// Selects (or loads) the subspace described by `cfg`.
pub fn select_subspace(h: &PauliSum, cfg: &RunConfig) -> Result<SubspaceBasis> {
    match &cfg.basis {
        Some(path) => {
            let states = parse_states(&read_file(path)?)?;
            let basis = SubspaceBasis::from_states(h, states)?;
            if let Some(nf) = cfg.electrons {
                if basis.reference.particle_count() != nf {
                    return Err(HeffError::invalid(format!(
                        "basis file holds {}-particle states but {nf} electrons were requested",
                        basis.reference.particle_count()
                    )));
                }
            }
            Ok(basis)
        }
        None => build_subspace(h, &cfg.subspace_spec()?),
    }
}

/// Writes the selected subspace as a bitstring file and returns it.
pub fn subspace(cfg: &RunConfig, output: &Path) -> Result<SubspaceBasis> {
    let h = load_hamiltonian(&cfg.hamiltonian)?;
    let basis = build_subspace(&h, &cfg.subspace_spec()?)?;
    write_atomic(output, &basis.to_text())?;
    Ok(basis)
}

/// Samples a readout calibration for `qubits` qubits.
pub fn calibrate(
    noise: [f64; 2],
    qubits: usize,
    shots: u64,
    seed: u64,
) -> Result<CalibrationMatrix> {
    let noise = ReadoutNoise::uniform(noise[0], noise[1])?;
    build_calibration(
        &noise,
        qubits,
        shots,
        derive_seed(seed, &[stream::CALIBRATION]),
    )
}

/// Result of one estimation run.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub run: usize,
    pub seed: u64,
    pub heff: EffectiveHamiltonian,
    pub spectrum: Spectrum,
    pub ground_stderr: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub run: usize,
    pub seed: Option<u64>,
    pub accounting: CircuitAccounting,
    pub ground_energy: f64,
    pub ground_stderr: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub version: &'static str,
    pub config: RunConfig,
    pub qubits: usize,
    pub pauli_terms: usize,
    pub offdiagonal_terms: usize,
    pub basis_size: usize,
    pub reference: String,
    pub exact_sector_dimension: Option<usize>,
    pub expected_accounting: CircuitAccounting,
    pub runs: Vec<RunManifest>,
    pub warnings: Vec<String>,
    pub files: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
struct Timing {
    subspace_seconds: f64,
    exact_seconds: f64,
    run_seconds: Vec<f64>,
    total_seconds: f64,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub basis: SubspaceBasis,
    pub runs: Vec<RunResult>,
    pub exact: Option<Spectrum>,
    pub manifest: Manifest,
}

impl SolveReport {
    /// `(min, max)` over runs of eigenvalue `k`.
    pub fn band(&self, k: usize) -> Option<(f64, f64)> {
        self.runs
            .iter()
            .map(|r| r.spectrum.eigenvalues.get(k).copied())
            .try_fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
                e.map(|e| (lo.min(e), hi.max(e)))
            })
    }
}

fn exact_reference(h: &PauliSum, particles: usize, shift: f64) -> Result<Option<Spectrum>> {
    if binomial(h.qubit_count(), particles) > MAX_DENSE_DIMENSION as u128 {
        return Ok(None);
    }
    Ok(Some(exact_sector_spectrum(h, particles)?.shifted(shift)))
}

/// Runs the pipeline on an already loaded Hamiltonian. Writes the result
/// bundle when `out` is given.
pub fn solve_hamiltonian(h: &PauliSum, cfg: &RunConfig, out: Option<&Path>) -> Result<SolveReport> {
    cfg.validate()?;
    let started = Instant::now();
    let basis = select_subspace(h, cfg)?;
    let subspace_seconds = started.elapsed().as_secs_f64();

    let t = Instant::now();
    let particles = basis.reference.particle_count();
    let exact = exact_reference(h, particles, cfg.constant_shift)?;
    let exact_seconds = t.elapsed().as_secs_f64();

    let runs: Vec<RunResult> = (0..cfg.repeats)
        .into_par_iter()
        .map(|run| {
            let t = Instant::now();
            let seed = cfg.repeat_seed(run);
            let backend = cfg.backend_with_seed(seed)?;
            let heff = Estimator::new(h, backend)?.build(&basis)?;
            let spectrum = eigendecompose(&heff)?;
            let ground_stderr = eigenvalue_stderr(&heff, &spectrum, 0).unwrap_or(0.0);
            let spectrum = spectrum.shifted(cfg.constant_shift);
            Ok(RunResult {
                run,
                seed,
                heff,
                spectrum,
                ground_stderr,
                seconds: t.elapsed().as_secs_f64(),
            })
        })
        .collect::<Result<_>>()?;

    let backend = cfg.backend_with_seed(cfg.seed)?;
    let off_terms = h.classify().1.len();
    let mut manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        config: cfg.clone(),
        qubits: h.qubit_count(),
        pauli_terms: h.len(),
        offdiagonal_terms: off_terms,
        basis_size: basis.len(),
        reference: basis.reference.to_string(),
        exact_sector_dimension: exact.as_ref().map(Spectrum::len),
        expected_accounting: CircuitAccounting::closed_form(basis.len(), off_terms, &backend),
        runs: runs
            .iter()
            .map(|r| RunManifest {
                run: r.run,
                seed: r.heff.backend.seed(),
                accounting: r.heff.accounting,
                ground_energy: r.spectrum.eigenvalues[0],
                ground_stderr: r.ground_stderr,
            })
            .collect(),
        warnings: basis.warnings.clone(),
        files: Vec::new(),
    };

    let mut report = SolveReport {
        basis,
        runs,
        exact,
        manifest: manifest.clone(),
    };
    if let Some(dir) = out {
        manifest.files = write_bundle(dir, cfg, &report)?;
        write_atomic(
            &dir.join("manifest.json"),
            &(serde_json::to_string_pretty(&manifest)? + "\n"),
        )?;
        let timing = Timing {
            subspace_seconds,
            exact_seconds,
            run_seconds: report.runs.iter().map(|r| r.seconds).collect(),
            total_seconds: started.elapsed().as_secs_f64(),
        };
        write_atomic(
            &dir.join("timing.json"),
            &(serde_json::to_string_pretty(&timing)? + "\n"),
        )?;
        report.manifest = manifest;
    }
    Ok(report)
}

fn error_rows(report: &SolveReport) -> String {
    let mut out =
        String::from("run,index,eigenvalue,exact,error,stderr,chemical_accuracy,within\n");
    let Some(exact) = &report.exact else {
        return out;
    };
    for r in &report.runs {
        for (k, (&e, &x)) in r
            .spectrum
            .eigenvalues
            .iter()
            .zip(&exact.eigenvalues)
            .enumerate()
        {
            let err = e - x;
            let stderr = if k == 0 { r.ground_stderr } else { f64::NAN };
            out.push_str(&format!(
                "{},{k},{e:?},{x:?},{err:?},{stderr:?},{CHEMICAL_ACCURACY:?},{}\n",
                r.run,
                err.abs() <= CHEMICAL_ACCURACY
            ));
        }
    }
    out
}

fn write_bundle(dir: &Path, cfg: &RunConfig, report: &SolveReport) -> Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let mut put = |name: String, contents: String| -> Result<()> {
        write_atomic(&dir.join(&name), &contents)?;
        files.push(name);
        Ok(())
    };
    for r in &report.runs {
        let prefix = if report.runs.len() == 1 {
            String::new()
        } else {
            format!("runs/run_{:03}/", r.run)
        };
        put(format!("{prefix}heff.json"), r.heff.to_json()? + "\n")?;
        put(format!("{prefix}spectrum.csv"), r.spectrum.to_csv())?;
        put(
            format!("{prefix}dos.csv"),
            dos(&r.spectrum, Binning::Count(cfg.dos_bins))?.to_csv(),
        )?;
    }
    if report.runs.len() > 1 {
        let mut agg = String::from("index,min,max,mean\n");
        let ns = report.runs[0].spectrum.len();
        for k in 0..ns {
            let (lo, hi) = report.band(k).expect("every run has ns eigenvalues");
            let mean = report
                .runs
                .iter()
                .map(|r| r.spectrum.eigenvalues[k])
                .sum::<f64>()
                / report.runs.len() as f64;
            agg.push_str(&format!("{k},{lo:?},{hi:?},{mean:?}\n"));
        }
        put("aggregate.csv".into(), agg)?;
    }
    if let Some(exact) = &report.exact {
        put("exact_spectrum.csv".into(), exact.to_csv())?;
        put("error.csv".into(), error_rows(report))?;
    }
    Ok(files)
}

/// Full `solve`: loads the configured Hamiltonian and writes the bundle to
/// `cfg.output`.
pub fn solve(cfg: &RunConfig) -> Result<SolveReport> {
    let h = load_hamiltonian(&cfg.hamiltonian)?;
    solve_hamiltonian(&h, cfg, Some(&cfg.output))
}

/// Bond length parsed from the last number in a file stem, e.g.
/// `h2_R0.74.pauli` gives 0.74.
pub fn parse_bond_length(path: &Path) -> Option<f64> {
    let stem = path.file_stem()?.to_str()?;
    let mut best = None;
    let mut current = String::new();
    for ch in stem.chars().chain(std::iter::once(' ')) {
        if ch.is_ascii_digit() || ch == '.' {
            current.push(ch);
        } else if !current.is_empty() {
            if let Ok(v) = current.trim_matches('.').parse::<f64>() {
                best = Some(v);
            }
            current.clear();
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanPoint {
    pub bond_length: f64,
    pub file: String,
    pub levels: Vec<f64>,
    pub exact_levels: Option<Vec<f64>>,
}

/// Runs `solve` for every Hamiltonian file in `dir`, ordered by bond length,
/// and writes `pes.csv` plus one bundle per point under `cfg.output`.
pub fn scan(dir: &Path, cfg: &RunConfig) -> Result<Vec<ScanPoint>> {
    cfg.validate()?;
    let mut files: Vec<(f64, PathBuf)> = Vec::new();
    let entries =
        fs::read_dir(dir).map_err(|e| HeffError::Invalid(format!("{}: {e}", dir.display())))?;
    for entry in entries {
        let path = entry?.path();
        if !path.is_file() {
            continue;
        }
        let r = parse_bond_length(&path).ok_or_else(|| {
            HeffError::invalid(format!("no bond length in file name {}", path.display()))
        })?;
        files.push((r, path));
    }
    if files.is_empty() {
        return Err(HeffError::invalid(format!(
            "no Hamiltonian files in {}",
            dir.display()
        )));
    }
    files.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));

    let hamiltonians = files
        .iter()
        .map(|(_, p)| load_hamiltonian(p))
        .collect::<Result<Vec<_>>>()?;
    let qubits = hamiltonians[0].qubit_count();
    if let Some((k, h)) = hamiltonians
        .iter()
        .enumerate()
        .find(|(_, h)| h.qubit_count() != qubits)
    {
        return Err(HeffError::invalid(format!(
            "{} has {} qubits but {} has {qubits}",
            files[k].1.display(),
            h.qubit_count(),
            files[0].1.display()
        )));
    }

    let points: Vec<ScanPoint> = files
        .par_iter()
        .zip(hamiltonians.par_iter())
        .enumerate()
        .map(|(k, ((r, path), h))| {
            let mut point_cfg = cfg.clone();
            point_cfg.hamiltonian = path.clone();
            point_cfg.seed = derive_seed(cfg.seed, &[stream::SCAN_POINT, k as u64]);
            let name = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("point")
                .to_string();
            point_cfg.output = cfg.output.join(&name);
            let report = solve_hamiltonian(h, &point_cfg, Some(&point_cfg.output))?;
            let take = |s: &Spectrum| s.eigenvalues.iter().take(cfg.levels).copied().collect();
            Ok(ScanPoint {
                bond_length: *r,
                file: path
                    .file_name()
                    .and_then(|s| s.to_str())
                    .unwrap_or_default()
                    .to_string(),
                levels: take(&report.runs[0].spectrum),
                exact_levels: report.exact.as_ref().map(take),
            })
        })
        .collect::<Result<_>>()?;

    write_atomic(&cfg.output.join("pes.csv"), &pes_table(&points, cfg))?;
    Ok(points)
}

fn pes_table(points: &[ScanPoint], cfg: &RunConfig) -> String {
    let width = points.iter().map(|p| p.levels.len()).max().unwrap_or(0);
    let mut out = String::from("R,backend");
    for k in 0..width {
        out.push_str(&format!(",E{k}"));
    }
    out.push('\n');
    let backend = serde_json::to_value(cfg.backend)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default();
    let mut row = |r: f64, label: &str, levels: &[f64]| {
        out.push_str(&format!("{r:?},{label}"));
        for k in 0..width {
            match levels.get(k) {
                Some(e) => out.push_str(&format!(",{e:?}")),
                None => out.push(','),
            }
        }
        out.push('\n');
    };
    for p in points {
        row(p.bond_length, &backend, &p.levels);
        if let Some(x) = &p.exact_levels {
            row(p.bond_length, "exact", x);
        }
    }
    out
}
