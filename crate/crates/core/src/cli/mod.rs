//! Configuration-driven experiment runner behind the `maxcgo` binary.
//!
//! Every command reads a [`RunConfig`], writes its outputs into `--out`, and
//! finishes with `manifest.json` holding the config hash, the resolved
//! config, the seed, the thresholds and a SHA-256 of every output file.

pub mod checks;
mod commands;
pub mod config;

pub use checks::{checks_csv, operator_suite, relative_maxwell_residual, CheckResult, Relation};
pub use config::{parse_config, ConfigError, PhantomTag, RunConfig, Thresholds};

use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "maxcgo", version, about = "CGO solutions and uniqueness diagnostics for Maxwell systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration; defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Overrides `[run] seed`.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Progress on stderr.
    #[arg(long, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Write the material and derived fields of the phantom(s).
    Phantom,
    /// Run the operator invariant suite.
    CheckOps,
    /// Solve the CGO remainders for every configured s and variant.
    CgoSolve,
    /// Averaged remainder decay over the configured levels.
    DecayScan,
    /// Scattering functional over the ρ lattice ball.
    ScatterScan,
    /// Coefficients of the coupled Schrödinger system and the chain report.
    Uniqueness,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Phantom => "phantom",
            Command::CheckOps => "check-ops",
            Command::CgoSolve => "cgo-solve",
            Command::DecayScan => "decay-scan",
            Command::ScatterScan => "scatter-scan",
            Command::Uniqueness => "uniqueness",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver divergence: {0}")]
    Divergence(String),
    #[error("invariant failure: {0}")]
    Invariant(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Divergence(_) => EXIT_DIVERGENCE,
            CliError::Invariant(_) => EXIT_INVARIANT,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<crate::materials::MaterialError> for CliError {
    fn from(e: crate::materials::MaterialError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<crate::fields::FieldError> for CliError {
    fn from(e: crate::fields::FieldError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<crate::cgo::CgoError> for CliError {
    fn from(e: crate::cgo::CgoError) -> Self {
        use crate::cgo::CgoError as E;
        match e {
            E::Diverged { .. } => CliError::Divergence(e.to_string()),
            E::DecouplingViolation(_) => CliError::Invariant(e.to_string()),
            E::InvalidS(_) | E::ZeroRho | E::ParallelSeed | E::BadFrame | E::NotOnLattice(_) => {
                CliError::Config(e.to_string())
            }
            E::ZeroDenominator | E::SingularCompensation | E::Field(_) => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<crate::scattering::ScatteringError> for CliError {
    fn from(e: crate::scattering::ScatteringError) -> Self {
        use crate::scattering::ScatteringError as E;
        match e {
            E::Cgo(c) => c.into(),
            E::Mismatch(_) | E::NotOnLattice(_) => CliError::Config(e.to_string()),
            E::Field(f) => f.into(),
        }
    }
}

/// What a command hands back to the runner.
#[derive(Debug, Default)]
pub struct CommandReport {
    pub summary: serde_json::Value,
    /// Names of failed invariants; nonempty means exit code 4.
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
}

/// Output directory plus the list of files written so far.
pub struct RunContext {
    pub config: RunConfig,
    pub out: PathBuf,
    pub verbose: bool,
    outputs: Vec<OutputRecord>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` to a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

impl RunContext {
    pub fn new(config: RunConfig, out: PathBuf, verbose: bool) -> Self {
        Self { config, out, verbose, outputs: Vec::new() }
    }

    pub fn log(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("maxcgo: {}", msg.as_ref());
        }
    }

    fn record(&mut self, name: &str) -> Result<(), CliError> {
        let bytes = fs::read(self.out.join(name))?;
        self.outputs.push(OutputRecord { file: name.to_string(), sha256: sha256_hex(&bytes) });
        self.log(format!("wrote {name}"));
        Ok(())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        write_atomic(&self.out.join(name), text.as_bytes())?;
        self.record(name)
    }

    pub fn write_scalar(&mut self, name: &str, f: &crate::fields::ScalarField) -> Result<(), CliError> {
        crate::fields::write_scalar(self.out.join(name), f)?;
        self.record(name)
    }

    pub fn write_vector(&mut self, name: &str, v: &crate::fields::VectorField) -> Result<(), CliError> {
        crate::fields::write_vector(self.out.join(name), v)?;
        self.record(name)
    }

    pub fn write_field8(&mut self, name: &str, w: &crate::fields::Field8) -> Result<(), CliError> {
        crate::fields::write_field8(self.out.join(name), w)?;
        self.record(name)
    }

    pub fn outputs(&self) -> &[OutputRecord] {
        &self.outputs
    }
}

#[derive(serde::Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    status: &'static str,
    exit_code: i32,
    error: Option<String>,
    config_sha256: String,
    seed: u64,
    thresholds: &'a Thresholds,
    config: &'a RunConfig,
    summary: &'a serde_json::Value,
    failures: &'a [String],
    outputs: &'a [OutputRecord],
}

fn status_name(code: i32) -> &'static str {
    match code {
        EXIT_OK => "ok",
        EXIT_CONFIG => "config-error",
        EXIT_DIVERGENCE => "diverged",
        EXIT_INVARIANT => "invariant-failure",
        _ => "error",
    }
}

fn load_config(path: Option<&Path>) -> Result<(RunConfig, String), CliError> {
    let text = match path {
        Some(p) => fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
        None => String::new(),
    };
    let cfg = parse_config(&text)?;
    Ok((cfg, sha256_hex(text.as_bytes())))
}

/// Runs one command and returns the process exit code.
pub fn execute(cli: &Cli) -> i32 {
    let (mut config, config_sha256) = match load_config(cli.config.as_deref()) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("maxcgo: {e}");
            return e.exit_code();
        }
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Err(e) = fs::create_dir_all(&cli.out) {
        eprintln!("maxcgo: cannot create {}: {e}", cli.out.display());
        return EXIT_RUNTIME;
    }
    let mut ctx = RunContext::new(config, cli.out.clone(), cli.verbose);
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(|| commands::dispatch(cli.command, &mut ctx)),
            Err(e) => Err(CliError::Runtime(format!("thread pool: {e}"))),
        },
        None => commands::dispatch(cli.command, &mut ctx),
    };
    let (report, error, code) = match result {
        Ok(r) if r.failures.is_empty() => (r, None, EXIT_OK),
        Ok(r) => {
            let msg = format!("failed invariants: {}", r.failures.join(", "));
            (r, Some(msg), EXIT_INVARIANT)
        }
        Err(e) => (CommandReport::default(), Some(e.to_string()), e.exit_code()),
    };
    if let Some(msg) = &error {
        eprintln!("maxcgo {}: {msg}", cli.command.name());
    }
    let manifest = Manifest {
        tool: "maxcgo",
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name(),
        status: status_name(code),
        exit_code: code,
        error,
        config_sha256,
        seed: ctx.config.seed,
        thresholds: &ctx.config.thresholds,
        config: &ctx.config,
        summary: &report.summary,
        failures: &report.failures,
        outputs: ctx.outputs(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    if let Err(e) = write_atomic(&ctx.out.join("manifest.json"), text.as_bytes()) {
        eprintln!("maxcgo: cannot write manifest: {e}");
        return EXIT_RUNTIME;
    }
    code
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}
