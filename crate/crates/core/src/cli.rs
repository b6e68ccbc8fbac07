//! Command-line front end. The binary only forwards `std::env::args` here.
//!
//! Exit codes: 0 equivalent / verified / success, 1 inequivalent / not
//! verified, 2 inconclusive, 3 input or usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bloch::all_tensors;
use crate::error::{Error, Result};
use crate::hosvd::fingerprint;
use crate::io::{fingerprint_json, parse_state, parse_unitaries, state_to_json, tensors_json, unitaries_to_json};
use crate::oracle::{depolarize, make_lu_pair, random_density, Seed};
use crate::qstate::{lu_residual, DensityMatrix};
use crate::report::{check_report, to_pretty, verify_report, InputDigest};
use crate::symsearch::{decide, SearchConfig, Verdict};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "lu-equiv",
    version,
    about = "Decide local-unitary equivalence of multi-qubit states"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide whether two states are related by local unitaries.
    Check {
        /// State file of the reference state.
        a: PathBuf,
        /// State file of the candidate image.
        b: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Check a unitary tuple against two states.
    Verify {
        /// State file of the reference state.
        a: PathBuf,
        /// State file of the candidate image.
        b: PathBuf,
        /// File with a top-level "unitaries" array (a `check` report works).
        unitaries: PathBuf,
        /// Accept when max |b - (xU) a (xU)^dag| is at most this.
        #[arg(long, default_value_t = 1e-8)]
        tol_residual: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Print every correlation tensor of a state.
    Tensors {
        state: PathBuf,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the singular-spectra fingerprint of a state.
    Fingerprint {
        state: PathBuf,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write seeded random states.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    /// Max-norm tolerance when comparing singular spectra.
    #[arg(long, default_value_t = 1e-9)]
    pub tol_spectra: f64,
    /// Accept a certificate when max |b - (xU) a (xU)^dag| is at most this.
    #[arg(long, default_value_t = 1e-8)]
    pub tol_residual: f64,
    /// Number of refinement starts.
    #[arg(long, default_value_t = 64)]
    pub starts: usize,
    /// Iteration cap per refinement start.
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    /// Seed for every random start.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Wall-clock budget for the search; unlimited when absent.
    #[arg(long)]
    pub budget_ms: Option<u64>,
    /// Singular values closer than this are treated as degenerate.
    #[arg(long, default_value_t = 1e-8)]
    pub degeneracy_tol: f64,
    /// Singular values below this are treated as zero.
    #[arg(long, default_value_t = 1e-10)]
    pub zero_tol: f64,
}

impl SearchArgs {
    pub fn config(&self) -> SearchConfig {
        SearchConfig {
            tol_residual: self.tol_residual,
            tol_spectra: self.tol_spectra,
            n_starts: self.starts,
            max_iters: self.max_iters,
            seed: self.seed,
            budget_ms: self.budget_ms,
            degeneracy_tol: self.degeneracy_tol,
            zero_tol: self.zero_tol,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Print the JSON report instead of a summary.
    #[arg(long)]
    pub json: bool,
    /// Also write the JSON report to this file.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenerateMode {
    Random,
    LuPair,
    PerturbedPair,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    /// random: one state; lu-pair: a state, a local-unitary image and the
    /// unitaries; perturbed-pair: a state and a depolarized image.
    #[arg(long, value_enum)]
    pub mode: GenerateMode,
    #[arg(long, default_value_t = 2)]
    pub n_qubits: usize,
    /// Defaults to full rank.
    #[arg(long)]
    pub rank: Option<usize>,
    /// Seed for the state and the unitaries.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Depolarizing weight for perturbed-pair.
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    /// Directory for the output files.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

/// Parse `args` (including the program name) and run.
pub fn run_from<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli, out, err),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            code
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INPUT
        }
    }
}

fn load(path: &Path) -> Result<(DensityMatrix, InputDigest)> {
    let bytes = fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| Error::Parse(e.to_string()))?;
    let doc = parse_state(&text)?;
    Ok((doc.state, InputDigest::new(path, &bytes)))
}

fn emit(out: &mut dyn Write, text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Check { a, b, search, output } => {
            let cfg = search.config();
            cfg.validate()?;
            let (rho, da) = load(&a)?;
            let (sigma, db) = load(&b)?;
            let start = Instant::now();
            let verdict = decide(&rho, &sigma, &cfg)?;
            let report = to_pretty(&check_report(&[da, db], &cfg, &verdict, start.elapsed().as_millis()));
            if let Some(p) = &output.report {
                fs::write(p, &report)?;
            }
            if output.json {
                out.write_all(report.as_bytes())?;
            } else {
                write_summary(out, &verdict)?;
            }
            Ok(match verdict {
                Verdict::Equivalent(_) => EXIT_OK,
                Verdict::Inequivalent(_) => EXIT_NEGATIVE,
                Verdict::Inconclusive { .. } => EXIT_INCONCLUSIVE,
            })
        }
        Command::Verify {
            a,
            b,
            unitaries,
            tol_residual,
            output,
        } => {
            if !(tol_residual.is_finite() && tol_residual > 0.0) {
                return Err(Error::InvalidConfig("tol_residual must be positive".into()));
            }
            let (rho, da) = load(&a)?;
            let (sigma, db) = load(&b)?;
            let ubytes = fs::read(&unitaries)?;
            let u = parse_unitaries(&String::from_utf8_lossy(&ubytes))?;
            let start = Instant::now();
            let residual = lu_residual(&rho, &sigma, &u)?;
            let du = InputDigest::new(&unitaries, &ubytes);
            let report = to_pretty(&verify_report(
                &[da, db, du],
                tol_residual,
                residual,
                start.elapsed().as_millis(),
            ));
            if let Some(p) = &output.report {
                fs::write(p, &report)?;
            }
            let ok = residual <= tol_residual;
            if output.json {
                out.write_all(report.as_bytes())?;
            } else {
                writeln!(
                    out,
                    "{}: max residual {residual:e} (tol {tol_residual:e})",
                    if ok { "verified" } else { "not verified" }
                )?;
            }
            Ok(if ok { EXIT_OK } else { EXIT_NEGATIVE })
        }
        Command::Tensors { state, out: path } => {
            let (rho, _) = load(&state)?;
            emit(out, &tensors_json(&all_tensors(&rho)?), path.as_deref())?;
            Ok(EXIT_OK)
        }
        Command::Fingerprint { state, out: path } => {
            let (rho, _) = load(&state)?;
            emit(
                out,
                &fingerprint_json(&fingerprint(&all_tensors(&rho)?)?),
                path.as_deref(),
            )?;
            Ok(EXIT_OK)
        }
        Command::Generate(g) => {
            for path in generate(&g)? {
                writeln!(out, "{}", path.display())?;
            }
            Ok(EXIT_OK)
        }
    }
}

fn write_summary(out: &mut dyn Write, verdict: &Verdict) -> Result<()> {
    match verdict {
        Verdict::Equivalent(e) => {
            writeln!(out, "equivalent: certificate residual {:e}", e.residual)?;
            for (i, u) in e.units.units().iter().enumerate() {
                let c = |r: usize, k: usize| complex_text(u[(r, k)]);
                writeln!(
                    out,
                    "  U{} = [[{}, {}], [{}, {}]]",
                    i + 1,
                    c(0, 0),
                    c(0, 1),
                    c(1, 0),
                    c(1, 1)
                )?;
            }
        }
        Verdict::Inequivalent(w) => {
            writeln!(
                out,
                "inequivalent: subset {} mode {} spectra differ by {:e}",
                w.subset, w.mode, w.gap
            )?;
        }
        Verdict::Inconclusive {
            best_residual,
            starts_used,
            budget_exhausted,
        } => {
            writeln!(
                out,
                "inconclusive: best tensor residual {best_residual:e} after {starts_used} starts{}",
                if *budget_exhausted { " (budget exhausted)" } else { "" }
            )?;
        }
    }
    Ok(())
}

fn complex_text(z: num_complex::Complex64) -> String {
    // round first so tiny negative values do not print as -0.000000
    let r = |x: f64| (x * 1e6).round() / 1e6 + 0.0;
    let (re, im) = (r(z.re), r(z.im));
    let sign = if im < 0.0 { '-' } else { '+' };
    format!("{re:.6}{sign}{:.6}i", im.abs())
}

/// Write the generated files and return their paths.
pub fn generate(g: &GenerateArgs) -> Result<Vec<PathBuf>> {
    if !(g.eps.is_finite() && (0.0..=1.0).contains(&g.eps)) {
        return Err(Error::InvalidConfig(format!("eps must lie in [0, 1], got {}", g.eps)));
    }
    let n = g.n_qubits;
    if n == 0 || n > crate::qstate::MAX_QUBITS {
        return Err(Error::InvalidQubitCount(n));
    }
    let rank = g.rank.unwrap_or(1 << n);
    let seed = Seed(g.seed);
    let rho = random_density(n, rank, seed.derive(1))?;
    fs::create_dir_all(&g.out_dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, text: String| -> Result<()> {
        let p = g.out_dir.join(name);
        fs::write(&p, text)?;
        written.push(p);
        Ok(())
    };
    match g.mode {
        GenerateMode::Random => {
            put("state.json", state_to_json(&rho, Some(g.seed), Some("random")))?;
        }
        GenerateMode::LuPair => {
            let (sigma, u) = make_lu_pair(&rho, seed.derive(2))?;
            put("rho.json", state_to_json(&rho, Some(g.seed), Some("lu-pair")))?;
            put("sigma.json", state_to_json(&sigma, Some(g.seed), Some("lu-pair")))?;
            put("unitaries.json", unitaries_to_json(&u))?;
        }
        GenerateMode::PerturbedPair => {
            let (moved, _) = make_lu_pair(&rho, seed.derive(2))?;
            let sigma = depolarize(&moved, g.eps)?;
            let note = format!("perturbed-pair eps={}", g.eps);
            put("rho.json", state_to_json(&rho, Some(g.seed), Some(&note)))?;
            put("sigma.json", state_to_json(&sigma, Some(g.seed), Some(&note)))?;
        }
    }
    Ok(written)
}
