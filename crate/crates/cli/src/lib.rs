//! `svdpert` command-line front end.
//!
//! Every subcommand writes machine-readable `key: value` lines to standard
//! output and diagnostics to standard error. Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | I/O or input-file failure |
//! | 2 | usage error |
//! | 3 | singular value not separated (gap too small) |
//! | 4 | order fit unreliable |
//! | 5 | errata not demonstrable with the given parameters |

mod errata;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use svdpert::mmio::{self, fmt_f64};
use svdpert::verify::Ladder;
use svdpert::{
    matrix_with_spectrum, DenseMatrix, Error, FormulaVariant, PerturbationProblem, SpectrumSpec,
};

pub use errata::{errata_table, ErrataOutcome, ErrataRow, RowStatus};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_GAP: i32 = 3;
pub const EXIT_UNRELIABLE_FIT: i32 = 4;
pub const EXIT_ERRATA: i32 = 5;

/// Minimum `r²` of every fitted slope for `verify` to succeed.
pub const MIN_FIT_R2: f64 = 0.98;

#[derive(Debug, Parser)]
#[command(
    name = "svdpert",
    version,
    about = "First-order perturbation of singular triplets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a seeded matrix with prescribed singular values.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
        /// Comma-separated singular values, descending, min(n, p) of them.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        sv: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the first-order expansion of one singular triplet.
    Expand {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        e: PathBuf,
        /// 1-based index of the triplet in the descending spectrum.
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value = "corrected")]
        variant: FormulaVariant,
    },
    /// Measure the convergence order of an expansion over a ladder of steps.
    Verify {
        #[arg(long)]
        x: PathBuf,
        /// Perturbation direction; rescaled to unit Frobenius norm.
        #[arg(long)]
        edir: PathBuf,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value = "corrected")]
        variant: FormulaVariant,
        #[arg(long, default_value_t = svdpert::verify::DEFAULT_EPS0)]
        eps0: f64,
        #[arg(long, default_value_t = svdpert::verify::DEFAULT_FACTOR)]
        factor: f64,
        #[arg(long, default_value_t = svdpert::verify::DEFAULT_COUNT)]
        count: usize,
        /// CSV report destination.
        #[arg(long)]
        out: PathBuf,
    },
    /// Demonstrate each defect of the published expansion formulas.
    Errata {
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        p: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

/// Maps a library error to the exit-code contract.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) | Error::Parse { .. } | Error::UnsupportedFormat(_) => EXIT_IO,
        Error::GapTooSmall { .. } | Error::SingularSystem | Error::ConvergenceFailure { .. } => {
            EXIT_GAP
        }
        Error::InsufficientSamples { .. } | Error::TripletMatchAmbiguous { .. } => {
            EXIT_UNRELIABLE_FIT
        }
        Error::DimensionMismatch { .. }
        | Error::InvalidData { .. }
        | Error::NonFinite { .. }
        | Error::RankDeficient { .. }
        | Error::IndexOutOfRange { .. }
        | Error::InvalidDims { .. }
        | Error::ZeroVector
        | Error::InvalidLadder(_)
        | Error::DirectionNotNormalized { .. }
        | Error::InvalidSpectrum(_) => EXIT_USAGE,
    }
}

/// Runs the CLI on `args` (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Gen {
            n,
            p,
            sv,
            seed,
            out: path,
        } => cmd_gen(n, p, sv, seed, &path, out),
        Command::Expand { x, e, k, variant } => cmd_expand(&x, &e, k, variant, out),
        Command::Verify {
            x,
            edir,
            k,
            variant,
            eps0,
            factor,
            count,
            out: path,
        } => cmd_verify(
            &x,
            &edir,
            k,
            variant,
            Ladder {
                eps0,
                factor,
                count,
            },
            &path,
            out,
        ),
        Command::Errata { n, p, seed } => cmd_errata(n, p, seed, out, err),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn io<T>(r: std::io::Result<T>) -> svdpert::Result<T> {
    r.map_err(Error::from)
}

fn cmd_gen(
    n: usize,
    p: usize,
    sv: Vec<f64>,
    seed: u64,
    path: &PathBuf,
    out: &mut dyn Write,
) -> svdpert::Result<i32> {
    let spec = SpectrumSpec::new(n, p, sv, seed)?;
    let x = matrix_with_spectrum(&spec)?;
    let values: Vec<String> = spec.singular_values.iter().map(|&s| fmt_f64(s)).collect();
    let comment = format!(
        "svdpert gen n={n} p={p} seed={seed} sv={}",
        values.join(",")
    );
    mmio::write_matrix_with_comments(path, &x, &[&comment])?;
    io(writeln!(out, "wrote: {}", path.display()))?;
    Ok(EXIT_OK)
}

fn write_kv(out: &mut dyn Write, key: &str, values: &[f64]) -> svdpert::Result<()> {
    let mut line = format!("{key}:");
    for &v in values {
        line.push(' ');
        line.push_str(&fmt_f64(v));
    }
    io(writeln!(out, "{line}"))
}

fn write_matrix_kv(out: &mut dyn Write, key: &str, m: &DenseMatrix) -> svdpert::Result<()> {
    let mut line = format!("{key}: {} {}", m.rows(), m.cols());
    for &v in m.data() {
        line.push(' ');
        line.push_str(&fmt_f64(v));
    }
    io(writeln!(out, "{line}"))
}

fn cmd_expand(
    x_path: &PathBuf,
    e_path: &PathBuf,
    k: usize,
    variant: FormulaVariant,
    out: &mut dyn Write,
) -> svdpert::Result<i32> {
    let x = mmio::read_matrix(x_path)?;
    let e = mmio::read_matrix(e_path)?;
    let problem = PerturbationProblem::new(&x, k)?;
    let expansion = problem.expand(&e, variant)?;
    let proj = problem.projections(&e)?;
    let part = problem.partition();
    let (u1, v1) = if problem.is_transposed() {
        (&part.v1, &part.u1)
    } else {
        (&part.u1, &part.v1)
    };

    io(writeln!(out, "variant: {variant}"))?;
    io(writeln!(out, "k: {k}"))?;
    io(writeln!(
        out,
        "orientation: {}",
        if problem.is_transposed() {
            "transposed"
        } else {
            "direct"
        }
    ))?;
    write_kv(out, "sigma1", &[part.sigma1])?;
    write_kv(out, "sigma_tilde", &[expansion.sigma_tilde])?;
    write_kv(out, "u1", u1)?;
    write_kv(out, "v1", v1)?;
    write_kv(out, "u_tilde", &expansion.u_tilde)?;
    write_kv(out, "v_tilde", &expansion.v_tilde)?;
    write_kv(out, "phi1", &[proj.phi1])?;
    write_kv(out, "f12", &proj.f12)?;
    write_kv(out, "f21", &proj.f21)?;
    write_kv(out, "f31", &proj.f31)?;
    write_matrix_kv(out, "F22", &proj.f22)?;
    write_matrix_kv(out, "F32", &proj.f32)?;
    Ok(EXIT_OK)
}

fn cmd_verify(
    x_path: &PathBuf,
    e_path: &PathBuf,
    k: usize,
    variant: FormulaVariant,
    ladder: Ladder,
    csv_path: &PathBuf,
    out: &mut dyn Write,
) -> svdpert::Result<i32> {
    ladder.validate()?;
    let x = mmio::read_matrix(x_path)?;
    let e = mmio::read_matrix(e_path)?;
    let norm = e.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let e_dir = e.scaled(1.0 / norm);
    let problem = PerturbationProblem::new(&x, k)?;
    let report = problem.convergence_ladder(&e_dir, variant, ladder)?;
    mmio::write_report_csv(csv_path, &report)?;

    io(writeln!(out, "variant: {variant}"))?;
    io(writeln!(out, "samples: {}", report.samples.len()))?;
    for (name, fit) in [("u", report.u), ("v", report.v), ("sigma", report.sigma)] {
        write_kv(out, &format!("order_{name}"), &[fit.order])?;
        write_kv(out, &format!("fit_r2_{name}"), &[fit.r2])?;
    }
    io(writeln!(out, "csv: {}", csv_path.display()))?;
    Ok(if report.min_r2() >= MIN_FIT_R2 {
        EXIT_OK
    } else {
        EXIT_UNRELIABLE_FIT
    })
}

fn cmd_errata(
    n: usize,
    p: usize,
    seed: u64,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> svdpert::Result<i32> {
    let outcome = errata_table(n, p, seed)?;
    io(out.write_all(outcome.render().as_bytes()))?;
    if outcome.all_confirmed() {
        return Ok(EXIT_OK);
    }
    for row in &outcome.rows {
        if let RowStatus::NotApplicable(why) | RowStatus::NotConfirmed(why) = &row.status {
            io(writeln!(err, "item {}: {why}", row.item.label()))?;
        }
    }
    Ok(EXIT_ERRATA)
}
