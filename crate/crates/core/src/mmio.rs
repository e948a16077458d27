//! Text interchange: Matrix Market dense arrays and CSV convergence reports.
//!
//! Numbers are written with 17 significant digits (`{:.16e}`), enough for an
//! exact `f64` round trip. Line endings are always LF.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matcore::DenseMatrix;
use crate::verify::ConvergenceReport;

pub const MM_HEADER: &str = "%%MatrixMarket matrix array real general";
pub const CSV_HEADER: &str = "variant,epsilon,res_u,res_v,res_sigma";

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serializes `a` as a Matrix Market dense array, column-major.
pub fn matrix_to_string(a: &DenseMatrix, comments: &[&str]) -> String {
    let mut out = String::with_capacity(32 * (a.data().len() + 2));
    out.push_str(MM_HEADER);
    out.push('\n');
    for c in comments {
        for line in c.lines() {
            let _ = writeln!(out, "%{line}");
        }
    }
    let _ = writeln!(out, "{} {}", a.rows(), a.cols());
    for &x in a.data() {
        out.push_str(&fmt_f64(x));
        out.push('\n');
    }
    out
}

pub fn write_matrix(path: impl AsRef<Path>, a: &DenseMatrix) -> Result<()> {
    write_matrix_with_comments(path, a, &[])
}

pub fn write_matrix_with_comments(
    path: impl AsRef<Path>,
    a: &DenseMatrix,
    comments: &[&str],
) -> Result<()> {
    fs::write(path, matrix_to_string(a, comments))?;
    Ok(())
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    parse_matrix(&fs::read_to_string(path)?)
}

/// Parses a dense real general Matrix Market array.
pub fn parse_matrix(text: &str) -> Result<DenseMatrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        reason: "empty input".into(),
    })?;
    check_header(header)?;

    let mut size: Option<(usize, usize)> = None;
    let mut values = Vec::new();
    let mut last_line = 1;
    for (no, line) in lines {
        last_line = no;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        match size {
            None => {
                let dims: Vec<&str> = t.split_whitespace().collect();
                if dims.len() != 2 {
                    return Err(Error::Parse {
                        line: no,
                        reason: format!("expected `rows cols`, found `{t}`"),
                    });
                }
                let parse_dim = |s: &str| {
                    s.parse::<usize>().map_err(|_| Error::Parse {
                        line: no,
                        reason: format!("invalid dimension `{s}`"),
                    })
                };
                let (r, c) = (parse_dim(dims[0])?, parse_dim(dims[1])?);
                values.reserve(r * c);
                size = Some((r, c));
            }
            Some((r, c)) => {
                for tok in t.split_whitespace() {
                    if values.len() == r * c {
                        return Err(Error::Parse {
                            line: no,
                            reason: format!("more than {} values", r * c),
                        });
                    }
                    let v: f64 = tok.parse().map_err(|_| Error::Parse {
                        line: no,
                        reason: format!("invalid number `{tok}`"),
                    })?;
                    if !v.is_finite() {
                        return Err(Error::Parse {
                            line: no,
                            reason: format!("non-finite value `{tok}`"),
                        });
                    }
                    values.push(v);
                }
            }
        }
    }
    let (r, c) = size.ok_or_else(|| Error::Parse {
        line: last_line + 1,
        reason: "missing size line".into(),
    })?;
    if values.len() != r * c {
        return Err(Error::Parse {
            line: last_line + 1,
            reason: format!("expected {} values, found {}", r * c, values.len()),
        });
    }
    DenseMatrix::new(r, c, values)
}

fn check_header(header: &str) -> Result<()> {
    let words: Vec<String> = header
        .split_whitespace()
        .map(|w| w.to_ascii_lowercase())
        .collect();
    if words.first().map(String::as_str) != Some("%%matrixmarket") {
        return Err(Error::Parse {
            line: 1,
            reason: "missing %%MatrixMarket banner".into(),
        });
    }
    let rest: Vec<&str> = words[1..].iter().map(String::as_str).collect();
    match rest.as_slice() {
        ["matrix", "array", "real", "general"] => Ok(()),
        ["matrix", ..] => Err(Error::UnsupportedFormat(rest.join(" "))),
        _ => Err(Error::Parse {
            line: 1,
            reason: format!("malformed banner `{header}`"),
        }),
    }
}

/// CSV body: header, one row per sample, then `order_u`, `order_v`,
/// `order_sigma` rows of the form `name,order,r2`.
pub fn report_to_csv(report: &ConvergenceReport) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    let name = report.variant.name();
    for s in &report.samples {
        let _ = writeln!(
            out,
            "{name},{},{},{},{}",
            fmt_f64(s.epsilon),
            fmt_f64(s.res_u),
            fmt_f64(s.res_v),
            fmt_f64(s.res_sigma)
        );
    }
    for (key, fit) in [
        ("order_u", report.u),
        ("order_v", report.v),
        ("order_sigma", report.sigma),
    ] {
        let _ = writeln!(out, "{key},{},{}", fmt_f64(fit.order), fmt_f64(fit.r2));
    }
    out
}

pub fn write_report_csv(path: impl AsRef<Path>, report: &ConvergenceReport) -> Result<()> {
    fs::write(path, report_to_csv(report))?;
    Ok(())
}
