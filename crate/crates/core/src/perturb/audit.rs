//! Symbolic dimension check of the expansion formulas.
//!
//! Each formula is a sum of terms; a term is a product chain of named blocks.
//! Dimensions are propagated left to right and every term that cannot be
//! formed, or that has the wrong shape for the sum it sits in, is reported.
//! Terms containing an empty block (the `U₃` complement when `n = p`) vanish
//! and are skipped. No floating-point work is done.

use std::fmt;

use crate::error::{Error, Result};

/// The five defects of the published expansion formulas, grouped by formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrataItem {
    /// `ũ₁`: minus instead of plus after `v₁`.
    LeftSign,
    /// `ũ₁`: `V₂` instead of `V₂ᵀ` after `Σ₂`.
    LeftTranspose,
    /// `ũ₁`: `U₃` missing in front of `U₃ᵀEv₁`.
    LeftOmission,
    /// `ṽ₁`: `V₂` instead of `V₂ᵀ` after `σ₁`.
    RightTranspose,
    /// `ṽ₁`: minus instead of plus after `u₁`.
    RightSign,
}

impl ErrataItem {
    pub const ALL: [ErrataItem; 5] = [
        ErrataItem::LeftSign,
        ErrataItem::LeftTranspose,
        ErrataItem::LeftOmission,
        ErrataItem::RightTranspose,
        ErrataItem::RightSign,
    ];

    /// `"1.1"` … `"2.2"`: formula number, then position within it.
    pub fn label(self) -> &'static str {
        match self {
            ErrataItem::LeftSign => "1.1",
            ErrataItem::LeftTranspose => "1.2",
            ErrataItem::LeftOmission => "1.3",
            ErrataItem::RightTranspose => "2.1",
            ErrataItem::RightSign => "2.2",
        }
    }

    pub fn formula(self) -> &'static str {
        match self {
            ErrataItem::LeftSign | ErrataItem::LeftTranspose | ErrataItem::LeftOmission => {
                "u_tilde"
            }
            ErrataItem::RightTranspose | ErrataItem::RightSign => "v_tilde",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ErrataItem::LeftSign => "sign of Sigma_2 coupling term after v_1 is minus",
            ErrataItem::LeftTranspose => "V_2 used where V_2^T is needed after Sigma_2",
            ErrataItem::LeftOmission => "U_3 missing before U_3^T E v_1",
            ErrataItem::RightTranspose => "V_2 used where V_2^T is needed after sigma_1",
            ErrataItem::RightSign => "sign of Sigma_2 coupling term after u_1 is minus",
        }
    }

    /// Whether the defect changes dimensions (and so shows up in the audit).
    pub fn is_structural(self) -> bool {
        !matches!(self, ErrataItem::LeftSign | ErrataItem::RightSign)
    }
}

impl fmt::Display for ErrataItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Dims(usize, usize);

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.0, self.1)
    }
}

#[derive(Debug, Clone)]
enum Factor {
    Scalar(&'static str),
    Block(&'static str, Dims),
    /// Result of a nested sum, e.g. the parenthesized coupling vector.
    Group(usize),
}

#[derive(Debug, Clone)]
struct Term {
    factors: Vec<Factor>,
    /// Defect this term carries, if any.
    tag: Option<ErrataItem>,
}

#[derive(Debug, Clone)]
struct Sum {
    name: &'static str,
    target: Dims,
    terms: Vec<Term>,
}

/// Dimension-level description of a pair of expansion formulas.
#[derive(Debug, Clone)]
pub struct FormulaShape {
    n: usize,
    p: usize,
    sums: Vec<Sum>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    /// The offending term, e.g. `Sigma_2 V_2 E^T u_1`.
    pub term: String,
    /// Shape the term must have to fit its sum.
    pub expected_dims: String,
    /// The failing product (`a x b * c x d`) or the term's actual shape.
    pub printed_dims: String,
    pub item: Option<ErrataItem>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeAuditReport {
    pub n: usize,
    pub p: usize,
    pub findings: Vec<Finding>,
}

impl ShapeAuditReport {
    pub fn finding_for(&self, item: ErrataItem) -> Option<&Finding> {
        self.findings.iter().find(|f| f.item == Some(item))
    }
}

struct Blocks {
    n: usize,
    p: usize,
}

impl Blocks {
    fn get(&self, name: &'static str) -> Factor {
        let (n, p) = (self.n, self.p);
        let d = match name {
            "u_1" => Dims(n, 1),
            "v_1" => Dims(p, 1),
            "U_2" => Dims(n, p - 1),
            "U_2^T" => Dims(p - 1, n),
            "U_3" => Dims(n, n - p),
            "U_3^T" => Dims(n - p, n),
            "V_2" => Dims(p, p - 1),
            "V_2^T" => Dims(p - 1, p),
            "E" => Dims(n, p),
            "E^T" => Dims(p, n),
            "Sigma_2" | "(sigma_1^2 I - Sigma_2^2)^-1" => Dims(p - 1, p - 1),
            other => unreachable!("unknown block {other}"),
        };
        Factor::Block(name, d)
    }

    fn term(&self, names: &[&'static str], tag: Option<ErrataItem>) -> Term {
        let factors = names
            .iter()
            .map(|&s| match s {
                "sigma_1" | "sigma_1^-1" => Factor::Scalar(s),
                "(...)" => Factor::Group(0),
                _ => self.get(s),
            })
            .collect();
        Term { factors, tag }
    }
}

fn with_group(mut t: Term, group: usize) -> Term {
    for f in &mut t.factors {
        if let Factor::Group(g) = f {
            *g = group;
        }
    }
    t
}

fn check_dims(n: usize, p: usize) -> Result<()> {
    if p < 2 {
        return Err(Error::InvalidDims {
            n,
            p,
            reason: "the audit needs p >= 2",
        });
    }
    if n < p {
        return Err(Error::InvalidDims {
            n,
            p,
            reason: "the audit needs n >= p",
        });
    }
    Ok(())
}

/// The formulas exactly as published (`n ≥ p ≥ 2`).
pub fn printed_formulas(n: usize, p: usize) -> Result<FormulaShape> {
    check_dims(n, p)?;
    let b = Blocks { n, p };
    use ErrataItem::*;
    let sums = vec![
        Sum {
            name: "u_tilde coupling",
            target: Dims(p - 1, 1),
            terms: vec![
                b.term(&["sigma_1", "U_2^T", "E", "v_1"], None),
                b.term(&["Sigma_2", "V_2", "E^T", "u_1"], Some(LeftTranspose)),
            ],
        },
        Sum {
            name: "u_tilde",
            target: Dims(n, 1),
            terms: vec![
                b.term(&["u_1"], None),
                with_group(
                    b.term(&["U_2", "(sigma_1^2 I - Sigma_2^2)^-1", "(...)"], None),
                    0,
                ),
                b.term(&["sigma_1^-1", "U_3^T", "E", "v_1"], Some(LeftOmission)),
            ],
        },
        Sum {
            name: "v_tilde coupling",
            target: Dims(p - 1, 1),
            terms: vec![
                b.term(&["sigma_1", "V_2", "E^T", "u_1"], Some(RightTranspose)),
                b.term(&["Sigma_2", "U_2^T", "E", "v_1"], None),
            ],
        },
        Sum {
            name: "v_tilde",
            target: Dims(p, 1),
            terms: vec![
                b.term(&["v_1"], None),
                with_group(
                    b.term(&["V_2", "(sigma_1^2 I - Sigma_2^2)^-1", "(...)"], None),
                    2,
                ),
            ],
        },
    ];
    Ok(FormulaShape { n, p, sums })
}

/// The corrected formulas; auditing these must produce no findings.
pub fn corrected_formulas(n: usize, p: usize) -> Result<FormulaShape> {
    check_dims(n, p)?;
    let b = Blocks { n, p };
    let sums = vec![
        Sum {
            name: "u_tilde coupling",
            target: Dims(p - 1, 1),
            terms: vec![
                b.term(&["sigma_1", "U_2^T", "E", "v_1"], None),
                b.term(&["Sigma_2", "V_2^T", "E^T", "u_1"], None),
            ],
        },
        Sum {
            name: "u_tilde",
            target: Dims(n, 1),
            terms: vec![
                b.term(&["u_1"], None),
                with_group(
                    b.term(&["U_2", "(sigma_1^2 I - Sigma_2^2)^-1", "(...)"], None),
                    0,
                ),
                b.term(&["sigma_1^-1", "U_3", "U_3^T", "E", "v_1"], None),
            ],
        },
        Sum {
            name: "v_tilde coupling",
            target: Dims(p - 1, 1),
            terms: vec![
                b.term(&["sigma_1", "V_2^T", "E^T", "u_1"], None),
                b.term(&["Sigma_2", "U_2^T", "E", "v_1"], None),
            ],
        },
        Sum {
            name: "v_tilde",
            target: Dims(p, 1),
            terms: vec![
                b.term(&["v_1"], None),
                with_group(
                    b.term(&["V_2", "(sigma_1^2 I - Sigma_2^2)^-1", "(...)"], None),
                    2,
                ),
            ],
        },
    ];
    Ok(FormulaShape { n, p, sums })
}

enum Eval {
    Ok(Dims),
    /// A product or sum already failed; do not report again downstream.
    Poisoned,
    /// Contains an empty block.
    Empty,
    Mismatch(Dims, Dims),
}

fn describe(t: &Term, sums: &[Sum]) -> String {
    t.factors
        .iter()
        .map(|f| match f {
            Factor::Scalar(s) => (*s).to_string(),
            Factor::Block(s, _) => (*s).to_string(),
            Factor::Group(g) => format!("({})", sums[*g].name),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn eval_term(t: &Term, groups: &[Option<Dims>]) -> Eval {
    let mut acc: Option<Dims> = None;
    let mut empty = false;
    for f in &t.factors {
        let d = match f {
            Factor::Scalar(_) => continue,
            Factor::Block(_, d) => *d,
            Factor::Group(g) => match groups[*g] {
                Some(d) => d,
                None => return Eval::Poisoned,
            },
        };
        if d.0 == 0 || d.1 == 0 {
            empty = true;
        }
        acc = Some(match acc {
            None => d,
            Some(a) if a.1 == d.0 => Dims(a.0, d.1),
            Some(a) => return Eval::Mismatch(a, d),
        });
    }
    if empty {
        return Eval::Empty;
    }
    acc.map_or(Eval::Ok(Dims(1, 1)), Eval::Ok)
}

/// Audits every sum of `shape`, in order.
pub fn audit_formulas(shape: &FormulaShape) -> ShapeAuditReport {
    let mut groups: Vec<Option<Dims>> = vec![None; shape.sums.len()];
    let mut findings = Vec::new();
    for (si, sum) in shape.sums.iter().enumerate() {
        let mut ok = true;
        for t in &sum.terms {
            match eval_term(t, &groups) {
                Eval::Ok(d) if d == sum.target => {}
                Eval::Ok(d) => {
                    ok = false;
                    findings.push(Finding {
                        term: describe(t, &shape.sums),
                        expected_dims: sum.target.to_string(),
                        printed_dims: d.to_string(),
                        item: t.tag,
                    });
                }
                Eval::Mismatch(a, b) => {
                    ok = false;
                    findings.push(Finding {
                        term: describe(t, &shape.sums),
                        expected_dims: sum.target.to_string(),
                        printed_dims: format!("{a} * {b}"),
                        item: t.tag,
                    });
                }
                Eval::Empty => {}
                Eval::Poisoned => ok = false,
            }
        }
        // A broken inner sum keeps its intended shape for reporting purposes
        // but must not trigger further findings in the enclosing formula.
        groups[si] = ok.then_some(sum.target);
    }
    ShapeAuditReport {
        n: shape.n,
        p: shape.p,
        findings,
    }
}

/// Dimension audit of the published formulas for an `n×p` matrix.
///
/// For `n > p` all three structural defects appear; for `n = p` the `U₃`
/// block is empty and only the two transposition findings remain.
pub fn shape_audit_as_printed(n: usize, p: usize) -> Result<ShapeAuditReport> {
    Ok(audit_formulas(&printed_formulas(n, p)?))
}
