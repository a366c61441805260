//! The exact certificate MIQCP as an LP or MPS document, and solution import.
//!
//! Variable names: `u{j}`, `l{j}` (1-based features), `y{i}` for a single
//! restriction or `y{c}_{i}` otherwise, and `zu{e}_{j}`/`zl{e}_{j}` for
//! exclusion `e`. Output depends only on the inputs.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};

use super::VerifyError;
use crate::lp::{validate_certificate, CertificateCheck};
use crate::model::{ActionModel, IntBox, LinearClassifier};
use crate::rational::{self, int, Rational};
use crate::rep::{assemble_rep, assemble_rep_layout, RepLayout, RowRole, RestrictionSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExportFormat {
    #[default]
    Lp,
    Mps,
}

impl FromStr for ExportFormat {
    type Err = VerifyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lp" => Ok(ExportFormat::Lp),
            "mps" => Ok(ExportFormat::Mps),
            other => Err(VerifyError::Export(format!("unsupported format '{other}' (expected lp or mps)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ExportOptions {
    pub format: ExportFormat,
    /// Use big-M constants that leave `u`, `l` free to reach the region bounds
    /// when an exclusion side is inactive. Off uses `U - l̄ - 1` and `L - ū + 1`.
    pub corrected_big_m: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowSense {
    Le,
    Ge,
    Eq,
}

struct DocRow {
    name: String,
    linear: Vec<(usize, Rational)>,
    /// `(box variable, y variable, coefficient)`
    quadratic: Vec<(usize, usize, Rational)>,
    sense: RowSense,
    rhs: Rational,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum VarKind {
    Integer,
    Continuous,
    Binary,
}

struct DocVar {
    name: String,
    kind: VarKind,
    lo: Option<i64>,
    hi: Option<i64>,
}

struct Document {
    vars: Vec<DocVar>,
    objective: Vec<(usize, Rational)>,
    rows: Vec<DocRow>,
}

/// Per-restriction template systems, shared by export and import.
fn templates(m: &ActionModel, f: &LinearClassifier, rs: &RestrictionSet) -> Result<Vec<RepLayout>, VerifyError> {
    let full = m.full_box();
    rs.restrictions
        .iter()
        .map(|r| assemble_rep_layout(m, f, &full, r).map_err(VerifyError::from))
        .collect()
}

fn y_name(single: bool, c: usize, i: usize) -> String {
    if single {
        format!("y{}", i + 1)
    } else {
        format!("y{}_{}", c + 1, i + 1)
    }
}

fn build(
    m: &ActionModel,
    f: &LinearClassifier,
    rs: &RestrictionSet,
    exclusions: &[IntBox],
    corrected: bool,
) -> Result<Document, VerifyError> {
    let d = m.dim();
    if let Some(e) = exclusions.iter().find(|e| e.dim() != d) {
        return Err(VerifyError::Export(format!(
            "exclusion has {} coordinates, model has {d} features",
            e.dim()
        )));
    }
    let (lo, hi) = (&m.region.lower, &m.region.upper);
    let blocks = templates(m, f, rs)?;
    let single = blocks.len() == 1;

    let mut vars = Vec::new();
    for j in 0..d {
        vars.push(DocVar {
            name: format!("u{}", j + 1),
            kind: VarKind::Integer,
            lo: Some(lo[j]),
            hi: Some(hi[j]),
        });
    }
    for j in 0..d {
        vars.push(DocVar {
            name: format!("l{}", j + 1),
            kind: VarKind::Integer,
            lo: Some(lo[j]),
            hi: Some(hi[j]),
        });
    }
    let u = |j: usize| j;
    let l = |j: usize| d + j;

    let mut objective = Vec::new();
    for j in 0..d {
        let range = hi[j] - lo[j];
        if range > 0 {
            let w = rational::ratio(1, range);
            objective.push((u(j), w.clone()));
            objective.push((l(j), -w));
        }
    }

    let mut rows = Vec::new();
    for (c, block) in blocks.iter().enumerate() {
        let base = vars.len();
        for i in 0..block.system.num_rows() {
            vars.push(DocVar {
                name: y_name(single, c, i),
                kind: VarKind::Continuous,
                lo: Some(0),
                hi: None,
            });
        }
        let tag = if single { String::new() } else { format!("_{}", c + 1) };

        // b_c(u, l)ᵀ y_c = -1
        let mut linear = Vec::new();
        let mut quadratic = Vec::new();
        for (i, (row, role)) in block.system.rows.iter().zip(&block.roles).enumerate() {
            match role {
                RowRole::BoxUpper { feature } => quadratic.push((u(*feature), base + i, Rational::one())),
                RowRole::BoxLower { feature } => quadratic.push((l(*feature), base + i, -Rational::one())),
                _ if !row.rhs.is_zero() => linear.push((base + i, row.rhs.clone())),
                _ => {}
            }
        }
        rows.push(DocRow {
            name: format!("ray{tag}"),
            linear,
            quadratic,
            sense: RowSense::Eq,
            rhs: int(-1),
        });

        // Cᵀ y = 0 and Dᵀ y = 0, one row per column with a nonzero entry
        let mut columns: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); 2 * d];
        for (i, row) in block.system.rows.iter().enumerate() {
            for (k, a) in &row.coeffs {
                columns[*k].push((base + i, a.clone()));
            }
        }
        for (k, col) in columns.into_iter().enumerate() {
            if col.is_empty() {
                continue;
            }
            let name = if k < d {
                format!("dx{}{tag}", k + 1)
            } else {
                format!("da{}{tag}", k - d + 1)
            };
            rows.push(DocRow {
                name,
                linear: col,
                quadratic: Vec::new(),
                sense: RowSense::Eq,
                rhs: Rational::zero(),
            });
        }
    }

    for j in 0..d {
        rows.push(DocRow {
            name: format!("box{}", j + 1),
            linear: vec![(l(j), Rational::one()), (u(j), -Rational::one())],
            quadratic: Vec::new(),
            sense: RowSense::Le,
            rhs: Rational::zero(),
        });
    }

    for (e, ex) in exclusions.iter().enumerate() {
        let zu = vars.len();
        for j in 0..d {
            vars.push(DocVar {
                name: format!("zu{}_{}", e + 1, j + 1),
                kind: VarKind::Binary,
                lo: Some(0),
                hi: Some(1),
            });
        }
        let zl = vars.len();
        for j in 0..d {
            vars.push(DocVar {
                name: format!("zl{}_{}", e + 1, j + 1),
                kind: VarKind::Binary,
                lo: Some(0),
                hi: Some(1),
            });
        }
        for j in 0..d {
            // u_j <= l̄_j - 1 + M (1 - zu_j)
            let big_m = if corrected { hi[j] - ex.l[j] + 1 } else { hi[j] - ex.l[j] - 1 };
            rows.push(DocRow {
                name: format!("exu{}_{}", e + 1, j + 1),
                linear: vec![(u(j), Rational::one()), (zu + j, int(big_m))],
                quadratic: Vec::new(),
                sense: RowSense::Le,
                rhs: int(ex.l[j] - 1 + big_m),
            });
        }
        for j in 0..d {
            // l_j >= ū_j + 1 + M (1 - zl_j)
            let big_m = if corrected { lo[j] - ex.u[j] - 1 } else { lo[j] - ex.u[j] + 1 };
            rows.push(DocRow {
                name: format!("exl{}_{}", e + 1, j + 1),
                linear: vec![(l(j), Rational::one()), (zl + j, int(big_m))],
                quadratic: Vec::new(),
                sense: RowSense::Ge,
                rhs: int(ex.u[j] + 1 + big_m),
            });
        }
        let mut any = Vec::with_capacity(2 * d);
        for j in 0..d {
            any.push((zu + j, Rational::one()));
            any.push((zl + j, Rational::one()));
        }
        rows.push(DocRow {
            name: format!("exz{}", e + 1),
            linear: any,
            quadratic: Vec::new(),
            sense: RowSense::Ge,
            rhs: Rational::one(),
        });
    }

    Ok(Document { vars, objective, rows })
}

/// The full certificate MIQCP for `rs`, excluding each box in `exclusions`.
pub fn export_fcp_model(
    m: &ActionModel,
    f: &LinearClassifier,
    rs: &RestrictionSet,
    exclusions: &[IntBox],
    opts: &ExportOptions,
) -> Result<String, VerifyError> {
    let doc = build(m, f, rs, exclusions, opts.corrected_big_m)?;
    Ok(match opts.format {
        ExportFormat::Lp => write_lp(&doc),
        ExportFormat::Mps => write_mps(&doc),
    })
}

fn num(r: &Rational) -> String {
    rational::to_decimal(r)
}

/// Appends `+ c name` terms, wrapping long lines.
fn push_term(out: &mut String, line_len: &mut usize, first: bool, coef: &Rational, body: &str) {
    let sign = if coef < &Rational::zero() { "-" } else { "+" };
    let mag = num(&coef.abs());
    let term = if first && sign == "+" {
        format!(" {mag} {body}")
    } else {
        format!(" {sign} {mag} {body}")
    };
    if *line_len + term.len() > 240 {
        out.push_str("\n  ");
        *line_len = 2;
    }
    *line_len += term.len();
    out.push_str(&term);
}

fn write_lp(doc: &Document) -> String {
    let name = |k: usize| doc.vars[k].name.as_str();
    let mut out = String::from("\\ largest confined box certificate problem\nMaximize\n obj:");
    let mut len = out.len();
    if doc.objective.is_empty() {
        out.push_str(&format!(" 0 {}", name(0)));
    }
    for (n, (k, c)) in doc.objective.iter().enumerate() {
        push_term(&mut out, &mut len, n == 0, c, name(*k));
    }
    out.push_str("\nSubject To\n");
    for row in &doc.rows {
        let mut line = format!(" {}:", row.name);
        let mut len = line.len();
        for (n, (k, c)) in row.linear.iter().enumerate() {
            push_term(&mut line, &mut len, n == 0, c, name(*k));
        }
        if !row.quadratic.is_empty() {
            if row.linear.is_empty() {
                line.push_str(" [");
            } else {
                line.push_str(" + [");
            }
            len += 4;
            for (n, (a, b, c)) in row.quadratic.iter().enumerate() {
                push_term(&mut line, &mut len, n == 0, c, &format!("{} * {}", name(*a), name(*b)));
            }
            line.push_str(" ]");
        }
        let op = match row.sense {
            RowSense::Le => "<=",
            RowSense::Ge => ">=",
            RowSense::Eq => "=",
        };
        let _ = writeln!(line, " {op} {}", num(&row.rhs));
        out.push_str(&line);
    }
    out.push_str("Bounds\n");
    for v in doc.vars.iter().filter(|v| v.kind != VarKind::Binary) {
        match (v.lo, v.hi) {
            (Some(0), None) => {}
            (Some(a), Some(b)) => {
                let _ = writeln!(out, " {a} <= {} <= {b}", v.name);
            }
            (Some(a), None) => {
                let _ = writeln!(out, " {} >= {a}", v.name);
            }
            (None, Some(b)) => {
                let _ = writeln!(out, " -inf <= {} <= {b}", v.name);
            }
            (None, None) => {
                let _ = writeln!(out, " {} free", v.name);
            }
        }
    }
    let list = |kind: VarKind| -> Vec<&str> {
        doc.vars
            .iter()
            .filter(|v| v.kind == kind)
            .map(|v| v.name.as_str())
            .collect()
    };
    for (header, kind) in [("Generals", VarKind::Integer), ("Binaries", VarKind::Binary)] {
        let names = list(kind);
        if names.is_empty() {
            continue;
        }
        let _ = writeln!(out, "{header}");
        for chunk in names.chunks(10) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

fn write_mps(doc: &Document) -> String {
    let mut out = String::from("NAME fcp\nOBJSENSE\n    MAX\nROWS\n N  obj\n");
    for row in &doc.rows {
        let t = match row.sense {
            RowSense::Le => "L",
            RowSense::Ge => "G",
            RowSense::Eq => "E",
        };
        let _ = writeln!(out, " {t}  {}", row.name);
    }

    // column-major entries
    let mut entries: Vec<Vec<(&str, &Rational)>> = vec![Vec::new(); doc.vars.len()];
    for (k, c) in &doc.objective {
        entries[*k].push(("obj", c));
    }
    for row in &doc.rows {
        for (k, c) in &row.linear {
            entries[*k].push((row.name.as_str(), c));
        }
    }
    out.push_str("COLUMNS\n");
    let mut in_int = false;
    for (k, v) in doc.vars.iter().enumerate() {
        let int_like = v.kind != VarKind::Continuous;
        if int_like != in_int {
            let tag = if int_like { "INTORG" } else { "INTEND" };
            let _ = writeln!(out, "    MARKER  'MARKER'  '{tag}'");
            in_int = int_like;
        }
        if entries[k].is_empty() {
            // keep every variable declared
            let _ = writeln!(out, "    {}  obj  0", v.name);
        }
        for (row, c) in &entries[k] {
            let _ = writeln!(out, "    {}  {row}  {}", v.name, num(c));
        }
    }
    if in_int {
        out.push_str("    MARKER  'MARKER'  'INTEND'\n");
    }

    out.push_str("RHS\n");
    for row in doc.rows.iter().filter(|r| !r.rhs.is_zero()) {
        let _ = writeln!(out, "    rhs  {}  {}", row.name, num(&row.rhs));
    }

    out.push_str("BOUNDS\n");
    for v in &doc.vars {
        match v.kind {
            VarKind::Binary => {
                let _ = writeln!(out, " BV bnd  {}", v.name);
            }
            _ => match (v.lo, v.hi) {
                (Some(a), Some(b)) => {
                    let _ = writeln!(out, " LO bnd  {}  {a}", v.name);
                    let _ = writeln!(out, " UP bnd  {}  {b}", v.name);
                }
                (Some(0), None) => {}
                (Some(a), None) => {
                    let _ = writeln!(out, " LO bnd  {}  {a}", v.name);
                }
                (None, Some(b)) => {
                    let _ = writeln!(out, " MI bnd  {}", v.name);
                    let _ = writeln!(out, " UP bnd  {}  {b}", v.name);
                }
                (None, None) => {
                    let _ = writeln!(out, " FR bnd  {}", v.name);
                }
            },
        }
    }

    // symmetric Q: a bilinear coefficient c becomes c/2 in both triangles
    let half = rational::ratio(1, 2);
    for row in doc.rows.iter().filter(|r| !r.quadratic.is_empty()) {
        let _ = writeln!(out, "QCMATRIX   {}", row.name);
        for (a, b, c) in &row.quadratic {
            let h = c * &half;
            let _ = writeln!(out, "    {}  {}  {}", doc.vars[*a].name, doc.vars[*b].name, num(&h));
            let _ = writeln!(out, "    {}  {}  {}", doc.vars[*b].name, doc.vars[*a].name, num(&h));
        }
    }
    out.push_str("ENDATA\n");
    out
}

/// A solution file read back into a box and one multiplier vector per restriction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImportedSolution {
    pub bx: IntBox,
    pub certificates: Vec<Vec<Rational>>,
    /// Multipliers were snapped to nearby fractions to pass exact validation.
    pub snapped: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolutionCheck {
    pub problems: Vec<String>,
}

impl SolutionCheck {
    pub fn is_valid(&self) -> bool {
        self.problems.is_empty()
    }
}

fn snap(v: &Rational) -> Rational {
    rational::rationalize(rational::to_f64(v), 1_000_000, 1e-9)
}

/// Parses `name = value` (or `name value`) lines and checks the box and every
/// certificate exactly. Missing variables read as zero; `#` starts a comment.
pub fn import_solution(
    text: &str,
    m: &ActionModel,
    f: &LinearClassifier,
    rs: &RestrictionSet,
    exclusions: &[IntBox],
) -> Result<(ImportedSolution, SolutionCheck), VerifyError> {
    let d = m.dim();
    let blocks = templates(m, f, rs)?;
    let single = blocks.len() == 1;

    let mut slots: HashMap<String, (usize, usize)> = HashMap::new();
    // group 0: u, group 1: l, group 2 + c: y_c, usize::MAX: ignored binaries
    for j in 0..d {
        slots.insert(format!("u{}", j + 1), (0, j));
        slots.insert(format!("l{}", j + 1), (1, j));
    }
    for (c, b) in blocks.iter().enumerate() {
        for i in 0..b.system.num_rows() {
            slots.insert(y_name(single, c, i), (2 + c, i));
        }
    }
    for e in 0..exclusions.len() {
        for j in 0..d {
            slots.insert(format!("zu{}_{}", e + 1, j + 1), (usize::MAX, 0));
            slots.insert(format!("zl{}_{}", e + 1, j + 1), (usize::MAX, 0));
        }
    }

    let mut ul = [vec![Rational::zero(); d], vec![Rational::zero(); d]];
    let mut ys: Vec<Vec<Rational>> = blocks
        .iter()
        .map(|b| vec![Rational::zero(); b.system.num_rows()])
        .collect();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (name, value) = match line.split_once('=') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => {
                let mut it = line.split_whitespace();
                match (it.next(), it.next(), it.next()) {
                    (Some(a), Some(b), None) => (a, b),
                    _ => return Err(VerifyError::Export(format!("line {}: expected name = value", n + 1))),
                }
            }
        };
        let value = rational::parse(value).map_err(|e| VerifyError::Export(format!("line {}: {e}", n + 1)))?;
        let Some(&(group, idx)) = slots.get(name) else {
            return Err(VerifyError::Export(format!("line {}: unknown variable '{name}'", n + 1)));
        };
        match group {
            0 | 1 => ul[group][idx] = value,
            usize::MAX => {}
            g => ys[g - 2][idx] = value,
        }
    }

    let mut problems = Vec::new();
    let mut bounds = [vec![0i64; d], vec![0i64; d]];
    for (g, label) in [(0, "u"), (1, "l")] {
        for j in 0..d {
            let v = &ul[g][j];
            let r = v.round();
            if (v - &r).abs() > rational::ratio(1, 1_000_000) {
                problems.push(format!("{label}{} = {} is not integral", j + 1, rational::to_decimal(v)));
            }
            bounds[g][j] = rational::to_i64(&r).unwrap_or(0);
        }
    }
    let [u, l] = bounds;
    let bx = IntBox::new(l, u);
    if bx.is_empty() || !m.box_in_region(&bx) {
        problems.push(format!("box {bx} is empty or leaves the region"));
    }
    for (e, ex) in exclusions.iter().enumerate() {
        if !bx.is_disjoint(ex) {
            problems.push(format!("box overlaps exclusion {}", e + 1));
        }
    }

    let mut snapped = false;
    if problems.is_empty() {
        for (c, r) in rs.restrictions.iter().enumerate() {
            let s = assemble_rep(m, f, &bx, r)?;
            if validate_certificate(&s, &ys[c])?.is_accept() {
                continue;
            }
            let near: Vec<Rational> = ys[c].iter().map(snap).collect();
            match validate_certificate(&s, &near)? {
                CertificateCheck::Accept => {
                    ys[c] = near;
                    snapped = true;
                }
                CertificateCheck::Reject(why) => {
                    problems.push(format!("certificate {} rejected: {why}", c + 1));
                }
            }
        }
    }

    Ok((
        ImportedSolution {
            bx,
            certificates: ys,
            snapped,
        },
        SolutionCheck { problems },
    ))
}
