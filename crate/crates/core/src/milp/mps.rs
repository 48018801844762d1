//! Free-format MPS export and import.
//!
//! Names are sanitized to `[A-Za-z0-9_.()\[\]-]` and made unique by appending
//! `_<k>`; the mapping is reproducible from the model alone ([`mps_names`]).

use std::collections::{HashMap, HashSet};
use std::fmt::Write;

use thiserror::Error;

use super::model::{MilpModel, ModelError, Sense, VarId, VarKind};

const OBJ_ROW: &str = "OBJ";

#[derive(Debug, Error)]
pub enum MpsError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn sanitize(raw: &str, fallback: String, used: &mut HashSet<String>) -> String {
    let mut base: String = raw
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "_.()[]-".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect();
    if base.is_empty() {
        base = fallback;
    }
    if used.insert(base.clone()) {
        return base;
    }
    let mut k = 1;
    loop {
        let cand = format!("{base}_{k}");
        if used.insert(cand.clone()) {
            return cand;
        }
        k += 1;
    }
}

/// Sanitized `(column names, row names)` used by [`export_mps`].
pub fn mps_names(m: &MilpModel) -> (Vec<String>, Vec<String>) {
    let mut used: HashSet<String> = ["MARKER".to_string()].into_iter().collect();
    let cols = m
        .variables()
        .iter()
        .enumerate()
        .map(|(i, v)| sanitize(&v.name, format!("X{i}"), &mut used))
        .collect();
    let mut used: HashSet<String> = [OBJ_ROW.to_string()].into_iter().collect();
    let rows = m
        .constraints()
        .iter()
        .enumerate()
        .map(|(i, c)| sanitize(&c.name, format!("C{i}"), &mut used))
        .collect();
    (cols, rows)
}

/// Serializes `m` as free-format MPS.
pub fn export_mps(m: &MilpModel) -> String {
    let (cols, rows) = mps_names(m);
    let name = sanitize(&m.name, "MODEL".into(), &mut HashSet::new());

    // column-major view of the constraint matrix
    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m.num_vars()];
    for (r, c) in m.constraints().iter().enumerate() {
        for &(v, a) in &c.terms {
            by_col[v.0].push((r, a));
        }
    }
    let mut obj = vec![0.0; m.num_vars()];
    for &(v, c) in m.objective() {
        obj[v.0] += c;
    }

    let mut out = String::new();
    let _ = writeln!(out, "NAME {name}");
    let _ = writeln!(out, "OBJSENSE\n    MIN");
    let _ = writeln!(out, "ROWS");
    let _ = writeln!(out, " N  {OBJ_ROW}");
    for (c, rname) in m.constraints().iter().zip(&rows) {
        let tag = match c.sense {
            Sense::Le => "L",
            Sense::Ge => "G",
            Sense::Eq => "E",
        };
        let _ = writeln!(out, " {tag}  {rname}");
    }

    let _ = writeln!(out, "COLUMNS");
    let mut in_int = false;
    let mut marker = 0;
    for (j, v) in m.variables().iter().enumerate() {
        let is_int = v.kind == VarKind::Binary;
        if is_int != in_int {
            let tag = if is_int { "'INTORG'" } else { "'INTEND'" };
            let _ = writeln!(out, "    MARKER{marker} 'MARKER' {tag}");
            marker += 1;
            in_int = is_int;
        }
        let cname = &cols[j];
        let mut wrote = false;
        if obj[j] != 0.0 {
            let _ = writeln!(out, "    {cname} {OBJ_ROW} {}", obj[j]);
            wrote = true;
        }
        for &(r, a) in &by_col[j] {
            let _ = writeln!(out, "    {cname} {} {a}", rows[r]);
            wrote = true;
        }
        if !wrote {
            // keeps the column declared
            let _ = writeln!(out, "    {cname} {OBJ_ROW} 0");
        }
    }
    if in_int {
        let _ = writeln!(out, "    MARKER{marker} 'MARKER' 'INTEND'");
    }

    let _ = writeln!(out, "RHS");
    for (c, rname) in m.constraints().iter().zip(&rows) {
        if c.rhs != 0.0 {
            let _ = writeln!(out, "    RHS {rname} {}", c.rhs);
        }
    }

    let _ = writeln!(out, "BOUNDS");
    for (v, cname) in m.variables().iter().zip(&cols) {
        let (lo, hi) = (v.lower, v.upper);
        if v.kind == VarKind::Binary && lo == 0.0 && hi == 1.0 {
            let _ = writeln!(out, " BV BND {cname}");
            continue;
        }
        if lo == hi {
            let _ = writeln!(out, " FX BND {cname} {lo}");
            continue;
        }
        match (lo.is_finite(), hi.is_finite()) {
            (false, false) => {
                let _ = writeln!(out, " FR BND {cname}");
            }
            (false, true) => {
                let _ = writeln!(out, " MI BND {cname}");
                let _ = writeln!(out, " UP BND {cname} {hi}");
            }
            (true, _) => {
                if lo != 0.0 || hi < 0.0 || v.kind == VarKind::Binary {
                    let _ = writeln!(out, " LO BND {cname} {lo}");
                }
                if hi.is_finite() {
                    let _ = writeln!(out, " UP BND {cname} {hi}");
                } else if v.kind == VarKind::Binary {
                    let _ = writeln!(out, " PL BND {cname}");
                }
            }
        }
    }
    let _ = writeln!(out, "ENDATA");
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
    ObjSense,
}

struct ColData {
    name: String,
    integer: bool,
    lo: f64,
    hi: f64,
    bounded_by_user: bool,
    entries: Vec<(usize, f64)>,
    obj: f64,
}

/// Parses free-format MPS into a model. General integers are rejected; integer
/// columns must end up with bounds inside `[0, 1]`.
pub fn import_mps(text: &str) -> Result<MilpModel, MpsError> {
    let err = |line: usize, msg: String| MpsError::Parse { line, msg };

    let mut name = String::from("mps");
    let mut maximize = false;
    let mut obj_row: Option<String> = None;
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut row_names: Vec<String> = Vec::new();
    let mut row_sense: Vec<char> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut ranges: Vec<Option<f64>> = Vec::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut cols: Vec<ColData> = Vec::new();
    let mut in_int = false;
    let mut section = Section::None;

    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        if raw.starts_with('*') || raw.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = raw.split_whitespace().collect();
        let header = !raw.starts_with(' ') && !raw.starts_with('\t');
        if header {
            match toks[0] {
                "NAME" => {
                    if let Some(n) = toks.get(1) {
                        name = (*n).to_string();
                    }
                    section = Section::None;
                }
                "OBJSENSE" => {
                    if let Some(s) = toks.get(1) {
                        maximize = s.eq_ignore_ascii_case("MAX") || s.eq_ignore_ascii_case("MAXIMIZE");
                        section = Section::None;
                    } else {
                        section = Section::ObjSense;
                    }
                }
                "ROWS" => section = Section::Rows,
                "COLUMNS" => section = Section::Columns,
                "RHS" => section = Section::Rhs,
                "RANGES" => section = Section::Ranges,
                "BOUNDS" => section = Section::Bounds,
                "ENDATA" => break,
                other => return Err(err(ln, format!("unknown section `{other}`"))),
            }
            continue;
        }
        let num = |s: &str| -> Result<f64, MpsError> {
            s.parse::<f64>()
                .map_err(|_| err(ln, format!("expected a number, got `{s}`")))
        };
        match section {
            Section::ObjSense => {
                maximize = toks[0].eq_ignore_ascii_case("MAX") || toks[0].eq_ignore_ascii_case("MAXIMIZE");
            }
            Section::Rows => {
                if toks.len() < 2 {
                    return Err(err(ln, "row line needs a type and a name".into()));
                }
                let kind = toks[0].to_ascii_uppercase();
                match kind.as_str() {
                    "N" => {
                        if obj_row.is_none() {
                            obj_row = Some(toks[1].to_string());
                        }
                    }
                    "L" | "G" | "E" => {
                        row_index.insert(toks[1].to_string(), row_names.len());
                        row_names.push(toks[1].to_string());
                        row_sense.push(kind.chars().next().unwrap());
                        rhs.push(0.0);
                        ranges.push(None);
                    }
                    _ => return Err(err(ln, format!("unknown row type `{kind}`"))),
                }
            }
            Section::Columns => {
                if toks.len() >= 3 && toks[1].trim_matches('\'') == "MARKER" {
                    match toks[2].trim_matches('\'') {
                        "INTORG" => in_int = true,
                        "INTEND" => in_int = false,
                        other => return Err(err(ln, format!("unknown marker `{other}`"))),
                    }
                    continue;
                }
                if toks.len() < 3 || toks.len() % 2 == 0 {
                    return Err(err(ln, "column line needs name and row/value pairs".into()));
                }
                let j = match col_index.get(toks[0]) {
                    Some(&j) => j,
                    None => {
                        col_index.insert(toks[0].to_string(), cols.len());
                        cols.push(ColData {
                            name: toks[0].to_string(),
                            integer: in_int,
                            lo: 0.0,
                            hi: f64::INFINITY,
                            bounded_by_user: false,
                            entries: Vec::new(),
                            obj: 0.0,
                        });
                        cols.len() - 1
                    }
                };
                for pair in toks[1..].chunks(2) {
                    let v = num(pair[1])?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        cols[j].obj += v;
                    } else if let Some(&r) = row_index.get(pair[0]) {
                        cols[j].entries.push((r, v));
                    } else {
                        return Err(err(ln, format!("unknown row `{}`", pair[0])));
                    }
                }
            }
            Section::Rhs | Section::Ranges => {
                // optional set name in the first field
                let body = if toks.len() % 2 == 1 { &toks[1..] } else { &toks[..] };
                for pair in body.chunks(2) {
                    if pair.len() != 2 {
                        return Err(err(ln, "dangling rhs entry".into()));
                    }
                    let v = num(pair[1])?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        continue;
                    }
                    let &r = row_index
                        .get(pair[0])
                        .ok_or_else(|| err(ln, format!("unknown row `{}`", pair[0])))?;
                    if section == Section::Rhs {
                        rhs[r] = v;
                    } else {
                        ranges[r] = Some(v);
                    }
                }
            }
            Section::Bounds => {
                if toks.len() < 3 {
                    return Err(err(ln, "bound line too short".into()));
                }
                let kind = toks[0].to_ascii_uppercase();
                let &j = col_index
                    .get(toks[2])
                    .ok_or_else(|| err(ln, format!("unknown column `{}`", toks[2])))?;
                let value = match toks.get(3) {
                    Some(s) => Some(num(s)?),
                    None => None,
                };
                let need = |v: Option<f64>| v.ok_or_else(|| err(ln, format!("bound {kind} needs a value")));
                let c = &mut cols[j];
                c.bounded_by_user = true;
                match kind.as_str() {
                    "UP" => {
                        let v = need(value)?;
                        c.hi = v;
                        if v < 0.0 && c.lo == 0.0 {
                            c.lo = f64::NEG_INFINITY;
                        }
                    }
                    "LO" => c.lo = need(value)?,
                    "FX" => {
                        let v = need(value)?;
                        c.lo = v;
                        c.hi = v;
                    }
                    "FR" => {
                        c.lo = f64::NEG_INFINITY;
                        c.hi = f64::INFINITY;
                    }
                    "MI" => c.lo = f64::NEG_INFINITY,
                    "PL" => c.hi = f64::INFINITY,
                    "BV" => {
                        c.integer = true;
                        c.lo = 0.0;
                        c.hi = 1.0;
                    }
                    "LI" => {
                        c.integer = true;
                        c.lo = need(value)?;
                    }
                    "UI" => {
                        c.integer = true;
                        c.hi = need(value)?;
                    }
                    _ => return Err(err(ln, format!("unsupported bound type `{kind}`"))),
                }
            }
            Section::None => return Err(err(ln, "data line outside a section".into())),
        }
    }

    let mut m = MilpModel::new(name);
    let sign = if maximize { -1.0 } else { 1.0 };
    let mut ids = Vec::with_capacity(cols.len());
    for c in &cols {
        let kind = if c.integer {
            let hi = if c.bounded_by_user { c.hi } else { 1.0 };
            if c.lo < 0.0 || hi > 1.0 {
                return Err(err(0, format!("general integer column `{}` is not supported", c.name)));
            }
            (VarKind::Binary, c.lo, hi)
        } else {
            (VarKind::Continuous, c.lo, c.hi)
        };
        ids.push(m.add_var(c.name.clone(), kind.0, kind.1, kind.2)?);
    }
    let mut by_row: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); row_names.len()];
    for (j, c) in cols.iter().enumerate() {
        for &(r, a) in &c.entries {
            by_row[r].push((ids[j], a));
        }
    }
    for (r, terms) in by_row.into_iter().enumerate() {
        let b = rhs[r];
        let (sense, lo_hi) = match (row_sense[r], ranges[r]) {
            ('L', None) => (Sense::Le, None),
            ('G', None) => (Sense::Ge, None),
            ('E', None) => (Sense::Eq, None),
            ('L', Some(rg)) => (Sense::Le, Some((b - rg.abs(), b))),
            ('G', Some(rg)) => (Sense::Ge, Some((b, b + rg.abs()))),
            ('E', Some(rg)) if rg >= 0.0 => (Sense::Eq, Some((b, b + rg))),
            ('E', Some(rg)) => (Sense::Eq, Some((b + rg, b))),
            _ => unreachable!(),
        };
        match lo_hi {
            None => {
                m.add_constraint(row_names[r].clone(), terms, sense, b)?;
            }
            Some((lo, hi)) => {
                m.add_constraint(format!("{}_lo", row_names[r]), terms.clone(), Sense::Ge, lo)?;
                m.add_constraint(format!("{}_hi", row_names[r]), terms, Sense::Le, hi)?;
            }
        }
    }
    let obj = cols
        .iter()
        .enumerate()
        .filter(|(_, c)| c.obj != 0.0)
        .map(|(j, c)| (ids[j], sign * c.obj))
        .collect();
    m.set_objective(obj)?;
    if maximize {
        m.notes.push("objective negated from MAX".into());
    }
    Ok(m)
}
