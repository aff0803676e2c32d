//! CPLEX-style LP text files.
//!
//! The writer emits `Maximize`, `Subject To`, `Bounds`, `Generals` and `End`
//! with every number printed to 17 significant digits, so the file reads
//! back bit for bit. Every variable appears in `Bounds`, in index order, and
//! the reader uses that order; variables it meets only elsewhere are
//! appended in order of first appearance.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{LinearProgram, Relation, SolverError, VarKind};

/// Terms per line in long rows.
const TERMS_PER_LINE: usize = 8;

/// `%.17g`: shortest of fixed or scientific notation with 17 significant
/// digits and trailing zeros removed.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let decimals = (16 - exp) as usize;
        let fixed = format!("{v:.decimals$}");
        trim_zeros(&fixed).to_owned()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || "_.[]{}!#$%&()/,;?@'`|~".contains(c))
        && !is_keyword(&name.to_ascii_lowercase())
        && !matches!(name.to_ascii_lowercase().as_str(), "inf" | "infinity" | "free")
}

fn write_terms(out: &mut String, terms: &[(usize, f64)], names: &[&str]) {
    for (i, &(j, a)) in terms.iter().enumerate() {
        if i > 0 && i % TERMS_PER_LINE == 0 {
            out.push_str("\n  ");
        }
        if i == 0 {
            if a < 0.0 {
                out.push_str(" -");
            }
        } else {
            out.push_str(if a < 0.0 { " -" } else { " +" });
        }
        let _ = write!(out, " {} {}", format_number(a.abs()), names[j]);
    }
}

/// Renders `lp` in LP format.
pub fn to_lp_string(lp: &LinearProgram) -> Result<String, SolverError> {
    for name in lp
        .variables
        .iter()
        .map(|v| &v.name)
        .chain(lp.constraints.iter().map(|c| &c.name))
    {
        if !valid_name(name) {
            return Err(SolverError::InvalidProgram(format!(
                "{name:?} is not a valid LP-format name"
            )));
        }
    }
    let names: Vec<&str> = lp.variables.iter().map(|v| v.name.as_str()).collect();
    let mut out = String::from("Maximize\n obj:");
    let objective: Vec<(usize, f64)> = lp
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.objective != 0.0)
        .map(|(j, v)| (j, v.objective))
        .collect();
    if objective.is_empty() {
        if let Some(first) = names.first() {
            let _ = write!(out, " 0 {first}");
        }
    } else {
        write_terms(&mut out, &objective, &names);
    }
    out.push_str("\nSubject To\n");
    for c in &lp.constraints {
        let _ = write!(out, " {}:", c.name);
        if c.terms.is_empty() {
            let _ = write!(out, " 0 {}", names[0]);
        }
        write_terms(&mut out, &c.terms, &names);
        let _ = writeln!(out, " {} {}", c.relation.symbol(), format_number(c.rhs));
    }
    out.push_str("Bounds\n");
    for v in &lp.variables {
        let (l, u) = (v.lower, v.upper);
        let _ = if l == u {
            writeln!(out, " {} = {}", v.name, format_number(l))
        } else if u == f64::INFINITY {
            writeln!(out, " {} >= {}", v.name, format_number(l))
        } else {
            writeln!(out, " {} <= {} <= {}", format_number(l), v.name, format_number(u))
        };
    }
    let ints: Vec<&str> = lp
        .variables
        .iter()
        .filter(|v| v.kind == VarKind::Integer)
        .map(|v| v.name.as_str())
        .collect();
    if !ints.is_empty() {
        out.push_str("Generals\n");
        for chunk in ints.chunks(TERMS_PER_LINE) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    Ok(out)
}

/// Writes `lp` to `path` in LP format.
pub fn export_lp_file(lp: &LinearProgram, path: &Path) -> Result<(), SolverError> {
    let text = to_lp_string(lp)?;
    fs::write(path, text).map_err(|source| SolverError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn import_lp_file(path: &Path) -> Result<LinearProgram, SolverError> {
    let text = fs::read_to_string(path).map_err(|source| SolverError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_lp(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Objective,
    Constraints,
    Bounds,
    Generals,
    End,
}

fn is_keyword(lower: &str) -> bool {
    section_of(lower).is_some()
}

fn section_of(lower: &str) -> Option<(Section, bool)> {
    Some(match lower {
        "maximize" | "maximise" | "maximum" | "max" => (Section::Objective, false),
        "minimize" | "minimise" | "minimum" | "min" => (Section::Objective, true),
        "subject to" | "such that" | "st" | "s.t." | "st." => (Section::Constraints, false),
        "bounds" | "bound" => (Section::Bounds, false),
        "generals" | "general" | "gen" | "integers" | "integer" => (Section::Generals, false),
        "end" => (Section::End, false),
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Name(String),
    Rel(Relation),
    Colon,
    Plus,
    Minus,
}

fn err(line: usize, message: impl Into<String>) -> SolverError {
    SolverError::Parse {
        line,
        message: message.into(),
    }
}

fn tokenize(text: &str, line: usize, out: &mut Vec<(Tok, usize)>) -> Result<(), SolverError> {
    let b = text.as_bytes();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        if c.is_whitespace() {
            i += 1;
        } else if c == ':' {
            out.push((Tok::Colon, line));
            i += 1;
        } else if c == '+' {
            out.push((Tok::Plus, line));
            i += 1;
        } else if c == '-' {
            out.push((Tok::Minus, line));
            i += 1;
        } else if c == '<' || c == '>' || c == '=' {
            let mut j = i + 1;
            if j < b.len() && (b[j] == b'=' || b[j] == b'<' || b[j] == b'>') {
                j += 1;
            }
            let rel = match &text[i..j] {
                "<=" | "=<" | "<" => Relation::Le,
                ">=" | "=>" | ">" => Relation::Ge,
                "=" | "==" => Relation::Eq,
                other => return Err(err(line, format!("unknown operator {other:?}"))),
            };
            out.push((Tok::Rel(rel), line));
            i = j;
        } else if c.is_ascii_digit() || c == '.' {
            let mut j = i;
            while j < b.len() && (b[j].is_ascii_digit() || b[j] == b'.') {
                j += 1;
            }
            if j < b.len() && (b[j] == b'e' || b[j] == b'E') {
                let mut k = j + 1;
                if k < b.len() && (b[k] == b'+' || b[k] == b'-') {
                    k += 1;
                }
                if k < b.len() && b[k].is_ascii_digit() {
                    while k < b.len() && b[k].is_ascii_digit() {
                        k += 1;
                    }
                    j = k;
                }
            }
            let v: f64 = text[i..j]
                .parse()
                .map_err(|_| err(line, format!("bad number {:?}", &text[i..j])))?;
            out.push((Tok::Num(v), line));
            i = j;
        } else {
            let mut j = i;
            while j < b.len() {
                let d = b[j] as char;
                if d.is_whitespace() || "+-:<>=".contains(d) {
                    break;
                }
                j += 1;
            }
            let word = &text[i..j];
            match word.to_ascii_lowercase().as_str() {
                "inf" | "infinity" => out.push((Tok::Num(f64::INFINITY), line)),
                _ => out.push((Tok::Name(word.to_owned()), line)),
            }
            i = j;
        }
    }
    Ok(())
}

struct Cursor<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    last_line: usize,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|t| &t.0)
    }

    fn line(&self) -> usize {
        self.toks.get(self.pos).map_or(self.last_line, |t| t.1)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.0.clone());
        self.pos += 1;
        t
    }

    fn label(&mut self) -> Option<String> {
        if let (Some(Tok::Name(n)), Some(Tok::Colon)) = (self.peek(), self.peek2()) {
            let n = n.clone();
            self.pos += 2;
            Some(n)
        } else {
            None
        }
    }

    /// `[+|-] [coef] name` repeated, stopping before a relation or the end.
    fn linear(&mut self) -> Result<Vec<(String, f64)>, SolverError> {
        let mut terms = Vec::new();
        loop {
            let mut sign = 1.0;
            let mut signed = false;
            while let Some(t @ (Tok::Plus | Tok::Minus)) = self.peek() {
                if *t == Tok::Minus {
                    sign = -sign;
                }
                signed = true;
                self.pos += 1;
            }
            match self.peek() {
                None | Some(Tok::Rel(_)) if !signed => return Ok(terms),
                _ => {}
            }
            let line = self.line();
            let coef = match self.peek() {
                Some(Tok::Num(v)) => {
                    let v = *v;
                    self.pos += 1;
                    v
                }
                _ => 1.0,
            };
            match self.next() {
                Some(Tok::Name(n)) => terms.push((n, sign * coef)),
                _ => return Err(err(line, "expected a variable name")),
            }
        }
    }

    fn number(&mut self) -> Result<f64, SolverError> {
        let line = self.line();
        let mut sign = 1.0;
        while let Some(t @ (Tok::Plus | Tok::Minus)) = self.peek() {
            if *t == Tok::Minus {
                sign = -sign;
            }
            self.pos += 1;
        }
        match self.next() {
            Some(Tok::Num(v)) => Ok(sign * v),
            _ => Err(err(line, "expected a number")),
        }
    }
}

#[derive(Default)]
struct VarTable {
    order: Vec<String>,
    index: HashMap<String, usize>,
}

impl VarTable {
    fn id(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        self.order.push(name.to_owned());
        self.index.insert(name.to_owned(), self.order.len() - 1);
        self.order.len() - 1
    }
}

/// A section's tokens with their line numbers, and its raw lines.
type SectionBody = (Section, Vec<(Tok, usize)>, Vec<(usize, String)>);
/// Row name, named terms, sense and right-hand side.
type ParsedRow = (String, Vec<(String, f64)>, Relation, f64);

/// Parses an LP-format maximization (a minimization is negated).
pub fn parse_lp(text: &str) -> Result<LinearProgram, SolverError> {
    let mut sections: Vec<SectionBody> = Vec::new();
    let mut minimize = false;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let body = raw.split('\\').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some((sec, min)) = section_of(&body.to_ascii_lowercase()) {
            if sec == Section::Objective {
                minimize = min;
            }
            sections.push((sec, Vec::new(), Vec::new()));
            if sec == Section::End {
                break;
            }
            continue;
        }
        let Some(cur) = sections.last_mut() else {
            return Err(err(line, "content before the objective section"));
        };
        tokenize(body, line, &mut cur.1)?;
        cur.2.push((line, body.to_owned()));
    }
    if sections.first().map(|s| s.0) != Some(Section::Objective) {
        return Err(err(1, "missing Maximize section"));
    }

    let mut vars = VarTable::default();
    let mut objective: Vec<(String, f64)> = Vec::new();
    let mut rows: Vec<ParsedRow> = Vec::new();
    let mut bounds: Vec<(String, f64, f64)> = Vec::new();
    let mut generals: Vec<String> = Vec::new();

    for (sec, toks, lines) in &sections {
        let last_line = lines.last().map_or(0, |l| l.0);
        let mut cur = Cursor {
            toks,
            pos: 0,
            last_line,
        };
        match sec {
            Section::Objective => {
                cur.label();
                objective.extend(cur.linear()?);
                if cur.peek().is_some() {
                    return Err(err(cur.line(), "unexpected token in objective"));
                }
            }
            Section::Constraints => {
                while cur.peek().is_some() {
                    let name = cur.label().unwrap_or_else(|| format!("r{}", rows.len() + 1));
                    let terms = cur.linear()?;
                    let line = cur.line();
                    let Some(Tok::Rel(rel)) = cur.next() else {
                        return Err(err(line, format!("constraint {name} has no relation")));
                    };
                    let rhs = cur.number()?;
                    rows.push((name, terms, rel, rhs));
                }
            }
            Section::Bounds => {
                for (line, body) in lines {
                    bounds.push(parse_bound(*line, body)?);
                }
            }
            Section::Generals => {
                for (t, line) in toks.iter() {
                    match t {
                        Tok::Name(n) => generals.push(n.clone()),
                        _ => return Err(err(*line, "expected variable names")),
                    }
                }
            }
            Section::End => {}
        }
    }

    for (name, _, _) in &bounds {
        vars.id(name);
    }
    for (name, _) in &objective {
        vars.id(name);
    }
    for (_, terms, _, _) in &rows {
        for (name, _) in terms {
            vars.id(name);
        }
    }
    for name in &generals {
        vars.id(name);
    }

    let n = vars.order.len();
    let mut lower = vec![0.0; n];
    let mut upper = vec![f64::INFINITY; n];
    for (name, l, u) in &bounds {
        let j = vars.index[name];
        if !l.is_nan() {
            lower[j] = *l;
        }
        if !u.is_nan() {
            upper[j] = *u;
        }
    }
    let mut obj = vec![0.0; n];
    for (name, c) in &objective {
        obj[vars.index[name]] += if minimize { -c } else { *c };
    }
    let mut kind = vec![VarKind::Continuous; n];
    for name in &generals {
        kind[vars.index[name]] = VarKind::Integer;
    }
    let mut lp = LinearProgram::new();
    for (j, name) in vars.order.iter().enumerate() {
        lp.add_variable(name.clone(), kind[j], lower[j], upper[j], obj[j]);
    }
    for (name, terms, rel, rhs) in rows {
        let terms: Vec<(usize, f64)> = terms.iter().map(|(v, a)| (vars.index[v], *a)).collect();
        lp.add_constraint(name, terms, rel, rhs);
    }
    Ok(lp)
}

/// One bound line. `NaN` marks a side the line leaves unchanged.
fn parse_bound(line: usize, body: &str) -> Result<(String, f64, f64), SolverError> {
    let mut toks = Vec::new();
    tokenize(body, line, &mut toks)?;
    let mut cur = Cursor {
        toks: &toks,
        pos: 0,
        last_line: line,
    };
    let bad = || err(line, format!("unrecognized bound {body:?}"));
    if let (Some(Tok::Name(v)), Some(Tok::Name(kw))) = (cur.peek(), cur.peek2()) {
        if kw.eq_ignore_ascii_case("free") && toks.len() == 2 {
            return Ok((v.clone(), f64::NEG_INFINITY, f64::INFINITY));
        }
    }
    if let Some(Tok::Name(v)) = cur.peek() {
        let v = v.clone();
        cur.pos += 1;
        let Some(Tok::Rel(rel)) = cur.next() else {
            return Err(bad());
        };
        let x = cur.number()?;
        if cur.peek().is_some() {
            return Err(bad());
        }
        return Ok(match rel {
            Relation::Le => (v, f64::NAN, x),
            Relation::Ge => (v, x, f64::NAN),
            Relation::Eq => (v, x, x),
        });
    }
    let l = cur.number()?;
    let Some(Tok::Rel(r1)) = cur.next() else {
        return Err(bad());
    };
    let Some(Tok::Name(v)) = cur.next() else {
        return Err(bad());
    };
    if cur.peek().is_none() {
        return Ok(match r1 {
            Relation::Le => (v, l, f64::NAN),
            Relation::Ge => (v, f64::NAN, l),
            Relation::Eq => (v, l, l),
        });
    }
    let Some(Tok::Rel(Relation::Le)) = cur.next() else {
        return Err(bad());
    };
    if r1 != Relation::Le {
        return Err(bad());
    }
    let u = cur.number()?;
    if cur.peek().is_some() {
        return Err(bad());
    }
    Ok((v, l, u))
}
