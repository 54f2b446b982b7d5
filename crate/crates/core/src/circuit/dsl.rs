//! Text format for circuit scripts.
//!
//! ```text
//! script   := stmt (sep stmt)* ;  sep := ";" | newline
//! stmt     := decl | run
//! decl     := ("prep" | "box" | "eff") ident ":" type ["=" source]
//! type     := sys | sys "->" sys
//! sys      := ident ("*" ident)*
//! run      := "run" ident "=" ident ("." ident)*
//! source   := "file(" string ")" | "kraus(" string ")" | ident ["(" number ")"]
//! ```
//!
//! `#` starts a comment that runs to the end of the line. System identifiers
//! name wires: inside a pipeline a box consumes the most recent open wire
//! with a matching name, or opens a circuit input if there is none.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use crate::circuit::{Circuit, Payload};
use crate::error::{Error, Result};
use crate::io;
use crate::linalg::{self, basis_ket, cr, omega_ket, projector, weyl, CMat, CVec, ZERO};
use crate::theory::{EffectVec, LinearMap, StateVec, SystemLabel, TheoryModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DslErrorKind {
    Lexical,
    Syntax,
    Type,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{kind} error at {line}:{col}: {msg}")]
pub struct DslError {
    pub kind: DslErrorKind,
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl fmt::Display for DslErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DslErrorKind::Lexical => "lexical",
            DslErrorKind::Syntax => "syntax",
            DslErrorKind::Type => "type",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

fn err(kind: DslErrorKind, pos: Pos, msg: impl Into<String>) -> DslError {
    DslError {
        kind,
        line: pos.line,
        col: pos.col,
        msg: msg.into(),
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Num(f64),
    Colon,
    Sep,
    Arrow,
    Star,
    Dot,
    Eq,
    LParen,
    RParen,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Str(_) => "string".into(),
            Tok::Num(_) => "number".into(),
            Tok::Colon => "':'".into(),
            Tok::Sep => "end of statement".into(),
            Tok::Arrow => "'->'".into(),
            Tok::Star => "'*'".into(),
            Tok::Dot => "'.'".into(),
            Tok::Eq => "'='".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> std::result::Result<Vec<(Tok, Pos)>, DslError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let ch = chars[i];
        let pos = Pos { line, col };
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        match ch {
            '\n' => {
                out.push((Tok::Sep, pos));
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => advance(1, &mut i, &mut col),
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            ';' => {
                out.push((Tok::Sep, pos));
                advance(1, &mut i, &mut col);
            }
            ':' => {
                out.push((Tok::Colon, pos));
                advance(1, &mut i, &mut col);
            }
            '*' => {
                out.push((Tok::Star, pos));
                advance(1, &mut i, &mut col);
            }
            '.' if !chars.get(i + 1).is_some_and(|c| c.is_ascii_digit()) => {
                out.push((Tok::Dot, pos));
                advance(1, &mut i, &mut col);
            }
            '=' => {
                out.push((Tok::Eq, pos));
                advance(1, &mut i, &mut col);
            }
            '(' => {
                out.push((Tok::LParen, pos));
                advance(1, &mut i, &mut col);
            }
            ')' => {
                out.push((Tok::RParen, pos));
                advance(1, &mut i, &mut col);
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                out.push((Tok::Arrow, pos));
                advance(2, &mut i, &mut col);
            }
            '"' => {
                let mut s = String::new();
                let mut j = i + 1;
                loop {
                    match chars.get(j) {
                        None | Some('\n') => {
                            return Err(err(DslErrorKind::Lexical, pos, "unterminated string"))
                        }
                        Some('"') => break,
                        Some('\\') => {
                            match chars.get(j + 1) {
                                Some('"') => s.push('"'),
                                Some('\\') => s.push('\\'),
                                _ => {
                                    return Err(err(
                                        DslErrorKind::Lexical,
                                        Pos { line, col: col + (j - i) },
                                        "unknown escape sequence",
                                    ))
                                }
                            }
                            j += 2;
                        }
                        Some(&c) => {
                            s.push(c);
                            j += 1;
                        }
                    }
                }
                out.push((Tok::Str(s), pos));
                let n = j + 1 - i;
                advance(n, &mut i, &mut col);
            }
            c if c.is_ascii_digit() || c == '-' || c == '.' => {
                let mut j = i;
                if chars[j] == '-' {
                    j += 1;
                }
                let start_digits = j;
                while j < chars.len()
                    && (chars[j].is_ascii_digit()
                        || chars[j] == '.'
                        || chars[j] == 'e'
                        || chars[j] == 'E'
                        || ((chars[j] == '-' || chars[j] == '+')
                            && matches!(chars[j - 1], 'e' | 'E')))
                {
                    j += 1;
                }
                let lit: String = chars[i..j].iter().collect();
                if j == start_digits {
                    return Err(err(DslErrorKind::Lexical, pos, format!("unexpected character '{c}'")));
                }
                let v: f64 = lit
                    .parse()
                    .map_err(|_| err(DslErrorKind::Lexical, pos, format!("malformed number '{lit}'")))?;
                out.push((Tok::Num(v), pos));
                advance(j - i, &mut i, &mut col);
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_' || chars[j] == '\'') {
                    j += 1;
                }
                out.push((Tok::Ident(chars[i..j].iter().collect()), pos));
                advance(j - i, &mut i, &mut col);
            }
            other => {
                return Err(err(
                    DslErrorKind::Lexical,
                    pos,
                    format!("unexpected character '{other}'"),
                ))
            }
        }
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeclKind {
    Prep,
    Box,
    Eff,
}

impl DeclKind {
    fn keyword(self) -> &'static str {
        match self {
            DeclKind::Prep => "prep",
            DeclKind::Box => "box",
            DeclKind::Eff => "eff",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TypeExpr {
    pub input: Option<Vec<String>>,
    pub output: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    File(String),
    Kraus(String),
    Builtin { name: String, arg: Option<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decl {
    pub kind: DeclKind,
    pub name: String,
    pub ty: TypeExpr,
    pub source: Option<Source>,
}

impl Decl {
    /// Wires consumed by the box.
    pub fn inputs(&self) -> &[String] {
        match self.kind {
            DeclKind::Prep => &[],
            DeclKind::Eff => &self.ty.output,
            DeclKind::Box => self.ty.input.as_deref().unwrap_or(&[]),
        }
    }

    /// Wires produced by the box.
    pub fn outputs(&self) -> &[String] {
        match self.kind {
            DeclKind::Eff => &[],
            _ => &self.ty.output,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Run {
    pub name: String,
    pub pipeline: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Stmt {
    Decl(Decl),
    Run(Run),
}

/// Parsed script. Equality compares statements only, not source positions.
#[derive(Clone, Debug)]
pub struct Script {
    pub stmts: Vec<Stmt>,
    spans: Vec<Pos>,
}

impl PartialEq for Script {
    fn eq(&self, other: &Self) -> bool {
        self.stmts == other.stmts
    }
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn unexpected(&self, want: &str) -> DslError {
        err(
            DslErrorKind::Syntax,
            self.pos(),
            format!("expected {want}, found {}", self.peek().describe()),
        )
    }

    fn expect(&mut self, t: Tok, want: &str) -> std::result::Result<(), DslError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(want))
        }
    }

    fn ident(&mut self) -> std::result::Result<String, DslError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn sys(&mut self) -> std::result::Result<Vec<String>, DslError> {
        let mut v = vec![self.ident()?];
        while *self.peek() == Tok::Star {
            self.bump();
            v.push(self.ident()?);
        }
        Ok(v)
    }

    fn source(&mut self) -> std::result::Result<Source, DslError> {
        let name = self.ident()?;
        if (name == "file" || name == "kraus") && *self.peek() == Tok::LParen {
            self.bump();
            let path = match self.peek().clone() {
                Tok::Str(s) => {
                    self.bump();
                    s
                }
                _ => return Err(self.unexpected("string path")),
            };
            self.expect(Tok::RParen, "')'")?;
            return Ok(if name == "file" {
                Source::File(path)
            } else {
                Source::Kraus(path)
            });
        }
        let mut arg = None;
        if *self.peek() == Tok::LParen {
            self.bump();
            match self.peek().clone() {
                Tok::Num(v) => {
                    self.bump();
                    arg = Some(v);
                }
                _ => return Err(self.unexpected("number")),
            }
            self.expect(Tok::RParen, "')'")?;
        }
        Ok(Source::Builtin { name, arg })
    }

    fn stmt(&mut self) -> std::result::Result<Stmt, DslError> {
        let kw_pos = self.pos();
        let kw = self.ident()?;
        let kind = match kw.as_str() {
            "prep" => DeclKind::Prep,
            "box" => DeclKind::Box,
            "eff" => DeclKind::Eff,
            "run" => {
                let name = self.ident()?;
                self.expect(Tok::Eq, "'='")?;
                let mut pipeline = vec![self.ident()?];
                while *self.peek() == Tok::Dot {
                    self.bump();
                    pipeline.push(self.ident()?);
                }
                return Ok(Stmt::Run(Run { name, pipeline }));
            }
            other => {
                return Err(err(
                    DslErrorKind::Syntax,
                    kw_pos,
                    format!("expected 'prep', 'box', 'eff' or 'run', found '{other}'"),
                ))
            }
        };
        let name = self.ident()?;
        self.expect(Tok::Colon, "':'")?;
        let first = self.sys()?;
        let ty = if *self.peek() == Tok::Arrow {
            self.bump();
            TypeExpr {
                input: Some(first),
                output: self.sys()?,
            }
        } else {
            TypeExpr {
                input: None,
                output: first,
            }
        };
        let source = if *self.peek() == Tok::Eq {
            self.bump();
            Some(self.source()?)
        } else {
            None
        };
        Ok(Stmt::Decl(Decl {
            kind,
            name,
            ty,
            source,
        }))
    }
}

/// Parse and statically check a script.
pub fn parse_script(text: &str) -> std::result::Result<Script, DslError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, at: 0 };
    let mut stmts = Vec::new();
    let mut spans = Vec::new();
    loop {
        while *p.peek() == Tok::Sep {
            p.bump();
        }
        if *p.peek() == Tok::Eof {
            break;
        }
        spans.push(p.pos());
        stmts.push(p.stmt()?);
        match p.peek() {
            Tok::Sep | Tok::Eof => {}
            _ => return Err(p.unexpected("end of statement")),
        }
    }
    if stmts.is_empty() {
        return Err(err(DslErrorKind::Syntax, p.pos(), "empty script"));
    }
    let script = Script { stmts, spans };
    script.check()?;
    Ok(script)
}

fn fmt_num(v: f64) -> String {
    format!("{v:?}")
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

impl fmt::Display for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for st in &self.stmts {
            match st {
                Stmt::Decl(d) => {
                    write!(f, "{} {}: ", d.kind.keyword(), d.name)?;
                    if let Some(inp) = &d.ty.input {
                        write!(f, "{} -> ", inp.join("*"))?;
                    }
                    write!(f, "{}", d.ty.output.join("*"))?;
                    match &d.source {
                        None => {}
                        Some(Source::File(p)) => write!(f, " = file({})", quote(p))?,
                        Some(Source::Kraus(p)) => write!(f, " = kraus({})", quote(p))?,
                        Some(Source::Builtin { name, arg: None }) => write!(f, " = {name}")?,
                        Some(Source::Builtin { name, arg: Some(a) }) => {
                            write!(f, " = {name}({})", fmt_num(*a))?
                        }
                    }
                    writeln!(f)?;
                }
                Stmt::Run(r) => writeln!(f, "run {} = {}", r.name, r.pipeline.join("."))?,
            }
        }
        Ok(())
    }
}

/// Canonical text of a script.
pub fn print_script(s: &Script) -> String {
    s.to_string()
}

/// Where system identifiers and file references resolve.
pub struct DslEnv<'a> {
    pub model: &'a dyn TheoryModel,
    pub default_dim: usize,
    pub systems: BTreeMap<String, SystemLabel>,
    pub base_dir: PathBuf,
}

impl<'a> DslEnv<'a> {
    pub fn new(model: &'a dyn TheoryModel) -> Self {
        Self {
            model,
            default_dim: model.default_dim(),
            systems: BTreeMap::new(),
            base_dir: PathBuf::from("."),
        }
    }

    pub fn resolve(&self, ident: &str) -> SystemLabel {
        self.systems
            .get(ident)
            .cloned()
            .unwrap_or_else(|| SystemLabel::atom(self.model.id(), self.default_dim))
    }

    fn joint(&self, idents: &[String]) -> SystemLabel {
        let factors = idents
            .iter()
            .flat_map(|i| self.resolve(i).factors)
            .collect();
        SystemLabel::composite(self.model.id(), factors)
    }
}

impl Script {
    pub fn decl(&self, name: &str) -> Option<(&Decl, Pos)> {
        self.stmts.iter().zip(&self.spans).find_map(|(s, p)| match s {
            Stmt::Decl(d) if d.name == name => Some((d, *p)),
            _ => None,
        })
    }

    pub fn runs(&self) -> Vec<&Run> {
        self.stmts
            .iter()
            .filter_map(|s| match s {
                Stmt::Run(r) => Some(r),
                _ => None,
            })
            .collect()
    }

    fn check(&self) -> std::result::Result<(), DslError> {
        let mut names: BTreeMap<&str, DeclKind> = BTreeMap::new();
        let mut runs: BTreeMap<&str, ()> = BTreeMap::new();
        for (st, &pos) in self.stmts.iter().zip(&self.spans) {
            match st {
                Stmt::Decl(d) => {
                    match (d.kind, d.ty.input.is_some()) {
                        (DeclKind::Box, false) => {
                            return Err(err(
                                DslErrorKind::Type,
                                pos,
                                format!("box '{}' needs a type of the form A -> B", d.name),
                            ))
                        }
                        (DeclKind::Prep | DeclKind::Eff, true) => {
                            return Err(err(
                                DslErrorKind::Type,
                                pos,
                                format!(
                                    "{} '{}' takes a single system type, not a transformation type",
                                    d.kind.keyword(),
                                    d.name
                                ),
                            ))
                        }
                        _ => {}
                    }
                    if names.insert(&d.name, d.kind).is_some() {
                        return Err(err(
                            DslErrorKind::Type,
                            pos,
                            format!("'{}' declared twice", d.name),
                        ));
                    }
                }
                Stmt::Run(r) => {
                    if runs.insert(&r.name, ()).is_some() {
                        return Err(err(DslErrorKind::Type, pos, format!("run '{}' defined twice", r.name)));
                    }
                    for step in &r.pipeline {
                        if !names.contains_key(step.as_str()) {
                            return Err(err(
                                DslErrorKind::Type,
                                pos,
                                format!("run '{}' uses undeclared box '{step}'", r.name),
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Wire up the boxes of run `run_name` into a circuit.
    pub fn build(&self, run_name: &str, env: &DslEnv<'_>) -> Result<Circuit> {
        let (run, run_pos) = self
            .stmts
            .iter()
            .zip(&self.spans)
            .find_map(|(s, p)| match s {
                Stmt::Run(r) if r.name == run_name => Some((r, *p)),
                _ => None,
            })
            .ok_or_else(|| Error::invalid(format!("no run named '{run_name}'")))?;
        let mut c = Circuit::new();
        // open wires in creation order: (name, wire id)
        let mut open: Vec<(String, usize)> = Vec::new();
        for step in &run.pipeline {
            let (decl, pos) = self.decl(step).expect("checked at parse time");
            let payload = self.payload(decl, pos, env)?;
            let mut ins = Vec::new();
            for sys in decl.inputs() {
                let w = match open.iter().rposition(|(n, _)| n == sys) {
                    Some(k) => open.remove(k).1,
                    None => {
                        let w = c.add_wire(env.resolve(sys));
                        c.mark_input(w);
                        w
                    }
                };
                ins.push(w);
            }
            let mut outs = Vec::new();
            for sys in decl.outputs() {
                if open.iter().any(|(n, _)| n == sys) {
                    return Err(err(
                        DslErrorKind::Type,
                        run_pos,
                        format!("run '{run_name}': wire '{sys}' is already open when '{step}' produces it"),
                    )
                    .into());
                }
                let w = c.add_wire(env.resolve(sys));
                open.push((sys.clone(), w));
                outs.push(w);
            }
            c.add_box(step, payload, &ins, &outs)?;
        }
        c.set_outputs(open.into_iter().map(|(_, w)| w).collect());
        c.validate()?;
        Ok(c)
    }

    fn payload(&self, d: &Decl, pos: Pos, env: &DslEnv<'_>) -> Result<Payload> {
        let input = env.joint(d.inputs());
        let output = env.joint(d.outputs());
        let source = d.source.clone().ok_or_else(|| {
            err(DslErrorKind::Type, pos, format!("'{}' has no source", d.name))
        })?;
        let payload = match &source {
            Source::File(p) => io::read_document(&env.base_dir.join(p))?.to_payload(env.model)?,
            Source::Kraus(p) => {
                let ks = io::read_kraus(&env.base_dir.join(p))?;
                let h = env
                    .model
                    .as_hilbert()
                    .ok_or_else(|| err(DslErrorKind::Type, pos, "kraus() needs a Hilbert-space theory"))?;
                Payload::Map(h.map_from_kraus(&input, &output, ks)?)
            }
            Source::Builtin { name, arg } => builtin(env.model, d.kind, name, *arg, &input, &output)
                .map_err(|e| match e {
                    Error::InvalidArgument(m) | Error::Unsupported(m) => {
                        err(DslErrorKind::Type, pos, format!("'{}': {m}", d.name)).into()
                    }
                    other => other,
                })?,
        };
        let kind_ok = matches!(
            (&payload, d.kind),
            (Payload::State(_), DeclKind::Prep) | (Payload::Effect(_), DeclKind::Eff) | (Payload::Map(_), DeclKind::Box)
        );
        if !kind_ok {
            return Err(err(
                DslErrorKind::Type,
                pos,
                format!("'{}' is declared {} but its source is a different kind", d.name, d.kind.keyword()),
            )
            .into());
        }
        let (have_in, have_out) = match &payload {
            Payload::State(s) => (SystemLabel::composite(s.system.theory, vec![]), s.system.clone()),
            Payload::Effect(e) => (e.system.clone(), SystemLabel::composite(e.system.theory, vec![])),
            Payload::Map(m) => (m.input.clone(), m.output.clone()),
        };
        if have_in != input || have_out != output {
            return Err(err(
                DslErrorKind::Type,
                pos,
                format!(
                    "'{}' declared {input} -> {output}, source has {have_in} -> {have_out}",
                    d.name
                ),
            )
            .into());
        }
        Ok(payload)
    }
}

fn need_arg(name: &str, arg: Option<f64>) -> Result<f64> {
    arg.ok_or_else(|| Error::invalid(format!("builtin '{name}' needs a numeric argument")))
}

fn index_arg(name: &str, arg: Option<f64>, bound: usize) -> Result<usize> {
    let v = need_arg(name, arg)?;
    if v < 0.0 || v.fract() != 0.0 || v as usize >= bound {
        return Err(Error::invalid(format!("builtin '{name}' index {v} out of range")));
    }
    Ok(v as usize)
}

fn prob_arg(name: &str, arg: Option<f64>) -> Result<f64> {
    let p = need_arg(name, arg)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("builtin '{name}' needs a probability, got {p}")));
    }
    Ok(p)
}

/// Maximally entangled ket on two equal factors.
fn bell_ket(sys: &SystemLabel) -> Result<CVec> {
    if sys.factors.len() != 2 || sys.factors[0] != sys.factors[1] {
        return Err(Error::invalid("bell needs two wires of equal dimension"));
    }
    let d = sys.factors[0];
    Ok(omega_ket(d) * cr(1.0 / (d as f64).sqrt()))
}

/// `(W_k ⊗ I)|Φ⟩` with `W_k = X^a Z^b`, `k = a·d + b`.
pub fn bell_basis_ket(d: usize, k: usize) -> CVec {
    let w = weyl(d, k / d, k % d);
    let lift = linalg::kron(&w, &CMat::identity(d, d));
    lift * (omega_ket(d) * cr(1.0 / (d as f64).sqrt()))
}

fn builtin(
    model: &dyn TheoryModel,
    kind: DeclKind,
    name: &str,
    arg: Option<f64>,
    input: &SystemLabel,
    output: &SystemLabel,
) -> Result<Payload> {
    match model.as_hilbert() {
        Some(h) => hilbert_builtin(h, kind, name, arg, input, output),
        None => classical_builtin(kind, name, arg, input, output),
    }
}

fn hilbert_builtin(
    h: &crate::theory::HilbertModel,
    kind: DeclKind,
    name: &str,
    arg: Option<f64>,
    input: &SystemLabel,
    output: &SystemLabel,
) -> Result<Payload> {
    let unknown = || Error::invalid(format!("unknown builtin '{name}' for {}", kind.keyword()));
    match kind {
        DeclKind::Prep => {
            let n = output.local_dim();
            let s = 1.0 / 2f64.sqrt();
            let ket = match name {
                "zero" => basis_ket(n, 0),
                "one" => basis_ket(n, 1.min(n - 1)),
                "ket" => basis_ket(n, index_arg(name, arg, n)?),
                "plus" | "minus" => {
                    let mut v = CVec::zeros(n);
                    v[0] = cr(s);
                    v[1] = cr(if name == "plus" { s } else { -s });
                    v
                }
                "bell" => bell_ket(output)?,
                "mixed" => {
                    return Ok(Payload::State(h.invariant_state(output)));
                }
                _ => return Err(unknown()),
            };
            Ok(Payload::State(h.state_from_ket(output, &ket)?))
        }
        DeclKind::Eff => {
            let n = input.local_dim();
            let op = match name {
                "unit" | "discard" => CMat::identity(n, n),
                "zero" => projector(&basis_ket(n, 0)),
                "one" => projector(&basis_ket(n, 1.min(n - 1))),
                "proj" => projector(&basis_ket(n, index_arg(name, arg, n)?)),
                "bell" => {
                    if input.factors.len() != 2 || input.factors[0] != input.factors[1] {
                        return Err(Error::invalid("bell needs two wires of equal dimension"));
                    }
                    let d = input.factors[0];
                    let k = match arg {
                        None => 0,
                        Some(_) => index_arg(name, arg, d * d)?,
                    };
                    projector(&bell_basis_ket(d, k))
                }
                _ => return Err(unknown()),
            };
            let e: EffectVec = h.effect_from_operator(input, &op)?;
            Ok(Payload::Effect(e))
        }
        DeclKind::Box => {
            let n = input.local_dim();
            let same = || -> Result<()> {
                if input != output {
                    return Err(Error::invalid(format!("'{name}' needs equal input and output types")));
                }
                Ok(())
            };
            let id = CMat::identity(n, n);
            let kraus: Vec<CMat> = match name {
                "identity" | "id" => {
                    same()?;
                    vec![id]
                }
                "x" => {
                    same()?;
                    vec![weyl(n, 1, 0)]
                }
                "z" => {
                    same()?;
                    vec![weyl(n, 0, 1)]
                }
                "y" if n == 2 => {
                    same()?;
                    vec![crate::theory::paulis()[2].clone()]
                }
                "h" if n == 2 => {
                    same()?;
                    let s = 1.0 / 2f64.sqrt();
                    vec![CMat::from_row_slice(2, 2, &[cr(s), cr(s), cr(s), cr(-s)])]
                }
                "weyl" => {
                    same()?;
                    let k = index_arg(name, arg, n * n)?;
                    vec![weyl(n, k / n, k % n)]
                }
                "bitflip" => {
                    same()?;
                    let p = prob_arg(name, arg)?;
                    vec![id * cr((1.0 - p).sqrt()), weyl(n, 1, 0) * cr(p.sqrt())]
                }
                "dephase" => {
                    same()?;
                    let p = prob_arg(name, arg)?;
                    let mut ks = vec![id * cr((1.0 - p).sqrt())];
                    for k in 0..n {
                        ks.push(projector(&basis_ket(n, k)) * cr(p.sqrt()));
                    }
                    ks
                }
                "depolarize" => {
                    same()?;
                    let p = prob_arg(name, arg)?;
                    let nn = (n * n) as f64;
                    let mut ks = vec![id * cr((1.0 - p + p / nn).sqrt())];
                    for k in 1..n * n {
                        ks.push(weyl(n, k / n, k % n) * cr((p / nn).sqrt()));
                    }
                    ks
                }
                "amp_damp" if n == 2 => {
                    same()?;
                    let g = prob_arg(name, arg)?;
                    vec![
                        CMat::from_row_slice(2, 2, &[cr(1.0), ZERO, ZERO, cr((1.0 - g).sqrt())]),
                        CMat::from_row_slice(2, 2, &[ZERO, cr(g.sqrt()), ZERO, ZERO]),
                    ]
                }
                "swap" => {
                    if input.factors.len() != 2 {
                        return Err(Error::invalid("swap needs two input wires"));
                    }
                    let mut rev = input.factors.clone();
                    rev.reverse();
                    if output.factors != rev {
                        return Err(Error::invalid("swap output must be the reversed input"));
                    }
                    vec![linalg::permutation_matrix(&input.factors, &[1, 0])]
                }
                _ => return Err(unknown()),
            };
            Ok(Payload::Map(h.map_from_kraus(input, output, kraus)?))
        }
    }
}

fn classical_builtin(
    kind: DeclKind,
    name: &str,
    arg: Option<f64>,
    input: &SystemLabel,
    output: &SystemLabel,
) -> Result<Payload> {
    let unknown = || Error::invalid(format!("unknown builtin '{name}' for {}", kind.keyword()));
    let vertex = |sys: &SystemLabel, k: usize| {
        let mut v = vec![0.0; sys.coord_dim()];
        v[k] = 1.0;
        v
    };
    match kind {
        DeclKind::Prep => {
            let n = output.coord_dim();
            let coords = match name {
                "zero" => vertex(output, 0),
                "one" => vertex(output, 1.min(n - 1)),
                "ket" => vertex(output, index_arg(name, arg, n)?),
                "mixed" => vec![1.0 / n as f64; n],
                _ => return Err(unknown()),
            };
            Ok(Payload::State(StateVec::new(output.clone(), coords)?))
        }
        DeclKind::Eff => {
            let n = input.coord_dim();
            let coords = match name {
                "unit" | "discard" => vec![1.0; n],
                "zero" => vertex(input, 0),
                "one" => vertex(input, 1.min(n - 1)),
                "proj" => vertex(input, index_arg(name, arg, n)?),
                _ => return Err(unknown()),
            };
            Ok(Payload::Effect(EffectVec::new(input.clone(), coords)?))
        }
        DeclKind::Box => {
            let n = input.coord_dim();
            if input != output && name != "swap" {
                return Err(Error::invalid(format!("'{name}' needs equal input and output types")));
            }
            let shift = crate::linalg::RMat::from_fn(n, n, |r, c| if r == (c + 1) % n { 1.0 } else { 0.0 });
            let m = match name {
                "identity" | "id" => crate::linalg::RMat::identity(n, n),
                "x" => shift,
                "bitflip" => {
                    let p = prob_arg(name, arg)?;
                    crate::linalg::RMat::identity(n, n) * (1.0 - p) + shift * p
                }
                "swap" => {
                    if input.factors.len() != 2 {
                        return Err(Error::invalid("swap needs two input wires"));
                    }
                    let (a, b) = (input.factors[0], input.factors[1]);
                    crate::linalg::RMat::from_fn(n, n, |r, c| {
                        let (i, j) = (c / b, c % b);
                        if r == j * a + i {
                            1.0
                        } else {
                            0.0
                        }
                    })
                }
                _ => return Err(unknown()),
            };
            let tag = crate::theory::MapTag::Channel;
            Ok(Payload::Map(LinearMap::new(input.clone(), output.clone(), m, tag)?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_box_chain() {
        let s = parse_script("prep r:A; box C:A->B; eff a:B").unwrap();
        assert_eq!(s.stmts.len(), 3);
        assert!(matches!(&s.stmts[1], Stmt::Decl(d) if d.kind == DeclKind::Box && d.ty.input.as_deref() == Some(&["A".to_string()][..])));
    }

    #[test]
    fn malformed_wire_type_is_syntax_error() {
        let e = parse_script("box C: A -> ;").unwrap_err();
        assert_eq!(e.kind, DslErrorKind::Syntax);
        assert_eq!((e.line, e.col), (1, 13));
    }

    #[test]
    fn lexical_error_category() {
        let e = parse_script("prep r: A = zero\nbox C: A -> B = $").unwrap_err();
        assert_eq!(e.kind, DslErrorKind::Lexical);
        assert_eq!((e.line, e.col), (2, 17));
    }

    #[test]
    fn type_error_category() {
        let e = parse_script("box C: A").unwrap_err();
        assert_eq!(e.kind, DslErrorKind::Type);
        let e = parse_script("prep r: A\nrun x = r.q").unwrap_err();
        assert_eq!((e.kind, e.line), (DslErrorKind::Type, 2));
    }

    #[test]
    fn print_parse_round_trip() {
        let text = "# comment\nprep r : A*B = bell ; eff m: A = kraus(\"k \\\"q\\\".json\")\nbox C: B -> B = bitflip(0.25)\nrun go = r.m.C\n";
        let s = parse_script(text).unwrap();
        let printed = print_script(&s);
        let again = parse_script(&printed).unwrap();
        assert_eq!(s, again);
        assert_eq!(printed, print_script(&again));
    }
}
