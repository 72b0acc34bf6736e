//! Text syntax for structures, Datalog programs, Horn sentences and LFP
//! formulas, with spanned diagnostics, plus the canonical printers.
//!
//! The grammars (`%` starts a line comment everywhere, whitespace is free):
//!
//! ```text
//! program   := item*
//! item      := "rel" name "/" nat ("," name "/" nat)* "."
//!            | "const" name ("," name)* "."
//!            | atom ":-" lit ("," lit)* "." | atom "."
//! lit       := atom | "!" atom | term "=" term | term "!=" term
//!            | "forall" var+ ":" atom
//! atom      := name [ "(" [term ("," term)*] ")" ]
//!
//! horn      := decl* ("exists" name "/" nat)* ["forall" var+]
//!              "(" [clause (";" clause)*] ")"
//! clause    := [lit ("&" lit)*] "->" (atom | "false")
//!
//! lfp       := decl* "exists" var "[" "lfp" var+ "," name ":"
//!              (("exists"|"forall") var)* "(" [conj ("|" conj)*] ")" "]"
//!              "(" [term ("," term)*] ")"
//! conj      := lit ("&" lit)*           (no "forall" literals in the matrix)
//!
//! structure := "structure" "{" "size" nat entry* "}"
//! entry     := "const" name "=" nat
//!            | "rel" name "/" nat "{" tuple* "}"    (repeats union)
//! tuple     := "(" [nat ("," nat)*] ")"
//! ```
//!
//! An identifier in term position denotes a constant when it was declared
//! with `const` (numerals are always constants) and a variable otherwise;
//! in the quantified logics, variables are exactly the quantified names.

use std::collections::BTreeSet;
use std::fmt;
use std::fmt::Write as _;

use crate::ast::{
    Atom, Clause, ClauseHead, HornSentence, LfpFormula, Literal, Program,
    ProgramErrorKind, Quant, Rule, SimLfpSystem, Term, Vocabulary,
};
use crate::structure::{Relation, Structure};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub column: u32,
}

impl SourceSpan {
    fn point(start: usize, line: u32, column: u32) -> Self {
        SourceSpan { start, end: start, line, column }
    }

    fn to(self, other: SourceSpan) -> SourceSpan {
        SourceSpan { start: self.start, end: other.end, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticCode {
    SyntaxError,
    ReservedWord,
    UnknownSymbol,
    ArityMismatch,
    NegatedIntentional,
    UniversalOverExtensional,
    NonNormalHead,
    BadUniversal,
    NonExistentialPrefix,
    NegativeFixpointVariable,
    NotDNF,
    EmptyDomain,
    ElementOutOfRange,
    BadTuple,
    DuplicateName,
}

impl fmt::Display for DiagnosticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DiagnosticCode::SyntaxError => "SyntaxError",
            DiagnosticCode::ReservedWord => "ReservedWord",
            DiagnosticCode::UnknownSymbol => "UnknownSymbol",
            DiagnosticCode::ArityMismatch => "ArityMismatch",
            DiagnosticCode::NegatedIntentional => "NegatedIntentional",
            DiagnosticCode::UniversalOverExtensional => "UniversalOverExtensional",
            DiagnosticCode::NonNormalHead => "NonNormalHead",
            DiagnosticCode::BadUniversal => "BadUniversal",
            DiagnosticCode::NonExistentialPrefix => "NonExistentialPrefix",
            DiagnosticCode::NegativeFixpointVariable => "NegativeFixpointVariable",
            DiagnosticCode::NotDNF => "NotDNF",
            DiagnosticCode::EmptyDomain => "EmptyDomain",
            DiagnosticCode::ElementOutOfRange => "ElementOutOfRange",
            DiagnosticCode::BadTuple => "BadTuple",
            DiagnosticCode::DuplicateName => "DuplicateName",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub span: SourceSpan,
    pub code: DiagnosticCode,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: {}: {}",
            self.span.line, self.span.column, self.code, self.message
        )
    }
}

impl std::error::Error for Diagnostic {}

fn program_error_code(kind: ProgramErrorKind) -> DiagnosticCode {
    match kind {
        ProgramErrorKind::NegatedIntentional => DiagnosticCode::NegatedIntentional,
        ProgramErrorKind::UniversalOverExtensional => DiagnosticCode::UniversalOverExtensional,
        ProgramErrorKind::ArityMismatch => DiagnosticCode::ArityMismatch,
        ProgramErrorKind::UnknownSymbol => DiagnosticCode::UnknownSymbol,
        ProgramErrorKind::NonNormalHead => DiagnosticCode::NonNormalHead,
        ProgramErrorKind::BadUniversal => DiagnosticCode::BadUniversal,
    }
}

const RESERVED: &[&str] = &[
    "const", "rel", "forall", "exists", "false", "structure", "size", "lfp",
];

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Number(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Semi,
    Colon,
    ColonDash,
    Eq,
    Neq,
    Bang,
    Arrow,
    Amp,
    Pipe,
    Slash,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(s) => format!("`{s}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Colon => "`:`".into(),
            Tok::ColonDash => "`:-`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Neq => "`!=`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: SourceSpan,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_' || c == '$' || c == '~'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$' || c == '*' || c == '~'
}

fn lex(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut tokens = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let here = SourceSpan::point(i, line, col);
        match c {
            ' ' | '\t' | '\r' => {
                i += 1;
                col += 1;
            }
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            '%' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                    col += 1;
                }
            }
            '(' | ')' | '{' | '}' | '[' | ']' | ',' | '.' | ';' | '&' | '|' | '/' | '=' => {
                let tok = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    ',' => Tok::Comma,
                    '.' => Tok::Dot,
                    ';' => Tok::Semi,
                    '&' => Tok::Amp,
                    '|' => Tok::Pipe,
                    '/' => Tok::Slash,
                    _ => Tok::Eq,
                };
                tokens.push(Token { tok, span: SourceSpan { end: i + 1, ..here } });
                i += 1;
                col += 1;
            }
            ':' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'-' {
                    tokens.push(Token { tok: Tok::ColonDash, span: SourceSpan { end: i + 2, ..here } });
                    i += 2;
                    col += 2;
                } else {
                    tokens.push(Token { tok: Tok::Colon, span: SourceSpan { end: i + 1, ..here } });
                    i += 1;
                    col += 1;
                }
            }
            '!' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'=' {
                    tokens.push(Token { tok: Tok::Neq, span: SourceSpan { end: i + 2, ..here } });
                    i += 2;
                    col += 2;
                } else {
                    tokens.push(Token { tok: Tok::Bang, span: SourceSpan { end: i + 1, ..here } });
                    i += 1;
                    col += 1;
                }
            }
            '-' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'>' {
                    tokens.push(Token { tok: Tok::Arrow, span: SourceSpan { end: i + 2, ..here } });
                    i += 2;
                    col += 2;
                } else {
                    return Err(Diagnostic {
                        span: here,
                        code: DiagnosticCode::SyntaxError,
                        message: "expected `->`".to_string(),
                    });
                }
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                    i += 1;
                    col += 1;
                }
                tokens.push(Token {
                    tok: Tok::Number(src[start..i].to_string()),
                    span: SourceSpan { end: i, ..here },
                });
            }
            c if is_ident_start(c) => {
                let start = i;
                while i < bytes.len() && is_ident_continue(bytes[i] as char) {
                    i += 1;
                    col += 1;
                }
                tokens.push(Token {
                    tok: Tok::Ident(src[start..i].to_string()),
                    span: SourceSpan { end: i, ..here },
                });
            }
            other => {
                return Err(Diagnostic {
                    span: here,
                    code: DiagnosticCode::SyntaxError,
                    message: format!("unexpected character `{other}`"),
                });
            }
        }
    }
    tokens.push(Token {
        tok: Tok::Eof,
        span: SourceSpan::point(bytes.len(), line, col),
    });
    Ok(tokens)
}

// ---------------------------------------------------------------------------
// Token cursor
// ---------------------------------------------------------------------------

struct Cursor {
    tokens: Vec<Token>,
    pos: usize,
}

impl Cursor {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek2(&self) -> &Tok {
        &self.tokens[(self.pos + 1).min(self.tokens.len() - 1)].tok
    }

    fn span(&self) -> SourceSpan {
        self.tokens[self.pos].span
    }

    fn prev_span(&self) -> SourceSpan {
        self.tokens[self.pos.saturating_sub(1)].span
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error(&self, message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            span: self.span(),
            code: DiagnosticCode::SyntaxError,
            message: message.into(),
        }
    }

    fn expect(&mut self, tok: &Tok) -> Result<Token, Diagnostic> {
        if self.peek() == tok {
            Ok(self.bump())
        } else {
            Err(self.error(format!(
                "expected {}, found {}",
                tok.describe(),
                self.peek().describe()
            )))
        }
    }

    /// A name: an identifier that is not reserved, or a numeral.
    fn expect_name(&mut self) -> Result<(String, SourceSpan), Diagnostic> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                if RESERVED.contains(&s.as_str()) {
                    return Err(Diagnostic {
                        span: self.span(),
                        code: DiagnosticCode::ReservedWord,
                        message: format!("`{s}` is a reserved word"),
                    });
                }
                let t = self.bump();
                Ok((s, t.span))
            }
            Tok::Number(s) => {
                let t = self.bump();
                Ok((s, t.span))
            }
            other => Err(self.error(format!("expected a name, found {}", other.describe()))),
        }
    }

    fn expect_ident(&mut self) -> Result<(String, SourceSpan), Diagnostic> {
        match self.peek().clone() {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                let t = self.bump();
                Ok((s, t.span))
            }
            Tok::Ident(s) => Err(Diagnostic {
                span: self.span(),
                code: DiagnosticCode::ReservedWord,
                message: format!("`{s}` is a reserved word"),
            }),
            other => {
                Err(self.error(format!("expected an identifier, found {}", other.describe())))
            }
        }
    }

    fn expect_nat(&mut self) -> Result<(u64, SourceSpan), Diagnostic> {
        match self.peek().clone() {
            Tok::Number(s) => {
                let t = self.bump();
                s.parse::<u64>().map(|n| (n, t.span)).map_err(|_| Diagnostic {
                    span: t.span,
                    code: DiagnosticCode::SyntaxError,
                    message: format!("number `{s}` is too large"),
                })
            }
            other => Err(self.error(format!("expected a number, found {}", other.describe()))),
        }
    }
}

// ---------------------------------------------------------------------------
// Raw (unresolved) pieces shared by the logic parsers
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct RawAtom {
    relation: String,
    args: Vec<(String, bool)>, // (name, is_numeral)
    span: SourceSpan,
}

#[derive(Debug, Clone)]
enum RawLiteral {
    Pos(RawAtom),
    Neg(RawAtom),
    Eq((String, bool), (String, bool)),
    Neq((String, bool), (String, bool)),
    Forall { vars: Vec<String>, atom: RawAtom, span: SourceSpan },
}

fn parse_raw_term(cur: &mut Cursor) -> Result<(String, bool), Diagnostic> {
    match cur.peek().clone() {
        Tok::Number(_) => {
            let (n, _) = cur.expect_name()?;
            Ok((n, true))
        }
        _ => {
            let (n, _) = cur.expect_ident()?;
            Ok((n, false))
        }
    }
}

fn parse_raw_atom(cur: &mut Cursor) -> Result<RawAtom, Diagnostic> {
    let (relation, span) = cur.expect_ident()?;
    let mut args = Vec::new();
    if cur.eat(&Tok::LParen) {
        if !cur.eat(&Tok::RParen) {
            loop {
                args.push(parse_raw_term(cur)?);
                if cur.eat(&Tok::Comma) {
                    continue;
                }
                cur.expect(&Tok::RParen)?;
                break;
            }
        }
    }
    Ok(RawAtom { relation, args, span: span.to(cur.prev_span()) })
}

/// One body literal; `allow_forall` gates the `forall vars : atom` form.
fn parse_raw_literal(cur: &mut Cursor, allow_forall: bool) -> Result<RawLiteral, Diagnostic> {
    if cur.is_keyword("forall") {
        let start = cur.span();
        if !allow_forall {
            return Err(Diagnostic {
                span: start,
                code: DiagnosticCode::NotDNF,
                message: "quantifiers are not allowed here".to_string(),
            });
        }
        cur.bump();
        let mut vars = Vec::new();
        while !matches!(cur.peek(), Tok::Colon) {
            let (v, _) = cur.expect_ident()?;
            vars.push(v);
        }
        if vars.is_empty() {
            return Err(cur.error("expected at least one bound variable"));
        }
        cur.expect(&Tok::Colon)?;
        let atom = parse_raw_atom(cur)?;
        let span = start.to(cur.prev_span());
        return Ok(RawLiteral::Forall { vars, atom, span });
    }
    if cur.eat(&Tok::Bang) {
        let atom = parse_raw_atom(cur)?;
        return Ok(RawLiteral::Neg(atom));
    }
    // Either an atom or an (in)equality; decide by the following token.
    if matches!(cur.peek(), Tok::Ident(_)) && matches!(cur.peek2(), Tok::LParen) {
        let atom = parse_raw_atom(cur)?;
        return Ok(RawLiteral::Pos(atom));
    }
    let save = cur.pos;
    let first = parse_raw_term(cur);
    match (first, cur.peek().clone()) {
        (Ok(lhs), Tok::Eq) => {
            cur.bump();
            let rhs = parse_raw_term(cur)?;
            Ok(RawLiteral::Eq(lhs, rhs))
        }
        (Ok(lhs), Tok::Neq) => {
            cur.bump();
            let rhs = parse_raw_term(cur)?;
            Ok(RawLiteral::Neq(lhs, rhs))
        }
        _ => {
            cur.pos = save;
            let atom = parse_raw_atom(cur)?;
            Ok(RawLiteral::Pos(atom))
        }
    }
}

/// Resolves a raw term against a set of variable names: numerals and
/// names outside `vars` become constants.
fn resolve_term(raw: &(String, bool), vars: &BTreeSet<String>) -> Term {
    if raw.1 || !vars.contains(&raw.0) {
        Term::Const(raw.0.clone())
    } else {
        Term::Var(raw.0.clone())
    }
}

// ---------------------------------------------------------------------------
// Datalog programs
// ---------------------------------------------------------------------------

pub fn parse_program(text: &str) -> Result<Program, Vec<Diagnostic>> {
    let tokens = lex(text).map_err(|d| vec![d])?;
    let mut cur = Cursor { tokens, pos: 0 };

    struct RawRule {
        head: RawAtom,
        body: Vec<RawLiteral>,
        span: SourceSpan,
    }

    let mut declared_consts: BTreeSet<String> = BTreeSet::new();
    let mut declared_rels: Vec<(String, usize, SourceSpan)> = Vec::new();
    let mut raw_rules: Vec<RawRule> = Vec::new();

    while !matches!(cur.peek(), Tok::Eof) {
        if cur.eat_keyword("const") {
            loop {
                let (name, _) = cur.expect_name().map_err(|d| vec![d])?;
                declared_consts.insert(name);
                if cur.eat(&Tok::Comma) {
                    continue;
                }
                cur.expect(&Tok::Dot).map_err(|d| vec![d])?;
                break;
            }
            continue;
        }
        if cur.eat_keyword("rel") {
            loop {
                let (name, span) = cur.expect_ident().map_err(|d| vec![d])?;
                cur.expect(&Tok::Slash).map_err(|d| vec![d])?;
                let (arity, _) = cur.expect_nat().map_err(|d| vec![d])?;
                declared_rels.push((name, arity as usize, span));
                if cur.eat(&Tok::Comma) {
                    continue;
                }
                cur.expect(&Tok::Dot).map_err(|d| vec![d])?;
                break;
            }
            continue;
        }
        let start = cur.span();
        let head = parse_raw_atom(&mut cur).map_err(|d| vec![d])?;
        let mut body = Vec::new();
        if cur.eat(&Tok::ColonDash) && !matches!(cur.peek(), Tok::Dot) {
            loop {
                body.push(parse_raw_literal(&mut cur, true).map_err(|d| vec![d])?);
                if cur.eat(&Tok::Comma) {
                    continue;
                }
                break;
            }
        }
        cur.expect(&Tok::Dot).map_err(|d| vec![d])?;
        raw_rules.push(RawRule { head, body, span: start.to(cur.prev_span()) });
    }

    // Resolve terms: declared constants and numerals are constants,
    // everything else is a variable.
    let resolve = |raw: &(String, bool)| -> Term {
        if raw.1 || declared_consts.contains(&raw.0) {
            Term::Const(raw.0.clone())
        } else {
            Term::Var(raw.0.clone())
        }
    };
    let resolve_atom = |a: &RawAtom| Atom {
        relation: a.relation.clone(),
        args: a.args.iter().map(resolve).collect(),
    };
    let mut rules = Vec::new();
    let mut spans = Vec::new();
    for raw in &raw_rules {
        let body = raw
            .body
            .iter()
            .map(|lit| match lit {
                RawLiteral::Pos(a) => Literal::Pos(resolve_atom(a)),
                RawLiteral::Neg(a) => Literal::Neg(resolve_atom(a)),
                RawLiteral::Eq(s, t) => Literal::Eq(resolve(s), resolve(t)),
                RawLiteral::Neq(s, t) => Literal::Neq(resolve(s), resolve(t)),
                RawLiteral::Forall { vars, atom, .. } => Literal::Forall {
                    vars: vars.clone(),
                    atom: resolve_atom(atom),
                },
            })
            .collect();
        rules.push(Rule::new(resolve_atom(&raw.head), body));
        spans.push(raw.span);
    }

    let mut program = Program::infer(rules);
    let mut diags = Vec::new();
    for c in &declared_consts {
        if let Err(e) = program.vocabulary.add_constant(c) {
            diags.push(Diagnostic {
                span: SourceSpan::point(0, 1, 1),
                code: DiagnosticCode::DuplicateName,
                message: e.to_string(),
            });
        }
    }
    for (name, arity, span) in &declared_rels {
        if let Err(e) = program.vocabulary.add_relation(name, *arity) {
            diags.push(Diagnostic {
                span: *span,
                code: DiagnosticCode::ArityMismatch,
                message: e.to_string(),
            });
        }
    }
    if let Err(errors) = program.validate() {
        for e in errors {
            let span = e.rule.map(|i| spans[i]).unwrap_or_else(|| SourceSpan::point(0, 1, 1));
            diags.push(Diagnostic {
                span,
                code: program_error_code(e.kind),
                message: e.message,
            });
        }
    }
    if diags.is_empty() {
        Ok(program)
    } else {
        Err(diags)
    }
}

// ---------------------------------------------------------------------------
// Horn sentences
// ---------------------------------------------------------------------------

pub fn parse_horn(text: &str) -> Result<HornSentence, Vec<Diagnostic>> {
    let tokens = lex(text).map_err(|d| vec![d])?;
    let mut cur = Cursor { tokens, pos: 0 };
    let mut diags: Vec<Diagnostic> = Vec::new();

    let mut vocabulary = Vocabulary::new();
    let mut declared_consts: BTreeSet<String> = BTreeSet::new();
    loop {
        if cur.eat_keyword("const") {
            loop {
                let (name, _) = cur.expect_name().map_err(|d| vec![d])?;
                declared_consts.insert(name.clone());
                let _ = vocabulary.add_constant(&name);
                if cur.eat(&Tok::Comma) {
                    continue;
                }
                cur.expect(&Tok::Dot).map_err(|d| vec![d])?;
                break;
            }
        } else if cur.eat_keyword("rel") {
            loop {
                let (name, span) = cur.expect_ident().map_err(|d| vec![d])?;
                cur.expect(&Tok::Slash).map_err(|d| vec![d])?;
                let (arity, _) = cur.expect_nat().map_err(|d| vec![d])?;
                if let Err(e) = vocabulary.add_relation(&name, arity as usize) {
                    diags.push(Diagnostic {
                        span,
                        code: DiagnosticCode::ArityMismatch,
                        message: e.to_string(),
                    });
                }
                if cur.eat(&Tok::Comma) {
                    continue;
                }
                cur.expect(&Tok::Dot).map_err(|d| vec![d])?;
                break;
            }
        } else {
            break;
        }
    }

    let mut so_vars: Vec<(String, usize)> = Vec::new();
    while cur.is_keyword("exists") {
        cur.bump();
        let (name, _) = cur.expect_ident().map_err(|d| vec![d])?;
        cur.expect(&Tok::Slash).map_err(|d| vec![d])?;
        let (arity, _) = cur.expect_nat().map_err(|d| vec![d])?;
        so_vars.push((name, arity as usize));
    }

    let mut fo_vars: Vec<String> = Vec::new();
    if cur.is_keyword("forall") {
        // `forall R/1` would be a universal second-order quantifier.
        let span = cur.span();
        cur.bump();
        loop {
            let (name, _) = cur.expect_ident().map_err(|d| vec![d])?;
            if matches!(cur.peek(), Tok::Slash) {
                return Err(vec![Diagnostic {
                    span,
                    code: DiagnosticCode::NonExistentialPrefix,
                    message: format!(
                        "universal second-order quantifier over `{name}`; only existential \
                         relation quantifiers are supported"
                    ),
                }]);
            }
            fo_vars.push(name);
            if matches!(cur.peek(), Tok::LParen) {
                break;
            }
        }
    }

    cur.expect(&Tok::LParen).map_err(|d| vec![d])?;
    let so_names: BTreeSet<String> = so_vars.iter().map(|(n, _)| n.clone()).collect();
    let mut clauses = Vec::new();
    let mut clause_spans = Vec::new();
    if !cur.eat(&Tok::RParen) {
        loop {
            let start = cur.span();
            let mut raw_body: Vec<RawLiteral> = Vec::new();
            if !matches!(cur.peek(), Tok::Arrow) {
                loop {
                    raw_body.push(parse_raw_literal(&mut cur, true).map_err(|d| vec![d])?);
                    if cur.eat(&Tok::Amp) {
                        continue;
                    }
                    break;
                }
            }
            cur.expect(&Tok::Arrow).map_err(|d| vec![d])?;
            let head = if cur.eat_keyword("false") {
                ClauseHead::Bottom
            } else {
                let atom = parse_raw_atom(&mut cur).map_err(|d| vec![d])?;
                ClauseHead::Atom(Atom {
                    relation: atom.relation.clone(),
                    args: atom
                        .args
                        .iter()
                        .map(|t| resolve_horn_term(t, &fo_vars, &[], &declared_consts))
                        .collect(),
                })
            };
            // Classify body literals into relation-variable premises and
            // extensional premises.
            let mut alphas = Vec::new();
            let mut betas = Vec::new();
            for lit in &raw_body {
                match lit {
                    RawLiteral::Pos(a) if so_names.contains(&a.relation) => {
                        alphas.push(Literal::Pos(resolve_horn_atom(
                            a,
                            &fo_vars,
                            &[],
                            &declared_consts,
                        )));
                    }
                    RawLiteral::Pos(a) => {
                        betas.push(Literal::Pos(resolve_horn_atom(
                            a,
                            &fo_vars,
                            &[],
                            &declared_consts,
                        )));
                    }
                    RawLiteral::Neg(a) if so_names.contains(&a.relation) => {
                        diags.push(Diagnostic {
                            span: a.span,
                            code: DiagnosticCode::NegatedIntentional,
                            message: format!(
                                "relation variable `{}` may not occur negated",
                                a.relation
                            ),
                        });
                    }
                    RawLiteral::Neg(a) => {
                        betas.push(Literal::Neg(resolve_horn_atom(
                            a,
                            &fo_vars,
                            &[],
                            &declared_consts,
                        )));
                    }
                    RawLiteral::Eq(s, t) => betas.push(Literal::Eq(
                        resolve_horn_term(s, &fo_vars, &[], &declared_consts),
                        resolve_horn_term(t, &fo_vars, &[], &declared_consts),
                    )),
                    RawLiteral::Neq(s, t) => betas.push(Literal::Neq(
                        resolve_horn_term(s, &fo_vars, &[], &declared_consts),
                        resolve_horn_term(t, &fo_vars, &[], &declared_consts),
                    )),
                    RawLiteral::Forall { vars, atom, span } => {
                        if !so_names.contains(&atom.relation) {
                            diags.push(Diagnostic {
                                span: *span,
                                code: DiagnosticCode::UniversalOverExtensional,
                                message: format!(
                                    "universal premise over `{}`, which is not a relation \
                                     variable",
                                    atom.relation
                                ),
                            });
                        } else {
                            alphas.push(Literal::Forall {
                                vars: vars.clone(),
                                atom: resolve_horn_atom(atom, &fo_vars, vars, &declared_consts),
                            });
                        }
                    }
                }
            }
            clauses.push(Clause { alphas, betas, head });
            clause_spans.push(start.to(cur.prev_span()));
            if cur.eat(&Tok::Semi) {
                continue;
            }
            cur.expect(&Tok::RParen).map_err(|d| vec![d])?;
            break;
        }
    }
    if !matches!(cur.peek(), Tok::Eof) {
        return Err(vec![cur.error("expected end of input")]);
    }

    // Infer extensional relations and constants used in clauses.
    let mut sentence = HornSentence { so_vars, fo_vars, clauses, vocabulary };
    infer_horn_vocabulary(&mut sentence);
    if let Err(errors) = sentence.validate() {
        for e in errors {
            let span = e
                .rule
                .map(|i| clause_spans[i])
                .unwrap_or_else(|| SourceSpan::point(0, 1, 1));
            diags.push(Diagnostic { span, code: program_error_code(e.kind), message: e.message });
        }
    }
    if diags.is_empty() {
        Ok(sentence)
    } else {
        Err(diags)
    }
}

fn resolve_horn_term(
    raw: &(String, bool),
    fo_vars: &[String],
    bound: &[String],
    consts: &BTreeSet<String>,
) -> Term {
    if raw.1 || consts.contains(&raw.0) {
        return Term::Const(raw.0.clone());
    }
    if fo_vars.contains(&raw.0) || bound.contains(&raw.0) {
        Term::Var(raw.0.clone())
    } else {
        Term::Const(raw.0.clone())
    }
}

fn resolve_horn_atom(
    raw: &RawAtom,
    fo_vars: &[String],
    bound: &[String],
    consts: &BTreeSet<String>,
) -> Atom {
    Atom {
        relation: raw.relation.clone(),
        args: raw
            .args
            .iter()
            .map(|t| resolve_horn_term(t, fo_vars, bound, consts))
            .collect(),
    }
}

fn infer_horn_vocabulary(sentence: &mut HornSentence) {
    let so: BTreeSet<&str> = sentence.so_vars.iter().map(|(n, _)| n.as_str()).collect();
    let mut rels: Vec<(String, usize)> = Vec::new();
    let mut consts: Vec<String> = Vec::new();
    let see_atom = |a: &Atom, rels: &mut Vec<(String, usize)>, consts: &mut Vec<String>| {
        if !so.contains(a.relation.as_str()) {
            rels.push((a.relation.clone(), a.args.len()));
        }
        for t in &a.args {
            if let Term::Const(c) = t {
                consts.push(c.clone());
            }
        }
    };
    for clause in &sentence.clauses {
        for lit in clause.alphas.iter().chain(&clause.betas) {
            match lit {
                Literal::Pos(a) | Literal::Neg(a) | Literal::Forall { atom: a, .. } => {
                    see_atom(a, &mut rels, &mut consts)
                }
                Literal::Eq(s, t) | Literal::Neq(s, t) => {
                    for term in [s, t] {
                        if let Term::Const(c) = term {
                            consts.push(c.clone());
                        }
                    }
                }
            }
        }
        if let ClauseHead::Atom(a) = &clause.head {
            for t in &a.args {
                if let Term::Const(c) = t {
                    consts.push(c.clone());
                }
            }
        }
    }
    for (name, arity) in rels {
        let _ = sentence.vocabulary.add_relation(&name, arity);
    }
    for c in consts {
        let _ = sentence.vocabulary.add_constant(&c);
    }
}

// ---------------------------------------------------------------------------
// LFP formulas
// ---------------------------------------------------------------------------

pub fn parse_lfp(text: &str) -> Result<LfpFormula, Vec<Diagnostic>> {
    let tokens = lex(text).map_err(|d| vec![d])?;
    let mut cur = Cursor { tokens, pos: 0 };
    let mut diags: Vec<Diagnostic> = Vec::new();

    let mut vocabulary = Vocabulary::new();
    let mut declared_consts: BTreeSet<String> = BTreeSet::new();
    loop {
        if cur.eat_keyword("const") {
            loop {
                let (name, _) = cur.expect_name().map_err(|d| vec![d])?;
                declared_consts.insert(name.clone());
                let _ = vocabulary.add_constant(&name);
                if cur.eat(&Tok::Comma) {
                    continue;
                }
                cur.expect(&Tok::Dot).map_err(|d| vec![d])?;
                break;
            }
        } else if cur.eat_keyword("rel") {
            loop {
                let (name, span) = cur.expect_ident().map_err(|d| vec![d])?;
                cur.expect(&Tok::Slash).map_err(|d| vec![d])?;
                let (arity, _) = cur.expect_nat().map_err(|d| vec![d])?;
                if let Err(e) = vocabulary.add_relation(&name, arity as usize) {
                    diags.push(Diagnostic {
                        span,
                        code: DiagnosticCode::ArityMismatch,
                        message: e.to_string(),
                    });
                }
                if cur.eat(&Tok::Comma) {
                    continue;
                }
                cur.expect(&Tok::Dot).map_err(|d| vec![d])?;
                break;
            }
        } else {
            break;
        }
    }

    if !cur.eat_keyword("exists") {
        return Err(vec![cur.error("expected `exists`")]);
    }
    let (exist_var, _) = cur.expect_ident().map_err(|d| vec![d])?;
    cur.expect(&Tok::LBracket).map_err(|d| vec![d])?;
    if !cur.eat_keyword("lfp") {
        return Err(vec![cur.error("expected `lfp`")]);
    }
    let mut lfp_vars = Vec::new();
    while !matches!(cur.peek(), Tok::Comma) {
        let (v, span) = cur.expect_ident().map_err(|d| vec![d])?;
        if lfp_vars.contains(&v) {
            diags.push(Diagnostic {
                span,
                code: DiagnosticCode::DuplicateName,
                message: format!("fixed-point variable `{v}` listed twice"),
            });
        }
        lfp_vars.push(v);
    }
    cur.expect(&Tok::Comma).map_err(|d| vec![d])?;
    let (lfp_relation, _) = cur.expect_ident().map_err(|d| vec![d])?;
    cur.expect(&Tok::Colon).map_err(|d| vec![d])?;

    let mut prefix = Vec::new();
    loop {
        if cur.eat_keyword("exists") {
            let (v, _) = cur.expect_ident().map_err(|d| vec![d])?;
            prefix.push((Quant::Exists, v));
        } else if cur.eat_keyword("forall") {
            let (v, _) = cur.expect_ident().map_err(|d| vec![d])?;
            prefix.push((Quant::Forall, v));
        } else {
            break;
        }
    }

    let mut vars: BTreeSet<String> = lfp_vars.iter().cloned().collect();
    vars.extend(prefix.iter().map(|(_, v)| v.clone()));
    vars.insert(exist_var.clone());

    cur.expect(&Tok::LParen).map_err(|d| vec![d])?;
    let mut clauses: Vec<Vec<Literal>> = Vec::new();
    if !cur.eat(&Tok::RParen) {
        loop {
            let mut conj = Vec::new();
            loop {
                if cur.is_keyword("exists") || cur.is_keyword("forall") {
                    return Err(vec![Diagnostic {
                        span: cur.span(),
                        code: DiagnosticCode::NotDNF,
                        message: "the matrix must be a quantifier-free DNF; put quantifiers in \
                                  the prefix"
                            .to_string(),
                    }]);
                }
                let raw = parse_raw_literal(&mut cur, false).map_err(|d| vec![d])?;
                let lit = match raw {
                    RawLiteral::Pos(a) => Literal::Pos(resolve_lfp_atom(&a, &vars, &declared_consts)),
                    RawLiteral::Neg(a) => {
                        if a.relation == lfp_relation {
                            diags.push(Diagnostic {
                                span: a.span,
                                code: DiagnosticCode::NegativeFixpointVariable,
                                message: format!(
                                    "fixed-point relation `{}` occurs negatively",
                                    a.relation
                                ),
                            });
                        }
                        Literal::Neg(resolve_lfp_atom(&a, &vars, &declared_consts))
                    }
                    RawLiteral::Eq(s, t) => Literal::Eq(
                        resolve_term_with_consts(&s, &vars, &declared_consts),
                        resolve_term_with_consts(&t, &vars, &declared_consts),
                    ),
                    RawLiteral::Neq(s, t) => Literal::Neq(
                        resolve_term_with_consts(&s, &vars, &declared_consts),
                        resolve_term_with_consts(&t, &vars, &declared_consts),
                    ),
                    RawLiteral::Forall { .. } => unreachable!("gated by allow_forall"),
                };
                conj.push(lit);
                if cur.eat(&Tok::Amp) {
                    continue;
                }
                break;
            }
            clauses.push(conj);
            if cur.eat(&Tok::Pipe) {
                continue;
            }
            cur.expect(&Tok::RParen).map_err(|d| vec![d])?;
            break;
        }
    }
    cur.expect(&Tok::RBracket).map_err(|d| vec![d])?;
    cur.expect(&Tok::LParen).map_err(|d| vec![d])?;
    let mut fixpoint_args = Vec::new();
    if !cur.eat(&Tok::RParen) {
        loop {
            let raw = parse_raw_term(&mut cur).map_err(|d| vec![d])?;
            fixpoint_args.push(resolve_term_with_consts(&raw, &vars, &declared_consts));
            if cur.eat(&Tok::Comma) {
                continue;
            }
            cur.expect(&Tok::RParen).map_err(|d| vec![d])?;
            break;
        }
    }
    if !matches!(cur.peek(), Tok::Eof) {
        return Err(vec![cur.error("expected end of input")]);
    }

    let mut formula = LfpFormula {
        exist_var,
        lfp_vars,
        lfp_relation,
        prefix,
        clauses,
        fixpoint_args,
        vocabulary,
    };
    // Infer extensional relations/constants appearing in the matrix.
    for clause in &formula.clauses {
        for lit in clause {
            if let Some(a) = lit.atom() {
                if a.relation != formula.lfp_relation {
                    let _ = formula.vocabulary.add_relation(&a.relation, a.args.len());
                }
                for t in &a.args {
                    if let Term::Const(c) = t {
                        let _ = formula.vocabulary.add_constant(c);
                    }
                }
            }
            if let Literal::Eq(s, t) | Literal::Neq(s, t) = lit {
                for term in [s, t] {
                    if let Term::Const(c) = term {
                        let _ = formula.vocabulary.add_constant(c);
                    }
                }
            }
        }
    }
    if let Err(errors) = formula.validate() {
        for e in errors {
            let code = if e.kind == ProgramErrorKind::NegatedIntentional {
                DiagnosticCode::NegativeFixpointVariable
            } else {
                program_error_code(e.kind)
            };
            diags.push(Diagnostic {
                span: SourceSpan::point(0, 1, 1),
                code,
                message: e.message,
            });
        }
    }
    if diags.is_empty() {
        Ok(formula)
    } else {
        Err(diags)
    }
}

fn resolve_term_with_consts(
    raw: &(String, bool),
    vars: &BTreeSet<String>,
    consts: &BTreeSet<String>,
) -> Term {
    if raw.1 || consts.contains(&raw.0) {
        Term::Const(raw.0.clone())
    } else {
        resolve_term(raw, vars)
    }
}

fn resolve_lfp_atom(raw: &RawAtom, vars: &BTreeSet<String>, consts: &BTreeSet<String>) -> Atom {
    Atom {
        relation: raw.relation.clone(),
        args: raw
            .args
            .iter()
            .map(|t| resolve_term_with_consts(t, vars, consts))
            .collect(),
    }
}

// ---------------------------------------------------------------------------
// Structures
// ---------------------------------------------------------------------------

pub fn parse_structure(text: &str) -> Result<Structure, Vec<Diagnostic>> {
    let tokens = lex(text).map_err(|d| vec![d])?;
    let mut cur = Cursor { tokens, pos: 0 };
    if !cur.eat_keyword("structure") {
        return Err(vec![cur.error("expected `structure`")]);
    }
    cur.expect(&Tok::LBrace).map_err(|d| vec![d])?;
    if !cur.eat_keyword("size") {
        return Err(vec![cur.error("expected `size`")]);
    }
    let (size, size_span) = cur.expect_nat().map_err(|d| vec![d])?;
    if size == 0 {
        return Err(vec![Diagnostic {
            span: size_span,
            code: DiagnosticCode::EmptyDomain,
            message: "structures must have at least one element".to_string(),
        }]);
    }
    if size > u32::MAX as u64 {
        return Err(vec![Diagnostic {
            span: size_span,
            code: DiagnosticCode::SyntaxError,
            message: "domain too large".to_string(),
        }]);
    }
    let mut st = Structure::new(size as u32);
    let mut diags = Vec::new();
    let mut pending: Vec<(String, usize, Vec<Vec<u32>>, SourceSpan)> = Vec::new();
    loop {
        if cur.eat(&Tok::RBrace) {
            break;
        }
        if cur.eat_keyword("const") {
            let (name, span) = cur.expect_name().map_err(|d| vec![d])?;
            cur.expect(&Tok::Eq).map_err(|d| vec![d])?;
            let (value, vspan) = cur.expect_nat().map_err(|d| vec![d])?;
            if value >= size {
                diags.push(Diagnostic {
                    span: vspan,
                    code: DiagnosticCode::ElementOutOfRange,
                    message: format!("element {value} is outside the domain 0..{size}"),
                });
            } else if let Err(e) = st.set_constant(&name, value as u32) {
                diags.push(Diagnostic {
                    span,
                    code: DiagnosticCode::DuplicateName,
                    message: e.to_string(),
                });
            }
            continue;
        }
        if cur.eat_keyword("rel") {
            let (name, span) = cur.expect_ident().map_err(|d| vec![d])?;
            cur.expect(&Tok::Slash).map_err(|d| vec![d])?;
            let (arity, _) = cur.expect_nat().map_err(|d| vec![d])?;
            cur.expect(&Tok::LBrace).map_err(|d| vec![d])?;
            let mut tuples = Vec::new();
            while !cur.eat(&Tok::RBrace) {
                let tspan = cur.span();
                cur.expect(&Tok::LParen).map_err(|d| vec![d])?;
                let mut tuple = Vec::new();
                if !cur.eat(&Tok::RParen) {
                    loop {
                        let (e, espan) = cur.expect_nat().map_err(|d| vec![d])?;
                        if e >= size {
                            diags.push(Diagnostic {
                                span: espan,
                                code: DiagnosticCode::ElementOutOfRange,
                                message: format!(
                                    "element {e} is outside the domain 0..{size}"
                                ),
                            });
                        }
                        tuple.push(e as u32);
                        if cur.eat(&Tok::Comma) {
                            continue;
                        }
                        cur.expect(&Tok::RParen).map_err(|d| vec![d])?;
                        break;
                    }
                }
                if tuple.len() != arity as usize {
                    diags.push(Diagnostic {
                        span: tspan.to(cur.prev_span()),
                        code: DiagnosticCode::BadTuple,
                        message: format!(
                            "tuple of length {} in relation `{name}` of arity {arity}",
                            tuple.len()
                        ),
                    });
                } else {
                    tuples.push(tuple);
                }
            }
            pending.push((name, arity as usize, tuples, span));
            continue;
        }
        return Err(vec![cur.error("expected `const`, `rel`, or `}`")]);
    }
    if !matches!(cur.peek(), Tok::Eof) {
        return Err(vec![cur.error("expected end of input")]);
    }
    if !diags.is_empty() {
        return Err(diags);
    }
    // Union repeated relation blocks.
    let mut merged: Vec<(String, usize, Vec<Vec<u32>>, SourceSpan)> = Vec::new();
    for (name, arity, tuples, span) in pending {
        if let Some(slot) = merged.iter_mut().find(|(n, _, _, _)| *n == name) {
            if slot.1 != arity {
                diags.push(Diagnostic {
                    span,
                    code: DiagnosticCode::ArityMismatch,
                    message: format!(
                        "relation `{name}` re-declared with arity {arity}, was {}",
                        slot.1
                    ),
                });
            } else {
                slot.2.extend(tuples);
            }
        } else {
            merged.push((name, arity, tuples, span));
        }
    }
    for (name, arity, tuples, span) in merged {
        match Relation::from_tuples(arity, tuples) {
            Ok(rel) => {
                if let Err(e) = st.set_relation(&name, rel) {
                    diags.push(Diagnostic {
                        span,
                        code: DiagnosticCode::DuplicateName,
                        message: e.to_string(),
                    });
                }
            }
            Err(e) => diags.push(Diagnostic {
                span,
                code: DiagnosticCode::BadTuple,
                message: e.to_string(),
            }),
        }
    }
    if diags.is_empty() {
        Ok(st)
    } else {
        Err(diags)
    }
}

// ---------------------------------------------------------------------------
// Printers (parse . print = identity, structurally)
// ---------------------------------------------------------------------------

fn write_vocab_directives(out: &mut String, vocab: &Vocabulary, skip: &BTreeSet<&str>) {
    let rels: Vec<String> = vocab
        .relations()
        .filter(|(n, _)| !skip.contains(n))
        .map(|(n, a)| format!("{n}/{a}"))
        .collect();
    if !rels.is_empty() {
        let _ = writeln!(out, "rel {}.", rels.join(", "));
    }
    let consts: Vec<&str> = vocab.constants().collect();
    if !consts.is_empty() {
        let _ = writeln!(out, "const {}.", consts.join(", "));
    }
}

pub fn print_program(program: &Program) -> String {
    let mut out = String::new();
    write_vocab_directives(&mut out, &program.vocabulary, &BTreeSet::new());
    for rule in &program.rules {
        let _ = write!(out, "{}", rule.head);
        if !rule.body.is_empty() {
            let body: Vec<String> = rule.body.iter().map(|l| l.to_string()).collect();
            let _ = write!(out, " :- {}", body.join(", "));
        }
        let _ = writeln!(out, ".");
    }
    out
}

pub fn print_horn(sentence: &HornSentence) -> String {
    let mut out = String::new();
    write_vocab_directives(&mut out, &sentence.vocabulary, &BTreeSet::new());
    for (name, arity) in &sentence.so_vars {
        let _ = write!(out, "exists {name}/{arity} ");
    }
    if !sentence.fo_vars.is_empty() {
        let _ = write!(out, "forall {} ", sentence.fo_vars.join(" "));
    }
    let _ = writeln!(out, "(");
    for (i, clause) in sentence.clauses.iter().enumerate() {
        let body: Vec<String> = clause
            .alphas
            .iter()
            .chain(&clause.betas)
            .map(|l| l.to_string())
            .collect();
        let _ = write!(out, "  ");
        if !body.is_empty() {
            let _ = write!(out, "{} ", body.join(" & "));
        }
        let _ = write!(out, "-> ");
        match &clause.head {
            ClauseHead::Atom(a) => {
                let _ = write!(out, "{a}");
            }
            ClauseHead::Bottom => {
                let _ = write!(out, "false");
            }
        }
        let _ = writeln!(out, "{}", if i + 1 < sentence.clauses.len() { " ;" } else { "" });
    }
    out.push_str(")\n");
    out
}

pub fn print_lfp(formula: &LfpFormula) -> String {
    let mut out = String::new();
    let skip: BTreeSet<&str> = BTreeSet::new();
    write_vocab_directives(&mut out, &formula.vocabulary, &skip);
    let _ = write!(
        out,
        "exists {} [lfp {}, {}:",
        formula.exist_var,
        formula.lfp_vars.join(" "),
        formula.lfp_relation
    );
    for (q, v) in &formula.prefix {
        let _ = write!(
            out,
            " {} {v}",
            match q {
                Quant::Forall => "forall",
                Quant::Exists => "exists",
            }
        );
    }
    let _ = write!(out, " (");
    let clauses: Vec<String> = formula
        .clauses
        .iter()
        .map(|conj| {
            conj.iter()
                .map(|l| l.to_string())
                .collect::<Vec<_>>()
                .join(" & ")
        })
        .collect();
    let _ = write!(out, " {} ", clauses.join(" | "));
    let _ = write!(out, ")] (");
    let args: Vec<String> = formula.fixpoint_args.iter().map(|t| t.to_string()).collect();
    let _ = writeln!(out, "{})", args.join(","));
    out
}

pub fn print_structure(st: &Structure) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "structure {{");
    let _ = writeln!(out, "  size {}", st.size());
    for (name, value) in st.constants() {
        let _ = writeln!(out, "  const {name} = {value}");
    }
    for (name, rel) in st.relations() {
        let _ = writeln!(out, "  rel {name}/{} {}", rel.arity(), rel);
    }
    out.push_str("}\n");
    out
}

/// Output-only rendering of a simultaneous fixed-point system.
pub fn print_sim_lfp(system: &SimLfpSystem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "simlfp {{");
    for def in &system.definitions {
        let _ = write!(out, "  def {}({}) :=", def.relation, def.args.join(","));
        let disjuncts: Vec<String> = def
            .disjuncts
            .iter()
            .map(|d| {
                let lits: Vec<String> = d.literals.iter().map(|l| l.to_string()).collect();
                if d.exists.is_empty() {
                    format!("({})", lits.join(" & "))
                } else {
                    format!("(exists {}: {})", d.exists.join(" "), lits.join(" & "))
                }
            })
            .collect();
        if disjuncts.is_empty() {
            let _ = writeln!(out, " <empty>");
        } else {
            let _ = writeln!(out, " {}", disjuncts.join(" | "));
        }
    }
    let (goal, args) = &system.goal;
    if args.is_empty() {
        let _ = writeln!(out, "  goal {goal}");
    } else {
        let rendered: Vec<String> = args.iter().map(|t| t.to_string()).collect();
        let _ = writeln!(out, "  goal {goal}({})", rendered.join(","));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub const AGAP: &str = "\
% Alternating graph accessibility.
const s, t.
Palt(x,y) :- x = y.
Palt(x,y) :- !Puni(x), E(x,z), Palt(z,y).
Palt(x,y) :- Puni(x), forall z: Q(x,z,y).
Q(x,z,y) :- !E(x,z), y = y.
Q(x,z,y) :- Palt(z,y), x = x.
P :- Palt(s,t).
";

    #[test]
    fn parses_agap() {
        let program = parse_program(AGAP).expect("agap parses");
        assert_eq!(program.rules.len(), 6);
        let int: Vec<_> = program.intentional().into_iter().collect();
        assert_eq!(int, vec!["P", "Palt", "Q"]);
        let ext: Vec<_> = program.extensional().into_iter().collect();
        assert_eq!(ext, vec!["E", "Puni"]);
        assert!(program.vocabulary.has_constant("s"));
        assert!(program.vocabulary.has_constant("t"));
        // The universal rule's bound variable sits mid-argument.
        let forall_rule = &program.rules[2];
        assert!(matches!(&forall_rule.body[1], Literal::Forall { vars, .. } if vars == &["z"]));
    }

    #[test]
    fn empty_text_is_empty_program() {
        let program = parse_program("").unwrap();
        assert!(program.rules.is_empty());
        assert_eq!(program.vocabulary, Vocabulary::new());
    }

    #[test]
    fn malformed_quantifier_is_a_syntax_error() {
        let err = parse_program("P(x) :- forall : E(x).").unwrap_err();
        assert_eq!(err[0].code, DiagnosticCode::SyntaxError);
        assert!(err[0].span.start > 0 && err[0].span.end <= "P(x) :- forall : E(x).".len());
    }

    #[test]
    fn program_round_trip() {
        let program = parse_program(AGAP).unwrap();
        let printed = print_program(&program);
        let again = parse_program(&printed).expect("printed program parses");
        assert_eq!(program, again);
    }

    #[test]
    fn validation_diagnostics_carry_rule_spans() {
        let src = "P(x) :- !P(x).";
        let errs = parse_program(src).unwrap_err();
        assert!(errs.iter().any(|d| d.code == DiagnosticCode::NegatedIntentional));
        for d in &errs {
            assert!(d.span.end <= src.len());
        }
    }

    const HORN: &str =
        "exists R/1 forall x y ( S(x) -> R(x) ; R(x) & R(y) -> R(y) ; forall z: R(z) -> false )";

    #[test]
    fn parses_horn_sentence() {
        let s = parse_horn(HORN).expect("horn parses");
        assert_eq!(s.so_vars, vec![("R".to_string(), 1)]);
        assert_eq!(s.fo_vars, vec!["x", "y"]);
        assert_eq!(s.clauses.len(), 3);
        assert!(matches!(s.clauses[2].head, ClauseHead::Bottom));
        assert!(matches!(&s.clauses[2].alphas[0], Literal::Forall { .. }));
        assert_eq!(s.vocabulary.relation_arity("S"), Some(1));
    }

    #[test]
    fn horn_round_trip() {
        let s = parse_horn(HORN).unwrap();
        let printed = print_horn(&s);
        assert_eq!(parse_horn(&printed).unwrap(), s);
    }

    #[test]
    fn universal_so_quantifier_rejected() {
        let err = parse_horn("forall R/1 ( -> R(x) )").unwrap_err();
        assert_eq!(err[0].code, DiagnosticCode::NonExistentialPrefix);
    }

    #[test]
    fn negated_relation_variable_rejected() {
        let err = parse_horn("exists R/1 forall x ( !R(x) -> false )").unwrap_err();
        assert!(err.iter().any(|d| d.code == DiagnosticCode::NegatedIntentional));
    }

    const TC: &str = "exists u [lfp z1 z2, Z: exists w ( z1 = z2 | E(z1,w) & Z(w,z2) )] (u,u)";

    #[test]
    fn parses_lfp_formula() {
        let f = parse_lfp(TC).expect("lfp parses");
        assert_eq!(f.lfp_vars, vec!["z1", "z2"]);
        assert_eq!(f.lfp_relation, "Z");
        assert_eq!(f.prefix, vec![(Quant::Exists, "w".to_string())]);
        assert_eq!(f.clauses.len(), 2);
        assert_eq!(f.fixpoint_args.len(), 2);
        assert_eq!(f.vocabulary.relation_arity("E"), Some(2));
    }

    #[test]
    fn lfp_round_trip() {
        let f = parse_lfp(TC).unwrap();
        let printed = print_lfp(&f);
        assert_eq!(parse_lfp(&printed).unwrap(), f);
    }

    #[test]
    fn negative_fixpoint_variable_rejected() {
        let err = parse_lfp("exists u [lfp z, Z: ( !Z(z) )] (u)").unwrap_err();
        assert!(err.iter().any(|d| d.code == DiagnosticCode::NegativeFixpointVariable));
    }

    #[test]
    fn fixpoint_arity_mismatch_rejected() {
        let err = parse_lfp("exists u [lfp z1 z2, Z: ( z1 = z2 )] (u)").unwrap_err();
        assert!(err.iter().any(|d| d.code == DiagnosticCode::ArityMismatch));
    }

    #[test]
    fn quantifier_inside_matrix_is_not_dnf() {
        let err = parse_lfp("exists u [lfp z, Z: ( exists w E(z,w) )] (u)").unwrap_err();
        assert_eq!(err[0].code, DiagnosticCode::NotDNF);
    }

    const GRAPH: &str = "structure { size 4
      const s = 0  const t = 3
      rel E/2 { (0,1) (1,2) (2,3) }
      rel Puni/1 { (1) } }";

    #[test]
    fn parses_structure() {
        let st = parse_structure(GRAPH).unwrap();
        assert_eq!(st.size(), 4);
        assert_eq!(st.constant("s"), Some(0));
        assert_eq!(st.constant("t"), Some(3));
        assert_eq!(st.relation("E").unwrap().len(), 3);
        assert!(st.relation("Puni").unwrap().contains(&[1]));
    }

    #[test]
    fn structure_round_trip() {
        let st = parse_structure(GRAPH).unwrap();
        let printed = print_structure(&st);
        assert_eq!(parse_structure(&printed).unwrap(), st);
    }

    #[test]
    fn repeated_relation_blocks_union() {
        let st = parse_structure(
            "structure { size 3 rel E/2 { (0,1) } rel E/2 { (1,2) } }",
        )
        .unwrap();
        assert_eq!(st.relation("E").unwrap().len(), 2);
    }

    #[test]
    fn empty_domain_rejected() {
        let err = parse_structure("structure { size 0 }").unwrap_err();
        assert_eq!(err[0].code, DiagnosticCode::EmptyDomain);
    }

    #[test]
    fn out_of_range_element_rejected() {
        let err = parse_structure("structure { size 2 rel E/2 { (0,5) } }").unwrap_err();
        assert_eq!(err[0].code, DiagnosticCode::ElementOutOfRange);
    }

    #[test]
    fn zero_ary_relations_parse_and_print() {
        let st = parse_structure("structure { size 1 rel P/0 { () } rel Q/0 { } }").unwrap();
        assert!(st.relation("P").unwrap().contains(&[]));
        assert!(st.relation("Q").unwrap().is_empty());
        let printed = print_structure(&st);
        assert_eq!(parse_structure(&printed).unwrap(), st);
    }
}
