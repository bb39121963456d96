//! Line-oriented text format for protocols (`.pp` files).
//!
//! ```text
//! # comment
//! species D detect
//! species N nondetect
//! reaction D + N -> D + D
//! ```
//!
//! Species must be declared before a reaction mentions them. A reaction is
//! written once and installed for both reactant orders. Names match
//! `[A-Za-z][A-Za-z0-9_]*`.

use std::collections::HashSet;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::model::{NamedReaction, Output, Protocol, ProtocolError, SpeciesDecl};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UndeclaredSpecies(String),
    DuplicateSpecies(String),
    MissingOutput(String),
    InconsistentRule(String),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Syntax(m) => write!(f, "syntax error: {m}"),
            ParseErrorKind::UndeclaredSpecies(n) => write!(f, "undeclared species `{n}`"),
            ParseErrorKind::DuplicateSpecies(n) => write!(f, "duplicate species `{n}`"),
            ParseErrorKind::MissingOutput(n) => {
                write!(f, "species `{n}` needs an output annotation (detect|nondetect)")
            }
            ParseErrorKind::InconsistentRule(m) => write!(f, "{m}"),
        }
    }
}

/// Rejection with a 1-based line and column.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    column: usize,
}

/// Splits a line into identifier, `+`, `->` tokens; everything after `#` is dropped.
fn tokenize(line: &str, line_no: usize) -> Result<Vec<Token<'_>>, ParseError> {
    let line = line.split('#').next().unwrap_or("");
    let bytes = line.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c == b'+' {
            tokens.push(Token {
                text: &line[i..i + 1],
                column: i + 1,
            });
            i += 1;
        } else if c == b'-' && bytes.get(i + 1) == Some(&b'>') {
            tokens.push(Token {
                text: &line[i..i + 2],
                column: i + 1,
            });
            i += 2;
        } else if c.is_ascii_alphanumeric() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            tokens.push(Token {
                text: &line[start..i],
                column: start + 1,
            });
        } else {
            // Column counts characters, not bytes.
            let column = line[..i].chars().count() + 1;
            let ch = line[i..].chars().next().unwrap_or('?');
            return Err(ParseError {
                line: line_no,
                column,
                kind: ParseErrorKind::Syntax(format!("unexpected character `{ch}`")),
            });
        }
    }
    Ok(tokens)
}

fn is_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

struct LineParser<'a> {
    line: usize,
    tokens: Vec<Token<'a>>,
    pos: usize,
    end_column: usize,
}

impl<'a> LineParser<'a> {
    fn err(&self, column: usize, kind: ParseErrorKind) -> ParseError {
        ParseError {
            line: self.line,
            column,
            kind,
        }
    }

    fn here(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map_or(self.end_column, |t| t.column)
    }

    fn name(&mut self, what: &str) -> Result<Token<'a>, ParseError> {
        match self.tokens.get(self.pos) {
            Some(t) if is_name(t.text) => {
                self.pos += 1;
                Ok(*t)
            }
            Some(t) => Err(self.err(
                t.column,
                ParseErrorKind::Syntax(format!("expected {what}, found `{}`", t.text)),
            )),
            None => Err(self.err(
                self.end_column,
                ParseErrorKind::Syntax(format!("expected {what}, found end of line")),
            )),
        }
    }

    fn punct(&mut self, p: &str) -> Result<(), ParseError> {
        match self.tokens.get(self.pos) {
            Some(t) if t.text == p => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(self.err(
                t.column,
                ParseErrorKind::Syntax(format!("expected `{p}`, found `{}`", t.text)),
            )),
            None => Err(self.err(
                self.end_column,
                ParseErrorKind::Syntax(format!("expected `{p}`, found end of line")),
            )),
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.tokens.get(self.pos) {
            None => Ok(()),
            Some(t) => Err(self.err(
                t.column,
                ParseErrorKind::Syntax(format!("unexpected trailing `{}`", t.text)),
            )),
        }
    }
}

/// Parses protocol text. Fails at the first offending line.
pub fn parse(src: &str) -> Result<Protocol, ParseError> {
    let mut species: Vec<SpeciesDecl> = Vec::new();
    let mut declared: HashSet<String> = HashSet::new();
    let mut reactions: Vec<NamedReaction> = Vec::new();
    let mut reaction_lines: Vec<usize> = Vec::new();

    for (idx, raw) in src.lines().enumerate() {
        let line_no = idx + 1;
        let tokens = tokenize(raw, line_no)?;
        if tokens.is_empty() {
            continue;
        }
        let code = raw.split('#').next().unwrap_or("");
        let mut lp = LineParser {
            line: line_no,
            tokens,
            pos: 1,
            end_column: code.trim_end().chars().count() + 1,
        };
        let keyword = lp.tokens[0];
        match keyword.text {
            "species" => {
                let name = lp.name("species name")?;
                let output = match lp.tokens.get(lp.pos) {
                    None => {
                        return Err(lp.err(
                            lp.here(),
                            ParseErrorKind::MissingOutput(name.text.to_owned()),
                        ))
                    }
                    Some(t) if t.text == "detect" => Output::Detect,
                    Some(t) if t.text == "nondetect" => Output::Nondetect,
                    Some(t) => {
                        return Err(lp.err(
                            t.column,
                            ParseErrorKind::Syntax(format!(
                                "expected `detect` or `nondetect`, found `{}`",
                                t.text
                            )),
                        ))
                    }
                };
                lp.pos += 1;
                lp.finish()?;
                if !declared.insert(name.text.to_owned()) {
                    return Err(lp.err(
                        name.column,
                        ParseErrorKind::DuplicateSpecies(name.text.to_owned()),
                    ));
                }
                species.push(SpeciesDecl::new(name.text, output));
            }
            "reaction" => {
                let a = lp.name("reactant")?;
                lp.punct("+")?;
                let b = lp.name("reactant")?;
                lp.punct("->")?;
                let c = lp.name("product")?;
                lp.punct("+")?;
                let d = lp.name("product")?;
                lp.finish()?;
                for t in [a, b, c, d] {
                    if !declared.contains(t.text) {
                        return Err(lp.err(
                            t.column,
                            ParseErrorKind::UndeclaredSpecies(t.text.to_owned()),
                        ));
                    }
                }
                reactions.push(NamedReaction::new(a.text, b.text, c.text, d.text));
                reaction_lines.push(line_no);
            }
            other => {
                return Err(lp.err(
                    keyword.column,
                    ParseErrorKind::Syntax(format!(
                        "expected `species` or `reaction`, found `{other}`"
                    )),
                ))
            }
        }
    }

    // Symmetric consistency needs the full rule set, so it is checked last and
    // attributed to the line of the later, conflicting rule.
    Protocol::from_named(species, &reactions).map_err(|e| {
        let line = e
            .reaction_index()
            .map_or(1, |i| reaction_lines[i]);
        let kind = match &e {
            ProtocolError::DuplicateSpecies(n) => ParseErrorKind::DuplicateSpecies(n.clone()),
            ProtocolError::UndeclaredSpecies { name, .. } => {
                ParseErrorKind::UndeclaredSpecies(name.clone())
            }
            other => ParseErrorKind::InconsistentRule(other.to_string()),
        };
        ParseError {
            line,
            column: 1,
            kind,
        }
    })
}

/// Canonical text form: species by id, then each rule once in reactant-id order.
pub fn serialize(p: &Protocol) -> String {
    let mut out = String::new();
    for s in p.species() {
        let _ = writeln!(out, "species {} {}", s.name, s.output);
    }
    let name = |id: crate::model::SpeciesId| p.species_by_id(id).name.as_str();
    for r in p.reactions() {
        let _ = writeln!(
            out,
            "reaction {} + {} -> {} + {}",
            name(r.reactants.0),
            name(r.reactants.1),
            name(r.products.0),
            name(r.products.1)
        );
    }
    out
}

/// Parses a leak mapping file: one `S -> T` pair per line, `#` comments.
pub fn parse_leak_map(src: &str) -> Result<Vec<(String, String)>, ParseError> {
    let mut pairs = Vec::new();
    for (idx, raw) in src.lines().enumerate() {
        let line_no = idx + 1;
        let tokens = tokenize(raw, line_no)?;
        if tokens.is_empty() {
            continue;
        }
        let code = raw.split('#').next().unwrap_or("");
        let mut lp = LineParser {
            line: line_no,
            tokens,
            pos: 0,
            end_column: code.trim_end().chars().count() + 1,
        };
        let from = lp.name("species name")?;
        lp.punct("->")?;
        let to = lp.name("species name")?;
        lp.finish()?;
        pairs.push((from.text.to_owned(), to.text.to_owned()));
    }
    Ok(pairs)
}
