//! Line-oriented geometry file format.
//!
//! ```text
//! # comment to end of line; blank lines are ignored
//! name mzi                  # optional, a single token
//! tend 2.0e-1               # optional, defaults to the last pulse time
//! pulse <t> <k1> <k2> [<phi1> <phi2>]
//! ```
//!
//! Numbers are decimal or scientific-notation floats; phases default to zero
//! and pulse times must increase strictly in file order. The serializer
//! writes 17 significant digits so that parsing its output reproduces the
//! sequence bit for bit.

use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::physics::{validate_sequence, Pulse, PulseSequence};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    NonMonotoneTimes,
    NonFinite,
    DuplicateDirective(String),
    Invalid(String),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Syntax(msg) => write!(f, "syntax error: {msg}"),
            ParseErrorKind::NonMonotoneTimes => f.write_str("non-monotone times"),
            ParseErrorKind::NonFinite => f.write_str("non-finite number"),
            ParseErrorKind::DuplicateDirective(d) => write!(f, "duplicate directive `{d}`"),
            ParseErrorKind::Invalid(msg) => write!(f, "invalid geometry: {msg}"),
        }
    }
}

/// Parse failure; `line` and `column` are 1-based, column counts characters.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    fn new(line: usize, column: usize, kind: ParseErrorKind) -> Self {
        Self { line, column, kind }
    }
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let content = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut tokens = Vec::new();
    let mut start: Option<usize> = None;
    for (byte, ch) in content.char_indices().chain(std::iter::once((content.len(), ' '))) {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some(byte),
            (true, Some(s)) => {
                tokens.push(Token {
                    text: &content[s..byte],
                    column: content[..s].chars().count() + 1,
                });
                start = None;
            }
            _ => {}
        }
    }
    tokens
}

fn number(tok: &Token<'_>, line: usize) -> Result<f64, ParseError> {
    let value: f64 = tok.text.parse().map_err(|_| {
        ParseError::new(
            line,
            tok.column,
            ParseErrorKind::Syntax(format!("expected a number, found `{}`", tok.text)),
        )
    })?;
    if !value.is_finite() {
        return Err(ParseError::new(line, tok.column, ParseErrorKind::NonFinite));
    }
    Ok(value)
}

fn end_column(line: &str) -> usize {
    line.chars().count() + 1
}

/// Parses and validates a geometry file.
pub fn parse_geometry(text: &str) -> Result<PulseSequence, ParseError> {
    let mut name: Option<String> = None;
    let mut tend: Option<(f64, usize, usize)> = None;
    let mut pulses: Vec<Pulse> = Vec::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let tokens = tokenize(raw);
        let Some((head, args)) = tokens.split_first() else {
            continue;
        };
        match head.text {
            "name" => {
                if name.is_some() {
                    return Err(ParseError::new(
                        line_no,
                        head.column,
                        ParseErrorKind::DuplicateDirective("name".into()),
                    ));
                }
                match args {
                    [tok] => name = Some(tok.text.to_string()),
                    [] => {
                        return Err(ParseError::new(
                            line_no,
                            end_column(raw),
                            ParseErrorKind::Syntax("`name` expects one token".into()),
                        ))
                    }
                    [_, extra, ..] => {
                        return Err(ParseError::new(
                            line_no,
                            extra.column,
                            ParseErrorKind::Syntax("`name` expects one token".into()),
                        ))
                    }
                }
            }
            "tend" => {
                if tend.is_some() {
                    return Err(ParseError::new(
                        line_no,
                        head.column,
                        ParseErrorKind::DuplicateDirective("tend".into()),
                    ));
                }
                match args {
                    [tok] => tend = Some((number(tok, line_no)?, line_no, tok.column)),
                    [] => {
                        return Err(ParseError::new(
                            line_no,
                            end_column(raw),
                            ParseErrorKind::Syntax("`tend` expects one number".into()),
                        ))
                    }
                    [_, extra, ..] => {
                        return Err(ParseError::new(
                            line_no,
                            extra.column,
                            ParseErrorKind::Syntax("`tend` expects one number".into()),
                        ))
                    }
                }
            }
            "pulse" => {
                // Lex every field first so a bad token is reported before arity.
                let values = args
                    .iter()
                    .map(|tok| number(tok, line_no))
                    .collect::<Result<Vec<_>, _>>()?;
                let pulse = match values.as_slice() {
                    &[t, k1, k2] => Pulse::kick(t, k1, k2),
                    &[t, k1, k2, p1, p2] => Pulse::kick(t, k1, k2).with_phases(p1, p2),
                    _ => {
                        let column = args.get(5).map_or(end_column(raw), |t| t.column);
                        return Err(ParseError::new(
                            line_no,
                            column,
                            ParseErrorKind::Syntax(format!(
                                "`pulse` expects 3 or 5 numbers, found {}",
                                values.len()
                            )),
                        ));
                    }
                };
                if let Some(prev) = pulses.last() {
                    if pulse.t <= prev.t {
                        return Err(ParseError::new(line_no, args[0].column, ParseErrorKind::NonMonotoneTimes));
                    }
                }
                pulses.push(pulse);
            }
            other => {
                return Err(ParseError::new(
                    line_no,
                    head.column,
                    ParseErrorKind::Syntax(format!("unknown directive `{other}`")),
                ))
            }
        }
    }

    let last_t = pulses.last().map_or(0.0, |p| p.t);
    let duration = match tend {
        Some((value, line, column)) => {
            if value < last_t {
                return Err(ParseError::new(
                    line,
                    column,
                    ParseErrorKind::Invalid(format!("tend {value:e} s precedes the last pulse at {last_t:e} s")),
                ));
            }
            value
        }
        None => last_t,
    };

    let mut seq = PulseSequence::from_raw(pulses, duration);
    if let Some(n) = name {
        seq = seq.named(n);
    }
    if let Some(v) = validate_sequence(&seq).into_iter().next() {
        return Err(ParseError::new(last_line.max(1), 1, ParseErrorKind::Invalid(v.to_string())));
    }
    Ok(seq)
}

fn token_safe(name: &str) -> String {
    let cleaned: String = name
        .chars()
        .map(|c| if c.is_whitespace() || c == '#' { '_' } else { c })
        .collect();
    if cleaned.is_empty() {
        "_".into()
    } else {
        cleaned
    }
}

/// Canonical text form. Names are written as a single token (whitespace and
/// `#` become `_`); phase columns appear only on pulses with a phase whose
/// bit pattern is not +0.0. Times are written as their f64 part; a builder's
/// `t_lo` does not survive the file.
pub fn serialize_geometry(seq: &PulseSequence) -> String {
    let mut pulses = seq.pulses().to_vec();
    pulses.sort_by(|a, b| a.t.total_cmp(&b.t));

    let mut out = String::from("# twinphase geometry\n");
    if let Some(name) = seq.name() {
        let _ = writeln!(out, "name {}", token_safe(name));
    }
    let _ = writeln!(out, "tend {:.16e}", seq.duration());
    for p in &pulses {
        let _ = write!(out, "pulse {:.16e} {:.16e} {:.16e}", p.t, p.k_upper, p.k_lower);
        if p.phi_upper.to_bits() != 0 || p.phi_lower.to_bits() != 0 {
            let _ = write!(out, " {:.16e} {:.16e}", p.phi_upper, p.phi_lower);
        }
        out.push('\n');
    }
    out
}
