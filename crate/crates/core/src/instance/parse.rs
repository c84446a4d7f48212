//! Reader for the ILP-v1 text format.
//!
//! ```text
//! # comment
//! -2 x1 + 3 x2 + 1 x3 = 0
//! 1 x1 - 2 x2 + 1 x3 = 0 ; 1 x1 + 1 x2 <= 10
//! ```
//!
//! A term is `integer identifier`; the coefficient may be omitted (meaning 1)
//! and may carry its own sign. Relations are `=`, `<=`, `>=`.

use thiserror::Error;

use super::{to_standard_form, Constraint, IlpInstance, InstanceError, Relation, RESERVED_B};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("{line}:{col}: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("{line}:{col}: variable `{name}` appears twice in one constraint")]
    DuplicateVariable {
        name: String,
        line: usize,
        col: usize,
    },
    #[error("{line}:{col}: `{RESERVED_B}` is reserved for the right-hand side")]
    ReservedName { line: usize, col: usize },
    #[error("no constraints found")]
    Empty,
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(i64),
    Ident(String),
    Plus,
    Minus,
    Rel(Relation),
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    col: usize,
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        col,
        msg: msg.into(),
    }
}

fn tokenize(segment: &str, line: usize, col0: usize) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = segment.chars().collect();
    let mut out = Vec::new();
    let mut k = 0;
    while k < chars.len() {
        let c = chars[k];
        let col = col0 + k;
        if c.is_whitespace() {
            k += 1;
            continue;
        }
        let tok = match c {
            '+' => {
                k += 1;
                Tok::Plus
            }
            '-' => {
                k += 1;
                Tok::Minus
            }
            '=' => {
                k += 1;
                if chars.get(k) == Some(&'=') {
                    k += 1;
                }
                Tok::Rel(Relation::Eq)
            }
            '<' | '>' => {
                if chars.get(k + 1) != Some(&'=') {
                    return Err(syntax(line, col, format!("expected `{c}=`")));
                }
                k += 2;
                Tok::Rel(if c == '<' { Relation::Le } else { Relation::Ge })
            }
            d if d.is_ascii_digit() => {
                let start = k;
                while k < chars.len() && chars[k].is_ascii_digit() {
                    k += 1;
                }
                let text: String = chars[start..k].iter().collect();
                let v = text
                    .parse::<i64>()
                    .map_err(|_| syntax(line, col, format!("integer `{text}` out of range")))?;
                Tok::Int(v)
            }
            a if a.is_ascii_alphabetic() || a == '_' => {
                let start = k;
                while k < chars.len() && (chars[k].is_ascii_alphanumeric() || chars[k] == '_') {
                    k += 1;
                }
                Tok::Ident(chars[start..k].iter().collect())
            }
            other => return Err(syntax(line, col, format!("unexpected character `{other}`"))),
        };
        out.push(Spanned { tok, col });
    }
    Ok(out)
}

struct Cursor<'a> {
    toks: &'a [Spanned],
    pos: usize,
    line: usize,
    end_col: usize,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |s| s.col)
    }

    fn err(&self, msg: &str) -> ParseError {
        syntax(self.line, self.col(), msg)
    }

    /// Consumes a run of `+`/`-` and returns the resulting sign.
    fn signs(&mut self) -> (i64, usize) {
        let mut sign = 1;
        let mut count = 0;
        while let Some(t) = self.peek() {
            match t {
                Tok::Plus => {}
                Tok::Minus => sign = -sign,
                _ => break,
            }
            self.pos += 1;
            count += 1;
        }
        (sign, count)
    }

    fn signed_int(&mut self, sign: i64) -> Result<i64, ParseError> {
        match self.peek() {
            Some(Tok::Int(v)) => {
                let v = *v;
                self.pos += 1;
                v.checked_mul(sign)
                    .ok_or_else(|| syntax(self.line, self.col(), "integer out of range"))
            }
            _ => Err(self.err("expected an integer")),
        }
    }
}

fn parse_statement(
    toks: &[Spanned],
    line: usize,
    end_col: usize,
    vars: &mut Vec<String>,
) -> Result<Constraint, ParseError> {
    let mut cur = Cursor {
        toks,
        pos: 0,
        line,
        end_col,
    };
    let mut terms: Vec<(String, i64)> = Vec::new();
    let mut first = true;
    loop {
        let (sign, nsigns) = cur.signs();
        if !first && nsigns == 0 {
            return Err(cur.err("expected `+`, `-` or a relation"));
        }
        let coeff = match cur.peek() {
            Some(Tok::Int(_)) => cur.signed_int(sign)?,
            Some(Tok::Ident(_)) => sign,
            _ => return Err(cur.err("expected a term")),
        };
        let col = cur.col();
        let name = match cur.peek() {
            Some(Tok::Ident(name)) => name.clone(),
            _ => return Err(cur.err("expected a variable name")),
        };
        cur.pos += 1;
        if name == RESERVED_B {
            return Err(ParseError::ReservedName { line, col });
        }
        if terms.iter().any(|(v, _)| *v == name) {
            return Err(ParseError::DuplicateVariable { name, line, col });
        }
        if !vars.contains(&name) {
            vars.push(name.clone());
        }
        terms.push((name, coeff));
        first = false;
        if let Some(Tok::Rel(rel)) = cur.peek() {
            let relation = *rel;
            cur.pos += 1;
            let (sign, _) = cur.signs();
            let rhs = cur.signed_int(sign)?;
            if cur.peek().is_some() {
                return Err(cur.err("trailing input after right-hand side"));
            }
            return Ok(Constraint {
                terms,
                relation,
                rhs,
            });
        }
        if cur.peek().is_none() {
            return Err(cur.err("missing relation"));
        }
    }
}

/// Parses ILP-v1 text into constraints and the variable order of first
/// appearance, without converting to standard form.
pub fn parse_constraints(text: &str) -> Result<(Vec<Constraint>, Vec<String>), ParseError> {
    let mut constraints = Vec::new();
    let mut vars = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let body = raw.split('#').next().unwrap_or("");
        let mut col0 = 1;
        for segment in body.split(';') {
            let seg_len = segment.chars().count();
            if !segment.trim().is_empty() {
                let toks = tokenize(segment, line, col0)?;
                let end_col = col0 + seg_len;
                constraints.push(parse_statement(&toks, line, end_col, &mut vars)?);
            }
            col0 += seg_len + 1;
        }
    }
    if constraints.is_empty() {
        return Err(ParseError::Empty);
    }
    Ok((constraints, vars))
}

/// Parses ILP-v1 text and returns the instance in standard form.
pub fn parse_instance(text: &str) -> Result<IlpInstance, ParseError> {
    let (constraints, vars) = parse_constraints(text)?;
    Ok(to_standard_form(&constraints, &vars)?)
}
