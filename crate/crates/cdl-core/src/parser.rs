//! CDL text parsing.
//!
//! The grammar is function-call style: a statement keyword, parentheses, and
//! comma-separated arguments, where each point-sequence argument is a run of
//! juxtaposed labels (`ADC`, `A1B`). Statements are separated by newlines or
//! semicolons. Numeric literals are exact rationals written as integers
//! (`90`), decimals (`4.5`), or fractions (`9/2`).
//!
//! [`parse`] builds a whole [`CdlDocument`] and enforces the cross-statement
//! invariant that every point an image statement mentions is introduced by
//! some construction statement. [`parse_statement`] parses one statement in
//! isolation and skips that closure check.

use num_rational::Rational64;

use crate::document::CdlDocument;
use crate::error::CdlError;
use crate::label::PointLabel;
use crate::statement::{ConsStatement, Edge, EqualOperand, ImgStatement, LineSeg, MeasureTerm};
use crate::{MEASURE_REGISTRY, STATEMENT_REGISTRY};

/// A single parsed statement, from either section.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ParsedStatement {
    Cons(ConsStatement),
    Img(ImgStatement),
}

impl std::fmt::Display for ParsedStatement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParsedStatement::Cons(s) => s.fmt(f),
            ParsedStatement::Img(s) => s.fmt(f),
        }
    }
}

/// Parse a full CDL document and check the dangling-label invariant.
pub fn parse(text: &str) -> Result<CdlDocument, CdlError> {
    let mut cursor = Cursor::new(lex(text)?);
    let mut doc = CdlDocument::new();
    loop {
        cursor.skip_separators();
        if cursor.at_end() {
            break;
        }
        match parse_one(&mut cursor)? {
            ParsedStatement::Cons(s) => {
                doc.insert_cons_canonical(s);
            }
            ParsedStatement::Img(s) => {
                doc.insert_img_canonical(s);
            }
        }
        if !cursor.at_end() {
            cursor.expect_separator()?;
        }
    }
    doc.check_label_closure()?;
    Ok(doc)
}

/// Parse exactly one statement. No dangling-label check is possible without
/// the surrounding document, so none is made.
pub fn parse_statement(text: &str) -> Result<ParsedStatement, CdlError> {
    let mut cursor = Cursor::new(lex(text)?);
    cursor.skip_separators();
    let stmt = parse_one(&mut cursor)?;
    cursor.skip_separators();
    if let Some(tok) = cursor.peek() {
        return Err(CdlError::Syntax {
            line: tok.line,
            col: tok.col,
            found: tok.describe(),
            expected: "end of input".into(),
        });
    }
    Ok(stmt)
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Clone, PartialEq, Eq)]
enum TokKind {
    /// A run of ASCII letters and digits starting with a letter: keywords
    /// and label groups.
    Word(String),
    /// A numeric literal, kept as raw text until a statement gives it
    /// context (`15`, `-3`, `4.5`, `9/2`).
    Number(String),
    LParen,
    RParen,
    Comma,
    /// Statement separator: newline or semicolon.
    Sep,
}

#[derive(Debug, Clone)]
struct Tok {
    kind: TokKind,
    line: usize,
    col: usize,
}

impl Tok {
    fn describe(&self) -> String {
        match &self.kind {
            TokKind::Word(w) => format!("'{w}'"),
            TokKind::Number(n) => format!("number '{n}'"),
            TokKind::LParen => "'('".into(),
            TokKind::RParen => "')'".into(),
            TokKind::Comma => "','".into(),
            TokKind::Sep => "end of statement".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<Tok>, CdlError> {
    let mut toks = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line = 1usize;
    let mut col = 1usize;
    while let Some(&c) = chars.peek() {
        let (tok_line, tok_col) = (line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars<'_>>| {
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        match c {
            ' ' | '\t' | '\r' => {
                bump(&mut chars);
            }
            '\n' | ';' => {
                bump(&mut chars);
                toks.push(Tok {
                    kind: TokKind::Sep,
                    line: tok_line,
                    col: tok_col,
                });
            }
            '(' | ')' | ',' => {
                let kind = match bump(&mut chars) {
                    '(' => TokKind::LParen,
                    ')' => TokKind::RParen,
                    _ => TokKind::Comma,
                };
                toks.push(Tok {
                    kind,
                    line: tok_line,
                    col: tok_col,
                });
            }
            c if c.is_ascii_alphabetic() => {
                let mut word = String::new();
                while chars.peek().is_some_and(|c| c.is_ascii_alphanumeric()) {
                    word.push(bump(&mut chars));
                }
                toks.push(Tok {
                    kind: TokKind::Word(word),
                    line: tok_line,
                    col: tok_col,
                });
            }
            c if c.is_ascii_digit() || c == '-' => {
                let mut num = String::new();
                if c == '-' {
                    num.push(bump(&mut chars));
                    if !chars.peek().is_some_and(|c| c.is_ascii_digit()) {
                        return Err(CdlError::Syntax {
                            line: tok_line,
                            col: tok_col,
                            found: "'-'".into(),
                            expected: "digits after the sign".into(),
                        });
                    }
                }
                while chars.peek().is_some_and(|c| c.is_ascii_digit()) {
                    num.push(bump(&mut chars));
                }
                // One optional continuation: decimal point or fraction bar.
                if let Some(&sep) = chars.peek() {
                    if sep == '.' || sep == '/' {
                        num.push(bump(&mut chars));
                        if !chars.peek().is_some_and(|c| c.is_ascii_digit()) {
                            return Err(CdlError::Syntax {
                                line: tok_line,
                                col: tok_col,
                                found: format!("'{num}'"),
                                expected: "digits after the separator".into(),
                            });
                        }
                        while chars.peek().is_some_and(|c| c.is_ascii_digit()) {
                            num.push(bump(&mut chars));
                        }
                    }
                }
                toks.push(Tok {
                    kind: TokKind::Number(num),
                    line: tok_line,
                    col: tok_col,
                });
            }
            other => {
                return Err(CdlError::Syntax {
                    line: tok_line,
                    col: tok_col,
                    found: format!("'{other}'"),
                    expected: "a statement".into(),
                });
            }
        }
    }
    Ok(toks)
}

// ---------------------------------------------------------------------------
// Parser

struct Cursor {
    toks: Vec<Tok>,
    pos: usize,
}

impl Cursor {
    fn new(toks: Vec<Tok>) -> Self {
        Cursor { toks, pos: 0 }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn advance(&mut self) -> Option<Tok> {
        let tok = self.toks.get(self.pos).cloned();
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    /// Position just past the last consumed token, for end-of-input errors.
    fn here(&self) -> (usize, usize) {
        match self.toks.get(self.pos).or_else(|| self.toks.last()) {
            Some(t) => (t.line, t.col),
            None => (1, 1),
        }
    }

    fn skip_separators(&mut self) {
        while matches!(self.peek().map(|t| &t.kind), Some(TokKind::Sep)) {
            self.pos += 1;
        }
    }

    fn expect_separator(&mut self) -> Result<(), CdlError> {
        match self.advance() {
            Some(Tok {
                kind: TokKind::Sep, ..
            }) => Ok(()),
            Some(tok) => Err(CdlError::Syntax {
                line: tok.line,
                col: tok.col,
                found: tok.describe(),
                expected: "end of statement".into(),
            }),
            None => Ok(()),
        }
    }

    fn unexpected_end(&self, expected: &str) -> CdlError {
        let (line, col) = self.here();
        CdlError::Syntax {
            line,
            col,
            found: "end of input".into(),
            expected: expected.into(),
        }
    }

    fn expect_punct(&mut self, kind: TokKind, expected: &str) -> Result<(), CdlError> {
        match self.advance() {
            Some(tok) if tok.kind == kind => Ok(()),
            Some(tok) => Err(CdlError::Syntax {
                line: tok.line,
                col: tok.col,
                found: tok.describe(),
                expected: expected.into(),
            }),
            None => Err(self.unexpected_end(expected)),
        }
    }

    fn take_word(&mut self, expected: &str) -> Result<(String, usize, usize), CdlError> {
        match self.advance() {
            Some(Tok {
                kind: TokKind::Word(w),
                line,
                col,
            }) => Ok((w, line, col)),
            Some(tok) => Err(CdlError::Syntax {
                line: tok.line,
                col: tok.col,
                found: tok.describe(),
                expected: expected.into(),
            }),
            None => Err(self.unexpected_end(expected)),
        }
    }
}

fn parse_one(cursor: &mut Cursor) -> Result<ParsedStatement, CdlError> {
    let (keyword, line, col) = cursor.take_word("a statement keyword")?;
    cursor.expect_punct(TokKind::LParen, "'('")?;
    let wrap = |err| CdlError::from_validation(err, line, col, &keyword);
    let stmt = match keyword.as_str() {
        "Shape" => {
            let groups = parse_group_list(cursor)?;
            let mut edges = Vec::with_capacity(groups.len());
            for (labels, gline, gcol) in groups {
                let edge = match labels.len() {
                    2 => Edge::seg(labels[0], labels[1]),
                    3 => Edge::arc(labels[0], labels[1], labels[2]),
                    n => {
                        return Err(CdlError::Arity {
                            line: gline,
                            col: gcol,
                            statement: "Shape".into(),
                            expected: "edges of 2 labels (segment) or 3 labels (arc)".into(),
                            found: n,
                        })
                    }
                };
                edges.push(edge.map_err(wrap)?);
            }
            ParsedStatement::Cons(ConsStatement::shape(edges).map_err(wrap)?)
        }
        "Collinear" => {
            let (labels, ..) = parse_label_group(cursor)?;
            ParsedStatement::Cons(ConsStatement::collinear(labels).map_err(wrap)?)
        }
        "Cocircular" => {
            let (center, cline, ccol) = parse_label_group(cursor)?;
            if center.len() != 1 {
                return Err(CdlError::Arity {
                    line: cline,
                    col: ccol,
                    statement: "Cocircular".into(),
                    expected: "a single center label".into(),
                    found: center.len(),
                });
            }
            cursor.expect_punct(TokKind::Comma, "','")?;
            let (on, ..) = parse_label_group(cursor)?;
            ParsedStatement::Cons(ConsStatement::cocircular(center[0], on).map_err(wrap)?)
        }
        "Equal" => {
            let lhs = parse_equal_operand(cursor)?;
            cursor.expect_punct(TokKind::Comma, "','")?;
            let rhs = parse_equal_operand(cursor)?;
            ParsedStatement::Img(ImgStatement::equal(lhs, rhs).map_err(wrap)?)
        }
        "ParallelBetweenLine" | "PerpendicularBetweenLine" => {
            let a = parse_seg_arg(cursor, &keyword)?;
            cursor.expect_punct(TokKind::Comma, "','")?;
            let b = parse_seg_arg(cursor, &keyword)?;
            let stmt = if keyword == "ParallelBetweenLine" {
                ImgStatement::parallel(a, b)
            } else {
                ImgStatement::perpendicular(a, b)
            };
            ParsedStatement::Img(stmt)
        }
        _ => {
            return Err(CdlError::Syntax {
                line,
                col,
                found: format!("'{keyword}'"),
                expected: format!("one of {}", STATEMENT_REGISTRY.join(", ")),
            })
        }
    };
    cursor.expect_punct(TokKind::RParen, "')'")?;
    Ok(stmt)
}

/// Comma-separated label groups up to (but not consuming) the closing paren.
fn parse_group_list(cursor: &mut Cursor) -> Result<Vec<(Vec<PointLabel>, usize, usize)>, CdlError> {
    let mut groups = vec![parse_label_group(cursor)?];
    while matches!(cursor.peek().map(|t| &t.kind), Some(TokKind::Comma)) {
        cursor.advance();
        groups.push(parse_label_group(cursor)?);
    }
    Ok(groups)
}

/// One juxtaposed label run (`ADC`, `A1B`), split into labels.
fn parse_label_group(cursor: &mut Cursor) -> Result<(Vec<PointLabel>, usize, usize), CdlError> {
    let (word, line, col) = cursor.take_word("point labels")?;
    let labels = split_label_group(&word, line, col)?;
    Ok((labels, line, col))
}

fn split_label_group(word: &str, line: usize, col: usize) -> Result<Vec<PointLabel>, CdlError> {
    let bad = |reason: String| CdlError::Syntax {
        line,
        col,
        found: format!("'{word}'"),
        expected: reason,
    };
    let mut labels = Vec::new();
    let mut current: Option<(char, String)> = None;
    let mut flush = |current: &mut Option<(char, String)>| -> Result<(), CdlError> {
        if let Some((letter, digits)) = current.take() {
            if digits.len() > 6 {
                return Err(bad("label suffixes of at most 6 digits".into()));
            }
            let suffix = if digits.is_empty() {
                None
            } else {
                Some(digits.parse::<u32>().expect("checked digits"))
            };
            let label = PointLabel::new(letter, suffix)
                .map_err(|e| bad(format!("a point label ({e})")))?;
            labels.push(label);
        }
        Ok(())
    };
    for c in word.chars() {
        if c.is_ascii_uppercase() {
            flush(&mut current)?;
            current = Some((c, String::new()));
        } else if c.is_ascii_digit() {
            match &mut current {
                Some((_, digits)) => digits.push(c),
                None => return Err(bad("a label group starting with an uppercase letter".into())),
            }
        } else {
            return Err(bad("uppercase point labels".into()));
        }
    }
    flush(&mut current)?;
    Ok(labels)
}

/// A two-label segment argument for the line relations.
fn parse_seg_arg(cursor: &mut Cursor, statement: &str) -> Result<LineSeg, CdlError> {
    let (labels, line, col) = parse_label_group(cursor)?;
    if labels.len() != 2 {
        return Err(CdlError::Arity {
            line,
            col,
            statement: statement.into(),
            expected: "a segment of exactly 2 labels".into(),
            found: labels.len(),
        });
    }
    LineSeg::new(labels[0], labels[1])
        .map_err(|e| CdlError::from_validation(e, line, col, statement))
}

fn parse_equal_operand(cursor: &mut Cursor) -> Result<EqualOperand, CdlError> {
    match cursor.peek().map(|t| t.kind.clone()) {
        Some(TokKind::Number(_)) => {
            let tok = cursor.advance().expect("peeked");
            let TokKind::Number(text) = tok.kind else {
                unreachable!()
            };
            Ok(EqualOperand::Literal(parse_rational(
                &text, tok.line, tok.col,
            )?))
        }
        Some(TokKind::Word(_)) => {
            let (name, line, col) = cursor.take_word("a measure term")?;
            cursor.expect_punct(TokKind::LParen, "'('")?;
            let (labels, gline, gcol) = parse_label_group(cursor)?;
            let term = match name.as_str() {
                "LengthOfLine" => {
                    if labels.len() != 2 {
                        return Err(CdlError::Arity {
                            line: gline,
                            col: gcol,
                            statement: "LengthOfLine".into(),
                            expected: "exactly 2 labels".into(),
                            found: labels.len(),
                        });
                    }
                    MeasureTerm::length(labels[0], labels[1])
                }
                "MeasureOfAngle" => {
                    if labels.len() != 3 {
                        return Err(CdlError::Arity {
                            line: gline,
                            col: gcol,
                            statement: "MeasureOfAngle".into(),
                            expected: "exactly 3 labels".into(),
                            found: labels.len(),
                        });
                    }
                    MeasureTerm::angle(labels[0], labels[1], labels[2])
                }
                _ => {
                    return Err(CdlError::Syntax {
                        line,
                        col,
                        found: format!("'{name}'"),
                        expected: format!("one of {}", MEASURE_REGISTRY.join(", ")),
                    })
                }
            };
            cursor.expect_punct(TokKind::RParen, "')'")?;
            Ok(EqualOperand::Term(term.map_err(|e| {
                CdlError::from_validation(e, line, col, &name)
            })?))
        }
        Some(_) => {
            let tok = cursor.advance().expect("peeked");
            Err(CdlError::Syntax {
                line: tok.line,
                col: tok.col,
                found: tok.describe(),
                expected: "a measure term or rational literal".into(),
            })
        }
        None => Err(cursor.unexpected_end("a measure term or rational literal")),
    }
}

/// Convert raw literal text into an exact rational. Decimals become exact
/// fractions (`4.5` → `9/2`); fraction denominators must be nonzero.
fn parse_rational(text: &str, line: usize, col: usize) -> Result<Rational64, CdlError> {
    let invalid = |reason: &str| CdlError::InvalidLiteral {
        line,
        col,
        reason: format!("{reason}: '{text}'"),
    };
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let value = if let Some((numer, denom)) = body.split_once('/') {
        let numer: i64 = numer.parse().map_err(|_| invalid("numerator out of range"))?;
        let denom: i64 = denom.parse().map_err(|_| invalid("denominator out of range"))?;
        if denom == 0 {
            return Err(invalid("zero denominator"));
        }
        Rational64::new(numer, denom)
    } else if let Some((int_part, frac_part)) = body.split_once('.') {
        let scale = 10i64
            .checked_pow(frac_part.len() as u32)
            .ok_or_else(|| invalid("too many decimal digits"))?;
        let int_part: i64 = int_part.parse().map_err(|_| invalid("out of range"))?;
        let frac_part: i64 = frac_part.parse().map_err(|_| invalid("out of range"))?;
        let numer = int_part
            .checked_mul(scale)
            .and_then(|v| v.checked_add(frac_part))
            .ok_or_else(|| invalid("out of range"))?;
        Rational64::new(numer, scale)
    } else {
        Rational64::from_integer(body.parse().map_err(|_| invalid("out of range"))?)
    };
    Ok(if negative { -value } else { value })
}
