//! Text parser for the expression DSL.
//!
//! Grammar (bit-exact contract):
//! identifiers `[a-zA-Z][a-zA-Z0-9_]*`; operators `+ - * / ^`; parentheses;
//! functions `sqrt exp log sin cos`; integer and decimal literals. `^` binds
//! tightest and is right-associative; unary minus is allowed. Decimal
//! literals are read exactly as rationals (`0.25` is 1/4, not a float).

use thiserror::Error;

use super::expr::{self, Expr, Q};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown symbol `{name}` at position {pos}")]
    UnknownSymbol { pos: usize, name: String },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Q),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize, // 0-based byte offset
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    /// Next token and its 1-based start position.
    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        self.skip_ws();
        if self.pos >= self.src.len() {
            return Ok((Tok::End, self.pos + 1));
        }
        let start = self.pos;
        let c = self.src[self.pos];
        let tok = match c {
            b'+' => {
                self.pos += 1;
                Tok::Plus
            }
            b'-' => {
                self.pos += 1;
                Tok::Minus
            }
            b'*' => {
                self.pos += 1;
                Tok::Star
            }
            b'/' => {
                self.pos += 1;
                Tok::Slash
            }
            b'^' => {
                self.pos += 1;
                Tok::Caret
            }
            b'(' => {
                self.pos += 1;
                Tok::LParen
            }
            b')' => {
                self.pos += 1;
                Tok::RParen
            }
            b'0'..=b'9' => {
                let mut end = self.pos;
                while end < self.src.len() && self.src[end].is_ascii_digit() {
                    end += 1;
                }
                let int_part: i64 = std::str::from_utf8(&self.src[self.pos..end])
                    .unwrap()
                    .parse()
                    .map_err(|_| ParseError::Syntax {
                        pos: start + 1,
                        msg: "integer literal too large".into(),
                    })?;
                let mut q = Q::int(int_part);
                if end < self.src.len() && self.src[end] == b'.' {
                    let frac_start = end + 1;
                    let mut fe = frac_start;
                    while fe < self.src.len() && self.src[fe].is_ascii_digit() {
                        fe += 1;
                    }
                    if fe == frac_start {
                        return Err(ParseError::Syntax {
                            pos: end + 1,
                            msg: "expected digits after decimal point".into(),
                        });
                    }
                    let digits = fe - frac_start;
                    let frac: i64 = std::str::from_utf8(&self.src[frac_start..fe])
                        .unwrap()
                        .parse()
                        .map_err(|_| ParseError::Syntax {
                            pos: frac_start + 1,
                            msg: "decimal literal too precise for exact rationals".into(),
                        })?;
                    let den = 10i64.checked_pow(digits as u32).ok_or(ParseError::Syntax {
                        pos: frac_start + 1,
                        msg: "decimal literal too precise for exact rationals".into(),
                    })?;
                    q = q
                        .checked_add(Q::new(frac, den))
                        .ok_or(ParseError::Syntax {
                            pos: start + 1,
                            msg: "numeric literal overflow".into(),
                        })?;
                    end = fe;
                }
                self.pos = end;
                Tok::Num(q)
            }
            b'a'..=b'z' | b'A'..=b'Z' => {
                let mut end = self.pos;
                while end < self.src.len()
                    && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
                {
                    end += 1;
                }
                let name = std::str::from_utf8(&self.src[self.pos..end]).unwrap().to_string();
                self.pos = end;
                Tok::Ident(name)
            }
            other => {
                return Err(ParseError::Syntax {
                    pos: start + 1,
                    msg: format!("unexpected character `{}`", other as char),
                })
            }
        };
        Ok((tok, start + 1))
    }
}

const FUNCTIONS: [&str; 5] = ["sqrt", "exp", "log", "sin", "cos"];

pub struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    i: usize,
    known: &'a dyn Fn(&str) -> bool,
}

impl<'a> Parser<'a> {
    pub fn new(src: &str, known: &'a dyn Fn(&str) -> bool) -> Result<Self, ParseError> {
        let mut lx = Lexer::new(src);
        let mut toks = Vec::new();
        loop {
            let (t, p) = lx.next()?;
            let end = t == Tok::End;
            toks.push((t, p));
            if end {
                break;
            }
        }
        Ok(Parser { toks, i: 0, known })
    }

    fn peek(&self) -> &(Tok, usize) {
        &self.toks[self.i]
    }
    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    pub fn parse_full(&mut self) -> Result<Expr, ParseError> {
        let e = self.parse_sum()?;
        match self.peek() {
            (Tok::End, _) => Ok(e),
            (t, p) => Err(ParseError::Syntax {
                pos: *p,
                msg: format!("unexpected trailing token {:?}", t),
            }),
        }
    }

    fn parse_sum(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.parse_product()?;
        loop {
            match self.peek().0 {
                Tok::Plus => {
                    self.bump();
                    let rhs = self.parse_product()?;
                    acc = expr::add([acc, rhs]);
                }
                Tok::Minus => {
                    self.bump();
                    let rhs = self.parse_product()?;
                    acc = expr::sub(acc, rhs);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn parse_product(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.parse_unary()?;
        loop {
            match self.peek().0 {
                Tok::Star => {
                    self.bump();
                    let rhs = self.parse_unary()?;
                    acc = expr::mul([acc, rhs]);
                }
                Tok::Slash => {
                    self.bump();
                    let rhs = self.parse_unary()?;
                    acc = expr::div(acc, rhs);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn parse_unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek().0 == Tok::Minus {
            self.bump();
            let inner = self.parse_unary()?;
            return Ok(expr::neg(inner));
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Expr, ParseError> {
        let base = self.parse_atom()?;
        if self.peek().0 == Tok::Caret {
            self.bump();
            let (epos, exponent) = self.parse_exponent()?;
            let k = exponent.as_num().and_then(|q| q.as_integer()).ok_or(
                ParseError::Syntax {
                    pos: epos,
                    msg: "exponent must be an integer".into(),
                },
            )?;
            return Ok(expr::pow(base, k));
        }
        Ok(base)
    }

    // `^` is right-associative and binds tighter than unary minus, so the
    // exponent itself is a (possibly signed, possibly parenthesised) power.
    fn parse_exponent(&mut self) -> Result<(usize, Expr), ParseError> {
        let pos = self.peek().1;
        if self.peek().0 == Tok::Minus {
            self.bump();
            let (_, inner) = self.parse_exponent()?;
            return Ok((pos, expr::neg(inner)));
        }
        let base = self.parse_atom()?;
        if self.peek().0 == Tok::Caret {
            self.bump();
            let (epos, exponent) = self.parse_exponent()?;
            let k = exponent.as_num().and_then(|q| q.as_integer()).ok_or(
                ParseError::Syntax {
                    pos: epos,
                    msg: "exponent must be an integer".into(),
                },
            )?;
            return Ok((pos, expr::pow(base, k)));
        }
        Ok((pos, base))
    }

    fn parse_atom(&mut self) -> Result<Expr, ParseError> {
        let (tok, pos) = self.bump();
        match tok {
            Tok::Num(q) => Ok(Expr::num(q)),
            Tok::LParen => {
                let e = self.parse_sum()?;
                match self.bump() {
                    (Tok::RParen, _) => Ok(e),
                    (t, p) => Err(ParseError::Syntax {
                        pos: p,
                        msg: format!("expected `)`, found {:?}", t),
                    }),
                }
            }
            Tok::Ident(name) => {
                if self.peek().0 == Tok::LParen {
                    if !FUNCTIONS.contains(&name.as_str()) {
                        return Err(ParseError::Syntax {
                            pos,
                            msg: format!(
                                "unknown function `{}` (supported: sqrt, exp, log, sin, cos)",
                                name
                            ),
                        });
                    }
                    self.bump(); // (
                    let arg = self.parse_sum()?;
                    match self.bump() {
                        (Tok::RParen, _) => {}
                        (t, p) => {
                            return Err(ParseError::Syntax {
                                pos: p,
                                msg: format!("expected `)` closing {}, found {:?}", name, t),
                            })
                        }
                    }
                    Ok(match name.as_str() {
                        "sqrt" => expr::sqrt(arg),
                        "exp" => expr::exp(arg),
                        "log" => expr::log(arg),
                        "sin" => expr::sin(arg),
                        "cos" => expr::cos(arg),
                        _ => unreachable!(),
                    })
                } else {
                    if !(self.known)(&name) {
                        return Err(ParseError::UnknownSymbol { pos, name });
                    }
                    Ok(Expr::sym(&name))
                }
            }
            t => Err(ParseError::Syntax {
                pos,
                msg: format!("expected expression, found {:?}", t),
            }),
        }
    }
}

/// Parse `text` allowing exactly the symbols accepted by `known`.
pub fn parse_with(text: &str, known: &dyn Fn(&str) -> bool) -> Result<Expr, ParseError> {
    Parser::new(text, known)?.parse_full()
}
