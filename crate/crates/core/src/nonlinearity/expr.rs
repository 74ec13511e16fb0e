//! Tiny arithmetic expression language for nonlinearities read from the CLI.
//!
//! One variable `x`, operators `+ - * / ^`, parentheses and the functions
//! `exp`, `log`, `sin`. `^` binds tightest and is right-associative.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Exp => v.exp(),
            Func::Log => v.ln(),
            Func::Sin => v.sin(),
        }
    }
}

impl Expr {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Expr::Num(c) => *c,
            Expr::Var => x,
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => a.eval(x).powf(b.eval(x)),
            Expr::Neg(a) => -a.eval(x),
            Expr::Call(f, a) => f.apply(a.eval(x)),
        }
    }
}

// Fully parenthesized so that re-parsing reproduces the tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(c) => write!(f, "{}", c),
            Expr::Var => write!(f, "x"),
            Expr::Add(a, b) => write!(f, "({} + {})", a, b),
            Expr::Sub(a, b) => write!(f, "({} - {})", a, b),
            Expr::Mul(a, b) => write!(f, "({} * {})", a, b),
            Expr::Div(a, b) => write!(f, "({} / {})", a, b),
            Expr::Pow(a, b) => write!(f, "({} ^ {})", a, b),
            Expr::Neg(a) => write!(f, "(-{})", a),
            Expr::Call(g, a) => write!(f, "{}({})", g.name(), a),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Var,
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
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

    /// Next token together with its starting offset.
    fn next_tok(&mut self) -> Result<Option<(Tok, usize)>> {
        self.skip_ws();
        if self.pos >= self.src.len() {
            return Ok(None);
        }
        let start = self.pos;
        let c = self.src[self.pos];
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                let mut end = self.pos;
                while end < self.src.len()
                    && (self.src[end].is_ascii_digit() || self.src[end] == b'.')
                {
                    end += 1;
                }
                // scientific notation
                if end < self.src.len() && (self.src[end] == b'e' || self.src[end] == b'E') {
                    let mut e = end + 1;
                    if e < self.src.len() && (self.src[e] == b'+' || self.src[e] == b'-') {
                        e += 1;
                    }
                    if e < self.src.len() && self.src[e].is_ascii_digit() {
                        while e < self.src.len() && self.src[e].is_ascii_digit() {
                            e += 1;
                        }
                        end = e;
                    }
                }
                let text = std::str::from_utf8(&self.src[start..end]).unwrap();
                let value = text.parse::<f64>().map_err(|_| Error::Parse {
                    message: format!("malformed number `{}`", text),
                    position: start,
                })?;
                self.pos = end;
                return Ok(Some((Tok::Num(value), start)));
            }
            b'a'..=b'z' | b'A'..=b'Z' => {
                let mut end = self.pos;
                while end < self.src.len() && self.src[end].is_ascii_alphanumeric() {
                    end += 1;
                }
                let text = std::str::from_utf8(&self.src[start..end]).unwrap().to_string();
                self.pos = end;
                let tok = if text == "x" { Tok::Var } else { Tok::Ident(text) };
                return Ok(Some((tok, start)));
            }
            other => {
                return Err(Error::Parse {
                    message: format!("unexpected character `{}`", other as char),
                    position: start,
                })
            }
        };
        self.pos += 1;
        Ok(Some((tok, start)))
    }
}

pub struct Parser {
    toks: Vec<(Tok, usize)>,
    idx: usize,
    end: usize,
}

impl Parser {
    pub fn parse(src: &str) -> Result<Expr> {
        let mut lexer = Lexer::new(src);
        let mut toks = Vec::new();
        while let Some(t) = lexer.next_tok()? {
            toks.push(t);
        }
        let mut p = Parser {
            toks,
            idx: 0,
            end: src.len(),
        };
        let e = p.expr()?;
        if let Some((_, pos)) = p.peek() {
            return Err(Error::Parse {
                message: "unexpected trailing token".to_string(),
                position: pos,
            });
        }
        Ok(e)
    }

    fn peek(&self) -> Option<(Tok, usize)> {
        self.toks.get(self.idx).cloned()
    }

    fn bump(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.idx).cloned();
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    fn here(&self) -> usize {
        self.toks.get(self.idx).map(|t| t.1).unwrap_or(self.end)
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some((tok, _)) = self.peek() {
            match tok {
                Tok::Plus => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        while let Some((tok, _)) = self.peek() {
            match tok {
                Tok::Star => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr> {
        if let Some((Tok::Minus, _)) = self.peek() {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if let Some((Tok::Caret, _)) = self.peek() {
            self.bump();
            // right-associative, and allows a signed exponent
            let exp = self.factor()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let pos = self.here();
        match self.bump() {
            Some((Tok::Num(v), _)) => Ok(Expr::Num(v)),
            Some((Tok::Var, _)) => Ok(Expr::Var),
            Some((Tok::Ident(name), ident_pos)) => {
                let func = match name.as_str() {
                    "exp" => Func::Exp,
                    "log" => Func::Log,
                    "sin" => Func::Sin,
                    _ => {
                        return Err(Error::Parse {
                            message: format!("unknown identifier `{}`", name),
                            position: ident_pos,
                        })
                    }
                };
                match self.bump() {
                    Some((Tok::LParen, _)) => {}
                    _ => {
                        return Err(Error::Parse {
                            message: format!("expected `(` after `{}`", name),
                            position: self.here(),
                        })
                    }
                }
                let arg = self.expr()?;
                match self.bump() {
                    Some((Tok::RParen, _)) => Ok(Expr::Call(func, Box::new(arg))),
                    _ => Err(Error::Parse {
                        message: "missing closing parenthesis".to_string(),
                        position: self.here(),
                    }),
                }
            }
            Some((Tok::LParen, _)) => {
                let inner = self.expr()?;
                match self.bump() {
                    Some((Tok::RParen, _)) => Ok(inner),
                    _ => Err(Error::Parse {
                        message: "missing closing parenthesis".to_string(),
                        position: self.here(),
                    }),
                }
            }
            other => Err(Error::Parse {
                message: match other {
                    Some((t, _)) => format!("expected value, found {:?}", t),
                    None => "expected value, found end of input".to_string(),
                },
                position: pos,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Expr {
        Parser::parse(s).unwrap()
    }

    #[test]
    fn precedence_and_powers() {
        assert_eq!(parse("x^2").eval(2.0), 4.0);
        assert_eq!(parse("2*x^2").eval(3.0), 18.0);
        assert_eq!(parse("x^2/(1+x^2)").eval(1.0), 0.5);
        // right associativity: 2^3^2 = 2^9
        assert_eq!(parse("2^3^2").eval(0.0), 512.0);
        // unary minus binds looser than ^
        assert_eq!(parse("-x^2").eval(3.0), -9.0);
    }

    #[test]
    fn functions() {
        assert!((parse("exp(x)-1").eval(1.0) - (1f64.exp() - 1.0)).abs() < 1e-15);
        assert!((parse("x*(2+sin(log(x)))").eval(1.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn syntax_error_positions() {
        let err = Parser::parse("x^^2").unwrap_err();
        match err {
            Error::Parse { position, .. } => assert_eq!(position, 2),
            other => panic!("unexpected error {other:?}"),
        }
        assert!(Parser::parse("x +").is_err());
        assert!(Parser::parse("(x").is_err());
        assert!(Parser::parse("y + 1").is_err());
    }

    #[test]
    fn display_reparses_to_same_tree() {
        for src in ["x^2/(1+x^2)", "exp(x)-1", "-x^2+3*x", "x*(2+sin(log(x)))"] {
            let e = parse(src);
            let printed = e.to_string();
            assert_eq!(parse(&printed), e, "round-trip failed for {src}");
        }
    }
}
