//! Recursive-descent parser.
//!
//! ```text
//! expr    := term   (('+' | '-') term)*
//! term    := unary  (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | ident | ident '(' args ')' | '(' expr ')'
//! ```
//!
//! The exponent of `^` must fold to an integer constant.

use super::ast::{BinOp, Func, Node};
use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next_token(&mut self) -> Result<(Tok, usize), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = bytes.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(t) = single {
            self.pos += 1;
            return Ok((t, start));
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.number(start).map(|n| (Tok::Num(n), start));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while self.pos < bytes.len()
                && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_')
            {
                self.pos += 1;
            }
            return Ok((Tok::Ident(self.src[start..self.pos].to_string()), start));
        }
        Err(ParseError::Syntax {
            offset: start,
            message: format!("unexpected character {:?}", self.src[start..].chars().next().unwrap_or('?')),
        })
    }

    fn number(&mut self, start: usize) -> Result<f64, ParseError> {
        let bytes = self.src.as_bytes();
        let digits = |lx: &mut Self| {
            let s = lx.pos;
            while lx.pos < bytes.len() && bytes[lx.pos].is_ascii_digit() {
                lx.pos += 1;
            }
            lx.pos - s
        };
        let mut count = digits(self);
        if bytes.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            return Err(ParseError::Syntax {
                offset: start,
                message: "malformed number".into(),
            });
        }
        if matches!(bytes.get(self.pos), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(bytes.get(self.pos), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                // `2e` followed by something else: treat `e...` as not part of the number.
                self.pos = save;
            }
        }
        self.src[start..self.pos]
            .parse::<f64>()
            .map_err(|_| ParseError::Syntax {
                offset: start,
                message: "malformed number".into(),
            })
    }
}

pub(super) struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    at: usize,
    vars: &'a [String],
}

impl<'a> Parser<'a> {
    pub(super) fn new(src: &'a str, vars: &'a [String]) -> Result<Self, ParseError> {
        let mut lexer = Lexer { src, pos: 0 };
        let (tok, at) = lexer.next_token()?;
        Ok(Parser { lexer, tok, at, vars })
    }

    fn bump(&mut self) -> Result<(), ParseError> {
        let (tok, at) = self.lexer.next_token()?;
        self.tok = tok;
        self.at = at;
        Ok(())
    }

    fn unexpected(&self) -> ParseError {
        let message = match &self.tok {
            Tok::End => "unexpected end of input".to_string(),
            t => format!("unexpected token {}", describe(t)),
        };
        ParseError::Syntax {
            offset: self.at,
            message,
        }
    }

    pub(super) fn parse_all(mut self) -> Result<Node, ParseError> {
        let node = self.expr()?;
        if self.tok != Tok::End {
            return Err(self.unexpected());
        }
        Ok(node)
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.unary()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.tok == Tok::Minus {
            self.bump()?;
            let inner = self.unary()?;
            return Ok(Node::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.primary()?;
        if self.tok != Tok::Caret {
            return Ok(base);
        }
        self.bump()?;
        let exp_at = self.at;
        let exponent = self.unary()?;
        let n = integer_exponent(&exponent).ok_or_else(|| ParseError::Syntax {
            offset: exp_at,
            message: "exponent must be an integer constant".into(),
        })?;
        Ok(Node::Pow(Box::new(base), n))
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Node::Const(v))
            }
            Tok::LParen => {
                self.bump()?;
                let inner = self.expr()?;
                if self.tok != Tok::RParen {
                    return Err(self.unexpected());
                }
                self.bump()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let at = self.at;
                self.bump()?;
                if self.tok == Tok::LParen {
                    return self.call(&name, at);
                }
                if let Some(k) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Node::Var(k));
                }
                match name.as_str() {
                    "pi" => Ok(Node::Const(std::f64::consts::PI)),
                    "i" => Ok(Node::Imag),
                    _ => Err(ParseError::UnknownIdentifier { name, offset: at }),
                }
            }
            _ => Err(self.unexpected()),
        }
    }

    fn call(&mut self, name: &str, at: usize) -> Result<Node, ParseError> {
        let func = Func::from_name(name).ok_or_else(|| ParseError::UnknownIdentifier {
            name: name.to_string(),
            offset: at,
        })?;
        // at '('
        self.bump()?;
        let mut args = Vec::new();
        if self.tok != Tok::RParen {
            loop {
                args.push(self.expr()?);
                if self.tok == Tok::Comma {
                    self.bump()?;
                    continue;
                }
                break;
            }
        }
        if self.tok != Tok::RParen {
            return Err(self.unexpected());
        }
        self.bump()?;
        if args.len() != 1 {
            return Err(ParseError::Arity {
                name: name.to_string(),
                expected: 1,
                found: args.len(),
                offset: at,
            });
        }
        Ok(Node::Call(func, Box::new(args.pop().unwrap())))
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Star => "`*`".into(),
        Tok::Slash => "`/`".into(),
        Tok::Caret => "`^`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::End => "end of input".into(),
    }
}

/// Folds a variable-free exponent to an `i32`, if it is integral.
fn integer_exponent(node: &Node) -> Option<i32> {
    fn fold(n: &Node) -> Option<f64> {
        Some(match n {
            Node::Const(c) => *c,
            Node::Neg(a) => -fold(a)?,
            Node::Binary(op, a, b) => {
                let (a, b) = (fold(a)?, fold(b)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                }
            }
            Node::Pow(a, k) => fold(a)?.powi(*k),
            _ => return None,
        })
    }
    let v = fold(node)?;
    if v.is_finite() && v.fract() == 0.0 && v.abs() <= i32::MAX as f64 {
        Some(v as i32)
    } else {
        None
    }
}
