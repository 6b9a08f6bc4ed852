//! Recursive-descent parser for the expression DSL.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := ('-' | '+') unary | power
//! power  := atom ('^' unary)?
//! atom   := number | symbol | call | '(' expr ')'
//! call   := name primes? '(' expr (',' expr)* ')'
//! primes := "'"+ | "'" '[' int (',' int)* ']'
//! ```
//!
//! `V'(q)` is the formal derivative of `V`; `A0'[1](q0, q1)` differentiates
//! a multi-argument function at argument position 1.

use std::collections::BTreeSet;

use super::{Expr, ExprError, LN, RESERVED};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Tok, usize)>, ExprError> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        while let Some(t) = lx.next()? {
            out.push(t);
        }
        Ok(out)
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn next(&mut self) -> Result<Option<(Tok, usize)>, ExprError> {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(c) = self.peek() else {
            return Ok(None);
        };
        if c.is_ascii_digit() || c == '.' {
            return self.number(start).map(Some);
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                self.pos += 1;
            }
            return Ok(Some((
                Tok::Ident(self.src[start..self.pos].to_string()),
                start,
            )));
        }
        if "+-*/^(),'[]".contains(c) {
            self.pos += 1;
            return Ok(Some((Tok::Op(c), start)));
        }
        Err(ExprError::Syntax {
            offset: start,
            message: format!("unexpected character `{c}`"),
        })
    }

    fn number(&mut self, start: usize) -> Result<(Tok, usize), ExprError> {
        let bytes = self.src.as_bytes();
        let digits = |lx: &mut Lexer| {
            while lx.pos < bytes.len() && bytes[lx.pos].is_ascii_digit() {
                lx.pos += 1;
            }
        };
        digits(self);
        if self.pos < bytes.len() && bytes[self.pos] == b'.' {
            self.pos += 1;
            digits(self);
        }
        if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
            let mark = self.pos;
            self.pos += 1;
            if self.pos < bytes.len() && (bytes[self.pos] == b'+' || bytes[self.pos] == b'-') {
                self.pos += 1;
            }
            if self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
                digits(self);
            } else {
                // `2e` followed by something else: the `e` is not an exponent.
                self.pos = mark;
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>()
            .map(|v| (Tok::Num(v), start))
            .map_err(|_| ExprError::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    i: usize,
    end: usize,
    functions: Option<&'a BTreeSet<String>>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.i).map_or(self.end, |(_, o)| *o)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{c}`")))
        }
    }

    fn error(&self, message: String) -> ExprError {
        ExprError::Syntax {
            offset: self.offset(),
            message,
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat('+') {
                terms.push(self.term()?);
            } else if self.eat('-') {
                terms.push(Expr::Neg(Box::new(self.term()?)));
            } else {
                break;
            }
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Expr::Sum(terms)
        })
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut factors = vec![self.unary()?];
        loop {
            if self.eat('*') {
                factors.push(self.unary()?);
            } else if self.eat('/') {
                let d = self.unary()?;
                factors.push(Expr::Pow(Box::new(d), Box::new(Expr::Const(-1.0))));
            } else {
                break;
            }
        }
        Ok(if factors.len() == 1 {
            factors.pop().unwrap()
        } else {
            Expr::Product(factors)
        })
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.eat('^') {
            let exponent = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let offset = self.offset();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.i += 1;
                Ok(Expr::Const(v))
            }
            Some(Tok::Ident(name)) => {
                self.i += 1;
                match self.peek() {
                    Some(Tok::Op('(')) | Some(Tok::Op('\'')) => self.call(name, offset),
                    _ => Ok(Expr::Sym(name)),
                }
            }
            Some(Tok::Op('(')) => {
                self.i += 1;
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Some(t) => Err(self.error(format!("unexpected token {t:?}"))),
            None => Err(self.error("unexpected end of input".into())),
        }
    }

    fn index(&mut self) -> Result<usize, ExprError> {
        match self.peek() {
            Some(Tok::Num(v)) if v.fract() == 0.0 && *v >= 0.0 => {
                let v = *v as usize;
                self.i += 1;
                Ok(v)
            }
            _ => Err(self.error("expected argument index".into())),
        }
    }

    fn call(&mut self, name: String, offset: usize) -> Result<Expr, ExprError> {
        let mut primes = 0;
        let mut positions = None;
        while self.eat('\'') {
            primes += 1;
        }
        if primes == 1 && self.eat('[') {
            let mut list = vec![self.index()?];
            while self.eat(',') {
                list.push(self.index()?);
            }
            self.expect(']')?;
            positions = Some(list);
        }
        let builtin = RESERVED.contains(&name.as_str());
        if !builtin {
            if let Some(known) = self.functions {
                if !known.contains(&name) {
                    return Err(ExprError::UnknownFunction { name, offset });
                }
            }
        }
        self.expect('(')?;
        let mut args = vec![self.expr()?];
        while self.eat(',') {
            args.push(self.expr()?);
        }
        self.expect(')')?;

        if builtin {
            if primes > 0 {
                return Err(ExprError::Syntax {
                    offset,
                    message: format!("built-in `{name}` cannot carry derivative marks"),
                });
            }
            if args.len() != 1 {
                return Err(ExprError::Arity {
                    name,
                    expected: 1,
                    got: args.len(),
                });
            }
            let arg = args.pop().unwrap();
            return Ok(if name == LN {
                Expr::Apply {
                    name,
                    args: vec![arg],
                }
            } else {
                Expr::Sqrt(Box::new(arg))
            });
        }
        if primes == 0 {
            return Ok(Expr::Apply { name, args });
        }
        let wrt = match positions {
            Some(list) => {
                if let Some(&bad) = list.iter().find(|&&p| p >= args.len()) {
                    return Err(ExprError::Syntax {
                        offset,
                        message: format!("derivative position {bad} out of range for `{name}`"),
                    });
                }
                list
            }
            None if args.len() == 1 => vec![0; primes],
            None => {
                return Err(ExprError::Syntax {
                    offset,
                    message: format!("`{name}` takes several arguments; use {name}'[i](...)"),
                })
            }
        };
        Ok(Expr::Deriv { name, wrt, args })
    }
}

fn parse_raw(text: &str, functions: Option<&BTreeSet<String>>) -> Result<Expr, ExprError> {
    let toks = Lexer::tokens(text)?;
    let mut p = Parser {
        toks,
        i: 0,
        end: text.len(),
        functions,
    };
    let e = p.expr()?;
    if p.i != p.toks.len() {
        return Err(p.error("unexpected trailing input".into()));
    }
    Ok(e)
}

/// Parses `text` into canonical form. Any identifier followed by `(` is
/// accepted as a named function.
pub fn parse(text: &str) -> Result<Expr, ExprError> {
    Ok(parse_raw(text, None)?.simplify())
}

/// Parses `text`, rejecting calls to functions that are not in `functions`
/// (the built-ins `sqrt` and `ln` are always allowed).
pub fn parse_with(text: &str, functions: &BTreeSet<String>) -> Result<Expr, ExprError> {
    Ok(parse_raw(text, Some(functions))?.simplify())
}

#[cfg(test)]
pub(super) fn parse_uncanonical(text: &str) -> Result<Expr, ExprError> {
    parse_raw(text, None)
}
