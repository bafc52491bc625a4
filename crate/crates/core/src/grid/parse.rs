//! Recursive-descent parser for the plain-text infix field syntax.
//!
//! ```text
//! field  := expr | "(" expr ("," expr)+ ")"
//! expr   := term (("+" | "-") term)*
//! term   := unary (("*" | "/") unary)*
//! unary  := "-" unary | "+" unary | power
//! power  := atom ("^" unary)?
//! atom   := number | "x" | "y" | "t" | "pi" | "e" | ident "(" expr ("," expr)* ")" | "(" expr ")"
//! ```

use super::expr::{Expr, Func, Var};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

fn err(column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        column,
        message: message.into(),
    }
}

fn lex(src: &str, offset: usize) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = offset + i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text
                .parse()
                .map_err(|_| err(col, format!("malformed number '{text}'")))?;
            out.push((Tok::Num(v), col));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
        } else if "+-*/^(),".contains(c) {
            out.push((Tok::Sym(c), col));
            i += 1;
        } else {
            return Err(err(col, format!("unexpected character '{c}'")));
        }
    }
    out.push((Tok::End, offset + chars.len() + 1));
    Ok(out)
}

impl Lexer {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn col(&self) -> usize {
        self.toks[self.pos].1
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if *self.peek() == Tok::Sym(c) {
            self.next();
            Ok(())
        } else {
            Err(err(self.col(), format!("expected '{c}'")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Sym('+') => {
                    self.next();
                    lhs = Expr::add(lhs, self.term()?);
                }
                Tok::Sym('-') => {
                    self.next();
                    lhs = Expr::sub(lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Sym('*') => {
                    self.next();
                    lhs = Expr::mul(lhs, self.unary()?);
                }
                Tok::Sym('/') => {
                    self.next();
                    lhs = Expr::div(lhs, self.unary()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Tok::Sym('-') => {
                self.next();
                Ok(Expr::neg(self.unary()?))
            }
            Tok::Sym('+') => {
                self.next();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if *self.peek() == Tok::Sym('^') {
            self.next();
            let exp = self.unary()?;
            return Ok(Expr::pow(base, exp));
        }
        Ok(base)
    }

    fn args(&mut self) -> Result<Vec<Expr>> {
        self.expect('(')?;
        let mut args = vec![self.expr()?];
        while *self.peek() == Tok::Sym(',') {
            self.next();
            args.push(self.expr()?);
        }
        self.expect(')')?;
        Ok(args)
    }

    fn atom(&mut self) -> Result<Expr> {
        let col = self.col();
        match self.next() {
            Tok::Num(v) => Ok(Expr::c(v)),
            Tok::Sym('(') => {
                let e = self.expr()?;
                if *self.peek() == Tok::Sym(',') {
                    return Err(err(self.col(), "tuples are only allowed at the top level"));
                }
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::Sym('(') {
                    let arity_err = |n: usize| err(col, format!("{name} takes {n} argument(s)"));
                    let args = self.args()?;
                    return match name.as_str() {
                        "max" | "min" | "pow" => {
                            let [a, b]: [Expr; 2] = args.try_into().map_err(|_| arity_err(2))?;
                            Ok(match name.as_str() {
                                "max" => Expr::max(a, b),
                                "min" => Expr::min(a, b),
                                _ => Expr::pow(a, b),
                            })
                        }
                        other => {
                            let f = Func::from_name(other)
                                .ok_or_else(|| err(col, format!("unknown function '{other}'")))?;
                            let [a]: [Expr; 1] = args.try_into().map_err(|_| arity_err(1))?;
                            Ok(Expr::func(f, a))
                        }
                    };
                }
                match name.as_str() {
                    "x" => Ok(Expr::Var(Var::X)),
                    "y" => Ok(Expr::Var(Var::Y)),
                    "t" => Ok(Expr::Var(Var::T)),
                    "pi" => Ok(Expr::c(std::f64::consts::PI)),
                    "e" => Ok(Expr::c(std::f64::consts::E)),
                    other => Err(err(col, format!("unknown identifier '{other}'"))),
                }
            }
            Tok::End => Err(err(col, "unexpected end of input")),
            Tok::Sym(c) => Err(err(col, format!("unexpected '{c}'"))),
        }
    }
}

fn parse_at(src: &str, offset: usize) -> Result<Expr> {
    let mut lx = Lexer {
        toks: lex(src, offset)?,
        pos: 0,
    };
    let e = lx.expr()?;
    if *lx.peek() != Tok::End {
        return Err(err(lx.col(), "trailing input"));
    }
    Ok(e)
}

/// Parses a single scalar expression.
pub fn parse_expr(src: &str) -> Result<Expr> {
    parse_at(src, 0)
}

/// Splits a top-level tuple `(a, b, ...)` into its components; a plain expression is one component.
pub fn parse_components(src: &str) -> Result<Vec<Expr>> {
    let trimmed_start = src.len() - src.trim_start().len();
    let body = src.trim();
    if body.starts_with('(') && body.ends_with(')') {
        let inner = &body[1..body.len() - 1];
        let mut depth = 0i32;
        let mut closes_early = false;
        let mut commas = Vec::new();
        for (i, c) in inner.char_indices() {
            match c {
                '(' => depth += 1,
                ')' => {
                    depth -= 1;
                    if depth < 0 {
                        closes_early = true;
                        break;
                    }
                }
                ',' if depth == 0 => commas.push(i),
                _ => {}
            }
        }
        if !closes_early && !commas.is_empty() {
            let base = trimmed_start + 1;
            let mut parts = Vec::new();
            let mut start = 0;
            for &c in commas.iter().chain(std::iter::once(&inner.len())) {
                let piece = &inner[start..c];
                parts.push(parse_at(piece, base + start)?);
                start = c + 1;
            }
            return Ok(parts);
        }
    }
    Ok(vec![parse_at(src, 0)?])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let e = parse_expr("1 - x^2 - y^2").unwrap();
        assert_eq!(e.eval_xy(0.5, 0.5), 0.5);
        let e = parse_expr("-x^2").unwrap();
        assert_eq!(e.eval_xy(3.0, 0.0), -9.0);
        let e = parse_expr("2^-1 * 4").unwrap();
        assert_eq!(e.eval_xy(0.0, 0.0), 2.0);
        let e = parse_expr("2 * 3 ^ 2").unwrap();
        assert_eq!(e.eval_xy(0.0, 0.0), 18.0);
        let e = parse_expr("x / y / 2").unwrap();
        assert_eq!(e.eval_xy(8.0, 2.0), 2.0);
    }

    #[test]
    fn functions_and_constants() {
        let e = parse_expr("exp(x) * cos(pi * y) + max(abs(x), 1e-3) + sqrt(4)").unwrap();
        let v = e.eval_xy(0.0, 1.0);
        assert!((v - (-1.0 + 1e-3 + 2.0)).abs() < 1e-15);
    }

    #[test]
    fn tuples() {
        let parts = parse_components("(1 - x^2 - y^2, 0)").unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[1], Expr::c(0.0));
        let single = parse_components("(x + 1) * (y + 1)").unwrap();
        assert_eq!(single.len(), 1);
        let nested = parse_components("(max(x, y), min(x, y))").unwrap();
        assert_eq!(nested.len(), 2);
    }

    #[test]
    fn errors_carry_columns() {
        match parse_expr("x + * y") {
            Err(Error::Parse { column, .. }) => assert_eq!(column, 5),
            other => panic!("unexpected {other:?}"),
        }
        match parse_components("(x, foo)") {
            Err(Error::Parse { column, message }) => {
                assert_eq!(column, 5, "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_expr("sin(x, y)").is_err());
        assert!(parse_expr("x $ y").is_err());
        assert!(parse_expr("(x").is_err());
    }
}
