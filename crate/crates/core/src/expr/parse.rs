//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := unary ('*' unary)*
//! unary    := '-' unary | postfix
//! postfix  := primary ('^' uint)?
//! primary  := number ('/' number)? | ident | func '(' expr (',' expr)* ')' | '(' expr ')'
//! ident    := 'x1'..'xn' | 't'
//! func     := 'abs' | 'max' | 'min' | 'norm'
//! ```
//!
//! `/` only joins two numeric literals into a rational constant (`1/3`,
//! `2/3`); it is not a general division operator. Exponents are nonnegative
//! integer literals. Grammar restrictions that keep limiting subdifferentials
//! computable are enforced during parsing:
//!
//! * arguments of `abs`, `max`, `min`, `norm` must be smooth,
//! * `norm` arguments must additionally be affine,
//! * `*` needs both factors smooth, or one factor free of `x` (a scaling),
//! * `^` applies to smooth bases only.

use super::Expr;
use crate::error::{Error, Result};

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

    fn tokens(mut self) -> Result<Vec<(Tok, usize)>> {
        let mut out = Vec::new();
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            let start = self.pos;
            match c {
                b' ' | b'\t' | b'\r' | b'\n' => {
                    self.pos += 1;
                }
                b'+' => {
                    out.push((Tok::Plus, start));
                    self.pos += 1;
                }
                b'-' => {
                    out.push((Tok::Minus, start));
                    self.pos += 1;
                }
                b'*' => {
                    out.push((Tok::Star, start));
                    self.pos += 1;
                }
                b'/' => {
                    out.push((Tok::Slash, start));
                    self.pos += 1;
                }
                b'^' => {
                    out.push((Tok::Caret, start));
                    self.pos += 1;
                }
                b'(' => {
                    out.push((Tok::LParen, start));
                    self.pos += 1;
                }
                b')' => {
                    out.push((Tok::RParen, start));
                    self.pos += 1;
                }
                b',' => {
                    out.push((Tok::Comma, start));
                    self.pos += 1;
                }
                b'0'..=b'9' | b'.' => {
                    let tok = self.lex_number()?;
                    out.push((tok, start));
                }
                b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                    while self.pos < self.src.len()
                        && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                    {
                        self.pos += 1;
                    }
                    let name = std::str::from_utf8(&self.src[start..self.pos])
                        .expect("ascii slice")
                        .to_string();
                    out.push((Tok::Ident(name), start));
                }
                _ => {
                    return Err(Error::Parse {
                        position: start,
                        message: format!("unexpected character `{}`", c as char),
                    });
                }
            }
        }
        Ok(out)
    }

    fn lex_number(&mut self) -> Result<Tok> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            let mark = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-')
            {
                self.pos += 1;
            }
            if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                // not an exponent after all (e.g. identifier following)
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice");
        text.parse::<f64>().map(Tok::Num).map_err(|_| Error::Parse {
            position: start,
            message: format!("invalid number `{}`", text),
        })
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    n: usize,
    src_len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|(_, p)| *p)
            .unwrap_or(self.src_len)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        let position = self.here();
        match self.bump() {
            Some(t) if t == tok => Ok(()),
            _ => Err(Error::Parse {
                position,
                message: format!("expected {}", what),
            }),
        }
    }

    fn err(&self, position: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            position,
            message: message.into(),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    let rhs = self.term()?;
                    acc = Expr::Add(Box::new(acc), Box::new(rhs));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    let rhs = self.term()?;
                    acc = Expr::Add(Box::new(acc), Box::new(Expr::Neg(Box::new(rhs))));
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    let star_pos = self.here();
                    self.bump();
                    let rhs = self.unary()?;
                    // Products are restricted: smooth * smooth, or a scaling
                    // by an x-free factor.
                    if !(acc.is_smooth() && rhs.is_smooth())
                        && !acc.is_x_free()
                        && !rhs.is_x_free()
                    {
                        return Err(self.err(
                            star_pos,
                            "nonsmooth-composition: `*` needs smooth factors or an x-free scaling factor",
                        ));
                    }
                    acc = Expr::Mul(Box::new(acc), Box::new(rhs));
                }
                Some(Tok::Slash) => {
                    return Err(self.err(
                        self.here(),
                        "`/` is only allowed between numeric literals (rational constant)",
                    ));
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr> {
        if let Some(Tok::Minus) = self.peek() {
            self.bump();
            let inner = self.unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if let Some(Tok::Caret) = self.peek() {
            let caret_pos = self.here();
            self.bump();
            let exp_pos = self.here();
            let exp = match self.bump() {
                Some(Tok::Num(v)) => {
                    if v.fract() != 0.0 || v < 0.0 || v > u32::MAX as f64 {
                        return Err(self.err(exp_pos, "exponent must be a nonnegative integer"));
                    }
                    v as u32
                }
                _ => return Err(self.err(exp_pos, "expected integer exponent after `^`")),
            };
            if !base.is_smooth() {
                return Err(self.err(
                    caret_pos,
                    "nonsmooth-composition: `^` applies to smooth expressions only",
                ));
            }
            return Ok(Expr::Pow(Box::new(base), exp));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        let position = self.here();
        match self.bump() {
            Some(Tok::Num(v)) => {
                // rational literal p/q
                if let Some(Tok::Slash) = self.peek() {
                    self.bump();
                    let denom_pos = self.here();
                    match self.bump() {
                        Some(Tok::Num(d)) => {
                            if d == 0.0 {
                                return Err(self.err(denom_pos, "zero denominator"));
                            }
                            Ok(Expr::Const(v / d))
                        }
                        _ => Err(self.err(
                            denom_pos,
                            "`/` is only allowed between numeric literals (rational constant)",
                        )),
                    }
                } else {
                    Ok(Expr::Const(v))
                }
            }
            Some(Tok::Ident(name)) => match name.as_str() {
                "t" => Ok(Expr::Param),
                "abs" | "max" | "min" | "norm" => {
                    let args = self.call_args(&name, position)?;
                    self.build_call(&name, args, position)
                }
                _ => {
                    if let Some(rest) = name.strip_prefix('x') {
                        if let Ok(j) = rest.parse::<usize>() {
                            if j >= 1 && j <= self.n {
                                return Ok(Expr::Var(j - 1));
                            }
                            return Err(self.err(
                                position,
                                format!("unknown identifier `{}` (dimension is {})", name, self.n),
                            ));
                        }
                    }
                    Err(self.err(position, format!("unknown identifier `{}`", name)))
                }
            },
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            _ => Err(self.err(position, "expected a number, identifier, or `(`")),
        }
    }

    fn call_args(&mut self, name: &str, position: usize) -> Result<Vec<Expr>> {
        if self.peek() != Some(&Tok::LParen) {
            return Err(self.err(position, format!("`{}` requires arguments", name)));
        }
        self.bump();
        let mut args = vec![self.expr()?];
        while self.peek() == Some(&Tok::Comma) {
            self.bump();
            args.push(self.expr()?);
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(args)
    }

    fn build_call(&mut self, name: &str, args: Vec<Expr>, position: usize) -> Result<Expr> {
        for a in &args {
            if !a.is_smooth() {
                return Err(self.err(
                    position,
                    format!("nonsmooth-composition: argument of `{}` must be smooth", name),
                ));
            }
        }
        match name {
            "abs" => {
                if args.len() != 1 {
                    return Err(self.err(position, "`abs` takes exactly one argument"));
                }
                Ok(Expr::Abs(Box::new(args.into_iter().next().unwrap())))
            }
            "max" | "min" => {
                if args.len() < 2 {
                    return Err(self.err(position, format!("`{}` takes at least two arguments", name)));
                }
                if name == "max" {
                    Ok(Expr::Max(args))
                } else {
                    Ok(Expr::Min(args))
                }
            }
            "norm" => {
                for a in &args {
                    if !a.is_affine() {
                        return Err(self.err(
                            position,
                            "nonsmooth-composition: `norm` arguments must be affine",
                        ));
                    }
                }
                Ok(Expr::Norm(args))
            }
            _ => unreachable!(),
        }
    }
}

/// Parse expression text over variables `x1..xn` and the parameter `t`.
pub fn parse_expr(text: &str, n: usize) -> Result<Expr> {
    if n > 64 {
        return Err(Error::Validation("dimension must be at most 64".into()));
    }
    let toks = Lexer::new(text).tokens()?;
    let src_len = text.len();
    let mut p = Parser {
        toks,
        pos: 0,
        n,
        src_len,
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(Error::Parse {
            position: p.here(),
            message: "unexpected trailing input".into(),
        });
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_paper_expressions() {
        assert!(parse_expr("x1^2 + (x1*x2 - 1)^2", 2).unwrap().is_smooth());
        let g = parse_expr("-t*abs(x1) - t*abs(x2)", 2).unwrap();
        assert!(g.uses_param());
        assert!(!g.is_smooth());
        assert!(parse_expr("min(1/2*x1, 2/3*x1)", 1).is_ok());
        assert!(parse_expr("1/3*x1^3", 1).unwrap().is_smooth());
    }

    #[test]
    fn rejects_nonsmooth_composition() {
        let e = parse_expr("abs(max(x1, x2))", 2);
        match e {
            Err(Error::Parse { message, .. }) => assert!(message.contains("nonsmooth-composition")),
            other => panic!("expected nonsmooth-composition error, got {:?}", other),
        }
        assert!(parse_expr("abs(x1)*abs(x2)", 2).is_err());
        assert!(parse_expr("abs(x1)^2", 1).is_err());
        assert!(parse_expr("norm(x1^2)", 1).is_err());
        // scaling of a nonsmooth factor by an x-free factor is fine
        assert!(parse_expr("t*abs(x1)", 1).is_ok());
        assert!(parse_expr("2*abs(x1)", 1).is_ok());
    }

    #[test]
    fn rejects_bad_syntax() {
        assert!(parse_expr("x1 +", 1).is_err());
        assert!(parse_expr("x3", 2).is_err());
        assert!(parse_expr("y", 1).is_err());
        assert!(parse_expr("x1/2", 1).is_err());
        assert!(parse_expr("x1^x1", 1).is_err());
        assert!(parse_expr("x1^(-2)", 1).is_err());
        assert!(parse_expr("max(x1)", 1).is_err());
        assert!(parse_expr("1/0", 1).is_err());
    }

    #[test]
    fn error_carries_position() {
        match parse_expr("x1 + @", 1) {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 5),
            other => panic!("expected parse error, got {:?}", other),
        }
    }

    #[test]
    fn rational_literals_fold() {
        match parse_expr("1/4", 1).unwrap() {
            Expr::Const(v) => assert_eq!(v, 0.25),
            other => panic!("expected constant, got {:?}", other),
        }
    }
}
