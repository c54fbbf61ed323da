//! Recursive-descent parser for observable expressions.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | postfix
//! postfix := primary ('[' INT ']')*
//! primary := NUMBER | '(' expr ')' | '[' expr (',' expr)* ']'
//!          | 'x' | 'frac' | 'y' | IDENT '(' args ')'
//! ```

use crate::driver::IncrementLaw;
use crate::vector::Vector;

use super::observable::{BinOp, Expr};
use super::EngineError;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>, EngineError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let save = i;
                i += 1;
                if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                    i += 1;
                }
                if i < bytes.len() && bytes[i].is_ascii_digit() {
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    i = save;
                }
            }
            let text = &src[start..i];
            let v = text
                .parse()
                .map_err(|_| EngineError::Parse(format!("bad number {text:?} at {start}")))?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else if "+-*/()[],=".contains(c) {
            out.push((i, Tok::Sym(c)));
            i += 1;
        } else {
            return Err(EngineError::Parse(format!("unexpected {c:?} at {i}")));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

/// A call argument: positional expression or `name=expr`.
enum Arg {
    Pos(Expr),
    Named(String, Expr),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn err(&self, msg: impl Into<String>) -> EngineError {
        let at = self.toks.get(self.pos).map_or(usize::MAX, |(p, _)| *p);
        if at == usize::MAX {
            EngineError::Parse(format!("{} at end of input", msg.into()))
        } else {
            EngineError::Parse(format!("{} at {at}", msg.into()))
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), EngineError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected {c:?}")))
        }
    }

    fn expr(&mut self) -> Result<Expr, EngineError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                BinOp::Add
            } else if self.eat('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, EngineError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                BinOp::Mul
            } else if self.eat('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, EngineError> {
        if self.eat('-') {
            return Ok(match self.unary()? {
                Expr::Const(c) => Expr::Const(-c),
                e => Expr::Neg(Box::new(e)),
            });
        }
        let mut e = self.primary()?;
        while self.eat('[') {
            let i = self.integer()?;
            self.expect(']')?;
            e = Expr::Component(Box::new(e), i as usize);
        }
        Ok(e)
    }

    fn integer(&mut self) -> Result<i64, EngineError> {
        let neg = self.eat('-');
        match self.peek().cloned() {
            Some(Tok::Num(v)) if v.fract() == 0.0 => {
                self.pos += 1;
                Ok(if neg { -(v as i64) } else { v as i64 })
            }
            _ => Err(self.err("expected an integer")),
        }
    }

    fn primary(&mut self) -> Result<Expr, EngineError> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Const(v))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Sym('[')) => {
                self.pos += 1;
                let mut items = vec![self.expr()?];
                while self.eat(',') {
                    items.push(self.expr()?);
                }
                self.expect(']')?;
                Ok(Expr::Stack(items))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.eat('(') {
                    let args = self.args()?;
                    build_call(&name, args).map_err(|m| self.err(m))
                } else {
                    match name.as_str() {
                        "x" | "frac" => Ok(Expr::Coord(0)),
                        "y" => Ok(Expr::Coord(1)),
                        "iid" => Ok(Expr::Increment { dim: 1, law: None }),
                        other => Err(self.err(format!("unknown identifier {other:?}"))),
                    }
                }
            }
            _ => Err(self.err("expected an expression")),
        }
    }

    fn args(&mut self) -> Result<Vec<Arg>, EngineError> {
        let mut args = Vec::new();
        if self.eat(')') {
            return Ok(args);
        }
        loop {
            let named = match (self.toks.get(self.pos), self.toks.get(self.pos + 1)) {
                (Some((_, Tok::Ident(n))), Some((_, Tok::Sym('=')))) => Some(n.clone()),
                _ => None,
            };
            if let Some(n) = named {
                self.pos += 2;
                args.push(Arg::Named(n, self.expr()?));
            } else if let Some(Tok::Ident(n)) = self.peek().cloned() {
                // bare law names inside iid(...)
                if n.parse::<IncrementLaw>().is_ok()
                    && matches!(self.toks.get(self.pos + 1), Some((_, Tok::Sym(',' | ')'))))
                {
                    self.pos += 1;
                    args.push(Arg::Named(format!("law:{n}"), Expr::Const(0.0)));
                } else {
                    args.push(Arg::Pos(self.expr()?));
                }
            } else {
                args.push(Arg::Pos(self.expr()?));
            }
            if self.eat(')') {
                return Ok(args);
            }
            self.expect(',')?;
        }
    }
}

fn number(e: &Expr) -> Result<f64, String> {
    match e {
        Expr::Const(c) => Ok(*c),
        other => Err(format!("expected a number, got {other}")),
    }
}

fn vector_literal(e: &Expr) -> Result<Vector, String> {
    match e {
        Expr::Const(c) => Ok(Vector::scalar(*c)),
        Expr::Stack(items) if !items.is_empty() && items.len() <= crate::vector::MAX_DIM => {
            let vals: Result<Vec<f64>, String> = items.iter().map(number).collect();
            Ok(Vector::from_slice(&vals?))
        }
        other => Err(format!("expected a vector literal, got {other}")),
    }
}

fn build_call(name: &str, args: Vec<Arg>) -> Result<Expr, String> {
    let mut pos = Vec::new();
    let mut named = Vec::new();
    for a in args {
        match a {
            Arg::Pos(e) => pos.push(e),
            Arg::Named(n, e) => named.push((n, e)),
        }
    }
    let take_named = |key: &str| named.iter().find(|(n, _)| n == key).map(|(_, e)| e.clone());
    let arity = |n: usize| {
        if pos.len() == n {
            Ok(())
        } else {
            Err(format!(
                "{name} takes {n} positional argument(s), got {}",
                pos.len()
            ))
        }
    };
    let unary = |ctor: fn(Box<Expr>) -> Expr| -> Result<Expr, String> {
        arity(1)?;
        Ok(ctor(Box::new(pos[0].clone())))
    };
    match name {
        "indicator" => {
            if pos.len() != 2 && pos.len() != 3 {
                return Err("indicator takes (lo, hi) or (lo, hi, coord)".into());
            }
            let (lo, hi) = (number(&pos[0])?, number(&pos[1])?);
            let coord = if pos.len() == 3 {
                number(&pos[2])? as usize
            } else {
                0
            };
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(format!("empty interval [{lo}, {hi})"));
            }
            Ok(Expr::Indicator { lo, hi, coord })
        }
        "rect" => {
            arity(4)?;
            Ok(Expr::Rect {
                x0: number(&pos[0])?,
                x1: number(&pos[1])?,
                y0: number(&pos[2])?,
                y1: number(&pos[3])?,
            })
        }
        "coord" => {
            arity(1)?;
            Ok(Expr::Coord(number(&pos[0])? as usize))
        }
        "iid" => {
            let law = named
                .iter()
                .find_map(|(n, _)| n.strip_prefix("law:"))
                .map(|l| l.parse::<IncrementLaw>().map_err(|e| e.to_string()))
                .transpose()?;
            let dim = match take_named("d") {
                Some(e) => number(&e)? as usize,
                None => 1,
            };
            if !pos.is_empty() {
                return Err("iid takes a law name and d=<dim>".into());
            }
            Ok(Expr::Increment { dim, law })
        }
        "pow" => {
            arity(2)?;
            let k = number(&pos[1])?;
            if k.fract() != 0.0 {
                return Err(format!("pow exponent must be an integer, got {k}"));
            }
            Ok(Expr::Pow(Box::new(pos[0].clone()), k as i32))
        }
        "floor" => unary(Expr::Floor),
        "recip" => unary(Expr::Recip),
        "abs" => unary(Expr::Abs),
        "cob" => unary(Expr::Coboundary),
        "cobdrift" => {
            let h = take_named("h")
                .or_else(|| pos.first().cloned())
                .ok_or("cobdrift needs h=<expr>")?;
            let c = take_named("c")
                .or_else(|| pos.get(1).cloned())
                .ok_or("cobdrift needs c=<vector>")?;
            Ok(Expr::CobDrift {
                h: Box::new(h),
                drift: vector_literal(&c)?,
            })
        }
        other => Err(format!("unknown function {other:?}")),
    }
}

pub fn parse_expr(src: &str) -> Result<Expr, EngineError> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(p.err("trailing input"));
    }
    e.dim()?;
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_indicator() {
        let e = parse_expr("indicator(0,0.5)-0.5").unwrap();
        assert_eq!(
            e,
            Expr::Binary(
                BinOp::Sub,
                Box::new(Expr::Indicator {
                    lo: 0.0,
                    hi: 0.5,
                    coord: 0
                }),
                Box::new(Expr::Const(0.5))
            )
        );
    }

    #[test]
    fn cobdrift_with_named_args() {
        let e = parse_expr("cobdrift(h=pow(frac,2),c=[1,0])").unwrap();
        assert_eq!(e.dim().unwrap(), 2);
        match e {
            Expr::CobDrift { h, drift } => {
                assert_eq!(*h, Expr::Pow(Box::new(Expr::Coord(0)), 2));
                assert_eq!(drift.as_slice(), &[1.0, 0.0]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn iid_law_and_dim() {
        assert_eq!(
            parse_expr("iid(rademacher,d=2)").unwrap(),
            Expr::Increment {
                dim: 2,
                law: Some(IncrementLaw::Rademacher)
            }
        );
        assert_eq!(
            parse_expr("iid(d=3)").unwrap(),
            Expr::Increment { dim: 3, law: None }
        );
    }

    #[test]
    fn precedence_and_unary_minus() {
        let e = parse_expr("-pow(floor(recip(1-x)),2)*indicator(0.5,1)").unwrap();
        assert_eq!(e.dim().unwrap(), 1);
        assert!(matches!(e, Expr::Binary(BinOp::Mul, _, _)));
        assert_eq!(parse_expr("-2").unwrap(), Expr::Const(-2.0));
        assert_eq!(parse_expr("1e-3").unwrap(), Expr::Const(1e-3));
    }

    #[test]
    fn display_round_trips() {
        for src in [
            "indicator(0,0.5)-0.5",
            "cobdrift(h=pow(frac,2),c=[1,0])",
            "[x, y] * 2 - [1, 1]",
            "iid(cauchy,d=2)[1]",
            "cob(indicator(0.2,0.7))",
        ] {
            let e = parse_expr(src).unwrap();
            assert_eq!(parse_expr(&e.to_string()).unwrap(), e, "{src}");
        }
    }

    #[test]
    fn errors_name_the_problem() {
        assert!(matches!(
            parse_expr("indicator(0)"),
            Err(EngineError::Parse(_))
        ));
        assert!(matches!(parse_expr("foo(1)"), Err(EngineError::Parse(_))));
        assert!(matches!(
            parse_expr("[1,2]+[1,2,3]"),
            Err(EngineError::Dimension(_))
        ));
        assert!(matches!(parse_expr("x +"), Err(EngineError::Parse(_))));
        assert!(matches!(parse_expr("x $"), Err(EngineError::Parse(_))));
    }
}
