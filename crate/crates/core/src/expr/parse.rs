//! Tokenizer and recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr   := ['+'|'-'] term (('+'|'-') term)*
//! term   := unary (('*'|'/') unary)*
//! unary  := '-' unary | factor
//! factor := base ('^' nat | '^' '(' nat ')')?
//! base   := nat | 'i' | ident | '(' expr ')'
//! ident  := ('p'|'q'|'x'|'z') nat | 't' nat? | 'E' nat? | 'hbar'
//! ```
//! Division is allowed only by a nonzero rational constant.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::series::{Role, Scalar, Var, VarSet};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(Scalar),
    Var(Var),
    Hbar,
    Neg(Box<Expr>),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Div(Box<Expr>, BigRational),
    Pow(Box<Expr>, u32),
}

impl Expr {
    /// Top-level summands (a non-sum counts as one).
    pub fn summands(&self) -> &[Expr] {
        match self {
            Expr::Sum(v) => v,
            other => std::slice::from_ref(other),
        }
    }

    pub fn contains_hbar(&self) -> bool {
        match self {
            Expr::Hbar => true,
            Expr::Num(_) | Expr::Var(_) => false,
            Expr::Neg(e) | Expr::Div(e, _) | Expr::Pow(e, _) => e.contains_hbar(),
            Expr::Sum(v) | Expr::Product(v) => v.iter().any(Expr::contains_hbar),
        }
    }

    /// Value of a variable-free, ħ-free expression.
    pub fn constant_value(&self) -> Option<Scalar> {
        match self {
            Expr::Num(c) => Some(c.clone()),
            Expr::Var(_) | Expr::Hbar => None,
            Expr::Neg(e) => e.constant_value().map(|c| -c),
            Expr::Sum(v) => v.iter().try_fold(Scalar::zero(), |acc, e| Some(&acc + &e.constant_value()?)),
            Expr::Product(v) => v.iter().try_fold(Scalar::one(), |acc, e| Some(&acc * &e.constant_value()?)),
            Expr::Div(e, d) => Some(&e.constant_value()? / &Scalar::real(d.clone())),
            Expr::Pow(e, n) => Some(e.constant_value()?.pow(*n)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(BigInt),
    Decimal,
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

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str, line0: usize) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let (mut line, mut col) = (line0, 1usize);
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                Tok::Decimal
            } else {
                let s: String = chars[start..i].iter().collect();
                Tok::Int(s.parse().unwrap())
            }
        } else if c.is_ascii_alphabetic() {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else {
            i += 1;
            match c {
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' | '·' => Tok::Star,
                '/' => Tok::Slash,
                '^' => Tok::Caret,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                _ => return Err(Error::parse(tl, tc, format!("unexpected character `{c}`"))),
            }
        };
        col += i - start;
        out.push(Token { tok, line: tl, col: tc });
    }
    out.push(Token { tok: Tok::End, line, col });
    Ok(out)
}

/// Resolves an identifier to a variable (`None` for `hbar`).
pub fn resolve_ident(name: &str) -> Option<Option<Var>> {
    if name == "hbar" {
        return Some(None);
    }
    let (head, digits) = name.split_at(name.find(|c: char| c.is_ascii_digit()).unwrap_or(name.len()));
    if !digits.chars().all(|c| c.is_ascii_digit()) || digits.starts_with('0') && digits.len() > 1 {
        return None;
    }
    let index: Option<u16> = if digits.is_empty() { None } else { digits.parse().ok() };
    let role = match head {
        "p" => Role::Momentum,
        "q" => Role::CoMomentum,
        "x" => Role::Position,
        "z" => Role::Fiber,
        "t" => Role::Time,
        "E" => Role::Energy,
        _ => return None,
    };
    match (role, index) {
        (Role::Time | Role::Energy, None) => Some(Some(Var::new(role, 0))),
        (Role::Time | Role::Energy, Some(0)) => None,
        (_, Some(i)) if i >= 1 => Some(Some(Var::new(role, i))),
        _ => None,
    }
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    vars: &'a VarSet,
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if t.tok != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, t: &Token, msg: impl Into<String>) -> Result<T> {
        Err(Error::parse(t.line, t.col, msg))
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut terms = Vec::new();
        let mut negate = false;
        match self.peek().tok {
            Tok::Plus => {
                self.next();
            }
            Tok::Minus => {
                self.next();
                negate = true;
            }
            _ => {}
        }
        loop {
            let t = self.term()?;
            terms.push(if negate { Expr::Neg(Box::new(t)) } else { t });
            match self.peek().tok {
                Tok::Plus => negate = false,
                Tok::Minus => negate = true,
                _ => break,
            }
            self.next();
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { Expr::Sum(terms) })
    }

    fn term(&mut self) -> Result<Expr> {
        let mut factors = vec![self.unary()?];
        loop {
            match self.peek().tok {
                Tok::Star => {
                    self.next();
                    factors.push(self.unary()?);
                }
                Tok::Slash => {
                    let at = self.next();
                    let den = self.unary()?;
                    let Some(d) = den.constant_value() else {
                        return self.err(&at, "division by a non-constant expression");
                    };
                    if !d.is_real() {
                        return self.err(&at, "division by a non-rational constant");
                    }
                    if d.is_zero() {
                        return self.err(&at, "division by zero");
                    }
                    let num = if factors.len() == 1 { factors.pop().unwrap() } else { Expr::Product(std::mem::take(&mut factors)) };
                    factors.push(Expr::Div(Box::new(num), d.re().clone()));
                }
                _ => break,
            }
        }
        Ok(if factors.len() == 1 { factors.pop().unwrap() } else { Expr::Product(factors) })
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek().tok == Tok::Minus {
            self.next();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.factor()
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.base()?;
        if self.peek().tok != Tok::Caret {
            return Ok(base);
        }
        self.next();
        let paren = self.peek().tok == Tok::LParen;
        if paren {
            self.next();
        }
        let t = self.next();
        let n = match t.tok {
            Tok::Int(ref n) => n.to_u32().ok_or_else(|| Error::parse(t.line, t.col, "exponent too large"))?,
            Tok::Minus => return self.err(&t, "negative exponent"),
            Tok::Decimal => return self.err(&t, "non-integer exponent"),
            _ => return self.err(&t, "exponent must be a non-negative integer literal"),
        };
        if paren {
            let close = self.next();
            match close.tok {
                Tok::RParen => {}
                Tok::Slash => return self.err(&close, "non-integer exponent"),
                _ => return self.err(&close, "expected `)`"),
            }
        }
        Ok(Expr::Pow(Box::new(base), n))
    }

    fn base(&mut self) -> Result<Expr> {
        let t = self.next();
        match t.tok {
            Tok::Int(n) => Ok(Expr::Num(Scalar::from_bigint(n))),
            Tok::Decimal => self.err(&t, "floating-point literals are not allowed"),
            Tok::Ident(ref name) if name == "i" => Ok(Expr::Num(Scalar::i())),
            Tok::Ident(ref name) => match resolve_ident(name) {
                Some(None) => Ok(Expr::Hbar),
                Some(Some(v)) if self.vars.contains(v) => Ok(Expr::Var(v)),
                _ => self.err(&t, format!("unknown identifier `{name}`")),
            },
            Tok::LParen => {
                let e = self.expr()?;
                let close = self.next();
                if close.tok != Tok::RParen {
                    return self.err(&close, "expected `)`");
                }
                Ok(e)
            }
            Tok::End => self.err(&t, "unexpected end of input"),
            _ => self.err(&t, "expected a number, variable or `(`"),
        }
    }
}

/// Parses `text` with identifiers restricted to `vars` (plus `hbar` and `i`).
pub fn parse(text: &str, vars: &VarSet) -> Result<Expr> {
    parse_at(text, vars, 1)
}

/// As [`parse`], reporting line numbers starting at `first_line`.
pub fn parse_at(text: &str, vars: &VarSet, first_line: usize) -> Result<Expr> {
    let toks = lex(text, first_line)?;
    let mut p = Parser { toks, pos: 0, vars };
    let e = p.expr()?;
    let t = p.next();
    if t.tok != Tok::End {
        return p.err(&t, "unexpected token after expression");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps() -> VarSet {
        VarSet::phase_space(1, 1)
    }

    #[test]
    fn two_summands() {
        let e = parse("p1*x1 + (1/2)*p1^2", &ps()).unwrap();
        assert_eq!(e.summands().len(), 2);
    }

    #[test]
    fn negative_exponent_rejected() {
        let err = parse("x1^(-1)", &ps()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, col: 5, ref msg } if msg.contains("negative")), "{err}");
    }

    #[test]
    fn unknown_identifier() {
        let err = parse("p1*phi", &ps()).unwrap_err();
        assert!(matches!(err, Error::Parse { col: 4, ref msg, .. } if msg.contains("unknown identifier")));
        assert!(parse("x2", &ps()).is_err());
    }

    #[test]
    fn division_rules() {
        assert!(parse("x1/2", &ps()).is_ok());
        assert!(parse("x1/(3 - 1)", &ps()).is_ok());
        assert!(parse("1/x1", &ps()).is_err());
        assert!(parse("x1/0", &ps()).is_err());
        assert!(parse("x1/i", &ps()).is_err());
    }

    #[test]
    fn other_diagnostics() {
        assert!(parse("x1^1.5", &ps()).is_err());
        assert!(parse("x1^p1", &ps()).is_err());
        assert!(parse("(x1", &ps()).is_err());
        assert!(parse("x1 x1", &ps()).is_err());
        assert!(parse("2.5*x1", &ps()).is_err());
        let err = parse("x1 +\n  $", &ps()).unwrap_err();
        assert_eq!(err, Error::parse(2, 3, "unexpected character `$`"));
    }

    #[test]
    fn identifiers() {
        assert_eq!(resolve_ident("t"), Some(Some(Var::t(0))));
        assert_eq!(resolve_ident("E2"), Some(Some(Var::e(2))));
        assert_eq!(resolve_ident("hbar"), Some(None));
        assert_eq!(resolve_ident("p0"), None);
        assert_eq!(resolve_ident("p"), None);
        assert_eq!(resolve_ident("x01"), None);
    }
}
