//! Arithmetic expressions on the left-hand side of a derivation.

use std::collections::BTreeSet;
use std::fmt;

use super::Placeholder;
use crate::value::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    /// Non-negative literal; negation is always an explicit `Neg` node.
    Num(Value),
    Var(Placeholder),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn bin(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Bin(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn num(n: i64) -> Expr {
        debug_assert!(n >= 0);
        Expr::Num(Value::from_integer(n))
    }

    /// Placeholders referenced by this expression.
    pub fn vars(&self) -> BTreeSet<Placeholder> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    /// Placeholders in left-to-right order, with repeats.
    pub fn var_occurrences(&self) -> Vec<Placeholder> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Var(p) = e {
                out.push(*p);
            }
        });
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Placeholder>) {
        self.walk(&mut |e| {
            if let Expr::Var(p) = e {
                out.insert(*p);
            }
        });
    }

    fn walk(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Num(_) | Expr::Var(_) => {}
            Expr::Neg(inner) => inner.walk(f),
            Expr::Bin(_, l, r) => {
                l.walk(f);
                r.walk(f);
            }
        }
    }

    /// Evaluates with `lookup` supplying placeholder values. Returns `Err`
    /// with the offending placeholder if one is unbound, or `Ok(None)` on
    /// division by zero.
    pub fn eval(&self, lookup: &dyn Fn(Placeholder) -> Option<Value>) -> Result<Option<Value>, Placeholder> {
        Ok(match self {
            Expr::Num(v) => Some(v.clone()),
            Expr::Var(p) => Some(lookup(*p).ok_or(*p)?),
            Expr::Neg(inner) => inner.eval(lookup)?.map(|v| -v),
            Expr::Bin(op, l, r) => {
                let (Some(a), Some(b)) = (l.eval(lookup)?, r.eval(lookup)?) else {
                    return Ok(None);
                };
                match op {
                    BinOp::Add => Some(&a + &b),
                    BinOp::Sub => Some(&a - &b),
                    BinOp::Mul => Some(&a * &b),
                    BinOp::Div => a.checked_div(&b),
                }
            }
        })
    }

    /// Renders with minimal parentheses; `var` chooses the text for each
    /// placeholder occurrence.
    pub fn render_with(&self, var: &dyn Fn(Placeholder) -> String) -> String {
        let mut out = String::new();
        self.write(&mut out, var);
        out
    }

    fn write(&self, out: &mut String, var: &dyn Fn(Placeholder) -> String) {
        match self {
            Expr::Num(v) => out.push_str(&v.to_string()),
            Expr::Var(p) => out.push_str(&var(*p)),
            Expr::Neg(inner) => {
                out.push('-');
                let atomic = matches!(**inner, Expr::Num(_) | Expr::Var(_) | Expr::Neg(_));
                if atomic {
                    inner.write(out, var);
                } else {
                    out.push('(');
                    inner.write(out, var);
                    out.push(')');
                }
            }
            Expr::Bin(op, l, r) => {
                let wrap_left = matches!(**l, Expr::Bin(lop, ..) if lop.precedence() < op.precedence());
                let wrap_right = matches!(**r, Expr::Bin(rop, ..) if rop.precedence() <= op.precedence());
                write_operand(l, wrap_left, out, var);
                out.push(' ');
                out.push(op.symbol());
                out.push(' ');
                write_operand(r, wrap_right, out, var);
            }
        }
    }
}

fn write_operand(e: &Expr, wrap: bool, out: &mut String, var: &dyn Fn(Placeholder) -> String) {
    if wrap {
        out.push('(');
        e.write(out, var);
        out.push(')');
    } else {
        e.write(out, var);
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_with(&|p| p.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Token {
    Num(Value),
    Var(Placeholder),
    Op(char),
    LParen,
    RParen,
}

/// Parses a derivation left-hand side after normalization. Returns a short
/// reason on failure.
pub(crate) fn parse_expr(src: &str) -> Result<Expr, String> {
    let normalized = normalize(src);
    let tokens = lex(&normalized)?;
    if tokens.is_empty() {
        return Err("empty expression".into());
    }
    let mut parser = ExprParser { tokens, pos: 0 };
    let expr = parser.sum()?;
    if parser.pos != parser.tokens.len() {
        return Err(format!("unexpected token at position {}", parser.pos));
    }
    Ok(expr)
}

/// Strips currency symbols and digit-grouping commas, maps typographic
/// operators to ASCII.
fn normalize(src: &str) -> String {
    let chars: Vec<char> = src.chars().collect();
    let mut out = String::with_capacity(src.len());
    for (i, &c) in chars.iter().enumerate() {
        match c {
            '$' | '€' | '£' => {}
            ',' => {
                let prev_digit = i > 0 && chars[i - 1].is_ascii_digit();
                let next_digit = chars.get(i + 1).is_some_and(|c| c.is_ascii_digit());
                if !(prev_digit && next_digit) {
                    out.push(c);
                }
            }
            '\u{2212}' | '\u{2013}' => out.push('-'),
            '\u{00d7}' => out.push('*'),
            '\u{00f7}' => out.push('/'),
            _ => out.push(c),
        }
    }
    out
}

fn lex(src: &str) -> Result<Vec<Token>, String> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' | b'-' | b'*' | b'/' => {
                tokens.push(Token::Op(c as char));
                i += 1;
            }
            b'(' => {
                tokens.push(Token::LParen);
                i += 1;
            }
            b')' => {
                tokens.push(Token::RParen);
                i += 1;
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                let lit = &src[start..i];
                let v = Value::parse_literal(lit).ok_or_else(|| format!("bad number {lit:?}"))?;
                tokens.push(Token::Num(v));
            }
            b'y' => {
                let start = i;
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                    i += 1;
                }
                let word = &src[start..i];
                let p = Placeholder::parse(word).ok_or_else(|| format!("bad placeholder {word:?}"))?;
                tokens.push(Token::Var(p));
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(format!("unexpected character {ch:?}"));
            }
        }
    }
    Ok(tokens)
}

struct ExprParser {
    tokens: Vec<Token>,
    pos: usize,
}

impl ExprParser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn sum(&mut self) -> Result<Expr, String> {
        let mut lhs = self.product()?;
        while let Some(Token::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' { BinOp::Add } else { BinOp::Sub };
            self.pos += 1;
            let rhs = self.product()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr, String> {
        let mut lhs = self.unary()?;
        while let Some(Token::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' { BinOp::Mul } else { BinOp::Div };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, String> {
        if let Some(Token::Op('-')) = self.peek() {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, String> {
        let tok = self.peek().cloned().ok_or("unexpected end of expression")?;
        self.pos += 1;
        match tok {
            Token::Num(v) => Ok(Expr::Num(v)),
            Token::Var(p) => Ok(Expr::Var(p)),
            Token::LParen => {
                let inner = self.sum()?;
                match self.peek() {
                    Some(Token::RParen) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    _ => Err("missing ')'".into()),
                }
            }
            Token::RParen => Err("unexpected ')'".into()),
            Token::Op(c) => Err(format!("unexpected operator '{c}'")),
        }
    }
}
