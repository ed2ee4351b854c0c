//! Real expressions in one variable `x`, for coefficient functions given as
//! text.
//!
//! Grammar (whitespace is ignored, `−` is accepted for `-`):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | 'x' | 'pi' | 'e' | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-2^2` is
//! `-4` and `2^-1` is `0.5`. There is no implicit multiplication.

use std::fmt;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
    Tanh,
    Abs,
    Erf,
}

impl Func {
    const ALL: [Func; 11] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Abs,
        Func::Erf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Abs => "abs",
            Func::Erf => "erf",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expression {
    Num(f64),
    X,
    Pi,
    E,
    Neg(Box<Expression>),
    Bin(BinOp, Box<Expression>, Box<Expression>),
    Call(Func, Box<Expression>),
}

/// Fully parenthesised form that parses back to the same tree.
impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expression::Num(v) => write!(f, "{v:?}"),
            Expression::X => f.write_str("x"),
            Expression::Pi => f.write_str("pi"),
            Expression::E => f.write_str("e"),
            Expression::Neg(a) => write!(f, "(-{a})"),
            Expression::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expression::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("syntax error at offset {offset}: {message}")]
pub struct ParseError {
    /// Character offset into the source.
    pub offset: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("{message} in `{subexpr}`")]
pub struct EvalError {
    pub message: String,
    /// The sub-expression whose value is undefined.
    pub subexpr: String,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '+' | '*' | '/' | '^' | '-' => {
                i += 1;
                Tok::Op(c)
            }
            '−' => {
                i += 1;
                Tok::Op('-')
            }
            '(' => {
                i += 1;
                Tok::LParen
            }
            ')' => {
                i += 1;
                Tok::RParen
            }
            c if c.is_ascii_digit() || c == '.' => {
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                // exponent only when digits follow, so "2e" stays two tokens
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut k = i + 1;
                    if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].is_ascii_digit() {
                        i = k;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let v: f64 = text.parse().map_err(|_| ParseError {
                    offset: start,
                    message: format!("malformed number `{text}`"),
                })?;
                if !v.is_finite() {
                    return Err(ParseError {
                        offset: start,
                        message: format!("number `{text}` is out of range"),
                    });
                }
                Tok::Num(v)
            }
            c if c.is_alphabetic() || c == '_' => {
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                Tok::Ident(chars[start..i].iter().collect())
            }
            other => {
                return Err(ParseError {
                    offset: start,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        out.push((start, tok));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.0)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn eat_op(&mut self, ops: &[char]) -> Option<char> {
        match self.peek() {
            Some(Tok::Op(c)) if ops.contains(c) => {
                let c = *c;
                self.pos += 1;
                Some(c)
            }
            _ => None,
        }
    }

    fn expr(&mut self) -> Result<Expression, ParseError> {
        let mut lhs = self.term()?;
        while let Some(c) = self.eat_op(&['+', '-']) {
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expression::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expression, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(c) = self.eat_op(&['*', '/']) {
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expression::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expression, ParseError> {
        if self.eat_op(&['-']).is_some() {
            return Ok(Expression::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expression, ParseError> {
        let base = self.atom()?;
        if self.eat_op(&['^']).is_some() {
            let exp = self.unary()?;
            return Ok(Expression::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn expect_rparen(&mut self, open: usize) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::RParen) => {
                self.pos += 1;
                Ok(())
            }
            Some(_) => self.err(format!("expected `)` to close `(` at offset {open}")),
            None => self.err(format!("unbalanced parenthesis: `(` at offset {open} is never closed")),
        }
    }

    fn atom(&mut self) -> Result<Expression, ParseError> {
        let offset = self.offset();
        let Some(tok) = self.peek().cloned() else {
            return self.err("unexpected end of input");
        };
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Expression::Num(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect_rparen(offset)?;
                Ok(inner)
            }
            Tok::Ident(name) => match name.as_str() {
                "x" => Ok(Expression::X),
                "pi" => Ok(Expression::Pi),
                "e" => Ok(Expression::E),
                _ => {
                    let Some(func) = Func::from_name(&name) else {
                        self.pos -= 1;
                        return self.err(format!("unknown identifier `{name}`"));
                    };
                    let open = self.offset();
                    if self.peek() != Some(&Tok::LParen) {
                        return self.err(format!("expected `(` after `{name}`"));
                    }
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect_rparen(open)?;
                    Ok(Expression::Call(func, Box::new(arg)))
                }
            },
            Tok::RParen => {
                self.pos -= 1;
                self.err("unbalanced parenthesis: unexpected `)`")
            }
            Tok::Op(c) => {
                self.pos -= 1;
                self.err(format!("unexpected operator `{c}`"))
            }
        }
    }
}

/// Parses `source` into an expression tree.
pub fn parse(source: &str) -> Result<Expression, ParseError> {
    let toks = tokenize(source)?;
    let end = source.chars().count();
    if toks.is_empty() {
        return Err(ParseError {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let mut p = Parser { toks, pos: 0, end };
    let e = p.expr()?;
    match p.peek() {
        None => Ok(e),
        Some(Tok::RParen) => p.err("unbalanced parenthesis: unexpected `)`"),
        Some(Tok::Num(_) | Tok::Ident(_) | Tok::LParen) => {
            p.err("unexpected token (implicit multiplication is not supported)")
        }
        Some(_) => p.err("unexpected trailing input"),
    }
}

fn domain(message: &str, e: &Expression) -> EvalError {
    EvalError {
        message: message.into(),
        subexpr: e.to_string(),
    }
}

/// Value of `e` at `x`; undefined operations are errors, never NaN.
pub fn evaluate(e: &Expression, x: f64) -> Result<f64, EvalError> {
    let v = match e {
        Expression::Num(v) => *v,
        Expression::X => x,
        Expression::Pi => std::f64::consts::PI,
        Expression::E => std::f64::consts::E,
        Expression::Neg(a) => -evaluate(a, x)?,
        Expression::Bin(op, a, b) => {
            let (l, r) = (evaluate(a, x)?, evaluate(b, x)?);
            match op {
                BinOp::Add => l + r,
                BinOp::Sub => l - r,
                BinOp::Mul => l * r,
                BinOp::Div => {
                    if r == 0.0 {
                        return Err(domain("division by zero", e));
                    }
                    l / r
                }
                BinOp::Pow => {
                    if l < 0.0 && r.fract() != 0.0 {
                        return Err(domain("negative base with non-integer exponent", e));
                    }
                    if l == 0.0 && r < 0.0 {
                        return Err(domain("zero raised to a negative power", e));
                    }
                    l.powf(r)
                }
            }
        }
        Expression::Call(func, a) => {
            let v = evaluate(a, x)?;
            match func {
                Func::Sin => v.sin(),
                Func::Cos => v.cos(),
                Func::Tan => v.tan(),
                Func::Exp => v.exp(),
                Func::Log => {
                    if v <= 0.0 {
                        return Err(domain("logarithm of a non-positive number", e));
                    }
                    v.ln()
                }
                Func::Sqrt => {
                    if v < 0.0 {
                        return Err(domain("square root of a negative number", e));
                    }
                    v.sqrt()
                }
                Func::Sinh => v.sinh(),
                Func::Cosh => v.cosh(),
                Func::Tanh => v.tanh(),
                Func::Abs => v.abs(),
                Func::Erf => libm::erf(v),
            }
        }
    };
    if !v.is_finite() {
        return Err(domain("overflow", e));
    }
    Ok(v)
}

impl Expression {
    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        evaluate(self, x)
    }
}
