//! Arithmetic expressions for user-supplied charts.
//!
//! Grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Functions: `sin cos tan sinh cosh tanh exp log sqrt atan`. `pi` and `e`
//! are predefined; other identifiers must be chart parameters or constants.

use std::collections::BTreeMap;
use std::fmt;

use qgv_core::dual::Scalar;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{message} at offset {offset} in `{source_text}`")]
pub struct ParseError {
    pub message: String,
    pub offset: usize,
    pub source_text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Log,
    Sqrt,
    Atan,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sqrt" => Func::Sqrt,
            "atan" => Func::Atan,
            _ => return None,
        })
    }

    fn apply<S: Scalar>(self, x: &S) -> S {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Tanh => x.tanh(),
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
            Func::Sqrt => x.sqrt(),
            Func::Atan => x.atan(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Atan => "atan",
        }
    }
}

/// A parsed expression. Variables are resolved to parameter slots.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Parse `text` with the given parameter names and named constants.
    pub fn parse(
        text: &str,
        params: &[String],
        constants: &BTreeMap<String, f64>,
    ) -> Result<Expr, ParseError> {
        let tokens = lex(text)?;
        let mut p = Parser {
            text,
            tokens,
            pos: 0,
            params,
            constants,
        };
        let e = p.expr()?;
        if let Some(t) = p.peek() {
            return Err(p.error(format!("unexpected {}", t.kind), t.offset));
        }
        Ok(e.fold())
    }

    pub fn eval<S: Scalar>(&self, vars: &[S]) -> S {
        match self {
            Expr::Num(c) => S::constant(*c),
            Expr::Var(k) => vars[*k].clone(),
            Expr::Neg(a) => -a.eval(vars),
            Expr::Add(a, b) => a.eval(vars) + b.eval(vars),
            Expr::Sub(a, b) => a.eval(vars) - b.eval(vars),
            Expr::Mul(a, b) => a.eval(vars) * b.eval(vars),
            Expr::Div(a, b) => a.eval(vars) / b.eval(vars),
            Expr::Pow(a, b) => {
                let base = a.eval(vars);
                match **b {
                    Expr::Num(c) if c.fract() == 0.0 && c.abs() <= i32::MAX as f64 => {
                        base.powi(c as i32)
                    }
                    Expr::Num(c) => base.powf(c),
                    _ => base.pow(&b.eval(vars)),
                }
            }
            Expr::Call(f, a) => f.apply(&a.eval(vars)),
        }
    }

    /// Collapse constant subtrees.
    fn fold(self) -> Expr {
        use Expr::*;
        let bin = |a: Expr, b: Expr, op: fn(Box<Expr>, Box<Expr>) -> Expr| {
            let (a, b) = (a.fold(), b.fold());
            let e = op(Box::new(a), Box::new(b));
            match &e {
                Add(x, y) | Sub(x, y) | Mul(x, y) | Div(x, y) | Pow(x, y) => {
                    if let (Num(_), Num(_)) = (&**x, &**y) {
                        return Num(e.eval::<f64>(&[]));
                    }
                    e
                }
                _ => e,
            }
        };
        match self {
            Neg(a) => match a.fold() {
                Num(c) => Num(-c),
                a => Neg(Box::new(a)),
            },
            Add(a, b) => bin(*a, *b, Add),
            Sub(a, b) => bin(*a, *b, Sub),
            Mul(a, b) => bin(*a, *b, Mul),
            Div(a, b) => bin(*a, *b, Div),
            Pow(a, b) => bin(*a, *b, Pow),
            Call(f, a) => match a.fold() {
                Num(c) => Num(f.apply(&c)),
                a => Call(f, Box::new(a)),
            },
            e => e,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(c) => write!(f, "{c}"),
            Expr::Var(k) => write!(f, "${k}"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Num(f64),
    Ident(String),
    Op(char),
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Num(x) => write!(f, "number {x}"),
            Kind::Ident(s) => write!(f, "identifier `{s}`"),
            Kind::Op(c) => write!(f, "`{c}`"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: Kind,
    offset: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let err = |message: String, offset| ParseError {
        message,
        offset,
        source_text: text.to_string(),
    };
    let bytes = text.as_bytes();
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
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s = &text[start..i];
            let v: f64 = s
                .parse()
                .map_err(|_| err(format!("bad number `{s}`"), start))?;
            out.push(Token {
                kind: Kind::Num(v),
                offset: start,
            });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                kind: Kind::Ident(text[start..i].to_string()),
                offset: start,
            });
        } else if "+-*/^()".contains(c) {
            out.push(Token {
                kind: Kind::Op(c),
                offset: i,
            });
            i += 1;
        } else {
            return Err(err(format!("unexpected character `{c}`"), i));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    text: &'a str,
    tokens: Vec<Token>,
    pos: usize,
    params: &'a [String],
    constants: &'a BTreeMap<String, f64>,
}

impl Parser<'_> {
    fn error(&self, message: String, offset: usize) -> ParseError {
        ParseError {
            message,
            offset,
            source_text: self.text.to_string(),
        }
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, op: char) -> bool {
        if matches!(self.peek(), Some(Token { kind: Kind::Op(c), .. }) if *c == op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn end(&self) -> usize {
        self.text.len()
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    // right associative, binds tighter than unary minus on its left: -x^2 = -(x^2)
    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat('^') {
            return Ok(Expr::Pow(Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error("unexpected end of expression".into(), self.end()));
        };
        self.pos += 1;
        match tok.kind {
            Kind::Num(v) => Ok(Expr::Num(v)),
            Kind::Op('(') => {
                let e = self.expr()?;
                if !self.eat(')') {
                    let at = self.peek().map_or(self.end(), |t| t.offset);
                    return Err(self.error("expected `)`".into(), at));
                }
                Ok(e)
            }
            Kind::Ident(name) => {
                if let Some(f) = Func::lookup(&name) {
                    if !self.eat('(') {
                        return Err(self.error(
                            format!("function `{name}` needs an argument in parentheses"),
                            tok.offset,
                        ));
                    }
                    let arg = self.expr()?;
                    if !self.eat(')') {
                        let at = self.peek().map_or(self.end(), |t| t.offset);
                        return Err(self.error("expected `)`".into(), at));
                    }
                    return Ok(Expr::Call(f, Box::new(arg)));
                }
                if let Some(k) = self.params.iter().position(|p| *p == name) {
                    return Ok(Expr::Var(k));
                }
                if let Some(c) = self.constants.get(&name) {
                    return Ok(Expr::Num(*c));
                }
                match name.as_str() {
                    "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                    "e" => Ok(Expr::Num(std::f64::consts::E)),
                    _ => Err(self.error(format!("unknown identifier `{name}`"), tok.offset)),
                }
            }
            Kind::Op(c) => Err(self.error(format!("unexpected `{c}`"), tok.offset)),
        }
    }
}
