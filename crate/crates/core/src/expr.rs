//! A small expression language for user-supplied Lagrangians, domains,
//! terminal costs and cones.
//!
//! ```text
//! expr    := or
//! or      := and ("||" and)*
//! and     := cmp ("&&" cmp)*
//! cmp     := sum (("<" | "<=" | ">" | ">=" | "==" | "!=") sum)?
//! sum     := product (("+" | "-") product)*
//! product := unary (("*" | "/") unary)*
//! unary   := ("-" | "!") unary | power
//! power   := atom ("^" unary)?
//! atom    := number | name | name "(" expr ("," expr)* ")" | "(" expr ")"
//! ```
//!
//! Variables: `s`, `y1..yn`, `u1..um`, `y` and `u` (first components),
//! `ynorm`, `unorm` (Euclidean norms). Constants: `pi`, `e`, `inf`.
//! Functions: `abs sqrt exp ln log sin cos tan min max pow norm if`.
//! `if(c, a, b)` evaluates only the chosen branch. Comparisons and logic
//! yield 1 or 0; any nonzero value counts as true.

use crate::error::{BolzaError, Result};

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    S,
    Y(usize),
    U(usize),
    YNorm,
    UNorm,
    Neg(Box<Node>),
    Not(Box<Node>),
    Bin(Op, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
    If(Box<Node>, Box<Node>, Box<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Abs,
    Sqrt,
    Exp,
    Ln,
    Sin,
    Cos,
    Tan,
    Min,
    Max,
    Pow,
    Norm,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(&'static str),
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
    let b = src.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    const SYMS: [&str; 19] = [
        "<=", ">=", "==", "!=", "&&", "||", "<", ">", "+", "-", "*", "/", "^", "(", ")", ",", "!", "|", "=",
    ];
    while i < b.len() {
        let c = b[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && i + 1 < b.len() && (b[i + 1] as char).is_ascii_digit()) {
            let start = i;
            while i < b.len() && ((b[i] as char).is_ascii_digit() || b[i] == b'.') {
                i += 1;
            }
            if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                let save = i;
                i += 1;
                if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
                    i += 1;
                }
                if i < b.len() && (b[i] as char).is_ascii_digit() {
                    while i < b.len() && (b[i] as char).is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    i = save;
                }
            }
            let text = &src[start..i];
            let v: f64 = text
                .parse()
                .map_err(|_| BolzaError::Expr(format!("bad number `{text}`")))?;
            out.push(Tok::Num(v));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < b.len() && ((b[i] as char).is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push(Tok::Ident(src[start..i].to_string()));
            continue;
        }
        let rest = &src[i..];
        match SYMS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) if *s == "|" || *s == "=" => return Err(BolzaError::Expr(format!("unexpected `{s}` at {i}"))),
            Some(s) => {
                out.push(Tok::Sym(s));
                i += s.len();
            }
            None => return Err(BolzaError::Expr(format!("unexpected `{c}` at {i}"))),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    n: usize,
    m: usize,
    src: &'a str,
}

impl<'a> Parser<'a> {
    fn peek_sym(&self) -> Option<&'static str> {
        match self.toks.get(self.pos) {
            Some(Tok::Sym(s)) => Some(s),
            _ => None,
        }
    }

    fn eat(&mut self, sym: &str) -> bool {
        if self.peek_sym() == Some(sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, sym: &str) -> Result<()> {
        if self.eat(sym) {
            Ok(())
        } else {
            Err(BolzaError::Expr(format!("expected `{sym}` in `{}`", self.src)))
        }
    }

    fn binary_level(&mut self, ops: &[(&'static str, Op)], next: fn(&mut Self) -> Result<Node>) -> Result<Node> {
        let mut lhs = next(self)?;
        'outer: loop {
            for (sym, op) in ops {
                if self.eat(sym) {
                    let rhs = next(self)?;
                    lhs = Node::Bin(*op, Box::new(lhs), Box::new(rhs));
                    continue 'outer;
                }
            }
            return Ok(lhs);
        }
    }

    fn or(&mut self) -> Result<Node> {
        self.binary_level(&[("||", Op::Or)], Self::and)
    }

    fn and(&mut self) -> Result<Node> {
        self.binary_level(&[("&&", Op::And)], Self::cmp)
    }

    fn cmp(&mut self) -> Result<Node> {
        let lhs = self.sum()?;
        for (sym, op) in [
            ("<=", Op::Le),
            (">=", Op::Ge),
            ("==", Op::Eq),
            ("!=", Op::Ne),
            ("<", Op::Lt),
            (">", Op::Gt),
        ] {
            if self.eat(sym) {
                let rhs = self.sum()?;
                return Ok(Node::Bin(op, Box::new(lhs), Box::new(rhs)));
            }
        }
        Ok(lhs)
    }

    fn sum(&mut self) -> Result<Node> {
        self.binary_level(&[("+", Op::Add), ("-", Op::Sub)], Self::product)
    }

    fn product(&mut self) -> Result<Node> {
        self.binary_level(&[("*", Op::Mul), ("/", Op::Div)], Self::unary)
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat("-") {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat("!") {
            return Ok(Node::Not(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat("^") {
            let exp = self.unary()?;
            return Ok(Node::Bin(Op::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        let tok = self
            .toks
            .get(self.pos)
            .cloned()
            .ok_or_else(|| BolzaError::Expr(format!("unexpected end of `{}`", self.src)))?;
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Node::Num(v)),
            Tok::Sym("(") => {
                let e = self.or()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Sym(s) => Err(BolzaError::Expr(format!("unexpected `{s}` in `{}`", self.src))),
            Tok::Ident(name) => {
                if self.eat("(") {
                    let mut args = vec![self.or()?];
                    while self.eat(",") {
                        args.push(self.or()?);
                    }
                    self.expect(")")?;
                    self.call(&name, args)
                } else {
                    self.variable(&name)
                }
            }
        }
    }

    fn call(&self, name: &str, mut args: Vec<Node>) -> Result<Node> {
        let arity = |k: usize| -> Result<()> {
            if args.len() == k {
                Ok(())
            } else {
                Err(BolzaError::Expr(format!("`{name}` takes {k} argument(s)")))
            }
        };
        let f = match name {
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "ln" | "log" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "min" => Func::Min,
            "max" => Func::Max,
            "pow" => Func::Pow,
            "norm" => Func::Norm,
            "if" => {
                arity(3)?;
                let c = args.remove(0);
                let a = args.remove(0);
                let b = args.remove(0);
                return Ok(Node::If(Box::new(c), Box::new(a), Box::new(b)));
            }
            _ => return Err(BolzaError::Expr(format!("unknown function `{name}`"))),
        };
        match f {
            Func::Min | Func::Max | Func::Norm => {
                if args.is_empty() {
                    return Err(BolzaError::Expr(format!("`{name}` needs arguments")));
                }
            }
            Func::Pow => arity(2)?,
            _ => arity(1)?,
        }
        Ok(Node::Call(f, args))
    }

    fn variable(&self, name: &str) -> Result<Node> {
        let indexed = |prefix: &str, dim: usize| -> Option<Result<usize>> {
            let rest = name.strip_prefix(prefix)?;
            let k: usize = rest.parse().ok()?;
            Some(if k >= 1 && k <= dim {
                Ok(k - 1)
            } else {
                Err(BolzaError::Expr(format!("`{name}` out of range (dimension {dim})")))
            })
        };
        match name {
            "s" | "t" => return Ok(Node::S),
            "y" if self.n >= 1 => return Ok(Node::Y(0)),
            "u" if self.m >= 1 => return Ok(Node::U(0)),
            "ynorm" => return Ok(Node::YNorm),
            "unorm" => return Ok(Node::UNorm),
            "pi" => return Ok(Node::Num(std::f64::consts::PI)),
            "e" => return Ok(Node::Num(std::f64::consts::E)),
            "inf" => return Ok(Node::Num(f64::INFINITY)),
            _ => {}
        }
        if let Some(k) = indexed("y", self.n) {
            return Ok(Node::Y(k?));
        }
        if let Some(k) = indexed("u", self.m) {
            return Ok(Node::U(k?));
        }
        Err(BolzaError::Expr(format!("unknown variable `{name}`")))
    }
}

fn truthy(x: f64) -> bool {
    x != 0.0 && !x.is_nan()
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl Node {
    fn eval(&self, s: f64, y: &[f64], u: &[f64]) -> f64 {
        match self {
            Node::Num(v) => *v,
            Node::S => s,
            Node::Y(k) => y[*k],
            Node::U(k) => u[*k],
            Node::YNorm => norm(y),
            Node::UNorm => norm(u),
            Node::Neg(a) => -a.eval(s, y, u),
            Node::Not(a) => flag(!truthy(a.eval(s, y, u))),
            Node::If(c, a, b) => {
                if truthy(c.eval(s, y, u)) {
                    a.eval(s, y, u)
                } else {
                    b.eval(s, y, u)
                }
            }
            Node::Bin(op, a, b) => {
                let x = a.eval(s, y, u);
                match op {
                    Op::And => return flag(truthy(x) && truthy(b.eval(s, y, u))),
                    Op::Or => return flag(truthy(x) || truthy(b.eval(s, y, u))),
                    _ => {}
                }
                let z = b.eval(s, y, u);
                match op {
                    Op::Add => x + z,
                    Op::Sub => x - z,
                    Op::Mul => x * z,
                    Op::Div => x / z,
                    Op::Pow => x.powf(z),
                    Op::Lt => flag(x < z),
                    Op::Le => flag(x <= z),
                    Op::Gt => flag(x > z),
                    Op::Ge => flag(x >= z),
                    Op::Eq => flag(x == z),
                    Op::Ne => flag(x != z),
                    Op::And | Op::Or => unreachable!(),
                }
            }
            Node::Call(f, args) => {
                let a0 = || args[0].eval(s, y, u);
                match f {
                    Func::Abs => a0().abs(),
                    Func::Sqrt => a0().sqrt(),
                    Func::Exp => a0().exp(),
                    Func::Ln => a0().ln(),
                    Func::Sin => a0().sin(),
                    Func::Cos => a0().cos(),
                    Func::Tan => a0().tan(),
                    Func::Pow => a0().powf(args[1].eval(s, y, u)),
                    Func::Min => args.iter().map(|a| a.eval(s, y, u)).fold(f64::INFINITY, f64::min),
                    Func::Max => args.iter().map(|a| a.eval(s, y, u)).fold(f64::NEG_INFINITY, f64::max),
                    Func::Norm => args
                        .iter()
                        .map(|a| {
                            let v = a.eval(s, y, u);
                            v * v
                        })
                        .sum::<f64>()
                        .sqrt(),
                }
            }
        }
    }

    fn visit(&self, f: &mut impl FnMut(&Node)) {
        f(self);
        match self {
            Node::Neg(a) | Node::Not(a) => a.visit(f),
            Node::Bin(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Node::If(c, a, b) => {
                c.visit(f);
                a.visit(f);
                b.visit(f);
            }
            Node::Call(_, args) => args.iter().for_each(|a| a.visit(f)),
            _ => {}
        }
    }
}

/// A compiled expression over `(s, y, u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl Expr {
    /// Parse `src` for state dimension `n` and control dimension `m`.
    pub fn parse(src: &str, n: usize, m: usize) -> Result<Expr> {
        let toks = tokenize(src)?;
        let mut p = Parser {
            toks,
            pos: 0,
            n,
            m,
            src,
        };
        let root = p.or()?;
        if p.pos != p.toks.len() {
            return Err(BolzaError::Expr(format!("trailing input in `{src}`")));
        }
        Ok(Expr {
            source: src.to_string(),
            root,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, s: f64, y: &[f64], u: &[f64]) -> f64 {
        self.root.eval(s, y, u)
    }

    pub fn holds(&self, s: f64, y: &[f64], u: &[f64]) -> bool {
        truthy(self.eval(s, y, u))
    }

    pub fn uses_time(&self) -> bool {
        let mut hit = false;
        self.root.visit(&mut |n| hit |= matches!(n, Node::S));
        hit
    }

    pub fn uses_state(&self) -> bool {
        let mut hit = false;
        self.root.visit(&mut |n| hit |= matches!(n, Node::Y(_) | Node::YNorm));
        hit
    }
}
