//! Small arithmetic expression language used by problem files.
//!
//! Grammar:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := NUMBER | IDENT | IDENT '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! `^` binds tighter than unary minus, so `-t^2` is `-(t^2)`.
//! Expressions are parsed once into an immutable [`Expr`] and then bound to a
//! fixed variable scope, which resolves names to slots.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {position}: expected {expected}")]
    Syntax { position: usize, expected: String },
    #[error("unknown function `{name}`")]
    UnknownFunction { name: String },
    #[error("function `{name}` takes {expected} argument(s), got {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("unbound variable `{name}`")]
    UnboundVariable { name: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
    Abs,
    Pow,
    Min,
    Max,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "pow" => Func::Pow,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Pow => "pow",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Pow | Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    fn apply(self, args: &[f64]) -> f64 {
        match self {
            Func::Exp => args[0].exp(),
            Func::Log => args[0].ln(),
            Func::Sin => args[0].sin(),
            Func::Cos => args[0].cos(),
            Func::Sqrt => args[0].sqrt(),
            Func::Abs => args[0].abs(),
            Func::Pow => args[0].powf(args[1]),
            Func::Min => args[0].min(args[1]),
            Func::Max => args[0].max(args[1]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
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

    fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div => a / b,
            BinOp::Pow => a.powf(b),
        }
    }
}

/// Parsed abstract syntax tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// Fully parenthesised rendering; reparses to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(name) => f.write_str(name),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Op(c) => format!("`{c}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::End => "end of input".into(),
    }
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| ExprError::Syntax {
                position: start,
                expected: "a decimal literal".into(),
            })?;
            out.push((start, Tok::Num(v)));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
            continue;
        }
        let tok = match c {
            '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            _ => {
                return Err(ExprError::Syntax {
                    position: start,
                    expected: "an operator, number, identifier or parenthesis".into(),
                })
            }
        };
        out.push((start, tok));
        i += c.len_utf8();
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &str) -> Result<T, ExprError> {
        Err(ExprError::Syntax {
            position: self.offset(),
            expected: format!("{expected}, found {}", describe(self.peek())),
        })
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            let inner = self.unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    // Right-associative; the exponent may carry its own sign (`2^-1`).
    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() != Tok::LParen {
                    return Ok(Expr::Var(name));
                }
                let func =
                    Func::lookup(&name).ok_or(ExprError::UnknownFunction { name: name.clone() })?;
                self.bump();
                let mut args = vec![self.expr()?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    args.push(self.expr()?);
                }
                if *self.peek() != Tok::RParen {
                    return self.fail("`,` or `)`");
                }
                self.bump();
                if args.len() != func.arity() {
                    return Err(ExprError::Arity {
                        name,
                        expected: func.arity(),
                        found: args.len(),
                    });
                }
                Ok(Expr::Call(func, args))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                if *self.peek() != Tok::RParen {
                    return self.fail("`)`");
                }
                self.bump();
                Ok(e)
            }
            _ => self.fail("a number, identifier or `(`"),
        }
    }
}

/// Parses `source` into an expression tree.
pub fn parse_expr(source: &str) -> Result<Expr, ExprError> {
    let toks = lex(source)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.fail("an operator or end of input");
    }
    Ok(e)
}

impl std::str::FromStr for Expr {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_expr(s)
    }
}

impl Expr {
    /// Distinct variable names in order of first appearance.
    pub fn free_variables(&self) -> Vec<String> {
        fn walk(e: &Expr, out: &mut Vec<String>) {
            match e {
                Expr::Num(_) => {}
                Expr::Var(n) => {
                    if !out.contains(n) {
                        out.push(n.clone());
                    }
                }
                Expr::Neg(a) => walk(a, out),
                Expr::Bin(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                Expr::Call(_, args) => args.iter().for_each(|a| walk(a, out)),
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    /// Resolves variable names against `scope`; slot `i` of the evaluation
    /// input holds `scope[i]`.
    pub fn bind(&self, scope: &[&str]) -> Result<BoundExpr, ExprError> {
        let mut code = Vec::new();
        compile(self, scope, &mut code)?;
        Ok(BoundExpr {
            code,
            arity: scope.len(),
        })
    }

    /// Evaluates with named bindings.
    pub fn eval(&self, bindings: &HashMap<String, f64>) -> Result<Evaluation, ExprError> {
        let names = self.free_variables();
        let scope: Vec<&str> = names.iter().map(String::as_str).collect();
        let mut values = Vec::with_capacity(scope.len());
        for n in &names {
            let v = bindings
                .get(n)
                .ok_or_else(|| ExprError::UnboundVariable { name: n.clone() })?;
            values.push(*v);
        }
        Ok(self.bind(&scope)?.eval_checked(&values))
    }
}

/// Convenience wrapper matching the named-binding evaluation contract.
pub fn eval_expr(e: &Expr, bindings: &HashMap<String, f64>) -> Result<Evaluation, ExprError> {
    e.eval(bindings)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Push(f64),
    Load(usize),
    Neg,
    Bin(BinOp),
    Call(Func),
}

fn compile(e: &Expr, scope: &[&str], code: &mut Vec<Op>) -> Result<(), ExprError> {
    match e {
        Expr::Num(v) => code.push(Op::Push(*v)),
        Expr::Var(name) => {
            let slot = scope
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| ExprError::UnboundVariable { name: name.clone() })?;
            code.push(Op::Load(slot));
        }
        Expr::Neg(a) => {
            compile(a, scope, code)?;
            code.push(Op::Neg);
        }
        Expr::Bin(op, a, b) => {
            compile(a, scope, code)?;
            compile(b, scope, code)?;
            code.push(Op::Bin(*op));
        }
        Expr::Call(f, args) => {
            for a in args {
                compile(a, scope, code)?;
            }
            code.push(Op::Call(*f));
        }
    }
    Ok(())
}

/// Result of a checked evaluation. A domain problem (log of a non-positive
/// number, 0/0, ...) yields NaN or an infinity together with a warning.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub warning: Option<String>,
}

/// Expression compiled to a postfix program over positional slots.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundExpr {
    code: Vec<Op>,
    arity: usize,
}

impl BoundExpr {
    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Fast path: plain IEEE evaluation, NaN on domain errors.
    pub fn eval(&self, slots: &[f64]) -> f64 {
        self.run(slots, &mut None)
    }

    /// Evaluation that also reports the first domain problem encountered.
    pub fn eval_checked(&self, slots: &[f64]) -> Evaluation {
        let mut warning = None;
        let value = self.run(slots, &mut Some(&mut warning));
        if let Some(w) = &warning {
            log::warn!("expression domain error: {w}");
        }
        Evaluation { value, warning }
    }

    fn run(&self, slots: &[f64], warn: &mut Option<&mut Option<String>>) -> f64 {
        assert_eq!(slots.len(), self.arity, "slot count mismatch");
        let mut stack: Vec<f64> = Vec::with_capacity(8);
        for op in &self.code {
            match *op {
                Op::Push(v) => stack.push(v),
                Op::Load(i) => stack.push(slots[i]),
                Op::Neg => {
                    let a = stack.pop().unwrap();
                    stack.push(-a);
                }
                Op::Bin(b) => {
                    let y = stack.pop().unwrap();
                    let x = stack.pop().unwrap();
                    let r = b.apply(x, y);
                    if let Some(w) = warn.as_deref_mut() {
                        if w.is_none() && !r.is_finite() && x.is_finite() && y.is_finite() {
                            *w = Some(format!("`{x} {} {y}` is {r}", b.symbol()));
                        }
                    }
                    stack.push(r);
                }
                Op::Call(f) => {
                    let n = f.arity();
                    let at = stack.len() - n;
                    let r = f.apply(&stack[at..]);
                    if let Some(w) = warn.as_deref_mut() {
                        if w.is_none() && !r.is_finite() && stack[at..].iter().all(|v| v.is_finite())
                        {
                            *w = Some(format!("{}({:?}) is {r}", f.name(), &stack[at..]));
                        }
                    }
                    stack.truncate(at);
                    stack.push(r);
                }
            }
        }
        stack.pop().unwrap()
    }
}

/// An expression kept together with its source text and compiled for a
/// fixed variable scope.
#[derive(Debug, Clone, PartialEq)]
pub struct Function {
    source: String,
    scope: Vec<String>,
    bound: BoundExpr,
}

impl Function {
    pub fn new(source: &str, scope: &[&str]) -> Result<Self, ExprError> {
        let bound = parse_expr(source)?.bind(scope)?;
        Ok(Self {
            source: source.to_string(),
            scope: scope.iter().map(|s| s.to_string()).collect(),
            bound,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn scope(&self) -> &[String] {
        &self.scope
    }

    pub fn eval(&self, args: &[f64]) -> f64 {
        self.bound.eval(args)
    }

    pub fn eval_checked(&self, args: &[f64]) -> Evaluation {
        self.bound.eval_checked(args)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(src: &str, pairs: &[(&str, f64)]) -> Evaluation {
        let b: HashMap<String, f64> = pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        parse_expr(src).unwrap().eval(&b).unwrap()
    }

    #[test]
    fn basic_examples() {
        assert_eq!(ev("2*t+1", &[("t", 3.0)]).value, 7.0);
        assert_eq!(ev("exp(-t)*x1", &[("t", 0.0), ("x1", 5.0)]).value, 5.0);
        assert_eq!(ev("t^2", &[("t", -2.0)]).value, 4.0);
        assert_eq!(ev("min(t, 1)", &[("t", 7.0)]).value, 1.0);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("2+3*4", &[]).value, 14.0);
        assert_eq!(ev("2^3^2", &[]).value, 512.0);
        assert_eq!(ev("8-3-2", &[]).value, 3.0);
        assert_eq!(ev("8/4/2", &[]).value, 1.0);
        assert_eq!(ev("-2^2", &[]).value, -4.0);
        assert_eq!(ev("--3", &[]).value, 3.0);
        assert_eq!(ev("2^-1", &[]).value, 0.5);
        assert_eq!(ev("1.5e1 + 2E-1", &[]).value, 15.2);
    }

    #[test]
    fn malformed_input_is_position_tagged() {
        match parse_expr("t ++ 1") {
            Err(ExprError::Syntax { position, .. }) => assert_eq!(position, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_expr("(t"), Err(ExprError::Syntax { position: 2, .. })));
        assert!(matches!(parse_expr("t $ 1"), Err(ExprError::Syntax { position: 2, .. })));
        assert!(matches!(parse_expr(""), Err(ExprError::Syntax { position: 0, .. })));
        assert!(matches!(
            parse_expr("foo(t)"),
            Err(ExprError::UnknownFunction { name }) if name == "foo"
        ));
        assert!(matches!(parse_expr("pow(t)"), Err(ExprError::Arity { .. })));
    }

    #[test]
    fn domain_error_is_nan_with_warning() {
        let e = ev("log(t)", &[("t", 0.0)]);
        assert!(e.value.is_infinite() || e.value.is_nan());
        assert!(e.warning.is_some());
        let e = ev("sqrt(t)", &[("t", -1.0)]);
        assert!(e.value.is_nan());
        assert!(e.warning.is_some());
        assert!(ev("log(t)", &[("t", 1.0)]).warning.is_none());
    }

    #[test]
    fn unbound_variable_is_reported_at_bind_time() {
        let e = parse_expr("t + x2").unwrap();
        assert_eq!(
            e.bind(&["t", "x1"]),
            Err(ExprError::UnboundVariable { name: "x2".into() })
        );
        assert!(matches!(
            e.eval(&HashMap::new()),
            Err(ExprError::UnboundVariable { .. })
        ));
    }

    #[test]
    fn bound_slots_follow_scope_order() {
        let e = parse_expr("x2 - x1 * t").unwrap().bind(&["t", "x1", "x2"]).unwrap();
        assert_eq!(e.eval(&[2.0, 3.0, 10.0]), 4.0);
    }

    #[test]
    fn round_trip_corpus() {
        let corpus = [
            "2*t+1",
            "exp(-t)*x1",
            "2^3^2",
            "-(t-1)^2/3",
            "max(min(t, 1), -x1) + pow(t, 0.5)",
            "sin(x1)*cos(x2) - abs(-0.25)",
            "1e-3*t - -t",
            "sqrt(log(exp(2*t)))",
        ];
        for src in corpus {
            let a = parse_expr(src).unwrap();
            let b = parse_expr(&a.to_string()).unwrap();
            assert_eq!(a, b, "{src} -> {a}");
        }
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0f64..100.0).prop_map(Expr::Num),
            prop_oneof![Just("t"), Just("x1")].prop_map(|s| Expr::Var(s.to_string())),
        ];
        leaf.prop_recursive(4, 32, 3, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (
                    prop_oneof![
                        Just(BinOp::Add),
                        Just(BinOp::Sub),
                        Just(BinOp::Mul),
                        Just(BinOp::Div),
                        Just(BinOp::Pow)
                    ],
                    inner.clone(),
                    inner.clone()
                )
                    .prop_map(|(op, a, b)| Expr::Bin(op, Box::new(a), Box::new(b))),
                inner.clone().prop_map(|e| Expr::Call(Func::Sin, vec![e])),
                (inner.clone(), inner).prop_map(|(a, b)| Expr::Call(Func::Max, vec![a, b])),
            ]
        })
    }

    proptest! {
        #[test]
        fn display_reparses_identically(e in arb_expr()) {
            let back = parse_expr(&e.to_string()).unwrap();
            prop_assert_eq!(back, e);
        }

        #[test]
        fn evaluation_is_pure(e in arb_expr(), t in -3.0f64..3.0, x in -3.0f64..3.0) {
            let b = e.bind(&["t", "x1"]).unwrap();
            let a1 = b.eval(&[t, x]);
            let a2 = b.eval(&[t, x]);
            prop_assert_eq!(a1.to_bits(), a2.to_bits());
        }
    }
}
