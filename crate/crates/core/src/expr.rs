//! Factorable functions as a hash-consed DAG of atom operations.
//!
//! Division is stored as `Mul(l, recip(r))`. A numeric literal multiplying a
//! subexpression becomes `ScalarMul`. Identical subexpressions share one node.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::interval::{AtomTag, Interval, IntervalBox};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Constant {
    Number(f64),
    Pi,
    E,
}

impl Constant {
    pub fn value(self) -> f64 {
        match self {
            Constant::Number(c) => c,
            Constant::Pi => std::f64::consts::PI,
            Constant::E => std::f64::consts::E,
        }
    }

    pub fn enclosure(self) -> Interval {
        match self {
            Constant::Number(c) => Interval::point(c),
            Constant::Pi => Interval::pi(),
            Constant::E => Interval::e(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Node {
    Var(usize),
    Const(Constant),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Neg(usize),
    ScalarMul(f64, usize),
    Pow(usize, i32),
    Univariate(AtomTag, usize),
}

impl Node {
    fn children(&self) -> impl Iterator<Item = usize> {
        let (a, b) = match *self {
            Node::Var(_) | Node::Const(_) => (None, None),
            Node::Add(l, r) | Node::Sub(l, r) | Node::Mul(l, r) => (Some(l), Some(r)),
            Node::Neg(u) | Node::ScalarMul(_, u) | Node::Pow(u, _) | Node::Univariate(_, u) => {
                (Some(u), None)
            }
        };
        a.into_iter().chain(b)
    }

    fn map_children(self, mut f: impl FnMut(usize) -> usize) -> Node {
        match self {
            Node::Var(_) | Node::Const(_) => self,
            Node::Add(l, r) => Node::Add(f(l), f(r)),
            Node::Sub(l, r) => Node::Sub(f(l), f(r)),
            Node::Mul(l, r) => Node::Mul(f(l), f(r)),
            Node::Neg(u) => Node::Neg(f(u)),
            Node::ScalarMul(c, u) => Node::ScalarMul(c, f(u)),
            Node::Pow(u, k) => Node::Pow(f(u), k),
            Node::Univariate(t, u) => Node::Univariate(t, f(u)),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum NodeKey {
    Var(usize),
    Num(u64),
    Pi,
    E,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Neg(usize),
    ScalarMul(u64, usize),
    Pow(usize, i32),
    Univariate(AtomTag, usize),
}

impl From<&Node> for NodeKey {
    fn from(n: &Node) -> Self {
        match *n {
            Node::Var(i) => NodeKey::Var(i),
            Node::Const(Constant::Number(c)) => NodeKey::Num(c.to_bits()),
            Node::Const(Constant::Pi) => NodeKey::Pi,
            Node::Const(Constant::E) => NodeKey::E,
            Node::Add(l, r) => NodeKey::Add(l, r),
            Node::Sub(l, r) => NodeKey::Sub(l, r),
            Node::Mul(l, r) => NodeKey::Mul(l, r),
            Node::Neg(u) => NodeKey::Neg(u),
            Node::ScalarMul(c, u) => NodeKey::ScalarMul(c.to_bits(), u),
            Node::Pow(u, k) => NodeKey::Pow(u, k),
            Node::Univariate(a, u) => NodeKey::Univariate(a, u),
        }
    }
}

/// Incremental DAG construction with structural sharing.
#[derive(Default)]
pub struct ExprBuilder {
    nodes: Vec<Node>,
    index: HashMap<NodeKey, usize>,
    n_vars: usize,
}

impl ExprBuilder {
    pub fn new(n_vars: usize) -> Self {
        ExprBuilder {
            n_vars,
            ..Default::default()
        }
    }

    pub fn push(&mut self, node: Node) -> usize {
        debug_assert!(node.children().all(|c| c < self.nodes.len()));
        if let Node::Var(i) = node {
            self.n_vars = self.n_vars.max(i + 1);
        }
        let key = NodeKey::from(&node);
        if let Some(&id) = self.index.get(&key) {
            return id;
        }
        let id = self.nodes.len();
        self.nodes.push(node);
        self.index.insert(key, id);
        id
    }

    pub fn var(&mut self, i: usize) -> usize {
        self.push(Node::Var(i))
    }

    pub fn num(&mut self, c: f64) -> usize {
        self.push(Node::Const(Constant::Number(c)))
    }

    pub fn add(&mut self, l: usize, r: usize) -> usize {
        self.push(Node::Add(l, r))
    }

    pub fn sub(&mut self, l: usize, r: usize) -> usize {
        self.push(Node::Sub(l, r))
    }

    /// Product; a literal operand turns it into a scalar multiple.
    pub fn mul(&mut self, l: usize, r: usize) -> usize {
        if let Node::Const(Constant::Number(c)) = self.nodes[l] {
            return self.push(Node::ScalarMul(c, r));
        }
        if let Node::Const(Constant::Number(c)) = self.nodes[r] {
            return self.push(Node::ScalarMul(c, l));
        }
        self.push(Node::Mul(l, r))
    }

    pub fn div(&mut self, l: usize, r: usize) -> usize {
        let inv = self.atom(AtomTag::Recip, r);
        self.push(Node::Mul(l, inv))
    }

    pub fn neg(&mut self, u: usize) -> usize {
        self.push(Node::Neg(u))
    }

    pub fn pow(&mut self, u: usize, k: i32) -> usize {
        self.push(Node::Pow(u, k))
    }

    pub fn atom(&mut self, tag: AtomTag, u: usize) -> usize {
        self.push(Node::Univariate(tag, u))
    }

    /// Drops nodes unreachable from `outputs` and renumbers the rest.
    pub fn finish(self, outputs: Vec<usize>) -> Result<Expr> {
        let names = (1..=self.n_vars).map(|i| format!("x{i}")).collect();
        self.finish_named(outputs, names)
    }

    fn finish_named(self, outputs: Vec<usize>, names: Vec<String>) -> Result<Expr> {
        let n = self.nodes.len();
        if let Some(&o) = outputs.iter().find(|&&o| o >= n) {
            return Err(Error::InvalidExpr(format!("output {o} >= {n}")));
        }
        let mut live = vec![false; n];
        for &o in &outputs {
            live[o] = true;
        }
        for i in (0..n).rev() {
            if live[i] {
                for c in self.nodes[i].children() {
                    live[c] = true;
                }
            }
        }
        let mut remap = vec![usize::MAX; n];
        let mut nodes = Vec::with_capacity(n);
        for (i, node) in self.nodes.into_iter().enumerate() {
            if live[i] {
                remap[i] = nodes.len();
                nodes.push(node.map_children(|c| remap[c]));
            }
        }
        let outputs = outputs.into_iter().map(|o| remap[o]).collect();
        Expr::from_parts(nodes, outputs, names)
    }
}

/// A factorable function `R^n -> R^m` stored as a topologically ordered DAG.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    nodes: Vec<Node>,
    outputs: Vec<usize>,
    var_names: Vec<String>,
}

impl Expr {
    pub fn from_parts(nodes: Vec<Node>, outputs: Vec<usize>, var_names: Vec<String>) -> Result<Self> {
        let n_vars = var_names.len();
        for (i, node) in nodes.iter().enumerate() {
            if let Some(c) = node.children().find(|&c| c >= i) {
                return Err(Error::InvalidExpr(format!("node {i} references later node {c}")));
            }
            if let Node::Var(v) = node {
                if *v >= n_vars {
                    return Err(Error::InvalidExpr(format!("variable index {v} >= {n_vars}")));
                }
            }
        }
        if outputs.is_empty() {
            return Err(Error::InvalidExpr("no outputs".into()));
        }
        if let Some(&o) = outputs.iter().find(|&&o| o >= nodes.len()) {
            return Err(Error::InvalidExpr(format!("output index {o} out of range")));
        }
        Ok(Expr {
            nodes,
            outputs,
            var_names,
        })
    }

    /// Parse a single formula over variables `x1..xN`.
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_many(&[text], None)
    }

    /// Parse several formulas into one shared DAG, one output each. With
    /// `vars`, identifiers are resolved against that list; otherwise `x<k>`
    /// names variable `k` (1-based).
    pub fn parse_many<S: AsRef<str>>(texts: &[S], vars: Option<&[String]>) -> Result<Self> {
        let mut parser = Parser {
            builder: ExprBuilder::new(vars.map_or(0, |v| v.len())),
            vars,
            tokens: Vec::new(),
            pos: 0,
        };
        let mut outputs = Vec::with_capacity(texts.len());
        for text in texts {
            parser.tokens = lex(text.as_ref())?;
            parser.pos = 0;
            let root = parser.expr()?;
            let tok = parser.peek();
            if tok.kind != Tok::Eof {
                return Err(tok.error(format!("unexpected {}", tok.kind.describe())));
            }
            outputs.push(root);
        }
        let n_vars = parser.builder.n_vars;
        let names = match vars {
            Some(v) => v.to_vec(),
            None => (1..=n_vars).map(|i| format!("x{i}")).collect(),
        };
        parser.builder.finish_named(outputs, names)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    pub fn n_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    /// Marks nodes whose value does not depend on any variable.
    pub fn constant_mask(&self) -> Vec<bool> {
        let mut mask = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let c = match node {
                Node::Var(_) => false,
                Node::Const(_) => true,
                n => n.children().all(|c| mask[c]),
            };
            mask.push(c);
        }
        mask
    }

    /// Marks nodes reachable from the selected outputs.
    pub(crate) fn live_mask(&self, outputs: &[usize]) -> Vec<bool> {
        let mut live = vec![false; self.nodes.len()];
        for &o in outputs {
            live[self.outputs[o]] = true;
        }
        for i in (0..self.nodes.len()).rev() {
            if live[i] {
                for c in self.nodes[i].children() {
                    live[c] = true;
                }
            }
        }
        live
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.n_vars() {
            return Err(Error::DimensionMismatch {
                expected: self.n_vars(),
                found,
            });
        }
        Ok(())
    }

    pub fn eval_real(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        let mut v: Vec<f64> = Vec::with_capacity(self.nodes.len());
        for (i, node) in self.nodes.iter().enumerate() {
            let val = match *node {
                Node::Var(k) => x[k],
                Node::Const(c) => c.value(),
                Node::Add(l, r) => v[l] + v[r],
                Node::Sub(l, r) => v[l] - v[r],
                Node::Mul(l, r) => v[l] * v[r],
                Node::Neg(u) => -v[u],
                Node::ScalarMul(c, u) => c * v[u],
                Node::Pow(u, k) => {
                    if k < 0 && v[u] == 0.0 {
                        return Err(Error::domain("pow", Interval::point(0.0)).at_node(i));
                    }
                    v[u].powi(k)
                }
                Node::Univariate(a, u) => a.eval(v[u]).map_err(|e| e.at_node(i))?,
            };
            v.push(val);
        }
        Ok(self.outputs.iter().map(|&o| v[o]).collect())
    }

    /// Natural interval extension: every node evaluated in interval arithmetic.
    pub fn eval_interval(&self, x: &IntervalBox) -> Result<Vec<Interval>> {
        let all = self.eval_interval_nodes(x)?;
        Ok(self.outputs.iter().map(|&o| all[o]).collect())
    }

    pub(crate) fn eval_interval_nodes(&self, x: &IntervalBox) -> Result<Vec<Interval>> {
        self.check_dim(x.dim())?;
        let mut v: Vec<Interval> = Vec::with_capacity(self.nodes.len());
        for (i, node) in self.nodes.iter().enumerate() {
            let val = match *node {
                Node::Var(k) => x[k],
                Node::Const(c) => c.enclosure(),
                Node::Add(l, r) => v[l] + v[r],
                Node::Sub(l, r) => v[l] - v[r],
                Node::Mul(l, r) => v[l] * v[r],
                Node::Neg(u) => -v[u],
                Node::ScalarMul(c, u) => v[u].scale(c),
                Node::Pow(u, k) => v[u].powi(k).map_err(|e| e.at_node(i))?,
                Node::Univariate(a, u) => a.apply(v[u]).map_err(|e| e.at_node(i))?,
            };
            v.push(val);
        }
        Ok(v)
    }

    /// Textual form of output `k`, parseable back into the same DAG.
    pub fn output_text(&self, k: usize) -> String {
        let mut s = String::new();
        self.write_node(&mut s, self.outputs[k]);
        s
    }

    fn write_node(&self, s: &mut String, i: usize) {
        use std::fmt::Write;
        match self.nodes[i] {
            Node::Var(k) => s.push_str(&self.var_names[k]),
            Node::Const(Constant::Number(c)) => {
                let _ = write!(s, "{c:?}");
            }
            Node::Const(Constant::Pi) => s.push_str("pi"),
            Node::Const(Constant::E) => s.push('e'),
            Node::Add(l, r) => self.write_binary(s, l, " + ", r),
            Node::Sub(l, r) => self.write_binary(s, l, " - ", r),
            Node::Mul(l, r) => self.write_binary(s, l, " * ", r),
            Node::Neg(u) => {
                s.push_str("(-");
                self.write_node(s, u);
                s.push(')');
            }
            Node::ScalarMul(c, u) => {
                let _ = write!(s, "({c:?} * ");
                self.write_node(s, u);
                s.push(')');
            }
            Node::Pow(u, k) => {
                let wrap = matches!(self.nodes[u], Node::Pow(..));
                if wrap {
                    s.push('(');
                }
                self.write_node(s, u);
                if wrap {
                    s.push(')');
                }
                let _ = write!(s, "^{k}");
            }
            Node::Univariate(a, u) => {
                s.push_str(a.name());
                s.push('(');
                self.write_node(s, u);
                s.push(')');
            }
        }
    }

    fn write_binary(&self, s: &mut String, l: usize, op: &str, r: usize) {
        s.push('(');
        self.write_node(s, l);
        s.push_str(op);
        self.write_node(s, r);
        s.push(')');
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in 0..self.outputs.len() {
            if k > 0 {
                f.write_str("; ")?;
            }
            f.write_str(&self.output_text(k))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
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
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(n) => format!("number {n}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Eof => "end of input".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    kind: Tok,
    line: usize,
    column: usize,
}

impl Token {
    fn error(&self, message: String) -> Error {
        Error::Parse {
            line: self.line,
            column: self.column,
            message,
        }
    }
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let kind = if c.is_ascii_digit() || c == '.' {
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
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            let v: f64 = s.parse().map_err(|_| Error::Parse {
                line: start_line,
                column: start_col,
                message: format!("malformed number `{s}`"),
            })?;
            Tok::Num(v)
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            Tok::Ident(chars[start..i].iter().collect())
        } else {
            i += 1;
            col += 1;
            match c {
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '/' => Tok::Slash,
                '^' => Tok::Caret,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                other => {
                    return Err(Error::Parse {
                        line: start_line,
                        column: start_col,
                        message: format!("unexpected character `{other}`"),
                    })
                }
            }
        };
        out.push(Token {
            kind,
            line: start_line,
            column: start_col,
        });
    }
    out.push(Token {
        kind: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

struct Parser<'a> {
    builder: ExprBuilder,
    vars: Option<&'a [String]>,
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.kind != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, kind: Tok) -> Result<()> {
        let t = self.next();
        if t.kind != kind {
            return Err(t.error(format!("expected {}, found {}", kind.describe(), t.kind.describe())));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<usize> {
        let mut lhs = self.term()?;
        loop {
            match self.peek().kind {
                Tok::Plus => {
                    self.next();
                    let rhs = self.term()?;
                    lhs = self.builder.add(lhs, rhs);
                }
                Tok::Minus => {
                    self.next();
                    let rhs = self.term()?;
                    lhs = self.builder.sub(lhs, rhs);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<usize> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek().kind {
                Tok::Star => {
                    self.next();
                    let rhs = self.factor()?;
                    lhs = self.builder.mul(lhs, rhs);
                }
                Tok::Slash => {
                    self.next();
                    let rhs = self.factor()?;
                    lhs = self.builder.div(lhs, rhs);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<usize> {
        let base = self.atom()?;
        if self.peek().kind == Tok::Caret {
            self.next();
            let k = self.exponent()?;
            return Ok(self.builder.pow(base, k));
        }
        Ok(base)
    }

    /// Signed integer exponent; a chained `^` binds to the right.
    fn exponent(&mut self) -> Result<i32> {
        let negative = if self.peek().kind == Tok::Minus {
            self.next();
            true
        } else {
            false
        };
        let t = self.next();
        let Tok::Num(v) = t.kind else {
            return Err(t.error(format!("expected integer exponent, found {}", t.kind.describe())));
        };
        if v.fract() != 0.0 || v > i32::MAX as f64 {
            return Err(t.error(format!("exponent {v} is not an integer")));
        }
        let mut k = v as i32;
        if self.peek().kind == Tok::Caret {
            self.next();
            let rest = self.exponent()?;
            if rest < 0 {
                return Err(t.error("negative exponent in exponent chain".into()));
            }
            k = k
                .checked_pow(rest as u32)
                .ok_or_else(|| t.error("exponent overflow".into()))?;
        }
        Ok(if negative { -k } else { k })
    }

    fn atom(&mut self) -> Result<usize> {
        let t = self.next();
        match &t.kind {
            &Tok::Num(v) => Ok(self.builder.num(v)),
            Tok::Minus => {
                let u = self.factor()?;
                Ok(self.builder.neg(u))
            }
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if self.peek().kind == Tok::LParen {
                    self.call(name, &t)
                } else {
                    self.ident(name, &t)
                }
            }
            other => Err(t.error(format!("unexpected {}", other.describe()))),
        }
    }

    fn call(&mut self, name: &str, at: &Token) -> Result<usize> {
        let Some(tag) = AtomTag::from_name(name) else {
            return Err(Error::UnknownIdentifier {
                name: name.to_string(),
                line: at.line,
                column: at.column,
            });
        };
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if self.peek().kind != Tok::RParen {
            args.push(self.expr()?);
            while self.peek().kind == Tok::Comma {
                self.next();
                args.push(self.expr()?);
            }
        }
        self.expect(Tok::RParen)?;
        if args.len() != 1 {
            return Err(Error::Arity {
                name: name.to_string(),
                expected: 1,
                found: args.len(),
            });
        }
        Ok(self.builder.atom(tag, args[0]))
    }

    fn ident(&mut self, name: &str, at: &Token) -> Result<usize> {
        let unknown = || Error::UnknownIdentifier {
            name: name.to_string(),
            line: at.line,
            column: at.column,
        };
        if let Some(vars) = self.vars {
            if let Some(i) = vars.iter().position(|v| v == name) {
                return Ok(self.builder.var(i));
            }
        } else if let Some(k) = name.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()) {
            if k == 0 {
                return Err(unknown());
            }
            return Ok(self.builder.var(k - 1));
        }
        match name {
            "pi" => Ok(self.builder.push(Node::Const(Constant::Pi))),
            "e" => Ok(self.builder.push(Node::Const(Constant::E))),
            _ if AtomTag::from_name(name).is_some() => Err(Error::Arity {
                name: name.to_string(),
                expected: 1,
                found: 0,
            }),
            _ => Err(unknown()),
        }
    }
}
