use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use crate::catalog::kind_schema;
use crate::error::{Error, Result};

/// Parses a `.qnet` source into a checked description.
pub fn parse(src: &str) -> Result<NetworkDescription> {
    let mut p = Parser { toks: tokenize(src)?, pos: 0 };
    let mut net = NetworkDescription::default();
    while !p.at(&Tok::Eof) {
        p.statement(&mut net)?;
    }
    check(&net)?;
    Ok(net)
}

fn err(span: Span, msg: impl Into<String>) -> Error {
    Error::Parse { line: span.line, col: span.col, msg: msg.into() }
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn at(&self, t: &Tok) -> bool {
        &self.peek().tok == t
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.at(t) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> Result<Span> {
        let got = self.peek().clone();
        if got.tok == t {
            self.bump();
            Ok(got.span)
        } else {
            Err(err(got.span, format!("expected {}, found {}", t.describe(), got.tok.describe())))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Span)> {
        let got = self.peek().clone();
        match got.tok {
            Tok::Ident(s) => {
                self.bump();
                Ok((s, got.span))
            }
            other => Err(err(got.span, format!("expected {what}, found {}", other.describe()))),
        }
    }

    fn statement(&mut self, net: &mut NetworkDescription) -> Result<()> {
        let (kw, span) = self.ident("a statement")?;
        match kw.as_str() {
            "param" => {
                let (name, _) = self.ident("a parameter name")?;
                self.expect(Tok::Eq)?;
                let value = self.expr()?;
                net.params.push(ParamDecl { name, value, span });
            }
            "component" => {
                let (name, _) = self.ident("an instance name")?;
                self.expect(Tok::Eq)?;
                let (kind, kspan) = self.ident("a component kind")?;
                if kind_schema(&kind).is_none() {
                    return Err(err(kspan, format!("unknown kind '{kind}'")));
                }
                self.expect(Tok::LParen)?;
                let args = self.args(true)?;
                net.instances.push(Component { name, kind, args, span });
            }
            "wire" => {
                let src = self.port()?;
                self.expect(Tok::Arrow)?;
                let dst = self.port()?;
                if src.dir != Dir::Out {
                    return Err(err(src.span, format!("wire source {src} must be an output")));
                }
                if dst.dir != Dir::In {
                    return Err(err(dst.span, format!("wire target {dst} must be an input")));
                }
                net.wires.push(Wire { src, dst, span });
            }
            "expose" => {
                let port = self.port()?;
                let (as_kw, as_span) = self.ident("'as'")?;
                if as_kw != "as" {
                    return Err(err(as_span, format!("expected 'as', found '{as_kw}'")));
                }
                let (label, _) = self.ident("a port label")?;
                net.exposed.push(Expose { port, label, span });
            }
            "state" => {
                let (instance, _) = self.ident("an instance name")?;
                self.expect(Tok::Eq)?;
                let mut factors = vec![self.state_factor()?];
                while self.eat(&Tok::Star) {
                    factors.push(self.state_factor()?);
                }
                net.states.push(StateDecl { instance, factors, span });
            }
            other => {
                return Err(err(
                    span,
                    format!("expected 'component', 'wire', 'expose', 'state' or 'param', found '{other}'"),
                ))
            }
        }
        self.expect(Tok::Semi)?;
        Ok(())
    }

    fn port(&mut self) -> Result<PortRef> {
        let (instance, span) = self.ident("an instance name")?;
        self.expect(Tok::Dot)?;
        let (d, dspan) = self.ident("'in' or 'out'")?;
        let dir = match d.as_str() {
            "in" => Dir::In,
            "out" => Dir::Out,
            _ => return Err(err(dspan, format!("expected 'in' or 'out', found '{d}'"))),
        };
        self.expect(Tok::LBracket)?;
        let t = self.bump();
        let index = match t.tok {
            Tok::Number { value, imag: false } if value.fract() == 0.0 && value >= 1.0 => value as usize,
            Tok::Number { .. } => return Err(err(t.span, "port index must be an integer >= 1")),
            other => return Err(err(t.span, format!("expected a port index, found {}", other.describe()))),
        };
        self.expect(Tok::RBracket)?;
        Ok(PortRef { instance, dir, index, span })
    }

    fn state_factor(&mut self) -> Result<(StateFactor, Span)> {
        let (name, span) = self.ident("a state (vacuum, fock, coherent, qubit)")?;
        let f = match name.as_str() {
            "vacuum" => StateFactor::Vacuum,
            "fock" | "coherent" => {
                self.expect(Tok::LParen)?;
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                if name == "fock" {
                    StateFactor::Fock(e)
                } else {
                    StateFactor::Coherent(e)
                }
            }
            "qubit" => {
                self.expect(Tok::LParen)?;
                let (w, wspan) = self.ident("'excited' or 'ground'")?;
                let excited = match w.as_str() {
                    "excited" => true,
                    "ground" => false,
                    _ => return Err(err(wspan, format!("expected 'excited' or 'ground', found '{w}'"))),
                };
                self.expect(Tok::RParen)?;
                StateFactor::Qubit { excited }
            }
            _ => return Err(err(span, format!("unknown state '{name}'"))),
        };
        Ok((f, span))
    }

    /// Argument list after `(`; consumes the closing `)`.
    fn args(&mut self, named_only: bool) -> Result<Vec<Arg>> {
        let mut args = Vec::new();
        if self.eat(&Tok::RParen) {
            return Ok(args);
        }
        loop {
            let span = self.peek().span;
            let named = matches!(self.peek().tok, Tok::Ident(_)) && self.toks[self.pos + 1].tok == Tok::Eq;
            let name = if named {
                let (n, _) = self.ident("a parameter name")?;
                self.bump();
                Some(n)
            } else if named_only {
                return Err(err(span, "component parameters must be written key=value"));
            } else {
                None
            };
            if let Some(n) = &name {
                if args.iter().any(|a: &Arg| a.name.as_deref() == Some(n)) {
                    return Err(err(span, format!("duplicate parameter '{n}'")));
                }
            }
            let value = self.expr()?;
            args.push(Arg { name, value, span });
            if self.eat(&Tok::RParen) {
                return Ok(args);
            }
            self.expect(Tok::Comma)?;
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            let span = self.bump().span;
            let rhs = self.term()?;
            lhs = Expr { kind: ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, span };
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            let span = self.bump().span;
            let rhs = self.unary()?;
            lhs = Expr { kind: ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, span };
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.at(&Tok::Minus) {
            let span = self.bump().span;
            let inner = self.unary()?;
            return Ok(Expr { kind: ExprKind::Neg(Box::new(inner)), span });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.at(&Tok::Caret) {
            let span = self.bump().span;
            let exp = self.unary()?;
            return Ok(Expr { kind: ExprKind::Binary { op: BinOp::Pow, lhs: Box::new(base), rhs: Box::new(exp) }, span });
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        let t = self.bump();
        let span = t.span;
        let kind = match t.tok {
            Tok::Number { value, imag } => {
                if imag {
                    ExprKind::Imag(value)
                } else {
                    ExprKind::Num(value)
                }
            }
            Tok::Ident(name) => {
                if self.eat(&Tok::LParen) {
                    ExprKind::Call { name, args: self.args(false)? }
                } else {
                    let mut full = name;
                    while self.eat(&Tok::Dot) {
                        let (part, _) = self.ident("a name after '.'")?;
                        full.push('.');
                        full.push_str(&part);
                    }
                    ExprKind::Name(full)
                }
            }
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                return Ok(e);
            }
            Tok::LBracket => {
                let mut items = Vec::new();
                if !self.eat(&Tok::RBracket) {
                    loop {
                        items.push(self.expr()?);
                        if self.eat(&Tok::RBracket) {
                            break;
                        }
                        self.expect(Tok::Comma)?;
                    }
                }
                ExprKind::List(items)
            }
            other => return Err(err(span, format!("expected a value, found {}", other.describe()))),
        };
        Ok(Expr { kind, span })
    }
}

/// Name resolution and port-usage checks that need the whole file.
fn check(net: &NetworkDescription) -> Result<()> {
    let mut names = BTreeMap::new();
    for p in &net.params {
        if names.insert(p.name.clone(), p.span).is_some() {
            return Err(err(p.span, format!("duplicate name '{}'", p.name)));
        }
    }
    for c in &net.instances {
        if names.insert(c.name.clone(), c.span).is_some() {
            return Err(err(c.span, format!("duplicate name '{}'", c.name)));
        }
    }
    let resolve = |port: &PortRef| -> Result<()> {
        if net.instance(&port.instance).is_none() {
            return Err(err(port.span, format!("unknown instance '{}'", port.instance)));
        }
        Ok(())
    };
    let mut sources = BTreeSet::new();
    let mut sinks = BTreeSet::new();
    for w in &net.wires {
        resolve(&w.src)?;
        resolve(&w.dst)?;
        if !sources.insert((w.src.instance.clone(), w.src.index)) {
            return Err(err(w.src.span, format!("{} is already used as a wire source", w.src)));
        }
        if !sinks.insert((w.dst.instance.clone(), w.dst.index)) {
            return Err(err(w.dst.span, format!("{} is already used as a wire target", w.dst)));
        }
    }
    let mut exposed = BTreeSet::new();
    for e in &net.exposed {
        resolve(&e.port)?;
        let key = (e.port.instance.clone(), e.port.dir, e.port.index);
        let wired = match e.port.dir {
            Dir::Out => sources.contains(&(key.0.clone(), key.2)),
            Dir::In => sinks.contains(&(key.0.clone(), key.2)),
        };
        if wired {
            return Err(err(e.port.span, format!("{} is wired internally and cannot be exposed", e.port)));
        }
        if !exposed.insert((key.0, key.1 == Dir::In, key.2)) {
            return Err(err(e.port.span, format!("{} is exposed twice", e.port)));
        }
    }
    let mut stated = BTreeSet::new();
    for s in &net.states {
        if net.instance(&s.instance).is_none() {
            return Err(err(s.span, format!("unknown instance '{}'", s.instance)));
        }
        if !stated.insert(s.instance.clone()) {
            return Err(err(s.span, format!("state of '{}' given twice", s.instance)));
        }
    }
    Ok(())
}
