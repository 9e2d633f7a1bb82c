use std::fmt::Write;

use super::ast::*;

/// Canonical source text. Re-parsing it yields the same description up to spans.
pub fn print(net: &NetworkDescription) -> String {
    let mut out = String::new();
    for p in &net.params {
        let _ = writeln!(out, "param {} = {};", p.name, expr(&p.value));
    }
    for c in &net.instances {
        let _ = writeln!(out, "component {} = {}({});", c.name, c.kind, args(&c.args));
    }
    for w in &net.wires {
        let _ = writeln!(out, "wire {w};");
    }
    for e in &net.exposed {
        let _ = writeln!(out, "expose {} as {};", e.port, e.label);
    }
    for s in &net.states {
        let f: Vec<String> = s.factors.iter().map(|(f, _)| state_factor(f)).collect();
        let _ = writeln!(out, "state {} = {};", s.instance, f.join(" * "));
    }
    out
}

fn state_factor(f: &StateFactor) -> String {
    match f {
        StateFactor::Vacuum => "vacuum".into(),
        StateFactor::Fock(e) => format!("fock({})", expr(e)),
        StateFactor::Coherent(e) => format!("coherent({})", expr(e)),
        StateFactor::Qubit { excited } => format!("qubit({})", if *excited { "excited" } else { "ground" }),
    }
}

fn args(a: &[Arg]) -> String {
    a.iter()
        .map(|a| match &a.name {
            Some(n) => format!("{n}={}", expr(&a.value)),
            None => expr(&a.value),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Binary { op: BinOp::Add | BinOp::Sub, .. } => 1,
        ExprKind::Binary { op: BinOp::Mul | BinOp::Div, .. } => 2,
        ExprKind::Neg(_) => 3,
        ExprKind::Binary { op: BinOp::Pow, .. } => 4,
        _ => 5,
    }
}

fn wrap(e: &Expr, parens: bool) -> String {
    if parens {
        format!("({})", expr(e))
    } else {
        expr(e)
    }
}

pub fn expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Num(x) => format!("{x:?}"),
        ExprKind::Imag(x) => format!("{x:?}i"),
        ExprKind::Name(n) => n.clone(),
        ExprKind::Neg(x) => format!("-{}", wrap(x, prec(x) < 3)),
        ExprKind::Binary { op: BinOp::Pow, lhs, rhs } => {
            format!("{}^{}", wrap(lhs, prec(lhs) <= 4), wrap(rhs, prec(rhs) < 3))
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let p = prec(e);
            format!("{} {} {}", wrap(lhs, prec(lhs) < p), op.symbol(), wrap(rhs, prec(rhs) <= p))
        }
        ExprKind::Call { name, args: a } => format!("{name}({})", args(a)),
        ExprKind::List(items) => format!("[{}]", items.iter().map(expr).collect::<Vec<_>>().join(", ")),
    }
}
