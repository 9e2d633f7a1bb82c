use serde::Serialize;

/// 1-based source position.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl Span {
    pub fn new(line: usize, col: usize) -> Self {
        Span { line, col }
    }
}

impl std::fmt::Display for Span {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExprKind {
    Num(f64),
    Imag(f64),
    /// Possibly dotted name such as `pi`, `k` or `jc.a`.
    Name(String),
    Neg(Box<Expr>),
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Call { name: String, args: Vec<Arg> },
    List(Vec<Expr>),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Arg {
    pub name: Option<String>,
    pub value: Expr,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParamDecl {
    pub name: String,
    pub value: Expr,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Component {
    pub name: String,
    pub kind: String,
    pub args: Vec<Arg>,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Dir {
    In,
    Out,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PortRef {
    pub instance: String,
    pub dir: Dir,
    /// 1-based.
    pub index: usize,
    pub span: Span,
}

impl std::fmt::Display for PortRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let d = match self.dir {
            Dir::In => "in",
            Dir::Out => "out",
        };
        write!(f, "{}.{d}[{}]", self.instance, self.index)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Wire {
    pub src: PortRef,
    pub dst: PortRef,
    pub span: Span,
}

impl std::fmt::Display for Wire {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} -> {}", self.src, self.dst)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Expose {
    pub port: PortRef,
    pub label: String,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StateFactor {
    Vacuum,
    Fock(Expr),
    Coherent(Expr),
    Qubit { excited: bool },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateDecl {
    pub instance: String,
    pub factors: Vec<(StateFactor, Span)>,
    pub span: Span,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct NetworkDescription {
    pub params: Vec<ParamDecl>,
    pub instances: Vec<Component>,
    pub wires: Vec<Wire>,
    pub exposed: Vec<Expose>,
    pub states: Vec<StateDecl>,
}

impl NetworkDescription {
    pub fn instance(&self, name: &str) -> Option<&Component> {
        self.instances.iter().find(|c| c.name == name)
    }

    /// Copy with every span reset, for structural comparison.
    pub fn without_spans(&self) -> NetworkDescription {
        let mut n = self.clone();
        let z = Span::default();
        for p in &mut n.params {
            p.span = z;
            strip_expr(&mut p.value);
        }
        for c in &mut n.instances {
            c.span = z;
            c.args.iter_mut().for_each(strip_arg);
        }
        for w in &mut n.wires {
            w.span = z;
            w.src.span = z;
            w.dst.span = z;
        }
        for e in &mut n.exposed {
            e.span = z;
            e.port.span = z;
        }
        for s in &mut n.states {
            s.span = z;
            for (f, sp) in &mut s.factors {
                *sp = z;
                if let StateFactor::Fock(e) | StateFactor::Coherent(e) = f {
                    strip_expr(e);
                }
            }
        }
        n
    }
}

fn strip_arg(a: &mut Arg) {
    a.span = Span::default();
    strip_expr(&mut a.value);
}

fn strip_expr(e: &mut Expr) {
    e.span = Span::default();
    match &mut e.kind {
        ExprKind::Neg(x) => strip_expr(x),
        ExprKind::Binary { lhs, rhs, .. } => {
            strip_expr(lhs);
            strip_expr(rhs);
        }
        ExprKind::Call { args, .. } => args.iter_mut().for_each(strip_arg),
        ExprKind::List(items) => items.iter_mut().for_each(strip_expr),
        _ => {}
    }
}
