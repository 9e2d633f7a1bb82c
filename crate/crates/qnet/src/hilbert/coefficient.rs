use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

type C64 = Complex64;
type TimeFn = dyn Fn(f64) -> C64 + Send + Sync;

/// Scalar function of time multiplying a constant matrix.
///
/// Products and conjugates are kept as expression nodes so that a coupling
/// such as `α(t)·S` yields `|α(t)|²` terms after multiplication.
#[derive(Clone)]
pub struct Coefficient(Arc<Node>);

enum Node {
    Envelope { name: String, f: Arc<TimeFn> },
    Conj(Coefficient),
    Mul(Coefficient, Coefficient),
}

impl Coefficient {
    pub fn new(name: impl Into<String>, f: impl Fn(f64) -> C64 + Send + Sync + 'static) -> Self {
        Coefficient(Arc::new(Node::Envelope { name: name.into(), f: Arc::new(f) }))
    }

    pub fn eval(&self, t: f64) -> C64 {
        match &*self.0 {
            Node::Envelope { f, .. } => f(t),
            Node::Conj(c) => c.eval(t).conj(),
            Node::Mul(a, b) => a.eval(t) * b.eval(t),
        }
    }

    pub fn conj(&self) -> Coefficient {
        match &*self.0 {
            Node::Conj(c) => c.clone(),
            _ => Coefficient(Arc::new(Node::Conj(self.clone()))),
        }
    }

    pub fn mul(&self, other: &Coefficient) -> Coefficient {
        Coefficient(Arc::new(Node::Mul(self.clone(), other.clone())))
    }

    /// Identity comparison; two handles to the same node are merged in sums.
    pub fn same(&self, other: &Coefficient) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub fn describe(&self) -> String {
        match &*self.0 {
            Node::Envelope { name, .. } => name.clone(),
            Node::Conj(c) => format!("conj({})", c.describe()),
            Node::Mul(a, b) => format!("{}*{}", a.describe(), b.describe()),
        }
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Coefficient({})", self.describe())
    }
}
