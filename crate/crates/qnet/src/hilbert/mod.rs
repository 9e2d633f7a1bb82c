//! Labeled tensor-product spaces and sparse operators on them.

pub mod coefficient;
pub mod elementary;
pub mod operator;
pub mod space;
pub mod state;
pub mod sparse;

pub use coefficient::Coefficient;
pub use elementary::{make_elementary, Elementary};
pub use operator::{Operator, OperatorJson, Term, TermJson};
pub use space::{Factor, FactorKind, LabeledSpace};
pub use state::LocalState;
pub use sparse::SparseMatrix;
