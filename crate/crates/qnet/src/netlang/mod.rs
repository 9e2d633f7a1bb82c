//! `.qnet` network description language.
//!
//! ```text
//! param g = 1.0;
//! component c1 = one_sided_cavity(gamma=g, delta=0.5);
//! component c2 = one_sided_cavity(gamma=2*g);
//! wire c1.out[1] -> c2.in[1];
//! expose c1.in[1] as input;
//! state c1 = fock(1);
//! ```

pub mod ast;
mod elaborate;
mod lexer;
mod parser;
mod printer;

pub use ast::NetworkDescription;
pub use elaborate::{elaborate, elaborate_with, eval, Elaborated, PortInfo};
pub use parser::parse;
pub use printer::print;

use crate::error::Result;

/// Parses and elaborates in one step.
pub fn compile(src: &str) -> Result<Elaborated> {
    elaborate(&parse(src)?)
}
