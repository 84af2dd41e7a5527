//! Symbolic expressions over θ, state-derivative slots, controls and
//! costates: parsing, printing, evaluation on jets, partial derivatives and
//! the total θ-derivative along a trajectory.

mod diff;
mod display;
mod expr;
mod jet;
mod parse;

pub use diff::{partial, total_derivative, total_derivative_n};
pub use expr::{Expr, Func, Node, VarRef};
pub use jet::{eval, EvalError, Jet};
pub use parse::{parse, Dims, ParseError};
