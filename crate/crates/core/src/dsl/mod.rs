//! Textual bracket expressions and JSON model files.
//!
//! ```text
//! expr      := bracket | expect | var
//! bracket   := "P(" lhs "|" { obsref "|" } rhs ")"
//! lhs       := eventexpr | "Omega"
//! rhs       := eventexpr | "Omega" | "Omega_" number
//! expect    := "E[" obstree "]" [ "|" eventexpr ]
//! var       := "Var[" obstree "]"
//! eventexpr := term { ("∪" | "+" | "|u") term }
//! term      := factor { ("∩" | "&") factor }
//! factor    := "~" factor | name | "(" eventexpr ")"
//! obstree   := product { "+" product }
//! product   := obsfactor { "*" obsfactor }
//! obsfactor := name | number | "(" obstree ")"
//! ```

pub mod ast;
mod eval;
pub mod model;
mod parser;

pub use ast::{EventExpr, Expr, Lhs, ObsTree, Rhs};
pub use eval::{evaluate, evaluate_with, Bindings};
pub use parser::parse;
pub use model::Model;
