//! CCFL: a small functional language with constraints, compiled to
//! hierarchical graph rewriting rules.

pub mod ast;
pub mod check;
pub mod flat;
pub mod parse;
mod pretty;
pub mod runtime;
pub mod strategy;

pub use ast::{
    AskPattern, BinOp, Branch, CcflProgram, ConDecl, DataDecl, Expr, FunDef, GuardedAlt, Pattern,
    TypeSig,
};
pub use check::{check_ccfl, effective_arities, eta_enrich, eta_program, Diagnostic};
pub use parse::{parse_ccfl, parse_expr, parse_query, query_vars, CcflError};
pub use runtime::{read_result, read_term, read_var, settle_status, Outcome, Term};
pub use strategy::{compile, Compiled, Strategy, RESULT};
