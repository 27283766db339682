//! A hierarchical graph rewriting engine.
//!
//! Worlds are trees of membranes holding atoms, child membranes and rules.
//! Atoms are connected by links; rules rewrite a membrane's contents (and
//! its child cells) using process contexts `$p`, rule contexts `@r`, guards
//! and the stable flag `{...}/`.

mod builtin;
pub mod dot;
pub mod graph;
pub mod matcher;
pub mod parse;
pub mod print;
pub mod rewriter;
pub mod rule;

pub use graph::{Atom, AtomId, AtomKind, Functor, GraphError, Link, LinkMode, MemId, Membrane, World};
pub use matcher::{eval_guard, find_matches, is_stable, GuardResult, MatchBinding};
pub use dot::to_dot;
pub use parse::{parse_rule, parse_template, parse_world, SyntaxError};
pub use print::{serialize, serialize_rule, shape};
pub use rewriter::{
    apply_match, reduce_arith, run, step, EngineError, Policy, RunOutcome, RunStatus, Stepper, TraceEvent,
};
pub use rule::{ArithOp, AtomT, CellT, CmpOp, Guard, GuardCmp, IntExpr, Polarity, Port, Rule, RuleError, Template};
