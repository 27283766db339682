//! Meta-rules that steer evaluation order, and reading results back.

use std::fmt;
use std::sync::Arc;

use hgraph::{parse_rule, AtomKind, Link, Rule, RunStatus, World};

use crate::ast::{CONS, FAIL, NIL, SUCCESS};
use crate::flat::con_functor_name;
use crate::strategy::{Compiled, Strategy, EVAL, LIFT, RESULT};

fn rule(text: &str) -> Rule {
    parse_rule(text).unwrap_or_else(|e| panic!("meta rule {text:?}: {e}"))
}

/// Merges a finished producer into its last waiting consumer and hands
/// over the program rules.
pub fn rule_a() -> Rule {
    rule(
        "ruleA@@ { @rules, {$procs_p, +L, inLinks_(0)} }/, { {$procs_q, -L, inLinks_(N)} } :- \
         N =:= 1 | { @rules, {$procs_p, $procs_q, inLinks_(0)} }.",
    )
}

/// Merges a finished producer into a consumer that still waits for others.
pub fn rule_b() -> Rule {
    rule(
        "ruleB@@ { @rules, {$procs_p, +L, inLinks_(0)} }/, { {$procs_q, -L, inLinks_(N)} } :- \
         N > 1 | { { $procs_p, $procs_q, inLinks_(M), M = N-1} }.",
    )
}

/// Moves a protected cell out of a rule-bearing cell.
pub fn hoist() -> Rule {
    rule("hoist@@ {@r, {{$q}}, $s} :- {{$q}}, {@r, $s}.")
}

/// Gives each ready cell of a rule-bearing cell its own copy of the rules.
pub fn split() -> Rule {
    rule(
        "split@@ {@r, {inLinks_(0), $p}, {inLinks_(0), $q}, $s} :- \
         {@r, {inLinks_(0), $p}}, {@r, {inLinks_(0), $q}, $s}.",
    )
}

pub fn cbv_meta_rules() -> Vec<Arc<Rule>> {
    vec![rule_a().shared(), rule_b().shared(), hoist().shared(), split().shared()]
}

/// Unprotects a producer the stuck cell at `level` waits for.
pub fn rule_c(level: &str) -> Rule {
    let name = if level == EVAL { "ruleC" } else { "ruleC_lift" };
    rule(&format!(
        "{name}@@ {{{level}, -L, $q}}/, {{{{+L, $p}}}} :- {{{level}, $q}}, {{{LIFT}, $p}}."
    ))
}

/// Merges lifted operand producers into a stuck arithmetic cell at `level`.
/// `operands` selects the first (`"A"`), second (`"B"`) or both (`"AB"`).
pub fn rule_d(level: &str, op: char, operands: &str) -> Rule {
    let tag = if level == EVAL { "" } else { "_lift" };
    let mut lhs = format!("{{{level}, R = A{op}B, $q}}/");
    let mut rhs = format!("{{{level}, R = A{op}B, $q");
    for v in operands.chars() {
        let ctx = format!("$p{v}");
        lhs.push_str(&format!(", {{{LIFT}, +{v}, {ctx}}}"));
        rhs.push_str(&format!(", {ctx}"));
    }
    rhs.push('}');
    rule(&format!("ruleD{tag}@@ {lhs} :- {rhs}."))
}

/// Rule C for both levels.
pub fn rule_c_all() -> Vec<Arc<Rule>> {
    [EVAL, LIFT].iter().map(|l| rule_c(l).shared()).collect()
}

/// Rule D for every operator and level; the two-operand form comes first.
pub fn rule_d_all() -> Vec<Arc<Rule>> {
    let mut out = Vec::new();
    for level in [EVAL, LIFT] {
        for op in ['+', '-', '*'] {
            for operands in ["AB", "A", "B"] {
                out.push(rule_d(level, op, operands).shared());
            }
        }
    }
    out
}

/// A value read back from a world.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Term {
    Int(i64),
    Con(String, Vec<Term>),
    /// A function constant or partial application.
    Partial(String, Vec<Term>),
    /// An unbound link, by name if it has one.
    Free(String),
}

impl Term {
    pub fn con(name: &str, args: Vec<Term>) -> Term {
        Term::Con(name.to_string(), args)
    }

    pub fn list(items: Vec<Term>) -> Term {
        items
            .into_iter()
            .rev()
            .fold(Term::con(NIL, vec![]), |acc, x| Term::con(CONS, vec![x, acc]))
    }

    fn list_items(&self) -> Option<Vec<&Term>> {
        let mut out = Vec::new();
        let mut t = self;
        loop {
            match t {
                Term::Con(c, a) if c == NIL && a.is_empty() => return Some(out),
                Term::Con(c, a) if c == CONS && a.len() == 2 => {
                    out.push(&a[0]);
                    t = &a[1];
                }
                _ => return None,
            }
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Int(_) => true,
            Term::Free(_) => false,
            Term::Con(_, a) | Term::Partial(_, a) => a.iter().all(Term::is_ground),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arg = |f: &mut fmt::Formatter<'_>, t: &Term| match t {
            Term::Con(_, a) | Term::Partial(_, a) if !a.is_empty() && t.list_items().is_none() => {
                write!(f, " ({t})")
            }
            Term::Int(v) if *v < 0 => write!(f, " ({t})"),
            _ => write!(f, " {t}"),
        };
        if let Some(items) = self.list_items() {
            write!(f, "[")?;
            for (i, x) in items.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{x}")?;
            }
            return write!(f, "]");
        }
        match self {
            Term::Int(v) => write!(f, "{v}"),
            Term::Free(n) => write!(f, "{n}"),
            Term::Con(c, a) | Term::Partial(c, a) => {
                write!(f, "{c}")?;
                for t in a {
                    arg(f, t)?;
                }
                Ok(())
            }
        }
    }
}

/// What a finished run computed for the query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Value(Term),
    Suspended,
    Fail,
    /// No value: the budget ran out, or nothing was bound.
    Unbound,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Value(t) => write!(f, "{t}"),
            Outcome::Suspended => write!(f, "suspended"),
            Outcome::Fail => write!(f, "fail"),
            Outcome::Unbound => write!(f, "unbound"),
        }
    }
}

const MAX_DEPTH: usize = 100_000;

/// Reads the data term on `l`, mapping engine names back to CCFL.
pub fn read_term(w: &World, c: &Compiled, l: Link) -> Term {
    let mut depth = 0;
    read(w, c, l, &mut depth)
}

/// A query variable on `l`, else the link's own name.
fn free_name(w: &World, c: &Compiled, l: Link) -> String {
    c.query_vars
        .iter()
        .find(|v| w.link_by_name(v) == Some(l))
        .map(String::as_str)
        .or_else(|| w.link_name(l))
        .unwrap_or("_")
        .to_string()
}

fn read(w: &World, c: &Compiled, l: Link, depth: &mut usize) -> Term {
    *depth += 1;
    let free = || Term::Free(free_name(w, c, l));
    if *depth > MAX_DEPTH {
        return free();
    }
    let Some(a) = w.data_producer(l) else {
        return free();
    };
    let atom = w.atom(a);
    if let AtomKind::Int(v) = atom.kind {
        return Term::Int(v);
    }
    let args: Vec<Link> = atom.args[..atom.args.len() - 1].to_vec();
    let name = atom.name.clone();
    let sub: Vec<Term> = args.iter().map(|&x| read(w, c, x, depth)).collect();
    if let Some((con, _)) = c
        .constructors
        .iter()
        .find(|(n, k)| con_functor_name(n) == name && *k == sub.len())
    {
        return Term::Con(con.clone(), sub);
    }
    for k in [SUCCESS, FAIL] {
        if con_functor_name(k) == name && sub.is_empty() {
            return Term::con(k, vec![]);
        }
    }
    Term::Partial(name, sub)
}

/// Final status of a compiled run. Under outermost evaluation, cells lifted
/// by rule C that nothing needs any more may stay stuck on free variables;
/// once the answer waits on nothing but query variables they no longer
/// count as suspended work.
pub fn settle_status(w: &World, c: &Compiled, status: RunStatus) -> RunStatus {
    if c.strategy != Strategy::Outermost || status != RunStatus::Suspended {
        return status;
    }
    fn done(t: &Term, vars: &[String]) -> bool {
        match t {
            Term::Int(_) => true,
            Term::Con(_, args) | Term::Partial(_, args) => args.iter().all(|a| done(a, vars)),
            Term::Free(v) => vars.contains(v),
        }
    }
    match w.link_by_name(RESULT) {
        Some(l) if done(&read_term(w, c, l), &c.query_vars) => RunStatus::NormalForm,
        _ => status,
    }
}

/// The query's value after a run that ended with `status`.
pub fn read_result(w: &World, c: &Compiled, status: RunStatus) -> Outcome {
    let fail = con_functor_name(FAIL);
    let failed = w
        .atom_ids()
        .into_iter()
        .any(|a| w.atom(a).name == fail && w.atom(a).args.len() == 1 && w.is_data(w.atom(a)));
    if failed {
        return Outcome::Fail;
    }
    if status == RunStatus::Suspended {
        return Outcome::Suspended;
    }
    let Some(l) = w.link_by_name(RESULT) else {
        return Outcome::Unbound;
    };
    match read_term(w, c, l) {
        Term::Free(v) if !c.query_vars.contains(&v) => Outcome::Unbound,
        t if status == RunStatus::NormalForm => Outcome::Value(t),
        _ => Outcome::Unbound,
    }
}

/// The value bound to a free query variable, if any.
pub fn read_var(w: &World, c: &Compiled, var: &str) -> Option<Term> {
    let l = w.link_by_name(var)?;
    match read_term(w, c, l) {
        Term::Free(_) => None,
        t => Some(t),
    }
}
