//! Static checks and η-enrichment.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use crate::ast::{CcflProgram, Expr, FunDef, Pattern};
use crate::parse::visit;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Diagnostic {
    UnboundVariable {
        def: String,
        var: String,
    },
    Arity {
        def: String,
        callee: String,
        expected: usize,
        found: usize,
    },
    Duplicate(String),
    NonLinearPattern {
        def: String,
        var: String,
    },
    AskNotParameter {
        def: String,
        var: String,
    },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::UnboundVariable { def, var } => {
                write!(f, "in {def}: unbound variable {var}")
            }
            Diagnostic::Arity {
                def,
                callee,
                expected,
                found,
            } => {
                write!(
                    f,
                    "in {def}: {callee} expects {expected} arguments, got {found}"
                )
            }
            Diagnostic::Duplicate(n) => write!(f, "duplicate definition of {n}"),
            Diagnostic::NonLinearPattern { def, var } => {
                write!(f, "in {def}: variable {var} bound twice")
            }
            Diagnostic::AskNotParameter { def, var } => {
                write!(f, "in {def}: ask on {var}, which is not a parameter")
            }
        }
    }
}

pub fn check_ccfl(p: &CcflProgram) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for d in &p.fun_defs {
        if !seen.insert(d.name.clone()) {
            out.push(Diagnostic::Duplicate(d.name.clone()));
        }
    }
    let mut cons = HashSet::new();
    for d in &p.data_decls {
        for c in &d.constructors {
            if !cons.insert(c.name.clone()) {
                out.push(Diagnostic::Duplicate(c.name.clone()));
            }
        }
    }
    let arities = effective_arities(p);
    for d in &p.fun_defs {
        let mut params = HashSet::new();
        for v in &d.params {
            if !params.insert(v) {
                out.push(Diagnostic::NonLinearPattern {
                    def: d.name.clone(),
                    var: v.clone(),
                });
            }
        }
        let bound: BTreeSet<String> = d.params.iter().cloned().collect();
        let mut bodies: Vec<(BTreeSet<String>, &Expr)> = Vec::new();
        match &d.guarded_alts {
            Some(alts) => {
                for a in alts {
                    if !d.params.contains(&a.ask.var) {
                        out.push(Diagnostic::AskNotParameter {
                            def: d.name.clone(),
                            var: a.ask.var.clone(),
                        });
                    }
                    let mut b = bound.clone();
                    b.extend(a.ask.pattern.vars());
                    bodies.push((b, &a.body));
                }
            }
            None => bodies.push((bound, &d.body)),
        }
        for (bound, body) in bodies {
            for v in body.free_vars(&bound) {
                if !arities.contains_key(&v) {
                    out.push(Diagnostic::UnboundVariable {
                        def: d.name.clone(),
                        var: v,
                    });
                }
            }
            check_calls(p, d, body, &arities, &mut out);
        }
    }
    out
}

fn check_calls(
    p: &CcflProgram,
    d: &FunDef,
    body: &Expr,
    arities: &HashMap<String, usize>,
    out: &mut Vec<Diagnostic>,
) {
    visit(body, &mut |e| match e {
        Expr::Con(c, args) => {
            if let Some(k) = p.con_arity(c) {
                if k != args.len() {
                    out.push(Diagnostic::Arity {
                        def: d.name.clone(),
                        callee: c.clone(),
                        expected: k,
                        found: args.len(),
                    });
                }
            }
        }
        Expr::Case(_, branches) => {
            for b in branches {
                if let Pattern::Con(c, vs) = &b.pattern {
                    if let Some(k) = p.con_arity(c) {
                        if k != vs.len() {
                            out.push(Diagnostic::Arity {
                                def: d.name.clone(),
                                callee: c.clone(),
                                expected: k,
                                found: vs.len(),
                            });
                        }
                    }
                    let mut s = HashSet::new();
                    for v in vs {
                        if !s.insert(v) {
                            out.push(Diagnostic::NonLinearPattern {
                                def: d.name.clone(),
                                var: v.clone(),
                            });
                        }
                    }
                }
            }
        }
        Expr::App(h, args) => {
            if let Expr::Var(f) = &**h {
                if d.params.contains(f) {
                    return;
                }
                if let (Some(k), Some(callee)) = (arities.get(f), p.fun(f)) {
                    if args.len() > *k && first_order(&callee.body) {
                        out.push(Diagnostic::Arity {
                            def: d.name.clone(),
                            callee: f.clone(),
                            expected: *k,
                            found: args.len(),
                        });
                    }
                }
            }
        }
        _ => {}
    });
}

fn first_order(e: &Expr) -> bool {
    matches!(
        e,
        Expr::Int(_) | Expr::Infix(..) | Expr::Con(..) | Expr::Equality(..) | Expr::Conj(_)
    )
}

/// Number of arguments each function takes once η-enriched.
pub fn effective_arities(p: &CcflProgram) -> HashMap<String, usize> {
    let mut ar: HashMap<String, usize> = p
        .fun_defs
        .iter()
        .map(|d| (d.name.clone(), d.params.len()))
        .collect();
    for _ in 0..p.fun_defs.len() + 1 {
        let mut changed = false;
        for d in &p.fun_defs {
            let extra = missing_args(d, &ar);
            let k = d.params.len() + extra;
            if ar[&d.name] != k {
                ar.insert(d.name.clone(), k);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    ar
}

fn missing_args(d: &FunDef, arities: &HashMap<String, usize>) -> usize {
    if d.guarded_alts.is_some() {
        return 0;
    }
    let (head, n) = match &d.body {
        Expr::Var(f) => (f, 0),
        Expr::App(h, args) => match &**h {
            Expr::Var(f) => (f, args.len()),
            _ => return 0,
        },
        _ => return 0,
    };
    if d.params.contains(head) || *head == d.name {
        return 0;
    }
    arities.get(head).map_or(0, |&k| k.saturating_sub(n))
}

/// Adds parameters until the body application is saturated.
pub fn eta_enrich(d: &FunDef, known_arities: &HashMap<String, usize>) -> FunDef {
    let extra = missing_args(d, known_arities);
    if extra == 0 {
        return d.clone();
    }
    let used = d.body.free_vars(&Default::default());
    let mut fresh = Vec::new();
    let mut i = 1;
    while fresh.len() < extra {
        let v = format!("x{i}");
        i += 1;
        if !used.contains(&v) && !d.params.contains(&v) && !known_arities.contains_key(&v) {
            fresh.push(v);
        }
    }
    let mut out = d.clone();
    out.params.extend(fresh.iter().cloned());
    out.body = Expr::app(
        d.body.clone(),
        fresh.iter().map(|v| Expr::Var(v.clone())).collect(),
    );
    out
}

/// η-enriches every definition of `p`.
pub fn eta_program(p: &CcflProgram) -> CcflProgram {
    let ar = effective_arities(p);
    let mut out = p.clone();
    out.fun_defs = p.fun_defs.iter().map(|d| eta_enrich(d, &ar)).collect();
    out
}
