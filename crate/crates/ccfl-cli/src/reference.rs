//! A substitution-based evaluator for CCFL, independent of the rewriting
//! engine. Used as an oracle for the compiled strategies.

use std::collections::BTreeMap;
use std::fmt;

use ccfl::ast::{FAIL, SUCCESS};
use ccfl::{eta_program, BinOp, Branch, CcflProgram, Expr, FunDef, Pattern, Term};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Leftmost-innermost.
    Cbv,
    /// Leftmost-outermost, down to full data normal form.
    Cbn,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Cbv => "cbv",
            Mode::Cbn => "cbn",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RefOutcome {
    Value(Term),
    /// The step budget ran out.
    Diverged(usize),
    /// Stuck on a free variable.
    Suspended,
}

impl fmt::Display for RefOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RefOutcome::Value(t) => write!(f, "{t}"),
            RefOutcome::Diverged(n) => write!(f, "diverged after {n} steps"),
            RefOutcome::Suspended => write!(f, "suspended"),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RefError {
    #[error("{0} has guarded alternatives; their choice is nondeterministic")]
    Nondeterministic(String),
    #[error("cannot apply {0}")]
    NotAFunction(String),
    #[error("arithmetic on non-integer {0}")]
    NotAnInteger(String),
    #[error("no case branch matches {0}")]
    NoBranch(String),
    #[error("integer overflow in {0}")]
    Overflow(String),
}

/// The result of a reference run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefRun {
    pub outcome: RefOutcome,
    /// Function unfoldings plus primitive operations.
    pub steps: usize,
    /// Values given to free query variables by equalities.
    pub bindings: BTreeMap<String, Term>,
}

enum Step {
    Reduced(Expr, bool),
    Bind(String, Expr),
    Value,
    Stuck,
}

struct Eval<'p> {
    p: &'p CcflProgram,
    mode: Mode,
    fresh: usize,
}

fn int(e: &Expr) -> Option<i64> {
    match e {
        Expr::Int(v) => Some(*v),
        _ => None,
    }
}

fn truth(b: bool) -> Expr {
    Expr::Con(if b { SUCCESS } else { FAIL }.to_string(), vec![])
}

impl Eval<'_> {
    fn fun(&self, name: &str) -> Option<&FunDef> {
        self.p.fun(name)
    }

    fn is_free(&self, e: &Expr) -> bool {
        matches!(e, Expr::Var(v) if self.fun(v).is_none())
    }

    /// Head of an application chain and its arguments.
    fn spine(e: &Expr) -> (&Expr, Vec<Expr>) {
        match e {
            Expr::App(h, args) => {
                let (head, mut pre) = Self::spine(h);
                pre.extend(args.iter().cloned());
                (head, pre)
            }
            _ => (e, Vec::new()),
        }
    }

    /// Whether `e` can no longer be reduced at its root.
    fn head_normal(&self, e: &Expr) -> bool {
        match e {
            Expr::Int(_) | Expr::Con(..) => true,
            Expr::Var(v) => self.fun(v).map_or(true, |d| !d.params.is_empty()),
            Expr::App(..) => {
                let (h, args) = Self::spine(e);
                match h {
                    Expr::Var(f) => self.fun(f).map_or(false, |d| args.len() < d.params.len()),
                    Expr::Con(c, a) => self.p.con_arity(c).map_or(false, |n| a.len() + args.len() <= n),
                    _ => false,
                }
            }
            _ => false,
        }
    }

    /// Steps the first argument that is not yet fully evaluated.
    fn step_args(&mut self, args: &[Expr], rebuild: impl Fn(Vec<Expr>) -> Expr) -> Result<Step, RefError> {
        let mut stuck = false;
        for (i, a) in args.iter().enumerate() {
            match self.step(a)? {
                Step::Reduced(e, counted) => {
                    let mut out = args.to_vec();
                    out[i] = e;
                    return Ok(Step::Reduced(rebuild(out), counted));
                }
                Step::Bind(v, e) => return Ok(Step::Bind(v, e)),
                Step::Stuck => stuck = true,
                Step::Value => {}
            }
        }
        Ok(if stuck { Step::Stuck } else { Step::Value })
    }

    fn step(&mut self, e: &Expr) -> Result<Step, RefError> {
        match e {
            Expr::Int(_) => Ok(Step::Value),
            Expr::Var(v) => match self.fun(v).cloned() {
                Some(d) if d.params.is_empty() => Ok(Step::Reduced(self.unfold(&d, &[])?, true)),
                _ => Ok(Step::Value),
            },
            Expr::Con(c, args) => {
                let c = c.clone();
                self.step_args(args, |a| Expr::Con(c.clone(), a))
            }
            Expr::Infix(op, l, r) => self.step_infix(*op, l, r),
            Expr::App(..) => self.step_app(e),
            Expr::Case(s, branches) => self.step_case(s, branches),
            Expr::Let(binds, body) => {
                let mut out = (**body).clone();
                for (v, b) in binds.iter().rev() {
                    out = out.subst(v, b);
                }
                Ok(Step::Reduced(out, false))
            }
            Expr::With(vs, body) => {
                let mut out = (**body).clone();
                for v in vs {
                    self.fresh += 1;
                    out = out.subst(v, &Expr::Var(format!("{v}'{}", self.fresh)));
                }
                Ok(Step::Reduced(out, false))
            }
            Expr::Equality(l, r) => self.step_equality(l, r),
            Expr::Conj(items) => self.step_conj(items),
        }
    }

    fn step_infix(&mut self, op: BinOp, l: &Expr, r: &Expr) -> Result<Step, RefError> {
        let args = [l.clone(), r.clone()];
        let rebuild = |a: Vec<Expr>| Expr::infix(op, a[0].clone(), a[1].clone());
        match self.step_args(&args, rebuild)? {
            Step::Value => {}
            other => return Ok(other),
        }
        match (int(l), int(r)) {
            (Some(a), Some(b)) => {
                let v = op.apply(a, b).ok_or_else(|| RefError::Overflow(format!("{a} {} {b}", op.symbol())))?;
                Ok(Step::Reduced(Expr::Int(v), true))
            }
            _ if self.is_free(l) || self.is_free(r) => Ok(Step::Stuck),
            _ => {
                let bad = if int(l).is_none() { l } else { r };
                Err(RefError::NotAnInteger(bad.to_string()))
            }
        }
    }

    fn unfold(&mut self, d: &FunDef, args: &[Expr]) -> Result<Expr, RefError> {
        if d.guarded_alts.is_some() {
            return Err(RefError::Nondeterministic(d.name.clone()));
        }
        self.fresh += 1;
        let mut body = freshen(&d.body, self.fresh);
        // rename parameters first so arguments cannot be captured
        let tmp: Vec<String> = d.params.iter().map(|p| format!("{p}'arg")).collect();
        for (p, t) in d.params.iter().zip(&tmp) {
            body = body.subst(p, &Expr::Var(t.clone()));
        }
        for (t, a) in tmp.iter().zip(args) {
            body = body.subst(t, a);
        }
        Ok(body)
    }

    fn step_app(&mut self, e: &Expr) -> Result<Step, RefError> {
        let (head, args) = Self::spine(e);
        let head = head.clone();
        if !self.head_normal(&head) {
            return match self.step(&head)? {
                Step::Reduced(h, c) => Ok(Step::Reduced(Expr::app(h, args), c)),
                other => Ok(other),
            };
        }
        let saturated = match &head {
            Expr::Var(f) => self.fun(f).map(|d| d.params.len()).filter(|n| args.len() >= *n),
            _ => None,
        };
        if self.mode == Mode::Cbv || saturated.is_none() {
            let h = head.clone();
            match self.step_args(&args, |a| Expr::app(h.clone(), a))? {
                Step::Value => {}
                other => return Ok(other),
            }
        }
        match &head {
            Expr::Var(f) if saturated.is_some() => {
                let n = saturated.unwrap();
                let d = self.fun(f).unwrap().clone();
                let body = self.unfold(&d, &args[..n])?;
                Ok(Step::Reduced(Expr::app(body, args[n..].to_vec()), true))
            }
            Expr::Var(_) if self.head_normal(&head) && !self.is_free(&head) => Ok(Step::Value),
            Expr::Con(c, a) => {
                let mut all = a.clone();
                all.extend(args);
                Ok(Step::Reduced(Expr::Con(c.clone(), all), false))
            }
            h if self.is_free(h) => Ok(Step::Stuck),
            h => Err(RefError::NotAFunction(h.to_string())),
        }
    }

    fn step_case(&mut self, s: &Expr, branches: &[Branch]) -> Result<Step, RefError> {
        // innermost evaluates the scrutinee fully, outermost to head form
        if self.mode == Mode::Cbv || !self.head_normal(s) {
            match self.step(s)? {
                Step::Reduced(x, c) => return Ok(Step::Reduced(Expr::Case(Box::new(x), branches.to_vec()), c)),
                Step::Bind(v, x) => return Ok(Step::Bind(v, x)),
                Step::Stuck => return Ok(Step::Stuck),
                Step::Value => {}
            }
        }
        if self.is_free(s) {
            return Ok(Step::Stuck);
        }
        for b in branches {
            match (&b.pattern, s) {
                (Pattern::Int(v), Expr::Int(w)) if v == w => return Ok(Step::Reduced(b.body.clone(), false)),
                (Pattern::Con(c, vs), Expr::Con(d, args)) if c == d && vs.len() == args.len() => {
                    let mut body = b.body.clone();
                    for (v, a) in vs.iter().zip(args) {
                        body = body.subst(v, a);
                    }
                    return Ok(Step::Reduced(body, false));
                }
                (Pattern::Var(v), _) => return Ok(Step::Reduced(b.body.subst(v, s), false)),
                _ => {}
            }
        }
        Err(RefError::NoBranch(s.to_string()))
    }

    fn step_equality(&mut self, l: &Expr, r: &Expr) -> Result<Step, RefError> {
        let args = [l.clone(), r.clone()];
        let rebuild = |a: Vec<Expr>| Expr::Equality(Box::new(a[0].clone()), Box::new(a[1].clone()));
        match self.step_args(&args, rebuild)? {
            Step::Value => {}
            other => return Ok(other),
        }
        match (self.is_free(l), self.is_free(r)) {
            (true, _) => Ok(self.bind(l, r)),
            (_, true) => Ok(self.bind(r, l)),
            _ => Ok(match self.equal(l, r) {
                Some(b) => Step::Reduced(truth(b), true),
                None => Step::Stuck,
            }),
        }
    }

    fn bind(&self, var: &Expr, value: &Expr) -> Step {
        match var {
            Expr::Var(v) if var != value => Step::Bind(v.clone(), value.clone()),
            _ => Step::Reduced(truth(true), true),
        }
    }

    /// Structural equality of two values; `None` when a free variable
    /// inside them decides it.
    fn equal(&self, l: &Expr, r: &Expr) -> Option<bool> {
        match (l, r) {
            (Expr::Int(a), Expr::Int(b)) => Some(a == b),
            (Expr::Con(c, a), Expr::Con(d, b)) => {
                if c != d || a.len() != b.len() {
                    return Some(false);
                }
                let mut out = Some(true);
                for (x, y) in a.iter().zip(b) {
                    match self.equal(x, y) {
                        Some(false) => return Some(false),
                        None => out = None,
                        Some(true) => {}
                    }
                }
                out
            }
            _ if self.is_free(l) || self.is_free(r) => None,
            _ => Some(l == r),
        }
    }

    fn step_conj(&mut self, items: &[Expr]) -> Result<Step, RefError> {
        let rebuild = |a: Vec<Expr>| Expr::Conj(a);
        match self.step_args(items, rebuild)? {
            Step::Value => {}
            other => return Ok(other),
        }
        let is = |e: &Expr, name: &str| matches!(e, Expr::Con(c, a) if c == name && a.is_empty());
        if items.iter().any(|e| is(e, FAIL)) {
            return Ok(Step::Reduced(truth(false), true));
        }
        if items.iter().all(|e| is(e, SUCCESS)) {
            return Ok(Step::Reduced(truth(true), true));
        }
        Ok(Step::Stuck)
    }
}

/// Renames every binder inside `e` apart from source names.
fn freshen(e: &Expr, k: usize) -> Expr {
    let new = |v: &str| format!("{v}'{k}");
    let go = |x: &Expr| freshen(x, k);
    match e {
        Expr::Var(_) | Expr::Int(_) => e.clone(),
        Expr::Con(c, a) => Expr::Con(c.clone(), a.iter().map(go).collect()),
        Expr::Conj(a) => Expr::Conj(a.iter().map(go).collect()),
        Expr::App(h, a) => Expr::App(Box::new(go(h)), a.iter().map(go).collect()),
        Expr::Infix(op, l, r) => Expr::Infix(*op, Box::new(go(l)), Box::new(go(r))),
        Expr::Equality(l, r) => Expr::Equality(Box::new(go(l)), Box::new(go(r))),
        Expr::Case(sc, branches) => {
            let branches = branches
                .iter()
                .map(|b| {
                    let mut body = go(&b.body);
                    for v in b.pattern.vars() {
                        body = body.subst(&v, &Expr::Var(new(&v)));
                    }
                    let pattern = match &b.pattern {
                        Pattern::Int(i) => Pattern::Int(*i),
                        Pattern::Var(v) => Pattern::Var(new(v)),
                        Pattern::Con(c, vs) => Pattern::Con(c.clone(), vs.iter().map(|v| new(v)).collect()),
                    };
                    Branch { pattern, body }
                })
                .collect();
            Expr::Case(Box::new(go(sc)), branches)
        }
        Expr::Let(binds, body) => {
            let mut out = Vec::new();
            let mut renamed: Vec<&String> = Vec::new();
            for (v, b) in binds {
                let mut b = go(b);
                for r in &renamed {
                    b = b.subst(r, &Expr::Var(new(r)));
                }
                out.push((new(v), b));
                renamed.push(v);
            }
            let mut body = go(body);
            for r in renamed {
                body = body.subst(r, &Expr::Var(new(r)));
            }
            Expr::Let(out, Box::new(body))
        }
        Expr::With(vs, body) => {
            let mut body = go(body);
            for v in vs {
                body = body.subst(v, &Expr::Var(new(v)));
            }
            Expr::With(vs.iter().map(|v| new(v)).collect(), Box::new(body))
        }
    }
}

fn to_term(p: &CcflProgram, e: &Expr) -> Term {
    match e {
        Expr::Int(v) => Term::Int(*v),
        Expr::Con(c, args) => Term::Con(c.clone(), args.iter().map(|a| to_term(p, a)).collect()),
        Expr::Var(v) if p.fun(v).is_some() => Term::Partial(v.clone(), vec![]),
        Expr::Var(v) => Term::Free(v.clone()),
        _ => {
            let (h, args) = Eval::spine(e);
            let name = match h {
                Expr::Var(f) => f.clone(),
                other => other.to_string(),
            };
            Term::Partial(name, args.iter().map(|a| to_term(p, a)).collect())
        }
    }
}

/// Evaluates `q` under `p` with at most `budget` counted steps.
pub fn reference_eval(p: &CcflProgram, q: &Expr, mode: Mode, budget: usize) -> Result<RefRun, RefError> {
    let enriched = eta_program(p);
    let p = &enriched;
    let mut ev = Eval { p, mode, fresh: 0 };
    let mut e = q.clone();
    let mut steps = 0;
    let mut moves = 0usize;
    let mut bindings: BTreeMap<String, Expr> = BTreeMap::new();
    let outcome = loop {
        if steps >= budget || moves > budget.saturating_mul(20).saturating_add(1000) {
            break RefOutcome::Diverged(steps);
        }
        moves += 1;
        match ev.step(&e)? {
            Step::Reduced(next, counted) => {
                e = next;
                steps += usize::from(counted);
            }
            Step::Bind(v, value) => {
                e = e.subst(&v, &value);
                for b in bindings.values_mut() {
                    *b = b.subst(&v, &value);
                }
                bindings.insert(v, value);
                steps += 1;
            }
            Step::Value => break RefOutcome::Value(to_term(p, &e)),
            Step::Stuck => break RefOutcome::Suspended,
        }
    };
    let bindings = bindings
        .into_iter()
        .filter(|(v, _)| !v.contains('\''))
        .map(|(v, x)| (v, to_term(p, &x)))
        .collect();
    Ok(RefRun { outcome, steps, bindings })
}
