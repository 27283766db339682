//! Flat compilation: one atom per operation, one rule per case path.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use hgraph::{serialize_rule, AtomT, CmpOp, Functor, Guard, GuardCmp, IntExpr, Rule, Template};

use crate::ast::{BinOp, CcflProgram, Expr, FunDef, Pattern, FAIL, SUCCESS};
use crate::check::eta_program;

pub const APP: &str = "app";
pub const EQ: &str = "eq_";
pub const AND: &str = "and_";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Options {
    /// Call known functions directly instead of through `app` atoms.
    pub inline_app: bool,
}

/// `head, patterns :- guard | body.` where `head` is the call atom and the
/// patterns are constructor atoms required on its arguments.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatRule {
    pub head: AtomT,
    pub patterns: Vec<AtomT>,
    pub guard: Guard,
    pub body: Vec<AtomT>,
}

impl FlatRule {
    pub fn result(&self) -> &str {
        self.head
            .args
            .last()
            .expect("head atoms carry a result link")
    }

    pub fn to_rule(&self) -> Rule {
        let lhs = Template {
            atoms: lhs_atoms(&self.head, &self.patterns),
            ..Template::default()
        };
        let rhs = Template {
            atoms: self.body.clone(),
            ..Template::default()
        };
        Rule::new(None, lhs, self.guard.clone(), rhs).expect("flat rules are well formed")
    }
}

/// Constant atoms among the patterns go first so they print inline.
pub(crate) fn lhs_atoms(head: &AtomT, patterns: &[AtomT]) -> Vec<AtomT> {
    let mut atoms = vec![head.clone()];
    atoms.extend(patterns.iter().cloned());
    atoms
}

impl fmt::Display for FlatRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", serialize_rule(&self.to_rule()))
    }
}

/// Engine name of a constructor.
pub fn con_functor_name(c: &str) -> String {
    let mut cs = c.chars();
    match cs.next() {
        Some(h) => h.to_lowercase().chain(cs).collect(),
        None => String::new(),
    }
}

pub(crate) fn arith_name(op: BinOp) -> &'static str {
    op.symbol()
}

/// Functors that denote values: constructors, function constants and
/// partial applications, and constraint outcomes.
pub fn data_functors(p: &CcflProgram) -> BTreeSet<Functor> {
    let mut out = BTreeSet::new();
    for (c, n) in p.constructors() {
        out.insert(Functor::new(con_functor_name(&c), n + 1));
    }
    for c in [SUCCESS, FAIL] {
        out.insert(Functor::new(con_functor_name(c), 1));
    }
    for (f, k) in crate::check::effective_arities(p) {
        for j in 0..k {
            out.insert(Functor::new(f.clone(), j + 1));
        }
    }
    out
}

/// A CCFL program prepared for rule generation: η-enriched, `let`s
/// substituted, and nested `case`s lifted into auxiliary functions.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub program: CcflProgram,
    pub arities: HashMap<String, usize>,
}

pub fn prepare(p: &CcflProgram) -> Prepared {
    let mut program = eta_program(p);
    for d in &mut program.fun_defs {
        d.body = expand_lets(&d.body);
        if let Some(alts) = &mut d.guarded_alts {
            for a in alts.iter_mut() {
                a.body = expand_lets(&a.body);
            }
        }
    }
    let mut lifter = Lifter {
        globals: program.fun_defs.iter().map(|d| d.name.clone()).collect(),
        aux: Vec::new(),
        n: 0,
    };
    let mut queue: Vec<FunDef> = std::mem::take(&mut program.fun_defs);
    let mut done = Vec::new();
    while let Some(mut d) = queue.pop() {
        let bound: HashSet<String> = d.params.iter().cloned().collect();
        if let Some(alts) = &mut d.guarded_alts {
            for a in alts.iter_mut() {
                let mut b = bound.clone();
                b.extend(a.ask.pattern.vars());
                a.body = lifter.top(&d.name, &a.body, &b);
            }
        } else {
            d.body = lifter.top(&d.name, &d.body, &bound);
        }
        done.push(d);
        queue.extend(lifter.aux.drain(..));
        lifter.globals.extend(queue.iter().map(|d| d.name.clone()));
    }
    done.sort_by_key(|d| {
        p.fun_defs
            .iter()
            .position(|e| e.name == d.name)
            .unwrap_or(usize::MAX)
    });
    program.fun_defs = done;
    let arities = program
        .fun_defs
        .iter()
        .map(|d| (d.name.clone(), d.params.len()))
        .collect();
    Prepared { program, arities }
}

pub fn expand_lets(e: &Expr) -> Expr {
    let rec = |x: &Expr| expand_lets(x);
    match e {
        Expr::Let(binds, body) => {
            let mut out = (**body).clone();
            for (v, x) in binds.iter().rev() {
                out = out.subst(v, x);
            }
            expand_lets(&out)
        }
        Expr::Var(_) | Expr::Int(_) => e.clone(),
        Expr::Con(c, a) => Expr::Con(c.clone(), a.iter().map(rec).collect()),
        Expr::Conj(a) => Expr::Conj(a.iter().map(rec).collect()),
        Expr::App(h, a) => Expr::App(Box::new(rec(h)), a.iter().map(rec).collect()),
        Expr::Infix(op, l, r) => Expr::Infix(*op, Box::new(rec(l)), Box::new(rec(r))),
        Expr::Equality(l, r) => Expr::Equality(Box::new(rec(l)), Box::new(rec(r))),
        Expr::Case(s, bs) => Expr::Case(
            Box::new(rec(s)),
            bs.iter()
                .map(|b| crate::ast::Branch {
                    pattern: b.pattern.clone(),
                    body: rec(&b.body),
                })
                .collect(),
        ),
        Expr::With(vs, b) => Expr::With(vs.clone(), Box::new(rec(b))),
    }
}

struct Lifter {
    globals: HashSet<String>,
    aux: Vec<FunDef>,
    n: usize,
}

impl Lifter {
    /// Rewrites a body position: a case on a bound variable may stay.
    fn top(&mut self, owner: &str, e: &Expr, bound: &HashSet<String>) -> Expr {
        match e {
            Expr::Case(s, bs) if matches!(&**s, Expr::Var(v) if bound.contains(v)) => Expr::Case(
                s.clone(),
                bs.iter()
                    .map(|b| {
                        let mut inner = bound.clone();
                        inner.extend(b.pattern.vars());
                        crate::ast::Branch {
                            pattern: b.pattern.clone(),
                            body: self.top(owner, &b.body, &inner),
                        }
                    })
                    .collect(),
            ),
            Expr::With(vs, body) => {
                let mut inner = bound.clone();
                inner.extend(vs.iter().cloned());
                Expr::With(vs.clone(), Box::new(self.inner(owner, body, &inner)))
            }
            _ => self.inner(owner, e, bound),
        }
    }

    fn inner(&mut self, owner: &str, e: &Expr, bound: &HashSet<String>) -> Expr {
        if let Expr::Case(s, bs) = e {
            return self.lift_case(owner, e, s, bs, bound);
        }
        let mut go = |x: &Expr| self.inner(owner, x, bound);
        match e {
            Expr::Var(_) | Expr::Int(_) => e.clone(),
            Expr::Con(c, a) => Expr::Con(c.clone(), a.iter().map(&mut go).collect()),
            Expr::Conj(a) => Expr::Conj(a.iter().map(&mut go).collect()),
            Expr::App(h, a) => {
                let h = go(h);
                Expr::App(Box::new(h), a.iter().map(&mut go).collect())
            }
            Expr::Infix(op, l, r) => {
                let l = go(l);
                Expr::Infix(*op, Box::new(l), Box::new(go(r)))
            }
            Expr::Equality(l, r) => {
                let l = go(l);
                Expr::Equality(Box::new(l), Box::new(go(r)))
            }
            Expr::With(vs, b) => {
                let mut inner = bound.clone();
                inner.extend(vs.iter().cloned());
                Expr::With(vs.clone(), Box::new(self.inner(owner, b, &inner)))
            }
            Expr::Let(..) => self.inner(owner, &expand_lets(e), bound),
            Expr::Case(..) => unreachable!(),
        }
    }

    fn lift_case(
        &mut self,
        owner: &str,
        e: &Expr,
        s: &Expr,
        bs: &[crate::ast::Branch],
        bound: &HashSet<String>,
    ) -> Expr {
        {
            {
                self.n += 1;
                let mut name = format!("{owner}_case{}", self.n);
                while self.globals.contains(&name) {
                    self.n += 1;
                    name = format!("{owner}_case{}", self.n);
                }
                self.globals.insert(name.clone());
                let fv: Vec<String> = e
                    .free_vars(&Default::default())
                    .into_iter()
                    .filter(|v| !self.globals.contains(v) || bound.contains(v))
                    .collect();
                let (params, scrut_var, call_args) = match s {
                    Expr::Var(v) if fv.contains(v) => (
                        fv.clone(),
                        v.clone(),
                        fv.iter().map(|v| Expr::Var(v.clone())).collect::<Vec<_>>(),
                    ),
                    _ => {
                        let mut sv = "s".to_string();
                        while fv.contains(&sv) {
                            sv.push('\'');
                        }
                        let mut params = fv.clone();
                        params.push(sv.clone());
                        let mut args: Vec<Expr> = fv.iter().map(|v| Expr::Var(v.clone())).collect();
                        args.push(self.inner(owner, s, bound));
                        (params, sv, args)
                    }
                };
                let body = Expr::Case(Box::new(Expr::Var(scrut_var)), bs.to_vec());
                let is_constraint = crate::parse::visit_any(&body, &|x| {
                    matches!(x, Expr::Equality(..) | Expr::Conj(_))
                });
                self.aux.push(FunDef {
                    name: name.clone(),
                    params,
                    body,
                    is_constraint,
                    guarded_alts: None,
                });
                Expr::App(Box::new(Expr::Var(name)), call_args)
            }
        }
    }
}

/// Per-rule link naming.
#[derive(Default)]
struct Names {
    used: HashSet<String>,
    next: usize,
    tmp: usize,
}

impl Names {
    fn var(&mut self, ccfl: &str) -> String {
        let mut n = ccfl.to_uppercase().replace('\'', "_");
        if n.starts_with('V') && n[1..].chars().all(|c| c.is_ascii_digit()) {
            n.insert(0, 'P');
        }
        while self.used.contains(&n) {
            n.push('_');
        }
        self.used.insert(n.clone());
        n
    }

    fn fresh(&mut self) -> String {
        loop {
            let n = format!("V{}", self.next);
            self.next += 1;
            if self.used.insert(n.clone()) {
                return n;
            }
        }
    }

    /// Link of an inlined constant.
    fn tmp(&mut self) -> String {
        self.tmp += 1;
        format!("~{}", self.tmp)
    }
}

pub struct Compiler<'a> {
    pub prepared: &'a Prepared,
    pub opts: Options,
}

struct Path {
    patterns: Vec<AtomT>,
    guard: Vec<GuardCmp>,
    env: HashMap<String, String>,
}

impl<'a> Compiler<'a> {
    pub fn new(prepared: &'a Prepared, opts: Options) -> Self {
        Compiler { prepared, opts }
    }

    fn program(&self) -> &CcflProgram {
        &self.prepared.program
    }

    fn arity(&self, f: &str) -> Option<usize> {
        self.prepared.arities.get(f).copied()
    }

    /// Rules for one (prepared) definition.
    pub fn compile_fundef(&self, d: &FunDef) -> Vec<FlatRule> {
        let mut names = Names::default();
        let params: Vec<String> = d.params.iter().map(|p| names.var(p)).collect();
        let result = names.fresh();
        let mut head_args = params.clone();
        head_args.push(result.clone());
        let head = AtomT {
            name: d.name.clone(),
            kind: hgraph::AtomKind::Plain,
            args: head_args,
        };
        let env: HashMap<String, String> = d.params.iter().cloned().zip(params).collect();
        let mut out = Vec::new();
        match &d.guarded_alts {
            Some(alts) => {
                for a in alts {
                    let mut names = Names {
                        used: names.used.clone(),
                        next: names.next,
                        tmp: 0,
                    };
                    let mut path = Path {
                        patterns: Vec::new(),
                        guard: Vec::new(),
                        env: env.clone(),
                    };
                    let s = env[&a.ask.var].clone();
                    let body = match &a.ask.pattern {
                        Pattern::Int(v) => {
                            path.guard.push(cmp(CmpOp::Eq, &s, *v));
                            a.body.subst(&a.ask.var, &Expr::Int(*v))
                        }
                        Pattern::Con(c, fields) => {
                            path.patterns.push(self.con_pattern(
                                c,
                                fields,
                                &s,
                                &mut names,
                                &mut path.env,
                            ));
                            a.body.clone()
                        }
                        Pattern::Var(v) => {
                            path.env.insert(v.clone(), s);
                            a.body.clone()
                        }
                    };
                    self.paths(&head, &body, path, &mut names, &mut out);
                }
            }
            None => {
                let path = Path {
                    patterns: Vec::new(),
                    guard: Vec::new(),
                    env,
                };
                self.paths(&head, &d.body, path, &mut names, &mut out);
            }
        }
        out
    }

    fn con_pattern(
        &self,
        c: &str,
        fields: &[String],
        scrut: &str,
        names: &mut Names,
        env: &mut HashMap<String, String>,
    ) -> AtomT {
        let mut args: Vec<String> = fields
            .iter()
            .map(|f| {
                let l = names.var(f);
                env.insert(f.clone(), l.clone());
                l
            })
            .collect();
        args.push(scrut.to_string());
        AtomT {
            name: con_functor_name(c),
            kind: hgraph::AtomKind::Plain,
            args,
        }
    }

    fn paths(
        &self,
        head: &AtomT,
        body: &Expr,
        path: Path,
        names: &mut Names,
        out: &mut Vec<FlatRule>,
    ) {
        let Expr::Case(s, branches) = body else {
            let result = head.args.last().unwrap().clone();
            let mut fl = Flattener {
                c: self,
                names,
                env: path.env,
                atoms: Vec::new(),
                deferred: Vec::new(),
            };
            fl.flatten(body, &result);
            let atoms = fl.atoms;
            out.push(FlatRule {
                head: head.clone(),
                patterns: path.patterns,
                guard: Guard {
                    conjuncts: path.guard,
                },
                body: atoms,
            });
            return;
        };
        let Expr::Var(sv) = &**s else {
            unreachable!("prepare lifts cases on non-variables")
        };
        let scrut = path.env[sv].clone();
        let mut lits = Vec::new();
        let mut cons: Vec<String> = Vec::new();
        for b in branches {
            match &b.pattern {
                Pattern::Int(v) => {
                    let mut guard = path.guard.clone();
                    guard.extend(lits.iter().map(|l| cmp(CmpOp::Ne, &scrut, *l)));
                    guard.push(cmp(CmpOp::Eq, &scrut, *v));
                    let p = Path {
                        patterns: path.patterns.clone(),
                        guard,
                        env: path.env.clone(),
                    };
                    self.paths(
                        head,
                        &b.body.subst(sv, &Expr::Int(*v)),
                        p,
                        &mut names.fork(),
                        out,
                    );
                    lits.push(*v);
                }
                Pattern::Con(c, fields) => {
                    if cons.contains(c) {
                        continue;
                    }
                    let mut n = names.fork();
                    let mut env = path.env.clone();
                    let pat = self.con_pattern(c, fields, &scrut, &mut n, &mut env);
                    let mut patterns = path.patterns.clone();
                    patterns.push(pat);
                    self.paths(
                        head,
                        &b.body,
                        Path {
                            patterns,
                            guard: path.guard.clone(),
                            env,
                        },
                        &mut n,
                        out,
                    );
                    cons.push(c.clone());
                }
                Pattern::Var(v) => {
                    if cons.is_empty() {
                        let mut guard = path.guard.clone();
                        guard.extend(lits.iter().map(|l| cmp(CmpOp::Ne, &scrut, *l)));
                        let mut env = path.env.clone();
                        env.insert(v.clone(), scrut.clone());
                        let p = Path {
                            patterns: path.patterns.clone(),
                            guard,
                            env,
                        };
                        self.paths(head, &b.body, p, &mut names.fork(), out);
                    } else {
                        for (c, k) in self.program().siblings(&cons[0]) {
                            if cons.contains(&c) {
                                continue;
                            }
                            let mut n = names.fork();
                            let mut env = path.env.clone();
                            let fields: Vec<String> = (0..k).map(|i| format!("{v}_{i}")).collect();
                            let pat = self.con_pattern(&c, &fields, &scrut, &mut n, &mut env);
                            env.insert(v.clone(), scrut.clone());
                            let mut patterns = path.patterns.clone();
                            patterns.push(pat);
                            self.paths(
                                head,
                                &b.body,
                                Path {
                                    patterns,
                                    guard: path.guard.clone(),
                                    env,
                                },
                                &mut n,
                                out,
                            );
                        }
                    }
                    break;
                }
            }
        }
    }

    /// `app` rules for every function taking arguments.
    pub fn app_rules(&self) -> Vec<FlatRule> {
        let mut out = Vec::new();
        for d in &self.program().fun_defs {
            let k = d.params.len();
            for j in 0..k {
                let mut names = Names::default();
                let held: Vec<String> = (0..j).map(|_| names.fresh()).collect();
                let f = if j == 0 { names.tmp() } else { names.fresh() };
                let x = names.fresh();
                let r = names.fresh();
                let mut part = held.clone();
                part.push(f.clone());
                let pattern = AtomT {
                    name: d.name.clone(),
                    kind: hgraph::AtomKind::Plain,
                    args: part,
                };
                let head = AtomT::new(APP, &[&f, &x, &r]);
                let mut call = held;
                call.push(x);
                call.push(r);
                let body = vec![AtomT {
                    name: d.name.clone(),
                    kind: hgraph::AtomKind::Plain,
                    args: call,
                }];
                out.push(FlatRule {
                    head,
                    patterns: vec![pattern],
                    guard: Guard::default(),
                    body,
                });
            }
        }
        out
    }

    /// Program rules followed by the `app` rules.
    pub fn all_rules(&self) -> Vec<FlatRule> {
        let mut out: Vec<FlatRule> = self
            .program()
            .fun_defs
            .iter()
            .flat_map(|d| self.compile_fundef(d))
            .collect();
        out.extend(self.app_rules());
        out
    }

    /// Flattens a query; free variables keep their own names as links.
    pub fn flatten_query(&self, e: &Expr, result: &str) -> Vec<AtomT> {
        let mut names = Names::default();
        names.used.insert(result.to_string());
        let env: HashMap<String, String> = crate::parse::query_vars(e, self.program())
            .into_iter()
            .map(|v| {
                names.used.insert(v.clone());
                (v.clone(), v)
            })
            .collect();
        let mut fl = Flattener {
            c: self,
            names: &mut names,
            env,
            atoms: Vec::new(),
            deferred: Vec::new(),
        };
        let e = fl.c.lift_query(e);
        fl.flatten(&e, result);
        fl.atoms
    }

    fn lift_query(&self, e: &Expr) -> Expr {
        let e = expand_lets(e);
        let mut has_case = false;
        crate::parse::visit(&e, &mut |x| has_case |= matches!(x, Expr::Case(..)));
        assert!(!has_case, "case in a query must be wrapped in a definition");
        e
    }
}

impl Names {
    fn fork(&self) -> Names {
        Names {
            used: self.used.clone(),
            next: self.next,
            tmp: self.tmp,
        }
    }
}

fn cmp(op: CmpOp, v: &str, lit: i64) -> GuardCmp {
    GuardCmp {
        op,
        lhs: IntExpr::Var(v.to_string()),
        rhs: IntExpr::Lit(lit),
    }
}

struct Flattener<'c, 'n> {
    c: &'c Compiler<'c>,
    names: &'n mut Names,
    env: HashMap<String, String>,
    atoms: Vec<AtomT>,
    deferred: Vec<(String, Expr)>,
}

impl Flattener<'_, '_> {
    fn plain(name: &str, args: Vec<String>) -> AtomT {
        AtomT {
            name: name.to_string(),
            kind: hgraph::AtomKind::Plain,
            args,
        }
    }

    /// Link carrying the value of `e`; constants get inline links.
    fn arg(&mut self, e: &Expr) -> (String, Option<Expr>) {
        match e {
            Expr::Var(v) if self.env.contains_key(v) => (self.env[v].clone(), None),
            Expr::Int(_) => (self.names.tmp(), Some(e.clone())),
            Expr::Var(f) if self.c.arity(f).map_or(false, |k| k > 0) => {
                (self.names.tmp(), Some(e.clone()))
            }
            Expr::Con(_, a) if a.is_empty() => (self.names.tmp(), Some(e.clone())),
            _ => (self.names.fresh(), Some(e.clone())),
        }
    }

    fn args(&mut self, es: &[Expr]) -> Vec<String> {
        let pending: Vec<(String, Option<Expr>)> = es.iter().map(|e| self.arg(e)).collect();
        let links = pending.iter().map(|(l, _)| l.clone()).collect();
        self.deferred
            .extend(pending.into_iter().filter_map(|(l, e)| e.map(|e| (l, e))));
        links
    }

    fn flatten(&mut self, e: &Expr, r: &str) {
        let mut queue = vec![(r.to_string(), e.clone())];
        while !queue.is_empty() {
            let (r, e) = queue.remove(0);
            self.deferred.clear();
            self.one(&e, &r);
            let mut next: Vec<(String, Expr)> = std::mem::take(&mut self.deferred);
            next.extend(queue);
            queue = next;
        }
    }

    /// Emits the atom(s) computing the root of `e` on link `r`.
    fn one(&mut self, e: &Expr, r: &str) {
        match e {
            Expr::Int(v) => self.atoms.push(AtomT::int(*v, r)),
            Expr::Var(v) => {
                if let Some(l) = self.env.get(v) {
                    let l = l.clone();
                    self.atoms.push(AtomT::connector(r, &l));
                } else {
                    // function constant, or a call of a zero-arity function
                    self.atoms.push(Self::plain(v, vec![r.to_string()]));
                }
            }
            Expr::Con(c, args) => {
                let mut links = self.args(args);
                links.push(r.to_string());
                self.atoms.push(Self::plain(&con_functor_name(c), links));
            }
            Expr::Infix(op, l, rr) => {
                let mut links = self.args(&[(**l).clone(), (**rr).clone()]);
                links.push(r.to_string());
                self.atoms.push(Self::plain(arith_name(*op), links));
            }
            Expr::Equality(l, rr) => {
                let mut links = self.args(&[(**l).clone(), (**rr).clone()]);
                links.push(r.to_string());
                self.atoms.push(Self::plain(EQ, links));
            }
            Expr::Conj(items) => {
                let mut acc = self.args(&items[..1]).remove(0);
                for (i, it) in items.iter().enumerate().skip(1) {
                    let x = self.args(std::slice::from_ref(it)).remove(0);
                    let out = if i + 1 == items.len() {
                        r.to_string()
                    } else {
                        self.names.fresh()
                    };
                    self.atoms.push(Self::plain(AND, vec![acc, x, out.clone()]));
                    acc = out;
                }
                if items.len() == 1 {
                    self.atoms.push(AtomT::connector(r, &acc));
                }
            }
            Expr::With(vs, body) => {
                for v in vs {
                    let l = self.names.var(v);
                    self.env.insert(v.clone(), l);
                }
                self.one(body, r);
            }
            Expr::App(h, args) => self.app(h, args, r),
            Expr::Let(..) | Expr::Case(..) => {
                unreachable!("prepared bodies have no let or nested case")
            }
        }
    }

    fn app(&mut self, h: &Expr, args: &[Expr], r: &str) {
        let known = match h {
            Expr::Var(f) if !self.env.contains_key(f) => self.c.arity(f).map(|k| (f.clone(), k)),
            _ => None,
        };
        let (mut head, rest): (String, &[Expr]) = match known {
            Some((f, k)) if self.c.opts.inline_app && args.len() >= k => {
                let mut links = self.args(&args[..k]);
                let out = if args.len() == k {
                    r.to_string()
                } else {
                    self.names.fresh()
                };
                links.push(out.clone());
                self.atoms.push(Self::plain(&f, links));
                (out, &args[k..])
            }
            Some((f, _)) if self.c.opts.inline_app => {
                let mut links = self.args(args);
                links.push(r.to_string());
                self.atoms.push(Self::plain(&f, links));
                return;
            }
            Some((f, 0)) => {
                let out = self.names.fresh();
                self.atoms.push(Self::plain(&f, vec![out.clone()]));
                (out, args)
            }
            _ => {
                let (l, e) = self.arg(h);
                if let Some(e) = e {
                    self.deferred.push((l.clone(), e));
                }
                (l, args)
            }
        };
        for (i, a) in rest.iter().enumerate() {
            let x = self.args(std::slice::from_ref(a)).remove(0);
            let out = if i + 1 == rest.len() {
                r.to_string()
            } else {
                self.names.fresh()
            };
            self.atoms
                .push(Self::plain(APP, vec![head, x, out.clone()]));
            head = out;
        }
    }
}
