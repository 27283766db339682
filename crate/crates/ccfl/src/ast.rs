//! Core syntax tree of CCFL programs.

use std::collections::BTreeSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
        }
    }

    pub fn apply(self, a: i64, b: i64) -> Option<i64> {
        match self {
            BinOp::Add => a.checked_add(b),
            BinOp::Sub => a.checked_sub(b),
            BinOp::Mul => a.checked_mul(b),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Pattern {
    Int(i64),
    /// Constructor with variable fields.
    Con(String, Vec<String>),
    /// Catch-all binding the scrutinee.
    Var(String),
}

impl Pattern {
    pub fn vars(&self) -> Vec<String> {
        match self {
            Pattern::Int(_) => Vec::new(),
            Pattern::Con(_, vs) => vs.clone(),
            Pattern::Var(v) => vec![v.clone()],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Branch {
    pub pattern: Pattern,
    pub body: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Var(String),
    Int(i64),
    Con(String, Vec<Expr>),
    App(Box<Expr>, Vec<Expr>),
    Infix(BinOp, Box<Expr>, Box<Expr>),
    Case(Box<Expr>, Vec<Branch>),
    Let(Vec<(String, Expr)>, Box<Expr>),
    With(Vec<String>, Box<Expr>),
    Equality(Box<Expr>, Box<Expr>),
    Conj(Vec<Expr>),
}

impl Expr {
    pub fn var(v: &str) -> Expr {
        Expr::Var(v.to_string())
    }

    pub fn app(head: Expr, args: Vec<Expr>) -> Expr {
        if args.is_empty() {
            return head;
        }
        match head {
            Expr::App(h, mut a) => {
                a.extend(args);
                Expr::App(h, a)
            }
            h => Expr::App(Box::new(h), args),
        }
    }

    pub fn infix(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Infix(op, Box::new(l), Box::new(r))
    }

    /// Free variables, with `bound` as the initially bound set.
    pub fn free_vars(&self, bound: &BTreeSet<String>) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut bound.clone(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut BTreeSet<String>, out: &mut BTreeSet<String>) {
        match self {
            Expr::Var(v) => {
                if !bound.contains(v) {
                    out.insert(v.clone());
                }
            }
            Expr::Int(_) => {}
            Expr::Con(_, args) | Expr::Conj(args) => {
                args.iter().for_each(|a| a.collect_free(bound, out))
            }
            Expr::App(h, args) => {
                h.collect_free(bound, out);
                args.iter().for_each(|a| a.collect_free(bound, out));
            }
            Expr::Infix(_, l, r) | Expr::Equality(l, r) => {
                l.collect_free(bound, out);
                r.collect_free(bound, out);
            }
            Expr::Case(s, branches) => {
                s.collect_free(bound, out);
                for b in branches {
                    let mut inner = bound.clone();
                    inner.extend(b.pattern.vars());
                    b.body.collect_free(&mut inner, out);
                }
            }
            Expr::Let(binds, body) => {
                let mut inner = bound.clone();
                for (v, e) in binds {
                    e.collect_free(&mut inner, out);
                    inner.insert(v.clone());
                }
                body.collect_free(&mut inner, out);
            }
            Expr::With(vs, body) => {
                let mut inner = bound.clone();
                inner.extend(vs.iter().cloned());
                body.collect_free(&mut inner, out);
            }
        }
    }

    /// Capture-avoiding substitution is unnecessary here because
    /// substituted terms are closed or fresh; binders shadow `name`.
    pub fn subst(&self, name: &str, with: &Expr) -> Expr {
        let go = |e: &Expr| e.subst(name, with);
        match self {
            Expr::Var(v) if v == name => with.clone(),
            Expr::Var(_) | Expr::Int(_) => self.clone(),
            Expr::Con(c, args) => Expr::Con(c.clone(), args.iter().map(go).collect()),
            Expr::Conj(args) => Expr::Conj(args.iter().map(go).collect()),
            Expr::App(h, args) => Expr::App(Box::new(go(h)), args.iter().map(go).collect()),
            Expr::Infix(op, l, r) => Expr::Infix(*op, Box::new(go(l)), Box::new(go(r))),
            Expr::Equality(l, r) => Expr::Equality(Box::new(go(l)), Box::new(go(r))),
            Expr::Case(s, branches) => Expr::Case(
                Box::new(go(s)),
                branches
                    .iter()
                    .map(|b| Branch {
                        pattern: b.pattern.clone(),
                        body: if b.pattern.vars().iter().any(|v| v == name) {
                            b.body.clone()
                        } else {
                            go(&b.body)
                        },
                    })
                    .collect(),
            ),
            Expr::Let(binds, body) => {
                let mut shadowed = false;
                let mut out = Vec::new();
                for (v, e) in binds {
                    out.push((v.clone(), if shadowed { e.clone() } else { go(e) }));
                    shadowed |= v == name;
                }
                let body = if shadowed { (**body).clone() } else { go(body) };
                Expr::Let(out, Box::new(body))
            }
            Expr::With(vs, body) => {
                if vs.iter().any(|v| v == name) {
                    self.clone()
                } else {
                    Expr::With(vs.clone(), Box::new(go(body)))
                }
            }
        }
    }
}

/// `var =:= C fields ->` in a guarded alternative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AskPattern {
    pub var: String,
    pub pattern: Pattern,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GuardedAlt {
    pub ask: AskPattern,
    pub body: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: Expr,
    pub is_constraint: bool,
    pub guarded_alts: Option<Vec<GuardedAlt>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConDecl {
    pub name: String,
    pub arity: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataDecl {
    pub name: String,
    pub params: Vec<String>,
    pub constructors: Vec<ConDecl>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeSig {
    pub name: String,
    pub text: String,
}

impl TypeSig {
    /// Constraint abstractions have result type `C`.
    pub fn is_constraint(&self) -> bool {
        self.text
            .split("->")
            .last()
            .map_or(false, |t| t.trim() == "C")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CcflProgram {
    pub data_decls: Vec<DataDecl>,
    pub fun_defs: Vec<FunDef>,
    pub type_sigs: Vec<TypeSig>,
}

pub const NIL: &str = "Nil";
pub const CONS: &str = "Cons";
pub const SUCCESS: &str = "Success";
pub const FAIL: &str = "Fail";

impl CcflProgram {
    pub fn fun(&self, name: &str) -> Option<&FunDef> {
        self.fun_defs.iter().find(|d| d.name == name)
    }

    /// Constructors with arities; the list type is always available.
    pub fn constructors(&self) -> Vec<(String, usize)> {
        let mut out: Vec<(String, usize)> = Vec::new();
        for d in &self.data_decls {
            for c in &d.constructors {
                out.push((c.name.clone(), c.arity));
            }
        }
        for (n, a) in [(NIL, 0), (CONS, 2)] {
            if !out.iter().any(|(m, _)| m == n) {
                out.push((n.to_string(), a));
            }
        }
        out
    }

    pub fn con_arity(&self, name: &str) -> Option<usize> {
        self.constructors()
            .into_iter()
            .find(|(n, _)| n == name)
            .map(|(_, a)| a)
    }

    /// Sibling constructors of `name` in declaration order.
    pub fn siblings(&self, name: &str) -> Vec<(String, usize)> {
        for d in &self.data_decls {
            if d.constructors.iter().any(|c| c.name == name) {
                return d
                    .constructors
                    .iter()
                    .map(|c| (c.name.clone(), c.arity))
                    .collect();
            }
        }
        if name == NIL || name == CONS {
            return vec![(NIL.to_string(), 0), (CONS.to_string(), 2)];
        }
        Vec::new()
    }

    pub fn arities(&self) -> std::collections::HashMap<String, usize> {
        self.fun_defs
            .iter()
            .map(|d| (d.name.clone(), d.params.len()))
            .collect()
    }
}
