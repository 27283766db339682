use std::collections::BTreeSet;
use std::sync::Arc;

use crate::graph::{AtomKind, Functor};

/// An atom inside a rule template. Arguments are link variable names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomT {
    pub name: String,
    pub kind: AtomKind,
    pub args: Vec<String>,
}

impl AtomT {
    pub fn new(name: impl Into<String>, args: &[&str]) -> Self {
        AtomT { name: name.into(), kind: AtomKind::Plain, args: args.iter().map(|s| s.to_string()).collect() }
    }

    pub fn int(value: i64, var: &str) -> Self {
        AtomT { name: value.to_string(), kind: AtomKind::Int(value), args: vec![var.to_string()] }
    }

    pub fn connector(a: &str, b: &str) -> Self {
        AtomT { name: "=".into(), kind: AtomKind::Connector, args: vec![a.to_string(), b.to_string()] }
    }

    pub fn functor(&self) -> Functor {
        Functor::new(self.name.clone(), self.args.len())
    }

    pub fn is_arith(&self) -> bool {
        self.kind == AtomKind::Plain && self.args.len() == 3 && ArithOp::from_name(&self.name).is_some()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

impl ArithOp {
    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "+" => Some(ArithOp::Add),
            "-" => Some(ArithOp::Sub),
            "*" => Some(ArithOp::Mul),
            _ => None,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
        }
    }

    /// Checked 64-bit evaluation; `None` on overflow.
    pub fn apply(self, a: i64, b: i64) -> Option<i64> {
        match self {
            ArithOp::Add => a.checked_add(b),
            ArithOp::Sub => a.checked_sub(b),
            ArithOp::Mul => a.checked_mul(b),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Polarity {
    /// `+L`: the cell produces L.
    Plus,
    /// `-L`: the cell consumes L.
    Minus,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Port {
    pub polarity: Polarity,
    pub var: String,
}

/// A process template: the contents of a rule side or of a cell template.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Template {
    pub atoms: Vec<AtomT>,
    pub cells: Vec<CellT>,
    /// Process contexts; on a lhs at most one per cell.
    pub procs: Vec<String>,
    pub rule_ctx: Option<String>,
    pub ports: Vec<Port>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CellT {
    pub body: Template,
    pub stable: bool,
}

impl CellT {
    pub fn new(body: Template) -> Self {
        CellT { body, stable: false }
    }
}

impl Template {
    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
            && self.cells.is_empty()
            && self.procs.is_empty()
            && self.rule_ctx.is_none()
            && self.ports.is_empty()
    }

    /// Whether any cell template at any depth carries the stable flag.
    pub fn has_stable_flag(&self) -> bool {
        self.cells.iter().any(|c| c.stable || c.body.has_stable_flag())
    }

    pub fn proc_contexts(&self, out: &mut Vec<String>) {
        out.extend(self.procs.iter().cloned());
        for c in &self.cells {
            c.body.proc_contexts(out);
        }
    }

    pub fn rule_contexts(&self, out: &mut Vec<String>) {
        out.extend(self.rule_ctx.iter().cloned());
        for c in &self.cells {
            c.body.rule_contexts(out);
        }
    }

    pub fn vars(&self, out: &mut BTreeSet<String>) {
        for a in &self.atoms {
            out.extend(a.args.iter().cloned());
        }
        for p in &self.ports {
            out.insert(p.var.clone());
        }
        for c in &self.cells {
            c.body.vars(out);
        }
    }

    pub fn all_atoms(&self) -> Vec<&AtomT> {
        let mut v: Vec<&AtomT> = self.atoms.iter().collect();
        for c in &self.cells {
            v.extend(c.body.all_atoms());
        }
        v
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IntExpr {
    Var(String),
    Lit(i64),
    Bin(ArithOp, Box<IntExpr>, Box<IntExpr>),
}

impl IntExpr {
    pub fn vars(&self, out: &mut BTreeSet<String>) {
        match self {
            IntExpr::Var(v) => {
                out.insert(v.clone());
            }
            IntExpr::Lit(_) => {}
            IntExpr::Bin(_, a, b) => {
                a.vars(out);
                b.vars(out);
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Gt,
    Lt,
    Ge,
    Le,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=:=",
            CmpOp::Ne => "=\\=",
            CmpOp::Gt => ">",
            CmpOp::Lt => "<",
            CmpOp::Ge => ">=",
            CmpOp::Le => "=<",
        }
    }

    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Gt => a > b,
            CmpOp::Lt => a < b,
            CmpOp::Ge => a >= b,
            CmpOp::Le => a <= b,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GuardCmp {
    pub op: CmpOp,
    pub lhs: IntExpr,
    pub rhs: IntExpr,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Guard {
    pub conjuncts: Vec<GuardCmp>,
}

impl Guard {
    pub fn is_empty(&self) -> bool {
        self.conjuncts.is_empty()
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for c in &self.conjuncts {
            c.lhs.vars(&mut out);
            c.rhs.vars(&mut out);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub name: Option<String>,
    pub lhs: Template,
    pub guard: Guard,
    pub rhs: Template,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RuleError {
    #[error("context {0} appears on the right-hand side only")]
    UnboundContext(String),
    #[error("stable flag on a right-hand side cell")]
    StableOnRhs,
    #[error("more than one process context in a left-hand side cell")]
    AmbiguousContexts,
    #[error("guard variable {0} does not occur on the left-hand side")]
    UnboundGuardVar(String),
}

impl Rule {
    pub fn new(name: Option<String>, lhs: Template, guard: Guard, rhs: Template) -> Result<Self, RuleError> {
        let rule = Rule { name, lhs, guard, rhs };
        rule.validate()?;
        Ok(rule)
    }

    pub fn shared(self) -> Arc<Rule> {
        Arc::new(self)
    }

    fn validate(&self) -> Result<(), RuleError> {
        let mut lp = Vec::new();
        let mut rp = Vec::new();
        self.lhs.proc_contexts(&mut lp);
        self.rhs.proc_contexts(&mut rp);
        self.lhs.rule_contexts(&mut lp);
        self.rhs.rule_contexts(&mut rp);
        if let Some(c) = rp.iter().find(|c| !lp.contains(c)) {
            return Err(RuleError::UnboundContext(c.clone()));
        }
        fn single(t: &Template) -> bool {
            t.procs.len() <= 1 && t.cells.iter().all(|c| single(&c.body))
        }
        if !single(&self.lhs) {
            return Err(RuleError::AmbiguousContexts);
        }
        if self.rhs.has_stable_flag() {
            return Err(RuleError::StableOnRhs);
        }
        let mut lv = BTreeSet::new();
        self.lhs.vars(&mut lv);
        if let Some(v) = self.guard.vars().into_iter().find(|v| !lv.contains(v)) {
            return Err(RuleError::UnboundGuardVar(v));
        }
        Ok(())
    }

    /// Display name used in traces: the rule name, else the first plain
    /// atom inside a cell template, else the first plain atom.
    pub fn label(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        let cell_atoms = self.lhs.cells.iter().flat_map(|c| c.body.all_atoms());
        cell_atoms
            .chain(self.lhs.atoms.iter())
            .find(|a| a.kind == AtomKind::Plain)
            .map(|a| a.name.clone())
            .unwrap_or_else(|| "rule".to_string())
    }

    /// Rules whose lhs uses the stable flag are gated on other rules'
    /// inapplicability and are skipped when judging stability in context.
    pub fn is_gated(&self) -> bool {
        self.lhs.has_stable_flag()
    }
}
