//! Canonical text form of worlds and rules. The output parses back to an
//! isomorphic world and reprints identically.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::graph::{AtomId, AtomKind, Link, LinkMode, MemId, World};
use crate::rule::{ArithOp, AtomT, CellT, IntExpr, Polarity, Rule, Template};

fn is_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_lowercase()) && cs.all(|c| c.is_alphanumeric() || c == '_')
}

fn atom_name(s: &str) -> String {
    if is_ident(s) {
        s.to_string()
    } else {
        format!("'{s}'")
    }
}

fn join_functors<'a>(fs: impl Iterator<Item = &'a crate::graph::Functor>) -> String {
    fs.map(|f| format!("{}/{}", atom_name(&f.name), f.arity)).collect::<Vec<_>>().join(", ")
}

struct WorldPrinter<'w> {
    w: &'w World,
    names: HashMap<Link, String>,
    used: HashSet<String>,
    next: usize,
    inlined: HashSet<AtomId>,
    /// Print rule sets as a single `@rules` token.
    brief_rules: bool,
    /// Print every link as `_`.
    anonymous: bool,
}

impl<'w> WorldPrinter<'w> {
    fn new(w: &'w World) -> Self {
        let mut p = WorldPrinter { w, names: HashMap::new(), used: HashSet::new(), next: 0, inlined: HashSet::new(), brief_rules: false, anonymous: false };
        p.find_inlined();
        p
    }

    fn inlinable(&self, a: AtomId) -> bool {
        let atom = self.w.atom(a);
        let small = matches!(atom.kind, AtomKind::Int(_))
            || (atom.kind == AtomKind::Plain && atom.args.len() == 1 && self.w.is_data(atom));
        if !small {
            return false;
        }
        let eps = self.w.endpoints(atom.args[0]);
        if eps.len() != 2 {
            return false;
        }
        let other = if eps[0].0 == a { eps[1].0 } else { eps[0].0 };
        if other == a {
            return false;
        }
        let o = self.w.atom(other);
        o.mem == atom.mem && o.kind == AtomKind::Plain && !(o.args.len() == 1 && self.w.is_data(o))
    }

    fn find_inlined(&mut self) {
        for a in self.w.atom_ids() {
            if self.inlinable(a) {
                self.inlined.insert(a);
            }
        }
    }

    fn link(&mut self, l: Link) -> String {
        if self.anonymous {
            return "_".to_string();
        }
        if let Some(n) = self.names.get(&l) {
            return n.clone();
        }
        let name = match self.w.link_name(l) {
            Some(n) if !self.used.contains(n) => n.to_string(),
            _ => loop {
                let n = format!("_L{}", self.next);
                self.next += 1;
                if !self.used.contains(&n) {
                    break n;
                }
            },
        };
        self.used.insert(name.clone());
        self.names.insert(l, name.clone());
        name
    }

    /// Prints the argument at `(a, pos)`, inlining a small data atom.
    fn arg(&mut self, a: AtomId, pos: usize) -> String {
        let l = self.w.atom(a).args[pos];
        for &(b, _) in self.w.endpoints(l) {
            if b != a && self.inlined.contains(&b) {
                return self.inline_text(b);
            }
        }
        self.link(l)
    }

    fn inline_text(&self, a: AtomId) -> String {
        let atom = self.w.atom(a);
        match atom.kind {
            AtomKind::Int(v) => v.to_string(),
            _ => atom_name(&atom.name),
        }
    }

    fn atom(&mut self, a: AtomId) -> String {
        let atom = self.w.atom(a);
        let n = atom.args.len();
        match atom.kind {
            AtomKind::Int(v) => {
                let l = self.link(atom.args[0]);
                format!("{l} = {v}")
            }
            AtomKind::Connector => {
                let x = self.link(atom.args[0]);
                let y = self.link(atom.args[1]);
                format!("{x} = {y}")
            }
            AtomKind::Plain if n == 3 && ArithOp::from_name(&atom.name).is_some() => {
                let sym = atom.name.clone();
                let x = self.arg(a, 0);
                let y = self.arg(a, 1);
                let r = self.link(atom.args[2]);
                format!("{r} = {x}{sym}{y}")
            }
            AtomKind::Plain => {
                let name = atom_name(&atom.name);
                if n == 0 {
                    return name;
                }
                let args: Vec<String> = (0..n).map(|i| self.arg(a, i)).collect();
                format!("{name}({})", args.join(","))
            }
        }
    }

    fn sorted_atoms(&self, atoms: &[AtomId]) -> Vec<AtomId> {
        let mut v: Vec<AtomId> = atoms.iter().copied().filter(|a| !self.inlined.contains(a)).collect();
        v.sort_by(|x, y| {
            let (a, b) = (self.w.atom(*x), self.w.atom(*y));
            (&a.name, a.args.len()).cmp(&(&b.name, b.args.len()))
        });
        v
    }

    fn membrane(&mut self, m: MemId) -> Vec<String> {
        let mem = self.w.mem(m);
        let mut parts: Vec<String> = if self.brief_rules {
            mem.rules.first().map(|_| "@rules".to_string()).into_iter().collect()
        } else {
            mem.rules.iter().map(|r| serialize_rule(r)).collect()
        };
        for a in self.sorted_atoms(&mem.atoms) {
            parts.push(self.atom(a));
        }
        for &c in &mem.children {
            parts.push(self.cell(c));
        }
        parts
    }

    fn cell(&mut self, m: MemId) -> String {
        format!("{{{}}}", join_parts(self.membrane(m)))
    }
}

/// Joins process items; rules already end with `.`.
fn join_parts(parts: Vec<String>) -> String {
    let mut out = String::new();
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            out.push_str(if parts[i - 1].ends_with('.') { " " } else { ", " });
        }
        out.push_str(p);
    }
    out
}

/// Canonical text of a whole world.
pub fn serialize(w: &World) -> String {
    let mut out = String::new();
    if w.mode == LinkMode::Relaxed {
        out.push_str("%relaxed.\n");
    }
    if !w.data.is_empty() {
        out.push_str(&format!("%data {}.\n", join_functors(w.data.iter())));
    }
    if !w.markers.is_empty() {
        out.push_str(&format!("%marker {}.\n", join_functors(w.markers.iter())));
    }
    let mut p = WorldPrinter::new(w);
    let root = w.mem(w.root());
    for r in &root.rules {
        out.push_str(&serialize_rule(r));
        out.push('\n');
    }
    let mut parts = Vec::new();
    for a in p.sorted_atoms(&root.atoms) {
        parts.push(p.atom(a));
    }
    for &c in &root.children {
        parts.push(p.cell(c));
    }
    if !parts.is_empty() {
        out.push_str(&parts.join(", "));
        out.push_str(".\n");
    }
    out
}

/// Text of a group of atoms and cells, as they currently sit in the world.
/// Cells are printed with their contents, rule sets as `@rules`.
pub(crate) fn fragment_text(w: &World, atoms: &[AtomId], cells: &[MemId]) -> String {
    let mut p = WorldPrinter::new(w);
    p.brief_rules = true;
    // inline atoms of the fragment, plus integers it reads
    let set: HashSet<AtomId> = atoms.iter().copied().collect();
    let mut subtree = HashSet::new();
    for &c in cells {
        subtree.extend(w.subtree_atoms(c));
    }
    p.inlined
        .retain(|a| set.contains(a) || subtree.contains(a) || matches!(w.atom(*a).kind, AtomKind::Int(_)));
    let mut parts = Vec::new();
    for a in p.sorted_atoms(atoms) {
        parts.push(p.atom(a));
    }
    for &c in cells {
        parts.push(p.cell(c));
    }
    join_parts(parts)
}

/// Link-insensitive text of membrane `m`: atoms with links printed as `_`,
/// rule sets as `@rules`, items sorted. Equal worlds up to link renaming
/// give equal shapes.
pub fn shape(w: &World, m: MemId) -> String {
    let mut p = WorldPrinter::new(w);
    p.brief_rules = true;
    p.anonymous = true;
    shape_parts(&mut p, m).join(", ")
}

fn shape_parts(p: &mut WorldPrinter<'_>, m: MemId) -> Vec<String> {
    let mem = p.w.mem(m);
    let mut atoms: Vec<String> = p.sorted_atoms(&mem.atoms).into_iter().map(|a| p.atom(a)).collect();
    atoms.sort();
    let mut cells: Vec<String> =
        mem.children.clone().into_iter().map(|c| format!("{{{}}}", shape_parts(p, c).join(", "))).collect();
    cells.sort();
    let rules = mem.rules.first().map(|_| "@rules".to_string());
    rules.into_iter().chain(atoms).chain(cells).collect()
}

struct RulePrinter {
    counts: BTreeMap<String, usize>,
    names: HashMap<String, String>,
}

impl RulePrinter {
    fn var(&mut self, v: &str) -> String {
        if let Some(n) = self.names.get(v) {
            return n.clone();
        }
        let n = match v.strip_prefix('~') {
            Some(k) => {
                let mut cand = format!("_T{k}");
                while self.counts.contains_key(&cand) {
                    cand.push('_');
                }
                cand
            }
            None => v.to_string(),
        };
        self.names.insert(v.to_string(), n.clone());
        n
    }

    /// Integer literals and nested constants, which print inside their host.
    fn small(a: &AtomT) -> bool {
        matches!(a.kind, AtomKind::Int(_))
            || (a.kind == AtomKind::Plain && a.args.len() == 1 && is_ident(&a.name) && a.args[0].starts_with('~'))
    }

    fn template(&mut self, t: &Template) -> String {
        let mut inlined: HashMap<String, usize> = HashMap::new();
        for (i, a) in t.atoms.iter().enumerate() {
            if !Self::small(a) {
                continue;
            }
            let v = &a.args[0];
            let local = t.atoms.iter().filter(|b| b.args.contains(v)).count();
            let local_args: usize = t.atoms.iter().map(|b| b.args.iter().filter(|x| *x == v).count()).sum();
            let host = t
                .atoms
                .iter()
                .enumerate()
                .find(|(j, b)| {
                    (*j > i || (*j < i && !Self::small(b)))
                        && b.kind == AtomKind::Plain
                        && b.args.iter().position(|x| x == v).map_or(false, |i| !(b.is_arith() && i == 2))
                });
            if local == 2 && local_args == 2 && self.counts.get(v) == Some(&2) && host.is_some() {
                inlined.insert(v.clone(), i);
            }
        }
        let mut parts = Vec::new();
        if let Some(r) = &t.rule_ctx {
            parts.push(format!("@{r}"));
        }
        for p in &t.procs {
            parts.push(format!("${p}"));
        }
        for port in &t.ports {
            let s = if port.polarity == Polarity::Plus { "+" } else { "-" };
            let v = self.var(&port.var);
            parts.push(format!("{s}{v}"));
        }
        let skip: HashSet<usize> = inlined.values().copied().collect();
        for (i, a) in t.atoms.iter().enumerate() {
            if skip.contains(&i) {
                continue;
            }
            parts.push(self.atom(a, t, &inlined));
        }
        for c in &t.cells {
            parts.push(self.cell(c));
        }
        parts.join(", ")
    }

    fn arg(&mut self, v: &str, t: &Template, inlined: &HashMap<String, usize>) -> String {
        match inlined.get(v) {
            Some(&i) => {
                let a = &t.atoms[i];
                match a.kind {
                    AtomKind::Int(n) => n.to_string(),
                    _ => atom_name(&a.name),
                }
            }
            None => self.var(v),
        }
    }

    fn atom(&mut self, a: &AtomT, t: &Template, inlined: &HashMap<String, usize>) -> String {
        match a.kind {
            AtomKind::Int(n) => format!("{} = {n}", self.var(&a.args[0])),
            AtomKind::Connector => format!("{} = {}", self.var(&a.args[0]), self.var(&a.args[1])),
            AtomKind::Plain if a.is_arith() => {
                let x = self.arg(&a.args[0], t, inlined);
                let y = self.arg(&a.args[1], t, inlined);
                format!("{} = {x}{}{y}", self.var(&a.args[2]), a.name)
            }
            AtomKind::Plain => {
                let name = atom_name(&a.name);
                if a.args.is_empty() {
                    return name;
                }
                let args: Vec<String> = a.args.iter().map(|v| self.arg(v, t, inlined)).collect();
                format!("{name}({})", args.join(","))
            }
        }
    }

    fn cell(&mut self, c: &CellT) -> String {
        format!("{{{}}}{}", self.template(&c.body), if c.stable { "/" } else { "" })
    }
}

fn count_vars(t: &Template, counts: &mut BTreeMap<String, usize>) {
    for a in &t.atoms {
        for v in &a.args {
            *counts.entry(v.clone()).or_default() += 1;
        }
    }
    for p in &t.ports {
        *counts.entry(p.var.clone()).or_default() += 1;
    }
    for c in &t.cells {
        count_vars(&c.body, counts);
    }
}

fn iexpr(e: &IntExpr, p: &mut RulePrinter) -> String {
    fn prec(e: &IntExpr) -> u8 {
        match e {
            IntExpr::Bin(ArithOp::Mul, ..) => 2,
            IntExpr::Bin(..) => 1,
            _ => 3,
        }
    }
    match e {
        IntExpr::Var(v) => p.var(v),
        IntExpr::Lit(n) if *n < 0 => format!("({n})"),
        IntExpr::Lit(n) => n.to_string(),
        IntExpr::Bin(op, a, b) => {
            let me = prec(e);
            let l = iexpr(a, p);
            let r = iexpr(b, p);
            let l = if prec(a) < me { format!("({l})") } else { l };
            let r = if prec(b) <= me { format!("({r})") } else { r };
            format!("{l}{}{r}", op.symbol())
        }
    }
}

/// Rule text: `name@@ lhs :- guard | rhs.`
pub fn serialize_rule(r: &Rule) -> String {
    let mut counts = BTreeMap::new();
    count_vars(&r.lhs, &mut counts);
    count_vars(&r.rhs, &mut counts);
    for v in r.guard.vars() {
        *counts.entry(v).or_default() += 2;
    }
    let mut p = RulePrinter { counts, names: HashMap::new() };
    let mut out = String::new();
    if let Some(n) = &r.name {
        out.push_str(n);
        out.push_str("@@ ");
    }
    out.push_str(&p.template(&r.lhs));
    out.push_str(" :- ");
    if !r.guard.is_empty() {
        let gs: Vec<String> = r
            .guard
            .conjuncts
            .iter()
            .map(|c| format!("{} {} {}", iexpr(&c.lhs, &mut p), c.op.symbol(), iexpr(&c.rhs, &mut p)))
            .collect();
        out.push_str(&gs.join(", "));
        out.push_str(" | ");
    }
    out.push_str(&p.template(&r.rhs));
    out.push('.');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_rule, parse_world};

    fn fix(src: &str) -> String {
        let once = serialize(&parse_world(src).unwrap());
        let twice = serialize(&parse_world(&once).unwrap());
        assert_eq!(once, twice, "not a fixpoint for {src}");
        once
    }

    #[test]
    fn ints_are_inlined() {
        assert_eq!(fix("{addOne(2,D)}"), "{addOne(2,D)}.\n");
    }

    #[test]
    fn arith_prints_infix() {
        assert_eq!(fix("B = 1 + A, x(A), y(B)"), "B = 1+A, x(A), y(B).\n");
    }

    #[test]
    fn anonymous_links_get_generated_names() {
        let s = fix("a(X), b(X)");
        assert_eq!(s, "a(X), b(X).\n");
        let s = fix("a(f(c))");
        assert_eq!(s, "a(_L0), c(_L1), f(_L1,_L0).\n");
    }

    #[test]
    fn rules_print_and_reparse() {
        let src = "ruleB@@ {@rules,{$procs_p,+L,inLinks_(0)}}/, {{$procs_q,-L,inLinks_(N)}} :- N > 1 | {{$procs_p,$procs_q,inLinks_(M), M = N-1}}.";
        let r = parse_rule(src).unwrap();
        let s = serialize_rule(&r);
        eprintln!("{s}");
        let r2 = parse_rule(&s).unwrap();
        assert_eq!(serialize_rule(&r2), s);
        assert!(s.contains("inLinks_(0)"));
        assert!(s.contains("N > 1"));
    }

    #[test]
    fn relaxed_directives_roundtrip() {
        let s = fix("%relaxed. %data cons/3, nil/1. a(L), b(L), c(L)");
        assert!(s.starts_with("%relaxed.\n%data cons/3, nil/1.\n"));
    }
}
