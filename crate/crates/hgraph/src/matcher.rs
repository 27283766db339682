//! Rule matching. A rule's lhs is compiled into a linear instruction list
//! executed by backtracking search over cloned states.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use crate::builtin;
use crate::graph::{AtomId, AtomKind, Link, LinkMode, MemId, World};
use crate::rule::{AtomT, CellT, Guard, IntExpr, Polarity, Port, Rule, Template};

/// One way a rule's lhs embeds into the world.
#[derive(Clone, Debug)]
pub struct MatchBinding {
    pub rule: Arc<Rule>,
    /// Membrane the rule lives in; the lhs top level matches there.
    pub scope: MemId,
    pub links: HashMap<String, Link>,
    /// Every consumed atom, at any depth.
    pub atoms: Vec<AtomId>,
    /// Consumed atoms at the top level of the lhs.
    pub top_atoms: Vec<AtomId>,
    /// Matched membrane for each cell template, in lhs preorder.
    pub cells: Vec<MemId>,
    /// Matched membranes of the top-level cell templates.
    pub top_cells: Vec<MemId>,
    /// Residual atoms and cells captured by each process context.
    pub procs: HashMap<String, (Vec<AtomId>, Vec<MemId>)>,
    /// Membrane whose rules each rule context captures.
    pub rule_ctxs: HashMap<String, MemId>,
    pub epoch: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GuardResult {
    True,
    False,
    /// Some guard variable is not (yet) bound to an integer.
    Suspended,
}

fn iexpr_value(w: &World, e: &IntExpr, links: &HashMap<String, Link>) -> Result<i64, GuardResult> {
    match e {
        IntExpr::Lit(n) => Ok(*n),
        IntExpr::Var(v) => links.get(v).and_then(|l| w.int_value(*l)).ok_or(GuardResult::Suspended),
        IntExpr::Bin(op, a, b) => {
            let x = iexpr_value(w, a, links)?;
            let y = iexpr_value(w, b, links)?;
            op.apply(x, y).ok_or(GuardResult::False)
        }
    }
}

pub fn eval_guard(w: &World, guard: &Guard, links: &HashMap<String, Link>) -> GuardResult {
    let mut suspended = false;
    for c in &guard.conjuncts {
        let v = iexpr_value(w, &c.lhs, links).and_then(|a| iexpr_value(w, &c.rhs, links).map(|b| (a, b)));
        match v {
            Ok((a, b)) if !c.op.holds(a, b) => return GuardResult::False,
            Ok(_) => {}
            Err(GuardResult::Suspended) => suspended = true,
            Err(_) => return GuardResult::False,
        }
    }
    if suspended {
        GuardResult::Suspended
    } else {
        GuardResult::True
    }
}

#[derive(Clone, Copy, Debug)]
enum Level {
    Top,
    Cell(usize),
}

enum Instr<'r> {
    Atom(&'r AtomT, Level),
    Cell(usize, Level),
    Heap(&'r AtomT),
    Port(usize, &'r Port),
    Finish(usize),
    Guard,
    Stable(usize),
}

struct Plan<'r> {
    instrs: Vec<Instr<'r>>,
    cells: Vec<&'r CellT>,
    top_cells: Vec<usize>,
}

fn is_heap(w: &World, t: &AtomT) -> bool {
    w.mode == LinkMode::Relaxed
        && match t.kind {
            AtomKind::Int(_) => true,
            AtomKind::Connector => false,
            AtomKind::Plain => w.data.contains(&t.functor()),
        }
}

fn compile<'r>(w: &World, rule: &'r Rule) -> Plan<'r> {
    let mut plan = Plan { instrs: Vec::new(), cells: Vec::new(), top_cells: Vec::new() };
    let mut heap = Vec::new();
    let mut bound = BTreeSet::new();
    fn walk<'r>(
        w: &World,
        t: &'r Template,
        level: Level,
        plan: &mut Plan<'r>,
        heap: &mut Vec<(&'r AtomT, Level)>,
        bound: &mut BTreeSet<String>,
    ) {
        for a in &t.atoms {
            if is_heap(w, a) {
                heap.push((a, level));
            } else {
                bound.extend(a.args.iter().cloned());
                plan.instrs.push(Instr::Atom(a, level));
            }
        }
        for c in &t.cells {
            let idx = plan.cells.len();
            plan.cells.push(c);
            if matches!(level, Level::Top) {
                plan.top_cells.push(idx);
            }
            plan.instrs.push(Instr::Cell(idx, level));
            walk(w, &c.body, Level::Cell(idx), plan, heap, bound);
            for p in &c.body.ports {
                bound.insert(p.var.clone());
                plan.instrs.push(Instr::Port(idx, p));
            }
        }
    }
    walk(w, &rule.lhs, Level::Top, &mut plan, &mut heap, &mut bound);

    let resolve = |heap: &mut Vec<(&'r AtomT, Level)>, bound: &mut BTreeSet<String>, instrs: &mut Vec<Instr<'r>>| loop {
        let pos = heap.iter().position(|(a, _)| bound.contains(a.args.last().unwrap()));
        match pos {
            Some(i) => {
                let (a, _) = heap.remove(i);
                bound.extend(a.args.iter().cloned());
                instrs.push(Instr::Heap(a));
            }
            None => break,
        }
    };
    resolve(&mut heap, &mut bound, &mut plan.instrs);
    // nothing names these atoms' results: match them in place
    for (a, level) in heap {
        plan.instrs.push(Instr::Atom(a, level));
    }
    for idx in (0..plan.cells.len()).rev() {
        plan.instrs.push(Instr::Finish(idx));
    }
    if !rule.guard.is_empty() {
        plan.instrs.push(Instr::Guard);
    }
    for (idx, c) in plan.cells.iter().enumerate() {
        if c.stable {
            plan.instrs.push(Instr::Stable(idx));
        }
    }
    plan
}

#[derive(Clone, Default)]
struct State {
    links: HashMap<String, Link>,
    consumed: Vec<AtomId>,
    consumed_set: HashSet<AtomId>,
    top_atoms: Vec<AtomId>,
    seen: HashSet<AtomId>,
    cells: Vec<Option<MemId>>,
    used_cells: HashSet<MemId>,
    procs: HashMap<String, (Vec<AtomId>, Vec<MemId>)>,
    rule_ctxs: HashMap<String, MemId>,
}

impl State {
    fn bind(&mut self, var: &str, l: Link) -> bool {
        match self.links.get(var) {
            Some(x) => *x == l,
            None => {
                self.links.insert(var.to_string(), l);
                true
            }
        }
    }
}

/// Matching context shared across the searches of one rewriting step.
/// Caches stability verdicts, which stay valid while the world is unchanged.
pub(crate) struct Matcher<'w> {
    pub(crate) w: &'w World,
    stable: RefCell<HashMap<MemId, bool>>,
}

impl<'w> Matcher<'w> {
    pub(crate) fn new(w: &'w World) -> Self {
        Matcher { w, stable: RefCell::new(HashMap::new()) }
    }

    /// Up to `limit` matches of `rule` living in `scope`. When `consumes`
    /// is given, only matches consuming that membrane count.
    pub(crate) fn matches(&self, scope: MemId, rule: &Arc<Rule>, limit: Option<usize>, consumes: Option<MemId>) -> Vec<MatchBinding> {
        let plan = compile(self.w, rule);
        let mut st = State::default();
        st.cells = vec![None; plan.cells.len()];
        let mut out = Vec::new();
        let mut search = Search { m: self, rule, plan: &plan, scope, limit, consumes, out: &mut out };
        search.run(0, st);
        out
    }

    pub(crate) fn has_match(&self, scope: MemId, rule: &Arc<Rule>) -> bool {
        !self.matches(scope, rule, Some(1), None).is_empty()
    }

    /// A membrane is stable when nothing can rewrite inside it and no
    /// ungated rule of its parent can consume it.
    pub(crate) fn is_stable(&self, m: MemId) -> bool {
        if let Some(v) = self.stable.borrow().get(&m) {
            return *v;
        }
        self.stable.borrow_mut().insert(m, false);
        let v = self.compute_stable(m);
        self.stable.borrow_mut().insert(m, v);
        v
    }

    fn compute_stable(&self, m: MemId) -> bool {
        let w = self.w;
        for s in w.preorder(m) {
            if !builtin::applicable_in(w, s).is_empty() {
                return false;
            }
            for r in &w.mem(s).rules {
                if self.has_match(s, r) {
                    return false;
                }
            }
        }
        if let Some(p) = w.mem(m).parent {
            for r in &w.mem(p).rules {
                if !r.is_gated() && !self.matches(p, r, Some(1), Some(m)).is_empty() {
                    return false;
                }
            }
        }
        true
    }
}

struct Search<'a, 'w, 'r> {
    m: &'a Matcher<'w>,
    rule: &'a Arc<Rule>,
    plan: &'a Plan<'r>,
    scope: MemId,
    limit: Option<usize>,
    consumes: Option<MemId>,
    out: &'a mut Vec<MatchBinding>,
}

impl Search<'_, '_, '_> {
    fn done(&self) -> bool {
        self.limit.map_or(false, |n| self.out.len() >= n)
    }

    fn level_mem(&self, st: &State, level: Level) -> MemId {
        match level {
            Level::Top => self.scope,
            Level::Cell(i) => st.cells[i].expect("cell chosen before use"),
        }
    }

    fn run(&mut self, pc: usize, st: State) {
        if self.done() {
            return;
        }
        let w = self.m.w;
        let Some(instr) = self.plan.instrs.get(pc) else {
            self.emit(st);
            return;
        };
        match instr {
            Instr::Atom(t, level) => {
                let mem = self.level_mem(&st, *level);
                for a in self.atom_candidates(&st, t, mem) {
                    let mut next = st.clone();
                    if self.bind_atom(&mut next, t, a) {
                        next.consumed.push(a);
                        next.consumed_set.insert(a);
                        if matches!(level, Level::Top) {
                            next.top_atoms.push(a);
                        }
                        self.run(pc + 1, next);
                        if self.done() {
                            return;
                        }
                    }
                }
            }
            Instr::Cell(idx, level) => {
                let parent = self.level_mem(&st, *level);
                for c in self.cell_candidates(&st, *idx, parent) {
                    let mut next = st.clone();
                    next.cells[*idx] = Some(c);
                    next.used_cells.insert(c);
                    self.run(pc + 1, next);
                    if self.done() {
                        return;
                    }
                }
            }
            Instr::Heap(t) => {
                let l = st.links[t.args.last().unwrap()];
                let Some(p) = w.producer(l) else { return };
                let atom = w.atom(p);
                if !w.is_data(atom) || atom.kind != t.kind || atom.name != t.name || atom.args.len() != t.args.len() {
                    return;
                }
                let mut next = st;
                if self.bind_atom(&mut next, t, p) {
                    next.seen.insert(p);
                    self.run(pc + 1, next);
                }
            }
            Instr::Port(idx, port) => {
                let c = st.cells[*idx].unwrap();
                match st.links.get(&port.var) {
                    Some(&l) => {
                        if self.port_holds(c, port.polarity, l) {
                            self.run(pc + 1, st);
                        }
                    }
                    None => {
                        for l in self.port_candidates(c, port.polarity) {
                            let mut next = st.clone();
                            next.links.insert(port.var.clone(), l);
                            self.run(pc + 1, next);
                            if self.done() {
                                return;
                            }
                        }
                    }
                }
            }
            Instr::Finish(idx) => {
                let mut next = st;
                if self.finish(&mut next, *idx) {
                    self.run(pc + 1, next);
                }
            }
            Instr::Guard => {
                if eval_guard(w, &self.rule.guard, &st.links) == GuardResult::True {
                    self.run(pc + 1, st);
                }
            }
            Instr::Stable(idx) => {
                if self.m.is_stable(st.cells[*idx].unwrap()) {
                    self.run(pc + 1, st);
                }
            }
        }
    }

    fn atom_candidates(&self, st: &State, t: &AtomT, mem: MemId) -> Vec<AtomId> {
        let w = self.m.w;
        let fits = |a: AtomId| {
            let atom = w.atom(a);
            atom.mem == mem
                && atom.kind == t.kind
                && atom.name == t.name
                && atom.args.len() == t.args.len()
                && !st.consumed_set.contains(&a)
        };
        for (i, v) in t.args.iter().enumerate() {
            if let Some(&l) = st.links.get(v) {
                let mut v: Vec<AtomId> =
                    w.endpoints(l).iter().filter(|(_, p)| *p == i).map(|(a, _)| *a).filter(|a| fits(*a)).collect();
                v.dedup();
                return v;
            }
        }
        w.mem(mem).atoms.iter().copied().filter(|a| fits(*a)).collect()
    }

    /// Children of `parent` that could hold cell template `idx`.
    fn cell_candidates(&self, st: &State, idx: usize, parent: MemId) -> Vec<MemId> {
        let w = self.m.w;
        let t = &self.plan.cells[idx].body;
        let fits = |c: MemId| {
            let mem = w.mem(c);
            !st.used_cells.contains(&c)
                && t.rule_ctx.is_some() != mem.rules.is_empty()
                && t.atoms.iter().filter(|a| !is_heap(w, a)).all(|a| {
                    mem.atoms.iter().any(|&b| {
                        let b = w.atom(b);
                        b.kind == a.kind && b.name == a.name && b.args.len() == a.args.len()
                    })
                })
        };
        let bound = t.ports.iter().find_map(|p| st.links.get(&p.var));
        let Some(&l) = bound else {
            return w.mem(parent).children.iter().copied().filter(|&c| fits(c)).collect();
        };
        // only cells holding an end of the link can carry the port
        let mut out = Vec::new();
        for &(a, _) in w.endpoints(l) {
            let mut m = w.atom(a).mem;
            while let Some(up) = w.mem(m).parent {
                if up == parent {
                    if !out.contains(&m) && fits(m) {
                        out.push(m);
                    }
                    break;
                }
                m = up;
            }
        }
        out
    }

    fn bind_atom(&self, st: &mut State, t: &AtomT, a: AtomId) -> bool {
        let atom = self.m.w.atom(a);
        t.args.iter().zip(&atom.args).all(|(v, l)| st.bind(v, *l))
    }

    fn port_holds(&self, c: MemId, pol: Polarity, l: Link) -> bool {
        let w = self.m.w;
        w.crosses(l, c)
            && w.endpoints(l).iter().any(|&(a, pos)| {
                let atom = w.atom(a);
                w.is_ancestor_or_self(c, atom.mem) && Self::port_side(w, atom, pos) == Some(pol)
            })
    }

    fn port_side(w: &World, atom: &crate::graph::Atom, pos: usize) -> Option<Polarity> {
        if atom.kind == AtomKind::Connector {
            return None;
        }
        if w.is_marker(atom) {
            return Some(Polarity::Minus);
        }
        Some(if pos + 1 == atom.args.len() { Polarity::Plus } else { Polarity::Minus })
    }

    fn port_candidates(&self, c: MemId, pol: Polarity) -> Vec<Link> {
        let w = self.m.w;
        let mut out = Vec::new();
        for a in w.subtree_atoms(c) {
            let atom = w.atom(a);
            for (pos, &l) in atom.args.iter().enumerate() {
                if Self::port_side(w, atom, pos) == Some(pol) && !out.contains(&l) && w.crosses(l, c) {
                    out.push(l);
                }
            }
        }
        out
    }

    fn finish(&self, st: &mut State, idx: usize) -> bool {
        let w = self.m.w;
        let c = st.cells[idx].unwrap();
        let t = &self.plan.cells[idx].body;
        let mem = w.mem(c);
        match &t.rule_ctx {
            // a rule context stands for a non-empty rule set
            Some(_) if mem.rules.is_empty() => return false,
            Some(r) => {
                st.rule_ctxs.insert(r.clone(), c);
            }
            None if !mem.rules.is_empty() => return false,
            None => {}
        }
        let atoms: Vec<AtomId> = mem.atoms.iter().copied().filter(|a| !st.consumed_set.contains(a)).collect();
        let cells: Vec<MemId> = mem.children.iter().copied().filter(|m| !st.used_cells.contains(m)).collect();
        match t.procs.first() {
            Some(p) => {
                st.procs.insert(p.clone(), (atoms, cells));
                true
            }
            None => cells.is_empty() && atoms.iter().all(|a| st.seen.contains(a)),
        }
    }

    fn emit(&mut self, st: State) {
        let cells: Vec<MemId> = st.cells.iter().map(|c| c.unwrap()).collect();
        if let Some(m) = self.consumes {
            if !self.plan.top_cells.iter().any(|&i| cells[i] == m) {
                return;
            }
        }
        let top_cells = self.plan.top_cells.iter().map(|&i| cells[i]).collect();
        self.out.push(MatchBinding {
            rule: Arc::clone(self.rule),
            scope: self.scope,
            links: st.links,
            atoms: st.consumed,
            top_atoms: st.top_atoms,
            cells,
            top_cells,
            procs: st.procs,
            rule_ctxs: st.rule_ctxs,
            epoch: self.m.w.epoch(),
        });
    }
}

/// All matches of `rule`, living in membrane `scope`.
pub fn find_matches(w: &World, scope: MemId, rule: &Arc<Rule>) -> Vec<MatchBinding> {
    Matcher::new(w).matches(scope, rule, None, None)
}

/// Whether membrane `m` is stable: no rule or builtin can act inside it and
/// no ungated rule of its parent can consume it.
pub fn is_stable(w: &World, m: MemId) -> bool {
    Matcher::new(w).is_stable(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_rule, parse_world};

    #[test]
    fn bubble_sort_rule_has_three_matches() {
        let w = parse_world("aList = [2,1,5,0,4,6,3]").unwrap();
        let r = parse_rule("L=[X,Y|L2] :- X > Y | L=[Y,X|L2].").unwrap().shared();
        assert_eq!(find_matches(&w, w.root(), &r).len(), 3);
    }

    #[test]
    fn guard_suspends_on_unbound() {
        let w = parse_world("f(X)").unwrap();
        let g = parse_rule("f(X) :- X > 1 | g.").unwrap();
        let x = w.link_by_name("X").unwrap();
        let links = HashMap::from([("X".to_string(), x)]);
        assert_eq!(eval_guard(&w, &g.guard, &links), GuardResult::Suspended);
    }

    #[test]
    fn cell_without_context_must_be_exact() {
        let w = parse_world("{a, b}").unwrap();
        let exact = parse_rule("{a} :- c.").unwrap().shared();
        let open = parse_rule("{a, $p} :- c.").unwrap().shared();
        assert!(find_matches(&w, w.root(), &exact).is_empty());
        assert_eq!(find_matches(&w, w.root(), &open).len(), 1);
    }

    #[test]
    fn stable_cells() {
        let w = parse_world("{addOne(2,D)}, {x}").unwrap();
        let root = w.mem(w.root());
        // no rules anywhere: both stable
        assert!(is_stable(&w, root.children[0]));
        let w = parse_world("addOne(A,B) :- B = 1 + A. {addOne(2,D)}").unwrap();
        let c = w.mem(w.root()).children[0];
        assert!(is_stable(&w, c));
        let w = parse_world("{addOne(A,B) :- B = 1 + A. addOne(2,D)}").unwrap();
        let c = w.mem(w.root()).children[0];
        assert!(!is_stable(&w, c));
    }

    #[test]
    fn ports_follow_production() {
        let w = parse_world("{p(X)}, {q(X, Y)}").unwrap();
        let r = parse_rule("{$a, +L}, {$b, -L} :- ok.").unwrap().shared();
        let ms = find_matches(&w, w.root(), &r);
        assert_eq!(ms.len(), 1);
        let p_cell = w.mem(w.root()).children[0];
        assert_eq!(ms[0].cells[0], p_cell);
        let back = parse_rule("{$a, -L}, {$b, +L} :- ok.").unwrap().shared();
        let ms = find_matches(&w, w.root(), &back);
        assert_eq!(ms.len(), 1);
        assert_eq!(ms[0].cells[1], p_cell);
    }
}
