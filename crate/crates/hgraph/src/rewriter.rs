//! Rule application and the scheduler driving a world to rest.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::builtin::{self, Builtin};
use crate::graph::{AtomId, AtomKind, GraphError, Link, LinkMode, MemId, World};
use crate::matcher::{MatchBinding, Matcher};
use crate::print::fragment_text;
use crate::rule::{ArithOp, AtomT, Template};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("match binding is stale: the world changed since it was found")]
    StaleBinding,
    #[error("integer overflow in {a} {op} {b}")]
    ArithmeticError { op: &'static str, a: i64, b: i64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Checked evaluation of one arithmetic atom.
pub fn reduce_arith(op: ArithOp, a: i64, b: i64) -> Result<i64, EngineError> {
    op.apply(a, b).ok_or(EngineError::ArithmeticError { op: op.symbol(), a, b })
}

/// One rewriting step, as it appears in a trace file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEvent {
    pub index: usize,
    pub rule: String,
    pub mem: MemId,
    pub consumed: String,
    pub produced: String,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{} {} @{} : {} => {}", self.index, self.rule, self.mem, self.consumed, self.produced)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    NormalForm,
    BudgetExhausted,
    Suspended,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::NormalForm => "normal_form",
            RunStatus::BudgetExhausted => "budget_exhausted",
            RunStatus::Suspended => "suspended",
        }
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Scheduling policy. Seed 0 picks the first applicable site in a fixed
/// order; any other seed picks uniformly among all sites.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Policy {
    pub seed: u64,
    pub max_steps: usize,
}

impl Default for Policy {
    fn default() -> Self {
        Policy { seed: 0, max_steps: 10_000 }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub steps: usize,
    pub trace: Vec<TraceEvent>,
}

struct Rewrite<'b> {
    b: &'b MatchBinding,
    links: HashMap<String, Link>,
    /// How often each process context has been instantiated so far.
    uses: HashMap<String, usize>,
    new_atoms: Vec<AtomId>,
    new_cells: Vec<MemId>,
    /// Integer values of guard variables, read before anything is removed.
    guard_vals: HashMap<String, i64>,
}

/// Applies a match found by the matcher.
pub fn apply_match(w: &mut World, b: &MatchBinding, index: usize) -> Result<TraceEvent, EngineError> {
    if b.epoch != w.epoch() {
        return Err(EngineError::StaleBinding);
    }
    for &a in &b.atoms {
        if !w.atom_alive(a) {
            return Err(EngineError::StaleBinding);
        }
    }
    let consumed = fragment_text(w, &b.top_atoms, &b.top_cells);
    let guard_vals: HashMap<String, i64> = b
        .rule
        .guard
        .vars()
        .into_iter()
        .filter_map(|v| b.links.get(&v).and_then(|l| w.int_value(*l)).map(|n| (v, n)))
        .collect();

    let mut before: HashMap<Link, usize> = HashMap::new();
    for &a in &b.atoms {
        for &l in &w.atom(a).args {
            before.insert(l, w.occurrences(l));
        }
    }
    for &a in &b.atoms {
        w.remove_atom(a);
    }
    for &c in &b.top_cells {
        w.detach_membrane(c);
    }

    let mut rw = Rewrite {
        b,
        links: b.links.clone(),
        uses: HashMap::new(),
        new_atoms: Vec::new(),
        new_cells: Vec::new(),
        guard_vals,
    };
    let rule = Arc::clone(&b.rule);
    let mut connectors = Vec::new();
    rw.instantiate(w, &rule.rhs, b.scope, true, &mut connectors)?;
    for (x, y, m) in connectors {
        connect(w, x, y, m)?;
    }

    for &c in &b.top_cells {
        rescue_heap(w, c, b.scope);
        w.remove_membrane(c);
    }
    let garbage: Vec<Link> = before.iter().filter(|(l, n)| **n > 1 && w.occurrences(**l) == 1).map(|(l, _)| *l).collect();
    w.collect_garbage(garbage);

    let live_atoms: Vec<AtomId> = rw.new_atoms.iter().copied().filter(|a| w.atom_alive(*a)).collect();
    let live_cells: Vec<MemId> = rw.new_cells.iter().copied().filter(|m| w.mem_alive(*m)).collect();
    let produced = fragment_text(w, &live_atoms, &live_cells);
    Ok(TraceEvent { index, rule: rule.label(), mem: b.scope, consumed, produced })
}

/// Moves data atoms that are still referenced from outside a doomed
/// membrane out to `to`.
fn rescue_heap(w: &mut World, doomed: MemId, to: MemId) {
    if w.mode != LinkMode::Relaxed {
        return;
    }
    let mut inside: HashSet<AtomId> = w.subtree_atoms(doomed).into_iter().collect();
    loop {
        let pick = inside.iter().copied().find(|&a| {
            let atom = w.atom(a);
            w.is_data(atom)
                && atom.result().map_or(false, |r| w.endpoints(r).iter().any(|(x, _)| !inside.contains(x)))
        });
        match pick {
            Some(a) => {
                inside.remove(&a);
                w.move_atom(a, to);
            }
            None => break,
        }
    }
}

/// Realises an rhs connector `X = Y`. In relaxed worlds a connector to
/// data becomes a shallow copy of the data atom; otherwise links are fused.
fn connect(w: &mut World, x: Link, y: Link, home: MemId) -> Result<(), EngineError> {
    if x == y {
        return Ok(());
    }
    if w.mode == LinkMode::Relaxed {
        let copy = |src: Link, dst: Link, w: &mut World| -> Result<bool, EngineError> {
            let Some(p) = w.data_producer(src) else { return Ok(false) };
            if w.data_producer(dst).is_some() {
                return Ok(false);
            }
            let atom = w.atom(p).clone();
            let mut args = atom.args.clone();
            *args.last_mut().unwrap() = dst;
            w.add_atom_kind(home, &atom.name, atom.kind, &args)?;
            Ok(true)
        };
        if copy(y, x, w)? || copy(x, y, w)? {
            return Ok(());
        }
    }
    w.fuse_links(x, y);
    Ok(())
}

impl Rewrite<'_> {
    fn link(&mut self, w: &mut World, v: &str) -> Link {
        if let Some(l) = self.links.get(v) {
            return *l;
        }
        let l = w.fresh_link();
        self.links.insert(v.to_string(), l);
        l
    }

    /// Value of an arithmetic operand known at application time.
    fn operand(&self, t: &Template, v: &str) -> Option<(i64, Option<usize>)> {
        if let Some(i) = t.atoms.iter().position(|a| matches!(a.kind, AtomKind::Int(_)) && a.args[0] == v) {
            let AtomKind::Int(n) = t.atoms[i].kind else { unreachable!() };
            return Some((n, Some(i)));
        }
        self.guard_vals.get(v).map(|n| (*n, None))
    }

    fn instantiate(
        &mut self,
        w: &mut World,
        t: &Template,
        mem: MemId,
        top: bool,
        connectors: &mut Vec<(Link, Link, MemId)>,
    ) -> Result<(), EngineError> {
        let mut eager: Vec<(usize, i64)> = Vec::new();
        let mut folded_here = HashSet::new();
        for (i, a) in t.atoms.iter().enumerate() {
            if !a.is_arith() {
                continue;
            }
            if let (Some((x, fx)), Some((y, fy))) = (self.operand(t, &a.args[0]), self.operand(t, &a.args[1])) {
                let op = ArithOp::from_name(&a.name).unwrap();
                eager.push((i, reduce_arith(op, x, y)?));
                folded_here.extend(fx);
                folded_here.extend(fy);
            }
        }
        // an int literal survives folding if anything else refers to it
        let mut still_used = HashSet::new();
        for &i in &folded_here {
            let v = &t.atoms[i].args[0];
            let uses = t.atoms.iter().enumerate().filter(|(j, a)| {
                *j != i && a.args.contains(v) && !eager.iter().any(|(k, _)| k == j)
            });
            if uses.count() > 0 || self.b.links.contains_key(v) {
                still_used.insert(i);
            }
        }
        let folded: HashSet<usize> = folded_here.difference(&still_used).copied().collect();

        for (i, a) in t.atoms.iter().enumerate() {
            if folded.contains(&i) {
                continue;
            }
            if let Some((_, v)) = eager.iter().find(|(k, _)| *k == i) {
                let r = self.link(w, &a.args[2]);
                let id = w.add_int(mem, *v, r)?;
                self.record_atom(id, top);
                continue;
            }
            if a.kind == AtomKind::Connector {
                let x = self.link(w, &a.args[0]);
                let y = self.link(w, &a.args[1]);
                connectors.push((x, y, mem));
                continue;
            }
            let id = self.add(w, a, mem)?;
            self.record_atom(id, top);
        }
        for p in &t.procs {
            self.place_proc(w, p, mem, top)?;
        }
        for c in &t.cells {
            let m = w.new_membrane(Some(mem))?;
            if top {
                self.new_cells.push(m);
            }
            if let Some(r) = &c.body.rule_ctx {
                let src = self.b.rule_ctxs[r];
                let rules = w.mem(src).rules.clone();
                w.set_rules(m, rules);
            }
            self.instantiate(w, &c.body, m, false, connectors)?;
        }
        Ok(())
    }

    fn record_atom(&mut self, id: AtomId, top: bool) {
        if top {
            self.new_atoms.push(id);
        }
    }

    fn add(&mut self, w: &mut World, a: &AtomT, mem: MemId) -> Result<AtomId, EngineError> {
        let links: Vec<Link> = a.args.iter().map(|v| self.link(w, v)).collect();
        Ok(w.add_atom_kind(mem, &a.name, a.kind, &links)?)
    }

    fn place_proc(&mut self, w: &mut World, p: &str, mem: MemId, top: bool) -> Result<(), EngineError> {
        let (atoms, cells) = self.b.procs[p].clone();
        let n = self.uses.entry(p.to_string()).or_default();
        *n += 1;
        if *n == 1 {
            for &a in &atoms {
                if w.atom_alive(a) {
                    w.move_atom(a, mem);
                    self.record_atom(a, top);
                }
            }
            for &c in &cells {
                w.move_membrane(c, mem)?;
                if top {
                    self.new_cells.push(c);
                }
            }
        } else {
            let live: Vec<AtomId> = atoms.into_iter().filter(|a| w.atom_alive(*a)).collect();
            let (na, nc) = w.copy_fragment(&live, &cells, mem)?;
            if top {
                self.new_atoms.extend(na);
                self.new_cells.extend(nc);
            }
        }
        Ok(())
    }
}

enum Site {
    Rule(MatchBinding),
    Builtin(AtomId, Builtin, MemId),
}

fn collect_sites(w: &World, first_only: bool) -> Vec<Site> {
    let m = Matcher::new(w);
    let mut out = Vec::new();
    for mem in w.membranes() {
        for r in &w.mem(mem).rules {
            let limit = first_only.then_some(1);
            for b in m.matches(mem, r, limit, None) {
                out.push(Site::Rule(b));
                if first_only {
                    return out;
                }
            }
        }
        for (a, b) in builtin::applicable_in(w, mem) {
            out.push(Site::Builtin(a, b, mem));
            if first_only {
                return out;
            }
        }
    }
    out
}

fn fire(w: &mut World, site: Site, index: usize) -> Result<TraceEvent, EngineError> {
    match site {
        Site::Rule(b) => apply_match(w, &b, index),
        Site::Builtin(a, b, mem) => {
            let (consumed, produced) = builtin::apply(w, a, b)?;
            Ok(TraceEvent { index, rule: b.label().to_string(), mem, consumed, produced })
        }
    }
}

/// Drives rewriting step by step under a policy.
pub struct Stepper {
    rng: Option<ChaCha8Rng>,
    index: usize,
}

impl Stepper {
    pub fn new(seed: u64) -> Self {
        Stepper { rng: (seed != 0).then(|| ChaCha8Rng::seed_from_u64(seed)), index: 0 }
    }

    /// Performs one step; `None` when nothing applies.
    pub fn step(&mut self, w: &mut World) -> Result<Option<TraceEvent>, EngineError> {
        let site = match &mut self.rng {
            None => collect_sites(w, true).into_iter().next(),
            Some(rng) => {
                let mut sites = collect_sites(w, false);
                if sites.is_empty() {
                    None
                } else {
                    let i = rng.gen_range(0..sites.len());
                    Some(sites.swap_remove(i))
                }
            }
        };
        let Some(site) = site else { return Ok(None) };
        self.index += 1;
        fire(w, site, self.index).map(Some)
    }
}

/// One deterministic step.
pub fn step(w: &mut World) -> Result<Option<TraceEvent>, EngineError> {
    Stepper::new(0).step(w)
}

/// Whether a world at rest still holds work waiting on missing input,
/// including calls left in protected cells.
fn has_pending(w: &World) -> bool {
    if w.mode != LinkMode::Relaxed {
        return false;
    }
    w.membranes().into_iter().any(|m| {
        w.mem(m).atoms.iter().any(|&a| {
            let atom = w.atom(a);
            atom.kind == AtomKind::Plain && !w.is_data(atom) && !w.is_marker(atom)
        })
    })
}

/// Rewrites until no rule or builtin applies or the step budget runs out.
pub fn run(w: &mut World, policy: &Policy) -> Result<RunOutcome, EngineError> {
    let mut stepper = Stepper::new(policy.seed);
    let mut trace = Vec::new();
    while trace.len() < policy.max_steps {
        match stepper.step(w)? {
            Some(ev) => trace.push(ev),
            None => {
                let status = if has_pending(w) { RunStatus::Suspended } else { RunStatus::NormalForm };
                return Ok(RunOutcome { status, steps: trace.len(), trace });
            }
        }
    }
    let status = if collect_sites(w, true).is_empty() {
        if has_pending(w) {
            RunStatus::Suspended
        } else {
            RunStatus::NormalForm
        }
    } else {
        RunStatus::BudgetExhausted
    };
    Ok(RunOutcome { status, steps: trace.len(), trace })
}
