//! Strategy layouts: where program rules and expression cells live so the
//! engine evaluates call-by-value, outermost, or in no particular order.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use hgraph::{AtomKind, AtomT, CellT, Functor, Link, MemId, Rule, Template, World};

use crate::ast::{CcflProgram, Expr};
use crate::flat::{data_functors, prepare, Compiler, FlatRule, Options, AND, EQ};
use crate::runtime;

pub const IN_LINKS: &str = "inLinks_";
pub const EVAL: &str = "eval_";
pub const LIFT: &str = "lift_";
pub const ANSWER: &str = "answer_";
/// Link name of a query's value.
pub const RESULT: &str = "R";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Strategy {
    #[default]
    Cbv,
    Outermost,
    Nondet,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Cbv => "cbv",
            Strategy::Outermost => "outermost",
            Strategy::Nondet => "nondet",
        })
    }
}

#[derive(Debug, thiserror::Error)]
#[error("unknown strategy {0:?} (expected cbv, outermost or nondet)")]
pub struct UnknownStrategy(String);

impl FromStr for Strategy {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cbv" => Ok(Strategy::Cbv),
            "outermost" => Ok(Strategy::Outermost),
            "nondet" => Ok(Strategy::Nondet),
            _ => Err(UnknownStrategy(s.to_string())),
        }
    }
}

/// A query's atoms split by expression node: each non-data atom together
/// with the data atoms it consumes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Group {
    pub atoms: Vec<AtomT>,
    /// Number of other groups whose result this group consumes.
    pub deps: usize,
    pub root: bool,
}

fn out_link(a: &AtomT) -> &str {
    match a.kind {
        AtomKind::Connector => &a.args[0],
        _ => a.args.last().map_or("", String::as_str),
    }
}

fn in_links(a: &AtomT) -> &[String] {
    match a.kind {
        AtomKind::Connector => &a.args[1..],
        _ => &a.args[..a.args.len().saturating_sub(1)],
    }
}

fn is_data(a: &AtomT, data: &BTreeSet<Functor>) -> bool {
    match a.kind {
        AtomKind::Int(_) => true,
        AtomKind::Connector => false,
        AtomKind::Plain => data.contains(&a.functor()),
    }
}

pub fn group_atoms(atoms: &[AtomT], result: &str, data: &BTreeSet<Functor>) -> Vec<Group> {
    let mut consumer: HashMap<&str, usize> = HashMap::new();
    let mut producer: HashMap<&str, usize> = HashMap::new();
    for (i, a) in atoms.iter().enumerate() {
        for l in in_links(a) {
            consumer.entry(l.as_str()).or_insert(i);
        }
        producer.entry(out_link(a)).or_insert(i);
    }
    let mut gid: Vec<Option<usize>> = vec![None; atoms.len()];
    let mut n = 0;
    for (i, a) in atoms.iter().enumerate() {
        if !is_data(a, data) {
            gid[i] = Some(n);
            n += 1;
        }
    }
    let root_node = producer
        .get(result)
        .and_then(|&i| gid[i])
        .or(if n > 0 { Some(0) } else { None });
    let mut loose: Option<usize> = None;
    for i in 0..atoms.len() {
        if gid[i].is_some() {
            continue;
        }
        let mut j = i;
        let mut hops = 0;
        let g = loop {
            match consumer.get(out_link(&atoms[j])) {
                Some(&k) if hops <= atoms.len() && k != j => {
                    if let Some(g) = gid[k] {
                        break Some(g);
                    }
                    j = k;
                    hops += 1;
                }
                _ => break None,
            }
        };
        gid[i] = Some(match g {
            Some(g) => g,
            None if out_link(&atoms[i]) != result && root_node.is_some() => root_node.unwrap(),
            None => *loose.get_or_insert_with(|| {
                n += 1;
                n - 1
            }),
        });
    }
    let root = producer.get(result).and_then(|&i| gid[i]).or(root_node).or(loose);
    let mut order: Vec<usize> = Vec::new();
    for g in gid.iter().flatten() {
        if !order.contains(g) {
            order.push(*g);
        }
    }
    order
        .into_iter()
        .map(|g| {
            let members: Vec<usize> = (0..atoms.len()).filter(|&i| gid[i] == Some(g)).collect();
            let mut from: BTreeSet<usize> = BTreeSet::new();
            for &i in &members {
                for l in in_links(&atoms[i]) {
                    if let Some(&p) = producer.get(l.as_str()) {
                        let h = gid[p].unwrap();
                        if h != g {
                            from.insert(h);
                        }
                    }
                }
            }
            Group {
                atoms: members.iter().map(|&i| atoms[i].clone()).collect(),
                deps: from.len(),
                root: Some(g) == root,
            }
        })
        .collect()
}

/// The group's expression node, if it has one.
fn node<'a>(g: &'a Group, data: &BTreeSet<Functor>) -> Option<&'a AtomT> {
    g.atoms.iter().find(|a| !is_data(a, data))
}

/// Roots that stay at their level instead of being protected again.
fn keeps_level(g: &Group, data: &BTreeSet<Functor>) -> bool {
    match node(g, data) {
        None => true,
        Some(a) => a.kind == AtomKind::Connector || a.is_arith() || a.name == EQ || a.name == AND,
    }
}

struct Counters(usize);

impl Counters {
    /// `inLinks_(n)` as a marker atom plus its integer.
    fn atoms(&mut self, n: usize) -> [AtomT; 2] {
        self.0 += 1;
        let v = format!("~in{}", self.0);
        [AtomT::new(IN_LINKS, &[&v]), AtomT::int(n as i64, &v)]
    }
}

fn cell(t: Template) -> CellT {
    CellT::new(t)
}

fn protect(t: Template) -> CellT {
    cell(Template {
        cells: vec![cell(t)],
        ..Template::default()
    })
}

fn marker(name: &str) -> AtomT {
    AtomT::new(name, &[])
}

fn procs(t: &mut Template, p: &str) {
    t.procs.push(p.to_string());
}

fn lhs_cell(r: &FlatRule, extra: Vec<AtomT>) -> Template {
    let mut body = Template {
        atoms: vec![r.head.clone()],
        ..Template::default()
    };
    body.atoms.extend(extra);
    procs(&mut body, "p");
    Template {
        atoms: r.patterns.clone(),
        cells: vec![cell(body)],
        ..Template::default()
    }
}

/// `{head, inLinks_(0), $p}, patterns :- guard | cells`, where cells of
/// ready sub-expressions are open and the others are protected.
pub fn cbv_rule(r: &FlatRule, data: &BTreeSet<Functor>) -> Rule {
    let mut c = Counters(0);
    let lhs = lhs_cell(r, c.atoms(0).to_vec());
    let mut rhs = Template::default();
    for g in group_atoms(&r.body, r.result(), data) {
        let mut body = Template {
            atoms: g.atoms.clone(),
            ..Template::default()
        };
        body.atoms.extend(c.atoms(g.deps));
        if g.root {
            procs(&mut body, "p");
        }
        rhs.cells.push(if g.deps == 0 { cell(body) } else { protect(body) });
    }
    Rule::new(None, lhs, r.guard.clone(), rhs).expect("cbv rules are well formed")
}

/// Evaluation-level rule and its one-step variant for lifted cells.
pub fn outermost_rules(r: &FlatRule, data: &BTreeSet<Functor>) -> (Rule, Rule) {
    let groups = group_atoms(&r.body, r.result(), data);
    let build = |level: &str| {
        let lhs = lhs_cell(r, vec![marker(level)]);
        let mut rhs = Template::default();
        for g in &groups {
            let mut body = Template {
                atoms: g.atoms.clone(),
                ..Template::default()
            };
            if !g.root {
                rhs.cells.push(protect(body));
                continue;
            }
            procs(&mut body, "p");
            if level == EVAL || keeps_level(g, data) {
                body.atoms.push(marker(level));
                rhs.cells.push(cell(body));
            } else {
                rhs.cells.push(protect(body));
            }
        }
        Rule::new(None, lhs, r.guard.clone(), rhs).expect("outermost rules are well formed")
    };
    (build(EVAL), build(LIFT))
}

/// A compiled program and query, ready to run.
#[derive(Clone, Debug)]
pub struct Compiled {
    pub world: World,
    pub strategy: Strategy,
    /// Program rules in their strategy form, in emission order.
    pub rules: Vec<Arc<Rule>>,
    /// Free variables of the query; each names a link in the world.
    pub query_vars: Vec<String>,
    pub data: BTreeSet<Functor>,
    /// CCFL constructors with their arities.
    pub constructors: Vec<(String, usize)>,
}

impl Compiled {
    pub fn result_link(&self) -> Option<Link> {
        self.world.link_by_name(RESULT)
    }
}

/// Compiles `p` and lays out `query` for `strategy`.
pub fn compile(p: &CcflProgram, query: &Expr, strategy: Strategy, opts: Options) -> Compiled {
    let prepared = prepare(p);
    let compiler = Compiler::new(&prepared, opts);
    let flat = compiler.all_rules();
    let atoms = compiler.flatten_query(query, RESULT);
    let data = data_functors(&prepared.program);
    let query_vars: Vec<String> = crate::parse::query_vars(query, p).into_iter().collect();
    let mut world = World::relaxed();
    world.data = data.clone();
    world.markers = [(IN_LINKS, 1), (EVAL, 0), (LIFT, 0), (ANSWER, 1)]
        .into_iter()
        .map(|(n, k)| Functor::new(n, k))
        .collect();
    let mut links: HashMap<String, Link> = HashMap::new();
    let root = world.root();
    let rules: Vec<Arc<Rule>> = match strategy {
        Strategy::Nondet => {
            let rules: Vec<Arc<Rule>> = flat.iter().map(|r| r.to_rule().shared()).collect();
            world.set_rules(root, rules.clone());
            place(&mut world, root, &Template { atoms, ..Template::default() }, &mut links);
            rules
        }
        Strategy::Cbv => {
            let rules: Vec<Arc<Rule>> = flat.iter().map(|r| cbv_rule(r, &data).shared()).collect();
            world.set_rules(root, runtime::cbv_meta_rules());
            let mut c = Counters(0);
            for g in group_atoms(&atoms, RESULT, &data) {
                let mut body = Template {
                    atoms: g.atoms.clone(),
                    ..Template::default()
                };
                body.atoms.extend(c.atoms(g.deps));
                let outer = world.new_membrane(Some(root)).expect("root is alive");
                if g.deps == 0 {
                    world.set_rules(outer, rules.clone());
                }
                place(&mut world, outer, &Template { cells: vec![cell(body)], ..Template::default() }, &mut links);
            }
            rules
        }
        Strategy::Outermost => {
            let mut base = Vec::new();
            let mut variants = Vec::new();
            for r in &flat {
                let (b, v) = outermost_rules(r, &data);
                base.push(b.shared());
                variants.push(v.shared());
            }
            let mut all = base.clone();
            all.extend(runtime::rule_d_all());
            all.extend(variants.iter().cloned());
            all.extend(runtime::rule_c_all());
            world.set_rules(root, all);
            let mut t = Template::default();
            for g in group_atoms(&atoms, RESULT, &data) {
                let mut body = Template {
                    atoms: g.atoms.clone(),
                    ..Template::default()
                };
                if g.root {
                    body.atoms.push(marker(EVAL));
                    body.atoms.push(AtomT::new(ANSWER, &[RESULT]));
                    t.cells.push(cell(body));
                } else {
                    t.cells.push(protect(body));
                }
            }
            place(&mut world, root, &t, &mut links);
            base.extend(variants);
            base
        }
    };
    // a query that is just a variable leaves `R = x`
    world.fuse_connectors();
    if world.link_by_name(RESULT).is_none() {
        let l = links.get(RESULT).copied().unwrap_or_else(|| world.fresh_link());
        world.set_link_name(l, RESULT);
    }
    Compiled {
        world,
        strategy,
        rules,
        query_vars,
        data,
        constructors: p.constructors(),
    }
}

/// Builds the atoms and cells of `t` inside `m`. Internal link names
/// (`~…` and `V…`) stay anonymous; others name their link.
fn place(w: &mut World, m: MemId, t: &Template, links: &mut HashMap<String, Link>) {
    for a in &t.atoms {
        let ls: Vec<Link> = a
            .args
            .iter()
            .map(|v| {
                *links.entry(v.clone()).or_insert_with(|| {
                    let l = w.fresh_link();
                    let internal = v.starts_with('~') || (v.starts_with('V') && v[1..].chars().all(|c| c.is_ascii_digit()));
                    if !internal {
                        w.set_link_name(l, v.clone());
                    }
                    l
                })
            })
            .collect();
        w.add_atom_kind(m, &a.name, a.kind, &ls).expect("relaxed worlds accept any link");
    }
    for c in &t.cells {
        let child = w.new_membrane(Some(m)).expect("parent is alive");
        place(w, child, &c.body, links);
    }
}

/// Emits the rule text of every program rule of `c`, one per line.
pub fn rules_text(c: &Compiled) -> String {
    c.rules
        .iter()
        .map(|r| format!("{}\n", hgraph::serialize_rule(r)))
        .collect()
}
