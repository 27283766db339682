use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::rule::Rule;

/// A logical link. Two (or, in relaxed mode, more) atom arguments carrying
/// the same link are connected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Link(pub u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MemId(pub usize);

impl fmt::Display for MemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Functor {
    pub name: String,
    pub arity: usize,
}

impl Functor {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        Functor { name: name.into(), arity }
    }
}

impl fmt::Display for Functor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AtomKind {
    Plain,
    /// Integer literal; exactly one argument, its value link.
    Int(i64),
    /// `X = Y`; exactly two arguments.
    Connector,
}

#[derive(Clone, Debug)]
pub struct Atom {
    pub name: String,
    pub kind: AtomKind,
    pub args: Vec<Link>,
    pub mem: MemId,
}

impl Atom {
    pub fn functor(&self) -> Functor {
        Functor::new(self.name.clone(), self.args.len())
    }

    /// The link at the final argument position: the atom's result.
    pub fn result(&self) -> Option<Link> {
        self.args.last().copied()
    }
}

#[derive(Clone, Debug, Default)]
pub struct Membrane {
    pub parent: Option<MemId>,
    pub atoms: Vec<AtomId>,
    pub children: Vec<MemId>,
    pub rules: Vec<Arc<Rule>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LinkMode {
    /// Every link occurs at most twice.
    #[default]
    Strict,
    /// Hyperlinks: a link may occur any number of times.
    Relaxed,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("link {0:?} would occur more than twice")]
    LinkArityViolation(Link),
    #[error("unknown membrane {0}")]
    UnknownMembrane(MemId),
    #[error("connector atoms take exactly two links")]
    BadConnector,
    #[error("moving {0} under {1} would create a membrane cycle")]
    Cycle(MemId, MemId),
}

/// A whole process: the root membrane and everything below it.
#[derive(Clone, Debug)]
pub struct World {
    atoms: Vec<Option<Atom>>,
    mems: Vec<Option<Membrane>>,
    root: MemId,
    occ: HashMap<Link, Vec<(AtomId, usize)>>,
    next_link: u64,
    pub mode: LinkMode,
    /// Functors treated as immutable data (heap) in relaxed mode.
    pub data: BTreeSet<Functor>,
    /// Bookkeeping atoms that are neither data nor pending work.
    pub markers: BTreeSet<Functor>,
    names: HashMap<Link, String>,
    /// Names whose link was fused into another named link.
    aliases: HashMap<String, Link>,
    epoch: u64,
}

impl Default for World {
    fn default() -> Self {
        World::new()
    }
}

impl World {
    pub fn new() -> Self {
        World {
            atoms: Vec::new(),
            mems: vec![Some(Membrane::default())],
            root: MemId(0),
            occ: HashMap::new(),
            next_link: 0,
            mode: LinkMode::Strict,
            data: BTreeSet::new(),
            markers: BTreeSet::new(),
            names: HashMap::new(),
            aliases: HashMap::new(),
            epoch: 0,
        }
    }

    pub fn relaxed() -> Self {
        World { mode: LinkMode::Relaxed, ..World::new() }
    }

    pub fn root(&self) -> MemId {
        self.root
    }

    /// Bumped on every mutation; used to detect stale match bindings.
    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    fn touch(&mut self) {
        self.epoch += 1;
    }

    pub fn mem(&self, id: MemId) -> &Membrane {
        self.mems[id.0].as_ref().expect("dead membrane")
    }

    fn mem_mut(&mut self, id: MemId) -> &mut Membrane {
        self.mems[id.0].as_mut().expect("dead membrane")
    }

    pub fn mem_alive(&self, id: MemId) -> bool {
        self.mems.get(id.0).map_or(false, Option::is_some)
    }

    pub fn atom(&self, id: AtomId) -> &Atom {
        self.atoms[id.0].as_ref().expect("dead atom")
    }

    pub fn atom_alive(&self, id: AtomId) -> bool {
        self.atoms.get(id.0).map_or(false, Option::is_some)
    }

    pub fn fresh_link(&mut self) -> Link {
        let l = Link(self.next_link);
        self.next_link += 1;
        l
    }

    pub fn link_name(&self, l: Link) -> Option<&str> {
        self.names.get(&l).map(String::as_str)
    }

    pub fn set_link_name(&mut self, l: Link, name: impl Into<String>) {
        self.names.insert(l, name.into());
    }

    /// Finds a link by the name it was given in source text.
    pub fn link_by_name(&self, name: &str) -> Option<Link> {
        let mut found: Vec<Link> =
            self.names.iter().filter(|(_, n)| n.as_str() == name).map(|(l, _)| *l).collect();
        found.sort();
        let alias = self.aliases.get(name).copied();
        let live = |l: &Link| self.occurrences(*l) > 0;
        found
            .iter()
            .copied()
            .find(live)
            .or_else(|| alias.filter(live))
            .or_else(|| found.first().copied())
            .or(alias)
    }

    /// Creates an empty membrane; registered under `parent` when given,
    /// otherwise left detached.
    pub fn new_membrane(&mut self, parent: Option<MemId>) -> Result<MemId, GraphError> {
        if let Some(p) = parent {
            if !self.mem_alive(p) {
                return Err(GraphError::UnknownMembrane(p));
            }
        }
        let id = MemId(self.mems.len());
        self.mems.push(Some(Membrane { parent, ..Membrane::default() }));
        if let Some(p) = parent {
            self.mem_mut(p).children.push(id);
        }
        self.touch();
        Ok(id)
    }

    pub fn depth(&self, mut m: MemId) -> usize {
        let mut d = 0;
        while let Some(p) = self.mem(m).parent {
            d += 1;
            m = p;
        }
        d
    }

    pub fn is_ancestor_or_self(&self, anc: MemId, mut m: MemId) -> bool {
        loop {
            if m == anc {
                return true;
            }
            match self.mem(m).parent {
                Some(p) => m = p,
                None => return false,
            }
        }
    }

    pub fn add_atom(&mut self, m: MemId, name: &str, links: &[Link]) -> Result<AtomId, GraphError> {
        self.add_atom_kind(m, name, AtomKind::Plain, links)
    }

    pub fn add_int(&mut self, m: MemId, value: i64, link: Link) -> Result<AtomId, GraphError> {
        self.add_atom_kind(m, &value.to_string(), AtomKind::Int(value), &[link])
    }

    pub fn add_atom_kind(
        &mut self,
        m: MemId,
        name: &str,
        kind: AtomKind,
        links: &[Link],
    ) -> Result<AtomId, GraphError> {
        if !self.mem_alive(m) {
            return Err(GraphError::UnknownMembrane(m));
        }
        if kind == AtomKind::Connector && links.len() != 2 {
            return Err(GraphError::BadConnector);
        }
        if self.mode == LinkMode::Strict {
            let mut extra: HashMap<Link, usize> = HashMap::new();
            for l in links {
                *extra.entry(*l).or_default() += 1;
            }
            for (l, n) in extra {
                if self.occurrences(l) + n > 2 {
                    return Err(GraphError::LinkArityViolation(l));
                }
            }
        }
        let id = AtomId(self.atoms.len());
        for (i, l) in links.iter().enumerate() {
            self.occ.entry(*l).or_default().push((id, i));
            if l.0 >= self.next_link {
                self.next_link = l.0 + 1;
            }
        }
        self.atoms.push(Some(Atom { name: name.to_string(), kind, args: links.to_vec(), mem: m }));
        self.mem_mut(m).atoms.push(id);
        self.touch();
        Ok(id)
    }

    pub fn remove_atom(&mut self, id: AtomId) -> Atom {
        let atom = self.atoms[id.0].take().expect("dead atom");
        for (i, l) in atom.args.iter().enumerate() {
            if let Some(v) = self.occ.get_mut(l) {
                v.retain(|&(a, p)| !(a == id && p == i));
                if v.is_empty() {
                    self.occ.remove(l);
                }
            }
        }
        self.mem_mut(atom.mem).atoms.retain(|&a| a != id);
        self.touch();
        atom
    }

    pub fn move_atom(&mut self, id: AtomId, to: MemId) {
        let from = self.atom(id).mem;
        if from == to {
            return;
        }
        self.mem_mut(from).atoms.retain(|&a| a != id);
        self.mem_mut(to).atoms.push(id);
        self.atoms[id.0].as_mut().unwrap().mem = to;
        self.touch();
    }

    pub fn move_membrane(&mut self, id: MemId, to: MemId) -> Result<(), GraphError> {
        if self.is_ancestor_or_self(id, to) {
            return Err(GraphError::Cycle(id, to));
        }
        if let Some(p) = self.mem(id).parent {
            self.mem_mut(p).children.retain(|&c| c != id);
        }
        self.mem_mut(id).parent = Some(to);
        self.mem_mut(to).children.push(id);
        self.touch();
        Ok(())
    }

    /// Detaches a membrane from its parent without deleting it.
    pub fn detach_membrane(&mut self, id: MemId) {
        if let Some(p) = self.mem(id).parent {
            self.mem_mut(p).children.retain(|&c| c != id);
        }
        self.mem_mut(id).parent = None;
        self.touch();
    }

    /// Deletes a membrane and everything inside it.
    pub fn remove_membrane(&mut self, id: MemId) {
        self.detach_membrane(id);
        let mem = self.mems[id.0].take().expect("dead membrane");
        for a in mem.atoms {
            if self.atom_alive(a) {
                // the membrane record is gone; strip occurrences by hand
                let atom = self.atoms[a.0].take().unwrap();
                for (i, l) in atom.args.iter().enumerate() {
                    if let Some(v) = self.occ.get_mut(l) {
                        v.retain(|&(x, p)| !(x == a && p == i));
                        if v.is_empty() {
                            self.occ.remove(l);
                        }
                    }
                }
            }
        }
        for c in mem.children {
            self.mem_mut(c).parent = None;
            self.remove_membrane(c);
        }
        self.touch();
    }

    pub fn add_rule(&mut self, m: MemId, rule: Arc<Rule>) {
        self.mem_mut(m).rules.push(rule);
        self.touch();
    }

    pub fn set_rules(&mut self, m: MemId, rules: Vec<Arc<Rule>>) {
        self.mem_mut(m).rules = rules;
        self.touch();
    }

    pub fn occurrences(&self, l: Link) -> usize {
        self.occ.get(&l).map_or(0, Vec::len)
    }

    pub fn endpoints(&self, l: Link) -> &[(AtomId, usize)] {
        self.occ.get(&l).map_or(&[], Vec::as_slice)
    }

    /// Links currently occurring more than twice.
    pub fn hyperlinks(&self) -> BTreeSet<Link> {
        self.occ.iter().filter(|(_, v)| v.len() > 2).map(|(l, _)| *l).collect()
    }

    pub fn is_marker(&self, a: &Atom) -> bool {
        a.kind == AtomKind::Plain && self.markers.contains(&a.functor())
    }

    pub fn is_data(&self, a: &Atom) -> bool {
        match a.kind {
            AtomKind::Int(_) => true,
            AtomKind::Connector => false,
            AtomKind::Plain => self.data.contains(&a.functor()),
        }
    }

    /// The atom producing `l`: one carrying `l` as its final argument that
    /// is not a marker or connector. Data producers are preferred.
    pub fn producer(&self, l: Link) -> Option<AtomId> {
        let mut fallback = None;
        for &(a, pos) in self.endpoints(l) {
            let atom = self.atom(a);
            if pos + 1 != atom.args.len() || atom.kind == AtomKind::Connector || self.is_marker(atom) {
                continue;
            }
            if self.is_data(atom) {
                return Some(a);
            }
            fallback.get_or_insert(a);
        }
        fallback
    }

    pub fn data_producer(&self, l: Link) -> Option<AtomId> {
        self.producer(l).filter(|&a| self.is_data(self.atom(a)))
    }

    pub fn int_value(&self, l: Link) -> Option<i64> {
        self.producer(l).and_then(|a| match self.atom(a).kind {
            AtomKind::Int(v) => Some(v),
            _ => None,
        })
    }

    /// Merges link `b` into link `a`: every occurrence of `b` becomes `a`.
    pub fn fuse_links(&mut self, a: Link, b: Link) {
        if a == b {
            return;
        }
        let eps = self.occ.remove(&b).unwrap_or_default();
        for &(atom, pos) in &eps {
            self.atoms[atom.0].as_mut().unwrap().args[pos] = a;
        }
        self.occ.entry(a).or_default().extend(eps);
        if !self.names.contains_key(&a) {
            if let Some(n) = self.names.remove(&b) {
                self.names.insert(a, n);
            }
        } else if let Some(n) = self.names.remove(&b) {
            self.aliases.insert(n, a);
        }
        for l in self.aliases.values_mut() {
            if *l == b {
                *l = a;
            }
        }
        self.touch();
    }

    /// Removes every connector `X = Y` in the world, merging its two links.
    pub fn fuse_connectors(&mut self) {
        let conns: Vec<AtomId> = self
            .atom_ids()
            .into_iter()
            .filter(|&a| self.atom(a).kind == AtomKind::Connector)
            .collect();
        for c in conns {
            if !self.atom_alive(c) {
                continue;
            }
            let atom = self.remove_atom(c);
            self.fuse_links(atom.args[0], atom.args[1]);
        }
    }

    pub fn atom_ids(&self) -> Vec<AtomId> {
        self.preorder(self.root).into_iter().flat_map(|m| self.mem(m).atoms.clone()).collect()
    }

    pub fn preorder(&self, from: MemId) -> Vec<MemId> {
        let mut out = Vec::new();
        let mut stack = vec![from];
        while let Some(m) = stack.pop() {
            out.push(m);
            for &c in self.mem(m).children.iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    pub fn subtree_atoms(&self, m: MemId) -> Vec<AtomId> {
        self.preorder(m).into_iter().flat_map(|x| self.mem(x).atoms.clone()).collect()
    }

    /// Whether `l` occurs both inside `m`'s subtree and outside of it.
    pub fn crosses(&self, l: Link, m: MemId) -> bool {
        let mut inside = false;
        let mut outside = false;
        for &(a, _) in self.endpoints(l) {
            if self.is_ancestor_or_self(m, self.atom(a).mem) {
                inside = true;
            } else {
                outside = true;
            }
        }
        inside && outside
    }

    /// Deep copy of membrane `src` (with its subtree) placed under `to`.
    /// Links internal to the copied subtree are renamed; free links are
    /// shared with the original; rules are copied verbatim.
    pub fn copy_membrane(&mut self, src: MemId, to: MemId) -> Result<MemId, GraphError> {
        let atoms = self.subtree_atoms(src);
        let internal = self.internal_links(&atoms, src);
        let mut rename = HashMap::new();
        for l in internal {
            let f = self.fresh_link();
            rename.insert(l, f);
        }
        self.copy_rec(src, to, &rename)
    }

    fn internal_links(&self, atoms: &[AtomId], m: MemId) -> BTreeSet<Link> {
        let mut links = BTreeSet::new();
        for &a in atoms {
            for &l in &self.atom(a).args {
                if !self.crosses(l, m) {
                    links.insert(l);
                }
            }
        }
        links
    }

    fn copy_rec(&mut self, src: MemId, to: MemId, rename: &HashMap<Link, Link>) -> Result<MemId, GraphError> {
        let new = self.new_membrane(Some(to))?;
        let rules = self.mem(src).rules.clone();
        self.set_rules(new, rules);
        for a in self.mem(src).atoms.clone() {
            self.copy_atom(a, new, rename)?;
        }
        for c in self.mem(src).children.clone() {
            self.copy_rec(c, new, rename)?;
        }
        Ok(new)
    }

    pub(crate) fn copy_atom(&mut self, a: AtomId, to: MemId, rename: &HashMap<Link, Link>) -> Result<AtomId, GraphError> {
        let atom = self.atom(a).clone();
        let args: Vec<Link> = atom.args.iter().map(|l| *rename.get(l).unwrap_or(l)).collect();
        self.add_atom_kind(to, &atom.name, atom.kind, &args)
    }

    /// Copies a loose fragment (atoms and cells of one membrane) into `to`,
    /// renaming links that only occur inside the fragment.
    pub fn copy_fragment(&mut self, atoms: &[AtomId], cells: &[MemId], to: MemId) -> Result<(Vec<AtomId>, Vec<MemId>), GraphError> {
        let mut all: Vec<AtomId> = atoms.to_vec();
        for &c in cells {
            all.extend(self.subtree_atoms(c));
        }
        let inside: HashSet<AtomId> = all.iter().copied().collect();
        let mut rename = HashMap::new();
        for &a in &all {
            for &l in &self.atom(a).args.clone() {
                if rename.contains_key(&l) {
                    continue;
                }
                if self.endpoints(l).iter().all(|(x, _)| inside.contains(x)) {
                    let f = self.fresh_link();
                    rename.insert(l, f);
                }
            }
        }
        let mut new_atoms = Vec::new();
        for &a in atoms {
            new_atoms.push(self.copy_atom(a, to, &rename)?);
        }
        let mut new_cells = Vec::new();
        for &c in cells {
            new_cells.push(self.copy_rec(c, to, &rename)?);
        }
        Ok((new_atoms, new_cells))
    }

    /// All live membranes below (and including) the root.
    pub fn membranes(&self) -> Vec<MemId> {
        self.preorder(self.root)
    }

    /// Removes data atoms whose result link is no longer referenced,
    /// cascading into their fields. Named links keep their data alive.
    pub(crate) fn collect_garbage(&mut self, mut candidates: Vec<Link>) {
        while let Some(l) = candidates.pop() {
            let eps = self.endpoints(l);
            if eps.len() != 1 || self.names.contains_key(&l) {
                continue;
            }
            let (a, pos) = eps[0];
            let atom = self.atom(a);
            if pos + 1 != atom.args.len() || !self.is_data(atom) {
                continue;
            }
            let removed = self.remove_atom(a);
            candidates.extend(removed.args[..removed.args.len() - 1].iter().copied());
        }
    }
}
