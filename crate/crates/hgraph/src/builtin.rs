//! Built-in reductions: integer arithmetic atoms, structural equality
//! `eq_(A,B,R)` and conjunction `and_(A,B,R)`.

use std::collections::{HashMap, HashSet};

use crate::graph::{AtomId, AtomKind, Link, MemId, World};
use crate::rewriter::EngineError;
use crate::rule::ArithOp;

pub(crate) const EQ: &str = "eq_";
pub(crate) const AND: &str = "and_";
pub(crate) const SUCCESS: &str = "success";
pub(crate) const FAIL: &str = "fail";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Builtin {
    Arith(ArithOp),
    Eq,
    And,
}

impl Builtin {
    pub(crate) fn label(self) -> &'static str {
        match self {
            Builtin::Arith(_) => "builtin-arith",
            Builtin::Eq => "builtin-eq",
            Builtin::And => "builtin-and",
        }
    }
}

pub(crate) fn kind_of(w: &World, a: AtomId) -> Option<Builtin> {
    let atom = w.atom(a);
    if atom.kind != AtomKind::Plain || atom.args.len() != 3 {
        return None;
    }
    match atom.name.as_str() {
        EQ => Some(Builtin::Eq),
        AND => Some(Builtin::And),
        n => ArithOp::from_name(n).map(Builtin::Arith),
    }
}

/// Builtins fire at the root, in rule-bearing membranes, and in their
/// direct children.
pub(crate) fn is_active(w: &World, m: MemId) -> bool {
    let mem = w.mem(m);
    m == w.root() || !mem.rules.is_empty() || mem.parent.map_or(false, |p| !w.mem(p).rules.is_empty())
}

enum Unify {
    Done(Vec<(Link, Link)>),
    Fail,
    Wait,
}

fn unify(w: &World, a: Link, b: Link) -> Unify {
    let mut pairs = vec![(a, b)];
    let mut seen = HashSet::new();
    let mut fuse = Vec::new();
    let mut wait = false;
    while let Some((x, y)) = pairs.pop() {
        if x == y || !seen.insert((x, y)) {
            continue;
        }
        match (w.producer(x), w.producer(y)) {
            (None, None) => fuse.push((x, y)),
            (Some(_), None) | (None, Some(_)) => {
                let (bound, free) = if w.producer(x).is_some() { (x, y) } else { (y, x) };
                if !settled(w, bound) {
                    wait = true;
                    continue;
                }
                fuse.push((bound, free));
            }
            (Some(p), Some(q)) => {
                let (pa, qa) = (w.atom(p), w.atom(q));
                if !w.is_data(pa) || !w.is_data(qa) {
                    wait = true;
                    continue;
                }
                if pa.kind != qa.kind || pa.name != qa.name || pa.args.len() != qa.args.len() {
                    return Unify::Fail;
                }
                let n = pa.args.len() - 1;
                for i in 0..n {
                    pairs.push((pa.args[i], qa.args[i]));
                }
            }
        }
    }
    if wait {
        Unify::Wait
    } else {
        Unify::Done(fuse)
    }
}

/// Whether `l` is free or built from data atoms all the way down.
fn settled(w: &World, l: Link) -> bool {
    let mut stack = vec![l];
    let mut seen = HashSet::new();
    while let Some(l) = stack.pop() {
        if !seen.insert(l) {
            continue;
        }
        let Some(p) = w.producer(l) else { continue };
        let atom = w.atom(p);
        if !w.is_data(atom) {
            return false;
        }
        stack.extend(&atom.args[..atom.args.len() - 1]);
    }
    true
}

fn truth(w: &World, l: Link) -> Option<bool> {
    let p = w.data_producer(l)?;
    let atom = w.atom(p);
    match (atom.name.as_str(), atom.args.len()) {
        (SUCCESS, 1) => Some(true),
        (FAIL, 1) => Some(false),
        _ => None,
    }
}

pub(crate) fn applicable(w: &World, a: AtomId) -> Option<Builtin> {
    let b = kind_of(w, a)?;
    let args = &w.atom(a).args;
    let ok = match b {
        Builtin::Arith(_) => w.int_value(args[0]).is_some() && w.int_value(args[1]).is_some(),
        Builtin::Eq => !matches!(unify(w, args[0], args[1]), Unify::Wait),
        Builtin::And => match (truth(w, args[0]), truth(w, args[1])) {
            (Some(false), _) | (_, Some(false)) | (Some(true), Some(true)) => true,
            _ => false,
        },
    };
    ok.then_some(b)
}

/// Atoms of `m` at which a builtin can fire now, in membrane order.
pub(crate) fn applicable_in(w: &World, m: MemId) -> Vec<(AtomId, Builtin)> {
    if !is_active(w, m) {
        return Vec::new();
    }
    w.mem(m).atoms.iter().filter_map(|&a| applicable(w, a).map(|b| (a, b))).collect()
}

fn label(w: &World, l: Link) -> String {
    match w.int_value(l) {
        Some(v) => v.to_string(),
        None => w.link_name(l).map_or_else(|| format!("_L{}", l.0), str::to_string),
    }
}

/// Fires the builtin at `a`. Returns the consumed and produced text.
pub(crate) fn apply(w: &mut World, a: AtomId, b: Builtin) -> Result<(String, String), EngineError> {
    let atom = w.atom(a).clone();
    let (x, y, r) = (atom.args[0], atom.args[1], atom.args[2]);
    let rname = w.link_name(r).map_or_else(|| format!("_L{}", r.0), str::to_string);
    match b {
        Builtin::Arith(op) => {
            let (va, vb) = (w.int_value(x).unwrap(), w.int_value(y).unwrap());
            let v = crate::rewriter::reduce_arith(op, va, vb)?;
            let consumed = format!("{rname} = {va}{}{vb}", op.symbol());
            w.remove_atom(a);
            w.add_int(atom.mem, v, r)?;
            w.collect_garbage(vec![x, y]);
            Ok((consumed, format!("{rname} = {v}")))
        }
        Builtin::Eq => {
            let consumed = format!("{EQ}({},{},{rname})", label(w, x), label(w, y));
            let res = unify(w, x, y);
            w.remove_atom(a);
            let name = match res {
                Unify::Done(fuse) => {
                    let mut moved: HashMap<Link, Link> = HashMap::new();
                    let find = |m: &HashMap<Link, Link>, mut l: Link| {
                        while let Some(n) = m.get(&l) {
                            l = *n;
                        }
                        l
                    };
                    for (keep, drop) in fuse {
                        let (k, d) = (find(&moved, keep), find(&moved, drop));
                        if k != d {
                            w.fuse_links(k, d);
                            moved.insert(d, k);
                        }
                    }
                    SUCCESS
                }
                _ => FAIL,
            };
            w.add_atom(atom.mem, name, &[r])?;
            w.collect_garbage(vec![x, y]);
            Ok((consumed, format!("{name}({rname})")))
        }
        Builtin::And => {
            let ok = truth(w, x) == Some(true) && truth(w, y) == Some(true);
            let consumed = format!("{AND}({},{},{rname})", label(w, x), label(w, y));
            w.remove_atom(a);
            let name = if ok { SUCCESS } else { FAIL };
            w.add_atom(atom.mem, name, &[r])?;
            w.collect_garbage(vec![x, y]);
            Ok((consumed, format!("{name}({rname})")))
        }
    }
}
