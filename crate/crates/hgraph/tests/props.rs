use hgraph::{parse_world, run, serialize, AtomKind, EngineError, Link, MemId, Policy, RunStatus, World};
use proptest::prelude::*;

#[derive(Clone, Debug)]
enum Node {
    Atom(usize, usize),
    Int(i64),
    Cell(Vec<Node>),
}

fn node() -> impl Strategy<Value = Node> {
    let leaf = prop_oneof![(0usize..4, 0usize..4).prop_map(|(n, a)| Node::Atom(n, a)), (-5i64..50).prop_map(Node::Int)];
    leaf.prop_recursive(3, 24, 4, |inner| prop::collection::vec(inner, 0..4).prop_map(Node::Cell))
}

const NAMES: [&str; 4] = ["a", "b", "f", "g"];

/// Builds a strict world; argument slots are paired up in order, an odd
/// slot out stays a free link.
fn build(nodes: &[Node]) -> World {
    let mut w = World::new();
    let mut slots = Vec::new();
    fn place(w: &mut World, m: MemId, nodes: &[Node], slots: &mut Vec<(MemId, String, AtomKind, usize)>) {
        for n in nodes {
            match n {
                Node::Atom(name, arity) => slots.push((m, NAMES[*name].to_string(), AtomKind::Plain, *arity)),
                Node::Int(v) => slots.push((m, v.to_string(), AtomKind::Int(*v), 1)),
                Node::Cell(inner) => {
                    let c = w.new_membrane(Some(m)).unwrap();
                    place(w, c, inner, slots);
                }
            }
        }
    }
    let root = w.root();
    place(&mut w, root, nodes, &mut slots);
    let total: usize = slots.iter().map(|s| s.3).sum();
    let links: Vec<Link> = (0..total).map(|i| Link((i / 2) as u64)).collect();
    let mut k = 0;
    for (m, name, kind, arity) in slots {
        w.add_atom_kind(m, &name, kind, &links[k..k + arity]).unwrap();
        k += arity;
    }
    w
}

proptest! {
    #[test]
    fn serialization_is_a_fixpoint(nodes in prop::collection::vec(node(), 0..8)) {
        let w = build(&nodes);
        let once = serialize(&w);
        let back = parse_world(&once).unwrap();
        prop_assert_eq!(back.atom_ids().len(), w.atom_ids().len());
        prop_assert_eq!(back.membranes().len(), w.membranes().len());
        prop_assert_eq!(serialize(&back), once);
    }

    #[test]
    fn bubble_sort_agrees_with_std_sort(xs in prop::collection::vec(-20i64..20, 0..8), seed in 0u64..50) {
        let items: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
        let src = format!("L=[X,Y|L2] :- X > Y | L=[Y,X|L2]. top([{}]).", items.join(","));
        let mut w = parse_world(&src).unwrap();
        let out = run(&mut w, &Policy { seed, max_steps: 10_000 }).unwrap();
        prop_assert_eq!(out.status, RunStatus::NormalForm);
        let mut sorted = xs.clone();
        sorted.sort();
        let top = w.atom_ids().into_iter().find(|a| w.atom(*a).name == "top").unwrap();
        let mut l = w.atom(top).args[0];
        let mut got = Vec::new();
        loop {
            let (a, _) = *w.endpoints(l).iter().find(|(a, _)| *a != top && w.atom(*a).result() == Some(l)).unwrap();
            let atom = w.atom(a);
            if atom.name == "nil" { break; }
            got.push(w.int_value(atom.args[0]).unwrap());
            l = atom.args[1];
        }
        prop_assert_eq!(got, sorted);
    }

    #[test]
    fn arithmetic_matches_checked_ops(a in any::<i64>(), b in any::<i64>(), op in 0usize..3) {
        let sym = ["+", "-", "*"][op];
        let expected = match op { 0 => a.checked_add(b), 1 => a.checked_sub(b), _ => a.checked_mul(b) };
        let mut w = World::new();
        let root = w.root();
        let (x, y, r) = (w.fresh_link(), w.fresh_link(), w.fresh_link());
        w.add_int(root, a, x).unwrap();
        w.add_int(root, b, y).unwrap();
        w.add_atom(root, sym, &[x, y, r]).unwrap();
        w.add_atom(root, "out", &[r]).unwrap();
        match (run(&mut w, &Policy::default()), expected) {
            (Ok(out), Some(v)) => {
                prop_assert_eq!(out.steps, 1);
                prop_assert_eq!(w.int_value(r), Some(v));
            }
            (Err(EngineError::ArithmeticError { .. }), None) => {}
            (other, e) => prop_assert!(false, "{:?} vs {:?}", other.map(|o| o.status), e),
        }
    }
}
