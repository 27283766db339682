//! Graphviz export. Membranes become clusters, atoms become nodes and
//! links become edges; a link with more than two ends gets a hub node.

use std::fmt::Write;

use crate::graph::{AtomKind, MemId, World};

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn label(w: &World, l: crate::graph::Link) -> String {
    w.link_name(l).map_or_else(|| format!("_L{}", l.0), str::to_string)
}

pub fn to_dot(w: &World) -> String {
    let mut out = String::from("digraph world {\n  compound=true;\n  node [shape=ellipse];\n");
    write_mem(w, w.root(), 1, &mut out);
    let mut links: Vec<_> = w.atom_ids().into_iter().flat_map(|a| w.atom(a).args.clone()).collect();
    links.sort();
    links.dedup();
    for l in links {
        let eps = w.endpoints(l);
        let name = escape(&label(w, l));
        if eps.len() == 2 {
            let ((a, p), (b, q)) = (eps[0], eps[1]);
            let _ = writeln!(out, "  a{} -> a{} [dir=none, label=\"{name}\", taillabel=\"{p}\", headlabel=\"{q}\"];", a.0, b.0);
        } else {
            let _ = writeln!(out, "  l{} [shape=point, xlabel=\"{name}\"];", l.0);
            for &(a, p) in eps {
                let _ = writeln!(out, "  a{} -> l{} [dir=none, taillabel=\"{p}\"];", a.0, l.0);
            }
        }
    }
    out.push_str("}\n");
    out
}

fn write_mem(w: &World, m: MemId, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    let mem = w.mem(m);
    for &a in &mem.atoms {
        let atom = w.atom(a);
        let text = match atom.kind {
            AtomKind::Int(v) => v.to_string(),
            AtomKind::Connector => "=".to_string(),
            AtomKind::Plain => atom.name.clone(),
        };
        let shape = if w.is_data(atom) { "box" } else { "ellipse" };
        let _ = writeln!(out, "{pad}a{} [label=\"{}\", shape={shape}];", a.0, escape(&text));
    }
    for &c in &mem.children {
        let _ = writeln!(out, "{pad}subgraph cluster_{} {{", c.0);
        let rules = w.mem(c).rules.len();
        let title = if rules > 0 { format!("{c} ({rules} rules)") } else { c.to_string() };
        let _ = writeln!(out, "{pad}  label=\"{title}\";");
        write_mem(w, c, depth + 1, out);
        let _ = writeln!(out, "{pad}}}");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_world;

    #[test]
    fn clusters_and_edges() {
        let w = parse_world("a(X), {b(X)}").unwrap();
        let d = to_dot(&w);
        assert!(d.contains("subgraph cluster_"));
        assert!(d.contains("label=\"X\""));
    }
}
