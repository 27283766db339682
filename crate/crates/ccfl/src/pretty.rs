//! Pretty-printing back to CCFL source.

use std::fmt;

use crate::ast::{CcflProgram, Expr, FunDef, Pattern};

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Int(v) if *v < 0 => write!(f, "({v})"),
            Pattern::Int(v) => write!(f, "{v}"),
            Pattern::Var(v) => write!(f, "{v}"),
            Pattern::Con(c, vs) => {
                write!(f, "{c}")?;
                for v in vs {
                    write!(f, " {v}")?;
                }
                Ok(())
            }
        }
    }
}

fn atomic(e: &Expr) -> bool {
    match e {
        Expr::Var(_) => true,
        Expr::Int(v) => *v >= 0,
        Expr::Con(_, a) => a.is_empty(),
        _ => false,
    }
}

struct Arg<'a>(&'a Expr);

impl fmt::Display for Arg<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if atomic(self.0) {
            write!(f, "{}", self.0)
        } else {
            write!(f, "({})", self.0)
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Int(v) if *v < 0 => write!(f, "({v})"),
            Expr::Int(v) => write!(f, "{v}"),
            Expr::Con(c, args) => {
                write!(f, "{c}")?;
                for a in args {
                    write!(f, " {}", Arg(a))?;
                }
                Ok(())
            }
            Expr::App(h, args) => {
                write!(f, "{}", Arg(h))?;
                for a in args {
                    write!(f, " {}", Arg(a))?;
                }
                Ok(())
            }
            Expr::Infix(op, l, r) => write!(f, "{} {} {}", Arg(l), op.symbol(), Arg(r)),
            Expr::Equality(l, r) => write!(f, "{} =:= {}", Arg(l), Arg(r)),
            Expr::Conj(items) => {
                for (i, e) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " & ")?;
                    }
                    write!(f, "{}", Arg(e))?;
                }
                Ok(())
            }
            Expr::Case(s, branches) => {
                write!(f, "case {s} of ")?;
                for (i, b) in branches.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ; ")?;
                    }
                    write!(f, "{} -> {}", b.pattern, Arg(&b.body))?;
                }
                Ok(())
            }
            Expr::Let(binds, body) => {
                write!(f, "let ")?;
                for (i, (v, e)) in binds.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ; ")?;
                    }
                    write!(f, "{v} = {}", Arg(e))?;
                }
                write!(f, " in {body}")
            }
            Expr::With(vs, body) => write!(f, "with {} in {body}", vs.join(", ")),
        }
    }
}

impl fmt::Display for FunDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "def {}", self.name)?;
        for p in &self.params {
            write!(f, " {p}")?;
        }
        write!(f, " =")?;
        match &self.guarded_alts {
            Some(alts) => {
                for (i, a) in alts.iter().enumerate() {
                    if i > 0 {
                        write!(f, " |")?;
                    }
                    write!(
                        f,
                        "\n  {} =:= {} -> {}",
                        a.ask.var,
                        a.ask.pattern,
                        Arg(&a.body)
                    )?;
                }
                Ok(())
            }
            None => write!(f, " {}", self.body),
        }
    }
}

impl fmt::Display for CcflProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.data_decls {
            write!(f, "data {}", d.name)?;
            for p in &d.params {
                write!(f, " {p}")?;
            }
            let cons: Vec<String> = d
                .constructors
                .iter()
                .map(|c| {
                    let fields = vec![" Int"; c.arity].concat();
                    format!("{}{fields}", c.name)
                })
                .collect();
            writeln!(f, " = {}", cons.join(" | "))?;
        }
        for s in &self.type_sigs {
            writeln!(f, "fun {} :: {}", s.name, s.text)?;
        }
        for d in &self.fun_defs {
            writeln!(f, "{d}")?;
        }
        Ok(())
    }
}
