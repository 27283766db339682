//! Parser for the textual process format.
//!
//! ```text
//! name@@ Lhs :- Guard | Rhs.      rules (name and guard optional)
//! f(A,B), A = 7, X = Y            atoms, integer sugar, connectors
//! E = f(7, g(D)), L = [1,2|T]     nested terms and list sugar
//! { ... }  { ... }/               cells, stable flag (lhs only)
//! $p  @r  +L  -L                  contexts and free-link ports
//! %relaxed.  %data cons/3.        world directives
//! ```

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::graph::{AtomKind, Functor, GraphError, Link, LinkMode, MemId, World};
use crate::rule::{ArithOp, AtomT, CellT, CmpOp, Guard, GuardCmp, IntExpr, Polarity, Port, Rule, RuleError, Template};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("{line}:{col}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Name(String),
    Var(String),
    Int(i64),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: &[&str] = &[
    "=:=", "=\\=", ":-", "@@", ">=", "=<", "(", ")", "{", "}", "[", "]", ",", ".", "|", "@", "$", "/", "=", "+", "-",
    "*", ">", "<", "%",
];

fn lex(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, m: &str| SyntaxError { line, col, message: m.to_string() };
    while i < chars.len() {
        let c = chars[i];
        let adv = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
            for k in 0..n {
                if chars[*i + k] == '\n' {
                    *line += 1;
                    *col = 1;
                } else {
                    *col += 1;
                }
            }
            *i += n;
        };
        if c.is_whitespace() {
            adv(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                adv(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            let (l0, c0) = (line, col);
            adv(&mut i, &mut line, &mut col, 2);
            loop {
                if i + 1 >= chars.len() {
                    return Err(err(l0, c0, "unterminated comment"));
                }
                if chars[i] == '*' && chars[i + 1] == '/' {
                    adv(&mut i, &mut line, &mut col, 2);
                    break;
                }
                adv(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        let (tl, tc) = (line, col);
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                adv(&mut i, &mut line, &mut col, 1);
            }
            let s: String = chars[start..i].iter().collect();
            let v = s.parse::<i64>().map_err(|_| err(tl, tc, "integer literal out of range"))?;
            out.push(Token { tok: Tok::Int(v), line: tl, col: tc });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                adv(&mut i, &mut line, &mut col, 1);
            }
            let s: String = chars[start..i].iter().collect();
            let tok = if c.is_uppercase() || c == '_' { Tok::Var(s) } else { Tok::Name(s) };
            out.push(Token { tok, line: tl, col: tc });
            continue;
        }
        if c == '\'' {
            let start = i + 1;
            adv(&mut i, &mut line, &mut col, 1);
            while i < chars.len() && chars[i] != '\'' {
                adv(&mut i, &mut line, &mut col, 1);
            }
            if i >= chars.len() {
                return Err(err(tl, tc, "unterminated quoted name"));
            }
            let s: String = chars[start..i].iter().collect();
            adv(&mut i, &mut line, &mut col, 1);
            out.push(Token { tok: Tok::Name(s), line: tl, col: tc });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                adv(&mut i, &mut line, &mut col, s.chars().count());
                out.push(Token { tok: Tok::Sym(s), line: tl, col: tc });
            }
            None => return Err(err(tl, tc, &format!("unexpected character {c:?}"))),
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

#[derive(Clone, Debug)]
enum Term {
    Var(String),
    Int(i64),
    Atom(String, Vec<Term>),
    List(Vec<Term>, Option<Box<Term>>),
    Arith(ArithOp, Box<Term>, Box<Term>),
}

#[derive(Clone, Debug)]
enum Ent {
    Term(Term),
    Eq(Term, Term),
    Cell(Vec<Item>, bool),
    Proc(String),
    RuleCtx(String),
    Port(Polarity, String),
}

#[derive(Clone, Debug)]
struct RuleAst {
    name: Option<String>,
    lhs: Vec<Ent>,
    guard: Guard,
    rhs: Vec<Ent>,
    line: usize,
    col: usize,
}

#[derive(Clone, Debug)]
enum Item {
    Ent(Ent),
    Rule(RuleAst),
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, m: impl Into<String>) -> Result<T, SyntaxError> {
        let t = &self.toks[self.pos];
        Err(SyntaxError { line: t.line, col: t.col, message: m.into() })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), SyntaxError> {
        if self.eat(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {:?}", self.peek()))
        }
    }

    /// Items until `}` or end of input.
    fn process(&mut self, in_cell: bool, directives: &mut Vec<(String, Vec<Functor>)>) -> Result<Vec<Item>, SyntaxError> {
        let mut items = Vec::new();
        loop {
            match self.peek() {
                Tok::Eof => {
                    if in_cell {
                        return self.err("unclosed `{`");
                    }
                    break;
                }
                Tok::Sym("}") if in_cell => break,
                Tok::Sym(",") | Tok::Sym(".") => {
                    self.bump();
                    continue;
                }
                Tok::Sym("%") if !in_cell => {
                    self.bump();
                    directives.push(self.directive()?);
                    continue;
                }
                _ => {}
            }
            let (line, col) = (self.toks[self.pos].line, self.toks[self.pos].col);
            let name = match (self.peek().clone(), self.peek_at(1)) {
                (Tok::Name(n) | Tok::Var(n), Tok::Sym("@@")) => {
                    self.bump();
                    self.bump();
                    Some(n)
                }
                _ => None,
            };
            let ents = self.ent_list()?;
            if self.eat(":-") {
                let guard = self.try_guard()?;
                let rhs = if self.is_sym(".") { Vec::new() } else { self.ent_list()? };
                self.expect(".")?;
                items.push(Item::Rule(RuleAst { name, lhs: ents, guard, rhs, line, col }));
            } else {
                if name.is_some() {
                    return self.err("expected `:-` after rule name");
                }
                if ents.is_empty() {
                    return self.err(format!("unexpected {:?}", self.peek()));
                }
                items.extend(ents.into_iter().map(Item::Ent));
                if !(self.is_sym(",") || self.is_sym(".") || self.is_sym("}") || matches!(self.peek(), Tok::Eof)) {
                    return self.err(format!("unexpected {:?}", self.peek()));
                }
            }
        }
        Ok(items)
    }

    fn directive(&mut self) -> Result<(String, Vec<Functor>), SyntaxError> {
        let name = match self.bump() {
            Tok::Name(n) => n,
            _ => return self.err("expected directive name"),
        };
        let mut fs = Vec::new();
        while !self.is_sym(".") {
            let f = match self.bump() {
                Tok::Name(n) => n,
                Tok::Sym(s) => s.to_string(),
                _ => return self.err("expected functor name"),
            };
            self.expect("/")?;
            let n = match self.bump() {
                Tok::Int(n) if n >= 0 => n as usize,
                _ => return self.err("expected arity"),
            };
            fs.push(Functor::new(f, n));
            if !self.eat(",") {
                break;
            }
        }
        self.expect(".")?;
        Ok((name, fs))
    }

    fn ent_list(&mut self) -> Result<Vec<Ent>, SyntaxError> {
        let mut v = vec![self.ent()?];
        while self.eat(",") {
            if self.is_sym(".") || self.is_sym("}") {
                break;
            }
            v.push(self.ent()?);
        }
        Ok(v)
    }

    fn ent(&mut self) -> Result<Ent, SyntaxError> {
        match self.peek().clone() {
            Tok::Sym("$") => {
                self.bump();
                match self.bump() {
                    Tok::Name(n) | Tok::Var(n) => Ok(Ent::Proc(n)),
                    _ => self.err("expected process context name"),
                }
            }
            Tok::Sym("@") => {
                self.bump();
                match self.bump() {
                    Tok::Name(n) | Tok::Var(n) => Ok(Ent::RuleCtx(n)),
                    _ => self.err("expected rule context name"),
                }
            }
            Tok::Sym(s @ ("+" | "-")) if matches!(self.peek_at(1), Tok::Var(_)) => {
                self.bump();
                let Tok::Var(v) = self.bump() else { unreachable!() };
                Ok(Ent::Port(if s == "+" { Polarity::Plus } else { Polarity::Minus }, v))
            }
            Tok::Sym("{") => {
                self.bump();
                let mut none = Vec::new();
                let items = self.process(true, &mut none)?;
                self.expect("}")?;
                let stable = self.eat("/");
                Ok(Ent::Cell(items, stable))
            }
            _ => {
                let t = self.arith()?;
                if self.eat("=") {
                    let r = self.arith()?;
                    Ok(Ent::Eq(t, r))
                } else {
                    Ok(Ent::Term(t))
                }
            }
        }
    }

    fn arith(&mut self) -> Result<Term, SyntaxError> {
        let mut l = self.product()?;
        loop {
            let op = if self.is_sym("+") {
                ArithOp::Add
            } else if self.is_sym("-") {
                ArithOp::Sub
            } else {
                return Ok(l);
            };
            self.bump();
            let r = self.product()?;
            l = Term::Arith(op, Box::new(l), Box::new(r));
        }
    }

    fn product(&mut self) -> Result<Term, SyntaxError> {
        let mut l = self.term()?;
        while self.eat("*") {
            let r = self.term()?;
            l = Term::Arith(ArithOp::Mul, Box::new(l), Box::new(r));
        }
        Ok(l)
    }

    fn term(&mut self) -> Result<Term, SyntaxError> {
        match self.bump() {
            Tok::Var(v) => Ok(Term::Var(v)),
            Tok::Int(n) => Ok(Term::Int(n)),
            Tok::Sym("-") => match self.bump() {
                Tok::Int(n) => Ok(Term::Int(-n)),
                _ => self.err("expected integer after `-`"),
            },
            Tok::Sym("(") => {
                let t = self.arith()?;
                self.expect(")")?;
                Ok(t)
            }
            Tok::Name(n) => {
                let mut args = Vec::new();
                if self.eat("(") {
                    if !self.eat(")") {
                        args.push(self.arith()?);
                        while self.eat(",") {
                            args.push(self.arith()?);
                        }
                        self.expect(")")?;
                    }
                }
                Ok(Term::Atom(n, args))
            }
            Tok::Sym("[") => {
                let mut elems = Vec::new();
                let mut tail = None;
                if !self.eat("]") {
                    elems.push(self.arith()?);
                    while self.eat(",") {
                        elems.push(self.arith()?);
                    }
                    if self.eat("|") {
                        tail = Some(Box::new(self.arith()?));
                    }
                    self.expect("]")?;
                }
                Ok(Term::List(elems, tail))
            }
            t => {
                self.pos -= 1;
                self.err(format!("unexpected {t:?}"))
            }
        }
    }

    /// A guard is present iff a comparison list is followed by `|`.
    fn try_guard(&mut self) -> Result<Guard, SyntaxError> {
        let save = self.pos;
        let mut conj = Vec::new();
        loop {
            match self.guard_cmp() {
                Ok(c) => conj.push(c),
                Err(_) => {
                    self.pos = save;
                    return Ok(Guard::default());
                }
            }
            if self.eat(",") {
                continue;
            }
            if self.eat("|") {
                return Ok(Guard { conjuncts: conj });
            }
            self.pos = save;
            return Ok(Guard::default());
        }
    }

    fn guard_cmp(&mut self) -> Result<GuardCmp, SyntaxError> {
        let lhs = self.iexpr()?;
        let op = match self.bump() {
            Tok::Sym("=:=") => CmpOp::Eq,
            Tok::Sym("=\\=") => CmpOp::Ne,
            Tok::Sym(">") => CmpOp::Gt,
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym(">=") => CmpOp::Ge,
            Tok::Sym("=<") => CmpOp::Le,
            _ => return self.err("expected comparison"),
        };
        let rhs = self.iexpr()?;
        Ok(GuardCmp { op, lhs, rhs })
    }

    fn iexpr(&mut self) -> Result<IntExpr, SyntaxError> {
        let t = self.arith()?;
        to_iexpr(&t).ok_or(()).or_else(|_| self.err("not an integer expression"))
    }
}

fn to_iexpr(t: &Term) -> Option<IntExpr> {
    match t {
        Term::Var(v) => Some(IntExpr::Var(v.clone())),
        Term::Int(n) => Some(IntExpr::Lit(*n)),
        Term::Arith(op, a, b) => Some(IntExpr::Bin(*op, Box::new(to_iexpr(a)?), Box::new(to_iexpr(b)?))),
        _ => None,
    }
}

/// Flattens terms into atom templates over variable names.
struct Flattener {
    fresh: usize,
}

impl Flattener {
    fn fresh(&mut self) -> String {
        self.fresh += 1;
        format!("~{}", self.fresh)
    }

    /// Atoms for `term`, whose value is carried by `result`.
    fn term(&mut self, t: &Term, result: Option<String>, out: &mut Vec<AtomT>) -> Result<(), String> {
        match t {
            Term::Var(v) => match result {
                Some(r) => out.push(AtomT::connector(&r, v)),
                None => return Err(format!("stray link {v}")),
            },
            Term::Int(n) => {
                let r = result.unwrap_or_else(|| self.fresh());
                out.push(AtomT::int(*n, &r));
            }
            Term::Atom(name, args) => {
                let mut vars = Vec::new();
                for a in args {
                    vars.push(self.arg(a, out)?);
                }
                vars.extend(result);
                out.push(AtomT { name: name.clone(), kind: AtomKind::Plain, args: vars });
            }
            Term::List(elems, tail) => {
                let mut cur = result.unwrap_or_else(|| self.fresh());
                for e in elems {
                    let h = self.arg(e, out)?;
                    let next = self.fresh();
                    out.push(AtomT::new("cons", &[&h, &next, &cur]));
                    cur = next;
                }
                match tail {
                    Some(t) => {
                        self.term(t, Some(cur), out)?;
                    }
                    None => out.push(AtomT::new("nil", &[&cur])),
                }
            }
            Term::Arith(op, a, b) => {
                let x = self.arg(a, out)?;
                let y = self.arg(b, out)?;
                let r = result.unwrap_or_else(|| self.fresh());
                out.push(AtomT::new(op.symbol(), &[&x, &y, &r]));
            }
        }
        Ok(())
    }

    fn arg(&mut self, t: &Term, out: &mut Vec<AtomT>) -> Result<String, String> {
        if let Term::Var(v) = t {
            return Ok(v.clone());
        }
        let v = self.fresh();
        self.term(t, Some(v.clone()), out)?;
        Ok(v)
    }

    fn eq(&mut self, l: &Term, r: &Term, out: &mut Vec<AtomT>) -> Result<(), String> {
        match (l, r) {
            (Term::Var(a), _) => self.term(r, Some(a.clone()), out),
            (_, Term::Var(b)) => self.term(l, Some(b.clone()), out),
            _ => {
                let v = self.fresh();
                self.term(l, Some(v.clone()), out)?;
                self.term(r, Some(v), out)
            }
        }
    }
}

fn elim_connectors(atoms: &mut Vec<AtomT>) {
    // connectors that touch a generated variable are resolved statically
    loop {
        let pos = atoms.iter().position(|a| {
            a.kind == AtomKind::Connector && (a.args[0].starts_with('~') || a.args[1].starts_with('~'))
        });
        let Some(i) = pos else { break };
        let c = atoms.remove(i);
        let (keep, drop) = if c.args[1].starts_with('~') { (&c.args[0], &c.args[1]) } else { (&c.args[1], &c.args[0]) };
        for a in atoms.iter_mut() {
            for arg in a.args.iter_mut() {
                if arg == drop {
                    *arg = keep.clone();
                }
            }
        }
    }
}

fn to_template(items: &[Ent], fl: &mut Flattener, at: (usize, usize)) -> Result<Template, SyntaxError> {
    let mk = |m: String| SyntaxError { line: at.0, col: at.1, message: m };
    let mut t = Template::default();
    for e in items {
        match e {
            Ent::Term(term) => fl.term(term, None, &mut t.atoms).map_err(mk)?,
            Ent::Eq(a, b) => fl.eq(a, b, &mut t.atoms).map_err(mk)?,
            Ent::Proc(p) => {
                t.procs.push(p.clone());
            }
            Ent::RuleCtx(r) => {
                if t.rule_ctx.replace(r.clone()).is_some() {
                    return Err(mk("at most one rule context per cell".into()));
                }
            }
            Ent::Port(p, v) => t.ports.push(Port { polarity: *p, var: v.clone() }),
            Ent::Cell(inner, stable) => {
                let ents: Vec<Ent> = inner
                    .iter()
                    .map(|i| match i {
                        Item::Ent(e) => Ok(e.clone()),
                        Item::Rule(_) => Err(mk("rules inside rule templates are not supported".into())),
                    })
                    .collect::<Result<_, _>>()?;
                let body = to_template(&ents, fl, at)?;
                t.cells.push(CellT { body, stable: *stable });
            }
        }
    }
    elim_connectors(&mut t.atoms);
    Ok(t)
}

fn to_rule(r: &RuleAst) -> Result<Rule, SyntaxError> {
    let mut fl = Flattener { fresh: 0 };
    let at = (r.line, r.col);
    let lhs = to_template(&r.lhs, &mut fl, at)?;
    let rhs = to_template(&r.rhs, &mut fl, at)?;
    Rule::new(r.name.clone(), lhs, r.guard.clone(), rhs)
        .map_err(|e: RuleError| SyntaxError { line: r.line, col: r.col, message: e.to_string() })
}

/// Parses a single rule, e.g. `L=[X,Y|L2] :- X > Y | L=[Y,X|L2].`
pub fn parse_rule(src: &str) -> Result<Rule, SyntaxError> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let mut dirs = Vec::new();
    let items = p.process(false, &mut dirs)?;
    match items.as_slice() {
        [Item::Rule(r)] => to_rule(r),
        _ => Err(SyntaxError { line: 1, col: 1, message: "expected exactly one rule".into() }),
    }
}

/// Parses a rule side or cell body as a template, e.g. `{@r, $p}, f(X)`.
pub fn parse_template(src: &str) -> Result<Template, SyntaxError> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let ents = p.ent_list()?;
    if !matches!(p.peek(), Tok::Eof) {
        return p.err("trailing input");
    }
    to_template(&ents, &mut Flattener { fresh: 0 }, (1, 1))
}

struct Builder<'a> {
    world: &'a mut World,
    links: HashMap<String, Link>,
    fl: Flattener,
}

impl Builder<'_> {
    fn link(&mut self, name: &str) -> Link {
        if let Some(l) = self.links.get(name) {
            return *l;
        }
        let l = self.world.fresh_link();
        if !name.starts_with('~') && !is_generated_name(name) {
            self.world.set_link_name(l, name);
        }
        self.links.insert(name.to_string(), l);
        l
    }

    fn build(&mut self, m: MemId, items: &[Item]) -> Result<(), SyntaxError> {
        for it in items {
            match it {
                Item::Rule(r) => {
                    let rule = to_rule(r)?;
                    self.world.add_rule(m, Arc::new(rule));
                }
                Item::Ent(Ent::Cell(inner, stable)) => {
                    if *stable {
                        return Err(err0("stable flag outside a rule"));
                    }
                    let c = self.world.new_membrane(Some(m)).map_err(graph_err)?;
                    self.build(c, inner)?;
                }
                Item::Ent(Ent::Proc(_) | Ent::RuleCtx(_)) => return Err(err0("context outside a rule")),
                Item::Ent(Ent::Port(p, v)) => {
                    let name = if *p == Polarity::Plus { "+" } else { "-" };
                    let l = self.link(v);
                    self.world.add_atom(m, name, &[l]).map_err(graph_err)?;
                }
                Item::Ent(e) => {
                    let mut atoms = Vec::new();
                    let r = match e {
                        Ent::Term(t) => self.fl.term(t, None, &mut atoms),
                        Ent::Eq(a, b) => self.fl.eq(a, b, &mut atoms),
                        _ => unreachable!(),
                    };
                    r.map_err(err0)?;
                    elim_connectors(&mut atoms);
                    for a in atoms {
                        let links: Vec<Link> = a.args.iter().map(|v| self.link(v)).collect();
                        self.world.add_atom_kind(m, &a.name, a.kind, &links).map_err(graph_err)?;
                    }
                }
            }
        }
        Ok(())
    }
}

fn err0(m: impl Into<String>) -> SyntaxError {
    SyntaxError { line: 1, col: 1, message: m.into() }
}

fn graph_err(e: GraphError) -> SyntaxError {
    err0(e.to_string())
}

/// Names the printer generates for anonymous links; not kept on reparse.
pub(crate) fn is_generated_name(n: &str) -> bool {
    n.strip_prefix("_L").map_or(false, |d| !d.is_empty() && d.chars().all(|c| c.is_ascii_digit()))
}

/// Parses a whole world. Link names are global to the text.
pub fn parse_world(src: &str) -> Result<World, SyntaxError> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let mut dirs = Vec::new();
    let items = p.process(false, &mut dirs)?;
    let mut world = World::new();
    for (d, fs) in dirs {
        match d.as_str() {
            "relaxed" => world.mode = LinkMode::Relaxed,
            "data" => world.data.extend(fs),
            "marker" => world.markers.extend(fs),
            other => return Err(err0(format!("unknown directive %{other}"))),
        }
    }
    let root = world.root();
    Builder { world: &mut world, links: HashMap::new(), fl: Flattener { fresh: 0 } }.build(root, &items)?;
    Ok(world)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_with_one_atom() {
        let w = parse_world("{addOne(2,D)}").unwrap();
        let root = w.mem(w.root());
        assert_eq!(root.children.len(), 1);
        let cell = w.mem(root.children[0]);
        // addOne plus the integer atom for 2
        let names: Vec<&str> = cell.atoms.iter().map(|a| w.atom(*a).name.as_str()).collect();
        assert_eq!(names, ["2", "addOne"]);
    }

    #[test]
    fn list_sugar_builds_cons_chain() {
        let w = parse_world("aList = [2,1,5,0,4,6,3]").unwrap();
        let ids = w.atom_ids();
        let count = |n: &str| ids.iter().filter(|a| w.atom(**a).name == n).count();
        assert_eq!(count("cons"), 7);
        assert_eq!(count("nil"), 1);
        assert_eq!(count("aList"), 1);
    }

    #[test]
    fn rule_with_guard() {
        let r = parse_rule("L=[X,Y|L2] :- X > Y | L=[Y,X|L2].").unwrap();
        assert_eq!(r.guard.conjuncts.len(), 1);
        assert_eq!(r.lhs.atoms.len(), 2);
        assert_eq!(r.rhs.atoms.len(), 2);
    }

    #[test]
    fn rule_without_guard_and_contexts() {
        let r = parse_rule("{@r,{$p},$s} :- {{@r,$p},$s}.").unwrap();
        assert_eq!(r.lhs.cells.len(), 1);
        assert_eq!(r.lhs.cells[0].body.rule_ctx.as_deref(), Some("r"));
        assert!(r.guard.is_empty());
    }

    #[test]
    fn syntax_error_has_position() {
        let e = parse_world("f(A,\n  B").unwrap_err();
        assert_eq!(e.line, 2);
    }

    #[test]
    fn rhs_only_context_rejected() {
        assert!(parse_rule("a :- {$p}.").is_err());
    }

    #[test]
    fn stable_flag_on_rhs_rejected() {
        assert!(parse_rule("{$p} :- {$p}/.").is_err());
    }

    #[test]
    fn strict_mode_rejects_third_occurrence() {
        assert!(parse_world("x(L), y(L), z(L)").is_err());
        assert!(parse_world("%relaxed. x(L), y(L), z(L)").is_ok());
    }
}
