//! Parser for CCFL source text and query expressions.

use thiserror::Error;

use crate::ast::{
    AskPattern, BinOp, Branch, CcflProgram, ConDecl, DataDecl, Expr, FunDef, GuardedAlt, Pattern,
    TypeSig, CONS, NIL,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CcflError {
    #[error("{line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("unknown identifier {0}")]
    UnknownIdentifier(String),
}

const KEYWORDS: &[&str] = &["def", "fun", "data", "case", "of", "let", "in", "with"];

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Lower(String),
    Upper(String),
    Int(i64),
    Sym(&'static str),
    Eof,
}

const SYMS: &[&str] = &[
    "=:=", "..", "::", "->", "=", ";", "|", "&", "(", ")", "[", "]", ",", ":", "+", "-", "*",
];

fn lex(src: &str) -> Result<Vec<(Tok, usize, usize)>, CcflError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let err = |line, col, message: String| CcflError::Syntax { line, col, message };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') && chars.get(i + 2) != Some(&'>') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = (line, col);
        if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let text: String = chars[i..j].iter().collect();
            let v = text
                .parse()
                .map_err(|_| err(line, col, format!("integer {text} out of range")))?;
            out.push((Tok::Int(v), start.0, start.1));
            col += j - i;
            i = j;
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len()
                && (chars[j].is_alphanumeric() || chars[j] == '_' || chars[j] == '\'')
            {
                j += 1;
            }
            let text: String = chars[i..j].iter().collect();
            let tok = if c.is_uppercase() {
                Tok::Upper(text)
            } else {
                Tok::Lower(text)
            };
            out.push((tok, start.0, start.1));
            col += j - i;
            i = j;
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        match SYMS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                out.push((Tok::Sym(s), start.0, start.1));
                i += s.len();
                col += s.len();
            }
            None => return Err(err(line, col, format!("unexpected character '{c}'"))),
        }
    }
    out.push((Tok::Eof, line, col));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

type PResult<T> = Result<T, CcflError>;

impl Parser {
    fn new(src: &str) -> PResult<Self> {
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        let (_, line, col) = self.toks[self.pos];
        Err(CcflError::Syntax {
            line,
            col,
            message: message.into(),
        })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Lower(t) if t == k)
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> PResult<()> {
        if self.eat(s) {
            Ok(())
        } else {
            self.error(format!("expected '{s}'"))
        }
    }

    fn expect_kw(&mut self, k: &str) -> PResult<()> {
        if self.is_kw(k) {
            self.next();
            Ok(())
        } else {
            self.error(format!("expected '{k}'"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Lower(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.next();
                Ok(s)
            }
            _ => self.error("expected identifier"),
        }
    }

    fn upper(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Upper(s) => {
                self.next();
                Ok(s)
            }
            _ => self.error("expected constructor name"),
        }
    }

    fn at_decl_start(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
            || self.is_kw("def")
            || self.is_kw("fun")
            || self.is_kw("data")
    }

    fn program(&mut self) -> PResult<CcflProgram> {
        let mut p = CcflProgram::default();
        while !matches!(self.peek(), Tok::Eof) {
            if self.is_kw("data") {
                p.data_decls.push(self.data_decl()?);
            } else if self.is_kw("fun") {
                p.type_sigs.push(self.type_sig()?);
            } else if self.is_kw("def") {
                p.fun_defs.push(self.fun_def()?);
            } else {
                return self.error("expected 'def', 'fun' or 'data'");
            }
        }
        for d in &mut p.fun_defs {
            if p.type_sigs
                .iter()
                .any(|s| s.name == d.name && s.is_constraint())
            {
                d.is_constraint = true;
            }
        }
        Ok(p)
    }

    fn data_decl(&mut self) -> PResult<DataDecl> {
        self.expect_kw("data")?;
        let name = self.upper()?;
        let mut params = Vec::new();
        while let Tok::Lower(_) = self.peek() {
            params.push(self.ident()?);
        }
        self.expect("=")?;
        let mut constructors = Vec::new();
        loop {
            let cname = self.upper()?;
            let mut arity = 0;
            loop {
                match self.peek() {
                    Tok::Upper(_) => {
                        self.next();
                    }
                    Tok::Lower(s) if !KEYWORDS.contains(&s.as_str()) => {
                        self.next();
                    }
                    Tok::Sym("(") => self.skip_parens()?,
                    _ => break,
                }
                arity += 1;
            }
            constructors.push(ConDecl { name: cname, arity });
            if !self.eat("|") {
                break;
            }
        }
        Ok(DataDecl {
            name,
            params,
            constructors,
        })
    }

    fn skip_parens(&mut self) -> PResult<()> {
        self.expect("(")?;
        let mut depth = 1;
        while depth > 0 {
            match self.next() {
                Tok::Sym("(") => depth += 1,
                Tok::Sym(")") => depth -= 1,
                Tok::Eof => return self.error("unbalanced parentheses"),
                _ => {}
            }
        }
        Ok(())
    }

    fn type_sig(&mut self) -> PResult<TypeSig> {
        self.expect_kw("fun")?;
        let name = self.ident()?;
        self.expect("::")?;
        let mut parts = Vec::new();
        while !self.at_decl_start() {
            parts.push(match self.next() {
                Tok::Lower(s) | Tok::Upper(s) => s,
                Tok::Int(v) => v.to_string(),
                Tok::Sym(s) => s.to_string(),
                Tok::Eof => unreachable!(),
            });
        }
        Ok(TypeSig {
            name,
            text: parts.join(" "),
        })
    }

    fn fun_def(&mut self) -> PResult<FunDef> {
        self.expect_kw("def")?;
        let name = self.ident()?;
        let mut params = Vec::new();
        while !self.is_sym("=") {
            params.push(self.ident()?);
        }
        self.expect("=")?;
        if self.at_ask() {
            let mut alts = Vec::new();
            loop {
                let ask = self.ask()?;
                let body = self.expr()?;
                alts.push(GuardedAlt { ask, body });
                if !self.eat("|") {
                    break;
                }
            }
            let body = alts[0].body.clone();
            return Ok(FunDef {
                name,
                params,
                body,
                is_constraint: true,
                guarded_alts: Some(alts),
            });
        }
        let body = self.expr()?;
        let is_constraint = is_constraint_expr(&body);
        Ok(FunDef {
            name,
            params,
            body,
            is_constraint,
            guarded_alts: None,
        })
    }

    fn at_ask(&self) -> bool {
        matches!(self.peek(), Tok::Lower(s) if !KEYWORDS.contains(&s.as_str()))
            && matches!(self.peek_at(1), Tok::Sym("=:="))
            && {
                let mut k = 2;
                loop {
                    match self.peek_at(k) {
                        Tok::Sym("->") => break true,
                        Tok::Sym("&") | Tok::Sym("|") | Tok::Sym(";") | Tok::Eof => break false,
                        Tok::Lower(s) if KEYWORDS.contains(&s.as_str()) => break false,
                        _ => k += 1,
                    }
                }
            }
    }

    fn ask(&mut self) -> PResult<AskPattern> {
        let var = self.ident()?;
        self.expect("=:=")?;
        let pattern = self.pattern()?;
        self.expect("->")?;
        Ok(AskPattern { var, pattern })
    }

    fn pattern(&mut self) -> PResult<Pattern> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.next();
                Ok(Pattern::Int(v))
            }
            Tok::Sym("-") if matches!(self.peek_at(1), Tok::Int(_)) => {
                self.next();
                match self.next() {
                    Tok::Int(v) => Ok(Pattern::Int(-v)),
                    _ => unreachable!(),
                }
            }
            Tok::Sym("[") => {
                self.next();
                self.expect("]")?;
                Ok(Pattern::Con(NIL.into(), Vec::new()))
            }
            Tok::Sym("(") => {
                self.next();
                let p = self.pattern()?;
                self.expect(")")?;
                Ok(p)
            }
            Tok::Upper(c) => {
                self.next();
                let mut vars = Vec::new();
                while let Tok::Lower(s) = self.peek() {
                    if KEYWORDS.contains(&s.as_str()) {
                        break;
                    }
                    vars.push(self.ident()?);
                }
                Ok(Pattern::Con(c, vars))
            }
            Tok::Lower(_) => {
                let v = self.ident()?;
                if self.eat(":") {
                    let t = self.ident()?;
                    Ok(Pattern::Con(CONS.into(), vec![v, t]))
                } else {
                    Ok(Pattern::Var(v))
                }
            }
            _ => self.error("expected pattern"),
        }
    }

    /// Lowest level: conjunction.
    fn expr(&mut self) -> PResult<Expr> {
        let first = self.equality()?;
        if !self.is_sym("&") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat("&") {
            items.push(self.equality()?);
        }
        Ok(Expr::Conj(items))
    }

    fn equality(&mut self) -> PResult<Expr> {
        let l = self.cons_expr()?;
        if self.eat("=:=") {
            let r = self.cons_expr()?;
            return Ok(Expr::Equality(Box::new(l), Box::new(r)));
        }
        Ok(l)
    }

    fn cons_expr(&mut self) -> PResult<Expr> {
        let l = self.additive()?;
        if self.eat(":") {
            let r = self.cons_expr()?;
            return Ok(Expr::Con(CONS.into(), vec![l, r]));
        }
        Ok(l)
    }

    fn additive(&mut self) -> PResult<Expr> {
        let mut l = self.multiplicative()?;
        loop {
            let op = if self.eat("+") {
                BinOp::Add
            } else if self.eat("-") {
                BinOp::Sub
            } else {
                return Ok(l);
            };
            let r = self.multiplicative()?;
            l = Expr::infix(op, l, r);
        }
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        let mut l = self.application()?;
        while self.eat("*") {
            let r = self.application()?;
            l = Expr::infix(BinOp::Mul, l, r);
        }
        Ok(l)
    }

    fn starts_atomic(&self) -> bool {
        match self.peek() {
            Tok::Int(_) | Tok::Upper(_) => true,
            Tok::Lower(s) => !KEYWORDS.contains(&s.as_str()),
            Tok::Sym(s) => *s == "(" || *s == "[",
            Tok::Eof => false,
        }
    }

    fn application(&mut self) -> PResult<Expr> {
        if self.is_kw("case") || self.is_kw("let") || self.is_kw("with") {
            return self.block();
        }
        let head = self.atomic()?;
        let mut args = Vec::new();
        while self.starts_atomic() {
            args.push(self.atomic()?);
        }
        if self.is_kw("case") || self.is_kw("let") || self.is_kw("with") {
            args.push(self.block()?);
        }
        Ok(match head {
            Expr::Con(c, mut a) if a.is_empty() || args.is_empty() => {
                a.extend(args);
                Expr::Con(c, a)
            }
            h => Expr::app(h, args),
        })
    }

    fn block(&mut self) -> PResult<Expr> {
        if self.is_kw("case") {
            self.next();
            let scrut = self.expr()?;
            self.expect_kw("of")?;
            let mut branches = Vec::new();
            loop {
                let pattern = self.pattern()?;
                self.expect("->")?;
                let body = self.expr()?;
                branches.push(Branch { pattern, body });
                if !self.eat(";") {
                    break;
                }
            }
            return Ok(Expr::Case(Box::new(scrut), branches));
        }
        if self.is_kw("let") {
            self.next();
            let mut binds = Vec::new();
            loop {
                let v = self.ident()?;
                self.expect("=")?;
                let e = self.expr()?;
                binds.push((v, e));
                if !self.eat(";") {
                    break;
                }
            }
            self.expect_kw("in")?;
            let body = self.expr()?;
            return Ok(Expr::Let(binds, Box::new(body)));
        }
        self.expect_kw("with")?;
        let mut vars = vec![self.ident()?];
        while self.eat(",") {
            vars.push(self.ident()?);
        }
        if self.eat("::") {
            while !self.is_kw("in") {
                if matches!(self.peek(), Tok::Eof) {
                    return self.error("expected 'in'");
                }
                self.next();
            }
        }
        self.expect_kw("in")?;
        let body = self.expr()?;
        Ok(Expr::With(vars, Box::new(body)))
    }

    fn atomic(&mut self) -> PResult<Expr> {
        match self.next() {
            Tok::Int(v) => Ok(Expr::Int(v)),
            Tok::Upper(c) => Ok(Expr::Con(c, Vec::new())),
            Tok::Lower(s) if !KEYWORDS.contains(&s.as_str()) => Ok(Expr::Var(s)),
            Tok::Sym("(") => {
                if self.is_sym("-")
                    && matches!(self.peek_at(1), Tok::Int(_))
                    && matches!(self.peek_at(2), Tok::Sym(")"))
                {
                    self.next();
                    let v = match self.next() {
                        Tok::Int(v) => v,
                        _ => unreachable!(),
                    };
                    self.next();
                    return Ok(Expr::Int(-v));
                }
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Sym("[") => self.list(),
            _ => {
                self.pos -= 1;
                self.error("expected expression")
            }
        }
    }

    fn list(&mut self) -> PResult<Expr> {
        if self.eat("]") {
            return Ok(Expr::Con(NIL.into(), Vec::new()));
        }
        let first = self.expr()?;
        if self.eat("..") {
            let last = self.expr()?;
            self.expect("]")?;
            return match (&first, &last) {
                (Expr::Int(a), Expr::Int(b)) => Ok(list_of((*a..=*b).map(Expr::Int).collect())),
                _ => self.error("range bounds must be integer literals"),
            };
        }
        let mut items = vec![first];
        while self.eat(",") {
            items.push(self.expr()?);
        }
        self.expect("]")?;
        Ok(list_of(items))
    }
}

pub fn list_of(items: Vec<Expr>) -> Expr {
    items
        .into_iter()
        .rev()
        .fold(Expr::Con(NIL.into(), Vec::new()), |acc, e| {
            Expr::Con(CONS.into(), vec![e, acc])
        })
}

fn is_constraint_expr(e: &Expr) -> bool {
    match e {
        Expr::Equality(..) | Expr::Conj(_) | Expr::With(..) => true,
        Expr::Case(_, bs) => bs.iter().any(|b| is_constraint_expr(&b.body)),
        Expr::Let(_, b) => is_constraint_expr(b),
        _ => false,
    }
}

pub fn parse_ccfl(text: &str) -> Result<CcflProgram, CcflError> {
    Parser::new(text)?.program()
}

/// Parses a standalone expression.
pub fn parse_expr(text: &str) -> Result<Expr, CcflError> {
    let mut p = Parser::new(text)?;
    let e = p.expr()?;
    if !matches!(p.peek(), Tok::Eof) {
        return p.error("unexpected input after expression");
    }
    Ok(e)
}

/// Parses a query against `p`. Lower-case names that are not functions of
/// `p` are free variables; constructors must be declared.
pub fn parse_query(text: &str, p: &CcflProgram) -> Result<Expr, CcflError> {
    let e = parse_expr(text)?;
    check_constructors(&e, p)?;
    Ok(e)
}

fn check_constructors(e: &Expr, p: &CcflProgram) -> Result<(), CcflError> {
    let mut err = None;
    visit(e, &mut |x| {
        if let Expr::Con(c, _) = x {
            if p.con_arity(c).is_none() && err.is_none() {
                err = Some(CcflError::UnknownIdentifier(c.clone()));
            }
        }
    });
    err.map_or(Ok(()), Err)
}

/// Pre-order walk over every sub-expression.
pub fn visit(e: &Expr, f: &mut dyn FnMut(&Expr)) {
    f(e);
    match e {
        Expr::Var(_) | Expr::Int(_) => {}
        Expr::Con(_, a) | Expr::Conj(a) => a.iter().for_each(|x| visit(x, f)),
        Expr::App(h, a) => {
            visit(h, f);
            a.iter().for_each(|x| visit(x, f));
        }
        Expr::Infix(_, l, r) | Expr::Equality(l, r) => {
            visit(l, f);
            visit(r, f);
        }
        Expr::Case(s, bs) => {
            visit(s, f);
            bs.iter().for_each(|b| visit(&b.body, f));
        }
        Expr::Let(bs, body) => {
            bs.iter().for_each(|(_, x)| visit(x, f));
            visit(body, f);
        }
        Expr::With(_, b) => visit(b, f),
    }
}

pub fn visit_any(e: &Expr, pred: &dyn Fn(&Expr) -> bool) -> bool {
    let mut found = false;
    visit(e, &mut |x| found |= pred(x));
    found
}

/// Free variables of a query that are not functions of `p`.
pub fn query_vars(e: &Expr, p: &CcflProgram) -> Vec<String> {
    let arities = p.arities();
    e.free_vars(&Default::default())
        .into_iter()
        .filter(|v| !arities.contains_key(v))
        .collect()
}
