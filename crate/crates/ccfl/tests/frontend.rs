use std::collections::HashMap;

use ccfl::ast::{CONS, NIL};
use ccfl::*;
use proptest::prelude::*;
use proptest::strategy::Strategy as _;

const ARITH: &str = "
def add x y = x + y
def addOne = add 1
def fac x = case x of 1 -> x ;
                      n -> n * fac (n-1)
";

const DICE: &str = "
fun game :: Int -> Int -> Int -> C
def game x y n =
  case n of 0 -> x =:= 0 & y =:= 0 ;
            m -> with x1, y1, x2, y2 :: Int
                 in dice x1 & dice y1 &
                    x =:= x1 + x2 & y =:= y1 + y2 &
                    game x2 y2 (m-1)
fun dice :: Int -> C
def dice x =
  member [1,2,3,4,5,6] x
fun member :: List a -> a -> C
def member l x  =
   l =:= y:ys -> x =:= y |
   l =:= y:ys -> case ys of []   -> x =:= y ;
                            z:zs -> member ys x
";

const LENGTH: &str = "
data List a = Nil | Cons a (List a)
def length l =
  case l of Nil       -> 0 ;
            Cons x xs -> 1 + length xs
";

#[test]
fn arithmetic_program_shape() {
    let p = parse_ccfl(ARITH).unwrap();
    let names: Vec<&str> = p.fun_defs.iter().map(|d| d.name.as_str()).collect();
    assert_eq!(names, ["add", "addOne", "fac"]);
    let fac = p.fun("fac").unwrap();
    let Expr::Case(scrut, branches) = &fac.body else {
        panic!("fac body is not a case")
    };
    assert_eq!(**scrut, Expr::var("x"));
    assert_eq!(branches[0].pattern, Pattern::Int(1));
    assert_eq!(branches[0].body, Expr::var("x"));
    assert_eq!(branches[1].pattern, Pattern::Var("n".into()));
    let rec = Expr::app(
        Expr::var("fac"),
        vec![Expr::infix(BinOp::Sub, Expr::var("n"), Expr::Int(1))],
    );
    assert_eq!(
        branches[1].body,
        Expr::infix(BinOp::Mul, Expr::var("n"), rec)
    );
    assert!(check_ccfl(&p).is_empty());
}

#[test]
fn member_has_two_alternatives_with_the_same_ask() {
    let p = parse_ccfl(DICE).unwrap();
    assert_eq!(p.type_sigs.len(), 3);
    let m = p.fun("member").unwrap();
    assert!(m.is_constraint);
    let alts = m.guarded_alts.as_ref().unwrap();
    assert_eq!(alts.len(), 2);
    assert_eq!(alts[0].ask, alts[1].ask);
    assert_eq!(
        alts[0].ask.pattern,
        Pattern::Con(CONS.into(), vec!["y".into(), "ys".into()])
    );
    let Expr::Case(_, bs) = &alts[1].body else {
        panic!()
    };
    assert_eq!(bs[0].pattern, Pattern::Con(NIL.into(), vec![]));
    assert!(p.fun("game").unwrap().is_constraint);
    assert!(check_ccfl(&p).is_empty(), "{:?}", check_ccfl(&p));
}

#[test]
fn empty_program() {
    let p = parse_ccfl("").unwrap();
    assert!(p.fun_defs.is_empty() && p.data_decls.is_empty());
    assert!(parse_ccfl("-- only a comment\n")
        .unwrap()
        .fun_defs
        .is_empty());
}

#[test]
fn data_declarations() {
    let p = parse_ccfl("data Tree a = Leaf | Node (Tree a) a (Tree a)\ndef size t = case t of Leaf -> 0 ; Node l v r -> 1").unwrap();
    assert_eq!(p.con_arity("Node"), Some(3));
    assert_eq!(p.con_arity("Leaf"), Some(0));
    assert_eq!(p.con_arity("Cons"), Some(2));
}

fn depth(e: &Expr) -> usize {
    match e {
        Expr::App(h, a) => 1 + a.iter().map(depth).chain([depth(h)]).max().unwrap(),
        Expr::Infix(_, l, r) => 1 + depth(l).max(depth(r)),
        _ => 0,
    }
}

#[test]
fn queries() {
    let p = parse_ccfl(ARITH).unwrap();
    let q = parse_query("add (addOne (6+1)) (addOne 8)", &p).unwrap();
    assert_eq!(depth(&q), 3);
    assert!(query_vars(&q, &p).is_empty());

    let lp = parse_ccfl(LENGTH).unwrap();
    let l = parse_query("length (Cons x (Cons 1 (Cons y Nil)))", &lp).unwrap();
    assert_eq!(query_vars(&l, &lp), ["x", "y"]);

    let s = parse_query("4 + x", &p).unwrap();
    assert_eq!(s, Expr::infix(BinOp::Add, Expr::Int(4), Expr::var("x")));
    assert_eq!(query_vars(&s, &p), ["x"]);

    assert!(matches!(
        parse_query("Foo 1", &p),
        Err(CcflError::UnknownIdentifier(_))
    ));
    assert!(matches!(
        parse_query("add (1", &p),
        Err(CcflError::Syntax { .. })
    ));
}

#[test]
fn list_sugar() {
    let e = parse_expr("[1..3]").unwrap();
    assert_eq!(e, parse_expr("1 : 2 : 3 : []").unwrap());
    assert_eq!(e, parse_expr("Cons 1 (Cons 2 (Cons 3 Nil))").unwrap());
    assert_eq!(parse_expr("[1,2]").unwrap(), parse_expr("[1..2]").unwrap());
}

#[test]
fn diagnostics() {
    let partial = parse_ccfl("def add x y = x + y\ndef addOne = add 1").unwrap();
    assert!(check_ccfl(&partial).is_empty());

    let cons = parse_ccfl("def f x = Cons x Nil x").unwrap();
    assert!(matches!(
        check_ccfl(&cons)[..],
        [Diagnostic::Arity {
            expected: 2,
            found: 3,
            ..
        }]
    ));

    let unbound = parse_ccfl("def f x = x + z").unwrap();
    assert_eq!(
        check_ccfl(&unbound),
        [Diagnostic::UnboundVariable {
            def: "f".into(),
            var: "z".into()
        }]
    );

    let dup = parse_ccfl("def f x = x\ndef f y = y").unwrap();
    assert_eq!(check_ccfl(&dup), [Diagnostic::Duplicate("f".into())]);
}

#[test]
fn eta_enrichment() {
    let p = parse_ccfl(ARITH).unwrap();
    let ar = effective_arities(&p);
    assert_eq!(ar["addOne"], 1);

    let add_one = eta_enrich(p.fun("addOne").unwrap(), &ar);
    assert_eq!(add_one.params, ["x1"]);
    assert_eq!(
        add_one.body,
        Expr::app(Expr::var("add"), vec![Expr::Int(1), Expr::var("x1")])
    );

    let add = p.fun("add").unwrap();
    assert_eq!(&eta_enrich(add, &ar), add);

    let g = parse_ccfl("def g a b = a - b\ndef f = g").unwrap();
    let ar: HashMap<String, usize> = effective_arities(&g);
    let f = eta_enrich(g.fun("f").unwrap(), &ar);
    assert_eq!(f.params.len(), 2);
    assert_eq!(
        f.body,
        Expr::app(Expr::var("g"), vec![Expr::var("x1"), Expr::var("x2")])
    );
}

#[test]
fn program_roundtrip() {
    for src in [ARITH, DICE] {
        let p = parse_ccfl(src).unwrap();
        let again = parse_ccfl(&p.to_string()).unwrap();
        assert_eq!(p.fun_defs, again.fun_defs);
    }
}

fn arb_expr() -> impl proptest::strategy::Strategy<Value = Expr> {
    let var = prop::sample::select(vec!["x", "y", "f", "zs"]).prop_map(Expr::var);
    let leaf = prop_oneof![
        var,
        (-5i64..50).prop_map(Expr::Int),
        Just(Expr::Con(NIL.into(), vec![]))
    ];
    leaf.prop_recursive(4, 40, 3, |inner| {
        let op = prop::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Mul]);
        prop_oneof![
            (op, inner.clone(), inner.clone()).prop_map(|(o, l, r)| Expr::infix(o, l, r)),
            (
                prop::sample::select(vec!["f", "g"]),
                prop::collection::vec(inner.clone(), 1..3)
            )
                .prop_map(|(h, a)| Expr::app(Expr::var(h), a)),
            (inner.clone(), inner.clone()).prop_map(|(h, t)| Expr::Con(CONS.into(), vec![h, t])),
            (inner.clone(), inner.clone(), inner.clone()).prop_map(|(s, a, b)| Expr::Case(
                Box::new(s),
                vec![
                    Branch {
                        pattern: Pattern::Int(0),
                        body: a
                    },
                    Branch {
                        pattern: Pattern::Con(CONS.into(), vec!["h".into(), "t".into()]),
                        body: b.clone()
                    },
                    Branch {
                        pattern: Pattern::Var("w".into()),
                        body: b
                    },
                ]
            )),
            (inner.clone(), inner.clone())
                .prop_map(|(e, b)| Expr::Let(vec![("v".into(), e)], Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(l, r)| Expr::Equality(Box::new(l), Box::new(r))),
            prop::collection::vec(inner, 2..4).prop_map(Expr::Conj),
        ]
    })
}

proptest! {
    #[test]
    fn print_parse_roundtrip(e in arb_expr()) {
        let text = e.to_string();
        prop_assert_eq!(parse_expr(&text).unwrap(), e, "{}", text);
    }
}
