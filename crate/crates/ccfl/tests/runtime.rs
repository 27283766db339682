use std::sync::Arc;

use ccfl::flat::Options;
use ccfl::runtime::{rule_a, rule_b, rule_c, rule_d};
use ccfl::strategy::{EVAL, LIFT};
use ccfl::*;
use ccfl::Strategy;
use hgraph::{apply_match, find_matches, parse_world, run, shape, Policy, Rule, RunStatus, World};
use proptest::prelude::{prop_assert_eq, prop_oneof, proptest, Just, ProptestConfig};
use proptest::strategy::Strategy as _;

const PROG: &str = "fun add :: Int -> Int -> Int
def add x y = x + y
fun addOne :: Int -> Int
def addOne = add 1
fun fac :: Int -> Int
def fac x = case x of 1 -> 1 ;
                      y -> x * fac (x-1)
data List a = Nil | Cons a (List a)
fun length :: List a -> Int
def length l = case l of Nil -> 0 ; Cons x xs -> 1 + length xs
def one = 1
def loop = loop
def const a b = a";

const ALL: [Strategy; 3] = [Strategy::Cbv, Strategy::Outermost, Strategy::Nondet];

struct Ran {
    world: World,
    compiled: Compiled,
    status: RunStatus,
}

fn eval(query: &str, s: Strategy, seed: u64, max_steps: usize) -> Ran {
    let p = parse_ccfl(PROG).unwrap();
    let c = compile(&p, &parse_query(query, &p).unwrap(), s, Options::default());
    let mut w = c.world.clone();
    let out = run(&mut w, &Policy { seed, max_steps }).unwrap();
    let status = settle_status(&w, &c, out.status);
    Ran { world: w, compiled: c, status }
}

fn value(query: &str, s: Strategy) -> Outcome {
    let r = eval(query, s, 0, 5000);
    read_result(&r.world, &r.compiled, r.status)
}

#[test]
fn nested_calls_give_17() {
    for s in ALL {
        assert_eq!(value("add (addOne (6+1)) (addOne 8)", s), Outcome::Value(Term::Int(17)), "{s}");
    }
}

#[test]
fn factorial_of_nested_calls() {
    for s in ALL {
        assert_eq!(value("fac (addOne (addOne 3))", s), Outcome::Value(Term::Int(120)), "{s}");
    }
}

#[test]
fn length_ignores_free_elements() {
    for s in ALL {
        assert_eq!(value("length (Cons x (Cons 1 (Cons y Nil)))", s), Outcome::Value(Term::Int(3)), "{s}");
    }
}

#[test]
fn free_operand_suspends() {
    for s in ALL {
        let r = eval("4 + x", s, 0, 1000);
        assert_eq!(r.status, RunStatus::Suspended, "{s}");
        assert_eq!(read_result(&r.world, &r.compiled, r.status), Outcome::Suspended);
    }
}

#[test]
fn zero_argument_function() {
    for s in ALL {
        assert_eq!(value("one + 1", s), Outcome::Value(Term::Int(2)), "{s}");
    }
}

#[test]
fn only_outermost_skips_unused_loop() {
    assert_eq!(value("const 1 loop", Strategy::Outermost), Outcome::Value(Term::Int(1)));
    let r = eval("const 1 loop", Strategy::Cbv, 0, 1000);
    assert_eq!(r.status, RunStatus::BudgetExhausted);
    assert_eq!(read_result(&r.world, &r.compiled, r.status), Outcome::Unbound);
}

#[test]
fn equality_binds_and_compares() {
    for s in ALL {
        let r = eval("x =:= 0", s, 0, 1000);
        assert_eq!(read_result(&r.world, &r.compiled, r.status), Outcome::Value(Term::con("Success", vec![])));
        assert_eq!(read_var(&r.world, &r.compiled, "x"), Some(Term::Int(0)));
        assert_eq!(value("3 =:= 3", s), Outcome::Value(Term::con("Success", vec![])));
        assert_eq!(value("3 =:= 4", s), Outcome::Fail);
    }
}

#[test]
fn data_results_read_back() {
    for s in ALL {
        let want = Term::list(vec![Term::Int(2), Term::Int(9)]);
        assert_eq!(value("Cons (addOne 1) (Cons (3*3) Nil)", s), Outcome::Value(want), "{s}");
    }
}

#[test]
fn term_display() {
    assert_eq!(Term::list(vec![Term::Int(1), Term::Int(-2)]).to_string(), "[1,-2]");
    let t = Term::con("Pair", vec![Term::Int(-1), Term::con("Just", vec![Term::Int(3)])]);
    assert_eq!(t.to_string(), "Pair (-1) (Just 3)");
    assert_eq!(Outcome::Suspended.to_string(), "suspended");
}

fn world(text: &str) -> World {
    parse_world(text).unwrap()
}

fn matches(w: &World, r: Rule) -> usize {
    find_matches(w, w.root(), &Arc::new(r)).len()
}

const MERGE: &str = "%relaxed.\n%marker inLinks_/1.\n\
    {keep :- keep. {W = 7, inLinks_(0)}}, {{addOne(W,X), inLinks_(";

#[test]
fn rule_a_needs_last_waiting_consumer() {
    let one = world(&format!("{MERGE}1)}}}}."));
    assert_eq!(matches(&one, rule_a()), 1);
    assert_eq!(matches(&one, rule_b()), 0);

    let mut w = one.clone();
    let m = find_matches(&w, w.root(), &Arc::new(rule_a())).remove(0);
    apply_match(&mut w, &m, 1).unwrap();
    assert_eq!(shape(&w, w.root()), "{@rules, {addOne(7,_), inLinks_(0)}}");
}

#[test]
fn rule_b_keeps_consumer_protected() {
    let two = world(&format!("{MERGE}2)}}}}."));
    assert_eq!(matches(&two, rule_a()), 0);
    assert_eq!(matches(&two, rule_b()), 1);

    let mut w = two.clone();
    let m = find_matches(&w, w.root(), &Arc::new(rule_b())).remove(0);
    apply_match(&mut w, &m, 1).unwrap();
    assert_eq!(shape(&w, w.root()), "{{addOne(7,_), inLinks_(1)}}");
}

#[test]
fn rule_a_waits_for_a_stable_producer() {
    let w = world(
        "%relaxed.\n%marker inLinks_/1.\n\
         {keep :- keep. {W = 3+4, inLinks_(0)}}, {{addOne(W,X), inLinks_(1)}}.",
    );
    assert_eq!(matches(&w, rule_a()), 0);
}

const OUTER: &str = "%relaxed.\n%marker eval_/0, lift_/0.\n";

#[test]
fn rule_c_lifts_a_protected_producer() {
    let w = world(&format!("{OUTER}{{eval_, fac(X,W)}}, {{{{addOne(Y,X)}}}}, {{{{addOne(3,Y)}}}}."));
    assert_eq!(matches(&w, rule_c(EVAL)), 1);
    let mut w = w;
    let m = find_matches(&w, w.root(), &Arc::new(rule_c(EVAL))).remove(0);
    apply_match(&mut w, &m, 1).unwrap();
    assert_eq!(shape(&w, w.root()), "{addOne(_,_), lift_}, {eval_, fac(_,_)}, {{addOne(3,_)}}");
    assert_eq!(matches(&w, rule_c(LIFT)), 1);

    let idle = world(&format!("{OUTER}{{eval_, fac(3,W)}}."));
    assert_eq!(matches(&idle, rule_c(EVAL)), 0);
}

#[test]
fn rule_d_merges_lifted_operands_of_arithmetic() {
    let arith = world(&format!("{OUTER}{{eval_, Z = X+Y}}, {{lift_, addOne(7,X)}}, {{lift_, addOne(8,Y)}}."));
    let mut w = arith.clone();
    let m = find_matches(&w, w.root(), &Arc::new(rule_d(EVAL, '+', "AB"))).remove(0);
    apply_match(&mut w, &m, 1).unwrap();
    assert_eq!(shape(&w, w.root()), "{_ = _+_, addOne(7,_), addOne(8,_), eval_}");

    let call = world(&format!("{OUTER}{{eval_, add(X,Y,Z)}}, {{lift_, addOne(7,X)}}, {{lift_, addOne(8,Y)}}."));
    for operands in ["AB", "A", "B"] {
        assert_eq!(matches(&call, rule_d(EVAL, '+', operands)), 0);
    }
}

#[derive(Clone, Debug)]
enum Arith {
    Lit(i64),
    Bin(char, Box<Arith>, Box<Arith>),
    AddOne(Box<Arith>),
    Add(Box<Arith>, Box<Arith>),
}

impl Arith {
    fn value(&self) -> i64 {
        match self {
            Arith::Lit(v) => *v,
            Arith::Bin('+', a, b) | Arith::Add(a, b) => a.value() + b.value(),
            Arith::Bin('-', a, b) => a.value() - b.value(),
            Arith::Bin(_, a, b) => a.value() * b.value(),
            Arith::AddOne(a) => a.value() + 1,
        }
    }

    fn text(&self) -> String {
        match self {
            Arith::Lit(v) => v.to_string(),
            Arith::Bin(op, a, b) => format!("({} {op} {})", a.text(), b.text()),
            Arith::AddOne(a) => format!("(addOne {})", a.text()),
            Arith::Add(a, b) => format!("(add {} {})", a.text(), b.text()),
        }
    }
}

fn arb_arith() -> impl proptest::strategy::Strategy<Value = Arith> {
    let leaf = (0i64..20).prop_map(Arith::Lit);
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (prop_oneof![Just('+'), Just('-'), Just('*')], inner.clone(), inner.clone())
                .prop_map(|(op, a, b)| Arith::Bin(op, Box::new(a), Box::new(b))),
            inner.clone().prop_map(|a| Arith::AddOne(Box::new(a))),
            (inner.clone(), inner).prop_map(|(a, b)| Arith::Add(Box::new(a), Box::new(b))),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn every_strategy_computes_arithmetic(e in arb_arith(), seed in 0u64..1000) {
        for s in ALL {
            let r = eval(&e.text(), s, seed, 5000);
            prop_assert_eq!(r.status, RunStatus::NormalForm);
            prop_assert_eq!(
                read_result(&r.world, &r.compiled, r.status),
                Outcome::Value(Term::Int(e.value()))
            );
        }
    }
}
