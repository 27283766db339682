use ccfl::{parse_ccfl, parse_query, Term};
use ccfl_cli::{reference_eval, Mode, RefError, RefOutcome};

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
def loop = loop
def const a b = a
fun twice :: (Int -> Int) -> Int -> Int
def twice f x = f (f x)
fun member :: List a -> a -> C
def member l x =
   l =:= y:ys -> x =:= y |
   l =:= y:ys -> case ys of [] -> x =:= y ;
                            z:zs -> member ys x";

fn eval(query: &str, mode: Mode, budget: usize) -> Result<ccfl_cli::RefRun, RefError> {
    let p = parse_ccfl(PROG).unwrap();
    reference_eval(&p, &parse_query(query, &p).unwrap(), mode, budget)
}

fn value(query: &str, mode: Mode) -> RefOutcome {
    eval(query, mode, 1000).unwrap().outcome
}

#[test]
fn nested_calls_take_nine_steps_by_value() {
    let r = eval("add (addOne (6+1)) (addOne 8)", Mode::Cbv, 100).unwrap();
    assert_eq!(r.outcome, RefOutcome::Value(Term::Int(17)));
    assert_eq!(r.steps, 9);
    assert_eq!(value("add (addOne (6+1)) (addOne 8)", Mode::Cbn), RefOutcome::Value(Term::Int(17)));
}

#[test]
fn const_loop_separates_strategies() {
    assert_eq!(value("const 1 loop", Mode::Cbn), RefOutcome::Value(Term::Int(1)));
    assert_eq!(eval("const 1 loop", Mode::Cbv, 50).unwrap().outcome, RefOutcome::Diverged(50));
}

#[test]
fn literal_is_its_own_value() {
    for mode in [Mode::Cbv, Mode::Cbn] {
        let r = eval("42", mode, 10).unwrap();
        assert_eq!(r.outcome, RefOutcome::Value(Term::Int(42)));
        assert_eq!(r.steps, 0);
    }
}

#[test]
fn factorial_and_higher_order() {
    for mode in [Mode::Cbv, Mode::Cbn] {
        assert_eq!(value("fac (addOne (addOne 3))", mode), RefOutcome::Value(Term::Int(120)));
        assert_eq!(value("twice addOne 5", mode), RefOutcome::Value(Term::Int(7)));
        assert_eq!(value("twice (add 10) (fac 3)", mode), RefOutcome::Value(Term::Int(26)));
    }
}

#[test]
fn residuation() {
    for mode in [Mode::Cbv, Mode::Cbn] {
        assert_eq!(value("length (Cons x (Cons 1 (Cons y Nil)))", mode), RefOutcome::Value(Term::Int(3)));
        assert_eq!(value("4 + x", mode), RefOutcome::Suspended);
    }
}

#[test]
fn equality_binds_free_variables() {
    let r = eval("x =:= 3 + 4", Mode::Cbv, 100).unwrap();
    assert_eq!(r.outcome, RefOutcome::Value(Term::con("Success", vec![])));
    assert_eq!(r.bindings.get("x"), Some(&Term::Int(7)));
    assert_eq!(value("3 =:= 4", Mode::Cbn), RefOutcome::Value(Term::con("Fail", vec![])));
}

#[test]
fn data_results() {
    let want = RefOutcome::Value(Term::list(vec![Term::Int(2), Term::Int(9)]));
    for mode in [Mode::Cbv, Mode::Cbn] {
        assert_eq!(value("Cons (addOne 1) (Cons (3*3) Nil)", mode), want);
    }
}

#[test]
fn guarded_choice_is_rejected() {
    assert!(matches!(eval("member (Cons 1 Nil) x", Mode::Cbv, 100), Err(RefError::Nondeterministic(_))));
}

mod agreement {
    use ccfl::{parse_ccfl, parse_query, Outcome, Strategy, Term};
    use ccfl_cli::{cmd_run, reference_eval, Mode, RefOutcome, RunOptions};
    use proptest::prelude::{prop_assert_eq, prop_oneof, proptest, Just, ProptestConfig};
    use proptest::strategy::Strategy as _;

    const FUNS: &str = "fun add :: Int -> Int -> Int
def add x y = x + y
fun twice :: (Int -> Int) -> Int -> Int
def twice f x = f (f x)
fun pick :: Int -> Int -> Int
def pick n d = case n of 0 -> d ; m -> m
def const a b = a";

    fn arb_expr() -> impl proptest::strategy::Strategy<Value = String> {
        // the free variable only appears under arithmetic, where it suspends
        let leaf = prop_oneof![
            (0i64..6).prop_map(|n| n.to_string()),
            (0i64..6).prop_map(|n| format!("(x + {n})")),
        ];
        leaf.prop_recursive(3, 10, 2, |inner| {
            prop_oneof![
                (prop_oneof![Just('+'), Just('-'), Just('*')], inner.clone(), inner.clone())
                    .prop_map(|(op, a, b)| format!("({a} {op} {b})")),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("(add {a} {b})")),
                inner.clone().prop_map(|a| format!("(twice (add 1) {a})")),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("(pick {a} {b})")),
                (inner.clone(), inner).prop_map(|(a, b)| format!("(const {a} {b})")),
            ]
        })
    }

    fn as_ref(o: Outcome) -> RefOutcome {
        match o {
            Outcome::Value(t) => RefOutcome::Value(t),
            Outcome::Suspended => RefOutcome::Suspended,
            other => panic!("unexpected {other}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn engine_agrees_with_reference(e in arb_expr()) {
            let p = parse_ccfl(FUNS).unwrap();
            let q = parse_query(&e, &p).unwrap();
            for (s, mode) in [(Strategy::Cbv, Mode::Cbv), (Strategy::Outermost, Mode::Cbn)] {
                let want = reference_eval(&p, &q, mode, 10_000).unwrap().outcome;
                let got = cmd_run(FUNS, &e, &RunOptions::new(s)).unwrap();
                prop_assert_eq!(as_ref(got.result.unwrap()), want.clone(), "{} {}", s, e);
                if !matches!(want, RefOutcome::Suspended) {
                    prop_assert_eq!(got.status, hgraph::RunStatus::NormalForm);
                }
            }
        }

        #[test]
        fn strategies_agree_on_closed_terms(e in arb_expr()) {
            let closed = e.replace('x', "2");
            let p = parse_ccfl(FUNS).unwrap();
            let q = parse_query(&closed, &p).unwrap();
            let cbv = reference_eval(&p, &q, Mode::Cbv, 10_000).unwrap().outcome;
            let cbn = reference_eval(&p, &q, Mode::Cbn, 10_000).unwrap().outcome;
            prop_assert_eq!(&cbv, &cbn);
            prop_assert_eq!(matches!(cbv, RefOutcome::Value(Term::Int(_))), true);
        }
    }
}
