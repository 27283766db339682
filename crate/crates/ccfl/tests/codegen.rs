use ccfl::flat::{prepare, Compiler, Options};
use ccfl::*;
use hgraph::{serialize_rule, shape, AtomKind};

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
def one = 1";

const MEMBER: &str = "fun member :: List a -> a -> C
def member l x =
   l =:= y:ys -> x =:= y |
   l =:= y:ys -> case ys of [] -> x =:= y ;
                            z:zs -> member ys x";

const EXAMPLE: &str = "add (addOne (6+1)) (addOne 8)";

fn rule_texts(src: &str, inline_app: bool) -> Vec<String> {
    let p = parse_ccfl(src).unwrap();
    let prepared = prepare(&p);
    Compiler::new(&prepared, Options { inline_app })
        .all_rules()
        .iter()
        .map(|r| r.to_string())
        .collect()
}

fn has(texts: &[String], want: &str) -> bool {
    texts.iter().any(|t| t == want)
}

#[test]
fn example_query_destructures_into_four_atoms() {
    let p = parse_ccfl(PROG).unwrap();
    let prepared = prepare(&p);
    let c = Compiler::new(&prepared, Options { inline_app: true });
    let atoms = c.flatten_query(&parse_query(EXAMPLE, &p).unwrap(), "Z");
    let ops: Vec<_> = atoms.iter().filter(|a| !matches!(a.kind, AtomKind::Int(_))).collect();
    let mut names: Vec<&str> = ops.iter().map(|a| a.name.as_str()).collect();
    names.sort();
    assert_eq!(names, ["+", "add", "addOne", "addOne"]);

    let add = ops.iter().find(|a| a.name == "add").unwrap();
    assert_eq!(add.args[2], "Z");
    let producer = |l: &str| ops.iter().find(|a| a.args.last().map(String::as_str) == Some(l)).unwrap();
    let x = producer(&add.args[0]);
    let y = producer(&add.args[1]);
    assert_eq!((x.name.as_str(), y.name.as_str()), ("addOne", "addOne"));
    assert_eq!(producer(&x.args[0]).name, "+");
    assert!(atoms.iter().any(|a| a.kind == AtomKind::Int(8) && a.args[0] == y.args[0]));
}

#[test]
fn literal_query_is_one_atom() {
    let p = parse_ccfl(PROG).unwrap();
    let prepared = prepare(&p);
    let c = Compiler::new(&prepared, Options::default());
    let atoms = c.flatten_query(&parse_query("7", &p).unwrap(), "R");
    assert_eq!(atoms.len(), 1);
    assert_eq!(atoms[0].kind, AtomKind::Int(7));
    assert_eq!(atoms[0].args, ["R"]);
}

#[test]
fn function_rules() {
    let texts = rule_texts(PROG, false);
    assert!(has(&texts, "add(X,Y,V0) :- V0 = X+Y."));
    assert!(has(&texts, "addOne(X1,V0) :- app(add,1,V1), app(V1,X1,V0)."));
    assert!(has(&texts, "fac(X,V0) :- X =:= 1 | V0 = 1."));
    assert!(has(&texts, "fac(X,V0) :- X =\\= 1 | V0 = X*V1, app(fac,V2,V1), V2 = X-1."));
    assert_eq!(texts.iter().filter(|t| t.starts_with("fac(")).count(), 2);
}

#[test]
fn application_rules() {
    let texts = rule_texts(PROG, false);
    assert!(has(&texts, "app(fac,V0,V1) :- fac(V0,V1)."));
    assert!(has(&texts, "app(add,V0,V1) :- add(V0,V1)."));
    assert!(has(&texts, "app(V1,V2,V3), add(V0,V1) :- add(V0,V2,V3)."));
    assert!(!texts.iter().any(|t| t.starts_with("app(one")));
}

#[test]
fn inlined_calls_skip_application_atoms() {
    let texts = rule_texts(PROG, true);
    assert!(has(&texts, "addOne(X1,V0) :- add(1,X1,V0)."));
    assert!(has(&texts, "fac(X,V0) :- X =\\= 1 | V0 = X*V1, fac(V2,V1), V2 = X-1."));
}

#[test]
fn case_rules_are_keyed_on_constructors() {
    let texts = rule_texts(PROG, false);
    assert!(has(&texts, "length(L,V0), nil(L) :- V0 = 0."));
    assert!(has(&texts, "length(L,V0), cons(X,XS,L) :- V0 = 1+V1, app(length,XS,V1)."));
}

#[test]
fn shared_ask_gives_rules_with_the_same_pattern() {
    let texts = rule_texts(MEMBER, false);
    let member: Vec<&String> = texts.iter().filter(|t| t.starts_with("member(L,X,V0)")).collect();
    assert_eq!(member.len(), 3);
    assert!(has(&texts, "member(L,X,V0), cons(Y,YS,L) :- eq_(X,Y,V0)."));
    assert!(member.iter().all(|t| t.contains("cons(Y,YS,L)")));
}

fn compiled(src: &str, query: &str, s: Strategy, inline_app: bool) -> Compiled {
    let p = parse_ccfl(src).unwrap();
    compile(&p, &parse_query(query, &p).unwrap(), s, Options { inline_app })
}

#[test]
fn cbv_query_layout() {
    let c = compiled(PROG, EXAMPLE, Strategy::Cbv, true);
    let w = &c.world;
    let cells = &w.mem(w.root()).children;
    assert_eq!(cells.len(), 4);
    assert_eq!(
        shape(w, w.root()),
        "@rules, {@rules, {_ = 6+1, inLinks_(0)}}, {@rules, {addOne(8,_), inLinks_(0)}}, \
         {{add(_,_,_), inLinks_(2)}}, {{addOne(_,_), inLinks_(1)}}"
    );
}

#[test]
fn cbv_rule_shapes() {
    let c = compiled(PROG, "1", Strategy::Cbv, true);
    let texts: Vec<String> = c.rules.iter().map(|r| serialize_rule(r)).collect();
    assert!(has(
        &texts,
        "{$p, fac(X,V0), inLinks_(_Tin1), _Tin1 = 0} :- X =\\= 1 | \
         {{$p, V0 = X*V1, inLinks_(_Tin2), _Tin2 = 1}}, {{fac(V2,V1), inLinks_(_Tin3), _Tin3 = 1}}, \
         {V2 = X-1, inLinks_(_Tin4), _Tin4 = 0}."
    ));
    assert!(has(
        &texts,
        "{$p, add(X,Y,V0), inLinks_(_Tin1), _Tin1 = 0} :- {$p, V0 = X+Y, inLinks_(_Tin2), _Tin2 = 0}."
    ));
}

#[test]
fn outermost_rule_shapes() {
    let c = compiled(PROG, "1", Strategy::Outermost, true);
    let texts: Vec<String> = c.rules.iter().map(|r| serialize_rule(r)).collect();
    assert!(has(
        &texts,
        "{$p, fac(X,V0), eval_} :- X =\\= 1 | {$p, V0 = X*V1, eval_}, {{fac(V2,V1)}}, {{V2 = X-1}}."
    ));
    assert!(has(&texts, "{$p, fac(X,V0), eval_} :- X =:= 1 | {$p, V0 = 1, eval_}."));
    assert!(has(&texts, "{$p, add(X,Y,V0), eval_} :- {$p, V0 = X+Y, eval_}."));
    assert!(has(&texts, "{$p, addOne(X1,V0), eval_} :- {$p, add(1,X1,V0), eval_}."));
    // lifted calls go back under protection after one step
    assert!(has(&texts, "{$p, addOne(X1,V0), lift_} :- {{$p, add(1,X1,V0)}}."));
}

#[test]
fn outermost_query_layout() {
    let c = compiled(PROG, EXAMPLE, Strategy::Outermost, true);
    let w = &c.world;
    assert!(!w.mem(w.root()).rules.is_empty());
    assert_eq!(
        shape(w, w.root()),
        "@rules, {add(_,_,_), answer_(_), eval_}, {{_ = 6+1}}, {{addOne(8,_)}}, {{addOne(_,_)}}"
    );
}

#[test]
fn literal_query_is_one_stable_cell() {
    let c = compiled(PROG, "7", Strategy::Cbv, false);
    let w = &c.world;
    assert_eq!(w.mem(w.root()).children.len(), 1);
    assert!(hgraph::is_stable(w, w.root()));
    assert_eq!(read_term(w, &c, c.result_link().unwrap()), Term::Int(7));
}

#[test]
fn strategy_names_round_trip() {
    for s in [Strategy::Cbv, Strategy::Outermost, Strategy::Nondet] {
        assert_eq!(s.to_string().parse::<Strategy>().unwrap(), s);
    }
    assert!("lazy".parse::<Strategy>().is_err());
    assert_eq!(Strategy::default(), Strategy::Cbv);
}
