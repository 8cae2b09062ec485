use std::sync::Arc;

use num_bigint::BigUint;
use proptest::prelude::*;

use vdconf_core::artifact::{read_artifact, write_artifact};
use vdconf_core::bdd::BinOp;
use vdconf_core::encode::{dec, enc};
use vdconf_core::fuzz::{random_model, random_partial, trial_rng, FuzzBounds};
use vdconf_core::model::{oracle_count, oracle_solutions, oracle_valid_domains};
use vdconf_core::{compile, parse_model, BddStore, NodeId, Session};

const VARS: u32 = 5;

#[derive(Debug, Clone)]
enum Expr {
    Var(u32),
    Not(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = (0..VARS).prop_map(Expr::Var);
    leaf.prop_recursive(5, 40, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Not(Box::new(e))),
            (
                prop_oneof![
                    Just(BinOp::And),
                    Just(BinOp::Or),
                    Just(BinOp::Xor),
                    Just(BinOp::Imp),
                    Just(BinOp::Iff)
                ],
                inner.clone(),
                inner
            )
                .prop_map(|(op, a, b)| Expr::Bin(op, Box::new(a), Box::new(b))),
        ]
    })
}

fn eval(e: &Expr, bits: u32) -> bool {
    match e {
        Expr::Var(v) => bits >> (VARS - 1 - v) & 1 == 1,
        Expr::Not(a) => !eval(a, bits),
        Expr::Bin(BinOp::And, a, b) => eval(a, bits) && eval(b, bits),
        Expr::Bin(BinOp::Or, a, b) => eval(a, bits) || eval(b, bits),
        Expr::Bin(BinOp::Xor, a, b) => eval(a, bits) != eval(b, bits),
        Expr::Bin(BinOp::Imp, a, b) => !eval(a, bits) || eval(b, bits),
        Expr::Bin(BinOp::Iff, a, b) => eval(a, bits) == eval(b, bits),
    }
}

fn build(store: &mut BddStore, e: &Expr) -> NodeId {
    match e {
        Expr::Var(v) => store.literal(*v, true).unwrap(),
        Expr::Not(a) => {
            let a = build(store, a);
            store.negate(a)
        }
        Expr::Bin(op, a, b) => {
            let a = build(store, a);
            let b = build(store, b);
            store.apply(*op, a, b)
        }
    }
}

fn bits_of(assignment: u32) -> Vec<bool> {
    (0..VARS)
        .map(|v| assignment >> (VARS - 1 - v) & 1 == 1)
        .collect()
}

/// Disjunction of the minterms where `e` is true: same function, built a
/// completely different way.
fn from_truth_table(store: &mut BddStore, e: &Expr) -> NodeId {
    let mut acc = NodeId::TERM0;
    for assignment in 0..1u32 << VARS {
        if !eval(e, assignment) {
            continue;
        }
        let mut term = NodeId::TERM1;
        for (v, bit) in bits_of(assignment).into_iter().enumerate() {
            let lit = store.literal(v as u32, bit).unwrap();
            term = store.and(term, lit);
        }
        acc = store.or(acc, term);
    }
    acc
}

proptest! {
    #[test]
    fn equivalent_functions_share_a_node(e in expr()) {
        let mut store = BddStore::new(VARS);
        let a = build(&mut store, &e);
        let b = from_truth_table(&mut store, &e);
        prop_assert_eq!(a, b);
        store.check_invariants().unwrap();
    }

    #[test]
    fn evaluation_matches_expression(e in expr()) {
        let mut store = BddStore::new(VARS);
        let f = build(&mut store, &e);
        for assignment in 0..1u32 << VARS {
            prop_assert_eq!(store.eval(f, &bits_of(assignment)), eval(&e, assignment));
        }
    }

    #[test]
    fn shannon_expansion(e in expr(), var in 0..VARS) {
        let mut store = BddStore::new(VARS);
        let f = build(&mut store, &e);
        let hi = store.restrict(f, var, true).unwrap();
        let lo = store.restrict(f, var, false).unwrap();
        let x = store.literal(var, true).unwrap();
        let nx = store.literal(var, false).unwrap();
        let a = store.and(x, hi);
        let b = store.and(nx, lo);
        let g = store.or(a, b);
        prop_assert_eq!(f, g);
    }

    #[test]
    fn counts_partition_the_cube(e in expr()) {
        let mut store = BddStore::new(VARS);
        let f = build(&mut store, &e);
        let nf = store.negate(f);
        let expected = (0..1u32 << VARS).filter(|&a| eval(&e, a)).count();
        prop_assert_eq!(store.sat_count(f), BigUint::from(expected));
        prop_assert_eq!(store.sat_count(f) + store.sat_count(nf), BigUint::from(1u32 << VARS));
    }

    #[test]
    fn text_round_trip(e in expr(), g in expr()) {
        let mut store = BddStore::new(VARS);
        let f = build(&mut store, &e);
        let h = build(&mut store, &g);
        let text = store.write_text(&[f, h]);
        let (back, roots) = BddStore::read_text(&text, 1).unwrap();
        prop_assert_eq!(back.write_text(&roots), text);
        for assignment in 0..1u32 << VARS {
            let bits = bits_of(assignment);
            prop_assert_eq!(back.eval(roots[0], &bits), store.eval(f, &bits));
            prop_assert_eq!(back.eval(roots[1], &bits), store.eval(h, &bits));
        }
    }

    #[test]
    fn encoding_round_trips(size in 1usize..300, pick in any::<prop::sample::Index>()) {
        let bits = vdconf_core::encode::bits_for(size);
        let value = pick.index(size);
        let code = enc(value, bits).unwrap();
        prop_assert_eq!(code.len(), bits as usize);
        prop_assert_eq!(dec(&code), value);
    }

    #[test]
    fn compiled_models_match_the_oracle(seed in any::<u64>()) {
        let mut rng = trial_rng(seed, 0);
        let model = random_model(&mut rng, FuzzBounds::default());
        let space = compile(&model);
        let solutions = oracle_solutions(&model).unwrap();
        prop_assert_eq!(space.sat_count(), BigUint::from(solutions.len()));
        if solutions.is_empty() {
            return Ok(());
        }
        let rho = random_partial(&mut rng, &model, &solutions);
        let mut session = Session::start(Arc::new(space)).unwrap();
        for (var, value) in rho.iter() {
            session.assign(var, value).unwrap();
        }
        prop_assert_eq!(session.domains(), &oracle_valid_domains(&model, &rho).unwrap());
        prop_assert_eq!(
            session.solution_count(),
            &BigUint::from(oracle_count(&model, &rho).unwrap())
        );
    }

    #[test]
    fn undo_restores_the_previous_state(seed in any::<u64>(), choice in any::<prop::sample::Index>()) {
        let mut rng = trial_rng(seed, 1);
        let model = random_model(&mut rng, FuzzBounds::default());
        let solutions = oracle_solutions(&model).unwrap();
        prop_assume!(!solutions.is_empty());
        let rho = random_partial(&mut rng, &model, &solutions);
        let mut session = Session::start(Arc::new(compile(&model))).unwrap();
        for (var, value) in rho.iter() {
            session.assign(var, value).unwrap();
        }
        let before = session.status();
        let root = session.root();
        let open: Vec<(usize, usize)> = (0..model.len())
            .filter(|&v| !session.is_assigned(v))
            .flat_map(|v| session.domains()[v].iter().map(move |&x| (v, x)).collect::<Vec<_>>())
            .collect();
        prop_assume!(!open.is_empty());
        let (var, value) = open[choice.index(open.len())];
        session.assign(var, value).unwrap();
        session.undo().unwrap();
        prop_assert_eq!(session.status(), before);
        prop_assert_eq!(session.root(), root);
    }

    #[test]
    fn model_and_artifact_round_trip(seed in any::<u64>()) {
        let model = random_model(&mut trial_rng(seed, 2), FuzzBounds::default());
        let again = parse_model(&model.to_json()).unwrap();
        prop_assert_eq!(&again, &model);
        let space = compile(&model);
        let text = write_artifact(&space);
        let back = read_artifact(&text).unwrap();
        prop_assert_eq!(&back.model, &model);
        prop_assert_eq!(back.root, space.root);
        prop_assert_eq!(write_artifact(&back), text);
    }
}
