//! Algebraic invariants of words, permutations, tree portraits and
//! Thompson maps on randomized inputs.

use std::collections::HashSet;

use lawless_core::perm::{PermGroup, Permutation};
use lawless_core::thompson::{dy, interval_mover, standard_generators, Dyadic, DyadicPLMap, DEFAULT_MOVER_CAP};
use lawless_core::trees::{
    evaluate_generators, grigorchuk_generators, haar_sample, rigid_mover, Portrait, VertexString,
};
use lawless_core::words::{count_reduced, enumerate_reduced, Letter, Word};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn letters(k: usize, max_len: usize) -> impl Strategy<Value = Vec<Letter>> {
    prop::collection::vec((1..=k, any::<bool>()), 0..=max_len)
        .prop_map(|v| v.into_iter().map(|(g, inv)| Letter::new(g, inv)).collect())
}

fn word(k: usize, max_len: usize) -> impl Strategy<Value = Word> {
    letters(k, max_len).prop_map(move |l| Word::reduce(l).with_rank(k))
}

fn perm(degree: usize) -> impl Strategy<Value = Permutation> {
    any::<u64>().prop_map(move |seed| {
        let mut images: Vec<usize> = (1..=degree).collect();
        images.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Permutation::from_images(&images).unwrap()
    })
}

fn closure(gens: &[Permutation], degree: usize) -> HashSet<Permutation> {
    let mut seen = HashSet::from([Permutation::identity(degree)]);
    let mut frontier = vec![Permutation::identity(degree)];
    while let Some(g) = frontier.pop() {
        for s in gens {
            let h = g.then(s);
            if seen.insert(h.clone()) {
                frontier.push(h);
            }
        }
    }
    seen
}

fn leaves(arity: usize, depth: usize) -> Vec<VertexString> {
    VertexString::level(arity, depth).collect()
}

fn same_action(f: &Portrait, g: &Portrait) -> bool {
    leaves(f.arity(), f.depth()).iter().all(|s| f.act(s).unwrap() == g.act(s).unwrap())
}

#[test]
fn reduced_word_counts_match_enumeration() {
    for k in 1..=3 {
        for len in 1..=5 {
            let listed = enumerate_reduced(k, len).iter().filter(|w| w.len() == len).count();
            assert_eq!(listed as u128, count_reduced(k, len), "k={k} len={len}");
        }
    }
    assert_eq!(enumerate_reduced(2, 3).len(), 52);
    assert_eq!(enumerate_reduced(2, 5).len(), 484);
}

proptest! {
    #[test]
    fn reduction_is_idempotent(l in letters(3, 12)) {
        let w = Word::reduce(l);
        let again = Word::reduce(w.letters().to_vec());
        prop_assert_eq!(again.letters(), w.letters());
        prop_assert!(w.letters().windows(2).all(|p| p[0] != p[1].inverse()));
    }

    #[test]
    fn word_times_inverse_is_empty(w in word(3, 10)) {
        prop_assert!(w.concat(&w.inverse()).is_empty());
        prop_assert_eq!(w.inverse().inverse(), w.clone());
        prop_assert_eq!(Word::parse(&w.to_string()).unwrap().with_rank(3), w);
    }

    #[test]
    fn evaluation_is_a_homomorphism(u in word(2, 6), v in word(2, 6), a in perm(6), b in perm(6)) {
        let tuple = [a, b];
        let eval = |w: &Word| Permutation::evaluate_word(w, &tuple, 6).unwrap();
        prop_assert_eq!(eval(&u.concat(&v)), eval(&u).then(&eval(&v)));
        prop_assert_eq!(eval(&u.inverse()), eval(&u).inverse());
    }

    #[test]
    fn permutation_group_axioms(f in perm(7), g in perm(7), h in perm(7)) {
        prop_assert_eq!(f.then(&g).then(&h), f.then(&g.then(&h)));
        prop_assert!(f.then(&f.inverse()).is_identity());
        for x in 1..=7 {
            prop_assert_eq!(f.then(&g).act(x).unwrap(), g.act(f.act(x).unwrap()).unwrap());
        }
        prop_assert_eq!(Permutation::parse(&f.to_string(), None).unwrap(), f.clone());
        prop_assert_eq!(Permutation::parse(&f.cycle_string(), Some(7)).unwrap(), f);
    }

    #[test]
    fn chain_order_and_membership_match_closure(gens in prop::collection::vec(perm(6), 1..=3), probe in perm(6)) {
        let elements = closure(&gens, 6);
        let chain = PermGroup::new(6, gens).unwrap().bsgs();
        prop_assert_eq!(chain.order_u128(), Some(elements.len() as u128));
        prop_assert_eq!(chain.contains(&probe).unwrap(), elements.contains(&probe));
        let listed: HashSet<Permutation> = chain.elements().into_iter().collect();
        prop_assert_eq!(&listed, &elements);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        prop_assert!(elements.contains(&chain.uniform_element(&mut rng)));
    }

    #[test]
    fn pointwise_stabilizer_fixes_its_points(gens in prop::collection::vec(perm(6), 1..=3), fixed in prop::collection::btree_set(1usize..=6, 0..=3)) {
        let fixed: Vec<usize> = fixed.into_iter().collect();
        let chain = PermGroup::new(6, gens.clone()).unwrap().bsgs();
        let stab = chain.pointwise_stabilizer(&fixed).unwrap();
        let expected = closure(&gens, 6)
            .into_iter()
            .filter(|g| fixed.iter().all(|&p| g.act(p).unwrap() == p))
            .count();
        prop_assert_eq!(stab.order_u128(), Some(expected as u128));
    }

    #[test]
    fn portrait_composition_matches_action(seed in any::<u64>(), arity in 2usize..=3, depth in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = haar_sample(arity, depth, &mut rng);
        let g = haar_sample(arity, depth, &mut rng);
        let fg = f.then(&g);
        for s in leaves(arity, depth) {
            prop_assert_eq!(fg.act(&s).unwrap(), g.act(&f.act(&s).unwrap()).unwrap());
        }
        prop_assert!(f.then(&f.inverse()).is_identity());
        prop_assert!(same_action(&f.inverse().inverse(), &f));
        // truncation is a homomorphism
        prop_assert_eq!(fg.truncate(depth - 1), f.truncate(depth - 1).then(&g.truncate(depth - 1)));
        let text = serde_json::to_string(&f).unwrap();
        prop_assert_eq!(serde_json::from_str::<Portrait>(&text).unwrap(), f);
    }

    #[test]
    fn rigid_movers_on_disjoint_subtrees_commute(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = VertexString::parse("0", 2).unwrap();
        let w = VertexString::parse("10", 2).unwrap();
        let f = rigid_mover(&v, 3, &mut rng).unwrap();
        let g = rigid_mover(&w, 3, &mut rng).unwrap();
        prop_assert!(same_action(&f.then(&g), &g.then(&f)));
        prop_assert!(f.supported_in(&v));
    }

    #[test]
    fn automaton_and_portrait_agree(w in word(4, 6), depth in 1usize..=6) {
        let gens = grigorchuk_generators();
        let portrait = evaluate_generators(&gens, &w, depth).unwrap();
        let portraits: Vec<Portrait> = gens.iter().map(|g| g.to_portrait(depth)).collect();
        for s in leaves(2, depth) {
            let stepwise = w.letters().iter().fold(s.clone(), |x, l| {
                let p = &portraits[l.generator() - 1];
                if l.is_inverse() { p.inverse().act(&x).unwrap() } else { p.act(&x).unwrap() }
            });
            prop_assert_eq!(portrait.act(&s).unwrap(), stepwise);
        }
    }
}

fn thompson_word(choices: &[(bool, bool)]) -> Vec<DyadicPLMap> {
    let (x0, x1) = standard_generators();
    choices
        .iter()
        .map(|&(second, inv)| {
            let g = if second { x1.clone() } else { x0.clone() };
            if inv { g.inverse() } else { g }
        })
        .collect()
}

fn dyadic_in_unit() -> impl Strategy<Value = Dyadic> {
    (0u32..=12).prop_flat_map(|e| (0i64..=(1 << e)).prop_map(move |p| dy(p, e)))
}

fn interior_dyadic() -> impl Strategy<Value = Dyadic> {
    (1u32..=10).prop_flat_map(|e| (1i64..(1 << e)).prop_map(move |p| dy(p, e)))
}

fn check_invariants(f: &DyadicPLMap) -> Result<(), TestCaseError> {
    let points = f.breakpoints();
    prop_assert_eq!(&points[0], &(Dyadic::zero(), Dyadic::zero()));
    prop_assert_eq!(points.last().unwrap(), &(Dyadic::one(), Dyadic::one()));
    prop_assert!(points.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1));
    // revalidation recomputes the slopes from scratch
    prop_assert_eq!(&DyadicPLMap::new(points.to_vec()).unwrap(), f);
    Ok(())
}

proptest! {
    #[test]
    fn thompson_closure_and_exactness(choices in prop::collection::vec((any::<bool>(), any::<bool>()), 0..=12), t in dyadic_in_unit()) {
        let factors = thompson_word(&choices);
        let product = factors.iter().fold(DyadicPLMap::identity(), |acc, g| acc.then(g));
        check_invariants(&product)?;
        check_invariants(&product.inverse())?;
        let stepwise = factors.iter().fold(t.clone(), |x, g| g.eval(&x).unwrap());
        prop_assert_eq!(product.eval(&t).unwrap(), stepwise);
        prop_assert!(product.then(&product.inverse()).is_identity());
        let text = serde_json::to_string(&product).unwrap();
        prop_assert_eq!(serde_json::from_str::<DyadicPLMap>(&text).unwrap(), product);
    }

    #[test]
    fn interval_mover_contract(a in interior_dyadic(), b in interior_dyadic(), c in interior_dyadic(), forbidden in prop::collection::vec(interior_dyadic(), 0..4)) {
        let mut v = [a, b, c];
        v.sort();
        prop_assume!(v[0] < v[1] && v[1] < v[2]);
        let [d1, x, d2] = v;
        let m = interval_mover(&d1, &d2, &x, &forbidden, DEFAULT_MOVER_CAP).unwrap();
        let image = m.eval(&x).unwrap();
        prop_assert_ne!(&image, &x);
        prop_assert!(!forbidden.contains(&image));
        let (lo, hi) = m.support_bounds().unwrap();
        prop_assert!(lo >= d1 && hi <= d2);
        for t in [Dyadic::zero(), d1.clone(), d2.clone(), Dyadic::one()] {
            prop_assert_eq!(m.eval(&t).unwrap(), t);
        }
    }

    #[test]
    fn f_separates_dyadics(ys in prop::collection::btree_set(interior_dyadic(), 0..5), x in interior_dyadic()) {
        use lawless_core::separation::{SeparatingAction, ThompsonAction};
        prop_assume!(!ys.contains(&x));
        let fixed: Vec<Dyadic> = ys.into_iter().collect();
        let g = ThompsonAction.stabilizer_mover(&fixed, &x, &[]).unwrap();
        for y in &fixed {
            prop_assert_eq!(&g.eval(y).unwrap(), y);
        }
        prop_assert_ne!(g.eval(&x).unwrap(), x);
    }
}
