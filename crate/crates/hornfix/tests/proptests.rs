//! Property tests for the structural invariants: normalization idempotence,
//! the relation set algebra, and the shift/symmetry laws of the numeric
//! characteristic-tuple machinery.

use proptest::collection::vec;
use proptest::prelude::*;

use hornfix::ast::{normalize, Atom, Literal, Rule, Term};
use hornfix::structure::{all_tuples, Relation};
use hornfix::trees::{
    arity_of_triangular, char_tuple, check, decider_r_neq, pair_index, pre_check, triangular,
    PerfectTree,
};

fn arb_term() -> impl Strategy<Value = Term> {
    prop_oneof![
        prop_oneof![Just("x"), Just("y"), Just("z")].prop_map(Term::var),
        Just(Term::constant("c")),
    ]
}

fn arb_rule() -> impl Strategy<Value = Rule> {
    (vec(arb_term(), 0..4), vec(arb_term(), 0..3)).prop_map(|(head_args, body_args)| {
        Rule::new(
            Atom::new("P", head_args),
            vec![Literal::Pos(Atom::new("R", body_args))],
        )
    })
}

fn arb_relation(max_n: u32, max_arity: usize) -> impl Strategy<Value = (Relation, u32)> {
    (1..=max_n, 0..=max_arity).prop_flat_map(move |(n, arity)| {
        let space: Vec<Vec<u32>> = all_tuples(n, arity).collect();
        vec(any::<bool>(), space.len()).prop_map(move |picks| {
            let tuples = space
                .iter()
                .zip(&picks)
                .filter(|(_, &take)| take)
                .map(|(t, _)| t.clone());
            (Relation::from_tuples(arity, tuples).unwrap(), n)
        })
    })
}

proptest! {
    #[test]
    fn normalize_is_idempotent(rule in arb_rule()) {
        let once = normalize(&rule);
        prop_assert!(once.has_normal_head());
        prop_assert_eq!(normalize(&once), once);
    }

    #[test]
    fn complement_is_an_involution((rel, n) in arb_relation(4, 2)) {
        prop_assert_eq!(rel.complement(n).complement(n), rel);
    }

    #[test]
    fn projections_are_dual((rel, n) in arb_relation(4, 3)) {
        for k in 0..=rel.arity() {
            let exists = rel.project_exists(k).unwrap();
            let dual = rel.complement(n).project_forall(k, n).unwrap().complement(n);
            prop_assert_eq!(exists, dual);
        }
    }

    #[test]
    fn char_tuples_have_triangular_layout(nodes in vec(0u32..15, 0..4)) {
        let tree = PerfectTree::new(3);
        let ct = char_tuple(&tree, &nodes);
        prop_assert_eq!(ct.len(), triangular(nodes.len()));
        prop_assert_eq!(arity_of_triangular(ct.len()), Some(nodes.len()));
        for (i, &v) in nodes.iter().enumerate() {
            prop_assert_eq!(ct[pair_index(nodes.len(), i, i)], tree.depth_of(v));
        }
    }

    // Realizability of a candidate depends only on the comparisons between
    // its entries, so shifting all entries preserves the verdict.
    #[test]
    fn check_is_shift_invariant(entries in vec(0u32..5, 0..7), shift in 1u32..4) {
        if arity_of_triangular(entries.len()).is_none() {
            return Ok(());
        }
        let shifted: Vec<u32> = entries.iter().map(|e| e + shift).collect();
        prop_assert_eq!(check(&entries).unwrap(), check(&shifted).unwrap());
        prop_assert_eq!(pre_check(&entries).unwrap(), pre_check(&shifted).unwrap());
    }

    // Inequality of nodes is symmetric, so the decider must not care about
    // the order of the two depth entries.
    #[test]
    fn neq_decider_is_symmetric(e1 in 0u32..6, e2 in 0u32..6, e3 in 0u32..6) {
        prop_assert_eq!(decider_r_neq(e1, e2, e3), decider_r_neq(e3, e2, e1));
    }

    // Accepted candidates always pass the necessary-conditions filter.
    #[test]
    fn check_implies_pre_check(entries in vec(0u32..5, 0..7)) {
        if arity_of_triangular(entries.len()).is_none() {
            return Ok(());
        }
        if check(&entries).unwrap() {
            prop_assert!(pre_check(&entries).unwrap());
        }
    }
}
