mod common;

use common::{arb_graph_query, set};
use esep::fixtures;
use esep::separation::{
    d_separated, d_separated_bruteforce, e_separated, e_separated_star, is_open_path, SeparationQuery,
};
use esep::VertexSet;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn deletion_characterizations_agree((g, a, b, c, d) in arb_graph_query(6, 2)) {
        let q = SeparationQuery::new(a, b, c, d);
        let induced = e_separated(&g, &q).unwrap();
        let cut = e_separated_star(&g, &q).unwrap();
        prop_assert_eq!(induced.separated, cut.separated);
    }

    #[test]
    fn reachability_matches_path_enumeration((g, a, b, c, _d) in arb_graph_query(7, 3)) {
        let q = SeparationQuery::new(a, b, c.clone(), VertexSet::new());
        let fast = d_separated(&g, &q).unwrap();
        let slow = d_separated_bruteforce(&g, &q).unwrap();
        prop_assert_eq!(fast.separated, slow.separated);
        for w in [fast.witness_path, slow.witness_path].into_iter().flatten() {
            prop_assert!(is_open_path(&g, &w, &c));
        }
    }

    #[test]
    fn separation_is_symmetric((g, a, b, c, d) in arb_graph_query(6, 2)) {
        let q = SeparationQuery::new(a, b, c, d);
        prop_assert_eq!(
            e_separated(&g, &q).unwrap().separated,
            e_separated(&g, &q.swapped()).unwrap().separated
        );
        let q0 = SeparationQuery::new(q.a.clone(), q.b.clone(), q.c.clone(), VertexSet::new());
        prop_assert_eq!(
            d_separated(&g, &q0).unwrap().separated,
            d_separated(&g, &q0.swapped()).unwrap().separated
        );
    }

    #[test]
    fn enlarging_the_deletion_set_keeps_separation((g, a, b, c, d) in arb_graph_query(6, 2)) {
        let q = SeparationQuery::new(a, b, c, d);
        if e_separated(&g, &q).unwrap().separated {
            for v in g.observed() {
                if q.a.contains(&v) || q.b.contains(&v) || q.c.contains(&v) || q.d.contains(&v) {
                    continue;
                }
                let mut bigger = q.d.clone();
                bigger.insert(v);
                let q2 = SeparationQuery::new(q.a.clone(), q.b.clone(), q.c.clone(), bigger);
                prop_assert!(e_separated(&g, &q2).unwrap().separated);
            }
        }
    }
}

#[test]
fn gadget_claims() {
    let g = fixtures::gadget_graph();
    let q = |c: &str, d: &str| SeparationQuery::new(set(&g, &["X"]), set(&g, &["Y"]), set(&g, &[c]), set(&g, &[d]));
    assert!(e_separated(&g, &q("Z", "W")).unwrap().separated);
    assert!(e_separated(&g, &q("W", "Z")).unwrap().separated);
    let plain = SeparationQuery::new(set(&g, &["X"]), set(&g, &["Y"]), VertexSet::new(), VertexSet::new());
    assert!(!d_separated(&g, &plain).unwrap().separated);
}

#[test]
fn brute_force_returns_first_open_path() {
    let g = fixtures::iv_graph();
    let q = SeparationQuery::new(set(&g, &["Z"]), set(&g, &["Y"]), set(&g, &["X"]), VertexSet::new());
    let v = d_separated_bruteforce(&g, &q).unwrap();
    let names: Vec<&str> = v.witness_path.unwrap().iter().map(|&v| g.name(v)).collect();
    assert_eq!(names, ["Z", "X", "U", "Y"]);
}
