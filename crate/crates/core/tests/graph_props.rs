mod common;

use common::{arb_graph, subsets};
use esep::{parse_graph, VertexId, VertexSet};
use proptest::prelude::*;

proptest! {
    #[test]
    fn descendants_are_dual_to_ancestors(g in arb_graph(6, 2)) {
        for v in g.vertices() {
            let de = g.descendants(&[v].into()).unwrap();
            let via_anc: VertexSet = g
                .vertices()
                .filter(|&w| g.ancestors(&[w].into()).unwrap().contains(&v))
                .collect();
            prop_assert_eq!(de, via_anc);
        }
    }

    #[test]
    fn deleting_outgoing_edges_composes(g in arb_graph(5, 2), m1 in 0u32..32, m2 in 0u32..32) {
        let obs: Vec<VertexId> = g.observed().collect();
        let pick = |m: u32| -> VertexSet { obs.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, &v)| v).collect() };
        let (d1, d2) = (pick(m1), pick(m2));
        let both: VertexSet = d1.union(&d2).copied().collect();
        let stepwise = g.remove_outgoing(&d1).unwrap().remove_outgoing(&d2).unwrap();
        prop_assert_eq!(stepwise, g.remove_outgoing(&both).unwrap());
    }

    #[test]
    fn subgraphs_stay_acyclic(g in arb_graph(6, 2), mask in 0u32..256) {
        let keep: VertexSet = g.vertices().filter(|v| mask >> v.0 & 1 == 1).collect();
        for h in [
            g.induced_subgraph(&keep).unwrap(),
            g.remove_incoming(&keep).unwrap(),
        ] {
            prop_assert_eq!(h.topological_order().len(), h.len());
            // A rebuilt copy passes every construction check, acyclicity included.
            prop_assert_eq!(parse_graph(&h.to_text()).unwrap(), h);
        }
        let obs_keep: VertexSet = keep.iter().copied().filter(|&v| g.is_observed(v)).collect();
        let h = g.remove_outgoing(&obs_keep).unwrap();
        prop_assert_eq!(parse_graph(&h.to_text()).unwrap(), h);
    }

    #[test]
    fn parsing_is_deterministic(g in arb_graph(6, 2), extra in proptest::collection::vec((0usize..6, 0usize..6), 0..4)) {
        let mut text = g.to_text();
        let names: Vec<&str> = g.observed().map(|v| g.name(v)).collect();
        for (i, j) in extra {
            let (i, j) = (i % names.len(), j % names.len());
            if i != j {
                text.push_str(&format!("{} <-> {}\n", names[i], names[j]));
            }
        }
        let (a, b) = (parse_graph(&text), parse_graph(&text));
        prop_assert_eq!(a.is_ok(), b.is_ok());
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert_eq!(a.to_text(), b.to_text());
            prop_assert_eq!(a, b);
        }
    }
}

#[test]
fn closure_of_every_subset_is_reflexive() {
    let g = esep::fixtures::gadget_graph();
    let all: Vec<VertexId> = g.vertices().collect();
    for s in subsets(&all) {
        assert!(s.is_subset(&g.ancestors(&s).unwrap()));
        assert!(s.is_subset(&g.descendants(&s).unwrap()));
    }
}
