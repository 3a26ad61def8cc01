mod common;

use common::{arb_graph, subsets};
use esep::oracle::{pstar_check, random_model, ModelGenSpec};
use esep::separation::is_d_separated;
use esep::{Assignment, VertexId};
use proptest::prelude::*;

fn model_cases() -> ProptestConfig {
    ProptestConfig::with_cases(64)
}

proptest! {
    #![proptest_config(model_cases())]

    #[test]
    fn observed_margin_has_unit_mass(g in arb_graph(5, 2), seed in any::<u64>(), alpha in 0.1f64..3.0) {
        let m = random_model(&ModelGenSpec::new(g, seed).latent_states(3).concentration(alpha)).unwrap();
        prop_assert!((m.observed_margin().unwrap().mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn joint_obeys_global_markov(g in arb_graph(4, 2), seed in any::<u64>()) {
        let m = random_model(&ModelGenSpec::new(g.clone(), seed).latent_states(2)).unwrap();
        let joint = m.joint().unwrap();
        let all: Vec<VertexId> = g.vertices().collect();
        for &a in &all {
            for &b in &all {
                if a >= b {
                    continue;
                }
                let rest: Vec<VertexId> = all.iter().copied().filter(|&v| v != a && v != b).collect();
                for c in subsets(&rest) {
                    if is_d_separated(&g, &[a].into(), &[b].into(), &c) {
                        let names: Vec<&str> = c.iter().map(|&v| g.name(v)).collect();
                        let dev = joint.independence_deviation(&[g.name(a)], &[g.name(b)], &names).unwrap();
                        prop_assert!(dev < 1e-9, "{} vs {} given {:?}: {}", g.name(a), g.name(b), names, dev);
                    }
                }
            }
        }
    }

    #[test]
    fn fixing_construction_holds(g in arb_graph(4, 2), seed in any::<u64>(), mask in 1u32..16, values in any::<u32>()) {
        let m = random_model(&ModelGenSpec::new(g.clone(), seed).latent_states(2)).unwrap();
        let mut d = Assignment::new();
        for (i, v) in g.observed().enumerate() {
            if mask >> i & 1 == 1 {
                d.insert(g.name(v), (values >> i & 1) as usize);
            }
        }
        let r = pstar_check(&m, &d).unwrap();
        prop_assert!(r.passed, "{:?}", r);

        // P*(a, c) = P(a, c) whenever neither part descends from D.
        let dset = g.ids(&d.keys().collect::<Vec<_>>()).unwrap();
        let de = g.descendants(&dset).unwrap();
        let free: Vec<&str> = g.observed().filter(|v| !de.contains(v)).map(|v| g.name(v)).collect();
        if !free.is_empty() {
            let p = m.observed_margin().unwrap().marginalize(&free).unwrap();
            let pstar = m.fix_conditioning(&d).unwrap().observed_margin().unwrap().marginalize(&free).unwrap();
            prop_assert!(p.max_abs_diff(&pstar).unwrap() < 1e-12);
        }
    }

    #[test]
    fn intervention_is_truncated_factorization(g in arb_graph(4, 1), seed in any::<u64>(), pick in any::<usize>(), value in 0usize..2) {
        let m = random_model(&ModelGenSpec::new(g.clone(), seed).latent_states(2)).unwrap();
        let obs: Vec<VertexId> = g.observed().collect();
        let x = obs[pick % obs.len()];
        let done = m.intervene(&Assignment::new().with(g.name(x), value)).unwrap();
        let (before, after) = (m.joint().unwrap(), done.joint().unwrap());
        for (states, p) in before.iter() {
            let q = after.at(&states);
            if states[x.0] != value {
                prop_assert_eq!(q, 0.0);
                continue;
            }
            let pv: Vec<usize> = g.parents(x).iter().map(|p| states[p.0]).collect();
            let f = m.cpt(x).prob(value, &pv);
            if f > 0.0 {
                prop_assert!((q - p / f).abs() < 1e-12, "{} vs {}", q, p / f);
            }
        }
    }
}

#[test]
fn fixing_treatment_of_iv_model_matches_its_construction() {
    // f*(y | u) = f(y | u, ξ): every row of Y's table is the old row at X = ξ.
    let m = random_model(&ModelGenSpec::new(esep::fixtures::iv_graph(), 8)).unwrap();
    let g = m.graph();
    let (y, u) = (g.id("Y").unwrap(), g.id("U").unwrap());
    for xi in 0..2 {
        let fixed = m.fix_conditioning(&Assignment::new().with("X", xi)).unwrap();
        assert_eq!(fixed.graph().parents(y), &[u]);
        for uv in 0..m.states(u) {
            let mut pv = vec![0; 2];
            for (slot, &p) in pv.iter_mut().zip(g.parents(y)) {
                *slot = if p == u { uv } else { xi };
            }
            for yv in 0..2 {
                assert_eq!(fixed.cpt(y).prob(yv, &[uv]), m.cpt(y).prob(yv, &pv));
            }
        }
    }
}
