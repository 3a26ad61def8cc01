use esep::constraints::{
    check_distribution, compatibility, enumerate_witnesses, instrumental_inequality_score, weak_compatibility,
    ConditionalSlice, IvTable, SliceForm, FEASIBILITY_TOLERANCE,
};
use esep::fixtures;
use esep::oracle::{brute_force_compat, random_model, ModelGenSpec};
use esep::{Assignment, JointTable};
use proptest::prelude::*;

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// Strictly positive weights normalized to `mass`.
fn scaled(raw: &[f64], mass: f64) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    raw.iter().map(|r| r / total * mass).collect()
}

fn zxy_table(raw: &[f64]) -> JointTable {
    JointTable::new(names(&["Z", "X", "Y"]), vec![2, 2, 2], scaled(raw, 1.0)).unwrap()
}

/// g(u) = Σ_b max_a M[a][b] / u[a].
fn g(m: &[f64], na: usize, nb: usize, u: &[f64]) -> f64 {
    (0..nb)
        .map(|b| {
            (0..na)
                .filter(|&a| m[a * nb + b] > 0.0)
                .map(|a| if u[a] > 0.0 { m[a * nb + b] / u[a] } else { f64::INFINITY })
                .fold(0.0, f64::max)
        })
        .sum()
}

/// Grid search over the simplex that repeatedly zooms in on the best point.
/// `g` is convex, so the zoom converges to the minimum.
fn zoom_min(m: &[f64], na: usize, nb: usize) -> f64 {
    let mut center = vec![1.0 / na as f64; na];
    let mut best = g(m, na, nb, &center);
    let mut width = 1.0;
    let steps = 24i64;
    for _ in 0..14 {
        let mut next = center.clone();
        let free = na - 1;
        let total = (2 * steps + 1).pow(free as u32);
        for k in 0..total {
            let mut u = vec![0.0; na];
            let mut rest = k;
            let mut sum = 0.0;
            for (i, slot) in u.iter_mut().enumerate().take(free) {
                let off = rest % (2 * steps + 1) - steps;
                rest /= 2 * steps + 1;
                *slot = center[i] + width * off as f64 / steps as f64;
                sum += *slot;
            }
            u[free] = 1.0 - sum;
            if u.iter().any(|&x| x < 0.0) {
                continue;
            }
            let v = g(m, na, nb, &u);
            if v < best {
                best = v;
                next = u;
            }
        }
        center = next;
        width /= 4.0;
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn strong_slice_reduces_to_instrumental_inequality(raw in proptest::collection::vec(0.001f64..1.0, 8), xi in 0usize..2) {
        let t = zxy_table(&raw);
        let slice = ConditionalSlice::from_table(&t, SliceForm::Strong, &["Z"], &["Y"], &[] as &[&str], &Assignment::new().with("X", xi)).unwrap();
        let r = compatibility(&slice).unwrap();
        let score = IvTable::from_joint(&t, "Z", "X", "Y").unwrap().score_at(xi);
        prop_assert!((r.margin - (score - 1.0)).abs() < 1e-9);
        prop_assert_eq!(r.feasible, score - 1.0 <= FEASIBILITY_TOLERANCE);
    }

    #[test]
    fn strong_feasibility_implies_weak_feasibility(raw in proptest::collection::vec(0.001f64..1.0, 8), xi in 0usize..2) {
        let t = zxy_table(&raw);
        let d = Assignment::new().with("X", xi);
        let strong = ConditionalSlice::from_table(&t, SliceForm::Strong, &["Z"], &["Y"], &[] as &[&str], &d).unwrap();
        let weak = ConditionalSlice::from_table(&t, SliceForm::Weak, &["Z"], &["Y"], &[] as &[&str], &d).unwrap();
        if compatibility(&strong).unwrap().feasible {
            prop_assert!(compatibility(&weak).unwrap().feasible);
        }
    }

    #[test]
    fn solver_matches_refined_search(
        na in 2usize..=3,
        nb in 2usize..=3,
        raw in proptest::collection::vec(0.0f64..1.0, 9),
        mass in 0.05f64..1.0,
    ) {
        let m = scaled(&raw[..na * nb].iter().map(|x| x + 1e-3).collect::<Vec<_>>(), mass);
        let slice = ConditionalSlice::from_values(SliceForm::Weak, na, nb, 1, m.clone()).unwrap();
        let r = weak_compatibility(&slice).unwrap();
        let reference = zoom_min(&m, na, nb) - 1.0;
        prop_assert!((r.margin - reference).abs() < 1e-3, "solver {} reference {}", r.margin, reference);
        if reference.abs() > 1e-3 {
            prop_assert_eq!(r.feasible, reference <= 0.0);
        }
    }

    #[test]
    fn grid_never_beats_solver(
        na in 2usize..=4,
        nb in 2usize..=4,
        raw in proptest::collection::vec(0.0f64..1.0, 16),
        mass in 0.05f64..1.0,
    ) {
        let m = scaled(&raw[..na * nb].iter().map(|x| x + 1e-3).collect::<Vec<_>>(), mass);
        let slice = ConditionalSlice::from_values(SliceForm::Weak, na, nb, 1, m).unwrap();
        let solver = weak_compatibility(&slice).unwrap().margin;
        let grid = if na <= 3 { 32 } else { 12 };
        prop_assert!(brute_force_compat(&slice, grid).unwrap().margin >= solver - 1e-6);
    }
}

#[test]
fn random_models_satisfy_every_witness() {
    for (i, g) in [fixtures::iv_graph(), fixtures::uc_graph(), fixtures::gadget_graph()].into_iter().enumerate() {
        let obs: Vec<_> = g.observed().collect();
        let mut ws = Vec::new();
        for &x in &obs {
            for &y in &obs {
                if x < y && !g.adjacent(x, y) {
                    ws.extend(enumerate_witnesses(&g, x, y, 2, 2).unwrap());
                }
            }
        }
        assert!(!ws.is_empty());
        for seed in 0..20 {
            let m = random_model(&ModelGenSpec::new(g.clone(), 100 * i as u64 + seed)).unwrap();
            let report = check_distribution(&g, &m.observed_margin().unwrap(), &ws).unwrap();
            assert!(report.feasible, "graph {i} seed {seed}: {:?}", report.infeasible().next());
        }
    }
}

#[test]
fn instrumental_score_is_at_most_one_for_iv_models() {
    for seed in 0..200 {
        let m = random_model(&ModelGenSpec::new(fixtures::iv_graph(), seed)).unwrap();
        let p = IvTable::from_joint(&m.observed_margin().unwrap(), "Z", "X", "Y").unwrap();
        assert!(instrumental_inequality_score(&p) <= 1.0 + 1e-9);
    }
}
