#![allow(dead_code)]

use esep::graph::{DagBuilder, Visibility};
use esep::{Dag, VertexId, VertexSet};
use proptest::prelude::*;
use rand::Rng;

/// Observed vertices `V0..`, then latent roots `L0..`. `obs_edges[k]` toggles
/// the k-th pair `(Vi, Vj)`, `i < j`, as `Vi -> Vj`; `lat_edges` toggles
/// latent-to-observed edges row by row.
pub fn build_graph(n_obs: usize, n_lat: usize, obs_edges: &[bool], lat_edges: &[bool]) -> Dag {
    let mut b = DagBuilder::new();
    for i in 0..n_obs {
        b.vertex(&format!("V{i}"), Visibility::Observed, 2).unwrap();
    }
    for l in 0..n_lat {
        b.vertex(&format!("L{l}"), Visibility::Latent, 2).unwrap();
    }
    let mut k = 0;
    for i in 0..n_obs {
        for j in i + 1..n_obs {
            if obs_edges.get(k).copied().unwrap_or(false) {
                b.edge(&format!("V{i}"), &format!("V{j}"));
            }
            k += 1;
        }
    }
    for l in 0..n_lat {
        for i in 0..n_obs {
            if lat_edges.get(l * n_obs + i).copied().unwrap_or(false) {
                b.edge(&format!("L{l}"), &format!("V{i}"));
            }
        }
    }
    b.build().unwrap()
}

pub fn random_graph(rng: &mut impl Rng, max_vertices: usize, max_latent: usize, density: f64) -> Dag {
    let n_lat = rng.random_range(0..=max_latent.min(max_vertices - 2));
    let n_obs = rng.random_range(2..=max_vertices - n_lat);
    let obs: Vec<bool> = (0..n_obs * n_obs).map(|_| rng.random_bool(density)).collect();
    let lat: Vec<bool> = (0..n_lat * n_obs).map(|_| rng.random_bool(0.5)).collect();
    build_graph(n_obs, n_lat, &obs, &lat)
}

/// Random disjoint `(a, b, c, d)` over observed vertices with singleton `a`, `b`.
pub fn random_query(rng: &mut impl Rng, g: &Dag, allow_d: bool) -> (VertexSet, VertexSet, VertexSet, VertexSet) {
    let obs: Vec<VertexId> = g.observed().collect();
    let i = rng.random_range(0..obs.len());
    let mut j = rng.random_range(0..obs.len() - 1);
    if j >= i {
        j += 1;
    }
    let (mut c, mut d) = (VertexSet::new(), VertexSet::new());
    for (k, &v) in obs.iter().enumerate() {
        if k == i || k == j {
            continue;
        }
        match rng.random_range(0..3) {
            0 => {
                c.insert(v);
            }
            1 if allow_d => {
                d.insert(v);
            }
            _ => {}
        }
    }
    ([obs[i]].into(), [obs[j]].into(), c, d)
}

pub fn arb_graph(max_obs: usize, max_lat: usize) -> impl Strategy<Value = Dag> {
    (2..=max_obs, 0..=max_lat).prop_flat_map(|(n_obs, n_lat)| {
        (
            proptest::collection::vec(any::<bool>(), n_obs * n_obs),
            proptest::collection::vec(any::<bool>(), n_lat * n_obs),
        )
            .prop_map(move |(o, l)| build_graph(n_obs, n_lat, &o, &l))
    })
}

/// A graph with a query: singleton `a` and `b`, plus per-vertex roles for the rest.
pub fn arb_graph_query(
    max_obs: usize,
    max_lat: usize,
) -> impl Strategy<Value = (Dag, VertexSet, VertexSet, VertexSet, VertexSet)> {
    (arb_graph(max_obs, max_lat), any::<u64>()).prop_map(|(g, seed)| {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let (a, b, c, d) = random_query(&mut rng, &g, true);
        (g, a, b, c, d)
    })
}

pub fn set(g: &Dag, names: &[&str]) -> VertexSet {
    g.ids(names).unwrap()
}

/// Every subset of `items`.
pub fn subsets(items: &[VertexId]) -> Vec<VertexSet> {
    (0..1usize << items.len())
        .map(|mask| items.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &v)| v).collect())
        .collect()
}
