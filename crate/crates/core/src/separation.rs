//! d-separation and e-separation.
//!
//! `A` and `B` are e-separated given `C` after deletion of `D` when they are
//! d-separated by `C` in the subgraph induced by `V \ D`. The same verdict is
//! obtained by d-separation in the graph with every edge leaving `D` removed;
//! both routes are exposed so they can be checked against each other.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Dag, VertexId, VertexSet};

/// Largest graph accepted by [`d_separated_bruteforce`].
pub const BRUTE_FORCE_LIMIT: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SeparationQuery {
    pub a: VertexSet,
    pub b: VertexSet,
    pub c: VertexSet,
    pub d: VertexSet,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparationVerdict {
    pub separated: bool,
    /// An unblocked path from `A` to `B` (ids of the queried graph), present
    /// exactly when `separated` is false.
    pub witness_path: Option<Vec<VertexId>>,
}

impl SeparationQuery {
    pub fn new(a: VertexSet, b: VertexSet, c: VertexSet, d: VertexSet) -> Self {
        Self { a, b, c, d }
    }

    /// Builds a query from vertex names.
    pub fn from_names<S: AsRef<str>>(g: &Dag, a: &[S], b: &[S], c: &[S], d: &[S]) -> Result<Self> {
        Ok(Self::new(g.ids(a)?, g.ids(b)?, g.ids(c)?, g.ids(d)?))
    }

    pub fn swapped(&self) -> Self {
        Self::new(self.b.clone(), self.a.clone(), self.c.clone(), self.d.clone())
    }

    pub fn validate(&self, g: &Dag) -> Result<()> {
        if self.a.is_empty() || self.b.is_empty() {
            return Err(Error::InvalidQuery("A and B must be nonempty".into()));
        }
        let sets = [&self.a, &self.b, &self.c, &self.d];
        for (i, s) in sets.iter().enumerate() {
            for &v in s.iter() {
                if v.0 >= g.len() {
                    return Err(Error::UnknownVertex(format!("#{}", v.0)));
                }
                if g.is_latent(v) {
                    return Err(Error::LatentNotAllowed(g.name(v).to_string()));
                }
            }
            for t in &sets[i + 1..] {
                if let Some(&v) = s.intersection(t).next() {
                    return Err(Error::InvalidQuery(format!("sets are not disjoint: {} appears twice", g.name(v))));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Arrival {
    /// Reached from a child, travelling against an edge.
    FromChild,
    /// Reached from a parent, travelling along an edge.
    FromParent,
}

/// Vertices reachable from `sources` along trails that are active given `cond`.
fn reachable(g: &Dag, sources: &VertexSet, cond: &VertexSet) -> Vec<bool> {
    let anc = g.ancestors(cond).expect("validated set");
    let mut hit = vec![false; g.len()];
    let mut seen = BTreeSet::new();
    let mut stack: Vec<(VertexId, Arrival)> = sources.iter().map(|&s| (s, Arrival::FromChild)).collect();
    while let Some((v, arrival)) = stack.pop() {
        if !seen.insert((v, arrival)) {
            continue;
        }
        let conditioned = cond.contains(&v);
        if !conditioned {
            hit[v.0] = true;
        }
        match arrival {
            Arrival::FromChild if !conditioned => {
                stack.extend(g.parents(v).iter().map(|&p| (p, Arrival::FromChild)));
                stack.extend(g.children(v).iter().map(|&c| (c, Arrival::FromParent)));
            }
            Arrival::FromChild => {}
            Arrival::FromParent => {
                if !conditioned {
                    stack.extend(g.children(v).iter().map(|&c| (c, Arrival::FromParent)));
                }
                if anc.contains(&v) {
                    stack.extend(g.parents(v).iter().map(|&p| (p, Arrival::FromChild)));
                }
            }
        }
    }
    hit
}

/// Boolean d-separation test without witness reconstruction. The query must
/// already be valid; use this in inner loops.
pub fn is_d_separated(g: &Dag, a: &VertexSet, b: &VertexSet, c: &VertexSet) -> bool {
    let hit = reachable(g, a, c);
    !b.iter().any(|v| hit[v.0])
}

/// Depth-first search for an unblocked simple path from `A` to `B`.
fn find_open_path(g: &Dag, q: &SeparationQuery) -> Option<Vec<VertexId>> {
    let anc = g.ancestors(&q.c).expect("validated set");
    let mut on_path = vec![false; g.len()];
    let mut path = Vec::new();

    fn extend(g: &Dag, q: &SeparationQuery, anc: &VertexSet, on_path: &mut [bool], path: &mut Vec<VertexId>) -> bool {
        let v = *path.last().expect("nonempty path");
        if path.len() > 1 && q.b.contains(&v) {
            return true;
        }
        let came_in = path.len() > 1 && g.has_edge(path[path.len() - 2], v);
        let neighbours: BTreeSet<VertexId> = g.parents(v).iter().chain(g.children(v)).copied().collect();
        for w in neighbours {
            if on_path[w.0] {
                continue;
            }
            if path.len() > 1 {
                let collider = came_in && g.has_edge(w, v);
                let blocked = if collider { !anc.contains(&v) } else { q.c.contains(&v) };
                if blocked {
                    continue;
                }
            }
            on_path[w.0] = true;
            path.push(w);
            if extend(g, q, anc, on_path, path) {
                return true;
            }
            path.pop();
            on_path[w.0] = false;
        }
        false
    }

    for &s in &q.a {
        on_path[s.0] = true;
        path.push(s);
        if extend(g, q, &anc, &mut on_path, &mut path) {
            return Some(path);
        }
        path.pop();
        on_path[s.0] = false;
    }
    None
}

/// d-separation of `A` and `B` given `C` (the query's `D` must be empty).
pub fn d_separated(g: &Dag, q: &SeparationQuery) -> Result<SeparationVerdict> {
    q.validate(g)?;
    if !q.d.is_empty() {
        return Err(Error::InvalidQuery("d-separation takes no deletion set".into()));
    }
    if is_d_separated(g, &q.a, &q.b, &q.c) {
        return Ok(SeparationVerdict { separated: true, witness_path: None });
    }
    let path = find_open_path(g, q).expect("reachability found an active trail, so an open path exists");
    Ok(SeparationVerdict { separated: false, witness_path: Some(path) })
}

/// e-separation computed on the subgraph induced by `V \ D`.
/// Witness ids refer to the original graph.
pub fn e_separated(g: &Dag, q: &SeparationQuery) -> Result<SeparationVerdict> {
    q.validate(g)?;
    let keep: VertexSet = g.vertices().filter(|v| !q.d.contains(v)).collect();
    let sub = g.induced_subgraph(&keep)?;
    let remap = |s: &VertexSet| -> VertexSet { s.iter().map(|&v| sub.id(g.name(v)).expect("kept vertex")).collect() };
    let inner = SeparationQuery::new(remap(&q.a), remap(&q.b), remap(&q.c), VertexSet::new());
    let verdict = d_separated(&sub, &inner)?;
    Ok(SeparationVerdict {
        separated: verdict.separated,
        witness_path: verdict
            .witness_path
            .map(|p| p.into_iter().map(|v| g.id(sub.name(v)).expect("same names")).collect()),
    })
}

/// e-separation computed as d-separation after removing edges out of `D`.
pub fn e_separated_star(g: &Dag, q: &SeparationQuery) -> Result<SeparationVerdict> {
    q.validate(g)?;
    let cut = g.remove_outgoing(&q.d)?;
    let inner = SeparationQuery::new(q.a.clone(), q.b.clone(), q.c.clone(), VertexSet::new());
    d_separated(&cut, &inner)
}

/// Fast boolean e-separation used by witness searches. Assumes a valid query.
pub fn is_e_separated(g: &Dag, a: &VertexSet, b: &VertexSet, c: &VertexSet, d: &VertexSet) -> bool {
    let cut = g.remove_outgoing(d).expect("validated deletion set");
    is_d_separated(&cut, a, b, c)
}

/// Literal d-separation: enumerates every simple path between `A` and `B` and
/// applies the blocking rule to each one. Reports the lexicographically first
/// open path (by vertex insertion order).
pub fn d_separated_bruteforce(g: &Dag, q: &SeparationQuery) -> Result<SeparationVerdict> {
    if g.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::GraphTooLarge { vertices: g.len(), limit: BRUTE_FORCE_LIMIT });
    }
    q.validate(g)?;
    if !q.d.is_empty() {
        return Err(Error::InvalidQuery("d-separation takes no deletion set".into()));
    }

    // Directed reachability by plain DFS, independent of Dag::ancestors.
    let reaches = |from: VertexId, to: VertexId| -> bool {
        let mut stack = vec![from];
        let mut seen = vec![false; g.len()];
        while let Some(v) = stack.pop() {
            if v == to {
                return true;
            }
            if !std::mem::replace(&mut seen[v.0], true) {
                stack.extend_from_slice(g.children(v));
            }
        }
        false
    };
    let blocked = |path: &[VertexId]| -> bool {
        path.windows(3).any(|w| {
            let (prev, mid, next) = (w[0], w[1], w[2]);
            let collider = g.has_edge(prev, mid) && g.has_edge(next, mid);
            if collider {
                !q.c.iter().any(|&c| reaches(mid, c))
            } else {
                q.c.contains(&mid)
            }
        })
    };

    let mut open: Vec<Vec<VertexId>> = Vec::new();
    for &a in &q.a {
        for &b in &q.b {
            let mut paths = Vec::new();
            all_simple_paths(g, b, &mut vec![a], &mut paths);
            open.extend(paths.into_iter().filter(|p| !blocked(p)));
        }
    }
    open.sort();
    Ok(SeparationVerdict { separated: open.is_empty(), witness_path: open.into_iter().next() })
}

fn all_simple_paths(g: &Dag, to: VertexId, path: &mut Vec<VertexId>, out: &mut Vec<Vec<VertexId>>) {
    let v = *path.last().expect("nonempty");
    if v == to {
        out.push(path.clone());
        return;
    }
    let neighbours: BTreeSet<VertexId> = g.parents(v).iter().chain(g.children(v)).copied().collect();
    for w in neighbours {
        if !path.contains(&w) {
            path.push(w);
            all_simple_paths(g, to, path, out);
            path.pop();
        }
    }
}

/// Checks that `path` is a simple path of `g` that is open given `c`.
pub fn is_open_path(g: &Dag, path: &[VertexId], c: &VertexSet) -> bool {
    if path.is_empty() {
        return false;
    }
    let distinct: BTreeSet<_> = path.iter().collect();
    if distinct.len() != path.len() || path.windows(2).any(|w| !g.adjacent(w[0], w[1])) {
        return false;
    }
    let anc = match g.ancestors(c) {
        Ok(anc) => anc,
        Err(_) => return false,
    };
    path.windows(3).all(|w| {
        let collider = g.has_edge(w[0], w[1]) && g.has_edge(w[2], w[1]);
        if collider {
            anc.contains(&w[1])
        } else {
            !c.contains(&w[1])
        }
    })
}
