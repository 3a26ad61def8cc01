use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Dag, VertexId, VertexSet};
use crate::separation::is_e_separated;

/// An e-separation statement usable as a constraint: `a` is e-separated from
/// `b` given `c` after deleting `d`, and no vertex of `c` descends from `d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EsepWitness {
    pub a: VertexSet,
    pub b: VertexSet,
    pub c: VertexSet,
    pub d: VertexSet,
    /// No vertex of `a` descends from `d`, so the stronger slice applies.
    pub strong: bool,
}

impl EsepWitness {
    /// Checks the graph-side conditions and classifies the witness.
    pub fn new(g: &Dag, a: VertexSet, b: VertexSet, c: VertexSet, d: VertexSet) -> Result<Self> {
        let q = crate::separation::SeparationQuery::new(a, b, c, d);
        q.validate(g)?;
        if g.any_descends_from(&q.c, &q.d)? {
            return Err(Error::Precondition("a vertex of C descends from D".into()));
        }
        if !is_e_separated(g, &q.a, &q.b, &q.c, &q.d) {
            return Err(Error::Precondition("A and B are not e-separated".into()));
        }
        let strong = !g.any_descends_from(&q.a, &q.d)?;
        Ok(Self { a: q.a, b: q.b, c: q.c, d: q.d, strong })
    }

    /// With an empty deletion set the constraint is a conditional independence.
    pub fn is_independence(&self) -> bool {
        self.d.is_empty()
    }
}

/// An observed pair with neither an edge nor a shared latent parent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestablePair {
    pub x: VertexId,
    pub y: VertexId,
    /// Every other observed vertex.
    pub d: VertexSet,
    /// `x` and `y` are e-separated (with empty `C`) after deleting `d`.
    pub separated: bool,
}

/// All ordered pairs whose non-adjacency is falsifiable from the observed margin.
pub fn testable_pairs(g: &Dag) -> Vec<TestablePair> {
    let observed: Vec<VertexId> = g.observed().collect();
    let mut out = Vec::new();
    for &x in &observed {
        for &y in &observed {
            if x == y || g.adjacent(x, y) || !g.shared_latent_parents(x, y).is_empty() {
                continue;
            }
            let d: VertexSet = observed.iter().copied().filter(|&v| v != x && v != y).collect();
            let separated = is_e_separated(g, &[x].into(), &[y].into(), &VertexSet::new(), &d);
            out.push(TestablePair { x, y, d, separated });
        }
    }
    out
}

/// Subsets of `items` with at most `k` elements, by size then lexicographically.
pub fn subsets_up_to(items: &[VertexId], k: usize) -> Vec<VertexSet> {
    fn rec(items: &[VertexId], size: usize, start: usize, cur: &mut Vec<VertexId>, out: &mut Vec<VertexSet>) {
        if cur.len() == size {
            out.push(cur.iter().copied().collect());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            rec(items, size, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for size in 0..=k.min(items.len()) {
        rec(items, size, 0, &mut Vec::new(), &mut out);
    }
    out
}

/// All `(C, D)` with `|C| ≤ max_c`, `|D| ≤ max_d` making `x` e-separated from
/// `y` with no vertex of `C` descending from `D`, keeping only
/// inclusion-minimal `D` for each `C`. Sorted by `|D|`, then `|C|`, then
/// lexicographically.
pub fn enumerate_witnesses(g: &Dag, x: VertexId, y: VertexId, max_c: usize, max_d: usize) -> Result<Vec<EsepWitness>> {
    for v in [x, y] {
        if v.0 >= g.len() {
            return Err(Error::UnknownVertex(format!("#{}", v.0)));
        }
        if g.is_latent(v) {
            return Err(Error::LatentNotAllowed(g.name(v).to_string()));
        }
    }
    if x == y {
        return Err(Error::Precondition("x and y must differ".into()));
    }
    if g.adjacent(x, y) {
        return Err(Error::Precondition(format!("{} and {} are adjacent", g.name(x), g.name(y))));
    }
    let others: Vec<VertexId> = g.observed().filter(|&v| v != x && v != y).collect();
    let a: VertexSet = [x].into();
    let b: VertexSet = [y].into();
    let strong_for = |d: &VertexSet| !g.any_descends_from(&a, d).expect("valid set");

    let mut found: Vec<EsepWitness> = Vec::new();
    for d in subsets_up_to(&others, max_d) {
        let de_d = g.descendants(&d)?;
        let rest: Vec<VertexId> = others.iter().copied().filter(|v| !d.contains(v)).collect();
        for c in subsets_up_to(&rest, max_c) {
            if c.iter().any(|v| de_d.contains(v)) {
                continue;
            }
            if is_e_separated(g, &a, &b, &c, &d) {
                found.push(EsepWitness { a: a.clone(), b: b.clone(), strong: strong_for(&d), c, d: d.clone() });
            }
        }
    }
    let minimal: Vec<EsepWitness> = found
        .iter()
        .filter(|w| !found.iter().any(|o| o.c == w.c && o.d.len() < w.d.len() && o.d.is_subset(&w.d)))
        .cloned()
        .collect();
    let mut out = minimal;
    out.sort_by(|p, q| {
        (p.d.len(), p.c.len(), p.d.iter().collect::<Vec<_>>(), p.c.iter().collect::<Vec<_>>()).cmp(&(
            q.d.len(),
            q.c.len(),
            q.d.iter().collect::<Vec<_>>(),
            q.c.iter().collect::<Vec<_>>(),
        ))
    });
    Ok(out)
}
