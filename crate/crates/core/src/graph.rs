//! Directed acyclic graphs with observed and latent vertices.
//!
//! Vertices are addressed by [`VertexId`], an index into insertion order.
//! Every iteration in this module (parents, children, topological order)
//! follows that order so outputs are reproducible.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a vertex inside one particular [`Dag`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexId(pub usize);

impl VertexId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A set of vertices of one graph, ordered by insertion order.
pub type VertexSet = BTreeSet<VertexId>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Visibility {
    Observed,
    Latent,
}

/// Default number of states for observed vertices that carry no `var` declaration.
pub const DEFAULT_STATES: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct Dag {
    names: Vec<String>,
    visibility: Vec<Visibility>,
    states: Vec<usize>,
    parents: Vec<Vec<VertexId>>,
    children: Vec<Vec<VertexId>>,
    lookup: HashMap<String, VertexId>,
}

/// Incremental constructor; [`DagBuilder::build`] enforces all graph invariants.
#[derive(Debug, Default, Clone)]
pub struct DagBuilder {
    names: Vec<String>,
    visibility: Vec<Visibility>,
    states: Vec<usize>,
    edges: Vec<(usize, usize)>,
    lookup: HashMap<String, usize>,
}

impl DagBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a vertex, failing if the name is already taken.
    pub fn vertex(&mut self, name: &str, visibility: Visibility, states: usize) -> Result<VertexId> {
        if self.lookup.contains_key(name) {
            return Err(Error::DuplicateVertex(name.to_string()));
        }
        Ok(self.insert(name, visibility, states))
    }

    /// Returns the existing vertex or adds an observed binary one.
    pub fn ensure(&mut self, name: &str) -> VertexId {
        match self.lookup.get(name) {
            Some(&i) => VertexId(i),
            None => self.insert(name, Visibility::Observed, DEFAULT_STATES),
        }
    }

    fn insert(&mut self, name: &str, visibility: Visibility, states: usize) -> VertexId {
        let id = self.names.len();
        self.names.push(name.to_string());
        self.visibility.push(visibility);
        self.states.push(states);
        self.lookup.insert(name.to_string(), id);
        VertexId(id)
    }

    pub fn set_visibility(&mut self, v: VertexId, visibility: Visibility) {
        self.visibility[v.0] = visibility;
    }

    pub fn set_states(&mut self, v: VertexId, states: usize) {
        self.states[v.0] = states;
    }

    pub fn contains(&self, name: &str) -> bool {
        self.lookup.contains_key(name)
    }

    pub fn edge(&mut self, parent: &str, child: &str) -> &mut Self {
        let p = self.ensure(parent);
        let c = self.ensure(child);
        self.edges.push((p.0, c.0));
        self
    }

    pub fn edge_ids(&mut self, parent: VertexId, child: VertexId) -> &mut Self {
        self.edges.push((parent.0, child.0));
        self
    }

    pub fn build(&self) -> Result<Dag> {
        let n = self.names.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        for &(p, c) in &self.edges {
            if p >= n || c >= n {
                return Err(Error::UnknownVertex(format!("#{}", p.max(c))));
            }
            if p == c {
                return Err(Error::SelfEdge(self.names[p].clone()));
            }
            if !seen.insert((p, c)) {
                return Err(Error::DuplicateEdge(self.names[p].clone(), self.names[c].clone()));
            }
            parents[c].push(VertexId(p));
            children[p].push(VertexId(c));
        }
        for v in 0..n {
            parents[v].sort();
            children[v].sort();
            if self.visibility[v] == Visibility::Latent && !parents[v].is_empty() {
                return Err(Error::LatentWithParent(self.names[v].clone()));
            }
            if self.visibility[v] == Visibility::Observed && self.states[v] < 2 {
                return Err(Error::InvalidModel(format!("{} must have at least 2 states", self.names[v])));
            }
        }
        let dag = Dag {
            names: self.names.clone(),
            visibility: self.visibility.clone(),
            states: self.states.clone(),
            parents,
            children,
            lookup: self.lookup.iter().map(|(k, &v)| (k.clone(), VertexId(v))).collect(),
        };
        dag.check_acyclic()?;
        Ok(dag)
    }
}

impl Dag {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.names.len()).map(VertexId)
    }

    pub fn all(&self) -> VertexSet {
        self.vertices().collect()
    }

    pub fn observed(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices().filter(|&v| self.is_observed(v))
    }

    pub fn latents(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices().filter(|&v| self.is_latent(v))
    }

    pub fn name(&self, v: VertexId) -> &str {
        &self.names[v.0]
    }

    pub fn names(&self, set: &VertexSet) -> Vec<String> {
        set.iter().map(|&v| self.names[v.0].clone()).collect()
    }

    pub fn id(&self, name: &str) -> Result<VertexId> {
        self.lookup.get(name).copied().ok_or_else(|| Error::UnknownVertex(name.to_string()))
    }

    pub fn ids<S: AsRef<str>>(&self, names: &[S]) -> Result<VertexSet> {
        names.iter().map(|n| self.id(n.as_ref())).collect()
    }

    pub fn visibility(&self, v: VertexId) -> Visibility {
        self.visibility[v.0]
    }

    pub fn is_latent(&self, v: VertexId) -> bool {
        self.visibility[v.0] == Visibility::Latent
    }

    pub fn is_observed(&self, v: VertexId) -> bool {
        self.visibility[v.0] == Visibility::Observed
    }

    /// Declared number of states. Latent vertices carry a placeholder; their
    /// cardinality is chosen by whoever builds a model on the graph.
    pub fn states(&self, v: VertexId) -> usize {
        self.states[v.0]
    }

    pub fn parents(&self, v: VertexId) -> &[VertexId] {
        &self.parents[v.0]
    }

    pub fn children(&self, v: VertexId) -> &[VertexId] {
        &self.children[v.0]
    }

    pub fn has_edge(&self, parent: VertexId, child: VertexId) -> bool {
        self.children[parent.0].binary_search(&child).is_ok()
    }

    pub fn adjacent(&self, a: VertexId, b: VertexId) -> bool {
        self.has_edge(a, b) || self.has_edge(b, a)
    }

    /// Latent parents common to both vertices.
    pub fn shared_latent_parents(&self, a: VertexId, b: VertexId) -> Vec<VertexId> {
        self.parents(a).iter().copied().filter(|&u| self.is_latent(u) && self.parents(b).contains(&u)).collect()
    }

    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.vertices().flat_map(move |p| self.children[p.0].iter().map(move |&c| (p, c)))
    }

    pub fn edge_count(&self) -> usize {
        self.children.iter().map(Vec::len).sum()
    }

    fn check(&self, set: &VertexSet) -> Result<()> {
        match set.iter().find(|v| v.0 >= self.len()) {
            Some(v) => Err(Error::UnknownVertex(format!("#{}", v.0))),
            None => Ok(()),
        }
    }

    fn check_acyclic(&self) -> Result<()> {
        let order = self.kahn();
        if order.len() == self.len() {
            return Ok(());
        }
        let placed: BTreeSet<_> = order.into_iter().collect();
        let stuck = self.vertices().find(|v| !placed.contains(v)).expect("cycle vertex");
        Err(Error::Cycle(self.name(stuck).to_string()))
    }

    fn kahn(&self) -> Vec<VertexId> {
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        // BTreeSet as a priority queue keeps ties in insertion order.
        let mut ready: BTreeSet<VertexId> = self.vertices().filter(|v| indegree[v.0] == 0).collect();
        let mut order = Vec::with_capacity(self.len());
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &c in &self.children[v.0] {
                indegree[c.0] -= 1;
                if indegree[c.0] == 0 {
                    ready.insert(c);
                }
            }
        }
        order
    }

    /// Topological order, ties broken by insertion order.
    pub fn topological_order(&self) -> Vec<VertexId> {
        self.kahn()
    }

    /// Reflexive-transitive closure along edges into `s`.
    pub fn ancestors(&self, s: &VertexSet) -> Result<VertexSet> {
        self.check(s)?;
        Ok(self.closure(s, &self.parents))
    }

    /// Reflexive-transitive closure along edges out of `s`.
    pub fn descendants(&self, s: &VertexSet) -> Result<VertexSet> {
        self.check(s)?;
        Ok(self.closure(s, &self.children))
    }

    fn closure(&self, s: &VertexSet, step: &[Vec<VertexId>]) -> VertexSet {
        let mut out = s.clone();
        let mut queue: VecDeque<VertexId> = s.iter().copied().collect();
        while let Some(v) = queue.pop_front() {
            for &w in &step[v.0] {
                if out.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        out
    }

    /// True when some vertex of `targets` is a descendant (reflexively) of some vertex of `sources`.
    pub fn any_descends_from(&self, targets: &VertexSet, sources: &VertexSet) -> Result<bool> {
        let de = self.descendants(sources)?;
        Ok(targets.iter().any(|v| de.contains(v)))
    }

    /// Subgraph on `keep` with edges E ∩ (keep × keep). Vertex ids are renumbered;
    /// relative order and names are preserved.
    pub fn induced_subgraph(&self, keep: &VertexSet) -> Result<Dag> {
        self.check(keep)?;
        let mut b = DagBuilder::new();
        for &v in keep {
            b.vertex(self.name(v), self.visibility(v), self.states(v))?;
        }
        for (p, c) in self.edges() {
            if keep.contains(&p) && keep.contains(&c) {
                b.edge(self.name(p), self.name(c));
            }
        }
        b.build()
    }

    fn filter_edges(&self, keep_edge: impl Fn(VertexId, VertexId) -> bool) -> Dag {
        let mut g = self.clone();
        for v in 0..g.len() {
            g.children[v].retain(|&c| keep_edge(VertexId(v), c));
            g.parents[v].retain(|&p| keep_edge(p, VertexId(v)));
        }
        g
    }

    /// Drops every edge whose tail lies in `d`.
    pub fn remove_outgoing(&self, d: &VertexSet) -> Result<Dag> {
        self.check(d)?;
        if let Some(&v) = d.iter().find(|&&v| self.is_latent(v)) {
            return Err(Error::LatentNotAllowed(self.name(v).to_string()));
        }
        Ok(self.filter_edges(|p, _| !d.contains(&p)))
    }

    /// Drops every edge whose head lies in `x`.
    pub fn remove_incoming(&self, x: &VertexSet) -> Result<Dag> {
        self.check(x)?;
        Ok(self.filter_edges(|_, c| !x.contains(&c)))
    }

    /// Copy of the graph without the single edge `parent -> child` (a no-op if absent).
    pub fn without_edge(&self, parent: VertexId, child: VertexId) -> Dag {
        self.filter_edges(|p, c| !(p == parent && c == child))
    }

    /// Copy of the graph with a different state count for observed vertex `v`.
    pub fn with_states(&self, v: VertexId, states: usize) -> Result<Dag> {
        self.check(&[v].into())?;
        if self.is_latent(v) {
            return Err(Error::LatentNotAllowed(self.name(v).to_string()));
        }
        if states < 2 {
            return Err(Error::InvalidQuery(format!("{} needs at least 2 states", self.name(v))));
        }
        let mut g = self.clone();
        g.states[v.0] = states;
        Ok(g)
    }

    /// Renders the graph back into the text format accepted by [`crate::parse::parse_graph`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in self.vertices() {
            if self.is_latent(v) {
                out.push_str(&format!("latent {}\n", self.name(v)));
            } else {
                out.push_str(&format!("var {} {}\n", self.name(v), self.states(v)));
            }
        }
        for (p, c) in self.edges() {
            out.push_str(&format!("{} -> {}\n", self.name(p), self.name(c)));
        }
        out
    }
}

impl fmt::Display for Dag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}
