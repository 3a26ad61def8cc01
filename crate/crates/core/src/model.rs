//! Discrete models that factorize over a DAG, one conditional table per vertex.

use crate::error::{Error, Result};
use crate::graph::{Dag, VertexId, VertexSet};
use crate::table::{states_of, Assignment, JointTable, NULL_EVENT};

/// Default cap on the number of entries of a full joint table.
pub const JOINT_CAP: usize = 10_000_000;
const ROW_TOLERANCE: f64 = 1e-12;

/// Conditional probability table f(child | parents). Rows are indexed by the
/// parents' joint state (row-major, parents in graph order).
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    child: VertexId,
    parents: Vec<VertexId>,
    child_states: usize,
    parent_states: Vec<usize>,
    rows: Vec<f64>,
}

impl Cpt {
    pub fn new(
        child: VertexId,
        parents: Vec<VertexId>,
        child_states: usize,
        parent_states: Vec<usize>,
        rows: Vec<f64>,
    ) -> Result<Self> {
        if parents.len() != parent_states.len() {
            return Err(Error::InvalidModel("one state count per parent required".into()));
        }
        let n_rows: usize = parent_states.iter().product();
        if rows.len() != n_rows * child_states {
            return Err(Error::InvalidModel(format!(
                "table for vertex #{} has {} entries, expected {}",
                child.0,
                rows.len(),
                n_rows * child_states
            )));
        }
        for (r, row) in rows.chunks(child_states.max(1)).enumerate() {
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(Error::InvalidModel(format!("row {r} of #{} has an invalid entry", child.0)));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::InvalidModel(format!("row {r} of #{} sums to {sum}", child.0)));
            }
        }
        Ok(Self { child, parents, child_states, parent_states, rows })
    }

    pub fn child(&self) -> VertexId {
        self.child
    }

    pub fn parents(&self) -> &[VertexId] {
        &self.parents
    }

    pub fn child_states(&self) -> usize {
        self.child_states
    }

    pub fn row_index(&self, parent_values: &[usize]) -> usize {
        parent_values.iter().zip(&self.parent_states).fold(0, |acc, (&s, &k)| acc * k + s)
    }

    pub fn row(&self, parent_values: &[usize]) -> &[f64] {
        let r = self.row_index(parent_values);
        &self.rows[r * self.child_states..(r + 1) * self.child_states]
    }

    pub fn prob(&self, child_value: usize, parent_values: &[usize]) -> f64 {
        self.row(parent_values)[child_value]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.rows.chunks(self.child_states)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModel {
    graph: Dag,
    states: Vec<usize>,
    cpts: Vec<Cpt>,
}

impl DiscreteModel {
    /// `states` covers every vertex (latent ones too); `cpts[i]` belongs to vertex `i`.
    pub fn new(graph: Dag, states: Vec<usize>, cpts: Vec<Cpt>) -> Result<Self> {
        if states.len() != graph.len() || cpts.len() != graph.len() {
            return Err(Error::InvalidModel("one state count and one table per vertex required".into()));
        }
        for v in graph.vertices() {
            let k = states[v.0];
            if k < 2 {
                return Err(Error::InvalidModel(format!("{} needs at least 2 states", graph.name(v))));
            }
            if graph.is_observed(v) && k != graph.states(v) {
                return Err(Error::InvalidModel(format!(
                    "{} declared with {} states in the graph, {k} in the model",
                    graph.name(v),
                    graph.states(v)
                )));
            }
            let cpt = &cpts[v.0];
            if cpt.child != v || cpt.parents != graph.parents(v) {
                return Err(Error::InvalidModel(format!(
                    "table for {} does not match its parents in the graph",
                    graph.name(v)
                )));
            }
            let expected: Vec<usize> = cpt.parents.iter().map(|p| states[p.0]).collect();
            if cpt.child_states != k || cpt.parent_states != expected {
                return Err(Error::InvalidModel(format!("table for {} has the wrong shape", graph.name(v))));
            }
        }
        Ok(Self { graph, states, cpts })
    }

    /// Builds a model from `f(vertex, parent_values) -> distribution over the vertex`.
    pub fn from_fn(graph: Dag, states: Vec<usize>, mut f: impl FnMut(VertexId, &[usize]) -> Vec<f64>) -> Result<Self> {
        let mut cpts = Vec::with_capacity(graph.len());
        for v in graph.vertices() {
            let parents = graph.parents(v).to_vec();
            let parent_states: Vec<usize> = parents.iter().map(|p| states[p.0]).collect();
            let mut rows = Vec::new();
            for pv in states_of(&parent_states) {
                let row = f(v, &pv);
                if row.len() != states[v.0] {
                    return Err(Error::InvalidModel(format!(
                        "distribution for {} has {} entries",
                        graph.name(v),
                        row.len()
                    )));
                }
                rows.extend(row);
            }
            cpts.push(Cpt::new(v, parents, states[v.0], parent_states, rows)?);
        }
        Self::new(graph, states, cpts)
    }

    pub fn graph(&self) -> &Dag {
        &self.graph
    }

    pub fn states(&self, v: VertexId) -> usize {
        self.states[v.0]
    }

    pub fn state_counts(&self) -> &[usize] {
        &self.states
    }

    pub fn cpt(&self, v: VertexId) -> &Cpt {
        &self.cpts[v.0]
    }

    fn resolve(&self, a: &Assignment, allow_latent: bool) -> Result<Vec<(VertexId, usize)>> {
        a.iter()
            .map(|(name, value)| {
                let v = self.graph.id(name)?;
                if !allow_latent && self.graph.is_latent(v) {
                    return Err(Error::LatentNotAllowed(name.to_string()));
                }
                if value >= self.states[v.0] {
                    return Err(Error::InvalidAssignment(format!(
                        "{name}={value} exceeds {} states",
                        self.states[v.0]
                    )));
                }
                Ok((v, value))
            })
            .collect()
    }

    /// Exact joint over all vertices with the default size cap.
    pub fn joint(&self) -> Result<JointTable> {
        self.joint_with_cap(JOINT_CAP)
    }

    /// Product of all conditional tables, enumerated over every joint state.
    pub fn joint_with_cap(&self, cap: usize) -> Result<JointTable> {
        let entries: u128 = self.states.iter().map(|&k| k as u128).product();
        if entries > cap as u128 {
            return Err(Error::SizeCap { entries, cap });
        }
        let names: Vec<String> = self.graph.vertices().map(|v| self.graph.name(v).to_string()).collect();
        let mut parent_buf = Vec::new();
        let probs = states_of(&self.states)
            .map(|s| {
                let mut p = 1.0;
                for cpt in &self.cpts {
                    parent_buf.clear();
                    parent_buf.extend(cpt.parents.iter().map(|q| s[q.0]));
                    p *= cpt.prob(s[cpt.child.0], &parent_buf);
                    if p == 0.0 {
                        break;
                    }
                }
                p
            })
            .collect();
        JointTable::new(names, self.states.clone(), probs)
    }

    /// Joint over the observed vertices, latent vertices summed out.
    pub fn observed_margin(&self) -> Result<JointTable> {
        let names: Vec<&str> = self.graph.observed().map(|v| self.graph.name(v)).collect();
        self.joint()?.marginalize(&names)
    }

    /// Model under `do(assignment)`: edges into intervened vertices are removed
    /// and their tables become point masses; every other table is unchanged.
    pub fn intervene(&self, action: &Assignment) -> Result<DiscreteModel> {
        let fixed = self.resolve(action, false)?;
        let targets: VertexSet = fixed.iter().map(|&(v, _)| v).collect();
        let graph = self.graph.remove_incoming(&targets)?;
        let mut cpts = self.cpts.clone();
        for &(v, value) in &fixed {
            let k = self.states[v.0];
            let mut row = vec![0.0; k];
            row[value] = 1.0;
            cpts[v.0] = Cpt::new(v, Vec::new(), k, Vec::new(), row)?;
        }
        DiscreteModel::new(graph, self.states.clone(), cpts)
    }

    /// P(outcome | given) in the observed margin of the model under `do(action)`.
    pub fn interventional_query(&self, outcome: &Assignment, action: &Assignment, given: &Assignment) -> Result<f64> {
        let t = self.intervene(action)?.observed_margin()?;
        let denom = t.prob(given)?;
        if denom <= NULL_EVENT {
            return Err(Error::ZeroConditioningEvent { probability: denom });
        }
        t.conditional(outcome, given)
    }

    /// Model in which every vertex treats its parents in `d` as fixed at the
    /// values in `d`. It factorizes over the graph with edges out of `d`
    /// removed, and agrees with this model on every joint state consistent
    /// with `d`. Tables of the vertices in `d` themselves are unchanged.
    pub fn fix_conditioning(&self, d: &Assignment) -> Result<DiscreteModel> {
        let fixed = self.resolve(d, false)?;
        let dset: VertexSet = fixed.iter().map(|&(v, _)| v).collect();
        let graph = self.graph.remove_outgoing(&dset)?;
        let value_of = |v: VertexId| fixed.iter().find(|&&(w, _)| w == v).map(|&(_, s)| s);
        let mut cpts = Vec::with_capacity(self.cpts.len());
        for old in &self.cpts {
            let kept: Vec<VertexId> = old.parents.iter().copied().filter(|p| !dset.contains(p)).collect();
            let kept_states: Vec<usize> = kept.iter().map(|p| self.states[p.0]).collect();
            let mut rows = Vec::with_capacity(old.rows.len());
            let mut full = vec![0usize; old.parents.len()];
            for sub in states_of(&kept_states) {
                let mut it = sub.iter();
                for (slot, &p) in full.iter_mut().zip(&old.parents) {
                    *slot = match value_of(p) {
                        Some(s) => s,
                        None => *it.next().expect("kept parent"),
                    };
                }
                rows.extend_from_slice(old.row(&full));
            }
            cpts.push(Cpt::new(old.child, kept, old.child_states, kept_states, rows)?);
        }
        DiscreteModel::new(graph, self.states.clone(), cpts)
    }
}
