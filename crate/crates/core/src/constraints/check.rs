use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{compatibility, CompatWitness, CompatibilityResult, ConditionalSlice, EsepWitness, SliceForm};
use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::table::{states_of, Assignment, JointTable};

/// Vertex names of a witness, for reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessLabel {
    pub a: Vec<String>,
    pub b: Vec<String>,
    pub c: Vec<String>,
    pub d: Vec<String>,
    pub strong: bool,
}

impl WitnessLabel {
    pub fn new(g: &Dag, w: &EsepWitness) -> Self {
        Self { a: g.names(&w.a), b: g.names(&w.b), c: g.names(&w.c), d: g.names(&w.d), strong: w.strong }
    }
}

/// Verdict for one witness at one value of its deletion set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub witness: WitnessLabel,
    pub d_value: Assignment,
    pub form: SliceForm,
    pub feasible: bool,
    pub margin: f64,
    pub violating_c: Option<Assignment>,
    /// Null conditioning events whose rows were skipped.
    pub skipped: Vec<Assignment>,
    pub marginals: Option<CompatWitness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub records: Vec<CheckRecord>,
    pub feasible: bool,
    /// Largest margin over all records; −1 when there are none.
    pub max_margin: f64,
}

impl CheckReport {
    pub fn infeasible(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| !r.feasible)
    }
}

/// Tests every witness against a table over the observed vertices of `g`, one
/// slice per value of the witness's deletion set.
pub fn check_distribution(g: &Dag, t: &JointTable, witnesses: &[EsepWitness]) -> Result<CheckReport> {
    check_distribution_with(g, t, witnesses, &compatibility)
}

/// [`check_distribution`] with a caller-supplied compatibility test.
pub fn check_distribution_with(
    g: &Dag,
    t: &JointTable,
    witnesses: &[EsepWitness],
    test: &dyn Fn(&ConditionalSlice) -> Result<CompatibilityResult>,
) -> Result<CheckReport> {
    let observed: BTreeSet<&str> = g.observed().map(|v| g.name(v)).collect();
    let in_table: BTreeSet<&str> = t.variables().iter().map(String::as_str).collect();
    if observed != in_table {
        return Err(Error::InvalidTable(format!(
            "table variables {in_table:?} differ from the observed vertices {observed:?}"
        )));
    }
    for v in g.observed() {
        if t.card(g.name(v))? != g.states(v) {
            return Err(Error::InvalidTable(format!(
                "{} has {} states in the graph but {} in the table",
                g.name(v),
                g.states(v),
                t.card(g.name(v))?
            )));
        }
    }

    let mut records = Vec::new();
    for w in witnesses {
        let label = WitnessLabel::new(g, w);
        let form = if w.strong { SliceForm::Strong } else { SliceForm::Weak };
        let d_cards: Vec<usize> = w.d.iter().map(|&v| g.states(v)).collect();
        for d_states in states_of(&d_cards) {
            let d_value = Assignment::from_pairs(label.d.iter().cloned().zip(d_states));
            let slice = ConditionalSlice::from_table(t, form, &label.a, &label.b, &label.c, &d_value)?;
            let result = test(&slice)?;
            records.push(CheckRecord {
                witness: label.clone(),
                d_value,
                form,
                feasible: result.feasible,
                margin: result.margin,
                violating_c: result.violating_c,
                skipped: slice.null_events.clone(),
                marginals: result.witness,
            });
        }
    }
    let feasible = records.iter().all(|r| r.feasible);
    let max_margin = records.iter().map(|r| r.margin).fold(-1.0, f64::max);
    Ok(CheckReport { records, feasible, max_margin })
}
