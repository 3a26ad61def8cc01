//! Inequality constraints implied by e-separation.
//!
//! If `A` is e-separated from `B` by `C` after deletion of `D`, and no vertex
//! of `C` descends from `D`, then for each fixed `D = d` the slice
//! `p(a, b, d | c)` must be compatible with a distribution under which
//! `A ⊥ B | C`. When additionally no vertex of `A` descends from `D`, the
//! stronger slice `p(b, d | a, c)` must be compatible too.
//!
//! Compatibility is decided per value of `c`. A compatible joint must put at
//! least `p(a, b, d | c)` on each `(a, b)` cell while its `(A, B)` margin
//! factorizes, so the weak form holds iff some product distribution
//! `Q_A ⊗ Q_B` dominates the slice entrywise; any such product yields a
//! compatible joint by placing the excess mass on `D ≠ d`. In the strong form
//! the `A` margin is pinned, leaving a common `B` margin `r(b | c)` that must
//! dominate `p(b, d | a, c)` for every `a`; that exists iff
//! `Σ_b max_a p(b, d | a, c) ≤ 1`.
//!
//! Assembling per-`c` solutions gives a single compatible distribution: the
//! construction leaves `P(c)` untouched, so the per-`c` pieces glue together.

mod check;
mod discovery;
pub mod solver;

pub use check::{check_distribution, check_distribution_with, CheckRecord, CheckReport, WitnessLabel};
pub use discovery::{enumerate_witnesses, subsets_up_to, testable_pairs, EsepWitness, TestablePair};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{states_of, Assignment, JointTable, NULL_EVENT};

/// Margins at or below this count as feasible.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-7;
const SLICE_TOLERANCE: f64 = 1e-9;

/// Conditional table p(x, y | z), indexed `[z][x][y]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IvTable {
    z_states: usize,
    x_states: usize,
    y_states: usize,
    values: Vec<f64>,
}

impl IvTable {
    pub fn new(z_states: usize, x_states: usize, y_states: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != z_states * x_states * y_states {
            return Err(Error::InvalidTable("p(x, y | z) has the wrong number of entries".into()));
        }
        if values.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidTable("p(x, y | z) has an invalid entry".into()));
        }
        let block = x_states * y_states;
        for (z, row) in values.chunks(block).enumerate() {
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > SLICE_TOLERANCE {
                return Err(Error::InvalidTable(format!("p(x, y | z={z}) sums to {total}")));
            }
        }
        Ok(Self { z_states, x_states, y_states, values })
    }

    /// Conditions a joint table on the instrument.
    pub fn from_joint(t: &JointTable, z: &str, x: &str, y: &str) -> Result<Self> {
        let m = t.marginalize(&[z, x, y])?;
        let (nz, nx, ny) = (t.card(z)?, t.card(x)?, t.card(y)?);
        let mut values = vec![0.0; nz * nx * ny];
        for zi in 0..nz {
            let cond = m.condition(&Assignment::new().with(z, zi))?;
            for xi in 0..nx {
                for yi in 0..ny {
                    let a = Assignment::new().with(x, xi).with(y, yi);
                    values[(zi * nx + xi) * ny + yi] = cond.prob(&a)?;
                }
            }
        }
        Self::new(nz, nx, ny, values)
    }

    pub fn z_states(&self) -> usize {
        self.z_states
    }

    pub fn x_states(&self) -> usize {
        self.x_states
    }

    pub fn y_states(&self) -> usize {
        self.y_states
    }

    pub fn get(&self, z: usize, x: usize, y: usize) -> f64 {
        self.values[(z * self.x_states + x) * self.y_states + y]
    }

    /// Σ_y max_z p(x, y | z) for one treatment value.
    pub fn score_at(&self, x: usize) -> f64 {
        (0..self.y_states).map(|y| (0..self.z_states).map(|z| self.get(z, x, y)).fold(0.0, f64::max)).sum()
    }
}

/// max_x Σ_y max_z p(x, y | z); the instrumental model requires at most 1.
pub fn instrumental_inequality_score(p: &IvTable) -> f64 {
    (0..p.x_states).map(|x| p.score_at(x)).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SliceForm {
    /// Values p(a, b, d | c).
    Weak,
    /// Values p(b, d | a, c).
    Strong,
}

/// Probabilities for one fixed value of `D`, indexed `[c][a][b]`. Joint states
/// of multi-variable parts are flattened row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalSlice {
    pub form: SliceForm,
    pub a_vars: Vec<String>,
    pub b_vars: Vec<String>,
    pub c_vars: Vec<String>,
    pub c_cards: Vec<usize>,
    pub fixed_d: Assignment,
    a_states: usize,
    b_states: usize,
    values: Vec<f64>,
    /// Values of `C` (or of `(A, C)` in the strong form) with null probability,
    /// whose rows were left at zero.
    pub null_events: Vec<Assignment>,
}

impl ConditionalSlice {
    /// A slice with unnamed parts, `c_states` values of `C`.
    pub fn from_values(
        form: SliceForm,
        a_states: usize,
        b_states: usize,
        c_states: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        let slice = Self {
            form,
            a_vars: vec!["A".into()],
            b_vars: vec!["B".into()],
            c_vars: if c_states > 1 { vec!["C".into()] } else { Vec::new() },
            c_cards: if c_states > 1 { vec![c_states] } else { Vec::new() },
            fixed_d: Assignment::new(),
            a_states,
            b_states,
            values,
            null_events: Vec::new(),
        };
        slice.validate()?;
        Ok(slice)
    }

    pub fn validate(&self) -> Result<()> {
        let nc = self.c_states();
        if self.a_states == 0 || self.b_states == 0 {
            return Err(Error::MalformedSlice("empty state space".into()));
        }
        if self.values.len() != nc * self.a_states * self.b_states {
            return Err(Error::MalformedSlice(format!(
                "expected {} values, got {}",
                nc * self.a_states * self.b_states,
                self.values.len()
            )));
        }
        if let Some(p) = self.values.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::MalformedSlice(format!("invalid probability {p}")));
        }
        for c in 0..nc {
            match self.form {
                SliceForm::Weak => {
                    let total: f64 = self.block(c).iter().sum();
                    if total > 1.0 + SLICE_TOLERANCE {
                        return Err(Error::MalformedSlice(format!("mass {total} exceeds 1 at c={c}")));
                    }
                }
                SliceForm::Strong => {
                    for a in 0..self.a_states {
                        let total: f64 = self.row(c, a).iter().sum();
                        if total > 1.0 + SLICE_TOLERANCE {
                            return Err(Error::MalformedSlice(format!("mass {total} exceeds 1 at a={a}, c={c}")));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Assembles the slice for `D = d` from a joint table over at least A ∪ B ∪ C ∪ D.
    pub fn from_table<S: AsRef<str>>(
        t: &JointTable,
        form: SliceForm,
        a: &[S],
        b: &[S],
        c: &[S],
        d: &Assignment,
    ) -> Result<Self> {
        let owned = |s: &[S]| s.iter().map(|x| x.as_ref().to_string()).collect::<Vec<_>>();
        let (a_vars, b_vars, c_vars) = (owned(a), owned(b), owned(c));
        let d_vars: Vec<String> = d.keys().map(str::to_string).collect();
        let mut all: Vec<&str> = Vec::new();
        for v in a_vars.iter().chain(&b_vars).chain(&c_vars).chain(&d_vars) {
            if all.contains(&v.as_str()) {
                return Err(Error::MalformedSlice(format!("{v} appears in two parts")));
            }
            all.push(v);
        }
        if a_vars.is_empty() || b_vars.is_empty() {
            return Err(Error::MalformedSlice("A and B must be nonempty".into()));
        }
        let m = t.marginalize(&all)?;
        // validates ranges of the fixed values
        m.prob(d)?;

        let positions = |vars: &[String]| -> Result<Vec<usize>> { vars.iter().map(|v| m.position(v)).collect() };
        let (pa, pb, pc) = (positions(&a_vars)?, positions(&b_vars)?, positions(&c_vars)?);
        let fixed: Vec<(usize, usize)> = d.iter().map(|(k, v)| Ok((m.position(k)?, v))).collect::<Result<_>>()?;
        let cards = m.cards().to_vec();
        let size = |ps: &[usize]| ps.iter().map(|&p| cards[p]).product::<usize>();
        let flat = |s: &[usize], ps: &[usize]| ps.iter().fold(0, |acc, &p| acc * cards[p] + s[p]);
        let (na, nb, nc) = (size(&pa), size(&pb), size(&pc));
        let c_cards: Vec<usize> = pc.iter().map(|&p| cards[p]).collect();

        let mut cell = vec![0.0; nc * na * nb];
        let mut p_c = vec![0.0; nc];
        let mut p_ac = vec![0.0; nc * na];
        for (s, p) in m.iter() {
            let (ia, ib, ic) = (flat(&s, &pa), flat(&s, &pb), flat(&s, &pc));
            p_c[ic] += p;
            p_ac[ic * na + ia] += p;
            if fixed.iter().all(|&(pos, v)| s[pos] == v) {
                cell[(ic * na + ia) * nb + ib] += p;
            }
        }

        let c_states: Vec<Vec<usize>> = states_of(&c_cards).collect();
        let a_cards: Vec<usize> = pa.iter().map(|&p| cards[p]).collect();
        let a_states: Vec<Vec<usize>> = states_of(&a_cards).collect();
        let label = |vars: &[String], states: &[usize]| {
            Assignment::from_pairs(vars.iter().cloned().zip(states.iter().copied()))
        };
        let mut null_events = Vec::new();
        let mut values = vec![0.0; nc * na * nb];
        for ic in 0..nc {
            if p_c[ic] <= NULL_EVENT {
                null_events.push(label(&c_vars, &c_states[ic]));
                continue;
            }
            for ia in 0..na {
                let denom = match form {
                    SliceForm::Weak => p_c[ic],
                    SliceForm::Strong => p_ac[ic * na + ia],
                };
                if denom <= NULL_EVENT {
                    let mut event = label(&c_vars, &c_states[ic]);
                    for (k, v) in label(&a_vars, &a_states[ia]).iter() {
                        event.insert(k, v);
                    }
                    null_events.push(event);
                    continue;
                }
                for ib in 0..nb {
                    let i = (ic * na + ia) * nb + ib;
                    values[i] = cell[i] / denom;
                }
            }
        }
        let slice = Self {
            form,
            a_vars,
            b_vars,
            c_vars,
            c_cards,
            fixed_d: d.clone(),
            a_states: na,
            b_states: nb,
            values,
            null_events,
        };
        slice.validate()?;
        Ok(slice)
    }

    pub fn a_states(&self) -> usize {
        self.a_states
    }

    pub fn b_states(&self) -> usize {
        self.b_states
    }

    pub fn c_states(&self) -> usize {
        self.c_cards.iter().product()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, c: usize, a: usize, b: usize) -> f64 {
        self.values[(c * self.a_states + a) * self.b_states + b]
    }

    /// The `A × B` block for one value of `C`.
    pub fn block(&self, c: usize) -> &[f64] {
        let n = self.a_states * self.b_states;
        &self.values[c * n..(c + 1) * n]
    }

    fn row(&self, c: usize, a: usize) -> &[f64] {
        let start = (c * self.a_states + a) * self.b_states;
        &self.values[start..start + self.b_states]
    }

    /// The value of `C` with flat index `c`, as an assignment.
    pub fn c_assignment(&self, c: usize) -> Assignment {
        let states = states_of(&self.c_cards).nth(c).unwrap_or_default();
        Assignment::from_pairs(self.c_vars.iter().cloned().zip(states))
    }
}

/// Evidence of compatibility, one entry per value of `C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CompatWitness {
    /// Dominating product distribution `(Q_A, Q_B)` for each `c`.
    Product { a: Vec<Vec<f64>>, b: Vec<Vec<f64>> },
    /// Common `B` margin `r(b | c)` for each `c`.
    Marginal { b: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityResult {
    pub feasible: bool,
    /// Largest per-`c` margin; at most [`FEASIBILITY_TOLERANCE`] iff feasible.
    pub margin: f64,
    pub margins: Vec<f64>,
    pub witness: Option<CompatWitness>,
    pub violating_c: Option<Assignment>,
}

fn summarize(slice: &ConditionalSlice, margins: Vec<f64>, witness: CompatWitness) -> CompatibilityResult {
    let (worst, margin) =
        margins
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, m)| if m > acc.1 { (i, m) } else { acc });
    let margin = if margins.is_empty() { -1.0 } else { margin };
    let feasible = margin <= FEASIBILITY_TOLERANCE;
    CompatibilityResult {
        feasible,
        margin,
        margins,
        witness: feasible.then_some(witness),
        violating_c: (!feasible).then(|| slice.c_assignment(worst)),
    }
}

/// Spreads the unused mass of a sub-probability vector uniformly.
fn fill_slack(mut v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    if total < 1.0 && !v.is_empty() {
        let extra = (1.0 - total) / v.len() as f64;
        v.iter_mut().for_each(|x| *x += extra);
    }
    v
}

/// Strong form: feasible iff Σ_b max_a p(b, d | a, c) ≤ 1 for every `c`.
pub fn strong_compatibility(slice: &ConditionalSlice) -> Result<CompatibilityResult> {
    if slice.form != SliceForm::Strong {
        return Err(Error::MalformedSlice("strong compatibility needs p(b, d | a, c)".into()));
    }
    slice.validate()?;
    let mut margins = Vec::new();
    let mut margins_b = Vec::new();
    for c in 0..slice.c_states() {
        let r: Vec<f64> =
            (0..slice.b_states).map(|b| (0..slice.a_states).map(|a| slice.get(c, a, b)).fold(0.0, f64::max)).collect();
        margins.push(r.iter().sum::<f64>() - 1.0);
        margins_b.push(fill_slack(r));
    }
    Ok(summarize(slice, margins, CompatWitness::Marginal { b: margins_b }))
}

/// Weak form: feasible iff, for every `c`, some product distribution dominates
/// the block `p(·, ·, d | c)`. The per-`c` margin is `min_u g(u) − 1`.
pub fn weak_compatibility(slice: &ConditionalSlice) -> Result<CompatibilityResult> {
    if slice.form != SliceForm::Weak {
        return Err(Error::MalformedSlice("weak compatibility needs p(a, b, d | c)".into()));
    }
    slice.validate()?;
    let (na, nb) = (slice.a_states, slice.b_states);
    let mut margins = Vec::new();
    let mut qa = Vec::new();
    let mut qb = Vec::new();
    for c in 0..slice.c_states() {
        let block = slice.block(c);
        let fit = solver::min_dominating_mass(block, na, nb)?;
        margins.push(fit.value - 1.0);
        let r: Vec<f64> = (0..nb)
            .map(|b| {
                (0..na)
                    .filter(|&a| block[a * nb + b] > 0.0)
                    .map(|a| block[a * nb + b] / fit.weights[a])
                    .fold(0.0, f64::max)
            })
            .collect();
        qa.push(fit.weights);
        qb.push(fill_slack(r));
    }
    Ok(summarize(slice, margins, CompatWitness::Product { a: qa, b: qb }))
}

/// Dispatches on the slice form.
pub fn compatibility(slice: &ConditionalSlice) -> Result<CompatibilityResult> {
    match slice.form {
        SliceForm::Weak => weak_compatibility(slice),
        SliceForm::Strong => strong_compatibility(slice),
    }
}
