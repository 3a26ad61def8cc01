//! Bounds on `p(y | do(x, d), c)` and on controlled direct effects of `X` on `Y`.
//!
//! Requirements on the graph, with the edge `X -> Y` removed: `X` is
//! e-separated from `Y` by `C` after deletion of `D`, and no vertex of `C`
//! descends from `D`. Then, writing `s = 1 − p(d | c)`,
//!
//! ```text
//! L = max{0, p(x, y, d | c) / (p(x, d | c) + s)}
//! U = min{(p(x, y, d | c) + s) / (p(x, d | c) + s), 1}
//! ```
//!
//! and, when `X` is not a descendant of `D` either,
//!
//! ```text
//! L = p(y, d | x, c)
//! U = p(y, d | x, c) + 1 − p(d | x, c)
//! ```
//!
//! The second pair is never wider than the first, since
//! `p(x | c) ≤ p(x, d | c) + 1 − p(d | c)`.

use serde::{Deserialize, Serialize};

use crate::constraints::{enumerate_witnesses, IvTable};
use crate::error::{Error, Result};
use crate::graph::{Dag, VertexSet};
use crate::separation::is_e_separated;
use crate::table::{states_of, Assignment, JointTable, NULL_EVENT};

/// An intersection whose lower end exceeds its upper end by more than this
/// falsifies the graph.
pub const EMPTY_INTERSECTION_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundVariant {
    General,
    Strengthened,
    /// Strengthened when admissible, otherwise general.
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsQuery {
    pub x: (String, usize),
    pub y: (String, usize),
    pub d: Assignment,
    pub c: Assignment,
    pub variant: BoundVariant,
}

impl BoundsQuery {
    pub fn new(x: (&str, usize), y: (&str, usize), d: Assignment, c: Assignment) -> Self {
        Self { x: (x.0.to_string(), x.1), y: (y.0.to_string(), y.1), d, c, variant: BoundVariant::Auto }
    }

    pub fn with_variant(mut self, variant: BoundVariant) -> Self {
        self.variant = variant;
        self
    }

    fn at(&self, x: usize, y: usize) -> Self {
        Self { x: (self.x.0.clone(), x), y: (self.y.0.clone(), y), ..self.clone() }
    }
}

/// Which formulas a query admits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Admissibility {
    pub edge_present: bool,
    pub strengthened: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsResult {
    pub lower: f64,
    pub upper: f64,
    pub variant: BoundVariant,
    /// Conditional probabilities the formula consumed, by name.
    pub inputs: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcdeResult {
    pub lower: f64,
    pub upper: f64,
    pub includes_zero: bool,
}

impl AcdeResult {
    fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper, includes_zero: lower <= 0.0 && 0.0 <= upper }
    }
}

/// Checks the graph-side conditions for bounding `p(y | do(x, d), c)`.
///
/// The edge `X -> Y` need not be present: without it the model is a special
/// case of the model with it, and the bounds still hold.
pub fn check_preconditions(g: &Dag, x: &str, y: &str, d: &Assignment, c: &Assignment) -> Result<Admissibility> {
    let (xi, yi) = (g.id(x)?, g.id(y)?);
    let dset = g.ids(&d.keys().collect::<Vec<_>>())?;
    let cset = g.ids(&c.keys().collect::<Vec<_>>())?;
    let xs: VertexSet = [xi].into();
    let ys: VertexSet = [yi].into();
    crate::separation::SeparationQuery::new(xs.clone(), ys.clone(), cset.clone(), dset.clone()).validate(g)?;
    for (name, value) in d.iter().chain(c.iter()).chain([(x, 0), (y, 0)]) {
        let v = g.id(name)?;
        if value >= g.states(v) {
            return Err(Error::InvalidAssignment(format!("{name}={value} exceeds {} states", g.states(v))));
        }
    }
    if g.any_descends_from(&xs, &ys)? {
        return Err(Error::Precondition(format!("{y} is an ancestor of {x}")));
    }
    if g.any_descends_from(&cset, &dset)? {
        return Err(Error::Precondition("a vertex of C descends from a vertex of D".into()));
    }
    let cut = g.without_edge(xi, yi);
    if !is_e_separated(&cut, &xs, &ys, &cset, &dset) {
        return Err(Error::Precondition(format!(
            "without {x} -> {y}, {x} is not e-separated from {y} given C after deleting D"
        )));
    }
    Ok(Admissibility { edge_present: g.has_edge(xi, yi), strengthened: !g.any_descends_from(&xs, &dset)? })
}

fn cond(t: &JointTable, event: &Assignment, given: &Assignment) -> Result<f64> {
    t.conditional(event, given)
}

fn general(t: &JointTable, q: &BoundsQuery) -> Result<BoundsResult> {
    let x = Assignment::new().with(&q.x.0, q.x.1);
    let xy = x.clone().with(&q.y.0, q.y.1);
    let xd = x.merge(&q.d).expect("disjoint");
    let xyd = xy.merge(&q.d).expect("disjoint");
    let p_xyd = cond(t, &xyd, &q.c)?;
    let p_xd = cond(t, &xd, &q.c)?;
    let p_d = cond(t, &q.d, &q.c)?;
    let slack = 1.0 - p_d;
    let denom = p_xd + slack;
    if denom <= NULL_EVENT {
        return Err(Error::Precondition(format!("denominator p(x, d | c) + 1 − p(d | c) = {denom:e} vanishes")));
    }
    Ok(BoundsResult {
        lower: (p_xyd / denom).max(0.0),
        upper: ((p_xyd + slack) / denom).min(1.0),
        variant: BoundVariant::General,
        inputs: vec![("p(x,y,d|c)".into(), p_xyd), ("p(x,d|c)".into(), p_xd), ("p(d|c)".into(), p_d)],
    })
}

fn strengthened(t: &JointTable, q: &BoundsQuery) -> Result<BoundsResult> {
    let x = Assignment::new().with(&q.x.0, q.x.1);
    let xc = x.merge(&q.c).expect("disjoint");
    let p_xc = t.prob(&xc)?;
    if p_xc <= NULL_EVENT {
        return Err(Error::Precondition(format!("p(x, c) = {p_xc:e} vanishes")));
    }
    let yd = q.d.clone().with(&q.y.0, q.y.1);
    let p_yd = cond(t, &yd, &xc)?;
    let p_d = cond(t, &q.d, &xc)?;
    Ok(BoundsResult {
        lower: p_yd,
        upper: (p_yd + 1.0 - p_d).min(1.0),
        variant: BoundVariant::Strengthened,
        inputs: vec![("p(y,d|x,c)".into(), p_yd), ("p(d|x,c)".into(), p_d)],
    })
}

/// Bounds on `p(y | do(x, d), c)` from an observed table.
pub fn interventional_bounds(g: &Dag, t: &JointTable, q: &BoundsQuery) -> Result<BoundsResult> {
    let adm = check_preconditions(g, &q.x.0, &q.y.0, &q.d, &q.c)?;
    let c_mass = t.prob(&q.c)?;
    if c_mass <= NULL_EVENT {
        return Err(Error::ZeroConditioningEvent { probability: c_mass });
    }
    match q.variant {
        BoundVariant::General => general(t, q),
        BoundVariant::Strengthened if adm.strengthened => strengthened(t, q),
        BoundVariant::Strengthened => Err(Error::Precondition(format!(
            "{} descends from a vertex of D, so only the general bound applies",
            q.x.0
        ))),
        BoundVariant::Auto if adm.strengthened => strengthened(t, q),
        BoundVariant::Auto => general(t, q),
    }
}

fn require_binary(t: &JointTable, name: &str) -> Result<()> {
    match t.card(name)? {
        2 => Ok(()),
        k => Err(Error::Precondition(format!("{name} has {k} states; effect bounds need binary variables"))),
    }
}

/// Bounds on p(y₁ | do(x₁, d), c) − p(y₁ | do(x₀, d), c) for binary X and Y.
/// The states in `q.x` and `q.y` are ignored.
pub fn acde_bounds(g: &Dag, t: &JointTable, q: &BoundsQuery) -> Result<AcdeResult> {
    require_binary(t, &q.x.0)?;
    require_binary(t, &q.y.0)?;
    let treated = interventional_bounds(g, t, &q.at(1, 1))?;
    let control = interventional_bounds(g, t, &q.at(0, 1))?;
    Ok(AcdeResult::new(treated.lower - control.upper, treated.upper - control.lower))
}

/// Bounds on the direct effect of Z on Y at X = x in the instrumental model
/// with a possible Z -> Y edge (all variables binary).
pub fn iv_acde_bounds(p: &IvTable, x: usize) -> Result<AcdeResult> {
    if p.z_states() != 2 || p.x_states() != 2 || p.y_states() != 2 {
        return Err(Error::Precondition("instrumental effect bounds need binary Z, X, Y".into()));
    }
    if x >= 2 {
        return Err(Error::InvalidAssignment(format!("X={x} exceeds 2 states")));
    }
    // p(y, x | z) = p.get(z, x, y)
    let upper = 1.0 - p.get(1, x, 0) - p.get(0, x, 1);
    let lower = p.get(1, x, 1) + p.get(0, x, 0) - 1.0;
    Ok(AcdeResult::new(lower, upper))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

/// Every admissible formula for one target, and their intersection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsEntry {
    pub x: (String, usize),
    pub y: (String, usize),
    pub d: Assignment,
    pub c: Assignment,
    pub general: Option<Interval>,
    pub strengthened: Option<Interval>,
    pub lower: f64,
    pub upper: f64,
    pub lower_from: BoundVariant,
    pub upper_from: BoundVariant,
    /// Set when the admissible intervals do not overlap.
    pub falsified: bool,
}

fn intersect(parts: &[(BoundVariant, Interval)]) -> (f64, BoundVariant, f64, BoundVariant) {
    let (mut lo, mut lo_from) = (f64::NEG_INFINITY, BoundVariant::General);
    let (mut hi, mut hi_from) = (f64::INFINITY, BoundVariant::General);
    for &(v, iv) in parts {
        if iv.lower > lo {
            lo = iv.lower;
            lo_from = v;
        }
        if iv.upper < hi {
            hi = iv.upper;
            hi_from = v;
        }
    }
    (lo, lo_from, hi, hi_from)
}

/// Evaluates every admissible formula for one target.
pub fn evaluate_target(g: &Dag, t: &JointTable, q: &BoundsQuery) -> Result<BoundsEntry> {
    let adm = check_preconditions(g, &q.x.0, &q.y.0, &q.d, &q.c)?;
    let run = |variant| -> Result<Interval> {
        let r = interventional_bounds(g, t, &q.clone().with_variant(variant))?;
        Ok(Interval { lower: r.lower, upper: r.upper })
    };
    let gen = run(BoundVariant::General)?;
    let strong = if adm.strengthened { Some(run(BoundVariant::Strengthened)?) } else { None };
    let mut parts = vec![(BoundVariant::General, gen)];
    parts.extend(strong.map(|s| (BoundVariant::Strengthened, s)));
    let (lower, lower_from, upper, upper_from) = intersect(&parts);
    Ok(BoundsEntry {
        x: q.x.clone(),
        y: q.y.clone(),
        d: q.d.clone(),
        c: q.c.clone(),
        general: Some(gen),
        strengthened: strong,
        lower,
        upper,
        lower_from,
        upper_from,
        falsified: lower > upper + EMPTY_INTERSECTION_TOLERANCE,
    })
}

/// Effect bounds from every admissible formula for one `(d, c)`, and their
/// intersection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcdeEntry {
    pub x: String,
    pub y: String,
    pub d: Assignment,
    pub c: Assignment,
    pub general: AcdeResult,
    pub strengthened: Option<AcdeResult>,
    pub lower: f64,
    pub upper: f64,
    pub includes_zero: bool,
    pub falsified: bool,
}

/// Evaluates [`acde_bounds`] under every admissible formula.
pub fn acde_entry(g: &Dag, t: &JointTable, q: &BoundsQuery) -> Result<AcdeEntry> {
    let adm = check_preconditions(g, &q.x.0, &q.y.0, &q.d, &q.c)?;
    let general = acde_bounds(g, t, &q.clone().with_variant(BoundVariant::General))?;
    let strengthened = if adm.strengthened {
        Some(acde_bounds(g, t, &q.clone().with_variant(BoundVariant::Strengthened))?)
    } else {
        None
    };
    let lower = strengthened.map_or(general.lower, |s| s.lower.max(general.lower));
    let upper = strengthened.map_or(general.upper, |s| s.upper.min(general.upper));
    Ok(AcdeEntry {
        x: q.x.0.clone(),
        y: q.y.0.clone(),
        d: q.d.clone(),
        c: q.c.clone(),
        general,
        strengthened,
        lower,
        upper,
        includes_zero: lower <= 0.0 && 0.0 <= upper,
        falsified: lower > upper + EMPTY_INTERSECTION_TOLERANCE,
    })
}

/// Bounds for every admissible `(C, D)` witness of the pair `(x, y)` and every
/// value of `(x, y, d, c)`. Targets whose conditioning event is null are skipped.
pub fn bounds_report(
    g: &Dag,
    t: &JointTable,
    x: &str,
    y: &str,
    max_c: usize,
    max_d: usize,
) -> Result<Vec<BoundsEntry>> {
    let (xi, yi) = (g.id(x)?, g.id(y)?);
    let cut = g.without_edge(xi, yi);
    let witnesses = enumerate_witnesses(&cut, xi, yi, max_c, max_d)?;
    let mut out = Vec::new();
    for w in witnesses {
        let d_names = g.names(&w.d);
        let c_names = g.names(&w.c);
        let d_cards: Vec<usize> = w.d.iter().map(|&v| g.states(v)).collect();
        let c_cards: Vec<usize> = w.c.iter().map(|&v| g.states(v)).collect();
        for ds in states_of(&d_cards) {
            for cs in states_of(&c_cards) {
                let d = Assignment::from_pairs(d_names.iter().cloned().zip(ds.iter().copied()));
                let c = Assignment::from_pairs(c_names.iter().cloned().zip(cs.iter().copied()));
                for xv in 0..g.states(xi) {
                    for yv in 0..g.states(yi) {
                        let q = BoundsQuery::new((x, xv), (y, yv), d.clone(), c.clone());
                        match evaluate_target(g, t, &q) {
                            Ok(entry) => out.push(entry),
                            Err(Error::ZeroConditioningEvent { .. }) | Err(Error::Precondition(_)) => {}
                            Err(e) => return Err(e),
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}
