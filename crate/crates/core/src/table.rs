//! Exact probability tables over discrete variables.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Dag;

/// Probability below which a conditioning event counts as null.
pub const NULL_EVENT: f64 = 1e-12;
/// Aggregate mass tolerance for tables built in memory.
pub const MASS_TOLERANCE: f64 = 1e-9;
/// Mass tolerance for tables read from text.
pub const LOAD_TOLERANCE: f64 = 1e-6;

/// Fixed values for a set of variables, keyed by name.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(BTreeMap<String, usize>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, usize)>) -> Self {
        Self(pairs.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn with(mut self, name: &str, state: usize) -> Self {
        self.0.insert(name.to_string(), state);
        self
    }

    pub fn insert(&mut self, name: &str, state: usize) -> Option<usize> {
        self.0.insert(name.to_string(), state)
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.0.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.0.iter().map(|(k, &v)| (k.as_str(), v))
    }

    /// Union of two assignments, or `None` when they disagree on a shared variable.
    pub fn merge(&self, other: &Assignment) -> Option<Assignment> {
        let mut out = self.clone();
        for (k, v) in other.iter() {
            if let Some(prev) = out.insert(k, v) {
                if prev != v {
                    return None;
                }
            }
        }
        Some(out)
    }

    /// Parses `X=1,Y=0`. An empty string is the empty assignment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Assignment::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, value) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidAssignment(format!("expected NAME=STATE, got {part:?}")))?;
            let state =
                value.trim().parse().map_err(|_| Error::InvalidAssignment(format!("invalid state in {part:?}")))?;
            if out.insert(name.trim(), state).is_some() {
                return Err(Error::InvalidAssignment(format!("{} assigned twice", name.trim())));
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|(k, v)| format!("{k}={v}")).collect();
        f.write_str(&parts.join(","))
    }
}

/// Every joint state of variables with the given cardinalities, row-major
/// (last variable fastest).
pub fn states_of(cards: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total: usize = cards.iter().product();
    let mut current = vec![0usize; cards.len()];
    (0..total).map(move |i| {
        if i > 0 {
            for k in (0..cards.len()).rev() {
                current[k] += 1;
                if current[k] < cards[k] {
                    break;
                }
                current[k] = 0;
            }
        }
        current.clone()
    })
}

/// Full joint table. Entries are stored row-major in variable order.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    vars: Vec<String>,
    cards: Vec<usize>,
    probs: Vec<f64>,
}

impl JointTable {
    pub fn new(vars: Vec<String>, cards: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        let t = Self::unchecked(vars, cards, probs)?;
        let mass: f64 = t.probs.iter().sum();
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidTable(format!("total mass {mass} differs from 1")));
        }
        Ok(t)
    }

    fn unchecked(vars: Vec<String>, cards: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if vars.len() != cards.len() {
            return Err(Error::InvalidTable("one cardinality per variable required".into()));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(v) = vars.iter().find(|v| !seen.insert(v.as_str())) {
            return Err(Error::InvalidTable(format!("variable {v} listed twice")));
        }
        if cards.contains(&0) {
            return Err(Error::InvalidTable("cardinalities must be positive".into()));
        }
        let size: usize = cards.iter().product();
        if probs.len() != size {
            return Err(Error::InvalidTable(format!("expected {size} entries, got {}", probs.len())));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidTable(format!("invalid probability {p}")));
        }
        Ok(Self { vars, cards, probs })
    }

    pub fn from_fn(vars: Vec<String>, cards: Vec<usize>, f: impl Fn(&[usize]) -> f64) -> Result<Self> {
        let probs = states_of(&cards).map(|s| f(&s)).collect();
        Self::new(vars, cards, probs)
    }

    pub fn uniform(vars: Vec<String>, cards: Vec<usize>) -> Result<Self> {
        let size: usize = cards.iter().product();
        Self::new(vars, cards, vec![1.0 / size as f64; size])
    }

    pub fn variables(&self) -> &[String] {
        &self.vars
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn position(&self, name: &str) -> Result<usize> {
        self.vars.iter().position(|v| v == name).ok_or_else(|| Error::UnknownVertex(name.to_string()))
    }

    pub fn card(&self, name: &str) -> Result<usize> {
        Ok(self.cards[self.position(name)?])
    }

    /// Iterates `(states, probability)` in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        states_of(&self.cards).zip(self.probs.iter().copied())
    }

    pub fn index_of(&self, states: &[usize]) -> usize {
        states.iter().zip(&self.cards).fold(0, |acc, (&s, &k)| acc * k + s)
    }

    pub fn at(&self, states: &[usize]) -> f64 {
        self.probs[self.index_of(states)]
    }

    /// Resolves an assignment into (position, state) pairs, rejecting unknown
    /// variables and out-of-range states.
    fn resolve(&self, a: &Assignment) -> Result<Vec<(usize, usize)>> {
        a.iter()
            .map(|(name, state)| {
                let pos = self.position(name)?;
                if state >= self.cards[pos] {
                    return Err(Error::InvalidAssignment(format!("{name}={state} exceeds {} states", self.cards[pos])));
                }
                Ok((pos, state))
            })
            .collect()
    }

    /// Probability of a (possibly partial) assignment.
    pub fn prob(&self, a: &Assignment) -> Result<f64> {
        let fixed = self.resolve(a)?;
        Ok(self.iter().filter(|(s, _)| fixed.iter().all(|&(pos, v)| s[pos] == v)).map(|(_, p)| p).sum())
    }

    /// Conditional probability P(event | given); errors on null `given`.
    pub fn conditional(&self, event: &Assignment, given: &Assignment) -> Result<f64> {
        let denom = self.prob(given)?;
        if denom <= NULL_EVENT {
            return Err(Error::ZeroConditioningEvent { probability: denom });
        }
        self.resolve(event)?;
        match event.merge(given) {
            Some(joint) => Ok(self.prob(&joint)? / denom),
            None => Ok(0.0),
        }
    }

    /// Sums out every variable not in `keep`; kept variables stay in table order.
    pub fn marginalize<S: AsRef<str>>(&self, keep: &[S]) -> Result<JointTable> {
        let mut positions = Vec::new();
        for k in keep {
            positions.push(self.position(k.as_ref())?);
        }
        positions.sort_unstable();
        positions.dedup();
        let cards: Vec<usize> = positions.iter().map(|&p| self.cards[p]).collect();
        let vars: Vec<String> = positions.iter().map(|&p| self.vars[p].clone()).collect();
        let mut probs = vec![0.0; cards.iter().product()];
        for (s, p) in self.iter() {
            let idx = positions.iter().fold(0, |acc, &pos| acc * self.cards[pos] + s[pos]);
            probs[idx] += p;
        }
        Ok(JointTable { vars, cards, probs })
    }

    /// Table over the remaining variables given the assignment, renormalized.
    pub fn condition(&self, on: &Assignment) -> Result<JointTable> {
        let fixed = self.resolve(on)?;
        let mass = self.prob(on)?;
        if mass <= NULL_EVENT {
            return Err(Error::ZeroConditioningEvent { probability: mass });
        }
        let rest: Vec<usize> = (0..self.vars.len()).filter(|p| !fixed.iter().any(|&(q, _)| q == *p)).collect();
        let cards: Vec<usize> = rest.iter().map(|&p| self.cards[p]).collect();
        let vars: Vec<String> = rest.iter().map(|&p| self.vars[p].clone()).collect();
        let mut probs = vec![0.0; cards.iter().product()];
        for (s, p) in self.iter() {
            if fixed.iter().all(|&(pos, v)| s[pos] == v) {
                let idx = rest.iter().fold(0, |acc, &pos| acc * self.cards[pos] + s[pos]);
                probs[idx] += p / mass;
            }
        }
        Ok(JointTable { vars, cards, probs })
    }

    /// Largest |p(a,b|c) − p(a|c)p(b|c)| over all cells with p(c) > NULL_EVENT.
    /// Zero exactly when A ⊥ B | C holds.
    pub fn independence_deviation<S: AsRef<str>>(&self, a: &[S], b: &[S], c: &[S]) -> Result<f64> {
        let names: Vec<&str> = a.iter().chain(b).chain(c).map(|s| s.as_ref()).collect();
        let m = self.marginalize(&names)?;
        let pos = |list: &[S]| -> Result<Vec<usize>> { list.iter().map(|n| m.position(n.as_ref())).collect() };
        let (pa, pb, pc) = (pos(a)?, pos(b)?, pos(c)?);
        let card = |ps: &[usize]| ps.iter().map(|&p| m.cards[p]).collect::<Vec<_>>();
        let index = |s: &[usize], ps: &[usize]| ps.iter().fold(0, |acc, &p| acc * m.cards[p] + s[p]);
        let (ka, kb, kc): (usize, usize, usize) =
            (card(&pa).iter().product(), card(&pb).iter().product(), card(&pc).iter().product());
        let mut abc = vec![0.0; ka * kb * kc];
        for (s, p) in m.iter() {
            let (ia, ib, ic) = (index(&s, &pa), index(&s, &pb), index(&s, &pc));
            abc[(ic * ka + ia) * kb + ib] += p;
        }
        let mut worst = 0.0f64;
        for ic in 0..kc {
            let cell = &abc[ic * ka * kb..(ic + 1) * ka * kb];
            let pc: f64 = cell.iter().sum();
            if pc <= NULL_EVENT {
                continue;
            }
            for ia in 0..ka {
                let pa_c: f64 = cell[ia * kb..(ia + 1) * kb].iter().sum::<f64>() / pc;
                for ib in 0..kb {
                    let pb_c: f64 = (0..ka).map(|i| cell[i * kb + ib]).sum::<f64>() / pc;
                    let pab_c = cell[ia * kb + ib] / pc;
                    worst = worst.max((pab_c - pa_c * pb_c).abs());
                }
            }
        }
        Ok(worst)
    }

    /// Largest entrywise difference to another table over the same variables.
    pub fn max_abs_diff(&self, other: &JointTable) -> Result<f64> {
        if self.vars != other.vars || self.cards != other.cards {
            return Err(Error::InvalidTable("tables range over different variables".into()));
        }
        Ok(self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    /// Writes the comma-separated table format: header of names plus `p`, one
    /// row per joint state in storage order.
    pub fn to_text(&self) -> String {
        let mut out = self.vars.join(",");
        if !out.is_empty() {
            out.push(',');
        }
        out.push_str("p\n");
        for (s, p) in self.iter() {
            for v in &s {
                out.push_str(&v.to_string());
                out.push(',');
            }
            out.push_str(&format!("{p}\n"));
        }
        out
    }
}

/// A table read from text, with a note on whether it had to be renormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedTable {
    pub table: JointTable,
    pub renormalized: bool,
    pub original_mass: f64,
}

fn fields(line: &str) -> Vec<&str> {
    line.split(|c: char| c == ',' || c == ';' || c.is_whitespace()).filter(|f| !f.is_empty()).collect()
}

/// Reads the delimited table format. Columns are variable names followed by a
/// final `p` column; rows that are absent have probability zero.
///
/// With a graph, every column must be an observed vertex and cardinalities come
/// from the graph; without one, each variable gets `max(state) + 1` (at least 2).
pub fn parse_table(text: &str, graph: Option<&Dag>) -> Result<LoadedTable> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::InvalidTable("missing header row".into()))?;
    let header = fields(header);
    if header.last() != Some(&"p") {
        return Err(Error::InvalidTable("the last header column must be p".into()));
    }
    let vars: Vec<String> = header[..header.len() - 1].iter().map(|s| s.to_string()).collect();

    let mut rows: Vec<(Vec<usize>, f64)> = Vec::new();
    for (line, text) in lines {
        let f = fields(text);
        if f.len() != header.len() {
            return Err(Error::Parse { line, message: format!("expected {} fields, got {}", header.len(), f.len()) });
        }
        let states = f[..vars.len()]
            .iter()
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::Parse { line, message: "states must be nonnegative integers".into() })?;
        let p: f64 = f[vars.len()]
            .parse()
            .map_err(|_| Error::Parse { line, message: format!("invalid probability {:?}", f[vars.len()]) })?;
        if !(p.is_finite() && p >= 0.0) {
            return Err(Error::Parse { line, message: format!("invalid probability {p}") });
        }
        rows.push((states, p));
    }

    let cards: Vec<usize> = match graph {
        Some(g) => vars
            .iter()
            .map(|v| {
                let id = g.id(v)?;
                if g.is_latent(id) {
                    return Err(Error::LatentNotAllowed(v.clone()));
                }
                Ok(g.states(id))
            })
            .collect::<Result<_>>()?,
        None => (0..vars.len()).map(|i| rows.iter().map(|(s, _)| s[i] + 1).max().unwrap_or(2).max(2)).collect(),
    };

    let mut probs = vec![0.0; cards.iter().product()];
    let mut seen: HashMap<Vec<usize>, ()> = HashMap::new();
    for (states, p) in rows {
        for (i, (&s, &k)) in states.iter().zip(&cards).enumerate() {
            if s >= k {
                return Err(Error::InvalidTable(format!("{}={s} exceeds {k} states", vars[i])));
            }
        }
        if seen.insert(states.clone(), ()).is_some() {
            return Err(Error::InvalidTable(format!("row {states:?} listed twice")));
        }
        let idx = states.iter().zip(&cards).fold(0, |acc, (&s, &k)| acc * k + s);
        probs[idx] = p;
    }
    let mass: f64 = probs.iter().sum();
    if (mass - 1.0).abs() > LOAD_TOLERANCE {
        return Err(Error::InvalidTable(format!("probabilities sum to {mass}, not 1")));
    }
    let renormalized = (mass - 1.0).abs() > 1e-12;
    if renormalized {
        probs.iter_mut().for_each(|p| *p /= mass);
    }
    Ok(LoadedTable { table: JointTable::unchecked(vars, cards, probs)?, renormalized, original_mass: mass })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn chain_copy() -> JointTable {
        // Z uniform, X = Z, Y = X
        JointTable::from_fn(names(&["Z", "X", "Y"]), vec![2, 2, 2], |s| {
            if s[0] == s[1] && s[1] == s[2] {
                0.5
            } else {
                0.0
            }
        })
        .unwrap()
    }

    #[test]
    fn marginalize_edge_cases() {
        let t = JointTable::uniform(names(&["A", "B"]), vec![2, 2]).unwrap();
        assert_eq!(t.marginalize(&["A", "B"]).unwrap(), t);
        let scalar = t.marginalize::<&str>(&[]).unwrap();
        assert_eq!(scalar.probabilities(), &[1.0]);
        let a = t.marginalize(&["A"]).unwrap();
        assert_eq!(a.probabilities(), &[0.5, 0.5]);
        assert!(matches!(t.marginalize(&["Q"]), Err(Error::UnknownVertex(_))));
    }

    #[test]
    fn condition_on_deterministic_chain() {
        let t = chain_copy();
        let c = t.condition(&Assignment::new().with("Z", 1)).unwrap();
        assert_eq!(c.variables(), &names(&["X", "Y"])[..]);
        assert_eq!(c.at(&[1, 1]), 1.0);
        assert!((c.mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn condition_on_independent_variable_keeps_rest() {
        let rest = [0.1, 0.2, 0.3, 0.4];
        let t = JointTable::from_fn(names(&["A", "B", "C"]), vec![2, 2, 2], |s| {
            rest[s[0] * 2 + s[1]] * if s[2] == 0 { 0.25 } else { 0.75 }
        })
        .unwrap();
        let c = t.condition(&Assignment::new().with("C", 1)).unwrap();
        let expected = t.marginalize(&["A", "B"]).unwrap();
        assert!(c.max_abs_diff(&expected).unwrap() < 1e-15);
    }

    #[test]
    fn conditioning_on_null_event_fails() {
        let t = chain_copy();
        let on = Assignment::new().with("Z", 0).with("X", 1);
        assert!(matches!(t.condition(&on), Err(Error::ZeroConditioningEvent { .. })));
    }

    #[test]
    fn unknown_or_out_of_range_assignments_are_rejected() {
        let t = chain_copy();
        assert!(t.prob(&Assignment::new().with("Q", 0)).is_err());
        assert!(matches!(t.prob(&Assignment::new().with("Z", 2)), Err(Error::InvalidAssignment(_))));
    }

    #[test]
    fn independence_deviation_detects_dependence() {
        let t = chain_copy();
        assert!((t.independence_deviation(&["Z"], &["Y"], &[] as &[&str]).unwrap() - 0.25).abs() < 1e-15);
        assert!(t.independence_deviation(&["Z"], &["Y"], &["X"]).unwrap() < 1e-15);
    }

    #[test]
    fn assignment_parsing() {
        let a = Assignment::parse("X=1, Y=0").unwrap();
        assert_eq!(a.get("X"), Some(1));
        assert_eq!(a.to_string(), "X=1,Y=0");
        assert!(Assignment::parse("").unwrap().is_empty());
        assert!(Assignment::parse("X").is_err());
        assert!(Assignment::parse("X=1,X=0").is_err());
        assert!(a.merge(&Assignment::new().with("X", 0)).is_none());
    }

    #[test]
    fn table_text_round_trip_and_renormalization() {
        let t = chain_copy();
        let back = parse_table(&t.to_text(), None).unwrap();
        assert_eq!(back.table, t);
        assert!(!back.renormalized);

        let loose = "A B p\n0 0 0.5\n1 1 0.5000004\n";
        let l = parse_table(loose, None).unwrap();
        assert!(l.renormalized);
        assert!((l.table.mass() - 1.0).abs() < 1e-15);
        assert_eq!(l.table.at(&[0, 1]), 0.0);

        assert!(parse_table("A,p\n0,0.5\n1,0.4\n", None).is_err());
        assert!(parse_table("A,p\n0,0.5\n0,0.5\n", None).is_err());
        assert!(parse_table("A,q\n0,1\n", None).is_err());
    }
}
