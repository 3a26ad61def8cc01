//! Brute-force checks used to validate everything else: random models,
//! grid search for compatibility, exact interventional truth and the fixing
//! construction.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{evaluate_target, BoundsQuery};
use crate::constraints::{
    check_distribution, enumerate_witnesses, CompatWitness, CompatibilityResult, ConditionalSlice, EsepWitness,
    SliceForm, WitnessLabel, FEASIBILITY_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::graph::{Dag, VertexId, VertexSet, Visibility};
use crate::model::DiscreteModel;
use crate::separation::is_d_separated;
use crate::table::{states_of, Assignment, JointTable};

/// Largest per-part state count [`brute_force_compat`] accepts.
pub const GRID_MAX_STATES: usize = 4;
/// Largest grid resolution [`brute_force_compat`] accepts.
pub const GRID_MAX_RESOLUTION: usize = 128;
/// Tolerance for bounds containment and for exact identities in [`pstar_check`].
pub const EXACT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelGenSpec {
    pub graph: Dag,
    pub seed: u64,
    pub latent_states: usize,
    /// State counts for observed vertices, replacing those of the graph.
    pub state_overrides: BTreeMap<String, usize>,
    /// Dirichlet concentration for every table row; 1.0 is uniform on the simplex.
    pub concentration: f64,
}

impl ModelGenSpec {
    pub fn new(graph: Dag, seed: u64) -> Self {
        Self { graph, seed, latent_states: 4, state_overrides: BTreeMap::new(), concentration: 1.0 }
    }

    pub fn latent_states(mut self, k: usize) -> Self {
        self.latent_states = k;
        self
    }

    pub fn concentration(mut self, alpha: f64) -> Self {
        self.concentration = alpha;
        self
    }

    pub fn override_states(mut self, name: &str, k: usize) -> Self {
        self.state_overrides.insert(name.to_string(), k);
        self
    }
}

/// Seed for model `index` of a sweep seeded with `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn dirichlet_row(rng: &mut ChaCha8Rng, gamma: &Gamma<f64>, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
    let total: f64 = raw.iter().sum();
    if total > 0.0 && total.is_finite() {
        raw.iter().map(|x| x / total).collect()
    } else {
        // Every draw underflowed; fall back to a point mass chosen uniformly.
        let mut row = vec![0.0; k];
        row[rng.random_range(0..k)] = 1.0;
        row
    }
}

/// Draws every table row independently from a symmetric Dirichlet.
pub fn random_model(spec: &ModelGenSpec) -> Result<DiscreteModel> {
    if spec.latent_states < 1 {
        return Err(Error::InvalidModel("latent vertices need at least one state".into()));
    }
    if !(spec.concentration > 0.0 && spec.concentration.is_finite()) {
        return Err(Error::InvalidModel(format!("concentration {} is not positive", spec.concentration)));
    }
    let mut graph = spec.graph.clone();
    for (name, &k) in &spec.state_overrides {
        graph = graph.with_states(graph.id(name)?, k)?;
    }
    let states: Vec<usize> = graph
        .vertices()
        .map(|v| match graph.visibility(v) {
            Visibility::Observed => graph.states(v),
            Visibility::Latent => spec.latent_states,
        })
        .collect();
    let gamma = Gamma::new(spec.concentration, 1.0).map_err(|e| Error::InvalidModel(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let counts = states.clone();
    DiscreteModel::from_fn(graph, states, |v, _| dirichlet_row(&mut rng, &gamma, counts[v.0]))
}

/// Visits every point of the simplex grid with `parts` coordinates summing to `total`.
fn for_each_composition(parts: usize, total: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(i: usize, left: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if i + 1 == cur.len() {
            cur[i] = left;
            f(cur);
            return;
        }
        for x in 0..=left {
            cur[i] = x;
            rec(i + 1, left - x, cur, f);
        }
    }
    rec(0, total, &mut vec![0; parts], f);
}

/// Mass of the smallest `B`-vector that, paired with `qa`, dominates the block.
fn required_b_mass(block: &[f64], na: usize, nb: usize, qa: &[f64]) -> (f64, Vec<f64>) {
    let mut need = vec![0.0; nb];
    for (b, slot) in need.iter_mut().enumerate() {
        for a in 0..na {
            let p = block[a * nb + b];
            if p > 0.0 {
                *slot = f64::max(*slot, if qa[a] > 0.0 { p / qa[a] } else { f64::INFINITY });
            }
        }
    }
    (need.iter().sum(), need)
}

/// Exhaustive compatibility check. In the weak form, `Q_A` ranges over the
/// simplex grid with spacing `1/grid` and `Q_B` is the cheapest vector
/// dominating the block for that `Q_A`; the margin is the least excess mass
/// found, so it can only fall as the grid is refined. The strong form is a
/// closed-form check.
pub fn brute_force_compat(slice: &ConditionalSlice, grid: usize) -> Result<CompatibilityResult> {
    slice.validate()?;
    let (na, nb, nc) = (slice.a_states(), slice.b_states(), slice.c_states());
    if na > GRID_MAX_STATES || nb > GRID_MAX_STATES {
        return Err(Error::Precondition(format!(
            "grid search supports at most {GRID_MAX_STATES} states per part, got {na} x {nb}"
        )));
    }
    if grid == 0 || grid > GRID_MAX_RESOLUTION {
        return Err(Error::Precondition(format!("grid must lie in 1..={GRID_MAX_RESOLUTION}, got {grid}")));
    }
    let mut margins = Vec::with_capacity(nc);
    let mut qa_all = Vec::new();
    let mut qb_all = Vec::new();
    for c in 0..nc {
        let block = slice.block(c);
        match slice.form {
            SliceForm::Strong => {
                let r: Vec<f64> = (0..nb).map(|b| (0..na).map(|a| block[a * nb + b]).fold(0.0, f64::max)).collect();
                margins.push(r.iter().sum::<f64>() - 1.0);
                qb_all.push(r);
            }
            SliceForm::Weak => {
                let mut best = (f64::INFINITY, vec![0.0; na], vec![0.0; nb]);
                for_each_composition(na, grid, &mut |pt| {
                    let qa: Vec<f64> = pt.iter().map(|&k| k as f64 / grid as f64).collect();
                    let (mass, qb) = required_b_mass(block, na, nb, &qa);
                    if mass < best.0 {
                        best = (mass, qa, qb);
                    }
                });
                margins.push(best.0 - 1.0);
                qa_all.push(best.1);
                qb_all.push(best.2);
            }
        }
    }
    let (worst, margin) =
        margins.iter().copied().enumerate().fold((0, -1.0), |acc, (i, m)| if m > acc.1 { (i, m) } else { acc });
    let feasible = margin <= FEASIBILITY_TOLERANCE;
    let witness = match slice.form {
        SliceForm::Strong => CompatWitness::Marginal { b: qb_all },
        SliceForm::Weak => CompatWitness::Product { a: qa_all, b: qb_all },
    };
    Ok(CompatibilityResult {
        feasible,
        margin,
        margins,
        witness: feasible.then_some(witness),
        violating_c: (!feasible).then(|| slice.c_assignment(worst)),
    })
}

/// One bounds target family: a pair and a `(C, D)` witness on the graph
/// without `X -> Y`.
#[derive(Debug, Clone)]
pub struct BoundsTarget {
    pub x: VertexId,
    pub y: VertexId,
    pub witness: EsepWitness,
}

/// Every witness admissible for bounding the effect of `X` on `Y`, over
/// ordered pairs of binary observed vertices with `Y` not an ancestor of `X`.
pub fn bounds_targets(g: &Dag) -> Result<Vec<BoundsTarget>> {
    let binary: Vec<VertexId> = g.observed().filter(|&v| g.states(v) == 2).collect();
    let n_obs = g.observed().count();
    let mut out = Vec::new();
    for &x in &binary {
        for &y in &binary {
            if x == y || g.any_descends_from(&[x].into(), &[y].into())? {
                continue;
            }
            let cut = g.without_edge(x, y);
            if cut.adjacent(x, y) {
                continue;
            }
            for witness in enumerate_witnesses(&cut, x, y, n_obs, n_obs)? {
                out.push(BoundsTarget { x, y, witness });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    InfeasibleSlice,
    BoundsContainment,
    Dominance,
    Error,
}

/// A failed assertion, with everything needed to rebuild the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub model_index: u64,
    pub model_seed: u64,
    pub detail: String,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n_models: u64,
    pub seed: u64,
    pub latent_states: usize,
    pub concentration: f64,
    /// Also check bounds containment.
    pub bounds: bool,
    /// Allowed slice margin and bounds excess.
    pub tolerance: f64,
}

impl SweepConfig {
    pub fn new(n_models: u64, seed: u64) -> Self {
        Self { n_models, seed, latent_states: 4, concentration: 1.0, bounds: true, tolerance: EXACT_TOLERANCE }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub witnesses: usize,
    pub slices_checked: usize,
    /// Largest compatibility margin over all slices; −1 when there are none.
    pub max_margin: f64,
    pub bounds_checked: usize,
    /// Largest amount by which a truth left its interval (≤ 0 when contained).
    pub max_bounds_excess: Option<f64>,
    pub dominance_checked: usize,
    /// Targets skipped because a conditioning event was null.
    pub bounds_skipped: usize,
    pub violations: Vec<Violation>,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Default)]
struct ModelOutcome {
    slices: usize,
    max_margin: f64,
    bounds: usize,
    excess: f64,
    dominance: usize,
    skipped: usize,
    violations: Vec<Violation>,
}

/// The spec of model `index` in a sweep, for replay.
pub fn sweep_model_spec(g: &Dag, config: &SweepConfig, index: u64) -> ModelGenSpec {
    ModelGenSpec::new(g.clone(), derive_seed(config.seed, index))
        .latent_states(config.latent_states)
        .concentration(config.concentration)
}

/// Draws random models and checks that every witness's constraint holds on
/// each observed margin and, with `config.bounds`, that every admissible
/// binary bound contains the exact interventional probability.
pub fn soundness_sweep_with(g: &Dag, config: &SweepConfig) -> Result<SweepReport> {
    let observed: Vec<VertexId> = g.observed().collect();
    let n_obs = observed.len();
    let mut witnesses = Vec::new();
    for &x in &observed {
        for &y in &observed {
            if x < y && !g.adjacent(x, y) {
                witnesses.extend(enumerate_witnesses(g, x, y, n_obs, n_obs)?);
            }
        }
    }
    let targets = if config.bounds { bounds_targets(g)? } else { Vec::new() };

    let outcomes: Vec<ModelOutcome> =
        (0..config.n_models).into_par_iter().map(|index| check_model(g, config, index, &witnesses, &targets)).collect();

    let mut report = SweepReport {
        config: config.clone(),
        witnesses: witnesses.len(),
        slices_checked: 0,
        max_margin: -1.0,
        bounds_checked: 0,
        max_bounds_excess: None,
        dominance_checked: 0,
        bounds_skipped: 0,
        violations: Vec::new(),
    };
    for o in outcomes {
        report.slices_checked += o.slices;
        report.max_margin = report.max_margin.max(o.max_margin);
        report.bounds_checked += o.bounds;
        if o.bounds > 0 {
            report.max_bounds_excess = Some(report.max_bounds_excess.map_or(o.excess, |e| e.max(o.excess)));
        }
        report.dominance_checked += o.dominance;
        report.bounds_skipped += o.skipped;
        report.violations.extend(o.violations);
    }
    Ok(report)
}

/// [`soundness_sweep_with`] at the default configuration.
pub fn soundness_sweep(g: &Dag, n_models: u64, seed: u64) -> Result<SweepReport> {
    soundness_sweep_with(g, &SweepConfig::new(n_models, seed))
}

fn check_model(
    g: &Dag,
    config: &SweepConfig,
    index: u64,
    witnesses: &[EsepWitness],
    targets: &[BoundsTarget],
) -> ModelOutcome {
    let spec = sweep_model_spec(g, config, index);
    let mut out = ModelOutcome { max_margin: -1.0, excess: f64::NEG_INFINITY, ..Default::default() };
    let violation = |kind, detail: String, magnitude| Violation {
        kind,
        model_index: index,
        model_seed: spec.seed,
        detail,
        magnitude,
    };
    let mut run = || -> Result<Vec<Violation>> {
        let model = random_model(&spec)?;
        let margin = model.observed_margin()?;
        let mut found = Vec::new();

        let report = check_distribution(g, &margin, witnesses)?;
        out.slices += report.records.len();
        out.max_margin = out.max_margin.max(report.max_margin);
        for r in report.records.iter().filter(|r| r.margin > config.tolerance) {
            found.push(violation(
                ViolationKind::InfeasibleSlice,
                format!("witness {:?} at {}", r.witness, r.d_value),
                r.margin,
            ));
        }

        let mut truths: HashMap<Assignment, JointTable> = HashMap::new();
        for t in targets {
            check_target(g, &model, &margin, t, &mut truths, &mut out, &mut found, &violation, config.tolerance)?;
        }
        Ok(found)
    };
    match run() {
        Ok(found) => out.violations = found,
        Err(e) => out.violations.push(violation(ViolationKind::Error, e.to_string(), 0.0)),
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn check_target(
    g: &Dag,
    model: &DiscreteModel,
    margin: &JointTable,
    target: &BoundsTarget,
    truths: &mut HashMap<Assignment, JointTable>,
    out: &mut ModelOutcome,
    found: &mut Vec<Violation>,
    violation: &dyn Fn(ViolationKind, String, f64) -> Violation,
    tolerance: f64,
) -> Result<()> {
    let w = &target.witness;
    let label = WitnessLabel::new(g, w);
    let (xn, yn) = (g.name(target.x), g.name(target.y));
    let d_cards: Vec<usize> = w.d.iter().map(|&v| g.states(v)).collect();
    let c_cards: Vec<usize> = w.c.iter().map(|&v| g.states(v)).collect();
    for ds in states_of(&d_cards) {
        let d = Assignment::from_pairs(label.d.iter().cloned().zip(ds));
        for cs in states_of(&c_cards) {
            let c = Assignment::from_pairs(label.c.iter().cloned().zip(cs));
            for x in 0..2 {
                let action = d.clone().with(xn, x);
                if !truths.contains_key(&action) {
                    truths.insert(action.clone(), model.intervene(&action)?.observed_margin()?);
                }
                let after = &truths[&action];
                if after.prob(&c)? <= crate::table::NULL_EVENT {
                    out.skipped += 2;
                    continue;
                }
                for y in 0..2 {
                    let q = BoundsQuery::new((xn, x), (yn, y), d.clone(), c.clone());
                    let entry = match evaluate_target(g, margin, &q) {
                        Ok(e) => e,
                        Err(Error::ZeroConditioningEvent { .. }) | Err(Error::Precondition(_)) => {
                            out.skipped += 1;
                            continue;
                        }
                        Err(e) => return Err(e),
                    };
                    let truth = after.conditional(&Assignment::new().with(yn, y), &c)?;
                    let describe = || format!("p({yn}={y} | do({xn}={x}, {d}), {c}) = {truth}");
                    for iv in entry.general.iter().chain(entry.strengthened.iter()) {
                        out.bounds += 1;
                        let excess = (iv.lower - truth).max(truth - iv.upper);
                        out.excess = out.excess.max(excess);
                        if excess > tolerance {
                            found.push(violation(
                                ViolationKind::BoundsContainment,
                                format!("{} outside [{}, {}]", describe(), iv.lower, iv.upper),
                                excess,
                            ));
                        }
                    }
                    if let (Some(gen), Some(st)) = (entry.general, entry.strengthened) {
                        out.dominance += 1;
                        let slack = (gen.lower - st.lower).max(st.upper - gen.upper);
                        if slack > tolerance {
                            found.push(violation(
                                ViolationKind::Dominance,
                                format!("{}: strengthened {st:?} not inside general {gen:?}", describe()),
                                slack,
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PstarReport {
    /// Largest difference between P* and P on joint states consistent with `d`.
    pub slice_diff: f64,
    /// Number of d-separation statements of the modified graph checked.
    pub statements: usize,
    /// Largest independence deviation over those statements.
    pub markov_deviation: f64,
    /// Largest difference between the margins of P* and P on the vertices
    /// that do not descend from `d`.
    pub margin_diff: f64,
    pub passed: bool,
}

/// Checks the fixing construction for one model and assignment `d`.
pub fn pstar_check(m: &DiscreteModel, d: &Assignment) -> Result<PstarReport> {
    let g = m.graph();
    let fixed = m.fix_conditioning(d)?;
    let (p, pstar) = (m.joint()?, fixed.joint()?);

    let mut slice_diff = 0.0f64;
    for (states, value) in p.iter() {
        let consistent = d.iter().all(|(name, s)| states[g.id(name).map(|v| v.0).unwrap_or(usize::MAX)] == s);
        if consistent {
            slice_diff = slice_diff.max((value - pstar.at(&states)).abs());
        }
    }

    let gstar = fixed.graph();
    let all: Vec<VertexId> = gstar.vertices().collect();
    let mut statements = 0;
    let mut markov_deviation = 0.0f64;
    for &a in &all {
        for &b in &all {
            if a >= b {
                continue;
            }
            let rest: Vec<VertexId> = all.iter().copied().filter(|&v| v != a && v != b).collect();
            for c in crate::constraints::subsets_up_to(&rest, rest.len()) {
                let (sa, sb): (VertexSet, VertexSet) = ([a].into(), [b].into());
                if is_d_separated(gstar, &sa, &sb, &c) {
                    statements += 1;
                    let cn: Vec<&str> = c.iter().map(|&v| gstar.name(v)).collect();
                    let dev = pstar.independence_deviation(&[gstar.name(a)], &[gstar.name(b)], &cn)?;
                    markov_deviation = markov_deviation.max(dev);
                }
            }
        }
    }

    let dset = g.ids(&d.keys().collect::<Vec<_>>())?;
    let desc = g.descendants(&dset)?;
    let keep: Vec<&str> = g.vertices().filter(|v| !desc.contains(v)).map(|v| g.name(v)).collect();
    let margin_diff =
        if keep.is_empty() { 0.0 } else { p.marginalize(&keep)?.max_abs_diff(&pstar.marginalize(&keep)?)? };

    let passed = slice_diff <= EXACT_TOLERANCE && markov_deviation <= EXACT_TOLERANCE && margin_diff <= EXACT_TOLERANCE;
    Ok(PstarReport { slice_diff, statements, markov_deviation, margin_diff, passed })
}
