//! Command-line front end. [`run`] returns the exit status and the text to
//! print, so the binary is a thin wrapper and tests can call it directly.
//!
//! Exit statuses: 0 success, 1 usage or parse error, 2 failed precondition,
//! 3 the graph is falsified by the table (or a sweep found a violation).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::bounds::{
    acde_entry, bounds_report, evaluate_target, iv_acde_bounds, AcdeEntry, AcdeResult, BoundsEntry, BoundsQuery,
};
use crate::constraints::{
    check_distribution_with, compatibility, enumerate_witnesses, instrumental_inequality_score, testable_pairs,
    CheckRecord, EsepWitness, IvTable, WitnessLabel, FEASIBILITY_TOLERANCE,
};
use crate::error::Error;
use crate::fixtures;
use crate::graph::{Dag, VertexId};
use crate::oracle::{brute_force_compat, soundness_sweep_with, SweepConfig, SweepReport, Violation, EXACT_TOLERANCE};
use crate::parse::parse_graph;
use crate::separation::{d_separated, e_separated, e_separated_star, SeparationQuery};
use crate::table::{parse_table, Assignment, LoadedTable};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PRECONDITION: i32 = 2;
pub const EXIT_FALSIFIED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "esep",
    version,
    about = "Separation queries, inequality constraints and effect bounds for DAGs with latent variables"
)]
pub struct Cli {
    /// Output style: human-readable text or one JSON record per line.
    #[arg(long, value_enum, global = true, default_value_t = Format::Text)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Records,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// d-separation of A and B given C.
    Dsep(SetArgs),
    /// e-separation of A and B given C after deleting D, by both characterizations.
    Esep(SetArgs),
    /// Testable pairs and the separating (C, D) witnesses for each.
    Find(FindArgs),
    /// Checks a table against every witness; exit 3 if any slice is infeasible.
    Check(CheckArgs),
    /// Instrumental inequality score and direct-effect bounds for an IV table.
    Iv(IvArgs),
    /// Bounds on p(y | do(x, d), c) or on the controlled direct effect.
    Bounds(BoundsArgs),
    /// Random-model soundness sweep; exit 3 on any violation.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct SetArgs {
    /// Graph file, or builtin:NAME for one of iv, iv-direct, uc, gadget, gadget-effect.
    pub graph: String,
    /// Sets as A=Z,W B=Y C=... D=...; A and B are required.
    #[arg(required = true)]
    pub sets: Vec<String>,
}

#[derive(Debug, Args)]
pub struct FindArgs {
    /// Graph file, or builtin:NAME.
    pub graph: String,
    /// Largest conditioning set to try.
    #[arg(long)]
    pub max_c: Option<usize>,
    /// Largest deletion set to try.
    #[arg(long)]
    pub max_d: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Graph file, or builtin:NAME.
    pub graph: String,
    /// Table over the observed vertices.
    pub table: PathBuf,
    /// Largest conditioning set to try.
    #[arg(long)]
    pub max_c: Option<usize>,
    /// Largest deletion set to try.
    #[arg(long)]
    pub max_d: Option<usize>,
    /// Largest margin still counted as feasible.
    #[arg(long, default_value_t = FEASIBILITY_TOLERANCE)]
    pub tol: f64,
    /// Decide weak slices by grid search at this resolution instead of the solver.
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Debug, Args)]
pub struct IvArgs {
    /// Table containing the instrument, treatment and outcome.
    pub table: PathBuf,
    #[arg(long, default_value = "Z")]
    pub z: String,
    #[arg(long, default_value = "X")]
    pub x: String,
    #[arg(long, default_value = "Y")]
    pub y: String,
    /// Largest score still counted as satisfying the inequality.
    #[arg(long, default_value_t = EXACT_TOLERANCE)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// Graph file, or builtin:NAME.
    pub graph: String,
    /// Table over the observed vertices.
    pub table: PathBuf,
    /// Treatment, as X or X=1.
    #[arg(long)]
    pub x: String,
    /// Outcome, as Y or Y=1.
    #[arg(long)]
    pub y: String,
    /// Values of the deletion set, as W=0,V=1. Without it every witness is listed.
    #[arg(long = "do")]
    pub deleted: Option<String>,
    /// Values of the conditioning set, as Z=1.
    #[arg(long)]
    pub given: Option<String>,
    /// Bound the controlled direct effect of X on Y = 1 instead.
    #[arg(long)]
    pub acde: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Graph file, or builtin:NAME.
    pub graph: String,
    /// Number of random models.
    #[arg(long, default_value_t = 200)]
    pub models: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Dirichlet concentration of every table row.
    #[arg(long, default_value_t = 1.0)]
    pub concentration: f64,
    /// States per latent vertex.
    #[arg(long, default_value_t = 4)]
    pub latent_states: usize,
    /// Skip bounds containment.
    #[arg(long)]
    pub no_bounds: bool,
    #[arg(long, default_value_t = EXACT_TOLERANCE)]
    pub tol: f64,
}

/// One line of `--format records` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum Record {
    Separation {
        criterion: String,
        a: Vec<String>,
        b: Vec<String>,
        c: Vec<String>,
        d: Vec<String>,
        separated: bool,
        witness_path: Option<Vec<String>>,
    },
    TestablePair {
        x: String,
        y: String,
        d: Vec<String>,
        separated: bool,
    },
    Witness {
        witness: WitnessLabel,
        equality: bool,
    },
    Check(CheckRecord),
    CheckSummary {
        feasible: bool,
        max_margin: f64,
        slices: usize,
        infeasible: usize,
    },
    IvScore {
        score: f64,
        per_x: Vec<f64>,
    },
    IvBounds {
        x: usize,
        bounds: AcdeResult,
    },
    Bounds(BoundsEntry),
    Acde(AcdeEntry),
    Sweep(SweepReport),
    Violation(Violation),
    Error {
        code: i32,
        message: String,
    },
}

/// Exit status for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Precondition(_)
        | Error::ZeroConditioningEvent { .. }
        | Error::GraphTooLarge { .. }
        | Error::SizeCap { .. }
        | Error::SolverFailure(_) => EXIT_PRECONDITION,
        Error::ModelFalsified(_) => EXIT_FALSIFIED,
        _ => EXIT_USAGE,
    }
}

struct Output {
    format: Format,
    text: String,
}

impl Output {
    fn line(&mut self, s: impl AsRef<str>) {
        if self.format == Format::Text {
            self.text.push_str(s.as_ref());
            self.text.push('\n');
        }
    }

    fn record(&mut self, r: Record) {
        if self.format == Format::Records {
            self.text.push_str(&serde_json::to_string(&r).expect("records serialize"));
            self.text.push('\n');
        }
    }
}

type Outcome = std::result::Result<i32, Error>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, S>(args: I) -> (i32, String)
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            return (code, e.render().to_string());
        }
    };
    run_cli(&cli)
}

pub fn run_cli(cli: &Cli) -> (i32, String) {
    let mut out = Output { format: cli.format, text: String::new() };
    let result = match &cli.command {
        Command::Dsep(a) => dsep(a, &mut out),
        Command::Esep(a) => esep(a, &mut out),
        Command::Find(a) => find(a, &mut out),
        Command::Check(a) => check(a, &mut out),
        Command::Iv(a) => iv(a, &mut out),
        Command::Bounds(a) => bounds(a, &mut out),
        Command::Sweep(a) => sweep(a, &mut out),
    };
    match result {
        Ok(code) => (code, out.text),
        Err(e) => {
            let code = exit_code(&e);
            out.line(format!("error: {e}"));
            out.record(Record::Error { code, message: e.to_string() });
            (code, out.text)
        }
    }
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::InvalidQuery(format!("cannot read {}: {e}", path.display())))
}

fn load_graph(spec: &str) -> Result<Dag, Error> {
    if let Some(name) = spec.strip_prefix("builtin:") {
        return fixtures::builtin(name).ok_or_else(|| Error::InvalidQuery(format!("no builtin graph named {name}")));
    }
    parse_graph(&read(Path::new(spec))?)
}

fn load_table(path: &Path, g: Option<&Dag>, out: &mut Output) -> Result<LoadedTable, Error> {
    let loaded = parse_table(&read(path)?, g)?;
    if loaded.renormalized {
        out.line(format!("note: table mass {} renormalized to 1", loaded.original_mass));
    }
    Ok(loaded)
}

fn parse_sets(tokens: &[String]) -> Result<[Vec<String>; 4], Error> {
    let mut sets: [Option<Vec<String>>; 4] = Default::default();
    for token in tokens {
        let (key, list) =
            token.split_once('=').ok_or_else(|| Error::InvalidQuery(format!("expected SET=names, got {token:?}")))?;
        let slot = match key.trim() {
            "A" => 0,
            "B" => 1,
            "C" => 2,
            "D" => 3,
            other => return Err(Error::InvalidQuery(format!("unknown set {other:?}; use A, B, C or D"))),
        };
        if sets[slot].is_some() {
            return Err(Error::InvalidQuery(format!("set {key} given twice")));
        }
        let names = list.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
        sets[slot] = Some(names);
    }
    let [a, b, c, d] = sets;
    Ok([a.unwrap_or_default(), b.unwrap_or_default(), c.unwrap_or_default(), d.unwrap_or_default()])
}

fn named(g: &Dag, path: &Option<Vec<VertexId>>) -> Option<Vec<String>> {
    path.as_ref().map(|p| p.iter().map(|&v| g.name(v).to_string()).collect())
}

fn set_text(names: &[String]) -> String {
    format!("{{{}}}", names.join(", "))
}

fn dsep(args: &SetArgs, out: &mut Output) -> Outcome {
    let g = load_graph(&args.graph)?;
    let [a, b, c, d] = parse_sets(&args.sets)?;
    if !d.is_empty() {
        return Err(Error::InvalidQuery("dsep takes no deletion set; use esep".into()));
    }
    let q = SeparationQuery::from_names(&g, &a, &b, &c, &d)?;
    let v = d_separated(&g, &q)?;
    let path = named(&g, &v.witness_path);
    out.line(if v.separated { "d-separated" } else { "not d-separated" });
    if let Some(p) = &path {
        out.line(format!("open path: {}", p.join(" ")));
    }
    out.record(Record::Separation { criterion: "d".into(), a, b, c, d, separated: v.separated, witness_path: path });
    Ok(EXIT_OK)
}

fn esep(args: &SetArgs, out: &mut Output) -> Outcome {
    let g = load_graph(&args.graph)?;
    let [a, b, c, d] = parse_sets(&args.sets)?;
    let q = SeparationQuery::from_names(&g, &a, &b, &c, &d)?;
    let induced = e_separated(&g, &q)?;
    let cut = e_separated_star(&g, &q)?;
    if induced.separated != cut.separated {
        return Err(Error::Precondition(
            "the two characterizations of e-separation disagree; please report this graph".into(),
        ));
    }
    let path = named(&g, &induced.witness_path);
    out.line(format!(
        "{} (both characterizations agree)",
        if induced.separated { "e-separated" } else { "not e-separated" }
    ));
    if let Some(p) = &path {
        out.line(format!("open path after deletion: {}", p.join(" ")));
    }
    out.record(Record::Separation {
        criterion: "e".into(),
        a,
        b,
        c,
        d,
        separated: induced.separated,
        witness_path: path,
    });
    Ok(EXIT_OK)
}

fn all_witnesses(g: &Dag, max_c: Option<usize>, max_d: Option<usize>) -> Result<Vec<EsepWitness>, Error> {
    let observed: Vec<VertexId> = g.observed().collect();
    let n = observed.len();
    let mut ws = Vec::new();
    for &x in &observed {
        for &y in &observed {
            if x < y && !g.adjacent(x, y) {
                ws.extend(enumerate_witnesses(g, x, y, max_c.unwrap_or(n), max_d.unwrap_or(n))?);
            }
        }
    }
    Ok(ws)
}

fn find(args: &FindArgs, out: &mut Output) -> Outcome {
    let g = load_graph(&args.graph)?;
    let pairs = testable_pairs(&g);
    out.line("testable pairs:");
    if pairs.is_empty() {
        out.line("  none");
    }
    for p in &pairs {
        let d = g.names(&p.d);
        out.line(format!(
            "  {} {}: {} after deleting {}",
            g.name(p.x),
            g.name(p.y),
            if p.separated { "e-separated" } else { "not e-separated" },
            set_text(&d)
        ));
        out.record(Record::TestablePair { x: g.name(p.x).into(), y: g.name(p.y).into(), d, separated: p.separated });
    }
    out.line("witnesses:");
    let ws = all_witnesses(&g, args.max_c, args.max_d)?;
    if ws.is_empty() {
        out.line("  none");
    }
    for w in &ws {
        let label = WitnessLabel::new(&g, w);
        let equality = w.is_independence();
        let kind = if equality {
            "equality constraint"
        } else if w.strong {
            "inequality, strong form"
        } else {
            "inequality, weak form"
        };
        out.line(format!(
            "  {} {} | C={} D={}: {kind}",
            label.a.join(","),
            label.b.join(","),
            set_text(&label.c),
            set_text(&label.d)
        ));
        out.record(Record::Witness { witness: label, equality });
    }
    Ok(EXIT_OK)
}

fn check(args: &CheckArgs, out: &mut Output) -> Outcome {
    let g = load_graph(&args.graph)?;
    let t = load_table(&args.table, Some(&g), out)?.table;
    let ws = all_witnesses(&g, args.max_c, args.max_d)?;
    let report = match args.grid {
        Some(grid) => check_distribution_with(&g, &t, &ws, &|s| match s.form {
            crate::constraints::SliceForm::Weak => brute_force_compat(s, grid),
            crate::constraints::SliceForm::Strong => compatibility(s),
        })?,
        None => check_distribution_with(&g, &t, &ws, &compatibility)?,
    };
    let mut infeasible = 0;
    for mut r in report.records {
        r.feasible = r.margin <= args.tol;
        if !r.feasible {
            infeasible += 1;
        }
        let w = &r.witness;
        let at = match &r.violating_c {
            Some(c) if !r.feasible && !c.is_empty() => format!(" at {c}"),
            _ => String::new(),
        };
        out.line(format!(
            "{} {} | C={} D={} at {}: {} form, margin {:.6}, {}{at}",
            w.a.join(","),
            w.b.join(","),
            set_text(&w.c),
            set_text(&w.d),
            if r.d_value.is_empty() { "-".to_string() } else { r.d_value.to_string() },
            if w.strong { "strong" } else { "weak" },
            r.margin,
            if r.feasible { "feasible" } else { "INFEASIBLE" },
        ));
        out.record(Record::Check(r));
    }
    let slices = out_count(&ws, &g);
    let feasible = infeasible == 0;
    out.line(if feasible {
        "all constraints satisfied".to_string()
    } else {
        format!("graph falsified: {infeasible} infeasible slice(s)")
    });
    out.record(Record::CheckSummary { feasible, max_margin: report.max_margin, slices, infeasible });
    Ok(if feasible { EXIT_OK } else { EXIT_FALSIFIED })
}

fn out_count(ws: &[EsepWitness], g: &Dag) -> usize {
    ws.iter().map(|w| w.d.iter().map(|&v| g.states(v)).product::<usize>()).sum()
}

fn iv(args: &IvArgs, out: &mut Output) -> Outcome {
    let t = load_table(&args.table, None, out)?.table;
    let vars: Vec<&str> = t.variables().iter().map(String::as_str).collect();
    let t = if vars.len() > 3 { t.marginalize(&[&args.z, &args.x, &args.y])? } else { t };
    let p = IvTable::from_joint(&t, &args.z, &args.x, &args.y)?;
    let per_x: Vec<f64> = (0..p.x_states()).map(|x| p.score_at(x)).collect();
    let score = instrumental_inequality_score(&p);
    out.line(format!("instrumental inequality score: {score:.4}"));
    for (x, s) in per_x.iter().enumerate() {
        out.line(format!("  {}={x}: {s:.4}", args.x));
    }
    out.record(Record::IvScore { score, per_x });
    if p.z_states() == 2 && p.x_states() == 2 && p.y_states() == 2 {
        for x in 0..2 {
            let b = iv_acde_bounds(&p, x)?;
            out.line(format!(
                "direct effect of {} on {} at {}={x}: [{:.4}, {:.4}]{}",
                args.z,
                args.y,
                args.x,
                b.lower,
                b.upper,
                if b.includes_zero { "" } else { " (excludes zero)" }
            ));
            out.record(Record::IvBounds { x, bounds: b });
        }
    }
    if score > 1.0 + args.tol {
        out.line("instrumental inequality violated: graph falsified");
        Ok(EXIT_FALSIFIED)
    } else {
        Ok(EXIT_OK)
    }
}

fn var_value(s: &str) -> Result<(String, Option<usize>), Error> {
    match s.split_once('=') {
        None => Ok((s.trim().to_string(), None)),
        Some((name, v)) => {
            let v = v.trim().parse().map_err(|_| Error::InvalidAssignment(format!("bad state in {s:?}")))?;
            Ok((name.trim().to_string(), Some(v)))
        }
    }
}

fn assignment(s: &Option<String>) -> Result<Assignment, Error> {
    match s {
        None => Ok(Assignment::new()),
        Some(text) => Assignment::parse(text),
    }
}

fn print_interval(label: &str, lower: f64, upper: f64) -> String {
    format!("{label} [{lower:.6}, {upper:.6}]")
}

fn bounds(args: &BoundsArgs, out: &mut Output) -> Outcome {
    let g = load_graph(&args.graph)?;
    let t = load_table(&args.table, Some(&g), out)?.table;
    let (x, xv) = var_value(&args.x)?;
    let (y, yv) = var_value(&args.y)?;
    let mut falsified = false;

    if args.acde {
        let targets: Vec<(Assignment, Assignment)> = match &args.deleted {
            Some(_) => vec![(assignment(&args.deleted)?, assignment(&args.given)?)],
            None => {
                let mut seen = Vec::new();
                for e in bounds_report(&g, &t, &x, &y, usize::MAX, usize::MAX)? {
                    if !seen.contains(&(e.d.clone(), e.c.clone())) {
                        seen.push((e.d, e.c));
                    }
                }
                seen
            }
        };
        if targets.is_empty() {
            return Err(Error::Precondition(format!("no deletion set separates {x} from {y}")));
        }
        for (d, c) in targets {
            let q = BoundsQuery::new((&x, 1), (&y, 1), d, c);
            let e = acde_entry(&g, &t, &q)?;
            out.line(format!(
                "do({}) given {}:",
                if e.d.is_empty() { "-".into() } else { e.d.to_string() },
                display(&e.c)
            ));
            out.line(print_interval("  general     ", e.general.lower, e.general.upper));
            if let Some(s) = e.strengthened {
                out.line(print_interval("  strengthened", s.lower, s.upper));
            }
            out.line(
                print_interval("  intersection", e.lower, e.upper)
                    + if e.includes_zero { "" } else { " (excludes zero)" },
            );
            falsified |= e.falsified;
            out.record(Record::Acde(e));
        }
    } else {
        let entries: Vec<BoundsEntry> = match &args.deleted {
            Some(_) => {
                let (d, c) = (assignment(&args.deleted)?, assignment(&args.given)?);
                let mut v = Vec::new();
                for xs in values(&g, &x, xv)? {
                    for ys in values(&g, &y, yv)? {
                        v.push(evaluate_target(&g, &t, &BoundsQuery::new((&x, xs), (&y, ys), d.clone(), c.clone()))?);
                    }
                }
                v
            }
            None => bounds_report(&g, &t, &x, &y, usize::MAX, usize::MAX)?
                .into_iter()
                .filter(|e| xv.is_none_or(|v| e.x.1 == v) && yv.is_none_or(|v| e.y.1 == v))
                .collect(),
        };
        if entries.is_empty() {
            return Err(Error::Precondition(format!("no deletion set separates {x} from {y}")));
        }
        for e in entries {
            out.line(format!(
                "p({}={} | do({}={}{}), {}):",
                e.y.0,
                e.y.1,
                e.x.0,
                e.x.1,
                if e.d.is_empty() { String::new() } else { format!(", {}", e.d) },
                display(&e.c)
            ));
            if let Some(b) = e.general {
                out.line(print_interval("  general     ", b.lower, b.upper));
            }
            if let Some(b) = e.strengthened {
                out.line(print_interval("  strengthened", b.lower, b.upper));
            }
            out.line(print_interval("  intersection", e.lower, e.upper));
            falsified |= e.falsified;
            out.record(Record::Bounds(e));
        }
    }
    if falsified {
        out.line("bounds do not overlap: graph falsified");
        Ok(EXIT_FALSIFIED)
    } else {
        Ok(EXIT_OK)
    }
}

fn display(c: &Assignment) -> String {
    if c.is_empty() {
        "-".into()
    } else {
        c.to_string()
    }
}

fn values(g: &Dag, name: &str, fixed: Option<usize>) -> Result<Vec<usize>, Error> {
    Ok(match fixed {
        Some(v) => vec![v],
        None => (0..g.states(g.id(name)?)).collect(),
    })
}

fn sweep(args: &SweepArgs, out: &mut Output) -> Outcome {
    let g = load_graph(&args.graph)?;
    let config = SweepConfig {
        n_models: args.models,
        seed: args.seed,
        latent_states: args.latent_states,
        concentration: args.concentration,
        bounds: !args.no_bounds,
        tolerance: args.tol,
    };
    let report = soundness_sweep_with(&g, &config)?;
    out.line(format!("models: {} (seed {})", config.n_models, config.seed));
    out.line(format!("witnesses: {}, slices checked: {}", report.witnesses, report.slices_checked));
    out.line(format!("max compatibility margin: {:e}", report.max_margin));
    out.line(format!(
        "bounds checked: {}, skipped: {}, dominance checks: {}",
        report.bounds_checked, report.bounds_skipped, report.dominance_checked
    ));
    if let Some(e) = report.max_bounds_excess {
        out.line(format!("max bounds excess: {e:e}"));
    }
    for v in &report.violations {
        out.line(format!(
            "violation ({:?}) in model {} (seed {}): {} [{:e}]",
            v.kind, v.model_index, v.model_seed, v.detail, v.magnitude
        ));
        out.record(Record::Violation(v.clone()));
    }
    out.line(format!("{} violation(s)", report.violations.len()));
    let code = if report.passed() { EXIT_OK } else { EXIT_FALSIFIED };
    out.record(Record::Sweep(report));
    Ok(code)
}
