//! The `eqflow` command line: `solve`, `rental` and `gen`.
//!
//! Exit codes: 0 feasible, 1 infeasible, 2 unknown, 3 for usage, input and
//! I/O errors.

use std::ffi::OsString;
use std::fs;
use std::io::{Read, Write};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::carrental::{self, RentalCase};
use crate::fbce::{self, Refutation};
use crate::json::{self, Document};
use crate::model::{
    ArcIndex, Certificate, EqualFlowClass, Infeasibility, Objective, ProblemInstance, ProblemKind,
    Relation, VarBounds, Verdict, Witness,
};
use crate::oracle;
use crate::pipeline::{self, DecideOptions, Method, Stats};
use crate::search::{self, SearchConfig};
use crate::System;

pub const EXIT_FEASIBLE: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "eqflow", version, about = "Feasibility certificates for integer equal-flow problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Fbce,
    Search,
    Oracle,
    Penalty,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Fbce => Method::Fbce,
            MethodArg::Search => Method::Search,
            MethodArg::Oracle => Method::Oracle,
            MethodArg::Penalty => Method::Penalty,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CaseArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "3")]
    Three,
    Auto,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide an instance or constraint system file ("-" reads stdin).
    Solve {
        path: String,
        /// Defaults to search for instances and fbce for systems.
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        /// Penalty weight for --method penalty.
        #[arg(long)]
        lambda: Option<i64>,
        /// Print elimination steps or search statistics.
        #[arg(long)]
        trace: bool,
        /// Print the witness grid.
        #[arg(long)]
        witness: bool,
        /// Write a JSON run report.
        #[arg(long, value_name = "FILE")]
        json_out: Option<String>,
        #[arg(long, default_value_t = 5_000_000)]
        node_limit: u64,
        /// Include wall time in the report.
        #[arg(long)]
        timing: bool,
    },
    /// Decide whether every request of a rental scenario can be accepted.
    Rental {
        path: String,
        #[arg(long, value_enum, default_value = "auto")]
        case: CaseArg,
        #[arg(long, value_enum, default_value = "search")]
        method: MethodArg,
        /// Write the allocation table as CSV ("-" for stdout).
        #[arg(long, value_name = "FILE")]
        allocations: Option<String>,
        #[arg(long, value_name = "FILE")]
        json_out: Option<String>,
        #[arg(long)]
        timing: bool,
    },
    /// Print a seeded random instance.
    Gen {
        /// Sources, destinations and periods, e.g. 3,3,2.
        #[arg(long, value_parser = parse_dims)]
        dims: [usize; 3],
        #[arg(long, default_value_t = 0.3)]
        class_density: f64,
        #[arg(long, default_value_t = 0.1)]
        forbidden_density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Upper bound of every arc.
        #[arg(long, default_value_t = 1)]
        max_bound: i64,
    },
}

fn parse_dims(s: &str) -> Result<[usize; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err("expected three comma-separated sizes".into());
    }
    let mut out = [0; 3];
    for (k, p) in parts.iter().enumerate() {
        out[k] = p.trim().parse().map_err(|_| format!("{p:?} is not a size"))?;
        if out[k] == 0 {
            return Err("sizes must be positive".into());
        }
    }
    Ok(out)
}

/// Settings for [`generate_instance`].
#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub dims: [usize; 3],
    pub class_density: f64,
    pub forbidden_density: f64,
    pub seed: u64,
    pub max_bound: i64,
}

impl GenConfig {
    pub fn new(dims: [usize; 3], seed: u64) -> Self {
        GenConfig {
            dims,
            class_density: 0.3,
            forbidden_density: 0.1,
            seed,
            max_bound: 1,
        }
    }
}

/// A random same-route instance with balances derived from a planted flow,
/// perturbed by one unit half of the time.
///
/// Each route gets a class over a random run of at least two periods with
/// probability `class_density`; each arc is forbidden with probability
/// `forbidden_density`, and a class touching a forbidden arc is forbidden
/// whole. Relations are drawn independently for rows and columns.
pub fn generate_instance(cfg: &GenConfig) -> ProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let [ni, nj, nt] = cfg.dims;
    let cd = cfg.class_density.clamp(0.0, 1.0);
    let fd = cfg.forbidden_density.clamp(0.0, 1.0);
    let ub = cfg.max_bound.max(0);
    let mut inst = ProblemInstance::new(ni, nj, nt);
    inst.set_all_bounds(VarBounds::new(0, ub));
    let relations = [Relation::Eq, Relation::Le, Relation::Ge];
    inst.row_relation = relations[rng.random_range(0..3)];
    inst.col_relation = relations[rng.random_range(0..3)];
    inst.kind = if inst.row_relation == Relation::Eq && inst.col_relation == Relation::Eq {
        ProblemKind::Transportation
    } else {
        ProblemKind::Generalized
    };
    if nt >= 2 {
        for i in 0..ni {
            for j in 0..nj {
                if rng.random_bool(cd) {
                    let len = rng.random_range(2..=nt);
                    let start = rng.random_range(0..=nt - len);
                    inst.classes.push(EqualFlowClass::new(
                        format!("t_{i}_{j}"),
                        (start..start + len).map(|t| ArcIndex::new(i, j, t)).collect(),
                    ));
                }
            }
        }
    }
    for arc in inst.arcs().collect::<Vec<_>>() {
        if rng.random_bool(fd) {
            inst.forbidden.insert(arc);
        }
    }
    for c in &inst.classes {
        if c.members.iter().any(|m| inst.forbidden.contains(m)) {
            for m in &c.members {
                inst.forbidden.insert(*m);
            }
        }
    }
    let mut planted = Witness::zeros(inst.arc_count());
    for c in &inst.classes {
        let v = if inst.is_forbidden(&c.members[0]) { 0 } else { rng.random_range(0..=ub) };
        for m in &c.members {
            planted.set(&inst, m, v);
        }
    }
    let owner = inst.class_index().expect("generated classes are disjoint");
    for (pos, arc) in inst.arcs().enumerate() {
        if owner[pos].is_none() && !inst.is_forbidden(&arc) {
            planted.values[pos] = rng.random_range(0..=ub);
        }
    }
    for arc in inst.arcs().collect::<Vec<_>>() {
        let v = planted.get(&inst, &arc);
        inst.row_supply[arc.source][arc.period] += v;
        inst.col_demand[arc.dest][arc.period] += v;
    }
    if rng.random_bool(0.5) {
        let delta = if rng.random_bool(0.5) { 1 } else { -1 };
        let t = rng.random_range(0..nt);
        let cell = if rng.random_bool(0.5) {
            &mut inst.row_supply[rng.random_range(0..ni)][t]
        } else {
            &mut inst.col_demand[rng.random_range(0..nj)][t]
        };
        *cell = (*cell + delta).max(0);
    }
    inst.objective = Some(Objective {
        linear: (0..inst.arc_count()).map(|_| rng.random_range(0..=9)).collect(),
        ..Default::default()
    });
    inst
}

/// `sha256:<hex>` of the raw input.
pub fn digest(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

fn refutation_json(r: &Refutation<crate::Rational>, sys: Option<&System>) -> Value {
    let chain: Vec<Value> = r
        .chain()
        .map(|(label, m)| json!({"label": label, "multiplier": m.to_string()}))
        .collect();
    let mut out = json!({
        "type": "derived",
        "parents": r.parent_count(),
        "chain": chain,
    });
    if let Some(sys) = sys {
        out["contradiction"] = json!(sys.row_to_string(&r.contradiction));
        out["replays"] = json!(r.replay(sys));
    }
    out
}

/// Certificate as report JSON.
pub fn certificate_json(cert: &Certificate, sys: Option<&System>) -> Value {
    match cert {
        Certificate::Feasible(_) => json!({"verdict": "FEASIBLE"}),
        Certificate::Unknown(reason) => json!({"verdict": "UNKNOWN", "reason": reason}),
        Certificate::Infeasible(inf) => {
            let evidence = match inf {
                Infeasibility::Derived(r) => refutation_json(r, sys),
                Infeasibility::Exhausted { method, explored } => {
                    json!({"type": "exhausted", "method": method, "explored": explored})
                }
                Infeasibility::Imbalance { supply, demand } => {
                    json!({"type": "imbalance", "supply": supply, "demand": demand})
                }
                Infeasibility::Construction(reason) => json!({"type": "construction", "reason": reason}),
            };
            json!({"verdict": "INFEASIBLE", "evidence": evidence})
        }
    }
}

fn stats_json(stats: &Stats) -> Value {
    let mut out = json!({});
    if let Some(n) = stats.nodes {
        out["nodes"] = json!(n);
    }
    if let Some(g) = &stats.growth {
        out["constraints_per_step"] = json!(g.counts);
    }
    if let Some(p) = &stats.penalty {
        out["penalty"] = json!({
            "cost": p.cost,
            "forbidden": p.forbidden_penalty,
            "equality": p.equality_penalty,
            "total": p.penalty(),
        });
    }
    if let Some(l) = stats.lambda {
        out["lambda"] = json!(l);
    }
    out
}

fn exit_code(v: Verdict) -> i32 {
    match v {
        Verdict::Feasible => EXIT_FEASIBLE,
        Verdict::Infeasible => EXIT_INFEASIBLE,
        Verdict::Unknown => EXIT_UNKNOWN,
    }
}

/// Witness as one matrix per period, sources down, destinations across.
pub fn format_grid(inst: &ProblemInstance, w: &Witness) -> String {
    let mut out = String::new();
    for t in 0..inst.n_periods {
        out.push_str(&format!("period {t}:\n"));
        for i in 0..inst.n_sources {
            let row: Vec<String> = (0..inst.n_dests)
                .map(|j| w.get(inst, &ArcIndex::new(i, j, t)).to_string())
                .collect();
            out.push_str(&format!("  {}\n", row.join(" ")));
        }
    }
    out
}

struct Io<'a> {
    stdin: &'a mut dyn Read,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

#[derive(Debug)]
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn read_input(path: &str, io: &mut Io<'_>) -> Result<Vec<u8>, Failure> {
    if path == "-" {
        let mut buf = Vec::new();
        io.stdin.read_to_end(&mut buf)?;
        Ok(buf)
    } else {
        fs::read(path).map_err(|e| Failure(format!("{path}: {e}")))
    }
}

fn write_target(target: &str, text: &str, io: &mut Io<'_>) -> Result<(), Failure> {
    if target == "-" {
        io.out.write_all(text.as_bytes())?;
    } else {
        fs::write(target, text).map_err(|e| Failure(format!("{target}: {e}")))?;
    }
    Ok(())
}

fn report_text(report: &Value) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    path: &str,
    method: Option<MethodArg>,
    lambda: Option<i64>,
    trace: bool,
    witness: bool,
    json_out: Option<&str>,
    node_limit: u64,
    timing: bool,
    io: &mut Io<'_>,
) -> Result<i32, Failure> {
    let started = Instant::now();
    let bytes = read_input(path, io)?;
    let text = String::from_utf8(bytes.clone())?;
    let doc = json::parse_document(&text)?;
    let opts = DecideOptions {
        lambda,
        search: SearchConfig {
            node_limit,
            time_limit: None,
            ..Default::default()
        },
        ..Default::default()
    };
    let (method, certificate, stats, system, grid): (Method, Certificate, Stats, Option<System>, Option<ProblemInstance>) =
        match doc {
            Document::Instance(inst) => {
                if let Some(v) = inst.validate().first() {
                    return Err(Failure(format!("invalid instance: {v}")));
                }
                let method: Method = method.unwrap_or(MethodArg::Search).into();
                let d = pipeline::decide(&inst, method, &opts);
                (method, d.certificate, d.stats, d.system, Some(inst))
            }
            Document::System(sys, bounds) => {
                let method: Method = method.unwrap_or(MethodArg::Fbce).into();
                let mut stats = Stats::default();
                let cert = match method {
                    Method::Fbce => {
                        let run = fbce::certify_with(&sys, &opts.fbce);
                        stats.growth = Some(run.growth());
                        run.certificate
                    }
                    Method::Search => match search::solve(&sys, &bounds, None, &opts.search) {
                        Ok(r) => {
                            stats.nodes = Some(r.nodes_explored);
                            r.certificate
                        }
                        Err(e) => Certificate::Unknown(e.to_string()),
                    },
                    Method::Oracle => oracle::system_verdict(&sys, &bounds, opts.budget),
                    Method::Penalty => {
                        return Err(Failure("the penalty method needs an instance, not a system".into()))
                    }
                };
                (method, cert, stats, Some(sys), None)
            }
            Document::Scenario(_) => {
                return Err(Failure("scenario files are decided with `eqflow rental`".into()));
            }
        };

    let verdict = certificate.verdict();
    writeln!(io.out, "{verdict}")?;
    if let Certificate::Infeasible(Infeasibility::Derived(r)) = &certificate {
        if let Some(sys) = &system {
            writeln!(io.out, "{}", r.describe(sys))?;
        }
    } else if let Certificate::Infeasible(other) = &certificate {
        writeln!(io.out, "reason: {}", certificate_json(&Certificate::Infeasible(other.clone()), None)["evidence"])?;
    } else if let Certificate::Unknown(reason) = &certificate {
        writeln!(io.out, "reason: {reason}")?;
    }
    if let Some(p) = &stats.penalty {
        writeln!(io.out, "penalty: {}", p.penalty())?;
    }
    if trace {
        if let Some(g) = &stats.growth {
            for line in g.trace_lines() {
                writeln!(io.out, "{line}")?;
            }
        }
        if let Some(n) = stats.nodes {
            writeln!(io.out, "nodes: {n}")?;
        }
    }
    if witness {
        if let Some(w) = certificate.witness() {
            match (&grid, &system) {
                (Some(inst), _) => write!(io.out, "{}", format_grid(inst, w))?,
                (None, Some(sys)) => {
                    for (v, x) in w.values.iter().enumerate() {
                        writeln!(io.out, "{} = {x}", sys.name(v))?;
                    }
                }
                _ => {}
            }
        }
    }
    if let Some(target) = json_out {
        let mut report = json!({
            "command": "solve",
            "input_digest": digest(&bytes),
            "pipeline": method.name(),
            "certificate": certificate_json(&certificate, system.as_ref()),
            "stats": stats_json(&stats),
        });
        if let Some(w) = certificate.witness() {
            report["witness"] = json!(w.values);
        }
        if let Some(l) = lambda {
            report["lambda"] = json!(l);
        }
        if timing {
            report["wall_time_ms"] = json!(started.elapsed().as_millis() as u64);
        }
        write_target(target, &report_text(&report), io)?;
    }
    Ok(exit_code(verdict))
}

fn cmd_rental(
    path: &str,
    case: CaseArg,
    method: MethodArg,
    allocations: Option<&str>,
    json_out: Option<&str>,
    timing: bool,
    io: &mut Io<'_>,
) -> Result<i32, Failure> {
    let started = Instant::now();
    let bytes = read_input(path, io)?;
    let scenario = json::parse_scenario(&String::from_utf8(bytes.clone())?)?;
    let case = match case {
        CaseArg::One => Some(RentalCase::One),
        CaseArg::Two => Some(RentalCase::Two),
        CaseArg::Three => Some(RentalCase::Three),
        CaseArg::Auto => None,
    };
    let method: Method = method.into();
    if method == Method::Penalty {
        return Err(Failure("rental supports fbce, search and oracle".into()));
    }
    let acc = carrental::accept_requests(&scenario, case, method, &DecideOptions::default())?;
    let verdict = acc.certificate.verdict();
    writeln!(io.out, "{verdict}")?;
    writeln!(io.out, "case: {}", acc.case.number())?;
    if let Certificate::Unknown(reason) = &acc.certificate {
        writeln!(io.out, "reason: {reason}")?;
    }
    if let (Some(target), Some(table)) = (allocations, &acc.allocations) {
        let mut csv = String::from("request,model,day,count\n");
        for a in table {
            csv.push_str(&format!("{},{},{},{}\n", a.request, a.model, a.day, a.count));
        }
        write_target(target, &csv, io)?;
    }
    if let Some(target) = json_out {
        let mut report = json!({
            "command": "rental",
            "input_digest": digest(&bytes),
            "pipeline": format!("case{}/{}", acc.case.number(), method.name()),
            "certificate": certificate_json(&acc.certificate, None),
            "stats": {"nodes": acc.nodes},
        });
        if let Some(table) = &acc.allocations {
            report["allocations"] = json!(table);
        }
        if timing {
            report["wall_time_ms"] = json!(started.elapsed().as_millis() as u64);
        }
        write_target(target, &report_text(&report), io)?;
    }
    Ok(exit_code(verdict))
}

fn dispatch(cli: Cli, io: &mut Io<'_>) -> Result<i32, Failure> {
    match cli.command {
        Command::Solve {
            path,
            method,
            lambda,
            trace,
            witness,
            json_out,
            node_limit,
            timing,
        } => cmd_solve(&path, method, lambda, trace, witness, json_out.as_deref(), node_limit, timing, io),
        Command::Rental {
            path,
            case,
            method,
            allocations,
            json_out,
            timing,
        } => cmd_rental(&path, case, method, allocations.as_deref(), json_out.as_deref(), timing, io),
        Command::Gen {
            dims,
            class_density,
            forbidden_density,
            seed,
            max_bound,
        } => {
            for (name, d) in [("class", class_density), ("forbidden", forbidden_density)] {
                if !(0.0..=1.0).contains(&d) {
                    return Err(Failure(format!("{name} density must be within [0, 1]")));
                }
            }
            let inst = generate_instance(&GenConfig {
                dims,
                class_density,
                forbidden_density,
                seed,
                max_bound,
            });
            writeln!(io.out, "{}", json::instance_to_json(&inst))?;
            Ok(EXIT_FEASIBLE)
        }
    }
}

/// Runs the command line and returns the exit code.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut io = Io { stdin, out, err };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(io.out, "{}", e.render());
                    return 0;
                }
                _ => EXIT_ERROR,
            };
            let _ = write!(io.err, "{}", e.render());
            return code;
        }
    };
    match dispatch(cli, &mut io) {
        Ok(code) => code,
        Err(Failure(msg)) => {
            let _ = writeln!(io.err, "error: {msg}");
            EXIT_ERROR
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str], stdin: &str) -> (i32, String, String) {
        let mut input = stdin.as_bytes();
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(
            std::iter::once("eqflow").chain(args.iter().copied()),
            &mut input,
            &mut out,
            &mut err,
        );
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    const MINIMAL: &str = r#"{"dims":[1,1,1],"row_supply":[[1]],"col_demand":[[1]]}"#;

    #[test]
    fn minimal_instance_is_feasible() {
        let (code, out, _) = run_args(&["solve", "-"], MINIMAL);
        assert_eq!(code, 0);
        assert_eq!(out.lines().next(), Some("FEASIBLE"));
    }

    #[test]
    fn contradictory_system_prints_refutation() {
        let sys = r#"{"variables":["x"],"constraints":[
            {"coeffs":{"x":1},"rel":">=","rhs":1},
            {"coeffs":{"x":1},"rel":"<=","rhs":0}],"bounds":{"x":[-5,5]}}"#;
        let (code, out, _) = run_args(&["solve", "-"], sys);
        assert_eq!(code, 1);
        assert!(out.starts_with("INFEASIBLE\n"));
        assert!(out.contains("c0") && out.contains("c1"), "{out}");
    }

    #[test]
    fn penalty_method_reports_zero() {
        let (code, out, _) = run_args(&["solve", "-", "--method", "penalty"], MINIMAL);
        assert_eq!(code, 0);
        assert!(out.contains("penalty: 0"));
    }

    #[test]
    fn parse_errors_exit_three_with_pointer() {
        let (code, _, err) = run_args(&["solve", "-"], r#"{"dims":[1,1,"a"],"row_supply":[],"col_demand":[]}"#);
        assert_eq!(code, 3);
        assert!(err.contains("/dims/2"), "{err}");
        let (code, _, _) = run_args(&["solve"], "");
        assert_eq!(code, 3);
        let (code, _, _) = run_args(&["frobnicate"], "");
        assert_eq!(code, 3);
    }

    #[test]
    fn gen_is_deterministic_and_valid() {
        let a = run_args(&["gen", "--dims", "3,3,2", "--seed", "1"], "");
        let b = run_args(&["gen", "--dims", "3,3,2", "--seed", "1"], "");
        assert_eq!(a, b);
        let inst = json::parse_instance(&a.1).unwrap();
        assert!(inst.validate().is_empty());
    }

    #[test]
    fn gen_without_density_has_no_structure() {
        let cfg = GenConfig {
            class_density: 0.0,
            forbidden_density: 0.0,
            ..GenConfig::new([3, 3, 2], 5)
        };
        let inst = generate_instance(&cfg);
        assert!(inst.classes.is_empty() && inst.forbidden.is_empty());
    }

    #[test]
    fn gen_3_3_2_seed_7_fits_the_oracle() {
        let inst = generate_instance(&GenConfig::new([3, 3, 2], 7));
        let c = oracle::oracle_verdict(&inst, oracle::EnumerationBudget::default());
        assert!(!matches!(c, Certificate::Unknown(_)));
    }

    #[test]
    fn rental_auto_picks_case_one_for_single_days() {
        let s = r#"{"horizon":1,"models":["b0"],"availability":{"counts":[[1]]},
            "requests":[{"id":"r","start":1,"duration":1,"models":["b0"],"quantity":1}]}"#;
        let (code, out, _) = run_args(&["rental", "-", "--allocations", "-"], s);
        assert_eq!(code, 0);
        assert_eq!(out, "FEASIBLE\ncase: 1\nrequest,model,day,count\nr,b0,1,1\n");
    }
}
