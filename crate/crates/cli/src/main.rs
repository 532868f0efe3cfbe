//! `uncert`: seeded verification campaigns, equality-family construction and
//! classification, overlap bounds, gap search, and the data-processing trace,
//! all emitting reproducible JSON reports.
//!
//! Exit codes: 0 everything holds / certified, 1 a violation or a failed
//! certification, 2 usage or input errors.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use uncert_core::bounds::{
    eval_relation_with_tol, overlap_r, r_projected, single_povm_bound, RelationId, RelationInputs,
    UncertaintyReport, Verdict,
};
use uncert_core::io;
use uncert_core::mus::{
    check_mus_equality, classify_mus, construct_omega, construct_thm2, construct_thm4_ii,
    construct_thm4_iii, construct_thm5, MusClass, MusFamilySpec,
};
use uncert_core::optimize::{minimize_gap, GapObjective};
use uncert_core::qmath::{support_projector, CMatrix};
use uncert_core::states::{
    fourier_pair, random_basis, random_povm, random_rank1_povm, random_state, trial_seed, BasisSet,
    QState,
};

#[derive(Parser)]
#[command(
    name = "uncert",
    version,
    about = "Entropic uncertainty relations with quantum side information"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a relation on seeded random instances or a provided state
    Verify(VerifyArgs),
    /// Construct, check, or classify minimum-uncertainty states
    Mus(MusArgs),
    /// Overlap bounds for a basis pair, optionally projected
    Bound(BoundArgs),
    /// Minimize a relation gap over states
    Search(SearchArgs),
    /// Data-processing chain on a tripartite pure state
    Trace(TraceArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl Format {
    fn as_str(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

#[derive(Args)]
struct VerifyArgs {
    /// Relation tag, e.g. EQ10
    #[arg(long)]
    relation: String,
    /// Comma-separated subsystem dimensions
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    /// Master seed; per-trial seeds derive from it
    #[arg(long)]
    seed: Option<u64>,
    /// Equality threshold on |gap|
    #[arg(long, default_value_t = 1e-8)]
    tol_eq: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Evaluate this state instead of sampling
    #[arg(long)]
    state: Option<PathBuf>,
    /// Measurement basis file; repeat for a pair
    #[arg(long)]
    basis: Vec<PathBuf>,
    /// Projector file for the state-dependent bounds
    #[arg(long)]
    projector: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MusAction {
    Construct,
    Check,
    Classify,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyChoice {
    Auto,
    Thm2,
    Thm4ii,
    Thm4iii,
    Thm5,
    Omega,
}

#[derive(Args)]
struct MusArgs {
    #[arg(value_enum)]
    action: MusAction,
    /// Family spec file (construct)
    #[arg(long)]
    spec: Option<PathBuf>,
    /// State file (check / classify)
    #[arg(long)]
    state: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FamilyChoice::Auto)]
    family: FamilyChoice,
    #[arg(long, default_value_t = 1e-8)]
    tol_eq: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// construct: where the state is written; otherwise the report
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    /// Two basis files
    #[arg(long, required = true, num_args = 1)]
    basis: Vec<PathBuf>,
    #[arg(long)]
    projector: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    relation: String,
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// Restart count
    #[arg(long, default_value_t = 20)]
    trials: u64,
    #[arg(long)]
    seed: Option<u64>,
    /// Success threshold on the best gap
    #[arg(long, default_value_t = 1e-6)]
    tol_eq: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Where the best state is written; the report goes to stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long)]
    state: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Everything a report needs to be reproduced.
#[derive(Serialize)]
struct RunConfig {
    command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    action: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    relation: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dims: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tol_eq: Option<f64>,
    format: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    state: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    basis: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    projector: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    spec: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    family: Option<String>,
}

impl RunConfig {
    fn new(command: &str) -> Self {
        Self {
            command: command.into(),
            action: None,
            relation: None,
            dims: None,
            trials: None,
            seed: None,
            tol_eq: None,
            format: "json".into(),
            out: None,
            state: None,
            basis: Vec::new(),
            projector: None,
            spec: None,
            family: None,
        }
    }
}

#[derive(Serialize)]
struct Summary {
    #[serde(skip_serializing_if = "Option::is_none")]
    min_gap: Option<f64>,
    violations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    worst_seed: Option<u64>,
}

#[derive(Serialize)]
struct ReportDocument {
    version: &'static str,
    config: RunConfig,
    results: Value,
    summary: Summary,
}

impl ReportDocument {
    fn new(config: RunConfig, results: Value, summary: Summary) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION"),
            config,
            results,
            summary,
        }
    }

    fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Serialize)]
struct TrialRecord {
    trial: u64,
    seed: u64,
    #[serde(flatten)]
    report: UncertaintyReport,
}

type CliError = Box<dyn std::error::Error>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Verify(args) => run_verify(args),
        Command::Mus(args) => run_mus(args),
        Command::Bound(args) => run_bound(args),
        Command::Search(args) => run_search(args),
        Command::Trace(args) => run_trace(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

/// Prints the report and mirrors it to `--out` when that path is the report
/// sink for the command.
fn emit(body: String, out: Option<&Path>) -> Result<(), CliError> {
    print!("{body}");
    if let Some(path) = out {
        write_atomic(path, &body)?;
    }
    Ok(())
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Holds => "holds",
        Verdict::Equality => "equality",
        Verdict::Violated => "violated",
    }
}

fn load_state(path: &Path) -> Result<QState, CliError> {
    Ok(io::state_from_slice(&fs::read(path)?)?)
}

fn load_basis(path: &Path) -> Result<BasisSet, CliError> {
    Ok(io::basis_from_slice(&fs::read(path)?)?)
}

fn load_projector(path: &Path) -> Result<CMatrix, CliError> {
    Ok(io::projector_from_slice(&fs::read(path)?)?)
}

fn default_dims(rel: RelationId) -> Vec<usize> {
    match rel {
        RelationId::Eq3
        | RelationId::Eq10
        | RelationId::Eq12
        | RelationId::Eq14
        | RelationId::Eq16 => vec![2, 2, 2],
        RelationId::Eq13 | RelationId::Eq15 | RelationId::Eq22 | RelationId::Eq23 => vec![2, 2],
        RelationId::Eq20 | RelationId::Eq21 | RelationId::Eq24 => vec![2],
        RelationId::Eq26 => vec![2, 3, 2],
    }
}

/// Pure states for the tripartite conditioning relations, full rank elsewhere.
fn state_rank(rel: RelationId, dims: &[usize]) -> usize {
    match rel {
        RelationId::Eq3
        | RelationId::Eq10
        | RelationId::Eq12
        | RelationId::Eq14
        | RelationId::Eq16 => 1,
        _ => dims.iter().product(),
    }
}

struct FixedInputs {
    state: Option<QState>,
    bases: Vec<BasisSet>,
    projector: Option<CMatrix>,
}

fn run_trial(
    rel: RelationId,
    dims: &[usize],
    seed: u64,
    fixed: &FixedInputs,
    tol_eq: f64,
) -> Result<UncertaintyReport, CliError> {
    let rho = match &fixed.state {
        Some(s) => s.clone(),
        None => random_state(dims, state_rank(rel, dims), seed)?,
    };
    let d = rho.dims()[0];
    let report = match rel {
        RelationId::Eq3 | RelationId::Eq10 => {
            let pair;
            let sampled;
            let (v, w) = if fixed.bases.len() >= 2 {
                (&fixed.bases[0], &fixed.bases[1])
            } else if rel == RelationId::Eq3 {
                pair = fourier_pair(d)?;
                (&pair.0, &pair.1)
            } else {
                sampled = (
                    random_basis(d, trial_seed(seed, 1))?,
                    random_basis(d, trial_seed(seed, 2))?,
                );
                (&sampled.0, &sampled.1)
            };
            eval_relation_with_tol(rel, &rho, &RelationInputs::with_bases(vec![v, w]), tol_eq)?
        }
        RelationId::Eq12 | RelationId::Eq14 => {
            let p = random_povm(d, d, trial_seed(seed, 3))?;
            let q = random_povm(d, d, trial_seed(seed, 4))?;
            let mut inputs = RelationInputs::with_povms(vec![&p, &q]);
            let pi;
            if rel == RelationId::Eq14 {
                pi = match &fixed.projector {
                    Some(m) => m.clone(),
                    None => support_projector(rho.marginal(&[0])?.matrix())?,
                };
                inputs.projector = Some(&pi);
            }
            eval_relation_with_tol(rel, &rho, &inputs, tol_eq)?
        }
        RelationId::Eq13 | RelationId::Eq15 => {
            let p = random_povm(d, d, trial_seed(seed, 3))?;
            let mut inputs = RelationInputs::with_povms(vec![&p]);
            let pi;
            if rel == RelationId::Eq15 {
                pi = match &fixed.projector {
                    Some(m) => m.clone(),
                    None => support_projector(rho.marginal(&[0])?.matrix())?,
                };
                inputs.projector = Some(&pi);
            }
            eval_relation_with_tol(rel, &rho, &inputs, tol_eq)?
        }
        RelationId::Eq16 => {
            let p = random_povm(d, d, trial_seed(seed, 3))?;
            let n = random_rank1_povm(d, d, trial_seed(seed, 4))?;
            let pi = match &fixed.projector {
                Some(m) => m.clone(),
                None => support_projector(rho.marginal(&[0])?.matrix())?,
            };
            let mut inputs = RelationInputs::with_povms(vec![&p, &n]);
            inputs.projector = Some(&pi);
            eval_relation_with_tol(rel, &rho, &inputs, tol_eq)?
        }
        _ => eval_relation_with_tol(rel, &rho, &RelationInputs::default(), tol_eq)?,
    };
    Ok(report)
}

fn verify_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from("trial,relation");
    if let Some(first) = records.first() {
        let uniform = records.iter().all(|r| {
            r.report
                .lhs_terms
                .iter()
                .zip(&first.report.lhs_terms)
                .all(|((a, _), (b, _))| a == b)
        });
        for (i, (name, _)) in first.report.lhs_terms.iter().enumerate() {
            out.push(',');
            if uniform {
                out.push_str(name);
            } else {
                let _ = write!(out, "lhs{}", i + 1);
            }
        }
    }
    out.push_str(",rhs,gap,holds\n");
    for r in records {
        let _ = write!(out, "{},{}", r.trial, r.report.relation);
        for (_, v) in &r.report.lhs_terms {
            let _ = write!(out, ",{v}");
        }
        let _ = writeln!(
            out,
            ",{},{},{}",
            r.report.rhs,
            r.report.gap,
            verdict_str(r.report.holds)
        );
    }
    out
}

fn run_verify(args: VerifyArgs) -> Result<bool, CliError> {
    let rel: RelationId = args.relation.parse()?;
    let dims = args.dims.clone().unwrap_or_else(|| default_dims(rel));
    let fixed = FixedInputs {
        state: args.state.as_deref().map(load_state).transpose()?,
        bases: args
            .basis
            .iter()
            .map(|p| load_basis(p))
            .collect::<Result<_, _>>()?,
        projector: args.projector.as_deref().map(load_projector).transpose()?,
    };
    let randomized = fixed.state.is_none()
        || matches!(
            rel,
            RelationId::Eq12
                | RelationId::Eq13
                | RelationId::Eq14
                | RelationId::Eq15
                | RelationId::Eq16
        )
        || (rel == RelationId::Eq10 && fixed.bases.len() < 2);
    if randomized && args.seed.is_none() {
        return Err("--seed is required for randomized runs".into());
    }
    if args.trials == 0 {
        return Err("--trials must be at least 1".into());
    }
    let master = args.seed.unwrap_or(0);

    let mut records = Vec::with_capacity(args.trials as usize);
    for i in 0..args.trials {
        let ts = trial_seed(master, i);
        let report = run_trial(rel, &dims, ts, &fixed, args.tol_eq)?;
        records.push(TrialRecord {
            trial: i,
            seed: ts,
            report,
        });
    }

    let violations = records
        .iter()
        .filter(|r| r.report.holds == Verdict::Violated)
        .count();
    let worst = records
        .iter()
        .min_by(|a, b| a.report.gap.total_cmp(&b.report.gap));
    let summary = Summary {
        min_gap: worst.map(|r| r.report.gap),
        violations,
        worst_seed: worst.map(|r| r.seed),
    };

    let mut config = RunConfig::new("verify");
    config.relation = Some(rel.as_str().into());
    config.dims = Some(dims);
    config.trials = Some(args.trials);
    config.seed = args.seed;
    config.tol_eq = Some(args.tol_eq);
    config.format = args.format.as_str().into();
    config.out = args.out.as_deref().map(path_str);
    config.state = args.state.as_deref().map(path_str);
    config.basis = args.basis.iter().map(|p| path_str(p)).collect();
    config.projector = args.projector.as_deref().map(path_str);

    let doc = ReportDocument::new(config, serde_json::to_value(&records)?, summary);
    let body = match args.format {
        Format::Json => doc.to_json(),
        Format::Csv => verify_csv(&records),
    };
    emit(body, args.out.as_deref())?;
    Ok(violations == 0)
}

fn pick_family(choice: FamilyChoice, spec: &MusFamilySpec) -> FamilyChoice {
    if choice != FamilyChoice::Auto {
        return choice;
    }
    if spec.omega_terms.is_some() {
        FamilyChoice::Omega
    } else if spec.q.is_some() {
        FamilyChoice::Thm4ii
    } else if spec.dims.len() > 1 {
        FamilyChoice::Thm5
    } else {
        FamilyChoice::Thm4iii
    }
}

fn family_name(f: FamilyChoice) -> &'static str {
    match f {
        FamilyChoice::Auto => "auto",
        FamilyChoice::Thm2 => "thm2",
        FamilyChoice::Thm4ii => "thm4ii",
        FamilyChoice::Thm4iii => "thm4iii",
        FamilyChoice::Thm5 => "thm5",
        FamilyChoice::Omega => "omega",
    }
}

fn run_mus(args: MusArgs) -> Result<bool, CliError> {
    if args.format == Format::Csv {
        return Err("csv output is only available for verify".into());
    }
    let mut config = RunConfig::new("mus");
    config.tol_eq = Some(args.tol_eq);
    config.out = args.out.as_deref().map(path_str);
    config.state = args.state.as_deref().map(path_str);
    config.spec = args.spec.as_deref().map(path_str);

    match args.action {
        MusAction::Construct => {
            config.action = Some("construct".into());
            let spec_path = args.spec.as_deref().ok_or("construct needs --spec FILE")?;
            let spec = io::spec_from_slice(&fs::read(spec_path)?)?;
            let family = pick_family(args.family, &spec);
            config.family = Some(family_name(family).into());
            let rho = match family {
                FamilyChoice::Thm2 => construct_thm2(&spec)?,
                FamilyChoice::Thm4ii => construct_thm4_ii(&spec)?,
                FamilyChoice::Thm4iii => construct_thm4_iii(&spec)?,
                FamilyChoice::Thm5 => construct_thm5(&spec)?,
                FamilyChoice::Omega => construct_omega(&spec)?,
                FamilyChoice::Auto => unreachable!("resolved above"),
            };
            let rel = match (family, rho.n_parts()) {
                (FamilyChoice::Omega, _) => RelationId::Eq23,
                (_, 1) => RelationId::Eq21,
                (_, 2) => RelationId::Eq22,
                _ => RelationId::Eq26,
            };
            let report =
                eval_relation_with_tol(rel, &rho, &RelationInputs::default(), args.tol_eq)?;
            let certified = report.gap.abs() <= args.tol_eq;
            let state_json = io::state_to_string(&rho);
            if let Some(path) = &args.out {
                write_atomic(path, &state_json)?;
            }
            let summary = Summary {
                min_gap: Some(report.gap),
                violations: usize::from(!certified),
                worst_seed: None,
            };
            let results = json!({
                "family": family_name(family),
                "state": serde_json::from_str::<Value>(&state_json)?,
                "equality": report,
                "certified": certified,
            });
            let doc = ReportDocument::new(config, results, summary);
            print!("{}", doc.to_json());
            Ok(certified)
        }
        MusAction::Check => {
            config.action = Some("check".into());
            let state_path = args.state.as_deref().ok_or("check needs --state FILE")?;
            let mut rho = load_state(state_path)?;
            if rho.n_parts() == 2 {
                rho = rho.purify()?;
            }
            let (first, second) = check_mus_equality(&rho)?;
            let certified = first.gap.abs() <= args.tol_eq && second.gap.abs() <= args.tol_eq;
            let min_gap = first.gap.min(second.gap);
            let summary = Summary {
                min_gap: Some(min_gap),
                violations: usize::from(!certified),
                worst_seed: None,
            };
            let results = json!({
                "first": first,
                "second": second,
                "certified": certified,
            });
            let doc = ReportDocument::new(config, results, summary);
            emit(doc.to_json(), args.out.as_deref())?;
            Ok(certified)
        }
        MusAction::Classify => {
            config.action = Some("classify".into());
            let state_path = args.state.as_deref().ok_or("classify needs --state FILE")?;
            let mut rho = load_state(state_path)?;
            if rho.n_parts() == 2 {
                rho = rho.purify()?;
            }
            let label = classify_mus(&rho)?;
            let conclusive = matches!(
                label.label,
                MusClass::Upsilon | MusClass::Omega | MusClass::Lambda
            );
            let summary = Summary {
                min_gap: None,
                violations: usize::from(!conclusive),
                worst_seed: None,
            };
            let doc = ReportDocument::new(config, serde_json::to_value(&label)?, summary);
            emit(doc.to_json(), args.out.as_deref())?;
            Ok(conclusive)
        }
    }
}

fn run_bound(args: BoundArgs) -> Result<bool, CliError> {
    if args.format == Format::Csv {
        return Err("csv output is only available for verify".into());
    }
    if args.basis.len() != 2 {
        return Err("bound needs exactly two --basis files".into());
    }
    let v = load_basis(&args.basis[0])?;
    let w = load_basis(&args.basis[1])?;
    let r = overlap_r(&v, &w)?;
    let mut results = json!({
        "r": r,
        "bound_bits": r.neg_log,
    });
    if let Some(path) = &args.projector {
        let pi = load_projector(path)?;
        let projected = r_projected(&v.to_povm(), &w.to_povm(), &pi)?;
        let single = single_povm_bound(&v.to_povm(), &pi)?;
        results["r_projected"] = serde_json::to_value(projected)?;
        results["projected_bound_bits"] = json!(projected.neg_log);
        results["single_povm"] = serde_json::to_value(single)?;
    }
    let mut config = RunConfig::new("bound");
    config.basis = args.basis.iter().map(|p| path_str(p)).collect();
    config.projector = args.projector.as_deref().map(path_str);
    config.out = args.out.as_deref().map(path_str);
    let summary = Summary {
        min_gap: None,
        violations: 0,
        worst_seed: None,
    };
    let doc = ReportDocument::new(config, results, summary);
    emit(doc.to_json(), args.out.as_deref())?;
    Ok(true)
}

fn run_search(args: SearchArgs) -> Result<bool, CliError> {
    if args.format == Format::Csv {
        return Err("csv output is only available for verify".into());
    }
    let rel: RelationId = args.relation.parse()?;
    let dims = args.dims.clone().unwrap_or_else(|| default_dims(rel));
    let seed = args.seed.ok_or("--seed is required for search")?;
    if args.trials == 0 {
        return Err("--trials must be at least 1".into());
    }
    let obj = GapObjective::new(rel, dims.clone())?;
    let res = minimize_gap(&obj, seed, args.trials as usize, 5000)?;
    let reached = res.best_gap <= args.tol_eq;
    let state_json = io::state_to_string(&res.best_state);
    if let Some(path) = &args.out {
        write_atomic(path, &state_json)?;
    }
    let mut config = RunConfig::new("search");
    config.relation = Some(rel.as_str().into());
    config.dims = Some(dims);
    config.trials = Some(args.trials);
    config.seed = Some(seed);
    config.tol_eq = Some(args.tol_eq);
    config.out = args.out.as_deref().map(path_str);
    let summary = Summary {
        min_gap: Some(res.best_gap),
        violations: usize::from(!reached),
        worst_seed: Some(seed),
    };
    let results = json!({
        "best_gap": res.best_gap,
        "iterations": res.iterations,
        "restarts_used": res.restarts_used,
        "converged": res.converged,
        "best_state": serde_json::from_str::<Value>(&state_json)?,
    });
    let doc = ReportDocument::new(config, results, summary);
    print!("{}", doc.to_json());
    Ok(reached)
}

fn run_trace(args: TraceArgs) -> Result<bool, CliError> {
    if args.format == Format::Csv {
        return Err("csv output is only available for verify".into());
    }
    let rho = match &args.state {
        Some(path) => load_state(path)?,
        None => {
            let dims = args.dims.clone().unwrap_or_else(|| vec![2, 2, 2]);
            let seed = args.seed.ok_or("--seed is required without --state")?;
            random_state(&dims, 1, seed)?
        }
    };
    let (z, x) = fourier_pair(rho.dims()[0])?;
    let trace = uncert_core::bounds::dp_trace(&rho, &z, &x)?;
    let chain = [
        trace.step5,
        trace.step6,
        trace.step7,
        trace.step8_form,
        trace.step9_equiv,
    ];
    let monotone = chain.windows(2).all(|w| w[0] >= w[1] - 1e-9);
    let mut config = RunConfig::new("trace");
    config.state = args.state.as_deref().map(path_str);
    config.dims = args.dims.clone();
    config.seed = args.seed;
    config.out = args.out.as_deref().map(path_str);
    let summary = Summary {
        min_gap: None,
        violations: usize::from(!monotone),
        worst_seed: None,
    };
    let results = json!({
        "steps": trace,
        "monotone": monotone,
    });
    let doc = ReportDocument::new(config, results, summary);
    emit(doc.to_json(), args.out.as_deref())?;
    Ok(monotone)
}
