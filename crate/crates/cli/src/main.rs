//! Command-line front end: bound calculators, net construction, and the
//! seeded verification experiments, emitting deterministic CSV/JSON reports.
//!
//! Exit codes: 0 success; 1 a hard verification invariant failed (never a
//! statistical near-miss); 2 configuration or runtime failure.

mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use config::{ConfigError, ConfigResolver};
use neurips_lab::bounds::{
    agnostic_alpha, agnostic_eta, agnostic_probability, alpha_requirement, ceil_samples,
    neurips_confidence, neurips_sample_bound, recovery_sample_bound, GeneralizationInputs,
    TheoremConstants,
};
use neurips_lab::covering::build_network_net;
use neurips_lab::harness::{
    agnostic_experiment, run_with_threads, teacher_student, verify_neurips, verify_net,
    AgnosticConfig, NeuripsConfig, NetVerifyConfig, TeacherStudentConfig,
};
use neurips_lab::model::{sample_parameter_class, NetworkParams, ParameterClass};
use neurips_lab::rng::derive_seed;
use neurips_lab::subgaussian::{check_radius, psi2_norm, ReluSum};
use neurips_lab::{QuadratureSpec, Scheme};
use output::{Envelope, OutputSink};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "neurips-lab",
    version,
    about = "Concentration, covering, and generalization experiments for shallow ReLU networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the closed-form sample-complexity and generalization bounds.
    Bounds(BoundsArgs),
    /// Construct an epsilon-net and export its members and metadata.
    Cover(CoverArgs),
    /// Verify net validity on sampled admissible networks.
    VerifyNet(VerifyNetArgs),
    /// Monte-Carlo verification of the uniform concentration event.
    VerifyNeurips(VerifyNeuripsArgs),
    /// Check the psi_2 radius bound on sampled neurons.
    VerifyRadius(VerifyRadiusArgs),
    /// Noiseless teacher-student sublevel experiment with the recovery
    /// implication as a hard assertion.
    TeacherStudent(TeacherStudentArgs),
    /// Noisy-label sublevel experiment.
    Agnostic(AgnosticArgs),
    /// Estimate the psi_2 norm of a network, difference, constant, or
    /// linear functional.
    Psi2(Psi2Args),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Flat JSON config file; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base path for outputs ({out}.json, {out}.csv, {out}.meta.json).
    #[arg(long)]
    out: Option<PathBuf>,
    /// What to print on stdout: json (default) or csv.
    #[arg(long)]
    format: Option<String>,
    /// Worker thread cap (default: NEURIPS_LAB_THREADS or all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Quadrature scheme: gauss-hermite-tensor | adaptive-polar.
    #[arg(long)]
    quad_scheme: Option<String>,
    #[arg(long)]
    quad_order: Option<usize>,
    #[arg(long)]
    quad_abs_tol: Option<f64>,
    #[arg(long)]
    quad_rel_tol: Option<f64>,
}

#[derive(Args, Clone)]
struct ClassArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    cw: Option<f64>,
    #[arg(long)]
    cb: Option<f64>,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    class: ClassArgs,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    u: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    mu_risk: Option<f64>,
    #[arg(long)]
    c_pstar: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    v1: Option<f64>,
    #[arg(long)]
    v2: Option<f64>,
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long)]
    c3: Option<f64>,
    #[arg(long)]
    c4: Option<f64>,
    #[arg(long)]
    c5: Option<f64>,
}

#[derive(Args)]
struct CoverArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    class: ClassArgs,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Materialization cap on the product cardinality.
    #[arg(long)]
    cap: Option<u64>,
}

#[derive(Args)]
struct VerifyNetArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    class: ClassArgs,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    probes: Option<usize>,
    /// Quadrature slack added to epsilon in the pass check.
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Args)]
struct VerifyNeuripsArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    class: ClassArgs,
    #[arg(long)]
    family: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    u: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Args)]
struct VerifyRadiusArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    class: ClassArgs,
    #[arg(long)]
    count: Option<usize>,
}

#[derive(Args)]
struct TeacherStudentArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    class: ClassArgs,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    /// Teacher network JSON file; sampled from the class when omitted.
    #[arg(long)]
    teacher: Option<PathBuf>,
}

#[derive(Args)]
struct AgnosticArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    class: ClassArgs,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    noise_psi2: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    teacher: Option<PathBuf>,
}

#[derive(Args)]
struct Psi2Args {
    #[command(flatten)]
    common: CommonArgs,
    /// Network JSON file to estimate.
    #[arg(long)]
    network: Option<PathBuf>,
    /// Second network: estimates the psi_2 distance instead.
    #[arg(long)]
    minus: Option<PathBuf>,
    /// Constant function value.
    #[arg(long)]
    constant: Option<f64>,
    /// Norm of a linear functional <w, x>.
    #[arg(long)]
    linear_norm: Option<f64>,
}

enum CliError {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("i/o error: {e}"))
    }
}

macro_rules! runtime_from {
    ($($ty:ty),* $(,)?) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Runtime(e.to_string())
            }
        }
    )*};
}
runtime_from!(
    neurips_lab::model::ModelError,
    neurips_lab::harness::HarnessError,
    neurips_lab::subgaussian::SubgaussianError,
    neurips_lab::covering::CoveringError,
    neurips_lab::bounds::BoundsError,
    neurips_lab::QuadError,
);

struct CommandOutput {
    stdout: String,
    hard_failure: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bounds(args) => run_bounds(args),
        Command::Cover(args) => run_cover(args),
        Command::VerifyNet(args) => run_verify_net(args),
        Command::VerifyNeurips(args) => run_verify_neurips(args),
        Command::VerifyRadius(args) => run_verify_radius(args),
        Command::TeacherStudent(args) => run_teacher_student(args),
        Command::Agnostic(args) => run_agnostic(args),
        Command::Psi2(args) => run_psi2(args),
    };
    match result {
        Ok(out) => {
            print!("{}", out.stdout);
            if !out.stdout.ends_with('\n') {
                println!();
            }
            if out.hard_failure {
                eprintln!("verification assertion failed (see report)");
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// Threads: flag, then NEURIPS_LAB_THREADS, then the rayon default.
fn thread_cap(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| {
        std::env::var("NEURIPS_LAB_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
}

fn resolve_quad(
    resolver: &mut ConfigResolver,
    common: &CommonArgs,
    default: QuadratureSpec,
) -> Result<QuadratureSpec, CliError> {
    let scheme_name = match default.scheme {
        Scheme::GaussHermiteTensor => "gauss-hermite-tensor",
        Scheme::AdaptivePolar => "adaptive-polar",
    };
    let scheme = match resolver
        .string("quad_scheme", common.quad_scheme.clone(), Some(scheme_name))?
        .unwrap()
        .as_str()
    {
        "gauss-hermite-tensor" => Scheme::GaussHermiteTensor,
        "adaptive-polar" => Scheme::AdaptivePolar,
        other => {
            return Err(CliError::Config(format!(
                "quad_scheme must be gauss-hermite-tensor or adaptive-polar, got {other}"
            )))
        }
    };
    let spec = QuadratureSpec {
        scheme,
        order: resolver
            .usize("quad_order", common.quad_order, Some(default.order))?
            .unwrap(),
        abs_tol: resolver
            .f64("quad_abs_tol", common.quad_abs_tol, Some(default.abs_tol))?
            .unwrap(),
        rel_tol: resolver
            .f64("quad_rel_tol", common.quad_rel_tol, Some(default.rel_tol))?
            .unwrap(),
    };
    spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(spec)
}

fn resolve_class(
    resolver: &mut ConfigResolver,
    class: &ClassArgs,
) -> Result<ParameterClass, CliError> {
    let n = resolver.require_usize("n", class.n)?;
    let d = resolver.require_usize("d", class.d)?;
    let c_w = resolver.require_f64("cw", class.cw)?;
    let c_b = resolver.require_f64("cb", class.cb)?;
    ParameterClass::new(n, d, c_w, c_b).map_err(|e| CliError::Config(e.to_string()))
}

fn resolve_seed(resolver: &mut ConfigResolver, common: &CommonArgs) -> Result<u64, CliError> {
    Ok(resolver.u64("seed", common.seed, Some(0))?.unwrap())
}

fn stdout_choice(resolver: &mut ConfigResolver, common: &CommonArgs) -> Result<String, CliError> {
    let fmt = resolver
        .string("format", common.format.clone(), Some("json"))?
        .unwrap();
    if fmt != "json" && fmt != "csv" {
        return Err(CliError::Config(format!(
            "format must be json or csv, got {fmt}"
        )));
    }
    Ok(fmt)
}

#[allow(clippy::too_many_arguments)]
fn finish<T: Serialize>(
    command: &str,
    common: &CommonArgs,
    resolver: ConfigResolver,
    seed: Option<u64>,
    report: T,
    csv: Option<String>,
    hard_failure: bool,
    format: String,
) -> Result<CommandOutput, CliError> {
    resolver.reject_unknown()?;
    let envelope = Envelope {
        command: command.to_string(),
        library_version: neurips_lab::version().to_string(),
        seed,
        resolved_config: resolver.resolved,
        report,
    };
    let sink = OutputSink::new(common.out.clone());
    let json = sink.emit(&envelope, csv.clone())?;
    let stdout = match (format.as_str(), csv) {
        ("csv", Some(csv)) => csv,
        _ => json,
    };
    Ok(CommandOutput {
        stdout,
        hard_failure,
    })
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct BoundsReport {
    c1: f64,
    c2: f64,
    neurips_sample_bound: f64,
    neurips_sample_bound_ceil: u128,
    neurips_confidence: neurips_lab::bounds::Confidence,
    #[serde(skip_serializing_if = "Option::is_none")]
    recovery_sample_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha_requirement: Option<neurips_lab::bounds::AlphaRequirement>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    agnostic_probability: Option<neurips_lab::bounds::Confidence>,
}

fn run_bounds(args: BoundsArgs) -> Result<CommandOutput, CliError> {
    let mut resolver = ConfigResolver::from_path(args.common.config.as_deref())?;
    let format = stdout_choice(&mut resolver, &args.common)?;
    let cls = resolve_class(&mut resolver, &args.class)?;
    let s = resolver.require_f64("s", args.s)?;
    let u = resolver.require_f64("u", args.u)?;
    let t = resolver.f64("t", args.t, None)?;
    let xi = resolver.f64("xi", args.xi, None)?;
    let m = resolver.usize("m", args.m, None)?;
    let mu_risk = resolver.f64("mu_risk", args.mu_risk, None)?;
    let c_pstar = resolver.f64("c_pstar", args.c_pstar, Some(0.0))?.unwrap();
    let omega = resolver.f64("omega", args.omega, Some(0.0))?.unwrap();
    let v1 = resolver.f64("v1", args.v1, None)?;
    let v2 = resolver.f64("v2", args.v2, None)?;
    let consts = TheoremConstants {
        c0: resolver.f64("c0", args.c0, None)?,
        c3: resolver.f64("c3", args.c3, None)?,
        c4: resolver.f64("c4", args.c4, None)?,
        c5: resolver.f64("c5", args.c5, None)?,
    };

    let sample_bound = neurips_sample_bound(&cls, s, u, &consts)?;
    let recovery = t
        .map(|t| recovery_sample_bound(&cls, t, xi.unwrap_or(0.0), u, &consts))
        .transpose()?;
    let alpha = m.map(|m| agnostic_alpha(&cls, m));
    let mut requirement = None;
    let mut eta = None;
    if let Some(mu_risk) = mu_risk {
        let inputs = GeneralizationInputs::new(
            s,
            u,
            t.unwrap_or(0.0),
            xi.unwrap_or(0.0),
            omega,
            v1.unwrap_or(1.0),
            v2.unwrap_or(1.0),
            mu_risk,
            c_pstar,
        )?;
        requirement = Some(alpha_requirement(&cls, &inputs, alpha, &consts)?);
        if let Some(a) = alpha {
            eta = Some(agnostic_eta(&inputs, a, &consts)?);
        }
    }
    let probability = match (m, v1, v2) {
        (Some(m), Some(v1), Some(v2)) => Some(agnostic_probability(m, v1, v2, u, &consts)?),
        _ => None,
    };

    let report = BoundsReport {
        c1: consts.c1(),
        c2: consts.c2(),
        neurips_sample_bound: sample_bound,
        neurips_sample_bound_ceil: ceil_samples(sample_bound),
        neurips_confidence: neurips_confidence(u)?,
        recovery_sample_bound: recovery,
        alpha,
        alpha_requirement: requirement,
        eta,
        agnostic_probability: probability,
    };
    finish("bounds", &args.common, resolver, None, report, None, false, format)
}

#[derive(Serialize)]
struct CoverReport {
    epsilon: f64,
    cls: ParameterClass,
    cardinality: f64,
    cardinality_bound: f64,
    materialized: bool,
    construction: neurips_lab::covering::NetConstruction,
    #[serde(skip_serializing_if = "Option::is_none")]
    members_file: Option<String>,
}

fn run_cover(args: CoverArgs) -> Result<CommandOutput, CliError> {
    let mut resolver = ConfigResolver::from_path(args.common.config.as_deref())?;
    let format = stdout_choice(&mut resolver, &args.common)?;
    let cls = resolve_class(&mut resolver, &args.class)?;
    let epsilon = resolver.require_f64("epsilon", args.epsilon)?;
    let cap = resolver.u64("cap", args.cap, None)?;

    let net = build_network_net(&cls, epsilon, cap.map(|c| c as u128))?;
    let members_file = if let (Some(base), Some(jsonl)) = (&args.common.out, net.to_jsonl()) {
        let path = base.with_extension("members.jsonl");
        output::write_atomic(&path, &jsonl)?;
        Some(path.display().to_string())
    } else {
        None
    };
    let report = CoverReport {
        epsilon,
        cls,
        cardinality: net.cardinality(),
        cardinality_bound: net.cardinality_bound,
        materialized: net.members.is_some(),
        construction: net.construction(),
        members_file,
    };
    finish("cover", &args.common, resolver, None, report, None, false, format)
}

fn run_verify_net(args: VerifyNetArgs) -> Result<CommandOutput, CliError> {
    let mut resolver = ConfigResolver::from_path(args.common.config.as_deref())?;
    let format = stdout_choice(&mut resolver, &args.common)?;
    let cls = resolve_class(&mut resolver, &args.class)?;
    let seed = resolve_seed(&mut resolver, &args.common)?;
    let quad = resolve_quad(&mut resolver, &args.common, QuadratureSpec::default())?;
    let cfg = NetVerifyConfig {
        cls,
        epsilon: resolver.require_f64("epsilon", args.epsilon)?,
        probes: resolver.usize("probes", args.probes, Some(200))?.unwrap(),
        seed,
        tolerance: resolver
            .f64("tolerance", args.tolerance, Some(1e-3))?
            .unwrap(),
        quad,
    };
    let report = run_with_threads(thread_cap(args.common.threads), || verify_net(&cfg))?;
    let csv = report.csv().to_csv();
    // Net validity is a theorem: a failed probe is an implementation bug.
    let hard_failure = !report.pass;
    finish(
        "verify-net",
        &args.common,
        resolver,
        Some(seed),
        report,
        Some(csv),
        hard_failure,
        format,
    )
}

fn run_verify_neurips(args: VerifyNeuripsArgs) -> Result<CommandOutput, CliError> {
    let mut resolver = ConfigResolver::from_path(args.common.config.as_deref())?;
    let format = stdout_choice(&mut resolver, &args.common)?;
    let cls = resolve_class(&mut resolver, &args.class)?;
    let seed = resolve_seed(&mut resolver, &args.common)?;
    let quad = resolve_quad(&mut resolver, &args.common, QuadratureSpec::desk_scale())?;
    let cfg = NeuripsConfig {
        cls,
        family_size: resolver.usize("family", args.family, Some(100))?.unwrap(),
        m: resolver.require_usize("m", args.m)?,
        s: resolver.require_f64("s", args.s)?,
        u: resolver.require_f64("u", args.u)?,
        trials: resolver.usize("trials", args.trials, Some(100))?.unwrap(),
        seed,
        quad,
    };
    let report = run_with_threads(thread_cap(args.common.threads), || verify_neurips(&cfg))?;
    let csv = report.csv().to_csv();
    finish(
        "verify-neurips",
        &args.common,
        resolver,
        Some(seed),
        report,
        Some(csv),
        false,
        format,
    )
}

fn run_verify_radius(args: VerifyRadiusArgs) -> Result<CommandOutput, CliError> {
    let mut resolver = ConfigResolver::from_path(args.common.config.as_deref())?;
    let format = stdout_choice(&mut resolver, &args.common)?;
    let cls = resolve_class(&mut resolver, &args.class)?;
    let seed = resolve_seed(&mut resolver, &args.common)?;
    let quad = resolve_quad(&mut resolver, &args.common, QuadratureSpec::default())?;
    let count = resolver.usize("count", args.count, Some(1000))?.unwrap();
    let report = run_with_threads(thread_cap(args.common.threads), || {
        check_radius(&cls, count, seed, &quad)
    })?;
    // The radius bound is a theorem; any violation is a hard failure.
    let hard_failure = !report.violations.is_empty();
    finish(
        "verify-radius",
        &args.common,
        resolver,
        Some(seed),
        report,
        None,
        hard_failure,
        format,
    )
}

#[derive(Serialize)]
struct TeacherStudentTrialSummary {
    trial_id: u64,
    s_tilde: Option<f64>,
    rip_threshold: f64,
    implication_applicable: bool,
    implication_holds: bool,
    sublevel_size: usize,
    difference_family_size: usize,
    max_mu_distance_in_sublevel: f64,
    min_empirical_risk: f64,
}

#[derive(Serialize)]
struct TeacherStudentCliReport {
    trials: Vec<TeacherStudentTrialSummary>,
    all_implications_hold: bool,
}

fn load_network(path: &PathBuf) -> Result<NetworkParams, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("network file {path:?}: {e}")))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("network file {path:?}: {e}")))
}

fn sampled_teacher(cls: &ParameterClass, seed: u64, trial: u64) -> NetworkParams {
    sample_parameter_class(cls, 1, derive_seed(seed ^ 0x7eac, trial))
        .into_iter()
        .next()
        .expect("one sample")
}

fn run_teacher_student(args: TeacherStudentArgs) -> Result<CommandOutput, CliError> {
    let mut resolver = ConfigResolver::from_path(args.common.config.as_deref())?;
    let format = stdout_choice(&mut resolver, &args.common)?;
    let cls = resolve_class(&mut resolver, &args.class)?;
    let seed = resolve_seed(&mut resolver, &args.common)?;
    let quad = resolve_quad(&mut resolver, &args.common, QuadratureSpec::desk_scale())?;
    let m = resolver.require_usize("m", args.m)?;
    let xi = resolver.require_f64("xi", args.xi)?;
    let t = resolver.require_f64("t", args.t)?;
    let budget = resolver.usize("budget", args.budget, Some(10_000))?.unwrap();
    let trials = resolver.usize("trials", args.trials, Some(1))?.unwrap();
    let teacher_path = resolver.string(
        "teacher",
        args.teacher.as_ref().map(|p| p.display().to_string()),
        None,
    )?;
    let fixed_teacher = teacher_path
        .map(|p| load_network(&PathBuf::from(p)))
        .transpose()?;

    let mut summaries = Vec::with_capacity(trials);
    let mut csv = neurips_lab::report::CsvTable::new(&[
        "trial_id",
        "candidate_id",
        "empirical_risk",
        "mu_distance",
    ]);
    let mut all_hold = true;
    run_with_threads(thread_cap(args.common.threads), || -> Result<(), CliError> {
        for trial in 0..trials as u64 {
            let teacher = fixed_teacher
                .clone()
                .unwrap_or_else(|| sampled_teacher(&cls, seed, trial));
            let cfg = TeacherStudentConfig {
                cls,
                teacher,
                m,
                xi,
                t,
                search_budget: budget,
                seed: derive_seed(seed, trial),
                quad,
            };
            let report = teacher_student(&cfg)?;
            all_hold &= report.implication_holds;
            for row in &report.sublevel {
                csv.push(vec![
                    trial.into(),
                    row.candidate_id.into(),
                    row.empirical_risk.into(),
                    row.mu_distance.into(),
                ]);
            }
            summaries.push(TeacherStudentTrialSummary {
                trial_id: trial,
                s_tilde: report.s_tilde,
                rip_threshold: report.rip_threshold,
                implication_applicable: report.implication_applicable,
                implication_holds: report.implication_holds,
                sublevel_size: report.sublevel_size,
                difference_family_size: report.difference_family_size,
                max_mu_distance_in_sublevel: report.max_mu_distance_in_sublevel,
                min_empirical_risk: report.min_empirical_risk,
            });
        }
        Ok(())
    })?;
    let report = TeacherStudentCliReport {
        trials: summaries,
        all_implications_hold: all_hold,
    };
    finish(
        "teacher-student",
        &args.common,
        resolver,
        Some(seed),
        report,
        Some(csv.to_csv()),
        !all_hold,
        format,
    )
}

#[derive(Serialize)]
struct AgnosticTrialSummary {
    trial_id: u64,
    xi: f64,
    noise_sigma: f64,
    teacher_empirical_risk: f64,
    sublevel_size: usize,
    max_expected_risk: f64,
    all_within_eta: Option<bool>,
}

#[derive(Serialize)]
struct AgnosticCliReport {
    trials: Vec<AgnosticTrialSummary>,
}

fn run_agnostic(args: AgnosticArgs) -> Result<CommandOutput, CliError> {
    let mut resolver = ConfigResolver::from_path(args.common.config.as_deref())?;
    let format = stdout_choice(&mut resolver, &args.common)?;
    let cls = resolve_class(&mut resolver, &args.class)?;
    let seed = resolve_seed(&mut resolver, &args.common)?;
    let quad = resolve_quad(&mut resolver, &args.common, QuadratureSpec::desk_scale())?;
    let m = resolver.require_usize("m", args.m)?;
    let noise_psi2 = resolver
        .f64("noise_psi2", args.noise_psi2, Some(0.0))?
        .unwrap();
    let omega = resolver.f64("omega", args.omega, Some(0.0))?.unwrap();
    let budget = resolver.usize("budget", args.budget, Some(10_000))?.unwrap();
    let trials = resolver.usize("trials", args.trials, Some(1))?.unwrap();
    let eta = resolver.f64("eta", args.eta, None)?;
    let teacher_path = resolver.string(
        "teacher",
        args.teacher.as_ref().map(|p| p.display().to_string()),
        None,
    )?;
    let fixed_teacher = teacher_path
        .map(|p| load_network(&PathBuf::from(p)))
        .transpose()?;

    let mut summaries = Vec::with_capacity(trials);
    let mut csv = neurips_lab::report::CsvTable::new(&[
        "trial_id",
        "candidate_id",
        "empirical_risk",
        "expected_risk",
    ]);
    run_with_threads(thread_cap(args.common.threads), || -> Result<(), CliError> {
        for trial in 0..trials as u64 {
            let teacher = fixed_teacher
                .clone()
                .unwrap_or_else(|| sampled_teacher(&cls, seed, trial));
            let cfg = AgnosticConfig {
                cls,
                teacher,
                noise_psi2,
                m,
                omega,
                search_budget: budget,
                seed: derive_seed(seed, trial),
                eta,
                quad,
            };
            let report = agnostic_experiment(&cfg)?;
            for row in &report.sublevel {
                csv.push(vec![
                    trial.into(),
                    row.candidate_id.into(),
                    row.empirical_risk.into(),
                    row.expected_risk.into(),
                ]);
            }
            summaries.push(AgnosticTrialSummary {
                trial_id: trial,
                xi: report.xi,
                noise_sigma: report.noise_sigma,
                teacher_empirical_risk: report.teacher_empirical_risk,
                sublevel_size: report.sublevel_size,
                max_expected_risk: report.max_expected_risk,
                all_within_eta: report.all_within_eta,
            });
        }
        Ok(())
    })?;
    let report = AgnosticCliReport { trials: summaries };
    finish(
        "agnostic",
        &args.common,
        resolver,
        Some(seed),
        report,
        Some(csv.to_csv()),
        false,
        format,
    )
}

fn run_psi2(args: Psi2Args) -> Result<CommandOutput, CliError> {
    let mut resolver = ConfigResolver::from_path(args.common.config.as_deref())?;
    let format = stdout_choice(&mut resolver, &args.common)?;
    let quad = resolve_quad(&mut resolver, &args.common, QuadratureSpec::default())?;
    let constant = resolver.f64("constant", args.constant, None)?;
    let linear_norm = resolver.f64("linear_norm", args.linear_norm, None)?;
    let network_path = resolver.string(
        "network",
        args.network.as_ref().map(|p| p.display().to_string()),
        None,
    )?;
    let minus_path = resolver.string(
        "minus",
        args.minus.as_ref().map(|p| p.display().to_string()),
        None,
    )?;

    let f = match (network_path, constant, linear_norm) {
        (Some(path), None, None) => {
            let net = load_network(&PathBuf::from(path))?;
            let base = ReluSum::from_network(&net);
            match minus_path {
                Some(other) => {
                    let other_net = load_network(&PathBuf::from(other))?;
                    base.difference(&ReluSum::from_network(&other_net))?
                }
                None => base,
            }
        }
        (None, Some(a), None) => ReluSum::constant(a, 1),
        (None, None, Some(s)) => ReluSum::linear(&[s]),
        _ => {
            return Err(CliError::Config(
                "provide exactly one of --network, --constant, --linear-norm".into(),
            ))
        }
    };
    let estimate = run_with_threads(thread_cap(args.common.threads), || psi2_norm(&f, &quad))?;
    finish("psi2", &args.common, resolver, None, estimate, None, false, format)
}
