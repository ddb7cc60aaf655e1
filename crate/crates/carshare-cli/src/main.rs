//! Command-line front end: solve instances, re-derive the published fixture
//! numbers, run randomized ratio sweeps, generate instances, and check
//! metric axioms. Machine-readable records go to stdout as JSON lines;
//! human summaries go to stderr. Exit codes: 0 ok, 1 bound or assertion
//! violation, 2 usage or parse error.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use carshare::instances::{
    self, fixture_fig1, fixture_fig2, fixture_fig2_bottom, fixture_fig3, fixture_fig3_bottom,
    fixture_fig3_top, random_instance, Instance, RequestMode,
};
use carshare::matching::TiePolicy;
use carshare::oracle::{brute_force_opt, ratio_sweep, SweepParams, TableAlgorithm};
use carshare::paircosts::{Flavor, Objective};
use carshare::solvers::{
    ca_solve, ma_solve, ta_general_lat, ta_general_sum, ta_solve, AlgoConfig, Alpha, SolveReport,
};

#[derive(Parser)]
#[command(
    name = "carshare",
    version,
    about = "Car-sharing allocation solvers and ratio verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm on an instance and print the allocation
    Solve {
        /// Instance file, or fig1 / fig2 / fig3 for built-in fixtures
        instance: String,
        #[arg(long, value_enum)]
        alg: AlgArg,
        #[arg(long, default_value_t = 1)]
        alpha: u8,
        #[arg(long, value_enum, default_value_t = FlavorArg::U)]
        flavor: FlavorArg,
        #[arg(long, value_enum, default_value_t = ObjectiveArg::Sum)]
        objective: ObjectiveArg,
        #[arg(long, value_enum, default_value_t = TiesArg::Lex)]
        ties: TiesArg,
        /// Requests per car for the generalized algorithms
        #[arg(long, default_value_t = 2)]
        a: usize,
    },
    /// Re-derive every published fixture number and fail on mismatch
    VerifyPaper,
    /// Randomized ratio sweep; records stream as JSON lines
    Sweep {
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Number of cars per instance
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Requests per car
        #[arg(long, default_value_t = 2)]
        a: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::General)]
        mode: ModeArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file for the JSON-line records (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a random instance
    Gen {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        a: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::General)]
        mode: ModeArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the metric axioms of an instance file
    Validate { instance: String },
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgArg {
    Ma,
    Ta,
    Ca,
    TaGenSum,
    TaGenLat,
}

#[derive(Clone, Copy, ValueEnum)]
enum FlavorArg {
    U,
    Mu,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Sum,
    Lat,
}

#[derive(Clone, Copy, ValueEnum)]
enum TiesArg {
    Lex,
    Adversarial,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    General,
    St,
}

impl From<FlavorArg> for Flavor {
    fn from(f: FlavorArg) -> Self {
        match f {
            FlavorArg::U => Flavor::U,
            FlavorArg::Mu => Flavor::Mu,
        }
    }
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Sum => Objective::Sum,
            ObjectiveArg::Lat => Objective::Latency,
        }
    }
}

impl From<TiesArg> for TiePolicy {
    fn from(t: TiesArg) -> Self {
        match t {
            TiesArg::Lex => TiePolicy::Lexicographic,
            TiesArg::Adversarial => TiePolicy::Adversarial,
        }
    }
}

impl From<ModeArg> for RequestMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::General => RequestMode::General,
            ModeArg::St => RequestMode::PickupEqualsDropoff,
        }
    }
}

/// 2 = usage or parse problem, 1 = a verified bound or assertion failed.
enum CliError {
    Usage(String),
    Violation(String),
}

impl CliError {
    fn code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Violation(_) => ExitCode::from(1),
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Violation(m) => m,
        }
    }
}

fn usage(err: impl std::fmt::Display) -> CliError {
    CliError::Usage(err.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve { instance, alg, alpha, flavor, objective, ties, a } => {
            cmd_solve(&instance, alg, alpha, flavor.into(), objective.into(), ties.into(), a)
        }
        Command::VerifyPaper => cmd_verify_paper(),
        Command::Sweep { count, n, a, mode, seed, out } => {
            cmd_sweep(count, n, a, mode.into(), seed, out.as_deref())
        }
        Command::Gen { n, a, mode, seed, out } => cmd_gen(n, a, mode.into(), seed, out.as_deref()),
        Command::Validate { instance } => cmd_validate(&instance),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            err.code()
        }
    }
}

fn load_instance(source: &str) -> Result<Instance, CliError> {
    match source {
        "fig1" => Ok(fixture_fig1()),
        "fig2" => Ok(fixture_fig2()),
        "fig3" => Ok(fixture_fig3()),
        path => Instance::load(std::path::Path::new(path)).map_err(usage),
    }
}

#[derive(Serialize)]
struct SolveRecord<'a> {
    command: &'static str,
    instance: String,
    algorithm: &'a str,
    alpha: u8,
    flavor: &'a str,
    objective: &'a str,
    ties: &'a str,
    groups: &'a [Vec<usize>],
    orders: &'a [Vec<carshare::instances::Visit>],
    v1_m1: Option<f64>,
    v2_m2: Option<f64>,
    v3_m3: Option<f64>,
    objective_value: f64,
    elapsed_ms: f64,
}

fn cmd_solve(
    source: &str,
    alg: AlgArg,
    alpha_raw: u8,
    flavor: Flavor,
    objective: Objective,
    ties: TiePolicy,
    a: usize,
) -> Result<(), CliError> {
    let alpha = match alpha_raw {
        1 => Alpha::One,
        2 => Alpha::Two,
        other => return Err(CliError::Usage(format!("--alpha must be 1 or 2, got {other}"))),
    };
    let inst = load_instance(source)?;
    let cfg = AlgoConfig::new(alpha, flavor, ties, objective);
    let started = Instant::now();
    let report: SolveReport = match alg {
        AlgArg::Ma => ma_solve(&inst, cfg),
        AlgArg::Ta => ta_solve(&inst, cfg),
        AlgArg::Ca => ca_solve(&inst, cfg),
        AlgArg::TaGenSum => ta_general_sum(&inst, a),
        AlgArg::TaGenLat => ta_general_lat(&inst, a),
    }
    .map_err(usage)?;
    let elapsed_ms = started.elapsed().as_secs_f64() * 1e3;

    let record = SolveRecord {
        command: "solve",
        instance: inst.digest(),
        algorithm: match alg {
            AlgArg::Ma => "ma",
            AlgArg::Ta => "ta",
            AlgArg::Ca => "ca",
            AlgArg::TaGenSum => "ta-gen-sum",
            AlgArg::TaGenLat => "ta-gen-lat",
        },
        alpha: alpha_raw,
        flavor: match flavor {
            Flavor::U => "u",
            Flavor::Mu => "mu",
        },
        objective: match objective {
            Objective::Sum => "sum",
            Objective::Latency => "lat",
        },
        ties: match ties {
            TiePolicy::Lexicographic => "lex",
            TiePolicy::Adversarial => "adversarial",
        },
        groups: &report.allocation.groups,
        orders: &report.allocation.orders,
        v1_m1: report.v1_m1,
        v2_m2: report.v2_m2,
        v3_m3: report.v3_m3,
        objective_value: report.objective_value(),
        elapsed_ms,
    };
    println!("{}", serde_json::to_string(&record).map_err(usage)?);

    let mut summary = String::new();
    let _ = writeln!(summary, "{source}: objective {}", report.objective_value());
    for (car, group) in report.allocation.groups.iter().enumerate() {
        let order: Vec<String> = report.allocation.orders[car]
            .iter()
            .map(|v| match v {
                carshare::instances::Visit::Pickup(r) => format!("+{r}"),
                carshare::instances::Visit::Dropoff(r) => format!("-{r}"),
            })
            .collect();
        let _ = writeln!(summary, "  car {car} <- {group:?} via [{}]", order.join(" "));
    }
    for (label, value) in
        [("v1(M1)", report.v1_m1), ("v2(M2)", report.v2_m2), ("v3(M3)", report.v3_m3)]
    {
        if let Some(value) = value {
            let _ = writeln!(summary, "  {label} = {value}");
        }
    }
    eprint!("{summary}");
    Ok(())
}

struct Check {
    name: String,
    expected: f64,
    actual: f64,
}

fn cmd_verify_paper() -> Result<(), CliError> {
    let mut checks: Vec<Check> = Vec::new();
    let mut ratio_lines: Vec<String> = Vec::new();
    let push = |name: &str, expected: f64, actual: f64, checks: &mut Vec<Check>| {
        checks.push(Check { name: name.to_string(), expected, actual });
    };

    let sum_adv = AlgoConfig::new(Alpha::One, Flavor::U, TiePolicy::Adversarial, Objective::Sum);
    let lat_adv =
        AlgoConfig::new(Alpha::Two, Flavor::Mu, TiePolicy::Adversarial, Objective::Latency);
    let solve = |r: Result<SolveReport, carshare::solvers::SolveError>| r.map_err(usage);

    // full fixtures
    let fig1 = fixture_fig1();
    let opt1 = brute_force_opt(&fig1, Objective::Sum).map_err(usage)?.objective;
    push("fig1 oracle cost", 2.0, opt1, &mut checks);
    let ma1 = solve(ma_solve(&fig1, sum_adv))?;
    push("fig1 MA(1,u) worst cost", 4.0, ma1.objective_value(), &mut checks);
    push("fig1 MA(1,u) pairing weight v1(M1)", 3.0, ma1.v1_m1.unwrap_or(f64::NAN), &mut checks);
    let ta1 = solve(ta_solve(&fig1, sum_adv))?;
    push("fig1 TA(1) worst cost", 4.0, ta1.objective_value(), &mut checks);
    push("fig1 TA(1) matching weight v3(M3)", 6.0, ta1.v3_m3.unwrap_or(f64::NAN), &mut checks);
    let ca1 = solve(ca_solve(&fig1, sum_adv))?;
    push("fig1 CA(1,u) worst cost", 4.0, ca1.objective_value(), &mut checks);
    ratio_lines.push(format!("fig1 CA(1,u): {}/{}", ca1.objective_value(), opt1));

    let fig2 = fixture_fig2();
    let opt2 = brute_force_opt(&fig2, Objective::Sum).map_err(usage)?.objective;
    push("fig2 oracle cost", 10.0, opt2, &mut checks);
    push(
        "fig2 MA(1,u) worst cost",
        14.0,
        solve(ma_solve(&fig2, sum_adv))?.objective_value(),
        &mut checks,
    );
    push(
        "fig2 TA(1) worst cost",
        14.0,
        solve(ta_solve(&fig2, sum_adv))?.objective_value(),
        &mut checks,
    );
    let ca2 = solve(ca_solve(&fig2, sum_adv))?;
    push("fig2 CA(1,u) worst cost", 14.0, ca2.objective_value(), &mut checks);
    ratio_lines.push(format!("fig2 CA(1,u): {}/{}", ca2.objective_value(), opt2));

    let fig3 = fixture_fig3();
    let opt3 = brute_force_opt(&fig3, Objective::Latency).map_err(usage)?.objective;
    push("fig3 oracle latency", 8.0, opt3, &mut checks);
    push(
        "fig3 MA(2,mu) worst latency",
        12.0,
        solve(ma_solve(&fig3, lat_adv))?.objective_value(),
        &mut checks,
    );
    push(
        "fig3 TA(2) worst latency",
        12.0,
        solve(ta_solve(&fig3, lat_adv))?.objective_value(),
        &mut checks,
    );
    let ca3 = solve(ca_solve(&fig3, lat_adv))?;
    push("fig3 CA(2,mu) worst latency", 12.0, ca3.objective_value(), &mut checks);
    ratio_lines.push(format!("fig3 CA(2,mu): {}/{}", ca3.objective_value(), opt3));

    // half fixtures where the individual algorithms are tight
    let bottom2 = fixture_fig2_bottom();
    let optb2 = brute_force_opt(&bottom2, Objective::Sum).map_err(usage)?.objective;
    push("fig2-bottom oracle cost", 2.0, optb2, &mut checks);
    let tab2 = solve(ta_solve(&bottom2, sum_adv))?;
    push("fig2-bottom TA(1) worst cost", 6.0, tab2.objective_value(), &mut checks);
    push("fig2-bottom TA(1) v3(M3)", 6.0, tab2.v3_m3.unwrap_or(f64::NAN), &mut checks);
    ratio_lines.push(format!("fig2-bottom TA(1): {}/{}", tab2.objective_value(), optb2));

    let top3 = fixture_fig3_top();
    let optt3 = brute_force_opt(&top3, Objective::Latency).map_err(usage)?.objective;
    let mat3 = solve(ma_solve(&top3, lat_adv))?;
    push("fig3-top oracle latency", 4.0, optt3, &mut checks);
    push("fig3-top MA(2,mu) worst latency", 8.0, mat3.objective_value(), &mut checks);
    ratio_lines.push(format!("fig3-top MA(2,mu): {}/{}", mat3.objective_value(), optt3));

    let bottom3 = fixture_fig3_bottom();
    let optb3 = brute_force_opt(&bottom3, Objective::Latency).map_err(usage)?.objective;
    let tab3 = solve(ta_solve(&bottom3, lat_adv))?;
    push("fig3-bottom oracle latency", 4.0, optb3, &mut checks);
    push("fig3-bottom TA(2) worst latency", 8.0, tab3.objective_value(), &mut checks);
    push("fig3-bottom TA(2) v3(M3)", 8.0, tab3.v3_m3.unwrap_or(f64::NAN), &mut checks);
    ratio_lines.push(format!("fig3-bottom TA(2): {}/{}", tab3.objective_value(), optb3));

    let mut failures = 0usize;
    for check in &checks {
        if (check.expected - check.actual).abs() <= 1e-9 {
            println!("[ok] {}: {}", check.name, check.actual);
        } else {
            failures += 1;
            println!("[FAIL] {}: expected {} got {}", check.name, check.expected, check.actual);
        }
    }
    for line in &ratio_lines {
        println!("[ok] {line}");
    }
    eprintln!("verify-paper: {} checks, {failures} failures", checks.len());
    if failures > 0 {
        return Err(CliError::Violation(format!("{failures} fixture checks failed")));
    }
    Ok(())
}

fn cmd_sweep(
    count: usize,
    n: usize,
    a: usize,
    mode: RequestMode,
    seed: u64,
    out: Option<&std::path::Path>,
) -> Result<(), CliError> {
    let params = SweepParams {
        count,
        cars: n,
        capacity: a,
        mode,
        seed,
        algorithms: TableAlgorithm::ALL.to_vec(),
    };
    let outcome = ratio_sweep(&params).map_err(usage)?;

    let mut lines = String::new();
    for record in &outcome.records {
        let _ = writeln!(lines, "{}", serde_json::to_string(record).map_err(usage)?);
    }
    match out {
        Some(path) => std::fs::write(path, lines).map_err(usage)?,
        None => {
            print!("{lines}");
            std::io::stdout().flush().map_err(usage)?;
        }
    }

    for entry in &outcome.summary.entries {
        let max = entry.max_ratio.map_or("n/a".to_string(), |m| format!("{m:.6}"));
        eprintln!(
            "{} {:?}: max ratio {} of bound {} over {} checks ({} violations)",
            entry.algorithm, entry.objective, max, entry.bound, entry.checked, entry.violations
        );
    }
    eprintln!(
        "sweep: {} instances, {} records, {} degenerate, {} violations",
        outcome.summary.instances,
        outcome.records.len(),
        outcome.summary.degenerate,
        outcome.summary.violations
    );
    if outcome.summary.violations > 0 {
        return Err(CliError::Violation(format!(
            "{} ratio bound violations",
            outcome.summary.violations
        )));
    }
    Ok(())
}

fn cmd_gen(
    n: usize,
    a: usize,
    mode: RequestMode,
    seed: u64,
    out: Option<&std::path::Path>,
) -> Result<(), CliError> {
    let inst = random_instance(n, a, mode, seed).map_err(usage)?;
    let json = inst.to_json().map_err(usage)?;
    match out {
        Some(path) => std::fs::write(path, json + "\n").map_err(usage)?,
        None => println!("{json}"),
    }
    eprintln!(
        "gen: {} cars, {} requests, digest {}",
        inst.num_cars(),
        inst.num_requests(),
        inst.digest()
    );
    Ok(())
}

#[derive(Serialize)]
struct ValidationRecord {
    command: &'static str,
    valid: bool,
    violations: Vec<String>,
}

fn cmd_validate(source: &str) -> Result<(), CliError> {
    let metric = instances::load_metric(std::path::Path::new(source)).map_err(usage)?;
    let report = metric.validate();
    let record = ValidationRecord {
        command: "validate",
        valid: report.is_valid(),
        violations: report.violations.iter().map(|v| v.to_string()).collect(),
    };
    println!("{}", serde_json::to_string(&record).map_err(usage)?);
    eprintln!("validate: {} violations", report.violations.len());
    if !report.is_valid() {
        return Err(CliError::Violation(format!(
            "{} metric violations",
            report.violations.len()
        )));
    }
    Ok(())
}
