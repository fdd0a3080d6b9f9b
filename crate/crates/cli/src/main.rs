//! Command-line front end: solve a single instance, benchmark a directory,
//! or inspect fragment sets. Results are JSON lines plus a CSV renderer.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use darp_lpt::formulations::Formulation;
use darp_lpt::fragment::SetKind;
use darp_lpt::instance::{parse_instance, random_instance, Instance, RandomInstanceParams};
use darp_lpt::run::{fragment_dump, run, Problem, RunConfig, RunError, RunRecord};

const EXIT_INFEASIBLE: u8 = 2;
const EXIT_RESOURCE: u8 = 3;
const EXIT_USAGE: u8 = 4;

#[derive(Parser)]
#[command(name = "darp-lpt", about = "Exact solvers for the dial-a-ride problem with limited pickups per trip", disable_help_flag = false)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one instance and print its run record.
    Solve(SolveArgs),
    /// Solve every instance in a directory; write JSON lines and a CSV table.
    Benchmark(BenchArgs),
    /// Generate a fragment set and report count and generation time.
    Fragments(FragArgs),
    /// Re-render a JSON-lines results file as a CSV table.
    Render(RenderArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Problem variant.
    #[arg(long, default_value = "darp-lpt")]
    problem: String,
    /// Maximum pickups per trip (defaults to the instance's own value).
    #[arg(long = "L")]
    l: Option<usize>,
    #[arg(long, default_value = "psff")]
    formulation: String,
    /// Fragment set for fff/psff.
    #[arg(long, default_value = "rf")]
    fragments: String,
    /// Time limit in seconds.
    #[arg(long, default_value_t = 1800.0)]
    time_limit: f64,
    /// Replicate lazy cuts across vehicles: on|off.
    #[arg(long, default_value = "on")]
    replicate_cuts: String,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file path.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Generate a random test instance from this seed instead of a file.
    #[arg(long)]
    seed: Option<u64>,
    /// Customers for a random instance.
    #[arg(long, default_value_t = 4)]
    random_n: usize,
    #[command(flatten)]
    common: CommonArgs,
    /// Append the run record as one JSON line to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the generated fragment set before solving.
    #[arg(long, default_value_t = false)]
    dump_fragments: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Directory of instance files.
    #[arg(long)]
    instances: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
    /// JSON-lines results file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FragArgs {
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 4)]
    random_n: usize,
    #[command(flatten)]
    common: CommonArgs,
    /// Print the full fragment dump, not just the statistics.
    #[arg(long, default_value_t = false)]
    dump_fragments: bool,
}

#[derive(Args)]
struct RenderArgs {
    /// JSON-lines results file to render.
    #[arg(long)]
    results: PathBuf,
}

fn parse_common(c: &CommonArgs) -> Result<RunConfig, String> {
    let problem = Problem::parse(&c.problem).ok_or(format!("unknown problem '{}'", c.problem))?;
    let formulation =
        Formulation::parse(&c.formulation).ok_or(format!("unknown formulation '{}'", c.formulation))?;
    let fragment_kind =
        SetKind::parse(&c.fragments).ok_or(format!("unknown fragment set '{}'", c.fragments))?;
    let replicate_cuts = match c.replicate_cuts.as_str() {
        "on" => true,
        "off" => false,
        other => return Err(format!("replicate-cuts must be on|off, got '{other}'")),
    };
    Ok(RunConfig {
        problem,
        pickup_limit: c.l,
        formulation,
        fragment_kind,
        replicate_cuts,
        time_limit: c.time_limit,
        ..Default::default()
    })
}

fn load_instance(
    path: &Option<PathBuf>,
    seed: Option<u64>,
    random_n: usize,
) -> Result<(String, Instance), String> {
    match (path, seed) {
        (Some(p), None) => {
            let text = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            let inst = parse_instance(&text).map_err(|e| format!("{}: {e}", p.display()))?;
            let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok((name, inst))
        }
        (None, Some(s)) => {
            let inst = random_instance(s, &RandomInstanceParams { n: random_n, ..Default::default() });
            Ok((format!("random-{s}-{random_n}"), inst))
        }
        _ => Err("exactly one of --instance and --seed is required".into()),
    }
}

fn csv_header() -> String {
    "instance,problem,L,vehicles,formulation,fragment_set,fragments,build_s,solver_s,total_s,status,objective,bound,gap".into()
}

fn csv_row(r: &RunRecord) -> String {
    let opt_u = |v: Option<usize>| v.map_or(String::new(), |x| x.to_string());
    let opt_f = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.6}"));
    format!(
        "{},{},{},{},{},{},{},{:.3},{:.3},{:.3},{},{},{},{}",
        r.instance,
        r.problem,
        r.pickup_limit,
        r.vehicles,
        r.formulation,
        r.fragment_set.clone().unwrap_or_default(),
        opt_u(r.fragments),
        r.build_seconds,
        r.solver_seconds,
        r.total_seconds,
        r.status,
        opt_f(r.objective),
        opt_f(r.bound),
        opt_f(r.gap),
    )
}

/// CSV table plus per-type averages (grouped by the leading letter of the
/// instance name) of the solved rows.
fn render_table(records: &[RunRecord]) -> String {
    let mut out = csv_header();
    out.push('\n');
    for r in records {
        out.push_str(&csv_row(r));
        out.push('\n');
    }
    let mut groups: Vec<char> = records
        .iter()
        .filter_map(|r| r.instance.chars().next())
        .collect();
    groups.sort_unstable();
    groups.dedup();
    for g in groups {
        let objs: Vec<f64> = records
            .iter()
            .filter(|r| r.instance.starts_with(g) && r.objective.is_some())
            .map(|r| r.objective.unwrap())
            .collect();
        if !objs.is_empty() {
            let avg = objs.iter().sum::<f64>() / objs.len() as f64;
            out.push_str(&format!("avg-{g},,,,,,,,,,,{avg:.6},,\n"));
        }
    }
    out
}

fn append_jsonl(path: &Path, records: &[RunRecord]) -> Result<(), String> {
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(r).map_err(|e| e.to_string())?);
        text.push('\n');
    }
    use std::io::Write;
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    f.write_all(text.as_bytes()).map_err(|e| e.to_string())
}

fn exit_for(record: &RunRecord) -> ExitCode {
    if record.status == "infeasible" {
        ExitCode::from(EXIT_INFEASIBLE)
    } else {
        ExitCode::SUCCESS
    }
}

fn run_error_exit(e: &RunError) -> ExitCode {
    match e {
        RunError::ResourceCap(_) => ExitCode::from(EXIT_RESOURCE),
        _ => ExitCode::FAILURE,
    }
}

fn cmd_solve(args: &SolveArgs) -> Result<ExitCode, String> {
    let cfg = parse_common(&args.common)?;
    let (name, inst) = load_instance(&args.instance, args.seed, args.random_n)?;
    if args.dump_fragments {
        match fragment_dump(&inst, &cfg) {
            Ok(d) => print!("{d}"),
            Err(e) => eprintln!("fragment dump unavailable: {e}"),
        }
    }
    match run(&name, &inst, &cfg) {
        Ok(rec) => {
            println!("{}", serde_json::to_string(&rec).map_err(|e| e.to_string())?);
            if let Some(out) = &args.out {
                append_jsonl(out, std::slice::from_ref(&rec))?;
            }
            Ok(exit_for(&rec))
        }
        Err(e) => {
            eprintln!("error: {e}");
            Ok(run_error_exit(&e))
        }
    }
}

fn cmd_benchmark(args: &BenchArgs) -> Result<ExitCode, String> {
    let cfg = parse_common(&args.common)?;
    let mut paths: Vec<PathBuf> = fs::read_dir(&args.instances)
        .map_err(|e| format!("{}: {e}", args.instances.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    let mut records = Vec::new();
    for p in &paths {
        let loaded = load_instance(&Some(p.clone()), None, 0);
        let (name, inst) = match loaded {
            Ok(x) => x,
            Err(e) => {
                eprintln!("skipping {}: {e}", p.display());
                continue;
            }
        };
        match run(&name, &inst, &cfg) {
            Ok(rec) => records.push(rec),
            // Partial failures become an error row; the run continues.
            Err(e) => {
                eprintln!("{name}: {e}");
                let mut rec = infeasible_placeholder(&name, &cfg, &inst);
                rec.status = "error".into();
                records.push(rec);
            }
        }
    }
    if let Some(out) = &args.out {
        append_jsonl(out, &records)?;
    }
    print!("{}", render_table(&records));
    Ok(ExitCode::SUCCESS)
}

fn infeasible_placeholder(name: &str, cfg: &RunConfig, inst: &Instance) -> RunRecord {
    RunRecord {
        instance: name.to_string(),
        problem: cfg.problem.label().to_string(),
        pickup_limit: cfg.pickup_limit.unwrap_or(inst.pickup_limit),
        vehicles: 0,
        formulation: cfg.formulation.label().to_string(),
        fragment_set: Some(cfg.fragment_kind.label().to_string()),
        fragments: None,
        network_arcs: None,
        build_seconds: 0.0,
        solver_seconds: 0.0,
        total_seconds: 0.0,
        status: String::new(),
        objective: None,
        bound: None,
        gap: None,
        cut_rounds: 0,
        cuts_added: 0,
        routes: vec![],
    }
}

fn cmd_fragments(args: &FragArgs) -> Result<ExitCode, String> {
    let cfg = parse_common(&args.common)?;
    let (name, inst) = load_instance(&args.instance, args.seed, args.random_n)?;
    let dump = fragment_dump(&inst, &cfg).map_err(|e| e.to_string())?;
    let count = dump.lines().filter(|l| !l.starts_with('#')).count();
    println!("{name} {} fragments: {count}", cfg.fragment_kind.label());
    if args.dump_fragments {
        print!("{dump}");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_render(args: &RenderArgs) -> Result<ExitCode, String> {
    let text = fs::read_to_string(&args.results)
        .map_err(|e| format!("{}: {e}", args.results.display()))?;
    let mut records = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        records.push(serde_json::from_str::<RunRecord>(line).map_err(|e| e.to_string())?);
    }
    print!("{}", render_table(&records));
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // Help/version requests are not usage errors.
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let res = match &cli.cmd {
        Cmd::Solve(a) => cmd_solve(a),
        Cmd::Benchmark(a) => cmd_benchmark(a),
        Cmd::Fragments(a) => cmd_fragments(a),
        Cmd::Render(a) => cmd_render(a),
    };
    match res {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
