//! Command-line driver: solve planning instances, run simulated missions,
//! sweep ablations and cross-check the solver against the oracle.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use govmp_core::evaluation::CsvRow;
use govmp_core::graph::{GraphDump, SimilarityThresholds, ViewMotionGraph};
use govmp_core::mission::{run_mission, MissionConfig, MissionReport, Planner, TargetSelection};
use govmp_core::optimizer::{
    brute_force_oracle, build_model, extract_path, random_instance, solve, InstanceFile, RandomInstance,
};
use govmp_core::sim_world::{generate_scenario, Scenario, ScenarioSpec};
use govmp_core::{EdgePolicy, Error, PlanStatus, SolveOptions, Sparsity};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "govmp", version, about = "Globally optimized view motion planning for fruit mapping")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve a planning instance and print the solution as JSON.
    Solve(SolveArgs),
    /// Run a closed-loop mapping mission on a scenario.
    Simulate(SimulateArgs),
    /// Sweep target selection and graph sparsity, one CSV row per cell.
    Ablate(AblateArgs),
    /// Compare the exact solver with the brute-force oracle on random instances.
    OracleCheck(OracleArgs),
    /// Write a synthetic scenario file.
    Generate(GenerateArgs),
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Instance JSON: n, edges, targets, coverage pairs, edge_policy, time_limit.
    #[arg(long)]
    instance: PathBuf,
    /// Graph dump whose vertex count and edges replace the instance's.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Override the instance's edge policy (strict_edges or metric_closure).
    #[arg(long)]
    edge_policy: Option<String>,
    /// Override the wall-clock limit, seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Stop after this many branch-and-bound nodes.
    #[arg(long)]
    node_limit: Option<u64>,
    /// Write the solution here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct ScenarioArgs {
    /// Scenario JSON; when absent one is generated from the flags below.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Segments of a generated scenario.
    #[arg(long, default_value_t = 2)]
    segments: usize,
    /// Fruits per segment of a generated scenario.
    #[arg(long, default_value_t = 4)]
    fruits: usize,
    /// Leaf density of a generated scenario.
    #[arg(long, default_value_t = 0.5)]
    occlusion: f64,
    /// Seed of a generated scenario.
    #[arg(long, default_value_t = 0)]
    scenario_seed: u64,
}

impl ScenarioArgs {
    fn load(&self) -> Result<Scenario> {
        match &self.scenario {
            Some(p) => Scenario::load(p).with_context(|| format!("reading scenario {}", p.display())),
            None => Ok(generate_scenario(&ScenarioSpec {
                segments: self.segments,
                fruits_per_segment: self.fruits,
                occlusion_density: self.occlusion,
                seed: self.scenario_seed,
                ..ScenarioSpec::default()
            })?),
        }
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// go_vmp, greedy_bestfirst or coverage_greedy.
    #[arg(long)]
    planner: Option<String>,
    /// Mission seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Mission configuration JSON; missing fields take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Range noise standard deviation, meters.
    #[arg(long)]
    noise: Option<f64>,
    /// Report JSON path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-segment metrics CSV path.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Final voxel grid snapshot path.
    #[arg(long)]
    dump_map: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AblateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    noise: Option<f64>,
    /// CSV path; stdout when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    /// Real views per instance, start included (at most 9).
    #[arg(long, default_value_t = 6)]
    n: usize,
    #[arg(long, default_value_t = 50)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest target count; each instance draws from 1 to this.
    #[arg(long, default_value_t = 12)]
    max_targets: usize,
    #[arg(long, default_value = "metric_closure")]
    edge_policy: String,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, default_value_t = 16)]
    segments: usize,
    #[arg(long, default_value_t = 4)]
    fruits: usize,
    #[arg(long, default_value_t = 0.5)]
    occlusion: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn parse_policy(s: &str) -> Result<EdgePolicy> {
    serde_json::from_value(json!(s)).map_err(|_| Error::Parse(format!("unknown edge policy `{s}`")).into())
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.write_all(b"\n")?;
            Ok(())
        }
    }
}

fn mission_config(path: Option<&Path>, planner: Option<&str>, noise: Option<f64>) -> Result<MissionConfig> {
    let mut cfg = match path {
        Some(p) => serde_json::from_str(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)
            .map_err(|e| Error::Parse(format!("config {}: {e}", p.display())))?,
        None => MissionConfig::default(),
    };
    if let Some(p) = planner {
        cfg.planner = p.parse()?;
    }
    if let Some(n) = noise {
        cfg.noise_sigma = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_solve(args: &SolveArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.instance).with_context(|| format!("reading {}", args.instance.display()))?;
    let mut file: InstanceFile =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("instance {}: {e}", args.instance.display())))?;
    if let Some(g) = &args.graph {
        let dump: GraphDump = serde_json::from_str(&fs::read_to_string(g)?)
            .map_err(|e| Error::Parse(format!("graph {}: {e}", g.display())))?;
        let graph = ViewMotionGraph::from_dump(dump, SimilarityThresholds::default())?;
        file.n = graph.len();
        file.edges = graph.edges().collect();
    }
    if let Some(p) = &args.edge_policy {
        file.edge_policy = parse_policy(p)?;
    }
    if let Some(t) = args.time_limit {
        file.time_limit = t;
    }
    let problem = file.into_problem()?;
    let opts = SolveOptions { time_limit: problem.time_limit, node_limit: args.node_limit, ..SolveOptions::default() };
    let clock = Instant::now();
    let sol = solve(&problem, &opts);
    let wall = clock.elapsed().as_secs_f64();
    let feasible = sol.status.is_feasible();
    let expanded = if feasible { extract_path(&sol, &problem)? } else { Vec::new() };
    // A stay is answered before the model is built and lies outside it.
    if feasible && sol.status != PlanStatus::TrivialStay {
        let violations = build_model(&problem).check_solution(&sol);
        if !violations.is_empty() {
            return Err(Error::Consistency(violations.join("; ")).into());
        }
    }
    let out = json!({
        "status": sol.status,
        "objective": feasible.then_some(sol.objective),
        "selected_views": sol.selected_views,
        "new_views": sol.new_views(),
        "ordered_path": sol.ordered_path,
        "expanded_path": expanded,
        "path_vars": sol.path_vars,
        "stats": sol.stats,
        "wall_s": wall,
    });
    write_or_print(args.out.as_deref(), &serde_json::to_string_pretty(&out)?)?;
    Ok(if feasible { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn segment_rows(scenario: &str, planner: &str, report: &MissionReport) -> Vec<CsvRow> {
    report
        .segments
        .iter()
        .zip(&report.segment_metrics)
        .map(|(s, m)| CsvRow {
            scenario: scenario.to_string(),
            segment: s.segment.to_string(),
            planner: planner.to_string(),
            seed: report.seed,
            detected_fruits: m.detected_fruits,
            surface_coverage_pct: m.surface_coverage_pct,
            volume_accuracy_pct: m.volume_accuracy_pct,
            motion_cost: m.motion_cost,
            planning_s: s.planning_wall_s,
            map_exec_s: s.map_exec_s,
            views_executed: s.views_executed,
        })
        .collect()
}

fn aggregate_row(scenario: &str, planner: &str, report: &MissionReport) -> CsvRow {
    let m = &report.metrics;
    CsvRow {
        scenario: scenario.to_string(),
        segment: "all".into(),
        planner: planner.to_string(),
        seed: report.seed,
        detected_fruits: m.detected_fruits,
        surface_coverage_pct: m.surface_coverage_pct,
        volume_accuracy_pct: m.volume_accuracy_pct,
        motion_cost: m.motion_cost,
        planning_s: report.planning_wall_s(),
        map_exec_s: report.map_exec_s(),
        views_executed: report.views_executed(),
    }
}

fn write_csv(path: Option<&Path>, rows: &[CsvRow]) -> Result<()> {
    let mut buf = csv::Writer::from_writer(Vec::new());
    for r in rows {
        buf.serialize(r)?;
    }
    let bytes = buf.into_inner().map_err(|e| anyhow::anyhow!("csv: {e}"))?;
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => Ok(std::io::stdout().lock().write_all(&bytes)?),
    }
}

fn run_simulate(args: &SimulateArgs) -> Result<ExitCode> {
    let scenario = args.scenario.load()?;
    let cfg = mission_config(args.config.as_deref(), args.planner.as_deref(), args.noise)?;
    let (report, grid) = run_mission(&scenario, &cfg, args.seed)?;
    write_or_print(args.out.as_deref(), &serde_json::to_string_pretty(&report)?)?;
    if let Some(p) = &args.csv {
        write_csv(Some(p), &segment_rows(&scenario.name, cfg.planner.name(), &report))?;
    }
    if let Some(p) = &args.dump_map {
        fs::write(p, grid.to_snapshot()).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run_ablate(args: &AblateArgs) -> Result<ExitCode> {
    let scenario = args.scenario.load()?;
    let base = mission_config(args.config.as_deref(), Some(Planner::GoVmp.name()), args.noise)?;
    let mut rows = Vec::new();
    for target in TargetSelection::ALL {
        for sparsity in [Sparsity::Complete, Sparsity::DENSE, Sparsity::SPARSE] {
            let cfg = MissionConfig { target_selection: target, sparsity, ..base.clone() };
            let (report, _) = run_mission(&scenario, &cfg, args.seed)?;
            let label = format!("{}:{}:{}", cfg.planner.name(), target.name(), sparsity);
            rows.push(aggregate_row(&scenario.name, &label, &report));
        }
    }
    write_csv(args.csv.as_deref(), &rows)?;
    Ok(ExitCode::SUCCESS)
}

fn run_oracle_check(args: &OracleArgs) -> Result<ExitCode> {
    if args.n == 0 || args.max_targets == 0 {
        return Err(Error::InvalidInput("n and max-targets must be positive".into()).into());
    }
    let policy = parse_policy(&args.edge_policy)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut matched = 0;
    for k in 0..args.count {
        let targets = rng.gen_range(1..=args.max_targets);
        let spec = RandomInstance { policy, ..RandomInstance::new(args.n, targets) };
        let problem = random_instance(&mut rng, &spec);
        let sol = solve(&problem, &SolveOptions::default());
        let oracle = brute_force_oracle(&problem)?;
        let ok = match (sol.status.is_feasible(), oracle.status.is_feasible()) {
            (false, false) => true,
            (true, true) => {
                (sol.objective - oracle.objective).abs() <= 1e-9
                    && (sol.status == PlanStatus::TrivialStay || build_model(&problem).check_solution(&sol).is_empty())
            }
            _ => false,
        };
        if ok {
            matched += 1;
        } else {
            log::warn!(
                "instance {k}: solver {:?} {} vs oracle {:?} {}",
                sol.status,
                sol.objective,
                oracle.status,
                oracle.objective
            );
        }
    }
    println!("{matched}/{} match", args.count);
    Ok(if matched == args.count { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn run_generate(args: &GenerateArgs) -> Result<ExitCode> {
    let scenario = generate_scenario(&ScenarioSpec {
        segments: args.segments,
        fruits_per_segment: args.fruits,
        occlusion_density: args.occlusion,
        seed: args.seed,
        ..ScenarioSpec::default()
    })?;
    if scenario.placement_failures > 0 {
        eprintln!("placed {} fruits, {} placements failed", scenario.fruits.len(), scenario.placement_failures);
    }
    write_or_print(Some(&args.out), &serde_json::to_string_pretty(&scenario)?)?;
    Ok(ExitCode::SUCCESS)
}

fn exit_code_for(err: &anyhow::Error) -> ExitCode {
    match err.downcast_ref::<Error>() {
        Some(Error::Consistency(_)) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => run_solve(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Ablate(a) => run_ablate(a),
        Command::OracleCheck(a) => run_oracle_check(a),
        Command::Generate(a) => run_generate(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code_for(&e)
        }
    }
}
