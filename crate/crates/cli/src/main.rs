//! Command-line front end for the bubble-roadmap toolkit.
//!
//! Exit codes: 0 on success, 2 for an invalid configuration or malformed
//! input file, 3 when the `plan` subcommand fails to produce a path.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bubbleplan::bench::{
    run_benchmark, system, BenchmarkConfig, FieldBackend, SystemId,
};
use bubbleplan::error::Error;
use bubbleplan::field::{lattice_margin, DistanceField, ExactChecker, NeuralField, OracleField};
use bubbleplan::geom::{Config, GeometryVector, RobotModel};
use bubbleplan::net::MlpModel;
use bubbleplan::oracle::{
    generate_dataset, generate_self_dataset, read_dataset, write_dataset, DatasetConfig,
    DatasetHeader,
};
use bubbleplan::planner::{
    load_roadmap, save_roadmap, BubblePlanner, PlanResult, PlanStatus, PlannerParams,
};
use bubbleplan::report::{summary_table, svg_cspace, svg_workspace, write_artifacts};
use bubbleplan::scenario::{robot_hash, scenario_hash, Scenario};
use bubbleplan::train::{train, TrainConfig};
use bubbleplan::validate::validate_batched;

#[derive(Parser)]
#[command(name = "bubbleplan", version, about = "Bubble roadmaps over learned configuration-space distance fields")]
struct Cli {
    /// Master random seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// JSON file mirroring the benchmark configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for generated artifacts.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample random obstacles, grid each one, and write a training dataset.
    GenData(GenDataArgs),
    /// Fit a distance net to a dataset.
    Train(TrainArgs),
    /// Score a trained net against freshly gridded unseen obstacles.
    Validate(ValidateArgs),
    /// Build and save a ball roadmap for a scenario.
    BuildRoadmap(BuildRoadmapArgs),
    /// Answer one start/goal query from a saved roadmap.
    Plan(PlanArgs),
    /// Run the four-planner comparison sweep.
    Bench(BenchArgs),
    /// Show the exact-checked rescue of a query the field alone rejects.
    HybridDemo(HybridDemoArgs),
}

#[derive(Args)]
struct GenDataArgs {
    /// Registered system (sc3-analog, sc4-analog, mr-analog, wd-analog).
    #[arg(long, default_value = "sc3-analog")]
    system: String,
    #[arg(long, default_value_t = 50)]
    num_obstacles: usize,
    #[arg(long, default_value_t = 1000)]
    samples_per_obstacle: usize,
    /// Lattice resolution per joint; defaults to the system's registry value.
    #[arg(long)]
    grid_n: Option<usize>,
    /// Also generate a self-collision dataset.
    #[arg(long)]
    with_self: bool,
    /// Samples for the self-collision dataset.
    #[arg(long, default_value_t = 20_000)]
    self_samples: usize,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = 500)]
    epochs: usize,
    #[arg(long, default_value_t = 30)]
    patience: usize,
    /// Hidden layer width.
    #[arg(long, default_value_t = 128)]
    hidden: usize,
    /// Model output path (default: <out-dir>/model.bin).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value = "sc3-analog")]
    system: String,
    /// Unseen obstacles to grid and score against.
    #[arg(long, default_value_t = 10)]
    num_geometries: usize,
    #[arg(long)]
    grid_n: Option<usize>,
}

#[derive(Args)]
struct BuildRoadmapArgs {
    /// Scenario JSON (robot + obstacles).
    #[arg(long)]
    scenario: PathBuf,
    /// Distance net; omitted = grid-oracle backend.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Self-collision net for the neural backend.
    #[arg(long)]
    self_model: Option<PathBuf>,
    #[arg(long, default_value_t = 250)]
    vertices: usize,
    /// Lattice resolution (also sets the neural safety margin).
    #[arg(long)]
    grid_n: Option<usize>,
    /// Roadmap output path (default: <out-dir>/roadmap.json).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    roadmap: PathBuf,
    #[arg(long)]
    scenario: PathBuf,
    /// Start configuration, comma-separated radians.
    #[arg(long, allow_hyphen_values = true)]
    start: String,
    /// Goal configuration, comma-separated radians.
    #[arg(long, allow_hyphen_values = true)]
    goal: String,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    self_model: Option<PathBuf>,
    /// Must match the resolution the roadmap was built with.
    #[arg(long)]
    grid_n: Option<usize>,
    /// Fall back to exact collision checks when the field rejects an
    /// endpoint.
    #[arg(long)]
    hybrid: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Overrides the system in the config file.
    #[arg(long)]
    system: Option<String>,
    /// Distance net: run PBRM on the learned field instead of the oracle.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    self_model: Option<PathBuf>,
}

#[derive(Args)]
struct HybridDemoArgs {
    /// Skip the exact-checked rescue and report the raw field verdict.
    #[arg(long)]
    disable_fallback: bool,
}

/// Errors that map to the documented non-zero exit codes.
enum CliError {
    /// Invalid configuration, arguments, or input files → exit 3.
    Config(String),
    /// The plan subcommand produced no path → exit 2.
    PlanFailed(String),
    /// Anything else → exit 1.
    Other(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> CliError {
        match e {
            Error::InvalidArgument(_) | Error::CorruptFile(_) | Error::VersionMismatch { .. } => {
                CliError::Config(e.to_string())
            }
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Other(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> CliError {
        CliError::Config(e.to_string())
    }
}

type CliResult = Result<(), CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::PlanFailed(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(CliError::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> CliResult {
    std::fs::create_dir_all(&cli.out_dir)?;
    match &cli.command {
        Command::GenData(args) => gen_data(&cli, args),
        Command::Train(args) => run_train(&cli, args),
        Command::Validate(args) => run_validate(&cli, args),
        Command::BuildRoadmap(args) => build_roadmap(&cli, args),
        Command::Plan(args) => run_plan(&cli, args),
        Command::Bench(args) => run_bench(&cli, args),
        Command::HybridDemo(args) => hybrid_demo(&cli, args),
    }
}

fn parse_system(name: &str) -> Result<SystemId, CliError> {
    SystemId::from_str(name).map_err(CliError::from)
}

fn parse_config_vec(s: &str, dof: usize) -> Result<Config, CliError> {
    let vals: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    let vals = vals.map_err(|e| CliError::Config(format!("bad configuration '{s}': {e}")))?;
    if vals.len() != dof {
        return Err(CliError::Config(format!(
            "configuration '{s}' has {} joints, scenario has {dof}",
            vals.len()
        )));
    }
    Ok(Config::new(&vals))
}

fn gen_data(cli: &Cli, args: &GenDataArgs) -> CliResult {
    let def = system(parse_system(&args.system)?);
    let grid_n = args.grid_n.unwrap_or(def.grid_n);
    let cfg = DatasetConfig {
        num_obstacles: args.num_obstacles,
        samples_per_obstacle: args.samples_per_obstacle,
        grid_n,
        seed: cli.seed,
    };
    let samples = generate_dataset(&def.model, &def.sampler, &cfg)?;
    let header = DatasetHeader {
        dof: def.model.dof() as u32,
        geom_dim: def.sampler.param_len() as u32,
        grid_n: grid_n as u32,
        seed: cli.seed,
        robot_hash: robot_hash(&def.model),
    };
    let path = cli.out_dir.join("dataset.bin");
    write_dataset(&path, &header, &samples)?;
    println!("wrote {} samples to {}", samples.len(), path.display());

    if args.with_self {
        let samples = generate_self_dataset(&def.model, args.self_samples, grid_n, cli.seed)?;
        let header = DatasetHeader {
            dof: def.model.dof() as u32,
            geom_dim: 0,
            grid_n: grid_n as u32,
            seed: cli.seed,
            robot_hash: robot_hash(&def.model),
        };
        let path = cli.out_dir.join("dataset_self.bin");
        write_dataset(&path, &header, &samples)?;
        println!("wrote {} self-collision samples to {}", samples.len(), path.display());
    }
    Ok(())
}

fn run_train(cli: &Cli, args: &TrainArgs) -> CliResult {
    let (header, samples) = read_dataset(&args.dataset)?;
    let cfg = TrainConfig {
        hidden: args.hidden,
        max_epochs: args.epochs,
        patience: args.patience,
        seed: cli.seed,
        ..TrainConfig::default()
    };
    let outcome = train(&samples, &cfg)?;
    let model_path = args.out.clone().unwrap_or_else(|| cli.out_dir.join("model.bin"));
    outcome.model.save(&model_path)?;
    let history_path = cli.out_dir.join("train_history.json");
    std::fs::write(&history_path, serde_json::to_string_pretty(&outcome.history)? + "\n")?;
    println!(
        "trained on {} samples (dof {}, geom {}): best test mse {:.6e} at epoch {}; model at {}",
        samples.len(),
        header.dof,
        header.geom_dim,
        outcome.best_test_mse,
        outcome.best_epoch,
        model_path.display()
    );
    Ok(())
}

fn run_validate(cli: &Cli, args: &ValidateArgs) -> CliResult {
    let def = system(parse_system(&args.system)?);
    let model = MlpModel::load(&args.model)?;
    let grid_n = args.grid_n.unwrap_or(def.grid_n);
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let geometries: Vec<GeometryVector> =
        (0..args.num_geometries).map(|_| def.sampler.sample(&mut rng)).collect();
    let report = validate_batched(&model, &def.model, &geometries, grid_n)?;
    let path = cli.out_dir.join("validation.json");
    std::fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")?;
    println!(
        "accuracy {:.2}%  recall {:.2}%  precision {:.2}%  ({} geometries, grid {grid_n}); report at {}",
        report.accuracy,
        report.recall,
        report.precision,
        geometries.len(),
        path.display()
    );
    Ok(())
}

/// Grid resolutions that keep oracle construction tractable per dof.
fn default_grid_n(dof: usize) -> usize {
    match dof {
        0..=2 => 192,
        3 => 24,
        _ => 12,
    }
}

/// Builds the roadmap's backing field from CLI arguments. Returns boxed so
/// both backends share one code path.
fn open_field(
    scenario: &Scenario,
    model: Option<&Path>,
    self_model: Option<&Path>,
    grid_n: usize,
) -> Result<(Box<dyn DistanceField>, &'static str), CliError> {
    match model {
        None => {
            let field = OracleField::build(
                &scenario.robot,
                &scenario.obstacles,
                scenario.robot.dof() >= 3,
                grid_n,
            )?;
            Ok((Box::new(field), "oracle"))
        }
        Some(path) => {
            let net = MlpModel::load(path)?;
            let self_net = self_model.map(MlpModel::load).transpose()?;
            let field = NeuralField::new(
                scenario.robot.dof(),
                Some(net),
                scenario.obstacles.clone(),
                self_net,
                lattice_margin(&scenario.robot, grid_n),
            )?;
            Ok((Box::new(field), "nscdf"))
        }
    }
}

fn build_roadmap(cli: &Cli, args: &BuildRoadmapArgs) -> CliResult {
    let scenario = Scenario::load(&args.scenario)?;
    let grid_n = args.grid_n.unwrap_or_else(|| default_grid_n(scenario.robot.dof()));
    let (field, backend) =
        open_field(&scenario, args.model.as_deref(), args.self_model.as_deref(), grid_n)?;
    let planner = BubblePlanner::build(
        field.as_ref(),
        &scenario.robot.joint_limits,
        args.vertices,
        cli.seed,
        PlannerParams::default(),
        backend,
    )?;
    let path = args.out.clone().unwrap_or_else(|| cli.out_dir.join("roadmap.json"));
    save_roadmap(&path, &planner.roadmap, scenario_hash(&scenario))?;
    println!(
        "built {} balls, {} edges ({} s) on the {backend} backend; roadmap at {}",
        planner.roadmap.balls.len(),
        planner.roadmap.edges.len(),
        format_args!("{:.2}", planner.report.build_seconds),
        path.display()
    );
    for w in &planner.report.warnings {
        println!("warning: {w}");
    }
    Ok(())
}

fn run_plan(cli: &Cli, args: &PlanArgs) -> CliResult {
    let scenario = Scenario::load(&args.scenario)?;
    let (roadmap, stored_hash) = load_roadmap(&args.roadmap)?;
    if stored_hash != scenario_hash(&scenario) {
        return Err(CliError::Config(format!(
            "roadmap {} was built for a different scenario",
            args.roadmap.display()
        )));
    }
    let grid_n = args.grid_n.unwrap_or_else(|| default_grid_n(scenario.robot.dof()));
    let model = if roadmap.backend == "nscdf" { args.model.as_deref() } else { None };
    if roadmap.backend == "nscdf" && model.is_none() {
        return Err(CliError::Config(
            "roadmap was built on the nscdf backend; pass --model".into(),
        ));
    }
    let (field, _) = open_field(&scenario, model, args.self_model.as_deref(), grid_n)?;
    let start = parse_config_vec(&args.start, scenario.robot.dof())?;
    let goal = parse_config_vec(&args.goal, scenario.robot.dof())?;
    let planner = BubblePlanner::from_roadmap(
        field.as_ref(),
        &scenario.robot.joint_limits,
        roadmap,
        PlannerParams::default(),
    )?;
    let exact = ExactChecker::new(&scenario.robot, &scenario.obstacles);
    let res = if args.hybrid {
        planner.solve_hybrid(&start, &goal, &exact)
    } else {
        planner.solve(&start, &goal)
    };
    write_plan_artifacts(cli, &scenario, &planner, &res)?;
    match res.status {
        PlanStatus::Solved => {
            println!(
                "solved: {} waypoints, length {:.4}{}",
                res.polyline.len(),
                res.length,
                if res.used_hybrid { " (hybrid)" } else { "" }
            );
            Ok(())
        }
        PlanStatus::NoPath => Err(CliError::PlanFailed("no path through the roadmap".into())),
        PlanStatus::UnreachableQuery => Err(CliError::PlanFailed(
            "query endpoint could not be connected".into(),
        )),
    }
}

fn write_plan_artifacts(
    cli: &Cli,
    scenario: &Scenario,
    planner: &BubblePlanner,
    res: &PlanResult,
) -> CliResult {
    #[derive(serde::Serialize)]
    struct PlanFile<'a> {
        status: &'a PlanStatus,
        length: f64,
        used_hybrid: bool,
        polyline: &'a [Config],
    }
    let file = PlanFile {
        status: &res.status,
        length: res.length,
        used_hybrid: res.used_hybrid,
        polyline: &res.polyline,
    };
    std::fs::write(
        cli.out_dir.join("plan.json"),
        serde_json::to_string_pretty(&file)? + "\n",
    )?;
    if res.status == PlanStatus::Solved && !res.polyline.is_empty() {
        let svg = svg_workspace(scenario, &res.polyline)?;
        std::fs::write(cli.out_dir.join("plan_workspace.svg"), svg)?;
        if scenario.robot.dof() == 2 {
            let corridor_balls =
                res.corridor.as_ref().map(|c| c.balls.as_slice()).unwrap_or(&[]);
            let svg = svg_cspace(
                &scenario.robot.joint_limits,
                &planner.roadmap.balls,
                corridor_balls,
                &[(res.polyline.as_slice(), "#b91c1c")],
            )?;
            std::fs::write(cli.out_dir.join("plan_cspace.svg"), svg)?;
        }
    }
    Ok(())
}

fn run_bench(cli: &Cli, args: &BenchArgs) -> CliResult {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            // The file may give any subset of fields; --seed applies unless
            // the file pins a seed itself.
            let mut value: serde_json::Value = serde_json::from_str(&text)?;
            if let Some(map) = value.as_object_mut() {
                map.entry("seed").or_insert_with(|| cli.seed.into());
            }
            serde_json::from_value::<BenchmarkConfig>(value)?
        }
        None => BenchmarkConfig { seed: cli.seed, ..BenchmarkConfig::default() },
    };
    if let Some(name) = &args.system {
        cfg.system = parse_system(name)?;
    }
    cfg.validate()?;
    let backend = match &args.model {
        None => FieldBackend::Oracle,
        Some(path) => FieldBackend::Neural {
            obstacle: MlpModel::load(path)?,
            self_net: args.self_model.as_deref().map(MlpModel::load).transpose()?,
        },
    };
    let (report, timing) = run_benchmark(&cfg, &backend)?;
    let written = write_artifacts(&cli.out_dir, &report, &timing)?;
    print!("{}", summary_table(&report));
    println!("{} artifact files in {}", written.len(), cli.out_dir.display());
    Ok(())
}

/// A scene whose start configuration is exactly the kind the field alone
/// must reject: truly collision-free, but inside the safety margin where
/// the field reads non-positive clearance.
fn hybrid_demo(cli: &Cli, args: &HybridDemoArgs) -> CliResult {
    let robot = RobotModel::new(vec![1.0, 0.8], 0.05, vec![[-3.1, 3.1]; 2])
        .map_err(CliError::from)?;
    let obstacles = vec![
        GeometryVector::Circle { center: [1.1, 0.9], radius: 0.35 },
        GeometryVector::Circle { center: [-1.2, -0.6], radius: 0.3 },
    ];
    let scenario = Scenario { robot, obstacles };
    // A deliberately coarse lattice gives the margin band real volume.
    let grid_n = 48;
    let field = OracleField::build(&scenario.robot, &scenario.obstacles, false, grid_n)?;
    let exact = ExactChecker::new(&scenario.robot, &scenario.obstacles);
    let limits = scenario.robot.joint_limits.clone();
    let params = PlannerParams::default();

    // Scan for a start the exact detector accepts but the field refuses.
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let mut start = None;
    for _ in 0..200_000 {
        let q = scenario.robot.uniform_config(&mut rng);
        if field.clearance(&q) <= params.r_min && !exact.in_collision(&q) {
            start = Some(q);
            break;
        }
    }
    let start = start.ok_or_else(|| {
        CliError::Other("demo scene yielded no margin-band start configuration".into())
    })?;
    let mut goal = None;
    for _ in 0..200_000 {
        let q = scenario.robot.uniform_config(&mut rng);
        if field.clearance(&q) > 0.3 {
            goal = Some(q);
            break;
        }
    }
    let goal = goal.ok_or_else(|| CliError::Other("no comfortable goal found".into()))?;

    let planner = BubblePlanner::build(&field, &limits, 150, cli.seed, params, "oracle")?;
    let plain = planner.solve(&start, &goal);
    let rescued = if args.disable_fallback {
        None
    } else {
        Some(planner.solve_hybrid(&start, &goal, &exact))
    };

    let status_name = |s: &PlanStatus| match s {
        PlanStatus::Solved => "solved",
        PlanStatus::NoPath => "no_path",
        PlanStatus::UnreachableQuery => "unreachable_query",
    };
    println!(
        "start {:?}: field clearance {:.4} <= r_min, exact detector reports free",
        start.as_slice(),
        field.clearance(&start)
    );
    println!("field-only verdict: {}", status_name(&plain.status));
    if let Some(res) = &rescued {
        println!(
            "with exact fallback: {}{}",
            status_name(&res.status),
            if res.used_hybrid { " via hybrid_verified edges" } else { "" }
        );
        if res.status == PlanStatus::Solved {
            let free = exact.path_free(&res.polyline, 1e-3);
            println!(
                "rescued path: {} waypoints, length {:.4}, exact validation {}",
                res.polyline.len(),
                res.length,
                if free { "passed" } else { "FAILED" }
            );
            let svg = svg_workspace(&scenario, &res.polyline)?;
            std::fs::write(cli.out_dir.join("hybrid_workspace.svg"), svg)?;
        }
    }

    #[derive(serde::Serialize)]
    struct DemoFile<'a> {
        start: &'a Config,
        goal: &'a Config,
        field_only_status: &'a str,
        fallback_status: Option<&'a str>,
        used_hybrid: Option<bool>,
    }
    let file = DemoFile {
        start: &start,
        goal: &goal,
        field_only_status: status_name(&plain.status),
        fallback_status: rescued.as_ref().map(|r| status_name(&r.status)),
        used_hybrid: rescued.as_ref().map(|r| r.used_hybrid),
    };
    std::fs::write(
        cli.out_dir.join("hybrid_demo.json"),
        serde_json::to_string_pretty(&file)? + "\n",
    )?;
    Ok(())
}
