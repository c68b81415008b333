//! Command-line front end: parsing, estimation, grounding, trajectory
//! generation, task execution, and the benchmark/metrics reports.

use clap::{Parser, Subcommand, ValueEnum};
use partkit::action_program::{parse_strategies, serialize_strategies};
use partkit::bench::{estimation_benchmark, load_task_specs, run_benchmark};
use partkit::fixtures;
use partkit::geometry::PointCloud;
use partkit::joint_estimation::{interactive_perception, RansacParams};
use partkit::part_grounding::{knn_ground, max_pool, FeatureMap, FeatureStore, DEFAULT_K};
use partkit::planner::{
    build_scene_description, run_global_plan, MockBackend, PlannerConfig,
};
use partkit::scene_model::{load_scene, load_scene_file, ArticulatedObject};
use partkit::simulator::SimConfig;
use partkit::trajectory::{
    delta_to_joint_units, generate_trajectory, part_extent_along, select_grasp, trajectory_to_json,
};
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Parser)]
#[command(name = "partkit", version, about = "articulated-object manipulation toolkit")]
struct Cli {
    /// Seed for all randomized stages.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write output to a file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output rendering.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an action program and echo its canonical form.
    ParseProgram {
        /// Program file; reads stdin when omitted.
        file: Option<PathBuf>,
    },
    /// Estimate joint parameters from two corresponded .xyz point clouds.
    EstimateJoint {
        #[arg(long)]
        before: PathBuf,
        #[arg(long)]
        after: PathBuf,
    },
    /// Classify a part feature against a reference store.
    Ground {
        /// JSON Lines store: one {"label", "vector"} per line.
        #[arg(long)]
        store: PathBuf,
        /// Query JSON: {"feature": [...]} or a feature map
        /// {"width", "height", "channels", "values", "mask"}.
        #[arg(long)]
        query: PathBuf,
        #[arg(short, default_value_t = DEFAULT_K)]
        k: usize,
    },
    /// Generate a gripper trajectory for one part motion.
    PlanTraj {
        /// Scene JSON path, or fixture:NAME for a bundled scene.
        #[arg(long)]
        scene: String,
        #[arg(long)]
        part: String,
        /// Degrees for revolute parts, box-extent fraction for prismatic.
        #[arg(long)]
        delta: f64,
    },
    /// Run one instruction through the global planner.
    RunTask {
        #[arg(long)]
        scene: String,
        #[arg(long)]
        instruction: String,
        /// Mock interpreter rule table; bundled rules when omitted.
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long)]
        manual: Option<String>,
        /// Write the episode event log (JSON Lines) here.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Run the task benchmark.
    Bench {
        /// Task spec JSON; bundled specs when omitted.
        #[arg(long)]
        specs: Option<PathBuf>,
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Override the per-task trial count.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Joint-estimation accuracy sweep over noise and outlier levels.
    Metrics {
        #[arg(long, default_value_t = 50)]
        trials: usize,
        /// Comma-separated noise sigmas in meters.
        #[arg(long, default_value = "0.0,0.002")]
        noise: String,
        /// Comma-separated outlier fractions.
        #[arg(long, default_value = "0.0,0.2")]
        outliers: String,
    },
}

fn emit(cli: &Cli, text: String) -> Result<(), String> {
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_scene_arg(scene: &str) -> Result<ArticulatedObject, String> {
    if let Some(name) = scene.strip_prefix("fixture:") {
        let text = fixtures::raw(name).ok_or_else(|| format!("unknown fixture {name:?}"))?;
        load_scene(text).map_err(|e| e.to_string())
    } else {
        load_scene_file(std::path::Path::new(scene)).map_err(|e| e.to_string())
    }
}

fn load_backend(rules: &Option<PathBuf>) -> Result<MockBackend, String> {
    let text = match rules {
        Some(path) => {
            std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => fixtures::MOCK_RULES.to_string(),
    };
    MockBackend::from_json(&text).map_err(|e| e.to_string())
}

fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| format!("bad number {s:?}: {e}")))
        .collect()
}

fn run(cli: &Cli) -> Result<(), String> {
    match &cli.command {
        Command::ParseProgram { file } => {
            let text = match file {
                Some(path) => std::fs::read_to_string(path)
                    .map_err(|e| format!("{}: {e}", path.display()))?,
                None => {
                    let mut buf = String::new();
                    std::io::stdin().read_to_string(&mut buf).map_err(|e| e.to_string())?;
                    buf
                }
            };
            let set = parse_strategies(&text).map_err(|e| e.to_string())?;
            let out = match cli.format {
                Format::Json => serde_json::to_string_pretty(&set).unwrap() + "\n",
                Format::Table => serialize_strategies(&set).map_err(|e| e.to_string())? + "\n",
            };
            emit(cli, out)
        }
        Command::EstimateJoint { before, after } => {
            let read = |p: &PathBuf| -> Result<PointCloud, String> {
                let text =
                    std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
                PointCloud::from_xyz_text(&text)
            };
            let x0 = read(before)?;
            let xt = read(after)?;
            let params = RansacParams { seed: cli.seed, ..Default::default() };
            let est = interactive_perception(&x0, &xt, &params, x0.centroid())
                .map_err(|e| e.to_string())?;
            let out = match cli.format {
                Format::Json => serde_json::to_string_pretty(&est).unwrap() + "\n",
                Format::Table => format!(
                    "kind: {}\naxis_dir: [{:.6}, {:.6}, {:.6}]\naxis_point: [{:.6}, {:.6}, {:.6}]\ndisplacement: {:.6}\n",
                    est.kind.name(),
                    est.axis_dir.x, est.axis_dir.y, est.axis_dir.z,
                    est.axis_point.x, est.axis_point.y, est.axis_point.z,
                    est.displacement
                ),
            };
            emit(cli, out)
        }
        Command::Ground { store, query, k } => {
            let store_text =
                std::fs::read_to_string(store).map_err(|e| format!("{}: {e}", store.display()))?;
            let store = FeatureStore::from_jsonl(&store_text).map_err(|e| e.to_string())?;
            let query_text =
                std::fs::read_to_string(query).map_err(|e| format!("{}: {e}", query.display()))?;
            let value: serde_json::Value =
                serde_json::from_str(&query_text).map_err(|e| e.to_string())?;
            let feature: Vec<f64> = if value.get("feature").is_some() {
                serde_json::from_value(value["feature"].clone()).map_err(|e| e.to_string())?
            } else {
                let map: FeatureMap =
                    serde_json::from_value(value).map_err(|e| e.to_string())?;
                max_pool(&map).map_err(|e| e.to_string())?
            };
            let (label, votes) = knn_ground(&store, &feature, *k).map_err(|e| e.to_string())?;
            let out = match cli.format {
                Format::Json => {
                    serde_json::to_string_pretty(&serde_json::json!({
                        "label": label,
                        "votes": votes,
                    }))
                    .unwrap()
                        + "\n"
                }
                Format::Table => format!("label: {}\nvotes: {:?}\n", label.hyphenated(), votes),
            };
            emit(cli, out)
        }
        Command::PlanTraj { scene, part, delta } => {
            let obj = load_scene_arg(scene)?;
            let p = obj.part(part).map_err(|e| e.to_string())?.clone();
            let actuated = obj.actuated_part(part).map_err(|e| e.to_string())?.clone();
            let joint = actuated
                .joint
                .clone()
                .ok_or_else(|| format!("part {part:?} has no movable joint"))?;
            let grasp = select_grasp(&p, &obj).map_err(|e| e.to_string())?;
            let extent = part_extent_along(&actuated, joint.axis_dir);
            let dj = delta_to_joint_units(*delta, &joint, extent);
            let traj = generate_trajectory(grasp, &joint, obj.state(&actuated.id), dj)
                .map_err(|e| e.to_string())?;
            let out = match cli.format {
                Format::Json => {
                    serde_json::to_string_pretty(&trajectory_to_json(&traj)).unwrap() + "\n"
                }
                Format::Table => format!(
                    "waypoints: {}\ndelta_applied: {:.6}\nclamped: {}\n",
                    traj.waypoints.len(),
                    traj.delta_applied,
                    traj.clamped
                ),
            };
            emit(cli, out)
        }
        Command::RunTask { scene, instruction, rules, manual, log } => {
            let obj = load_scene_arg(scene)?;
            let backend = load_backend(rules)?;
            let result = run_global_plan(
                &obj,
                instruction,
                manual.as_deref(),
                &backend,
                None,
                &PlannerConfig::default(),
                &SimConfig::default(),
                cli.seed,
            )
            .map_err(|e| e.to_string())?;
            if let Some(path) = log {
                std::fs::write(path, &result.event_log_jsonl)
                    .map_err(|e| format!("{}: {e}", path.display()))?;
            }
            let out = match cli.format {
                Format::Json => serde_json::to_string_pretty(&result).unwrap() + "\n",
                Format::Table => format!(
                    "scene: {}\ninstruction: {}\nsuccess: {}\nstrategies_tried: {}\nbackend_calls: {}\neffects: {:?}\n",
                    build_scene_description(&obj).text,
                    instruction,
                    result.success,
                    result.strategies_tried,
                    result.backend_calls,
                    result.effect_flags
                ),
            };
            emit(cli, out)
        }
        Command::Bench { specs, rules, trials } => {
            let text = match specs {
                Some(path) => std::fs::read_to_string(path)
                    .map_err(|e| format!("{}: {e}", path.display()))?,
                None => fixtures::BENCH_SPECS.to_string(),
            };
            let mut specs = load_task_specs(&text).map_err(|e| e.to_string())?;
            if let Some(n) = trials {
                for s in specs.iter_mut() {
                    s.trials = *n;
                }
            }
            let backend = load_backend(rules)?;
            let report = run_benchmark(
                &specs,
                &backend,
                &PlannerConfig::default(),
                &SimConfig::default(),
                cli.seed,
            )
            .map_err(|e| e.to_string())?;
            let out = match cli.format {
                Format::Json => serde_json::to_string_pretty(&report).unwrap() + "\n",
                Format::Table => report.to_text(),
            };
            emit(cli, out)
        }
        Command::Metrics { trials, noise, outliers } => {
            let noise_grid = parse_grid(noise)?;
            let outlier_grid = parse_grid(outliers)?;
            let report = estimation_benchmark(*trials, &noise_grid, &outlier_grid, cli.seed);
            let out = match cli.format {
                Format::Json => serde_json::to_string_pretty(&report).unwrap() + "\n",
                Format::Table => report.to_text(),
            };
            emit(cli, out)
        }
    }
}

struct StderrLogger;

impl log::Log for StderrLogger {
    fn enabled(&self, metadata: &log::Metadata) -> bool {
        metadata.level() <= log::max_level()
    }

    fn log(&self, record: &log::Record) {
        if self.enabled(record.metadata()) {
            eprintln!("[{}] {}", record.level(), record.args());
        }
    }

    fn flush(&self) {}
}

fn init_logging() {
    let level = match std::env::var("PARTKIT_LOG").ok().as_deref() {
        Some("debug") => log::LevelFilter::Debug,
        Some("trace") => log::LevelFilter::Trace,
        Some("error") => log::LevelFilter::Error,
        Some("off") => log::LevelFilter::Off,
        _ => log::LevelFilter::Warn,
    };
    let _ = log::set_logger(&StderrLogger);
    log::set_max_level(level);
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
