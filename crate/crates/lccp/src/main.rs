//! Command-line front end. JSON results go to stdout, human-readable logs
//! to stderr. Exit codes: 0 success, 2 timeout-with-incumbent, 1 error.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lccp::bnb::{solve, SolveStats, SolveStatus, SolverConfig};
use lccp::colgen::MasterMode;
use lccp::instance::{
    generate_euclidean, instance_to_json, load_instance, metric_closure, validate_partition,
    CyclePartition, Instance, InstanceFormat,
};
use lccp::oracle;
use lccp::report::{shifted_geomean, BenchRow, BenchSummary, RunReport};

#[derive(Parser)]
#[command(name = "lccp", about = "Length-constrained cycle partitioning solver", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

impl From<FormatArg> for InstanceFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => InstanceFormat::Text,
            FormatArg::Json => InstanceFormat::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Partition,
    Cover,
}

impl From<ModeArg> for MasterMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Partition => MasterMode::Partition,
            ModeArg::Cover => MasterMode::Cover,
        }
    }
}

#[derive(Args, Clone)]
struct SolveFlags {
    /// Master problem relaxation: set partitioning or (metric-only) set covering
    #[arg(long, value_enum, default_value = "partition")]
    mode: ModeArg,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    bidirectional: bool,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    symmetry_sort: bool,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    early_branching: bool,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    heuristic_pricing: bool,
    /// Pricing worker threads (1 = sequential)
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Wall-clock limit in seconds
    #[arg(long = "time-limit")]
    time_limit: Option<f64>,
    #[arg(long, default_value_t = 50)]
    max_columns_per_round: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SolveFlags {
    fn to_config(&self) -> SolverConfig {
        SolverConfig {
            mode: self.mode.into(),
            bidirectional: self.bidirectional,
            symmetry_sort: self.symmetry_sort,
            early_branching: self.early_branching,
            heuristic_pricing: self.heuristic_pricing,
            workers: self.workers.max(1),
            time_limit_s: self.time_limit.unwrap_or(f64::INFINITY),
            max_columns_per_round: self.max_columns_per_round,
            seed: self.seed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance to proven optimality
    Solve {
        /// Instance path, or "-" for stdin
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
        /// Write the solution JSON here instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
        /// Replace travel times with shortest-path distances before solving
        #[arg(long)]
        metric_closure: bool,
        #[command(flatten)]
        flags: SolveFlags,
    },
    /// Check a solution file against an instance
    Validate {
        instance: PathBuf,
        solution: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
    },
    /// Emit a random Euclidean instance as JSON
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100.0)]
        coord_range: f64,
        #[arg(long, default_value_t = 50.0)]
        crit_low: f64,
        #[arg(long, default_value_t = 200.0)]
        crit_high: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Exhaustive reference answer for small instances (n <= 12)
    Oracle {
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
        #[arg(long)]
        metric_closure: bool,
    },
    /// Run solver ablation variants over a directory of instances
    Bench {
        /// Directory of instance files
        dir: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
        /// Comma-separated variants: full,nobidir,nopar,nosymbr,noearly,basic
        #[arg(long, value_delimiter = ',', default_value = "full,nobidir,nopar,nosymbr,noearly,basic")]
        variants: Vec<String>,
        #[arg(long = "time-limit", default_value_t = 60.0)]
        time_limit: f64,
        #[arg(long, default_value_t = 4)]
        workers: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Solve {
            instance,
            format,
            output,
            metric_closure: closure,
            flags,
        } => {
            let mut inst = read_instance(&instance, format.into())?;
            if closure {
                inst = metric_closure(&inst);
            }
            let (part, stats, status) = solve(&inst, &flags.to_config())?;
            let verdict = validate_partition(&inst, &part);
            if !verdict.is_accept() {
                return Err(format!("solver produced invalid partition: {verdict}").into());
            }
            let report = make_report(&part, &stats, status);
            eprintln!(
                "objective {} (lower bound {}), {} nodes, {} LP solves, {:.3}s{}",
                part.objective,
                stats.lower_bound,
                stats.nodes_processed,
                stats.lp_solves,
                stats.wall_time_s,
                if status == SolveStatus::Timeout { " [timeout]" } else { "" }
            );
            let mut doc: serde_json::Value = serde_json::from_str(&part.to_json())?;
            doc["report"] = serde_json::to_value(&report)?;
            emit(output.as_deref(), &serde_json::to_string_pretty(&doc)?)?;
            Ok(ExitCode::from(if status == SolveStatus::Timeout { 2 } else { 0 }))
        }
        Command::Validate {
            instance,
            solution,
            format,
        } => {
            let inst = read_instance(&instance, format.into())?;
            let mut buf = String::new();
            File::open(&solution)?.read_to_string(&mut buf)?;
            let part = CyclePartition::from_json(&buf)?;
            let verdict = validate_partition(&inst, &part);
            if verdict.is_accept() {
                eprintln!("solution accepted: {} cycles", part.objective);
                Ok(ExitCode::from(0))
            } else {
                eprintln!("solution rejected: {verdict}");
                Ok(ExitCode::from(1))
            }
        }
        Command::Generate {
            n,
            seed,
            coord_range,
            crit_low,
            crit_high,
            output,
        } => {
            let inst = generate_euclidean(n, seed, coord_range, crit_low, crit_high)?;
            emit(output.as_deref(), &instance_to_json(&inst))?;
            Ok(ExitCode::from(0))
        }
        Command::Oracle {
            instance,
            format,
            metric_closure: closure,
        } => {
            let mut inst = read_instance(&instance, format.into())?;
            if closure {
                inst = metric_closure(&inst);
            }
            let opt = oracle::optimal_partition(&inst)?;
            let catalog = oracle::enumerate_cycles(&inst, &[])?;
            emit(
                None,
                &serde_json::json!({
                    "objective": opt,
                    "feasible_cycles": catalog.cycles.len(),
                })
                .to_string(),
            )?;
            Ok(ExitCode::from(0))
        }
        Command::Bench {
            dir,
            format,
            variants,
            time_limit,
            workers,
            output,
        } => cmd_bench(&dir, format.into(), &variants, time_limit, workers, output.as_deref()),
    }
}

fn read_instance(path: &Path, format: InstanceFormat) -> Result<Instance, Box<dyn std::error::Error>> {
    if path.as_os_str() == "-" {
        Ok(load_instance(io::stdin().lock(), format)?)
    } else {
        Ok(load_instance(File::open(path)?, format)?)
    }
}

fn emit(output: Option<&Path>, body: &str) -> io::Result<()> {
    match output {
        Some(path) => {
            let mut f = File::create(path)?;
            writeln!(f, "{body}")
        }
        None => {
            println!("{body}");
            Ok(())
        }
    }
}

fn make_report(part: &CyclePartition, stats: &SolveStats, status: SolveStatus) -> RunReport {
    RunReport {
        objective: part.objective,
        lower_bound: stats.lower_bound,
        status: match status {
            SolveStatus::Optimal => "optimal".into(),
            SolveStatus::Timeout => "timeout".into(),
        },
        wall_time_s: stats.wall_time_s,
        nodes_processed: stats.nodes_processed,
        lp_solves: stats.lp_solves,
        pricing_rounds: stats.pricing_rounds,
        farkas_rounds: stats.farkas_rounds,
        columns_added: stats.columns_added,
        labels_generated: stats.pricing.labels_generated,
        labels_dominated: stats.pricing.labels_dominated,
        merges_attempted: stats.pricing.merges_attempted,
        root_lp: stats.root_lp,
    }
}

fn variant_config(name: &str, time_limit: f64, workers: usize) -> Option<SolverConfig> {
    let mut cfg = SolverConfig {
        time_limit_s: time_limit,
        workers,
        ..SolverConfig::default()
    };
    match name {
        "full" => {}
        "nobidir" => cfg.bidirectional = false,
        "nopar" => cfg.workers = 1,
        "nosymbr" => cfg.symmetry_sort = false,
        "noearly" => cfg.early_branching = false,
        "basic" => {
            cfg.bidirectional = false;
            cfg.workers = 1;
            cfg.symmetry_sort = false;
            cfg.early_branching = false;
            cfg.heuristic_pricing = false;
        }
        _ => return None,
    }
    Some(cfg)
}

fn cmd_bench(
    dir: &Path,
    format: InstanceFormat,
    variants: &[String],
    time_limit: f64,
    workers: usize,
    output: Option<&Path>,
) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(format!("no instance files in {}", dir.display()).into());
    }
    let mut rows: Vec<BenchRow> = Vec::new();
    let mut summaries: Vec<BenchSummary> = Vec::new();
    for variant in variants {
        let cfg = variant_config(variant, time_limit, workers)
            .ok_or_else(|| format!("unknown variant {variant}"))?;
        let mut times = Vec::new();
        let mut solved = 0;
        for path in &paths {
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            let row = match read_instance(path, format).and_then(|inst| Ok(solve(&inst, &cfg)?)) {
                Ok((part, stats, status)) => {
                    let timed_out = status == SolveStatus::Timeout;
                    // timeouts are charged the full limit
                    let t = if timed_out { time_limit } else { stats.wall_time_s };
                    times.push(t);
                    if !timed_out {
                        solved += 1;
                    }
                    BenchRow {
                        instance: name,
                        variant: variant.clone(),
                        objective: (!timed_out).then_some(part.objective),
                        time_s: t,
                        timed_out,
                        nodes_processed: stats.nodes_processed,
                        labels_generated: stats.pricing.labels_generated,
                    }
                }
                Err(e) => {
                    eprintln!("{name} [{variant}]: {e}");
                    times.push(time_limit);
                    BenchRow {
                        instance: name,
                        variant: variant.clone(),
                        objective: None,
                        time_s: time_limit,
                        timed_out: true,
                        nodes_processed: 0,
                        labels_generated: 0,
                    }
                }
            };
            eprintln!(
                "{} [{}]: {}{:.3}s",
                row.instance,
                variant,
                row.objective.map(|o| format!("obj {o}, ")).unwrap_or_default(),
                row.time_s
            );
            rows.push(row);
        }
        summaries.push(BenchSummary {
            variant: variant.clone(),
            solved,
            total: paths.len(),
            shifted_geomean_time_s: shifted_geomean(&times, 1.0),
        });
    }
    for s in &summaries {
        eprintln!(
            "{}: {}/{} solved, shifted geomean {:.3}s",
            s.variant, s.solved, s.total, s.shifted_geomean_time_s
        );
    }
    let doc = serde_json::json!({ "rows": rows, "summaries": summaries });
    emit(output, &serde_json::to_string_pretty(&doc)?)?;
    Ok(ExitCode::from(0))
}
