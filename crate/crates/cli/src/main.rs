use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use noma_v2x::config::{Config, Scheme, Sweep, PRESETS};
use noma_v2x::harness::{execute, summarize, write_outputs, Plan, RunStatus};
use noma_v2x::io::{read_schedule, read_scenario, write_powers, write_scenario, write_schedule};
use noma_v2x::scenario::Geometry;
use noma_v2x::scheduler::constraints::check_schedule;
use noma_v2x::sim::{limits, run_scheme};
use noma_v2x::verify::{verify, Level, VerifyOptions};

const EXIT_RUN: u8 = 1;
const EXIT_VERIFY: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser)]
#[command(name = "noma-v2x", version, about = "NOMA V2X broadcast scheduling simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write runs.csv and summary.json.
    Run(RunArgs),
    /// Run the self-verification suite.
    Verify(VerifyArgs),
    /// Check a schedule file against the scheduling constraints.
    CheckSchedule(CheckArgs),
    /// Write the scenario, schedule and powers of one run.
    Export(ExportArgs),
    /// Named configurations.
    Preset {
        #[command(subcommand)]
        command: PresetCommand,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named configuration used when no file is given.
    #[arg(long, default_value = "desk")]
    preset: String,
}

impl ConfigArgs {
    fn load(&self) -> Result<Config, String> {
        match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| format!("{}: {e}", path.display()))?;
                Config::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))
            }
            None => Config::preset(&self.preset).map_err(|e| e.to_string()),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    seeds_per_point: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Schemes to run, comma separated.
    #[arg(long, value_delimiter = ',')]
    scheme: Vec<Scheme>,
    /// Sweep as `var=a,b,c` with var one of v, r, k_max, r_th, n_users.
    #[arg(long)]
    sweep: Option<Sweep>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Fast,
    Full,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "fast")]
    level: LevelArg,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Disable the rotation validity check (negative control).
    #[arg(long)]
    planted_bug: bool,
}

#[derive(Args)]
struct CheckArgs {
    /// Schedule table (`slot,user,role,channels`).
    schedule: PathBuf,
    /// Scenario JSON.
    scenario: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    /// Scheme whose limits apply.
    #[arg(long, default_value = "noma-mcd")]
    scheme: Scheme,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, default_value = "noma-mcd")]
    scheme: Scheme,
    /// Run seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "export")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum PresetCommand {
    /// List preset names.
    List,
    /// Print a preset as TOML.
    Show { name: String },
}

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn run(args: RunArgs) -> ExitCode {
    let mut config = match args.config.load() {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let e = &mut config.experiment;
    if let Some(seed) = args.seed {
        e.master_seed = seed;
    }
    if let Some(n) = args.seeds_per_point {
        e.seeds_per_point = n;
    }
    if !args.scheme.is_empty() {
        e.schemes = args.scheme;
    }
    if let Some(sweep) = args.sweep {
        e.sweep = Some(sweep);
    }
    if let Some(jobs) = args.jobs {
        e.jobs = jobs;
    }
    let plan = match Plan::new(config) {
        Ok(p) => p,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let rows = match execute(&plan, plan.base.experiment.jobs) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_RUN, e),
    };
    let summary = summarize(&plan, &rows);
    let files = match write_outputs(&args.out, &rows, &summary) {
        Ok(f) => f,
        Err(e) => return fail(EXIT_RUN, e),
    };
    for p in &summary.points {
        let fmt = |e: &noma_v2x::harness::Estimate| match (e.mean, e.ci95) {
            (Some(m), Some(c)) => format!("{m:.4} ± {c:.4}"),
            (Some(m), None) => format!("{m:.4}"),
            _ => "-".to_string(),
        };
        let value = p.value.map_or(String::new(), |v| format!(" {v}"));
        println!(
            "{:<9}{value:>7}  prp {}  latency {}  failed {}/{}",
            p.scheme.as_str(),
            fmt(&p.prp),
            fmt(&p.latency_ratio),
            p.failed,
            p.runs
        );
    }
    println!("wrote {} and {}", files.runs.display(), files.summary.display());
    let failed = rows.iter().filter(|r| r.status == RunStatus::Failed).count();
    if failed > 0 {
        return fail(EXIT_RUN, format!("{failed} of {} runs failed", rows.len()));
    }
    ExitCode::SUCCESS
}

fn run_verify(args: VerifyArgs) -> ExitCode {
    let report = verify(&VerifyOptions {
        level: match args.level {
            LevelArg::Fast => Level::Fast,
            LevelArg::Full => Level::Full,
        },
        seed: args.seed,
        planted_bug: args.planted_bug,
    });
    for c in &report.checks {
        println!("{c}");
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        fail(
            EXIT_VERIFY,
            format!("failed invariants: {}", report.failed_names().join(", ")),
        )
    }
}

fn open(path: &Path) -> Result<BufReader<File>, String> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| format!("{}: {e}", path.display()))
}

fn check(args: CheckArgs) -> ExitCode {
    let config = match args.config.load() {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let scenario = match open(&args.scenario).and_then(|r| {
        read_scenario(r).map_err(|e| format!("{}: {e}", args.scenario.display()))
    }) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let limits = limits(&config, args.scheme);
    let slots = scenario.config.slots;
    let schedule = match open(&args.schedule).and_then(|r| {
        read_schedule(r, slots, limits.channels)
            .map_err(|e| format!("{}: {e}", args.schedule.display()))
    }) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let geometry = Geometry::new(&scenario, scenario.config.range_m);
    let report = check_schedule(&geometry, &schedule, &scenario.vehicles(), &limits);
    for c in noma_v2x::scheduler::constraints::Constraint::ALL {
        let n = report.count(c);
        if n == 0 {
            println!("{:<16} satisfied", c.label());
        } else {
            println!("{:<16} violated ({n})", c.label());
        }
    }
    for v in &report.violations {
        println!("  {v}");
    }
    if report.is_ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFY)
    }
}

fn export(args: ExportArgs) -> ExitCode {
    let config = match args.config.load() {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let out = match run_scheme(&config, args.scheme, args.seed) {
        Ok(o) => o,
        Err(e) => return fail(EXIT_RUN, e),
    };
    let write = || -> Result<(), String> {
        std::fs::create_dir_all(&args.out).map_err(|e| e.to_string())?;
        let create = |name: &str| {
            File::create(args.out.join(name)).map_err(|e| format!("{name}: {e}"))
        };
        write_scenario(&out.scenario, create("scenario.json")?).map_err(|e| e.to_string())?;
        write_schedule(&out.outcome.schedule, out.scenario.len(), create("schedule.csv")?)
            .map_err(|e| e.to_string())?;
        write_powers(&out.powers, create("powers.csv")?).map_err(|e| e.to_string())?;
        Ok(())
    };
    if let Err(e) = write() {
        return fail(EXIT_RUN, e);
    }
    println!(
        "{} seed {}: prp {:?}, fading seed {}; wrote {}",
        args.scheme,
        args.seed,
        out.metrics.prp,
        out.seeds.fading,
        args.out.display()
    );
    ExitCode::SUCCESS
}

fn preset(command: PresetCommand) -> ExitCode {
    match command {
        PresetCommand::List => {
            for name in PRESETS {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
        PresetCommand::Show { name } => match Config::preset(&name) {
            Ok(c) => {
                print!("{}", c.to_toml());
                ExitCode::SUCCESS
            }
            Err(e) => fail(EXIT_CONFIG, e),
        },
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Command::Run(a) => run(a),
        Command::Verify(a) => run_verify(a),
        Command::CheckSchedule(a) => check(a),
        Command::Export(a) => export(a),
        Command::Preset { command } => preset(command),
    }
}
