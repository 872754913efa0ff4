use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use joinprobe::dialect::Dialect;
use joinprobe::harness::{open_engine, read_reports, replay, run_campaign, CampaignConfig};
use joinprobe::noise::{inject, NoisePlan};
use joinprobe::normalizer::{ddl, normalize, NormalizeConfig};
use joinprobe::{fixture, Error, Result};

#[derive(Parser)]
#[command(name = "joinprobe", version, about = "Find logic bugs in join optimization with ground-truth results")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a testing campaign.
    Run(RunArgs),
    /// Re-execute recorded bug reports.
    Replay {
        /// Line-delimited bug reports.
        reports: PathBuf,
        /// Engine to replay on; defaults to the one in each report.
        #[arg(long)]
        engine: Option<String>,
    },
    /// Print the DDL (and optionally data) for a dataset.
    GenSchema {
        #[arg(long, default_value = "builtin:shopping")]
        dataset: String,
        #[arg(long, default_value = "generic")]
        dialect: String,
        /// Inject noise with this ratio before emitting.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Declare primary, unique and foreign keys.
        #[arg(long)]
        constraints: bool,
        /// Emit INSERT statements too.
        #[arg(long)]
        data: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with any of the settings below; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<String>,
    /// ref, mutant, mutant:<fault,...> or <dialect>:<dsn>.
    #[arg(long)]
    engine: Option<String>,
    #[arg(long)]
    hints: Option<PathBuf>,
    #[arg(long)]
    gamma: Option<usize>,
    #[arg(long)]
    max_walk_len: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of base queries.
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    time_limit_secs: Option<u64>,
    #[arg(long)]
    no_noise: bool,
    #[arg(long)]
    no_gt: bool,
    #[arg(long)]
    no_kqe: bool,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    resume_index: Option<PathBuf>,
    /// Directory for bugs.jsonl, summary.json and index.gidx.
    #[arg(long, default_value = "joinprobe-out")]
    out: PathBuf,
}

impl RunArgs {
    fn config(&self) -> Result<CampaignConfig> {
        let mut c = match &self.config {
            Some(p) => CampaignConfig::load(p)?,
            None => CampaignConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = &self.$f { c.$f = v.clone().into(); } )* };
        }
        set!(dataset, engine, gamma, max_walk_len, epsilon, seed, budget, workers);
        if self.hints.is_some() {
            c.hints = self.hints.clone();
        }
        if self.time_limit_secs.is_some() {
            c.time_limit_secs = self.time_limit_secs;
        }
        if self.resume_index.is_some() {
            c.resume_index = self.resume_index.clone();
        }
        c.no_noise |= self.no_noise;
        c.no_gt |= self.no_gt;
        c.no_kqe |= self.no_kqe;
        Ok(c)
    }
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let cfg = args.config()?;
    let outcome = run_campaign(&cfg)?;
    outcome.write(&args.out)?;
    let s = &outcome.summary;
    println!(
        "{} queries, {} iso classes, {} bugs in {} classes, {} engine errors ({} ms)",
        s.queries, s.distinct_iso_classes, s.bugs, s.bug_classes, s.engine_errors, s.elapsed_ms
    );
    println!("results in {}", args.out.display());
    if let Some(why) = &s.aborted {
        eprintln!("campaign aborted: {why}");
        return Ok(ExitCode::from(2));
    }
    Ok(if s.bugs > 0 { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn replay_all(path: PathBuf, engine: Option<String>) -> Result<ExitCode> {
    let reports = read_reports(std::io::BufReader::new(std::fs::File::open(path)?))?;
    let mut reproduced = 0;
    for r in &reports {
        let mut e = open_engine(engine.as_deref().unwrap_or(&r.engine))?;
        let out = replay(r, e.as_mut())?;
        reproduced += out.reproduced as usize;
        println!(
            "query {} [{}]: {}{}",
            r.query_index,
            r.hint,
            if out.reproduced { "reproduced" } else { "not reproduced" },
            if out.same_result { "" } else { " (different result)" }
        );
    }
    println!("{reproduced}/{} reproduced", reports.len());
    Ok(if reproduced == reports.len() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn gen_schema(
    dataset: &str,
    dialect: &str,
    epsilon: Option<f64>,
    seed: u64,
    constraints: bool,
    data: bool,
) -> Result<ExitCode> {
    let dialect = Dialect::parse(dialect).ok_or_else(|| Error::Config(format!("unknown dialect {dialect}")))?;
    let mut db = normalize(&fixture::load(dataset)?, &NormalizeConfig::default())?;
    if let Some(eps) = epsilon {
        db = inject(&db, &NoisePlan::generate(&db, eps, seed))?;
    }
    let mut stmts = ddl::create_statements(&db, dialect, constraints);
    if data {
        stmts.extend(ddl::insert_statements(&db));
    }
    for s in stmts {
        println!("{s};");
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Replay { reports, engine } => replay_all(reports, engine),
        Command::GenSchema { dataset, dialect, epsilon, seed, constraints, data } => {
            gen_schema(&dataset, &dialect, epsilon, seed, constraints, data)
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
