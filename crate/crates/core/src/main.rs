use std::path::PathBuf;
use std::process::ExitCode;

use abmx::cli::{self, BenchConfig, ModelKind, RunConfig, RunOutcome};
use abmx::toy::{format_list, ToyResult};
use abmx::{Error, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "abmx", version, about = "Fixed-capacity agent-based simulations")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a model (or the toy task) and write CSV plus manifest.
    Run(RunArgs),
    /// Time a ladder of replica or book counts.
    Bench(BenchArgs),
    /// Pair even entries of `a` with odd entries of `b` using both kernels.
    Toy(ToyArgs),
}

#[derive(Args)]
struct Common {
    /// Sectioned key=value file, or a manifest from a previous run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long)]
    master_seed: Option<u64>,
    /// Worker threads, or `auto`. Falls back to ABMX_THREADS.
    #[arg(long)]
    threads: Option<String>,
    /// Order books (finance).
    #[arg(long)]
    books: Option<usize>,
    /// Traders (finance).
    #[arg(long)]
    traders: Option<usize>,
    /// Road length in cells (traffic).
    #[arg(long)]
    length: Option<usize>,
    /// Environment size preset (predation): small or large.
    #[arg(long)]
    preset: Option<String>,
    /// Extra model setting, repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
    /// Toy input list `a`.
    #[arg(long, allow_hyphen_values = true)]
    a: Option<String>,
    /// Toy input list `b`.
    #[arg(long, allow_hyphen_values = true)]
    b: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Metrics CSV path; the manifest is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated rungs.
    #[arg(long, value_delimiter = ',')]
    ladder: Option<Vec<usize>>,
    /// Timed runs per rung.
    #[arg(long)]
    runs: Option<usize>,
    /// Write the JSON report here as well as printing the table.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct ToyArgs {
    #[arg(long, allow_hyphen_values = true, default_value = "2,3,4,6")]
    a: String,
    #[arg(long, allow_hyphen_values = true, default_value = "1,4,3")]
    b: String,
}

fn parse_threads(v: &str) -> Result<Option<usize>> {
    match v.trim() {
        "auto" | "" => Ok(None),
        n => n
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("invalid thread count `{n}`"))),
    }
}

fn resolve(c: &Common, default_steps: impl Fn(ModelKind) -> u64) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(m) = &c.model {
        cfg.model = m.parse()?;
    }
    match c.steps {
        Some(s) => cfg.steps = s,
        None if c.config.is_none() => cfg.steps = default_steps(cfg.model),
        None => {}
    }
    if let Some(r) = c.replicas {
        cfg.replicas = r;
    }
    if let Some(s) = c.master_seed {
        cfg.master_seed = s;
    }
    if let Some(t) = &c.threads {
        cfg.threads = parse_threads(t)?;
    } else if cfg.threads.is_none() {
        if let Ok(t) = std::env::var("ABMX_THREADS") {
            cfg.threads = parse_threads(&t)?;
        }
    }
    if let Some(n) = c.books {
        cfg.set("finance", "n_books", n.to_string());
    }
    if let Some(n) = c.traders {
        cfg.set("finance", "n_traders", n.to_string());
    }
    if let Some(n) = c.length {
        cfg.set("traffic", "length", n.to_string());
    }
    if let Some(p) = &c.preset {
        cfg.set("predation", "preset", p.clone());
    }
    if let Some(a) = &c.a {
        cfg.set("toy", "a", a.clone());
    }
    if let Some(b) = &c.b {
        cfg.set("toy", "b", b.clone());
    }
    for s in &c.set {
        let (section, key, value) = cli::config::parse_assignment(s)?;
        if section == "run" {
            cfg.apply_run_key(&key, &value)?;
        } else {
            cfg.set(&section, &key, value);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_toy(r: &ToyResult) {
    println!("rank_match         a'={}", format_list(&r.rank_match));
    println!("sort_count_iterate a'={}", format_list(&r.sort_count_iterate));
    println!("oracle             a'={}", format_list(&r.oracle));
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut cfg = resolve(&args.common, |_| 100)?;
    if let Some(out) = args.out {
        cfg.out_path = Some(out);
    }
    match cli::run(&cfg)? {
        RunOutcome::Toy(r) => print_toy(&r),
        RunOutcome::Batch {
            trajectory,
            csv,
            manifest,
            rows,
        } => {
            println!(
                "{}: {} replicas x {} steps in {:.1} ms",
                trajectory.model,
                trajectory.replicas,
                trajectory.steps,
                trajectory.wall.as_secs_f64() * 1e3
            );
            println!("wrote {rows} rows to {}", csv.display());
            println!("manifest {}", manifest.display());
        }
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let base = resolve(&args.common, |m| if m == ModelKind::Traffic { 1000 } else { 100 })?;
    let mut cfg = BenchConfig::new(base);
    if let Some(l) = args.ladder {
        cfg.ladder = l;
    }
    if let Some(r) = args.runs {
        cfg.runs = r;
    }
    let report = cli::bench::bench_with(&cfg, |row| {
        eprintln!("{} {}: {:.3} ms", cfg.rung_kind(), row.rung, row.wall_ms_median);
    })?;
    print!("{}", report.to_table());
    if let Some(path) = args.json {
        cli::output::write_atomically(&path, |f| {
            use std::io::Write;
            f.write_all(report.to_json().as_bytes())?;
            f.write_all(b"\n")?;
            Ok(())
        })?;
    }
    Ok(())
}

fn cmd_toy(args: ToyArgs) -> Result<()> {
    let a = abmx::toy::parse_int_list(&args.a)?;
    let b = abmx::toy::parse_int_list(&args.b)?;
    print_toy(&abmx::toy::run_toy(&a, &b)?);
    Ok(())
}

fn main() -> ExitCode {
    let result = match Cli::parse().cmd {
        Cmd::Run(a) => cmd_run(a),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::Toy(a) => cmd_toy(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
