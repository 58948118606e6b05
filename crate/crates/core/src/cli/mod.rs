//! Run orchestration behind the `abmx` binary.

pub mod bench;
pub mod config;
pub mod output;

use std::path::PathBuf;

use crate::batch::{replica_seeds, run_batch, BatchTrajectory, Model, ReplicaConfig, Threads};
use crate::error::{Error, Result};
use crate::models::finance::{FinanceConfig, FinanceModel};
use crate::models::predation::{PredationConfig, PredationModel};
use crate::models::traffic::{TrafficConfig, TrafficModel};
use crate::toy::{parse_int_list, run_toy, ToyResult};

pub use bench::{bench, BenchConfig, BenchReport, BenchRow};
pub use config::{ModelKind, RunConfig};
pub use output::{format_g17, manifest_path, write_csv, Manifest};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Process exit code for an error: 2 for configuration problems, 3 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Schema(_) => 2,
        _ => 3,
    }
}

fn threads(cfg: &RunConfig) -> Threads {
    cfg.threads.map_or(Threads::Auto, Threads::Fixed)
}

fn batch_of<M: Model>(model: &M, cfg: &RunConfig) -> Result<BatchTrajectory> {
    let configs: Vec<_> = replica_seeds(cfg.master_seed, cfg.replicas)
        .into_iter()
        .map(ReplicaConfig::new)
        .collect();
    run_batch(model, &configs, cfg.steps, threads(cfg))
}

pub fn predation_config(cfg: &RunConfig) -> Result<PredationConfig> {
    let mut c = PredationConfig::default();
    c.apply_section(&cfg.section("predation"))?;
    Ok(c)
}

pub fn traffic_config(cfg: &RunConfig) -> Result<TrafficConfig> {
    let mut c = TrafficConfig::default();
    c.apply_section(&cfg.section("traffic"))?;
    Ok(c)
}

pub fn finance_config(cfg: &RunConfig) -> Result<FinanceConfig> {
    let mut c = FinanceConfig::default();
    c.apply_section(&cfg.section("finance"))?;
    Ok(c)
}

/// Runs the configured batch in memory without writing artifacts.
pub fn simulate(cfg: &RunConfig) -> Result<BatchTrajectory> {
    cfg.validate()?;
    match cfg.model {
        ModelKind::Predation => batch_of(&PredationModel::new(predation_config(cfg)?), cfg),
        ModelKind::Traffic => batch_of(&TrafficModel::new(traffic_config(cfg)?), cfg),
        ModelKind::Finance => batch_of(&FinanceModel::new(finance_config(cfg)?), cfg),
        ModelKind::Toy => Err(Error::Config("the toy task is not a batch model".into())),
    }
}

/// Runs the toy task with the `a` and `b` lists from the `[toy]` section.
pub fn toy(cfg: &RunConfig) -> Result<ToyResult> {
    let section = cfg.section("toy");
    for k in section.keys() {
        if k != "a" && k != "b" {
            return Err(Error::Config(format!("unknown [toy] key `{k}`")));
        }
    }
    let a = parse_int_list(section.get("a").map_or("2,3,4,6", String::as_str))?;
    let b = parse_int_list(section.get("b").map_or("1,4,3", String::as_str))?;
    run_toy(&a, &b)
}

#[derive(Clone, Debug)]
pub enum RunOutcome {
    Toy(ToyResult),
    Batch {
        trajectory: BatchTrajectory,
        csv: PathBuf,
        manifest: PathBuf,
        rows: usize,
    },
}

/// Default CSV path when none is configured.
pub fn default_out_path(model: ModelKind) -> PathBuf {
    PathBuf::from(format!("{model}.csv"))
}

/// Runs a configuration and writes the CSV and manifest artifacts.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    if cfg.model == ModelKind::Toy {
        return toy(cfg).map(RunOutcome::Toy);
    }
    let trajectory = simulate(cfg)?;
    let csv = cfg.out_path.clone().unwrap_or_else(|| default_out_path(cfg.model));
    let manifest_file = manifest_path(&csv);

    let mut rows = 0;
    output::write_atomically(&csv, |f| {
        rows = write_csv(&trajectory, std::io::BufWriter::new(f))?;
        Ok(())
    })?;
    let manifest = Manifest {
        version: VERSION.to_string(),
        config: cfg.clone(),
        replica_seeds: replica_seeds(cfg.master_seed, cfg.replicas).iter().map(|s| s.key()).collect(),
        columns: trajectory.columns.clone(),
        csv: csv.clone(),
        rows,
    };
    let written = output::write_atomically(&manifest_file, |f| {
        serde_json::to_writer_pretty(&mut *f, &manifest).map_err(|e| Error::Io(e.to_string()))?;
        use std::io::Write;
        f.write_all(b"\n")?;
        Ok(())
    });
    if let Err(e) = written {
        let _ = std::fs::remove_file(&csv);
        return Err(e);
    }
    Ok(RunOutcome::Batch {
        trajectory,
        csv,
        manifest: manifest_file,
        rows,
    })
}
