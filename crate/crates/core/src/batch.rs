//! Replica batching.
//!
//! Each replica is one task; replicas share nothing mutable, so a batched
//! run reproduces every solo run bit for bit regardless of thread count.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{FieldBundle, Scalar};
use crate::rng::RngState;

/// A model that can be stepped replica by replica.
pub trait Model: Sync {
    type State: Send;

    fn name(&self) -> &str;

    /// Metric column names, excluding the leading `step` and `replica`.
    fn metric_columns(&self) -> Vec<String>;

    fn init(&self, replica: &ReplicaConfig) -> Result<Self::State>;

    /// Advances one step; `t` counts from 0.
    fn step(&self, state: Self::State, t: u64) -> Result<Self::State>;

    /// One or more metric records sampled after a step. Models with
    /// sub-entities (for example one record per order book) return several.
    fn metrics(&self, state: &Self::State) -> Vec<Vec<f64>>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicaConfig {
    pub seed: RngState,
    /// Scalar per-replica overrides of the model configuration, one row.
    pub model_params: FieldBundle,
}

impl ReplicaConfig {
    pub fn new(seed: RngState) -> Self {
        Self {
            seed,
            model_params: FieldBundle::empty(1),
        }
    }

    pub fn with_params(seed: RngState, model_params: FieldBundle) -> Self {
        Self { seed, model_params }
    }

    pub fn param(&self, name: &str) -> Option<Scalar> {
        if self.model_params.is_empty() {
            return None;
        }
        self.model_params.row_ref(0).get(name)
    }
}

/// Replica seeds derived from a master seed: replica `k` uses
/// `RngState::new(master).split(k)`.
pub fn replica_seeds(master_seed: u64, replicas: usize) -> Vec<RngState> {
    let root = RngState::new(master_seed);
    (0..replicas as u64).map(|k| root.split(k)).collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Threads {
    #[default]
    Auto,
    Fixed(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricRow {
    pub replica: usize,
    /// Number of steps completed when the row was sampled (1-based).
    pub step: u64,
    pub records: Vec<Vec<f64>>,
}

impl MetricRow {
    fn bits_eq(&self, other: &MetricRow) -> bool {
        self.replica == other.replica
            && self.step == other.step
            && self.records.len() == other.records.len()
            && self.records.iter().zip(&other.records).all(|(a, b)| {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            })
    }
}

#[derive(Clone, Debug)]
pub struct BatchTrajectory {
    pub model: String,
    pub columns: Vec<String>,
    pub replicas: usize,
    pub steps: u64,
    /// Ordered by `(replica, step)`.
    pub rows: Vec<MetricRow>,
    pub wall: Duration,
}

impl BatchTrajectory {
    pub fn replica_rows(&self, replica: usize) -> &[MetricRow] {
        let t = self.steps as usize;
        &self.rows[replica * t..(replica + 1) * t]
    }

    /// Column `name` of the first record of every row of `replica`.
    pub fn series(&self, replica: usize, name: &str) -> Option<Vec<f64>> {
        let c = self.columns.iter().position(|n| n == name)?;
        Some(self.replica_rows(replica).iter().map(|r| r.records[0][c]).collect())
    }

    /// Equality of every metric value by bit pattern; wall time is ignored.
    pub fn bits_eq(&self, other: &BatchTrajectory) -> bool {
        self.columns == other.columns
            && self.rows.len() == other.rows.len()
            && self.rows.iter().zip(&other.rows).all(|(a, b)| a.bits_eq(b))
    }
}

/// Runs one replica for `steps` steps and collects its metric rows.
pub fn run_replica<M: Model>(
    model: &M,
    config: &ReplicaConfig,
    replica: usize,
    steps: u64,
) -> Result<Vec<MetricRow>> {
    let mut state = model.init(config)?;
    let mut rows = Vec::with_capacity(steps as usize);
    for t in 0..steps {
        state = model.step(state, t)?;
        rows.push(MetricRow {
            replica,
            step: t + 1,
            records: model.metrics(&state),
        });
    }
    Ok(rows)
}

/// Runs every replica concurrently and assembles rows by `(replica, step)`.
pub fn run_batch<M: Model>(
    model: &M,
    configs: &[ReplicaConfig],
    steps: u64,
    threads: Threads,
) -> Result<BatchTrajectory> {
    let first = configs
        .first()
        .ok_or_else(|| Error::Batch("at least one replica is required".into()))?;
    if steps == 0 {
        return Err(Error::Batch("steps must be positive".into()));
    }
    if let Some(k) = configs
        .iter()
        .position(|c| c.model_params.schema() != first.model_params.schema())
    {
        return Err(Error::Batch(format!(
            "replica {k} overrides a different set of parameters than replica 0"
        )));
    }

    let start = Instant::now();
    let work = || {
        configs
            .par_iter()
            .enumerate()
            .map(|(k, cfg)| run_replica(model, cfg, k, steps))
            .collect::<Result<Vec<_>>>()
    };
    let per_replica = match threads {
        Threads::Auto => work(),
        Threads::Fixed(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Batch(format!("thread pool: {e}")))?
            .install(work),
    }?;
    let wall = start.elapsed();

    Ok(BatchTrajectory {
        model: model.name().to_string(),
        columns: model.metric_columns(),
        replicas: configs.len(),
        steps,
        rows: per_replica.into_iter().flatten().collect(),
        wall,
    })
}
