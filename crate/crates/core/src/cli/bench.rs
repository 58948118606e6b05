//! Timing ladders with warmup subtraction.
//!
//! Each rung is timed `runs` times at `steps + warmup` steps and at
//! `warmup` steps; the reported time is the difference of the two medians,
//! which removes setup and first-step costs from the measurement.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::{ModelKind, RunConfig};
use super::simulate;
use crate::error::{Error, Result};

pub const DEFAULT_LADDER: [usize; 6] = [10, 20, 50, 100, 200, 500];
pub const DEFAULT_RUNS: usize = 10;
pub const MIN_RUNS: usize = 5;
pub const WARMUP_STEPS: u64 = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    /// Model, measured step count, seed, threads and model sections.
    pub base: RunConfig,
    pub ladder: Vec<usize>,
    pub runs: usize,
    pub warmup_steps: u64,
}

impl BenchConfig {
    pub fn new(base: RunConfig) -> Self {
        Self {
            base,
            ladder: DEFAULT_LADDER.to_vec(),
            runs: DEFAULT_RUNS,
            warmup_steps: WARMUP_STEPS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.base.model == ModelKind::Toy {
            return Err(Error::Config("the toy task has no benchmark".into()));
        }
        if self.ladder.is_empty() || self.ladder.contains(&0) {
            return Err(Error::Config("ladder rungs must be positive and non-empty".into()));
        }
        if self.runs < MIN_RUNS {
            return Err(Error::Config(format!("at least {MIN_RUNS} runs per rung are required")));
        }
        if self.warmup_steps < 1 {
            return Err(Error::Config("warmup_steps must be at least 1".into()));
        }
        Ok(())
    }

    /// What a rung varies: order books for finance, replicas otherwise.
    pub fn rung_kind(&self) -> &'static str {
        match self.base.model {
            ModelKind::Finance => "books",
            _ => "replicas",
        }
    }

    fn rung_config(&self, rung: usize, steps: u64) -> RunConfig {
        let mut cfg = self.base.clone();
        cfg.steps = steps;
        cfg.out_path = None;
        match self.base.model {
            ModelKind::Finance => cfg.set("finance", "n_books", rung.to_string()),
            _ => cfg.replicas = rung,
        }
        cfg
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub model: String,
    pub rung: usize,
    pub replicas: usize,
    pub books: Option<usize>,
    pub steps: u64,
    pub runs: usize,
    pub wall_ms_median: f64,
    pub wall_ms_iqr: f64,
    pub long_ms_median: f64,
    pub short_ms_median: f64,
    pub warmup_steps_excluded: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub model: String,
    pub rung_kind: String,
    pub threads: Option<usize>,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    /// Rung transitions whose median did not decrease.
    pub fn monotone_transitions(&self) -> usize {
        self.rows
            .windows(2)
            .filter(|w| w[1].wall_ms_median >= w[0].wall_ms_median)
            .count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} ({} per rung, {} steps, warmup {} excluded)",
            self.model,
            self.rung_kind,
            self.rows.first().map_or(0, |r| r.steps),
            self.rows.first().map_or(0, |r| r.warmup_steps_excluded)
        );
        let _ = writeln!(s, "{:>8} {:>14} {:>12} {:>6}", self.rung_kind, "median ms", "iqr ms", "runs");
        for r in &self.rows {
            let _ = writeln!(s, "{:>8} {:>14.3} {:>12.3} {:>6}", r.rung, r.wall_ms_median, r.wall_ms_iqr, r.runs);
        }
        let _ = writeln!(
            s,
            "non-decreasing transitions: {}/{}",
            self.monotone_transitions(),
            self.rows.len().saturating_sub(1)
        );
        s
    }
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Linear-interpolation quantile.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

fn time_ms(cfg: &RunConfig) -> Result<f64> {
    Ok(simulate(cfg)?.wall.as_secs_f64() * 1e3)
}

pub fn bench_rung(cfg: &BenchConfig, rung: usize) -> Result<BenchRow> {
    let long_cfg = cfg.rung_config(rung, cfg.base.steps + cfg.warmup_steps);
    let short_cfg = cfg.rung_config(rung, cfg.warmup_steps);
    let mut long = Vec::with_capacity(cfg.runs);
    let mut short = Vec::with_capacity(cfg.runs);
    for _ in 0..cfg.runs {
        long.push(time_ms(&long_cfg)?);
        short.push(time_ms(&short_cfg)?);
    }
    let diffs: Vec<f64> = long.iter().zip(&short).map(|(l, s)| l - s).collect();
    let (lm, sm) = (median(&long), median(&short));
    Ok(BenchRow {
        model: cfg.base.model.to_string(),
        rung,
        replicas: long_cfg.replicas,
        books: (cfg.base.model == ModelKind::Finance).then_some(rung),
        steps: cfg.base.steps,
        runs: cfg.runs,
        wall_ms_median: lm - sm,
        wall_ms_iqr: quantile(&diffs, 0.75) - quantile(&diffs, 0.25),
        long_ms_median: lm,
        short_ms_median: sm,
        warmup_steps_excluded: cfg.warmup_steps,
    })
}

/// Times every rung of the ladder, calling `progress` after each.
pub fn bench_with(cfg: &BenchConfig, mut progress: impl FnMut(&BenchRow)) -> Result<BenchReport> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(cfg.ladder.len());
    for &rung in &cfg.ladder {
        let row = bench_rung(cfg, rung)?;
        progress(&row);
        rows.push(row);
    }
    Ok(BenchReport {
        model: cfg.base.model.to_string(),
        rung_kind: cfg.rung_kind().to_string(),
        threads: cfg.base.threads,
        rows,
    })
}

pub fn bench(cfg: &BenchConfig) -> Result<BenchReport> {
    bench_with(cfg, |_| {})
}
