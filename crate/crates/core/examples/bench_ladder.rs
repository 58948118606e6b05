//! Times a short replica ladder for one model and prints the report table.
//!
//! ```bash
//! cargo run --release -p abmx --example bench_ladder -- predation
//! ```

use abmx::cli::{bench, BenchConfig, ModelKind, RunConfig};

fn main() -> abmx::Result<()> {
    let model: ModelKind = std::env::args().nth(1).as_deref().unwrap_or("traffic").parse()?;
    let mut base = RunConfig { model, steps: 50, ..RunConfig::default() };
    match model {
        ModelKind::Traffic => base.set("traffic", "length", "50"),
        ModelKind::Predation => {
            base.set("predation", "width", "40");
            base.set("predation", "height", "40");
            base.set("predation", "sheep_capacity", "3000");
            base.set("predation", "wolf_capacity", "3000");
        }
        _ => {}
    }
    let mut cfg = BenchConfig::new(base);
    cfg.ladder = vec![1, 2, 4, 8];
    cfg.runs = 5;
    print!("{}", bench(&cfg)?.to_table());
    Ok(())
}
