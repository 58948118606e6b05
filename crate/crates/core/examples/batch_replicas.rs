//! Runs ten traffic replicas as one batch and confirms each matches the
//! same replica run on its own.
//!
//! ```bash
//! cargo run --release -p abmx --example batch_replicas -- 4
//! ```

use abmx::batch::{replica_seeds, run_batch, run_replica, ReplicaConfig, Threads};
use abmx::models::traffic::{TrafficConfig, TrafficModel};

fn main() -> abmx::Result<()> {
    let threads = match std::env::args().nth(1) {
        Some(n) => Threads::Fixed(n.parse().unwrap_or(1)),
        None => Threads::Auto,
    };
    let model = TrafficModel::new(TrafficConfig::default());
    let configs: Vec<_> = replica_seeds(1, 10).into_iter().map(ReplicaConfig::new).collect();

    let batch = run_batch(&model, &configs, 500, threads)?;
    println!("{} replicas x {} steps in {:.1} ms ({threads:?})", batch.replicas, batch.steps, batch.wall.as_secs_f64() * 1e3);

    for (k, cfg) in configs.iter().enumerate() {
        let solo = run_replica(&model, cfg, k, 500)?;
        let same = batch.replica_rows(k) == solo.as_slice();
        let cars = batch.series(k, "n_cars").unwrap();
        let mean = cars.iter().sum::<f64>() / cars.len() as f64;
        println!("replica {k}: mean cars {mean:6.1}, final {:>3}, matches solo run: {same}", cars.last().unwrap());
    }
    Ok(())
}
