//! Lattice predation: one replica of the small environment, printing the
//! population curve every ten steps.
//!
//! ```bash
//! cargo run --release -p abmx --example predation -- 7
//! ```

use std::time::Instant;

use abmx::models::predation::{init_predation, metrics_predation, step_predation, PredationConfig};
use abmx::rng::RngState;

fn main() -> abmx::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let cfg = PredationConfig::small();
    let st = init_predation(&cfg, RngState::new(seed))?;
    let (mut world, mut sheep, mut wolves) = (st.world, st.sheep, st.wolves);

    let start = Instant::now();
    println!("{:>5} {:>8} {:>8} {:>8} {:>8}", "step", "sheep", "wolves", "grass", "dropped");
    for t in 0..100 {
        let (w, s, f, events) = step_predation(world, sheep, wolves, &cfg, st.seed, t)?;
        (world, sheep, wolves) = (w, s, f);
        if (t + 1) % 10 == 0 {
            let m = metrics_predation(&world, &sheep, &wolves);
            println!(
                "{:>5} {:>8} {:>8} {:>8} {:>8}",
                t + 1,
                m.n_sheep,
                m.n_wolves,
                m.n_grass,
                events.births_dropped()
            );
        }
    }
    println!("100 steps in {:.1} ms", start.elapsed().as_secs_f64() * 1e3);
    Ok(())
}
