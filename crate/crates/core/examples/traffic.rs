//! A three-lane road drawn as text. Cars enter on the left and leave on the
//! right while the signal is green, drifting at most one lane per step.
//!
//! ```bash
//! cargo run -p abmx --example traffic -- 5
//! ```

use abmx::models::traffic::{step_road, Road, SignalSchedule, EMPTY, LANES};
use abmx::rng::RngState;

fn draw(road: &Road) -> Vec<String> {
    (0..LANES as i64)
        .rev()
        .map(|lane| {
            (0..road.length as i64)
                .map(|c| if road.occupancy[road.index(lane, c)] == EMPTY { '.' } else { '>' })
                .collect()
        })
        .collect()
}

fn main() -> abmx::Result<()> {
    let seed = RngState::new(std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5));
    let schedule = SignalSchedule::seeded(10, 0.5, seed)?;
    let mut road = Road::new(40)?;

    for t in 0..60 {
        let (next, counts) = step_road(road, &schedule, seed, t)?;
        road = next;
        if t % 6 == 5 {
            let signal = if road.signal_green { "green" } else { "red" };
            println!(
                "step {:>3}  cars {:>3}  +{} -{}  signal {signal}",
                t + 1,
                road.cars.num_active(),
                counts.spawned,
                counts.exited
            );
            for row in draw(&road) {
                println!("  |{row}|");
            }
        }
    }
    println!("spawned {} exited {} on the road {}", road.spawned_total, road.exited_total, road.cars.num_active());
    Ok(())
}
