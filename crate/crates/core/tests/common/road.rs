use std::collections::{HashMap, HashSet};

use abmx::models::traffic::{step_road, Road, SignalSchedule};
use abmx::rng::RngState;

/// Runs a road from empty and checks, every step, that no two cars share a
/// cell, the occupancy grid, the spawn/exit ledger and that no car moves backwards, skips a cell or
/// changes more than one lane. Returns the car count after each step.
pub fn run_checked(length: usize, schedule: SignalSchedule, seed: RngState, steps: u64) -> Result<Vec<usize>, String> {
    let mut road = Road::new(length).unwrap();
    let mut counts = Vec::new();
    for t in 0..steps {
        let before: HashMap<i64, (i64, i64)> = road
            .cars
            .active_slots()
            .map(|i| (road.cars.ids()[i], (road.lanes()[i], road.cells()[i])))
            .collect();
        let n0 = road.cars.num_active() as u64;
        let (next, counts_t) = step_road(road, &schedule, seed, t).map_err(|e| e.to_string())?;
        road = next;
        road.validate().map_err(|e| format!("step {t}: {e}"))?;
        if road.cars.num_active() as u64 != n0 + counts_t.spawned - counts_t.exited
            || road.spawned_total - road.exited_total != road.cars.num_active() as u64
        {
            return Err(format!("step {t}: car ledger broken"));
        }
        let mut cells = HashSet::new();
        for i in road.cars.active_slots() {
            if !cells.insert((road.lanes()[i], road.cells()[i])) {
                return Err(format!("step {t}: two cars share a cell"));
            }
            if let Some(&(lane, cell)) = before.get(&road.cars.ids()[i]) {
                let (l2, c2) = (road.lanes()[i], road.cells()[i]);
                if !(c2 == cell || c2 == cell + 1) || (l2 - lane).abs() > 1 {
                    return Err(format!("step {t}: car {} moved illegally", road.cars.ids()[i]));
                }
            }
        }
        counts.push(road.cars.num_active());
    }
    Ok(counts)
}
