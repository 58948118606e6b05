#![allow(dead_code)]

pub mod book;
pub mod kernel;
pub mod road;

use std::collections::HashSet;

use abmx::agents::AgentSet;
use abmx::models::predation::{step_predation, PredationConfig, PredationEvents, PredationState, SpeciesEvents, World};
use num_bigint::BigInt;
use num_rational::BigRational;

pub fn q(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite energy")
}

pub fn total_energy(set: &AgentSet) -> BigRational {
    let e = set.state().reals("energy").unwrap();
    set.active_slots().fold(BigRational::from_integer(BigInt::from(0)), |acc, i| acc + q(e[i]))
}

/// Energy a species should hold after a step, recomputed from the event
/// ledger in exact rational arithmetic.
pub fn expected_energy(before: &BigRational, ev: &SpeciesEvents, gain: f64, metabolism: f64) -> BigRational {
    let mut e = before.clone() + q(gain) * BigRational::from_integer(ev.food_eaten.into());
    e -= q(metabolism) * BigRational::from_integer(ev.metabolized.into());
    for &r in &ev.removed_energy {
        e -= q(r);
    }
    for &(parent_before, parent_after, child) in &ev.transfers {
        e += q(parent_after) - q(parent_before) + q(child);
    }
    e
}

pub fn live_xy(set: &AgentSet, slot: usize) -> (i64, i64) {
    (set.state().ints("x").unwrap()[slot], set.state().ints("y").unwrap()[slot])
}

fn check_species(set: &AgentSet, capacity: usize, ev: &SpeciesEvents) -> Result<(), String> {
    set.validate().map_err(|e| e.to_string())?;
    if set.capacity() != capacity || set.num_active() > capacity {
        return Err("capacity violated".into());
    }
    let ids: HashSet<i64> = set.active_slots().map(|i| set.ids()[i]).collect();
    if ids.len() != set.num_active() {
        return Err("duplicate ids".into());
    }
    let energy = set.state().reals("energy").unwrap();
    for (k, &(parent, child)) in ev.lineage.iter().enumerate() {
        if !set.active()[child] || live_xy(set, child) != live_xy(set, parent) {
            return Err(format!("offspring {child} not on parent {parent}'s cell"));
        }
        if set.ages()[child] != 0 || energy[child] != ev.transfers[k].2 {
            return Err(format!("offspring {child} has wrong age or energy"));
        }
    }
    Ok(())
}

pub fn max_abs(set: &AgentSet) -> f64 {
    let e = set.state().reals("energy").unwrap();
    set.active_slots().map(|i| e[i].abs()).fold(0.0, f64::max)
}

/// Upper bound on the drift f64 rounding can introduce: one ulp of the
/// largest magnitude involved, once per energy-changing operation.
pub fn rounding_bound(magnitude: f64, ev: &SpeciesEvents) -> BigRational {
    let ops = ev.food_eaten + ev.metabolized + ev.transfers.len();
    q(magnitude * f64::EPSILON) * BigRational::from_integer(BigInt::from(ops))
}

/// Advances one step and checks capacity, id uniqueness, offspring placement
/// and energy bookkeeping (exact up to a rounding bound) for both species.
pub fn checked_step(state: PredationState, cfg: &PredationConfig, t: u64) -> Result<PredationState, String> {
    let e_sheep = total_energy(&state.sheep);
    let e_wolves = total_energy(&state.wolves);
    let state_sheep_max = max_abs(&state.sheep);
    let state_wolf_max = max_abs(&state.wolves);
    let seed = state.seed;
    let (world, sheep, wolves, events): (World, AgentSet, AgentSet, PredationEvents) =
        step_predation(state.world, state.sheep, state.wolves, cfg, seed, t).map_err(|e| e.to_string())?;

    check_species(&sheep, cfg.sheep_capacity, &events.sheep)?;
    check_species(&wolves, cfg.wolf_capacity, &events.wolves)?;
    if events.wolves.food_eaten != events.sheep_eaten || events.sheep_eaten > events.sheep.removed_energy.len() {
        return Err("predation ledger inconsistent".into());
    }
    if events.sheep.removed_energy.len() != events.sheep_eaten + events.sheep.starved {
        return Err("sheep removals do not add up".into());
    }
    let books = [
        ("sheep", &state_sheep_max, &e_sheep, &sheep, &events.sheep, cfg.energy_gain_sheep),
        ("wolf", &state_wolf_max, &e_wolves, &wolves, &events.wolves, cfg.energy_gain_wolf),
    ];
    for (name, max_before, before, after, ev, gain) in books {
        let expect = expected_energy(before, ev, gain, cfg.metabolism);
        let slack = rounding_bound(max_before.max(max_abs(after)) + gain.abs() + cfg.metabolism.abs(), ev);
        let diff = total_energy(after) - expect;
        if diff > slack || -diff.clone() > slack {
            return Err(format!("{name} energy ledger broken at step {t}: off by {diff}"));
        }
    }
    for (c, &g) in world.grass_ready.iter().enumerate() {
        if g != (world.regrow_counter[c] == 0) {
            return Err(format!("grass cell {c} out of sync"));
        }
    }
    Ok(PredationState { world, sheep, wolves, events, seed })
}
