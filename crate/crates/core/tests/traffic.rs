mod common;

use std::collections::HashMap;

use abmx::models::traffic::{
    propose_moves, resolve_conflicts, spawn_cars, Move, Proposal, Road, SignalSchedule, EMPTY, LANES,
    TAG_PROPOSE, TAG_SPAWN,
};
use abmx::rng::RngState;
use common::road::run_checked;
use proptest::prelude::*;

/// Sequential resolver: walk columns from the exit backwards. A target cell
/// is free once its occupant is known to leave; the first proposer in the
/// order same lane, lane - 1, lane + 1 takes it.
fn oracle_accept(road: &Road, proposals: &[Proposal]) -> Vec<bool> {
    let len = road.length as i64;
    let mut accepted = vec![false; road.cars.capacity()];
    let by_cell: HashMap<(i64, i64), &Proposal> = proposals.iter().map(|p| ((p.lane, p.cell), p)).collect();
    for p in proposals {
        if p.action == Move::Exit {
            accepted[p.slot] = true;
        }
    }
    for col in (0..len - 1).rev() {
        for to_lane in 0..LANES as i64 {
            let occupant = road.occupancy[road.index(to_lane, col + 1)];
            let free = occupant == EMPTY || accepted[occupant as usize];
            if !free {
                continue;
            }
            for from in [to_lane, to_lane - 1, to_lane + 1] {
                if let Some(p) = by_cell.get(&(from, col)) {
                    if p.action == (Move::Forward { lane: to_lane }) {
                        accepted[p.slot] = true;
                        break;
                    }
                }
            }
        }
    }
    accepted
}

fn random_road(length: usize, density: f64, seed: u64) -> Road {
    let mut s = RngState::new(seed).stream();
    let mut road = Road::new(length).unwrap();
    for lane in 0..LANES as i64 {
        for cell in 0..length as i64 {
            if s.bernoulli(density) {
                road = road.place_car(lane, cell).unwrap();
            }
        }
    }
    road
}

fn forward(slot: usize, lane: i64, cell: i64, to: i64) -> Proposal {
    Proposal {
        slot,
        lane,
        cell,
        action: Move::Forward { lane: to },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn resolution_matches_sequential_oracle(length in 2usize..14, density in 0.0f64..1.0, seed in any::<u64>(), green in any::<bool>(), t in 0u64..100) {
        let mut road = random_road(length, density, seed);
        road.signal_green = green;
        let proposals = propose_moves(&road, RngState::new(seed ^ 1), t);
        let accepted = resolve_conflicts(&road, &proposals).unwrap();
        prop_assert_eq!(&accepted, &oracle_accept(&road, &proposals));
        prop_assert_eq!(&resolve_conflicts(&road, &proposals).unwrap(), &accepted);

        // no two accepted cars share a target, and no accepted car enters a cell that stays occupied
        let mut targets = HashMap::new();
        for p in &proposals {
            if let (true, Move::Forward { lane }) = (accepted[p.slot], p.action) {
                prop_assert!(targets.insert((lane, p.cell + 1), p.slot).is_none());
                let occ = road.occupancy[road.index(lane, p.cell + 1)];
                prop_assert!(occ == EMPTY || accepted[occ as usize]);
            }
        }
    }

    #[test]
    fn proposals_replay_the_split_schedule(length in 2usize..10, density in 0.0f64..1.0, seed in any::<u64>(), t in 0u64..50) {
        let road = random_road(length, density, seed);
        let rng = RngState::new(seed.rotate_left(7));
        let proposals = propose_moves(&road, rng, t);
        prop_assert_eq!(proposals.len(), road.cars.num_active());
        for p in &proposals {
            let (lane, cell) = (road.lanes()[p.slot], road.cells()[p.slot]);
            let expect = if cell == length as i64 - 1 {
                if road.signal_green { Move::Exit } else { Move::Stay }
            } else {
                let options: Vec<i64> = [lane, lane - 1, lane + 1].into_iter().filter(|l| (0..3).contains(l)).collect();
                let k = rng.fork(&[TAG_PROPOSE, t, p.slot as u64]).stream().below(options.len() as u64);
                Move::Forward { lane: options[k as usize] }
            };
            prop_assert_eq!(p.action, expect);
        }
    }
}

#[test]
fn same_lane_beats_left_lane() {
    let road = Road::new(3).unwrap().place_car(1, 0).unwrap().place_car(0, 0).unwrap();
    let s1 = road.occupancy[road.index(1, 0)] as usize;
    let s0 = road.occupancy[road.index(0, 0)] as usize;
    let proposals = [forward(s1, 1, 0, 1), forward(s0, 0, 0, 1)];
    let accepted = resolve_conflicts(&road, &proposals).unwrap();
    assert!(accepted[s1]);
    assert!(!accepted[s0]);
    assert_eq!(accepted, oracle_accept(&road, &proposals));
}

#[test]
fn lane_zero_never_moves_left() {
    let road = Road::new(4).unwrap().place_car(0, 0).unwrap();
    for t in 0..200 {
        let p = propose_moves(&road, RngState::new(3), t);
        assert!(matches!(p[0].action, Move::Forward { lane: 0 | 1 }));
    }
}

#[test]
fn full_lane_behind_red_exit_is_jammed() {
    let mut road = Road::new(5).unwrap();
    for c in 0..5 {
        road = road.place_car(2, c).unwrap();
    }
    road.signal_green = false;
    let proposals: Vec<Proposal> = road
        .cars
        .active_slots()
        .map(|i| {
            let cell = road.cells()[i];
            if cell == 4 {
                Proposal { slot: i, lane: 2, cell, action: Move::Stay }
            } else {
                forward(i, 2, cell, 2)
            }
        })
        .collect();
    let accepted = resolve_conflicts(&road, &proposals).unwrap();
    assert!(accepted.iter().all(|&a| !a));
}

#[test]
fn off_road_proposal_is_a_contract_error() {
    let road = Road::new(3).unwrap().place_car(2, 0).unwrap();
    let bad = [forward(0, 2, 0, 3)];
    assert!(resolve_conflicts(&road, &bad).is_err());
}

#[test]
fn spawn_fills_three_entries_when_all_are_picked() {
    let seed = RngState::new(11);
    let t = (0..1000u64)
        .find(|&t| seed.fork(&[TAG_SPAWN, t]).stream().below(4) == 3)
        .expect("some step draws k = 3");
    let (road, added) = spawn_cars(Road::new(6).unwrap(), seed, t).unwrap();
    assert_eq!(added, 3);
    assert_eq!(road.cars.num_active(), 3);
    for lane in 0..3 {
        assert_ne!(road.occupancy[road.index(lane, 0)], EMPTY);
    }
    let (again, added) = spawn_cars(road.clone(), seed, t).unwrap();
    assert_eq!(added, 0);
    assert_eq!(again.cars.num_active(), 3);
}

#[test]
fn small_road_never_exceeds_21_cars() {
    for s in 0..5 {
        let seed = RngState::new(s);
        let schedule = SignalSchedule::seeded(10, 0.5, seed).unwrap();
        let counts = run_checked(7, schedule, seed, 100).unwrap();
        assert!(counts.iter().all(|&n| n <= 21));
    }
}

#[test]
fn all_red_road_only_fills_up() {
    let seed = RngState::new(8);
    let schedule = SignalSchedule::seeded(10, 0.0, seed).unwrap();
    let counts = run_checked(10, schedule, seed, 300).unwrap();
    assert!(counts.windows(2).all(|w| w[1] >= w[0]));
    assert_eq!(*counts.last().unwrap(), 30);
}
