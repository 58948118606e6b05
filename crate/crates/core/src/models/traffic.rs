//! Three-lane cellular-automaton road.
//!
//! Cars advance one column per step, possibly changing lane by one. Same-cell
//! conflicts are settled per target cell with a fixed priority over incoming
//! directions; a car whose target stays occupied is blocked, and blocking
//! propagates backwards until a fixed point. Cars leave through the exit
//! column while the signal is green and spawn in free entry cells.

use std::collections::BTreeMap;

use crate::agents::{create_agents, remove_agents, AgentSet, AgentSpec, FieldSpec};
use crate::batch::{Model, ReplicaConfig};
use crate::error::{Error, Result};
use crate::field::{Column, FieldBundle};
use crate::kernels::{set_agents_mask, spawn_agents, PairingKernel, UpdateBatch};
use crate::rng::RngState;

use super::{apply_override, parse_kv};

pub const LANES: usize = 3;
pub const EMPTY: i64 = -1;

pub const TAG_PHASE: u64 = 0x9A5E;
pub const TAG_PROPOSE: u64 = 0x960;
pub const TAG_SPAWN: u64 = 0x5AA4;

/// Square-wave exit signal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignalSchedule {
    pub period: u64,
    /// Share of each period that is green; 0 keeps the exit closed forever.
    pub green_fraction: f64,
    pub phase: u64,
}

impl SignalSchedule {
    /// Schedule whose phase offset is drawn from `seed`.
    pub fn seeded(period: u64, green_fraction: f64, seed: RngState) -> Result<Self> {
        if period == 0 {
            return Err(Error::Config("signal period must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&green_fraction) {
            return Err(Error::Config(format!(
                "green_fraction must lie in [0, 1], got {green_fraction}"
            )));
        }
        let phase = seed.split(TAG_PHASE).stream().below(period);
        Ok(Self {
            period,
            green_fraction,
            phase,
        })
    }

    pub fn is_green(&self, t: u64) -> bool {
        let green_steps = (self.green_fraction * self.period as f64).round() as u64;
        (t + self.phase) % self.period < green_steps
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Road {
    pub length: usize,
    /// Car slot per cell (`lane * length + cell`), or [`EMPTY`].
    pub occupancy: Vec<i64>,
    pub signal_green: bool,
    pub cars: AgentSet,
    pub spawned_total: u64,
    pub exited_total: u64,
}

impl Road {
    pub fn new(length: usize) -> Result<Self> {
        if length == 0 {
            return Err(Error::Config("road length must be positive".into()));
        }
        let spec = AgentSpec::new(1)
            .state(FieldSpec::constant("lane", 0i64))
            .state(FieldSpec::constant("cell", 0i64));
        let cars = create_agents(LANES * length, 0, &spec, RngState::new(0))?;
        Ok(Self {
            length,
            occupancy: vec![EMPTY; LANES * length],
            signal_green: false,
            cars,
            spawned_total: 0,
            exited_total: 0,
        })
    }

    pub fn index(&self, lane: i64, cell: i64) -> usize {
        lane as usize * self.length + cell as usize
    }

    pub fn lanes(&self) -> &[i64] {
        self.cars.state().ints("lane").unwrap()
    }

    pub fn cells(&self) -> &[i64] {
        self.cars.state().ints("cell").unwrap()
    }

    /// Places a car directly; used to build scenarios.
    pub fn place_car(mut self, lane: i64, cell: i64) -> Result<Self> {
        if !(0..LANES as i64).contains(&lane) || !(0..self.length as i64).contains(&cell) {
            return Err(Error::Contract(format!("({lane}, {cell}) is not on the road")));
        }
        if self.occupancy[self.index(lane, cell)] != EMPTY {
            return Err(Error::Contract(format!("({lane}, {cell}) is occupied")));
        }
        let values = FieldBundle::from_columns([("lane", Column::Int(vec![lane])), ("cell", Column::Int(vec![cell]))])?;
        let out = spawn_agents(self.cars, &UpdateBatch::all_valid(values), PairingKernel::RankMatch)?;
        if out.dropped > 0 {
            return Err(Error::Capacity("road is full".into()));
        }
        self.cars = out.set;
        self.rebuild_occupancy()?;
        Ok(self)
    }

    fn rebuild_occupancy(&mut self) -> Result<()> {
        self.occupancy.fill(EMPTY);
        for i in self.cars.active_slots() {
            let (lane, cell) = (self.lanes()[i], self.cells()[i]);
            let c = self.index(lane, cell);
            if self.occupancy[c] != EMPTY {
                return Err(Error::Contract(format!("two cars in cell ({lane}, {cell})")));
            }
            self.occupancy[c] = i as i64;
        }
        Ok(())
    }

    /// Checks the occupancy invariant against the car columns.
    pub fn validate(&self) -> Result<()> {
        self.cars.validate()?;
        let mut expected = vec![EMPTY; self.occupancy.len()];
        for i in self.cars.active_slots() {
            let (lane, cell) = (self.lanes()[i], self.cells()[i]);
            if !(0..LANES as i64).contains(&lane) || !(0..self.length as i64).contains(&cell) {
                return Err(Error::Contract(format!("car {i} off the road at ({lane}, {cell})")));
            }
            let c = self.index(lane, cell);
            if expected[c] != EMPTY {
                return Err(Error::Contract(format!("collision in cell ({lane}, {cell})")));
            }
            expected[c] = i as i64;
        }
        if expected != self.occupancy {
            return Err(Error::Contract("occupancy grid out of sync with cars".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Move {
    /// Advance one column into `lane`.
    Forward { lane: i64 },
    /// Leave through the exit pseudo-cell.
    Exit,
    Stay,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Proposal {
    pub slot: usize,
    pub lane: i64,
    pub cell: i64,
    pub action: Move,
}

/// One proposal per live car, in slot order.
///
/// Cars in the exit column propose to exit while the signal is green and to
/// stay otherwise. Other cars pick uniformly among forward, forward-left
/// (`lane - 1`) and forward-right (`lane + 1`), dropping options that leave
/// the road. Slot `i` draws from `seed.fork(&[TAG_PROPOSE, t, i])`.
pub fn propose_moves(road: &Road, seed: RngState, t: u64) -> Vec<Proposal> {
    let last = road.length as i64 - 1;
    road.cars
        .active_slots()
        .map(|i| {
            let (lane, cell) = (road.lanes()[i], road.cells()[i]);
            let action = if cell == last {
                if road.signal_green {
                    Move::Exit
                } else {
                    Move::Stay
                }
            } else {
                let options: Vec<i64> = [lane, lane - 1, lane + 1]
                    .into_iter()
                    .filter(|l| (0..LANES as i64).contains(l))
                    .collect();
                let pick = seed.fork(&[TAG_PROPOSE, t, i as u64]).stream().below(options.len() as u64);
                Move::Forward {
                    lane: options[pick as usize],
                }
            };
            Proposal {
                slot: i,
                lane,
                cell,
                action,
            }
        })
        .collect()
}

/// Priority of a car entering `to_lane` from `from_lane`: lower wins.
/// Same lane beats the left neighbor (`to_lane - 1`), which beats the right
/// neighbor (`to_lane + 1`).
pub fn entry_priority(from_lane: i64, to_lane: i64) -> u8 {
    match from_lane - to_lane {
        0 => 0,
        -1 => 1,
        _ => 2,
    }
}

/// Accepted flag per car slot (false for slots without a proposal).
///
/// A target cell admits its highest-priority proposer once the cell is
/// known to be free after the step: empty, or vacated by an occupant whose
/// own move was accepted. Exits are always accepted. Acceptance grows
/// monotonically from the exits backwards; it reaches a fixed point after
/// at most `length + 1` rounds.
pub fn resolve_conflicts(road: &Road, proposals: &[Proposal]) -> Result<Vec<bool>> {
    let last = road.length as i64 - 1;
    let mut winner: Vec<Option<(u8, usize)>> = vec![None; road.occupancy.len()];
    let mut target = vec![usize::MAX; road.cars.capacity()];
    let mut accepted = vec![false; road.cars.capacity()];

    for p in proposals {
        match p.action {
            Move::Forward { lane } => {
                if !(0..LANES as i64).contains(&lane) || (lane - p.lane).abs() > 1 || p.cell >= last {
                    return Err(Error::Contract(format!(
                        "car {} proposes an off-road move from ({}, {}) to lane {lane}",
                        p.slot, p.lane, p.cell
                    )));
                }
                let c = road.index(lane, p.cell + 1);
                target[p.slot] = c;
                let cand = (entry_priority(p.lane, lane), p.slot);
                if winner[c].is_none_or(|w| cand < w) {
                    winner[c] = Some(cand);
                }
            }
            Move::Exit => {
                if p.cell != last {
                    return Err(Error::Contract(format!("car {} cannot exit from column {}", p.slot, p.cell)));
                }
                accepted[p.slot] = true;
            }
            Move::Stay => {}
        }
    }

    for _ in 0..=road.length {
        let mut changed = false;
        for p in proposals {
            if accepted[p.slot] || !matches!(p.action, Move::Forward { .. }) {
                continue;
            }
            let c = target[p.slot];
            let won = winner[c].is_some_and(|(_, s)| s == p.slot);
            let occupant = road.occupancy[c];
            let free = occupant == EMPTY || accepted[occupant as usize];
            if won && free {
                accepted[p.slot] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(accepted)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepCounts {
    pub spawned: u64,
    pub exited: u64,
}

/// Inserts cars into a random subset of free entry cells.
///
/// Draws `k` uniform in `0..=3` and `k` distinct entry lanes from
/// `seed.fork(&[TAG_SPAWN, t])`; picked lanes whose entry cell is occupied
/// are skipped. Returns the number of cars added.
pub fn spawn_cars(mut road: Road, seed: RngState, t: u64) -> Result<(Road, u64)> {
    let mut s = seed.fork(&[TAG_SPAWN, t]).stream();
    let k = s.below(LANES as u64 + 1) as usize;
    let picks = s.choose_distinct(LANES, k);
    let valid: Vec<bool> = (0..LANES)
        .map(|lane| picks.contains(&lane) && road.occupancy[road.index(lane as i64, 0)] == EMPTY)
        .collect();
    let values = FieldBundle::from_columns([
        ("lane", Column::Int((0..LANES as i64).collect())),
        ("cell", Column::Int(vec![0; LANES])),
    ])?;
    let out = spawn_agents(road.cars, &UpdateBatch::new(values, valid)?, PairingKernel::RankMatch)?;
    road.cars = out.set;
    let added = out.pairs.len() as u64;
    road.spawned_total += added;
    road.rebuild_occupancy()?;
    Ok((road, added))
}

/// One step: signal, propose, resolve, move, exit, spawn.
pub fn step_road(road: Road, schedule: &SignalSchedule, seed: RngState, t: u64) -> Result<(Road, StepCounts)> {
    let mut road = road;
    road.signal_green = schedule.is_green(t);
    let proposals = propose_moves(&road, seed, t);
    let accepted = resolve_conflicts(&road, &proposals)?;

    let mut move_mask = vec![false; road.cars.capacity()];
    let mut exit_mask = vec![false; road.cars.capacity()];
    let mut new_lane = vec![0i64; road.cars.capacity()];
    for p in &proposals {
        if !accepted[p.slot] {
            continue;
        }
        match p.action {
            Move::Forward { lane } => {
                move_mask[p.slot] = true;
                new_lane[p.slot] = lane;
            }
            Move::Exit => exit_mask[p.slot] = true,
            Move::Stay => {}
        }
    }
    let cars = set_agents_mask(road.cars, &move_mask, |v| {
        let s = v.state();
        s.to_row()
            .with("lane", new_lane[v.slot()])
            .with("cell", s.int("cell") + 1)
    })?;
    let exited = exit_mask.iter().filter(|&&e| e).count() as u64;
    road.cars = remove_agents(cars, &exit_mask)?;
    road.exited_total += exited;
    road.rebuild_occupancy()?;

    let (road, spawned) = spawn_cars(road, seed, t)?;
    Ok((road, StepCounts { spawned, exited }))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrafficConfig {
    pub length: usize,
    pub period: u64,
    pub green_fraction: f64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            length: 100,
            period: 10,
            green_fraction: 0.5,
        }
    }
}

impl TrafficConfig {
    pub fn apply_section(&mut self, section: &BTreeMap<String, String>) -> Result<()> {
        for (k, v) in section {
            match k.as_str() {
                "length" => self.length = parse_kv(k, v)?,
                "period" => self.period = parse_kv(k, v)?,
                "green_fraction" => self.green_fraction = parse_kv(k, v)?,
                _ => return Err(Error::Config(format!("unknown [traffic] key `{k}`"))),
            }
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(Error::Config("road length must be positive".into()));
        }
        if self.period == 0 {
            return Err(Error::Config("signal period must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.green_fraction) {
            return Err(Error::Config("green_fraction must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct TrafficState {
    pub road: Road,
    pub schedule: SignalSchedule,
    pub last: StepCounts,
    pub seed: RngState,
}

#[derive(Clone, Debug, Default)]
pub struct TrafficModel {
    pub config: TrafficConfig,
}

impl TrafficModel {
    pub fn new(config: TrafficConfig) -> Self {
        Self { config }
    }
}

impl Model for TrafficModel {
    type State = TrafficState;

    fn name(&self) -> &str {
        "traffic"
    }

    fn metric_columns(&self) -> Vec<String> {
        ["n_cars", "spawned", "exited", "signal_green"].map(String::from).to_vec()
    }

    fn init(&self, replica: &ReplicaConfig) -> Result<Self::State> {
        let mut cfg = self.config.clone();
        let params = &replica.model_params;
        if !params.is_empty() {
            for (name, _) in params.columns() {
                let v = params.row_ref(0).get(name).unwrap();
                match name {
                    "green_fraction" => apply_override(&mut cfg.green_fraction, name, v)?,
                    _ => return Err(Error::Config(format!("unknown traffic override `{name}`"))),
                }
            }
        }
        cfg.validate()?;
        Ok(TrafficState {
            road: Road::new(cfg.length)?,
            schedule: SignalSchedule::seeded(cfg.period, cfg.green_fraction, replica.seed)?,
            last: StepCounts::default(),
            seed: replica.seed,
        })
    }

    fn step(&self, state: Self::State, t: u64) -> Result<Self::State> {
        let (road, last) = step_road(state.road, &state.schedule, state.seed, t)?;
        Ok(TrafficState { road, last, ..state })
    }

    fn metrics(&self, s: &Self::State) -> Vec<Vec<f64>> {
        vec![vec![
            s.road.cars.num_active() as f64,
            s.last.spawned as f64,
            s.last.exited as f64,
            s.road.signal_green as u8 as f64,
        ]]
    }
}
