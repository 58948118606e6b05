//! Sheep and wolves foraging on a toroidal grass lattice.
//!
//! Phases per step, in order: move, eat, metabolize, die, reproduce, regrow.
//! Offspring are inserted into free slots with the pairing kernels so that
//! each newborn starts on its own parent's cell.

use std::collections::BTreeMap;

use crate::agents::{create_agents, remove_agents, step_agents, AgentSet, AgentSpec, FieldSpec, Initializer};
use crate::batch::{Model, ReplicaConfig};
use crate::error::{Error, Result};
use crate::field::FieldBundle;
use crate::kernels::{compute_group_ranks, set_agents_mask, spawn_agents, PairingKernel, UpdateBatch};
use crate::rng::RngState;

use super::{apply_override, parse_kv};

pub const SHEEP: i64 = 1;
pub const WOLF: i64 = 2;

pub const TAG_INIT: u64 = 0x1A17;
pub const TAG_ENERGY: u64 = 0xE7E6;
pub const TAG_GRASS: u64 = 0x96A5;
pub const TAG_MOVE: u64 = 0x30E;
pub const TAG_REPRODUCE: u64 = 0x6E9D;

/// Offsets of the 8-neighborhood, clockwise from north-west.
const NEIGHBORS: [(i64, i64); 8] = [(-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0)];

#[derive(Clone, Debug, PartialEq)]
pub struct PredationConfig {
    pub width: usize,
    pub height: usize,
    pub n_sheep0: usize,
    pub n_wolves0: usize,
    pub sheep_capacity: usize,
    pub wolf_capacity: usize,
    pub energy_gain_sheep: f64,
    pub energy_gain_wolf: f64,
    pub metabolism: f64,
    pub sheep_reproduce_prob: f64,
    pub wolf_reproduce_prob: f64,
    pub reproduce_energy_frac: f64,
    pub regrow_delay: i64,
    /// Probability that a cell starts with grass.
    pub initial_grass_prob: f64,
    pub kernel: PairingKernel,
}

impl Default for PredationConfig {
    fn default() -> Self {
        Self::small()
    }
}

impl PredationConfig {
    /// 600 sheep and 400 wolves on a 100 x 100 lattice.
    pub fn small() -> Self {
        Self {
            width: 100,
            height: 100,
            n_sheep0: 600,
            n_wolves0: 400,
            sheep_capacity: 20_000,
            wolf_capacity: 20_000,
            energy_gain_sheep: 4.0,
            energy_gain_wolf: 20.0,
            metabolism: 1.0,
            sheep_reproduce_prob: 0.04,
            wolf_reproduce_prob: 0.05,
            reproduce_energy_frac: 0.5,
            regrow_delay: 30,
            initial_grass_prob: 0.5,
            kernel: PairingKernel::RankMatch,
        }
    }

    /// 6000 sheep and 4000 wolves on a 1000 x 1000 lattice.
    pub fn large() -> Self {
        Self {
            width: 1000,
            height: 1000,
            n_sheep0: 6000,
            n_wolves0: 4000,
            sheep_capacity: 200_000,
            wolf_capacity: 200_000,
            ..Self::small()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config("lattice dimensions must be positive".into()));
        }
        if self.n_sheep0 > self.sheep_capacity || self.n_wolves0 > self.wolf_capacity {
            return Err(Error::Config("initial counts exceed capacities".into()));
        }
        if self.sheep_capacity == 0 || self.wolf_capacity == 0 {
            return Err(Error::Config("capacities must be positive".into()));
        }
        for (name, p) in [
            ("sheep_reproduce_prob", self.sheep_reproduce_prob),
            ("wolf_reproduce_prob", self.wolf_reproduce_prob),
            ("reproduce_energy_frac", self.reproduce_energy_frac),
            ("initial_grass_prob", self.initial_grass_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        if self.regrow_delay < 0 {
            return Err(Error::Config("regrow_delay must be non-negative".into()));
        }
        Ok(())
    }

    /// Applies `[predation]` section keys. A `preset` key (`small` or
    /// `large`) replaces the whole configuration before other keys apply.
    pub fn apply_section(&mut self, section: &BTreeMap<String, String>) -> Result<()> {
        if let Some(preset) = section.get("preset") {
            *self = match preset.trim() {
                "small" => Self::small(),
                "large" => Self::large(),
                other => return Err(Error::Config(format!("unknown predation preset `{other}`"))),
            };
        }
        for (k, v) in section {
            match k.as_str() {
                "preset" => {}
                "width" => self.width = parse_kv(k, v)?,
                "height" => self.height = parse_kv(k, v)?,
                "n_sheep0" => self.n_sheep0 = parse_kv(k, v)?,
                "n_wolves0" => self.n_wolves0 = parse_kv(k, v)?,
                "sheep_capacity" => self.sheep_capacity = parse_kv(k, v)?,
                "wolf_capacity" => self.wolf_capacity = parse_kv(k, v)?,
                "energy_gain_sheep" => self.energy_gain_sheep = parse_kv(k, v)?,
                "energy_gain_wolf" => self.energy_gain_wolf = parse_kv(k, v)?,
                "metabolism" => self.metabolism = parse_kv(k, v)?,
                "sheep_reproduce_prob" => self.sheep_reproduce_prob = parse_kv(k, v)?,
                "wolf_reproduce_prob" => self.wolf_reproduce_prob = parse_kv(k, v)?,
                "reproduce_energy_frac" => self.reproduce_energy_frac = parse_kv(k, v)?,
                "regrow_delay" => self.regrow_delay = parse_kv(k, v)?,
                "initial_grass_prob" => self.initial_grass_prob = parse_kv(k, v)?,
                "kernel" => self.kernel = super::parse_kernel(v)?,
                _ => return Err(Error::Config(format!("unknown [predation] key `{k}`"))),
            }
        }
        self.validate()
    }

    fn apply_overrides(&mut self, params: &FieldBundle) -> Result<()> {
        if params.is_empty() {
            return Ok(());
        }
        for (name, _) in params.columns() {
            let v = params.row_ref(0).get(name).unwrap();
            match name {
                "n_sheep0" => apply_override(&mut self.n_sheep0, name, v)?,
                "n_wolves0" => apply_override(&mut self.n_wolves0, name, v)?,
                "energy_gain_sheep" => apply_override(&mut self.energy_gain_sheep, name, v)?,
                "energy_gain_wolf" => apply_override(&mut self.energy_gain_wolf, name, v)?,
                "metabolism" => apply_override(&mut self.metabolism, name, v)?,
                "sheep_reproduce_prob" => apply_override(&mut self.sheep_reproduce_prob, name, v)?,
                "wolf_reproduce_prob" => apply_override(&mut self.wolf_reproduce_prob, name, v)?,
                "regrow_delay" => apply_override(&mut self.regrow_delay, name, v)?,
                _ => return Err(Error::Config(format!("unknown predation override `{name}`"))),
            }
        }
        self.validate()
    }
}

/// Grass layer of the lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct World {
    pub width: usize,
    pub height: usize,
    pub grass_ready: Vec<bool>,
    /// Steps until regrowth; 0 exactly when grass is present.
    pub regrow_counter: Vec<i64>,
}

impl World {
    pub fn new_full(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            grass_ready: vec![true; width * height],
            regrow_counter: vec![0; width * height],
        }
    }

    pub fn cell(&self, x: i64, y: i64) -> usize {
        y as usize * self.width + x as usize
    }

    pub fn n_grass(&self) -> usize {
        self.grass_ready.iter().filter(|&&g| g).count()
    }
}

/// Per-species event counters of one step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SpeciesEvents {
    /// Food units eaten (grass cells for sheep, sheep for wolves).
    pub food_eaten: usize,
    /// Live agents at the metabolism phase.
    pub metabolized: usize,
    /// Energy each agent held when it was removed (predation or starvation).
    pub removed_energy: Vec<f64>,
    /// Agents removed by starvation.
    pub starved: usize,
    pub births: usize,
    pub births_dropped: usize,
    /// `(parent slot, child slot)` for every birth.
    pub lineage: Vec<(usize, usize)>,
    /// `(parent energy before, parent energy after, child energy)`.
    pub transfers: Vec<(f64, f64, f64)>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PredationEvents {
    pub sheep: SpeciesEvents,
    pub wolves: SpeciesEvents,
    /// Sheep removed by wolves this step.
    pub sheep_eaten: usize,
}

impl PredationEvents {
    pub fn births_dropped(&self) -> usize {
        self.sheep.births_dropped + self.wolves.births_dropped
    }
}

#[derive(Clone, Debug)]
pub struct PredationState {
    pub world: World,
    pub sheep: AgentSet,
    pub wolves: AgentSet,
    pub events: PredationEvents,
    pub seed: RngState,
}

fn animal_spec(agent_type: i64, width: usize, height: usize) -> AgentSpec {
    AgentSpec::new(agent_type)
        .state(FieldSpec::new("x", Initializer::UniformInt { lo: 0, hi: width as i64 }))
        .state(FieldSpec::new("y", Initializer::UniformInt { lo: 0, hi: height as i64 }))
        .state(FieldSpec::constant("energy", 0.0))
}

/// Initial world and populations.
///
/// Positions follow the [`create_agents`] schedule with seed
/// `seed.fork(&[TAG_INIT, species])`. Initial energy of slot `i` is an
/// integer drawn uniformly from `1..=2 * gain` on
/// `seed.fork(&[TAG_ENERGY, species, i])`. A cell starts with grass with
/// probability `initial_grass_prob`; otherwise its counter is uniform in
/// `1..=regrow_delay`.
pub fn init_predation(cfg: &PredationConfig, seed: RngState) -> Result<PredationState> {
    cfg.validate()?;
    let make = |species: i64, n: usize, cap: usize, gain: f64| -> Result<AgentSet> {
        let mut set = create_agents(
            cap,
            n,
            &animal_spec(species, cfg.width, cfg.height),
            seed.fork(&[TAG_INIT, species as u64]),
        )?;
        let hi = (2.0 * gain).floor().max(1.0) as i64;
        let energy = set.state_mut().reals_mut("energy").unwrap();
        for (i, e) in energy.iter_mut().take(n).enumerate() {
            let mut s = seed.fork(&[TAG_ENERGY, species as u64, i as u64]).stream();
            *e = s.range_i64(1, hi + 1) as f64;
        }
        Ok(set)
    };
    let sheep = make(SHEEP, cfg.n_sheep0, cfg.sheep_capacity, cfg.energy_gain_sheep)?;
    let wolves = make(WOLF, cfg.n_wolves0, cfg.wolf_capacity, cfg.energy_gain_wolf)?;

    let cells = cfg.width * cfg.height;
    let mut world = World::new_full(cfg.width, cfg.height);
    for c in 0..cells {
        let mut s = seed.fork(&[TAG_GRASS, c as u64]).stream();
        if !s.bernoulli(cfg.initial_grass_prob) && cfg.regrow_delay > 0 {
            world.grass_ready[c] = false;
            world.regrow_counter[c] = s.range_i64(1, cfg.regrow_delay + 1);
        }
    }
    Ok(PredationState {
        world,
        sheep,
        wolves,
        events: PredationEvents::default(),
        seed,
    })
}

/// Moves every live animal to a uniformly chosen 8-neighbor, wrapping at the
/// edges. Slot `i` draws from `seed.fork(&[TAG_MOVE, species, t, i])`.
fn move_animals(set: AgentSet, world: &World, seed: RngState, species: i64, t: u64) -> Result<AgentSet> {
    let (w, h) = (world.width as i64, world.height as i64);
    step_agents(
        set,
        |v, _| {
            let s = v.state();
            let dir = seed
                .fork(&[TAG_MOVE, species as u64, t, v.slot() as u64])
                .stream()
                .below(8) as usize;
            let (dx, dy) = NEIGHBORS[dir];
            s.to_row()
                .with("x", (s.int("x") + dx).rem_euclid(w))
                .with("y", (s.int("y") + dy).rem_euclid(h))
        },
        &FieldBundle::empty(0),
    )
}

fn cells_of(set: &AgentSet, world: &World) -> Vec<usize> {
    let xs = set.state().ints("x").unwrap();
    let ys = set.state().ints("y").unwrap();
    xs.iter().zip(ys).map(|(&x, &y)| world.cell(x, y)).collect()
}

fn add_energy(set: AgentSet, mask: &[bool], delta: f64) -> Result<AgentSet> {
    set_agents_mask(set, mask, |v| {
        let e = v.state().real("energy");
        v.state().to_row().with("energy", e + delta)
    })
}

/// Removes flagged live agents, recording the energy they held.
fn remove_recording(set: AgentSet, kill: &[bool], events: &mut SpeciesEvents) -> Result<AgentSet> {
    let energy = set.state().reals("energy").unwrap();
    events
        .removed_energy
        .extend(set.active_slots().filter(|&i| kill[i]).map(|i| energy[i]));
    remove_agents(set, kill)
}

/// Survivors reproduce; offspring fill free slots via the pairing kernel.
/// Only parents that actually obtained a slot give up energy.
fn reproduce(
    set: AgentSet,
    cfg: &PredationConfig,
    prob: f64,
    seed: RngState,
    species: i64,
    t: u64,
    events: &mut SpeciesEvents,
) -> Result<AgentSet> {
    let energy = set.state().reals("energy").unwrap();
    let eligible: Vec<bool> = (0..set.capacity())
        .map(|i| {
            set.active()[i]
                && energy[i] > cfg.metabolism
                && seed
                    .fork(&[TAG_REPRODUCE, species as u64, t, i as u64])
                    .stream()
                    .bernoulli(prob)
        })
        .collect();

    let mut offspring = set.state().clone();
    let child_energy: Vec<f64> = energy.iter().map(|e| e * cfg.reproduce_energy_frac).collect();
    offspring.reals_mut("energy").unwrap().copy_from_slice(&child_energy);
    let batch = UpdateBatch::new(offspring, eligible)?;

    let out = spawn_agents(set, &batch, cfg.kernel)?;
    let mut set = out.set;
    events.births = out.pairs.len();
    events.births_dropped = out.dropped;
    let energy = set.state_mut().reals_mut("energy").unwrap();
    for &(child, parent) in &out.pairs {
        let before = energy[parent];
        let c = child_energy[parent];
        energy[parent] = before - c;
        events.lineage.push((parent, child));
        events.transfers.push((before, energy[parent], c));
    }
    Ok(set)
}

/// Advances the lattice by one step. `t` is the 0-based step index; all
/// randomness is forked from `seed` by phase tag, species, `t` and slot.
pub fn step_predation(
    world: World,
    sheep: AgentSet,
    wolves: AgentSet,
    cfg: &PredationConfig,
    seed: RngState,
    t: u64,
) -> Result<(World, AgentSet, AgentSet, PredationEvents)> {
    let mut world = world;
    let mut ev = PredationEvents::default();
    let cells = world.width * world.height;

    // move
    let sheep = move_animals(sheep, &world, seed, SHEEP, t)?;
    let wolves = move_animals(wolves, &world, seed, WOLF, t)?;

    // eat: lowest-slot sheep on a grass cell grazes
    let sheep_cells = cells_of(&sheep, &world);
    let sheep_rank = compute_group_ranks(sheep.active(), &sheep_cells, cells);
    let grazers: Vec<bool> = (0..sheep.capacity())
        .map(|i| sheep_rank[i] == 1 && world.grass_ready[sheep_cells[i]])
        .collect();
    for (i, &g) in grazers.iter().enumerate() {
        if g {
            let c = sheep_cells[i];
            world.grass_ready[c] = false;
            world.regrow_counter[c] = cfg.regrow_delay;
            ev.sheep.food_eaten += 1;
        }
    }
    let sheep = add_energy(sheep, &grazers, cfg.energy_gain_sheep)?;

    // eat: the k-th wolf on a cell takes the k-th sheep on that cell
    let wolf_cells = cells_of(&wolves, &world);
    let wolf_rank = compute_group_ranks(wolves.active(), &wolf_cells, cells);
    let mut start = vec![0usize; cells + 1];
    for (i, &a) in sheep.active().iter().enumerate() {
        if a {
            start[sheep_cells[i] + 1] += 1;
        }
    }
    for c in 0..cells {
        start[c + 1] += start[c];
    }
    let mut by_cell = vec![0usize; start[cells]];
    for (i, &a) in sheep.active().iter().enumerate() {
        if a {
            let c = sheep_cells[i];
            by_cell[start[c] + sheep_rank[i] - 1] = i;
        }
    }
    let mut hunters = vec![false; wolves.capacity()];
    let mut prey = vec![false; sheep.capacity()];
    for i in wolves.active_slots() {
        let c = wolf_cells[i];
        let k = wolf_rank[i];
        if k <= start[c + 1] - start[c] {
            hunters[i] = true;
            prey[by_cell[start[c] + k - 1]] = true;
            ev.wolves.food_eaten += 1;
        }
    }
    ev.sheep_eaten = ev.wolves.food_eaten;
    let sheep = remove_recording(sheep, &prey, &mut ev.sheep)?;
    let wolves = add_energy(wolves, &hunters, cfg.energy_gain_wolf)?;

    // metabolize
    ev.sheep.metabolized = sheep.num_active();
    ev.wolves.metabolized = wolves.num_active();
    let live = sheep.active().to_vec();
    let sheep = add_energy(sheep, &live, -cfg.metabolism)?;
    let live = wolves.active().to_vec();
    let wolves = add_energy(wolves, &live, -cfg.metabolism)?;

    // die
    let starving = |set: &AgentSet| -> Vec<bool> {
        let e = set.state().reals("energy").unwrap();
        set.active().iter().zip(e).map(|(&a, &e)| a && e <= 0.0).collect()
    };
    let kill = starving(&sheep);
    ev.sheep.starved = kill.iter().filter(|&&k| k).count();
    let sheep = remove_recording(sheep, &kill, &mut ev.sheep)?;
    let kill = starving(&wolves);
    ev.wolves.starved = kill.iter().filter(|&&k| k).count();
    let wolves = remove_recording(wolves, &kill, &mut ev.wolves)?;

    // reproduce
    let sheep = reproduce(sheep, cfg, cfg.sheep_reproduce_prob, seed, SHEEP, t, &mut ev.sheep)?;
    let wolves = reproduce(wolves, cfg, cfg.wolf_reproduce_prob, seed, WOLF, t, &mut ev.wolves)?;

    // regrow
    for (c, g) in world.regrow_counter.iter_mut().zip(world.grass_ready.iter_mut()) {
        if *c > 0 {
            *c -= 1;
        }
        *g = *c == 0;
    }
    Ok((world, sheep, wolves, ev))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PredationMetrics {
    pub n_sheep: usize,
    pub n_wolves: usize,
    pub n_grass: usize,
}

pub fn metrics_predation(world: &World, sheep: &AgentSet, wolves: &AgentSet) -> PredationMetrics {
    PredationMetrics {
        n_sheep: sheep.num_active(),
        n_wolves: wolves.num_active(),
        n_grass: world.n_grass(),
    }
}

/// Batchable predation model.
#[derive(Clone, Debug, Default)]
pub struct PredationModel {
    pub config: PredationConfig,
}

impl PredationModel {
    pub fn new(config: PredationConfig) -> Self {
        Self { config }
    }

    fn replica_config(&self, replica: &ReplicaConfig) -> Result<PredationConfig> {
        let mut cfg = self.config.clone();
        cfg.apply_overrides(&replica.model_params)?;
        Ok(cfg)
    }
}

/// Predation state bundled with the resolved per-replica configuration.
#[derive(Clone, Debug)]
pub struct PredationReplica {
    pub config: PredationConfig,
    pub state: PredationState,
}

impl Model for PredationModel {
    type State = PredationReplica;

    fn name(&self) -> &str {
        "predation"
    }

    fn metric_columns(&self) -> Vec<String> {
        ["n_sheep", "n_wolves", "n_grass", "births_dropped"]
            .map(String::from)
            .to_vec()
    }

    fn init(&self, replica: &ReplicaConfig) -> Result<Self::State> {
        let config = self.replica_config(replica)?;
        let state = init_predation(&config, replica.seed)?;
        Ok(PredationReplica { config, state })
    }

    fn step(&self, r: Self::State, t: u64) -> Result<Self::State> {
        let PredationReplica { config, state } = r;
        let (world, sheep, wolves, events) =
            step_predation(state.world, state.sheep, state.wolves, &config, state.seed, t)?;
        Ok(PredationReplica {
            config,
            state: PredationState {
                world,
                sheep,
                wolves,
                events,
                seed: state.seed,
            },
        })
    }

    fn metrics(&self, r: &Self::State) -> Vec<Vec<f64>> {
        let s = &r.state;
        let m = metrics_predation(&s.world, &s.sheep, &s.wolves);
        vec![vec![
            m.n_sheep as f64,
            m.n_wolves as f64,
            m.n_grass as f64,
            s.events.births_dropped() as f64,
        ]]
    }
}
