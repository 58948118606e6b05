//! Fixed-capacity agent collections.
//!
//! An [`AgentSet`] stores every agent attribute as a column of length
//! `capacity`. Slots that hold no live agent are placeholders whose columns
//! all sit at their schema defaults. Operations consume a set and return a new one of the same
//! capacity.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{FieldBundle, Row, RowRef, Scalar, ScalarKind, Schema};
use crate::rng::RngState;

/// Id stored in placeholder slots.
pub const NO_ID: i64 = -1;

/// Split tag used by [`create_agents`].
pub const TAG_CREATE: u64 = 0xC4EA7E;

/// How fresh ids are assigned to newly activated slots.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum IdPolicy {
    /// Monotonic counter per set; ids are never reused within a run.
    #[default]
    Monotonic,
    /// Ids of removed agents are handed out again, most recently retired
    /// first; the counter only advances when none are waiting.
    Recycle,
}

/// Initial value recipe for one field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Initializer {
    Const(Scalar),
    /// Uniform integer in `[lo, hi)`.
    UniformInt { lo: i64, hi: i64 },
    /// Uniform real in `[lo, hi)`.
    UniformReal { lo: f64, hi: f64 },
    Bernoulli(f64),
}

impl Initializer {
    pub fn kind(&self) -> ScalarKind {
        match self {
            Initializer::Const(s) => s.kind(),
            Initializer::UniformInt { .. } => ScalarKind::Int,
            Initializer::UniformReal { .. } => ScalarKind::Real,
            Initializer::Bernoulli(_) => ScalarKind::Bool,
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let ok = match *self {
            Initializer::Const(_) => true,
            Initializer::UniformInt { lo, hi } => lo < hi,
            Initializer::UniformReal { lo, hi } => lo < hi && lo.is_finite() && hi.is_finite(),
            Initializer::Bernoulli(p) => (0.0..=1.0).contains(&p),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid initializer for `{name}`: {self:?}")))
        }
    }

    /// Value drawn for one slot from its dedicated stream.
    pub fn sample(&self, rng: RngState) -> Scalar {
        let mut s = rng.stream();
        match *self {
            Initializer::Const(v) => v,
            Initializer::UniformInt { lo, hi } => Scalar::Int(s.range_i64(lo, hi)),
            Initializer::UniformReal { lo, hi } => Scalar::Real(s.range_f64(lo, hi)),
            Initializer::Bernoulli(p) => Scalar::Bool(s.bernoulli(p)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldSpec {
    pub name: String,
    pub init: Initializer,
}

impl FieldSpec {
    pub fn new(name: impl Into<String>, init: Initializer) -> Self {
        Self {
            name: name.into(),
            init,
        }
    }

    pub fn constant(name: impl Into<String>, value: impl Into<Scalar>) -> Self {
        Self::new(name, Initializer::Const(value.into()))
    }
}

/// Role of a bundle inside an agent set; also the second element of the
/// creation split path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BundleRole {
    State = 0,
    Params = 1,
    PolicyState = 2,
    PolicyParams = 3,
}

/// Declaration of the fields an agent set carries and how to initialize them.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AgentSpec {
    pub agent_type: i64,
    pub state: Vec<FieldSpec>,
    pub params: Vec<FieldSpec>,
    pub policy_state: Vec<FieldSpec>,
    pub policy_params: Vec<FieldSpec>,
    pub id_policy: IdPolicy,
}

impl AgentSpec {
    pub fn new(agent_type: i64) -> Self {
        Self {
            agent_type,
            ..Self::default()
        }
    }

    pub fn state(mut self, field: FieldSpec) -> Self {
        self.state.push(field);
        self
    }

    pub fn param(mut self, field: FieldSpec) -> Self {
        self.params.push(field);
        self
    }

    pub fn policy_state(mut self, field: FieldSpec) -> Self {
        self.policy_state.push(field);
        self
    }

    pub fn policy_param(mut self, field: FieldSpec) -> Self {
        self.policy_params.push(field);
        self
    }

    pub fn id_policy(mut self, policy: IdPolicy) -> Self {
        self.id_policy = policy;
        self
    }

    fn bundles(&self) -> [(BundleRole, &[FieldSpec]); 4] {
        [
            (BundleRole::State, &self.state),
            (BundleRole::Params, &self.params),
            (BundleRole::PolicyState, &self.policy_state),
            (BundleRole::PolicyParams, &self.policy_params),
        ]
    }
}

/// Fixed-capacity structure-of-arrays agent collection.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentSet {
    capacity: usize,
    num_active: usize,
    active: Vec<bool>,
    id: Vec<i64>,
    agent_type: Vec<i64>,
    age: Vec<i64>,
    state: FieldBundle,
    params: FieldBundle,
    policy_state: FieldBundle,
    policy_params: FieldBundle,
    default_type: i64,
    next_id: i64,
    retired: Vec<i64>,
    id_policy: IdPolicy,
}

/// Creates a set whose first `num_active` slots are live.
///
/// Field `f` (declaration index within its bundle) of slot `i` is drawn from
/// `seed.fork(&[TAG_CREATE, role, f, i])`, where `role` is the
/// [`BundleRole`] discriminant. Placeholder slots get schema defaults.
pub fn create_agents(
    capacity: usize,
    num_active: usize,
    spec: &AgentSpec,
    seed: RngState,
) -> Result<AgentSet> {
    if capacity == 0 {
        return Err(Error::Capacity("capacity must be positive".into()));
    }
    if num_active > capacity {
        return Err(Error::Capacity(format!(
            "num_active {num_active} exceeds capacity {capacity}"
        )));
    }
    let mut bundles = Vec::with_capacity(4);
    for (role, fields) in spec.bundles() {
        let schema = Schema::new(fields.iter().map(|f| (f.name.clone(), f.init.kind())))?;
        for f in fields {
            f.init.validate(&f.name)?;
        }
        let mut bundle = FieldBundle::with_defaults(Arc::new(schema), capacity);
        let base = seed.fork(&[TAG_CREATE, role as u64]);
        for slot in 0..num_active {
            let mut row = Row::defaults(bundle.schema().clone());
            for (fi, f) in fields.iter().enumerate() {
                row.set(&f.name, f.init.sample(base.fork(&[fi as u64, slot as u64])));
            }
            bundle.write_row(slot, &row)?;
        }
        bundles.push(bundle);
    }
    let policy_params = bundles.pop().unwrap();
    let policy_state = bundles.pop().unwrap();
    let params = bundles.pop().unwrap();
    let state = bundles.pop().unwrap();

    let mut active = vec![false; capacity];
    let mut id = vec![NO_ID; capacity];
    let mut agent_type = vec![0; capacity];
    for slot in 0..num_active {
        active[slot] = true;
        id[slot] = slot as i64;
        agent_type[slot] = spec.agent_type;
    }
    Ok(AgentSet {
        capacity,
        num_active,
        active,
        id,
        agent_type,
        age: vec![0; capacity],
        state,
        params,
        policy_state,
        policy_params,
        default_type: spec.agent_type,
        next_id: num_active as i64,
        retired: Vec::new(),
        id_policy: spec.id_policy,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepOptions {
    pub increment_age: bool,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self { increment_age: true }
    }
}

/// Applies `transition` to every live slot and increments their ages.
///
/// `transition` sees only its own slot and `shared`, and returns the full
/// replacement state row. Placeholder slots are left at their defaults.
pub fn step_agents<F>(set: AgentSet, transition: F, shared: &FieldBundle) -> Result<AgentSet>
where
    F: Fn(&SlotView<'_>, &FieldBundle) -> Row,
{
    step_agents_with(set, transition, shared, StepOptions::default())
}

pub fn step_agents_with<F>(
    mut set: AgentSet,
    transition: F,
    shared: &FieldBundle,
    options: StepOptions,
) -> Result<AgentSet>
where
    F: Fn(&SlotView<'_>, &FieldBundle) -> Row,
{
    let rows: Vec<(usize, Row)> = set
        .active_slots()
        .map(|i| (i, transition(&set.slot(i), shared)))
        .collect();
    for (i, row) in &rows {
        set.state.write_row(*i, row)?;
    }
    if options.increment_age {
        for (age, &a) in set.age.iter_mut().zip(&set.active) {
            if a {
                *age += 1;
            }
        }
    }
    Ok(set)
}

/// Deactivates every live slot flagged in `kill_mask` and resets it to
/// placeholder defaults. Flags on dead slots are ignored.
pub fn remove_agents(mut set: AgentSet, kill_mask: &[bool]) -> Result<AgentSet> {
    if kill_mask.len() != set.capacity {
        return Err(Error::Capacity(format!(
            "kill mask length {} does not match capacity {}",
            kill_mask.len(),
            set.capacity
        )));
    }
    let doomed: Vec<usize> = (0..set.capacity).filter(|&s| set.active[s] && kill_mask[s]).collect();
    for slot in doomed {
        set.clear_slot(slot);
    }
    Ok(set)
}

impl AgentSet {
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn num_active(&self) -> usize {
        self.num_active
    }

    pub fn free_slots(&self) -> usize {
        self.capacity - self.num_active
    }

    pub fn active(&self) -> &[bool] {
        &self.active
    }

    pub fn ids(&self) -> &[i64] {
        &self.id
    }

    pub fn types(&self) -> &[i64] {
        &self.agent_type
    }

    pub fn ages(&self) -> &[i64] {
        &self.age
    }

    pub fn state(&self) -> &FieldBundle {
        &self.state
    }

    pub fn params(&self) -> &FieldBundle {
        &self.params
    }

    pub fn policy_state(&self) -> &FieldBundle {
        &self.policy_state
    }

    pub fn policy_params(&self) -> &FieldBundle {
        &self.policy_params
    }

    /// Mutable state columns, for model code that updates whole columns.
    /// Column lengths cannot change through this handle.
    pub fn state_mut(&mut self) -> &mut FieldBundle {
        &mut self.state
    }

    pub fn params_mut(&mut self) -> &mut FieldBundle {
        &mut self.params
    }

    pub fn id_policy(&self) -> IdPolicy {
        self.id_policy
    }

    /// Next id the monotonic counter will hand out.
    pub fn next_id(&self) -> i64 {
        self.next_id
    }

    pub fn slot(&self, slot: usize) -> SlotView<'_> {
        assert!(slot < self.capacity, "slot {slot} out of bounds");
        SlotView { set: self, slot }
    }

    pub fn active_slots(&self) -> impl Iterator<Item = usize> + '_ {
        self.active.iter().enumerate().filter(|(_, &a)| a).map(|(i, _)| i)
    }

    /// Turns placeholder `slot` into a live agent with a fresh id, age 0 and
    /// the given state row. Params and policy data keep their defaults.
    pub(crate) fn activate_slot(&mut self, slot: usize, state: &Row) -> Result<()> {
        debug_assert!(!self.active[slot]);
        self.state.write_row(slot, state)?;
        self.active[slot] = true;
        self.agent_type[slot] = self.default_type;
        self.age[slot] = 0;
        let reused = match self.id_policy {
            IdPolicy::Monotonic => None,
            IdPolicy::Recycle => self.retired.pop(),
        };
        self.id[slot] = reused.unwrap_or_else(|| {
            self.next_id += 1;
            self.next_id - 1
        });
        self.num_active += 1;
        Ok(())
    }

    fn clear_slot(&mut self, slot: usize) {
        if self.id_policy == IdPolicy::Recycle {
            self.retired.push(self.id[slot]);
        }
        self.active[slot] = false;
        self.id[slot] = NO_ID;
        self.agent_type[slot] = 0;
        self.age[slot] = 0;
        self.state.reset_row(slot);
        self.params.reset_row(slot);
        self.policy_state.reset_row(slot);
        self.policy_params.reset_row(slot);
        self.num_active -= 1;
    }

    pub(crate) fn write_state(&mut self, slot: usize, row: &Row) -> Result<()> {
        self.state.write_row(slot, row)
    }

    /// Every column gathered through `perm` (`out[k] = self[perm[k]]`).
    pub(crate) fn permuted(&self, perm: &[usize]) -> AgentSet {
        let gather = |v: &[i64]| perm.iter().map(|&i| v[i]).collect::<Vec<_>>();
        AgentSet {
            capacity: self.capacity,
            num_active: self.num_active,
            active: perm.iter().map(|&i| self.active[i]).collect(),
            id: gather(&self.id),
            agent_type: gather(&self.agent_type),
            age: gather(&self.age),
            state: self.state.permuted(perm),
            params: self.params.permuted(perm),
            policy_state: self.policy_state.permuted(perm),
            policy_params: self.policy_params.permuted(perm),
            default_type: self.default_type,
            next_id: self.next_id,
            retired: self.retired.clone(),
            id_policy: self.id_policy,
        }
    }

    /// Checks the structural invariants of the set.
    pub fn validate(&self) -> Result<()> {
        let n = self.capacity;
        let lens = [
            self.active.len(),
            self.id.len(),
            self.agent_type.len(),
            self.age.len(),
            self.state.len(),
            self.params.len(),
            self.policy_state.len(),
            self.policy_params.len(),
        ];
        if lens.iter().any(|&l| l != n) {
            return Err(Error::Contract(format!("column lengths {lens:?} differ from capacity {n}")));
        }
        let live = self.active.iter().filter(|&&a| a).count();
        if live != self.num_active {
            return Err(Error::Contract(format!(
                "popcount(active) = {live} but num_active = {}",
                self.num_active
            )));
        }
        let mut ids: Vec<i64> = self.active_slots().map(|i| self.id[i]).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Contract("duplicate ids among live agents".into()));
        }
        if self.age.iter().any(|&a| a < 0) {
            return Err(Error::Contract("negative age".into()));
        }
        Ok(())
    }

    /// Bitwise equality, comparing reals by bit pattern.
    pub fn bits_eq(&self, other: &AgentSet) -> bool {
        self.capacity == other.capacity
            && self.num_active == other.num_active
            && self.active == other.active
            && self.id == other.id
            && self.agent_type == other.agent_type
            && self.age == other.age
            && self.next_id == other.next_id
            && self.retired == other.retired
            && self.state.bits_eq(&other.state)
            && self.params.bits_eq(&other.params)
            && self.policy_state.bits_eq(&other.policy_state)
            && self.policy_params.bits_eq(&other.policy_params)
    }
}

/// Read-only view of one slot.
#[derive(Clone, Copy, Debug)]
pub struct SlotView<'a> {
    set: &'a AgentSet,
    slot: usize,
}

impl<'a> SlotView<'a> {
    pub fn slot(&self) -> usize {
        self.slot
    }

    pub fn is_active(&self) -> bool {
        self.set.active[self.slot]
    }

    pub fn id(&self) -> i64 {
        self.set.id[self.slot]
    }

    pub fn agent_type(&self) -> i64 {
        self.set.agent_type[self.slot]
    }

    pub fn age(&self) -> i64 {
        self.set.age[self.slot]
    }

    pub fn state(&self) -> RowRef<'a> {
        self.set.state.row_ref(self.slot)
    }

    pub fn params(&self) -> RowRef<'a> {
        self.set.params.row_ref(self.slot)
    }

    pub fn policy_state(&self) -> RowRef<'a> {
        self.set.policy_state.row_ref(self.slot)
    }

    pub fn policy_params(&self) -> RowRef<'a> {
        self.set.policy_params.row_ref(self.slot)
    }
}
