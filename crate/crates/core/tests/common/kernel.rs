use abmx::agents::{create_agents, remove_agents, AgentSet, AgentSpec, FieldSpec, SlotView};
use abmx::field::{Column, FieldBundle, Row, RowRef};
use abmx::kernels::UpdateBatch;
use abmx::rng::RngState;
use proptest::prelude::*;

pub fn spec() -> AgentSpec {
    AgentSpec::new(3)
        .state(FieldSpec::constant("v", 0i64))
        .state(FieldSpec::constant("w", 0.0))
}

/// Set with capacity `values.len()`; slots where `alive` is false are
/// placeholders.
pub fn build_set(values: &[(i64, f64)], alive: &[bool]) -> AgentSet {
    let n = values.len();
    let mut set = create_agents(n, n, &spec(), RngState::new(1)).unwrap();
    set.state_mut()
        .ints_mut("v")
        .unwrap()
        .copy_from_slice(&values.iter().map(|p| p.0).collect::<Vec<_>>());
    set.state_mut()
        .reals_mut("w")
        .unwrap()
        .copy_from_slice(&values.iter().map(|p| p.1).collect::<Vec<_>>());
    let kill: Vec<bool> = alive.iter().map(|a| !a).collect();
    remove_agents(set, &kill).unwrap()
}

pub fn build_updates(values: &[(i64, f64)], valid: &[bool]) -> UpdateBatch {
    let bundle = FieldBundle::from_columns([
        ("v", Column::Int(values.iter().map(|p| p.0).collect())),
        ("w", Column::Real(values.iter().map(|p| p.1).collect())),
    ])
    .unwrap();
    UpdateBatch::new(bundle, valid.to_vec()).unwrap()
}

pub fn apply(slot: &SlotView<'_>, u: &RowRef<'_>) -> Row {
    let s = slot.state();
    s.to_row()
        .with("v", u.int("v"))
        .with("w", s.real("w") * 0.5 + u.real("w"))
}

pub fn changed_slots(a: &AgentSet, b: &AgentSet) -> usize {
    (0..a.capacity())
        .filter(|&i| !a.state().row(i).values().iter().zip(b.state().row(i).values()).all(|(x, y)| x.bits_eq(y)))
        .count()
}

/// Agent values, alive flags, target mask, update values, valid flags.
pub type Instance = (Vec<(i64, f64)>, Vec<bool>, Vec<bool>, Vec<(i64, f64)>, Vec<bool>);

pub fn instance() -> impl Strategy<Value = Instance> {
    (1usize..=64, 0usize..=64).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec((0i64..1000, -1e6f64..1e6), n),
            prop::collection::vec(any::<bool>(), n),
            prop::collection::vec(any::<bool>(), n),
            prop::collection::vec((1000i64..2000, -1e6f64..1e6), m),
            prop::collection::vec(any::<bool>(), m),
        )
    })
}

pub fn masks(max: usize) -> impl Strategy<Value = Vec<bool>> {
    (0..=max).prop_flat_map(|n| prop::collection::vec(any::<bool>(), n))
}

/// Plain loop: the k-th selected target slot receives the k-th valid update
/// until either side runs out.
pub fn loop_pairing(set: &AgentSet, target: &[bool], updates: &UpdateBatch) -> AgentSet {
    let slots: Vec<usize> = (0..target.len()).filter(|&i| target[i]).collect();
    let rows: Vec<usize> = (0..updates.len()).filter(|&j| updates.valid()[j]).collect();
    let mut out = set.clone();
    for (&i, &j) in slots.iter().zip(&rows) {
        let row = apply(&set.slot(i), &updates.row(j));
        out.state_mut().write_row(i, &row).unwrap();
    }
    out
}
