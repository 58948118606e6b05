//! The even/odd pairing task: overwrite the first `r = min(p, q)` even
//! entries of `a` with the first `r` odd entries of `b`.

use crate::agents::{create_agents, AgentSet, AgentSpec, FieldSpec, SlotView};
use crate::error::{Error, Result};
use crate::field::{Column, FieldBundle, Row, RowRef};
use crate::kernels::{reference::oracle_paired_update, set_agents_rm, set_agents_sci, UpdateBatch};
use crate::rng::RngState;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToyResult {
    pub rank_match: Vec<i64>,
    pub sort_count_iterate: Vec<i64>,
    pub oracle: Vec<i64>,
}

fn values_of(set: &AgentSet) -> Vec<i64> {
    set.state().ints("value").unwrap().to_vec()
}

fn copy_value(slot: &SlotView<'_>, update: &RowRef<'_>) -> Row {
    slot.state().to_row().with("value", update.int("value"))
}

/// Runs both kernels and the sequential reference on the task.
pub fn run_toy(a: &[i64], b: &[i64]) -> Result<ToyResult> {
    if a.is_empty() {
        return Err(Error::Config("`a` must contain at least one integer".into()));
    }
    let spec = AgentSpec::new(0).state(FieldSpec::constant("value", 0i64));
    let mut set = create_agents(a.len(), a.len(), &spec, RngState::new(0))?;
    set.state_mut().ints_mut("value").unwrap().copy_from_slice(a);

    let target: Vec<bool> = a.iter().map(|v| v.rem_euclid(2) == 0).collect();
    let valid: Vec<bool> = b.iter().map(|v| v.rem_euclid(2) == 1).collect();
    let updates = UpdateBatch::new(FieldBundle::from_columns([("value", Column::Int(b.to_vec()))])?, valid)?;

    let rm = set_agents_rm(set.clone(), &target, &updates, copy_value)?;
    let sci = set_agents_sci(set.clone(), &target, &updates, copy_value)?;
    let oracle = oracle_paired_update(set, &target, &updates, copy_value)?;
    Ok(ToyResult {
        rank_match: values_of(&rm),
        sort_count_iterate: values_of(&sci),
        oracle: values_of(&oracle),
    })
}

/// Parses a comma-separated integer list such as `"2,3,4,6"`.
pub fn parse_int_list(s: &str) -> Result<Vec<i64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| Error::Config(format!("`{t}` is not an integer")))
        })
        .collect()
}

pub fn format_list(v: &[i64]) -> String {
    let items: Vec<String> = v.iter().map(i64::to_string).collect();
    format!("[{}]", items.join(","))
}
