//! Fixed-shape kernels for updating a runtime-selected subset of agents.
//!
//! Pairing the k-th selected agent with the k-th valid update is done two
//! ways. [`set_agents_rm`] (rank-match) labels both sides with masked
//! inclusive prefix sums and lets every slot look up the update carrying its
//! label; all slots are independent. [`set_agents_sci`] (sort-count-iterate)
//! compacts both index arrays to the front, counts `r = min(p, q)` and walks
//! the first `r` pairs in order, so the update function may observe earlier
//! iterations.
//!
//! Cost: rank-match as written with an all-pairs match grid is `O(n * m)` work
//! at constant depth ([`rank_match_all_pairs`]). The production path
//! ([`rank_match`]) finds the same first-maximum by binary search over the
//! prefix sums of the update mask, `O(n log m)`. Sort-count-iterate is
//! `O(n + m)` for the stable partitions plus a sequential loop of length `r`.

use std::ops::Deref;

use crate::agents::{AgentSet, SlotView};
use crate::error::{Error, Result};
use crate::field::{FieldBundle, Row, RowRef};

/// Boolean selection column.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SelectionMask(Vec<bool>);

impl SelectionMask {
    pub fn new(mask: Vec<bool>) -> Self {
        Self(mask)
    }

    pub fn all(len: usize, value: bool) -> Self {
        Self(vec![value; len])
    }

    pub fn popcount(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn not(&self) -> Self {
        Self(self.0.iter().map(|b| !b).collect())
    }

    pub fn and(&self, other: &[bool]) -> Self {
        assert_eq!(self.0.len(), other.len());
        Self(self.0.iter().zip(other).map(|(a, b)| *a && *b).collect())
    }

    pub fn into_inner(self) -> Vec<bool> {
        self.0
    }
}

impl Deref for SelectionMask {
    type Target = [bool];
    fn deref(&self) -> &[bool] {
        &self.0
    }
}

impl From<Vec<bool>> for SelectionMask {
    fn from(v: Vec<bool>) -> Self {
        Self(v)
    }
}

impl FromIterator<bool> for SelectionMask {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// Masked inclusive prefix sum: 0 on unselected slots, `1..=p` on selected
/// ones in slot order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankVector(Vec<usize>);

impl RankVector {
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Number of selected slots (the largest rank).
    pub fn count(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }
}

impl Deref for RankVector {
    type Target = [usize];
    fn deref(&self) -> &[usize] {
        &self.0
    }
}

pub fn compute_ranks(mask: &[bool]) -> RankVector {
    let mut acc = 0usize;
    RankVector(
        mask.iter()
            .map(|&m| {
                acc += m as usize;
                acc * m as usize
            })
            .collect(),
    )
}

/// Ranks restarting per group: slot `i` gets its 1-based position among the
/// selected slots sharing `groups[i]`, in slot order; unselected slots get 0.
/// Group labels must be below `num_groups`.
pub fn compute_group_ranks(mask: &[bool], groups: &[usize], num_groups: usize) -> RankVector {
    assert_eq!(mask.len(), groups.len());
    let mut seen = vec![0usize; num_groups];
    RankVector(
        mask.iter()
            .zip(groups)
            .map(|(&m, &g)| {
                if m {
                    seen[g] += 1;
                    seen[g]
                } else {
                    0
                }
            })
            .collect(),
    )
}

/// Stable front-compaction of an index range.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelectionResult {
    pub indices: Vec<usize>,
    pub count: usize,
}

impl SelectionResult {
    pub fn selected(&self) -> &[usize] {
        &self.indices[..self.count]
    }
}

/// Indices of `true` entries in ascending order, followed by the `false`
/// entries in ascending order.
pub fn stable_partition(mask: &[bool]) -> SelectionResult {
    let count = mask.iter().filter(|&&b| b).count();
    let mut indices = vec![0; mask.len()];
    let (mut front, mut back) = (0, count);
    for (i, &m) in mask.iter().enumerate() {
        if m {
            indices[front] = i;
            front += 1;
        } else {
            indices[back] = i;
            back += 1;
        }
    }
    SelectionResult { indices, count }
}

pub fn select_agents<P>(set: &AgentSet, predicate: P) -> SelectionResult
where
    P: Fn(&SlotView<'_>) -> bool,
{
    let mask: Vec<bool> = (0..set.capacity()).map(|i| predicate(&set.slot(i))).collect();
    stable_partition(&mask)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SortDirection {
    Ascending,
    Descending,
}

/// Stable argsort of `key`. Ties keep their original order in both
/// directions.
pub fn sort_permutation(key: &[f64], direction: SortDirection) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..key.len()).collect();
    match direction {
        SortDirection::Ascending => perm.sort_by(|&a, &b| key[a].total_cmp(&key[b])),
        SortDirection::Descending => perm.sort_by(|&a, &b| key[b].total_cmp(&key[a])),
    }
    perm
}

/// Copy of `key` with placeholder slots pinned to the tail of the requested
/// order (`+inf` ascending, `-inf` descending).
pub fn placeholder_pinned_key(set: &AgentSet, key: &[f64], direction: SortDirection) -> Vec<f64> {
    let pin = match direction {
        SortDirection::Ascending => f64::INFINITY,
        SortDirection::Descending => f64::NEG_INFINITY,
    };
    key.iter()
        .zip(set.active())
        .map(|(&k, &a)| if a { k } else { pin })
        .collect()
}

/// Reorders every column of `set` by the stable sort permutation of `key`.
pub fn sort_agents(set: AgentSet, key: &[f64], direction: SortDirection) -> Result<AgentSet> {
    if key.len() != set.capacity() {
        return Err(Error::Capacity(format!(
            "sort key length {} does not match capacity {}",
            key.len(),
            set.capacity()
        )));
    }
    if let Some(i) = set.active_slots().find(|&i| !key[i].is_finite()) {
        return Err(Error::Domain(format!(
            "non-finite sort key {} on live slot {i}",
            key[i]
        )));
    }
    Ok(set.permuted(&sort_permutation(key, direction)))
}

/// Candidate update rows plus their validity mask.
#[derive(Clone, Debug, PartialEq)]
pub struct UpdateBatch {
    values: FieldBundle,
    valid: SelectionMask,
}

impl UpdateBatch {
    pub fn new(values: FieldBundle, valid: impl Into<SelectionMask>) -> Result<Self> {
        let valid = valid.into();
        if values.len() != valid.len() {
            return Err(Error::Schema(format!(
                "update batch has {} rows but a validity mask of length {}",
                values.len(),
                valid.len()
            )));
        }
        Ok(Self { values, valid })
    }

    pub fn all_valid(values: FieldBundle) -> Self {
        let valid = SelectionMask::all(values.len(), true);
        Self { values, valid }
    }

    pub fn values(&self) -> &FieldBundle {
        &self.values
    }

    pub fn valid(&self) -> &SelectionMask {
        &self.valid
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.len() == 0
    }

    pub fn row(&self, j: usize) -> RowRef<'_> {
        self.values.row_ref(j)
    }
}

/// Update slot `i` pairs with under rank-match, computed literally: one match
/// indicator per `(slot, update)` pair, reduced with a first-maximum argmax.
pub fn rank_match_all_pairs(target: &[bool], valid: &[bool]) -> Vec<Option<usize>> {
    let ra = compute_ranks(target);
    let rb = compute_ranks(valid);
    ra.iter()
        .map(|&r| {
            let matched: Vec<bool> = rb.iter().map(|&q| r != 0 && r == q).collect();
            let first = argmax_first(&matched);
            first.filter(|&j| matched[j])
        })
        .collect()
}

fn argmax_first(v: &[bool]) -> Option<usize> {
    if v.is_empty() {
        return None;
    }
    Some(v.iter().position(|&b| b).unwrap_or(0))
}

/// Same result as [`rank_match_all_pairs`]: the first update whose rank
/// equals the slot's rank is the first index where the inclusive prefix sum
/// of `valid` reaches that rank.
pub fn rank_match(target: &[bool], valid: &[bool]) -> Vec<Option<usize>> {
    let ra = compute_ranks(target);
    let mut acc = 0usize;
    let prefix: Vec<usize> = valid
        .iter()
        .map(|&v| {
            acc += v as usize;
            acc
        })
        .collect();
    ra.iter()
        .map(|&r| {
            if r == 0 || r > acc {
                return None;
            }
            let j = prefix.partition_point(|&c| c < r);
            (j < prefix.len() && prefix[j] == r).then_some(j)
        })
        .collect()
}

/// Front-compacted slot and update indices plus `r = min(p, q)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SortCount {
    pub slots: Vec<usize>,
    pub updates: Vec<usize>,
    pub r: usize,
}

pub fn sort_count(target: &[bool], valid: &[bool]) -> SortCount {
    let a = stable_partition(target);
    let b = stable_partition(valid);
    SortCount {
        r: a.count.min(b.count),
        slots: a.indices,
        updates: b.indices,
    }
}

/// Which pairing kernel a higher-level operation should use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PairingKernel {
    #[default]
    RankMatch,
    SortCountIterate,
}

/// `(slot, update)` pairs in ascending slot order.
pub fn pair_slots(kernel: PairingKernel, target: &[bool], valid: &[bool]) -> Vec<(usize, usize)> {
    match kernel {
        PairingKernel::RankMatch => rank_match(target, valid)
            .into_iter()
            .enumerate()
            .filter_map(|(i, j)| j.map(|j| (i, j)))
            .collect(),
        PairingKernel::SortCountIterate => {
            let sc = sort_count(target, valid);
            (0..sc.r).map(|k| (sc.slots[k], sc.updates[k])).collect()
        }
    }
}

fn check_mask(set: &AgentSet, mask: &[bool]) -> Result<()> {
    if mask.len() != set.capacity() {
        return Err(Error::Capacity(format!(
            "mask length {} does not match capacity {}",
            mask.len(),
            set.capacity()
        )));
    }
    Ok(())
}

/// Rank-match update: the k-th slot selected by `target_mask` receives
/// `apply(slot, k-th valid update)`. Every replacement is computed from the
/// input set, so slots do not observe one another.
pub fn set_agents_rm<F>(
    mut set: AgentSet,
    target_mask: &[bool],
    updates: &UpdateBatch,
    apply: F,
) -> Result<AgentSet>
where
    F: Fn(&SlotView<'_>, &RowRef<'_>) -> Row,
{
    check_mask(&set, target_mask)?;
    let rows: Vec<(usize, Row)> = rank_match(target_mask, updates.valid())
        .into_iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| (i, apply(&set.slot(i), &updates.row(j)))))
        .collect();
    for (i, row) in &rows {
        set.write_state(*i, row)?;
    }
    Ok(set)
}

/// Sort-count-iterate update with an order-independent `apply`; observably
/// identical to [`set_agents_rm`].
pub fn set_agents_sci<F>(
    set: AgentSet,
    target_mask: &[bool],
    updates: &UpdateBatch,
    apply: F,
) -> Result<AgentSet>
where
    F: Fn(&SlotView<'_>, &RowRef<'_>) -> Row,
{
    set_agents_sci_with(set, target_mask, updates, |slot, row, _| apply(slot, row))
}

/// Sort-count-iterate with access to the iteration index. Iteration `k`
/// pairs the k-th selected slot with the k-th valid update and sees the
/// effects of iterations `0..k` through the slot view.
pub fn set_agents_sci_with<F>(
    mut set: AgentSet,
    target_mask: &[bool],
    updates: &UpdateBatch,
    mut apply: F,
) -> Result<AgentSet>
where
    F: FnMut(&SlotView<'_>, &RowRef<'_>, usize) -> Row,
{
    check_mask(&set, target_mask)?;
    let sc = sort_count(target_mask, updates.valid());
    for k in 0..sc.r {
        let (i, j) = (sc.slots[k], sc.updates[k]);
        let row = apply(&set.slot(i), &updates.row(j), k);
        set.write_state(i, &row)?;
    }
    Ok(set)
}

/// Independent per-slot update on the slots flagged in `mask`.
pub fn set_agents_mask<F>(mut set: AgentSet, mask: &[bool], update_fn: F) -> Result<AgentSet>
where
    F: Fn(&SlotView<'_>) -> Row,
{
    check_mask(&set, mask)?;
    let rows: Vec<(usize, Row)> = mask
        .iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(i, _)| (i, update_fn(&set.slot(i))))
        .collect();
    for (i, row) in &rows {
        set.write_state(*i, row)?;
    }
    Ok(set)
}

#[derive(Clone, Debug)]
pub struct SpawnOutcome {
    pub set: AgentSet,
    /// `(slot, update row)` for every agent created, in slot order.
    pub pairs: Vec<(usize, usize)>,
    /// Valid update rows that found no free slot.
    pub dropped: usize,
}

/// Inserts the valid rows of `updates` as new agents into free slots.
///
/// The target mask is the set of placeholder slots; pairing follows `kernel`
/// so the k-th valid row lands in the k-th free slot. Rows beyond the number
/// of free slots are dropped and counted. New agents get fresh ids and age 0.
pub fn spawn_agents(mut set: AgentSet, updates: &UpdateBatch, kernel: PairingKernel) -> Result<SpawnOutcome> {
    let free: Vec<bool> = set.active().iter().map(|a| !a).collect();
    let pairs = pair_slots(kernel, &free, updates.valid());
    for &(slot, j) in &pairs {
        set.activate_slot(slot, &updates.row(j).to_row())?;
    }
    let dropped = updates.valid().popcount() - pairs.len();
    Ok(SpawnOutcome { set, pairs, dropped })
}

/// Sequential reference semantics for the pairing kernels.
pub mod reference {
    use super::*;

    /// Walks slots left to right collecting selected indices, walks updates
    /// left to right collecting valid rows, then applies the first
    /// `min(p, q)` pairs in order.
    pub fn oracle_paired_update<F>(
        mut set: AgentSet,
        target_mask: &[bool],
        updates: &UpdateBatch,
        apply: F,
    ) -> Result<AgentSet>
    where
        F: Fn(&SlotView<'_>, &RowRef<'_>) -> Row,
    {
        let mut slots = Vec::new();
        for (i, &m) in target_mask.iter().enumerate() {
            if m {
                slots.push(i);
            }
        }
        let mut rows = Vec::new();
        for (j, &v) in updates.valid().iter().enumerate() {
            if v {
                rows.push(j);
            }
        }
        for (&i, &j) in slots.iter().zip(&rows) {
            let row = apply(&set.slot(i), &updates.row(j));
            set.write_state(i, &row)?;
        }
        Ok(set)
    }
}
