//! Selection and stable sorting on one small population, with ranks counted
//! per cell.
//!
//! ```bash
//! cargo run -p abmx --example select_and_sort
//! ```

use abmx::agents::{create_agents, remove_agents, AgentSpec, FieldSpec, Initializer};
use abmx::kernels::{compute_group_ranks, placeholder_pinned_key, select_agents, sort_agents, SortDirection};
use abmx::rng::RngState;

fn main() -> abmx::Result<()> {
    let spec = AgentSpec::new(0)
        .state(FieldSpec::new("cell", Initializer::UniformInt { lo: 0, hi: 3 }))
        .state(FieldSpec::new("score", Initializer::UniformInt { lo: 0, hi: 5 }));
    let set = create_agents(12, 12, &spec, RngState::new(11))?;
    let kill: Vec<bool> = (0..12).map(|i| i % 5 == 4).collect();
    let set = remove_agents(set, &kill)?;

    let cells = set.state().ints("cell").unwrap().to_vec();
    let scores = set.state().ints("score").unwrap().to_vec();
    println!("slot   {:?}", (0..12).collect::<Vec<_>>());
    println!("active {:?}", set.active().iter().map(|&a| a as u8).collect::<Vec<_>>());
    println!("cell   {cells:?}");
    println!("score  {scores:?}");

    let high = select_agents(&set, |a| a.is_active() && a.state().int("score") >= 2);
    println!("\nscore >= 2 selects {:?}", high.selected());

    let groups: Vec<usize> = cells.iter().map(|&c| c as usize).collect();
    let ranks = compute_group_ranks(set.active(), &groups, 3);
    println!("rank within cell   {:?}", ranks.as_slice());

    let raw: Vec<f64> = scores.iter().map(|&s| s as f64).collect();
    let key = placeholder_pinned_key(&set, &raw, SortDirection::Descending);
    let sorted = sort_agents(set.clone(), &key, SortDirection::Descending)?;
    println!("\nsorted by score, ties in slot order, placeholders last:");
    println!("ids    {:?}", sorted.ids());
    println!("score  {:?}", sorted.state().ints("score").unwrap());
    Ok(())
}
