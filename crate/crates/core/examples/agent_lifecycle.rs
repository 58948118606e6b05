//! Create, step, remove and spawn on a fixed-capacity agent set, under both
//! id policies.
//!
//! ```bash
//! cargo run -p abmx --example agent_lifecycle
//! ```

use abmx::agents::{create_agents, remove_agents, step_agents, AgentSet, AgentSpec, FieldSpec, IdPolicy, Initializer};
use abmx::field::{Column, FieldBundle};
use abmx::kernels::{spawn_agents, PairingKernel, UpdateBatch};
use abmx::rng::RngState;

fn show(label: &str, set: &AgentSet) {
    let wealth = set.state().reals("wealth").unwrap();
    let slots: Vec<String> = (0..set.capacity())
        .map(|i| {
            if set.active()[i] {
                format!("#{}:{:.1}/{}", set.ids()[i], wealth[i], set.ages()[i])
            } else {
                "_".into()
            }
        })
        .collect();
    println!("{label:<10} [{}]", slots.join(" "));
}

fn run(policy: IdPolicy) -> abmx::Result<()> {
    println!("{policy:?}");
    let spec = AgentSpec::new(0)
        .state(FieldSpec::new("wealth", Initializer::UniformReal { lo: 0.0, hi: 10.0 }))
        .id_policy(policy);
    let set = create_agents(8, 5, &spec, RngState::new(3))?;
    show("created", &set);

    let shared = FieldBundle::from_columns([("rate", Column::Real(vec![1.5]))])?;
    let set = step_agents(
        set,
        |slot, shared| {
            let s = slot.state();
            let rate = shared.reals("rate").unwrap()[0];
            s.to_row().with("wealth", s.real("wealth") * rate)
        },
        &shared,
    )?;
    show("stepped", &set);

    let poor: Vec<bool> = set.state().reals("wealth").unwrap().iter().map(|&w| w < 6.0).collect();
    let set = remove_agents(set, &poor)?;
    show("culled", &set);

    let newcomers = FieldBundle::from_columns([("wealth", Column::Real(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]))])?;
    let out = spawn_agents(set, &UpdateBatch::all_valid(newcomers), PairingKernel::RankMatch)?;
    show("spawned", &out.set);
    println!("{:<10} {} births, {} dropped for lack of room\n", "", out.pairs.len(), out.dropped);
    Ok(())
}

fn main() -> abmx::Result<()> {
    run(IdPolicy::Monotonic)?;
    run(IdPolicy::Recycle)
}
