//! Counter-based random streams: the same fork path always yields the same
//! numbers, regardless of how many other streams were drawn before.
//!
//! ```bash
//! cargo run -p abmx --example rng_streams
//! ```

use abmx::batch::replica_seeds;
use abmx::rng::RngState;

fn main() {
    let root = RngState::new(2024);
    let draw = |path: &[u64]| {
        let mut s = root.fork(path).stream();
        (0..4).map(|_| s.below(100)).collect::<Vec<_>>()
    };

    println!("fork [1, 7]    {:?}", draw(&[1, 7]));
    println!("fork [1, 8]    {:?}", draw(&[1, 8]));
    println!("fork [2, 7]    {:?}", draw(&[2, 7]));
    println!("fork [1, 7]    {:?}  (again)", draw(&[1, 7]));

    println!("\nreplica seeds for master 2024:");
    for (k, seed) in replica_seeds(2024, 4).into_iter().enumerate() {
        let mut s = seed.stream();
        println!("  replica {k}: key {:#018x} first draws {:.4} {:.4}", seed.key(), s.next_f64(), s.next_f64());
    }

    let mut s = root.fork(&[9]).stream();
    println!("\nfive distinct picks from 0..10: {:?}", s.choose_distinct(10, 5));
}
