//! The pairing toy: overwrite the even entries of `a` with the odd entries
//! of `b`, in order, until either side runs out.
//!
//! Prints the intermediate rank vectors and pairings so the two kernels can
//! be followed by hand.
//!
//! ```bash
//! cargo run -p abmx --example toy_rank_match
//! cargo run -p abmx --example toy_rank_match -- 8,1,6,6,3 5,2,7
//! ```

use abmx::kernels::{compute_ranks, rank_match, sort_count};
use abmx::toy::{format_list, parse_int_list, run_toy};

fn main() -> abmx::Result<()> {
    let mut args = std::env::args().skip(1);
    let a = parse_int_list(&args.next().unwrap_or_else(|| "2,3,4,6".into()))?;
    let b = parse_int_list(&args.next().unwrap_or_else(|| "1,4,3".into()))?;

    let target: Vec<bool> = a.iter().map(|v| v.rem_euclid(2) == 0).collect();
    let valid: Vec<bool> = b.iter().map(|v| v.rem_euclid(2) == 1).collect();
    println!("a = {}   b = {}", format_list(&a), format_list(&b));
    println!("target ranks  {:?}", compute_ranks(&target).as_slice());
    println!("update ranks  {:?}", compute_ranks(&valid).as_slice());

    let matched: Vec<String> = rank_match(&target, &valid)
        .iter()
        .map(|m| m.map_or("-".into(), |j| j.to_string()))
        .collect();
    println!("rank match    slot -> update {matched:?}");

    let sc = sort_count(&target, &valid);
    println!("sort count    slots {:?} updates {:?} r = {}", &sc.slots[..sc.r], &sc.updates[..sc.r], sc.r);

    let r = run_toy(&a, &b)?;
    println!("rank_match         a'={}", format_list(&r.rank_match));
    println!("sort_count_iterate a'={}", format_list(&r.sort_count_iterate));
    println!("oracle             a'={}", format_list(&r.oracle));
    Ok(())
}
