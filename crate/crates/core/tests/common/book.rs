use std::collections::HashMap;

use abmx::kernels::UpdateBatch;
use abmx::models::finance::{order_rows, OrderBook, BUY};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

pub type Order = (i64, i64, f64, i64, i64); // trader, side, price, qty, placed_step

pub fn book_of(orders: &[Order], capacity: usize) -> OrderBook {
    let (book, dropped) = OrderBook::new(0, capacity, 100.0)
        .unwrap()
        .insert_orders(&UpdateBatch::all_valid(order_rows(orders).unwrap()))
        .unwrap();
    assert_eq!(dropped, 0);
    book
}

/// Every live order of one side as `(id, price, qty, placed_step)`, sorted
/// into price-time priority by a plain comparison sort.
pub fn ranked(book: &OrderBook, side: i64) -> Vec<(i64, f64, i64, i64)> {
    let mut v: Vec<_> = book
        .orders
        .active_slots()
        .filter(|&i| book.sides()[i] == side)
        .map(|i| (book.orders.ids()[i], book.prices()[i], book.quantities()[i], book.placed_steps()[i]))
        .collect();
    v.sort_by(|a, b| {
        let p = if side == BUY { b.1.partial_cmp(&a.1) } else { a.1.partial_cmp(&b.1) };
        p.unwrap().then(a.3.cmp(&b.3)).then(a.0.cmp(&b.0))
    });
    v
}

/// Expands both sides into unit shares and returns the largest `v` for
/// which the v-th buy unit is priced at or above the v-th sell unit.
pub fn brute_volume(buys: &[(i64, f64, i64, i64)], sells: &[(i64, f64, i64, i64)]) -> i64 {
    let units = |side: &[(i64, f64, i64, i64)]| -> Vec<f64> {
        side.iter().flat_map(|o| std::iter::repeat_n(o.1, o.2 as usize)).collect()
    };
    let (bu, su) = (units(buys), units(sells));
    let mut best = 0;
    for v in 1..=bu.len().min(su.len()) {
        if bu[v - 1] >= su[v - 1] {
            best = v as i64;
        }
    }
    best
}

/// Fill per order id when the first `v` units of a ranked side trade.
pub fn brute_fills(side: &[(i64, f64, i64, i64)], v: i64) -> HashMap<i64, i64> {
    let mut left = v;
    let mut out = HashMap::new();
    for o in side {
        let q = o.2.min(left);
        if q > 0 {
            out.insert(o.0, q);
        }
        left -= q;
    }
    out
}

pub fn random_orders() -> impl Strategy<Value = Vec<Order>> {
    prop::collection::vec((0i64..8, 0i64..2, 95 * 4i64..=105 * 4, 1i64..=10, 0i64..5), 0..=64)
        .prop_map(|v| v.into_iter().map(|(t, s, p, q, st)| (t, s, p as f64 / 4.0, q, st)).collect())
}

pub fn exact_sum(xs: impl Iterator<Item = f64>) -> BigRational {
    xs.map(|x| BigRational::from_float(x).unwrap())
        .fold(BigRational::from_integer(BigInt::from(0)), |a, b| a + b)
}
