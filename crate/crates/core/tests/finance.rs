mod common;

use std::collections::HashMap;

use abmx::batch::{replica_seeds, run_batch, ReplicaConfig, Threads};
use abmx::models::finance::{
    create_traders, holdings_field, match_book, place_orders, step_market, FinanceConfig, FinanceModel,
    OrderBook, BUY, SELL, TAG_ORDER,
};
use abmx::rng::RngState;
use common::book::{book_of, brute_fills, brute_volume, exact_sum, random_orders, ranked, Order};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn batch_auction_matches_brute_force(orders in random_orders()) {
        let book = book_of(&orders, 64);
        let (buys, sells) = (ranked(&book, BUY), ranked(&book, SELL));
        let v = brute_volume(&buys, &sells);
        let (after, summary) = match_book(book.clone()).unwrap();
        prop_assert_eq!(summary.volume, v);
        prop_assert!(!after.is_crossed());

        let bought: i64 = summary.fills.iter().filter(|f| f.side == BUY).map(|f| f.qty).sum();
        let sold: i64 = summary.fills.iter().filter(|f| f.side == SELL).map(|f| f.qty).sum();
        prop_assert_eq!(bought, v);
        prop_assert_eq!(sold, v);

        let expect: HashMap<i64, i64> = brute_fills(&buys, v).into_iter().chain(brute_fills(&sells, v)).collect();
        let before_qty: HashMap<i64, i64> = buys.iter().chain(&sells).map(|o| (o.0, o.2)).collect();
        let after_qty: HashMap<i64, i64> = after
            .orders
            .active_slots()
            .map(|i| (after.orders.ids()[i], after.quantities()[i]))
            .collect();
        for (id, q0) in &before_qty {
            let filled = expect.get(id).copied().unwrap_or(0);
            prop_assert!(filled <= *q0);
            let left = q0 - filled;
            prop_assert_eq!(after_qty.get(id).copied().unwrap_or(0), left);
            if left == 0 {
                prop_assert!(!after_qty.contains_key(id));
            }
        }
        prop_assert!(after_qty.values().all(|&q| q > 0));

        match summary.price {
            Some(p) => {
                let last_buy = buys.iter().scan(0, |c, o| { *c += o.2; Some((*c, o.1)) }).find(|&(c, _)| c >= v).unwrap().1;
                let last_sell = sells.iter().scan(0, |c, o| { *c += o.2; Some((*c, o.1)) }).find(|&(c, _)| c >= v).unwrap().1;
                prop_assert_eq!(p, 0.5 * (last_buy + last_sell));
                prop_assert!(last_sell <= p && p <= last_buy);
                prop_assert_eq!(after.last_price, p);
            }
            None => {
                prop_assert_eq!(v, 0);
                prop_assert!(after.orders.bits_eq(&book.orders));
            }
        }
    }
}

#[test]
fn worked_auction() {
    let book = book_of(&[(0, BUY, 101.0, 10, 0), (1, BUY, 100.0, 5, 0), (2, SELL, 99.0, 8, 0), (3, SELL, 102.0, 4, 0)], 8);
    let (after, s) = match_book(book).unwrap();
    assert_eq!(s.volume, 8);
    assert_eq!(s.price, Some(100.0));
    let left: Vec<(f64, i64)> = after.orders.active_slots().map(|i| (after.prices()[i], after.quantities()[i])).collect();
    assert_eq!(left, vec![(101.0, 2), (100.0, 5), (102.0, 4)]);
}

#[test]
fn one_sided_book_does_not_trade() {
    let book = book_of(&[(0, BUY, 101.0, 10, 0), (1, BUY, 100.0, 5, 0)], 4);
    let (after, s) = match_book(book.clone()).unwrap();
    assert_eq!(s.volume, 0);
    assert!(after.orders.bits_eq(&book.orders));
}

#[test]
fn placed_orders_replay_the_streams() {
    let cfg = FinanceConfig::default();
    let traders = create_traders(&cfg).unwrap();
    let seed = RngState::new(42);
    let t = 3;
    let books: Vec<OrderBook> = (0..cfg.n_books).map(|b| OrderBook::new(b, 100, 100.0).unwrap()).collect();
    let (books, reports) = place_orders(&traders, books, &cfg, seed, t).unwrap();
    for (b, book) in books.iter().enumerate() {
        let mut expect = Vec::new();
        for k in 0..cfg.n_traders {
            let mut s = seed.fork(&[TAG_ORDER, t, b as u64, k as u64]).stream();
            let go = s.bernoulli(cfg.p_order);
            let side = s.below(2) as i64;
            let eps = s.range_f64(-cfg.delta, cfg.delta);
            let qty = s.range_i64(1, cfg.qmax + 1);
            let price = (100.0 * (1.0 + eps) * 256.0).round() / 256.0;
            if go {
                expect.push((k as i64, side, price, qty, t as i64));
            }
        }
        let got: Vec<Order> = book
            .orders
            .active_slots()
            .map(|i| (book.trader_ids()[i], book.sides()[i], book.prices()[i], book.quantities()[i], book.placed_steps()[i]))
            .collect();
        assert_eq!(got, expect);
        assert_eq!(reports[b].placed, expect.len());
        assert_eq!(reports[b].dropped, 0);
    }
}

#[test]
fn silent_traders_leave_books_alone() {
    let cfg = FinanceConfig { p_order: 0.0, ..FinanceConfig::default() };
    let traders = create_traders(&cfg).unwrap();
    let books: Vec<OrderBook> = (0..cfg.n_books).map(|b| OrderBook::new(b, 10, 100.0).unwrap()).collect();
    let (after, reports) = place_orders(&traders, books.clone(), &cfg, RngState::new(1), 0).unwrap();
    assert_eq!(after, books);
    assert!(reports.iter().all(|r| r.placed == 0));
}

#[test]
fn full_book_drops_orders() {
    let cfg = FinanceConfig { p_order: 1.0, n_books: 1, ..FinanceConfig::default() };
    let traders = create_traders(&cfg).unwrap();
    let filler: Vec<Order> = (0..4).map(|k| (k, BUY, 50.0, 1, 0)).collect();
    let book = book_of(&filler, 4);
    let (after, reports) = place_orders(&traders, vec![book.clone()], &cfg, RngState::new(1), 0).unwrap();
    assert_eq!(after[0], book);
    assert_eq!(reports[0].placed, cfg.n_traders);
    assert_eq!(reports[0].dropped, cfg.n_traders);
}

#[test]
fn market_conserves_shares_and_cash() {
    let cfg = FinanceConfig { n_books: 4, n_traders: 12, ..FinanceConfig::default() };
    let seed = RngState::new(2024);
    let mut traders = create_traders(&cfg).unwrap();
    let mut books: Vec<OrderBook> = (0..cfg.n_books).map(|b| OrderBook::new(b, cfg.book_capacity, 100.0).unwrap()).collect();
    let cash0 = exact_sum(traders.state().reals("cash").unwrap().iter().copied());
    let mut traded = 0;
    for t in 0..150 {
        let (tr, bk, steps) = step_market(traders, books, &cfg, seed, t).unwrap();
        traders = tr;
        books = bk;
        for (b, s) in steps.iter().enumerate() {
            let bought: i64 = s.trade.fills.iter().filter(|f| f.side == BUY).map(|f| f.qty).sum();
            let sold: i64 = s.trade.fills.iter().filter(|f| f.side == SELL).map(|f| f.qty).sum();
            assert_eq!(bought, s.trade.volume);
            assert_eq!(sold, s.trade.volume);
            traded += s.trade.volume;
            let h: i64 = traders.state().ints(&holdings_field(b)).unwrap().iter().sum();
            assert_eq!(h, 0);
            assert!(!books[b].is_crossed());
            assert!(books[b].orders.active_slots().all(|i| books[b].quantities()[i] > 0));
        }
        assert_eq!(exact_sum(traders.state().reals("cash").unwrap().iter().copied()), cash0);
    }
    assert!(traded > 0);
}

#[test]
fn books_start_at_100_and_diverge() {
    let model = FinanceModel::new(FinanceConfig::default());
    let configs: Vec<_> = replica_seeds(7, 1).into_iter().map(ReplicaConfig::new).collect();
    let traj = run_batch(&model, &configs, 100, Threads::Fixed(1)).unwrap();
    assert_eq!(traj.rows.len(), 100);
    let first = &traj.rows[0].records;
    assert_eq!(first.len(), 5);
    for rec in first {
        assert!((rec[1] - 100.0).abs() <= 100.0 * 0.05 + 1e-9);
    }
    let last: Vec<f64> = traj.rows[99].records.iter().map(|r| r[1]).collect();
    let spread = last.iter().cloned().fold(f64::MIN, f64::max) - last.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread > 1.0, "final prices {last:?}");
}

#[test]
fn zero_traders_keep_prices_constant() {
    let model = FinanceModel::new(FinanceConfig { n_traders: 0, ..FinanceConfig::default() });
    let traj = run_batch(&model, &[ReplicaConfig::new(RngState::new(1))], 20, Threads::Fixed(1)).unwrap();
    assert!(traj.rows.iter().flat_map(|r| &r.records).all(|rec| rec[1] == 100.0 && rec[4] == 0.0));
}
