//! Noisy traders and multiple limit order books cleared by batch auction.
//!
//! Every step each trader may place one limit order per book. New orders go
//! into free order slots through the pairing kernel; books are then matched
//! independently with a uniform-price auction computed from cumulative share
//! sums over the price-sorted sides.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::agents::{create_agents, remove_agents, AgentSet, AgentSpec, FieldSpec};
use crate::batch::{Model, ReplicaConfig};
use crate::error::{Error, Result};
use crate::field::{Column, FieldBundle};
use crate::kernels::{set_agents_mask, spawn_agents, PairingKernel, UpdateBatch};
use crate::rng::RngState;

use super::{apply_override, parse_kv};

pub const BUY: i64 = 0;
pub const SELL: i64 = 1;

pub const TAG_ORDER: u64 = 0x0DE4;

#[derive(Clone, Debug, PartialEq)]
pub struct FinanceConfig {
    pub n_books: usize,
    pub n_traders: usize,
    pub book_capacity: usize,
    pub p_order: f64,
    /// Half-width of the relative price noise.
    pub delta: f64,
    pub qmax: i64,
    /// Resting orders at least this many steps old are cancelled.
    pub max_order_age: i64,
    pub initial_price: f64,
    pub initial_cash: f64,
    /// Order prices are rounded to multiples of this tick.
    pub tick: f64,
}

impl Default for FinanceConfig {
    fn default() -> Self {
        Self {
            n_books: 5,
            n_traders: 10,
            book_capacity: 1000,
            p_order: 0.5,
            delta: 0.05,
            qmax: 10,
            max_order_age: 20,
            initial_price: 100.0,
            initial_cash: 10_000.0,
            tick: 1.0 / 256.0,
        }
    }
}

impl FinanceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_books == 0 || self.book_capacity == 0 {
            return Err(Error::Config("n_books and book_capacity must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.p_order) {
            return Err(Error::Config(format!("p_order must lie in [0, 1], got {}", self.p_order)));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(Error::Config(format!("delta must lie in [0, 1), got {}", self.delta)));
        }
        if self.qmax < 1 || self.max_order_age < 1 {
            return Err(Error::Config("qmax and max_order_age must be at least 1".into()));
        }
        if !(self.initial_price > 0.0 && self.tick > 0.0) {
            return Err(Error::Config("initial_price and tick must be positive".into()));
        }
        Ok(())
    }

    pub fn apply_section(&mut self, section: &BTreeMap<String, String>) -> Result<()> {
        for (k, v) in section {
            match k.as_str() {
                "books" | "n_books" => self.n_books = parse_kv(k, v)?,
                "traders" | "n_traders" => self.n_traders = parse_kv(k, v)?,
                "book_capacity" => self.book_capacity = parse_kv(k, v)?,
                "p_order" => self.p_order = parse_kv(k, v)?,
                "delta" => self.delta = parse_kv(k, v)?,
                "qmax" => self.qmax = parse_kv(k, v)?,
                "max_order_age" => self.max_order_age = parse_kv(k, v)?,
                "initial_price" => self.initial_price = parse_kv(k, v)?,
                "initial_cash" => self.initial_cash = parse_kv(k, v)?,
                "tick" => self.tick = parse_kv(k, v)?,
                _ => return Err(Error::Config(format!("unknown [finance] key `{k}`"))),
            }
        }
        self.validate()
    }

    fn round_to_tick(&self, price: f64) -> f64 {
        ((price / self.tick).round() * self.tick).max(self.tick)
    }
}

fn order_spec() -> AgentSpec {
    AgentSpec::new(1)
        .state(FieldSpec::constant("trader_id", 0i64))
        .state(FieldSpec::constant("side", 0i64))
        .state(FieldSpec::constant("price", 0.0))
        .state(FieldSpec::constant("qty", 0i64))
        .state(FieldSpec::constant("placed_step", 0i64))
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrderBook {
    pub book_id: usize,
    pub orders: AgentSet,
    pub last_price: f64,
}

impl OrderBook {
    pub fn new(book_id: usize, capacity: usize, last_price: f64) -> Result<Self> {
        Ok(Self {
            book_id,
            orders: create_agents(capacity, 0, &order_spec(), RngState::new(0))?,
            last_price,
        })
    }

    fn col_i(&self, name: &str) -> &[i64] {
        self.orders.state().ints(name).unwrap()
    }

    pub fn prices(&self) -> &[f64] {
        self.orders.state().reals("price").unwrap()
    }

    pub fn quantities(&self) -> &[i64] {
        self.col_i("qty")
    }

    pub fn sides(&self) -> &[i64] {
        self.col_i("side")
    }

    pub fn trader_ids(&self) -> &[i64] {
        self.col_i("trader_id")
    }

    pub fn placed_steps(&self) -> &[i64] {
        self.col_i("placed_step")
    }

    /// Live order slots on `side`.
    pub fn side_slots(&self, side: i64) -> Vec<usize> {
        let sides = self.sides();
        self.orders.active_slots().filter(|&i| sides[i] == side).collect()
    }

    /// Live slots of `side` in priority order: best price first, then
    /// earlier `placed_step`, then lower order id.
    pub fn priority_order(&self, side: i64) -> Vec<usize> {
        let (price, step, id) = (self.prices(), self.placed_steps(), self.orders.ids());
        let mut slots = self.side_slots(side);
        slots.sort_by(|&a, &b| {
            let by_price = if side == BUY {
                price[b].total_cmp(&price[a])
            } else {
                price[a].total_cmp(&price[b])
            };
            by_price.then(step[a].cmp(&step[b])).then(id[a].cmp(&id[b]))
        });
        slots
    }

    pub fn best_bid(&self) -> Option<f64> {
        self.priority_order(BUY).first().map(|&i| self.prices()[i])
    }

    pub fn best_ask(&self) -> Option<f64> {
        self.priority_order(SELL).first().map(|&i| self.prices()[i])
    }

    pub fn is_crossed(&self) -> bool {
        matches!((self.best_bid(), self.best_ask()), (Some(b), Some(a)) if b >= a)
    }

    /// Inserts the valid rows of `batch` as resting orders; also returns the
    /// number dropped for lack of free slots.
    pub fn insert_orders(mut self, batch: &UpdateBatch) -> Result<(Self, usize)> {
        let out = spawn_agents(self.orders, batch, PairingKernel::RankMatch)?;
        self.orders = out.set;
        Ok((self, out.dropped))
    }
}

/// A new order row with the book's order schema.
pub fn order_rows(orders: &[(i64, i64, f64, i64, i64)]) -> Result<FieldBundle> {
    FieldBundle::from_columns([
        ("trader_id", Column::Int(orders.iter().map(|o| o.0).collect())),
        ("side", Column::Int(orders.iter().map(|o| o.1).collect())),
        ("price", Column::Real(orders.iter().map(|o| o.2).collect())),
        ("qty", Column::Int(orders.iter().map(|o| o.3).collect())),
        ("placed_step", Column::Int(orders.iter().map(|o| o.4).collect())),
    ])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fill {
    pub trader_id: i64,
    pub side: i64,
    pub qty: i64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TradeSummary {
    pub book_id: usize,
    pub volume: i64,
    /// Clearing price when `volume > 0`.
    pub price: Option<f64>,
    pub fills: Vec<Fill>,
}

/// Maximum executable volume between two priority-sorted sides given as
/// `(price, qty)` lists; also returns the marginal buy and sell positions.
///
/// For every buy depth `i` the deepest sell level with price at most the
/// buy price is found by binary search; the volume is the largest
/// `min(C_buy[i], C_sell[j])` over those feasible pairs.
pub fn crossing_volume(buys: &[(f64, i64)], sells: &[(f64, i64)]) -> (i64, Option<(usize, usize)>) {
    let cumsum = |side: &[(f64, i64)]| -> Vec<i64> {
        side.iter()
            .scan(0i64, |acc, &(_, q)| {
                *acc += q;
                Some(*acc)
            })
            .collect()
    };
    let (cb, cs) = (cumsum(buys), cumsum(sells));
    let mut volume = 0;
    for (i, &(bp, _)) in buys.iter().enumerate() {
        let depth = sells.partition_point(|&(sp, _)| sp <= bp);
        if depth > 0 {
            volume = volume.max(cb[i].min(cs[depth - 1]));
        }
    }
    if volume == 0 {
        return (0, None);
    }
    let mb = cb.partition_point(|&c| c < volume);
    let ms = cs.partition_point(|&c| c < volume);
    (volume, Some((mb, ms)))
}

/// Clears one book.
///
/// Buys are ranked by price descending and sells ascending (ties by
/// `placed_step`, then id). The executed volume `V` is the largest depth
/// at which cumulative demand meets cumulative supply at crossing prices.
/// Orders fill in priority order up to `V`, the marginal order on each side
/// possibly partially, at the midpoint of the two marginal prices. Filled
/// orders are removed.
pub fn match_book(book: OrderBook) -> Result<(OrderBook, TradeSummary)> {
    let mut book = book;
    let buys = book.priority_order(BUY);
    let sells = book.priority_order(SELL);
    let (price, qty) = (book.prices(), book.quantities());
    let levels = |slots: &[usize]| -> Vec<(f64, i64)> { slots.iter().map(|&i| (price[i], qty[i])).collect() };
    let (volume, margins) = crossing_volume(&levels(&buys), &levels(&sells));
    let mut summary = TradeSummary {
        book_id: book.book_id,
        ..TradeSummary::default()
    };
    let Some((mb, ms)) = margins else {
        return Ok((book, summary));
    };
    let clearing = 0.5 * (price[buys[mb]] + price[sells[ms]]);

    let mut remaining = vec![0i64; book.orders.capacity()];
    let mut touched = vec![false; book.orders.capacity()];
    let trader = book.trader_ids();
    for (slots, side) in [(&buys, BUY), (&sells, SELL)] {
        let mut left = volume;
        for &i in slots.iter() {
            if left == 0 {
                break;
            }
            let q = qty[i].min(left);
            left -= q;
            touched[i] = true;
            remaining[i] = qty[i] - q;
            summary.fills.push(Fill {
                trader_id: trader[i],
                side,
                qty: q,
            });
        }
    }
    let filled: Vec<bool> = touched.iter().zip(&remaining).map(|(&t, &r)| t && r == 0).collect();
    let partial: Vec<bool> = touched.iter().zip(&remaining).map(|(&t, &r)| t && r > 0).collect();
    let orders = set_agents_mask(book.orders, &partial, |v| v.state().to_row().with("qty", remaining[v.slot()]))?;
    book.orders = remove_agents(orders, &filled)?;
    book.last_price = clearing;
    summary.volume = volume;
    summary.price = Some(clearing);
    Ok((book, summary))
}

/// Traders with cash and one holdings column per book.
pub fn create_traders(cfg: &FinanceConfig) -> Result<AgentSet> {
    let mut spec = AgentSpec::new(0)
        .state(FieldSpec::constant("cash", cfg.initial_cash))
        .param(FieldSpec::constant("delta", cfg.delta))
        .param(FieldSpec::constant("qmax", cfg.qmax));
    for b in 0..cfg.n_books {
        spec = spec.state(FieldSpec::constant(holdings_field(b), 0i64));
    }
    create_agents(cfg.n_traders.max(1), cfg.n_traders, &spec, RngState::new(0))
}

pub fn holdings_field(book: usize) -> String {
    format!("holdings_{book}")
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PlaceReport {
    pub placed: usize,
    pub dropped: usize,
}

/// Each trader places at most one order per book.
///
/// Trader slot `k` on book `b` draws, in order, from
/// `seed.fork(&[TAG_ORDER, t, b, k])`: participation (probability
/// `p_order`), side (uniform), noise `eps` uniform in `[-delta, delta)`,
/// quantity uniform in `1..=qmax`. The price is `last_price * (1 + eps)`
/// rounded to the tick.
pub fn place_orders(
    traders: &AgentSet,
    books: Vec<OrderBook>,
    cfg: &FinanceConfig,
    seed: RngState,
    t: u64,
) -> Result<(Vec<OrderBook>, Vec<PlaceReport>)> {
    let n = traders.capacity();
    let mut reports = Vec::with_capacity(books.len());
    let mut out = Vec::with_capacity(books.len());
    for book in books {
        let mut rows = Vec::with_capacity(n);
        let mut valid = Vec::with_capacity(n);
        for k in 0..n {
            let view = traders.slot(k);
            if !view.is_active() {
                rows.push((view.id(), BUY, book.last_price, 1, t as i64));
                valid.push(false);
                continue;
            }
            let params = view.params();
            let mut s = seed.fork(&[TAG_ORDER, t, book.book_id as u64, k as u64]).stream();
            let place = s.bernoulli(cfg.p_order);
            let side = s.below(2) as i64;
            let delta = params.real("delta");
            let eps = if delta > 0.0 { s.range_f64(-delta, delta) } else { 0.0 };
            let qty = s.range_i64(1, params.int("qmax") + 1);
            let price = cfg.round_to_tick(book.last_price * (1.0 + eps));
            rows.push((view.id(), side, price, qty, t as i64));
            valid.push(place);
        }
        let placed = valid.iter().filter(|&&v| v).count();
        let batch = UpdateBatch::new(order_rows(&rows)?, valid)?;
        let (book, dropped) = book.insert_orders(&batch)?;
        reports.push(PlaceReport { placed, dropped });
        out.push(book);
    }
    Ok((out, reports))
}

/// Applies trade summaries to trader cash and holdings, folding books in
/// ascending `book_id`.
pub fn settle(mut traders: AgentSet, summaries: &[TradeSummary]) -> Result<AgentSet> {
    let mut ordered: Vec<&TradeSummary> = summaries.iter().collect();
    ordered.sort_by_key(|s| s.book_id);
    let slot_of: BTreeMap<i64, usize> = traders.active_slots().map(|i| (traders.ids()[i], i)).collect();
    for s in ordered {
        let Some(price) = s.price else { continue };
        let mut net = vec![0i64; traders.capacity()];
        for f in &s.fills {
            let slot = *slot_of
                .get(&f.trader_id)
                .ok_or_else(|| Error::Contract(format!("fill for unknown trader {}", f.trader_id)))?;
            net[slot] += if f.side == BUY { f.qty } else { -f.qty };
        }
        let field = holdings_field(s.book_id);
        let state = traders.state_mut();
        let holdings = state
            .ints_mut(&field)
            .ok_or_else(|| Error::Schema(format!("traders have no `{field}` column")))?;
        for (h, n) in holdings.iter_mut().zip(&net) {
            *h += n;
        }
        let cash = state.reals_mut("cash").unwrap();
        for (c, &n) in cash.iter_mut().zip(&net) {
            if n != 0 {
                *c -= n as f64 * price;
            }
        }
    }
    Ok(traders)
}

/// Cancels resting orders that are at least `max_age` steps old at `t`.
pub fn expire_orders(mut book: OrderBook, t: u64, max_age: i64) -> Result<OrderBook> {
    let stale: Vec<bool> = book
        .placed_steps()
        .iter()
        .zip(book.orders.active())
        .map(|(&p, &a)| a && t as i64 - p >= max_age)
        .collect();
    book.orders = remove_agents(book.orders, &stale)?;
    Ok(book)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BookStep {
    pub placed: PlaceReport,
    pub trade: TradeSummary,
}

/// Place, match every book in parallel, settle, then expire stale orders.
pub fn step_market(
    traders: AgentSet,
    books: Vec<OrderBook>,
    cfg: &FinanceConfig,
    seed: RngState,
    t: u64,
) -> Result<(AgentSet, Vec<OrderBook>, Vec<BookStep>)> {
    let (books, placed) = place_orders(&traders, books, cfg, seed, t)?;
    let matched: Vec<(OrderBook, TradeSummary)> =
        books.into_par_iter().map(match_book).collect::<Result<_>>()?;
    let (books, trades): (Vec<_>, Vec<_>) = matched.into_iter().unzip();
    let traders = settle(traders, &trades)?;
    let books = books
        .into_iter()
        .map(|b| expire_orders(b, t + 1, cfg.max_order_age))
        .collect::<Result<Vec<_>>>()?;
    let steps = placed
        .into_iter()
        .zip(trades)
        .map(|(placed, trade)| BookStep { placed, trade })
        .collect();
    Ok((traders, books, steps))
}

#[derive(Clone, Debug)]
pub struct MarketState {
    pub config: FinanceConfig,
    pub traders: AgentSet,
    pub books: Vec<OrderBook>,
    pub last: Vec<BookStep>,
    pub seed: RngState,
}

pub fn init_market(cfg: &FinanceConfig, seed: RngState) -> Result<MarketState> {
    cfg.validate()?;
    let books = (0..cfg.n_books)
        .map(|b| OrderBook::new(b, cfg.book_capacity, cfg.initial_price))
        .collect::<Result<Vec<_>>>()?;
    Ok(MarketState {
        config: cfg.clone(),
        traders: create_traders(cfg)?,
        last: vec![BookStep::default(); books.len()],
        books,
        seed,
    })
}

#[derive(Clone, Debug, Default)]
pub struct FinanceModel {
    pub config: FinanceConfig,
}

impl FinanceModel {
    pub fn new(config: FinanceConfig) -> Self {
        Self { config }
    }
}

impl Model for FinanceModel {
    type State = MarketState;

    fn name(&self) -> &str {
        "finance"
    }

    fn metric_columns(&self) -> Vec<String> {
        ["book_id", "price", "n_active_buys", "n_active_sells", "volume", "orders_dropped"]
            .map(String::from)
            .to_vec()
    }

    fn init(&self, replica: &ReplicaConfig) -> Result<Self::State> {
        let mut cfg = self.config.clone();
        let params = &replica.model_params;
        if !params.is_empty() {
            for (name, _) in params.columns() {
                let v = params.row_ref(0).get(name).unwrap();
                match name {
                    "p_order" => apply_override(&mut cfg.p_order, name, v)?,
                    "delta" => apply_override(&mut cfg.delta, name, v)?,
                    "initial_price" => apply_override(&mut cfg.initial_price, name, v)?,
                    _ => return Err(Error::Config(format!("unknown finance override `{name}`"))),
                }
            }
        }
        init_market(&cfg, replica.seed)
    }

    fn step(&self, s: Self::State, t: u64) -> Result<Self::State> {
        let (traders, books, last) = step_market(s.traders, s.books, &s.config, s.seed, t)?;
        Ok(MarketState {
            traders,
            books,
            last,
            ..s
        })
    }

    fn metrics(&self, s: &Self::State) -> Vec<Vec<f64>> {
        s.books
            .iter()
            .zip(&s.last)
            .map(|(b, step)| {
                vec![
                    b.book_id as f64,
                    b.last_price,
                    b.side_slots(BUY).len() as f64,
                    b.side_slots(SELL).len() as f64,
                    step.trade.volume as f64,
                    step.placed.dropped as f64,
                ]
            })
            .collect()
    }
}
