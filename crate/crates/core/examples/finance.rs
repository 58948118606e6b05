//! Five order books cleared by a uniform-price batch auction each step.
//!
//! First a single hand-built book is matched to show the auction, then the
//! full market runs for 100 steps and prints each book's price path.
//!
//! ```bash
//! cargo run --release -p abmx --example finance
//! ```

use abmx::kernels::UpdateBatch;
use abmx::models::finance::{init_market, match_book, order_rows, step_market, FinanceConfig, OrderBook, BUY, SELL};
use abmx::rng::RngState;

fn main() -> abmx::Result<()> {
    let orders = [
        (0, BUY, 101.0, 10, 0),
        (1, BUY, 100.0, 5, 0),
        (2, SELL, 99.0, 8, 0),
        (3, SELL, 102.0, 4, 0),
    ];
    let (book, _) = OrderBook::new(0, 8, 100.0)?.insert_orders(&UpdateBatch::all_valid(order_rows(&orders)?))?;
    let (after, trade) = match_book(book)?;
    println!("single auction: volume {} at {:?}", trade.volume, trade.price);
    for f in &trade.fills {
        println!("  trader {} {} {}", f.trader_id, if f.side == BUY { "bought" } else { "sold" }, f.qty);
    }
    println!("  resting afterwards: bid {:?} ask {:?}\n", after.best_bid(), after.best_ask());

    let cfg = FinanceConfig::default();
    let mut m = init_market(&cfg, RngState::new(7))?;
    println!("{:>5} {}", "step", (0..cfg.n_books).map(|b| format!("{:>10}", format!("book {b}"))).collect::<String>());
    for t in 0..100 {
        let (traders, books, steps) = step_market(m.traders, m.books, &cfg, m.seed, t)?;
        (m.traders, m.books, m.last) = (traders, books, steps);
        if (t + 1) % 10 == 0 {
            let prices: String = m.books.iter().map(|b| format!("{:>10.3}", b.last_price)).collect();
            println!("{:>5} {prices}", t + 1);
        }
    }
    Ok(())
}
