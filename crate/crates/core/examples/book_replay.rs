//! Replay a handful of hand-written events, then a synthetic stock-day, and
//! show the book state and block statistics.
//!
//! cargo run --example book_replay

use lobcast::book::{block_stream, mid_price, EventKind, LobEvent, OrderBook, Side};
use lobcast::synth::{generate_stock, MarketConfig};

fn ev(t: i64, kind: EventKind, side: Side, price: i64, volume: u64, order_ref: u64) -> LobEvent {
    LobEvent {
        timestamp: t,
        kind,
        side,
        price,
        volume,
        order_ref,
    }
}

fn main() -> lobcast::Result<()> {
    let mut book = OrderBook::new();
    let events = [
        ev(1, EventKind::Submit, Side::Ask, 1002, 100, 1),
        ev(2, EventKind::Submit, Side::Ask, 1003, 80, 2),
        ev(3, EventKind::Submit, Side::Bid, 1000, 120, 3),
        // Crosses the best ask: 100 trade, 50 rests as the new best bid.
        ev(4, EventKind::Submit, Side::Bid, 1002, 150, 4),
    ];
    for e in &events {
        let out = book.apply(e)?;
        let snap = book.snapshot();
        println!(
            "t={} {:?} {:?} @{} x{} -> depth changed: {}, best bid {:?}, best ask {:?}",
            e.timestamp,
            e.kind,
            e.side,
            e.price,
            e.volume,
            out.depth_changed,
            snap.best_bid(),
            snap.best_ask()
        );
    }
    println!("mid = {:.4}", mid_price(&book.snapshot(), 0.01)?);

    let cfg = MarketConfig {
        stocks: 1,
        days: 1,
        ..Default::default()
    };
    let day = &generate_stock(&cfg, 0)?[0];
    let blocks = block_stream(day);
    let s = &blocks.stats;
    println!(
        "\n{}: {} events, {} depth-changing, {} rejected, {} blocks of ten",
        blocks.key,
        s.events,
        s.depth_changing,
        s.rejected,
        blocks.blocks.len()
    );
    let last = blocks.blocks.last().expect("non-empty day");
    println!("final snapshot:");
    for (a, b) in last.snapshot_after.asks.iter().zip(&last.snapshot_after.bids).take(5) {
        println!("  bid {:>6} x {:<5}  ask {:>6} x {:<5}", b.price, b.volume, a.price, a.volume);
    }
    Ok(())
}
