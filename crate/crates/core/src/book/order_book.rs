//! Order-level book state with price-time priority matching.

use std::collections::{BTreeMap, HashMap, VecDeque};

use super::event::{EventKind, LobEvent, Side};
use crate::error::{Error, Result};

/// Number of visible levels per side.
pub const DEPTH: usize = 10;

/// One aggregated price level. A level with zero volume is padding for a
/// side shallower than [`DEPTH`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct Level {
    pub price: i64,
    pub volume: u64,
}

impl Level {
    pub const PADDED: Level = Level {
        price: 0,
        volume: 0,
    };

    #[inline]
    pub fn is_padded(&self) -> bool {
        self.volume == 0
    }
}

/// Visible 10-level view of the book. Asks ascend, bids descend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BookSnapshot {
    pub timestamp: i64,
    pub asks: [Level; DEPTH],
    pub bids: [Level; DEPTH],
}

impl BookSnapshot {
    pub fn empty(timestamp: i64) -> Self {
        Self {
            timestamp,
            asks: [Level::PADDED; DEPTH],
            bids: [Level::PADDED; DEPTH],
        }
    }

    pub fn best_ask(&self) -> Option<Level> {
        Some(self.asks[0]).filter(|l| !l.is_padded())
    }

    pub fn best_bid(&self) -> Option<Level> {
        Some(self.bids[0]).filter(|l| !l.is_padded())
    }

    /// Mid price in ticks (may be a half tick).
    pub fn mid_ticks(&self) -> Result<f64> {
        match (self.best_ask(), self.best_bid()) {
            (Some(a), Some(b)) => Ok((a.price + b.price) as f64 / 2.0),
            _ => Err(Error::UndefinedMid),
        }
    }

    /// Checks ordering, crossing and padding invariants. Returns a
    /// description of the first violation.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        fn side(levels: &[Level; DEPTH], ascending: bool, name: &str) -> std::result::Result<(), String> {
            let populated = levels.iter().take_while(|l| !l.is_padded()).count();
            if levels[populated..].iter().any(|l| *l != Level::PADDED) {
                return Err(format!("{name}: populated level after padding"));
            }
            for w in levels[..populated].windows(2) {
                let ok = if ascending {
                    w[0].price < w[1].price
                } else {
                    w[0].price > w[1].price
                };
                if !ok {
                    return Err(format!("{name}: prices not strictly ordered"));
                }
            }
            Ok(())
        }
        side(&self.asks, true, "asks")?;
        side(&self.bids, false, "bids")?;
        if let (Some(a), Some(b)) = (self.best_ask(), self.best_bid()) {
            if a.price < b.price {
                return Err(format!("crossed book: ask {} < bid {}", a.price, b.price));
            }
        }
        Ok(())
    }
}

/// Mid price in currency units: `(best ask + best bid) / 2`.
pub fn mid_price(snapshot: &BookSnapshot, tick_size: f64) -> Result<f64> {
    snapshot.mid_ticks().map(|m| m * tick_size)
}

#[derive(Debug, Clone, Copy)]
struct RestingOrder {
    side: Side,
    price: i64,
    volume: u64,
}

#[derive(Debug, Clone, Default)]
struct PriceLevel {
    total: u64,
    // FIFO of order refs; entries whose order has gone are skipped lazily.
    queue: VecDeque<u64>,
}

/// What applying one event did to the book.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ApplyOutcome {
    /// Whether the visible 10-level depth changed.
    pub depth_changed: bool,
    /// Volume executed against resting orders by a crossing submit.
    pub executed: u64,
}

/// Mutable order book for one stock-day stream. Single writer.
#[derive(Debug, Clone, Default)]
pub struct OrderBook {
    timestamp: i64,
    asks: BTreeMap<i64, PriceLevel>,
    bids: BTreeMap<i64, PriceLevel>,
    orders: HashMap<u64, RestingOrder>,
}

impl OrderBook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn timestamp(&self) -> i64 {
        self.timestamp
    }

    pub fn order_count(&self) -> usize {
        self.orders.len()
    }

    /// Resting volume of an order, if it is in the book.
    pub fn order_volume(&self, order_ref: u64) -> Option<u64> {
        self.orders.get(&order_ref).map(|o| o.volume)
    }

    /// Iterator over resting order refs (arbitrary order).
    pub fn order_refs(&self) -> impl Iterator<Item = u64> + '_ {
        self.orders.keys().copied()
    }

    pub fn best_ask_price(&self) -> Option<i64> {
        self.asks.keys().next().copied()
    }

    pub fn best_bid_price(&self) -> Option<i64> {
        self.bids.keys().next_back().copied()
    }

    /// Number of populated price levels on a side (full depth, not just the
    /// visible ten).
    pub fn level_count(&self, side: Side) -> usize {
        match side {
            Side::Ask => self.asks.len(),
            Side::Bid => self.bids.len(),
        }
    }

    /// Price levels of one side from best to worst with their resting order
    /// refs (FIFO order, live orders only).
    pub fn side_orders(&self, side: Side) -> Vec<(i64, Vec<u64>)> {
        let collect = |(p, l): (&i64, &PriceLevel)| {
            let refs = l
                .queue
                .iter()
                .copied()
                .filter(|r| self.orders.get(r).is_some_and(|o| o.price == *p && o.side == side))
                .collect();
            (*p, refs)
        };
        match side {
            Side::Ask => self.asks.iter().map(collect).collect(),
            Side::Bid => self.bids.iter().rev().map(collect).collect(),
        }
    }

    pub fn snapshot(&self) -> BookSnapshot {
        let mut snap = BookSnapshot::empty(self.timestamp);
        for (slot, (p, l)) in snap.asks.iter_mut().zip(self.asks.iter()) {
            *slot = Level {
                price: *p,
                volume: l.total,
            };
        }
        for (slot, (p, l)) in snap.bids.iter_mut().zip(self.bids.iter().rev()) {
            *slot = Level {
                price: *p,
                volume: l.total,
            };
        }
        snap
    }

    /// Whether `price` on `side` falls inside the visible depth.
    fn is_visible(&self, side: Side, price: i64) -> bool {
        match side {
            Side::Ask => match self.asks.keys().nth(DEPTH - 1) {
                None => true,
                Some(&tenth) => price <= tenth,
            },
            Side::Bid => match self.bids.keys().rev().nth(DEPTH - 1) {
                None => true,
                Some(&tenth) => price >= tenth,
            },
        }
    }

    fn levels_mut(&mut self, side: Side) -> &mut BTreeMap<i64, PriceLevel> {
        match side {
            Side::Ask => &mut self.asks,
            Side::Bid => &mut self.bids,
        }
    }

    /// Apply one event. On error the book is left untouched.
    pub fn apply(&mut self, event: &LobEvent) -> Result<ApplyOutcome> {
        if event.timestamp < self.timestamp {
            return Err(Error::OutOfOrder {
                event: event.timestamp,
                book: self.timestamp,
            });
        }
        let outcome = match event.kind {
            EventKind::Submit => self.submit(event)?,
            EventKind::Cancel | EventKind::ExecVisible => {
                self.reduce(event.order_ref, Some(event.volume))?
            }
            EventKind::Delete => self.reduce(event.order_ref, None)?,
            EventKind::ExecHidden | EventKind::Trade => ApplyOutcome::default(),
        };
        self.timestamp = event.timestamp;
        Ok(outcome)
    }

    fn submit(&mut self, event: &LobEvent) -> Result<ApplyOutcome> {
        if event.volume == 0 {
            return Err(Error::Format("submit with zero volume".into()));
        }
        if self.orders.contains_key(&event.order_ref) {
            return Err(Error::DuplicateOrder(event.order_ref));
        }
        let visible_before = self.is_visible(event.side, event.price);
        let mut remaining = event.volume;
        let mut executed = 0;

        // Match against the opposite side while the order crosses.
        let contra = event.side.opposite();
        loop {
            if remaining == 0 {
                break;
            }
            let best = match contra {
                Side::Ask => self.asks.keys().next().copied(),
                Side::Bid => self.bids.keys().next_back().copied(),
            };
            let Some(best) = best else { break };
            let crosses = match event.side {
                Side::Bid => event.price >= best,
                Side::Ask => event.price <= best,
            };
            if !crosses {
                break;
            }
            let orders = &mut self.orders;
            let levels = match contra {
                Side::Ask => &mut self.asks,
                Side::Bid => &mut self.bids,
            };
            let level = levels.get_mut(&best).expect("best level exists");
            while remaining > 0 {
                let Some(&front) = level.queue.front() else { break };
                let Some(resting) = orders.get_mut(&front) else {
                    level.queue.pop_front();
                    continue;
                };
                let fill = remaining.min(resting.volume);
                resting.volume -= fill;
                level.total -= fill;
                remaining -= fill;
                executed += fill;
                if resting.volume == 0 {
                    orders.remove(&front);
                    level.queue.pop_front();
                }
            }
            if level.total == 0 {
                levels.remove(&best);
            }
        }

        if remaining > 0 {
            let level = self.levels_mut(event.side).entry(event.price).or_default();
            level.total += remaining;
            level.queue.push_back(event.order_ref);
            self.orders.insert(
                event.order_ref,
                RestingOrder {
                    side: event.side,
                    price: event.price,
                    volume: remaining,
                },
            );
        }
        Ok(ApplyOutcome {
            depth_changed: executed > 0 || (remaining > 0 && visible_before),
            executed,
        })
    }

    /// Reduce a resting order by `volume`, or remove it entirely when
    /// `volume` is `None` or covers the remaining size.
    fn reduce(&mut self, order_ref: u64, volume: Option<u64>) -> Result<ApplyOutcome> {
        let order = *self
            .orders
            .get(&order_ref)
            .ok_or(Error::UnknownOrder(order_ref))?;
        let cut = volume.map_or(order.volume, |v| v.min(order.volume));
        if cut == 0 {
            return Ok(ApplyOutcome::default());
        }
        let visible = self.is_visible(order.side, order.price);
        let levels = self.levels_mut(order.side);
        let level = levels.get_mut(&order.price).expect("order level exists");
        level.total -= cut;
        if level.total == 0 {
            levels.remove(&order.price);
        }
        if cut == order.volume {
            self.orders.remove(&order_ref);
        } else {
            self.orders.get_mut(&order_ref).expect("order exists").volume -= cut;
        }
        Ok(ApplyOutcome {
            depth_changed: visible,
            executed: 0,
        })
    }
}
