//! Event-time subsampling: one block per ten depth-changing events.

use super::event::{EventKind, EventStream, LobEvent, StockDay};
use super::order_book::{BookSnapshot, OrderBook};
use crate::error::Error;

/// Depth-changing events per block.
pub const BLOCK_EVENTS: usize = 10;

/// Ten consecutive depth-changing events and the book after the tenth.
#[derive(Debug, Clone, PartialEq)]
pub struct EventBlock {
    pub events: [LobEvent; BLOCK_EVENTS],
    /// Per-kind message counts over the whole block span, including
    /// messages that did not change the visible depth (hidden executions,
    /// trade prints, deep-book updates). Indexed by [`EventKind::index`].
    pub kind_counts: [u32; 6],
    pub snapshot_after: BookSnapshot,
}

impl EventBlock {
    pub fn timestamp(&self) -> i64 {
        self.snapshot_after.timestamp
    }

    pub fn count(&self, kind: EventKind) -> u32 {
        self.kind_counts[kind.index()]
    }
}

/// Counters reported by [`block_stream`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StreamStats {
    pub events: usize,
    pub depth_changing: usize,
    /// Events rejected by the book (unknown refs, duplicates, ...).
    pub rejected: usize,
    /// Depth-changing events left over after the last full block.
    pub discarded_tail: usize,
    /// First few rejections as (event index, message).
    pub rejections: Vec<(usize, String)>,
}

#[derive(Debug, Clone)]
pub struct BlockStream {
    pub key: StockDay,
    pub tick_size: f64,
    pub blocks: Vec<EventBlock>,
    pub stats: StreamStats,
}

const KEPT_REJECTIONS: usize = 32;

/// Replay a stock-day stream and cut it into [`EventBlock`]s.
///
/// Rejected events are counted and skipped. Events that leave the visible
/// depth unchanged advance the stream and the per-kind counters but do not
/// count toward the ten-event quota. A trailing partial block is dropped.
pub fn block_stream(stream: &EventStream) -> BlockStream {
    let mut book = OrderBook::new();
    let mut stats = StreamStats::default();
    let mut blocks = Vec::with_capacity(stream.events.len() / BLOCK_EVENTS);
    let mut pending: Vec<LobEvent> = Vec::with_capacity(BLOCK_EVENTS);
    let mut counts = [0u32; 6];

    for (i, event) in stream.events.iter().enumerate() {
        stats.events += 1;
        match book.apply(event) {
            Ok(outcome) => {
                counts[event.kind.index()] += 1;
                if outcome.depth_changed {
                    stats.depth_changing += 1;
                    pending.push(*event);
                    if pending.len() == BLOCK_EVENTS {
                        let events: [LobEvent; BLOCK_EVENTS] =
                            pending.as_slice().try_into().expect("ten events");
                        blocks.push(EventBlock {
                            events,
                            kind_counts: counts,
                            snapshot_after: book.snapshot(),
                        });
                        pending.clear();
                        counts = [0; 6];
                    }
                }
            }
            Err(e) => {
                stats.rejected += 1;
                if stats.rejections.len() < KEPT_REJECTIONS {
                    stats.rejections.push((i, e.to_string()));
                }
                if matches!(e, Error::OutOfOrder { .. }) {
                    log::warn!("{}: event {i} out of order", stream.meta.key);
                }
            }
        }
    }
    stats.discarded_tail = pending.len();
    BlockStream {
        key: stream.meta.key.clone(),
        tick_size: stream.meta.tick_size,
        blocks,
        stats,
    }
}
