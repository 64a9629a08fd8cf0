//! Limit order book reconstruction from a time-ordered event feed.
//!
//! [`OrderBook`] keeps order-level state and matches crossing submits with
//! price-time priority; [`block_stream`] replays a stock-day stream and
//! emits one [`EventBlock`] per ten depth-changing events.

mod blocks;
mod event;
pub mod io;
mod order_book;

pub use blocks::{block_stream, BlockStream, EventBlock, StreamStats, BLOCK_EVENTS};
pub use event::{EventKind, EventStream, LobEvent, Side, StockDay, StreamMeta};
pub use order_book::{mid_price, ApplyOutcome, BookSnapshot, Level, OrderBook, DEPTH};
