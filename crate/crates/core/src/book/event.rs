use std::fmt;

use serde::{Deserialize, Serialize};

/// Message kinds carried by the event feed. The six kinds are also the six
/// intensity categories used by the time-sensitive features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    Submit,
    Cancel,
    Delete,
    ExecVisible,
    ExecHidden,
    Trade,
}

impl EventKind {
    pub const ALL: [EventKind; 6] = [
        EventKind::Submit,
        EventKind::Cancel,
        EventKind::Delete,
        EventKind::ExecVisible,
        EventKind::ExecHidden,
        EventKind::Trade,
    ];

    /// Position in [`EventKind::ALL`]; used to index per-kind counters.
    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn code(self) -> &'static str {
        match self {
            EventKind::Submit => "S",
            EventKind::Cancel => "C",
            EventKind::Delete => "D",
            EventKind::ExecVisible => "EV",
            EventKind::ExecHidden => "EH",
            EventKind::Trade => "T",
        }
    }

    pub fn from_code(s: &str) -> Option<Self> {
        Some(match s {
            "S" => EventKind::Submit,
            "C" => EventKind::Cancel,
            "D" => EventKind::Delete,
            "EV" => EventKind::ExecVisible,
            "EH" => EventKind::ExecHidden,
            "T" => EventKind::Trade,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Bid,
    Ask,
}

impl Side {
    pub fn code(self) -> &'static str {
        match self {
            Side::Bid => "B",
            Side::Ask => "A",
        }
    }

    pub fn from_code(s: &str) -> Option<Self> {
        match s {
            "B" => Some(Side::Bid),
            "A" => Some(Side::Ask),
            _ => None,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Side::Bid => Side::Ask,
            Side::Ask => Side::Bid,
        }
    }
}

/// One feed message. Prices are integer ticks; the tick size lives in the
/// stream metadata. Stock and day are properties of the stream that carries
/// the event (one stream per stock-day), see [`EventStream`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LobEvent {
    /// Nanoseconds since epoch.
    pub timestamp: i64,
    pub kind: EventKind,
    pub side: Side,
    pub price: i64,
    pub volume: u64,
    pub order_ref: u64,
}

/// Identifies one (stock, trading day) stream.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StockDay {
    pub stock_id: String,
    pub day_id: u32,
}

impl StockDay {
    pub fn new(stock_id: impl Into<String>, day_id: u32) -> Self {
        Self {
            stock_id: stock_id.into(),
            day_id,
        }
    }
}

impl fmt::Display for StockDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/d{}", self.stock_id, self.day_id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamMeta {
    pub key: StockDay,
    pub tick_size: f64,
}

/// Time-ordered events of a single stock-day.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    pub meta: StreamMeta,
    pub events: Vec<LobEvent>,
}
