//! Synthetic multi-stock, multi-day event streams.
//!
//! A latent log-price follows a discretized Ornstein–Uhlenbeck process around
//! a drifting anchor, in event time. Each event either moves the touch toward
//! the latent price (sweeping or submitting at the best level) or is
//! background activity of all six kinds. Every event is applied to an
//! [`OrderBook`] as it is generated, so streams replay without errors and
//! never cross.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use rand::Rng as _;
use rand_distr::{Distribution, Exp, LogNormal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::book::io::write_event_file;
use crate::book::{block_stream, EventKind, EventStream, LobEvent, OrderBook, Side, StockDay, StreamMeta, DEPTH};
use crate::labeling::{label_series, LabelParams};
use crate::seed::{self, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Random walk around the drifting anchor.
    Trending,
    /// Strong pull back to the anchor.
    MeanReverting,
    /// Drift direction flips between segments of random length.
    Mixed,
}

impl std::str::FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trending" => Ok(Regime::Trending),
            "mean_reverting" => Ok(Regime::MeanReverting),
            "mixed" => Ok(Regime::Mixed),
            _ => Err(Error::InvalidParam(format!("unknown regime {s:?} (trending, mean_reverting, mixed)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarketConfig {
    pub stocks: usize,
    pub days: usize,
    pub events_per_day: usize,
    pub tick_size: f64,
    pub initial_price: f64,
    /// Spread of the touch, in ticks.
    pub spread_ticks: i64,
    /// Anchor log-return per day.
    pub drift: f64,
    /// Latent log-price volatility per √day.
    pub noise: f64,
    pub regime: Regime,
    /// Mean number of drift segments per day in the mixed regime.
    pub segments_per_day: f64,
    pub seed: u64,
}

impl Default for MarketConfig {
    fn default() -> Self {
        MarketConfig {
            stocks: 5,
            days: 10,
            events_per_day: 25_000,
            tick_size: 0.01,
            initial_price: 100.0,
            spread_ticks: 2,
            drift: 0.02,
            noise: 0.009,
            regime: Regime::Mixed,
            segments_per_day: 40.0,
            seed: 1,
        }
    }
}

impl MarketConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stocks == 0 || self.days == 0 || self.events_per_day == 0 {
            return Err(Error::InvalidParam("stocks, days and events_per_day must be ≥ 1".into()));
        }
        if !(self.tick_size > 0.0) || !(self.initial_price > self.tick_size * 100.0) {
            return Err(Error::InvalidParam("tick size must be positive and well below the initial price".into()));
        }
        if self.spread_ticks < 1 {
            return Err(Error::InvalidParam("spread must be at least one tick".into()));
        }
        if !(self.noise >= 0.0) || !self.drift.is_finite() || !(self.segments_per_day > 0.0) {
            return Err(Error::InvalidParam("noise must be ≥ 0, drift finite, segments_per_day > 0".into()));
        }
        Ok(())
    }

    pub fn stock_id(i: usize) -> String {
        format!("S{:02}", i + 1)
    }

    fn reversion_per_event(&self) -> f64 {
        let per_day = match self.regime {
            Regime::Trending => 0.0,
            Regime::MeanReverting => 50.0,
            Regime::Mixed => 5.0,
        };
        per_day / self.events_per_day as f64
    }
}

const DAY_NS: i64 = 86_400_000_000_000;
const OPEN_NS: i64 = 9 * 3_600_000_000_000;
const MEAN_GAP_NS: f64 = 100_000_000.0;

/// Latent price state carried across the days of one stock.
struct Latent {
    anchor: f64,
    dev: f64,
    direction: f64,
}

/// Generator-side view of resting orders, mirrored from the book.
#[derive(Default)]
struct Ledger {
    orders: HashMap<u64, (Side, i64)>,
    levels: [BTreeMap<i64, Vec<u64>>; 2],
    live: Vec<u64>,
    slot: HashMap<u64, usize>,
}

fn side_ix(s: Side) -> usize {
    match s {
        Side::Bid => 0,
        Side::Ask => 1,
    }
}

impl Ledger {
    fn add(&mut self, r: u64, side: Side, price: i64) {
        self.orders.insert(r, (side, price));
        self.levels[side_ix(side)].entry(price).or_default().push(r);
        self.slot.insert(r, self.live.len());
        self.live.push(r);
    }

    fn remove(&mut self, r: u64) {
        let Some((side, price)) = self.orders.remove(&r) else { return };
        let lv = &mut self.levels[side_ix(side)];
        if let Some(q) = lv.get_mut(&price) {
            q.retain(|x| *x != r);
            if q.is_empty() {
                lv.remove(&price);
            }
        }
        let i = self.slot.remove(&r).expect("live order has a slot");
        self.live.swap_remove(i);
        if let Some(&moved) = self.live.get(i) {
            self.slot.insert(moved, i);
        }
    }

    fn level_len(&self, side: Side, price: i64) -> usize {
        self.levels[side_ix(side)].get(&price).map_or(0, |q| q.len())
    }
}

struct DayGen<'a> {
    cfg: &'a MarketConfig,
    rng: &'a mut Rng,
    book: OrderBook,
    ledger: Ledger,
    events: Vec<LobEvent>,
    clock: i64,
    next_ref: u64,
    volume: LogNormal<f64>,
    gap: Exp<f64>,
}

impl DayGen<'_> {
    fn emit(&mut self, kind: EventKind, side: Side, price: i64, volume: u64, order_ref: u64) {
        self.clock += self.gap.sample(self.rng) as i64;
        let ev = LobEvent {
            timestamp: self.clock,
            kind,
            side,
            price,
            volume,
            order_ref,
        };
        self.book.apply(&ev).expect("generated events are consistent with the book");
        self.events.push(ev);
    }

    fn draw_volume(&mut self) -> u64 {
        (self.volume.sample(self.rng).round() as u64).max(1)
    }

    fn submit(&mut self, side: Side, price: i64, volume: u64) {
        let r = self.next_ref;
        self.next_ref += 1;
        self.emit(EventKind::Submit, side, price, volume, r);
        if self.book.order_volume(r).is_some() {
            self.ledger.add(r, side, price);
        }
    }

    /// Sweep the whole best level of `side` with an exactly matching order.
    fn sweep(&mut self, side: Side) {
        let snap = self.book.snapshot();
        let level = match side {
            Side::Ask => snap.asks[0],
            Side::Bid => snap.bids[0],
        };
        let refs = self.ledger.levels[side_ix(side)].get(&level.price).cloned().unwrap_or_default();
        let r = self.next_ref;
        self.next_ref += 1;
        self.emit(EventKind::Submit, side.opposite(), level.price, level.volume, r);
        for o in refs {
            self.ledger.remove(o);
        }
        debug_assert!(self.book.order_volume(r).is_none());
    }

    /// One step toward the target touch; returns false when already aligned.
    fn realign(&mut self, bid_target: i64) -> bool {
        let ask_target = bid_target + self.cfg.spread_ticks;
        // A side is never swept empty: post the new touch first when the
        // level being swept is the last one.
        match self.book.best_ask_price() {
            Some(a) if a < ask_target => {
                if self.ledger.levels[side_ix(Side::Ask)].len() < 2 {
                    let v = self.draw_volume();
                    self.submit(Side::Ask, ask_target, v);
                } else {
                    self.sweep(Side::Ask);
                }
                return true;
            }
            _ => {}
        }
        match self.book.best_bid_price() {
            Some(b) if b > bid_target => {
                if self.ledger.levels[side_ix(Side::Bid)].len() < 2 {
                    let v = self.draw_volume();
                    self.submit(Side::Bid, bid_target, v);
                } else {
                    self.sweep(Side::Bid);
                }
                return true;
            }
            _ => {}
        }
        if self.book.best_ask_price().map_or(true, |a| a > ask_target) {
            let v = self.draw_volume();
            self.submit(Side::Ask, ask_target, v);
            return true;
        }
        if self.book.best_bid_price().map_or(true, |b| b < bid_target) {
            let v = self.draw_volume();
            self.submit(Side::Bid, bid_target, v);
            return true;
        }
        false
    }

    fn best(&self, side: Side) -> i64 {
        match side {
            Side::Ask => self.book.best_ask_price().expect("aligned book has asks"),
            Side::Bid => self.book.best_bid_price().expect("aligned book has bids"),
        }
    }

    fn random_side(&mut self) -> Side {
        if self.rng.gen_bool(0.5) {
            Side::Bid
        } else {
            Side::Ask
        }
    }

    fn background(&mut self) {
        let u: f64 = self.rng.gen();
        if u < 0.45 {
            let side = self.random_side();
            let mut k = 0;
            while k < DEPTH as i64 - 1 && self.rng.gen_bool(0.7) {
                k += 1;
            }
            let best = self.best(side);
            let price = match side {
                Side::Bid => best - k,
                Side::Ask => best + k,
            };
            let v = self.draw_volume();
            self.submit(side, price, v);
        } else if u < 0.60 {
            let r = self.ledger.live[self.rng.gen_range(0..self.ledger.live.len())];
            let (side, price) = self.ledger.orders[&r];
            let vol = self.book.order_volume(r).expect("ledger mirrors the book");
            if vol >= 2 {
                let cut = self.rng.gen_range(1..vol);
                self.emit(EventKind::Cancel, side, price, cut, r);
            } else {
                self.trade();
            }
        } else if u < 0.75 {
            let r = self.ledger.live[self.rng.gen_range(0..self.ledger.live.len())];
            let (side, price) = self.ledger.orders[&r];
            // Never empty the touch from the background.
            if price == self.best(side) && self.ledger.level_len(side, price) < 2 {
                self.trade();
            } else {
                let vol = self.book.order_volume(r).unwrap();
                self.emit(EventKind::Delete, side, price, vol, r);
                self.ledger.remove(r);
            }
        } else if u < 0.85 {
            let side = self.random_side();
            let price = self.best(side);
            let r = self.ledger.levels[side_ix(side)][&price][0];
            let vol = self.book.order_volume(r).unwrap();
            if vol >= 2 {
                let cut = self.rng.gen_range(1..vol);
                self.emit(EventKind::ExecVisible, side, price, cut, r);
            } else {
                self.trade();
            }
        } else if u < 0.90 {
            let side = self.random_side();
            let price = self.best(side);
            let v = self.draw_volume();
            self.emit(EventKind::ExecHidden, side, price, v, 0);
        } else {
            self.trade();
        }
    }

    fn trade(&mut self) {
        let side = self.random_side();
        let price = self.best(side);
        let v = self.draw_volume();
        self.emit(EventKind::Trade, side, price, v, 0);
    }
}

fn target_bid(cfg: &MarketConfig, latent: &Latent) -> i64 {
    let price = cfg.initial_price * (latent.anchor + latent.dev).exp();
    (price / cfg.tick_size).round() as i64 - cfg.spread_ticks / 2
}

fn generate_day(cfg: &MarketConfig, key: StockDay, latent: &mut Latent, rng: &mut Rng) -> EventStream {
    let n = cfg.events_per_day;
    let mut g = DayGen {
        cfg,
        rng,
        book: OrderBook::new(),
        ledger: Ledger::default(),
        events: Vec::with_capacity(n),
        clock: i64::from(key.day_id) * DAY_NS + OPEN_NS,
        next_ref: 1,
        volume: LogNormal::new(200f64.ln(), 0.6).unwrap(),
        gap: Exp::new(1.0 / MEAN_GAP_NS).unwrap(),
    };

    let bid = target_bid(cfg, latent);
    let ask = bid + cfg.spread_ticks;
    for k in 0..DEPTH as i64 {
        for _ in 0..2 {
            let v = g.draw_volume();
            g.submit(Side::Bid, bid - k, v);
            let v = g.draw_volume();
            g.submit(Side::Ask, ask + k, v);
        }
    }

    let kappa = cfg.reversion_per_event();
    let sigma = cfg.noise / (n as f64).sqrt();
    let mu = cfg.drift / n as f64;
    let switch = cfg.segments_per_day / n as f64;
    while g.events.len() < n {
        if cfg.regime == Regime::Mixed && g.rng.gen_bool(switch.min(1.0)) {
            latent.direction = if g.rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        }
        latent.anchor += mu * latent.direction;
        let z: f64 = g.rng.sample(StandardNormal);
        latent.dev += -kappa * latent.dev + sigma * z;
        let target = target_bid(cfg, latent);
        if !g.realign(target) {
            g.background();
        }
    }
    g.events.truncate(n);
    EventStream {
        meta: StreamMeta {
            key,
            tick_size: cfg.tick_size,
        },
        events: g.events,
    }
}

/// All days of one stock, in day order.
pub fn generate_stock(cfg: &MarketConfig, stock: usize) -> Result<Vec<EventStream>> {
    cfg.validate()?;
    let id = MarketConfig::stock_id(stock);
    let mut rng = seed::rng(cfg.seed, &format!("synth/{id}"));
    let mut latent = Latent {
        anchor: 0.0,
        dev: 0.0,
        direction: 1.0,
    };
    Ok((1..=cfg.days as u32)
        .map(|d| generate_day(cfg, StockDay::new(id.clone(), d), &mut latent, &mut rng))
        .collect())
}

/// Every stream of the market; stocks are generated in parallel.
pub fn generate(cfg: &MarketConfig) -> Result<Vec<EventStream>> {
    cfg.validate()?;
    let per_stock: Vec<Vec<EventStream>> = (0..cfg.stocks)
        .into_par_iter()
        .map(|s| generate_stock(cfg, s))
        .collect::<Result<_>>()?;
    Ok(per_stock.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSummary {
    pub stock_id: String,
    pub day_id: u32,
    pub events: usize,
    pub blocks: usize,
    /// Label counts (−1, 0, +1) per horizon, keyed by horizon.
    pub label_counts: BTreeMap<usize, [usize; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthManifest {
    pub config: MarketConfig,
    pub streams: Vec<StreamSummary>,
    pub totals: BTreeMap<usize, [usize; 3]>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Replay a stream and count its labels at the three standard horizons.
pub fn summarize_stream(stream: &EventStream) -> Result<StreamSummary> {
    let blocks = block_stream(stream);
    let mids = blocks
        .blocks
        .iter()
        .map(|b| crate::book::mid_price(&b.snapshot_after, stream.meta.tick_size))
        .collect::<Result<Vec<_>>>()?;
    let mut label_counts = BTreeMap::new();
    for h in [1usize, 5, 10] {
        let counts = if mids.is_empty() {
            [0; 3]
        } else {
            label_series(&mids, &LabelParams::for_horizon(h)?)?.class_counts()
        };
        label_counts.insert(h, counts);
    }
    Ok(StreamSummary {
        stock_id: stream.meta.key.stock_id.clone(),
        day_id: stream.meta.key.day_id,
        events: stream.events.len(),
        blocks: blocks.blocks.len(),
        label_counts,
    })
}

/// Generate the market into `dir` (event files, sidecars, manifest).
pub fn synth_generate(cfg: &MarketConfig, dir: &Path) -> Result<(Vec<PathBuf>, SynthManifest)> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let streams = generate(cfg)?;
    let out: Vec<(PathBuf, StreamSummary)> = streams
        .par_iter()
        .map(|s| Ok((write_event_file(dir, s)?, summarize_stream(s)?)))
        .collect::<Result<_>>()?;
    let mut totals: BTreeMap<usize, [usize; 3]> = BTreeMap::new();
    for (_, s) in &out {
        for (h, c) in &s.label_counts {
            let t = totals.entry(*h).or_default();
            for i in 0..3 {
                t[i] += c[i];
            }
        }
    }
    let (paths, summaries): (Vec<_>, Vec<_>) = out.into_iter().unzip();
    let manifest = SynthManifest {
        config: cfg.clone(),
        streams: summaries,
        totals,
    };
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok((paths, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(regime: Regime, drift: f64, noise: f64) -> MarketConfig {
        MarketConfig {
            stocks: 2,
            days: 2,
            events_per_day: 3000,
            drift,
            noise,
            regime,
            ..Default::default()
        }
    }

    #[test]
    fn streams_replay_uncrossed_with_all_kinds() {
        for s in generate(&small(Regime::Mixed, 0.02, 0.01)).unwrap() {
            let mut book = OrderBook::new();
            let mut seen = [false; 6];
            for e in &s.events {
                book.apply(e).unwrap();
                seen[e.kind.index()] = true;
                if let (Some(a), Some(b)) = (book.best_ask_price(), book.best_bid_price()) {
                    assert!(a > b);
                }
            }
            assert!(seen.iter().all(|x| *x));
            assert_eq!(s.events.len(), 3000);
            assert!(s.events.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
        }
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let c = small(Regime::Trending, 0.01, 0.02);
        assert_eq!(generate(&c).unwrap(), generate(&c).unwrap());
        let other = MarketConfig { seed: 2, ..c.clone() };
        assert_ne!(generate(&c).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn still_market_has_constant_mid_and_flat_labels() {
        for s in generate(&small(Regime::Trending, 0.0, 0.0)).unwrap() {
            let sum = summarize_stream(&s).unwrap();
            for c in sum.label_counts.values() {
                assert_eq!((c[0], c[2]), (0, 0));
                assert!(c[1] > 0);
            }
        }
    }
}
