use super::schema::*;
use crate::book::{BlockStream, BookSnapshot, EventBlock, EventKind, StockDay, DEPTH};
use crate::error::{Error, Result};

/// One handcrafted feature vector. Stock and day live on the owning
/// [`DayFeatures`].
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: [f64; FEATURES],
    pub block_index: usize,
    pub timestamp: i64,
}

/// Features and mid prices for one stock-day.
#[derive(Debug, Clone)]
pub struct DayFeatures {
    pub key: StockDay,
    pub tick_size: f64,
    /// Mid price of every block (currency units), warm-up included.
    pub mids: Vec<f64>,
    /// Feature vectors for blocks `first_block..`.
    pub vectors: Vec<FeatureVector>,
}

impl DayFeatures {
    /// Block index of the first feature vector.
    pub fn first_block(&self) -> usize {
        self.vectors.first().map_or(self.mids.len(), |v| v.block_index)
    }

    /// Feature vector of block `t`, if past warm-up.
    pub fn at_block(&self, t: usize) -> Option<&FeatureVector> {
        t.checked_sub(self.first_block()).and_then(|i| self.vectors.get(i))
    }
}

/// Per-side price/volume ladder with padded levels replaced by the nearest
/// populated price on that side and zero volume.
fn ladder(snapshot: &BookSnapshot, tick: f64) -> Result<([f64; DEPTH], [f64; DEPTH], [f64; DEPTH], [f64; DEPTH])> {
    fn side(levels: &[crate::book::Level; DEPTH], tick: f64) -> Result<([f64; DEPTH], [f64; DEPTH])> {
        if levels[0].is_padded() {
            return Err(Error::UndefinedMid);
        }
        let mut p = [0.0; DEPTH];
        let mut v = [0.0; DEPTH];
        let mut last = 0.0;
        for (i, l) in levels.iter().enumerate() {
            if !l.is_padded() {
                last = l.price as f64 * tick;
                v[i] = l.volume as f64;
            }
            p[i] = last;
        }
        Ok((p, v))
    }
    let (pa, va) = side(&snapshot.asks, tick)?;
    let (pb, vb) = side(&snapshot.bids, tick)?;
    Ok((pa, va, pb, vb))
}

fn write_raw(out: &mut [f64], snapshot: &BookSnapshot, tick: f64) -> Result<()> {
    let (pa, va, pb, vb) = ladder(snapshot, tick)?;
    for i in 0..DEPTH {
        out[ask_price(i)] = pa[i];
        out[ask_volume(i)] = va[i];
        out[bid_price(i)] = pb[i];
        out[bid_volume(i)] = vb[i];
    }
    Ok(())
}

fn window_counts(history: &[EventBlock], len: usize) -> [f64; 6] {
    let mut c = [0u64; 6];
    for b in &history[history.len() - len..] {
        for (acc, n) in c.iter_mut().zip(b.kind_counts) {
            *acc += u64::from(n);
        }
    }
    c.map(|n| n as f64 / len as f64)
}

fn ratio(a: f64, b: f64) -> f64 {
    if a + b > 0.0 {
        a / (a + b)
    } else {
        0.0
    }
}

/// Compute the feature vector of the last block in `history`.
///
/// `history` must hold at least [`LONG_WINDOW`] consecutive blocks of one
/// stock-day ending at the current block. Pure: equal inputs give
/// bit-identical outputs.
pub fn extract_features(history: &[EventBlock], tick_size: f64) -> Result<[f64; FEATURES]> {
    if history.len() < LONG_WINDOW {
        return Err(Error::WarmUp {
            needed: LONG_WINDOW,
            available: history.len(),
        });
    }
    let current = &history[history.len() - 1];
    let previous = &history[history.len() - 2];
    let mut x = [0.0; FEATURES];

    write_raw(&mut x, &current.snapshot_after, tick_size)?;
    let mut prev_raw = [0.0; 40];
    write_raw(&mut prev_raw, &previous.snapshot_after, tick_size)?;

    let (mut sum_pa, mut sum_pb, mut sum_va, mut sum_vb) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..DEPTH {
        let (pa, va, pb, vb) = (x[ask_price(i)], x[ask_volume(i)], x[bid_price(i)], x[bid_volume(i)]);
        x[spread(i)] = pa - pb;
        x[level_mid(i)] = (pa + pb) / 2.0;
        sum_pa += pa;
        sum_pb += pb;
        sum_va += va;
        sum_vb += vb;
    }

    let last = DEPTH - 1;
    x[60] = x[ask_price(last)] - x[ask_price(0)];
    x[61] = x[bid_price(0)] - x[bid_price(last)];
    for i in 0..last {
        x[62 + i] = (x[ask_price(i + 1)] - x[ask_price(i)]).abs();
        x[71 + i] = (x[bid_price(i + 1)] - x[bid_price(i)]).abs();
    }

    let n = DEPTH as f64;
    x[80] = sum_pa / n;
    x[81] = sum_pb / n;
    x[82] = sum_va / n;
    x[83] = sum_vb / n;
    x[84] = sum_pa - sum_pb;
    x[85] = sum_va - sum_vb;

    for j in 0..40 {
        x[DERIVATIVES.start + j] = x[j] - prev_raw[j];
    }

    let short = window_counts(history, SHORT_WINDOW);
    let long = window_counts(history, LONG_WINDOW);
    let short_prev = window_counts(&history[..history.len() - 1], SHORT_WINDOW);
    for k in 0..6 {
        x[INTENSITIES.start + k] = short[k];
        x[RELATIVE_INTENSITIES.start + k] = if short[k] > long[k] { 1.0 } else { 0.0 };
    }
    let idx = |k: EventKind| k.index();
    let submit = short[idx(EventKind::Submit)];
    x[138] = ratio(short[idx(EventKind::Trade)], submit);
    x[139] = ratio(short[idx(EventKind::Cancel)], submit);
    x[140] = ratio(short[idx(EventKind::Delete)], submit);
    x[141] = ratio(short[idx(EventKind::ExecHidden)], short[idx(EventKind::ExecVisible)]);
    x[142] = submit - short_prev[idx(EventKind::Submit)];
    x[143] = short[idx(EventKind::Trade)] - short_prev[idx(EventKind::Trade)];

    if let Some(j) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("feature {j}")));
    }
    Ok(x)
}

/// Extract every post-warm-up block of a replayed stock-day.
pub fn extract_day(stream: &BlockStream) -> Result<DayFeatures> {
    let blocks = &stream.blocks;
    let mut mids = Vec::with_capacity(blocks.len());
    for b in blocks {
        mids.push(b.snapshot_after.mid_ticks()? * stream.tick_size);
    }
    let mut vectors = Vec::with_capacity(blocks.len().saturating_sub(LONG_WINDOW - 1));
    for t in LONG_WINDOW - 1..blocks.len() {
        let values = extract_features(&blocks[t + 1 - LONG_WINDOW..=t], stream.tick_size)?;
        vectors.push(FeatureVector {
            values,
            block_index: t,
            timestamp: blocks[t].timestamp(),
        });
    }
    Ok(DayFeatures {
        key: stream.key.clone(),
        tick_size: stream.tick_size,
        mids,
        vectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::book::{Level, LobEvent, Side};

    fn dummy_event() -> LobEvent {
        LobEvent {
            timestamp: 0,
            kind: EventKind::Submit,
            side: Side::Bid,
            price: 0,
            volume: 1,
            order_ref: 0,
        }
    }

    fn block(snapshot: BookSnapshot, counts: [u32; 6]) -> EventBlock {
        EventBlock {
            events: [dummy_event(); 10],
            kind_counts: counts,
            snapshot_after: snapshot,
        }
    }

    fn book(center: i64, vols: impl Fn(usize) -> (u64, u64)) -> BookSnapshot {
        let mut s = BookSnapshot::empty(0);
        for i in 0..DEPTH {
            let (va, vb) = vols(i);
            s.asks[i] = Level { price: center + 1 + i as i64 * (i as i64 + 1), volume: va };
            s.bids[i] = Level { price: center - 1 - i as i64 * (i as i64 + 1), volume: vb };
        }
        s
    }

    #[test]
    fn warm_up_is_reported() {
        let hist = vec![block(book(1000, |_| (1, 1)), [10, 0, 0, 0, 0, 0]); LONG_WINDOW - 1];
        assert!(matches!(
            extract_features(&hist, 0.01),
            Err(Error::WarmUp { needed: LONG_WINDOW, available: 49 })
        ));
    }

    #[test]
    fn static_book_has_zero_derivatives_and_no_trade_intensity() {
        let hist = vec![block(book(1000, |i| (10 + i as u64, 20)), [6, 2, 2, 0, 1, 0]); LONG_WINDOW];
        let x = extract_features(&hist, 0.01).unwrap();
        assert!(x[DERIVATIVES].iter().all(|&d| d == 0.0));
        assert!(x[ACCELERATIONS].iter().all(|&d| d == 0.0));
        assert_eq!(x[intensity(EventKind::Trade)], 0.0);
        assert_eq!(x[intensity(EventKind::Submit)], 6.0);
        // Constant rates: short never exceeds long.
        assert!(x[132..138].iter().all(|&d| d == 0.0));
    }

    /// Independent per-feature calculator for the mirrored-book check.
    fn oracle_level_mids_and_volume_diff(s: &BookSnapshot, tick: f64) -> (Vec<f64>, f64) {
        let mids = (0..DEPTH)
            .map(|i| (s.asks[i].price as f64 * tick + s.bids[i].price as f64 * tick) / 2.0)
            .collect();
        let vdiff = (0..DEPTH)
            .map(|i| s.asks[i].volume as f64 - s.bids[i].volume as f64)
            .sum();
        (mids, vdiff)
    }

    #[test]
    fn mirrored_book_has_equal_level_mids_and_zero_volume_imbalance() {
        let snap = book(5000, |i| (7 * i as u64 + 3, 7 * i as u64 + 3));
        let hist = vec![block(snap, [10, 0, 0, 0, 0, 0]); LONG_WINDOW];
        let x = extract_features(&hist, 0.5).unwrap();
        let (mids, vdiff) = oracle_level_mids_and_volume_diff(&snap, 0.5);
        for i in 0..DEPTH {
            assert_eq!(x[level_mid(i)], mids[i]);
            assert_eq!(x[level_mid(i)], 2500.0);
        }
        assert_eq!(vdiff, 0.0);
        assert_eq!(x[ACCUMULATED_VOLUME_DIFF], 0.0);
        assert_eq!(x[82], x[83]);
    }

    #[test]
    fn padded_levels_reuse_nearest_price_with_zero_volume() {
        let mut snap = book(1000, |_| (5, 5));
        for l in &mut snap.asks[3..] {
            *l = Level::PADDED;
        }
        let hist = vec![block(snap, [10, 0, 0, 0, 0, 0]); LONG_WINDOW];
        let x = extract_features(&hist, 1.0).unwrap();
        for i in 3..DEPTH {
            assert_eq!(x[ask_price(i)], x[ask_price(2)]);
            assert_eq!(x[ask_volume(i)], 0.0);
        }
        assert!(x.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn one_sided_book_is_an_error() {
        let mut snap = book(1000, |_| (5, 5));
        snap.bids = [Level::PADDED; DEPTH];
        let hist = vec![block(snap, [10, 0, 0, 0, 0, 0]); LONG_WINDOW];
        assert!(matches!(extract_features(&hist, 1.0), Err(Error::UndefinedMid)));
    }

    #[test]
    fn intensities_and_acceleration_follow_the_windows() {
        let snap = book(1000, |_| (5, 5));
        let mut hist = vec![block(snap, [10, 0, 0, 0, 0, 0]); LONG_WINDOW];
        // Last block has 4 trades: short trade intensity 0.4, previous 0.
        hist[LONG_WINDOW - 1].kind_counts = [10, 0, 0, 0, 0, 4];
        let x = extract_features(&hist, 1.0).unwrap();
        assert!((x[intensity(EventKind::Trade)] - 0.4).abs() < 1e-15);
        assert_eq!(x[137], 1.0);
        assert!((x[143] - 0.4).abs() < 1e-15);
        assert!((x[138] - 0.4 / 10.4).abs() < 1e-15);
    }

    #[test]
    fn repeated_extraction_is_bit_identical() {
        let hist: Vec<_> = (0..LONG_WINDOW)
            .map(|i| block(book(1000 + i as i64, |j| (i as u64 + j as u64 + 1, 3)), [9, 1, i as u32 % 3, 1, 0, 2]))
            .collect();
        let a = extract_features(&hist, 0.01).unwrap();
        let b = extract_features(&hist, 0.01).unwrap();
        assert_eq!(a.map(f64::to_bits), b.map(f64::to_bits));
    }
}
