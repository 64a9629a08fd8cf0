//! Fixed layout of the 144-value handcrafted feature vector.
//!
//! | range     | group                                                    |
//! |-----------|----------------------------------------------------------|
//! | 0..40     | raw prices/volumes, per level `p_a, v_a, p_b, v_b`       |
//! | 40..60    | per level spread `p_a - p_b` and mid `(p_a + p_b)/2`     |
//! | 60..80    | price ranges and absolute adjacent-level differences     |
//! | 80..84    | mean ask price, bid price, ask volume, bid volume        |
//! | 84..86    | accumulated price and volume differences                 |
//! | 86..126   | first differences of the raw 40 vs the previous block    |
//! | 126..132  | short-window average intensity per event kind            |
//! | 132..142  | short-vs-long intensity indicators, four cross ratios    |
//! | 142..144  | submit and trade intensity accelerations                 |

use crate::book::{EventKind, DEPTH};

pub const FEATURES: usize = 144;

pub const RAW: std::ops::Range<usize> = 0..40;
pub const SPREAD_MID: std::ops::Range<usize> = 40..60;
pub const PRICE_DIFFS: std::ops::Range<usize> = 60..80;
pub const MEANS: std::ops::Range<usize> = 80..84;
pub const ACCUMULATED: std::ops::Range<usize> = 84..86;
pub const DERIVATIVES: std::ops::Range<usize> = 86..126;
pub const INTENSITIES: std::ops::Range<usize> = 126..132;
pub const RELATIVE_INTENSITIES: std::ops::Range<usize> = 132..142;
pub const ACCELERATIONS: std::ops::Range<usize> = 142..144;

/// Blocks in the short intensity window.
pub const SHORT_WINDOW: usize = 10;
/// Blocks in the long intensity window; also the warm-up length.
pub const LONG_WINDOW: usize = 50;

#[inline]
pub const fn ask_price(level: usize) -> usize {
    4 * level
}
#[inline]
pub const fn ask_volume(level: usize) -> usize {
    4 * level + 1
}
#[inline]
pub const fn bid_price(level: usize) -> usize {
    4 * level + 2
}
#[inline]
pub const fn bid_volume(level: usize) -> usize {
    4 * level + 3
}
#[inline]
pub const fn spread(level: usize) -> usize {
    40 + 2 * level
}
#[inline]
pub const fn level_mid(level: usize) -> usize {
    40 + 2 * level + 1
}
pub const ACCUMULATED_VOLUME_DIFF: usize = 85;
#[inline]
pub const fn intensity(kind: EventKind) -> usize {
    126 + kind as usize
}

/// Human-readable column names, in schema order.
pub fn feature_names() -> Vec<String> {
    let mut n = Vec::with_capacity(FEATURES);
    for i in 1..=DEPTH {
        n.extend([
            format!("ask_price_{i}"),
            format!("ask_volume_{i}"),
            format!("bid_price_{i}"),
            format!("bid_volume_{i}"),
        ]);
    }
    for i in 1..=DEPTH {
        n.extend([format!("spread_{i}"), format!("mid_{i}")]);
    }
    n.push("ask_price_range".into());
    n.push("bid_price_range".into());
    for i in 1..DEPTH {
        n.push(format!("ask_step_{i}"));
    }
    for i in 1..DEPTH {
        n.push(format!("bid_step_{i}"));
    }
    n.extend(
        ["mean_ask_price", "mean_bid_price", "mean_ask_volume", "mean_bid_volume"]
            .map(String::from),
    );
    n.extend(["acc_price_diff", "acc_volume_diff"].map(String::from));
    let raw: Vec<String> = n[RAW].to_vec();
    n.extend(raw.iter().map(|r| format!("d_{r}")));
    let kinds = ["submit", "cancel", "delete", "exec_visible", "exec_hidden", "trade"];
    n.extend(kinds.iter().map(|k| format!("intensity_{k}")));
    n.extend(kinds.iter().map(|k| format!("rising_{k}")));
    n.extend(
        [
            "trade_vs_submit",
            "cancel_vs_submit",
            "delete_vs_submit",
            "hidden_vs_visible_exec",
        ]
        .map(String::from),
    );
    n.extend(["accel_submit", "accel_trade"].map(String::from));
    n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn groups_tile_the_vector() {
        let groups = [
            RAW,
            SPREAD_MID,
            PRICE_DIFFS,
            MEANS,
            ACCUMULATED,
            DERIVATIVES,
            INTENSITIES,
            RELATIVE_INTENSITIES,
            ACCELERATIONS,
        ];
        let mut next = 0;
        for g in groups {
            assert_eq!(g.start, next);
            next = g.end;
        }
        assert_eq!(next, FEATURES);
        assert_eq!(feature_names().len(), FEATURES);
    }
}
