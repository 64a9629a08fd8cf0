//! Label a synthetic day at the three standard horizons, streaming and in
//! batch, and print the class balance.
//!
//! cargo run --release --example labeling

use lobcast::book::block_stream;
use lobcast::features::extract_day;
use lobcast::labeling::{label_series, smooth_mid, LabelParams, Labeler};
use lobcast::synth::{generate_stock, MarketConfig};

fn main() -> lobcast::Result<()> {
    let cfg = MarketConfig {
        stocks: 1,
        days: 1,
        ..Default::default()
    };
    let day = extract_day(&block_stream(&generate_stock(&cfg, 0)?[0]))?;
    let mids = &day.mids;
    println!("{} mid prices, first {:.4}, last {:.4}", mids.len(), mids[0], mids[mids.len() - 1]);

    let smoothed = smooth_mid(mids, 9);
    println!("smoothed mid at t=100: {:.5} (raw {:.5})", smoothed[100], mids[100]);

    for h in [1, 5, 10] {
        let params = LabelParams::for_horizon(h)?;
        let batch = label_series(mids, &params)?;

        let mut labeler = Labeler::new(params)?;
        let streamed: Vec<_> = mids.iter().filter_map(|&m| labeler.push(m)).collect();
        let agree = streamed.iter().all(|&(t, l)| batch.get(t) == Some(l));

        let c = batch.class_counts();
        let n = (c[0] + c[1] + c[2]) as f64;
        println!(
            "h={h:<2} gamma={:.0e}: {} labels, down {:.1}% flat {:.1}% up {:.1}%, streaming agrees: {agree}",
            params.gamma,
            n,
            100.0 * c[0] as f64 / n,
            100.0 * c[1] as f64 / n,
            100.0 * c[2] as f64 / n
        );
    }
    Ok(())
}
