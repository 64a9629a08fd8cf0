//! Generate a small synthetic market and print label balance per horizon.
//!
//! cargo run --example synth_market -- [out_dir] [regime] [drift] [noise]

use std::path::PathBuf;

use lobcast::synth::{synth_generate, MarketConfig};

fn main() -> lobcast::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let dir = PathBuf::from(args.first().map_or("target/synth-example", String::as_str));
    let mut cfg = MarketConfig {
        stocks: 2,
        days: 3,
        ..Default::default()
    };
    if let Some(r) = args.get(1) {
        cfg.regime = r.parse()?;
    }
    if let Some(d) = args.get(2) {
        cfg.drift = d.parse().expect("drift is a number");
    }
    if let Some(n) = args.get(3) {
        cfg.noise = n.parse().expect("noise is a number");
    }

    let (files, manifest) = synth_generate(&cfg, &dir)?;
    println!("wrote {} event files to {}", files.len(), dir.display());
    let blocks: usize = manifest.streams.iter().map(|s| s.blocks).sum();
    println!("{blocks} blocks ({:.0} per stock-day)", blocks as f64 / files.len() as f64);
    for (h, c) in &manifest.totals {
        let n: usize = c.iter().sum();
        let pct = |v: usize| 100.0 * v as f64 / n.max(1) as f64;
        println!("horizon {h:>2}: down {:5.1}%  flat {:5.1}%  up {:5.1}%", pct(c[0]), pct(c[1]), pct(c[2]));
    }
    Ok(())
}
