//! Fit a k-means codebook on feature windows and show how the spread
//! parameter g moves the histogram entropy.
//!
//! cargo run --release --example bag_of_features

use lobcast::book::block_stream;
use lobcast::features::{extract_day, zscore_fit, FEATURES, WINDOW};
use lobcast::repr::{bof_encode, bof_fit, entropy, BofConfig};
use lobcast::seed;
use lobcast::synth::{generate_stock, MarketConfig};

fn main() -> lobcast::Result<()> {
    let cfg = MarketConfig {
        stocks: 1,
        days: 1,
        ..Default::default()
    };
    let day = extract_day(&block_stream(&generate_stock(&cfg, 0)?[0]))?;
    let stats = zscore_fit(day.vectors.iter().map(|v| &v.values[..]), "day")?;
    let mut x = Vec::with_capacity(day.vectors.len() * FEATURES);
    for v in &day.vectors {
        x.extend(stats.apply(&v.values)?);
    }

    let bof_cfg = BofConfig {
        k: 32,
        max_samples: 20_000,
        ..Default::default()
    };
    let mut rng = seed::rng(3, "bof");
    let (codebook, fit) = bof_fit(&x, FEATURES, &bof_cfg, &mut rng)?;
    println!(
        "k-means: {} iterations, converged {}, inertia {:.1} -> {:.1}",
        fit.iterations,
        fit.converged,
        fit.inertia_history[0],
        fit.inertia()
    );

    let rows: Vec<&[f64]> = x.chunks(FEATURES).collect();
    for g in [0.001, 0.01, 0.1, 1.0] {
        let cb = codebook.with_g(g)?;
        let mut total = 0.0;
        let n = 500;
        for w in rows.windows(WINDOW).take(n) {
            total += entropy(&bof_encode(&cb, w)?);
        }
        println!("g = {g:<6} mean histogram entropy {:.4} (max {:.4})", total / n as f64, (cb.k as f64).ln());
    }
    Ok(())
}
