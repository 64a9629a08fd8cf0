//! Featurize one synthetic stock-day and write the binary matrix, its row
//! index and a human-readable CSV.
//!
//! cargo run --release --example feature_extraction [OUT_DIR]

use std::path::PathBuf;
use std::time::Instant;

use lobcast::book::block_stream;
use lobcast::features::io::{write_diagnostic_csv, write_index, write_matrix, FeatureMatrix, RowIndex};
use lobcast::features::{extract_day, feature_names, make_representation, zscore_fit, WindowKind, FEATURES, LONG_WINDOW, WINDOW};
use lobcast::synth::{generate_stock, MarketConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("lobcast-features"));
    std::fs::create_dir_all(&out)?;

    let cfg = MarketConfig {
        stocks: 1,
        days: 1,
        ..Default::default()
    };
    let stream = &generate_stock(&cfg, 0)?[0];

    let t0 = Instant::now();
    let blocks = block_stream(stream);
    let day = extract_day(&blocks)?;
    let secs = t0.elapsed().as_secs_f64();
    println!(
        "{}: {} blocks, {} feature rows (first {} blocks are warm-up), {:.0} blocks/s",
        day.key,
        blocks.blocks.len(),
        day.vectors.len(),
        LONG_WINDOW,
        blocks.blocks.len() as f64 / secs
    );

    let names = feature_names();
    let first = &day.vectors[0];
    for i in [0, 1, 40, 80, 100, 120, 143] {
        println!("  {:<28} {:>12.5}", names[i], first.values[i]);
    }

    let mut m = FeatureMatrix::new(FEATURES);
    let mut index = Vec::new();
    for v in &day.vectors {
        m.push_row(&v.values)?;
        index.push(RowIndex {
            key: day.key.clone(),
            timestamp: v.timestamp,
            block_index: v.block_index,
        });
    }
    write_matrix(&out.join("features.lobf"), &m)?;
    write_index(&out.join("features.index.csv"), &index)?;
    write_diagnostic_csv(&out.join("features.csv"), &m, &names, &index)?;
    println!("wrote {}", out.display());

    // Normalize against the whole day and build each window representation
    // for the last row.
    let stats = zscore_fit(m.data.chunks(FEATURES), day.key.to_string())?;
    let z: Vec<Vec<f64>> = day.vectors[day.vectors.len() - WINDOW..].iter().map(|v| stats.apply(&v.values)).collect::<lobcast::Result<_>>()?;
    let window: Vec<&[f64]> = z.iter().map(|r| r.as_slice()).collect();
    for kind in [WindowKind::Last, WindowKind::Mean, WindowKind::LastMean, WindowKind::Concat] {
        let r = make_representation(&window, kind, day.vectors.last().unwrap().block_index)?;
        println!("{kind:?}: {} values", r.values.len());
    }
    Ok(())
}
