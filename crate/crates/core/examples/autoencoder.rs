//! Train the 144-72-24-72-144 autoencoder on normalized synthetic features
//! and report the reconstruction loss per epoch.
//!
//! cargo run --release --example autoencoder

use lobcast::book::block_stream;
use lobcast::features::{extract_day, zscore_fit, FEATURES};
use lobcast::repr::{ae_train, AutoencoderConfig};
use lobcast::seed;
use lobcast::synth::{generate_stock, MarketConfig};

fn main() -> lobcast::Result<()> {
    let cfg = MarketConfig {
        stocks: 1,
        days: 2,
        ..Default::default()
    };
    let days = generate_stock(&cfg, 0)?;
    let train = extract_day(&block_stream(&days[0]))?;
    let test = extract_day(&block_stream(&days[1]))?;

    let stats = zscore_fit(train.vectors.iter().map(|v| &v.values[..]), train.key.to_string())?;
    let normalize = |d: &lobcast::features::DayFeatures| -> lobcast::Result<Vec<f64>> {
        let mut out = Vec::with_capacity(d.vectors.len() * FEATURES);
        for v in &d.vectors {
            out.extend(stats.apply(&v.values)?);
        }
        Ok(out)
    };
    let x = normalize(&train)?;
    let y = normalize(&test)?;

    let ae_cfg = AutoencoderConfig {
        epochs: 10,
        ..Default::default()
    };
    let mut rng = seed::rng(7, "autoencoder");
    let (model, report) = ae_train(&x, FEATURES, &ae_cfg, &mut rng)?;
    println!("{} samples, initial loss {:.4}", report.samples, report.initial_loss);
    for (e, (l, lr)) in report.epoch_losses.iter().zip(&report.learning_rates).enumerate() {
        println!("  epoch {:>2}: loss {:.4} (lr {lr})", e + 1, l);
    }
    println!("held-out day loss {:.4}", model.loss(&y));
    let code = model.encode(&y[..FEATURES])?;
    println!("code ({} values): {:.3?}", code.len(), &code[..6]);
    Ok(())
}
