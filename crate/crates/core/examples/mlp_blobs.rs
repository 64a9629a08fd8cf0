//! Train the two-hidden-layer MLP on separable blobs and save, reload and
//! re-check the model.
//!
//! cargo run --release --example mlp_blobs

mod common;

use lobcast::classifiers::{mlp_train, Classifier, MlpConfig};
use lobcast::eval::accuracy;
use lobcast::seed;

fn main() -> lobcast::Result<()> {
    let (x, y) = common::blobs([1000, 1000, 1000], 1.0, 1);
    let (xt, yt) = common::blobs([300, 300, 300], 1.0, 2);
    let cfg = MlpConfig {
        hidden: vec![32, 32],
        epochs: 30,
        batch_size: 64,
        ..Default::default()
    };
    let (model, report) = mlp_train(&x, 2, &y, &cfg, &mut seed::rng(1, "mlp"))?;
    println!("initial loss {:.4}, final {:.4}", report.initial_loss, report.epoch_losses.last().unwrap());

    let clf = Classifier::Mlp(model);
    let train_acc = accuracy(&clf.predict_batch(&x)?, &y);
    let test_acc = accuracy(&clf.predict_batch(&xt)?, &yt);
    println!("train accuracy {:.2}%, held-out {:.2}%", 100.0 * train_acc, 100.0 * test_acc);

    let path = std::env::temp_dir().join("lobcast-mlp-blobs.lobm");
    clf.save(&path)?;
    let back = Classifier::load(&path)?;
    println!("reloaded from {} identical: {}", path.display(), back == clf);
    Ok(())
}
