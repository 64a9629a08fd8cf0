//! RBF-prototype network on separable blobs: k-means prototypes, a
//! pairwise-distance spread and a linear SVM output layer.
//!
//! cargo run --release --example slfn_blobs

mod common;

use lobcast::classifiers::{slfn_train, Classifier, SlfnConfig, SvmConfig};
use lobcast::eval::accuracy;
use lobcast::seed;

fn main() -> lobcast::Result<()> {
    let (x, y) = common::blobs([1000, 1000, 1000], 1.0, 1);
    let (xt, yt) = common::blobs([300, 300, 300], 1.0, 2);
    let cfg = SlfnConfig {
        hidden: 50,
        output: SvmConfig {
            c: 1.0,
            ..Default::default()
        },
        ..Default::default()
    };
    let model = slfn_train(&x, 2, &y, &cfg, &mut seed::rng(1, "slfn"))?;
    println!("{} prototypes, sigma {:.3}", model.hidden, model.sigma);
    let clf = Classifier::Slfn(model);
    println!(
        "train accuracy {:.2}%, held-out {:.2}%",
        100.0 * accuracy(&clf.predict_batch(&x)?, &y),
        100.0 * accuracy(&clf.predict_batch(&xt)?, &yt)
    );
    Ok(())
}
