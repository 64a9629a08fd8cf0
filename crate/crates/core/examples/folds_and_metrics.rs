//! Build both evaluation protocols over a 5-stock, 10-day key set and score a
//! toy prediction vector.
//!
//! cargo run --example folds_and_metrics

use lobcast::book::StockDay;
use lobcast::eval::{confusion_matrix, macro_metrics, make_folds, Protocol};
use lobcast::labeling::Label;

fn main() -> lobcast::Result<()> {
    let keys: Vec<StockDay> = (1..=5).flat_map(|s| (1..=10).map(move |d| StockDay::new(format!("S{s:02}"), d))).collect();
    for protocol in [Protocol::Anchored, Protocol::Holdout] {
        let plan = make_folds(protocol, &keys)?;
        println!("{}: {} folds", protocol.name(), plan.folds.len());
        for f in &plan.folds {
            let ok = f.check_isolation(protocol).is_ok();
            println!("  {:<16} train {:>2} test {:>2} isolated {ok}", f.name, f.train.len(), f.test.len());
        }
        for w in &plan.warnings {
            println!("  warning: {w}");
        }
    }

    use Label::*;
    let truth = [Down, Down, Down, Flat, Flat, Flat, Flat, Up, Up, Up];
    let pred = [Down, Down, Flat, Flat, Flat, Up, Flat, Up, Up, Down];
    let m = macro_metrics(&pred, &truth)?;
    println!("\nconfusion (rows = truth): {:?}", confusion_matrix(&pred, &truth));
    for (name, c) in ["down", "flat", "up"].iter().zip(&m.per_class) {
        println!("  {name:<10} P {:.3} R {:.3} F {:.3}", c.precision, c.recall, c.f);
    }
    println!("macro P {:.3} R {:.3} F {:.3}", m.macro_precision, m.macro_recall, m.macro_f);
    Ok(())
}
