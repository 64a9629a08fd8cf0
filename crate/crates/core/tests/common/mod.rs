#![allow(dead_code)]

use std::io::Write;
use std::sync::{Mutex, MutexGuard};

use lobcast::labeling::Label;
use lobcast::seed;
use rand_distr::{Distribution, Normal};

/// Serializes timing-sensitive and heavy tests within one test binary.
static HEAVY: Mutex<()> = Mutex::new(());

pub fn heavy() -> MutexGuard<'static, ()> {
    HEAVY.lock().unwrap_or_else(|e| e.into_inner())
}

/// Print one result line straight to stderr so it shows even when the test
/// harness captures output.
pub fn report(name: &str, pass: bool, detail: &str) {
    let line = format!("{name}: {} ({detail})\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
}

/// Three Gaussian blobs in 2-D (σ = 0.5) around (−4,−4), (0,4), (4,−4) scaled
/// by `spread`, `counts[c]` points of class `c`, classes interleaved.
pub fn blobs(counts: [usize; 3], spread: f64, s: u64) -> (Vec<f64>, Vec<Label>) {
    let mut rng = seed::rng(s, "blobs");
    let noise = Normal::new(0.0, 0.5).unwrap();
    let centers = [[-4.0, -4.0], [0.0, 4.0], [4.0, -4.0]];
    let n = counts.iter().sum::<usize>();
    let mut left = counts;
    let mut x = Vec::with_capacity(2 * n);
    let mut y = Vec::with_capacity(n);
    while y.len() < n {
        for c in 0..3 {
            if left[c] > 0 {
                left[c] -= 1;
                x.push(spread * centers[c][0] + noise.sample(&mut rng));
                x.push(spread * centers[c][1] + noise.sample(&mut rng));
                y.push(Label::from_class_index(c));
            }
        }
    }
    (x, y)
}

pub fn accuracy(pred: &[Label], truth: &[Label]) -> f64 {
    pred.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64
}
