//! Shared toy data for the classifier examples.

use lobcast::labeling::Label;
use lobcast::seed;
use rand_distr::{Distribution, Normal};

/// Three Gaussian blobs in 2-D (σ = 0.5) around centers scaled by `spread`,
/// `counts[c]` points for class `c`, classes interleaved so contiguous splits
/// keep all three.
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
