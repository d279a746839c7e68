use rand::seq::index::sample;

use crate::rng::{stream_rng, Stream};

/// Row indices (ascending) keeping every minority-class row and a seeded
/// sample of equally many majority-class rows.
pub fn balance_classes(labels: &[bool], seed: u64) -> Vec<usize> {
    let (pos, neg): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| labels[i]);
    let (minority, majority) = if pos.len() <= neg.len() { (pos, neg) } else { (neg, pos) };
    let mut rng = stream_rng(seed, Stream::Balance, 0);
    let mut keep: Vec<usize> = sample(&mut rng, majority.len(), minority.len())
        .into_iter()
        .map(|i| majority[i])
        .collect();
    keep.extend(minority);
    keep.sort_unstable();
    keep
}
