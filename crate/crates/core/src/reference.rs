//! Straightforward reference implementations used by `selftest`.
//!
//! These scan the sequence position by position with no packing tricks and
//! share no code with the optimized counters in [`crate::estimator`].

use std::collections::HashMap;

use crate::bitio::BitSequence;

/// Counts of every width-`width` window, found by reading each window bit
/// by bit. Strings never seen are absent.
pub fn naive_counts(seq: &BitSequence, width: usize) -> HashMap<u64, u64> {
    let bits: Vec<u8> = seq.iter().collect();
    let mut counts = HashMap::new();
    if width == 0 || width > bits.len() {
        return counts;
    }
    for start in 0..=bits.len() - width {
        let key = bits[start..start + width]
            .iter()
            .fold(0u64, |acc, &b| (acc << 1) | b as u64);
        *counts.entry(key).or_insert(0) += 1;
    }
    counts
}

/// ε̃_h by enumerating every history string and matching it against the
/// sequence directly.
pub fn naive_epsilon(seq: &BitSequence, h: usize) -> f64 {
    let bits: Vec<u8> = seq.iter().collect();
    let n = bits.len();
    let occurrences = |pattern: &[u8]| -> usize {
        if pattern.is_empty() {
            return n;
        }
        bits.windows(pattern.len()).filter(|w| *w == pattern).count()
    };
    let mut worst = 0.0f64;
    let mut seen: Vec<Vec<u8>> = Vec::new();
    for start in 0..=n - h {
        let history = bits[start..start + h].to_vec();
        if seen.contains(&history) {
            continue;
        }
        let total = occurrences(&history);
        for b in [0u8, 1] {
            let mut extended = history.clone();
            extended.push(b);
            let ratio = occurrences(&extended) as f64 / total as f64;
            worst = worst.max((ratio - 0.5).abs());
        }
        seen.push(history);
    }
    worst
}
