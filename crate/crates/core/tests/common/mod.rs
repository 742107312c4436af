#![allow(dead_code)]

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use svrand::bitio::BitSequence;

/// Position-by-position window counts over a plain byte vector.
pub fn scan_counts(bits: &[u8], width: usize) -> HashMap<u64, u64> {
    let mut counts = HashMap::new();
    if width == 0 || width > bits.len() {
        return counts;
    }
    for start in 0..=bits.len() - width {
        let mut key = 0u64;
        for &b in &bits[start..start + width] {
            key = key * 2 + b as u64;
        }
        *counts.entry(key).or_insert(0) += 1;
    }
    counts
}

/// ε̃_h evaluated directly from its definition over all 2^h histories.
pub fn brute_epsilon(bits: &[u8], h: usize) -> f64 {
    let n = bits.len();
    let hist = scan_counts(bits, h);
    let ext = scan_counts(bits, h + 1);
    let mut worst = 0.0f64;
    for w in 0..(1u64 << h) {
        let total = if h == 0 { n as u64 } else { hist.get(&w).copied().unwrap_or(0) };
        if total == 0 {
            continue;
        }
        for b in 0..2 {
            let c = ext.get(&(w * 2 + b)).copied().unwrap_or(0);
            worst = worst.max((c as f64 / total as f64 - 0.5).abs());
        }
    }
    worst
}

pub fn random_bits(seed: u64, max_len: usize) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=max_len);
    let p: f64 = rng.random_range(0.1..0.9);
    (0..n).map(|_| rng.random_bool(p) as u8).collect()
}

pub fn seq(bits: &[u8]) -> BitSequence {
    BitSequence::from_bits(bits.iter().copied()).unwrap()
}
