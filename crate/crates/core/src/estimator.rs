//! Overlapping substring counts and the per-history deviations ε̃_h.
//!
//! For a history length `h`, ε̃_h is the largest deviation from 1/2 of the
//! empirical probability that a history `w` (h bits) is followed by a bit
//! `b`, estimated as `count(w·b) / count(w)`. Counting is overlapping and
//! never wraps around the end of the sequence. A history that never occurs
//! contributes nothing.
//!
//! [`Estimator::profile`] scans the sequence once, counting only windows of
//! the longest length `h_max + 1`. Every shorter table is then obtained by
//! summing the two one-bit extensions of each string and adding the single
//! occurrence that ends at the last bit of the sequence:
//!
//! ```text
//! count_L(w) = count_{L+1}(w·0) + count_{L+1}(w·1) + [w is the suffix of s]
//! ```

use std::collections::HashMap;

use serde::Serialize;

use crate::bitio::BitSequence;
use crate::error::{Error, Result};

/// Longest window whose bits fit in a `u64` key.
pub const MAX_WINDOW: usize = 64;
/// Longest supported history (`MAX_WINDOW - 1`).
pub const MAX_HISTORY: usize = MAX_WINDOW - 1;
/// Widths up to this use a dense `2^L` array; wider tables are hashed.
pub const DEFAULT_DENSE_LIMIT: usize = 26;

/// Which ratio form the estimator evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorMode {
    /// `count(w·b) / count(w)`; the empty history counts `n`.
    #[default]
    RawRatio,
    /// Each count divided by its number of windows first:
    /// `(count(w·b)/(n-h)) / (count(w)/(n-h+1))`, clamped to `[0, 1/2]`.
    /// The empty history occurs at `n + 1` positions.
    FiniteSize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimatorConfig {
    pub mode: EstimatorMode,
    /// Widest table stored densely.
    pub dense_limit: usize,
    /// Worker threads for counting; 1 counts on the calling thread.
    pub threads: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            mode: EstimatorMode::RawRatio,
            dense_limit: DEFAULT_DENSE_LIMIT,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Counts {
    Dense(Vec<u64>),
    Sparse(HashMap<u64, u64>),
}

/// Occurrence counts of every binary string of one fixed length.
///
/// Strings are keyed as integers with the earliest bit most significant.
#[derive(Debug, Clone)]
pub struct CountTable {
    width: usize,
    counts: Counts,
}

impl CountTable {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.counts, Counts::Dense(_))
    }

    /// Occurrences of `key`; zero for strings never seen or out of range.
    pub fn get(&self, key: u64) -> u64 {
        match &self.counts {
            Counts::Dense(v) => v.get(key as usize).copied().unwrap_or(0),
            Counts::Sparse(m) => m.get(&key).copied().unwrap_or(0),
        }
    }

    /// Sum of all counts.
    pub fn total(&self) -> u64 {
        match &self.counts {
            Counts::Dense(v) => v.iter().sum(),
            Counts::Sparse(m) => m.values().sum(),
        }
    }

    /// `(key, count)` pairs with nonzero count, in no particular order for
    /// sparse tables.
    pub fn nonzero(&self) -> Box<dyn Iterator<Item = (u64, u64)> + '_> {
        match &self.counts {
            Counts::Dense(v) => Box::new(
                v.iter()
                    .enumerate()
                    .filter(|(_, &c)| c > 0)
                    .map(|(k, &c)| (k as u64, c)),
            ),
            Counts::Sparse(m) => Box::new(m.iter().map(|(&k, &c)| (k, c))),
        }
    }

    /// Table for width `self.width - 1`. `suffix` is the last `width - 1`
    /// bits of the sequence, the only shorter window with no extension.
    fn shorten(&self, suffix: u64, dense_limit: usize) -> CountTable {
        debug_assert!(self.width >= 2);
        let width = self.width - 1;
        let counts = match &self.counts {
            Counts::Dense(v) => {
                let mut out: Vec<u64> = v.chunks_exact(2).map(|p| p[0] + p[1]).collect();
                out[suffix as usize] += 1;
                Counts::Dense(out)
            }
            Counts::Sparse(m) if width <= dense_limit => {
                let mut out = vec![0u64; 1usize << width];
                for (&k, &c) in m {
                    out[(k >> 1) as usize] += c;
                }
                out[suffix as usize] += 1;
                Counts::Dense(out)
            }
            Counts::Sparse(m) => {
                let mut out: HashMap<u64, u64> = HashMap::with_capacity(m.len());
                for (&k, &c) in m {
                    *out.entry(k >> 1).or_insert(0) += c;
                }
                *out.entry(suffix).or_insert(0) += 1;
                Counts::Sparse(out)
            }
        };
        CountTable { width, counts }
    }
}

impl PartialEq for CountTable {
    fn eq(&self, other: &Self) -> bool {
        if self.width != other.width {
            return false;
        }
        let covered = |a: &CountTable, b: &CountTable| a.nonzero().all(|(k, c)| b.get(k) == c);
        covered(self, other) && covered(other, self)
    }
}

/// Per-history deviations ε̃_0..=ε̃_{h_max} of one sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonProfile {
    pub n: usize,
    pub h_max: usize,
    pub mode: EstimatorMode,
    pub epsilons: Vec<f64>,
    /// Smallest `h` with ε̃_h = 1/2.
    pub first_trivial_h: Option<usize>,
}

impl EpsilonProfile {
    fn from_epsilons(n: usize, mode: EstimatorMode, epsilons: Vec<f64>) -> Self {
        let first_trivial_h = epsilons.iter().position(|&e| e == 0.5);
        Self {
            n,
            h_max: epsilons.len() - 1,
            mode,
            epsilons,
            first_trivial_h,
        }
    }

    /// Rows shown in tabular reports: up to and including the first 1/2.
    pub fn displayed(&self) -> &[f64] {
        match self.first_trivial_h {
            Some(h) => &self.epsilons[..=h],
            None => &self.epsilons,
        }
    }

    /// True when rows after `first_trivial_h` are hidden by [`displayed`](Self::displayed).
    pub fn is_truncated(&self) -> bool {
        self.displayed().len() < self.epsilons.len()
    }
}

/// `⌊log₂ n⌋ − 1`: the largest history for which every history string can
/// occur at least once.
pub fn default_hmax(n: usize) -> Result<usize> {
    if n < 2 {
        return Err(Error::SequenceTooShort { min: 2, len: n });
    }
    Ok(n.ilog2() as usize - 1)
}

#[derive(Debug, Clone, Default)]
pub struct Estimator {
    config: EstimatorConfig,
}

impl Estimator {
    pub fn new(config: EstimatorConfig) -> Self {
        Self { config }
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    /// Counts overlapping windows of `width` bits.
    pub fn count_substrings(&self, seq: &BitSequence, width: usize) -> Result<CountTable> {
        if width == 0 {
            return Err(Error::EmptyWindow);
        }
        if width > seq.len() {
            return Err(Error::WindowTooLong {
                window: width,
                len: seq.len(),
            });
        }
        if width > MAX_WINDOW {
            return Err(Error::WindowUnsupported {
                window: width,
                max: MAX_WINDOW,
            });
        }
        Ok(count_windows(seq, width, self.config.dense_limit, self.config.threads))
    }

    /// ε̃_h from two independently counted tables (widths `h` and `h + 1`).
    pub fn epsilon_h(&self, seq: &BitSequence, h: usize) -> Result<f64> {
        check_history(seq, h)?;
        let extended = self.count_substrings(seq, h + 1)?;
        let history = if h == 0 {
            None
        } else {
            Some(self.count_substrings(seq, h)?)
        };
        Ok(deviation(history.as_ref(), &extended, seq.len(), self.config.mode))
    }

    /// ε̃_h for every `h` in `0..=h_max` from a single scan of `seq`.
    pub fn profile(&self, seq: &BitSequence, h_max: usize) -> Result<EpsilonProfile> {
        check_history(seq, h_max)?;
        let n = seq.len();
        let mut epsilons = vec![0.0; h_max + 1];
        let mut extended = count_windows(seq, h_max + 1, self.config.dense_limit, self.config.threads);
        for h in (0..=h_max).rev() {
            if h == 0 {
                epsilons[0] = deviation(None, &extended, n, self.config.mode);
            } else {
                let history = extended.shorten(seq.window(n - h, h), self.config.dense_limit);
                epsilons[h] = deviation(Some(&history), &extended, n, self.config.mode);
                extended = history;
            }
        }
        Ok(EpsilonProfile::from_epsilons(n, self.config.mode, epsilons))
    }
}

pub fn count_substrings(seq: &BitSequence, width: usize) -> Result<CountTable> {
    Estimator::default().count_substrings(seq, width)
}

pub fn epsilon_h(seq: &BitSequence, h: usize) -> Result<f64> {
    Estimator::default().epsilon_h(seq, h)
}

pub fn profile(seq: &BitSequence, h_max: usize) -> Result<EpsilonProfile> {
    Estimator::default().profile(seq, h_max)
}

fn check_history(seq: &BitSequence, h: usize) -> Result<()> {
    if h >= seq.len() {
        return Err(Error::HistoryTooLong {
            history: h,
            len: seq.len(),
        });
    }
    if h > MAX_HISTORY {
        return Err(Error::HistoryUnsupported {
            history: h,
            max: MAX_HISTORY,
        });
    }
    Ok(())
}

/// Max over histories `w` and bits `b` of `|P̂(b | w) − 1/2|`.
///
/// `history` is the width-`h` table, `None` for the empty history.
fn deviation(history: Option<&CountTable>, extended: &CountTable, n: usize, mode: EstimatorMode) -> f64 {
    let h = extended.width - 1;
    let scale = match mode {
        EstimatorMode::RawRatio => 1.0,
        EstimatorMode::FiniteSize => (n - h + 1) as f64 / (n - h) as f64,
    };
    let worst = |total: u64, continuations: [u64; 2]| -> f64 {
        continuations
            .iter()
            .map(|&c| ((c as f64 / total as f64) * scale - 0.5).abs())
            .fold(0.0, f64::max)
            .min(0.5)
    };
    match history {
        None => {
            let total = match mode {
                EstimatorMode::RawRatio => n as u64,
                EstimatorMode::FiniteSize => n as u64 + 1,
            };
            worst(total, [extended.get(0), extended.get(1)])
        }
        Some(table) => {
            let mut max = 0.0f64;
            for (w, total) in table.nonzero() {
                let e = worst(total, [extended.get(w << 1), extended.get((w << 1) | 1)]);
                if e > max {
                    max = e;
                    if max >= 0.5 {
                        break;
                    }
                }
            }
            max
        }
    }
}

fn count_windows(seq: &BitSequence, width: usize, dense_limit: usize, threads: usize) -> CountTable {
    let positions = seq.len() - width + 1;
    let threads = threads.max(1).min(positions);
    let dense = width <= dense_limit;
    let bounds: Vec<(usize, usize)> = (0..threads)
        .map(|t| (positions * t / threads, positions * (t + 1) / threads))
        .collect();

    let counts = if threads == 1 {
        count_range(seq, width, dense, 0, positions)
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("failed to build counting thread pool");
        pool.install(|| {
            use rayon::prelude::*;
            bounds
                .par_iter()
                .map(|&(start, end)| count_range(seq, width, dense, start, end))
                .reduce_with(merge)
                .expect("at least one chunk")
        })
    };
    CountTable { width, counts }
}

/// Counts windows whose start index lies in `start..end`.
fn count_range(seq: &BitSequence, width: usize, dense: bool, start: usize, end: usize) -> Counts {
    let mask = if width == MAX_WINDOW { !0u64 } else { (1u64 << width) - 1 };
    let mut window = if width > 1 { seq.window(start, width - 1) } else { 0 };
    let windows = (start..end).map(move |i| {
        window = ((window << 1) | seq.bit(i + width - 1) as u64) & mask;
        window
    });
    if dense {
        let mut table = vec![0u64; 1usize << width];
        for w in windows {
            table[w as usize] += 1;
        }
        Counts::Dense(table)
    } else {
        let mut table: HashMap<u64, u64> = HashMap::with_capacity((end - start).min(1 << 20));
        for w in windows {
            *table.entry(w).or_insert(0) += 1;
        }
        Counts::Sparse(table)
    }
}

fn merge(a: Counts, b: Counts) -> Counts {
    match (a, b) {
        (Counts::Dense(mut x), Counts::Dense(y)) => {
            x.iter_mut().zip(y).for_each(|(p, q)| *p += q);
            Counts::Dense(x)
        }
        (Counts::Sparse(mut x), Counts::Sparse(y)) => {
            for (k, c) in y {
                *x.entry(k).or_insert(0) += c;
            }
            Counts::Sparse(x)
        }
        _ => unreachable!("chunks of one table share a representation"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(text: &str) -> BitSequence {
        BitSequence::parse(text).unwrap()
    }

    #[test]
    fn counts_0101_width_2() {
        let t = count_substrings(&seq("0101"), 2).unwrap();
        assert_eq!([t.get(0b00), t.get(0b01), t.get(0b10), t.get(0b11)], [0, 2, 1, 0]);
        assert_eq!(t.total(), 3);
    }

    #[test]
    fn counts_all_zero_width_1() {
        let t = count_substrings(&seq("0000"), 1).unwrap();
        assert_eq!((t.get(0), t.get(1)), (4, 0));
    }

    #[test]
    fn full_width_single_window() {
        let s = seq("1101001");
        let t = count_substrings(&s, 7).unwrap();
        assert_eq!(t.total(), 1);
        assert_eq!(t.get(0b1101001), 1);
    }

    #[test]
    fn window_errors() {
        assert!(matches!(count_substrings(&seq("01"), 3), Err(Error::WindowTooLong { .. })));
        assert!(matches!(count_substrings(&seq("01"), 0), Err(Error::EmptyWindow)));
        let long = BitSequence::from_bits(vec![0u8; 100]).unwrap();
        assert!(matches!(count_substrings(&long, 65), Err(Error::WindowUnsupported { .. })));
    }

    #[test]
    fn epsilon_hand_values() {
        assert!((epsilon_h(&seq("01101"), 0).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(epsilon_h(&seq("0101"), 1).unwrap(), 0.5);
        let zeros = seq("00000000");
        for h in 0..8 {
            assert_eq!(epsilon_h(&zeros, h).unwrap(), 0.5);
        }
    }

    #[test]
    fn history_must_be_shorter_than_sequence() {
        assert!(matches!(epsilon_h(&seq("0101"), 4), Err(Error::HistoryTooLong { .. })));
        assert!(matches!(profile(&seq("0101"), 4), Err(Error::HistoryTooLong { .. })));
        let long = BitSequence::from_bits(vec![0u8; 100]).unwrap();
        assert!(matches!(profile(&long, 64), Err(Error::HistoryUnsupported { .. })));
    }

    #[test]
    fn default_hmax_values() {
        assert_eq!(default_hmax(1_000_000).unwrap(), 18);
        assert_eq!(default_hmax(2).unwrap(), 0);
        assert_eq!(default_hmax(1 << 20).unwrap(), 19);
        assert!(default_hmax(1).is_err());
    }

    #[test]
    fn periodic_profile() {
        let s = BitSequence::from_bits((0..1024).map(|i| (i % 2) as u8)).unwrap();
        let p = profile(&s, 3).unwrap();
        assert_eq!(p.epsilons, vec![0.0, 0.5, 0.5, 0.5]);
        assert_eq!(p.first_trivial_h, Some(1));
        assert_eq!(p.displayed(), &[0.0, 0.5]);
        assert!(p.is_truncated());
    }

    #[test]
    fn all_zero_profile() {
        let s = BitSequence::from_bits(vec![0u8; 64]).unwrap();
        let p = profile(&s, 4).unwrap();
        assert_eq!(p.epsilons, vec![0.5; 5]);
        assert_eq!(p.first_trivial_h, Some(0));
    }

    #[test]
    fn sparse_and_dense_agree() {
        let bits: Vec<u8> = (0..3000u64).map(|i| ((i * 2654435761) >> 7 & 1) as u8).collect();
        let s = BitSequence::from_bits(bits).unwrap();
        let dense = Estimator::default().profile(&s, 10).unwrap();
        let sparse = Estimator::new(EstimatorConfig {
            dense_limit: 3,
            ..Default::default()
        })
        .profile(&s, 10)
        .unwrap();
        assert_eq!(dense, sparse);
        let t = Estimator::new(EstimatorConfig {
            dense_limit: 0,
            ..Default::default()
        })
        .count_substrings(&s, 5)
        .unwrap();
        assert!(!t.is_dense());
        assert_eq!(t, count_substrings(&s, 5).unwrap());
    }

    #[test]
    fn threads_do_not_change_counts() {
        let bits: Vec<u8> = (0..5000u64).map(|i| ((i * i * 31 + i) >> 3 & 1) as u8).collect();
        let s = BitSequence::from_bits(bits).unwrap();
        let serial = profile(&s, 11).unwrap();
        for threads in [2, 3, 7] {
            for dense_limit in [0, 26] {
                let est = Estimator::new(EstimatorConfig {
                    threads,
                    dense_limit,
                    ..Default::default()
                });
                assert_eq!(est.profile(&s, 11).unwrap(), serial);
            }
        }
    }

    #[test]
    fn finite_size_mode_stays_in_range() {
        let s = seq("0110100110010110");
        let est = Estimator::new(EstimatorConfig {
            mode: EstimatorMode::FiniteSize,
            ..Default::default()
        });
        let p = est.profile(&s, 3).unwrap();
        assert!(p.epsilons.iter().all(|e| (0.0..=0.5).contains(e)));
        // h = 0 reduces to |count(b)/n - 1/2|.
        let ones = s.count_ones() as f64 / s.len() as f64;
        assert!((p.epsilons[0] - (ones - 0.5).abs()).abs() < 1e-15);
    }

    #[test]
    fn window_of_64_bits() {
        let bits: Vec<u8> = (0..130u64).map(|i| ((i * 7919) >> 2 & 1) as u8).collect();
        let s = BitSequence::from_bits(bits).unwrap();
        let t = count_substrings(&s, 64).unwrap();
        assert_eq!(t.total(), 67);
        assert_eq!(t.get(s.window(0, 64)), 1 + (1..67).filter(|&i| s.window(i, 64) == s.window(0, 64)).count() as u64);
        let p = profile(&s, 63).unwrap();
        assert_eq!(p.epsilons.len(), 64);
    }
}
