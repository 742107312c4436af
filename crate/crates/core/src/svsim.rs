//! Synthetic ε-SV sources with known ε.
//!
//! * `iid-bias`: every bit is 1 with probability `1/2 + ε`.
//! * `pattern-bias`: after `m` fair warm-up bits, bit `i` is 1 with
//!   probability `1/2 + σ(w)·ε`, where `w` is the previous `m` bits and
//!   `σ(w) ∈ {+1, −1}` comes from a sign table.
//!
//! Every conditional probability used lies in `[1/2 − ε, 1/2 + ε]` and the
//! bound is attained, so the true SV parameter is exactly `ε`.

use rand::distr::{Bernoulli, Distribution};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bitio::{BitSequence, BitSequenceBuilder};
use crate::error::{Error, Result};

/// Largest supported pattern order.
pub const MAX_ORDER: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SourceKind {
    IidBias,
    PatternBias {
        order: usize,
        /// Entry `w` is the sign for history `w` (earliest bit most
        /// significant): `true` is +1, `false` is −1.
        sign_table: Vec<bool>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceSpec {
    pub kind: SourceKind,
    pub epsilon: f64,
    pub n: usize,
    pub seed: u64,
}

impl SourceSpec {
    pub fn iid(epsilon: f64, n: usize, seed: u64) -> Self {
        Self {
            kind: SourceKind::IidBias,
            epsilon,
            n,
            seed,
        }
    }

    pub fn pattern(order: usize, sign_table: Vec<bool>, epsilon: f64, n: usize, seed: u64) -> Self {
        Self {
            kind: SourceKind::PatternBias { order, sign_table },
            epsilon,
            n,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.5).contains(&self.epsilon) {
            return Err(Error::InvalidSpec(format!(
                "epsilon {} outside [0, 1/2]",
                self.epsilon
            )));
        }
        if self.n == 0 {
            return Err(Error::InvalidSpec("n must be at least 1".into()));
        }
        if let SourceKind::PatternBias { order, sign_table } = &self.kind {
            if *order > MAX_ORDER {
                return Err(Error::InvalidSpec(format!(
                    "order {order} exceeds maximum {MAX_ORDER}"
                )));
            }
            if sign_table.len() != 1usize << order {
                return Err(Error::InvalidSpec(format!(
                    "sign table has {} entries, order {order} needs {}",
                    sign_table.len(),
                    1usize << order
                )));
            }
        }
        Ok(())
    }
}

/// The SV parameter of the source described by `spec`.
pub fn true_epsilon(spec: &SourceSpec) -> f64 {
    spec.epsilon
}

/// Draws `spec.n` bits. The output depends only on `spec`.
pub fn generate(spec: &SourceSpec) -> Result<BitSequence> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = BitSequenceBuilder::with_capacity(spec.n);
    let up = Bernoulli::new(0.5 + spec.epsilon).expect("probability in [0, 1]");
    let down = Bernoulli::new(0.5 - spec.epsilon).expect("probability in [0, 1]");

    match &spec.kind {
        SourceKind::IidBias if spec.epsilon == 0.0 => {
            fill_fair(&mut rng, &mut out, spec.n);
        }
        SourceKind::IidBias => {
            for _ in 0..spec.n {
                out.push(up.sample(&mut rng));
            }
        }
        SourceKind::PatternBias { order, sign_table } => {
            let order = *order;
            let mask = (1u64 << order) - 1;
            let mut history = 0u64;
            let fair = Bernoulli::new(0.5).expect("valid probability");
            for i in 0..spec.n {
                let bit = if i < order {
                    fair.sample(&mut rng)
                } else if sign_table[history as usize] {
                    up.sample(&mut rng)
                } else {
                    down.sample(&mut rng)
                };
                out.push(bit);
                history = ((history << 1) | bit as u64) & mask;
            }
        }
    }
    out.finish()
}

fn fill_fair(rng: &mut ChaCha8Rng, out: &mut BitSequenceBuilder, n: usize) {
    for _ in 0..n / 64 {
        out.push_word(rng.next_u64());
    }
    let rest = n % 64;
    if rest > 0 {
        let word = rng.next_u64();
        for i in 0..rest {
            out.push((word >> (63 - i)) & 1 == 1);
        }
    }
}

/// Parses a hexadecimal sign table for `order`: bit `w` of the number (bit 0
/// least significant) is the sign for history `w`, 1 meaning +1.
pub fn parse_sign_table(hex: &str, order: usize) -> Result<Vec<bool>> {
    if order > MAX_ORDER {
        return Err(Error::InvalidSpec(format!(
            "order {order} exceeds maximum {MAX_ORDER}"
        )));
    }
    let digits = hex.trim().trim_start_matches("0x").trim_start_matches("0X");
    if digits.is_empty() {
        return Err(Error::InvalidSpec("empty sign table".into()));
    }
    let entries = 1usize << order;
    let mut table = vec![false; entries];
    for (pos, c) in digits.chars().rev().enumerate() {
        let nibble = c
            .to_digit(16)
            .ok_or_else(|| Error::InvalidSpec(format!("invalid hex digit `{c}` in sign table")))?;
        for bit in 0..4 {
            if nibble >> bit & 1 == 1 {
                let index = pos * 4 + bit;
                if index >= entries {
                    return Err(Error::InvalidSpec(format!(
                        "sign table sets entry {index}, order {order} has only {entries}"
                    )));
                }
                table[index] = true;
            }
        }
    }
    Ok(table)
}

/// Inverse of [`parse_sign_table`].
pub fn format_sign_table(table: &[bool]) -> String {
    let nibbles = table.len().div_ceil(4).max(1);
    (0..nibbles)
        .rev()
        .map(|pos| {
            let value = (0..4)
                .filter(|bit| table.get(pos * 4 + bit).copied().unwrap_or(false))
                .fold(0u32, |acc, bit| acc | 1 << bit);
            char::from_digit(value, 16).expect("nibble")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saturated_iid_is_all_ones() {
        let s = generate(&SourceSpec::iid(0.5, 1000, 3)).unwrap();
        assert_eq!(s.count_ones(), 1000);
    }

    #[test]
    fn same_seed_same_bits() {
        let spec = SourceSpec::pattern(2, vec![true, false, false, true], 0.2, 5000, 9);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = SourceSpec { seed: 10, ..spec.clone() };
        assert_ne!(generate(&spec).unwrap(), generate(&other).unwrap());
        let fair = SourceSpec::iid(0.0, 1001, 5);
        assert_eq!(generate(&fair).unwrap(), generate(&fair).unwrap());
        assert_eq!(generate(&fair).unwrap().len(), 1001);
    }

    #[test]
    fn true_epsilon_is_spec_epsilon() {
        assert_eq!(true_epsilon(&SourceSpec::iid(0.1, 10, 0)), 0.1);
        assert_eq!(true_epsilon(&SourceSpec::pattern(2, vec![true; 4], 0.2, 10, 0)), 0.2);
        assert_eq!(true_epsilon(&SourceSpec::iid(0.0, 10, 0)), 0.0);
    }

    #[test]
    fn invalid_specs() {
        assert!(generate(&SourceSpec::iid(0.6, 10, 0)).is_err());
        assert!(generate(&SourceSpec::iid(-0.1, 10, 0)).is_err());
        assert!(generate(&SourceSpec::iid(f64::NAN, 10, 0)).is_err());
        assert!(generate(&SourceSpec::iid(0.1, 0, 0)).is_err());
        assert!(generate(&SourceSpec::pattern(2, vec![true; 3], 0.1, 10, 0)).is_err());
    }

    #[test]
    fn sign_table_hex() {
        assert_eq!(parse_sign_table("1", 1).unwrap(), vec![true, false]);
        assert_eq!(parse_sign_table("0x9", 2).unwrap(), vec![true, false, false, true]);
        assert!(parse_sign_table("4", 1).is_err());
        assert!(parse_sign_table("g", 1).is_err());
        let table = parse_sign_table("a5c3", 4).unwrap();
        assert_eq!(format_sign_table(&table), "a5c3");
        assert_eq!(format_sign_table(&[true, false]), "1");
    }

    #[test]
    fn order_zero_pattern_is_signed_iid() {
        let s = generate(&SourceSpec::pattern(0, vec![false], 0.5, 200, 1)).unwrap();
        assert_eq!(s.count_ones(), 0);
    }
}
