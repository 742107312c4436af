//! Aggregation of an ε̃_h profile into one ε.
//!
//! A combiner maps `(ε̃_0, …, ε̃_h)` in `[0, 1/2]^{h+1}` to `[0, 1/2]`. The
//! built-in combiners are weighted averages with positive, non-increasing
//! weights that sum to one, which is enough for all four axioms checked by
//! [`check_axioms`]:
//!
//! * A1 (zero): the all-zero profile maps to 0.
//! * A2 (monotonicity): raising one coordinate never lowers the output.
//! * A3 (position influence): moving mass from coordinate `i` to a later
//!   coordinate `j > i` never raises the output.
//! * A4 (normalization): a constant profile `(a, …, a)` maps to `a`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::estimator::EpsilonProfile;

/// Absolute tolerance for normalization and axiom comparisons.
pub const TOLERANCE: f64 = 1e-12;

/// A function of the first `h_max + 1` profile entries.
pub trait Combiner: Send + Sync {
    fn name(&self) -> String;

    /// Combines `epsilons`, whose length is `h_max + 1`.
    fn combine(&self, epsilons: &[f64]) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightFamily {
    /// `w_h ∝ 2^{-h}`.
    Exponential,
    /// `w_h ∝ (h + 1)^{-k}`.
    Polynomial { k: u32 },
}

impl fmt::Display for WeightFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightFamily::Exponential => f.write_str("exp"),
            WeightFamily::Polynomial { k } => write!(f, "poly:{k}"),
        }
    }
}

impl FromStr for WeightFamily {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "exp" => Ok(WeightFamily::Exponential),
            _ => {
                let k = s
                    .strip_prefix("poly:")
                    .ok_or_else(|| format!("unknown combiner `{s}` (expected exp or poly:K)"))?;
                let k: u32 = k
                    .parse()
                    .map_err(|_| format!("invalid polynomial order `{k}`"))?;
                if k == 0 {
                    return Err(Error::InvalidPolynomialOrder.to_string());
                }
                Ok(WeightFamily::Polynomial { k })
            }
        }
    }
}

impl Serialize for WeightFamily {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WeightScheme {
    pub family: WeightFamily,
    pub h_max: usize,
}

impl WeightScheme {
    pub fn exponential(h_max: usize) -> Self {
        Self {
            family: WeightFamily::Exponential,
            h_max,
        }
    }

    pub fn polynomial(k: u32, h_max: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidPolynomialOrder);
        }
        Ok(Self {
            family: WeightFamily::Polynomial { k },
            h_max,
        })
    }

    /// Unnormalized weights and their sum.
    fn raw(&self) -> Result<(Vec<f64>, f64)> {
        match self.family {
            WeightFamily::Exponential => {
                let raw: Vec<f64> = (0..=self.h_max).map(|h| 0.5f64.powi(h as i32)).collect();
                // Closed form of the geometric sum 2^0 + … + 2^{-h_max}.
                let norm = 2.0 - 0.5f64.powi(self.h_max as i32);
                Ok((raw, norm))
            }
            WeightFamily::Polynomial { k } => {
                if k == 0 {
                    return Err(Error::InvalidPolynomialOrder);
                }
                let raw: Vec<f64> = (0..=self.h_max)
                    .map(|h| ((h + 1) as f64).powi(-(k as i32)))
                    .collect();
                let norm = raw.iter().sum();
                Ok((raw, norm))
            }
        }
    }

    /// Normalized weights `w_0..=w_{h_max}`.
    pub fn weights(&self) -> Result<Vec<f64>> {
        let (raw, norm) = self.raw()?;
        Ok(raw.into_iter().map(|w| w / norm).collect())
    }
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (h_max={})", self.family, self.h_max)
    }
}

/// Weights of a scheme, ready to combine.
///
/// The output is `Σ r_h ε_h / Σ r_h` over the unnormalized weights `r_h`,
/// so constant profiles such as all-1/2 come back exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedAverage {
    name: String,
    raw: Vec<f64>,
    norm: f64,
}

impl WeightedAverage {
    pub fn from_scheme(scheme: &WeightScheme) -> Result<Self> {
        let (raw, norm) = scheme.raw()?;
        Ok(Self {
            name: scheme.family.to_string(),
            raw,
            norm,
        })
    }

    /// Arbitrary positive weights, normalized by their sum. No ordering is
    /// required, so this can build combiners that break the axioms.
    pub fn from_weights(name: impl Into<String>, weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights("no weights".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::InvalidWeights("weights must be finite and positive".into()));
        }
        let norm = weights.iter().sum();
        Ok(Self {
            name: name.into(),
            raw: weights,
            norm,
        })
    }

    pub fn h_max(&self) -> usize {
        self.raw.len() - 1
    }

    pub fn weights(&self) -> Vec<f64> {
        self.raw.iter().map(|w| w / self.norm).collect()
    }

    /// `w_h · ε_h` for each `h`.
    pub fn contributions(&self, epsilons: &[f64]) -> Vec<f64> {
        self.raw
            .iter()
            .zip(epsilons)
            .map(|(w, e)| w * e / self.norm)
            .collect()
    }
}

impl Combiner for WeightedAverage {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn combine(&self, epsilons: &[f64]) -> f64 {
        let weighted: f64 = self.raw.iter().zip(epsilons).map(|(w, e)| w * e).sum();
        (weighted / self.norm).clamp(0.0, 0.5)
    }
}

/// Maximum over `ε̃_0..=ε̃_{h_max}`. Diagnostic only: a single poorly
/// estimated long history dominates it.
#[derive(Debug, Clone, Copy, Default)]
pub struct MaxCombiner;

impl Combiner for MaxCombiner {
    fn name(&self) -> String {
        "max".into()
    }

    fn combine(&self, epsilons: &[f64]) -> f64 {
        epsilons.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CombinerReport {
    pub scheme: WeightScheme,
    pub final_epsilon: f64,
    pub per_h_contributions: Vec<f64>,
}

/// Weighted average of the first `scheme.h_max + 1` profile entries.
pub fn combine(profile: &EpsilonProfile, scheme: &WeightScheme) -> Result<CombinerReport> {
    if scheme.h_max > profile.h_max {
        return Err(Error::ProfileTooShort {
            needed: scheme.h_max,
            available: profile.h_max,
        });
    }
    let avg = WeightedAverage::from_scheme(scheme)?;
    let epsilons = &profile.epsilons[..=scheme.h_max];
    Ok(CombinerReport {
        scheme: *scheme,
        final_epsilon: avg.combine(epsilons),
        per_h_contributions: avg.contributions(epsilons),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Axiom {
    Zero,
    Monotonicity,
    PositionInfluence,
    Normalization,
}

impl Axiom {
    pub fn label(self) -> &'static str {
        match self {
            Axiom::Zero => "A1",
            Axiom::Monotonicity => "A2",
            Axiom::PositionInfluence => "A3",
            Axiom::Normalization => "A4",
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A profile pair witnessing an axiom violation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub axiom: Axiom,
    pub trial: usize,
    pub before: Vec<f64>,
    pub after: Vec<f64>,
    pub output_before: f64,
    pub output_after: f64,
    pub detail: String,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} violated at trial {}: {} (ψ before = {:.15}, after = {:.15})",
            self.axiom, self.trial, self.detail, self.output_before, self.output_after
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub combiner: String,
    pub h_max: usize,
    pub trials: usize,
    pub seed: u64,
    /// First counterexample per violated axiom, in A1..A4 order.
    pub counterexamples: Vec<Counterexample>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty()
    }

    pub fn failed_axioms(&self) -> Vec<Axiom> {
        self.counterexamples.iter().map(|c| c.axiom).collect()
    }
}

/// Checks A1-A4 (and the `[0, 1/2]` output range, reported under A4) on
/// `trials` random profiles of length `h_max + 1`. Trial `t` draws from a
/// ChaCha stream selected by `t`, so the report depends only on the seed.
pub fn check_axioms(combiner: &dyn Combiner, h_max: usize, trials: usize, seed: u64) -> AxiomReport {
    use rayon::prelude::*;

    let len = h_max + 1;
    let eval = |p: &[f64]| combiner.combine(p);
    let mut found: Vec<Counterexample> = Vec::new();

    let zeros = vec![0.0; len];
    let z = eval(&zeros);
    if z.abs() > TOLERANCE {
        found.push(Counterexample {
            axiom: Axiom::Zero,
            trial: 0,
            before: zeros.clone(),
            after: zeros,
            output_before: z,
            output_after: z,
            detail: "zero profile does not map to 0".into(),
        });
    }

    let per_trial: Vec<Vec<Counterexample>> = (0..trials)
        .into_par_iter()
        .map(|trial| run_trial(&eval, len, trial, seed))
        .collect();

    for axiom in [Axiom::Monotonicity, Axiom::PositionInfluence, Axiom::Normalization] {
        if let Some(c) = per_trial.iter().flatten().find(|c| c.axiom == axiom) {
            found.push(c.clone());
        }
    }

    AxiomReport {
        combiner: combiner.name(),
        h_max,
        trials,
        seed,
        counterexamples: found,
    }
}

fn run_trial(eval: &(dyn Fn(&[f64]) -> f64 + Sync), len: usize, trial: usize, seed: u64) -> Vec<Counterexample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    let mut out = Vec::new();

    let base: Vec<f64> = (0..len).map(|_| rng.random_range(0.0..=0.5)).collect();
    let f_base = eval(&base);

    // A2: raise one coordinate.
    let i = rng.random_range(0..len);
    let room = 0.5 - base[i];
    if room > 0.0 {
        let delta = rng.random_range(0.0..=room);
        let mut raised = base.clone();
        raised[i] += delta;
        let f_raised = eval(&raised);
        if f_raised < f_base - TOLERANCE {
            out.push(Counterexample {
                axiom: Axiom::Monotonicity,
                trial,
                detail: format!("raising ε_{i} by {delta:e} lowered the output"),
                before: base.clone(),
                after: raised,
                output_before: f_base,
                output_after: f_raised,
            });
        }
    }

    // A3: move mass from i to a later j.
    if len >= 2 {
        let i = rng.random_range(0..len - 1);
        let j = rng.random_range(i + 1..len);
        let room = base[i].min(0.5 - base[j]);
        if room > 0.0 {
            let delta = rng.random_range(0.0..=room);
            let mut shifted = base.clone();
            shifted[i] -= delta;
            shifted[j] += delta;
            let f_shifted = eval(&shifted);
            if f_shifted > f_base + TOLERANCE {
                out.push(Counterexample {
                    axiom: Axiom::PositionInfluence,
                    trial,
                    detail: format!("moving {delta:e} from ε_{i} to ε_{j} raised the output"),
                    before: base.clone(),
                    after: shifted,
                    output_before: f_base,
                    output_after: f_shifted,
                });
            }
        }
    }

    // A4: constant profile, plus the output range of the random profile.
    let a = 0.5 - rng.random_range(0.0..0.5);
    let constant = vec![a; len];
    let f_const = eval(&constant);
    if (f_const - a).abs() > TOLERANCE {
        out.push(Counterexample {
            axiom: Axiom::Normalization,
            trial,
            detail: format!("constant profile {a} mapped to {f_const}"),
            before: constant.clone(),
            after: constant,
            output_before: a,
            output_after: f_const,
        });
    } else if !(0.0..=0.5).contains(&f_base) {
        out.push(Counterexample {
            axiom: Axiom::Normalization,
            trial,
            detail: format!("output {f_base} outside [0, 1/2]"),
            before: base.clone(),
            after: base,
            output_before: f_base,
            output_after: f_base,
        });
    }
    out
}

/// Named combiners checked together.
#[derive(Default)]
pub struct CombinerRegistry {
    entries: Vec<Box<dyn Combiner>>,
}

impl CombinerRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// `exp` and `poly:1..=3` at the given `h_max`.
    pub fn standard(h_max: usize) -> Self {
        let mut reg = Self::new();
        reg.register(Box::new(
            WeightedAverage::from_scheme(&WeightScheme::exponential(h_max)).expect("exp scheme"),
        ));
        for k in 1..=3 {
            let scheme = WeightScheme::polynomial(k, h_max).expect("k >= 1");
            reg.register(Box::new(WeightedAverage::from_scheme(&scheme).expect("poly scheme")));
        }
        reg
    }

    pub fn register(&mut self, combiner: Box<dyn Combiner>) {
        self.entries.push(combiner);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Combiner> {
        self.entries.iter().map(|c| c.as_ref())
    }

    pub fn check_all(&self, h_max: usize, trials: usize, seed: u64) -> Vec<AxiomReport> {
        self.iter()
            .map(|c| check_axioms(c, h_max, trials, seed))
            .collect()
    }
}

/// Weights increasing with `h`: positive and normalized, but violating A3.
pub fn increasing_weights_fixture(h_max: usize) -> WeightedAverage {
    let weights = (0..=h_max).map(|h| (h + 1) as f64).collect();
    WeightedAverage::from_weights("increasing-weights", weights).expect("positive weights")
}
