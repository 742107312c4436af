//! Local discretizations of a real-valued series into bits.
//!
//! Every method maps ties to 0. Methods 1-3 emit one bit per sample;
//! methods 4 and 5 compare consecutive samples and emit `len - 1` bits
//! (no wrap-around at the end of the series).

use std::fmt;

use serde::Serialize;

use crate::bitio::{BitSequence, BitSequenceBuilder, RealSeries};
use crate::error::{Error, Result};

/// A named mapping from a real series to bits. The five built-in methods
/// implement it; callers can supply their own.
pub trait Discretizer {
    fn name(&self) -> String;
    fn discretize(&self, series: &RealSeries) -> Result<BitSequence>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(into = "u8")]
pub enum DiscretizationMethod {
    /// 0 iff `d_i >= 0`.
    Sign = 1,
    /// 0 iff `d_i >= mean(d)`.
    Mean = 2,
    /// 0 iff `|d_i| >= mean(|d|)`.
    MeanAbs = 3,
    /// 0 iff `d_{i+1} >= d_i`.
    Increase = 4,
    /// 0 iff `|d_{i+1}| >= |d_i|`.
    AbsIncrease = 5,
}

impl DiscretizationMethod {
    pub const ALL: [DiscretizationMethod; 5] = [
        DiscretizationMethod::Sign,
        DiscretizationMethod::Mean,
        DiscretizationMethod::MeanAbs,
        DiscretizationMethod::Increase,
        DiscretizationMethod::AbsIncrease,
    ];

    pub fn from_id(id: u8) -> Result<Self> {
        Self::ALL
            .get((id as usize).wrapping_sub(1))
            .copied()
            .ok_or(Error::UnknownMethod(id))
    }

    pub fn id(self) -> u8 {
        self as u8
    }

    /// Whether the method compares neighbouring samples.
    pub fn is_pairwise(self) -> bool {
        matches!(self, Self::Increase | Self::AbsIncrease)
    }

    /// Number of bits produced from `input_len` samples.
    pub fn output_len(self, input_len: usize) -> usize {
        if self.is_pairwise() {
            input_len.saturating_sub(1)
        } else {
            input_len
        }
    }
}

impl From<DiscretizationMethod> for u8 {
    fn from(m: DiscretizationMethod) -> u8 {
        m.id()
    }
}

impl fmt::Display for DiscretizationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id())
    }
}

impl Discretizer for DiscretizationMethod {
    fn name(&self) -> String {
        let label = match self {
            Self::Sign => "sign",
            Self::Mean => "mean-threshold",
            Self::MeanAbs => "abs-mean-threshold",
            Self::Increase => "pairwise-increase",
            Self::AbsIncrease => "pairwise-abs-increase",
        };
        format!("{}:{label}", self.id())
    }

    fn discretize(&self, series: &RealSeries) -> Result<BitSequence> {
        discretize(series, *self)
    }
}

/// Adapts a closure into a [`Discretizer`].
pub struct FnDiscretizer<F> {
    name: String,
    func: F,
}

impl<F> FnDiscretizer<F>
where
    F: Fn(&RealSeries) -> Result<BitSequence>,
{
    pub fn new(name: impl Into<String>, func: F) -> Self {
        Self {
            name: name.into(),
            func,
        }
    }
}

impl<F> Discretizer for FnDiscretizer<F>
where
    F: Fn(&RealSeries) -> Result<BitSequence>,
{
    fn name(&self) -> String {
        self.name.clone()
    }

    fn discretize(&self, series: &RealSeries) -> Result<BitSequence> {
        (self.func)(series)
    }
}

pub fn discretize(series: &RealSeries, method: DiscretizationMethod) -> Result<BitSequence> {
    let d = series.values();
    if method.is_pairwise() && d.len() < 2 {
        return Err(Error::InsufficientData);
    }
    let mut out = BitSequenceBuilder::with_capacity(method.output_len(d.len()));
    match method {
        DiscretizationMethod::Sign => threshold(&mut out, d.iter().copied(), 0.0),
        DiscretizationMethod::Mean => threshold(&mut out, d.iter().copied(), mean(series)),
        DiscretizationMethod::MeanAbs => {
            threshold(&mut out, d.iter().map(|v| v.abs()), mean_abs(series))
        }
        DiscretizationMethod::Increase => {
            for pair in d.windows(2) {
                out.push(pair[1] < pair[0]);
            }
        }
        DiscretizationMethod::AbsIncrease => {
            for pair in d.windows(2) {
                out.push(pair[1].abs() < pair[0].abs());
            }
        }
    }
    out.finish()
}

fn threshold(out: &mut BitSequenceBuilder, values: impl Iterator<Item = f64>, level: f64) {
    for v in values {
        out.push(v < level);
    }
}

/// Arithmetic mean with compensated summation.
pub fn mean(series: &RealSeries) -> f64 {
    compensated_sum(series.values().iter().copied()) / series.len() as f64
}

/// Arithmetic mean of absolute values with compensated summation.
pub fn mean_abs(series: &RealSeries) -> f64 {
    compensated_sum(series.values().iter().map(|v| v.abs())) / series.len() as f64
}

// Neumaier's variant of Kahan summation.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}
