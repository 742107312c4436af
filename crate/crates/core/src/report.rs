//! Estimate reports: a fixed-width table for people, CSV and JSON for tools.
//!
//! The table stops at the first ε̃_h equal to 1/2 and marks the cut with a
//! `⋮` row. CSV and JSON always carry the full profile.

use std::fmt::Write as _;

use serde::Serialize;

use crate::combine::CombinerReport;
use crate::estimator::EpsilonProfile;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputInfo {
    pub path: String,
    pub format: String,
    /// Bits analysed.
    pub n: usize,
    pub skipped_lines: u64,
    /// Discretization id (`"1"`..`"5"`) or `"binary"`.
    pub discretization: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub input: InputInfo,
    pub profile: EpsilonProfile,
    pub combiners: Vec<CombinerReport>,
    /// Maximum over the profile, only when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic_max: Option<f64>,
    pub duration_seconds: f64,
}

impl Report {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let i = &self.input;
        let _ = writeln!(out, "{} {}", self.tool, self.version);
        let _ = writeln!(out, "input           {} ({})", i.path, i.format);
        let _ = writeln!(out, "bits            {}", i.n);
        let _ = writeln!(out, "skipped lines   {}", i.skipped_lines);
        let _ = writeln!(out, "discretization  {}", i.discretization);
        let _ = writeln!(out, "estimator       {}", mode_name(&self.profile));
        let _ = writeln!(out, "h_max           {}", self.profile.h_max);
        out.push('\n');
        let _ = writeln!(out, "{:<10}  ε̃_h", "h");
        for (h, e) in self.profile.displayed().iter().enumerate() {
            let _ = writeln!(out, "{h:<10}  {e:.15}");
        }
        if self.profile.is_truncated() {
            let _ = writeln!(out, "{:<10}  ⋮", "⋮");
        }
        for c in &self.combiners {
            let label = format!("ε {}", c.scheme.family);
            let _ = writeln!(out, "{label:<10}  {:.15}", c.final_epsilon);
        }
        if let Some(m) = self.diagnostic_max {
            let _ = writeln!(out, "{:<10}  {m:.15}  (diagnostic)", "max ε̃_h");
        }
        let _ = writeln!(out, "\nduration        {:.3} s", self.duration_seconds);
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Rows of `kind,key,value`: `meta` fields, one `profile` row per h,
    /// one `final` row per combiner.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut row = |kind: &str, key: &str, value: String| {
            w.write_record([kind, key, value.as_str()]).expect("in-memory write");
        };
        row("kind", "key", "value".into());
        row("meta", "version", self.version.clone());
        row("meta", "path", self.input.path.clone());
        row("meta", "format", self.input.format.clone());
        row("meta", "n", self.input.n.to_string());
        row("meta", "skipped_lines", self.input.skipped_lines.to_string());
        row("meta", "discretization", self.input.discretization.clone());
        row("meta", "estimator", mode_name(&self.profile).into());
        row("meta", "h_max", self.profile.h_max.to_string());
        row(
            "meta",
            "first_trivial_h",
            self.profile
                .first_trivial_h
                .map(|h| h.to_string())
                .unwrap_or_default(),
        );
        for (h, e) in self.profile.epsilons.iter().enumerate() {
            row("profile", &h.to_string(), e.to_string());
        }
        for c in &self.combiners {
            row("final", &c.scheme.family.to_string(), c.final_epsilon.to_string());
        }
        if let Some(m) = self.diagnostic_max {
            row("diagnostic", "max", m.to_string());
        }
        row("meta", "duration_seconds", self.duration_seconds.to_string());
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8 csv")
    }
}

fn mode_name(p: &EpsilonProfile) -> &'static str {
    match p.mode {
        crate::estimator::EstimatorMode::RawRatio => "raw-ratio",
        crate::estimator::EstimatorMode::FiniteSize => "finite-size",
    }
}
