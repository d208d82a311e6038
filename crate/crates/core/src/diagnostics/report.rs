use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::exec::Summary;

/// Where a reference value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceSource {
    ClosedForm,
    Quadrature,
    Enumeration,
    Exact,
}

/// How the Monte Carlo value is compared with the reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `|z| <= threshold`.
    Equality,
    /// `z <= threshold`: the estimate may lie anywhere below the reference.
    UpperBound,
}

/// One checked identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityEntry {
    pub identity: String,
    pub t: Option<f64>,
    pub n_samples: u64,
    pub parameters: BTreeMap<String, f64>,
    pub mc_mean: f64,
    pub mc_se: f64,
    pub closed_form: f64,
    pub reference_source: ReferenceSource,
    pub comparison: Comparison,
    pub z_score: f64,
    pub pass: bool,
}

impl IdentityEntry {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        identity: impl Into<String>,
        t: Option<f64>,
        parameters: &[(&str, f64)],
        summary: &Summary,
        closed_form: f64,
        reference_source: ReferenceSource,
        comparison: Comparison,
        z_threshold: f64,
    ) -> Self {
        let z = z_score(summary.mean, summary.std_error(), closed_form);
        let pass = match comparison {
            Comparison::Equality => z.abs() <= z_threshold,
            Comparison::UpperBound => z <= z_threshold,
        };
        IdentityEntry {
            identity: identity.into(),
            t,
            n_samples: summary.count,
            parameters: parameters.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
            mc_mean: summary.mean,
            mc_se: summary.std_error(),
            closed_form,
            reference_source,
            comparison,
            z_score: z,
            pass,
        }
    }
}

/// `(mean - reference) / se`. Agreement to 1e-12 (relative) counts as exact,
/// which also covers identities that hold sample by sample.
pub fn z_score(mean: f64, se: f64, reference: f64) -> f64 {
    let diff = mean - reference;
    if diff.abs() <= 1e-12 * reference.abs().max(1.0) {
        return 0.0;
    }
    if se > 0.0 {
        diff / se
    } else {
        diff.signum() * f64::INFINITY
    }
}

/// A named collection of identity checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub suite: String,
    pub z_threshold: f64,
    pub entries: Vec<IdentityEntry>,
}

impl IdentityReport {
    pub fn new(suite: impl Into<String>, z_threshold: f64) -> Self {
        IdentityReport { suite: suite.into(), z_threshold, entries: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &IdentityEntry> {
        self.entries.iter().filter(|e| !e.pass)
    }

    pub fn max_abs_z(&self) -> f64 {
        self.entries.iter().map(|e| e.z_score.abs()).fold(0.0, f64::max)
    }
}
