//! Certificates produced by the extraction modes.

use serde::{Deserialize, Serialize};

use super::combinatorics::WordCount;
use super::covering::CoveringRound;
use super::cycles::Shift;
use crate::dimension::DimensionResult;
use crate::geometry::{Orthogonal, RotationOrder};
use crate::graph::{group_closure, EpsilonNet};
use crate::separation::SeparationCertificate;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupMode {
    DenseSubgroup,
    EpsilonClose,
    Exact,
    PlanarSo2,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetSummary {
    pub size: usize,
    pub finite_group: bool,
    pub truncated: bool,
}

impl From<&EpsilonNet> for NetSummary {
    fn from(n: &EpsilonNet) -> Self {
        NetSummary { size: n.len(), finite_group: n.finite_group, truncated: n.truncated }
    }
}

/// What is known about the transformation group of the output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub mode: GroupMode,
    /// Row-major target `O` for the modes that have one.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub target: Option<Vec<f64>>,
    /// Resolution of both nets.
    pub net_resolution: f64,
    /// Closure of the transformation group at the base vertex.
    pub source_group: NetSummary,
    /// Closure of the group generated by the output's orthogonal parts.
    pub output_group: NetSummary,
    /// Largest distance from a source-net element to the output net, over the
    /// part of the source group the mode claims to reach.
    pub coverage: f64,
    /// Coverage is measured over orientation-preserving source elements only.
    #[serde(default)]
    pub restricted_to_so: bool,
    /// `verified_to_resolution`, `exact`, `heuristic` or `not_claimed`.
    pub density: String,
    /// Largest `‖T_i − O‖` over output maps.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub max_distance_to_target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub common_rotation_order: Option<RotationOrder>,
    /// Powers applied to the separated generator cycles.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub dense_powers: Vec<u64>,
}

impl GroupReport {
    /// Closes both groups at `epsilon` and measures how well the output net
    /// reaches the source net. `restrict_so` limits the comparison to
    /// orientation-preserving source elements.
    pub(crate) fn measure(
        mode: GroupMode,
        dim: usize,
        source: &[Orthogonal],
        output: &[Orthogonal],
        epsilon: f64,
        budget: usize,
        restrict_so: bool,
    ) -> Result<GroupReport> {
        let src = group_closure(source, dim, epsilon, budget)?;
        let out = group_closure(output, dim, epsilon, budget)?;
        let claimed: Vec<Orthogonal> = src
            .elements
            .iter()
            .filter(|t| !restrict_so || t.is_orientation_preserving())
            .cloned()
            .collect();
        let claimed = EpsilonNet { elements: claimed, ..src.clone() };
        let coverage = if claimed.is_empty() { 0.0 } else { out.covering_distance(&claimed) };
        let density = if src.finite_group && out.finite_group && coverage <= crate::graph::CLOSURE_TOL {
            "exact"
        } else if src.truncated || out.truncated || dim >= 4 {
            "heuristic"
        } else if coverage <= epsilon {
            "verified_to_resolution"
        } else {
            "not_claimed"
        };
        Ok(GroupReport {
            mode,
            target: None,
            net_resolution: src.resolution,
            source_group: (&src).into(),
            output_group: (&out).into(),
            coverage,
            restricted_to_so: restrict_so,
            density: density.to_string(),
            max_distance_to_target: None,
            common_rotation_order: None,
            dense_powers: Vec::new(),
        })
    }
}

/// Intermediate quantities of a run, kept for inspection.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diameter_bounds: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_point_spread: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub separation_power: Option<u64>,
    /// Power from the sufficient condition `r_max^N·diam < d_min/2`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub guaranteed_power: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub shifts: Vec<Shift>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidate_dimension: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub covering_root: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub covering_rounds: Vec<CoveringRound>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inner_dimension: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub word_count: Option<WordCount>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampled: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corrector: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub absorption_length: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snap_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group_gap: Option<f64>,
}

/// Evidence for one extraction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionCertificate {
    pub target_vertex: usize,
    pub epsilon: f64,
    pub achieved_dimension: DimensionResult,
    /// Dimension of the whole graph-directed attractor, an upper reference.
    pub reference_dimension: DimensionResult,
    pub separation: SeparationCertificate,
    /// Depth at which the separation certificate was produced.
    pub ssc_depth: usize,
    pub group_report: GroupReport,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub uniform_ratio: Option<f64>,
    /// The dimension target was not met within the budgets.
    pub partial: bool,
    pub diagnostics: Diagnostics,
}

impl ExtractionCertificate {
    pub fn dimension_floor_met(&self) -> bool {
        self.achieved_dimension.value > self.reference_dimension.value - self.epsilon
    }
}
