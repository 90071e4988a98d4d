//! Extraction of self-similar subsystems with the strong separation
//! condition from a graph-directed system.
//!
//! Every output map is the composite of a cycle at the chosen vertex `j`, so
//! the subsystem's attractor lies inside `K_j`. Four modes are provided:
//!
//! * [`extract_dense_group`]: dimension within `ε` of `dim K_j`, with the
//!   subsystem's transformation group dense in that of `j`.
//! * [`extract_uniform`]: additionally one common ratio and every orthogonal
//!   part within `ε` of a target.
//! * [`extract_exact_finite`]: finite groups, orthogonal parts equal to the
//!   target.
//! * [`extract_planar`]: in the plane, one common ratio and one common
//!   rotation of infinite order.

pub mod combinatorics;
pub mod covering;
pub mod cycles;
pub mod dense;
pub mod exact;
pub mod planar;
pub mod report;
pub mod uniform;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Orthogonal, Similarity};
use crate::graph::{EdgePath, GdIfs, VertexId};

pub use combinatorics::{chebyshev_counts, chebyshev_margin, count_words, WordCount};
pub use covering::{extract_covering_subsystem, CoveringOutcome};
pub use cycles::{dense_power, dense_power_report, find_nonsingleton_cycles, separate_fixed_points, DensePower};
pub use dense::extract_dense_group;
pub use exact::extract_exact_finite;
pub use planar::extract_planar;
pub use report::{ExtractionCertificate, GroupMode, GroupReport, NetSummary};
pub use uniform::extract_uniform;

/// Tuning knobs shared by all extraction modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ApproxConfig {
    /// Refinement depth for disjointness tests and SSC verification.
    pub max_depth: usize,
    /// Depth used for diameter lower bounds.
    pub diameter_depth: usize,
    /// Element budget of each group closure.
    pub group_budget: usize,
    /// Words enumerated per letter-count class before sampling.
    pub word_budget: usize,
    /// Cycles visited while looking for distinct fixed points.
    pub cycle_budget: usize,
    /// Paths considered per round of the covering construction.
    pub covering_path_cap: usize,
    /// Longest corrector word.
    pub corrector_max_len: usize,
    /// Largest number of output maps.
    pub max_output_maps: usize,
    /// Largest word length tried by the uniform and planar modes.
    pub max_word_length: u64,
    /// Seed for word sampling.
    pub seed: u64,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        ApproxConfig {
            max_depth: crate::separation::DEFAULT_SSC_DEPTH,
            diameter_depth: 8,
            group_budget: 20_000,
            word_budget: 1_000_000,
            cycle_budget: 200_000,
            covering_path_cap: 4096,
            corrector_max_len: 40,
            max_output_maps: 20_000,
            max_word_length: 64,
            seed: 0,
        }
    }
}

/// A self-similar system whose maps are composites of cycles of a
/// graph-directed system.
#[derive(Clone, Debug, PartialEq)]
pub struct SsIfs {
    pub maps: Vec<Similarity>,
    pub provenance: Vec<EdgePath>,
}

impl SsIfs {
    pub fn from_paths(paths: Vec<EdgePath>) -> SsIfs {
        SsIfs { maps: paths.iter().map(|p| p.composite().clone()).collect(), provenance: paths }
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.maps.iter().map(|m| m.ratio()).collect()
    }

    /// Largest max-entry deviation between a map and its provenance composite.
    pub fn provenance_defect(&self) -> f64 {
        self.maps
            .iter()
            .zip(&self.provenance)
            .map(|(m, p)| m.max_deviation(p.composite()))
            .fold(0.0, f64::max)
    }
}

/// The four extraction modes, by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Dense,
    Uniform,
    Exact,
    Planar,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Dense, Mode::Uniform, Mode::Exact, Mode::Planar];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Dense => "dense",
            Mode::Uniform => "uniform",
            Mode::Exact => "exact",
            Mode::Planar => "planar",
        }
    }

    pub fn needs_target(self) -> bool {
        matches!(self, Mode::Uniform | Mode::Exact)
    }

    /// Runs the mode. `target` is required exactly when [`Mode::needs_target`].
    pub fn run(
        self,
        g: &GdIfs,
        j: VertexId,
        epsilon: f64,
        target: Option<&Orthogonal>,
        cfg: &ApproxConfig,
    ) -> Result<(SsIfs, ExtractionCertificate)> {
        let need = || Error::InvalidInput(format!("mode {} needs a target rotation", self.name()));
        match self {
            Mode::Dense => extract_dense_group(g, j, epsilon, cfg),
            Mode::Uniform => extract_uniform(g, j, target.ok_or_else(need)?, epsilon, cfg),
            Mode::Exact => extract_exact_finite(g, j, target.ok_or_else(need)?, epsilon, cfg),
            Mode::Planar => extract_planar(g, j, epsilon, cfg),
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mode> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown mode `{s}` (dense, uniform, exact, planar)")))
    }
}
