//! JSON system descriptions, schema version `v1`.
//!
//! ```json
//! { "version": "v1", "kind": "gdifs", "ambient_dim": 1, "vertices": 1,
//!   "edges": [ { "source": 0, "target": 0,
//!                "map": { "ratio": 0.333, "translation": [0.0] } } ] }
//! ```
//!
//! An `sft` document replaces `vertices`/`edges` by `alphabet`, `matrix` and
//! one map per symbol. A rotation is a row-major `d×d` array, a bare angle in
//! radians (`d = 2`), `{"axis": [x, y, z], "angle": a}` (`d = 3`), or omitted
//! for the identity. In `d = 1` a bare number is the single matrix entry.
//! Semantic errors name the offending field, syntax errors carry the line and
//! column reported by the parser.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::approx::ApproxConfig;
use crate::error::{Error, Result};
use crate::geometry::{Orthogonal, Similarity, Vector};
use crate::graph::{Edge, GdIfs};
use crate::sft::SftSystem;

pub const SCHEMA_VERSION: &str = "v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RotationSpec {
    Angle(f64),
    Matrix(Vec<f64>),
    AxisAngle { axis: [f64; 3], angle: f64 },
}

impl RotationSpec {
    pub fn to_orthogonal(&self, d: usize) -> Result<Orthogonal> {
        match self {
            RotationSpec::Angle(t) if d == 1 => Orthogonal::from_row_major(1, &[*t]),
            RotationSpec::Angle(t) if d == 2 => Ok(Orthogonal::rotation_2d(*t)),
            RotationSpec::Angle(_) => Err(Error::input(format!("a bare angle needs d = 2, got d = {d}"))),
            RotationSpec::Matrix(m) => Orthogonal::from_row_major(d, m),
            RotationSpec::AxisAngle { axis, angle } if d == 3 => Orthogonal::axis_angle(*axis, *angle),
            RotationSpec::AxisAngle { .. } => Err(Error::input(format!("axis-angle needs d = 3, got d = {d}"))),
        }
    }

    /// Parses the command-line form: JSON text of any accepted rotation.
    pub fn parse(text: &str) -> Result<RotationSpec> {
        serde_json::from_str(text.trim()).map_err(|e| Error::input(format!("rotation `{text}`: {e}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub ratio: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<RotationSpec>,
    pub translation: Vec<f64>,
}

impl MapSpec {
    pub fn from_similarity(s: &Similarity) -> MapSpec {
        MapSpec {
            ratio: s.ratio(),
            rotation: Some(RotationSpec::Matrix(s.rotation().row_major())),
            translation: s.translation().iter().copied().collect(),
        }
    }

    fn build(&self, d: usize, field: &str) -> Result<Similarity> {
        let at = |e: Error| Error::input(format!("{field}: {e}"));
        if self.translation.len() != d {
            return Err(Error::input(format!(
                "{field}.translation: expected {d} entries, got {}",
                self.translation.len()
            )));
        }
        let rotation = match &self.rotation {
            None => Orthogonal::identity(d),
            Some(r) => r.to_orthogonal(d).map_err(|e| Error::input(format!("{field}.rotation: {e}")))?,
        };
        Similarity::new(self.ratio, rotation, Vector::from_vec(self.translation.clone())).map_err(at)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub source: usize,
    pub target: usize,
    pub map: MapSpec,
}

/// Optional overrides of [`ApproxConfig`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word_budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_output_maps: Option<usize>,
}

impl Tolerances {
    pub fn apply(&self, cfg: &mut ApproxConfig) {
        if let Some(v) = self.max_depth {
            cfg.max_depth = v;
        }
        if let Some(v) = self.word_budget {
            cfg.word_budget = v;
        }
        if let Some(v) = self.group_budget {
            cfg.group_budget = v;
        }
        if let Some(v) = self.max_output_maps {
            cfg.max_output_maps = v;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemBody {
    Gdifs { vertices: usize, edges: Vec<EdgeSpec> },
    Sft { alphabet: usize, matrix: Vec<Vec<u8>>, maps: Vec<MapSpec> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub version: String,
    pub ambient_dim: usize,
    #[serde(flatten)]
    pub body: SystemBody,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
}

/// A parsed configuration: the graph-directed system every command runs on,
/// plus the shift it came from when the input was an SFT.
#[derive(Clone, Debug)]
pub struct LoadedSystem {
    pub config: SystemConfig,
    pub gdifs: GdIfs,
    pub sft: Option<SftSystem>,
}

impl SystemConfig {
    pub fn from_gdifs(g: &GdIfs) -> SystemConfig {
        let edges = g
            .edges()
            .iter()
            .map(|e| EdgeSpec { source: e.source, target: e.target, map: MapSpec::from_similarity(&e.map) })
            .collect();
        SystemConfig {
            version: SCHEMA_VERSION.into(),
            ambient_dim: g.dim(),
            body: SystemBody::Gdifs { vertices: g.vertex_count(), edges },
            tolerances: None,
        }
    }

    pub fn from_sft(s: &SftSystem) -> SystemConfig {
        SystemConfig {
            version: SCHEMA_VERSION.into(),
            ambient_dim: s.maps()[0].dim(),
            body: SystemBody::Sft {
                alphabet: s.alphabet_size(),
                matrix: s.matrix().to_vec(),
                maps: s.maps().iter().map(MapSpec::from_similarity).collect(),
            },
            tolerances: None,
        }
    }

    pub fn parse(text: &str) -> Result<SystemConfig> {
        let cfg: SystemConfig = serde_json::from_str(text)
            .map_err(|e| Error::input(format!("config line {} column {}: {e}", e.line(), e.column())))?;
        if cfg.version != SCHEMA_VERSION {
            return Err(Error::input(format!("version: expected \"{SCHEMA_VERSION}\", got \"{}\"", cfg.version)));
        }
        if cfg.ambient_dim == 0 {
            return Err(Error::input("ambient_dim: must be at least 1"));
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }

    /// SHA-256 of the canonical serialization, in hex.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("plain data");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn approx_config(&self) -> ApproxConfig {
        let mut cfg = ApproxConfig::default();
        if let Some(t) = &self.tolerances {
            t.apply(&mut cfg);
        }
        cfg
    }

    pub fn build(&self) -> Result<LoadedSystem> {
        let d = self.ambient_dim;
        let (gdifs, sft) = match &self.body {
            SystemBody::Gdifs { vertices, edges } => {
                let mut built = Vec::with_capacity(edges.len());
                for (i, e) in edges.iter().enumerate() {
                    for (name, v) in [("source", e.source), ("target", e.target)] {
                        if v >= *vertices {
                            return Err(Error::input(format!(
                                "edges[{i}].{name}: vertex {v} out of range (vertices = {vertices})"
                            )));
                        }
                    }
                    let map = e.map.build(d, &format!("edges[{i}].map"))?;
                    built.push(Edge { source: e.source, target: e.target, map });
                }
                (GdIfs::new(*vertices, d, built)?, None)
            }
            SystemBody::Sft { alphabet, matrix, maps } => {
                if matrix.len() != *alphabet {
                    return Err(Error::input(format!("matrix: {} rows for alphabet {alphabet}", matrix.len())));
                }
                let maps = maps
                    .iter()
                    .enumerate()
                    .map(|(i, m)| m.build(d, &format!("maps[{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                let s = SftSystem::new(matrix.clone(), maps).map_err(|e| Error::input(format!("matrix: {e}")))?;
                (s.to_gdifs()?, Some(s))
            }
        };
        Ok(LoadedSystem { config: self.clone(), gdifs, sft })
    }
}

/// Reads, parses and builds a configuration file.
pub fn load(path: &std::path::Path) -> Result<LoadedSystem> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
    SystemConfig::parse(&text)?.build()
}
