//! Certificate documents and their independent re-verification.
//!
//! A document lists every output map with the cycle it came from, the
//! separation evidence, both dimensions and the group report. [`verify`]
//! trusts none of the recorded numbers: it recomposes each cycle in the input
//! system, re-derives every pair gap from the recorded enclosure, recomputes
//! both dimensions and re-measures the group.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::approx::{ExtractionCertificate, GroupReport, Mode, SsIfs};
use crate::config::LoadedSystem;
use crate::dimension::{mauldin_williams_dimension, similarity_dimension, DimensionResult};
use crate::error::{Error, Result};
use crate::geometry::{rotation_order, Orthogonal, Similarity, Vector, DEFAULT_MAX_ORDER, ORDER_TOL};
use crate::graph::{generator_cycles, GdIfs};
use crate::par;
use crate::separation::{cylinders_disjoint, near_pairs, Ball, Enclosure, PairGap, Verdict, INVARIANCE_SLACK};

pub const CERTIFICATE_VERSION: &str = "gdifs-certificate/v1";
/// Largest entry deviation between a recorded map and its recomposed cycle.
pub const PROVENANCE_TOL: f64 = 1e-10;
pub const DIMENSION_TOL: f64 = 1e-9;
/// Recomputed gaps may fall short of recorded ones by this much, relative.
pub const GAP_TOL: f64 = 1e-12;
/// Orthogonal parts this close count as equal.
pub const EQUAL_ROTATION_TOL: f64 = 1e-12;
pub const COVERAGE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapRecord {
    pub ratio: f64,
    /// Row-major orthogonal part.
    pub rotation: Vec<f64>,
    pub translation: Vec<f64>,
    pub provenance_edges: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SscSummary {
    /// Ball mapped into itself by every output map; all gaps are measured
    /// against its images.
    pub enclosure: Ball,
    /// Refinement depth allowed per pair.
    pub max_depth: usize,
    pub refinement_depth: usize,
    /// Pairs not listed lie in non-adjacent grid cells of this side.
    pub cell_size: Option<f64>,
    pub far_field_gap: Option<f64>,
    pub min_gap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateDocument {
    pub version: String,
    pub input_hash: String,
    pub mode: Mode,
    pub j: usize,
    pub epsilon: f64,
    pub ssifs: Vec<MapRecord>,
    pub achieved_dimension: DimensionResult,
    pub reference_dimension: DimensionResult,
    pub dimension_floor_met: bool,
    pub partial: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform_ratio: Option<f64>,
    pub separation: Vec<PairGap>,
    pub ssc: SscSummary,
    pub group_report: GroupReport,
    pub diagnostics: crate::approx::report::Diagnostics,
    /// Wall-clock seconds per phase; informational only.
    pub timings: BTreeMap<String, f64>,
}

impl CertificateDocument {
    pub fn new(
        system: &LoadedSystem,
        mode: Mode,
        ssifs: &SsIfs,
        cert: &ExtractionCertificate,
        timings: BTreeMap<String, f64>,
    ) -> CertificateDocument {
        let ssifs_records = ssifs
            .maps
            .iter()
            .zip(&ssifs.provenance)
            .map(|(m, p)| MapRecord {
                ratio: m.ratio(),
                rotation: m.rotation().row_major(),
                translation: m.translation().iter().copied().collect(),
                provenance_edges: p.edges().to_vec(),
            })
            .collect();
        let s = &cert.separation;
        CertificateDocument {
            version: CERTIFICATE_VERSION.into(),
            input_hash: system.config.hash(),
            mode,
            j: cert.target_vertex,
            epsilon: cert.epsilon,
            ssifs: ssifs_records,
            achieved_dimension: cert.achieved_dimension,
            reference_dimension: cert.reference_dimension,
            dimension_floor_met: cert.dimension_floor_met(),
            partial: cert.partial,
            uniform_ratio: cert.uniform_ratio,
            separation: s.pairs.clone(),
            ssc: SscSummary {
                enclosure: s.enclosure.clone(),
                max_depth: cert.ssc_depth,
                refinement_depth: s.refinement_depth,
                cell_size: s.cell_size,
                far_field_gap: s.far_field_gap,
                min_gap: s.min_gap,
            },
            group_report: cert.group_report.clone(),
            diagnostics: cert.diagnostics.clone(),
            timings,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }

    pub fn parse(text: &str) -> Result<CertificateDocument> {
        serde_json::from_str(text)
            .map_err(|e| Error::input(format!("certificate line {} column {}: {e}", e.line(), e.column())))
    }

    /// The recorded maps, rebuilt as similarities.
    pub fn maps(&self, d: usize) -> Result<Vec<Similarity>> {
        self.ssifs
            .iter()
            .enumerate()
            .map(|(i, r)| {
                if r.translation.len() != d {
                    return Err(Error::input(format!("ssifs[{i}].translation has {} entries", r.translation.len())));
                }
                let t = Orthogonal::from_row_major(d, &r.rotation)
                    .map_err(|e| Error::input(format!("ssifs[{i}].rotation: {e}")))?;
                Similarity::new(r.ratio, t, Vector::from_vec(r.translation.clone()))
                    .map_err(|e| Error::input(format!("ssifs[{i}]: {e}")))
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    fn record(&mut self, name: &str, outcome: std::result::Result<String, String>) {
        let (passed, detail) = match outcome {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        self.checks.push(Check { name: name.into(), passed, detail });
    }

    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }

    pub fn into_result(self) -> Result<VerifyReport> {
        match self.first_failure() {
            Some(c) => Err(Error::Verification { check: c.name.clone(), detail: c.detail.clone() }),
            None => Ok(self),
        }
    }
}

type Outcome = std::result::Result<String, String>;

fn check_schema(doc: &CertificateDocument, system: &LoadedSystem) -> Outcome {
    if doc.version != CERTIFICATE_VERSION {
        return Err(format!("version {} is not {CERTIFICATE_VERSION}", doc.version));
    }
    if doc.j >= system.gdifs.vertex_count() {
        return Err(format!("vertex {} out of range", doc.j));
    }
    if doc.ssifs.is_empty() {
        return Err("no maps".into());
    }
    if !(doc.epsilon > 0.0) {
        return Err(format!("epsilon {} is not positive", doc.epsilon));
    }
    Ok(format!("{} maps at vertex {}", doc.ssifs.len(), doc.j))
}

fn check_hash(doc: &CertificateDocument, system: &LoadedSystem) -> Outcome {
    let h = system.config.hash();
    if h == doc.input_hash {
        Ok(h)
    } else {
        Err(format!("config hash {h} differs from recorded {}", doc.input_hash))
    }
}

fn check_provenance(doc: &CertificateDocument, g: &GdIfs, maps: &[Similarity]) -> Outcome {
    let mut worst = 0.0f64;
    for (i, (r, m)) in doc.ssifs.iter().zip(maps).enumerate() {
        if r.provenance_edges.iter().any(|&e| e >= g.edges().len()) {
            return Err(format!("map {i}: edge id out of range"));
        }
        let path = g.path(&r.provenance_edges).map_err(|e| format!("map {i}: {e}"))?;
        if !path.is_cycle() || path.source() != doc.j {
            return Err(format!("map {i}: path {path} is not a cycle at vertex {}", doc.j));
        }
        // Ratios can be tiny, so they are compared relatively.
        let composite = path.composite();
        let dev = m.max_deviation(composite).max((m.ratio() / composite.ratio() - 1.0).abs());
        if !(dev <= PROVENANCE_TOL) {
            return Err(format!("map {i}: deviates from its cycle composite by {dev:.3e}"));
        }
        worst = worst.max(dev);
    }
    Ok(format!("max deviation {worst:.3e}"))
}

fn check_uniform_ratio(doc: &CertificateDocument) -> Outcome {
    let Some(r) = doc.uniform_ratio else {
        return Ok("no common ratio claimed".into());
    };
    match doc.ssifs.iter().position(|m| m.ratio != r) {
        Some(i) => Err(format!("map {i} has ratio {} instead of {r}", doc.ssifs[i].ratio)),
        None => Ok(format!("all ratios equal {r}")),
    }
}

/// Re-derives the separation evidence from the recorded enclosure alone.
fn check_separation(doc: &CertificateDocument, maps: &[Similarity]) -> Outcome {
    let ball = &doc.ssc.enclosure;
    if ball.center.len() != maps[0].dim() || !(ball.radius >= 0.0) {
        return Err("enclosure has the wrong shape".into());
    }
    let slack = INVARIANCE_SLACK * (1.0 + ball.radius);
    if let Some(i) = maps.iter().position(|m| !ball.contains(&ball.image(m), slack)) {
        return Err(format!("map {i} does not send the enclosure into itself"));
    }
    let g = GdIfs::from_maps(maps).map_err(|e| e.to_string())?;
    let enc = Enclosure { balls: vec![ball.clone()], iterations: 0 };
    let first: Vec<Ball> = maps.iter().map(|m| ball.image(m)).collect();
    let (near, cell) = near_pairs(&first);
    let recorded: BTreeMap<(usize, usize), f64> = doc.separation.iter().map(|p| (p.pair, p.gap)).collect();
    if let Some(p) = near.iter().find(|p| !recorded.contains_key(p)) {
        return Err(format!("pair {p:?} is close but has no recorded gap"));
    }
    let claims: Vec<(&(usize, usize), &f64)> = recorded.iter().collect();
    if let Some(((a, b), _)) = claims.iter().find(|((a, b), _)| a >= b || *b >= maps.len()) {
        return Err(format!("pair ({a}, {b}) is not a valid index pair"));
    }
    let gaps = par::map(&claims, |((a, b), _)| {
        let p = g.path(&[*a]).expect("valid edge");
        let q = g.path(&[*b]).expect("valid edge");
        match cylinders_disjoint(&g, &p, &q, &enc, doc.ssc.max_depth) {
            Ok(Verdict::Disjoint { gap, .. }) => Some(gap),
            _ => None,
        }
    });
    for (((a, b), claimed), gap) in claims.iter().zip(gaps) {
        match gap {
            None => return Err(format!("pair ({a}, {b}) could not be separated")),
            Some(g) if g < **claimed - GAP_TOL * (1.0 + claimed.abs()) => {
                return Err(format!("pair ({a}, {b}): recorded gap {claimed:.6e} exceeds recomputed {g:.6e}"))
            }
            Some(_) => {}
        }
    }
    let max_r = first.iter().map(|b| b.radius).fold(0.0, f64::max);
    match (cell, doc.ssc.cell_size) {
        (None, _) => {}
        (Some(c), Some(rc)) if c == rc => {
            let far = c - 2.0 * max_r - 1e-14 * (1.0 + c);
            let claimed = doc.ssc.far_field_gap.unwrap_or(f64::INFINITY);
            if !(far > 0.0) || claimed > far + GAP_TOL * (1.0 + far) {
                return Err(format!("far-field gap {claimed:.6e} not supported (recomputed {far:.6e})"));
            }
        }
        (Some(c), rc) => return Err(format!("grid side {c} differs from recorded {rc:?}")),
    }
    Ok(format!("{} pairs re-separated", claims.len()))
}

fn check_dimension(doc: &CertificateDocument, g: &GdIfs, maps: &[Similarity]) -> Outcome {
    let ratios: Vec<f64> = maps.iter().map(|m| m.ratio()).collect();
    let achieved = similarity_dimension(&ratios).map_err(|e| e.to_string())?.value;
    let reference = mauldin_williams_dimension(g).map_err(|e| e.to_string())?.value;
    if (achieved - doc.achieved_dimension.value).abs() > DIMENSION_TOL {
        return Err(format!("achieved {achieved:.12} but recorded {:.12}", doc.achieved_dimension.value));
    }
    if (reference - doc.reference_dimension.value).abs() > DIMENSION_TOL {
        return Err(format!("reference {reference:.12} but recorded {:.12}", doc.reference_dimension.value));
    }
    if achieved > reference + DIMENSION_TOL {
        return Err(format!("achieved {achieved:.12} exceeds reference {reference:.12}"));
    }
    Ok(format!("achieved {achieved:.9}, reference {reference:.9}"))
}

fn check_floor(doc: &CertificateDocument) -> Outcome {
    let floor = doc.reference_dimension.value - doc.epsilon;
    let ok = doc.achieved_dimension.value > floor;
    if ok != doc.dimension_floor_met || ok == doc.partial {
        return Err(format!("floor flag {} and partial flag {} disagree with the dimensions", doc.dimension_floor_met, doc.partial));
    }
    if ok {
        Ok(format!("{:.9} > {floor:.9}", doc.achieved_dimension.value))
    } else {
        Err(format!("{:.9} ≤ {floor:.9}", doc.achieved_dimension.value))
    }
}

fn check_group(doc: &CertificateDocument, system: &LoadedSystem, maps: &[Similarity]) -> Outcome {
    let g = &system.gdifs;
    let report = &doc.group_report;
    let output: Vec<Orthogonal> = maps.iter().map(|m| m.rotation().clone()).collect();
    let target = match &report.target {
        Some(t) => Some(Orthogonal::from_row_major(g.dim(), t).map_err(|e| format!("target: {e}"))?),
        None => None,
    };
    let dist = target.as_ref().map(|t| output.iter().map(|o| o.distance(t)).fold(0.0, f64::max));
    match (doc.mode, dist) {
        (Mode::Uniform, Some(d)) if !(d < doc.epsilon) => return Err(format!("‖T_i − O‖ reaches {d:.3e} ≥ ε")),
        (Mode::Exact, Some(d)) if d > EQUAL_ROTATION_TOL => return Err(format!("‖T_i − O‖ reaches {d:.3e}")),
        (Mode::Uniform | Mode::Exact, None) => return Err("no target recorded".into()),
        _ => {}
    }
    if let (Some(d), Some(rd)) = (dist, report.max_distance_to_target) {
        if d > rd + EQUAL_ROTATION_TOL {
            return Err(format!("distance to target {d:.3e} exceeds recorded {rd:.3e}"));
        }
    }
    if doc.mode == Mode::Planar {
        if let Some(i) = output.iter().position(|o| (o.determinant() - 1.0).abs() > 1e-9) {
            return Err(format!("map {i} reverses orientation"));
        }
        if let Some(i) = output.iter().position(|o| o.distance(&output[0]) > EQUAL_ROTATION_TOL) {
            return Err(format!("map {i} has a different rotation"));
        }
        if let Some(claimed) = &report.common_rotation_order {
            let order = rotation_order(&output[0], DEFAULT_MAX_ORDER, ORDER_TOL);
            if &order != claimed {
                return Err(format!("common rotation has order {order:?}, recorded {claimed:?}"));
            }
        }
    }
    let generators = generator_cycles(g, doc.j).map_err(|e| e.to_string())?;
    let budget = system.config.approx_config().group_budget;
    let fresh = GroupReport::measure(
        report.mode,
        g.dim(),
        &generators.transforms(),
        &output,
        doc.epsilon,
        budget,
        report.restricted_to_so,
    )
    .map_err(|e| e.to_string())?;
    if (fresh.coverage - report.coverage).abs() > COVERAGE_TOL {
        return Err(format!("coverage {:.6e} but recorded {:.6e}", fresh.coverage, report.coverage));
    }
    let recorded = report.density.as_str();
    let consistent = recorded == fresh.density || (recorded == "heuristic" && fresh.density != "not_claimed");
    if !consistent {
        return Err(format!("density `{}` but recorded `{recorded}`", fresh.density));
    }
    Ok(format!("coverage {:.3e}, density {}", fresh.coverage, fresh.density))
}

/// Runs every check against the system the certificate claims to come from.
/// Later checks are skipped when the maps cannot be rebuilt.
pub fn verify(doc: &CertificateDocument, system: &LoadedSystem) -> VerifyReport {
    let mut report = VerifyReport::default();
    let schema = check_schema(doc, system);
    let schema_ok = schema.is_ok();
    report.record("schema", schema);
    if !schema_ok {
        return report;
    }
    report.record("input_hash", check_hash(doc, system));
    let maps = match doc.maps(system.gdifs.dim()) {
        Ok(m) => m,
        Err(e) => {
            report.record("provenance", Err(e.to_string()));
            return report;
        }
    };
    report.record("provenance", check_provenance(doc, &system.gdifs, &maps));
    report.record("uniform_ratio", check_uniform_ratio(doc));
    report.record("separation", check_separation(doc, &maps));
    report.record("dimension", check_dimension(doc, &system.gdifs, &maps));
    report.record("dimension_floor", check_floor(doc));
    report.record("group", check_group(doc, system, &maps));
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::ApproxConfig;
    use crate::config::SystemConfig;
    use crate::fixtures;

    fn certify(g: &GdIfs, mode: Mode, eps: f64, target: Option<&Orthogonal>) -> (LoadedSystem, CertificateDocument) {
        let system = SystemConfig::from_gdifs(g).build().unwrap();
        let (s, c) = mode.run(&system.gdifs, 0, eps, target, &ApproxConfig::default()).unwrap();
        let doc = CertificateDocument::new(&system, mode, &s, &c, BTreeMap::new());
        (system, doc)
    }

    #[test]
    fn fresh_certificate_passes_and_round_trips() {
        let (system, doc) = certify(&fixtures::rank1_pair(), Mode::Dense, 0.1, None);
        let report = verify(&doc, &system);
        assert!(report.passed(), "{report:?}");
        let text = doc.to_json();
        let back = CertificateDocument::parse(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn mutations_are_caught_by_the_expected_check() {
        let (system, doc) = certify(&fixtures::three_cycle(), Mode::Dense, 0.2, None);
        let first_failure = |bad: &CertificateDocument| verify(bad, &system).first_failure().map(|c| c.name.clone());

        let mut bad = doc.clone();
        bad.ssifs[0].ratio *= 1.0 + 1e-3;
        assert_eq!(first_failure(&bad).as_deref(), Some("provenance"));

        let mut bad = doc.clone();
        bad.separation[0].gap *= 10.0;
        assert_eq!(first_failure(&bad).as_deref(), Some("separation"));

        let mut bad = doc.clone();
        let edges = bad.ssifs[0].provenance_edges.clone();
        bad.ssifs[0].provenance_edges.extend(edges);
        assert_eq!(first_failure(&bad).as_deref(), Some("provenance"));

        let mut bad = doc.clone();
        bad.achieved_dimension.value += 1e-6;
        assert_eq!(first_failure(&bad).as_deref(), Some("dimension"));
    }

    #[test]
    fn exact_certificate_passes() {
        let t = Orthogonal::rotation_2d(std::f64::consts::TAU / 3.0);
        let (system, doc) = certify(&fixtures::dihedral(), Mode::Exact, 0.2, Some(&t));
        assert!(verify(&doc, &system).passed());
    }

    #[test]
    fn wrong_system_fails_hash() {
        let (_, doc) = certify(&fixtures::cantor(), Mode::Dense, 0.1, None);
        let other = SystemConfig::from_gdifs(&fixtures::rank1_pair()).build().unwrap();
        let report = verify(&doc, &other);
        assert_eq!(report.first_failure().unwrap().name, "input_hash");
    }
}
