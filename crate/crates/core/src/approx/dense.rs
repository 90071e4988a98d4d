//! Subsystems with dimension close to `dim K_j` and a dense transformation
//! group.

use super::covering::cover;
use super::cycles::{dense_power_report, find_nonsingleton_cycles, separate_fixed_points_traced, DensePower};
use super::report::{Diagnostics, ExtractionCertificate, GroupMode, GroupReport};
use super::{ApproxConfig, SsIfs};
use crate::dimension::{mauldin_williams_dimension, similarity_dimension, DimensionResult};
use crate::error::{Error, Result};
use crate::graph::{generator_cycles, EdgePath, GdIfs, GeneratorSet, ReturnPaths, VertexId};
use crate::par;
use crate::separation::{
    compute_enclosure, cylinders_disjoint, diameter_bounds, verify_ssc, DiameterBounds, Enclosure,
    SeparationCertificate,
};

/// Extra powers tried beyond the one guaranteed by the fixed-point spread.
const EXTRA_POWERS: u64 = 64;

/// Quantities of a graph-directed system at one vertex that every mode needs.
pub(crate) struct Context<'a> {
    pub g: &'a GdIfs,
    pub j: VertexId,
    pub cfg: &'a ApproxConfig,
    pub enc: Enclosure,
    pub diam: DiameterBounds,
    pub reference: DimensionResult,
    pub generators: GeneratorSet,
    pub returns: ReturnPaths,
}

impl<'a> Context<'a> {
    pub fn new(g: &'a GdIfs, j: VertexId, cfg: &'a ApproxConfig) -> Result<Self> {
        g.check_vertex(j)?;
        g.require_strongly_connected()?;
        let enc = compute_enclosure(g);
        let diam = diameter_bounds(g, &enc, cfg.diameter_depth);
        let reference = mauldin_williams_dimension(g)?;
        let generators = generator_cycles(g, j)?;
        let returns = generators.returns.clone();
        Ok(Context { g, j, cfg, enc, diam, reference, generators, returns })
    }

    /// Two cycles at `j` with distinct fixed points.
    pub fn require_nonsingleton(&self) -> Result<(EdgePath, EdgePath)> {
        find_nonsingleton_cycles(self.g, self.j, self.diam.upper[self.j], self.cfg.cycle_budget)
    }

    pub fn disjoint(&self, p: &EdgePath, q: &EdgePath) -> bool {
        self.enc.cylinder(p).gap(&self.enc.cylinder(q)) > 0.0
            || cylinders_disjoint(self.g, p, q, &self.enc, self.cfg.max_depth).is_ok_and(|v| v.is_disjoint())
    }

    pub fn pairwise_disjoint(&self, paths: &[EdgePath]) -> bool {
        let n = paths.len();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        par::all(&pairs, |&(a, b)| self.disjoint(&paths[a], &paths[b]))
    }

    /// SSC certificate for cycle composites at `j`, seeded with `B_j`.
    pub fn certify(&self, maps: &[crate::geometry::Similarity]) -> Result<SeparationCertificate> {
        verify_ssc(maps, self.cfg.max_depth, Some(self.enc.ball(self.j)))
            .map_err(|f| Error::InsufficientSeparation(format!("output fails separation: {}", f.reason)))
    }
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::input(format!("epsilon must be positive and finite, got {epsilon}")));
    }
    Ok(())
}

/// Output of [`dense_core`] before certification.
pub(crate) struct DenseOutcome {
    pub paths: Vec<EdgePath>,
    pub dimension: f64,
    pub powers: Vec<DensePower>,
    pub diagnostics: Diagnostics,
}

/// Disjoint powers of separated generator cycles, completed by a covering
/// family of cycles disjoint from them when their dimension alone falls
/// short of `goal`.
pub(crate) fn dense_core(ctx: &Context, goal: f64) -> Result<DenseOutcome> {
    let (c1, c2) = ctx.require_nonsingleton()?;
    let mut list = vec![c1.clone(), c2.clone()];
    for c in &ctx.generators.cycles {
        if !list.iter().any(|p| p.edges() == c.edges()) {
            list.push(c.clone());
        }
    }
    let traced = separate_fixed_points_traced(&list)?;
    let (separated, shifts): (Vec<EdgePath>, Vec<_>) = traced.into_iter().unzip();

    let points: Vec<_> = separated.iter().map(|p| p.composite().fixed_point().point).collect();
    let mut d_min = f64::INFINITY;
    for a in 0..points.len() {
        for b in a + 1..points.len() {
            d_min = d_min.min((&points[a] - &points[b]).norm());
        }
    }
    let d_j = ctx.diam.upper[ctx.j];
    let r_max = separated.iter().map(|p| p.ratio()).fold(0.0, f64::max);
    // r_max^N·D_j < d_min/2 puts each K_{F^N} inside a ball around its fixed
    // point that misses the others.
    let guaranteed = if d_j <= d_min / 2.0 {
        1
    } else {
        ((d_min / 2.0 / d_j).ln() / r_max.ln()).floor() as u64 + 1
    };

    let mut found = None;
    for n in 1..=guaranteed + EXTRA_POWERS {
        let powers: Vec<DensePower> =
            separated.iter().map(|p| dense_power_report(p.composite().rotation(), n)).collect();
        let cands: Vec<EdgePath> =
            separated.iter().zip(&powers).map(|(p, k)| p.repeat(k.k as u32)).collect();
        if ctx.pairwise_disjoint(&cands) {
            found = Some((n, powers, cands));
            break;
        }
    }
    let Some((n, powers, cands)) = found else {
        return Err(Error::InsufficientSeparation(format!(
            "powers up to {} of the generator cycles stay overlapping",
            guaranteed + EXTRA_POWERS
        )));
    };
    let cand_dim = similarity_dimension(&cands.iter().map(|p| p.ratio()).collect::<Vec<_>>())?.value;
    let mut diagnostics = Diagnostics {
        diameter_bounds: Some((ctx.diam.lower[ctx.j], d_j)),
        fixed_point_spread: Some(d_min),
        separation_power: Some(n),
        guaranteed_power: Some(guaranteed),
        shifts,
        candidate_dimension: Some(cand_dim),
        ..Diagnostics::default()
    };
    if cand_dim > goal {
        return Ok(DenseOutcome { paths: cands, dimension: cand_dim, powers, diagnostics });
    }

    // Cover all of K_j, leaving out pieces that meet the candidates.
    let roots: Vec<EdgePath> = ctx.g.out_edges(ctx.j).iter().map(|&e| EdgePath::edge(ctx.g, e)).collect();
    let out = cover(ctx, &roots, &cands, goal, &cands)?;
    diagnostics.covering_rounds = out.rounds;
    let mut paths = cands;
    paths.extend(out.cycles);
    Ok(DenseOutcome { paths, dimension: out.dimension, powers, diagnostics })
}

/// A subsystem of cycles at `j` with the strong separation condition,
/// similarity dimension above `dim K_j − ε`, and transformation group dense in
/// the `j`-th transformation group.
pub fn extract_dense_group(
    g: &GdIfs,
    j: VertexId,
    epsilon: f64,
    cfg: &ApproxConfig,
) -> Result<(SsIfs, ExtractionCertificate)> {
    check_epsilon(epsilon)?;
    let ctx = Context::new(g, j, cfg)?;
    let out = dense_core(&ctx, ctx.reference.value - epsilon)?;
    let ssifs = SsIfs::from_paths(out.paths);
    let separation = ctx.certify(&ssifs.maps)?;
    let achieved = similarity_dimension(&ssifs.ratios())?;
    let output: Vec<_> = ssifs.maps.iter().map(|m| m.rotation().clone()).collect();
    let mut group_report = GroupReport::measure(
        GroupMode::DenseSubgroup,
        g.dim(),
        &ctx.generators.transforms(),
        &output,
        epsilon,
        cfg.group_budget,
        false,
    )?;
    if out.powers.iter().any(|p| p.heuristic) && group_report.density != "not_claimed" {
        group_report.density = "heuristic".into();
    }
    group_report.dense_powers = out.powers.iter().map(|p| p.k).collect();
    let cert = ExtractionCertificate {
        target_vertex: j,
        epsilon,
        achieved_dimension: achieved,
        reference_dimension: ctx.reference.clone(),
        separation,
        ssc_depth: cfg.max_depth,
        group_report,
        uniform_ratio: None,
        partial: false,
        diagnostics: out.diagnostics,
    };
    Ok((ssifs, cert))
}
