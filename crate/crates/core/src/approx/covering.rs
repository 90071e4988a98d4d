//! Maximal disjoint families of small cylinders below a root cycle.

use serde::{Deserialize, Serialize};

use super::dense::Context;
use super::{ApproxConfig, SsIfs};
use crate::dimension::similarity_dimension;
use crate::error::{Error, Result};
use crate::graph::{concat_opt, enumerate_weighted, EdgePath, GdIfs, VertexId};
use crate::par;
use crate::separation::{cylinders_disjoint, Ball};

/// δ is never taken below this.
pub const DELTA_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringRound {
    pub delta: f64,
    pub candidates: usize,
    pub selected: usize,
    pub dimension: f64,
    /// `log n / −log(c_min·r_min·δ / diam K_j)` for the `n` selected pieces.
    pub packing_bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoveringOutcome {
    /// Selected cycles `f * b_{t(f)}` at the base vertex.
    pub cycles: Vec<EdgePath>,
    pub rounds: Vec<CoveringRound>,
    /// Similarity dimension of `base ∪ cycles`.
    pub dimension: f64,
}

/// Greedy maximal subfamily of pairwise disjoint cylinders, in input order,
/// skipping cylinders that meet any path in `avoid`.
fn select_disjoint(ctx: &Context, paths: Vec<EdgePath>, avoid: &[EdgePath]) -> Vec<EdgePath> {
    let clear: Vec<bool> = par::map(&paths, |p| avoid.iter().all(|a| ctx.disjoint(p, a)));
    let mut selected: Vec<(EdgePath, Ball)> = Vec::new();
    for (p, ok) in paths.into_iter().zip(clear) {
        if !ok {
            continue;
        }
        let ball = ctx.enc.cylinder(&p);
        let ok = par::all(&selected, |(q, qb)| {
            ball.gap(qb) > 0.0
                || cylinders_disjoint(ctx.g, &p, q, &ctx.enc, ctx.cfg.max_depth).is_ok_and(|v| v.is_disjoint())
        });
        if ok {
            selected.push((p, ball));
        }
    }
    selected.into_iter().map(|(p, _)| p).collect()
}

/// Runs the δ-descent below `roots`: starting from the largest root
/// diameter and halving, take the stopping-time family of extensions `f` of
/// the roots with `r_f·D_{t(f)} < δ`, keep a maximal pairwise disjoint
/// subfamily missing `avoid`, close each piece into a cycle with its return
/// path and stop once `base` together with these cycles has similarity
/// dimension above `goal`.
pub(crate) fn cover(
    ctx: &Context,
    roots: &[EdgePath],
    avoid: &[EdgePath],
    goal: f64,
    base: &[EdgePath],
) -> Result<CoveringOutcome> {
    let j = ctx.j;
    let weights = &ctx.diam.upper;
    let base_ratios: Vec<f64> = base.iter().map(|p| p.ratio()).collect();
    let c_min = (0..ctx.g.vertex_count())
        .filter_map(|i| ctx.returns.to_base(i).map(|b| b.ratio()))
        .fold(1.0, f64::min);
    let mut delta = roots.iter().map(|r| r.ratio() * weights[r.target()]).fold(0.0, f64::max);
    let mut rounds = Vec::new();
    let mut best: Option<(f64, Vec<EdgePath>)> = None;
    loop {
        let mut paths = Vec::new();
        'roots: for root in roots {
            for p in enumerate_weighted(ctx.g, root, f64::MIN_POSITIVE, delta, weights) {
                paths.push(p);
                if paths.len() > ctx.cfg.covering_path_cap {
                    break 'roots;
                }
            }
        }
        if paths.len() > ctx.cfg.covering_path_cap {
            break;
        }
        let count = paths.len();
        let selected = select_disjoint(ctx, paths, avoid);
        let cycles: Vec<EdgePath> = selected
            .iter()
            .map(|f| concat_opt(Some(f), ctx.returns.to_base(f.target())).expect("nonempty"))
            .collect();
        let mut ratios = base_ratios.clone();
        ratios.extend(cycles.iter().map(|c| c.ratio()));
        let dimension = similarity_dimension(&ratios)?.value;
        let n = selected.len() as f64;
        let scale = c_min * ctx.g.min_ratio() * delta / weights[j];
        let packing_bound = if n > 1.0 && scale < 1.0 { n.ln() / -scale.ln() } else { 0.0 };
        rounds.push(CoveringRound { delta, candidates: count, selected: selected.len(), dimension, packing_bound });
        if best.as_ref().is_none_or(|(d, _)| dimension > *d) {
            best = Some((dimension, cycles.clone()));
        }
        if dimension > goal {
            return Ok(CoveringOutcome { cycles, rounds, dimension });
        }
        delta *= 0.5;
        if delta < DELTA_FLOOR {
            break;
        }
    }
    let reached = best.map(|(d, _)| d).unwrap_or(0.0);
    Err(Error::InsufficientSeparation(format!(
        "covering below {} root(s) reached dimension {reached:.6} (goal {goal:.6}) after {} rounds",
        roots.len(),
        rounds.len()
    )))
}

/// Covering construction on its own: a subsystem of cycles through `root`
/// whose similarity dimension exceeds `dim K_j − ε`.
pub fn extract_covering_subsystem(
    g: &GdIfs,
    j: VertexId,
    root: &EdgePath,
    epsilon: f64,
    cfg: &ApproxConfig,
) -> Result<(SsIfs, CoveringOutcome)> {
    if !(epsilon > 0.0) {
        return Err(Error::input("epsilon must be positive"));
    }
    if !root.is_cycle() || root.source() != j {
        return Err(Error::input(format!("root {root} is not a cycle at vertex {j}")));
    }
    let ctx = Context::new(g, j, cfg)?;
    ctx.require_nonsingleton()?;
    let goal = ctx.reference.value - epsilon;
    let out = cover(&ctx, std::slice::from_ref(root), &[], goal, &[])?;
    Ok((SsIfs::from_paths(out.cycles.clone()), out))
}
