//! Finite transformation groups: orthogonal parts equal to the target.

use super::dense::{check_epsilon, Context};
use super::uniform::{distance_to_target, finish, uniform_core};
use super::{ApproxConfig, SsIfs};
use super::report::ExtractionCertificate;
use super::GroupMode;
use crate::error::{Error, Result};
use crate::geometry::Orthogonal;
use crate::graph::{group_closure, EpsilonNet, GdIfs, VertexId, CLOSURE_TOL};

/// Element budget when testing a group for finiteness.
pub(crate) const FINITE_GROUP_BUDGET: usize = 4096;
/// Resolution of the finiteness test.
pub(crate) const FINITE_GROUP_RESOLUTION: f64 = 1e-6;

/// Closure of the `j`-th transformation group, fine enough to decide
/// finiteness of groups with up to [`FINITE_GROUP_BUDGET`] elements.
pub(crate) fn finite_closure(ctx: &Context) -> Result<EpsilonNet> {
    let budget = ctx.cfg.group_budget.min(FINITE_GROUP_BUDGET);
    group_closure(&ctx.generators.transforms(), ctx.g.dim(), 4.0 * FINITE_GROUP_RESOLUTION, budget)
}

pub(crate) fn exact_with(ctx: &Context, net: &EpsilonNet, target: &Orthogonal, epsilon: f64, mode: GroupMode, restrict_so: bool) -> Result<(SsIfs, ExtractionCertificate)> {
    let gap = net.identity_gap().unwrap_or(f64::INFINITY);
    // Below half the gap, nearness to the target pins the group element.
    let trafo_eps = epsilon.min(0.99 * gap / 2.0);
    let goal = ctx.reference.value - epsilon;
    let mut out = uniform_core(ctx, target, trafo_eps, goal, ctx.reference.value - epsilon / 2.0)?;
    let snap = distance_to_target(&out.maps, target);
    out.maps = out.maps.into_iter().map(|m| m.with_rotation(target.clone())).collect();
    out.diagnostics.snap_radius = Some(snap);
    out.diagnostics.group_gap = Some(gap);
    let (ssifs, mut cert) = finish(ctx, epsilon, mode, target, out, restrict_so)?;
    cert.group_report.common_rotation_order = Some(crate::geometry::rotation_order(
        target,
        crate::geometry::DEFAULT_MAX_ORDER,
        crate::geometry::ORDER_TOL,
    ));
    Ok((ssifs, cert))
}

/// For a finite `j`-th transformation group containing `target`: a subsystem
/// with the strong separation condition, one common ratio, every orthogonal
/// part equal to `target`, and dimension above `dim K_j − ε`.
pub fn extract_exact_finite(
    g: &GdIfs,
    j: VertexId,
    target: &Orthogonal,
    epsilon: f64,
    cfg: &ApproxConfig,
) -> Result<(SsIfs, ExtractionCertificate)> {
    check_epsilon(epsilon)?;
    Error::check_dim(g.dim(), target.dim())?;
    let ctx = Context::new(g, j, cfg)?;
    let net = finite_closure(&ctx)?;
    if !net.finite_group {
        return Err(Error::precondition(format!(
            "group not finite: the closure at vertex {j} stopped at {} elements without closing up",
            net.len()
        )));
    }
    if !net.contains_within(target, CLOSURE_TOL) {
        return Err(Error::precondition("target is not an element of the transformation group"));
    }
    exact_with(&ctx, &net, target, epsilon, GroupMode::Exact, false)
}
