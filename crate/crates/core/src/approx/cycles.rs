//! Cycle selection: distinct fixed points and dense powers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rotation_order, Orthogonal, RotationOrder, DEFAULT_MAX_ORDER, ORDER_TOL};
use crate::graph::{concat, EdgePath, GdIfs, VertexId};

/// Output fixed points of [`separate_fixed_points`] are at least this far apart.
pub const FIXED_POINT_SEPARATION: f64 = 1e-8;
/// Largest power tried per branch in [`separate_fixed_points`].
pub const MAX_SHIFT_POWER: u32 = 64;

/// Threshold below which two fixed points count as the same.
pub(crate) fn singleton_threshold(diam_upper: f64, x: &crate::geometry::Vector) -> f64 {
    (1e-6 * diam_upper).max(1e-10 * (1.0 + x.amax()))
}

/// Two cycles at `j` with different fixed points, searched in order of
/// length and then edge ids. The first cycle found is kept; the partner is
/// the first whose fixed point differs from it. If every cycle shares one
/// fixed point, `K_j` is that point.
pub fn find_nonsingleton_cycles(g: &GdIfs, j: VertexId, diam_upper: f64, budget: usize) -> Result<(EdgePath, EdgePath)> {
    g.check_vertex(j)?;
    g.require_strongly_connected()?;
    let mut first: Option<(EdgePath, crate::geometry::Vector)> = None;
    let mut frontier: Vec<EdgePath> = g.out_edges(j).iter().map(|&e| EdgePath::edge(g, e)).collect();
    let mut visited = 0usize;
    while !frontier.is_empty() {
        for p in &frontier {
            visited += 1;
            if !p.is_cycle() {
                continue;
            }
            let x = p.composite().fixed_point().point;
            match &first {
                None => first = Some((p.clone(), x)),
                Some((c1, x1)) => {
                    if (&x - x1).norm() >= singleton_threshold(diam_upper, x1) {
                        return Ok((c1.clone(), p.clone()));
                    }
                }
            }
        }
        if visited >= budget {
            break;
        }
        let mut next = Vec::new();
        for p in &frontier {
            for &e in g.out_edges(p.target()) {
                next.push(p.child(g, e));
                if visited + next.len() >= budget {
                    break;
                }
            }
        }
        frontier = next;
    }
    Err(Error::Singleton(format!(
        "all {visited} cycles searched at vertex {j} share one fixed point"
    )))
}

/// One entry of [`separate_fixed_points`]: `shift^power * original`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shift {
    /// 0 for unchanged, 1 or 2 for the first or second cycle.
    pub by: u8,
    pub power: u32,
}

/// Replaces each cycle from the third on by `c₁^k * c` or `c₂^k * c` with the
/// smallest `k` that keeps all fixed points pairwise at least
/// [`FIXED_POINT_SEPARATION`] apart. `k = 0` leaves a cycle unchanged.
pub fn separate_fixed_points(cycles: &[EdgePath]) -> Result<Vec<EdgePath>> {
    separate_fixed_points_traced(cycles).map(|v| v.into_iter().map(|(p, _)| p).collect())
}

pub fn separate_fixed_points_traced(cycles: &[EdgePath]) -> Result<Vec<(EdgePath, Shift)>> {
    if cycles.len() < 2 {
        return Err(Error::input("need at least two cycles"));
    }
    let base = cycles[0].source();
    if let Some(c) = cycles.iter().find(|c| !c.is_cycle() || c.source() != base) {
        return Err(Error::input(format!("{c} is not a cycle at vertex {base}")));
    }
    let fp = |p: &EdgePath| p.composite().fixed_point().point;
    let x1 = fp(&cycles[0]);
    let x2 = fp(&cycles[1]);
    if (&x1 - &x2).norm() < FIXED_POINT_SEPARATION {
        return Err(Error::precondition("the first two cycles share a fixed point"));
    }
    let mut out = vec![(cycles[0].clone(), Shift { by: 0, power: 0 }), (cycles[1].clone(), Shift { by: 0, power: 0 })];
    let mut points = vec![x1, x2];
    let clear = |x: &crate::geometry::Vector, points: &[crate::geometry::Vector]| {
        points.iter().all(|y| (x - y).norm() >= FIXED_POINT_SEPARATION)
    };
    for c in &cycles[2..] {
        let x = fp(c);
        if clear(&x, &points) {
            points.push(x);
            out.push((c.clone(), Shift { by: 0, power: 0 }));
            continue;
        }
        let mut found = None;
        'search: for k in 1..=MAX_SHIFT_POWER {
            for (by, shift) in [(1u8, &cycles[0]), (2u8, &cycles[1])] {
                let candidate = concat(&shift.repeat(k), c).expect("cycles at one vertex");
                let y = fp(&candidate);
                if clear(&y, &points) {
                    found = Some((candidate, y, Shift { by, power: k }));
                    break 'search;
                }
            }
        }
        let Some((candidate, y, shift)) = found else {
            return Err(Error::SearchExhausted(format!(
                "no power up to {MAX_SHIFT_POWER} separates the fixed point of {c}"
            )));
        };
        points.push(y);
        out.push((candidate, shift));
    }
    Ok(out)
}

/// A power `k` of `t` with the same closed generated group.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensePower {
    pub k: u64,
    pub order: RotationOrder,
    /// Density of `⟨t^k⟩` in `⟨t⟩` is not backed by an exact argument here.
    pub heuristic: bool,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Smallest suitable `k ≥ n_min`. For finite order `n` this is the first `k`
/// coprime to `n`. For infinite order in `d ≤ 3` any `k` works for
/// rotations; orientation-reversing `t` needs odd `k`, since even powers stay
/// in the rotation component. In `d ≥ 4` the answer is flagged heuristic.
pub fn dense_power_report(t: &Orthogonal, n_min: u64) -> DensePower {
    let n_min = n_min.max(1);
    let order = rotation_order(t, DEFAULT_MAX_ORDER, ORDER_TOL);
    match order {
        RotationOrder::Finite(n) => {
            let k = (n_min..).find(|&k| gcd(k, n) == 1).expect("coprime integers exist");
            DensePower { k, order, heuristic: false }
        }
        RotationOrder::InfiniteOrDeep => {
            let mut k = n_min;
            if !t.is_orientation_preserving() && k % 2 == 0 {
                k += 1;
            }
            DensePower { k, order, heuristic: t.dim() >= 4 }
        }
    }
}

pub fn dense_power(t: &Orthogonal, n_min: u64) -> u64 {
    dense_power_report(t, n_min).k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Similarity, Vector};
    use crate::graph::Edge;
    use std::f64::consts::TAU;

    fn line(maps: &[(f64, f64)]) -> GdIfs {
        let maps: Vec<_> = maps.iter().map(|&(r, v)| Similarity::scaling(r, &[v]).unwrap()).collect();
        GdIfs::from_maps(&maps).unwrap()
    }

    #[test]
    fn cantor_fixed_points() {
        let g = line(&[(1.0 / 3.0, 0.0), (1.0 / 3.0, 2.0 / 3.0)]);
        let (a, b) = find_nonsingleton_cycles(&g, 0, 1.0, 1000).unwrap();
        assert!(a.composite().fixed_point().point[0].abs() < 1e-15);
        assert!((b.composite().fixed_point().point[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn common_fixed_point_is_singleton() {
        let g = line(&[(0.5, 0.0), (1.0 / 3.0, 0.0)]);
        assert!(matches!(find_nonsingleton_cycles(&g, 0, 0.0, 10_000), Err(Error::Singleton(_))));
    }

    #[test]
    fn two_vertex_needs_length_two() {
        let e = |s, t, v| Edge { source: s, target: t, map: Similarity::scaling(0.4, &[v]).unwrap() };
        let g = GdIfs::new(2, 1, vec![e(0, 1, 0.0), e(1, 0, 0.0), e(1, 0, 0.6)]).unwrap();
        let (a, b) = find_nonsingleton_cycles(&g, 0, 2.0, 1000).unwrap();
        assert_eq!((a.len(), b.len()), (2, 2));
    }

    #[test]
    fn separation_keeps_distinct_points() {
        let g = line(&[(0.5, 0.0), (0.5, 0.5), (0.25, 0.5)]);
        let cycles: Vec<_> = (0..3).map(|e| g.path(&[e]).unwrap()).collect();
        let out = separate_fixed_points(&cycles).unwrap();
        assert_eq!(out, cycles);
    }

    #[test]
    fn separation_shifts_clashing_cycle() {
        // The third map fixes 0 like the first.
        let g = line(&[(0.5, 0.0), (0.5, 0.5), (0.25, 0.0)]);
        let cycles: Vec<_> = (0..3).map(|e| g.path(&[e]).unwrap()).collect();
        let out = separate_fixed_points_traced(&cycles).unwrap();
        let (third, shift) = &out[2];
        // S₁ᵏ∘S₃ still fixes 0, so the second branch is used with k = 1.
        assert_eq!(shift, &Shift { by: 2, power: 1 });
        assert_eq!(third.edges(), &[1, 2]);
        let pts: Vec<Vector> = out.iter().map(|(p, _)| p.composite().fixed_point().point).collect();
        for a in 0..pts.len() {
            for b in a + 1..pts.len() {
                assert!((&pts[a] - &pts[b]).norm() >= FIXED_POINT_SEPARATION);
            }
        }
    }

    #[test]
    fn dense_power_examples() {
        let r5 = Orthogonal::rotation_2d(TAU / 5.0);
        assert_eq!(dense_power(&r5, 3), 3);
        let r4 = Orthogonal::rotation_2d(TAU / 4.0);
        assert_eq!(dense_power(&r4, 4), 5);
        assert_eq!(dense_power(&Orthogonal::identity(2), 7), 7);
        let r = Orthogonal::rotation_2d(1.0);
        assert_eq!(dense_power(&r, 6), 6);
    }
}
