//! Ball enclosures of attractor pieces and certified disjointness of
//! cylinder sets.
//!
//! Similarity images of balls are balls, so a ball `B_l ⊇ K_l` gives
//! `S_f(B_l) ⊇ K_f` for every path `f` ending at `l`. Two cylinders whose
//! balls are separated are separated by at least the same gap.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Similarity, Vector};
use crate::graph::{EdgePath, GdIfs, VertexId};
use crate::par;

/// Maximum number of enclosure refinement rounds.
pub const ENCLOSURE_MAX_ITER: usize = 200;
/// Refinement stops once no radius shrinks by more than this fraction.
pub const ENCLOSURE_REL_TOL: f64 = 1e-9;
/// Slack in the invariance inequality `r_e·R_l + ‖S_e(c_l) − c_i‖ ≤ R_i`.
pub const INVARIANCE_SLACK: f64 = 1e-12;
/// Composites closer than this (max entry) count as the same map.
pub const SAME_MAP_TOL: f64 = 1e-12;
/// Ball tests allowed per disjointness query before giving up.
pub const PAIR_BUDGET: usize = 20_000;
/// Default refinement depth for SSC verification.
pub const DEFAULT_SSC_DEPTH: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: &Vector, radius: f64) -> Ball {
        Ball { center: center.iter().copied().collect(), radius }
    }

    pub fn center(&self) -> Vector {
        Vector::from_column_slice(&self.center)
    }

    pub fn image(&self, s: &Similarity) -> Ball {
        Ball::new(&s.apply(&self.center()), s.ratio() * self.radius)
    }

    /// Lower bound on the distance between the two balls, negative when they
    /// may meet. Rounding in the center distance is absorbed by a relative
    /// slack.
    pub fn gap(&self, other: &Ball) -> f64 {
        let (mut d2, mut scale) = (0.0, 1.0f64);
        for (a, b) in self.center.iter().zip(&other.center) {
            d2 += (a - b) * (a - b);
            scale = scale.max(a.abs()).max(b.abs());
        }
        d2.sqrt() - self.radius - other.radius - 1e-14 * scale
    }

    /// Whether `other ⊆ self` up to `slack`.
    pub fn contains(&self, other: &Ball, slack: f64) -> bool {
        let d: f64 = self.center.iter().zip(&other.center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        other.radius + d <= self.radius + slack
    }
}

/// Approximate smallest ball containing a union of balls: the bounding-box
/// centre, refined by Bădoiu–Clarkson steps towards the farthest point.
fn enclosing_ball(balls: &[Ball]) -> Ball {
    let d = balls[0].center.len();
    let radius_at = |c: &[f64]| -> f64 {
        balls
            .iter()
            .map(|b| b.center.iter().zip(c).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt() + b.radius)
            .fold(0.0, f64::max)
    };
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for b in balls {
        for k in 0..d {
            lo[k] = lo[k].min(b.center[k] - b.radius);
            hi[k] = hi[k].max(b.center[k] + b.radius);
        }
    }
    let mut c: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let mut best = (c.clone(), radius_at(&c));
    if d > 1 {
        for t in 0..64 {
            let far = balls
                .iter()
                .map(|b| {
                    let dist = b.center.iter().zip(&c).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
                    (b, dist)
                })
                .max_by(|a, b| (a.1 + a.0.radius).total_cmp(&(b.1 + b.0.radius)))
                .expect("nonempty");
            let (b, dist) = far;
            let point: Vec<f64> = if dist > 0.0 {
                b.center.iter().zip(&c).map(|(x, y)| x + b.radius * (x - y) / dist).collect()
            } else {
                let mut p = b.center.clone();
                p[0] += b.radius;
                p
            };
            let step = 1.0 / (t as f64 + 2.0);
            for k in 0..d {
                c[k] += step * (point[k] - c[k]);
            }
            let r = radius_at(&c);
            if r < best.1 {
                best = (c.clone(), r);
            }
        }
    }
    let (center, r) = best;
    let scale = center.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    Ball { center, radius: r * (1.0 + 8.0 * f64::EPSILON) + 8.0 * f64::EPSILON * scale }
}

/// One ball per vertex with `S_e(B_l) ⊆ B_i` for every edge `e: i → l`,
/// hence `K_i ⊆ B_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Enclosure {
    pub balls: Vec<Ball>,
    pub iterations: usize,
}

impl Enclosure {
    pub fn ball(&self, v: VertexId) -> &Ball {
        &self.balls[v]
    }

    /// The ball around `K_f`.
    pub fn cylinder(&self, p: &EdgePath) -> Ball {
        self.balls[p.target()].image(p.composite())
    }

    /// Largest violation of the invariance inequality over all edges
    /// (non-positive when it holds exactly).
    pub fn invariance_defect(&self, g: &GdIfs) -> f64 {
        g.edges()
            .iter()
            .map(|e| {
                let img = self.balls[e.target].image(&e.map);
                let outer = &self.balls[e.source];
                let d: f64 =
                    img.center.iter().zip(&outer.center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                img.radius + d - outer.radius
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_invariant(&self, g: &GdIfs) -> bool {
        self.invariance_defect(g) <= INVARIANCE_SLACK
    }
}

fn refine(g: &GdIfs, mut balls: Vec<Ball>) -> Enclosure {
    let mut iterations = 0;
    for it in 0..ENCLOSURE_MAX_ITER {
        iterations = it + 1;
        let proposals: Vec<Ball> = par::map_range(g.vertex_count(), |i| {
            let images: Vec<Ball> = g
                .out_edges(i)
                .iter()
                .map(|&e| {
                    let edge = g.edge(e);
                    balls[edge.target].image(&edge.map)
                })
                .collect();
            enclosing_ball(&images)
        });
        let mut shrink = 0.0f64;
        let mut next = balls.clone();
        for (i, p) in proposals.into_iter().enumerate() {
            // Nested proposals keep the family invariant up to rounding: the
            // proposal covers the images of the old balls, which cover the
            // images of the new ones.
            if balls[i].contains(&p, 1e-9 * balls[i].radius) {
                if balls[i].radius > 0.0 {
                    shrink = shrink.max((balls[i].radius - p.radius) / balls[i].radius);
                }
                next[i] = p;
            }
        }
        balls = next;
        if shrink < ENCLOSURE_REL_TOL {
            break;
        }
    }
    // Growing every radius by t turns a defect δ into δ − (1 − r_e)·t, so
    // t = δ / (1 − r_max) restores exact invariance.
    let mut enc = Enclosure { balls, iterations };
    let defect = enc.invariance_defect(g);
    if defect > 0.0 {
        let t = 2.0 * defect / (1.0 - g.max_ratio());
        for b in &mut enc.balls {
            b.radius += t;
        }
    }
    enc
}

/// Starts from `B(0, R₀)` with `R₀ = max‖v_e‖ / (1 − max r_e)` at every
/// vertex, which is invariant, and shrinks it.
pub fn compute_enclosure(g: &GdIfs) -> Enclosure {
    let rmax = g.max_ratio();
    let vmax = g.edges().iter().map(|e| e.map.translation().norm()).fold(0.0, f64::max);
    let r0 = vmax / (1.0 - rmax);
    let r0 = r0 * (1.0 + 8.0 * f64::EPSILON);
    let start = vec![Ball::new(&Vector::zeros(g.dim()), r0); g.vertex_count()];
    refine(g, start)
}

/// Like [`compute_enclosure`] but starting from `seed` when it is already
/// invariant. A subsystem of cycles at `j` leaves the ball of `K_j` invariant,
/// so its enclosure can start there.
pub fn compute_enclosure_seeded(g: &GdIfs, seed: Vec<Ball>) -> Enclosure {
    let candidate = Enclosure { balls: seed, iterations: 0 };
    if candidate.balls.len() == g.vertex_count() && candidate.is_invariant(g) {
        refine(g, candidate.balls)
    } else {
        compute_enclosure(g)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiameterBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub depth: usize,
}

/// Points of each level are capped at this count; deeper levels are skipped.
const DIAMETER_POINT_CAP: usize = 200_000;
const EXACT_SPREAD_LIMIT: usize = 4096;

fn spread(points: &[Vector]) -> f64 {
    let n = points.len();
    if n < 2 {
        return 0.0;
    }
    if n <= EXACT_SPREAD_LIMIT {
        let rows = par::map_range(n, |a| {
            (a + 1..n).map(|b| (&points[a] - &points[b]).norm()).fold(0.0, f64::max)
        });
        return rows.into_iter().fold(0.0, f64::max);
    }
    // Width along any unit direction is a lower bound on the diameter.
    let d = points[0].len();
    let mut dirs: Vec<Vector> = Vec::new();
    for k in 0..d {
        dirs.push(Vector::from_fn(d, |i, _| if i == k { 1.0 } else { 0.0 }));
    }
    for t in 0..64 {
        let v = Vector::from_fn(d, |i, _| ((t as f64 + 1.0) * (i as f64 + 1.0) * 0.618_033_988_749_895 * 6.283).sin());
        let n = v.norm();
        if n > 0.0 {
            dirs.push(v / n);
        }
    }
    par::map(&dirs, |u| {
        let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            let x = u.dot(p);
            (lo.min(x), hi.max(x))
        });
        hi - lo
    })
    .into_iter()
    .fold(0.0, f64::max)
}

/// Two-sided bounds on `diam(K_i)`. The upper bound is the enclosure
/// diameter. The lower bound is the spread of the cylinder-ball centres at
/// each level up to `refine_depth`, minus twice the largest cylinder radius;
/// the best level is kept, so the bound never decreases with depth.
pub fn diameter_bounds(g: &GdIfs, enc: &Enclosure, refine_depth: usize) -> DiameterBounds {
    let q = g.vertex_count();
    let lower = par::map_range(q, |i| {
        let mut level: Vec<(Similarity, VertexId)> = vec![(Similarity::scaling(0.5, &vec![0.0; g.dim()]).unwrap(), i)];
        // Depth 0 uses the ball centre itself.
        let mut best = 0.0f64;
        for depth in 0..=refine_depth {
            let (points, residual): (Vec<Vector>, f64) = if depth == 0 {
                (vec![enc.balls[i].center()], enc.balls[i].radius)
            } else {
                let pts = level.iter().map(|(s, t)| s.apply(&enc.balls[*t].center())).collect();
                let res = level.iter().map(|(s, t)| s.ratio() * enc.balls[*t].radius).fold(0.0, f64::max);
                (pts, res)
            };
            best = best.max(spread(&points) - 2.0 * residual);
            if depth == refine_depth {
                break;
            }
            let next_len: usize = level.iter().map(|(_, t)| g.out_edges(*t).len()).sum();
            if next_len > DIAMETER_POINT_CAP {
                break;
            }
            level = if depth == 0 {
                g.out_edges(i).iter().map(|&e| (g.edge(e).map.clone(), g.edge(e).target)).collect()
            } else {
                level
                    .iter()
                    .flat_map(|(s, t)| {
                        g.out_edges(*t).iter().map(move |&e| (s.compose_unchecked(&g.edge(e).map), g.edge(e).target))
                    })
                    .collect()
            };
        }
        best.max(0.0)
    });
    let upper: Vec<f64> = enc.balls.iter().map(|b| 2.0 * b.radius).collect();
    let lower = lower.into_iter().zip(&upper).map(|(l, u)| l.min(*u)).collect();
    DiameterBounds { lower, upper, depth: refine_depth }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "verdict")]
pub enum Verdict {
    /// Certified lower bound on the set distance, found after `depth` levels.
    Disjoint { gap: f64, depth: usize },
    /// A common sub-cylinder was exhibited.
    Overlapping,
    Unknown,
}

impl Verdict {
    pub fn is_disjoint(&self) -> bool {
        matches!(self, Verdict::Disjoint { .. })
    }
}

#[derive(Clone, Debug)]
struct Piece {
    map: Similarity,
    target: VertexId,
    depth: usize,
}

struct PairSearch<'a> {
    g: &'a GdIfs,
    enc: &'a Enclosure,
    max_depth: usize,
    budget: usize,
}

impl PairSearch<'_> {
    fn ball(&self, p: &Piece) -> Ball {
        self.enc.balls[p.target].image(&p.map)
    }

    fn children(&self, p: &Piece) -> Vec<Piece> {
        self.g
            .out_edges(p.target)
            .iter()
            .map(|&e| {
                let edge = self.g.edge(e);
                Piece { map: p.map.compose_unchecked(&edge.map), target: edge.target, depth: p.depth + 1 }
            })
            .collect()
    }

    fn run(&mut self, a: &Piece, b: &Piece) -> Verdict {
        if self.budget == 0 {
            return Verdict::Unknown;
        }
        self.budget -= 1;
        let (ba, bb) = (self.ball(a), self.ball(b));
        let gap = ba.gap(&bb);
        if gap > 0.0 {
            return Verdict::Disjoint { gap, depth: a.depth.max(b.depth) };
        }
        if a.target == b.target && a.map.max_deviation(&b.map) <= SAME_MAP_TOL {
            return Verdict::Overlapping;
        }
        // Split the larger cylinder; a tie or an exhausted side falls to the other.
        let split_a = (ba.radius >= bb.radius && a.depth < self.max_depth) || b.depth >= self.max_depth;
        let (split, other, flipped) = if split_a { (a, b, false) } else { (b, a, true) };
        if split.depth >= self.max_depth {
            return Verdict::Unknown;
        }
        let mut min_gap = f64::INFINITY;
        let mut depth = 0;
        let mut unknown = false;
        for c in self.children(split) {
            let v = if flipped { self.run(other, &c) } else { self.run(&c, other) };
            match v {
                Verdict::Overlapping => return Verdict::Overlapping,
                Verdict::Unknown => unknown = true,
                Verdict::Disjoint { gap, depth: d } => {
                    min_gap = min_gap.min(gap);
                    depth = depth.max(d);
                }
            }
        }
        if unknown {
            Verdict::Unknown
        } else {
            Verdict::Disjoint { gap: min_gap, depth }
        }
    }
}

fn pieces_disjoint(g: &GdIfs, enc: &Enclosure, a: Piece, b: Piece, max_depth: usize) -> Verdict {
    PairSearch { g, enc, max_depth, budget: PAIR_BUDGET }.run(&a, &b)
}

/// Decides whether `K_p` and `K_q` are disjoint by separating enclosure
/// balls, refining the larger cylinder one edge at a time for at most
/// `max_depth` levels per side.
pub fn cylinders_disjoint(g: &GdIfs, p: &EdgePath, q: &EdgePath, enc: &Enclosure, max_depth: usize) -> Result<Verdict> {
    if p.source() != q.source() {
        return Err(Error::input(format!(
            "cylinders start at different vertices ({} and {})",
            p.source(),
            q.source()
        )));
    }
    if p.is_prefix_of(q) || q.is_prefix_of(p) {
        return Ok(Verdict::Overlapping);
    }
    let a = Piece { map: p.composite().clone(), target: p.target(), depth: 0 };
    let b = Piece { map: q.composite().clone(), target: q.target(), depth: 0 };
    Ok(pieces_disjoint(g, enc, a, b, max_depth))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairGap {
    pub pair: (usize, usize),
    pub gap: f64,
}

/// Evidence that the first-level pieces `S_i(K)` of a self-similar set are
/// pairwise disjoint.
///
/// Pairs listed in `pairs` were separated explicitly. Every other pair has
/// first-level ball centres in grid cells of side `cell_size` that are not
/// adjacent, which separates them by at least `far_field_gap`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationCertificate {
    pub pairs: Vec<PairGap>,
    pub cell_size: Option<f64>,
    pub far_field_gap: Option<f64>,
    pub min_gap: Option<f64>,
    pub refinement_depth: usize,
    pub enclosure: Ball,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SscFailure {
    pub pair: Option<(usize, usize)>,
    pub verdict: Verdict,
    pub reason: String,
}

/// Pairs whose grid cells are adjacent, in increasing order, plus the grid
/// side; `None` for the side means every pair is listed.
pub fn near_pairs(balls: &[Ball]) -> (Vec<(usize, usize)>, Option<f64>) {
    let m = balls.len();
    let max_r = balls.iter().map(|b| b.radius).fold(0.0, f64::max);
    if m <= 64 || !(max_r > 0.0) {
        let all = (0..m).flat_map(|a| (a + 1..m).map(move |b| (a, b))).collect();
        return (all, None);
    }
    let cell = 4.0 * max_r;
    let d = balls[0].center.len();
    let key = |b: &Ball| -> Vec<i64> { b.center.iter().map(|x| (x / cell).floor() as i64).collect() };
    let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (i, b) in balls.iter().enumerate() {
        grid.entry(key(b)).or_default().push(i);
    }
    let offsets: Vec<Vec<i64>> = (0..3usize.pow(d as u32))
        .map(|mut t| {
            (0..d)
                .map(|_| {
                    let o = (t % 3) as i64 - 1;
                    t /= 3;
                    o
                })
                .collect()
        })
        .collect();
    let per_ball = par::map_range(m, |a| {
        let k = key(&balls[a]);
        let mut out = Vec::new();
        for off in &offsets {
            let cell_key: Vec<i64> = k.iter().zip(off).map(|(x, o)| x + o).collect();
            if let Some(members) = grid.get(&cell_key) {
                out.extend(members.iter().copied().filter(|&b| b > a));
            }
        }
        out.sort_unstable();
        out
    });
    let pairs = per_ball.into_iter().enumerate().flat_map(|(a, bs)| bs.into_iter().map(move |b| (a, b))).collect();
    (pairs, Some(cell))
}

/// Certifies the strong separation condition for `maps` by pairwise
/// disjointness of first-level cylinders of the induced one-vertex system.
///
/// `seed`, when given, is a ball already known to be mapped into itself by
/// every map and is used as the starting enclosure.
pub fn verify_ssc(maps: &[Similarity], max_depth: usize, seed: Option<&Ball>) -> Result<SeparationCertificate, SscFailure> {
    let fail = |reason: &str| SscFailure { pair: None, verdict: Verdict::Unknown, reason: reason.to_string() };
    let g = GdIfs::from_maps(maps).map_err(|e| fail(&e.to_string()))?;
    let enc = match seed {
        Some(b) => compute_enclosure_seeded(&g, vec![b.clone()]),
        None => compute_enclosure(&g),
    };
    let base = enc.balls[0].clone();
    let first: Vec<Ball> = maps.iter().map(|m| base.image(m)).collect();
    let (pairs, cell) = near_pairs(&first);
    let verdicts = par::map(&pairs, |&(a, b)| {
        let pa = Piece { map: maps[a].clone(), target: 0, depth: 0 };
        let pb = Piece { map: maps[b].clone(), target: 0, depth: 0 };
        pieces_disjoint(&g, &enc, pa, pb, max_depth)
    });
    let mut gaps = Vec::with_capacity(pairs.len());
    let mut depth = 0;
    for (&pair, v) in pairs.iter().zip(verdicts) {
        match v {
            Verdict::Disjoint { gap, depth: d } => {
                depth = depth.max(d);
                gaps.push(PairGap { pair, gap });
            }
            other => {
                return Err(SscFailure {
                    pair: Some(pair),
                    verdict: other,
                    reason: format!("maps {} and {} not separated", pair.0, pair.1),
                })
            }
        }
    }
    let max_r = first.iter().map(|b| b.radius).fold(0.0, f64::max);
    let far_field_gap = cell.map(|c| c - 2.0 * max_r - 1e-14 * (1.0 + c));
    let min_gap = gaps.iter().map(|p| p.gap).chain(far_field_gap).min_by(f64::total_cmp);
    Ok(SeparationCertificate { pairs: gaps, cell_size: cell, far_field_gap, min_gap, refinement_depth: depth, enclosure: base })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;
    use proptest::prelude::*;

    fn cantor() -> Vec<Similarity> {
        vec![Similarity::scaling(1.0 / 3.0, &[0.0]).unwrap(), Similarity::scaling(1.0 / 3.0, &[2.0 / 3.0]).unwrap()]
    }

    #[test]
    fn cantor_enclosure_and_diameter() {
        let g = GdIfs::from_maps(&cantor()).unwrap();
        let enc = compute_enclosure(&g);
        assert!(enc.is_invariant(&g));
        assert!(enc.balls[0].radius <= 0.5 + 1e-6, "{:?}", enc.balls[0]);
        assert!((enc.balls[0].center[0] - 0.5).abs() < 1e-6);
        let d = diameter_bounds(&g, &enc, 8);
        assert!(d.lower[0] >= 0.999 && d.upper[0] <= 1.001, "{d:?}");
    }

    #[test]
    fn single_map_enclosure_collapses() {
        let g = GdIfs::from_maps(&[Similarity::scaling(0.5, &[0.0, 0.0]).unwrap()]).unwrap();
        let enc = compute_enclosure(&g);
        assert_eq!(enc.balls[0].radius, 0.0);
        let g = GdIfs::from_maps(&[Similarity::scaling(0.5, &[1.0, 0.0]).unwrap()]).unwrap();
        let enc = compute_enclosure(&g);
        assert!(enc.balls[0].radius < 1e-6);
        let d = diameter_bounds(&g, &enc, 4);
        assert_eq!(d.lower[0], 0.0);
        assert!(d.upper[0] < 2e-6);
    }

    #[test]
    fn cantor_cylinders() {
        let g = GdIfs::from_maps(&cantor()).unwrap();
        let enc = compute_enclosure(&g);
        let p = g.path(&[0]).unwrap();
        let q = g.path(&[1]).unwrap();
        match cylinders_disjoint(&g, &p, &q, &enc, 0).unwrap() {
            Verdict::Disjoint { gap, .. } => assert!(gap >= 1.0 / 3.0 - 1e-6, "{gap}"),
            v => panic!("{v:?}"),
        }
        assert_eq!(cylinders_disjoint(&g, &p, &p, &enc, 4).unwrap(), Verdict::Overlapping);
        let pq = g.path(&[0, 1]).unwrap();
        assert_eq!(cylinders_disjoint(&g, &p, &pq, &enc, 4).unwrap(), Verdict::Overlapping);
    }

    #[test]
    fn ssc_examples() {
        let cert = verify_ssc(&cantor(), 4, None).unwrap();
        assert!((cert.min_gap.unwrap() - 1.0 / 3.0).abs() < 1e-6);
        let same = vec![cantor()[0].clone(), cantor()[0].clone()];
        let fail = verify_ssc(&same, 4, None).unwrap_err();
        assert_eq!(fail.verdict, Verdict::Overlapping);
    }

    #[test]
    fn loose_balls_need_depth() {
        // Four corner copies of ratio 0.45 in the unit square: the pieces are
        // 0.1 apart but their first-level balls overlap.
        let maps: Vec<Similarity> = [[0.0, 0.0], [0.55, 0.0], [0.0, 0.55], [0.55, 0.55]]
            .iter()
            .map(|v| Similarity::scaling(0.45, v).unwrap())
            .collect();
        let shallow = verify_ssc(&maps, 0, None).unwrap_err();
        assert_eq!(shallow.verdict, Verdict::Unknown);
        let deep = verify_ssc(&maps, 10, None).unwrap();
        assert!(deep.refinement_depth > 0);
        assert!(deep.min_gap.unwrap() <= 0.1 + 1e-12);

        let quarter = vec![Similarity::scaling(0.25, &[0.0]).unwrap(), Similarity::scaling(0.25, &[0.75]).unwrap()];
        let c = verify_ssc(&quarter, 0, None).unwrap();
        assert!(c.min_gap.unwrap() > 0.49);
    }

    #[test]
    fn grid_lists_near_pairs_only() {
        let maps: Vec<Similarity> =
            (0..100).map(|k| Similarity::scaling(0.004, &[k as f64 / 100.0]).unwrap()).collect();
        let cert = verify_ssc(&maps, 4, None).unwrap();
        assert!(cert.cell_size.is_some());
        assert!(cert.pairs.len() < 100 * 99 / 2);
        assert!(cert.far_field_gap.unwrap() > 0.0);
        assert!(cert.min_gap.unwrap() > 0.0);
    }

    fn two_vertex(r: [f64; 4], v: [f64; 4]) -> GdIfs {
        let e = |s, t, k: usize| Edge { source: s, target: t, map: Similarity::scaling(r[k], &[v[k], 0.5 * v[k]]).unwrap() };
        GdIfs::new(2, 2, vec![e(0, 0, 0), e(0, 1, 1), e(1, 1, 2), e(1, 0, 3)]).unwrap()
    }

    proptest! {
        #[test]
        fn enclosure_is_invariant(r in prop::array::uniform4(0.05f64..0.9), v in prop::array::uniform4(-3.0f64..3.0)) {
            let g = two_vertex(r, v);
            let enc = compute_enclosure(&g);
            prop_assert!(enc.is_invariant(&g), "defect {}", enc.invariance_defect(&g));
        }

        #[test]
        fn diameter_lower_is_monotone(r in prop::array::uniform4(0.05f64..0.6), v in prop::array::uniform4(-3.0f64..3.0)) {
            let g = two_vertex(r, v);
            let enc = compute_enclosure(&g);
            let mut prev = vec![0.0; 2];
            for depth in 0..6 {
                let d = diameter_bounds(&g, &enc, depth);
                for i in 0..2 {
                    prop_assert!(d.lower[i] >= prev[i]);
                    prop_assert!(d.lower[i] <= d.upper[i]);
                }
                prev = d.lower.clone();
            }
        }
    }
}
