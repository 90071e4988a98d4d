//! Similarity dimension, Mauldin–Williams dimension and box counting.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vector;
use crate::graph::{GdIfs, VertexId};

/// Bisection stops once the bracket is this narrow.
pub const BISECTION_WIDTH: f64 = 1e-12;
/// Relative gap between the Collatz–Wielandt bounds at which power iteration stops.
pub const POWER_TOL: f64 = 1e-13;
pub const POWER_MAX_ITER: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimensionMethod {
    ScalarMoran,
    SpectralRadius,
    BoxCounting,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionResult {
    pub value: f64,
    pub bracket: (f64, f64),
    pub method: DimensionMethod,
}

fn check_ratios(ratios: &[f64]) -> Result<()> {
    if ratios.is_empty() {
        return Err(Error::input("similarity dimension of an empty list"));
    }
    if let Some(r) = ratios.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
        return Err(Error::input(format!("ratio {r} outside (0,1)")));
    }
    Ok(())
}

/// Bisection for the root of a strictly decreasing function, given as a sign
/// oracle: `above(s)` is true when the root lies above `s`.
fn bisect(mut lo: f64, mut hi: f64, mut above: impl FnMut(f64) -> bool) -> (f64, f64) {
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if above(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// The `s` with `∑ r_i^s = 1`.
pub fn similarity_dimension(ratios: &[f64]) -> Result<DimensionResult> {
    check_ratios(ratios)?;
    let f = |s: f64| ratios.iter().map(|r| r.powf(s)).sum::<f64>();
    if ratios.len() == 1 {
        return Ok(DimensionResult { value: 0.0, bracket: (0.0, 0.0), method: DimensionMethod::ScalarMoran });
    }
    let mut hi = 1.0;
    while f(hi) > 1.0 {
        hi *= 2.0;
    }
    let (lo, hi) = bisect(0.0, hi, |s| f(s) > 1.0);
    Ok(DimensionResult { value: 0.5 * (lo + hi), bracket: (lo, hi), method: DimensionMethod::ScalarMoran })
}

/// `A(s)_{il} = ∑_{e: i→l} r_e^s`.
pub fn ratio_matrix(g: &GdIfs, s: f64) -> DMatrix<f64> {
    let q = g.vertex_count();
    let mut a = DMatrix::zeros(q, q);
    for e in g.edges() {
        a[(e.source, e.target)] += e.map.ratio().powf(s);
    }
    a
}

/// Perron root of a nonnegative irreducible matrix, with Collatz–Wielandt
/// bounds `lower ≤ ρ ≤ upper`.
#[derive(Clone, Debug, PartialEq)]
pub struct PerronRoot {
    pub lower: f64,
    pub upper: f64,
    pub vector: DVector<f64>,
    pub iterations: usize,
}

impl PerronRoot {
    pub fn value(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// Power iteration on `A + I`, which is primitive when `A` is irreducible,
/// so the iteration converges even for periodic `A`. Stops as soon as the
/// bounds are `tol`-close or, when `decide` is given, as soon as both bounds
/// lie on one side of it.
pub fn spectral_radius(a: &DMatrix<f64>, tol: f64, max_iter: usize, decide: Option<f64>) -> PerronRoot {
    let n = a.nrows();
    let shifted = a + DMatrix::identity(n, n);
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut best = (0.0f64, f64::INFINITY);
    let mut iterations = 0;
    for it in 0..max_iter {
        iterations = it + 1;
        let y = &shifted * &x;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let q = y[i] / x[i];
            lo = lo.min(q);
            hi = hi.max(q);
        }
        best = (best.0.max(lo - 1.0), best.1.min(hi - 1.0));
        let norm = y.sum();
        x = y / norm;
        // Entries that underflow would break the ratios; nudge them back.
        if x.iter().any(|v| !(*v > 1e-300)) {
            x.iter_mut().for_each(|v| *v = v.max(1e-300));
        }
        if best.1 - best.0 <= tol * best.1.abs().max(1.0) {
            break;
        }
        if let Some(t) = decide {
            if best.0 > t || best.1 < t {
                break;
            }
        }
    }
    PerronRoot { lower: best.0.max(0.0), upper: best.1.max(best.0.max(0.0)), vector: x, iterations }
}

/// One bisection probe `(s, ρ(A(s)))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TracePoint {
    pub s: f64,
    pub rho: f64,
}

/// The `s ≥ 0` with `ρ(A(s)) = 1`, plus the probes visited by bisection.
pub fn mauldin_williams_trace(g: &GdIfs) -> Result<(DimensionResult, Vec<TracePoint>)> {
    g.require_strongly_connected()?;
    let mut trace = Vec::new();
    let probe = |s: f64, trace: &mut Vec<TracePoint>| {
        let root = spectral_radius(&ratio_matrix(g, s), POWER_TOL, POWER_MAX_ITER, None);
        trace.push(TracePoint { s, rho: root.value() });
        root
    };
    let at_zero = probe(0.0, &mut trace);
    if at_zero.upper <= 1.0 + 1e-12 {
        // ρ(A(0)) ≥ 1 for every strongly connected graph, with equality
        // exactly when the graph is a single cycle.
        return Ok((
            DimensionResult { value: 0.0, bracket: (0.0, 0.0), method: DimensionMethod::SpectralRadius },
            trace,
        ));
    }
    let mut hi = g.dim() as f64 + 5.0;
    while probe(hi, &mut trace).lower > 1.0 {
        hi *= 2.0;
    }
    let (lo, hi) = bisect(0.0, hi, |s| {
        let r = probe(s, &mut trace);
        r.value() > 1.0
    });
    Ok((
        DimensionResult { value: 0.5 * (lo + hi), bracket: (lo, hi), method: DimensionMethod::SpectralRadius },
        trace,
    ))
}

pub fn mauldin_williams_dimension(g: &GdIfs) -> Result<DimensionResult> {
    mauldin_williams_trace(g).map(|(d, _)| d)
}

/// The dimension seen from vertex `j` alone: the `s` at which the
/// first-return series `F_j(s) = A_jj + A_jR (I − A_RR)⁻¹ A_Rj` equals 1,
/// where `R` is every other vertex.
///
/// `F_j` is only finite while `(I − A_RR)⁻¹` is nonnegative; elsewhere the
/// root lies higher.
pub fn first_return_dimension(g: &GdIfs, j: VertexId) -> Result<DimensionResult> {
    g.check_vertex(j)?;
    g.require_strongly_connected()?;
    let q = g.vertex_count();
    let rest: Vec<usize> = (0..q).filter(|&i| i != j).collect();
    let series = |s: f64| -> f64 {
        let a = ratio_matrix(g, s);
        let mut f = a[(j, j)];
        if rest.is_empty() {
            return f;
        }
        let n = rest.len();
        let m = DMatrix::from_fn(n, n, |x, y| {
            let v = if x == y { 1.0 } else { 0.0 };
            v - a[(rest[x], rest[y])]
        });
        let Some(inv) = m.try_inverse() else {
            return f64::INFINITY;
        };
        if inv.iter().any(|v| *v < -1e-12) {
            return f64::INFINITY;
        }
        let row = DVector::from_fn(n, |x, _| a[(j, rest[x])]);
        let col = DVector::from_fn(n, |x, _| a[(rest[x], j)]);
        f += row.dot(&(inv * col));
        f
    };
    let mut hi = g.dim() as f64 + 5.0;
    while series(hi) > 1.0 {
        hi *= 2.0;
    }
    if series(0.0) <= 1.0 {
        return Ok(DimensionResult { value: 0.0, bracket: (0.0, 0.0), method: DimensionMethod::SpectralRadius });
    }
    let (lo, hi) = bisect(0.0, hi, |s| series(s) > 1.0);
    Ok(DimensionResult { value: 0.5 * (lo + hi), bracket: (lo, hi), method: DimensionMethod::SpectralRadius })
}

/// Least-squares slope of `log N(δ)` against `log(1/δ)` on grids anchored at
/// the bounding-box corner. The bracket is the slope ± its standard error.
pub fn box_counting_estimate(points: &[Vector], scales: &[f64]) -> Result<DimensionResult> {
    if points.len() < 1000 {
        return Err(Error::input(format!("box counting needs at least 1000 points, got {}", points.len())));
    }
    if scales.len() < 4 {
        return Err(Error::input("box counting needs at least 4 scales"));
    }
    if scales.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(Error::input("box-counting scales must be positive"));
    }
    let (smin, smax) = scales.iter().fold((f64::INFINITY, 0.0f64), |(a, b), s| (a.min(*s), b.max(*s)));
    if smax / smin < 4.0 {
        return Err(Error::input("box-counting scales must span at least two octaves"));
    }
    let d = points[0].len();
    let mut corner = vec![f64::INFINITY; d];
    let mut far = vec![f64::NEG_INFINITY; d];
    for p in points {
        if p.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: p.len() });
        }
        for k in 0..d {
            corner[k] = corner[k].min(p[k]);
            far[k] = far[k].max(p[k]);
        }
    }
    let zero = DimensionResult { value: 0.0, bracket: (0.0, 0.0), method: DimensionMethod::BoxCounting };
    if corner.iter().zip(&far).all(|(a, b)| a == b) {
        return Ok(zero);
    }
    let samples: Vec<(f64, f64)> = crate::par::map(scales, |&delta| {
        let cells: HashSet<Vec<i64>> = points
            .iter()
            .map(|p| (0..d).map(|k| ((p[k] - corner[k]) / delta).floor() as i64).collect())
            .collect();
        ((1.0 / delta).ln(), (cells.len() as f64).ln())
    });
    let n = samples.len() as f64;
    let mx = samples.iter().map(|s| s.0).sum::<f64>() / n;
    let my = samples.iter().map(|s| s.1).sum::<f64>() / n;
    let sxx: f64 = samples.iter().map(|s| (s.0 - mx).powi(2)).sum();
    let sxy: f64 = samples.iter().map(|s| (s.0 - mx) * (s.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = samples.iter().map(|s| (s.1 - intercept - slope * s.0).powi(2)).sum();
    let se = (sse / (n - 2.0) / sxx).sqrt();
    Ok(DimensionResult { value: slope, bracket: (slope - se, slope + se), method: DimensionMethod::BoxCounting })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Similarity;
    use crate::graph::Edge;
    use proptest::prelude::*;

    fn loops(ratios: &[f64]) -> GdIfs {
        let maps: Vec<_> = ratios.iter().map(|&r| Similarity::scaling(r, &[0.0]).unwrap()).collect();
        GdIfs::from_maps(&maps).unwrap()
    }

    fn edge(s: usize, t: usize, r: f64) -> Edge {
        Edge { source: s, target: t, map: Similarity::scaling(r, &[0.0]).unwrap() }
    }

    #[test]
    fn scalar_examples() {
        let s = similarity_dimension(&[1.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert!((s.value - 2f64.ln() / 3f64.ln()).abs() < 1e-10);
        assert!(s.bracket.1 - s.bracket.0 <= 1e-10);
        assert_eq!(similarity_dimension(&[0.5]).unwrap().value, 0.0);
        assert!((similarity_dimension(&[0.5, 0.5]).unwrap().value - 1.0).abs() < 1e-12);
        assert!(similarity_dimension(&[]).is_err());
        // Overlapping systems may exceed the ambient dimension.
        assert!(similarity_dimension(&[0.5; 8]).unwrap().value > 2.9);
    }

    #[test]
    fn spectral_examples() {
        let cantor = mauldin_williams_dimension(&loops(&[1.0 / 3.0, 1.0 / 3.0])).unwrap();
        assert!((cantor.value - 2f64.ln() / 3f64.ln()).abs() < 1e-10);

        let swap = GdIfs::new(2, 1, vec![edge(0, 1, 1.0 / 3.0), edge(1, 0, 1.0 / 3.0)]).unwrap();
        assert_eq!(mauldin_williams_dimension(&swap).unwrap().value, 0.0);

        let rank1 = GdIfs::new(
            2,
            1,
            vec![edge(0, 0, 1.0 / 3.0), edge(0, 1, 1.0 / 3.0), edge(1, 1, 1.0 / 3.0), edge(1, 0, 1.0 / 3.0)],
        )
        .unwrap();
        let d = mauldin_williams_dimension(&rank1).unwrap();
        assert!((d.value - 2f64.ln() / 3f64.ln()).abs() < 1e-9);
        assert!(d.bracket.1 - d.bracket.0 <= 1e-10);

        let broken = GdIfs::new(2, 1, vec![edge(0, 1, 0.5), edge(1, 1, 0.5)]).unwrap();
        assert_eq!(mauldin_williams_dimension(&broken), Err(Error::NotStronglyConnected));
    }

    #[test]
    fn rho_decreases_along_trace() {
        let g = GdIfs::new(
            3,
            1,
            vec![edge(0, 0, 0.5), edge(0, 1, 0.3), edge(1, 1, 0.4), edge(1, 2, 0.4), edge(2, 0, 0.5), edge(2, 1, 0.3)],
        )
        .unwrap();
        let (_, mut trace) = mauldin_williams_trace(&g).unwrap();
        trace.sort_by(|a, b| a.s.total_cmp(&b.s));
        for w in trace.windows(2) {
            if w[1].s > w[0].s {
                assert!(w[1].rho < w[0].rho, "{w:?}");
            }
        }
    }

    #[test]
    fn first_return_matches_spectral() {
        let g = GdIfs::new(
            3,
            1,
            vec![edge(0, 0, 0.5), edge(0, 1, 0.3), edge(1, 1, 0.4), edge(1, 2, 0.4), edge(2, 0, 0.5), edge(2, 1, 0.3)],
        )
        .unwrap();
        let mw = mauldin_williams_dimension(&g).unwrap().value;
        for j in 0..3 {
            let v = first_return_dimension(&g, j).unwrap().value;
            assert!((v - mw).abs() < 1e-9, "vertex {j}: {v} vs {mw}");
        }
    }

    #[test]
    fn box_counting_degenerate_and_square() {
        let same = vec![Vector::from_column_slice(&[0.3, 0.3]); 2000];
        let scales = [0.5, 0.25, 0.125, 0.0625];
        assert_eq!(box_counting_estimate(&same, &scales).unwrap().value, 0.0);

        let n = 200;
        let grid: Vec<Vector> = (0..n * n)
            .map(|k| Vector::from_column_slice(&[(k % n) as f64 / n as f64, (k / n) as f64 / n as f64]))
            .collect();
        let est = box_counting_estimate(&grid, &[0.25, 0.125, 0.0625, 0.03125, 0.015625]).unwrap();
        assert!((est.value - 2.0).abs() < 0.1, "{est:?}");
        assert!(box_counting_estimate(&grid, &[0.5, 0.4, 0.3, 0.2]).is_err());
    }

    proptest! {
        #[test]
        fn one_vertex_reduction(ratios in prop::collection::vec(0.01f64..0.9, 1..8)) {
            let a = similarity_dimension(&ratios).unwrap().value;
            let b = mauldin_williams_dimension(&loops(&ratios)).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-10);
        }

        #[test]
        fn adding_a_ratio_increases_dimension(ratios in prop::collection::vec(0.01f64..0.9, 1..6), extra in 0.01f64..0.9) {
            let a = similarity_dimension(&ratios).unwrap().value;
            let mut more = ratios.clone();
            more.push(extra);
            prop_assert!(similarity_dimension(&more).unwrap().value > a);
        }

        #[test]
        fn shrinking_a_ratio_decreases_dimension(ratios in prop::collection::vec(0.05f64..0.9, 2..6), idx in 0usize..6, f in 0.1f64..0.95) {
            let a = similarity_dimension(&ratios).unwrap().value;
            let mut less = ratios.clone();
            let i = idx % less.len();
            less[i] *= f;
            prop_assert!(similarity_dimension(&less).unwrap().value < a);
        }
    }
}
