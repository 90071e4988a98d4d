//! Scans for cycle pairs of two systems whose log-ratio quotient is far from
//! every rational of small denominator.
//!
//! A flagged pair only suggests incommensurability: a float cannot certify
//! irrationality, so reports are marked non-certifying.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::{EdgePath, GdIfs, VertexId};
use crate::rational::best_rational;

pub const MAX_DENOMINATOR: u64 = 10_000;
/// A quotient within this of a convergent counts as rational.
pub const RATIONAL_TOL: f64 = 1e-12;
/// Ratios this close (relative) are one ratio.
const RATIO_DEDUP_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRatioPair {
    pub cycle_a: Vec<usize>,
    pub cycle_b: Vec<usize>,
    pub ratio_a: f64,
    pub ratio_b: f64,
    pub quotient: f64,
    /// Best convergent `p/q` with `q ≤ MAX_DENOMINATOR` and its error.
    pub best_rational: (i64, u64),
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRatioReport {
    pub cycles_a: usize,
    pub cycles_b: usize,
    pub pairs_scanned: usize,
    pub flagged: Vec<LogRatioPair>,
    pub certifying: bool,
}

/// Cycles at `j` with at most `max_len` edges, one per distinct ratio,
/// shortest first; at most `cap` of them.
pub fn cycles_by_ratio(g: &GdIfs, j: VertexId, max_len: usize, cap: usize) -> Result<Vec<EdgePath>> {
    g.check_vertex(j)?;
    let mut found: Vec<EdgePath> = Vec::new();
    let mut level: Vec<EdgePath> = g.out_edges(j).iter().map(|&e| EdgePath::edge(g, e)).collect();
    for _ in 0..max_len {
        let mut next = Vec::new();
        for p in level {
            if p.is_cycle() && !found.iter().any(|c| (c.ratio() - p.ratio()).abs() <= RATIO_DEDUP_TOL * p.ratio()) {
                found.push(p.clone());
                if found.len() >= cap {
                    return Ok(found);
                }
            }
            for &e in g.out_edges(p.target()) {
                let mut edges = p.edges().to_vec();
                edges.push(e);
                next.push(g.path(&edges)?);
            }
            if next.len() > 64 * cap {
                break;
            }
        }
        level = next;
    }
    Ok(found)
}

/// Compares every cycle ratio at `ja` in `a` with every one at `jb` in `b`.
pub fn log_ratio_check(a: &GdIfs, ja: VertexId, b: &GdIfs, jb: VertexId, max_len: usize) -> Result<LogRatioReport> {
    a.require_strongly_connected()?;
    b.require_strongly_connected()?;
    let ca = cycles_by_ratio(a, ja, max_len, 256)?;
    let cb = cycles_by_ratio(b, jb, max_len, 256)?;
    let mut flagged = Vec::new();
    for p in &ca {
        for q in &cb {
            let quotient = p.ratio().ln() / q.ratio().ln();
            let (best, error) = best_rational(quotient, MAX_DENOMINATOR).expect("finite quotient");
            if error > RATIONAL_TOL {
                flagged.push(LogRatioPair {
                    cycle_a: p.edges().to_vec(),
                    cycle_b: q.edges().to_vec(),
                    ratio_a: p.ratio(),
                    ratio_b: q.ratio(),
                    quotient,
                    best_rational: best,
                    error,
                });
            }
        }
    }
    Ok(LogRatioReport {
        cycles_a: ca.len(),
        cycles_b: cb.len(),
        pairs_scanned: ca.len() * cb.len(),
        flagged,
        certifying: false,
    })
}
