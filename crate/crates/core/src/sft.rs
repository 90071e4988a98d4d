//! Subshifts of finite type with one similarity per symbol.
//!
//! The graph-directed system of an SFT has the alphabet as vertices and an
//! edge `i → l` carrying `S_i` for every allowed transition `A[i][l] = 1`.
//! All extraction modes then run on it unchanged.

use crate::error::{Error, Result};
use crate::geometry::Similarity;
use crate::graph::{Edge, GdIfs};

#[derive(Clone, Debug, PartialEq)]
pub struct SftSystem {
    matrix: Vec<Vec<u8>>,
    maps: Vec<Similarity>,
}

fn check_square(a: &[Vec<u8>]) -> Result<()> {
    let m = a.len();
    if m == 0 {
        return Err(Error::input("empty transition matrix"));
    }
    for (i, row) in a.iter().enumerate() {
        if row.len() != m {
            return Err(Error::input(format!("row {i} has {} entries, expected {m}", row.len())));
        }
        if let Some(x) = row.iter().find(|&&x| x > 1) {
            return Err(Error::input(format!("row {i} contains {x}; entries must be 0 or 1")));
        }
    }
    Ok(())
}

/// Whether every symbol can reach every other: strong connectivity of the
/// digraph with an arc `i → l` for each `A[i][l] = 1`.
pub fn is_irreducible(a: &[Vec<u8>]) -> Result<bool> {
    check_square(a)?;
    let m = a.len();
    let reach = |rev: bool| {
        let mut seen = vec![false; m];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for l in 0..m {
                let arc = if rev { a[l][i] } else { a[i][l] };
                if arc == 1 && !seen[l] {
                    seen[l] = true;
                    stack.push(l);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    Ok(reach(false) && reach(true))
}

impl SftSystem {
    pub fn new(matrix: Vec<Vec<u8>>, maps: Vec<Similarity>) -> Result<Self> {
        check_square(&matrix)?;
        if maps.len() != matrix.len() {
            return Err(Error::input(format!(
                "{} symbols but {} maps",
                matrix.len(),
                maps.len()
            )));
        }
        if let Some(i) = matrix.iter().position(|row| row.iter().all(|&x| x == 0)) {
            return Err(Error::input(format!("symbol {i} has no allowed successor")));
        }
        let d = maps[0].dim();
        for m in &maps {
            Error::check_dim(d, m.dim())?;
        }
        Ok(SftSystem { matrix, maps })
    }

    pub fn alphabet_size(&self) -> usize {
        self.matrix.len()
    }

    pub fn matrix(&self) -> &[Vec<u8>] {
        &self.matrix
    }

    pub fn maps(&self) -> &[Similarity] {
        &self.maps
    }

    pub fn is_irreducible(&self) -> bool {
        is_irreducible(&self.matrix).expect("validated on construction")
    }

    /// Edges are emitted row by row, so edge ids follow the matrix order.
    pub fn to_gdifs(&self) -> Result<GdIfs> {
        let m = self.alphabet_size();
        let mut edges = Vec::new();
        for i in 0..m {
            for l in 0..m {
                if self.matrix[i][l] == 1 {
                    edges.push(Edge { source: i, target: l, map: self.maps[i].clone() });
                }
            }
        }
        GdIfs::new(m, self.maps[0].dim(), edges)
    }

    /// Whether a symbol sequence respects the transition matrix.
    pub fn admissible(&self, word: &[usize]) -> bool {
        word.iter().all(|&s| s < self.alphabet_size()) && word.windows(2).all(|w| self.matrix[w[0]][w[1]] == 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn third(v: f64) -> Similarity {
        Similarity::scaling(1.0 / 3.0, &[v]).unwrap()
    }

    #[test]
    fn irreducibility_examples() {
        assert!(!is_irreducible(&[vec![1, 0], vec![0, 1]]).unwrap());
        assert!(is_irreducible(&[vec![1, 1], vec![1, 1]]).unwrap());
        let cycle = vec![vec![0, 1, 0], vec![0, 0, 1], vec![1, 0, 0]];
        assert!(is_irreducible(&cycle).unwrap());
        assert!(is_irreducible(&[vec![1, 1]]).is_err());
    }

    #[test]
    fn full_shift_conversion() {
        let s = SftSystem::new(vec![vec![1, 1], vec![1, 1]], vec![third(0.0), third(2.0 / 3.0)]).unwrap();
        let g = s.to_gdifs().unwrap();
        assert_eq!((g.vertex_count(), g.edges().len()), (2, 4));
        for e in g.edges() {
            assert_eq!(e.map, s.maps()[e.source]);
        }
    }

    #[test]
    fn golden_mean_conversion() {
        let s = SftSystem::new(vec![vec![1, 1], vec![1, 0]], vec![third(0.0), third(2.0 / 3.0)]).unwrap();
        assert!(s.is_irreducible());
        let g = s.to_gdifs().unwrap();
        assert_eq!(g.edges().len(), 3);
        assert!(g.strongly_connected());
    }

    #[test]
    fn rejects_dead_symbol() {
        assert!(SftSystem::new(vec![vec![1, 1], vec![0, 0]], vec![third(0.0), third(0.5)]).is_err());
    }
}
