//! Small systems with known structure, used by tests, benches and the
//! shipped example configs.

use std::f64::consts::TAU;

use crate::geometry::{Orthogonal, Similarity, Vector};
use crate::graph::{Edge, GdIfs};
use crate::sft::SftSystem;

fn line(r: f64, t: f64, v: f64) -> Similarity {
    Similarity::new(r, Orthogonal::from_row_major(1, &[t]).unwrap(), Vector::from_vec(vec![v])).unwrap()
}

fn plane(r: f64, t: Orthogonal, v: [f64; 2]) -> Similarity {
    Similarity::new(r, t, Vector::from_vec(v.to_vec())).unwrap()
}

fn edge(source: usize, target: usize, map: Similarity) -> Edge {
    Edge { source, target, map }
}

/// Middle-third Cantor set.
pub fn cantor() -> GdIfs {
    GdIfs::from_maps(&[line(1.0 / 3.0, 1.0, 0.0), line(1.0 / 3.0, 1.0, 2.0 / 3.0)]).unwrap()
}

/// Two vertices, all ratios 1/3, one orientation-reversing edge. Its ratio
/// matrix has rank one, so the dimension is `log 2 / log 3`.
pub fn rank1_pair() -> GdIfs {
    GdIfs::new(
        2,
        1,
        vec![
            edge(0, 0, line(1.0 / 3.0, 1.0, 0.0)),
            edge(0, 1, line(1.0 / 3.0, 1.0, 2.0 / 3.0)),
            edge(1, 1, line(1.0 / 3.0, 1.0, 2.0 / 3.0)),
            edge(1, 0, line(1.0 / 3.0, -1.0, 1.0 / 3.0)),
        ],
    )
    .unwrap()
}

/// Three vertices on the line with mixed ratios and a reflection.
pub fn three_cycle() -> GdIfs {
    GdIfs::new(
        3,
        1,
        vec![
            edge(0, 0, line(0.5, 1.0, 0.0)),
            edge(0, 1, line(0.3, 1.0, 0.7)),
            edge(1, 1, line(0.4, 1.0, 0.6)),
            edge(1, 2, line(0.4, 1.0, 0.0)),
            edge(2, 0, line(0.5, 1.0, 0.0)),
            edge(2, 1, line(0.3, -1.0, 1.0)),
        ],
    )
    .unwrap()
}

/// Three planar maps of ratio 0.3, one rotating by 1 radian.
pub fn planar_three() -> GdIfs {
    GdIfs::from_maps(&[
        plane(0.3, Orthogonal::rotation_2d(1.0), [0.0, 0.0]),
        plane(0.3, Orthogonal::identity(2), [0.7, 0.0]),
        plane(0.3, Orthogonal::rotation_2d(-0.5), [0.35, 0.6]),
    ])
    .unwrap()
}

/// Two planar vertices, one edge a reflection.
pub fn planar_pair() -> GdIfs {
    GdIfs::new(
        2,
        2,
        vec![
            edge(0, 0, plane(0.3, Orthogonal::rotation_2d(1.0), [0.0, 0.0])),
            edge(0, 1, plane(0.3, Orthogonal::identity(2), [0.7, 0.0])),
            edge(1, 1, plane(0.3, Orthogonal::reflection_2d(0.0), [0.35, 0.6])),
            edge(1, 0, plane(0.3, Orthogonal::rotation_2d(2.0), [0.0, 0.0])),
        ],
    )
    .unwrap()
}

/// Golden-mean shift: symbol 1 may not follow itself.
pub fn golden_mean() -> SftSystem {
    SftSystem::new(vec![vec![1, 1], vec![1, 0]], vec![line(1.0 / 3.0, 1.0, 0.0), line(1.0 / 3.0, 1.0, 2.0 / 3.0)])
        .unwrap()
}

/// Two planar maps of ratio 1/4 with rotations by 1 and −0.6 radians.
pub fn planar_irrational() -> GdIfs {
    GdIfs::from_maps(&[
        plane(0.25, Orthogonal::rotation_2d(1.0), [0.0, 0.0]),
        plane(0.25, Orthogonal::rotation_2d(-0.6), [0.75, 0.0]),
    ])
    .unwrap()
}

/// A reflection and an irrational rotation, ratio 1/4.
pub fn planar_reflection() -> GdIfs {
    GdIfs::from_maps(&[
        plane(0.25, Orthogonal::reflection_2d(0.0), [0.0, 0.0]),
        plane(0.25, Orthogonal::rotation_2d(1.0), [0.75, 0.0]),
    ])
    .unwrap()
}

/// Orthogonal parts generate the dihedral group of order 6.
pub fn dihedral() -> GdIfs {
    GdIfs::from_maps(&[
        plane(0.25, Orthogonal::rotation_2d(TAU / 3.0), [0.0, 0.0]),
        plane(0.25, Orthogonal::reflection_2d(0.0), [0.75, 0.0]),
    ])
    .unwrap()
}

/// Named graph-directed fixtures with the strong separation condition.
pub fn ssc_fixtures() -> Vec<(&'static str, GdIfs)> {
    vec![
        ("cantor", cantor()),
        ("rank1_pair", rank1_pair()),
        ("three_cycle", three_cycle()),
        ("planar_three", planar_three()),
        ("planar_pair", planar_pair()),
        ("golden_mean", golden_mean().to_gdifs().unwrap()),
        ("planar_irrational", planar_irrational()),
        ("planar_reflection", planar_reflection()),
        ("dihedral", dihedral()),
    ]
}
