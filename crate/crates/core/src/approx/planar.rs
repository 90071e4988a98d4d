//! Planar systems: one common ratio and one common rotation.

use super::combinatorics::{chebyshev_counts, WordCount};
use super::dense::{check_epsilon, dense_core, Context};
use super::exact::{exact_with, finite_closure};
use super::report::ExtractionCertificate;
use super::uniform::{canonical_product, class_words, finish, word_path, UniformOutcome};
use super::{ApproxConfig, GroupMode, SsIfs};
use crate::dimension::similarity_dimension;
use crate::error::{Error, Result};
use crate::geometry::{rotation_order, Orthogonal, RotationOrder, DEFAULT_MAX_ORDER, ORDER_TOL};
use crate::graph::{concat, EdgePath, GdIfs, VertexId};
use std::f64::consts::TAU;

/// Words whose rotation angles agree to this share a bucket.
const ANGLE_BUCKET_TOL: f64 = 1e-9;
const RATIO_BUCKET_TOL: f64 = 1e-12;

/// All words of length `k` over `alphabet`, or `None` above `budget`.
fn all_words(alphabet: &[EdgePath], k: u32, budget: usize) -> Option<Vec<EdgePath>> {
    let count = (alphabet.len() as f64).powi(k as i32);
    if count > budget as f64 {
        return None;
    }
    let mut level: Vec<EdgePath> = alphabet.to_vec();
    for _ in 1..k {
        level = level
            .iter()
            .flat_map(|p| alphabet.iter().map(move |a| concat(p, a).expect("cycles at one vertex")))
            .collect();
    }
    Some(level)
}

/// Replaces each orientation-reversing word `w` of length `k` by `w * σ`,
/// where `σ` is a fixed orientation-reversing letter.
fn absorb(letters: &[EdgePath], sigma: &EdgePath, k: u32, budget: usize) -> Option<Vec<EdgePath>> {
    let words = all_words(letters, k, budget)?;
    Some(
        words
            .into_iter()
            .map(|w| {
                if w.composite().rotation().is_orientation_preserving() {
                    w
                } else {
                    concat(&w, sigma).expect("cycles at one vertex")
                }
            })
            .collect(),
    )
}

fn dimension_of(paths: &[EdgePath]) -> Result<f64> {
    Ok(similarity_dimension(&paths.iter().map(|p| p.ratio()).collect::<Vec<_>>())?.value)
}

/// Letters grouped by equal ratio and equal rotation angle:
/// `((ratio, angle), members)`.
fn rotation_classes(alphabet: &[EdgePath]) -> Vec<((f64, f64), Vec<u32>)> {
    let mut classes: Vec<((f64, f64), Vec<u32>)> = Vec::new();
    for (i, p) in alphabet.iter().enumerate() {
        let r = p.ratio();
        let a = p.composite().rotation().angle_2d().expect("rotations only");
        let same = |(c, t): &(f64, f64)| {
            let da = (a - t).rem_euclid(TAU);
            (c - r).abs() <= RATIO_BUCKET_TOL * c && da.min(TAU - da) <= ANGLE_BUCKET_TOL
        };
        match classes.iter_mut().find(|(k, _)| same(k)) {
            Some((_, m)) => m.push(i as u32),
            None => classes.push(((r, a), vec![i as u32])),
        }
    }
    classes
}

fn infinite_order(t: &Orthogonal) -> bool {
    rotation_order(t, DEFAULT_MAX_ORDER, ORDER_TOL) == RotationOrder::InfiniteOrDeep
}

/// A letter-count class of words over the absorbed alphabet, all sharing one
/// ratio and one rotation, optionally behind a fixed prefix letter.
struct Selection {
    dimension: f64,
    word_count: WordCount,
    log_size: f64,
    prefix: Option<u32>,
    ratio: f64,
}

/// For a planar system: a subsystem of cycles at `j` with the strong
/// separation condition, one common ratio, one common rotation and
/// dimension above `dim K_j − ε`. When the transformation group is infinite
/// the common rotation has infinite order, so the subsystem's group is the
/// full rotation group; when it is finite the common rotation generates its
/// rotation subgroup.
pub fn extract_planar(g: &GdIfs, j: VertexId, epsilon: f64, cfg: &ApproxConfig) -> Result<(SsIfs, ExtractionCertificate)> {
    check_epsilon(epsilon)?;
    if g.dim() != 2 {
        return Err(Error::precondition(format!("planar mode needs d = 2, got d = {}", g.dim())));
    }
    let ctx = Context::new(g, j, cfg)?;
    let net = finite_closure(&ctx)?;
    if net.finite_group {
        let target = net
            .elements
            .iter()
            .filter(|t| t.angle_2d().is_some_and(|a| a > ANGLE_BUCKET_TOL))
            .min_by(|a, b| a.angle_2d().unwrap().total_cmp(&b.angle_2d().unwrap()))
            .cloned()
            .unwrap_or_else(|| Orthogonal::identity(2));
        return exact_with(&ctx, &net, &target, epsilon, GroupMode::PlanarSo2, true);
    }

    let goal = ctx.reference.value - epsilon;
    let inner = dense_core(&ctx, ctx.reference.value - epsilon / 2.0)?;
    let s = inner.dimension;
    let letters = inner.paths;
    let mut diagnostics = inner.diagnostics;
    diagnostics.inner_dimension = Some(s);

    let alphabet = match letters.iter().find(|p| !p.composite().rotation().is_orientation_preserving()) {
        None => letters.clone(),
        Some(sigma) => {
            let mut found = None;
            for k in 1..=cfg.max_word_length as u32 {
                let Some(abs) = absorb(&letters, sigma, k, cfg.word_budget) else { break };
                if dimension_of(&abs)? > s - epsilon / 4.0 {
                    diagnostics.absorption_length = Some(k as u64);
                    found = Some(abs);
                    break;
                }
            }
            found.ok_or_else(|| {
                Error::SearchExhausted("absorbing reflections exceeded the word budget".into())
            })?
        }
    };

    // Rotations commute, so a word's ratio and rotation depend only on how
    // often each class occurs in it.
    let classes = rotation_classes(&alphabet);
    let s_abs = dimension_of(&alphabet)?;
    let p: Vec<f64> = classes.iter().map(|((r, _), m)| m.len() as f64 * r.powf(s_abs)).collect();
    let total: f64 = p.iter().sum();
    let p: Vec<f64> = p.iter().map(|x| x / total).collect();
    let cap = cfg.max_output_maps as f64;
    let mut best: Option<Selection> = None;
    for k in 1..=cfg.max_word_length {
        let wc = chebyshev_counts(&p, k)?;
        let log_size =
            wc.log_count + classes.iter().zip(&wc.counts).map(|((_, m), &c)| c as f64 * (m.len() as f64).ln()).sum::<f64>();
        let angle: f64 = classes.iter().zip(&wc.counts).map(|(((_, t), _), &c)| c as f64 * t).sum();
        let t = Orthogonal::rotation_2d(angle);
        let prefix = if infinite_order(&t) {
            None
        } else {
            match (0..alphabet.len()).find(|&a| infinite_order(&alphabet[a].composite().rotation().compose(&t))) {
                Some(a) => Some(a as u32),
                None => continue,
            }
        };
        let mut ratios: Vec<f64> =
            classes.iter().zip(&wc.counts).flat_map(|(((r, _), _), &c)| std::iter::repeat_n(*r, c as usize)).collect();
        ratios.extend(prefix.map(|a| alphabet[a as usize].ratio()));
        let ratio = canonical_product(ratios);
        let n = log_size.min(cap.ln());
        let dimension = if n > 0.0 { n / -ratio.ln() } else { 0.0 };
        if best.as_ref().is_none_or(|b| dimension > b.dimension) {
            best = Some(Selection { dimension, word_count: wc, log_size, prefix, ratio });
        }
        if best.as_ref().is_some_and(|b| b.dimension > goal) {
            break;
        }
    }
    let Some(sel) = best else {
        return Err(Error::SearchExhausted("no letter class with a common rotation of infinite order".into()));
    };
    let plain: Vec<(f64, Vec<u32>)> = classes.iter().map(|((r, _), m)| (*r, m.clone())).collect();
    let (words, _, sampled) = class_words(&plain, &sel.word_count.counts, &sel.word_count, cfg.max_output_maps, cfg.seed);
    let paths: Vec<EdgePath> = words
        .iter()
        .map(|w| {
            let mut full: Vec<u32> = sel.prefix.into_iter().collect();
            full.extend_from_slice(w);
            word_path(&alphabet, &full).expect("nonempty word")
        })
        .collect();
    let ratio = sel.ratio;
    let target = paths[0].composite().rotation().clone();
    let snap = paths.iter().map(|p| p.composite().rotation().distance(&target)).fold(0.0, f64::max);
    let maps = paths.iter().map(|p| p.composite().clone().with_ratio(ratio).with_rotation(target.clone())).collect();
    let dimension = (paths.len() as f64).ln() / -ratio.ln();
    diagnostics.snap_radius = Some(snap);
    diagnostics.word_count = Some(sel.word_count);
    diagnostics.class_size = Some(sel.log_size.exp().min(u64::MAX as f64) as usize);
    diagnostics.sampled = Some(sampled);
    let partial = !(dimension > goal);
    let out = UniformOutcome { paths, maps, ratio, partial, diagnostics };
    let (ssifs, mut cert) = finish(&ctx, epsilon, GroupMode::PlanarSo2, &target, out, true)?;
    cert.group_report.common_rotation_order = Some(RotationOrder::InfiniteOrDeep);
    Ok((ssifs, cert))
}
