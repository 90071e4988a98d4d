//! Subsystems with one common ratio and orthogonal parts close to a target.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::combinatorics::{chebyshev_counts, WordCount};
use super::dense::{check_epsilon, dense_core, Context};
use super::report::{Diagnostics, ExtractionCertificate, GroupMode, GroupReport};
use super::{ApproxConfig, SsIfs};
use crate::dimension::similarity_dimension;
use crate::error::{Error, Result};
use crate::geometry::{Orthogonal, Similarity};
use crate::graph::{concat, group_closure, EdgePath, GdIfs, VertexId};
use crate::par;

/// Letters whose ratios agree to this relative accuracy share a class.
const RATIO_CLASS_TOL: f64 = 1e-12;

pub(crate) fn word_map(letters: &[EdgePath], w: &[u32]) -> Similarity {
    let mut it = w.iter();
    let first = it.next().expect("nonempty word");
    let mut acc = letters[*first as usize].composite().clone();
    for &l in it {
        acc = acc.compose_unchecked(letters[l as usize].composite());
    }
    acc
}

pub(crate) fn word_path(letters: &[EdgePath], w: &[u32]) -> Option<EdgePath> {
    let mut it = w.iter();
    let mut acc = letters[*it.next()? as usize].clone();
    for &l in it {
        acc = concat(&acc, &letters[l as usize]).expect("letters are cycles at one vertex");
    }
    Some(acc)
}

/// Product of the ratios in increasing order, so that equal multisets give
/// bit-identical results.
pub(crate) fn canonical_product(mut ratios: Vec<f64>) -> f64 {
    ratios.sort_by(f64::total_cmp);
    ratios.into_iter().product()
}

/// Letters grouped by equal ratio: `(ratio, members)`.
fn ratio_classes(letters: &[EdgePath]) -> Vec<(f64, Vec<u32>)> {
    let mut classes: Vec<(f64, Vec<u32>)> = Vec::new();
    for (i, p) in letters.iter().enumerate() {
        let r = p.ratio();
        match classes.iter_mut().find(|(c, _)| (c - r).abs() <= RATIO_CLASS_TOL * c) {
            Some((_, m)) => m.push(i as u32),
            None => classes.push((r, vec![i as u32])),
        }
    }
    classes
}

/// Words in which class `c` occurs `counts[c]` times, each occurrence any
/// member of the class. Enumerated in full when there are at most `budget`,
/// otherwise `budget` distinct words are drawn at random.
pub(crate) fn class_words(classes: &[(f64, Vec<u32>)], counts: &[u64], wc: &WordCount, budget: usize, seed: u64) -> (Vec<Vec<u32>>, f64, bool) {
    let log_total = wc.log_count
        + classes.iter().zip(counts).map(|((_, m), &k)| k as f64 * (m.len() as f64).ln()).sum::<f64>();
    let k: u64 = counts.iter().sum();
    if log_total <= (budget as f64).ln() + 1e-9 {
        let mut out = Vec::new();
        let mut remaining = counts.to_vec();
        let mut word = Vec::with_capacity(k as usize);
        fill(classes, &mut remaining, &mut word, &mut out);
        return (out, log_total, false);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ k.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut pattern: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &n)| std::iter::repeat_n(c, n as usize)).collect();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut attempts = 0usize;
    while out.len() < budget && attempts < 4 * budget {
        attempts += 1;
        pattern.shuffle(&mut rng);
        let w: Vec<u32> = pattern.iter().map(|&c| classes[c].1[rng.random_range(0..classes[c].1.len())]).collect();
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    (out, log_total, true)
}

fn fill(classes: &[(f64, Vec<u32>)], remaining: &mut [u64], word: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if remaining.iter().all(|&r| r == 0) {
        out.push(word.clone());
        return;
    }
    for c in 0..classes.len() {
        if remaining[c] == 0 {
            continue;
        }
        remaining[c] -= 1;
        for &l in &classes[c].1 {
            word.push(l);
            fill(classes, remaining, word, out);
            word.pop();
        }
        remaining[c] += 1;
    }
}

/// A reachable orthogonal part together with the highest-ratio word found
/// for it.
#[derive(Clone, Debug)]
pub(crate) struct Corrector {
    pub rotation: Orthogonal,
    pub word: Vec<u32>,
    pub ratio: f64,
}

struct Pending(Corrector);

impl PartialEq for Pending {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Pending {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.ratio.total_cmp(&o.0.ratio).then_with(|| o.0.word.len().cmp(&self.0.word.len()))
    }
}

/// Best-first search over words (the empty word included) in decreasing
/// ratio, keeping one word per orthogonal part up to `resolution`. Returned
/// in decreasing ratio.
pub(crate) fn corrector_table(letters: &[EdgePath], dim: usize, resolution: f64, max_len: usize, budget: usize) -> Vec<Corrector> {
    let mut heap = BinaryHeap::new();
    heap.push(Pending(Corrector { rotation: Orthogonal::identity(dim), word: Vec::new(), ratio: 1.0 }));
    let mut settled: Vec<Corrector> = Vec::new();
    while let Some(Pending(c)) = heap.pop() {
        if settled.iter().any(|s| s.rotation.within(&c.rotation, resolution)) {
            continue;
        }
        if c.word.len() < max_len {
            for (l, p) in letters.iter().enumerate() {
                let mut word = c.word.clone();
                word.push(l as u32);
                heap.push(Pending(Corrector {
                    rotation: c.rotation.compose(p.composite().rotation()),
                    word,
                    ratio: c.ratio * p.ratio(),
                }));
            }
        }
        settled.push(c);
        if settled.len() >= budget {
            break;
        }
    }
    settled
}

/// Result of [`uniform_core`].
pub(crate) struct UniformOutcome {
    pub paths: Vec<EdgePath>,
    pub maps: Vec<Similarity>,
    pub ratio: f64,
    pub partial: bool,
    pub diagnostics: Diagnostics,
}

struct Choice {
    dimension: f64,
    words: Vec<Vec<u32>>,
    corrector: Corrector,
    ratio: f64,
    word_count: WordCount,
    class_size: f64,
    sampled: bool,
    cells: usize,
}

/// Builds `S_c ∘ S_u` over one cell of words `u` of a fixed letter-count
/// class, where the corrector `c` brings every `T_c·T_u` within `trafo_eps`
/// of `target`. The letters come from the dense construction run to
/// `inner_goal`; word length grows until the dimension exceeds `goal`.
pub(crate) fn uniform_core(ctx: &Context, target: &Orthogonal, trafo_eps: f64, goal: f64, inner_goal: f64) -> Result<UniformOutcome> {
    let cfg = ctx.cfg;
    let inner = dense_core(ctx, inner_goal)?;
    let letters = inner.paths;
    let s = inner.dimension;
    let classes = ratio_classes(&letters);
    let p: Vec<f64> = classes.iter().map(|(r, m)| m.len() as f64 * r.powf(s)).collect();
    let total: f64 = p.iter().sum();
    let p: Vec<f64> = p.iter().map(|x| x / total).collect();
    let table = corrector_table(&letters, ctx.g.dim(), trafo_eps / 8.0, cfg.corrector_max_len, cfg.group_budget);
    let cell_radius = trafo_eps / 4.0;

    let mut best: Option<Choice> = None;
    let mut was_sampled = false;
    for k in 1..=cfg.max_word_length {
        let wc = chebyshev_counts(&p, k)?;
        let (words, log_total, sampled) = class_words(&classes, &wc.counts, &wc, cfg.word_budget, cfg.seed);
        let rots: Vec<Orthogonal> = par::map(&words, |w| word_map(&letters, w).rotation().clone());
        let mut centres: Vec<usize> = Vec::new();
        let mut cells: Vec<Vec<usize>> = Vec::new();
        for (i, t) in rots.iter().enumerate() {
            match centres.iter().position(|&c| rots[c].within(t, cell_radius)) {
                Some(c) => cells[c].push(i),
                None => {
                    centres.push(i);
                    cells.push(vec![i]);
                }
            }
        }
        let ratio_u: Vec<f64> = wc.counts.iter().zip(&classes).flat_map(|(&n, (r, _))| std::iter::repeat_n(*r, n as usize)).collect();
        let evaluated = par::map(&cells, |cell| {
            let c = table.iter().find(|c| cell.iter().all(|&u| c.rotation.compose(&rots[u]).within(target, trafo_eps)))?;
            let n = cell.len().min(cfg.max_output_maps);
            let mut all = ratio_u.clone();
            all.extend(c.word.iter().map(|&l| letters[l as usize].ratio()));
            let ratio = canonical_product(all);
            let dim = if n > 1 { (n as f64).ln() / -ratio.ln() } else { 0.0 };
            Some((dim, c.clone(), ratio))
        });
        let pick = evaluated
            .into_iter()
            .enumerate()
            .filter_map(|(i, e)| e.map(|e| (i, e)))
            .max_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then(b.0.cmp(&a.0)));
        if let Some((i, (dimension, corrector, ratio))) = pick {
            if best.as_ref().is_none_or(|b| dimension > b.dimension) {
                let words: Vec<Vec<u32>> = cells[i].iter().take(cfg.max_output_maps).map(|&u| words[u].clone()).collect();
                best = Some(Choice {
                    dimension,
                    words,
                    corrector,
                    ratio,
                    word_count: wc.clone(),
                    class_size: log_total.exp(),
                    sampled,
                    cells: cells.len(),
                });
            }
        }
        if best.as_ref().is_some_and(|b| b.dimension > goal) {
            break;
        }
        // Once sampling sets in, longer words only add cells.
        if sampled && was_sampled {
            break;
        }
        was_sampled = sampled;
    }
    let Some(choice) = best else {
        return Err(Error::SearchExhausted(format!(
            "no corrector within {trafo_eps} of the target was found"
        )));
    };
    let corrector_path = word_path(&letters, &choice.corrector.word);
    let mut paths = Vec::with_capacity(choice.words.len());
    let mut maps = Vec::with_capacity(choice.words.len());
    for w in &choice.words {
        let mut full = choice.corrector.word.clone();
        full.extend_from_slice(w);
        let path = word_path(&letters, &full).expect("nonempty word");
        maps.push(path.composite().clone().with_ratio(choice.ratio));
        paths.push(path);
    }
    let partial = !(choice.dimension > goal);
    let mut diagnostics = inner.diagnostics;
    diagnostics.inner_dimension = Some(s);
    diagnostics.word_count = Some(choice.word_count);
    diagnostics.class_size = Some(choice.class_size.round() as usize);
    diagnostics.sampled = Some(choice.sampled);
    diagnostics.cells = Some(choice.cells);
    diagnostics.corrector = Some(corrector_path.map(|p| p.edges().to_vec()).unwrap_or_default());
    Ok(UniformOutcome { paths, maps, ratio: choice.ratio, partial, diagnostics })
}

/// Largest `‖T − O‖` over the maps.
pub(crate) fn distance_to_target(maps: &[Similarity], target: &Orthogonal) -> f64 {
    maps.iter().map(|m| m.rotation().distance(target)).fold(0.0, f64::max)
}

pub(crate) fn finish(
    ctx: &Context,
    epsilon: f64,
    mode: GroupMode,
    target: &Orthogonal,
    out: UniformOutcome,
    restrict_so: bool,
) -> Result<(SsIfs, ExtractionCertificate)> {
    let ssifs = SsIfs { maps: out.maps, provenance: out.paths };
    let separation = ctx.certify(&ssifs.maps)?;
    let achieved = similarity_dimension(&ssifs.ratios())?;
    let output: Vec<Orthogonal> = ssifs.maps.iter().map(|m| m.rotation().clone()).collect();
    let mut group_report = GroupReport::measure(
        mode,
        ctx.g.dim(),
        &ctx.generators.transforms(),
        &output,
        epsilon,
        ctx.cfg.group_budget,
        restrict_so,
    )?;
    group_report.target = Some(target.row_major());
    group_report.max_distance_to_target = Some(distance_to_target(&ssifs.maps, target));
    let cert = ExtractionCertificate {
        target_vertex: ctx.j,
        epsilon,
        achieved_dimension: achieved,
        reference_dimension: ctx.reference.clone(),
        separation,
        ssc_depth: ctx.cfg.max_depth,
        group_report,
        uniform_ratio: Some(out.ratio),
        partial: out.partial,
        diagnostics: out.diagnostics,
    };
    Ok((ssifs, cert))
}

/// A subsystem of cycles at `j` with the strong separation condition, one
/// common ratio, every orthogonal part within `ε` of `target`, and
/// similarity dimension above `dim K_j − ε`. The target must lie within
/// `ε/2` of the `j`-th transformation group.
pub fn extract_uniform(
    g: &GdIfs,
    j: VertexId,
    target: &Orthogonal,
    epsilon: f64,
    cfg: &ApproxConfig,
) -> Result<(SsIfs, ExtractionCertificate)> {
    check_epsilon(epsilon)?;
    Error::check_dim(g.dim(), target.dim())?;
    let ctx = Context::new(g, j, cfg)?;
    let net = group_closure(&ctx.generators.transforms(), g.dim(), epsilon / 2.0, cfg.group_budget)?;
    if !net.contains_within(target, epsilon / 2.0) {
        let (_, d) = net.nearest(target);
        return Err(Error::precondition(format!(
            "target is {d:.3e} from the transformation group, more than ε/2"
        )));
    }
    let goal = ctx.reference.value - epsilon;
    let out = uniform_core(&ctx, target, epsilon, goal, ctx.reference.value - epsilon / 2.0)?;
    finish(&ctx, epsilon, GroupMode::EpsilonClose, target, out, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_product_is_order_free() {
        let a = canonical_product(vec![0.3, 0.7, 0.11]);
        let b = canonical_product(vec![0.11, 0.3, 0.7]);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn class_words_enumerates_all() {
        let classes = vec![(0.5, vec![0, 1]), (0.25, vec![2])];
        let wc = crate::approx::count_words(3, &[2, 1]).unwrap();
        let (words, log_total, sampled) = class_words(&classes, &[2, 1], &wc, 1000, 0);
        assert!(!sampled);
        // 3 arrangements times 2² letter choices.
        assert_eq!(words.len(), 12);
        assert!((log_total - 12f64.ln()).abs() < 1e-12);
        let distinct: HashSet<_> = words.iter().collect();
        assert_eq!(distinct.len(), 12);
    }

    #[test]
    fn class_words_samples_distinct() {
        let classes = vec![(0.5, vec![0, 1]), (0.25, vec![2, 3])];
        let wc = crate::approx::count_words(10, &[5, 5]).unwrap();
        let (words, _, sampled) = class_words(&classes, &[5, 5], &wc, 100, 7);
        assert!(sampled);
        assert_eq!(words.len(), 100);
        let distinct: HashSet<_> = words.iter().collect();
        assert_eq!(distinct.len(), 100);
    }
}
