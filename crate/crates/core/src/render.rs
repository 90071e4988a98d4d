//! Chaos-game point clouds and binary pixmaps.
//!
//! A graph-directed walk keeps a point `x ∈ K_v` and moves it by the map of a
//! uniformly chosen edge `e` with target `v`, landing in `K_{s(e)}`. Each
//! vertex gets its own colour; an optional self-similar subsystem is drawn on
//! top in white.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Similarity, Vector};
use crate::graph::{GdIfs, VertexId};
use crate::separation::compute_enclosure;

pub const MIN_ITERATIONS: usize = 1000;
/// Steps discarded before plotting.
pub const BURN_IN: usize = 64;
pub const OVERLAY_COLOUR: [u8; 3] = [255, 255, 255];
const PALETTE: [[u8; 3]; 6] =
    [[230, 97, 1], [94, 60, 153], [27, 158, 119], [217, 95, 2], [117, 112, 179], [231, 41, 138]];

#[derive(Clone, Debug, PartialEq)]
pub struct RenderSpec {
    pub width: usize,
    pub height: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Coordinates shown on the horizontal and vertical axes when `d > 2`.
    pub projection: (usize, usize),
}

impl Default for RenderSpec {
    fn default() -> Self {
        RenderSpec { width: 512, height: 512, iterations: 100_000, seed: 0, projection: (0, 1) }
    }
}

impl RenderSpec {
    pub fn validate(&self, d: usize) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::input("image size must be positive"));
        }
        if self.iterations < MIN_ITERATIONS {
            return Err(Error::input(format!("iterations must be at least {MIN_ITERATIONS}")));
        }
        let (a, b) = self.projection;
        if d > 2 && (a >= d || b >= d || a == b) {
            return Err(Error::input(format!("projection ({a}, {b}) invalid for d = {d}")));
        }
        Ok(())
    }
}

/// `n` points of the walk, each tagged with the vertex whose attractor holds it.
pub fn chaos_points(g: &GdIfs, n: usize, seed: u64) -> Vec<(Vector, VertexId)> {
    let q = g.vertex_count();
    let mut incoming = vec![Vec::new(); q];
    for (id, e) in g.edges().iter().enumerate() {
        incoming[e.target].push(id);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Every step contracts, so the burn-in forgets the start.
    let mut x = Vector::zeros(g.dim());
    let mut v = 0;
    let mut out = Vec::with_capacity(n);
    for step in 0..n + BURN_IN {
        let e = g.edge(incoming[v][rng.random_range(0..incoming[v].len())]);
        x = e.map.apply(&x);
        v = e.source;
        if step >= BURN_IN {
            out.push((x.clone(), v));
        }
    }
    out
}

/// `n` points of the attractor of a single list of maps.
pub fn ifs_points(maps: &[Similarity], n: usize, seed: u64) -> Vec<Vector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = maps[0].fixed_point().point;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        x = maps[rng.random_range(0..maps.len())].apply(&x);
        out.push(x.clone());
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    /// Row-major RGB, top row first.
    pub rgb: Vec<u8>,
    /// World window `[x0, x1] × [y0, y1]`.
    pub window: [f64; 4],
}

impl Image {
    pub fn pixel(&self, col: usize, row: usize) -> [u8; 3] {
        let i = 3 * (row * self.width + col);
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }

    /// Binary P6 pixmap.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.rgb);
        out
    }

    /// Column of world coordinate `x`, clamped to the image.
    pub fn column(&self, x: f64) -> usize {
        let [x0, x1, _, _] = self.window;
        let t = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.5 };
        ((t * self.width as f64).floor().max(0.0) as usize).min(self.width - 1)
    }

    pub fn row(&self, y: f64) -> usize {
        let [_, _, y0, y1] = self.window;
        let t = if y1 > y0 { (y1 - y) / (y1 - y0) } else { 0.5 };
        ((t * self.height as f64).floor().max(0.0) as usize).min(self.height - 1)
    }

    fn plot(&mut self, col: usize, row: usize, c: [u8; 3]) {
        let i = 3 * (row * self.width + col);
        self.rgb[i..i + 3].copy_from_slice(&c);
    }
}

/// Renders the attractor of `g` and, when given, the attractor of a
/// subsystem at vertex `j` on top. In `d = 1` the vertical axis separates
/// vertices into horizontal bands.
pub fn render(g: &GdIfs, spec: &RenderSpec, overlay: Option<(VertexId, &[Similarity])>) -> Result<Image> {
    let d = g.dim();
    spec.validate(d)?;
    let (a, b) = if d >= 2 { spec.projection } else { (0, 0) };
    let enc = compute_enclosure(g);
    let mut window = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
    for ball in &enc.balls {
        window[0] = window[0].min(ball.center[a] - ball.radius);
        window[1] = window[1].max(ball.center[a] + ball.radius);
        window[2] = window[2].min(ball.center[b] - ball.radius);
        window[3] = window[3].max(ball.center[b] + ball.radius);
    }
    if d == 1 {
        window[2] = 0.0;
        window[3] = g.vertex_count() as f64;
    }
    let mut img = Image { width: spec.width, height: spec.height, rgb: vec![0; 3 * spec.width * spec.height], window };
    let place = |img: &Image, x: &Vector, v: VertexId| -> (usize, usize) {
        let y = if d == 1 { v as f64 + 0.5 } else { x[b] };
        (img.column(x[a]), img.row(y))
    };
    for (x, v) in chaos_points(g, spec.iterations, spec.seed) {
        let (c, r) = place(&img, &x, v);
        img.plot(c, r, PALETTE[v % PALETTE.len()]);
    }
    if let Some((j, maps)) = overlay {
        g.check_vertex(j)?;
        if maps.is_empty() || maps.iter().any(|m| m.dim() != d) {
            return Err(Error::input("overlay maps must be nonempty and match the system dimension"));
        }
        for x in ifs_points(maps, spec.iterations, spec.seed ^ 0x5eed) {
            let (c, r) = place(&img, &x, j);
            img.plot(c, r, OVERLAY_COLOUR);
        }
    }
    Ok(img)
}

/// Writes through a temporary file in the same directory and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| std::io::Error::other("path has no file name"))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn header_and_size() {
        let spec = RenderSpec { width: 40, height: 10, iterations: 2000, ..RenderSpec::default() };
        let img = render(&fixtures::cantor(), &spec, None).unwrap();
        let ppm = img.to_ppm();
        assert!(ppm.starts_with(b"P6\n40 10\n255\n"));
        assert_eq!(ppm.len(), b"P6\n40 10\n255\n".len() + 3 * 400);
    }

    #[test]
    fn deterministic_for_a_seed() {
        let spec = RenderSpec { width: 64, height: 64, iterations: 5000, seed: 7, projection: (0, 1) };
        let a = render(&fixtures::planar_three(), &spec, None).unwrap();
        let b = render(&fixtures::planar_three(), &spec, None).unwrap();
        assert_eq!(a, b);
        let g = fixtures::planar_three();
        assert_ne!(chaos_points(&g, 10, 7), chaos_points(&g, 10, 8));
    }

    #[test]
    fn rejects_short_runs() {
        let spec = RenderSpec { iterations: 999, ..RenderSpec::default() };
        assert!(render(&fixtures::cantor(), &spec, None).is_err());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.ppm");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
