//! Similarities and orthogonal transformations in runtime dimension `d`.
//!
//! A contracting similarity is stored decomposed as `x ↦ r·T(x) + v` with
//! `0 < r < 1`, `T` orthogonal and `v` a translation. Orthogonal parts are
//! projected onto the orthogonal group whenever they are built, so long
//! products do not drift away from it.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational;

pub type Vector = DVector<f64>;

/// Input matrices may be off from orthogonal by at most this much before
/// projection (‖QᵀQ − I‖ in max-entry norm).
pub const INPUT_ORTHOGONALITY_TOL: f64 = 1e-6;

/// Default threshold for `‖tⁿ − I‖` when classifying rotation orders.
pub const ORDER_TOL: f64 = 1e-8;

/// Default largest order searched by [`rotation_order`].
pub const DEFAULT_MAX_ORDER: u64 = 10_000;

/// An orthogonal transformation of ℝᵈ.
#[derive(Clone, Debug, PartialEq)]
pub struct Orthogonal {
    m: DMatrix<f64>,
}

impl Orthogonal {
    /// Builds an orthogonal transformation from a matrix that is orthogonal
    /// up to [`INPUT_ORTHOGONALITY_TOL`], projecting it exactly onto O(d).
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::input(format!(
                "orthogonal part must be a non-empty square matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("orthogonal part has non-finite entries"));
        }
        let d = matrix.nrows();
        let gram = matrix.transpose() * &matrix - DMatrix::identity(d, d);
        let defect = gram.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if defect > INPUT_ORTHOGONALITY_TOL {
            return Err(Error::input(format!(
                "matrix is not orthogonal (|QᵀQ − I| = {defect:.3e})"
            )));
        }
        Ok(Self::project(matrix))
    }

    /// Polar projection onto the nearest orthogonal matrix. Closed form in
    /// d ≤ 2, SVD otherwise. The input must be non-singular.
    pub(crate) fn project(m: DMatrix<f64>) -> Self {
        let d = m.nrows();
        match d {
            1 => {
                let s = if m[(0, 0)] < 0.0 { -1.0 } else { 1.0 };
                Orthogonal { m: DMatrix::from_element(1, 1, s) }
            }
            2 => {
                let (a, b, c, e) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
                if a * e - b * c >= 0.0 {
                    let psi = (c - b).atan2(a + e);
                    Self::rotation_2d(psi)
                } else {
                    let psi = (b + c).atan2(a - e);
                    let (s, co) = psi.sin_cos();
                    Orthogonal { m: DMatrix::from_row_slice(2, 2, &[co, s, s, -co]) }
                }
            }
            _ => {
                let svd = m.svd(true, true);
                let u = svd.u.expect("svd u");
                let vt = svd.v_t.expect("svd v_t");
                Orthogonal { m: u * vt }
            }
        }
    }

    pub fn identity(d: usize) -> Self {
        Orthogonal { m: DMatrix::identity(d, d) }
    }

    /// Counter-clockwise planar rotation by `theta` radians.
    pub fn rotation_2d(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Orthogonal { m: DMatrix::from_row_slice(2, 2, &[c, -s, s, c]) }
    }

    /// Planar reflection across the line through the origin at angle `phi`.
    pub fn reflection_2d(phi: f64) -> Self {
        let (s, c) = (2.0 * phi).sin_cos();
        Orthogonal { m: DMatrix::from_row_slice(2, 2, &[c, s, s, -c]) }
    }

    /// Rotation of ℝ³ by `angle` about `axis` (Rodrigues formula).
    pub fn axis_angle(axis: [f64; 3], angle: f64) -> Result<Self> {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::input("rotation axis must be a non-zero finite vector"));
        }
        let (x, y, z) = (axis[0] / n, axis[1] / n, axis[2] / n);
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        #[rustfmt::skip]
        let m = DMatrix::from_row_slice(3, 3, &[
            t * x * x + c,     t * x * y - s * z, t * x * z + s * y,
            t * x * y + s * z, t * y * y + c,     t * y * z - s * x,
            t * x * z - s * y, t * y * z + s * x, t * z * z + c,
        ]);
        Ok(Self::project(m))
    }

    pub fn from_row_major(d: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != d * d {
            return Err(Error::input(format!(
                "expected {} row-major entries for a {d}x{d} matrix, got {}",
                d * d,
                entries.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(d, d, entries))
    }

    pub fn row_major(&self) -> Vec<f64> {
        self.m.transpose().iter().copied().collect()
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn determinant(&self) -> f64 {
        match self.dim() {
            1 => self.m[(0, 0)],
            2 => self.m[(0, 0)] * self.m[(1, 1)] - self.m[(0, 1)] * self.m[(1, 0)],
            _ => self.m.determinant(),
        }
    }

    pub fn is_orientation_preserving(&self) -> bool {
        self.determinant() > 0.0
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        &self.m * x
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Orthogonal) -> Orthogonal {
        debug_assert_eq!(self.dim(), other.dim());
        Self::project(&self.m * &other.m)
    }

    pub fn inverse(&self) -> Orthogonal {
        Orthogonal { m: self.m.transpose() }
    }

    pub fn pow(&self, n: u64) -> Orthogonal {
        let mut acc = Orthogonal::identity(self.dim());
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.compose(&base);
            }
            base = base.compose(&base);
            n >>= 1;
        }
        acc
    }

    /// Rotation angle in (−π, π] of a planar rotation; `None` for reflections
    /// or d ≠ 2.
    pub fn angle_2d(&self) -> Option<f64> {
        if self.dim() != 2 || !self.is_orientation_preserving() {
            return None;
        }
        Some(self.m[(1, 0)].atan2(self.m[(0, 0)]))
    }

    /// Operator-norm distance; both operands must share a dimension.
    pub fn distance(&self, other: &Orthogonal) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        spectral_norm(&(&self.m - &other.m))
    }

    /// Cheap pre-test: `Some(true)` when certainly within `r`, `Some(false)`
    /// when certainly farther, `None` when the exact norm is needed.
    pub(crate) fn within_quick(&self, other: &Orthogonal, r: f64) -> Option<bool> {
        let mut max_abs = 0.0f64;
        let mut frob2 = 0.0;
        for (a, b) in self.m.iter().zip(other.m.iter()) {
            let d = a - b;
            max_abs = max_abs.max(d.abs());
            frob2 += d * d;
        }
        if max_abs > r {
            return Some(false);
        }
        let frob = frob2.sqrt();
        if frob <= r {
            return Some(true);
        }
        if frob / (self.dim() as f64).sqrt() > r {
            return Some(false);
        }
        None
    }

    /// Whether `‖self − other‖_op ≤ r`.
    pub fn within(&self, other: &Orthogonal, r: f64) -> bool {
        self.within_quick(other, r).unwrap_or_else(|| self.distance(other) <= r)
    }
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    match m.nrows() {
        1 => m[(0, 0)].abs(),
        2 => {
            let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
            let f2 = a * a + b * b + c * c + d * d;
            let det = a * d - b * c;
            let disc = (f2 * f2 - 4.0 * det * det).max(0.0);
            ((f2 + disc.sqrt()) / 2.0).max(0.0).sqrt()
        }
        _ => m.singular_values().iter().fold(0.0f64, |acc, v| acc.max(*v)),
    }
}

/// Operator norm `‖a − b‖`.
pub fn operator_distance(a: &Orthogonal, b: &Orthogonal) -> Result<f64> {
    Error::check_dim(a.dim(), b.dim())?;
    Ok(a.distance(b))
}

/// Result of [`rotation_order`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationOrder {
    Finite(u64),
    InfiniteOrDeep,
}

/// Smallest `n ≤ max_order` with `‖tⁿ − I‖ ≤ tol`.
///
/// Planar rotations are classified through the continued fraction of
/// `θ/2π`; only convergent denominators can be minimal orders. Other
/// dimensions multiply powers out.
pub fn rotation_order(t: &Orthogonal, max_order: u64, tol: f64) -> RotationOrder {
    let d = t.dim();
    let id = Orthogonal::identity(d);
    if t.within(&id, tol) {
        return RotationOrder::Finite(1);
    }
    if let Some(theta) = t.angle_2d() {
        let x = theta / std::f64::consts::TAU;
        for (_, q) in rational::convergents(x.rem_euclid(1.0), max_order) {
            if q == 0 {
                continue;
            }
            let dist = 2.0 * ((q as f64) * theta / 2.0).sin().abs();
            if dist <= tol {
                return RotationOrder::Finite(q);
            }
        }
        return RotationOrder::InfiniteOrDeep;
    }
    // Reflections in d ≤ 2 and everything in d ≥ 3.
    let mut acc = t.clone();
    for n in 2..=max_order {
        acc = acc.compose(t);
        if acc.within(&id, tol) {
            return RotationOrder::Finite(n);
        }
    }
    RotationOrder::InfiniteOrDeep
}

/// A contracting similarity `x ↦ ratio·rotation(x) + translation`.
#[derive(Clone, Debug, PartialEq)]
pub struct Similarity {
    ratio: f64,
    rotation: Orthogonal,
    translation: Vector,
}

impl Similarity {
    pub fn new(ratio: f64, rotation: Orthogonal, translation: Vector) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::input(format!("ratio must lie in (0,1), got {ratio}")));
        }
        Error::check_dim(rotation.dim(), translation.len())?;
        if translation.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("translation has non-finite entries"));
        }
        Ok(Similarity { ratio, rotation, translation })
    }

    /// Homothety `x ↦ ratio·x + translation`.
    pub fn scaling(ratio: f64, translation: &[f64]) -> Result<Self> {
        let d = translation.len();
        Self::new(ratio, Orthogonal::identity(d), Vector::from_column_slice(translation))
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn rotation(&self) -> &Orthogonal {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector {
        &self.translation
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        self.rotation.apply(x) * self.ratio + &self.translation
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Similarity) -> Result<Similarity> {
        Error::check_dim(self.dim(), other.dim())?;
        Ok(self.compose_unchecked(other))
    }

    pub(crate) fn compose_unchecked(&self, other: &Similarity) -> Similarity {
        let translation = self.rotation.apply(&other.translation) * self.ratio + &self.translation;
        Similarity {
            ratio: self.ratio * other.ratio,
            rotation: self.rotation.compose(&other.rotation),
            translation,
        }
    }

    /// `selfⁿ` for `n ≥ 1`.
    pub fn power(&self, n: u32) -> Similarity {
        assert!(n >= 1, "power must be at least 1");
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.compose_unchecked(self);
        }
        acc
    }

    /// Replace the ratio by a value equal to it up to rounding. Used to make
    /// products of the same multiset of ratios bit-identical.
    pub(crate) fn with_ratio(mut self, ratio: f64) -> Similarity {
        debug_assert!((ratio - self.ratio).abs() <= 1e-9 * self.ratio);
        self.ratio = ratio;
        self
    }

    pub(crate) fn with_rotation(mut self, rotation: Orthogonal) -> Similarity {
        self.rotation = rotation;
        self
    }

    /// Unique fixed point, from the linear solve `(I − rT)x = v`.
    pub fn fixed_point(&self) -> FixedPoint {
        let d = self.dim();
        let a = DMatrix::identity(d, d) - self.rotation.matrix() * self.ratio;
        let point = a
            .lu()
            .solve(&self.translation)
            .expect("I − rT is invertible for r < 1");
        let residual = (self.apply(&point) - &point).norm();
        FixedPoint { point, residual }
    }

    /// Max-entry difference of all components, for approximate equality.
    pub fn max_deviation(&self, other: &Similarity) -> f64 {
        let mut dev = (self.ratio - other.ratio).abs();
        for (a, b) in self.rotation.m.iter().zip(other.rotation.m.iter()) {
            dev = dev.max((a - b).abs());
        }
        for (a, b) in self.translation.iter().zip(other.translation.iter()) {
            dev = dev.max((a - b).abs());
        }
        dev
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixedPoint {
    pub point: Vector,
    /// `‖S(point) − point‖`.
    pub residual: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn random_orthogonal(d: usize, seed: &[f64]) -> Orthogonal {
        // Gram-Schmidt through the projection of an arbitrary matrix.
        let m = DMatrix::from_fn(d, d, |i, j| seed[(i * d + j) % seed.len()] + if i == j { 2.0 } else { 0.0 });
        Orthogonal::project(m)
    }

    #[test]
    fn compose_homotheties() {
        let a = Similarity::scaling(0.5, &[0.0]).unwrap();
        let c = a.compose(&a).unwrap();
        assert_eq!(c.ratio(), 0.25);
        assert_eq!(c.translation()[0], 0.0);

        let a = Similarity::scaling(1.0 / 3.0, &[2.0 / 3.0]).unwrap();
        let b = Similarity::scaling(1.0 / 3.0, &[0.0]).unwrap();
        let c = a.compose(&b).unwrap();
        assert_abs_diff_eq!(c.ratio(), 1.0 / 9.0, epsilon = 1e-16);
        assert_abs_diff_eq!(c.translation()[0], 2.0 / 3.0, epsilon = 1e-16);
    }

    #[test]
    fn compose_rejects_dimension_mismatch() {
        let a = Similarity::scaling(0.5, &[0.0]).unwrap();
        let b = Similarity::scaling(0.5, &[0.0, 0.0]).unwrap();
        assert!(matches!(a.compose(&b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn ratio_boundaries_rejected() {
        assert!(Similarity::scaling(1.0, &[0.0]).is_err());
        assert!(Similarity::scaling(0.0, &[0.0]).is_err());
        assert!(Similarity::scaling(f64::NAN, &[0.0]).is_err());
    }

    #[test]
    fn fixed_points() {
        let s = Similarity::scaling(0.5, &[1.0]).unwrap();
        assert_abs_diff_eq!(s.fixed_point().point[0], 2.0, epsilon = 1e-14);

        let s = Similarity::new(0.5, Orthogonal::rotation_2d(PI), v(&[1.0, 0.0])).unwrap();
        let fp = s.fixed_point();
        assert_abs_diff_eq!(fp.point[0], 2.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(fp.point[1], 0.0, epsilon = 1e-14);

        let s = Similarity::new(0.3, Orthogonal::rotation_2d(1.0), v(&[0.0, 0.0])).unwrap();
        assert_eq!(s.fixed_point().point.norm(), 0.0);
    }

    #[test]
    fn operator_distance_examples() {
        let id = Orthogonal::identity(2);
        assert_eq!(operator_distance(&id, &id).unwrap(), 0.0);
        for theta in [0.1, 1.0, 2.5, PI, 4.0] {
            let r = Orthogonal::rotation_2d(theta);
            let expected = 2.0 * (theta / 2.0).sin().abs();
            assert_abs_diff_eq!(operator_distance(&id, &r).unwrap(), expected, epsilon = 1e-12);
        }
        let minus = Orthogonal::new(-DMatrix::identity(2, 2)).unwrap();
        assert_abs_diff_eq!(operator_distance(&id, &minus).unwrap(), 2.0, epsilon = 1e-15);
        assert!(operator_distance(&id, &Orthogonal::identity(3)).is_err());
    }

    #[test]
    fn operator_distance_3d_matches_svd() {
        let a = Orthogonal::axis_angle([1.0, 2.0, 0.5], 0.7).unwrap();
        let b = Orthogonal::axis_angle([0.0, 0.0, 1.0], -1.1).unwrap();
        let direct = (a.matrix() - b.matrix()).singular_values().max();
        assert_abs_diff_eq!(a.distance(&b), direct, epsilon = 1e-14);
    }

    #[test]
    fn non_orthogonal_input_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        assert!(Orthogonal::new(m).is_err());
    }

    #[test]
    fn rotation_orders() {
        let r5 = Orthogonal::rotation_2d(TAU / 5.0);
        assert_eq!(rotation_order(&r5, 10, ORDER_TOL), RotationOrder::Finite(5));
        let r1 = Orthogonal::rotation_2d(1.0);
        assert_eq!(rotation_order(&r1, 10_000, ORDER_TOL), RotationOrder::InfiniteOrDeep);
        assert_eq!(rotation_order(&Orthogonal::identity(2), 10, ORDER_TOL), RotationOrder::Finite(1));
        let quarter = Orthogonal::rotation_2d(FRAC_PI_2);
        assert_eq!(rotation_order(&quarter, 10, ORDER_TOL), RotationOrder::Finite(4));
        let refl = Orthogonal::reflection_2d(0.3);
        assert_eq!(rotation_order(&refl, 10, ORDER_TOL), RotationOrder::Finite(2));
        let minus = Orthogonal::from_row_major(1, &[-1.0]).unwrap();
        assert_eq!(rotation_order(&minus, 10, ORDER_TOL), RotationOrder::Finite(2));
        let r3d = Orthogonal::axis_angle([0.0, 1.0, 1.0], TAU / 7.0).unwrap();
        assert_eq!(rotation_order(&r3d, 100, ORDER_TOL), RotationOrder::Finite(7));
    }

    #[test]
    fn rotation_7_of_12_has_order_12() {
        let r = Orthogonal::rotation_2d(7.0 * TAU / 12.0);
        assert_eq!(rotation_order(&r, 100, ORDER_TOL), RotationOrder::Finite(12));
    }

    #[test]
    fn row_major_round_trip() {
        let r = Orthogonal::rotation_2d(0.4);
        let back = Orthogonal::from_row_major(2, &r.row_major()).unwrap();
        assert!(r.distance(&back) < 1e-15);
        assert_abs_diff_eq!(r.row_major()[1], -(0.4f64).sin(), epsilon = 1e-16);
    }

    fn arb_similarity3() -> impl Strategy<Value = Similarity> {
        (0.05f64..0.95, prop::collection::vec(-1.0f64..1.0, 9), prop::collection::vec(-2.0f64..2.0, 3))
            .prop_map(|(r, seed, t)| Similarity::new(r, random_orthogonal(3, &seed), v(&t)).unwrap())
    }

    proptest! {
        #[test]
        fn composition_is_evaluation(a in arb_similarity3(), b in arb_similarity3(),
                                      xs in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 3), 100)) {
            let ab = a.compose(&b).unwrap();
            prop_assert_eq!(ab.ratio(), a.ratio() * b.ratio());
            for x in xs {
                let x = v(&x);
                let lhs = ab.apply(&x);
                let rhs = a.apply(&b.apply(&x));
                prop_assert!((lhs - rhs).norm() <= 1e-12);
            }
        }

        #[test]
        fn composition_is_associative(a in arb_similarity3(), b in arb_similarity3(), c in arb_similarity3(),
                                      x in prop::collection::vec(-3.0f64..3.0, 3)) {
            let x = v(&x);
            let left = a.compose(&b).unwrap().compose(&c).unwrap();
            let right = a.compose(&b.compose(&c).unwrap()).unwrap();
            prop_assert!((left.apply(&x) - right.apply(&x)).norm() <= 1e-10);
        }

        #[test]
        fn fixed_point_is_fixed(s in arb_similarity3()) {
            let fp = s.fixed_point();
            prop_assert!(fp.residual <= 1e-10 * (1.0 + fp.point.norm()));
            prop_assert!((s.apply(&fp.point) - &fp.point).norm() <= 1e-10 * (1.0 + fp.point.norm()));
        }

        #[test]
        fn distance_triangle_inequality(a in prop::collection::vec(-1.0f64..1.0, 9),
                                        b in prop::collection::vec(-1.0f64..1.0, 9),
                                        c in prop::collection::vec(-1.0f64..1.0, 9)) {
            let (a, b, c) = (random_orthogonal(3, &a), random_orthogonal(3, &b), random_orthogonal(3, &c));
            prop_assert!(a.distance(&c) <= a.distance(&b) + b.distance(&c) + 1e-10);
            prop_assert!((a.distance(&b) - b.distance(&a)).abs() <= 1e-12);
        }

        #[test]
        fn projection_is_idempotent(seed in prop::collection::vec(-1.0f64..1.0, 9), theta in -4.0f64..4.0, phi in -4.0f64..4.0) {
            let q = random_orthogonal(3, &seed);
            let again = Orthogonal::new(q.matrix().clone()).unwrap();
            prop_assert!(q.matrix().iter().zip(again.matrix().iter()).all(|(x, y)| (x - y).abs() <= 1e-12));
            for q in [Orthogonal::rotation_2d(theta), Orthogonal::reflection_2d(phi)] {
                let again = Orthogonal::new(q.matrix().clone()).unwrap();
                prop_assert!(q.matrix().iter().zip(again.matrix().iter()).all(|(x, y)| (x - y).abs() <= 1e-12));
            }
        }

        #[test]
        fn projected_products_stay_orthogonal(seed in prop::collection::vec(-1.0f64..1.0, 9)) {
            let q = random_orthogonal(3, &seed);
            let p = q.pow(1000);
            let gram = p.matrix().transpose() * p.matrix() - DMatrix::<f64>::identity(3, 3);
            prop_assert!(gram.norm() <= 1e-9);
            prop_assert!((p.determinant().abs() - 1.0).abs() <= 1e-9);
        }
    }
}
