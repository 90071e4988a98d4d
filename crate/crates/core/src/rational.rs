//! Continued-fraction helpers for rational-angle and log-ratio classification.

/// Convergents `p/q` of the continued fraction of `x` with `0 < q <= max_den`,
/// in increasing order of denominator.
pub fn convergents(x: f64, max_den: u64) -> Vec<(i64, u64)> {
    let mut out = Vec::new();
    if !x.is_finite() || max_den == 0 {
        return out;
    }
    // h_{n} = a_n h_{n-1} + h_{n-2}, k likewise.
    let (mut h_prev, mut h) = (1i128, x.floor() as i128);
    let (mut k_prev, mut k) = (0i128, 1i128);
    out.push((h as i64, k as u64));
    let mut frac = x - x.floor();
    for _ in 0..64 {
        if frac.abs() < 1e-300 {
            break;
        }
        let inv = 1.0 / frac;
        let a = inv.floor();
        if !a.is_finite() || a > 1e15 {
            break;
        }
        frac = inv - a;
        let a = a as i128;
        let h_next = a * h + h_prev;
        let k_next = a * k + k_prev;
        if k_next > max_den as i128 {
            break;
        }
        h_prev = h;
        k_prev = k;
        h = h_next;
        k = k_next;
        out.push((h as i64, k as u64));
    }
    out
}

/// Best convergent approximation of `x` with denominator at most `max_den`,
/// together with its absolute error.
pub fn best_rational(x: f64, max_den: u64) -> Option<((i64, u64), f64)> {
    convergents(x, max_den)
        .into_iter()
        .map(|(p, q)| ((p, q), (x - p as f64 / q as f64).abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

/// Whether `x` is within `tol` of a rational with denominator `<= max_den`.
pub fn is_rational_like(x: f64, max_den: u64, tol: f64) -> bool {
    best_rational(x, max_den).is_some_and(|(_, err)| err <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn convergents_of_pi() {
        let c = convergents(std::f64::consts::PI, 1000);
        assert_eq!(c, vec![(3, 1), (22, 7), (333, 106), (355, 113)]);
    }

    #[test]
    fn exact_rational_terminates() {
        let c = convergents(0.4, 100);
        assert_eq!(c.last().copied(), Some((2, 5)));
    }

    #[test]
    fn log_ratio_examples() {
        let q = 2f64.ln() / 3f64.ln();
        assert!(!is_rational_like(q, 10_000, 1e-12));
        let q = 4f64.ln() / 2f64.ln();
        assert!(is_rational_like(q, 10_000, 1e-12));
        assert!(is_rational_like(1.0, 10_000, 1e-12));
    }
}
