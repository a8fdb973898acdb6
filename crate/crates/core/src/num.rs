//! Floating point comparison helpers shared by checkers and solvers.

/// Relative tolerance for capacity and objective comparisons.
pub(crate) const REL_TOL: f64 = 1e-9;

fn slack(a: f64, b: f64) -> f64 {
    REL_TOL * a.abs().max(b.abs()).max(1.0)
}

/// `load <= capacity` up to relative tolerance.
pub(crate) fn fits(load: f64, capacity: f64) -> bool {
    load <= capacity + slack(load, capacity)
}

/// `a < b` by more than the tolerance.
pub(crate) fn strictly_less(a: f64, b: f64) -> bool {
    a < b - slack(a, b)
}

/// Smallest integer `>= x` for finite non-negative `x`, with `x` within
/// tolerance of an integer rounded to that integer.
pub(crate) fn ceil_count(x: f64) -> u64 {
    if x.is_nan() || x <= 0.0 {
        return 0;
    }
    let floor = x as u64;
    let frac = x - floor as f64;
    if frac <= slack(x, 0.0) {
        floor
    } else {
        floor + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits_allows_rounding_noise() {
        assert!(fits(0.1 + 0.2, 0.3));
        assert!(!fits(0.31, 0.3));
    }

    #[test]
    fn ceil_count_handles_edges() {
        assert_eq!(ceil_count(0.0), 0);
        assert_eq!(ceil_count(0.05), 1);
        assert_eq!(ceil_count(1.0), 1);
        assert_eq!(ceil_count(1.0000000000001), 1);
        assert_eq!(ceil_count(2.5), 3);
    }

    #[test]
    fn strictly_less_ignores_noise() {
        assert!(!strictly_less(3.0 - 1e-12, 3.0));
        assert!(strictly_less(2.9, 3.0));
    }
}
