//! Scalar search routines shared by the map and analysis modules.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Result of a bracketing search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Extremum {
    pub x: f64,
    pub value: f64,
    /// Width of the final bracket.
    pub width: f64,
}

/// Golden-section maximisation of `f` on `[lo, hi]`.
///
/// Assumes `f` is unimodal on the bracket. The returned point is the best of
/// the final interior probe and both original endpoints, so a maximum sitting on
/// the boundary is still reported exactly.
pub(crate) fn golden_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Extremum {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iterations = 0;
    while (b - a) > tol && iterations < 400 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        iterations += 1;
    }
    let width = b - a;
    let mut best = if fc >= fd {
        Extremum { x: c, value: fc, width }
    } else {
        Extremum { x: d, value: fd, width }
    };
    for end in [lo, hi] {
        let v = f(end);
        if v > best.value {
            best = Extremum { x: end, value: v, width };
        }
    }
    best
}

/// Golden-section minimisation; see [`golden_max`].
pub(crate) fn golden_min<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Extremum {
    let e = golden_max(|x| -f(x), lo, hi, tol);
    Extremum {
        value: -e.value,
        ..e
    }
}

/// Bisection for a sign change of `g` on `[lo, hi]`.
///
/// Runs until the midpoint no longer moves or the bracket is narrower than
/// `tol`. Returns `None` when `g(lo)` and `g(hi)` share a sign.
pub(crate) fn bisect<G: Fn(f64) -> f64>(g: G, lo: f64, hi: f64, tol: f64) -> Option<f64> {
    let (mut a, mut b) = (lo, hi);
    let ga = g(a);
    let gb = g(b);
    if ga == 0.0 {
        return Some(a);
    }
    if gb == 0.0 {
        return Some(b);
    }
    if ga.signum() == gb.signum() {
        return None;
    }
    let low_negative = ga < 0.0;
    for _ in 0..300 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b || (b - a) <= tol {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return Some(mid);
        }
        if (gm < 0.0) == low_negative {
            a = mid;
        } else {
            b = mid;
        }
    }
    Some(0.5 * (a + b))
}

/// Index of the largest value on a uniform grid `lo + (hi - lo) * i / n`,
/// `i = 0..=n`. Ties resolve to the smallest index.
pub(crate) fn grid_argmax<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for i in 0..=n {
        let x = lo + (hi - lo) * (i as f64) / (n as f64);
        let v = f(x);
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

/// Integer part of a nonnegative quantity plus an offset, saturating at
/// `u64::MAX` for non-finite or oversized arguments.
pub(crate) fn floor_plus(t: f64, offset: u64) -> u64 {
    if t.is_nan() || t >= u64::MAX as f64 {
        return u64::MAX;
    }
    let base = if t <= 0.0 { 0 } else { t.floor() as u64 };
    base.saturating_add(offset)
}
